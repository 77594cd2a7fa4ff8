//! Maximum-likelihood calibration of the flocking model.
//!
//! The log-likelihood is evaluated in one pass with the Markov recursion and
//! closed-form compensators; the same pass carries exact first derivatives,
//! which drive the quasi-Newton stage and the observed-information matrix.

use crate::model::{jump_kind, EventStream, FlockParams, ParamError, StreamError};
use crate::optim;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which parameters are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// All twelve parameters.
    Flocking,
    /// Flocking terms frozen at zero; eight free parameters.
    #[serde(rename = "symmetric")]
    SymmetricHawkes,
}

impl Model {
    /// Indices (canonical order) of the free parameters.
    pub fn free_indices(self) -> &'static [usize] {
        match self {
            Model::Flocking => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
            Model::SymmetricHawkes => &[0, 1, 2, 3, 6, 7, 8, 9],
        }
    }

    pub fn restrict(self, p: &FlockParams) -> FlockParams {
        let mut q = *p;
        if self == Model::SymmetricHawkes {
            q.alpha1n = 0.0;
            q.alpha1w = 0.0;
            q.alpha2n = 0.0;
            q.alpha2w = 0.0;
        }
        q
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flocking" => Ok(Model::Flocking),
            "symmetric" => Ok(Model::SymmetricHawkes),
            other => Err(format!("unknown model {other:?} (expected flocking|symmetric)")),
        }
    }
}

fn is_positive_index(i: usize) -> bool {
    matches!(i, 0 | 1 | 6 | 7)
}

/// Log-likelihood of `stream` under `params`; `−∞` if an event lands where
/// its intensity is non-positive.
pub fn loglik(stream: &EventStream, params: &FlockParams) -> f64 {
    pass(stream, params, None)
}

/// Log-likelihood together with its gradient in canonical parameter order.
pub fn loglik_grad(stream: &EventStream, params: &FlockParams) -> (f64, [f64; 12]) {
    let mut g = [0.0; 12];
    let v = pass(stream, params, Some(&mut g));
    (v, g)
}

fn pass(stream: &EventStream, params: &FlockParams, mut grad: Option<&mut [f64; 12]>) -> f64 {
    let mu = [params.mu1, params.mu2];
    let beta = [params.beta1, params.beta2];
    let alpha = [
        [params.alpha1s, params.alpha1c, params.alpha1n, params.alpha1w],
        [params.alpha2s, params.alpha2c, params.alpha2n, params.alpha2w],
    ];
    // d[k][x]: decayed count of term-x jumps into component k
    // g[k]: Σ_x α_x Σ_j (t − t_j) e^{−β(t − t_j)}, so that ∂λ_k/∂β = −g[k]
    let mut d = [[0.0f64; 4]; 4];
    let mut gb = [0.0f64; 4];
    let mut prices = stream.price_tracker();
    let mut ll = 0.0;
    let mut last = 0.0;

    let advance = |d: &mut [[f64; 4]; 4],
                       gb: &mut [f64; 4],
                       dt: f64,
                       ll: &mut f64,
                       grad: &mut Option<&mut [f64; 12]>| {
        let mut decay = [0.0; 2];
        let mut one_minus = [0.0; 2];
        for i in 0..2 {
            decay[i] = (-beta[i] * dt).exp();
            one_minus[i] = -(-beta[i] * dt).exp_m1();
        }
        for k in 0..4 {
            let i = k / 2;
            let (b, e, om) = (beta[i], decay[i], one_minus[i]);
            let excess: f64 = (0..4).map(|x| alpha[i][x] * d[k][x]).sum();
            *ll -= mu[i] * dt + excess * om / b;
            if let Some(g) = grad.as_deref_mut() {
                let base = 6 * i;
                g[base] -= dt;
                for x in 0..4 {
                    g[base + 2 + x] -= d[k][x] * om / b;
                }
                let d_ratio = -(om - b * dt * e) / (b * b);
                g[base + 1] -= -gb[k] * om / b + excess * d_ratio;
                gb[k] = e * (gb[k] + dt * excess);
            }
            for v in d[k].iter_mut() {
                *v *= e;
            }
        }
    };

    for ev in &stream.events {
        advance(&mut d, &mut gb, ev.time - last, &mut ll, &mut grad);
        last = ev.time;
        prices.advance_to(ev.time);
        let m = ev.mark.index();
        let i = m / 2;
        let lam = mu[i] + (0..4).map(|x| alpha[i][x] * d[m][x]).sum::<f64>();
        if !(lam > 0.0) {
            return f64::NEG_INFINITY;
        }
        ll += lam.ln();
        if let Some(g) = grad.as_deref_mut() {
            let base = 6 * i;
            g[base] += 1.0 / lam;
            g[base + 1] -= gb[m] / lam;
            for x in 0..4 {
                g[base + 2 + x] += d[m][x] / lam;
            }
        }
        let gap = prices.gap();
        for (k, row) in d.iter_mut().enumerate() {
            if let Some(kind) = jump_kind(k, ev.mark, gap) {
                row[kind.term.index()] += 1.0;
            }
        }
        prices.apply(ev.mark);
    }
    advance(&mut d, &mut gb, stream.horizon - last, &mut ll, &mut grad);
    ll
}

/// Compensator increments `Λ_k(t_j) − Λ_k(t_{j−1})` between successive
/// events of each component; i.i.d. Exponential(1) under the true model.
pub fn time_rescaled(stream: &EventStream, params: &FlockParams) -> [Vec<f64>; 4] {
    let path = crate::model::intensity_path(stream, params);
    let mu = params.mu_vec();
    let beta = params.beta_vec();
    let mut acc = [0.0f64; 4];
    let mut out: [Vec<f64>; 4] = Default::default();
    let mut prev_t = 0.0;
    let mut prev = mu;
    for (j, ev) in stream.events.iter().enumerate() {
        let dt = ev.time - prev_t;
        for k in 0..4 {
            let om = -(-beta[k] * dt).exp_m1();
            acc[k] += mu[k] * dt + (prev[k] - mu[k]) * om / beta[k];
        }
        let m = ev.mark.index();
        out[m].push(acc[m]);
        acc[m] = 0.0;
        prev_t = ev.time;
        prev = path.right[j];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Iteration cap for the quasi-Newton stage of each start.
    pub max_iter: usize,
    /// Simplex warm-up iterations per start.
    pub warmup_iter: usize,
    /// Relative log-likelihood improvement that ends the search.
    pub rel_tol: f64,
    /// Minimum number of events for a fit to be attempted.
    pub floor_events: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            warmup_iter: 150,
            rel_tol: 1e-9,
            floor_events: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    NonConvergence,
    SingularHessian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub params: FlockParams,
    pub loglik: f64,
    /// Standard errors from the observed information; frozen parameters
    /// carry 0. Absent when the information matrix is singular.
    pub stderr: Option<FlockParams>,
    pub converged: bool,
    pub iterations: usize,
    pub n_events: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<FitWarning>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("degenerate data: {events} events, at least {floor} required")]
    DegenerateData { events: usize, floor: usize },
    #[error("invalid stream: {0}")]
    InvalidStream(#[from] StreamError),
    #[error("invalid initial parameters: {0}")]
    InvalidInit(#[from] ParamError),
    #[error("no starting point has a finite likelihood")]
    NoFeasibleStart,
}

/// Default multi-start grid for a stream.
pub fn default_starts(stream: &EventStream, model: Model) -> Vec<FlockParams> {
    let c = stream.counts();
    let t = stream.horizon;
    let rate1 = ((c[0] + c[1]) as f64 / (2.0 * t)).max(1e-6);
    let rate2 = ((c[2] + c[3]) as f64 / (2.0 * t)).max(1e-6);
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&b| {
            let p = FlockParams {
                mu1: rate1 / 2.0,
                beta1: b,
                alpha1s: 0.3 * b,
                alpha1c: 0.3 * b,
                alpha1n: 0.1 * b,
                alpha1w: 0.1 * b,
                mu2: rate2 / 2.0,
                beta2: b,
                alpha2s: 0.3 * b,
                alpha2c: 0.3 * b,
                alpha2n: 0.1 * b,
                alpha2w: 0.1 * b,
            };
            model.restrict(&p)
        })
        .collect()
}

fn to_free(p: &FlockParams, idx: &[usize]) -> Vec<f64> {
    let v = p.to_array();
    idx.iter()
        .map(|&i| if is_positive_index(i) { v[i].ln() } else { v[i] })
        .collect()
}

fn from_free(z: &[f64], idx: &[usize], template: &FlockParams) -> FlockParams {
    let mut v = template.to_array();
    for (&i, &zi) in idx.iter().zip(z) {
        v[i] = if is_positive_index(i) { zi.exp() } else { zi };
    }
    FlockParams::from_slice(&v).expect("12 entries")
}

/// Maximum-likelihood fit. Without `init`, the best of [`default_starts`].
pub fn fit(
    stream: &EventStream,
    model: Model,
    init: Option<&FlockParams>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    stream.validate()?;
    if stream.len() < opts.floor_events {
        return Err(FitError::DegenerateData {
            events: stream.len(),
            floor: opts.floor_events,
        });
    }
    let starts = match init {
        Some(p) => {
            p.validated()?;
            vec![model.restrict(p)]
        }
        None => default_starts(stream, model),
    };
    let idx = model.free_indices();
    let mut best: Option<(FlockParams, f64, usize, bool)> = None;
    for start in &starts {
        if !loglik(stream, start).is_finite() {
            continue;
        }
        let template = *start;
        let cost = |z: &[f64]| -loglik(stream, &from_free(z, idx, &template));
        let cost_grad = |z: &[f64], g: &mut [f64]| {
            let p = from_free(z, idx, &template);
            let (v, full) = loglik_grad(stream, &p);
            let pv = p.to_array();
            for (gj, &i) in g.iter_mut().zip(idx) {
                let scale = if is_positive_index(i) { pv[i] } else { 1.0 };
                *gj = -full[i] * scale;
            }
            -v
        };
        let z0 = to_free(start, idx);
        let step: Vec<f64> = idx
            .iter()
            .zip(&z0)
            .map(|(&i, z)| if is_positive_index(i) { 0.2 } else { 0.1 * z.abs().max(0.1) })
            .collect();
        let warm = optim::nelder_mead(cost, &z0, &step, opts.warmup_iter, opts.rel_tol);
        let refined = optim::bfgs(cost_grad, &warm.x, opts.max_iter, opts.rel_tol, 1.0);
        let (z, f, converged) = if refined.f <= warm.f {
            (refined.x, refined.f, refined.converged)
        } else {
            (warm.x, warm.f, false)
        };
        let ll = -f;
        let iters = warm.iterations + refined.iterations;
        let better = best.as_ref().map_or(true, |b| ll > b.1);
        if ll.is_finite() && better {
            best = Some((from_free(&z, idx, &template), ll, iters, converged));
        }
    }
    let (params, ll, iterations, converged) = best.ok_or(FitError::NoFeasibleStart)?;
    let stderr = standard_errors(stream, &params, model);
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(FitWarning::NonConvergence);
    }
    if stderr.is_none() {
        warnings.push(FitWarning::SingularHessian);
    }
    Ok(FitResult {
        model,
        params,
        loglik: ll,
        stderr,
        converged,
        iterations,
        n_events: stream.len(),
        warnings,
    })
}

/// Observed information `−∂²L/∂θ²` over the free parameters, by central
/// differences of the exact gradient with relative step 1e-4.
pub fn observed_information(stream: &EventStream, params: &FlockParams, model: Model) -> DMatrix<f64> {
    let idx = model.free_indices();
    let n = idx.len();
    let base = params.to_array();
    let mut h = DMatrix::zeros(n, n);
    for (c, &j) in idx.iter().enumerate() {
        let step = 1e-4 * base[j].abs().max(1e-2);
        let mut plus = base;
        let mut minus = base;
        plus[j] += step;
        minus[j] -= step;
        let gp = loglik_grad(stream, &FlockParams::from_slice(&plus).expect("12")).1;
        let gm = loglik_grad(stream, &FlockParams::from_slice(&minus).expect("12")).1;
        for (r, &i) in idx.iter().enumerate() {
            h[(r, c)] = -(gp[i] - gm[i]) / (2.0 * step);
        }
    }
    0.5 * (&h + h.transpose())
}

/// Inverse observed information over the free parameters, or `None` when
/// it is singular (smallest eigenvalue below 1e-10 of the largest).
pub fn covariance(stream: &EventStream, params: &FlockParams, model: Model) -> Option<DMatrix<f64>> {
    let info = observed_information(stream, params, model);
    if info.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(info.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min < 1e-10 * max {
        return None;
    }
    let cov = info.try_inverse()?;
    if (0..cov.nrows()).any(|i| !(cov[(i, i)] > 0.0)) {
        return None;
    }
    Some(cov)
}

/// Standard errors from [`covariance`]; frozen parameters carry 0.
pub fn standard_errors(stream: &EventStream, params: &FlockParams, model: Model) -> Option<FlockParams> {
    let cov = covariance(stream, params, model)?;
    let mut se = [0.0; 12];
    for (r, &i) in model.free_indices().iter().enumerate() {
        se[i] = cov[(r, r)].sqrt();
    }
    Some(FlockParams::from_slice(&se).expect("12"))
}

/// Element-wise mean and sample standard deviation.
pub fn mean_std(items: &[FlockParams]) -> (FlockParams, FlockParams) {
    let n = items.len() as f64;
    let mut mean = [0.0; 12];
    for p in items {
        for (m, v) in mean.iter_mut().zip(p.to_array()) {
            *m += v / n;
        }
    }
    let mut var = [0.0; 12];
    if items.len() > 1 {
        for p in items {
            for ((s, v), m) in var.iter_mut().zip(p.to_array()).zip(mean) {
                *s += (v - m) * (v - m) / (n - 1.0);
            }
        }
    }
    let sd = var.map(f64::sqrt);
    (
        FlockParams::from_slice(&mean).expect("12"),
        FlockParams::from_slice(&sd).expect("12"),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    pub label: String,
    pub result: Result<FitResult, FitError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodAverage {
    pub period: String,
    pub n: usize,
    pub mean: FlockParams,
    pub std: FlockParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub windows: Vec<WindowFit>,
    pub monthly: Vec<PeriodAverage>,
}

/// Month key of a window label: `YYYY-MM` for ISO-like dates, else the label.
pub fn period_key(label: &str) -> String {
    let b = label.as_bytes();
    if b.len() >= 7 && b[4] == b'-' && b[..4].iter().all(u8::is_ascii_digit) {
        label[..7].to_string()
    } else {
        label.to_string()
    }
}

/// Fits every window in parallel and averages converged fits per month.
/// Output order follows the input order.
pub fn daily_calibrate(windows: &[(String, EventStream)], model: Model, opts: &FitOptions) -> Calibration {
    let fits: Vec<WindowFit> = windows
        .par_iter()
        .map(|(label, s)| WindowFit {
            label: label.clone(),
            result: fit(s, model, None, opts),
        })
        .collect();
    let monthly = monthly_averages(&fits);
    Calibration { windows: fits, monthly }
}

pub fn monthly_averages(fits: &[WindowFit]) -> Vec<PeriodAverage> {
    let mut groups: std::collections::BTreeMap<String, Vec<FlockParams>> = Default::default();
    for w in fits {
        if let Ok(r) = &w.result {
            if r.converged {
                groups.entry(period_key(&w.label)).or_default().push(r.params);
            }
        }
    }
    groups
        .into_iter()
        .map(|(period, ps)| {
            let (mean, std) = mean_std(&ps);
            PeriodAverage {
                period,
                n: ps.len(),
                mean,
                std,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, Gap, Mark, PARAM_NAMES};
    use crate::sim::{simulate, SimConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col1() -> FlockParams {
        FlockParams {
            mu1: 0.08,
            beta1: 0.6,
            alpha1s: 0.4,
            alpha1c: 0.0,
            alpha1n: 0.0,
            alpha1w: 0.2,
            mu2: 0.05,
            beta2: 1.2,
            alpha2s: 0.5,
            alpha2c: 0.3,
            alpha2n: 0.0,
            alpha2w: 0.1,
        }
    }

    fn random_stream(rng: &mut ChaCha8Rng, n: usize) -> EventStream {
        let mut t = 0.0;
        let mut events = Vec::new();
        for _ in 0..n {
            t += rng.random_range(0.01..2.0);
            events.push(Event {
                time: t,
                mark: Mark::from_index(rng.random_range(0..4)).unwrap(),
            });
        }
        let init1 = rng.random_range(-2..=2) as f64;
        let init2 = rng.random_range(-2..=2) as f64;
        EventStream::new(events, t + 1.0, init1, init2).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng) -> FlockParams {
        let mut v = [0.0; 12];
        for (i, x) in v.iter_mut().enumerate() {
            *x = if is_positive_index(i) {
                rng.random_range(0.05..2.0)
            } else {
                rng.random_range(0.0..1.0)
            };
        }
        FlockParams::from_slice(&v).unwrap()
    }

    // Direct double sum over past events.
    fn brute_loglik(s: &EventStream, p: &FlockParams) -> f64 {
        let mu = p.mu_vec();
        let beta = p.beta_vec();
        let mut c = [s.init1, s.init2];
        let mut cols = Vec::new();
        for e in &s.events {
            cols.push(p.jump_column(e.mark, Gap::of(c[0], c[1])));
            c[e.mark.asset()] += e.mark.direction();
        }
        let mut ll = 0.0;
        for (j, e) in s.events.iter().enumerate() {
            let k = e.mark.index();
            let mut lam = mu[k];
            for i in 0..j {
                lam += cols[i][k] * (-beta[k] * (e.time - s.events[i].time)).exp();
            }
            ll += lam.ln();
        }
        for k in 0..4 {
            ll -= mu[k] * s.horizon;
            for (i, e) in s.events.iter().enumerate() {
                ll -= cols[i][k] / beta[k] * (1.0 - (-beta[k] * (s.horizon - e.time)).exp());
            }
        }
        ll
    }

    #[test]
    fn empty_stream_value() {
        let s = EventStream::empty(100.0);
        assert!((loglik(&s, &col1()) + 26.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_stream(&mut rng, 50);
            let p = random_params(&mut rng);
            let a = loglik(&s, &p);
            let b = brute_loglik(&s, &p);
            assert!(((a - b) / b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = random_stream(&mut rng, 200);
            let p = random_params(&mut rng);
            let (_, g) = loglik_grad(&s, &p);
            let v = p.to_array();
            for j in 0..12 {
                let h = 1e-5 * v[j].abs().max(1e-2);
                let mut a = v;
                let mut b = v;
                a[j] += h;
                b[j] -= h;
                let fd = (loglik(&s, &FlockParams::from_slice(&a).unwrap())
                    - loglik(&s, &FlockParams::from_slice(&b).unwrap()))
                    / (2.0 * h);
                let scale = g[j].abs().max(1.0);
                assert!((g[j] - fd).abs() < 1e-4 * scale, "{} {} vs {}", PARAM_NAMES[j], g[j], fd);
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_stream(&mut rng, 80);
        let p = random_params(&mut rng);
        // prepend an empty stretch and move the origin back by the same
        // amount: the likelihood gains only the base-rate term
        let a = loglik(&s, &p);
        let shifted = s.shifted(7.5);
        let b = loglik(&shifted, &p) + (p.mu1 + p.mu2) * 2.0 * 7.5;
        assert!((a - b).abs() < 1e-10 * a.abs(), "{a} {b}");
    }

    #[test]
    fn negative_intensity_gives_neg_infinity() {
        let mut p = col1();
        p.alpha1s = -5.0;
        let s = EventStream::new(
            vec![
                Event { time: 1.0, mark: Mark::Up1 },
                Event { time: 1.1, mark: Mark::Up1 },
            ],
            2.0,
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(loglik(&s, &p), f64::NEG_INFINITY);
    }

    #[test]
    fn fit_recovers_col1_on_long_path() {
        let mut cfg = SimConfig::new(col1(), 40_000.0, 21);
        cfg.init1 = 0.0;
        let s = simulate(&cfg).unwrap();
        let r = fit(&s, Model::Flocking, None, &FitOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        let se = r.stderr.expect("stderr");
        let (est, sev, truth) = (r.params.to_array(), se.to_array(), col1().to_array());
        for j in 0..12 {
            assert!(
                (est[j] - truth[j]).abs() < 4.0 * sev[j] + 1e-3,
                "{}: {} ± {} vs {}",
                PARAM_NAMES[j],
                est[j],
                sev[j],
                truth[j]
            );
        }
        // at the optimum the gradient vanishes
        let (_, g) = loglik_grad(&s, &r.params);
        assert!(g.iter().all(|v| v.abs() < 1.0), "{g:?}");
    }

    #[test]
    fn symmetric_fit_freezes_flocking_terms() {
        let s = simulate(&SimConfig::new(col1(), 20_000.0, 4)).unwrap();
        let r = fit(&s, Model::SymmetricHawkes, None, &FitOptions::default()).unwrap();
        assert_eq!(r.params.alpha1n, 0.0);
        assert_eq!(r.params.alpha2w, 0.0);
        let se = r.stderr.unwrap();
        assert_eq!(se.alpha1w, 0.0);
        assert!(se.alpha1s > 0.0);
        let full = fit(&s, Model::Flocking, None, &FitOptions::default()).unwrap();
        assert!(full.loglik >= r.loglik - 1e-6);
    }

    #[test]
    fn too_few_events() {
        let s = EventStream::new(vec![Event { time: 1.0, mark: Mark::Up1 }], 5.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            fit(&s, Model::Flocking, None, &FitOptions::default()),
            Err(FitError::DegenerateData { events: 1, floor: 100 })
        ));
    }

    #[test]
    fn period_keys() {
        assert_eq!(period_key("2016-03-16"), "2016-03");
        assert_eq!(period_key("day7"), "day7");
    }

    #[test]
    fn single_window_average_is_the_estimate() {
        let s = simulate(&SimConfig::new(col1(), 5_000.0, 9)).unwrap();
        let cal = daily_calibrate(&[("2020-01-02".into(), s)], Model::SymmetricHawkes, &FitOptions::default());
        let fit = cal.windows[0].result.as_ref().unwrap();
        assert_eq!(cal.monthly.len(), 1);
        assert_eq!(cal.monthly[0].mean, fit.params);
    }
}
