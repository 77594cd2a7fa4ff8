//! Marginal return models: the empirical distribution and an
//! ARMA(1,1)-TGARCH(1,1) filter with standardized skewed-t innovations.

use crate::dist::{t_cdf, t_ln_pdf, t_quantile};
use crate::optim::nelder_mead;
use rand::Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarginalError {
    #[error("need at least {min} observations, got {got}")]
    TooShort { got: usize, min: usize },
    #[error("series is constant")]
    DegenerateInput,
    #[error("non-finite observation at index {0}")]
    NonFinite(usize),
    #[error("marginal optimizer did not reach a finite likelihood")]
    NonConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalKind {
    Empirical,
    #[serde(rename = "tgarch")]
    ArmaTgarchSkewT,
}

impl std::str::FromStr for MarginalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empirical" => Ok(MarginalKind::Empirical),
            "tgarch" => Ok(MarginalKind::ArmaTgarchSkewT),
            other => Err(format!("unknown marginal kind {other:?} (expected empirical|tgarch)")),
        }
    }
}

/// Upper bound on the skew-t degrees of freedom; beyond it the tail
/// parameter is not identified.
pub const NU_CAP: f64 = 200.0;

/// Smallest sample for the parametric filter.
pub const MIN_TGARCH: usize = 250;

// ---------------------------------------------------------------- skewed t

/// Standardized (zero mean, unit variance) Fernández–Steel skewed t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewT {
    pub gamma: f64,
    pub nu: f64,
    mean: f64,
    sd: f64,
    /// scale turning a unit-variance argument into a standard-t argument
    k: f64,
}

impl SkewT {
    pub fn new(gamma: f64, nu: f64) -> Self {
        let k = (nu / (nu - 2.0)).sqrt();
        let m1 = 2.0 * (nu - 2.0).sqrt() * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp()
            / (PI.sqrt() * (nu - 1.0));
        let mean = m1 * (gamma - 1.0 / gamma);
        let var = (gamma * gamma + 1.0 / (gamma * gamma) - 1.0) - mean * mean;
        Self {
            gamma,
            nu,
            mean,
            sd: var.sqrt(),
            k,
        }
    }

    /// CDF of the unit-variance symmetric t.
    fn base_cdf(&self, x: f64) -> f64 {
        t_cdf(x * self.k, self.nu)
    }

    fn base_quantile(&self, p: f64) -> f64 {
        t_quantile(p, self.nu) / self.k
    }

    fn base_ln_pdf(&self, x: f64) -> f64 {
        t_ln_pdf(x * self.k, self.nu) + self.k.ln()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        let g = self.gamma;
        let x = self.sd * z + self.mean;
        let core = if x < 0.0 {
            self.base_ln_pdf(g * x)
        } else {
            self.base_ln_pdf(x / g)
        };
        (2.0 / (g + 1.0 / g)).ln() + core + self.sd.ln()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let g = self.gamma;
        let x = self.sd * z + self.mean;
        let g2 = g * g;
        if x < 0.0 {
            2.0 / (g2 + 1.0) * self.base_cdf(g * x)
        } else {
            1.0 / (1.0 + g2) + 2.0 * g2 / (1.0 + g2) * (self.base_cdf(x / g) - 0.5)
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let g = self.gamma;
        let g2 = g * g;
        let split = 1.0 / (1.0 + g2);
        let x = if p < split {
            self.base_quantile(p * (g2 + 1.0) / 2.0) / g
        } else {
            g * self.base_quantile(0.5 + (p - split) * (1.0 + g2) / (2.0 * g2))
        };
        (x - self.mean) / self.sd
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t = StudentT::new(self.nu).expect("ν > 0").sample(rng).abs() / self.k;
        let g = self.gamma;
        let x = if rng.random::<f64>() < g * g / (1.0 + g * g) {
            t * g
        } else {
            -t / g
        };
        (x - self.mean) / self.sd
    }
}

// ---------------------------------------------------------------- TGARCH

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TgarchParams {
    pub phi0: f64,
    pub phi1: f64,
    pub theta1: f64,
    pub omega: f64,
    pub beta: f64,
    pub alpha1: f64,
    /// Extra ARCH response to negative shocks.
    pub lambda1: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl TgarchParams {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.phi0,
            self.phi1,
            self.theta1,
            self.omega,
            self.beta,
            self.alpha1,
            self.lambda1,
            self.gamma,
            self.nu,
        ]
    }

    pub fn from_array(v: &[f64; 9]) -> Self {
        Self {
            phi0: v[0],
            phi1: v[1],
            theta1: v[2],
            omega: v[3],
            beta: v[4],
            alpha1: v[5],
            lambda1: v[6],
            gamma: v[7],
            nu: v[8],
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.beta + self.alpha1 + 0.5 * self.lambda1 < 1.0
    }

    fn admissible(&self) -> bool {
        self.omega > 0.0
            && self.beta >= 0.0
            && self.alpha1 >= 0.0
            && self.alpha1 + self.lambda1 >= 0.0
            && self.gamma > 0.0
            && self.nu > 2.0
            && self.nu <= NU_CAP
            && self.phi1.abs() < 1.0
            && self.theta1.abs() < 1.0
    }
}

/// Filtered quantities of the recursion.
struct Filtered {
    loglik: f64,
    z: Vec<f64>,
    next_mean: f64,
    next_sigma: f64,
}

fn filter(r: &[f64], p: &TgarchParams, var0: f64) -> Filtered {
    let dist = SkewT::new(p.gamma, p.nu);
    let mut z = Vec::with_capacity(r.len());
    let mut ll = 0.0;
    let mut eps_prev = 0.0;
    let mut r_prev = p.phi0 / (1.0 - p.phi1);
    let mut var_prev = var0;
    let mut var = var0;
    for (t, &rt) in r.iter().enumerate() {
        if t > 0 {
            let neg = if eps_prev < 0.0 { p.lambda1 } else { 0.0 };
            var = p.omega + p.beta * var_prev + (p.alpha1 + neg) * eps_prev * eps_prev;
        }
        let mean = p.phi0 + p.phi1 * r_prev + p.theta1 * eps_prev;
        let eps = rt - mean;
        let sigma = var.sqrt();
        let zt = eps / sigma;
        ll += dist.ln_pdf(zt) - sigma.ln();
        z.push(zt);
        eps_prev = eps;
        r_prev = rt;
        var_prev = var;
    }
    let neg = if eps_prev < 0.0 { p.lambda1 } else { 0.0 };
    let next_var = p.omega + p.beta * var_prev + (p.alpha1 + neg) * eps_prev * eps_prev;
    Filtered {
        loglik: if ll.is_finite() { ll } else { f64::NEG_INFINITY },
        z,
        next_mean: p.phi0 + p.phi1 * r_prev + p.theta1 * eps_prev,
        next_sigma: next_var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgarchFit {
    pub params: TgarchParams,
    pub stderr: Option<[f64; 9]>,
    pub loglik: f64,
    pub converged: bool,
    /// `β + α₁ + λ₁/2 ≥ 1`.
    pub nonstationary: bool,
    /// Standardized residuals.
    pub residuals: Vec<f64>,
    /// One-step-ahead conditional mean and volatility.
    pub next_mean: f64,
    pub next_sigma: f64,
}

fn sample_var(r: &[f64]) -> f64 {
    let n = r.len() as f64;
    let m = r.iter().sum::<f64>() / n;
    r.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

// optimizer coordinates: (φ0/sd, atanh φ1, atanh θ1, ln(ω/var), ln β, ln α1, λ1, ln γ, ln(ν−2))
fn to_z(p: &TgarchParams, var: f64) -> Vec<f64> {
    let sd = var.sqrt();
    vec![
        p.phi0 / sd,
        p.phi1.atanh(),
        p.theta1.atanh(),
        (p.omega / var).ln(),
        p.beta.max(1e-8).ln(),
        p.alpha1.max(1e-8).ln(),
        p.lambda1,
        p.gamma.ln(),
        (p.nu - 2.0).ln(),
    ]
}

fn from_z(z: &[f64], var: f64) -> TgarchParams {
    TgarchParams {
        phi0: z[0] * var.sqrt(),
        phi1: z[1].tanh(),
        theta1: z[2].tanh(),
        omega: z[3].exp() * var,
        beta: z[4].exp(),
        alpha1: z[5].exp(),
        lambda1: z[6],
        gamma: z[7].exp(),
        nu: 2.0 + z[8].exp(),
    }
}

/// Maximum-likelihood fit of the ARMA(1,1)-TGARCH(1,1) skewed-t filter.
pub fn fit_tgarch(r: &[f64]) -> Result<TgarchFit, MarginalError> {
    if r.len() < MIN_TGARCH {
        return Err(MarginalError::TooShort {
            got: r.len(),
            min: MIN_TGARCH,
        });
    }
    if let Some(i) = r.iter().position(|x| !x.is_finite()) {
        return Err(MarginalError::NonFinite(i));
    }
    let var = sample_var(r);
    if !(var > 0.0) {
        return Err(MarginalError::DegenerateInput);
    }
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let start = TgarchParams {
        phi0: mean,
        phi1: 0.0,
        theta1: 0.0,
        omega: 0.05 * var,
        beta: 0.85,
        alpha1: 0.05,
        lambda1: 0.05,
        gamma: 1.0,
        nu: 8.0,
    };
    let cost = |z: &[f64]| {
        let p = from_z(z, var);
        if !p.admissible() {
            return f64::INFINITY;
        }
        -filter(r, &p, var).loglik
    };
    let step = [0.1, 0.2, 0.2, 0.5, 0.1, 0.5, 0.05, 0.1, 0.5];
    let mut z = to_z(&start, var);
    let mut best = f64::INFINITY;
    let mut converged = false;
    // restarted simplex; stops once a restart no longer improves
    for _ in 0..6 {
        let m = nelder_mead(cost, &z, &step, 4000, 1e-10);
        let improved = m.f < best - 1e-8 * best.abs().max(1.0);
        z = m.x;
        best = best.min(m.f);
        if !improved && m.converged {
            converged = true;
            break;
        }
    }
    if !best.is_finite() {
        return Err(MarginalError::NonConvergence);
    }
    let params = from_z(&z, var);
    let f = filter(r, &params, var);
    let stderr = tgarch_stderr(r, &params, var);
    Ok(TgarchFit {
        params,
        stderr,
        loglik: f.loglik,
        converged,
        nonstationary: !params.is_stationary(),
        residuals: f.z,
        next_mean: f.next_mean,
        next_sigma: f.next_sigma,
    })
}

fn tgarch_stderr(r: &[f64], p: &TgarchParams, var: f64) -> Option<[f64; 9]> {
    let x0 = p.to_array();
    let ll = |x: &[f64; 9]| {
        let q = TgarchParams::from_array(x);
        if !q.admissible() {
            return f64::NAN;
        }
        filter(r, &q, var).loglik
    };
    let h: Vec<f64> = x0.iter().map(|v| 1e-4 * v.abs().max(1e-3)).collect();
    let f0 = ll(&x0);
    let mut hess = nalgebra::DMatrix::<f64>::zeros(9, 9);
    for i in 0..9 {
        for j in i..9 {
            let at = |si: f64, sj: f64| {
                let mut x = x0;
                x[i] += si * h[i];
                x[j] += sj * h[j];
                ll(&x)
            };
            let v = if i == j {
                (at(1.0, 0.0) - 2.0 * f0 + at(-1.0, 0.0)) / (h[i] * h[i])
            } else {
                (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j])
            };
            hess[(i, j)] = -v;
            hess[(j, i)] = -v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let cov = hess.try_inverse()?;
    let mut se = [0.0; 9];
    for (i, s) in se.iter_mut().enumerate() {
        if !(cov[(i, i)] > 0.0) {
            return None;
        }
        *s = cov[(i, i)].sqrt();
    }
    Some(se)
}

/// Simulates `n` returns from the filter, after a 500-step burn-in.
pub fn simulate_tgarch<R: Rng + ?Sized>(p: &TgarchParams, n: usize, rng: &mut R) -> Vec<f64> {
    let dist = SkewT::new(p.gamma, p.nu);
    let uncond = p.omega / (1.0 - p.beta - p.alpha1 - 0.5 * p.lambda1).max(1e-6);
    let mut var = uncond;
    let mut eps_prev = 0.0;
    let mut r_prev = p.phi0 / (1.0 - p.phi1);
    let mut out = Vec::with_capacity(n);
    for t in 0..n + 500 {
        let neg = if eps_prev < 0.0 { p.lambda1 } else { 0.0 };
        if t > 0 {
            var = p.omega + p.beta * var + (p.alpha1 + neg) * eps_prev * eps_prev;
        }
        let eps = var.sqrt() * dist.sample(rng);
        let rt = p.phi0 + p.phi1 * r_prev + p.theta1 * eps_prev + eps;
        if t >= 500 {
            out.push(rt);
        }
        eps_prev = eps;
        r_prev = rt;
    }
    out
}

// ---------------------------------------------------------------- marginal

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarginalModel {
    Empirical { sorted: Vec<f64> },
    #[serde(rename = "tgarch")]
    ArmaTgarchSkewT(TgarchFit),
}

pub fn fit_marginal(r: &[f64], kind: MarginalKind) -> Result<MarginalModel, MarginalError> {
    match kind {
        MarginalKind::Empirical => {
            if r.len() < 2 {
                return Err(MarginalError::TooShort { got: r.len(), min: 2 });
            }
            if let Some(i) = r.iter().position(|x| !x.is_finite()) {
                return Err(MarginalError::NonFinite(i));
            }
            let mut sorted = r.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok(MarginalModel::Empirical { sorted })
        }
        MarginalKind::ArmaTgarchSkewT => Ok(MarginalModel::ArmaTgarchSkewT(fit_tgarch(r)?)),
    }
}

impl MarginalModel {
    /// Empirical CDF scaled by `n + 1`, or the skewed-t CDF of a
    /// standardized residual.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginalModel::Empirical { sorted } => {
                let k = sorted.partition_point(|&s| s <= x);
                k as f64 / (sorted.len() as f64 + 1.0)
            }
            MarginalModel::ArmaTgarchSkewT(f) => SkewT::new(f.params.gamma, f.params.nu).cdf(x),
        }
    }

    /// Return quantile: type-7 sample quantile, or the one-step-ahead
    /// conditional quantile of the filter.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            MarginalModel::Empirical { sorted } => {
                let n = sorted.len();
                let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
                let lo = h.floor() as usize;
                let hi = (lo + 1).min(n - 1);
                sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
            }
            MarginalModel::ArmaTgarchSkewT(f) => {
                f.next_mean + f.next_sigma * SkewT::new(f.params.gamma, f.params.nu).quantile(p)
            }
        }
    }
}

/// Probability-integral transform of the fitting sample: ranks over `n + 1`
/// for the empirical kind, skewed-t CDF of the residuals for the filter.
pub fn pit(r: &[f64], m: &MarginalModel) -> Result<Vec<f64>, MarginalError> {
    let x: Vec<f64> = match m {
        MarginalModel::Empirical { .. } => r.to_vec(),
        MarginalModel::ArmaTgarchSkewT(f) => f.residuals.clone(),
    };
    if x.len() > 1 && x.iter().all(|v| *v == x[0]) {
        return Err(MarginalError::DegenerateInput);
    }
    let u: Vec<f64> = x.iter().map(|&v| m.cdf(v)).collect();
    Ok(u.into_iter().map(|p| p.clamp(1e-12, 1.0 - 1e-12)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn skew_t_standardized_and_consistent() {
        let d = SkewT::new(1.4, 6.0);
        // mean 0, variance 1 by quadrature
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        let h = 0.001;
        let mut x = -60.0;
        while x < 60.0 {
            let f = d.ln_pdf(x).exp();
            m0 += f * h;
            m1 += x * f * h;
            m2 += x * x * f * h;
            x += h;
        }
        assert!((m0 - 1.0).abs() < 1e-3, "{m0}");
        assert!(m1.abs() < 1e-3, "{m1}");
        assert!((m2 - 1.0).abs() < 2e-2, "{m2}");
        for &p in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            assert!((d.cdf(d.quantile(p)) - p).abs() < 1e-10);
        }
        let sym = SkewT::new(1.0, 6.0);
        assert!((sym.cdf(0.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn empirical_median_and_ranks() {
        let r = [0.3, -0.1, 0.2, 0.5, 0.0];
        let m = fit_marginal(&r, MarginalKind::Empirical).unwrap();
        assert!((m.cdf(0.2) - 0.5).abs() <= 1.0 / 5.0);
        let u = pit(&r, &m).unwrap();
        assert_eq!(u, vec![4.0 / 6.0, 1.0 / 6.0, 3.0 / 6.0, 5.0 / 6.0, 2.0 / 6.0]);
        assert_eq!(m.quantile(0.5), 0.2);
        assert_eq!(m.quantile(0.25), 0.0);
    }

    #[test]
    fn constant_series_rejected() {
        let r = [0.1; 20];
        let m = fit_marginal(&r, MarginalKind::Empirical).unwrap();
        assert_eq!(pit(&r, &m), Err(MarginalError::DegenerateInput));
        assert_eq!(fit_tgarch(&[0.0; 300]).unwrap_err(), MarginalError::DegenerateInput);
    }

    #[test]
    fn recovers_leverage_and_skew() {
        let truth = TgarchParams {
            phi0: 0.0,
            phi1: 0.2,
            theta1: 0.0,
            omega: 2e-6,
            beta: 0.85,
            alpha1: 0.04,
            lambda1: 0.12,
            gamma: 0.85,
            nu: 6.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = simulate_tgarch(&truth, 5000, &mut rng);
        let f = fit_tgarch(&r).unwrap();
        let se = f.stderr.unwrap_or_else(|| panic!("no stderr at {:?}", f.params));
        let (est, tru) = (f.params.to_array(), truth.to_array());
        for i in 3..8 {
            assert!((est[i] - tru[i]).abs() < 3.0 * se[i], "{i}: {:?} {:?}", f.params, se);
        }
        assert!(f.params.lambda1 > 0.0 && f.params.gamma < 1.0);
    }
}
