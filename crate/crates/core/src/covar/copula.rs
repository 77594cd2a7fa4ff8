//! Bivariate one-parameter copulas (plus the Student-t degrees of freedom):
//! distribution, density, h-functions, fitting and information criteria.

use crate::dist::{bvn_cdf, bvt_cdf, norm_cdf, norm_quantile, t_cdf, t_ln_pdf, t_quantile};
use crate::optim::{bisect, golden_min};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Endpoints of the open unit interval used by the root-solves.
pub const U_LO: f64 = 1e-12;
pub const U_HI: f64 = 1.0 - 1e-12;

const RHO_MAX: f64 = 0.999;
const GUMBEL_MAX: f64 = 50.0;
const CLAYTON_MIN: f64 = 1e-4;
const CLAYTON_MAX: f64 = 50.0;
const NU_MIN: f64 = 2.5;
const NU_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    #[serde(rename = "t")]
    StudentT,
    Gumbel,
    Clayton,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Gaussian, Family::StudentT, Family::Gumbel, Family::Clayton];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::StudentT => "t",
            Family::Gumbel => "gumbel",
            Family::Clayton => "clayton",
        }
    }

    /// Number of fitted parameters.
    pub fn n_params(self) -> usize {
        match self {
            Family::StudentT => 2,
            _ => 1,
        }
    }

    pub fn is_archimedean(self) -> bool {
        matches!(self, Family::Gumbel | Family::Clayton)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "t" | "student" | "studentt" => Ok(Family::StudentT),
            "gumbel" => Ok(Family::Gumbel),
            "clayton" => Ok(Family::Clayton),
            other => Err(format!("unknown copula family {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CopulaError {
    #[error("{family} parameter θ={theta} outside its range")]
    Theta { family: Family, theta: f64 },
    #[error("Student-t copula needs ν > 2, got {0:?}")]
    Nu(Option<f64>),
    #[error("argument {0} outside (0, 1)")]
    Domain(f64),
    #[error("need equal-length samples of at least {min}, got {u} and {v}")]
    Sample { u: usize, v: usize, min: usize },
    #[error("pseudo-observations must lie strictly inside (0, 1)")]
    NotUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: Family,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

impl CopulaSpec {
    pub fn new(family: Family, theta: f64, nu: Option<f64>) -> Result<Self, CopulaError> {
        let s = Self { family, theta, nu };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(theta: f64) -> Self {
        Self {
            family: Family::Gaussian,
            theta,
            nu: None,
        }
    }

    pub fn student(theta: f64, nu: f64) -> Self {
        Self {
            family: Family::StudentT,
            theta,
            nu: Some(nu),
        }
    }

    pub fn gumbel(theta: f64) -> Self {
        Self {
            family: Family::Gumbel,
            theta,
            nu: None,
        }
    }

    pub fn clayton(theta: f64) -> Self {
        Self {
            family: Family::Clayton,
            theta,
            nu: None,
        }
    }

    pub fn validate(&self) -> Result<(), CopulaError> {
        let t = self.theta;
        let ok = match self.family {
            Family::Gaussian | Family::StudentT => t > -1.0 && t < 1.0,
            Family::Gumbel => t >= 1.0 && t.is_finite(),
            Family::Clayton => t > 0.0 && t.is_finite(),
        };
        if !ok {
            return Err(CopulaError::Theta {
                family: self.family,
                theta: t,
            });
        }
        if self.family == Family::StudentT && !matches!(self.nu, Some(n) if n > 2.0) {
            return Err(CopulaError::Nu(self.nu));
        }
        Ok(())
    }

    fn nu(&self) -> f64 {
        self.nu.unwrap_or(f64::INFINITY)
    }

    /// `C(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let th = self.theta;
        match self.family {
            Family::Gaussian => bvn_cdf(norm_quantile(u), norm_quantile(v), th),
            Family::StudentT => {
                let nu = self.nu();
                bvt_cdf(t_quantile(u, nu), t_quantile(v, nu), nu, th)
            }
            Family::Gumbel => {
                let a = (-u.ln()).powf(th) + (-v.ln()).powf(th);
                (-a.powf(1.0 / th)).exp()
            }
            Family::Clayton => (u.powf(-th) + v.powf(-th) - 1.0).powf(-1.0 / th),
        }
    }

    /// Log copula density at an interior point.
    pub fn ln_density(&self, u: f64, v: f64) -> f64 {
        let th = self.theta;
        match self.family {
            Family::Gaussian => {
                let (x, y) = (norm_quantile(u), norm_quantile(v));
                gaussian_ln_density(x, y, th)
            }
            Family::StudentT => {
                let nu = self.nu();
                let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
                student_ln_density(x, y, th, nu, t_ln_pdf(x, nu) + t_ln_pdf(y, nu))
            }
            Family::Gumbel => gumbel_ln_density(u, v, th),
            Family::Clayton => clayton_ln_density(u, v, th),
        }
    }

    pub fn density(&self, u: f64, v: f64) -> f64 {
        self.ln_density(u, v).exp()
    }

    /// h-function `ζ_v(u) = ∂C(u, v)/∂v`: the distribution of the first
    /// coordinate given that the second equals `v`.
    pub fn h(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let th = self.theta;
        match self.family {
            Family::Gaussian => {
                let (x, y) = (norm_quantile(u), norm_quantile(v));
                norm_cdf((x - th * y) / (1.0 - th * th).sqrt())
            }
            Family::StudentT => {
                let nu = self.nu();
                let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
                let scale = ((nu + y * y) * (1.0 - th * th) / (nu + 1.0)).sqrt();
                t_cdf((x - th * y) / scale, nu + 1.0)
            }
            Family::Gumbel => {
                let (lx, ly) = ((-u.ln()).ln(), (-v.ln()).ln());
                let a = (th * lx).exp() + (th * ly).exp();
                let ln_c = -a.powf(1.0 / th);
                (ln_c - v.ln() + (th - 1.0) * ly + (1.0 / th - 1.0) * a.ln()).exp()
            }
            Family::Clayton => {
                let s = u.powf(-th) + v.powf(-th) - 1.0;
                v.powf(-th - 1.0) * s.powf(-1.0 - 1.0 / th)
            }
        }
    }

    /// Solves `ζ_v(u) = w` for `u`.
    pub fn h_inv(&self, w: f64, v: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        if w >= 1.0 {
            return 1.0;
        }
        let th = self.theta;
        match self.family {
            Family::Gaussian => {
                let y = norm_quantile(v);
                norm_cdf(norm_quantile(w) * (1.0 - th * th).sqrt() + th * y)
            }
            Family::StudentT => {
                let nu = self.nu();
                let y = t_quantile(v, nu);
                let scale = ((nu + y * y) * (1.0 - th * th) / (nu + 1.0)).sqrt();
                t_cdf(t_quantile(w, nu + 1.0) * scale + th * y, nu)
            }
            Family::Clayton => {
                let s = (w * v.powf(th + 1.0)).powf(-th / (1.0 + th));
                (s - v.powf(-th) + 1.0).powf(-1.0 / th)
            }
            Family::Gumbel => bisect(|u| self.h(u, v) - w, U_LO, U_HI, 1e-14).unwrap_or(if w < 0.5 {
                U_LO
            } else {
                U_HI
            }),
        }
    }

    /// Archimedean generator `ψ`.
    pub fn generator(&self, t: f64) -> Option<f64> {
        let th = self.theta;
        match self.family {
            Family::Gumbel => Some((-t.ln()).powf(th)),
            Family::Clayton => Some((t.powf(-th) - 1.0) / th),
            _ => None,
        }
    }

    pub fn generator_inv(&self, s: f64) -> Option<f64> {
        let th = self.theta;
        match self.family {
            Family::Gumbel => Some((-s.powf(1.0 / th)).exp()),
            Family::Clayton => Some((1.0 + th * s).powf(-1.0 / th)),
            _ => None,
        }
    }

    /// Lower and upper tail dependence coefficients.
    pub fn tail_dependence(&self) -> (f64, f64) {
        let th = self.theta;
        match self.family {
            Family::Gaussian => (0.0, 0.0),
            Family::StudentT => {
                let nu = self.nu();
                let l = 2.0 * t_cdf(-((nu + 1.0) * (1.0 - th) / (1.0 + th)).sqrt(), nu + 1.0);
                (l, l)
            }
            Family::Gumbel => (0.0, 2.0 - 2f64.powf(1.0 / th)),
            Family::Clayton => (2f64.powf(-1.0 / th), 0.0),
        }
    }

    /// Draws `n` pairs `(u, v)`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let th = self.theta;
        let mut us = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        let root = (1.0 - th * th).max(0.0).sqrt();
        let chi = self.nu.map(|nu| ChiSquared::new(nu).expect("ν > 0"));
        let frailty = (self.family == Family::Clayton).then(|| Gamma::new(1.0 / th, 1.0).expect("θ > 0"));
        for _ in 0..n {
            let (u, v) = match self.family {
                Family::Gaussian => {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let x = z1;
                    let y = th * z1 + root * z2;
                    (norm_cdf(x), norm_cdf(y))
                }
                Family::StudentT => {
                    let nu = self.nu();
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let w = chi.as_ref().expect("ν set").sample(rng);
                    let s = (nu / w).sqrt();
                    (t_cdf(z1 * s, nu), t_cdf((th * z1 + root * z2) * s, nu))
                }
                Family::Clayton => {
                    let g: f64 = frailty.as_ref().expect("clayton").sample(rng);
                    let e1 = -rng.random::<f64>().ln();
                    let e2 = -rng.random::<f64>().ln();
                    (
                        (1.0 + e1 / g).powf(-1.0 / th),
                        (1.0 + e2 / g).powf(-1.0 / th),
                    )
                }
                Family::Gumbel => {
                    let v: f64 = rng.random_range(U_LO..U_HI);
                    let w: f64 = rng.random_range(U_LO..U_HI);
                    (self.h_inv(w, v), v)
                }
            };
            us.push(u.clamp(U_LO, U_HI));
            vs.push(v.clamp(U_LO, U_HI));
        }
        (us, vs)
    }
}

fn gaussian_ln_density(x: f64, y: f64, th: f64) -> f64 {
    let d = 1.0 - th * th;
    -0.5 * d.ln() - (th * th * (x * x + y * y) - 2.0 * th * (x * y)) / (2.0 * d)
}

fn student_ln_density(x: f64, y: f64, th: f64, nu: f64, ln_marg: f64) -> f64 {
    let d = 1.0 - th * th;
    let q = (x * x + y * y - 2.0 * th * (x * y)) / (nu * d);
    ln_gamma(0.5 * (nu + 2.0)) - ln_gamma(0.5 * nu) - (nu * PI).ln() - 0.5 * d.ln()
        - 0.5 * (nu + 2.0) * q.ln_1p()
        - ln_marg
}

fn gumbel_ln_density(u: f64, v: f64, th: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let (lx, ly) = (x.ln(), y.ln());
    let a = (th * lx).exp() + (th * ly).exp();
    let ath = a.powf(1.0 / th);
    -ath + x + y + (th - 1.0) * (lx + ly) + (1.0 / th - 2.0) * a.ln() + (ath + th - 1.0).ln()
}

fn clayton_ln_density(u: f64, v: f64, th: f64) -> f64 {
    let (lu, lv) = (u.ln(), v.ln());
    let s = (-th * lu).exp() + (-th * lv).exp() - 1.0;
    (1.0 + th).ln() - (th + 1.0) * (lu + lv) - (2.0 + 1.0 / th) * s.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaFit {
    pub spec: CopulaSpec,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    /// Standard error of θ from the observed information (ν held fixed).
    pub theta_stderr: Option<f64>,
    /// θ (or ν) sits at the edge of the search range.
    pub boundary: bool,
}

/// Smallest sample accepted by [`fit_copula`].
pub const MIN_SAMPLE: usize = 50;

fn check_sample(u: &[f64], v: &[f64]) -> Result<(), CopulaError> {
    if u.len() != v.len() || u.len() < MIN_SAMPLE {
        return Err(CopulaError::Sample {
            u: u.len(),
            v: v.len(),
            min: MIN_SAMPLE,
        });
    }
    if u.iter().chain(v).any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(CopulaError::NotUniform);
    }
    Ok(())
}

fn near_edge(x: f64, lo: f64, hi: f64) -> bool {
    let tol = 1e-3 * (hi - lo);
    x - lo < tol || hi - x < tol
}

fn curvature<F: Fn(f64) -> f64>(f: F, x: f64, lo: f64, hi: f64) -> Option<f64> {
    let h = 1e-4 * x.abs().max(1e-2);
    if x - h <= lo || x + h >= hi {
        return None;
    }
    let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (d2 < 0.0).then(|| (-1.0 / d2).sqrt())
}

/// Maximum-likelihood fit of one family.
pub fn fit_copula(u: &[f64], v: &[f64], family: Family) -> Result<CopulaFit, CopulaError> {
    check_sample(u, v)?;
    let n = u.len();
    let (spec, ll, se, boundary) = match family {
        Family::Gaussian => {
            let x: Vec<f64> = u.iter().map(|&p| norm_quantile(p)).collect();
            let y: Vec<f64> = v.iter().map(|&p| norm_quantile(p)).collect();
            let ll = |th: f64| -> f64 { x.iter().zip(&y).map(|(&a, &b)| gaussian_ln_density(a, b, th)).sum() };
            let (th, neg) = golden_min(|t| -ll(t), -RHO_MAX, RHO_MAX, 1e-10);
            let se = curvature(&ll, th, -RHO_MAX, RHO_MAX);
            (CopulaSpec::gaussian(th), -neg, se, near_edge(th, -RHO_MAX, RHO_MAX))
        }
        Family::Gumbel => {
            let ll = |th: f64| -> f64 { u.iter().zip(v).map(|(&a, &b)| gumbel_ln_density(a, b, th)).sum() };
            let (th, neg) = golden_min(|t| -ll(t), 1.0, GUMBEL_MAX, 1e-9);
            let se = curvature(&ll, th, 1.0, GUMBEL_MAX);
            (CopulaSpec::gumbel(th), -neg, se, near_edge(th, 1.0, GUMBEL_MAX))
        }
        Family::Clayton => {
            let ll = |th: f64| -> f64 { u.iter().zip(v).map(|(&a, &b)| clayton_ln_density(a, b, th)).sum() };
            let (th, neg) = golden_min(|t| -ll(t), CLAYTON_MIN, CLAYTON_MAX, 1e-9);
            let se = curvature(&ll, th, CLAYTON_MIN, CLAYTON_MAX);
            (CopulaSpec::clayton(th), -neg, se, near_edge(th, CLAYTON_MIN, CLAYTON_MAX))
        }
        Family::StudentT => fit_student(u, v),
    };
    let k = family.n_params() as f64;
    Ok(CopulaFit {
        spec,
        loglik: ll,
        aic: -2.0 * ll + 2.0 * k,
        bic: -2.0 * ll + k * (n as f64).ln(),
        n,
        theta_stderr: se,
        boundary,
    })
}

/// Student-t state for one ν: quantiles and marginal log densities.
struct TProfile {
    x: Vec<f64>,
    y: Vec<f64>,
    ln_marg: Vec<f64>,
}

impl TProfile {
    fn new(u: &[f64], v: &[f64], nu: f64) -> Self {
        let x: Vec<f64> = u.iter().map(|&p| t_quantile(p, nu)).collect();
        let y: Vec<f64> = v.iter().map(|&p| t_quantile(p, nu)).collect();
        let ln_marg = x.iter().zip(&y).map(|(&a, &b)| t_ln_pdf(a, nu) + t_ln_pdf(b, nu)).collect();
        Self { x, y, ln_marg }
    }

    fn loglik(&self, th: f64, nu: f64) -> f64 {
        (0..self.x.len())
            .map(|i| student_ln_density(self.x[i], self.y[i], th, nu, self.ln_marg[i]))
            .sum()
    }

    /// Best θ for this ν.
    fn profile(&self, nu: f64) -> (f64, f64) {
        let (th, neg) = golden_min(|t| -self.loglik(t, nu), -RHO_MAX, RHO_MAX, 1e-9);
        (th, -neg)
    }
}

fn fit_student(u: &[f64], v: &[f64]) -> (CopulaSpec, f64, Option<f64>, bool) {
    let grid: Vec<f64> = (0..=55).map(|i| NU_MIN + 0.5 * i as f64).collect();
    let mut best = (NU_MIN, 0.0, f64::NEG_INFINITY);
    for &nu in &grid {
        let (th, ll) = TProfile::new(u, v, nu).profile(nu);
        if ll > best.2 {
            best = (nu, th, ll);
        }
    }
    let lo = (best.0 - 0.5).max(NU_MIN);
    let hi = (best.0 + 0.5).min(NU_MAX);
    let (nu, neg) = golden_min(|nu| -TProfile::new(u, v, nu).profile(nu).1, lo, hi, 1e-3);
    let (nu, th, ll) = if -neg > best.2 {
        let (th, ll) = TProfile::new(u, v, nu).profile(nu);
        (nu, th, ll)
    } else {
        best
    };
    let prof = TProfile::new(u, v, nu);
    let se = curvature(|t| prof.loglik(t, nu), th, -RHO_MAX, RHO_MAX);
    let boundary = near_edge(th, -RHO_MAX, RHO_MAX) || near_edge(nu, NU_MIN, NU_MAX);
    (CopulaSpec::student(th, nu), ll, se, boundary)
}

/// Outcome of choosing among candidate fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: usize,
    /// Index with the lowest BIC differs from `best`.
    pub criteria_disagree: bool,
    /// More than one candidate lay within 2 AIC units of the minimum.
    pub tie: bool,
}

/// Lowest AIC wins; candidates within 2 AIC units of the minimum count as
/// tied and the one with fewer parameters (then lower AIC) is chosen.
pub fn select_copula(fits: &[CopulaFit]) -> Option<Selection> {
    let min_aic = fits.iter().map(|f| f.aic).fold(f64::INFINITY, f64::min);
    let close: Vec<usize> = (0..fits.len()).filter(|&i| fits[i].aic <= min_aic + 2.0).collect();
    let best = *close.iter().min_by(|&&a, &&b| {
        let ka = fits[a].spec.family.n_params();
        let kb = fits[b].spec.family.n_params();
        ka.cmp(&kb).then(fits[a].aic.total_cmp(&fits[b].aic))
    })?;
    let by_bic = (0..fits.len()).min_by(|&a, &b| fits[a].bic.total_cmp(&fits[b].bic))?;
    Some(Selection {
        best,
        criteria_disagree: by_bic != best,
        tie: close.len() > 1,
    })
}
