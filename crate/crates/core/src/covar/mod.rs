//! Copula-based VaR, CoVaR and ΔCoVaR on daily returns.
//!
//! For a conditioned asset `i` and a conditioning asset `j` with copula
//! `C(u_i, u_j)`:
//!
//! ```text
//! CoVaR^{i|j}        = F_i⁻¹(u*),  C(u*, α) = αβ
//! CoVaR^{i|j,median} = F_i⁻¹(u°),  ζ_{1/2}(u°) = β
//! ΔCoVaR^{i|j}       = CoVaR^{i|j} − CoVaR^{i|j,median}
//! ```

pub mod copula;
pub mod marginal;

pub use copula::{fit_copula, select_copula, CopulaError, CopulaFit, CopulaSpec, Family, Selection};
pub use marginal::{fit_marginal, pit, MarginalError, MarginalKind, MarginalModel};

use crate::optim::bisect;
use copula::{U_HI, U_LO};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Absolute tolerance of the `u` root-solves.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CovarError {
    #[error("zero price at index {0}")]
    ZeroPrice(usize),
    #[error("need at least {min} observations, got {got}")]
    TooShort { got: usize, min: usize },
    #[error("levels must lie in (0, 1): alpha={alpha}, beta={beta}")]
    Level { alpha: f64, beta: f64 },
    #[error("root not bracketed in (0, 1)")]
    RootBracketFailure,
    #[error("series lengths differ: {0} vs {1}")]
    Length(usize, usize),
    #[error("no copula family could be fitted")]
    NoCandidate,
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
}

/// Simple returns `(p[t+1] − p[t]) / p[t]`.
pub fn returns(prices: &[f64]) -> Result<Vec<f64>, CovarError> {
    if prices.len() < 2 {
        return Err(CovarError::TooShort {
            got: prices.len(),
            min: 2,
        });
    }
    if let Some(i) = prices.iter().position(|&p| p == 0.0) {
        return Err(CovarError::ZeroPrice(i));
    }
    Ok(prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
}

fn check_levels(alpha: f64, beta: f64) -> Result<(), CovarError> {
    if alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(CovarError::Level { alpha, beta })
    }
}

/// `u` with `C(u, α) = αβ` from the Archimedean generator,
/// `ψ⁻¹(ψ(αβ) − ψ(α))`. `None` for the elliptical families.
pub fn stress_quantile_closed(spec: &CopulaSpec, alpha: f64, beta: f64) -> Option<f64> {
    let s = spec.generator(alpha * beta)? - spec.generator(alpha)?;
    spec.generator_inv(s)
}

/// `u` with `C(u, α) = αβ` by bisection.
pub fn stress_quantile_numeric(spec: &CopulaSpec, alpha: f64, beta: f64) -> Result<f64, CovarError> {
    let target = alpha * beta;
    bisect(|u| spec.cdf(u, alpha) - target, U_LO, U_HI, ROOT_TOL).ok_or(CovarError::RootBracketFailure)
}

pub fn stress_quantile(spec: &CopulaSpec, alpha: f64, beta: f64) -> Result<f64, CovarError> {
    check_levels(alpha, beta)?;
    match stress_quantile_closed(spec, alpha, beta) {
        Some(u) => Ok(u),
        None => stress_quantile_numeric(spec, alpha, beta),
    }
}

/// `u` with `ζ_{1/2}(u) = β`.
pub fn median_quantile(spec: &CopulaSpec, beta: f64) -> Result<f64, CovarError> {
    bisect(|u| spec.h(u, 0.5) - beta, U_LO, U_HI, ROOT_TOL).ok_or(CovarError::RootBracketFailure)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoVaR {
    pub covar: f64,
    pub covar_median: f64,
    pub delta: f64,
    pub u_stress: f64,
    pub u_median: f64,
}

/// CoVaR of the asset described by `marginal`, conditioned through `spec`
/// (first copula argument) on the other asset's distress at level `alpha`.
pub fn covar_pair(
    spec: &CopulaSpec,
    marginal: &MarginalModel,
    alpha: f64,
    beta: f64,
) -> Result<CoVaR, CovarError> {
    spec.validate()?;
    let u_stress = stress_quantile(spec, alpha, beta)?;
    let u_median = median_quantile(spec, beta)?;
    let covar = marginal.quantile(u_stress);
    let covar_median = marginal.quantile(u_median);
    Ok(CoVaR {
        covar,
        covar_median,
        delta: covar - covar_median,
        u_stress,
        u_median,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarConfig {
    pub alpha: f64,
    pub beta: f64,
    pub window: usize,
    pub families: Vec<Family>,
    pub marginal: MarginalKind,
}

impl Default for CovarConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.05,
            window: 250,
            families: Family::ALL.to_vec(),
            marginal: MarginalKind::Empirical,
        }
    }
}

/// One window's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarRow {
    pub date: String,
    /// `F_i⁻¹(α)` for each asset.
    pub var1: f64,
    pub var2: f64,
    pub covar12: CoVaR,
    pub covar21: CoVaR,
    pub spec: CopulaSpec,
    pub aic: f64,
    pub bic: f64,
    pub selection: Selection,
    pub boundary: bool,
    pub fits: Vec<CopulaFit>,
}

impl CovarRow {
    pub fn dcovar12(&self) -> f64 {
        self.covar12.delta
    }

    pub fn dcovar21(&self) -> f64 {
        self.covar21.delta
    }
}

/// Marginals, PIT, copula selection and both CoVaR directions on one window.
pub fn covar_window(date: &str, r1: &[f64], r2: &[f64], cfg: &CovarConfig) -> Result<CovarRow, CovarError> {
    if r1.len() != r2.len() {
        return Err(CovarError::Length(r1.len(), r2.len()));
    }
    check_levels(cfg.alpha, cfg.beta)?;
    let m1 = fit_marginal(r1, cfg.marginal)?;
    let m2 = fit_marginal(r2, cfg.marginal)?;
    let u1 = pit(r1, &m1)?;
    let u2 = pit(r2, &m2)?;
    let mut fits = Vec::new();
    let mut first_err = None;
    for &f in &cfg.families {
        match fit_copula(&u1, &u2, f) {
            Ok(fit) => fits.push(fit),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(selection) = select_copula(&fits) else {
        return Err(first_err.map_or(CovarError::NoCandidate, CovarError::from));
    };
    let best = &fits[selection.best];
    let spec = best.spec;
    let covar12 = covar_pair(&spec, &m1, cfg.alpha, cfg.beta)?;
    let covar21 = covar_pair(&spec, &m2, cfg.alpha, cfg.beta)?;
    Ok(CovarRow {
        date: date.to_string(),
        var1: m1.quantile(cfg.alpha),
        var2: m2.quantile(cfg.alpha),
        covar12,
        covar21,
        spec,
        aic: best.aic,
        bic: best.bic,
        boundary: best.boundary,
        selection,
        fits,
    })
}

/// Rolling windows of `cfg.window` returns, labelled by the date of their
/// last return. Windows run in parallel; output follows date order.
pub fn rolling_covar(
    dates: &[String],
    r1: &[f64],
    r2: &[f64],
    cfg: &CovarConfig,
) -> Result<Vec<(String, Result<CovarRow, CovarError>)>, CovarError> {
    if r1.len() != r2.len() || dates.len() != r1.len() {
        return Err(CovarError::Length(r1.len(), r2.len()));
    }
    if r1.len() < cfg.window || cfg.window == 0 {
        return Err(CovarError::TooShort {
            got: r1.len(),
            min: cfg.window.max(1),
        });
    }
    let ends: Vec<usize> = (cfg.window..=r1.len()).collect();
    Ok(ends
        .par_iter()
        .map(|&e| {
            let s = e - cfg.window;
            let date = dates[e - 1].clone();
            let row = covar_window(&date, &r1[s..e], &r2[s..e], cfg);
            (date, row)
        })
        .collect())
}
