//! Branching-ratio risk metrics.

use crate::model::FlockParams;
use crate::sim::PricePath;
use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

/// Expected offspring matrix: entry `(k, m)` is the mean number of
/// component-`k` events triggered by one mark-`m` event, with the flocking
/// gates replaced by their probabilities (`p` for `C₁ < C₂`, `1 − p` for
/// `C₁ > C₂`). Jump sizes enter by magnitude.
pub fn branching_matrix(params: &FlockParams, p: f64) -> Matrix4<f64> {
    let b1 = params.beta1;
    let b2 = params.beta2;
    let q = 1.0 - p;
    let s1 = params.alpha1s.abs() / b1;
    let c1 = params.alpha1c.abs() / b1;
    let n1 = params.alpha1n.abs() / b1;
    let w1 = params.alpha1w.abs() / b1;
    let s2 = params.alpha2s.abs() / b2;
    let c2 = params.alpha2c.abs() / b2;
    let n2 = params.alpha2n.abs() / b2;
    let w2 = params.alpha2w.abs() / b2;
    Matrix4::new(
        s1, c1, p * w1, p * n1, //
        c1, s1, q * n1, q * w1, //
        q * w2, q * n2, s2, c2, //
        p * n2, p * w2, c2, s2,
    )
}

/// Largest eigenvalue modulus, computed numerically.
pub fn numerical_radius(m: &Matrix4<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRadius {
    pub rho: f64,
    /// The closed-form discriminant was negative and `rho` came from the
    /// numerical eigenvalues of the `p = 1/2` matrix instead.
    pub complex_discriminant: bool,
}

/// Closed-form branching ratio at `p = 1/2`,
/// `ρ = ½(a + √(a² + 4(b − c)))`.
pub fn spectral_radius(params: &FlockParams) -> SpectralRadius {
    let (b1, b2) = (params.beta1, params.beta2);
    let e1 = params.alpha1s + params.alpha1c;
    let e2 = params.alpha2s + params.alpha2c;
    let f1 = params.alpha1n + params.alpha1w;
    let f2 = params.alpha2n + params.alpha2w;
    let a = e1 / b1 + e2 / b2;
    let b = f1 * f2 / (4.0 * b1 * b2);
    let c = e1 * e2 / (b1 * b2);
    let disc = a * a + 4.0 * (b - c);
    if disc >= 0.0 {
        SpectralRadius {
            rho: 0.5 * (a + disc.sqrt()),
            complex_discriminant: false,
        }
    } else {
        SpectralRadius {
            rho: numerical_radius(&branching_matrix(params, 0.5)),
            complex_discriminant: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterRatios {
    pub q11: f64,
    pub q12: f64,
    pub q21: f64,
    pub q22: f64,
}

/// Quadrant averages of the branching matrix, with signed jump sizes.
pub fn quarter_ratios(params: &FlockParams) -> QuarterRatios {
    QuarterRatios {
        q11: (params.alpha1s + params.alpha1c) / params.beta1,
        q22: (params.alpha2s + params.alpha2c) / params.beta2,
        q12: (params.alpha1n + params.alpha1w) / (2.0 * params.beta1),
        q21: (params.alpha2n + params.alpha2w) / (2.0 * params.beta2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOccupancy {
    /// Time fraction with `C₁ < C₂`.
    pub p: f64,
    /// Time fraction with `C₁ = C₂`.
    pub tie: f64,
}

pub fn empirical_p(path: &PricePath) -> GapOccupancy {
    let mut below = 0.0;
    let mut tie = 0.0;
    for (a, b, v) in path.segments() {
        let dt = b - a;
        if v[0] < v[1] {
            below += dt;
        } else if v[0] == v[1] {
            tie += dt;
        }
    }
    GapOccupancy {
        p: below / path.horizon,
        tie: tie / path.horizon,
    }
}

/// Mean event rates `(I − M)⁻¹ μ` per component, treating the gates as
/// independent of the intensities. `None` outside the stable region.
pub fn stationary_rate(params: &FlockParams, p: f64) -> Option<[f64; 4]> {
    let m = branching_matrix(params, p);
    if numerical_radius(&m) >= 1.0 {
        return None;
    }
    let mu = Vector4::from(params.mu_vec());
    let lam = (Matrix4::identity() - m).try_inverse()? * mu;
    Some([lam[0], lam[1], lam[2], lam[3]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub m: [[f64; 4]; 4],
    pub rho: f64,
    pub complex_discriminant: bool,
    /// Numerical spectral radius of `M(p)` at the summary's `p`.
    pub rho_at_p: f64,
    pub q11: f64,
    pub q22: f64,
    pub q12: f64,
    pub q21: f64,
    pub p: f64,
    pub tie: Option<f64>,
}

/// Risk summary; `p` comes from the path when given, else 1/2.
pub fn risk_summary(params: &FlockParams, path: Option<&PricePath>) -> RiskSummary {
    let occ = path.map(empirical_p);
    let p = occ.map_or(0.5, |o| o.p);
    let m = branching_matrix(params, p);
    let sr = spectral_radius(params);
    let q = quarter_ratios(params);
    let mut rows = [[0.0; 4]; 4];
    for (r, row) in rows.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m[(r, c)];
        }
    }
    RiskSummary {
        m: rows,
        rho: sr.rho,
        complex_discriminant: sr.complex_discriminant,
        rho_at_p: numerical_radius(&m),
        q11: q.q11,
        q22: q.q22,
        q12: q.q12,
        q21: q.q21,
        p,
        tie: occ.map(|o| o.tie),
    }
}

/// Delta-method standard error of the closed-form spectral radius given the
/// covariance `cov` of the parameters at canonical indices `free`.
pub fn rho_stderr(params: &FlockParams, cov: &DMatrix<f64>, free: &[usize]) -> f64 {
    let base = params.to_array();
    let grad: Vec<f64> = free
        .iter()
        .map(|&j| {
            let h = 1e-6 * base[j].abs().max(1e-3);
            let mut up = base;
            let mut dn = base;
            up[j] += h;
            dn[j] -= h;
            let r = |v: [f64; 12]| spectral_radius(&FlockParams::from_slice(&v).expect("12")).rho;
            (r(up) - r(dn)) / (2.0 * h)
        })
        .collect();
    let g = DVector::from_vec(grad);
    (g.transpose() * cov * &g)[(0, 0)].max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, EventStream, Mark};
    use crate::sim::price_path;

    fn col1() -> FlockParams {
        FlockParams::from_slice(&[0.08, 0.6, 0.4, 0.0, 0.0, 0.2, 0.05, 1.2, 0.5, 0.3, 0.0, 0.1]).unwrap()
    }

    #[test]
    fn zero_alpha_zero_matrix() {
        let p = FlockParams::poisson(0.1, 0.2, 1.0, 2.0);
        assert_eq!(branching_matrix(&p, 0.5), Matrix4::zeros());
        let q = quarter_ratios(&p);
        assert_eq!([q.q11, q.q12, q.q21, q.q22], [0.0; 4]);
    }

    #[test]
    fn col1_entries_and_radius() {
        let m = branching_matrix(&col1(), 0.5);
        assert!((m[(0, 0)] - 0.4 / 0.6).abs() < 1e-15);
        assert!((m[(0, 2)] - 0.5 * 0.2 / 0.6).abs() < 1e-15);
        let sr = spectral_radius(&col1());
        assert!(!sr.complex_discriminant);
        assert!((sr.rho - 0.75).abs() < 1e-12);
        assert!((numerical_radius(&m) - 0.75).abs() < 1e-10);
    }

    #[test]
    fn p_zero_drops_gated_rows() {
        let p = FlockParams::from_slice(&[0.1, 1.0, 0.1, 0.2, 0.3, 0.4, 0.1, 1.0, 0.5, 0.6, 0.7, 0.8]).unwrap();
        let m = branching_matrix(&p, 0.0);
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m[(0, 3)], 0.0);
        assert_eq!(m[(3, 0)], 0.0);
        assert_eq!(m[(3, 1)], 0.0);
        assert!(m[(1, 2)] > 0.0 && m[(2, 0)] > 0.0);
    }

    #[test]
    fn decoupled_radius_is_max_ratio() {
        let mut p = FlockParams::poisson(0.1, 0.1, 1.0, 2.0);
        p.alpha1s = 0.3;
        p.alpha1c = 0.2;
        p.alpha2s = 0.6;
        p.alpha2c = 0.4;
        assert!((spectral_radius(&p).rho - 0.5).abs() < 1e-15);
        p.beta1 = 0.5;
        assert!((spectral_radius(&p).rho - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radius_scales_inversely_with_beta() {
        let p = col1();
        let mut q = p;
        q.beta1 *= 2.0;
        q.beta2 *= 2.0;
        assert!((spectral_radius(&q).rho - 0.375).abs() < 1e-12);
    }

    #[test]
    fn table4_ratios() {
        let mut p = FlockParams::poisson(0.1, 0.1, 0.6079, 1.0);
        p.alpha1n = -0.0120;
        p.alpha1w = 0.2265;
        p.alpha1s = 0.0105;
        p.alpha1c = 0.4333;
        let q = quarter_ratios(&p);
        assert!((q.q11 - 0.7301).abs() < 5e-5);
        assert!((q.q12 - 0.1764).abs() < 5e-5);
        let mut d = p;
        for v in [
            &mut d.alpha1n,
            &mut d.alpha1w,
            &mut d.alpha1s,
            &mut d.alpha1c,
            &mut d.beta1,
            &mut d.beta2,
        ] {
            *v *= 2.0;
        }
        let qd = quarter_ratios(&d);
        assert!((qd.q11 - q.q11).abs() < 1e-15 && (qd.q12 - q.q12).abs() < 1e-15);
    }

    #[test]
    fn occupancy_fractions() {
        let s = EventStream::new(
            vec![
                Event { time: 2.0, mark: Mark::Up1 },
                Event { time: 5.0, mark: Mark::Up1 },
            ],
            10.0,
            0.0,
            1.0,
        )
        .unwrap();
        let o = empirical_p(&price_path(&s));
        assert!((o.p - 0.2).abs() < 1e-15);
        assert!((o.tie - 0.3).abs() < 1e-15);
        let always_below = EventStream::new(vec![], 4.0, 0.0, 3.0).unwrap();
        assert_eq!(empirical_p(&price_path(&always_below)).p, 1.0);
    }

    #[test]
    fn stationary_rate_decoupled() {
        let mut p = FlockParams::poisson(0.08, 0.05, 0.6, 1.2);
        p.alpha1s = 0.4;
        let r = stationary_rate(&p, 0.5).unwrap();
        assert!((r[0] - 0.24).abs() < 1e-12);
        assert!((r[2] - 0.05).abs() < 1e-12);
        p.alpha1s = 0.7;
        assert!(stationary_rate(&p, 0.5).is_none());
    }
}
