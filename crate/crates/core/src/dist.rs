//! Univariate and bivariate distribution functions used by the copula and
//! marginal models.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, SQRT_2};

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step on the smaller tail
    let f = norm_pdf(x);
    if f > 0.0 && x.is_finite() {
        if x > 0.0 {
            x + (norm_cdf(-x) - (1.0 - p)) / f
        } else {
            x - (norm_cdf(x) - p) / f
        }
    } else {
        x
    }
}

pub fn t_ln_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

pub fn t_pdf(x: f64, nu: f64) -> f64 {
    t_ln_pdf(x, nu).exp()
}

fn students_t(nu: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, nu).expect("degrees of freedom must be positive")
}

pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    students_t(nu).cdf(x)
}

/// Student-t quantile, polished with Newton steps on the CDF.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let dist = students_t(nu);
    let mut x = dist.inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..3 {
        let f = t_pdf(x, nu);
        if f <= 0.0 {
            break;
        }
        // Work with the smaller tail to avoid cancellation near 1.
        let err = if x > 0.0 {
            (1.0 - p) - dist.cdf(-x)
        } else {
            dist.cdf(x) - p
        };
        let step = if x > 0.0 { -err / f } else { err / f };
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// `P(X < h, Y < k)` for a standard bivariate normal with correlation `r`.
///
/// Drezner–Wesolowsky with Genz's Gauss–Legendre refinements; absolute
/// accuracy around 1e-15.
pub fn bvn_cdf(h: f64, k: f64, r: f64) -> f64 {
    bvn_upper(-h, -k, r)
}

/// `P(X > h, Y > k)`.
fn bvn_upper(dh: f64, dk: f64, r: f64) -> f64 {
    if dh == f64::INFINITY || dk == f64::INFINITY {
        return 0.0;
    }
    if dh == f64::NEG_INFINITY {
        return if dk == f64::NEG_INFINITY { 1.0 } else { norm_cdf(-dk) };
    }
    if dk == f64::NEG_INFINITY {
        return norm_cdf(-dh);
    }
    if r == 0.0 {
        return norm_cdf(-dh) * norm_cdf(-dk);
    }
    const W6: [f64; 3] = [0.1713244923791705, 0.3607615730481384, 0.4679139345726904];
    const X6: [f64; 3] = [0.9324695142031522, 0.6612093864662647, 0.2386191860831970];
    const W12: [f64; 6] = [
        0.04717533638651177,
        0.1069393259953183,
        0.1600783285433464,
        0.2031674267230659,
        0.2334925365383547,
        0.2491470458134029,
    ];
    const X12: [f64; 6] = [
        0.9815606342467191,
        0.9041172563704750,
        0.7699026741943050,
        0.5873179542866171,
        0.3678314989981802,
        0.1252334085114692,
    ];
    const W20: [f64; 10] = [
        0.01761400713915212,
        0.04060142980038694,
        0.06267204833410906,
        0.08327674157670475,
        0.1019301198172404,
        0.1181945319615184,
        0.1316886384491766,
        0.1420961093183821,
        0.1491729864726037,
        0.1527533871307259,
    ];
    const X20: [f64; 10] = [
        0.9931285991850949,
        0.9639719272779138,
        0.9122344282513259,
        0.8391169718222188,
        0.7463319064601508,
        0.6360536807265150,
        0.5108670019508271,
        0.3737060887154196,
        0.2277858511416451,
        0.07652652113349733,
    ];
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&W6, &X6)
    } else if r.abs() < 0.75 {
        (&W12, &X12)
    } else {
        (&W20, &X20)
    };
    // nodes on (0, 2): 1 - x and 1 + x
    let nodes = x.iter().map(|xi| 1.0 - xi).chain(x.iter().map(|xi| 1.0 + xi));
    let weights = w.iter().chain(w.iter());
    let tp = 2.0 * PI;
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for (xi, wi) in nodes.zip(weights) {
            let sn = (asr * xi).sin();
            bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let mut sum = 0.0;
            for (xi, wi) in nodes.zip(weights) {
                let xs = (a * xi) * (a * xi);
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    let rs = (1.0 - xs).sqrt();
                    let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                    sum += wi * asr.exp() * (sp - ep);
                }
            }
            bvn = (a * sum - bvn) / tp;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X < x, Y < y)` for a standard bivariate Student-t with `nu` degrees of
/// freedom and correlation `r`.
///
/// Uses the normal scale-mixture representation `T = Z / sqrt(W/ν)` with
/// `W ~ χ²_ν`, integrating the bivariate normal CDF over `log W` by the
/// trapezoidal rule (exponentially convergent for this smooth integrand).
pub fn bvt_cdf(x: f64, y: f64, nu: f64, r: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return t_cdf(y, nu);
    }
    if y == f64::INFINITY {
        return t_cdf(x, nu);
    }
    let half = 0.5 * nu;
    let log_norm = -half * std::f64::consts::LN_2 - ln_gamma(half);
    let centre = nu.ln();
    let lo = centre - 90.0 / nu - 2.0;
    let hi = (2.0 * nu + 150.0).ln();
    let step = 0.02f64.min(0.05 * (2.0 / nu).sqrt());
    let n = ((hi - lo) / step).ceil() as usize;
    let step = (hi - lo) / n as f64;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for i in 0..=n {
        let z = lo + i as f64 * step;
        let w = z.exp();
        // density of log W
        let dens = (half * z - 0.5 * w + log_norm).exp();
        let trap = if i == 0 || i == n { 0.5 } else { 1.0 };
        let s = (w / nu).sqrt();
        acc += trap * dens * bvn_cdf(x * s, y * s, r);
        wsum += trap * dens;
    }
    (acc / wsum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `∫ φ(s) Φ((k − r s)/√(1−r²)) ds` over `s < h`, composite Simpson.
    fn bvn_quadrature(h: f64, k: f64, r: f64) -> f64 {
        let lo = -12.0f64;
        let hi = h.min(12.0);
        if hi <= lo {
            return 0.0;
        }
        let n = 20_000;
        let dx = (hi - lo) / n as f64;
        let f = |s: f64| norm_pdf(s) * norm_cdf((k - r * s) / (1.0 - r * r).sqrt());
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * dx);
        }
        acc * dx / 3.0
    }

    #[test]
    fn bvn_matches_quadrature() {
        for &r in &[-0.95, -0.8, -0.5, -0.1, 0.2, 0.6, 0.8, 0.93, 0.99] {
            for &(h, k) in &[(-1.0, 0.5), (0.3, 0.3), (1.5, -2.0), (-2.5, -1.7), (2.0, 1.0)] {
                let a = bvn_cdf(h, k, r);
                let b = bvn_quadrature(h, k, r);
                assert!((a - b).abs() < 1e-10, "r={r} h={h} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn bvn_special_cases() {
        assert!((bvn_cdf(0.4, -0.3, 0.0) - norm_cdf(0.4) * norm_cdf(-0.3)).abs() < 1e-16);
        assert!((bvn_cdf(0.0, 0.0, 0.5) - (0.25 + 0.5f64.asin() / (2.0 * PI))).abs() < 1e-14);
        assert_eq!(bvn_cdf(f64::INFINITY, 0.7, 0.3), norm_cdf(0.7));
    }

    #[test]
    fn bvt_limits() {
        // large ν approaches the normal
        let a = bvt_cdf(0.3, -0.4, 1e5, 0.5);
        let b = bvn_cdf(0.3, -0.4, 0.5);
        assert!((a - b).abs() < 1e-5);
        // independence does not factor for t, but the marginal limit holds
        let m = bvt_cdf(0.8, 1e9, 4.0, 0.7);
        assert!((m - t_cdf(0.8, 4.0)).abs() < 1e-9);
        // orthant probability: P(X<0, Y<0) = 1/4 + asin(r)/(2π) for any ν
        for nu in [2.5, 4.0, 11.0] {
            let o = bvt_cdf(0.0, 0.0, nu, 0.6);
            assert!((o - (0.25 + 0.6f64.asin() / (2.0 * PI))).abs() < 1e-12, "ν={nu}: {o}");
        }
    }

    #[test]
    fn t_quantile_roundtrip() {
        for nu in [2.5, 4.0, 7.3, 30.0] {
            for p in [1e-8, 0.001, 0.05, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
                let x = t_quantile(p, nu);
                let back = t_cdf(x, nu);
                assert!((back - p).abs() < 1e-13 * p.max(1e-3), "ν={nu} p={p}: {back}");
            }
        }
    }

    #[test]
    fn normal_roundtrip() {
        for p in [1e-10, 0.01, 0.2, 0.5, 0.9, 0.999999] {
            let back = norm_cdf(norm_quantile(p));
            assert!((back - p).abs() < 1e-14 * p, "{p}: {back}");
        }
    }
}
