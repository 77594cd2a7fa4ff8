//! Goodness-of-fit checks: one-sample Kolmogorov–Smirnov tests and
//! time-rescaling residuals.

use crate::estimate::time_rescaled;
use crate::model::{EventStream, FlockParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

impl KsTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// `sup |F_n − F|` for a continuous `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail probability with Stephens' small-sample
/// adjustment of the argument.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lam * lam).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsTest {
    let d = ks_statistic(sample, cdf);
    KsTest {
        n: sample.len(),
        statistic: d,
        p_value: kolmogorov_pvalue(d, sample.len()),
    }
}

pub fn ks_exponential(sample: &[f64], rate: f64) -> KsTest {
    ks_test(sample, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })
}

pub fn ks_uniform(sample: &[f64]) -> KsTest {
    ks_test(sample, |x| x.clamp(0.0, 1.0))
}

/// KS test of each component's compensator increments against Exp(1).
pub fn rescaling_ks(stream: &EventStream, params: &FlockParams) -> [KsTest; 4] {
    let r = time_rescaled(stream, params);
    std::array::from_fn(|k| ks_exponential(&r[k], 1.0))
}

/// Inter-arrival times per component.
pub fn interarrivals(stream: &EventStream) -> [Vec<f64>; 4] {
    let mut last = [0.0; 4];
    let mut out: [Vec<f64>; 4] = Default::default();
    for e in &stream.events {
        let k = e.mark.index();
        out[k].push(e.time - last[k]);
        last[k] = e.time;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FlockParams;
    use crate::sim::{simulate, SimConfig};

    #[test]
    fn kolmogorov_reference_values() {
        // λ = 1.36 is the classical 5% point, 1.63 the 1% point
        let n = 1_000_000;
        assert!((kolmogorov_pvalue(1.358 / (n as f64).sqrt(), n) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_pvalue(1.628 / (n as f64).sqrt(), n) - 0.01).abs() < 5e-4);
        assert_eq!(kolmogorov_pvalue(0.0, 10), 1.0);
    }

    #[test]
    fn statistic_of_perfect_grid() {
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_uniform(&xs).statistic - 0.05).abs() < 1e-15);
    }

    #[test]
    fn poisson_interarrivals_are_exponential() {
        let mu = 0.25;
        let p = FlockParams::poisson(mu, mu, 1.0, 1.0);
        let s = simulate(&SimConfig::new(p, 41_000.0, 11)).unwrap();
        for (k, gaps) in interarrivals(&s).iter().enumerate() {
            assert!(gaps.len() >= 10_000, "{k}: {}", gaps.len());
            let t = ks_exponential(&gaps[..10_000], mu);
            assert!(t.passes(0.01), "component {k}: {t:?}");
        }
    }

    #[test]
    fn residuals_under_truth_pass() {
        let p = crate::recovery::BENCHMARK[0].params();
        let s = simulate(&SimConfig::new(p, 8000.0, 5)).unwrap();
        for t in rescaling_ks(&s, &p) {
            assert!(t.n > 500 && t.passes(0.01), "{t:?}");
        }
        let wrong = FlockParams { mu1: p.mu1 * 3.0, ..p };
        assert!(!rescaling_ks(&s, &wrong)[0].passes(0.01));
    }
}
