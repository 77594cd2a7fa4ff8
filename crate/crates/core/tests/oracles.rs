//! Simulate-and-recover checks for calibration, averaging and copula
//! selection.

use hawkesflock::covar::{fit_copula, rolling_covar, select_copula, CopulaSpec, CovarConfig, Family, MarginalKind};
use hawkesflock::estimate::{daily_calibrate, fit, FitOptions, Model};
use hawkesflock::model::{FlockParams, PARAM_NAMES};
use hawkesflock::recovery::{horizon_for_events, BENCHMARK};
use hawkesflock::sim::{simulate, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const ALPHAS: [usize; 8] = [2, 3, 4, 5, 8, 9, 10, 11];

#[test]
fn poisson_pair_gives_alphas_near_zero() {
    let p = FlockParams::poisson(0.3, 0.25, 1.0, 1.0);
    let s = simulate(&SimConfig::new(p, 8000.0, 2024)).unwrap();
    let r = fit(&s, Model::Flocking, None, &FitOptions::default()).unwrap();
    let est = r.params.to_array();
    let se = r.stderr.expect("stderr available").to_array();
    for &i in &ALPHAS {
        assert!(
            est[i].abs() <= 2.0 * se[i],
            "{}: {:.4} ± {:.4}",
            PARAM_NAMES[i],
            est[i],
            se[i]
        );
    }
}

#[test]
fn symmetric_and_flocking_agree_on_shared_terms() {
    // flocking terms present but zero: the extra free parameters must not
    // pull the self and cross terms away
    let p = FlockParams {
        alpha1n: 0.0,
        alpha1w: 0.0,
        alpha2n: 0.0,
        alpha2w: 0.0,
        ..BENCHMARK[0].params()
    };
    let s = simulate(&SimConfig::new(p, horizon_for_events(&p, 1e4).unwrap(), 31)).unwrap();
    let opts = FitOptions::default();
    let full = fit(&s, Model::Flocking, None, &opts).unwrap();
    let sym = fit(&s, Model::SymmetricHawkes, None, &opts).unwrap();
    let se = full.stderr.expect("stderr").to_array();
    let (a, b) = (full.params.to_array(), sym.params.to_array());
    for i in [2, 3, 8, 9] {
        assert!(
            (a[i] - b[i]).abs() <= 2.0 * se[i],
            "{}: flocking {:.4} symmetric {:.4} se {:.4}",
            PARAM_NAMES[i],
            a[i],
            b[i],
            se[i]
        );
    }
}

/// Each block of 20 windows should put a parameter's monthly mean within
/// 2·std/√20 of the truth about 95% of the time. Over 15 independent blocks
/// (180 checks) the miss count is Binomial(180, 0.05): mean 9, sd 2.9.
#[test]
fn monthly_average_of_twenty_windows() {
    let p = BENCHMARK[0].params();
    let h = horizon_for_events(&p, 4000.0).unwrap();
    let truth = p.to_array();
    let blocks = 15u64;
    let mut misses = [0usize; 12];
    for b in 0..blocks {
        let windows: Vec<(String, _)> = (0..20)
            .map(|d| {
                let s = simulate(&SimConfig::new(p, h, 500 + 100 * b + d)).unwrap();
                (format!("2024-03-{:02}", d + 1), s)
            })
            .collect();
        let cal = daily_calibrate(&windows, Model::Flocking, &FitOptions::default());
        assert_eq!(cal.monthly.len(), 1);
        let m = &cal.monthly[0];
        assert_eq!(m.n, 20);
        let (mean, std) = (m.mean.to_array(), m.std.to_array());
        for i in 0..12 {
            if (mean[i] - truth[i]).abs() > 2.0 * std[i] / (m.n as f64).sqrt() {
                misses[i] += 1;
            }
        }
    }
    let total: usize = misses.iter().sum();
    let detail: Vec<String> = PARAM_NAMES.iter().zip(misses).map(|(n, k)| format!("{n}:{k}")).collect();
    // three binomial standard deviations above the nominal count
    assert!(total <= 18, "{total}/180 misses: {}", detail.join(" "));
    // no single parameter systematically off
    assert!(misses.iter().all(|&k| k <= 5), "{}", detail.join(" "));
}

#[test]
fn gaussian_data_selects_gaussian_or_heavy_nu() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (u, v) = CopulaSpec::gaussian(0.5).sample(2000, &mut rng);
    let fits: Vec<_> = Family::ALL.iter().map(|&f| fit_copula(&u, &v, f).unwrap()).collect();
    let sel = select_copula(&fits).unwrap();
    let best = &fits[sel.best].spec;
    match best.family {
        Family::Gaussian => {}
        Family::StudentT => assert!(best.nu.unwrap() >= 20.0, "{best:?}"),
        _ => panic!("selected {best:?}"),
    }
}

#[test]
fn constant_theta_gives_flat_series() {
    let theta = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (u, v) = CopulaSpec::clayton(theta).sample(350, &mut rng);
    let n = Normal::new(0.0, 0.01).unwrap();
    let r1: Vec<f64> = u.iter().map(|&x| n.inverse_cdf(x)).collect();
    let r2: Vec<f64> = v.iter().map(|&x| n.inverse_cdf(x)).collect();
    let dates: Vec<String> = (0..r1.len()).map(|i| format!("d{i:03}")).collect();
    let cfg = CovarConfig {
        families: vec![Family::Clayton],
        marginal: MarginalKind::Empirical,
        ..CovarConfig::default()
    };
    let rows = rolling_covar(&dates, &r1, &r2, &cfg).unwrap();
    assert_eq!(rows.len(), 101);
    for (date, r) in &rows {
        let r = r.as_ref().unwrap();
        let se = r.fits[0].theta_stderr.unwrap();
        assert!((r.spec.theta - theta).abs() <= 3.0 * se, "{date}: {:.3} ± {se:.3}", r.spec.theta);
    }
}
