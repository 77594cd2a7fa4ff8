//! Simulate-and-refit recovery studies against the published benchmark
//! parameter sets.

use crate::estimate::{fit, mean_std, FitOptions, Model};
use crate::model::FlockParams;
use crate::risk::stationary_rate;
use crate::sim::{simulate_path, SimConfig, SimError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Row labels in the benchmark table layout, with the canonical index of
/// each row's parameter.
pub const TABLE_ROWS: [(&str, usize); 12] = [
    ("mu1", 0),
    ("alpha1n", 4),
    ("alpha1w", 5),
    ("alpha1s", 2),
    ("alpha1c", 3),
    ("beta1", 1),
    ("mu2", 6),
    ("alpha2n", 10),
    ("alpha2w", 11),
    ("alpha2s", 8),
    ("alpha2c", 9),
    ("beta2", 7),
];

/// One benchmark column: true values and the reference mean / standard
/// deviation over 500 refits, in table row order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkColumn {
    pub truth: [f64; 12],
    pub mean: [f64; 12],
    pub std: [f64; 12],
}

/// Number of paths behind the reference standard deviations.
pub const REFERENCE_PATHS: usize = 500;

pub const BENCHMARK: [BenchmarkColumn; 3] = [
    BenchmarkColumn {
        truth: [0.08, 0.0, 0.2, 0.4, 0.0, 0.6, 0.05, 0.0, 0.1, 0.5, 0.3, 1.2],
        mean: [
            0.0803, -0.0009, 0.2007, 0.4013, -0.0004, 0.6008, 0.0500, -0.0001, 0.1009, 0.5014, 0.3005,
            1.2028,
        ],
        std: [
            0.0039, 0.0124, 0.0142, 0.0083, 0.0141, 0.0212, 0.0023, 0.0105, 0.0115, 0.0242, 0.0178,
            0.0446,
        ],
    },
    BenchmarkColumn {
        truth: [0.05, 0.2, 0.35, 0.15, 0.4, 1.05, 0.07, 0.35, 0.1, 0.45, 0.25, 1.3],
        mean: [
            0.0503, 0.2001, 0.3509, 0.1505, 0.4005, 1.0513, 0.0702, 0.3495, 0.1001, 0.4505, 0.2497,
            1.2999,
        ],
        std: [
            0.0025, 0.0206, 0.0200, 0.0140, 0.0168, 0.0368, 0.0027, 0.0269, 0.0162, 0.0213, 0.0142,
            0.0465,
        ],
    },
    BenchmarkColumn {
        truth: [0.1, 0.3, 0.35, 0.2, 0.2, 0.9, 0.12, 0.0, 0.1, 0.3, 0.6, 1.15],
        mean: [
            0.1000, 0.3015, 0.3501, 0.1988, 0.2005, 0.9011, 0.1207, 0.0010, 0.1003, 0.2995, 0.6006,
            1.1519,
        ],
        std: [
            0.0074, 0.0324, 0.0247, 0.0176, 0.0157, 0.0402, 0.0072, 0.0215, 0.0216, 0.0224, 0.0282,
            0.0467,
        ],
    },
];

impl BenchmarkColumn {
    pub fn params(&self) -> FlockParams {
        FlockParams::from_slice(&to_canonical(&self.truth)).expect("12 entries")
    }
}

/// Table row order → canonical order.
pub fn to_canonical(rows: &[f64; 12]) -> [f64; 12] {
    let mut v = [0.0; 12];
    for (r, &(_, i)) in TABLE_ROWS.iter().enumerate() {
        v[i] = rows[r];
    }
    v
}

/// Canonical order → table row order.
pub fn to_rows(canonical: &[f64; 12]) -> [f64; 12] {
    let mut v = [0.0; 12];
    for (r, &(_, i)) in TABLE_ROWS.iter().enumerate() {
        v[r] = canonical[i];
    }
    v
}

/// Allowed deviation of a `paths`-path mean from the truth: three
/// reference standard deviations rescaled to `paths`, floored at 0.01.
pub fn tolerance(reference_std: f64, paths: usize) -> f64 {
    (3.0 * reference_std * (REFERENCE_PATHS as f64 / paths as f64).sqrt()).max(0.01)
}

/// Horizon giving roughly `events` events per path at the mean rate.
pub fn horizon_for_events(params: &FlockParams, events: f64) -> Option<f64> {
    let r = stationary_rate(params, 0.5)?;
    Some(events / r.iter().sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub truth: FlockParams,
    pub mean: FlockParams,
    pub std: FlockParams,
    pub horizon: f64,
    pub paths: usize,
    pub fitted: usize,
    pub failed: Vec<String>,
    pub mean_events: f64,
}

/// Simulates `paths` independent paths and refits each with the flocking
/// model. Paths run in parallel; results do not depend on scheduling.
pub fn recovery_study(
    truth: &FlockParams,
    paths: usize,
    horizon: f64,
    seed: u64,
    opts: &FitOptions,
) -> Result<RecoveryReport, SimError> {
    let cfg = SimConfig::new(*truth, horizon, seed);
    cfg.validate()?;
    let outcomes: Vec<Result<(FlockParams, usize), String>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let s = simulate_path(&cfg, i).map_err(|e| format!("path {i}: {e}"))?;
            let r = fit(&s, Model::Flocking, None, opts).map_err(|e| format!("path {i}: {e}"))?;
            Ok((r.params, s.len()))
        })
        .collect();
    let mut est = Vec::new();
    let mut failed = Vec::new();
    let mut events = 0usize;
    for o in outcomes {
        match o {
            Ok((p, n)) => {
                est.push(p);
                events += n;
            }
            Err(e) => failed.push(e),
        }
    }
    let (mean, std) = mean_std(&est);
    Ok(RecoveryReport {
        truth: *truth,
        mean,
        std,
        horizon,
        paths,
        fitted: est.len(),
        failed,
        mean_events: events as f64 / est.len().max(1) as f64,
    })
}

impl RecoveryReport {
    /// Per-row `(label, truth, mean, std, tolerance, pass)` in table order.
    pub fn rows(&self, reference: &BenchmarkColumn) -> Vec<(&'static str, f64, f64, f64, f64, bool)> {
        let truth = to_rows(&self.truth.to_array());
        let mean = to_rows(&self.mean.to_array());
        let std = to_rows(&self.std.to_array());
        TABLE_ROWS
            .iter()
            .enumerate()
            .map(|(r, &(name, _))| {
                let tol = tolerance(reference.std[r], self.fitted.max(1));
                let ok = (mean[r] - truth[r]).abs() <= tol;
                (name, truth[r], mean[r], std[r], tol, ok)
            })
            .collect()
    }
}
