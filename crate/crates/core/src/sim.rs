//! Exact simulation of the flocking process by Ogata thinning.
//!
//! Between events every intensity moves monotonically towards its base
//! level, so `Σ_k max(λ_k, μ_k)` evaluated at the last event (or rejected
//! candidate) dominates the total intensity until the next event.

use crate::model::{decay, jump, Event, EventStream, FlockParams, IntensityState, Mark, Rescale};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Post-jump intensities are floored here when negative jump sizes are simulated.
pub const INTENSITY_FLOOR: f64 = 1e-12;

pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("explosive regime: more than {cap} events generated by t={time:.3}")]
    Explosive { cap: usize, time: f64 },
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: FlockParams,
    pub horizon: f64,
    pub seed: u64,
    /// Discarded prefix; `None` means `10 / min(β₁, β₂)`.
    #[serde(default)]
    pub burnin: Option<f64>,
    #[serde(default)]
    pub init1: f64,
    #[serde(default)]
    pub init2: f64,
    #[serde(default = "unit")]
    pub tick1: f64,
    #[serde(default = "unit")]
    pub tick2: f64,
    #[serde(default = "default_cap")]
    pub max_events: usize,
}

fn unit() -> f64 {
    1.0
}

fn default_cap() -> usize {
    DEFAULT_MAX_EVENTS
}

impl SimConfig {
    pub fn new(params: FlockParams, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            horizon,
            seed,
            burnin: None,
            init1: 0.0,
            init2: 0.0,
            tick1: 1.0,
            tick2: 1.0,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn burnin(&self) -> f64 {
        self.burnin
            .unwrap_or_else(|| 10.0 / self.params.beta1.min(self.params.beta2))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params
            .validated()
            .map_err(|e| SimError::Config(e.to_string()))?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SimError::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        let b = self.burnin();
        if !(b.is_finite() && b >= 0.0) {
            return Err(SimError::Config(format!("burn-in must be non-negative, got {b}")));
        }
        if !(self.tick1 > 0.0 && self.tick2 > 0.0) {
            return Err(SimError::Config("tick sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Simulates one path using generator stream 0 of `cfg.seed`.
pub fn simulate(cfg: &SimConfig) -> Result<EventStream, SimError> {
    simulate_path(cfg, 0)
}

/// Simulates path number `path_index`; each index draws from its own
/// ChaCha stream so batches are reproducible regardless of scheduling.
pub fn simulate_path(cfg: &SimConfig, path_index: u64) -> Result<EventStream, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path_index);
    run_thinning(cfg, &mut rng)
}

/// Independent paths `0..n`, ordered by index.
pub fn simulate_batch(cfg: &SimConfig, n: usize) -> Vec<Result<EventStream, SimError>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| simulate_path(cfg, i))
        .collect()
}

fn run_thinning<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<EventStream, SimError> {
    let params = &cfg.params;
    let mu = params.mu_vec();
    let burnin = cfg.burnin();
    let end = burnin + cfg.horizon;
    let mut state = IntensityState::at_base(params, cfg.init1, cfg.init2).with_ticks(cfg.tick1, cfg.tick2);
    let mut t = 0.0;
    let mut generated = 0usize;
    let mut events = Vec::new();
    let mut init: Option<(f64, f64)> = None;

    loop {
        let bound: f64 = (0..4).map(|k| state.lambda[k].max(mu[k])).sum();
        let wait: f64 = rng.sample::<f64, _>(Exp1) / bound;
        let candidate = t + wait;
        if candidate > end {
            break;
        }
        if candidate <= t {
            continue;
        }
        state = decay(&state, params, candidate - t);
        t = candidate;
        let total = state.total();
        if rng.random::<f64>() * bound > total {
            continue;
        }
        let mark = pick_mark(&state.lambda, total, rng);
        if t > burnin && init.is_none() {
            init = Some((state.c1, state.c2));
        }
        state = jump(&state, params, mark);
        for l in &mut state.lambda {
            if *l < INTENSITY_FLOOR {
                *l = INTENSITY_FLOOR;
            }
        }
        generated += 1;
        if generated > cfg.max_events {
            return Err(SimError::Explosive {
                cap: cfg.max_events,
                time: t,
            });
        }
        if t > burnin {
            let mut time = (t - burnin).min(cfg.horizon);
            if let Some(last) = events.last().map(|e: &Event| e.time) {
                if time <= last {
                    time = last.next_up();
                }
            }
            if time > 0.0 && time <= cfg.horizon {
                events.push(Event { time, mark });
            }
        }
    }
    let (init1, init2) = init.unwrap_or((state.c1, state.c2));
    Ok(EventStream {
        events,
        horizon: cfg.horizon,
        init1,
        init2,
        tick1: cfg.tick1,
        tick2: cfg.tick2,
        rescales: Vec::new(),
    })
}

fn pick_mark<R: Rng>(lambda: &[f64; 4], total: f64, rng: &mut R) -> Mark {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, l) in lambda.iter().enumerate() {
        acc += l;
        if target < acc {
            return Mark::from_index(k).expect("k < 4");
        }
    }
    // rounding at the top end
    let k = (0..4).rev().find(|&k| lambda[k] > 0.0).unwrap_or(3);
    Mark::from_index(k).expect("k < 4")
}

/// Piecewise-constant price paths `C₁(t)`, `C₂(t)` on `[0, T]`.
///
/// `values[i]` holds on `[times[i], times[i+1])`; `times[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub times: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    pub horizon: f64,
}

impl PricePath {
    /// Right-continuous value at `t`.
    pub fn at(&self, t: f64) -> [f64; 2] {
        let idx = self.times.partition_point(|&s| s <= t);
        self.values[idx.saturating_sub(1)]
    }

    /// Segments `(start, end, [c1, c2])` covering `[0, T]`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, [f64; 2])> + '_ {
        (0..self.times.len()).map(move |i| {
            let end = self.times.get(i + 1).copied().unwrap_or(self.horizon);
            (self.times[i], end, self.values[i])
        })
    }

    /// Time average of `|C₁ − C₂|` over `[0, T]`.
    pub fn mean_abs_gap(&self) -> f64 {
        self.segments()
            .map(|(a, b, v)| (b - a) * (v[0] - v[1]).abs())
            .sum::<f64>()
            / self.horizon
    }

    pub fn final_values(&self) -> [f64; 2] {
        *self.values.last().expect("path has an initial value")
    }
}

/// Reconstructs the price paths from the initial state, tick moves and any
/// rescale records.
pub fn price_path(stream: &EventStream) -> PricePath {
    let mut times = vec![0.0];
    let mut values = vec![[stream.init1, stream.init2]];
    let mut c = [stream.init1, stream.init2];
    let mut tick = [stream.tick1, stream.tick2];
    let mut rescales = stream.rescales.iter().peekable();
    let push = |times: &mut Vec<f64>, values: &mut Vec<[f64; 2]>, t: f64, c: [f64; 2]| {
        if *times.last().expect("non-empty") == t {
            *values.last_mut().expect("non-empty") = c;
        } else {
            times.push(t);
            values.push(c);
        }
    };
    let apply = |r: &Rescale, c: &mut [f64; 2], tick: &mut [f64; 2]| {
        c[r.asset] *= r.factor;
        tick[r.asset] *= r.factor;
    };
    for e in &stream.events {
        while let Some(r) = rescales.next_if(|r| r.time <= e.time) {
            apply(r, &mut c, &mut tick);
            push(&mut times, &mut values, r.time.max(0.0), c);
        }
        let a = e.mark.asset();
        c[a] += e.mark.direction() * tick[a];
        push(&mut times, &mut values, e.time, c);
    }
    for r in rescales {
        if r.time <= stream.horizon {
            apply(r, &mut c, &mut tick);
            push(&mut times, &mut values, r.time.max(0.0), c);
        }
    }
    PricePath {
        times,
        values,
        horizon: stream.horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, a_s: f64, a_c: f64, a_n: f64, a_w: f64, beta: f64) -> FlockParams {
        FlockParams::from_slice(&[mu, beta, a_s, a_c, a_n, a_w, mu, beta, a_s, a_c, a_n, a_w]).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::new(params(0.1, 0.3, 0.2, 0.05, 0.2, 1.0), 500.0, 7);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&cfg, 1).unwrap();
        assert_ne!(a.events, c.events);
        a.validate().unwrap();
    }

    #[test]
    fn poisson_counts() {
        let cfg = SimConfig::new(FlockParams::poisson(0.1, 0.1, 1.0, 1.0), 1e4, 11);
        let s = simulate(&cfg).unwrap();
        for c in s.counts() {
            assert!((900..=1100).contains(&c), "count {c}");
        }
    }

    #[test]
    fn pure_hawkes_stationary_rate() {
        // decoupled pure-Hawkes pair: E[λ] = μ / (1 − (α_s + α_c)/β) = 0.24
        let p = params(0.08, 0.4, 0.0, 0.0, 0.0, 0.6);
        let cfg = SimConfig::new(p, 2e5, 3);
        let s = simulate(&cfg).unwrap();
        let rate = s.counts()[0] as f64 / cfg.horizon;
        assert!((rate - 0.24).abs() < 0.012, "rate {rate}");
    }

    #[test]
    fn explosive_guard_trips() {
        let mut cfg = SimConfig::new(params(0.1, 0.7, 0.5, 0.0, 0.0, 1.0), 1e5, 1);
        cfg.max_events = 100_000;
        assert!(matches!(simulate(&cfg), Err(SimError::Explosive { .. })));
    }

    #[test]
    fn price_path_counting_identity() {
        let ev = |t, m| Event { time: t, mark: m };
        let s = EventStream::new(
            vec![ev(1.0, Mark::Up1), ev(2.0, Mark::Up1), ev(3.0, Mark::Down1)],
            5.0,
            0.0,
            0.0,
        )
        .unwrap();
        let path = price_path(&s);
        assert_eq!(path.at(3.0)[0], 1.0);
        assert_eq!(path.at(2.5)[0], 2.0);
        assert_eq!(path.at(0.5), [0.0, 0.0]);
        let empty = price_path(&EventStream::empty(4.0));
        assert_eq!(empty.at(3.9), [0.0, 0.0]);
        assert_eq!(empty.mean_abs_gap(), 0.0);
    }

    #[test]
    fn price_path_applies_rescale() {
        let mut s = EventStream::new(
            vec![Event { time: 1.0, mark: Mark::Up2 }, Event { time: 3.0, mark: Mark::Up2 }],
            5.0,
            10.0,
            10.0,
        )
        .unwrap();
        s.rescales.push(Rescale { time: 2.0, asset: 1, factor: 2.0 });
        let path = price_path(&s);
        assert_eq!(path.at(1.5)[1], 11.0);
        assert_eq!(path.at(2.5)[1], 22.0);
        assert_eq!(path.at(3.5)[1], 24.0);
    }

    #[test]
    fn simulated_path_matches_counts() {
        let cfg = SimConfig::new(params(0.1, 0.3, 0.2, 0.05, 0.2, 1.0), 2000.0, 5);
        let s = simulate(&cfg).unwrap();
        let c = s.counts();
        let last = price_path(&s).final_values();
        assert_eq!(last[0], s.init1 + c[0] as f64 - c[1] as f64);
        assert_eq!(last[1], s.init2 + c[2] as f64 - c[3] as f64);
    }
}
