//! Hawkes flocking model: parameters, marks, event streams and the exact
//! Markov-form intensity recursion shared by simulation and estimation.
//!
//! The four counting components are ordered `(1u, 1d, 2u, 2d)`. Between
//! events each intensity relaxes exponentially towards its base level,
//!
//! ```text
//! λ_k(t + dt) = μ_k + (λ_k(t) − μ_k)·exp(−β_k·dt)
//! ```
//!
//! and at an event of mark `m` the column `m` of the state-dependent jump
//! matrix is added. Self/cross terms (`α_s`, `α_c`) always fire; the
//! flocking terms (`α_w`, `α_n`) only reach the *other* asset's intensities
//! and are gated by the sign of `C₁ − C₂` just before the event.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Twelve-parameter vector of the flocking model.
///
/// Field names match the flat JSON parameter file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlockParams {
    pub mu1: f64,
    pub beta1: f64,
    pub alpha1s: f64,
    pub alpha1c: f64,
    pub alpha1n: f64,
    pub alpha1w: f64,
    pub mu2: f64,
    pub beta2: f64,
    pub alpha2s: f64,
    pub alpha2c: f64,
    pub alpha2n: f64,
    pub alpha2w: f64,
}

/// Parameter names in canonical vector order (same as the JSON key order).
pub const PARAM_NAMES: [&str; 12] = [
    "mu1", "beta1", "alpha1s", "alpha1c", "alpha1n", "alpha1w", "mu2", "beta2", "alpha2s",
    "alpha2c", "alpha2n", "alpha2w",
];

/// Outcome of [`FlockParams::validated`].
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    /// Names of negative jump sizes; these are carried as-is but should be
    /// read as zero when interpreting the fitted model.
    pub negative_alphas: Vec<&'static str>,
}

impl Validation {
    pub fn is_clean(&self) -> bool {
        self.negative_alphas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("parameter {name} must be finite and strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("parameter {name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("expected 12 parameters, got {0}")]
    Length(usize),
}

impl FlockParams {
    /// Builds parameters from the canonical 12-vector (see [`PARAM_NAMES`]).
    pub fn from_slice(v: &[f64]) -> Result<Self, ParamError> {
        if v.len() != 12 {
            return Err(ParamError::Length(v.len()));
        }
        Ok(Self {
            mu1: v[0],
            beta1: v[1],
            alpha1s: v[2],
            alpha1c: v[3],
            alpha1n: v[4],
            alpha1w: v[5],
            mu2: v[6],
            beta2: v[7],
            alpha2s: v[8],
            alpha2c: v[9],
            alpha2n: v[10],
            alpha2w: v[11],
        })
    }

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.mu1,
            self.beta1,
            self.alpha1s,
            self.alpha1c,
            self.alpha1n,
            self.alpha1w,
            self.mu2,
            self.beta2,
            self.alpha2s,
            self.alpha2c,
            self.alpha2n,
            self.alpha2w,
        ]
    }

    /// Pure Poisson pair: all jump sizes zero.
    pub fn poisson(mu1: f64, mu2: f64, beta1: f64, beta2: f64) -> Self {
        Self::from_slice(&[mu1, beta1, 0.0, 0.0, 0.0, 0.0, mu2, beta2, 0.0, 0.0, 0.0, 0.0])
            .expect("12 entries")
    }

    /// Checks the hard invariants (μ, β > 0, α finite) and reports negative α.
    pub fn validated(&self) -> Result<Validation, ParamError> {
        let v = self.to_array();
        let mut negative_alphas = Vec::new();
        for (i, (&name, &value)) in PARAM_NAMES.iter().zip(v.iter()).enumerate() {
            let positive = matches!(i, 0 | 1 | 6 | 7);
            if positive {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ParamError::NotPositive { name, value });
                }
            } else if !value.is_finite() {
                return Err(ParamError::NotFinite { name, value });
            } else if value < 0.0 {
                negative_alphas.push(name);
            }
        }
        Ok(Validation { negative_alphas })
    }

    pub fn has_negative_alpha(&self) -> bool {
        self.alphas().iter().any(|a| *a < 0.0)
    }

    fn alphas(&self) -> [f64; 8] {
        [
            self.alpha1s,
            self.alpha1c,
            self.alpha1n,
            self.alpha1w,
            self.alpha2s,
            self.alpha2c,
            self.alpha2n,
            self.alpha2w,
        ]
    }

    /// Base intensity per component `(1u, 1d, 2u, 2d)`.
    pub fn mu_vec(&self) -> [f64; 4] {
        [self.mu1, self.mu1, self.mu2, self.mu2]
    }

    /// Decay rate per component `(1u, 1d, 2u, 2d)`.
    pub fn beta_vec(&self) -> [f64; 4] {
        [self.beta1, self.beta1, self.beta2, self.beta2]
    }

    /// Column `mark` of the jump matrix given the pre-event price gap sign.
    pub fn jump_column(&self, mark: Mark, gap: Gap) -> [f64; 4] {
        let mut col = [0.0; 4];
        for (k, c) in col.iter_mut().enumerate() {
            if let Some(kind) = jump_kind(k, mark, gap) {
                *c = self.alpha(kind);
            }
        }
        col
    }

    /// Jump size of a given kind for the asset that owns component `k`.
    pub fn alpha(&self, kind: JumpKind) -> f64 {
        match kind {
            JumpKind { asset: 0, term: Term::SelfExcite } => self.alpha1s,
            JumpKind { asset: 0, term: Term::Cross } => self.alpha1c,
            JumpKind { asset: 0, term: Term::Narrow } => self.alpha1n,
            JumpKind { asset: 0, term: Term::Widen } => self.alpha1w,
            JumpKind { term: Term::SelfExcite, .. } => self.alpha2s,
            JumpKind { term: Term::Cross, .. } => self.alpha2c,
            JumpKind { term: Term::Narrow, .. } => self.alpha2n,
            JumpKind { term: Term::Widen, .. } => self.alpha2w,
        }
    }
}

/// Kernel term that a jump belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    SelfExcite,
    Cross,
    Narrow,
    Widen,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::SelfExcite, Term::Cross, Term::Narrow, Term::Widen];

    pub fn index(self) -> usize {
        match self {
            Term::SelfExcite => 0,
            Term::Cross => 1,
            Term::Narrow => 2,
            Term::Widen => 3,
        }
    }
}

/// Which parameter feeds the jump of component `k` (asset 0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpKind {
    pub asset: usize,
    pub term: Term,
}

/// Sign of `C₁ − C₂` immediately before an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gap {
    /// `C₁ < C₂`
    Below,
    /// `C₁ = C₂`; flocking terms are silent.
    Level,
    /// `C₁ > C₂`
    Above,
}

impl Gap {
    pub fn of(c1: f64, c2: f64) -> Self {
        if c1 < c2 {
            Gap::Below
        } else if c1 > c2 {
            Gap::Above
        } else {
            Gap::Level
        }
    }
}

/// Jump-matrix entry `(k, mark)` under the given gap.
///
/// Rows 0/1 gate on `C₁ < C₂` / `C₁ > C₂`, rows 2/3 on `C₂ < C₁` / `C₂ > C₁`.
pub fn jump_kind(k: usize, mark: Mark, gap: Gap) -> Option<JumpKind> {
    let m = mark.index();
    let asset_k = k / 2;
    let asset_m = m / 2;
    if asset_k == asset_m {
        let term = if k == m { Term::SelfExcite } else { Term::Cross };
        return Some(JumpKind { asset: asset_k, term });
    }
    let gated = match k {
        0 => gap == Gap::Below,
        1 => gap == Gap::Above,
        2 => gap == Gap::Above,
        _ => gap == Gap::Below,
    };
    if !gated {
        return None;
    }
    // Within the off-diagonal block the pattern is [[w, n], [n, w]].
    let term = if k % 2 == m % 2 { Term::Widen } else { Term::Narrow };
    Some(JumpKind { asset: asset_k, term })
}

/// Event mark: which asset moved and in which direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mark {
    #[serde(rename = "1u")]
    Up1,
    #[serde(rename = "1d")]
    Down1,
    #[serde(rename = "2u")]
    Up2,
    #[serde(rename = "2d")]
    Down2,
}

impl Mark {
    pub const ALL: [Mark; 4] = [Mark::Up1, Mark::Down1, Mark::Up2, Mark::Down2];

    pub fn index(self) -> usize {
        match self {
            Mark::Up1 => 0,
            Mark::Down1 => 1,
            Mark::Up2 => 2,
            Mark::Down2 => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// 0 for the first asset, 1 for the second.
    pub fn asset(self) -> usize {
        self.index() / 2
    }

    /// +1 for an up move, −1 for a down move.
    pub fn direction(self) -> f64 {
        if self.index() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn new(asset: usize, up: bool) -> Self {
        match (asset, up) {
            (0, true) => Mark::Up1,
            (0, false) => Mark::Down1,
            (_, true) => Mark::Up2,
            (_, false) => Mark::Down2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Up1 => "1u",
            Mark::Down1 => "1d",
            Mark::Up2 => "2u",
            Mark::Down2 => "2d",
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Mark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1u" => Ok(Mark::Up1),
            "1d" => Ok(Mark::Down1),
            "2u" => Ok(Mark::Up2),
            "2d" => Ok(Mark::Down2),
            other => Err(format!("unknown mark {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub mark: Mark,
}

/// Multiplicative re-levelling of one asset's price state (and its tick) at a
/// given time. Produced by windowed level adjustment of real data; never
/// emitted by the simulator. Applies before any event at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescale {
    pub time: f64,
    /// 0 or 1.
    pub asset: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StreamError {
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("event {index} at t={time} is outside (0, {horizon}]")]
    OutOfRange { index: usize, time: f64, horizon: f64 },
    #[error("event times not strictly increasing at index {index} (t={time})")]
    NotIncreasing { index: usize, time: f64 },
    #[error("tick sizes must be positive, got ({0}, {1})")]
    Tick(f64, f64),
    #[error("invalid rescale record at index {0}")]
    Rescale(usize),
}

/// Time-ordered marked events over `(0, T]` plus initial price states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub horizon: f64,
    pub init1: f64,
    pub init2: f64,
    pub tick1: f64,
    pub tick2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rescales: Vec<Rescale>,
}

impl EventStream {
    /// Validated constructor with unit ticks and no rescales.
    pub fn new(events: Vec<Event>, horizon: f64, init1: f64, init2: f64) -> Result<Self, StreamError> {
        let s = Self {
            events,
            horizon,
            init1,
            init2,
            tick1: 1.0,
            tick2: 1.0,
            rescales: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn empty(horizon: f64) -> Self {
        Self {
            events: Vec::new(),
            horizon,
            init1: 0.0,
            init2: 0.0,
            tick1: 1.0,
            tick2: 1.0,
            rescales: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(StreamError::Horizon(self.horizon));
        }
        if !(self.tick1 > 0.0 && self.tick2 > 0.0) {
            return Err(StreamError::Tick(self.tick1, self.tick2));
        }
        let mut last = 0.0;
        for (index, e) in self.events.iter().enumerate() {
            if !(e.time > 0.0 && e.time <= self.horizon) {
                return Err(StreamError::OutOfRange {
                    index,
                    time: e.time,
                    horizon: self.horizon,
                });
            }
            if index > 0 && e.time <= last {
                return Err(StreamError::NotIncreasing { index, time: e.time });
            }
            last = e.time;
        }
        let mut last = f64::NEG_INFINITY;
        for (i, r) in self.rescales.iter().enumerate() {
            if r.asset > 1 || !(r.factor.is_finite() && r.factor > 0.0) || r.time < last {
                return Err(StreamError::Rescale(i));
            }
            last = r.time;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event counts per mark `(1u, 1d, 2u, 2d)`.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for e in &self.events {
            c[e.mark.index()] += 1;
        }
        c
    }

    pub fn price_tracker(&self) -> PriceTracker<'_> {
        PriceTracker::new(self)
    }

    /// Shifts every time (events, rescales, horizon) by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut s = self.clone();
        for e in &mut s.events {
            e.time += offset;
        }
        for r in &mut s.rescales {
            r.time += offset;
        }
        s.horizon += offset;
        s
    }
}

/// Replays price states along a stream. Call [`PriceTracker::advance_to`]
/// before reading the pre-event gap, then [`PriceTracker::apply`].
#[derive(Debug, Clone)]
pub struct PriceTracker<'a> {
    rescales: &'a [Rescale],
    next_rescale: usize,
    pub c: [f64; 2],
    pub tick: [f64; 2],
}

impl<'a> PriceTracker<'a> {
    pub fn new(stream: &'a EventStream) -> Self {
        Self {
            rescales: &stream.rescales,
            next_rescale: 0,
            c: [stream.init1, stream.init2],
            tick: [stream.tick1, stream.tick2],
        }
    }

    /// Applies all rescales with time ≤ `t`.
    pub fn advance_to(&mut self, t: f64) {
        while let Some(r) = self.rescales.get(self.next_rescale) {
            if r.time > t {
                break;
            }
            self.c[r.asset] *= r.factor;
            self.tick[r.asset] *= r.factor;
            self.next_rescale += 1;
        }
    }

    pub fn gap(&self) -> Gap {
        Gap::of(self.c[0], self.c[1])
    }

    pub fn apply(&mut self, mark: Mark) {
        let a = mark.asset();
        self.c[a] += mark.direction() * self.tick[a];
    }
}

/// Markov state of the intensity process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityState {
    /// Current intensities `(1u, 1d, 2u, 2d)`.
    pub lambda: [f64; 4],
    pub last_time: f64,
    pub c1: f64,
    pub c2: f64,
    pub tick1: f64,
    pub tick2: f64,
}

impl IntensityState {
    /// Starts at the base level `λ(0) = μ`.
    pub fn at_base(params: &FlockParams, c1: f64, c2: f64) -> Self {
        Self {
            lambda: params.mu_vec(),
            last_time: 0.0,
            c1,
            c2,
            tick1: 1.0,
            tick2: 1.0,
        }
    }

    pub fn with_ticks(mut self, tick1: f64, tick2: f64) -> Self {
        self.tick1 = tick1;
        self.tick2 = tick2;
        self
    }

    pub fn total(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn gap(&self) -> Gap {
        Gap::of(self.c1, self.c2)
    }
}

/// Relaxes every intensity towards its base level over `dt ≥ 0`.
pub fn decay(state: &IntensityState, params: &FlockParams, dt: f64) -> IntensityState {
    assert!(dt >= 0.0, "decay: negative elapsed time {dt}");
    let mu = params.mu_vec();
    let e1 = (-params.beta1 * dt).exp();
    let e2 = (-params.beta2 * dt).exp();
    let f = [e1, e1, e2, e2];
    let mut out = *state;
    for k in 0..4 {
        out.lambda[k] = mu[k] + (state.lambda[k] - mu[k]) * f[k];
    }
    out.last_time = state.last_time + dt;
    out
}

/// Adds the jump for `mark` (gated on the pre-event gap) and moves the price.
pub fn jump(state: &IntensityState, params: &FlockParams, mark: Mark) -> IntensityState {
    let col = params.jump_column(mark, state.gap());
    let mut out = *state;
    for (l, a) in out.lambda.iter_mut().zip(col) {
        *l += a;
    }
    if mark.asset() == 0 {
        out.c1 += mark.direction() * state.tick1;
    } else {
        out.c2 += mark.direction() * state.tick2;
    }
    out
}

/// Exact piecewise description of `λ(t)` over `[0, T]` with `λ(0) = μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPath {
    params: FlockParams,
    pub times: Vec<f64>,
    /// Left limits `λ(t_j−)`.
    pub left: Vec<[f64; 4]>,
    /// Right limits `λ(t_j+)`.
    pub right: Vec<[f64; 4]>,
    pub horizon: f64,
}

impl IntensityPath {
    /// Left-continuous intensity at `t ∈ [0, T]`.
    pub fn at(&self, t: f64) -> [f64; 4] {
        // last event strictly before t
        let idx = self.times.partition_point(|&s| s < t);
        let (t0, base) = if idx == 0 {
            (0.0, self.params.mu_vec())
        } else {
            (self.times[idx - 1], self.right[idx - 1])
        };
        let state = IntensityState {
            lambda: base,
            last_time: t0,
            c1: 0.0,
            c2: 0.0,
            tick1: 1.0,
            tick2: 1.0,
        };
        decay(&state, &self.params, t - t0).lambda
    }
}

pub fn intensity_path(stream: &EventStream, params: &FlockParams) -> IntensityPath {
    let n = stream.len();
    let mut times = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut prices = stream.price_tracker();
    let mut state = IntensityState::at_base(params, stream.init1, stream.init2);
    for e in &stream.events {
        state = decay(&state, params, e.time - state.last_time);
        prices.advance_to(e.time);
        left.push(state.lambda);
        let col = params.jump_column(e.mark, prices.gap());
        for (l, a) in state.lambda.iter_mut().zip(col) {
            *l += a;
        }
        prices.apply(e.mark);
        right.push(state.lambda);
        times.push(e.time);
    }
    IntensityPath {
        params: *params,
        times,
        left,
        right,
        horizon: stream.horizon,
    }
}
