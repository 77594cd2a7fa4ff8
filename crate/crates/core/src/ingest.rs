//! Turns paired raw tick files into an [`EventStream`].
//!
//! Order of operations: window ratios for the level adjustment, per-asset
//! tick differences, sub-second re-stamping, unit-tick splitting, and finally
//! the cross-asset merge with tie breaking. The level adjustment is carried
//! exactly by the stream's initial state, tick sizes and [`Rescale`] records
//! at window boundaries, so counts are always in raw ticks.

use crate::model::{Event, EventStream, Mark, Rescale, StreamError};
use serde::{Deserialize, Serialize};
use std::io::Read;

/// Offset applied to the second asset's event on an exact tie, in seconds.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRow {
    pub ts_ms: i64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTickSeries {
    pub instrument: String,
    pub tick: f64,
    pub rows: Vec<TickRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("{instrument}: timestamps decrease at row {row}")]
    Unsorted { instrument: String, row: usize },
    #[error("{instrument}: no usable rows")]
    EmptySeries { instrument: String },
    #[error("tick size must be positive, got {0}")]
    Tick(f64),
    #[error("window length must be at least one second, got {0}")]
    Window(f64),
    #[error("{instrument}: move of {delta} at row {row} is not a whole number of ticks")]
    NonTickMove { instrument: String, row: usize, delta: f64 },
    #[error("events still tied after offsetting at t={time}")]
    ResidualTie { time: f64 },
    #[error(transparent)]
    Stream(#[from] StreamError),
}

impl RawTickSeries {
    pub fn new(instrument: impl Into<String>, tick: f64, rows: Vec<TickRow>) -> Result<Self, IngestError> {
        let s = Self {
            instrument: instrument.into(),
            tick,
            rows,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), IngestError> {
        if !(self.tick > 0.0 && self.tick.is_finite()) {
            return Err(IngestError::Tick(self.tick));
        }
        if self.rows.is_empty() {
            return Err(IngestError::EmptySeries {
                instrument: self.instrument.clone(),
            });
        }
        for (i, w) in self.rows.windows(2).enumerate() {
            if w[1].ts_ms < w[0].ts_ms {
                return Err(IngestError::Unsorted {
                    instrument: self.instrument.clone(),
                    row: i + 1,
                });
            }
        }
        Ok(())
    }

    /// Reads `timestamp_ms,price` CSV (header required). Rows with a
    /// non-positive or non-finite price are dropped and counted.
    pub fn read_csv<R: Read>(
        reader: R,
        instrument: impl Into<String>,
        tick: f64,
    ) -> Result<(Self, usize), IngestError> {
        #[derive(Deserialize)]
        struct Row {
            timestamp_ms: i64,
            price: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        let mut dropped = 0;
        for rec in rdr.deserialize::<Row>() {
            let r = rec.map_err(|e| IngestError::Csv(e.to_string()))?;
            if r.price.is_finite() && r.price > 0.0 {
                rows.push(TickRow {
                    ts_ms: r.timestamp_ms,
                    price: r.price,
                });
            } else {
                dropped += 1;
            }
        }
        Ok((Self::new(instrument, tick, rows)?, dropped))
    }

    /// Writes `timestamp_ms,price`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| IngestError::Csv(e.to_string());
        w.write_record(["timestamp_ms", "price"]).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([r.ts_ms.to_string(), r.price.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustConfig {
    /// Window length in seconds.
    pub window: f64,
    /// Series that is rescaled: 0 for the first, 1 for the second.
    pub target: usize,
}

impl Default for AdjustConfig {
    fn default() -> Self {
        Self {
            window: 600.0,
            target: 1,
        }
    }
}

/// One (possibly merged) adjustment window, in seconds from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustWindow {
    pub start: f64,
    pub end: f64,
    pub ratio: f64,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAdjustment {
    /// Time origin in whole seconds since the epoch.
    pub origin_s: i64,
    pub target: usize,
    pub windows: Vec<AdjustWindow>,
}

impl LevelAdjustment {
    /// Ratio in force at `t` seconds from the origin.
    pub fn ratio_at(&self, t: f64) -> f64 {
        let i = self.windows.partition_point(|w| w.start <= t);
        self.windows[i.saturating_sub(1)].ratio
    }
}

/// Origin one second before the first observation's second, so that every
/// change lands strictly after time zero.
fn origin_of(x: &RawTickSeries, y: &RawTickSeries) -> i64 {
    let first = x.rows[0].ts_ms.min(y.rows[0].ts_ms);
    first.div_euclid(1000) - 1
}

fn rel_second(ts_ms: i64, origin_s: i64) -> i64 {
    ts_ms.div_euclid(1000) - origin_s
}

/// Sample-mean ratios per window; a window missing either series is merged
/// into the next one (the last into the previous one).
pub fn level_adjustment(
    x: &RawTickSeries,
    y: &RawTickSeries,
    cfg: &AdjustConfig,
) -> Result<LevelAdjustment, IngestError> {
    x.check()?;
    y.check()?;
    if !(cfg.window >= 1.0 && cfg.window.is_finite()) {
        return Err(IngestError::Window(cfg.window));
    }
    let origin_s = origin_of(x, y);
    let index = |ts: i64| (rel_second(ts, origin_s) as f64 / cfg.window).floor() as usize;
    let last = x.rows.last().unwrap().ts_ms.max(y.rows.last().unwrap().ts_ms);
    let n = index(last) + 1;
    let mut acc = vec![[0.0f64; 2]; n];
    let mut cnt = vec![[0usize; 2]; n];
    for (a, s) in [x, y].iter().enumerate() {
        for r in &s.rows {
            let w = index(r.ts_ms);
            acc[w][a] += r.price;
            cnt[w][a] += 1;
        }
    }
    let boundary = |w: usize| (w as f64 * cfg.window).ceil();
    let mut groups: Vec<(usize, usize, [f64; 2], [usize; 2])> = Vec::new();
    let mut pending: Option<(usize, [f64; 2], [usize; 2])> = None;
    for w in 0..n {
        let (start, mut s, mut c) = pending.take().unwrap_or((w, [0.0; 2], [0; 2]));
        for a in 0..2 {
            s[a] += acc[w][a];
            c[a] += cnt[w][a];
        }
        if c[0] > 0 && c[1] > 0 {
            groups.push((start, w, s, c));
        } else {
            pending = Some((start, s, c));
        }
    }
    if let Some((_, s, c)) = pending {
        match groups.last_mut() {
            Some(g) => {
                g.1 = n - 1;
                for a in 0..2 {
                    g.2[a] += s[a];
                    g.3[a] += c[a];
                }
            }
            None => {
                let missing = if c[0] == 0 { x } else { y };
                return Err(IngestError::EmptySeries {
                    instrument: missing.instrument.clone(),
                });
            }
        }
    }
    let windows = groups
        .iter()
        .map(|&(a, b, s, c)| {
            let mean = [s[0] / c[0] as f64, s[1] / c[1] as f64];
            let ratio = if cfg.target == 1 {
                mean[0] / mean[1]
            } else {
                mean[1] / mean[0]
            };
            AdjustWindow {
                start: boundary(a),
                end: boundary(b + 1),
                ratio,
                n1: c[0],
                n2: c[1],
            }
        })
        .collect();
    Ok(LevelAdjustment {
        origin_s,
        target: cfg.target,
        windows,
    })
}

/// Level-adjusted pair: the target series multiplied by its window ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedPair {
    pub c1: Vec<TickRow>,
    pub c2: Vec<TickRow>,
    pub adjustment: LevelAdjustment,
}

pub fn adjust_levels(
    x: &RawTickSeries,
    y: &RawTickSeries,
    cfg: &AdjustConfig,
) -> Result<AdjustedPair, IngestError> {
    let adj = level_adjustment(x, y, cfg)?;
    let scale = |s: &RawTickSeries, on: bool| -> Vec<TickRow> {
        s.rows
            .iter()
            .map(|r| {
                let f = if on {
                    adj.ratio_at(rel_second(r.ts_ms, adj.origin_s) as f64)
                } else {
                    1.0
                };
                TickRow {
                    ts_ms: r.ts_ms,
                    price: f * r.price,
                }
            })
            .collect()
    };
    Ok(AdjustedPair {
        c1: scale(x, cfg.target == 0),
        c2: scale(y, cfg.target == 1),
        adjustment: adj,
    })
}

/// A price change of `ticks` whole ticks, stamped at `time` (seconds from
/// the origin) and owning the slot `[time, time + slot)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Change {
    pub time: f64,
    pub slot: f64,
    pub ticks: i64,
}

/// Consecutive price differences in whole ticks, with the second they
/// occurred in. Unchanged rows yield nothing.
pub fn tick_changes(s: &RawTickSeries, origin_s: i64) -> Result<Vec<(i64, i64)>, IngestError> {
    let mut out = Vec::new();
    for (i, w) in s.rows.windows(2).enumerate() {
        let delta = w[1].price - w[0].price;
        let q = delta / s.tick;
        let m = q.round();
        if (q - m).abs() > 1e-9 * q.abs().max(1.0) {
            return Err(IngestError::NonTickMove {
                instrument: s.instrument.clone(),
                row: i + 1,
                delta,
            });
        }
        if m != 0.0 {
            out.push((rel_second(w[1].ts_ms, origin_s), m as i64));
        }
    }
    Ok(out)
}

/// Re-stamps the `k` changes falling in one second at `t + j/k`.
pub fn spread_subsecond(changes: &[(i64, i64)]) -> Vec<Change> {
    let mut out = Vec::with_capacity(changes.len());
    let mut i = 0;
    while i < changes.len() {
        let sec = changes[i].0;
        let mut j = i;
        while j < changes.len() && changes[j].0 == sec {
            j += 1;
        }
        let k = (j - i) as f64;
        for (n, c) in changes[i..j].iter().enumerate() {
            out.push(Change {
                time: sec as f64 + n as f64 / k,
                slot: 1.0 / k,
                ticks: c.1,
            });
        }
        i = j;
    }
    out
}

/// Unit-tick marks for one asset; an `m`-tick move becomes `m` marks spread
/// evenly over its slot.
pub fn to_events(asset: usize, changes: &[Change]) -> Vec<Event> {
    let mut out = Vec::new();
    for c in changes {
        let m = c.ticks.unsigned_abs();
        let mark = Mark::new(asset, c.ticks > 0);
        for i in 0..m {
            out.push(Event {
                time: c.time + c.slot * i as f64 / m as f64,
                mark,
            });
        }
    }
    out
}

/// Merges two per-asset event lists; on an exact tie the second asset's
/// event moves `eps` later. Returns the merged list and the number of ties.
pub fn deconflict(a: &[Event], b: &[Event], eps: f64) -> Result<(Vec<Event>, usize), IngestError> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ties = 0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => {
                if x.time == y.time {
                    ties += 1;
                    out.push(*x);
                    out.push(Event {
                        time: y.time + eps,
                        mark: y.mark,
                    });
                    i += 1;
                    j += 1;
                    continue;
                }
                x.time < y.time
            }
            (Some(_), None) => true,
            _ => false,
        };
        if take_a {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    for w in out.windows(2) {
        if !(w[1].time > w[0].time) {
            return Err(IngestError::ResidualTie { time: w[1].time });
        }
    }
    Ok((out, ties))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub adjust: AdjustConfig,
    pub epsilon: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            adjust: AdjustConfig::default(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// What the ingest did, for the sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub origin_s: i64,
    pub horizon: f64,
    pub windows: Vec<AdjustWindow>,
    pub counts: [usize; 4],
    /// Total whole-tick movement per asset in the raw series.
    pub raw_moves: [u64; 2],
    pub ties_broken: usize,
    pub dropped_rows: [usize; 2],
}

/// Full ingest of one trading window.
pub fn ingest_pair(
    x: &RawTickSeries,
    y: &RawTickSeries,
    cfg: &IngestConfig,
) -> Result<(EventStream, IngestReport), IngestError> {
    let adj = level_adjustment(x, y, &cfg.adjust)?;
    let origin = adj.origin_s;
    let mut per_asset = Vec::with_capacity(2);
    let mut raw_moves = [0u64; 2];
    for (a, s) in [x, y].iter().enumerate() {
        let ch = tick_changes(s, origin)?;
        raw_moves[a] = ch.iter().map(|c| c.1.unsigned_abs()).sum();
        per_asset.push(to_events(a, &spread_subsecond(&ch)));
    }
    let (events, ties) = deconflict(&per_asset[0], &per_asset[1], cfg.epsilon)?;
    let last_ms = x.rows.last().unwrap().ts_ms.max(y.rows.last().unwrap().ts_ms);
    let mut horizon = (rel_second(last_ms, origin) + 1) as f64;
    if let Some(e) = events.last() {
        horizon = horizon.max(e.time);
    }
    let t = adj.target;
    let r0 = adj.windows[0].ratio;
    let mut init = [x.rows[0].price, y.rows[0].price];
    let mut tick = [x.tick, y.tick];
    init[t] *= r0;
    tick[t] *= r0;
    let rescales = adj
        .windows
        .windows(2)
        .map(|w| Rescale {
            time: w[1].start,
            asset: t,
            factor: w[1].ratio / w[0].ratio,
        })
        .collect();
    let stream = EventStream {
        events,
        horizon,
        init1: init[0],
        init2: init[1],
        tick1: tick[0],
        tick2: tick[1],
        rescales,
    };
    stream.validate()?;
    let report = IngestReport {
        origin_s: origin,
        horizon,
        windows: adj.windows.clone(),
        counts: stream.counts(),
        raw_moves,
        ties_broken: ties,
        dropped_rows: [0, 0],
    };
    Ok((stream, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(name: &str, tick: f64, rows: &[(i64, f64)]) -> RawTickSeries {
        RawTickSeries::new(
            name,
            tick,
            rows.iter().map(|&(ts_ms, price)| TickRow { ts_ms, price }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn spread_examples() {
        let one = spread_subsecond(&[(3, 1)]);
        assert_eq!(one[0].time, 3.0);
        let four = spread_subsecond(&[(10, 1), (10, -1), (10, 1), (10, 1)]);
        let t: Vec<f64> = four.iter().map(|c| c.time).collect();
        assert_eq!(t, vec![10.0, 10.25, 10.5, 10.75]);
        let three = spread_subsecond(&[(5, 1), (5, 1), (5, 1)]);
        assert_eq!(three[1].time, 5.0 + 1.0 / 3.0);
        assert_eq!(three[2].time, 5.0 + 2.0 / 3.0);
    }

    #[test]
    fn marks_from_price_path() {
        let s = series("a", 1.0, &[(0, 0.0), (1000, 1.0), (2000, 2.0), (3000, 1.0), (4000, 1.0)]);
        let ch = tick_changes(&s, -1).unwrap();
        let ev = to_events(0, &spread_subsecond(&ch));
        let marks: Vec<Mark> = ev.iter().map(|e| e.mark).collect();
        assert_eq!(marks, vec![Mark::Up1, Mark::Up1, Mark::Down1]);
    }

    #[test]
    fn multi_tick_split() {
        let s = series("a", 0.5, &[(0, 10.0), (2500, 11.5)]);
        let ev = to_events(1, &spread_subsecond(&tick_changes(&s, 0).unwrap()));
        assert_eq!(ev.len(), 3);
        assert!(ev.iter().all(|e| e.mark == Mark::Up2));
        assert_eq!(ev[0].time, 2.0);
        assert!((ev[2].time - (2.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn non_tick_move_rejected() {
        let s = series("a", 0.01, &[(0, 31.0), (1000, 31.015)]);
        assert!(matches!(tick_changes(&s, 0), Err(IngestError::NonTickMove { .. })));
        // decimal noise on a genuine tick move is tolerated
        let ok = series("a", 0.01, &[(0, 31.47), (1000, 31.46)]);
        assert_eq!(tick_changes(&ok, 0).unwrap(), vec![(1, -1)]);
    }

    #[test]
    fn deconflict_tie_and_no_tie() {
        let a = [Event { time: 7.0, mark: Mark::Up1 }];
        let b = [Event { time: 7.0, mark: Mark::Down2 }, Event { time: 9.0, mark: Mark::Up2 }];
        let (m, ties) = deconflict(&a, &b, 1e-6).unwrap();
        assert_eq!(ties, 1);
        assert_eq!(m[0].time, 7.0);
        assert_eq!(m[1].time, 7.000001);
        let c = [Event { time: 8.0, mark: Mark::Up1 }];
        let (m, ties) = deconflict(&c, &b[1..], 1e-6).unwrap();
        assert_eq!(ties, 0);
        assert_eq!(m.iter().map(|e| e.time).collect::<Vec<_>>(), vec![8.0, 9.0]);
    }

    #[test]
    fn residual_tie_detected() {
        let a = [Event { time: 1.0, mark: Mark::Up1 }, Event { time: 1.5, mark: Mark::Up1 }];
        let b = [Event { time: 1.0, mark: Mark::Up2 }];
        assert!(matches!(deconflict(&a, &b, 0.5), Err(IngestError::ResidualTie { .. })));
    }

    #[test]
    fn unit_conversion_example() {
        // 31 dollars per barrel against 1.07 dollars per gallon × 42
        let x = series("cl", 0.01, &[(0, 31.0), (60_000, 31.0)]);
        let y = series("rb", 0.0042, &[(0, 44.94), (60_000, 44.94)]);
        let adj = adjust_levels(&x, &y, &AdjustConfig::default()).unwrap();
        assert!(adj.c2.iter().all(|r| (r.price - 31.0).abs() < 1e-12));
        assert_eq!(adj.c1[0].price, 31.0);
    }

    #[test]
    fn equal_series_unchanged() {
        let rows = [(0, 5.0), (1000, 6.0), (700_000, 4.0)];
        let x = series("x", 1.0, &rows);
        let y = series("y", 1.0, &rows);
        let adj = adjust_levels(&x, &y, &AdjustConfig::default()).unwrap();
        assert_eq!(adj.c2, x.rows);
    }

    #[test]
    fn per_window_means_match_and_idempotent() {
        let x = series("x", 1.0, &[(0, 10.0), (30_000, 12.0), (700_000, 20.0), (800_000, 22.0)]);
        let y = series("y", 1.0, &[(10_000, 5.0), (20_000, 6.0), (650_000, 2.0), (900_000, 3.0)]);
        let cfg = AdjustConfig::default();
        let adj = adjust_levels(&x, &y, &cfg).unwrap();
        assert_eq!(adj.adjustment.windows.len(), 2);
        for w in &adj.adjustment.windows {
            let origin = adj.adjustment.origin_s;
            let inside = |r: &&TickRow| {
                let t = rel_second(r.ts_ms, origin) as f64;
                t >= w.start && t < w.end
            };
            let m1: Vec<f64> = adj.c1.iter().filter(inside).map(|r| r.price).collect();
            let m2: Vec<f64> = adj.c2.iter().filter(inside).map(|r| r.price).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean(&m1) - mean(&m2)).abs() < 1e-12);
        }
        let again = adjust_levels(
            &RawTickSeries::new("x", 1.0, adj.c1.clone()).unwrap(),
            &RawTickSeries::new("y", 1.0, adj.c2.clone()).unwrap(),
            &cfg,
        )
        .unwrap();
        for (a, b) in again.c2.iter().zip(&adj.c2) {
            assert!((a.price - b.price).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_window_merged_forward_and_backward() {
        // y is missing from the first window: merged into the second
        let x = series("x", 1.0, &[(0, 10.0), (700_000, 10.0), (1_300_000, 10.0)]);
        let y = series("y", 1.0, &[(700_000, 5.0), (1_900_000, 5.0)]);
        let adj = level_adjustment(&x, &y, &AdjustConfig::default()).unwrap();
        assert_eq!(adj.windows.len(), 2);
        assert_eq!((adj.windows[0].start, adj.windows[0].end), (0.0, 1200.0));
        assert_eq!((adj.windows[0].n1, adj.windows[0].n2), (2, 1));
        // trailing window without y: merged into the previous one
        let x = series("x", 1.0, &[(0, 10.0), (1_300_000, 10.0)]);
        let y = series("y", 1.0, &[(0, 5.0)]);
        let adj = level_adjustment(&x, &y, &AdjustConfig::default()).unwrap();
        assert_eq!(adj.windows.len(), 1);
        assert_eq!((adj.windows[0].n1, adj.windows[0].n2), (2, 1));
        assert_eq!(adj.windows[0].ratio, 2.0);
    }

    #[test]
    fn stream_reproduces_adjusted_prices() {
        let x = series("x", 1.0, &[(0, 10.0), (1_500, 11.0), (650_000, 13.0), (700_000, 12.0)]);
        let y = series("y", 0.5, &[(100, 5.0), (1_200, 5.5), (1_900, 6.0), (660_000, 5.0)]);
        let (s, rep) = ingest_pair(&x, &y, &IngestConfig::default()).unwrap();
        assert_eq!(rep.raw_moves, [4, 4]);
        assert_eq!(s.len(), 8);
        let adj = adjust_levels(&x, &y, &AdjustConfig::default()).unwrap();
        let path = crate::sim::price_path(&s);
        let last = adj.c2.last().unwrap();
        let want = last.price;
        assert!((path.final_values()[1] - want).abs() < 1e-9, "{:?} {want}", path.final_values());
        assert_eq!(path.final_values()[0], 12.0);
    }

    #[test]
    fn csv_reader_drops_bad_prices() {
        let data = "timestamp_ms,price\n0,10\n1000,-1\n2000,11\n";
        let (s, dropped) = RawTickSeries::read_csv(data.as_bytes(), "x", 1.0).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(s.rows.len(), 2);
        assert!(RawTickSeries::read_csv("timestamp_ms,price\n0,abc\n".as_bytes(), "x", 1.0).is_err());
    }
}
