use hawkesflock::ingest::{ingest_pair, IngestConfig, RawTickSeries, TickRow};
use hawkesflock::io::{read_stream, write_stream, Sidecar};
use hawkesflock::model::{EventStream, Mark};
use hawkesflock::recovery::BENCHMARK;
use hawkesflock::sim::{price_path, simulate, SimConfig};

const DAY0_MS: i64 = 1_700_000_000_000;

/// Tick export of a simulated pair with the `j`-th event stamped in second
/// `j + 1`, so the export is order-preserving and loses no move.
fn export(s: &EventStream, tick1: f64, tick2: f64, base: f64) -> (RawTickSeries, RawTickSeries) {
    let path = price_path(s);
    let start = |c: f64, tick: f64| vec![TickRow { ts_ms: DAY0_MS, price: base + c * tick }];
    let mut rows = [start(s.init1, tick1), start(s.init2, tick2)];
    for (j, e) in s.events.iter().enumerate() {
        let a = e.mark.asset();
        let c = path.at(e.time)[a];
        let tick = if a == 0 { tick1 } else { tick2 };
        rows[a].push(TickRow {
            ts_ms: DAY0_MS + 1000 * (j as i64 + 1) + 250,
            price: base + c * tick,
        });
    }
    let [r1, r2] = rows;
    (
        RawTickSeries::new("one", tick1, r1).unwrap(),
        RawTickSeries::new("two", tick2, r2).unwrap(),
    )
}

fn marks(s: &EventStream) -> Vec<Mark> {
    s.events.iter().map(|e| e.mark).collect()
}

#[test]
fn ingest_of_price_path_reproduces_marks() {
    for (i, col) in BENCHMARK.iter().enumerate() {
        let s = simulate(&SimConfig::new(col.params(), 500.0, 40 + i as u64)).unwrap();
        assert!(s.len() > 100);
        let (x, y) = export(&s, 0.25, 0.01, 50.0);
        let (back, report) = ingest_pair(&x, &y, &IngestConfig::default()).unwrap();
        assert_eq!(marks(&back), marks(&s), "column {i}");
        assert_eq!(report.ties_broken, 0);
        assert_eq!(back.counts(), s.counts());
    }
}

#[test]
fn ingested_stream_survives_file_roundtrip() {
    let s = simulate(&SimConfig::new(BENCHMARK[2].params(), 200.0, 9)).unwrap();
    let (x, y) = export(&s, 0.5, 0.5, 20.0);
    let (ingested, report) = ingest_pair(&x, &y, &IngestConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("day.csv");
    let side = Sidecar::of(&ingested).with_info("ingest", &report).unwrap();
    write_stream(&p, &ingested, &side).unwrap();
    let (back, _) = read_stream(&p).unwrap();
    assert_eq!(back, ingested);
}
