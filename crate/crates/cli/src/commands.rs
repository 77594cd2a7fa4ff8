use crate::manifest::RunManifest;
use crate::{CliError, CliResult, CovarArgs, EstimateArgs, IngestArgs, PipelineArgs, RiskArgs, SimulateArgs, Table1Args};
use hawkesflock::covar::{returns, rolling_covar, CovarConfig, CovarError, CovarRow, Family, MarginalKind};
use hawkesflock::diagnostics::rescaling_ks;
use hawkesflock::estimate::{fit, FitOptions, FitResult, Model, PeriodAverage};
use hawkesflock::ingest::{ingest_pair, AdjustConfig, IngestConfig, RawTickSeries};
use hawkesflock::io::{
    read_json, read_jsonl, read_params, read_stream, write_json, write_jsonl, write_stream, LabelledFit, Sidecar,
};
use hawkesflock::model::{FlockParams, PARAM_NAMES};
use hawkesflock::pipeline::{run_pipeline, PipelineConfig, PipelineError, RiskRow};
use hawkesflock::recovery::{horizon_for_events, recovery_study, to_rows, BENCHMARK, TABLE_ROWS};
use hawkesflock::risk::risk_summary;
use hawkesflock::sim::{price_path, simulate_batch, SimConfig, SimError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "HAWKESFLOCK_SEED";
const DEFAULT_SEED: u64 = 42;

/// Flag, then the environment override, then the config file, then 42.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("{SEED_ENV}={v:?} is not an unsigned integer")));
    }
    Ok(file.unwrap_or(DEFAULT_SEED))
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::runtime("csv", e)
}

// ------------------------------------------------------------------ simulate

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    params: Option<FlockParams>,
    params_file: Option<PathBuf>,
    paths: Option<u64>,
    horizon: Option<f64>,
    seed: Option<u64>,
    burnin: Option<f64>,
    max_events: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SimulateEffective {
    params: FlockParams,
    paths: u64,
    horizon: f64,
    seed: u64,
    burnin: f64,
    max_events: usize,
}

fn resolve_params(flag: Option<&Path>, file_path: Option<&Path>, inline: Option<FlockParams>) -> CliResult<FlockParams> {
    let p = match (flag, file_path, inline) {
        (Some(p), _, _) | (None, Some(p), _) => read_params(p)?,
        (None, None, Some(p)) => p,
        (None, None, None) => return Err(CliError::config("no parameters: pass --params or set params in --config")),
    };
    p.validated().map_err(CliError::config)?;
    Ok(p)
}

pub fn simulate(a: SimulateArgs) -> CliResult<u8> {
    let file: SimulateFile = read_config(a.config.as_deref())?;
    let params = resolve_params(a.params.as_deref(), file.params_file.as_deref(), file.params)?;
    let paths = a.paths.or(file.paths).unwrap_or(1);
    if paths == 0 {
        return Err(CliError::config("paths must be at least 1"));
    }
    let horizon = a
        .horizon
        .or(file.horizon)
        .ok_or_else(|| CliError::config("no horizon: pass --horizon or set it in --config"))?;
    let mut cfg = SimConfig::new(params, horizon, resolve_seed(a.seed, file.seed)?);
    cfg.burnin = a.burnin.or(file.burnin);
    if let Some(m) = a.max_events.or(file.max_events) {
        cfg.max_events = m;
    }
    cfg.validate().map_err(CliError::config)?;
    let eff = SimulateEffective {
        params,
        paths,
        horizon,
        seed: cfg.seed,
        burnin: cfg.burnin(),
        max_events: cfg.max_events,
    };

    std::fs::create_dir_all(&a.out)?;
    let mut man = RunManifest::new("simulate", &eff);
    man.seed = Some(cfg.seed);
    if let Some(p) = a.params.as_deref().or(file.params_file.as_deref()) {
        man.input(p)?;
    }
    if let Some(c) = &a.config {
        man.input(c)?;
    }
    let mut explosive = 0;
    for (i, r) in simulate_batch(&cfg, paths as usize).into_iter().enumerate() {
        match r {
            Ok(stream) => {
                let path = a.out.join(format!("path_{i:04}.csv"));
                let side = Sidecar::of(&stream)
                    .with_info("seed", cfg.seed)?
                    .with_info("path_index", i)?
                    .with_info("params", params)?;
                for f in write_stream(&path, &stream, &side)? {
                    man.output(&f)?;
                }
            }
            Err(e) => {
                if matches!(e, SimError::Explosive { .. }) {
                    explosive += 1;
                }
                man.record(json!({ "path": i, "error": "explosive regime", "message": e.to_string() }));
            }
        }
    }
    man.finish(&a.out.join("manifest.json"))?;
    Ok(if explosive > 0 { 3 } else { 0 })
}

// -------------------------------------------------------------------- table1

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Table1File {
    column: Option<u8>,
    params: Option<FlockParams>,
    params_file: Option<PathBuf>,
    paths: Option<u64>,
    events: Option<f64>,
    horizon: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct TableRow {
    name: &'static str,
    truth: f64,
    mean: f64,
    std: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Table1Report {
    column: Option<u8>,
    paths: u64,
    fitted: usize,
    horizon: f64,
    mean_events: f64,
    seed: u64,
    rows: Vec<TableRow>,
    failed: Vec<String>,
    all_pass: bool,
}

pub fn table1(a: Table1Args) -> CliResult<u8> {
    let file: Table1File = read_config(a.config.as_deref())?;
    let column = if a.params.is_some() { None } else { a.column.or(file.column) };
    let truth = match column {
        Some(c @ 1..=3) => BENCHMARK[c as usize - 1].params(),
        Some(c) => return Err(CliError::config(format!("column must be 1, 2 or 3, got {c}"))),
        None => resolve_params(a.params.as_deref(), file.params_file.as_deref(), file.params)?,
    };
    let paths = a.paths.or(file.paths).unwrap_or(100);
    if paths == 0 {
        return Err(CliError::config("paths must be at least 1"));
    }
    let seed = resolve_seed(a.seed, file.seed)?;
    let horizon = match (a.horizon, a.events) {
        (Some(h), _) => h,
        (None, Some(n)) => events_horizon(&truth, n)?,
        (None, None) => match file.horizon {
            Some(h) => h,
            None => events_horizon(&truth, file.events.unwrap_or(1e4))?,
        },
    };
    let rep = recovery_study(&truth, paths as usize, horizon, seed, &FitOptions::default()).map_err(CliError::config)?;

    let rows: Vec<TableRow> = match column {
        Some(c) => rep
            .rows(&BENCHMARK[c as usize - 1])
            .into_iter()
            .map(|(name, truth, mean, std, tolerance, pass)| TableRow {
                name,
                truth,
                mean,
                std,
                tolerance,
                pass,
            })
            .collect(),
        None => {
            // no reference standard deviations: three standard errors of the mean
            let (t, m, s) = (
                to_rows(&rep.truth.to_array()),
                to_rows(&rep.mean.to_array()),
                to_rows(&rep.std.to_array()),
            );
            TABLE_ROWS
                .iter()
                .enumerate()
                .map(|(r, &(name, _))| {
                    let tol = 3.0 * s[r] / (rep.fitted.max(1) as f64).sqrt();
                    TableRow {
                        name,
                        truth: t[r],
                        mean: m[r],
                        std: s[r],
                        tolerance: tol,
                        pass: (m[r] - t[r]).abs() <= tol,
                    }
                })
                .collect()
        }
    };
    println!("{:<9}{:>9}{:>9}{:>9}{:>9}", "", "True", "Mean", "Std.", "tol");
    for r in &rows {
        println!(
            "{:<9}{:>9.4}{:>9.4}{:>9.4}{:>9.4}  {}",
            r.name,
            r.truth,
            r.mean,
            r.std,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "paths {}/{} fitted, T = {:.1}, mean events {:.0}",
        rep.fitted, paths, horizon, rep.mean_events
    );
    let all_pass = rows.iter().all(|r| r.pass) && rep.fitted == paths as usize;
    let report = Table1Report {
        column,
        paths,
        fitted: rep.fitted,
        horizon,
        mean_events: rep.mean_events,
        seed,
        rows,
        failed: rep.failed,
        all_pass,
    };
    if let Some(out) = &a.out {
        write_json(out, &report)?;
        let mut man = RunManifest::new("table1", json!({ "column": column, "truth": truth, "paths": paths, "horizon": horizon }));
        man.seed = Some(seed);
        if let Some(p) = &a.params {
            man.input(p)?;
        }
        man.output(out)?;
        man.finish(&manifest_path(out))?;
    }
    Ok(0)
}

fn events_horizon(p: &FlockParams, events: f64) -> CliResult<f64> {
    horizon_for_events(p, events)
        .ok_or_else(|| CliError::config("parameters are not stationary; pass --horizon explicitly"))
}

// -------------------------------------------------------------------- ingest

fn read_ticks(path: &Path, name: &str, tick: f64) -> CliResult<(RawTickSeries, usize)> {
    let f = File::open(path).map_err(|e| CliError::runtime("io", format!("{}: {e}", path.display())))?;
    RawTickSeries::read_csv(BufReader::new(f), name, tick)
        .map_err(|e| CliError::runtime("ingest", format!("{}: {e}", path.display())))
}

pub fn ingest(a: IngestArgs) -> CliResult<u8> {
    let cfg = IngestConfig {
        adjust: AdjustConfig {
            window: a.window,
            target: a.target as usize - 1,
        },
        epsilon: a.epsilon,
    };
    if !(a.tick1 > 0.0 && a.tick2 > 0.0) {
        return Err(CliError::config("tick sizes must be positive"));
    }
    let (x, d1) = read_ticks(&a.first, "1", a.tick1)?;
    let (y, d2) = read_ticks(&a.second, "2", a.tick2)?;
    let (stream, mut report) = ingest_pair(&x, &y, &cfg).map_err(|e| CliError::runtime("ingest", e))?;
    report.dropped_rows = [d1, d2];
    let side = Sidecar::of(&stream).with_info("ingest", &report)?;
    let mut man = RunManifest::new("ingest", json!({ "config": cfg, "tick1": a.tick1, "tick2": a.tick2 }));
    man.input(&a.first)?;
    man.input(&a.second)?;
    for f in write_stream(&a.out, &stream, &side)? {
        man.output(&f)?;
    }
    man.finish(&manifest_path(&a.out))?;
    Ok(0)
}

// ------------------------------------------------------------------ estimate

fn label_of(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

pub fn estimate(a: EstimateArgs) -> CliResult<u8> {
    let mut opts = FitOptions::default();
    if let Some(m) = a.max_iter {
        opts.max_iter = m;
    }
    if let Some(f) = a.floor_events {
        opts.floor_events = f;
    }
    let init = a.init.as_deref().map(read_params).transpose()?;
    let jsonl = a.out.extension().is_some_and(|e| e == "jsonl");
    if !jsonl && a.events.len() != 1 {
        return Err(CliError::config("several inputs need a .jsonl output"));
    }
    let mut man = RunManifest::new("estimate", json!({ "model": a.model, "options": opts, "init": init }));
    let mut inputs: Vec<(PathBuf, _)> = Vec::new();
    for p in &a.events {
        let s = read_stream(p)?.0;
        man.input(p)?;
        man.input(&hawkesflock::io::sidecar_path(p))?;
        inputs.push((p.clone(), s));
    }
    if let Some(p) = &a.init {
        man.input(p)?;
    }
    let results: Vec<(String, Result<(FitResult, [f64; 4]), String>)> = inputs
        .par_iter()
        .map(|(p, s)| {
            let r = fit(s, a.model, init.as_ref(), &opts)
                .map(|f| {
                    let ks = rescaling_ks(s, &f.params).map(|t| t.p_value);
                    (f, ks)
                })
                .map_err(|e| e.to_string());
            (label_of(p), r)
        })
        .collect();
    let mut fits = Vec::new();
    for (label, r) in results {
        match r {
            Ok((f, ks)) => {
                man.record(json!({ "label": label, "rescaling_ks_p": ks, "converged": f.converged }));
                fits.push(LabelledFit { label, result: f });
            }
            Err(e) => man.record(json!({ "label": label, "error": e })),
        }
    }
    if jsonl {
        write_jsonl(BufWriter::new(File::create(&a.out)?), &fits)?;
    } else {
        let Some(f) = fits.pop() else {
            let msg = man.records.last().cloned().unwrap_or_default();
            return Err(CliError::runtime("fit", msg["error"].as_str().unwrap_or("fit failed")));
        };
        write_json(&a.out, &f.result)?;
    }
    man.output(&a.out)?;
    man.finish(&manifest_path(&a.out))?;
    Ok(0)
}

// ---------------------------------------------------------------------- risk

fn read_fits(path: &Path) -> CliResult<Vec<LabelledFit>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let f = File::open(path).map_err(|e| CliError::runtime("io", format!("{}: {e}", path.display())))?;
        Ok(read_jsonl(f)?)
    } else {
        let r: FitResult = read_json(path)?;
        Ok(vec![LabelledFit {
            label: label_of(path),
            result: r,
        }])
    }
}

fn write_risk_csv(path: &Path, rows: &[RiskRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["date", "rho", "q11", "q22", "q12", "q21", "p"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.date.clone(),
            r.rho.to_string(),
            r.q11.to_string(),
            r.q22.to_string(),
            r.q12.to_string(),
            r.q21.to_string(),
            r.p.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn risk(a: RiskArgs) -> CliResult<u8> {
    let mut fits = read_fits(&a.fits)?;
    fits.sort_by(|x, y| x.label.cmp(&y.label));
    let mut man = RunManifest::new("risk", json!({ "events_dir": a.events_dir }));
    man.input(&a.fits)?;
    let mut rows = Vec::new();
    for f in &fits {
        let stream = match &a.events_dir {
            Some(d) => {
                let p = d.join(format!("{}.csv", f.label));
                if p.exists() {
                    man.input(&p)?;
                    Some(read_stream(&p)?.0)
                } else {
                    man.record(json!({ "label": f.label, "note": "no event file, p = 0.5" }));
                    None
                }
            }
            None => None,
        };
        let path = stream.as_ref().map(price_path);
        rows.push(RiskRow::of(&f.label, &risk_summary(&f.result.params, path.as_ref())));
    }
    write_risk_csv(&a.out, &rows)?;
    man.output(&a.out)?;
    man.finish(&manifest_path(&a.out))?;
    Ok(0)
}

// --------------------------------------------------------------------- covar

#[derive(Debug, Deserialize)]
struct CloseRow {
    date: String,
    close1: f64,
    close2: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_covar_csv(
    path: &Path,
    rows: &[(String, Result<CovarRow, CovarError>)],
    man: &mut RunManifest,
) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "date", "var1", "var2", "covar12", "covar21", "dcovar12", "dcovar21", "family", "theta", "nu", "aic", "bic",
    ])
    .map_err(csv_err)?;
    for (date, r) in rows {
        match r {
            Ok(r) => w
                .write_record([
                    date.clone(),
                    r.var1.to_string(),
                    r.var2.to_string(),
                    r.covar12.covar.to_string(),
                    r.covar21.covar.to_string(),
                    r.dcovar12().to_string(),
                    r.dcovar21().to_string(),
                    r.spec.family.to_string(),
                    r.spec.theta.to_string(),
                    opt(r.spec.nu),
                    r.aic.to_string(),
                    r.bic.to_string(),
                ])
                .map_err(csv_err)?,
            Err(e) => man.record(json!({ "date": date, "error": e.to_string() })),
        }
    }
    w.flush()?;
    Ok(())
}

pub fn covar(a: CovarArgs) -> CliResult<u8> {
    let cfg = CovarConfig {
        alpha: a.alpha,
        beta: a.beta,
        window: a.window,
        families: a.families.clone(),
        marginal: a.marginal,
    };
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0 && cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(CliError::config("alpha and beta must lie in (0, 1)"));
    }
    if cfg.families.is_empty() {
        return Err(CliError::config("no copula families"));
    }
    let f = File::open(&a.input).map_err(|e| CliError::runtime("io", format!("{}: {e}", a.input.display())))?;
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(f));
    let rows: Vec<CloseRow> = rd.deserialize().collect::<Result<_, _>>().map_err(csv_err)?;
    let closes = |k: usize| -> Vec<f64> { rows.iter().map(|r| if k == 0 { r.close1 } else { r.close2 }).collect() };
    let err = |e: CovarError| CliError::runtime("covar", e);
    let r1 = returns(&closes(0)).map_err(err)?;
    let r2 = returns(&closes(1)).map_err(err)?;
    let dates: Vec<String> = rows[1..].iter().map(|r| r.date.clone()).collect();
    let out = rolling_covar(&dates, &r1, &r2, &cfg).map_err(err)?;
    let mut man = RunManifest::new("covar", &cfg);
    man.input(&a.input)?;
    write_covar_csv(&a.out, &out, &mut man)?;
    man.output(&a.out)?;
    man.finish(&manifest_path(&a.out))?;
    Ok(0)
}

// ------------------------------------------------------------------ pipeline

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineFile {
    tick1: Option<f64>,
    tick2: Option<f64>,
    adjust_window: Option<f64>,
    adjust_target: Option<u8>,
    epsilon: Option<f64>,
    model: Option<Model>,
    max_iter: Option<usize>,
    floor_events: Option<usize>,
    covar_alpha: Option<f64>,
    covar_beta: Option<f64>,
    covar_window: Option<usize>,
    families: Option<Vec<Family>>,
    marginal: Option<MarginalKind>,
}

fn monthly_csv(path: &Path, monthly: &[PeriodAverage]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["period".to_string(), "n".to_string()];
    header.extend(PARAM_NAMES.iter().map(|n| format!("{n}_mean")));
    header.extend(PARAM_NAMES.iter().map(|n| format!("{n}_std")));
    w.write_record(&header).map_err(csv_err)?;
    for m in monthly {
        let mut rec = vec![m.period.clone(), m.n.to_string()];
        rec.extend(m.mean.to_array().iter().map(f64::to_string));
        rec.extend(m.std.to_array().iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn pipeline(a: PipelineArgs) -> CliResult<u8> {
    let file: PipelineFile = read_config(a.config.as_deref())?;
    let mut cfg = PipelineConfig::default();
    cfg.tick1 = a.tick1.or(file.tick1).unwrap_or(cfg.tick1);
    cfg.tick2 = a.tick2.or(file.tick2).unwrap_or(cfg.tick2);
    if let Some(w) = file.adjust_window {
        cfg.ingest.adjust.window = w;
    }
    if let Some(t) = file.adjust_target {
        if !(1..=2).contains(&t) {
            return Err(CliError::config("adjust_target must be 1 or 2"));
        }
        cfg.ingest.adjust.target = t as usize - 1;
    }
    if let Some(e) = file.epsilon {
        cfg.ingest.epsilon = e;
    }
    cfg.model = a.model.or(file.model).unwrap_or(cfg.model);
    if let Some(m) = file.max_iter {
        cfg.fit.max_iter = m;
    }
    if let Some(f) = file.floor_events {
        cfg.fit.floor_events = f;
    }
    if let Some(x) = file.covar_alpha {
        cfg.covar.alpha = x;
    }
    if let Some(x) = file.covar_beta {
        cfg.covar.beta = x;
    }
    cfg.covar.window = a.covar_window.or(file.covar_window).unwrap_or(cfg.covar.window);
    if let Some(f) = file.families {
        cfg.covar.families = f;
    }
    if let Some(m) = file.marginal {
        cfg.covar.marginal = m;
    }
    if !(cfg.tick1 > 0.0 && cfg.tick2 > 0.0) {
        return Err(CliError::config("tick sizes must be positive"));
    }

    let out = run_pipeline(&a.dir, &cfg).map_err(|e| match e {
        PipelineError::NoInput(_) => CliError::runtime("no_input", e),
        other => CliError::runtime("io", other),
    })?;
    std::fs::create_dir_all(&a.out)?;
    let mut man = RunManifest::new("pipeline", &cfg);
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(&a.dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    inputs.sort();
    for p in &inputs {
        man.input(p)?;
    }
    for s in &out.skipped {
        eprintln!("{}", json!({ "skipped": s.label, "reason": s.reason }));
        man.record(json!({ "label": s.label, "skipped": s.reason }));
    }

    let days = a.out.join("days.jsonl");
    write_jsonl(BufWriter::new(File::create(&days)?), &out.days)?;
    let risk = a.out.join("risk.csv");
    write_risk_csv(&risk, &out.risk_rows())?;
    let monthly = a.out.join("monthly.csv");
    monthly_csv(&monthly, &out.monthly)?;
    let covar = a.out.join("covar.csv");
    write_covar_csv(&covar, &out.covar, &mut man)?;
    for p in [&days, &risk, &monthly, &covar] {
        man.output(p)?;
    }
    man.finish(&a.out.join("manifest.json"))?;
    Ok(0)
}
