//! End-to-end runs: data, offline identification, online filtering,
//! metrics and plot data.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, HorizonModel, BUNDLE_VERSION};
use crate::config::{DataSource, RunConfig, RunMode};
use crate::data::{fmt_f64, ExperimentData};
use crate::error::{Error, Result};
use crate::filter::{global_filter_step, local_filter_step, GlobalPredictorBank, LocalBank, LocalFilterReport};
use crate::history::History;
use crate::identify::{
    assemble_regressors_common, build_fps, estimate_lambda, identify_min_global_bound_predictor, reduce_fps_with,
};
use crate::kalman::{dare_steady_gain, kf_step, StateSpaceModel};
use crate::lp::{lp_solve_count, with_feas_tol};
use crate::metrics::{compute_metrics, FilterMetrics};
use crate::sim::{benchmark_plant, generate_benchmark, zoh_discretize, BenchmarkSpec, BENCHMARK_SAMPLE_TIME};

/// Generated benchmark data or the configured CSV file.
pub fn load_data(cfg: &RunConfig) -> Result<ExperimentData> {
    match &cfg.source {
        DataSource::Generate {
            scenario,
            samples,
            seed,
        } => generate_benchmark(&BenchmarkSpec::new(*scenario, *samples, *seed)),
        DataSource::Csv(path) => ExperimentData::load(path),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyParams {
    pub order: usize,
    pub max_horizon: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub d_bar: f64,
    pub feas_tol: f64,
    pub slack_tol: f64,
    pub with_global: bool,
    pub workers: usize,
}

impl IdentifyParams {
    pub fn from_config(cfg: &RunConfig, max_horizon: usize) -> Self {
        Self {
            order: cfg.order,
            max_horizon,
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            gamma_bar: cfg.gamma_bar,
            d_bar: cfg.resolved_d_bar(),
            feas_tol: cfg.feas_tol,
            slack_tol: cfg.slack_tol,
            with_global: cfg.mode.global(),
            workers: cfg.workers,
        }
    }
}

fn identify_horizon(data: &ExperimentData, params: &IdentifyParams, p: usize) -> Result<HorizonModel> {
    with_feas_tol(params.feas_tol, || {
        let ds = assemble_regressors_common(data, params.order, p, params.max_horizon)?;
        let lambda = estimate_lambda(&ds, params.d_bar, params.alpha)?;
        let full = build_fps(&ds, &lambda)?;
        let rows_before = full.polytope.num_constraints();
        let fps = reduce_fps_with(&full, params.slack_tol)?;
        drop(full);
        let global = if params.with_global {
            Some(identify_min_global_bound_predictor(&fps, &ds, params.gamma_bar)?)
        } else {
            None
        };
        info!(
            "horizon {p}: lambda {:.6}, {rows_before} -> {} rows{}",
            lambda.lambda,
            fps.polytope.num_constraints(),
            global.as_ref().map_or(String::new(), |g| format!(", tau_bar {:.6}", g.tau_bar))
        );
        Ok(HorizonModel {
            order: params.order,
            input_dim: data.input_dim(),
            horizon: p,
            alpha: params.alpha,
            gamma: params.gamma,
            gamma_bar: params.gamma_bar,
            d_bar: params.d_bar,
            lambda: lambda.lambda,
            lp_optimum: lambda.lp_optimum,
            rows_before,
            fps: fps.polytope,
            theta_hat: global.as_ref().map(|g| g.theta_hat.clone()),
            tau_bar: global.as_ref().map(|g| g.tau_bar),
            mismatch: global.as_ref().map(|g| g.mismatch),
        })
    })
}

/// Horizons `1..=max_horizon` on a common set of targets, spread over
/// `params.workers` threads.
pub fn identify_bank(data: &ExperimentData, params: &IdentifyParams, config_hash: &str) -> Result<Bundle> {
    if params.max_horizon == 0 {
        return Err(Error::InvalidInput("max_horizon must be at least 1".into()));
    }
    let workers = params.workers.clamp(1, params.max_horizon);
    let mut slots: Vec<Option<Result<HorizonModel>>> = (0..params.max_horizon).map(|_| None).collect();
    if workers == 1 {
        for p in 1..=params.max_horizon {
            slots[p - 1] = Some(identify_horizon(data, params, p));
        }
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    s.spawn(move || {
                        (1..=params.max_horizon)
                            .skip(w)
                            .step_by(workers)
                            .map(|p| (p, identify_horizon(data, params, p)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (p, r) in h.join().expect("identification worker panicked") {
                    slots[p - 1] = Some(r);
                }
            }
        });
    }
    let horizons = slots
        .into_iter()
        .map(|s| s.expect("every horizon is assigned"))
        .collect::<Result<Vec<_>>>()?;
    let samples = data.len() - (params.max_horizon + params.order - 1);
    Ok(Bundle {
        version: BUNDLE_VERSION,
        config_hash: config_hash.to_string(),
        order: params.order,
        input_dim: data.input_dim(),
        d_bar: params.d_bar,
        sample_time: data.sample_time,
        samples,
        horizons,
    })
}

/// Per-sample wall-clock statistics in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub samples: usize,
    pub lp_solves: u64,
}

impl TimingStats {
    fn from_samples(times: &[f64], lp_solves: u64) -> Self {
        let n = times.len().max(1) as f64;
        Self {
            min: times.iter().copied().fold(f64::INFINITY, f64::min),
            max: times.iter().copied().fold(0.0, f64::max),
            avg: times.iter().sum::<f64>() / n,
            samples: times.len(),
            lp_solves,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Local,
    Global,
}

impl FilterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Local => "local",
            FilterKind::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub kind: FilterKind,
    pub pbar: usize,
    pub reports: Vec<LocalFilterReport>,
    pub timing: TimingStats,
}

impl FilterTrace {
    pub fn estimates(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.estimate).collect()
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.bound).collect()
    }

    /// Fraction of samples whose true output lies in the reported interval.
    pub fn interval_containment(&self, data: &ExperimentData) -> f64 {
        let inside = self
            .reports
            .iter()
            .filter(|r| r.interval.contains(data.true_outputs[r.time_index]))
            .count();
        inside as f64 / self.reports.len().max(1) as f64
    }
}

/// First sample with a full regressor for every horizon up to `pbar`.
pub fn evaluation_start(order: usize, pbar: usize) -> usize {
    pbar + order - 1
}

fn run_stream(
    data: &ExperimentData,
    order: usize,
    depth: usize,
    range: std::ops::Range<usize>,
    mut step: impl FnMut(&History, usize) -> Result<LocalFilterReport>,
) -> Result<(Vec<LocalFilterReport>, TimingStats)> {
    if range.start < evaluation_start(order, depth) || range.end > data.len() {
        return Err(Error::InvalidInput(format!(
            "evaluation range {range:?} needs samples {}..{}",
            evaluation_start(order, depth),
            data.len()
        )));
    }
    let mut history = History::new(order, data.input_dim(), depth);
    let mut reports = Vec::with_capacity(range.len());
    let mut times = Vec::with_capacity(range.len());
    let lp_before = lp_solve_count();
    for k in 0..range.end {
        if k >= range.start {
            let t = Instant::now();
            let r = step(&history, k)?;
            times.push(t.elapsed().as_secs_f64());
            reports.push(r);
        }
        history.push(&data.inputs[k], data.measured_outputs[k])?;
    }
    Ok((reports, TimingStats::from_samples(&times, lp_solve_count() - lp_before)))
}

/// Local filter over `range`; the history is filled from sample 0.
pub fn run_local(
    bank: &mut LocalBank,
    data: &ExperimentData,
    order: usize,
    range: std::ops::Range<usize>,
) -> Result<FilterTrace> {
    let pbar = bank.max_horizon();
    let (reports, timing) = run_stream(data, order, pbar, range, |h, k| local_filter_step(bank, h, k))?;
    Ok(FilterTrace {
        kind: FilterKind::Local,
        pbar,
        reports,
        timing,
    })
}

pub fn run_global(
    bank: &GlobalPredictorBank,
    data: &ExperimentData,
    range: std::ops::Range<usize>,
) -> Result<FilterTrace> {
    let pbar = bank.max_horizon();
    let (reports, timing) = run_stream(data, bank.order, pbar, range, |h, k| global_filter_step(bank, h, k))?;
    Ok(FilterTrace {
        kind: FilterKind::Global,
        pbar,
        reports,
        timing,
    })
}

/// Exact-model Kalman baseline for the generated benchmark.
pub fn benchmark_kalman_model(cfg: &RunConfig) -> Result<Option<StateSpaceModel>> {
    let DataSource::Generate { scenario, .. } = cfg.source else {
        return Ok(None);
    };
    // states in output units, so the identity regularization stays small
    let sys = zoh_discretize(&benchmark_plant(), BENCHMARK_SAMPLE_TIME)?.observer_form();
    let noise = scenario.noise(0);
    let q = noise.process_variance();
    let reg = if q == 0.0 { 1e-8 } else { 0.0 };
    StateSpaceModel::from_discrete(&sys, q, reg, noise.measurement_variance()).map(Some)
}

/// Steady-state Kalman estimates for every sample, from a zero state.
pub fn run_kalman(model: &StateSpaceModel, data: &ExperimentData) -> Result<Vec<f64>> {
    let gain = dare_steady_gain(model, 1e-13, 1_000_000)?;
    let mut x = DVector::zeros(model.state_dim());
    let mut out = Vec::with_capacity(data.len());
    for k in 0..data.len() {
        let (next, est) = kf_step(&x, &gain.gain, model, &data.inputs[k], data.measured_outputs[k])?;
        x = next;
        out.push(est);
    }
    Ok(out)
}

/// One column of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsColumn {
    pub pbar: usize,
    pub local: Option<FilterMetrics>,
    pub global: Option<FilterMetrics>,
    pub kalman: Option<FilterMetrics>,
    pub noise: FilterMetrics,
    pub min_tau_bar: Option<f64>,
    pub local_interval_containment: Option<f64>,
    pub global_interval_containment: Option<f64>,
    pub local_timing: Option<TimingStats>,
    pub global_timing: Option<TimingStats>,
}

/// Filtering results for one `p̄` over a shared evaluation range.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub column: MetricsColumn,
    pub local: Option<FilterTrace>,
    pub global: Option<FilterTrace>,
    pub kalman: Option<Vec<f64>>,
    pub range: std::ops::Range<usize>,
}

/// Runs the filters selected by `mode` on the validation data.
/// `kalman` holds estimates aligned with `data` when available.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    bundle: &Bundle,
    data: &ExperimentData,
    mode: RunMode,
    pbar: usize,
    gamma: f64,
    cfg: &RunConfig,
    range: std::ops::Range<usize>,
    kalman: Option<&[f64]>,
) -> Result<Evaluation> {
    bundle.check(cfg.order, data.input_dim(), cfg.resolved_d_bar(), pbar)?;
    let z = &data.true_outputs[range.clone()];
    let noise = compute_metrics(z, &data.measured_outputs[range.clone()], None)?;
    let local = if mode.local() {
        let mut bank = bundle.local_bank(pbar, gamma)?;
        bank.policy = cfg.on_empty;
        Some(with_feas_tol(cfg.feas_tol, || run_local(&mut bank, data, cfg.order, range.clone()))?)
    } else {
        None
    };
    let (global, min_tau_bar) = if mode.global() {
        let mut bank = bundle.global_bank(pbar, cfg.horizons.as_deref())?;
        bank.policy = cfg.on_empty;
        let t = run_global(&bank, data, range.clone())?;
        (Some(t), Some(bank.min_tau_bar()))
    } else {
        (None, None)
    };
    let metrics = |t: &FilterTrace| compute_metrics(z, &t.estimates(), Some(&t.bounds()));
    let kalman_metrics = kalman.map(|k| compute_metrics(z, &k[range.clone()], None)).transpose()?;
    let column = MetricsColumn {
        pbar,
        local: local.as_ref().map(metrics).transpose()?,
        global: global.as_ref().map(metrics).transpose()?,
        kalman: kalman_metrics,
        noise,
        min_tau_bar,
        local_interval_containment: local.as_ref().map(|t| t.interval_containment(data)),
        global_interval_containment: global.as_ref().map(|t| t.interval_containment(data)),
        local_timing: local.as_ref().map(|t| t.timing),
        global_timing: global.as_ref().map(|t| t.timing),
    };
    Ok(Evaluation {
        column,
        local,
        global,
        kalman: kalman.map(<[f64]>::to_vec),
        range,
    })
}

fn header(hash: &str, what: &str) -> String {
    format!("# config_hash={hash}\n# {what}\n")
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, std::io::BufWriter<std::fs::File>)> {
    let path = dir.join(name);
    let f = std::fs::File::create(&path)?;
    Ok((path, std::io::BufWriter::new(f)))
}

/// `k,z_hat,tau_f,z_min,z_max,mode,trusted` plus optional per-horizon columns.
pub fn write_trace_csv(
    out: &mut impl std::io::Write,
    hash: &str,
    trace: &FilterTrace,
    per_horizon: bool,
) -> Result<()> {
    out.write_all(header(hash, &format!("{} filter, pbar={}", trace.kind.as_str(), trace.pbar)).as_bytes())?;
    let mut head = String::from("k,z_hat,tau_f,z_min,z_max,mode,trusted");
    if per_horizon {
        if let Some(r) = trace.reports.first() {
            for iv in &r.per_horizon_intervals {
                let _ = write!(head, ",zeta_min_{p},zeta_max_{p}", p = iv.horizon);
            }
        }
    }
    writeln!(out, "{head}")?;
    for r in &trace.reports {
        let mut line = format!(
            "{},{},{},{},{},{},{}",
            r.time_index,
            fmt_f64(r.estimate),
            fmt_f64(r.bound),
            fmt_f64(r.interval.lower),
            fmt_f64(r.interval.upper),
            trace.kind.as_str(),
            r.trusted
        );
        if per_horizon {
            for iv in &r.per_horizon_intervals {
                let _ = write!(line, ",{},{}", fmt_f64(iv.lower), fmt_f64(iv.upper));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "".into(), |x| format!("{x:.6}"))
}

/// Methods as rows, `p̄` values as columns.
pub fn metrics_table(columns: &[MetricsColumn]) -> String {
    type Getter = fn(&MetricsColumn) -> Option<f64>;
    let rows: [(&str, Getter); 16] = [
        ("local_rmse", |c| c.local.map(|m| m.rmse)),
        ("local_max_error", |c| c.local.map(|m| m.max_error)),
        ("global_rmse", |c| c.global.map(|m| m.rmse)),
        ("global_max_error", |c| c.global.map(|m| m.max_error)),
        ("kalman_exact_rmse", |c| c.kalman.map(|m| m.rmse)),
        ("kalman_exact_max_error", |c| c.kalman.map(|m| m.max_error)),
        ("local_tau_avg", |c| c.local.and_then(|m| m.avg_bound)),
        ("local_tau_max", |c| c.local.and_then(|m| m.max_bound)),
        ("global_tau_avg", |c| c.global.and_then(|m| m.avg_bound)),
        ("global_tau_max", |c| c.global.and_then(|m| m.max_bound)),
        ("min_tau_bar", |c| c.min_tau_bar),
        ("local_containment", |c| c.local_interval_containment),
        ("global_containment", |c| c.global_interval_containment),
        ("noise_rmse", |c| Some(c.noise.rmse)),
        ("local_step_avg_s", |c| c.local_timing.map(|t| t.avg)),
        ("global_step_avg_s", |c| c.global_timing.map(|t| t.avg)),
    ];
    let mut s = String::from("row");
    for c in columns {
        let _ = write!(s, ",pbar_{}", c.pbar);
    }
    s.push('\n');
    for (name, get) in rows {
        if columns.iter().all(|c| get(c).is_none()) {
            continue;
        }
        s.push_str(name);
        for c in columns {
            let _ = write!(s, ",{}", opt(get(c)));
        }
        s.push('\n');
    }
    s
}

/// Paths of everything a run wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutputs {
    pub files: Vec<PathBuf>,
    pub columns: Vec<MetricsColumn>,
}

/// Global bounds and sizes per horizon.
fn write_tau_bar(dir: &Path, hash: &str, bundle: &Bundle, files: &mut Vec<PathBuf>) -> Result<()> {
    let (path, mut w) = create(dir, "plot_tau_bar.csv")?;
    w.write_all(header(hash, "global bound versus horizon").as_bytes())?;
    writeln!(w, "p,lambda,tau_bar,rows_before,rows_after")?;
    for h in &bundle.horizons {
        writeln!(
            w,
            "{},{},{},{},{}",
            h.horizon,
            fmt_f64(h.lambda),
            h.tau_bar.map_or_else(String::new, fmt_f64),
            h.rows_before,
            h.fps.num_constraints()
        )?;
    }
    w.flush()?;
    files.push(path);
    Ok(())
}

fn write_evaluation(
    dir: &Path,
    hash: &str,
    data: &ExperimentData,
    ev: &Evaluation,
    cfg: &RunConfig,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let pbar = ev.column.pbar;
    for trace in ev.local.iter().chain(&ev.global) {
        let name = format!("filter_{}_p{pbar}.csv", trace.kind.as_str());
        let (path, mut w) = create(dir, &name)?;
        write_trace_csv(&mut w, hash, trace, cfg.per_horizon_columns)?;
        w.flush()?;
        files.push(path);

        let name = format!("plot_output_{}_p{pbar}.csv", trace.kind.as_str());
        let (path, mut w) = create(dir, &name)?;
        w.write_all(header(hash, "filtered output with bounds").as_bytes())?;
        writeln!(w, "k,y,z,z_hat,z_min,z_max")?;
        for r in &trace.reports {
            let k = r.time_index;
            writeln!(
                w,
                "{k},{},{},{},{},{}",
                fmt_f64(data.measured_outputs[k]),
                fmt_f64(data.true_outputs[k]),
                fmt_f64(r.estimate),
                fmt_f64(r.interval.lower),
                fmt_f64(r.interval.upper)
            )?;
        }
        w.flush()?;
        files.push(path);

        let instants: Vec<usize> = if cfg.bar_instants.is_empty() {
            let n = trace.reports.len();
            [n / 4, n / 2, 3 * n / 4]
                .iter()
                .filter_map(|&i| trace.reports.get(i).map(|r| r.time_index))
                .collect()
        } else {
            cfg.bar_instants.clone()
        };
        let name = format!("plot_bars_{}_p{pbar}.csv", trace.kind.as_str());
        let (path, mut w) = create(dir, &name)?;
        w.write_all(header(hash, "per-horizon intervals at selected instants").as_bytes())?;
        writeln!(w, "k,p,zeta_min,zeta_max,z")?;
        for r in trace.reports.iter().filter(|r| instants.contains(&r.time_index)) {
            for iv in &r.per_horizon_intervals {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.time_index,
                    iv.horizon,
                    fmt_f64(iv.lower),
                    fmt_f64(iv.upper),
                    fmt_f64(data.true_outputs[r.time_index])
                )?;
            }
        }
        w.flush()?;
        files.push(path);
    }
    if let Some(kf) = &ev.kalman {
        let (path, mut w) = create(dir, &format!("kalman_p{pbar}.csv"))?;
        w.write_all(header(hash, "exact-model Kalman baseline").as_bytes())?;
        writeln!(w, "k,z_hat")?;
        for k in ev.range.clone() {
            writeln!(w, "{k},{}", fmt_f64(kf[k]))?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(())
}

fn write_summary(dir: &Path, hash: &str, columns: &[MetricsColumn], files: &mut Vec<PathBuf>) -> Result<()> {
    let (path, mut w) = create(dir, "metrics.csv")?;
    w.write_all(header(hash, "rows: methods, columns: pbar").as_bytes())?;
    w.write_all(metrics_table(columns).as_bytes())?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(dir, "metrics.json")?;
    serde_json::to_writer_pretty(&mut w, &serde_json::json!({ "config_hash": hash, "columns": columns }))?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(dir, "timing.csv")?;
    w.write_all(header(hash, "seconds per filtered sample").as_bytes())?;
    writeln!(w, "mode,pbar,min,max,avg,samples,lp_solves")?;
    for c in columns {
        for (mode, t) in [("local", c.local_timing), ("global", c.global_timing)] {
            if let Some(t) = t {
                writeln!(
                    w,
                    "{mode},{},{:e},{:e},{:e},{},{}",
                    c.pbar, t.min, t.max, t.avg, t.samples, t.lp_solves
                )?;
            }
        }
    }
    w.flush()?;
    files.push(path);
    Ok(())
}

pub const BUNDLE_FILE: &str = "bundle.json";

fn split(cfg: &RunConfig) -> Result<(ExperimentData, ExperimentData, ExperimentData)> {
    let data = load_data(cfg)?;
    let (id, val) = data.split(cfg.split)?;
    Ok((data, id, val))
}

/// Identifies horizons `1..=pbar` and writes the bundle.
pub fn run_identification(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let (_, id, _) = split(cfg)?;
    let bundle = identify_bank(&id, &IdentifyParams::from_config(cfg, cfg.pbar), &cfg.hash())?;
    log_reduction(&bundle);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(BUNDLE_FILE);
    bundle.save(&path)?;
    Ok(path)
}

fn log_reduction(bundle: &Bundle) {
    let after: Vec<usize> = bundle.horizons.iter().map(|h| h.fps.num_constraints()).collect();
    let before: usize = bundle.horizons.iter().map(|h| h.rows_before).sum();
    info!(
        "constraints: {} -> {} in total (per horizon min {}, max {}, mean {:.1})",
        before,
        after.iter().sum::<usize>(),
        after.iter().min().copied().unwrap_or(0),
        after.iter().max().copied().unwrap_or(0),
        after.iter().sum::<usize>() as f64 / after.len().max(1) as f64
    );
}

fn eval_range(cfg: &RunConfig, val: &ExperimentData, depth: usize) -> std::ops::Range<usize> {
    let start = evaluation_start(cfg.order, depth);
    let end = cfg.eval_samples.map_or(val.len(), |n| (start + n).min(val.len()));
    start..end.max(start)
}

fn kalman_estimates(cfg: &RunConfig, data: &ExperimentData, val_offset: usize) -> Result<Option<Vec<f64>>> {
    // the baseline runs over the whole record; only validation samples are scored
    Ok(match benchmark_kalman_model(cfg)? {
        Some(model) => Some(run_kalman(&model, data)?[val_offset..].to_vec()),
        None => None,
    })
}

/// Filters the validation half with a stored bundle.
pub fn run_filtering(cfg: &RunConfig, bundle_path: &Path) -> Result<RunOutputs> {
    cfg.validate()?;
    let bundle = Bundle::load(bundle_path)?;
    let (data, id, val) = split(cfg)?;
    bundle.check(cfg.order, val.input_dim(), cfg.resolved_d_bar(), cfg.pbar)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let hash = cfg.hash();
    let kf = kalman_estimates(cfg, &data, id.len())?;
    let range = eval_range(cfg, &val, cfg.pbar);
    let mode = if cfg.mode == RunMode::KfBaseline {
        RunMode::KfBaseline
    } else {
        cfg.mode
    };
    let ev = evaluate(&bundle, &val, mode, cfg.pbar, cfg.gamma, cfg, range, kf.as_deref())?;
    let mut files = Vec::new();
    write_tau_bar(&cfg.output_dir, &hash, &bundle, &mut files)?;
    write_evaluation(&cfg.output_dir, &hash, &val, &ev, cfg, &mut files)?;
    let columns = vec![ev.column];
    write_summary(&cfg.output_dir, &hash, &columns, &mut files)?;
    Ok(RunOutputs { files, columns })
}

/// Identification once for the largest `p̄` of the list, then filtering
/// for every listed `p̄` over a common evaluation range.
pub fn run_bench(cfg: &RunConfig) -> Result<RunOutputs> {
    cfg.validate()?;
    let max_p = *cfg.pbar_list.iter().max().expect("validated nonempty");
    let (data, id, val) = split(cfg)?;
    let hash = cfg.hash();
    let mut params = IdentifyParams::from_config(cfg, max_p);
    params.with_global = true;
    let bundle = identify_bank(&id, &params, &hash)?;
    log_reduction(&bundle);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    let path = cfg.output_dir.join(BUNDLE_FILE);
    bundle.save(&path)?;
    files.push(path);
    write_tau_bar(&cfg.output_dir, &hash, &bundle, &mut files)?;
    let kf = kalman_estimates(cfg, &data, id.len())?;
    let range = eval_range(cfg, &val, max_p);
    let mut columns = Vec::new();
    for &pbar in &cfg.pbar_list {
        info!("filtering with pbar = {pbar}");
        let ev = evaluate(&bundle, &val, cfg.mode, pbar, cfg.gamma, cfg, range.clone(), kf.as_deref())?;
        write_evaluation(&cfg.output_dir, &hash, &val, &ev, cfg, &mut files)?;
        columns.push(ev.column);
    }
    write_summary(&cfg.output_dir, &hash, &columns, &mut files)?;
    Ok(RunOutputs { files, columns })
}

/// Writes the configured data set as CSV.
pub fn run_gen_data(cfg: &RunConfig, path: &Path) -> Result<()> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    data.save(path, &[format!("config_hash={}", cfg.hash())])
}
