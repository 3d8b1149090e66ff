//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The page builds a [`Demo`], then calls `identify` and `filter`; results
//! come back as JSON strings.

use serde::Serialize;
use smfilter::bundle::Bundle;
use smfilter::data::ExperimentData;
use smfilter::filter::{global_filter_step, local_filter_step, GlobalPredictorBank, LocalBank, LocalFilterReport};
use smfilter::history::History;
use smfilter::metrics::compute_metrics;
use smfilter::pipeline::{evaluation_start, identify_bank, IdentifyParams};
use smfilter::sim::{generate_benchmark, BenchmarkSpec, Scenario};
use smfilter::{Error, Result};
use wasm_bindgen::prelude::*;

const ORDER: usize = 3;

#[derive(Serialize)]
struct HorizonSummary {
    p: usize,
    lambda: f64,
    rows_before: usize,
    rows_after: usize,
    tau_bar: f64,
}

#[derive(Serialize)]
struct FilterSeries {
    k: Vec<usize>,
    y: Vec<f64>,
    z: Vec<f64>,
    z_hat: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rmse: f64,
    avg_bound: f64,
    containment: f64,
}

/// Experiment state kept between calls from the page.
#[wasm_bindgen]
pub struct Demo {
    d_bar: f64,
    id: ExperimentData,
    val: ExperimentData,
    bundle: Option<Bundle>,
}

impl Demo {
    pub fn create(scenario: &str, samples: usize, seed: u64) -> Result<Self> {
        let scenario: Scenario = scenario.parse()?;
        let data = generate_benchmark(&BenchmarkSpec::new(scenario, samples, seed))?;
        let (id, val) = data.split(0.5)?;
        Ok(Self {
            d_bar: scenario.noise(0).d_bar,
            id,
            val,
            bundle: None,
        })
    }

    pub fn identify_json(&mut self, pbar: usize, alpha: f64, gamma: f64) -> Result<String> {
        let params = IdentifyParams {
            order: ORDER,
            max_horizon: pbar,
            alpha,
            gamma,
            gamma_bar: gamma,
            d_bar: self.d_bar,
            feas_tol: 1e-9,
            slack_tol: 1e-9,
            with_global: true,
            workers: 1,
        };
        let bundle = identify_bank(&self.id, &params, "demo")?;
        let out: Vec<HorizonSummary> = bundle
            .horizons
            .iter()
            .map(|h| HorizonSummary {
                p: h.horizon,
                lambda: h.lambda,
                rows_before: h.rows_before,
                rows_after: h.fps.num_constraints(),
                tau_bar: h.tau_bar.unwrap_or(f64::NAN),
            })
            .collect();
        self.bundle = Some(bundle);
        Ok(serde_json::to_string(&out)?)
    }

    /// Filters up to `samples` validation points with `mode` = local or global.
    pub fn filter_json(&self, mode: &str, samples: usize) -> Result<String> {
        let bundle = self
            .bundle
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("run identify first".into()))?;
        let pbar = bundle.max_horizon();
        let gamma = bundle.horizons[0].gamma;
        enum Bank {
            Local(LocalBank),
            Global(GlobalPredictorBank),
        }
        let mut bank = match mode {
            "local" => Bank::Local(bundle.local_bank(pbar, gamma)?),
            "global" => Bank::Global(bundle.global_bank(pbar, None)?),
            other => return Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        };
        let start = evaluation_start(ORDER, pbar);
        let end = (start + samples).min(self.val.len());
        let mut history = History::new(ORDER, self.val.input_dim(), pbar);
        let mut reports: Vec<LocalFilterReport> = Vec::with_capacity(end.saturating_sub(start));
        for k in 0..end {
            if k >= start {
                reports.push(match &mut bank {
                    Bank::Local(b) => local_filter_step(b, &history, k)?,
                    Bank::Global(b) => global_filter_step(b, &history, k)?,
                });
            }
            history.push(&self.val.inputs[k], self.val.measured_outputs[k])?;
        }
        let z: Vec<f64> = reports.iter().map(|r| self.val.true_outputs[r.time_index]).collect();
        let z_hat: Vec<f64> = reports.iter().map(|r| r.estimate).collect();
        let bounds: Vec<f64> = reports.iter().map(|r| r.bound).collect();
        let m = compute_metrics(&z, &z_hat, Some(&bounds))?;
        let inside = reports.iter().zip(&z).filter(|(r, &z)| r.interval.contains(z)).count();
        let series = FilterSeries {
            k: reports.iter().map(|r| r.time_index).collect(),
            y: reports.iter().map(|r| self.val.measured_outputs[r.time_index]).collect(),
            lower: reports.iter().map(|r| r.interval.lower).collect(),
            upper: reports.iter().map(|r| r.interval.upper).collect(),
            containment: inside as f64 / reports.len().max(1) as f64,
            rmse: m.rmse,
            avg_bound: m.avg_bound.unwrap_or(0.0),
            z,
            z_hat,
        };
        Ok(serde_json::to_string(&series)?)
    }
}

fn js_err(e: Error) -> JsError {
    JsError::new(&format!("{} ({})", e, e.category()))
}

#[wasm_bindgen]
impl Demo {
    /// Generates benchmark data; `scenario` is a, b or c.
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, samples: usize, seed: u32) -> std::result::Result<Demo, JsError> {
        Self::create(scenario, samples, u64::from(seed)).map_err(js_err)
    }

    /// Per-horizon λ, constraint counts and global bounds, as JSON.
    pub fn identify(&mut self, pbar: usize, alpha: f64, gamma: f64) -> std::result::Result<String, JsError> {
        self.identify_json(pbar, alpha, gamma).map_err(js_err)
    }

    /// Filtered series and summary metrics, as JSON.
    pub fn filter(&self, mode: &str, samples: usize) -> std::result::Result<String, JsError> {
        self.filter_json(mode, samples).map_err(js_err)
    }
}
