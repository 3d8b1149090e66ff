//! End-to-end checks on the benchmark with horizons 1..=8 and on small
//! runs through the file-level entry points.

use std::sync::OnceLock;

use smfilter::bundle::Bundle;
use smfilter::config::{DataSource, RunConfig, RunMode};
use smfilter::data::ExperimentData;
use smfilter::error::Error;
use smfilter::identify::{assemble_regressors_common, estimate_lambda};
use smfilter::pipeline::{
    evaluate, evaluation_start, identify_bank, load_data, run_bench, run_filtering, run_gen_data,
    run_identification, Evaluation, IdentifyParams,
};
use smfilter::sim::Scenario;

struct Small {
    cfg: RunConfig,
    id: ExperimentData,
    val: ExperimentData,
    bundle: Bundle,
    ev: Evaluation,
}

fn small_config() -> RunConfig {
    RunConfig {
        source: DataSource::Generate {
            scenario: Scenario::A,
            samples: 12000,
            seed: 3,
        },
        pbar: 8,
        ..RunConfig::default()
    }
}

fn small() -> &'static Small {
    static S: OnceLock<Small> = OnceLock::new();
    S.get_or_init(|| {
        let cfg = small_config();
        let data = load_data(&cfg).unwrap();
        let (id, val) = data.split(0.5).unwrap();
        let params = IdentifyParams {
            with_global: true,
            ..IdentifyParams::from_config(&cfg, 8)
        };
        let bundle = identify_bank(&id, &params, &cfg.hash()).unwrap();
        let start = evaluation_start(3, 8);
        let ev = evaluate(&bundle, &val, RunMode::Both, 8, 1.1, &cfg, start..start + 500, None).unwrap();
        Small {
            cfg,
            id,
            val,
            bundle,
            ev,
        }
    })
}

#[test]
fn bundle_structure_and_metadata() {
    let s = small();
    assert_eq!(s.bundle.horizons.len(), 8);
    for (i, h) in s.bundle.horizons.iter().enumerate() {
        assert_eq!(h.horizon, i + 1);
        assert_eq!((h.alpha, h.gamma, h.gamma_bar), (1.2, 1.1, 1.1));
        assert!(h.theta_hat.is_some() && h.tau_bar.is_some());
        assert_eq!(h.lambda, 1.2 * h.lp_optimum);
        assert!(h.lambda > 0.0);
        assert!(h.fps.contains(h.theta_hat.as_ref().unwrap(), 1e-8));
        assert_eq!(h.rows_before, 2 * (6000 - (8 + 3 - 1)));
        assert!(h.fps.num_constraints() < h.rows_before / 4);
    }
    let ds = assemble_regressors_common(&s.id, 3, 4, 8).unwrap();
    assert_eq!(estimate_lambda(&ds, 0.2, 1.2).unwrap().lambda, s.bundle.horizons[3].lambda);
    // global bound shrinks from the one-step predictor
    let tau: Vec<f64> = s.bundle.horizons.iter().map(|h| h.tau_bar.unwrap()).collect();
    assert!(tau[7] < tau[0], "{tau:?}");
}

#[test]
fn bundle_round_trip_is_bit_identical() {
    let s = small();
    let text = s.bundle.to_json().unwrap();
    let back = Bundle::from_json(&text).unwrap();
    assert_eq!(back, s.bundle);
    assert_eq!(back.to_json().unwrap(), text);
    let mut bad: serde_json::Value = serde_json::from_str(&text).unwrap();
    bad["version"] = serde_json::json!(99);
    assert!(Bundle::from_json(&bad.to_string()).is_err());
}

#[test]
fn local_intervals_contain_and_tighten() {
    let s = small();
    let local = s.ev.local.as_ref().unwrap();
    let global = s.ev.global.as_ref().unwrap();
    let mut strictly_tighter = 0;
    // every fifth sample: 100 instants
    for (l, g) in local.reports.iter().zip(&global.reports).step_by(5) {
        let z = s.val.true_outputs[l.time_index];
        assert!(l.interval.contains(z) && g.interval.contains(z), "k={}", l.time_index);
        assert!(l.bound <= g.bound, "k={}: {} > {}", l.time_index, l.bound, g.bound);
        let best = l
            .per_horizon_intervals
            .iter()
            .map(|iv| 0.5 * (iv.upper - iv.lower))
            .fold(f64::INFINITY, f64::min);
        assert!(l.bound <= best);
        if l.bound < best - 1e-9 {
            strictly_tighter += 1;
        }
    }
    assert!(strictly_tighter >= 1);
    let c = &s.ev.column;
    assert!(c.local.unwrap().avg_bound < c.global.unwrap().avg_bound);
    assert!(c.global.unwrap().max_bound.unwrap() <= c.min_tau_bar.unwrap());
}

#[test]
fn global_widths_are_constant() {
    let s = small();
    for r in &s.ev.global.as_ref().unwrap().reports {
        for (iv, h) in r.per_horizon_intervals.iter().zip(&s.bundle.horizons) {
            let w = iv.upper - iv.lower;
            assert!((w - 2.0 * h.tau_bar.unwrap()).abs() <= 1e-12);
        }
    }
    assert_eq!(s.ev.column.global_timing.unwrap().lp_solves, 0);
    assert!(s.ev.column.local_timing.unwrap().lp_solves > 0);
}

#[test]
fn single_horizon_reports_its_own_interval() {
    let s = small();
    let start = evaluation_start(3, 8);
    let ev = evaluate(&s.bundle, &s.val, RunMode::Local, 1, 1.1, &s.cfg, start..start + 20, None).unwrap();
    for r in &ev.local.unwrap().reports {
        let iv = r.per_horizon_intervals[0];
        assert_eq!(r.estimate, 0.5 * (iv.lower + iv.upper));
        assert_eq!(r.bound, 0.5 * (iv.upper - iv.lower));
    }
}

#[test]
fn bundle_mismatch_is_reported() {
    let s = small();
    let cfg = RunConfig {
        order: 2,
        ..s.cfg.clone()
    };
    let start = evaluation_start(3, 8);
    let err = evaluate(&s.bundle, &s.val, RunMode::Local, 8, 1.1, &cfg, start..start + 5, None).unwrap_err();
    assert!(matches!(err, Error::BundleMismatch(_)));
    assert!(s.bundle.check(3, 1, 0.2, 9).is_err());
    assert!(s.bundle.check(3, 1, 0.1, 8).is_err());
}

fn tiny_config(dir: &std::path::Path) -> RunConfig {
    RunConfig {
        source: DataSource::Generate {
            scenario: Scenario::A,
            samples: 1200,
            seed: 5,
        },
        pbar: 3,
        pbar_list: vec![2, 3],
        eval_samples: Some(150),
        output_dir: dir.to_path_buf(),
        per_horizon_columns: true,
        ..RunConfig::default()
    }
}

fn read_dir_sorted(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn bench_runs_are_deterministic_and_tagged() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = tiny_config(a.path());
    let out = run_bench(&ca).unwrap();
    run_bench(&tiny_config(b.path())).unwrap();
    assert_eq!(out.columns.len(), 2);
    let fa = read_dir_sorted(a.path());
    let fb = read_dir_sorted(b.path());
    assert_eq!(fa.len(), fb.len());
    let tag = format!("config_hash={}", ca.hash());
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        let text = String::from_utf8_lossy(da);
        if na != "timing.csv" && na != "metrics.json" && na != "metrics.csv" {
            assert_eq!(da, db, "{na} differs between runs");
        }
        if na.ends_with(".json") {
            assert!(text.contains(&format!("\"config_hash\":\"{}\"", ca.hash())) || text.contains(&format!("\"config_hash\": \"{}\"", ca.hash())), "{na} lacks the config hash");
        } else {
            assert!(text.starts_with(&format!("# {tag}")), "{na} lacks the config hash");
        }
    }
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for want in [
        "bundle.json",
        "metrics.csv",
        "metrics.json",
        "timing.csv",
        "plot_tau_bar.csv",
        "filter_local_p3.csv",
        "filter_global_p2.csv",
        "plot_output_local_p3.csv",
        "plot_bars_local_p3.csv",
        "kalman_p3.csv",
    ] {
        assert!(names.contains(&want), "missing {want}: {names:?}");
    }
    let trace = String::from_utf8_lossy(&fa.iter().find(|(n, _)| n == "filter_local_p3.csv").unwrap().1).into_owned();
    let header = trace.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "k,z_hat,tau_f,z_min,z_max,mode,trusted,zeta_min_1,zeta_max_1,zeta_min_2,zeta_max_2,zeta_min_3,zeta_max_3");
}

#[test]
fn identify_then_filter_via_bundle_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let path = run_identification(&cfg).unwrap();
    let out = run_filtering(&cfg, &path).unwrap();
    let col = &out.columns[0];
    assert_eq!(col.pbar, 3);
    assert_eq!(col.local_interval_containment, Some(1.0));
    assert!(col.kalman.is_some());

    let deeper = RunConfig { pbar: 5, ..cfg.clone() };
    assert!(matches!(run_filtering(&deeper, &path), Err(Error::BundleMismatch(_))));

    let csv = dir.path().join("data.csv");
    run_gen_data(&cfg, &csv).unwrap();
    let from_csv = RunConfig {
        source: DataSource::Csv(csv),
        d_bar: Some(0.2),
        ..cfg
    };
    let again = load_data(&from_csv).unwrap();
    assert_eq!(again, load_data(&tiny_config(dir.path())).unwrap());
}
