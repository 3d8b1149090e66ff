use std::path::Path;
use std::process::{Command, Output};

fn smfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smfilter")).args(args).output().unwrap()
}

fn tiny(dir: &Path) -> Vec<String> {
    [
        "--samples",
        "1200",
        "--pbar",
        "3",
        "--pbar-list",
        "2,3",
        "--eval-samples",
        "100",
        "--output-dir",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([dir.display().to_string()])
    .collect()
}

fn run(verb: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![verb.to_string()];
    args.extend(tiny(dir));
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    smfilter(&refs)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn identify_then_filter() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("identify", dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("bundle.json").exists());

    let out = run("filter", dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.starts_with("row,pbar_3"));
    assert!(table.contains("local_rmse"));
    let csv = std::fs::read_to_string(dir.path().join("filter_local_p3.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));

    // a deeper filter than the bundle holds
    let d = dir.path().to_str().unwrap();
    let out = smfilter(&["filter", "--samples", "1200", "--pbar", "4", "--output-dir", d]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr(&out).contains("error[bundle]"));
}

#[test]
fn bench_and_gen_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("bench", dir.path(), &["--mode", "global"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.starts_with("row,pbar_2,pbar_3"));
    assert!(table.contains("global_tau_avg") && !table.contains("local_tau_avg"));

    let data = dir.path().join("d.csv");
    let out = run("gen-data", dir.path(), &["--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("# config_hash="));
}

#[test]
fn errors_carry_a_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "pbar = 3\nnot_a_key = 1\n").unwrap();
    let out = smfilter(&["identify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[config]"));

    let out = run("bench", dir.path(), &["--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run("filter", dir.path(), &["--bundle", "/nonexistent/bundle.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error[io]"));
}
