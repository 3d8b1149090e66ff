use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use log::info;
use smfilter::config::{RunConfig, KEYS};
use smfilter::pipeline::{metrics_table, run_bench, run_filtering, run_gen_data, run_identification, BUNDLE_FILE};
use smfilter::Error;

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn with_config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .short('c')
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("key = value configuration file"),
    );
    KEYS.iter().fold(cmd, |cmd, &key| {
        cmd.arg(
            Arg::new(key)
                .long(flag(key))
                .value_name("VALUE")
                .help(format!("override `{key}`"))
                .help_heading("Configuration keys"),
        )
    })
}

fn cli() -> Command {
    Command::new("smfilter")
        .about("Set-membership multistep output filtering for unknown linear systems")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("verbose")
                .short('v')
                .long("verbose")
                .action(ArgAction::Count)
                .global(true)
                .help("more log output (-v info, -vv debug)"),
        )
        .subcommand(with_config_args(
            Command::new("identify").about("identify λ, FPSs and global predictors for horizons 1..=pbar"),
        ))
        .subcommand(with_config_args(
            Command::new("filter")
                .about("filter the validation data with a stored bundle")
                .arg(
                    Arg::new("bundle")
                        .long("bundle")
                        .value_name("FILE")
                        .value_parser(clap::value_parser!(PathBuf))
                        .help("bundle from `identify` [default: <output_dir>/bundle.json]"),
                ),
        ))
        .subcommand(with_config_args(
            Command::new("bench").about("identify once, then filter for every p̄ in pbar_list"),
        ))
        .subcommand(with_config_args(
            Command::new("gen-data").about("write the configured data set as CSV").arg(
                Arg::new("out")
                    .long("out")
                    .short('o')
                    .value_name("FILE")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("destination [default: <output_dir>/data.csv]"),
            ),
        ))
}

fn load_config(m: &ArgMatches) -> Result<RunConfig, Error> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for &key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(m: &ArgMatches) -> Result<(), Error> {
    let (verb, sub) = m.subcommand().expect("subcommand is required");
    let cfg = load_config(sub)?;
    info!("config hash {}", cfg.hash());
    match verb {
        "identify" => {
            let path = run_identification(&cfg)?;
            println!("{}", path.display());
        }
        "filter" => {
            let bundle = sub
                .get_one::<PathBuf>("bundle")
                .cloned()
                .unwrap_or_else(|| cfg.output_dir.join(BUNDLE_FILE));
            let out = run_filtering(&cfg, &bundle)?;
            print!("{}", metrics_table(&out.columns));
        }
        "bench" => {
            let out = run_bench(&cfg)?;
            print!("{}", metrics_table(&out.columns));
        }
        "gen-data" => {
            let path = sub
                .get_one::<PathBuf>("out")
                .cloned()
                .unwrap_or_else(|| cfg.output_dir.join("data.csv"));
            run_gen_data(&cfg, &path)?;
            println!("{}", path.display());
        }
        _ => unreachable!("unknown subcommand"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 2,
        "io" => 3,
        "input" => 4,
        "bundle" => 5,
        "fps" => 6,
        "empty-intersection" => 7,
        "solver" => 8,
        _ => 9,
    }
}

fn main() -> ExitCode {
    let m = cli().get_matches();
    let level = match m.get_count("verbose") {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&m) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
