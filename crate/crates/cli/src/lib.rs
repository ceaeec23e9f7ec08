//! Experiment runner for `grokbench-core`.
//!
//! Each subcommand resolves a flat configuration, writes `config.txt`, runs,
//! and leaves `history.csv`, matrix dumps and `run.json` in its output
//! directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, Command};
use serde_json::{json, Value};

use crate::config::{Config, Experiment};
use crate::error::CliError;

pub const SEED_ENV: &str = "GROKBENCH_SEED";

fn command() -> Command {
    let mut cmd = Command::new("grokbench")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Grokking experiments with kernel RFMs and quadratic networks")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for e in Experiment::ALL {
        let mut sub = Command::new(e.name()).about(e.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key=value config file; flags override it"),
        );
        for k in e.keys() {
            let mut arg = Arg::new(k.name)
                .long(k.name)
                .value_name("VALUE")
                .help(format!("{} [default: {}]", k.help, if k.default.is_empty() { "none" } else { k.default }))
                .action(ArgAction::Set);
            if k.flag {
                arg = arg.num_args(0..=1).default_missing_value("true");
            }
            sub = sub.arg(arg);
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Resolves the configuration from a config file, the environment and flags.
fn resolve(e: Experiment, m: &clap::ArgMatches, env_seed: Option<String>) -> Result<Config, CliError> {
    let mut cfg = Config::defaults(e);
    let mut from_file = Vec::new();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        from_file = cfg.apply_text(&text)?;
    }
    let has_seed = e.keys().iter().any(|k| k.name == "seed");
    if has_seed && !from_file.iter().any(|k| k == "seed") {
        if let Some(s) = env_seed {
            cfg.set("seed", &s)?;
        }
    }
    for k in e.keys() {
        if m.value_source(k.name) == Some(ValueSource::CommandLine) {
            if let Some(v) = m.get_one::<String>(k.name) {
                cfg.set(k.name, v)?;
            }
        }
    }
    if has_seed {
        cfg.u64("seed")?;
    }
    Ok(cfg)
}

/// `run.json`: experiment, versions, resolved config and results.
pub fn run_json(cfg: &Config, results: &Value) -> String {
    let config: serde_json::Map<String, Value> = cfg.entries().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let doc = json!({
        "experiment": cfg.experiment.name(),
        "grokbench_version": env!("CARGO_PKG_VERSION"),
        "core_version": grokbench_core::VERSION,
        "config": config,
        "results": results,
    });
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

fn execute(cfg: &Config) -> Result<(), CliError> {
    if cfg.experiment == Experiment::Reorder {
        commands::run(cfg, std::path::Path::new("."))?;
        return Ok(());
    }
    let out = match cfg.experiment {
        Experiment::Plot if cfg.str("out") == "runs/plot" => PathBuf::from(cfg.str("history"))
            .parent()
            .map(|p| p.join("plots"))
            .unwrap_or_else(|| PathBuf::from("plots")),
        _ => PathBuf::from(cfg.str("out")),
    };
    io::create_dir(&out)?;
    io::write_text(&out.join("config.txt"), &cfg.render())?;
    let results = commands::run(cfg, &out)?;
    io::write_text(&out.join("run.json"), &run_json(cfg, &results))?;
    Ok(())
}

/// Runs the CLI on `args` (including the program name); returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let e = Experiment::from_name(name).expect("registered subcommand");
    let result = resolve(e, sub, std::env::var(SEED_ENV).ok()).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matches(args: &[&str]) -> (Experiment, clap::ArgMatches) {
        let m = command().try_get_matches_from(args).unwrap();
        let (name, sub) = m.subcommand().unwrap();
        (Experiment::from_name(name).unwrap(), sub.clone())
    }

    #[test]
    fn env_seed_is_a_fallback_only() {
        let (e, m) = matches(&["grokbench", "rfm", "--p", "5"]);
        assert_eq!(resolve(e, &m, Some("9".into())).unwrap().str("seed"), "9");
        let (e, m) = matches(&["grokbench", "rfm", "--seed", "4"]);
        assert_eq!(resolve(e, &m, Some("9".into())).unwrap().str("seed"), "4");
        let (e, m) = matches(&["grokbench", "rfm"]);
        assert!(resolve(e, &m, Some("x".into())).is_err());
    }

    #[test]
    fn bare_boolean_flags() {
        let (e, m) = matches(&["grokbench", "plot", "--history", "h.csv", "--hide-diagonal"]);
        assert!(resolve(e, &m, None).unwrap().bool("hide-diagonal").unwrap());
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(main_with_args(["grokbench", "rfm", "--bogus", "1"]), 2);
        assert_eq!(main_with_args(["grokbench", "nope"]), 2);
    }
}
