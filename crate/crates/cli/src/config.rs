//! Flat `key=value` experiment configuration.
//!
//! Every subcommand owns a fixed table of keys with defaults. Values are
//! layered: defaults, then the config file, then `GROKBENCH_SEED` (only when
//! nothing above set `seed`), then `--key value` flags.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::CliError;

/// One configurable key.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
    /// Boolean keys may be given as a bare `--flag`.
    pub flag: bool,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
        flag: false,
    }
}

const fn flag(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
        flag: true,
    }
}

const SEED: Key = key("seed", "0", "split / initialization seed (falls back to GROKBENCH_SEED)");
const OUT: Key = key("out", "", "output directory (default runs/<experiment>)");
const OP: Key = key("op", "add", "operation: add, sub, mul, div, sumsq");
const P: Key = key("p", "61", "prime modulus");
const FRACTION: Key = key("fraction", "0.5", "training fraction in (0, 1]");
const SAVE_DATASET: Key = flag("save-dataset", "false", "write dataset.csv");
const KERNEL: Key = key("kernel", "quadratic", "kernel: quadratic or gaussian");
const GAUSSIAN: Key = key("kernel", "gaussian", "kernel: quadratic or gaussian");
const BANDWIDTH: Key = key("bandwidth", "2.5", "Gaussian bandwidth L");
const ITERS: Key = key("iters", "30", "RFM iterations");
const POWER: Key = key("power", "0.5", "matrix power s applied to the AGOP");
const NORMALIZE_M: Key = flag("normalize-m", "false", "rescale M to unit max entry each iteration");
const REORDER: Key = key("reorder", "auto", "measure deviation after dlog reordering: auto, true, false");
const SNAPSHOTS: Key = flag("snapshots", "true", "write M_<k>.csv for every iteration");

/// The experiment families exposed as subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Rfm,
    RfmMultitask,
    RandomCirculant,
    EnforceCirculant,
    Nn,
    NnAblateReg,
    FmaVerify,
    Reorder,
    Plot,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Rfm,
        Experiment::RfmMultitask,
        Experiment::RandomCirculant,
        Experiment::EnforceCirculant,
        Experiment::Nn,
        Experiment::NnAblateReg,
        Experiment::FmaVerify,
        Experiment::Reorder,
        Experiment::Plot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rfm => "rfm",
            Experiment::RfmMultitask => "rfm-multitask",
            Experiment::RandomCirculant => "random-circulant",
            Experiment::EnforceCirculant => "enforce-circulant",
            Experiment::Nn => "nn",
            Experiment::NnAblateReg => "nn-ablate-reg",
            Experiment::FmaVerify => "fma-verify",
            Experiment::Reorder => "reorder",
            Experiment::Plot => "plot",
        }
    }

    pub fn from_name(name: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn about(self) -> &'static str {
        match self {
            Experiment::Rfm => "Recursive Feature Machine run with history and M snapshots",
            Experiment::RfmMultitask => "RFM on two tasks sharing one model, separated by a task bit",
            Experiment::RandomCirculant => "One kernel fit on inputs transformed by a random block-circulant M",
            Experiment::EnforceCirculant => "Plain RFM next to the same run with exactly circulant M",
            Experiment::Nn => "Train the quadratic-activation network",
            Experiment::NnAblateReg => "SGD with no regularization, weight decay, and AGOP-trace penalty",
            Experiment::FmaVerify => "Check the FMA, the per-class kernel construction and the rank-4 model",
            Experiment::Reorder => "Apply discrete-log reordering to a saved matrix",
            Experiment::Plot => "Render a history CSV and matrix snapshots as SVG",
        }
    }

    pub fn keys(self) -> Vec<Key> {
        let rfm = [KERNEL, BANDWIDTH, ITERS, POWER, NORMALIZE_M, REORDER, SNAPSHOTS];
        let mut keys = match self {
            Experiment::Rfm => [&[OP, P, FRACTION, SAVE_DATASET][..], &rfm].concat(),
            Experiment::RfmMultitask => vec![
                OP,
                key("op-b", "sumsq", "second task operation"),
                P,
                key("fraction", "0.8", "training fraction in (0, 1]"),
                SAVE_DATASET,
                GAUSSIAN,
                BANDWIDTH,
                ITERS,
                POWER,
                NORMALIZE_M,
                SNAPSHOTS,
            ],
            Experiment::RandomCirculant => vec![
                OP,
                P,
                FRACTION,
                SAVE_DATASET,
                GAUSSIAN,
                BANDWIDTH,
                key("c1", "1", "diagonal-block identity weight"),
                key("c2", "auto", "diagonal-block all-ones weight (auto = -1/p)"),
                key("circulant-kind", "circulant", "circulant or hankel"),
                key("placement", "auto", "direct or dlog (auto = dlog for mul/div)"),
            ],
            Experiment::EnforceCirculant => vec![
                OP,
                key("p", "97", "prime modulus"),
                FRACTION,
                SAVE_DATASET,
                GAUSSIAN,
                BANDWIDTH,
                ITERS,
                POWER,
                NORMALIZE_M,
                SNAPSHOTS,
            ],
            Experiment::Nn => vec![
                OP,
                P,
                FRACTION,
                SAVE_DATASET,
                key("optimizer", "adamw", "adamw or sgd"),
                key("lr", "1e-3", "learning rate"),
                key("weight-decay", "1.0", "weight decay"),
                key("agop-reg", "0", "weight of the AGOP-trace penalty"),
                key("batch-size", "32", "minibatch size"),
                key("epochs", "50", "training epochs"),
                key("width", "1024", "hidden width"),
                key("nfa-every", "1", "NFA correlation every k epochs (0 = never)"),
                REORDER,
                flag("snapshots", "false", "write the NFM after every epoch"),
            ],
            Experiment::NnAblateReg => vec![
                OP,
                P,
                key("fraction", "0.4", "training fraction in (0, 1]"),
                key("lr", "1.0", "SGD learning rate"),
                key("weight-decay", "1e-5", "weight decay of the weight-decay arm"),
                key("agop-reg", "1e-3", "penalty weight of the AGOP arm"),
                key("batch-size", "128", "minibatch size"),
                key("epochs", "1000", "training epochs per arm"),
                key("width", "512", "hidden width"),
                key("arms", "none,weight-decay,agop", "comma-separated subset of the three arms"),
            ],
            Experiment::FmaVerify => vec![
                key("p", "3,5,7", "comma-separated primes for the kernel construction"),
                key("table-p", "3,5,7,61", "comma-separated primes for the FMA table check"),
                key("lowrank-p", "61", "prime for the rank-4 construction"),
                key("random-inputs", "100", "random real inputs per prime"),
                key("tolerance", "1e-8", "maximum absolute error"),
            ],
            Experiment::Reorder => vec![
                key("input", "", "matrix file in the shared dump format"),
                key("p", "auto", "modulus (auto: from the matrix size)"),
                key("generator", "auto", "generator of Z_p^* (auto: smallest)"),
                key("output", "", "output file (default <input>_dlog.csv)"),
            ],
            Experiment::Plot => vec![
                key("history", "", "history CSV to plot"),
                key("matrices", "", "directory of M_<k>.csv files (default: next to history)"),
                flag("hide-diagonal", "false", "blank the diagonal of heatmaps"),
            ],
        };
        if !matches!(self, Experiment::Reorder) {
            keys.push(OUT);
        }
        if !matches!(self, Experiment::Reorder | Experiment::Plot) {
            keys.insert(0, SEED);
        }
        keys
    }

    fn key(self, name: &str) -> Option<Key> {
        self.keys().into_iter().find(|k| k.name == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    values: BTreeMap<&'static str, String>,
}

impl Config {
    pub fn defaults(experiment: Experiment) -> Config {
        let mut values: BTreeMap<&'static str, String> =
            experiment.keys().into_iter().map(|k| (k.name, k.default.to_string())).collect();
        if let Some(out) = values.get_mut("out") {
            *out = format!("runs/{}", experiment.name());
        }
        Config { experiment, values }
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let key = self.experiment.key(name).ok_or_else(|| CliError::UnknownKey {
            key: name.to_string(),
            experiment: self.experiment.name(),
        })?;
        self.values.insert(key.name, value.trim().to_string());
        Ok(())
    }

    /// Applies a config file. An `experiment=` line, if present, must match.
    /// Returns the keys the file set.
    pub fn apply_text(&mut self, text: &str) -> Result<Vec<String>, CliError> {
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Usage(format!(
                "config line {}: expected key=value, got {raw:?}",
                n + 1
            )))?;
            let k = k.trim();
            if k == "experiment" {
                if v.trim() != self.experiment.name() {
                    return Err(CliError::Usage(format!(
                        "config is for experiment {:?}, not {}",
                        v.trim(),
                        self.experiment
                    )));
                }
                continue;
            }
            self.set(k, v)?;
            seen.push(k.to_string());
        }
        Ok(seen)
    }

    pub fn parse(experiment: Experiment, text: &str) -> Result<Config, CliError> {
        let mut cfg = Config::defaults(experiment);
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// The `key=value` form written next to every run.
    pub fn render(&self) -> String {
        let mut s = format!("experiment={}\n", self.experiment);
        for k in self.experiment.keys() {
            s.push_str(&format!("{}={}\n", k.name, self.values[k.name]));
        }
        s
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> {
        self.values.iter().map(|(k, v)| (*k, v.as_str()))
    }

    pub fn str(&self, name: &'static str) -> &str {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("{} has no key {name}", self.experiment))
    }

    fn bad(&self, name: &'static str, reason: &str) -> CliError {
        CliError::BadValue {
            key: name.to_string(),
            value: self.str(name).to_string(),
            reason: reason.to_string(),
        }
    }

    pub fn f64(&self, name: &'static str) -> Result<f64, CliError> {
        self.str(name)
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.bad(name, "expected a finite number"))
    }

    pub fn usize(&self, name: &'static str) -> Result<usize, CliError> {
        self.str(name).parse().map_err(|_| self.bad(name, "expected a non-negative integer"))
    }

    pub fn u64(&self, name: &'static str) -> Result<u64, CliError> {
        self.str(name).parse().map_err(|_| self.bad(name, "expected a 64-bit unsigned integer"))
    }

    pub fn bool(&self, name: &'static str) -> Result<bool, CliError> {
        match self.str(name) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(self.bad(name, "expected true or false")),
        }
    }

    /// `auto` maps to `None`.
    pub fn auto_bool(&self, name: &'static str) -> Result<Option<bool>, CliError> {
        if self.str(name) == "auto" {
            Ok(None)
        } else {
            self.bool(name).map(Some)
        }
    }

    pub fn auto_f64(&self, name: &'static str) -> Result<Option<f64>, CliError> {
        if self.str(name) == "auto" {
            Ok(None)
        } else {
            self.f64(name).map(Some)
        }
    }

    pub fn auto_usize(&self, name: &'static str) -> Result<Option<usize>, CliError> {
        if self.str(name) == "auto" {
            Ok(None)
        } else {
            self.usize(name).map(Some)
        }
    }

    pub fn usize_list(&self, name: &'static str) -> Result<Vec<usize>, CliError> {
        self.str(name)
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| self.bad(name, "expected comma-separated integers")))
            .collect()
    }

    pub fn list(&self, name: &'static str) -> Vec<String> {
        self.str(name)
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }
}
