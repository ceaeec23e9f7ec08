//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns the `results` object of `run.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use grokbench_core::fma::{
    addition_variant_error, lowrank_build, lowrank_predict, theorem1_build, theorem1_dlog_error, theorem1_verify,
    FmaMode, FmaModel, LowRankMode,
};
use grokbench_core::kernel::{KernelKind, KernelSpec};
use grokbench_core::linalg::{dft, CirculantKind};
use grokbench_core::measures::{dlog_reorder, find_generator, Generator, MetricsRecord};
use grokbench_core::nnet::{train_observed, OptimizerKind, TrainConfig};
use grokbench_core::rfm::{
    enforced_history, evaluate_fixed, random_circulant_m, rfm_run_observed, transform_inputs, CirculantPlacement,
    RfmConfig, RfmRun,
};
use grokbench_core::{Dataset, Mat, ModTask, Operation, QuadMlp, SymMatrix};

use crate::config::{Config, Experiment};
use crate::error::CliError;
use crate::io::{create_dir, read_matrix, read_table, write_dataset, write_history, write_matrix, write_text};
use crate::plot::{heatmap, history_charts};

pub fn run(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    match cfg.experiment {
        Experiment::Rfm => rfm(cfg, out),
        Experiment::RfmMultitask => rfm_multitask(cfg, out),
        Experiment::RandomCirculant => random_circulant(cfg, out),
        Experiment::EnforceCirculant => enforce_circulant(cfg, out),
        Experiment::Nn => nn(cfg, out),
        Experiment::NnAblateReg => nn_ablate_reg(cfg, out),
        Experiment::FmaVerify => fma_verify(cfg, out),
        Experiment::Reorder => reorder(cfg),
        Experiment::Plot => plot(cfg, out),
    }
}

fn operation(cfg: &Config, key: &'static str) -> Result<Operation, CliError> {
    Operation::from_name(cfg.str(key)).ok_or_else(|| CliError::BadValue {
        key: key.into(),
        value: cfg.str(key).into(),
        reason: "expected add, sub, mul, div or sumsq".into(),
    })
}

fn dataset(cfg: &Config, out: &Path) -> Result<(Operation, Dataset), CliError> {
    let op = operation(cfg, "op")?;
    let task = ModTask::new(op, cfg.usize("p")?)?;
    let data = Dataset::from_task(&task, cfg.f64("fraction")?, cfg.u64("seed")?)?;
    save_dataset(cfg, out, &data)?;
    Ok((op, data))
}

fn save_dataset(cfg: &Config, out: &Path, data: &Dataset) -> Result<(), CliError> {
    if cfg.bool("save-dataset")? {
        write_dataset(&out.join("dataset.csv"), data)?;
    }
    Ok(())
}

fn kernel(cfg: &Config) -> Result<KernelSpec, CliError> {
    match KernelKind::from_name(cfg.str("kernel")) {
        Some(KernelKind::Quadratic) => Ok(KernelSpec::quadratic()),
        Some(KernelKind::Gaussian) => Ok(KernelSpec::gaussian(cfg.f64("bandwidth")?)?),
        None => Err(CliError::BadValue {
            key: "kernel".into(),
            value: cfg.str("kernel").into(),
            reason: "expected quadratic or gaussian".into(),
        }),
    }
}

fn rfm_config(cfg: &Config, reorder: bool) -> Result<RfmConfig, CliError> {
    Ok(RfmConfig {
        power: cfg.f64("power")?,
        normalize_m: cfg.bool("normalize-m")?,
        reorder_dlog: reorder,
        seed: cfg.u64("seed")?,
        ..RfmConfig::new(kernel(cfg)?, cfg.usize("iters")?)
    })
}

fn print_record(r: &MetricsRecord) {
    let mut line = format!(
        "iter {:>4}  train_acc {:.4}  test_acc {:.4}  test_loss {:.4e}  ccl {:.4e}  deviation {:.4}",
        r.iter, r.train_acc, r.test_acc, r.test_loss, r.correct_class_test_loss, r.circulant_deviation
    );
    for (k, t) in r.tasks.iter().enumerate() {
        line.push_str(&format!("  task{k}_acc {:.4}", t.acc));
    }
    println!("{line}");
}

/// First iteration with accuracy 1 from which it never drops again.
fn settled_at(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut first = None;
    for (it, v) in values {
        if v == 1.0 {
            first.get_or_insert(it);
        } else {
            first = None;
        }
    }
    first
}

pub fn test_acc_settled(history: &[MetricsRecord]) -> Option<usize> {
    settled_at(history.iter().map(|r| (r.iter, r.test_acc)))
}

fn write_snapshots(out: &Path, prefix: &str, mats: &[SymMatrix], all: bool) -> Result<(), CliError> {
    let last = mats.len().saturating_sub(1);
    for (k, m) in mats.iter().enumerate() {
        if all || k == last {
            write_matrix(&out.join(format!("{prefix}_{k}.csv")), m)?;
        }
    }
    Ok(())
}

fn history_summary(history: &[MetricsRecord]) -> Value {
    let last = history.last();
    json!({
        "rows": history.len(),
        "final_train_acc": last.map(|r| r.train_acc),
        "final_test_acc": last.map(|r| r.test_acc),
        "final_test_loss": last.map(|r| r.test_loss),
        "final_circulant_deviation": last.map(|r| r.circulant_deviation),
        "test_acc_settled_at": test_acc_settled(history),
    })
}

fn run_rfm(cfg: &Config, data: &Dataset, rc: &RfmConfig, out: &Path) -> Result<RfmRun, CliError> {
    let run = rfm_run_observed(data, rc, print_record)?;
    write_history(&out.join("history.csv"), &run.history)?;
    write_snapshots(out, "M", &run.snapshots, cfg.bool("snapshots")?)?;
    Ok(run)
}

fn rfm(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let (op, data) = dataset(cfg, out)?;
    let reorder = cfg.auto_bool("reorder")?.unwrap_or(op.is_multiplicative());
    let run = run_rfm(cfg, &data, &rfm_config(cfg, reorder)?, out)?;
    Ok(history_summary(&run.history))
}

fn rfm_multitask(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let p = cfg.usize("p")?;
    let a = ModTask::new(operation(cfg, "op")?, p)?;
    let b = ModTask::new(operation(cfg, "op-b")?, p)?;
    let data = Dataset::encode_multitask(&a, &b, cfg.f64("fraction")?, cfg.u64("seed")?)?;
    save_dataset(cfg, out, &data)?;
    let run = run_rfm(cfg, &data, &rfm_config(cfg, false)?, out)?;
    let mut summary = history_summary(&run.history);
    for t in 0..2 {
        summary[format!("task{t}_settled_at")] = json!(settled_at(run.history.iter().map(|r| (r.iter, r.tasks[t].acc))));
    }
    Ok(summary)
}

fn random_circulant(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let (op, data) = dataset(cfg, out)?;
    let p = data.modulus();
    let kind = match cfg.str("circulant-kind") {
        "circulant" => CirculantKind::Circulant,
        "hankel" => CirculantKind::Hankel,
        other => {
            return Err(CliError::BadValue {
                key: "circulant-kind".into(),
                value: other.into(),
                reason: "expected circulant or hankel".into(),
            })
        }
    };
    let placement = match cfg.str("placement") {
        "auto" if op.is_multiplicative() => CirculantPlacement::DiscreteLog(find_generator(p)?),
        "auto" | "direct" => CirculantPlacement::Direct,
        "dlog" => CirculantPlacement::DiscreteLog(find_generator(p)?),
        other => {
            return Err(CliError::BadValue {
                key: "placement".into(),
                value: other.into(),
                reason: "expected auto, direct or dlog".into(),
            })
        }
    };
    let c2 = cfg.auto_f64("c2")?.unwrap_or(-1.0 / p as f64);
    let m_star = random_circulant_m(p, cfg.u64("seed")?, cfg.f64("c1")?, c2, kind, &placement)?;
    write_matrix(&out.join("M_star.csv"), &m_star)?;
    let spec = kernel(cfg)?;
    let identity = SymMatrix::identity(data.input_dim());

    let transformed = data.with_inputs(transform_inputs(&m_star, data.x())?)?;
    let (_, rec) = evaluate_fixed(&transformed, &spec, &identity)?;
    let (_, base) = evaluate_fixed(&data, &spec, &identity)?;
    print_record(&rec);
    println!("identity baseline: test_acc {:.4}  test_loss {:.4e}", base.test_acc, base.test_loss);
    write_history(&out.join("history.csv"), std::slice::from_ref(&rec))?;
    write_history(&out.join("baseline_history.csv"), std::slice::from_ref(&base))?;
    Ok(json!({
        "test_acc": rec.test_acc,
        "test_loss": rec.test_loss,
        "train_acc": rec.train_acc,
        "baseline_test_acc": base.test_acc,
        "baseline_test_loss": base.test_loss,
        "placement": match placement { CirculantPlacement::Direct => "direct", _ => "dlog" },
    }))
}

fn enforce_circulant(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let (_, data) = dataset(cfg, out)?;
    let rc = rfm_config(cfg, false)?;
    println!("plain RFM:");
    let run = rfm_run_observed(&data, &rc, print_record)?;
    write_history(&out.join("plain_history.csv"), &run.history)?;
    write_snapshots(out, "M", &run.snapshots, cfg.bool("snapshots")?)?;
    println!("enforced circulant:");
    let enforced = enforced_history(&data, &rc, &run)?;
    enforced.iter().for_each(print_record);
    write_history(&out.join("history.csv"), &enforced)?;
    let worst_ratio = run
        .history
        .iter()
        .zip(&enforced)
        .map(|(a, b)| b.test_loss / a.test_loss)
        .filter(|r| r.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "plain": history_summary(&run.history),
        "enforced": history_summary(&enforced),
        "max_test_loss_ratio": worst_ratio,
    }))
}

fn train_config(cfg: &Config, reorder: bool) -> Result<TrainConfig, CliError> {
    let optimizer = OptimizerKind::from_name(cfg.str("optimizer")).ok_or_else(|| CliError::BadValue {
        key: "optimizer".into(),
        value: cfg.str("optimizer").into(),
        reason: "expected adamw or sgd".into(),
    })?;
    Ok(TrainConfig {
        optimizer,
        learning_rate: cfg.f64("lr")?,
        weight_decay: cfg.f64("weight-decay")?,
        agop_reg_weight: cfg.f64("agop-reg")?,
        batch_size: cfg.usize("batch-size")?,
        epochs: cfg.usize("epochs")?,
        width: cfg.usize("width")?,
        seed: cfg.u64("seed")?,
        reorder_dlog: reorder,
        nfa_every: cfg.usize("nfa-every")?,
    })
}

fn nn_summary(run: &grokbench_core::nnet::TrainRun) -> Value {
    let mut s = history_summary(&run.history);
    s["train_acc_settled_at"] = json!(settled_at(run.history.iter().map(|r| (r.iter, r.train_acc))));
    s["initial_circulant_deviation"] = json!(run.initial_deviation);
    s["final_nfa_correlation"] = json!(run.nfa.last().map(|n| n.1));
    s["initial_nfa_correlation"] = json!(run.nfa.first().map(|n| n.1));
    s
}

fn write_nfa(path: &Path, nfa: &[(usize, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "nfa_correlation"])?;
    for (e, c) in nfa {
        w.write_record([e.to_string(), c.to_string()])?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

fn nn(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let (op, data) = dataset(cfg, out)?;
    let reorder = cfg.auto_bool("reorder")?.unwrap_or(op.is_multiplicative());
    let tc = train_config(cfg, reorder)?;
    let net = QuadMlp::init(data.input_dim(), tc.width, data.modulus(), tc.seed);
    let run = train_observed(net, &data, &tc, print_record)?;
    write_history(&out.join("history.csv"), &run.history)?;
    write_nfa(&out.join("nfa.csv"), &run.nfa)?;
    let snaps: Vec<SymMatrix> = run.nfm_snapshots.clone();
    write_snapshots(out, "NFM", &snaps, cfg.bool("snapshots")?)?;
    write_matrix(&out.join("AGOP_final.csv"), run.net.agop(&data.train_x())?.as_mat())?;
    Ok(nn_summary(&run))
}

fn nn_ablate_reg(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let (_, data) = {
        let op = operation(cfg, "op")?;
        let task = ModTask::new(op, cfg.usize("p")?)?;
        (op, Dataset::from_task(&task, cfg.f64("fraction")?, cfg.u64("seed")?)?)
    };
    let base = TrainConfig {
        learning_rate: cfg.f64("lr")?,
        batch_size: cfg.usize("batch-size")?,
        epochs: cfg.usize("epochs")?,
        width: cfg.usize("width")?,
        seed: cfg.u64("seed")?,
        ..TrainConfig::sgd_ablation()
    };
    let mut results = Map::new();
    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    summary.write_record(["arm", "weight_decay", "agop_reg", "final_train_acc", "final_test_acc", "test_acc_settled_at"])?;
    for arm in cfg.list("arms") {
        let (wd, reg) = match arm.as_str() {
            "none" => (0.0, 0.0),
            "weight-decay" => (cfg.f64("weight-decay")?, 0.0),
            "agop" => (0.0, cfg.f64("agop-reg")?),
            other => {
                return Err(CliError::BadValue {
                    key: "arms".into(),
                    value: other.into(),
                    reason: "arms are none, weight-decay and agop".into(),
                })
            }
        };
        println!("arm {arm}: weight_decay {wd}, agop_reg {reg}");
        let tc = TrainConfig {
            weight_decay: wd,
            agop_reg_weight: reg,
            ..base.clone()
        };
        let dir = out.join(&arm);
        create_dir(&dir)?;
        let net = QuadMlp::init(data.input_dim(), tc.width, data.modulus(), tc.seed);
        let every = (tc.epochs / 20).max(1);
        let run = train_observed(net, &data, &tc, |r| {
            if r.iter % every == 0 || r.iter == tc.epochs {
                print_record(r)
            }
        })?;
        write_history(&dir.join("history.csv"), &run.history)?;
        let s = nn_summary(&run);
        summary.write_record([
            arm.clone(),
            wd.to_string(),
            reg.to_string(),
            s["final_train_acc"].to_string(),
            s["final_test_acc"].to_string(),
            s["test_acc_settled_at"].to_string(),
        ])?;
        results.insert(arm, s);
    }
    summary.flush().map_err(CliError::io(out.join("summary.csv")))?;
    Ok(Value::Object(results))
}

/// One row of the `fma-verify` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub p: usize,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passes(&self) -> bool {
        self.error < self.tolerance
    }
}

fn fma_table_error(model: &FmaModel, op: Operation) -> Result<(f64, f64), CliError> {
    let p = model.modulus();
    let task = ModTask::new(op, p)?;
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for row in task.make_table() {
        let x = grokbench_core::dataset::encode_pair(row.a, row.b, p)?;
        for l in 0..p {
            let z = model.eval_complex(&x, l)?;
            let target = if l == row.label { 1.0 } else { 0.0 };
            re = re.max((z.re - target).abs());
            im = im.max(z.im.abs());
        }
    }
    Ok((re, im))
}

/// All FMA, kernel-construction and low-rank checks.
pub fn fma_checks(
    primes: &[usize],
    table_primes: &[usize],
    lowrank_p: Option<usize>,
    random_inputs: usize,
    seed: u64,
    tol: f64,
) -> Result<(Vec<Check>, Vec<(usize, f64)>), CliError> {
    let mut checks = Vec::new();
    let mut push = |name: &str, p: usize, error: f64, tolerance: f64| {
        checks.push(Check {
            name: name.into(),
            p,
            error,
            tolerance,
        })
    };
    for &p in table_primes {
        for (mode, op, name) in [(FmaMode::Add, Operation::Add, "fma table add"), (FmaMode::Sub, Operation::Sub, "fma table sub")] {
            let model = FmaModel::new(p, mode)?;
            ModTask::new(op, p)?;
            let (re, im) = fma_table_error(&model, op)?;
            push(name, p, re, tol);
            push(&format!("{name} imaginary"), p, im, grokbench_core::fma::IMAG_TOLERANCE);
        }
    }
    // Fe1 ⊙ Fe2 = Fe0 / sqrt(3) at p = 3.
    let f = dft(3)?;
    let (c0, c1, c2) = (f.column(0), f.column(1), f.column(2));
    let worst = (0..3)
        .map(|j| (c1[j] * c2[j] - c0[j].scale(1.0 / 3f64.sqrt())).abs())
        .fold(0.0, f64::max);
    push("worked example Fe1*Fe2 = Fe0/sqrt3", 3, worst, 1e-12);

    let mut lambdas = Vec::new();
    for &p in primes {
        let ens = theorem1_build(p)?;
        let r = theorem1_verify(&ens, random_inputs, seed)?;
        push("(i) kernel = bilinear form, one-hot", p, r.discrete_bilinear, tol);
        push("(ii) kernel = FMA, one-hot", p, r.discrete_fma, tol);
        push("(ii) kernel = FMA, random real", p, r.random_fma, tol);
        push("bilinear form = FMA, random real", p, r.random_bilinear_fma, tol);
        push("(iii) coefficient system residual", p, r.system_residual, tol);
        push("coefficients = C^3l/2 + lambda 11^T", p, r.closed_form, tol);
        lambdas.push((p, r.lambda_fit));
        push("addition variant = add FMA", p, addition_variant_error(&theorem1_addition(p)?)?, tol);
        if p > 3 {
            push("mul analogue (dlog)", p, theorem1_dlog_error(p, Operation::Mul)?, tol);
            push("div analogue (dlog)", p, theorem1_dlog_error(p, Operation::Div)?, tol);
        }
    }
    if let Some(p) = lowrank_p {
        for (mode, op, name) in [(LowRankMode::Add, Operation::Add, "rank-4 add"), (LowRankMode::Mul, Operation::Mul, "rank-4 mul")] {
            let model = lowrank_build(p, mode)?;
            let task = ModTask::new(op, p)?;
            let mut wrong = 0usize;
            for a in 0..p {
                for b in 0..p {
                    if Some(lowrank_predict(&model, a, b)?) != task.apply(a, b) {
                        wrong += 1;
                    }
                }
            }
            push(&format!("{name} wrong predictions"), p, wrong as f64, 0.5);
            let s = model.encoder_singular_values()?;
            push(&format!("{name} encoder 1e-8/s4"), p, 1e-8 / s[3], 1.0);
            push(&format!("{name} encoder s5"), p, s[4], 1e-10);
        }
    }
    Ok((checks, lambdas))
}

fn theorem1_addition(p: usize) -> Result<grokbench_core::fma::Theorem1Ensemble, CliError> {
    Ok(grokbench_core::fma::theorem1_addition_variant(p)?)
}

fn fma_verify(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let tol = cfg.f64("tolerance")?;
    let lowrank = cfg.usize("lowrank-p")?;
    let (checks, lambdas) = fma_checks(
        &cfg.usize_list("p")?,
        &cfg.usize_list("table-p")?,
        (lowrank > 0).then_some(lowrank),
        cfg.usize("random-inputs")?,
        cfg.u64("seed")?,
        tol,
    )?;
    println!("{:<42} {:>4} {:>12} {:>10}  status", "check", "p", "max error", "tolerance");
    let mut w = csv::Writer::from_path(out.join("checks.csv"))?;
    w.write_record(["check", "p", "error", "tolerance", "pass"])?;
    for c in &checks {
        let status = if c.passes() { "ok" } else { "FAIL" };
        println!("{:<42} {:>4} {:>12.3e} {:>10.1e}  {status}", c.name, c.p, c.error, c.tolerance);
        w.write_record([c.name.clone(), c.p.to_string(), c.error.to_string(), c.tolerance.to_string(), c.passes().to_string()])?;
    }
    w.flush().map_err(CliError::io(out.join("checks.csv")))?;
    let mut lam = Vec::new();
    for (p, l) in &lambdas {
        let (one, two) = (-1.0 / (2 * p + 2) as f64, -2.0 / (2 * p + 2) as f64);
        let matches = if (l - one).abs() < 1e-8 {
            "-1/(2p+2)"
        } else if (l - two).abs() < 1e-8 {
            "-2/(2p+2)"
        } else {
            "neither"
        };
        println!("p = {p}: fitted lambda {l:.12} matches {matches}");
        lam.push(json!({"p": p, "lambda": l, "matches": matches}));
    }
    let failed = checks.iter().filter(|c| !c.passes()).count();
    let results = json!({
        "checks": checks.len(),
        "failed": failed,
        "lambda": lam,
    });
    if failed > 0 {
        write_text(&out.join("run.json"), &crate::run_json(cfg, &results))?;
        return Err(CliError::ChecksFailed { failed });
    }
    Ok(results)
}

/// Reorders a `p x p` matrix, or each `p x p` block of a `2p` or `2p+1`
/// square matrix (a trailing task row and column stay put).
pub fn reorder_matrix(m: &Mat, gen: &Generator) -> Result<Mat, CliError> {
    let p = gen.modulus();
    let n = m.rows();
    if !m.is_square() || !(n == p || n == 2 * p || n == 2 * p + 1) {
        return Err(CliError::Usage(format!(
            "cannot reorder a {}x{} matrix with modulus {p}",
            m.rows(),
            m.cols()
        )));
    }
    if n == p {
        return Ok(dlog_reorder(m, gen)?);
    }
    let mut out = m.clone();
    for bi in 0..2 {
        for bj in 0..2 {
            let block = dlog_reorder(&m.block(bi * p, bj * p, p, p), gen)?;
            out.set_block(bi * p, bj * p, &block);
        }
    }
    if n == 2 * p + 1 {
        // The task row and column follow their residue coordinates.
        for half in 0..2 {
            for r in 1..p {
                let (src, dst) = (half * p + r, half * p + gen.dlog(r));
                out[(dst, n - 1)] = m[(src, n - 1)];
                out[(n - 1, dst)] = m[(n - 1, src)];
            }
        }
    }
    Ok(out)
}

fn reorder(cfg: &Config) -> Result<Value, CliError> {
    let input = PathBuf::from(cfg.str("input"));
    if input.as_os_str().is_empty() {
        return Err(CliError::Usage("reorder needs --input <matrix.csv>".into()));
    }
    let m = read_matrix(&input)?;
    let n = m.rows();
    let p = match cfg.auto_usize("p")? {
        Some(p) => p,
        None if grokbench_core::dataset::is_prime(n) => n,
        None if n % 2 == 0 => n / 2,
        None => (n - 1) / 2,
    };
    let gen = match cfg.auto_usize("generator")? {
        None => find_generator(p)?,
        Some(g) => Generator::with_base(g, p).ok_or_else(|| CliError::BadValue {
            key: "generator".into(),
            value: g.to_string(),
            reason: format!("{g} does not generate Z_{p}^*"),
        })?,
    };
    let out = reorder_matrix(&m, &gen)?;
    let output = match cfg.str("output") {
        "" => {
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
            input.with_file_name(format!("{stem}_dlog.csv"))
        }
        o => PathBuf::from(o),
    };
    write_matrix(&output, &out)?;
    println!("wrote {}", output.display());
    Ok(json!({"p": p, "generator": gen.g(), "output": output.display().to_string()}))
}

fn plot(cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let history = PathBuf::from(cfg.str("history"));
    if history.as_os_str().is_empty() {
        return Err(CliError::Usage("plot needs --history <history.csv>".into()));
    }
    let table = read_table(&history)?;
    let mut written = Vec::new();
    for (name, svg) in history_charts(&table) {
        let path = out.join(format!("{name}.svg"));
        write_text(&path, &svg)?;
        written.push(path);
    }
    let dir = match cfg.str("matrices") {
        "" => history.parent().map(Path::to_path_buf).unwrap_or_default(),
        d => PathBuf::from(d),
    };
    let hide = cfg.bool("hide-diagonal")?;
    let mut mats: Vec<PathBuf> = fs::read_dir(if dir.as_os_str().is_empty() { Path::new(".") } else { &dir })
        .map_err(CliError::io(&dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") && (name.starts_with("M_") || name.starts_with("NFM_"))
        })
        .collect();
    mats.sort();
    for m in &mats {
        let stem = m.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
        let path = out.join(format!("heatmap_{stem}.svg"));
        write_text(&path, &heatmap(stem, &read_matrix(m)?, hide))?;
        written.push(path);
    }
    println!("wrote {} SVG files to {}", written.len(), out.display());
    Ok(json!({"svg_files": written.len()}))
}
