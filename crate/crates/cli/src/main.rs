use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use junta_lab::binom::{exact_dtv, roos_bound, roos_tau};
use junta_lab::boolfn::{relevant_variables, to_table};
use junta_lab::distance::dist_to_k_junta;
use junta_lab::harness::{
    failure_json, run_all, run_game, sseq_monte_carlo, sssq_monte_carlo, write_atomic, Experiment, ExperimentConfig,
    EXIT_FAIL, EXIT_PASS, EXIT_USAGE,
};
use junta_lab::tasks::deciders;
use junta_lab::{
    hardgen, BinomialSpec, BitString, BoolFn, ElementQueryPlan, Params, Seed, SetQueryPlan, StringQueryPlan,
    TruthTable,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Experiments on hard instances and oracle games for non-adaptive junta testing.
#[derive(Parser)]
#[command(name = "junta-lab", version)]
struct Cli {
    /// Parameter file (`key = value` per line).
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output path for experiment CSV (the JSON summary goes to `<out>.json`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Yes,
    No,
    D1,
    D2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sseq,
    Sssq,
    Strings,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one instance and describe it.
    Gen {
        #[arg(long, value_enum)]
        dist: Dist,
        /// Write the full truth table here.
        #[arg(long)]
        emit_table: Option<PathBuf>,
    },
    /// Exact distance of a truth table to the nearest k-junta.
    Dist {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Monte-Carlo distinguishing game.
    Game {
        #[arg(long, value_enum)]
        mode: Mode,
        /// JSON plan with "T", "ell" or "X" (and optionally "decider").
        #[arg(long)]
        plan: PathBuf,
    },
    /// Exact dTV of Bin(c, pλ) and Bin(c, qλ) with the analytic bound.
    Dtv {
        #[arg(long)]
        c: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        lambda: f64,
    },
    /// Run an experiment and write CSV plus JSON summary.
    Verify {
        /// Experiment config file. Command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<String>,
        /// Extra experiment option, `key=value`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        options: Vec<String>,
    },
    /// Advantage curve of uniform element-query plans.
    Curve {
        /// Comma-separated budgets.
        #[arg(long)]
        budgets: Option<String>,
        /// Hidden-set size (defaults to m).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        monte_carlo: bool,
    },
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    body: Value,
}

fn usage(e: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_USAGE as u8,
        body: failure_json("usage", &format!("{e:#}")),
    }
}

fn classify(stage: &str, e: junta_lab::Error) -> Failure {
    use junta_lab::Error::*;
    let code = match e {
        Parse(_) | InvalidInput(_) | Io(_) | DimensionMismatch { .. } | IndexOutOfRange { .. } | EpsilonOutOfRange(_)
        | WeightOutOfRange(_) | StrictModeViolation(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    };
    Failure {
        code: code as u8,
        body: failure_json(stage, &e.to_string()),
    }
}

fn load_params(path: Option<&Path>) -> Result<Params, Failure> {
    let path = path.ok_or_else(|| usage(anyhow!("--params <file> is required")))?;
    Params::load(path).map_err(|e| classify("params", e))
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn gen(cli: &Cli, dist: Dist, emit: Option<&Path>) -> Result<Value, Failure> {
    let params = load_params(cli.params.as_deref())?;
    let seed = Seed(cli.seed.unwrap_or(0));
    let err = |e| classify("gen", e);
    let (table, mut info) = match dist {
        Dist::Yes | Dist::No => {
            let f = if matches!(dist, Dist::Yes) {
                hardgen::sample_yes(&params, seed)
            } else {
                hardgen::sample_no(&params, seed)
            }
            .map_err(err)?;
            let info = json!({
                "M": f.m_set().members(),
                "A": f.a_set().members(),
                "support": f.support().members(),
                "support_size": f.support().len(),
                "k": params.k,
            });
            let table = if emit.is_some() || params.n <= 20 {
                Some(to_table(&f).map_err(err)?)
            } else {
                None
            };
            (table, info)
        }
        Dist::D1 | Dist::D2 => {
            let mut st = seed.stream(if matches!(dist, Dist::D1) { "D1" } else { "D2" });
            let t = if matches!(dist, Dist::D1) {
                hardgen::sample_d1(params.n, params.epsilon, &mut st)
            } else {
                hardgen::sample_d2(params.n, params.epsilon, &mut st)
            }
            .map_err(err)?;
            (Some(t), json!({}))
        }
    };
    let obj = info.as_object_mut().expect("object");
    obj.insert("n".into(), json!(params.n));
    obj.insert("seed".into(), json!(seed.0));
    if let Some(t) = &table {
        obj.insert("ones".into(), json!(t.count_ones()));
        obj.insert("relevant".into(), json!(relevant_variables(t).members()));
    }
    if let (Some(path), Some(t)) = (emit, &table) {
        write_atomic(path, t.to_text().as_bytes()).map_err(err)?;
        obj.insert("table".into(), json!(path.display().to_string()));
    }
    Ok(info)
}

fn dist(table: &Path, k: usize, eps: Option<f64>) -> Result<Value, Failure> {
    let err = |e| classify("dist", e);
    let t = TruthTable::load(table).map_err(err)?;
    let mut report = dist_to_k_junta(&t, k).map_err(err)?;
    if let Some(e) = eps {
        report = report.with_epsilon(e);
    }
    Ok(json!({
        "n": t.n(),
        "k": k,
        "distance": report.distance_f64(),
        "report": report,
    }))
}

fn plan_field<T: serde::de::DeserializeOwned>(plan: &Value, key: &str) -> Result<T, Failure> {
    let v = plan
        .get(key)
        .ok_or_else(|| usage(anyhow!("plan file needs a \"{key}\" field")))?;
    serde_json::from_value(v.clone()).map_err(|e| usage(anyhow!("bad \"{key}\": {e}")))
}

fn game(cli: &Cli, mode: Mode, plan_path: &Path) -> Result<Value, Failure> {
    let params = load_params(cli.params.as_deref())?;
    let seed = Seed(cli.seed.unwrap_or(0));
    let trials = cli.trials.unwrap_or(1000);
    let text = std::fs::read_to_string(plan_path)
        .with_context(|| format!("reading {}", plan_path.display()))
        .map_err(usage)?;
    let plan: Value = serde_json::from_str(&text).map_err(|e| usage(anyhow!("plan is not JSON: {e}")))?;
    let err = |e| classify("game", e);
    let result = match mode {
        Mode::Sseq => {
            let ell: Vec<u64> = plan_field(&plan, "ell")?;
            sseq_monte_carlo(&ElementQueryPlan::new(ell), &params, trials, seed).map_err(err)?
        }
        Mode::Sssq => {
            let t: Vec<Vec<usize>> = plan_field(&plan, "T")?;
            let m = plan.get("m").and_then(Value::as_u64).map_or(params.m, |m| m as usize);
            let set_plan = SetQueryPlan::from_lists(m, &t).map_err(err)?;
            sssq_monte_carlo(&set_plan, &params, trials, seed).map_err(err)?
        }
        Mode::Strings => {
            let xs: Vec<BitString> = plan_field(&plan, "X")?;
            let name = plan.get("decider").and_then(Value::as_str).unwrap_or("all_equal");
            let decider = deciders::by_name(name).ok_or_else(|| usage(anyhow!("unknown decider `{name}`")))?;
            let alg = StringQueryPlan::new(xs, decider).map_err(err)?;
            if alg.exceeds_reduction_budget(params.epsilon) {
                eprintln!("warning: q = {} exceeds (n/ε)²", alg.q());
            }
            let yes = |s: Seed| Ok(BoolFn::Structured(hardgen::sample_yes(&params, s)?));
            let no = |s: Seed| Ok(BoolFn::Structured(hardgen::sample_no(&params, s)?));
            run_game(&yes, &no, &alg, trials, seed).map_err(err)?
        }
    };
    Ok(result.to_json())
}

fn dtv(c: u64, p: f64, q: f64, lambda: f64) -> Result<Value, Failure> {
    let err = |e| classify("dtv", e);
    let (rp, rq) = (p * lambda, q * lambda);
    let a = BinomialSpec::new(c, rp).map_err(err)?;
    let b = BinomialSpec::new(c, rq).map_err(err)?;
    let d = exact_dtv(&a, &b).map_err(err)?;
    let tau = roos_tau(rq - rp, c, rp).ok().map(f64::abs);
    Ok(json!({
        "c": c,
        "r": rp,
        "x": rq - rp,
        "dtv": d,
        "tau": tau,
        "bound": roos_bound(rq - rp, c, rp).value(),
    }))
}

fn experiment_config(
    cli: &Cli,
    config: Option<&Path>,
    experiment: Option<&str>,
    options: &[String],
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path).map_err(|e| classify("config", e))?;
            if let Some(p) = &cli.params {
                cfg.params = Params::load(p).map_err(|e| classify("params", e))?;
            }
            if let Some(name) = experiment {
                cfg.experiment = name.parse().map_err(|e| classify("config", e))?;
            }
            cfg
        }
        None => {
            let name = experiment.ok_or_else(|| usage(anyhow!("give --config or --experiment")))?;
            let e: Experiment = name.parse().map_err(|e| classify("config", e))?;
            let out = PathBuf::from(format!("{}.csv", e.name()));
            ExperimentConfig::new(load_params(cli.params.as_deref())?, e, 1000, 0, out)
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = Seed(s);
    }
    if let Some(t) = cli.trials {
        if t < 1 {
            return Err(usage(anyhow!("--trials must be at least 1")));
        }
        cfg.trials = t;
    }
    if let Some(o) = &cli.out {
        cfg.output_path = o.clone();
    }
    for kv in options {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.options.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(cfg)
}

fn experiment(cfg: &ExperimentConfig) -> Result<Value, Failure> {
    let (code, summary) = run_all(cfg);
    if code == EXIT_PASS {
        Ok(summary)
    } else {
        Err(Failure {
            code: code as u8,
            body: summary,
        })
    }
}

fn dispatch(cli: &Cli) -> Result<Value, Failure> {
    match &cli.command {
        Command::Gen { dist, emit_table } => gen(cli, *dist, emit_table.as_deref()),
        Command::Dist { table, k, eps } => dist(table, *k, *eps),
        Command::Game { mode, plan } => game(cli, *mode, plan),
        Command::Dtv { c, p, q, lambda } => dtv(*c, *p, *q, *lambda),
        Command::Verify {
            config,
            experiment: name,
            options,
        } => experiment(&experiment_config(cli, config.as_deref(), name.as_deref(), options)?),
        Command::Curve { budgets, m, monte_carlo } => {
            let mut opts = Vec::new();
            if let Some(b) = budgets {
                opts.push(format!("budgets={b}"));
            }
            if let Some(m) = m {
                opts.push(format!("curve_m={m}"));
            }
            if *monte_carlo {
                opts.push("monte_carlo=true".into());
            }
            experiment(&experiment_config(cli, None, Some("sseq_curve"), &opts)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(v) => {
            print(&v);
            ExitCode::SUCCESS
        }
        Err(f) => {
            if f.body.get("passed").is_some() && f.body.get("error").is_none() {
                print(&f.body);
            } else {
                eprintln!("{}", serde_json::to_string(&f.body).expect("serializable"));
            }
            ExitCode::from(f.code)
        }
    }
}
