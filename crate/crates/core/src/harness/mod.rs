//! Experiment orchestration: distinguishing games, verification suites,
//! configuration and CSV/JSON reporting.

mod experiments;

pub use experiments::*;

use crate::boolfn::{BitString, BoolFn, BoolFunction};
use crate::error::{Error, Result};
use crate::hardgen::Seed;
use crate::params::{parse_kv, Params};
use crate::tasks::{Decider, StringQueryPlan, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Two-sided normal quantile for 95% intervals.
pub const Z95: f64 = 1.959963984540054;
/// Success probability required of a tester.
pub const TESTER_SUCCESS: f64 = 5.0 / 6.0;

/// Formats a float with 12 significant digits, trimming trailing zeros.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResult {
    pub advantage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials_yes: u64,
    pub trials_no: u64,
    pub cost: u64,
    #[serde(skip)]
    pub wall_time: f64,
}

impl GameResult {
    /// Difference of yes-rates with a pooled-variance normal interval.
    pub fn from_counts(yes_hits: u64, trials_yes: u64, no_hits: u64, trials_no: u64, cost: u64) -> Self {
        let (ny, nn) = (trials_yes.max(1) as f64, trials_no.max(1) as f64);
        let advantage = yes_hits as f64 / ny - no_hits as f64 / nn;
        let pooled = (yes_hits + no_hits) as f64 / (ny + nn);
        let se = (pooled * (1.0 - pooled) * (1.0 / ny + 1.0 / nn)).sqrt();
        GameResult {
            advantage,
            ci_low: (advantage - Z95 * se).max(-1.0),
            ci_high: (advantage + Z95 * se).min(1.0),
            trials_yes,
            trials_no,
            cost,
            wall_time: 0.0,
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials_yes + self.trials_no
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "advantage": self.advantage,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "trials": self.trials(),
            "trials_yes": self.trials_yes,
            "trials_no": self.trials_no,
            "cost": self.cost,
        })
    }
}

/// A non-adaptive string-query algorithm.
pub trait Distinguisher: Sync {
    fn n(&self) -> usize;
    /// Number of queries.
    fn cost(&self) -> u64;
    /// Runs against `f`; `seed` drives any internal randomness.
    fn run(&self, f: &dyn BoolFunction, seed: Seed) -> Result<Verdict>;
}

impl Distinguisher for StringQueryPlan {
    fn n(&self) -> usize {
        StringQueryPlan::n(self)
    }

    fn cost(&self) -> u64 {
        self.q() as u64
    }

    fn run(&self, f: &dyn BoolFunction, _seed: Seed) -> Result<Verdict> {
        let answers = self
            .queries()
            .iter()
            .map(|x| f.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.decide(&answers))
    }
}

/// `q` fresh uniform queries per run.
#[derive(Clone)]
pub struct RandomQueries {
    pub n: usize,
    pub q: usize,
    pub decider: Decider,
}

impl RandomQueries {
    pub fn draw(&self, seed: Seed) -> Vec<BitString> {
        let mut st = seed.stream("queries");
        (0..self.q)
            .map(|_| BitString::from_bits(&(0..self.n).map(|_| st.bernoulli(0.5)).collect::<Vec<_>>()))
            .collect()
    }
}

impl Distinguisher for RandomQueries {
    fn n(&self) -> usize {
        self.n
    }

    fn cost(&self) -> u64 {
        self.q as u64
    }

    fn run(&self, f: &dyn BoolFunction, seed: Seed) -> Result<Verdict> {
        let answers = self
            .draw(seed)
            .iter()
            .map(|x| f.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Ok((self.decider)(&answers))
    }
}

/// Draws an instance from a seed.
pub type Sampler<'a> = dyn Fn(Seed) -> Result<BoolFn> + Sync + 'a;

/// Plays `trials/2` rounds against each side. Round `j` uses the same instance
/// and algorithm seeds on both sides.
pub fn run_game(
    gen_yes: &Sampler<'_>,
    gen_no: &Sampler<'_>,
    algorithm: &dyn Distinguisher,
    trials: u64,
    seed: Seed,
) -> Result<GameResult> {
    if trials < 2 {
        return Err(Error::InvalidInput("a game needs at least two trials".into()));
    }
    let start = Instant::now();
    let trials_yes = trials / 2;
    let trials_no = trials - trials_yes;
    let side = |gen: &Sampler<'_>, count: u64| -> Result<u64> {
        let hits = (0..count)
            .into_par_iter()
            .map(|j| {
                let f = gen(seed.trial(2 * j))?;
                if f.n() != algorithm.n() {
                    return Err(Error::DimensionMismatch {
                        expected: algorithm.n(),
                        found: f.n(),
                    });
                }
                Ok((algorithm.run(&f, seed.trial(2 * j + 1))? == Verdict::Yes) as u64)
            })
            .collect::<Result<Vec<u64>>>()?;
        Ok(hits.iter().sum())
    };
    let yes_hits = side(gen_yes, trials_yes)?;
    let no_hits = side(gen_no, trials_no)?;
    let mut r = GameResult::from_counts(yes_hits, trials_yes, no_hits, trials_no, algorithm.cost());
    r.wall_time = start.elapsed().as_secs_f64();
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "verify_yes")]
    VerifyYes,
    #[serde(rename = "verify_no")]
    VerifyNo,
    #[serde(rename = "verify_d1")]
    VerifyD1,
    #[serde(rename = "verify_d2")]
    VerifyD2,
    #[serde(rename = "game")]
    Game,
    #[serde(rename = "sseq_curve")]
    SseqCurve,
    #[serde(rename = "dtv_sweep")]
    DtvSweep,
    #[serde(rename = "claim53")]
    LiftEquivalence,
    #[serde(rename = "goodM")]
    GoodM,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::VerifyYes,
        Experiment::VerifyNo,
        Experiment::VerifyD1,
        Experiment::VerifyD2,
        Experiment::Game,
        Experiment::SseqCurve,
        Experiment::DtvSweep,
        Experiment::LiftEquivalence,
        Experiment::GoodM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyYes => "verify_yes",
            Experiment::VerifyNo => "verify_no",
            Experiment::VerifyD1 => "verify_d1",
            Experiment::VerifyD2 => "verify_d2",
            Experiment::Game => "game",
            Experiment::SseqCurve => "sseq_curve",
            Experiment::DtvSweep => "dtv_sweep",
            Experiment::LiftEquivalence => "claim53",
            Experiment::GoodM => "goodM",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{s}`")))
    }
}

const PARAM_KEYS: [&str; 15] = [
    "n", "alpha", "epsilon", "mode", "k", "delta", "p", "q", "m", "t", "tau", "c_alpha", "s", "L",
    "warning",
];

/// Experiment settings. Keys other than the parameter keys and
/// `experiment`, `trials`, `seed`, `output_path` land in `options`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: Params,
    pub experiment: Experiment,
    pub trials: u64,
    pub seed: Seed,
    pub output_path: PathBuf,
    pub options: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(params: Params, experiment: Experiment, trials: u64, seed: u64, output_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            params,
            experiment,
            trials,
            seed: Seed(seed),
            output_path: output_path.into(),
            options: BTreeMap::new(),
        }
    }

    pub fn with_option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let kv = parse_kv(text)?;
        let (param_kv, rest): (Vec<_>, Vec<_>) = kv.into_iter().partition(|(k, _)| PARAM_KEYS.contains(&k.as_str()));
        let params = Params::from_kv(&param_kv)?;
        let mut options: BTreeMap<String, String> = rest.into_iter().collect();
        let experiment: Experiment = options
            .remove("experiment")
            .ok_or_else(|| Error::Parse("missing key `experiment`".into()))?
            .parse()?;
        let trials = match options.remove("trials") {
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad trials `{v}`")))?,
            None => 1000,
        };
        if trials < 1 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        let seed = match options.remove("seed") {
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad seed `{v}`")))?,
            None => 0,
        };
        let output_path = options
            .remove("output_path")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.name())));
        Ok(ExperimentConfig {
            params,
            experiment,
            trials,
            seed: Seed(seed),
            output_path,
            options,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    pub fn option<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.options
            .get(key)
            .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`"))))
            .transpose()
    }

    pub fn option_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.option(key)?.unwrap_or(default))
    }

    /// Comma-separated list option.
    pub fn list_option<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.options
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad entry `{s}` in `{key}`"))))
                    .collect()
            })
            .transpose()
    }
}

/// Outcome of one experiment: a CSV table plus summary metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub passed: bool,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Report {
            name: name.to_string(),
            passed: true,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn metric(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn metric_f(&mut self, key: &str, value: f64) {
        self.metric(key, fmt_float(value).parse::<f64>().unwrap_or(value));
    }

    pub fn fail(&mut self, why: impl Into<String>) {
        self.passed = false;
        self.failures.push(why.into());
    }

    pub fn metric_value(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(|v| v.as_f64())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.name,
            "passed": self.passed,
            "metrics": self.metrics,
            "failures": self.failures,
        })
    }
}

/// Runs the experiment named by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    match config.experiment {
        Experiment::VerifyYes => verify_yes(config),
        Experiment::VerifyNo => verify_no(config),
        Experiment::VerifyD1 => verify_d1(config),
        Experiment::VerifyD2 => verify_d2(config),
        Experiment::Game => game_experiment(config),
        Experiment::SseqCurve => sseq_curve(config),
        Experiment::DtvSweep => dtv_sweep(config),
        Experiment::LiftEquivalence => lift_equivalence_sweep(config),
        Experiment::GoodM => good_m_experiment(config),
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

/// Path of the JSON summary written next to the CSV output.
pub fn summary_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Runs the experiment, writes CSV to `output_path` and the JSON summary to
/// `output_path.json`, and returns the process exit code with the summary.
pub fn run_all(config: &ExperimentConfig) -> (i32, serde_json::Value) {
    let report = match run_experiment(config) {
        Ok(r) => r,
        Err(e) => {
            let code = match e {
                Error::Parse(_) | Error::InvalidInput(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            };
            return (code, failure_json(config.experiment.name(), &e.to_string()));
        }
    };
    let write = || -> Result<()> {
        write_atomic(&config.output_path, report.to_csv()?.as_bytes())?;
        let json = serde_json::to_string_pretty(&report.summary_json()).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&summary_path(&config.output_path), json.as_bytes())
    };
    if let Err(e) = write() {
        return (EXIT_FAIL, failure_json(config.experiment.name(), &e.to_string()));
    }
    let code = if report.passed { EXIT_PASS } else { EXIT_FAIL };
    (code, report.summary_json())
}

/// Parses a config file and runs it; unknown experiments and bad keys exit 2.
pub fn run_config_text(text: &str) -> (i32, serde_json::Value) {
    match ExperimentConfig::from_config_str(text) {
        Ok(c) => run_all(&c),
        Err(e) => (EXIT_USAGE, failure_json("config", &e.to_string())),
    }
}

pub fn failure_json(stage: &str, error: &str) -> serde_json::Value {
    serde_json::json!({ "passed": false, "stage": stage, "error": error })
}
