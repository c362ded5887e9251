//! Command-line front end. Every subcommand resolves its flags (and an
//! optional JSON config) into an [`ExperimentConfig`], runs, and writes the
//! artifact to stdout or to `--out` plus a JSON sidecar.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::branching::{simulate_brw, Horizon, PARTICLE_HEADER};
use crate::ensemble::{self, StatisticKind};
use crate::error::{Error, Result};
use crate::io::{csv_string, sidecar_path, write_json, Sidecar};
use crate::laws::{classify, EchoLaw, SpinLaw, WalkParams};
use crate::limits::{fixpoint_pool, FixpointOptions};
use crate::stats::ks_two_sample;
use crate::tape::RandomTape;
use crate::tree::{grow, subtree_weights, TREE_HEADER};
use crate::urn::{composite_sample, direct_sample};
use crate::verify::Budget;
use crate::walk::simulate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Parameters shared by the subcommands; every field is optional so that a
/// config file and the flags can be merged, flags winning.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Memory parameter p in (0, 1].
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Echo law, e.g. const:2, bernoulli:0.5, discrete:1@0.5,3@0.5, exp:1.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo: Option<EchoLaw>,
    /// Spin law, e.g. const:1, rademacher, normal:0,1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<SpinLaw>,
    /// Number of steps (walk, tree, urn-check) or particles (brw).
    #[arg(short = 'n', global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Increasing checkpoint grid, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    /// Replicates (ensemble, urn-check) or pool size (fixpoint).
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Master seed; falls back to ECHOED_WALKS_SEED, then 0.
    #[arg(long, global = true, env = "ECHOED_WALKS_SEED")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Ensemble statistic: raw, scaled, linear, nlogn, centered, centered-log, martingale.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<StatisticKind>,
    /// Time horizon of the branching random walk.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Population-dynamics generations.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    /// Keep the pool mean pinned to its exact value (fixpoint).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<bool>,
    /// Run acceptance suites at smoke-test sizes.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quick: Option<bool>,
}

impl ExperimentConfig {
    /// Fill unset fields from `base`.
    pub fn or(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            p: self.p.or(base.p),
            echo: self.echo.or(base.echo),
            spin: self.spin.or(base.spin),
            n: self.n.or(base.n),
            checkpoints: self.checkpoints.or(base.checkpoints),
            reps: self.reps.or(base.reps),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
            statistic: self.statistic.or(base.statistic),
            time: self.time.or(base.time),
            generations: self.generations.or(base.generations),
            renormalize: self.renormalize.or(base.renormalize),
            quick: self.quick.or(base.quick),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    pub fn from_json(v: &Value) -> Result<ExperimentConfig> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Read a config file: either a plain config object or a sidecar, in
    /// which case its `config` member is used.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        match v.get("config") {
            Some(inner) if v.get("config_hash").is_some() => Self::from_json(inner),
            _ => Self::from_json(&v),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::InvalidParameter(format!("missing required field '{field}'")))
    }

    fn params(&self) -> Result<WalkParams> {
        let p = Self::need(&self.p, "p")?;
        let echo = Self::need(&self.echo, "echo")?;
        let spin = Self::need(&self.spin, "spin")?;
        WalkParams::new(p, echo, spin).map_err(|e| Error::InvalidParameter(format!("p/echo/spin: {e}")))
    }

    fn n(&self) -> Result<usize> {
        let n = Self::need(&self.n, "n")?;
        if n == 0 {
            return Err(Error::InvalidParameter("field 'n' must be >= 1".into()));
        }
        Ok(n)
    }
}

#[derive(Debug, Parser)]
#[command(name = "echoed-walks", version, about = "Random walks with echoed steps: simulation and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: ExperimentConfig,
    /// JSON config (or a sidecar from an earlier run); flags override it.
    #[arg(long = "config", global = true)]
    pub config_file: Option<PathBuf>,
    /// Worker threads; changes wall time only.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; a JSON sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Regime, uniform integrability and asymptotic constants.
    Classify,
    /// Simulate one path.
    Walk,
    /// Grow the memory tree.
    Tree,
    /// Compare the urn decomposition with direct simulation.
    UrnCheck,
    /// Simulate the branching random walk.
    Brw,
    /// Population-dynamics pool for the limit law.
    Fixpoint,
    /// Monte Carlo ensemble summary over a checkpoint grid.
    Ensemble,
    /// Run acceptance suites: all, mean, phase, limit, degeneracy,
    /// representation, urn, brw, many-to-one, fixpoint, lambda, rates.
    Verify { suite: String },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Walk => "walk",
            Command::Tree => "tree",
            Command::UrnCheck => "urn-check",
            Command::Brw => "brw",
            Command::Fixpoint => "fixpoint",
            Command::Ensemble => "ensemble",
            Command::Verify { .. } => "verify",
        }
    }
}

/// A produced artifact: its text and any metadata for the sidecar.
struct Artifact {
    text: String,
    metadata: Value,
    exit: i32,
}

fn artifact(text: String, metadata: Value) -> Artifact {
    Artifact { text, metadata, exit: EXIT_OK }
}

fn json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn execute(cmd: &Command, cfg: &ExperimentConfig, progress: &mut dyn Write) -> Result<Artifact> {
    let format = cfg.format.unwrap_or(Format::Csv);
    let tape = RandomTape::new(cfg.seed(), 0);
    match cmd {
        Command::Classify => {
            let rep = classify(&cfg.params()?)?;
            let text = match format {
                Format::Json => json_text(&rep),
                Format::Csv => {
                    let v = serde_json::to_value(&rep).expect("serialisable");
                    let rows = v
                        .as_object()
                        .expect("report is an object")
                        .iter()
                        .map(|(k, v)| format!("{k},{}", v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())));
                    csv_string("field,value", rows)
                }
            };
            Ok(artifact(text, json!({"regime": rep.regime})))
        }
        Command::Walk => {
            let pr = cfg.params()?;
            let n = cfg.n()?;
            let t = simulate(&pr, n, &tape);
            let text = match format {
                Format::Csv => t.to_csv(),
                Format::Json => json_text(&json!({"increments": t.increments, "positions": t.positions})),
            };
            Ok(artifact(text, json!({"n": n, "final_position": t.position(n)})))
        }
        Command::Tree => {
            let pr = cfg.params()?;
            let n = cfg.n()?;
            let tree = grow(&pr, n, &tape);
            let sub = subtree_weights(&tree);
            let text = match format {
                Format::Csv => csv_string(TREE_HEADER, tree.csv_rows(&sub)),
                Format::Json => json_text(&json!({
                    "parent": tree.parent,
                    "retained": tree.retained,
                    "omega": tree.omega,
                    "component_roots": sub.roots,
                })),
            };
            Ok(artifact(text, json!({"n": n, "components": sub.roots.len()})))
        }
        Command::UrnCheck => {
            let pr = cfg.params()?;
            let n = cfg.n()? as u64;
            let reps = cfg.reps.unwrap_or(10_000);
            let a = composite_sample(&pr, n, reps, &tape)?;
            let b = direct_sample(&pr, n, reps, &tape);
            let ks = ks_two_sample(&a, &b, 0.01)?;
            let v = json!({"n": n, "reps": reps, "statistic": ks.statistic, "threshold": ks.threshold, "alpha": ks.alpha, "reject": ks.reject});
            let text = match format {
                Format::Json => json_text(&v),
                Format::Csv => csv_string(
                    "n,reps,statistic,threshold,alpha,reject",
                    [format!("{n},{reps},{},{},{},{}", ks.statistic, ks.threshold, ks.alpha, ks.reject)],
                ),
            };
            Ok(Artifact {
                text,
                metadata: v,
                exit: if ks.reject { EXIT_VERIFY_FAILED } else { EXIT_OK },
            })
        }
        Command::Brw => {
            let echo = ExperimentConfig::need(&cfg.echo, "echo")?;
            let horizon = match (cfg.time, cfg.n) {
                (Some(t), None) => Horizon::Time(t),
                (None, Some(n)) => Horizon::Particles(n),
                (None, None) => Horizon::Time(5.0),
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidParameter("give either 'time' or 'n' for brw, not both".into()))
                }
            };
            let st = simulate_brw(&echo, horizon, &tape)?;
            let text = match format {
                Format::Csv => st.to_csv(),
                Format::Json => json_text(&json!({
                    "parent": st.parent, "birth_time": st.birth,
                    "position": st.position.iter().map(|x| crate::io::fmt_f64(*x)).collect::<Vec<_>>(),
                    "clock": st.clock,
                })),
            };
            Ok(artifact(text, json!({"particles": st.len(), "clock": st.clock, "header": PARTICLE_HEADER})))
        }
        Command::Fixpoint => {
            let echo = ExperimentConfig::need(&cfg.echo, "echo")?;
            let opts = FixpointOptions {
                size: cfg.reps.unwrap_or(100_000),
                generations: cfg.generations.unwrap_or(200),
                renormalize: cfg.renormalize.unwrap_or(true),
            };
            let pool = fixpoint_pool(&echo, opts, &tape)?;
            let moments: Vec<f64> = (1..=3).map(|k| pool.moment(k).mean).collect();
            let meta = json!({
                "law": pool.law, "N": pool.len(), "generations": pool.generation,
                "seed": cfg.seed(), "moments": moments, "degenerate": pool.degenerate,
                "renormalized": pool.renormalized,
            });
            let text = match format {
                Format::Csv => csv_string("sample", pool.csv_rows()),
                Format::Json => json_text(&json!({"samples": pool.samples, "metadata": meta})),
            };
            Ok(artifact(text, meta))
        }
        Command::Ensemble => {
            let pr = cfg.params()?;
            let kind = cfg.statistic.unwrap_or(StatisticKind::Raw);
            let checkpoints = ExperimentConfig::need(&cfg.checkpoints, "checkpoints")?;
            let reps = cfg.reps.unwrap_or(1000);
            let s = ensemble::run(&pr, kind, &checkpoints, reps, &tape)?;
            let text = match format {
                Format::Csv => s.to_csv(),
                Format::Json => json_text(&s.rows),
            };
            Ok(artifact(
                text,
                json!({"p": pr.p, "echo": pr.echo, "spin": pr.spin, "statistic": kind, "checkpoints": checkpoints, "N": reps}),
            ))
        }
        Command::Verify { suite } => {
            let budget = if cfg.quick.unwrap_or(false) { Budget::QUICK } else { Budget::FULL };
            let ids = crate::verify::suite_ids(suite)?;
            let mut criteria = Vec::new();
            for id in ids {
                let c = crate::verify::criterion(id, cfg.seed(), budget)?;
                writeln!(progress, "{c}").ok();
                criteria.push(c);
            }
            let passed = criteria.iter().all(|c| c.pass);
            let report = crate::verify::VerifyReport {
                suite: suite.clone(),
                seed: cfg.seed(),
                budget,
                passed,
                criteria,
            };
            let text = match format {
                Format::Json => json_text(&report),
                Format::Csv => csv_string(
                    "criterion,name,pass,detail",
                    report
                        .criteria
                        .iter()
                        .map(|c| format!("{},{},{},\"{}\"", c.id, c.name, c.pass, c.detail.replace('"', "'"))),
                ),
            };
            Ok(Artifact {
                text,
                metadata: json!({"suite": suite, "passed": passed}),
                exit: if passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
            })
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            write!(sink, "{}", e.render()).ok();
            return code;
        }
    };
    match run_cli(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            writeln!(stderr, "error: {e}").ok();
            EXIT_CONFIG
        }
    }
}

fn run_cli(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let base = match &cli.config_file {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = cli.config.clone().or(base);
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidParameter("field 'threads' must be >= 1".into()));
        }
        // the global pool can be set once per process; later calls keep it,
        // which is harmless because results never depend on the thread count
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let art = execute(&cli.command, &cfg, stderr)?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &art.text)?;
            let mut recorded = cfg.clone();
            recorded.seed = Some(cfg.seed());
            let side = Sidecar::new(cli.command.name(), recorded.to_json(), cfg.seed(), art.metadata);
            write_json(sidecar_path(path), &side)?;
        }
        None => {
            stdout.write_all(art.text.as_bytes())?;
        }
    }
    Ok(art.exit)
}
