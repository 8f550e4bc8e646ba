//! Command-line front end. Exit codes: 0 all verdicts pass, 2 a verdict
//! failed, 1 operational error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::algebra::{DualQuaternion, DualVector};
use crate::dynamics::state_norm_squared;
use crate::error::{Error, Result};
use crate::sim::record::fmt_f64;
use crate::sim::{
    envelope_for, read_csv, run_scenario, write_outputs, ClosedLoop, NamedVerdict, RunSummary, ScenarioConfig,
    ScenarioKind,
};
use crate::stability::{check_envelope, check_iss, make_iss_bound, IssBound, StabilityEnvelope, Verdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Relative tolerance when re-deriving `norm_x` from the state columns.
const NORM_RECHECK_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "dqtrack", version, about = "Dual-quaternion tracking control scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write CSV/JSON artifacts.
    Run(ConfigArgs),
    /// Re-verify a trajectory CSV against a run summary.
    Check {
        #[arg(long)]
        trajectory: PathBuf,
        /// `summary.json` written by `run`.
        #[arg(long)]
        envelope: PathBuf,
    },
    /// Print the closed-form stability constants as JSON.
    Constants(ConfigArgs),
    /// Write the resolved config and a wide CSV of state norms for plotting.
    Export(ConfigArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    /// TOML (or JSON) config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    /// `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn for_scenario(name: &str) -> Self {
        Self {
            scenario: Some(name.to_string()),
            config: None,
            out: PathBuf::from("out"),
            seed: None,
            n: None,
            dt: None,
            t_final: None,
            set: Vec::new(),
        }
    }

    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let kind = self.scenario.as_deref().map(str::parse::<ScenarioKind>).transpose()?;
        let mut cfg = match (&self.config, kind) {
            (Some(path), k) => {
                let c = ScenarioConfig::load(path, k)?;
                if let Some(k) = k {
                    if c.scenario != k {
                        return Err(Error::Config(format!(
                            "--scenario {k} conflicts with config scenario {}",
                            c.scenario
                        )));
                    }
                }
                c
            }
            (None, Some(k)) => ScenarioConfig::defaults(k),
            (None, None) => return Err(Error::Config("pass --scenario or --config".into())),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.t_final {
            cfg.t_final = t;
        }
        for s in &self.set {
            cfg.set(s)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn cmd_run(args: &ConfigArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = args.resolve()?;
    let out = run_scenario(&cfg)?;
    write_outputs(&out, &args.out)?;
    let s = &out.summary;
    let parts: Vec<String> = s.verdicts.iter().map(|v| format!("{} {}/{}", v.name, v.passed, v.total)).collect();
    writeln!(
        stdout,
        "{} {}: {} ({})",
        s.scenario,
        if s.all_pass { "PASS" } else { "FAIL" },
        parts.join(", "),
        args.out.display()
    )?;
    Ok(if s.all_pass { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct Constants {
    scenario: String,
    envelope: StabilityEnvelope,
    m_env: Option<f64>,
    iss: IssBound,
}

pub fn cmd_constants(args: &ConfigArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = args.resolve()?;
    let plant = ClosedLoop::from_config(&cfg)?;
    let env = envelope_for(&cfg, &plant)?;
    let iss = make_iss_bound(&env, &plant.gains, cfg.d_max)?;
    let c = Constants {
        scenario: cfg.scenario.name().into(),
        envelope: env,
        m_env: Some(env.m_env()).filter(|m| m.is_finite()),
        iss,
    };
    writeln!(stdout, "{}", serde_json::to_string_pretty(&c)?)?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct CheckReport {
    trajectory: String,
    pass: bool,
    verdicts: Vec<NamedVerdict>,
}

/// Recomputes the offline verdicts of one trajectory from files alone.
pub fn check_files(trajectory: &Path, summary: &Path) -> Result<Vec<NamedVerdict>> {
    let run = RunSummary::read(summary)?;
    let text = std::fs::read_to_string(trajectory)?;
    let rec = if text.trim().is_empty() { Default::default() } else { read_csv(text.as_bytes())? };
    if rec.samples.is_empty() {
        return Err(Error::Domain(format!("{} holds no samples", trajectory.display())));
    }
    let mut out = Vec::new();

    let mut first = None;
    let mut margin = f64::MAX;
    for (i, s) in rec.samples.iter().enumerate() {
        let q = DualQuaternion::from_array(&s.q_err);
        let w = DualVector::from_array(&s.w_err);
        let n = state_norm_squared(&q, &w).sqrt();
        let m = NORM_RECHECK_TOL * n.max(1.0) - (s.norm_x - n).abs();
        if !(m >= 0.0) && first.is_none() {
            first = Some(i);
        }
        margin = margin.min(if m.is_nan() { f64::MIN } else { m });
    }
    out.push(NamedVerdict {
        name: "norm_consistency".into(),
        verdict: Verdict { pass: first.is_none(), margin, first_violation: first },
    });

    let times = rec.times();
    let norms = rec.norms();
    for check in &run.offline_checks {
        let v = match check.as_str() {
            "envelope" => check_envelope(&times, &norms, &run.envelope)?,
            "iss" => {
                let b = run.iss.ok_or_else(|| Error::Parse("summary lacks an ISS bound".into()))?;
                check_iss(&times, &norms, &b, run.config.settle_fraction)?
            }
            other => return Err(Error::Parse(format!("unknown offline check '{other}'"))),
        };
        out.push(NamedVerdict { name: check.clone(), verdict: v });
    }
    Ok(out)
}

pub fn cmd_check(trajectory: &Path, summary: &Path, stdout: &mut dyn Write) -> Result<i32> {
    let verdicts = check_files(trajectory, summary)?;
    let pass = verdicts.iter().all(|v| v.verdict.pass);
    let report = CheckReport { trajectory: trajectory.display().to_string(), pass, verdicts };
    writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cmd_export(args: &ConfigArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = args.resolve()?;
    let out = run_scenario(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("config.toml"), cfg.to_toml()?)?;

    let env = &out.summary.envelope;
    let x0_max = out.summary.trajectories.iter().map(|t| t.x0_norm).fold(0.0, f64::max);
    let path = args.out.join("norms.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["t".to_string(), "envelope".to_string()];
    header.extend(out.summary.trajectories.iter().map(|t| format!("traj_{:03}", t.index)));
    w.write_record(&header)?;
    let rows = out.records.iter().map(|r| r.samples.len()).min().unwrap_or(0);
    for i in 0..rows {
        let t = out.records[0].samples[i].t;
        let bound = (env.ln_m_env - env.alpha * t + x0_max.ln()).exp();
        let mut row = vec![fmt_f64(t), fmt_f64(bound)];
        row.extend(out.records.iter().map(|r| fmt_f64(r.samples[i].norm_x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    writeln!(stdout, "wrote {} and config.toml", path.display())?;
    Ok(if out.summary.all_pass { EXIT_PASS } else { EXIT_FAIL })
}

/// Dispatches a parsed command line; errors are reported on `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Check { trajectory, envelope } => cmd_check(trajectory, envelope, stdout),
        Command::Constants(a) => cmd_constants(a, stdout),
        Command::Export(a) => cmd_export(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
