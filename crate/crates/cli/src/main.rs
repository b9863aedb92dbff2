//! `aclab` — command-line surface of the actor-critic verification lab.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 MDP validation error,
//! 3 acceptance-verdict or property failure.

use aclab_core::experiments::{run_experiment, write_artifacts, ExperimentConfig};
use aclab_core::mdp::{self, check_ergodicity, joint_kernel, KernelKind, MdpSpec};
use aclab_core::ode::{integrate, write_ode_csv, OdeOptions};
use aclab_core::policy::{PolicyTable, ThetaTable};
use aclab_core::rates::RateSchedule;
use aclab_core::sim::{run, write_trajectory_csv, AcConfig, RunMetadata};
use aclab_core::table::Table;
use aclab_core::verify::run_verify;
use aclab_core::Error as CoreError;
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(name = "aclab", version, about = "Actor-critic verification laboratory")]
struct Cli {
    /// Base RNG seed for simulation commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "runs")]
    out_dir: PathBuf,
    /// Worker-pool size for experiment sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Rate schedule: "paper" or "constant:<zeta>,<eta>".
    #[arg(long, global = true, default_value = "paper")]
    schedule: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an MDP spec file; prints every violation.
    Validate { mdp: PathBuf },
    /// Generate a random MDP and write it as JSON.
    GenMdp(GenMdpArgs),
    /// Run the stochastic algorithm and export the trajectory.
    Simulate(SimulateArgs),
    /// Integrate the limit ODE system and export the trajectory.
    Ode(OdeArgs),
    /// Run an experiment from a JSON config file.
    Exp(ExpArgs),
    /// Run registered numerical property checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenMdpArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    actions: usize,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    min_prob: f64,
    /// Output file path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// MDP source: a fixture name (chainmdp, chainmdp-gamma05, single,
    /// constreward) or a JSON file path.
    #[arg(long)]
    mdp: String,
    /// Time-rescaling parameter N (step size 1/N, ⌊NT⌋ steps).
    #[arg(long)]
    n: u32,
    /// Horizon T.
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Comma-separated checkpoint times; default: 11 evenly spaced.
    #[arg(long)]
    checkpoints: Option<String>,
}

#[derive(Args)]
struct OdeArgs {
    /// MDP source: fixture name or JSON file path.
    #[arg(long)]
    mdp: String,
    /// Horizon T.
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// RK4 step.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Comma-separated checkpoint times; default: 11 evenly spaced.
    #[arg(long)]
    checkpoints: Option<String>,
}

#[derive(Args)]
struct ExpArgs {
    /// One of: ode-limit, critic-rate, actor-rate, fluctuation.
    experiment: String,
    /// JSON experiment config; omit to use the built-in chainmdp defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Only run properties whose name contains this substring.
    #[arg(long)]
    filter: Option<String>,
    /// Validate and load this MDP file first (exit 2 when invalid).
    #[arg(long)]
    mdp: Option<PathBuf>,
}

fn parse_schedule(text: &str) -> Result<RateSchedule> {
    if text == "paper" {
        return Ok(RateSchedule::Paper);
    }
    if let Some(rest) = text.strip_prefix("constant:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let zeta: f64 = parts[0].parse().context("bad zeta")?;
            let eta: f64 = parts[1].parse().context("bad eta")?;
            let schedule = RateSchedule::Constant { zeta, eta };
            schedule.validate()?;
            return Ok(schedule);
        }
    }
    Err(anyhow!(
        "unknown schedule {text:?}; expected \"paper\" or \"constant:<zeta>,<eta>\""
    ))
}

fn load_mdp_source(text: &str) -> Result<MdpSpec> {
    if let Some(spec) = mdp::fixtures::by_name(text) {
        return Ok(spec);
    }
    Ok(MdpSpec::load(text)?)
}

fn parse_checkpoints(text: &Option<String>, t_end: f64) -> Result<Vec<f64>> {
    match text {
        None => Ok(aclab_core::numeric::lin_spaced(0.0, t_end, 11)),
        Some(s) => s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| anyhow!("bad checkpoint {p:?}: {e}")))
            .collect(),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::InvalidMdp(_)) => EXIT_VALIDATION,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2; the contract reserves 2 for validation.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    let schedule = parse_schedule(&cli.schedule)?;
    match cli.command {
        Command::Validate { mdp } => {
            let text = std::fs::read_to_string(&mdp)
                .with_context(|| format!("reading {}", mdp.display()))?;
            match MdpSpec::from_json(&text) {
                Ok(spec) => {
                    println!(
                        "valid: {} states x {} actions, gamma = {}, hash {}",
                        spec.n_states(),
                        spec.n_actions(),
                        spec.gamma(),
                        spec.content_hash()
                    );
                    Ok(0)
                }
                Err(CoreError::InvalidMdp(report)) => {
                    println!("invalid:\n{report}");
                    Ok(EXIT_VALIDATION)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::GenMdp(args) => {
            let spec = mdp::random_mdp(args.states, args.actions, args.gamma, cli.seed, args.min_prob)?;
            spec.save(&args.out)?;
            println!("wrote {}", args.out.display());
            let uniform = PolicyTable::uniform(spec.n_states(), spec.n_actions());
            for kind in [KernelKind::OriginalWithG, KernelKind::RestartWithF] {
                let kernel = joint_kernel(&spec, &uniform, kind)?;
                let report = check_ergodicity(&kernel);
                println!(
                    "{kind:?} with uniform policy: irreducible={}, aperiodic={}, period={}, classes={}",
                    report.irreducible, report.aperiodic, report.period, report.n_communicating_classes
                );
            }
            Ok(0)
        }
        Command::Simulate(args) => {
            let spec = load_mdp_source(&args.mdp)?;
            let config = AcConfig {
                n: args.n,
                t_end: args.t,
                alpha: args.alpha,
                theta0: ThetaTable::zeros(spec.n_states(), spec.n_actions()),
                q0: Table::zeros(spec.n_states(), spec.n_actions()),
                seed: cli.seed,
                stream: 0,
                checkpoints: parse_checkpoints(&args.checkpoints, args.t)?,
                schedule,
            };
            let traj = run(&spec, &config)?;
            let dir = cli.out_dir.join("simulate");
            std::fs::create_dir_all(&dir)?;
            let csv_path = dir.join("trajectory.csv");
            let mut csv = Vec::new();
            write_trajectory_csv(&traj, &mut csv)?;
            std::fs::write(&csv_path, csv)?;
            let meta = RunMetadata::new(&spec, &traj);
            std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
            println!(
                "wrote {} ({} checkpoints, {} steps)",
                csv_path.display(),
                traj.points.len(),
                traj.total_steps
            );
            Ok(0)
        }
        Command::Ode(args) => {
            let spec = load_mdp_source(&args.mdp)?;
            let mut opts = OdeOptions::new(
                args.alpha,
                args.h,
                args.t,
                parse_checkpoints(&args.checkpoints, args.t)?,
            );
            opts.schedule = schedule;
            let traj = integrate(
                &spec,
                &ThetaTable::zeros(spec.n_states(), spec.n_actions()),
                &Table::zeros(spec.n_states(), spec.n_actions()),
                &opts,
            )?;
            let dir = cli.out_dir.join("ode");
            std::fs::create_dir_all(&dir)?;
            let csv_path = dir.join("trajectory.csv");
            let mut csv = Vec::new();
            write_ode_csv(&traj, &mut csv)?;
            std::fs::write(&csv_path, csv)?;
            let meta = serde_json::json!({
                "options": opts,
                "mdp_hash": spec.content_hash(),
                "j_star": traj.j_star,
            });
            std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
            println!(
                "wrote {} ({} checkpoints, J* = {:.6})",
                csv_path.display(),
                traj.points.len(),
                traj.j_star
            );
            Ok(0)
        }
        Command::Exp(args) => {
            let mut cfg: ExperimentConfig = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).context("parsing experiment config")?
                }
                None => ExperimentConfig::defaults_for(
                    &args.experiment,
                    aclab_core::experiments::MdpSource::Fixture("chainmdp".into()),
                ),
            };
            if cfg.experiment != args.experiment {
                return Err(anyhow!(
                    "config is for experiment {:?}, not {:?}",
                    cfg.experiment,
                    args.experiment
                ));
            }
            if cli.workers.is_some() {
                cfg.workers = cli.workers;
            }
            let report = run_experiment(&cfg)?;
            let dir = cli.out_dir.join(&cfg.experiment);
            write_artifacts(&cfg, &report, &dir)?;
            for v in &report.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            println!(
                "{}: artifacts in {}",
                if report.pass { "PASS" } else { "FAIL" },
                dir.display()
            );
            Ok(if report.pass { 0 } else { EXIT_VERDICT })
        }
        Command::Verify(args) => {
            if let Some(path) = &args.mdp {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                match MdpSpec::from_json(&text) {
                    Ok(spec) => println!("loaded MDP {} ({} states)", path.display(), spec.n_states()),
                    Err(CoreError::InvalidMdp(report)) => {
                        println!("FAIL mdp-validation:\n{report}");
                        return Ok(EXIT_VALIDATION);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let summary = run_verify(args.filter.as_deref());
            if summary.results.is_empty() {
                println!("no properties match the filter");
                return Ok(0);
            }
            for r in &summary.results {
                println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            let n_pass = summary.results.iter().filter(|r| r.pass).count();
            println!("{n_pass}/{} properties pass", summary.results.len());
            Ok(if summary.all_pass() { 0 } else { EXIT_VERDICT })
        }
    }
}
