//! Seeded experiment orchestration with pass/fail verdicts.
//!
//! Four experiments measure the finitely checkable convergence claims:
//!
//! * `ode-limit` — seed-averaged sup-over-checkpoints distance between the
//!   stochastic run and the limit ODE, per N; must decay in N.
//! * `critic-rate` — ‖Q̄_t − V^{f_θ̄t}‖₂ at log-spaced horizons; must be
//!   strictly decreasing and dominated by c/log²t anchored at the first
//!   report time.
//! * `actor-rate` — J(f*) − J(f_θ̄t) at log-spaced horizons plus the
//!   minimum optimal-action mass; the gap must keep shrinking after
//!   burn-in and the mass must stay bounded away from zero.
//! * `fluctuation` — seed means of the empirical stochastic-error tables
//!   per N; must drop by the configured factor from N_min to N_max.
//!
//! Every experiment is a pure function of (config, seeds): reruns produce
//! byte-identical raw.csv bodies, and aggregation is order-independent in
//! the seeds list.

use crate::error::{Error, Result};
use crate::mdp::{self, MdpSpec};
use crate::numeric;
use crate::ode::{integrate, OdeOptions, OdeTrajectory};
use crate::policy::{softmax_policy, ThetaTable};
use crate::rates::RateSchedule;
use crate::sim::{empirical_fluctuation, run, AcConfig};
use crate::solvers::{optimal_policy, value_functions};
use crate::table::Table;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Where an experiment gets its MDP.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MdpSource {
    Path(PathBuf),
    Fixture(String),
    Random {
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        seed: u64,
        min_prob: f64,
    },
}

impl MdpSource {
    pub fn load(&self) -> Result<MdpSpec> {
        match self {
            MdpSource::Path(p) => MdpSpec::load(p),
            MdpSource::Fixture(name) => mdp::fixtures::by_name(name).ok_or_else(|| {
                Error::invalid_argument(format!(
                    "unknown fixture {name:?}; known: {:?}",
                    mdp::fixtures::NAMES
                ))
            }),
            MdpSource::Random {
                n_states,
                n_actions,
                gamma,
                seed,
                min_prob,
            } => mdp::random_mdp(*n_states, *n_actions, *gamma, *seed, *min_prob),
        }
    }
}

/// Acceptance thresholds; defaults encode the desk-scale expectations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// ode-limit: mean error at N_max must be ≤ mean at N_min / this.
    pub halving_factor: f64,
    /// fluctuation: mean magnitudes must drop by this factor.
    pub fluctuation_factor: f64,
    /// fluctuation: required N_max/N_min ratio.
    pub min_n_ratio: f64,
    /// actor-rate: monotonicity checks start here.
    pub burn_in: f64,
    /// actor-rate: final gap ≤ gap(burn_in) / this.
    pub final_gap_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            halving_factor: 2.0,
            fluctuation_factor: 2.0,
            min_n_ratio: 16.0,
            burn_in: 10.0,
            final_gap_ratio: 3.0,
        }
    }
}

/// Full experiment configuration (JSON on disk).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// One of "ode-limit", "critic-rate", "actor-rate", "fluctuation".
    pub experiment: String,
    pub mdp: MdpSource,
    #[serde(default)]
    pub n_grid: Vec<u32>,
    pub t_end: f64,
    pub alpha: f64,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// RK4 step for the rate experiments.
    #[serde(default = "default_ode_step")]
    pub ode_step: f64,
    /// RK4 step for the shared ode-limit reference trajectory.
    #[serde(default = "default_ode_ref_step")]
    pub ode_ref_step: f64,
    /// Optional explicit checkpoint/report times.
    #[serde(default)]
    pub checkpoints: Option<Vec<f64>>,
    #[serde(default)]
    pub schedule: RateSchedule,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_ode_step() -> f64 {
    0.1
}

fn default_ode_ref_step() -> f64 {
    1e-3
}

impl ExperimentConfig {
    /// Acceptance-grade defaults per experiment.
    pub fn defaults_for(experiment: &str, mdp: MdpSource) -> Self {
        let (n_grid, t_end, seeds, ode_step) = match experiment {
            "ode-limit" => (vec![200, 800, 3200], 2.0, (0..20).collect(), 0.1),
            "fluctuation" => (vec![200, 3200], 2.0, (0..20).collect(), 0.1),
            "critic-rate" | "actor-rate" => (vec![], 1e4, vec![], 0.1),
            _ => (vec![], 1.0, vec![], 0.1),
        };
        ExperimentConfig {
            experiment: experiment.to_string(),
            mdp,
            n_grid,
            t_end,
            alpha: 1.0,
            seeds,
            ode_step,
            ode_ref_step: default_ode_ref_step(),
            checkpoints: None,
            schedule: RateSchedule::Paper,
            workers: None,
            thresholds: Thresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !matches!(
            self.experiment.as_str(),
            "ode-limit" | "critic-rate" | "actor-rate" | "fluctuation"
        ) {
            return Err(Error::invalid_argument(format!(
                "unknown experiment {:?}",
                self.experiment
            )));
        }
        if matches!(self.experiment.as_str(), "ode-limit" | "fluctuation") {
            if self.n_grid.is_empty() {
                return Err(Error::invalid_argument("n_grid must be nonempty"));
            }
            if self.seeds.is_empty() {
                return Err(Error::invalid_argument("seeds must be nonempty"));
            }
            let mut sorted = self.seeds.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.seeds.len() {
                return Err(Error::invalid_argument("seeds must be distinct"));
            }
            if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid_argument("n_grid must be strictly increasing"));
            }
        }
        if !(self.t_end > 0.0) || !(self.alpha >= 0.0) || !(self.ode_step > 0.0) {
            return Err(Error::invalid_argument(
                "t_end and ode_step must be positive, alpha nonnegative",
            ));
        }
        Ok(())
    }
}

/// Per-grid-point aggregate of a measured quantity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesPoint {
    /// Grid coordinate: N for sweep experiments, t for rate experiments.
    pub grid: f64,
    pub mean: f64,
    pub std: f64,
    /// (seed, value) pairs, sorted by seed.
    pub per_seed: Vec<(u64, f64)>,
}

/// One named measured series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<SeriesPoint>,
}

/// A single acceptance verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Experiment outcome: series, verdicts, and an optional fitted log-log
/// slope of the primary series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendReport {
    pub experiment: String,
    pub series: Vec<Series>,
    pub verdicts: Vec<Verdict>,
    pub slope: Option<f64>,
    pub pass: bool,
}

impl TrendReport {
    fn finish(experiment: &str, series: Vec<Series>, verdicts: Vec<Verdict>, slope: Option<f64>) -> Self {
        let pass = verdicts.iter().all(|v| v.pass);
        TrendReport {
            experiment: experiment.to_string(),
            series,
            verdicts,
            slope,
            pass,
        }
    }
}

fn aggregate(name: &str, mut raw: Vec<(f64, u64, f64)>) -> Series {
    raw.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
    });
    let mut points: Vec<SeriesPoint> = Vec::new();
    for (grid, seed, value) in raw {
        match points.last_mut() {
            Some(p) if p.grid == grid => p.per_seed.push((seed, value)),
            _ => points.push(SeriesPoint {
                grid,
                mean: 0.0,
                std: 0.0,
                per_seed: vec![(seed, value)],
            }),
        }
    }
    for p in &mut points {
        let values: Vec<f64> = p.per_seed.iter().map(|&(_, v)| v).collect();
        let (mean, std) = numeric::mean_std(&values);
        p.mean = mean;
        p.std = std;
    }
    Series {
        name: name.to_string(),
        points,
    }
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Sup-over-checkpoints distance between a stochastic run and the ODE
/// reference, in the flattened Euclidean and sup norms.
fn run_distance(
    spec: &MdpSpec,
    cfg: &ExperimentConfig,
    reference: &OdeTrajectory,
    checkpoints: &[f64],
    n: u32,
    seed: u64,
) -> Result<(f64, f64)> {
    let ac = AcConfig {
        n,
        t_end: cfg.t_end,
        alpha: cfg.alpha,
        theta0: ThetaTable::zeros(spec.n_states(), spec.n_actions()),
        q0: Table::zeros(spec.n_states(), spec.n_actions()),
        seed,
        stream: n as u64,
        checkpoints: checkpoints.to_vec(),
        schedule: cfg.schedule.clone(),
    };
    let traj = run(spec, &ac)?;
    let mut sup_l2 = 0.0f64;
    let mut sup_inf = 0.0f64;
    for (point, ref_point) in traj.points.iter().zip(&reference.points) {
        let dtheta = point.theta.sub(&ref_point.theta);
        let dq = point.q.sub(&ref_point.q);
        sup_l2 = sup_l2.max(dtheta.l2_norm() + dq.l2_norm());
        sup_inf = sup_inf.max(dtheta.sup_norm() + dq.sup_norm());
    }
    Ok((sup_l2, sup_inf))
}

/// Convergence of the rescaled stochastic algorithm to the limit ODE.
pub fn exp_ode_limit(spec: &MdpSpec, cfg: &ExperimentConfig) -> Result<TrendReport> {
    cfg.validate()?;
    let checkpoints = cfg
        .checkpoints
        .clone()
        .unwrap_or_else(|| numeric::lin_spaced(0.0, cfg.t_end, 21));
    let mut ode_opts = OdeOptions::new(cfg.alpha, cfg.ode_ref_step, cfg.t_end, checkpoints.clone());
    ode_opts.schedule = cfg.schedule.clone();
    let reference = integrate(
        spec,
        &ThetaTable::zeros(spec.n_states(), spec.n_actions()),
        &Table::zeros(spec.n_states(), spec.n_actions()),
        &ode_opts,
    )?;

    let jobs: Vec<(u32, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<Result<(u32, u64, f64, f64)>> = in_pool(cfg.workers, || {
        jobs.par_iter()
            .map(|&(n, seed)| {
                run_distance(spec, cfg, &reference, &checkpoints, n, seed)
                    .map(|(l2, sup)| (n, seed, l2, sup))
            })
            .collect()
    })?;
    let mut l2_raw = Vec::new();
    let mut sup_raw = Vec::new();
    for r in results {
        let (n, seed, l2, sup) = r?;
        l2_raw.push((n as f64, seed, l2));
        sup_raw.push((n as f64, seed, sup));
    }
    let l2_series = aggregate("sup_t_l2_distance", l2_raw);
    let sup_series = aggregate("sup_t_sup_distance", sup_raw);

    let means: Vec<f64> = l2_series.points.iter().map(|p| p.mean).collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let first = means[0];
    let last = *means.last().unwrap();
    let halved = last <= first / cfg.thresholds.halving_factor;
    let slope = {
        let xs: Vec<f64> = l2_series.points.iter().map(|p| p.grid.ln()).collect();
        let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        numeric::linear_fit(&xs, &ys).ok().map(|(s, _, _)| s)
    };
    let verdicts = vec![
        Verdict {
            name: "mean-error-strictly-decreasing".into(),
            pass: decreasing,
            detail: format!("means over N grid: {means:?}"),
        },
        Verdict {
            name: "final-error-halved".into(),
            pass: halved,
            detail: format!(
                "error(N_max) = {last:.4e}, error(N_min)/{} = {:.4e}",
                cfg.thresholds.halving_factor,
                first / cfg.thresholds.halving_factor
            ),
        },
    ];
    Ok(TrendReport::finish(
        "ode-limit",
        vec![l2_series, sup_series],
        verdicts,
        slope,
    ))
}

/// Critic convergence rate against V^{f_θ̄t} at log-spaced horizons.
pub fn exp_critic_rate(spec: &MdpSpec, cfg: &ExperimentConfig) -> Result<TrendReport> {
    cfg.validate()?;
    let report_times = cfg
        .checkpoints
        .clone()
        .unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    let mut checkpoints = numeric::log_spaced(1.0, cfg.t_end, 25);
    checkpoints.extend_from_slice(&report_times);
    checkpoints.retain(|&t| t <= cfg.t_end);
    checkpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    checkpoints.dedup();
    let mut opts = OdeOptions::new(cfg.alpha, cfg.ode_step, cfg.t_end, checkpoints);
    opts.schedule = cfg.schedule.clone();
    let traj = integrate(
        spec,
        &ThetaTable::zeros(spec.n_states(), spec.n_actions()),
        &Table::zeros(spec.n_states(), spec.n_actions()),
        &opts,
    )?;

    // ‖Q̄_t − V^{f_θ̄t}‖₂ against the plain (exploration-free) policy.
    let err_f = |p: &crate::ode::OdeCheckpoint| -> Result<f64> {
        let theta = ThetaTable::new(p.theta.clone())?;
        let vp = value_functions(spec, &softmax_policy(&theta))?;
        Ok(p.q.sub(&vp.v_state_action).l2_norm())
    };
    let mut raw = Vec::new();
    for p in &traj.points {
        raw.push((p.t, 0u64, err_f(p)?));
    }
    let series = aggregate("critic_error_vs_f", raw);

    let report_vals: Vec<(f64, f64)> = report_times
        .iter()
        .map(|&t| {
            let p = traj.at(t);
            (t, err_f(p).unwrap_or(f64::NAN))
        })
        .collect();
    let decreasing = report_vals.windows(2).all(|w| w[1].1 < w[0].1);
    let (t1, e1) = report_vals[0];
    let c = e1 * t1.ln().powi(2);
    let dominated = report_vals
        .iter()
        .all(|&(t, e)| e <= c / t.ln().powi(2) + 1e-12);
    let verdicts = vec![
        Verdict {
            name: "strictly-decreasing".into(),
            pass: decreasing,
            detail: format!("values at report times: {report_vals:?}"),
        },
        Verdict {
            name: "dominated-by-c-over-log-squared".into(),
            pass: dominated,
            detail: format!("c = {c:.4e} anchored at t = {t1}"),
        },
    ];
    Ok(TrendReport::finish("critic-rate", vec![series], verdicts, None))
}

/// Actor global convergence: suboptimality gap decay and optimal-action
/// mass at log-spaced horizons.
pub fn exp_actor_rate(spec: &MdpSpec, cfg: &ExperimentConfig) -> Result<TrendReport> {
    cfg.validate()?;
    if spec.mu().iter().any(|&m| m <= 0.0) {
        return Err(Error::invalid_argument(
            "actor-rate requires mu of full support",
        ));
    }
    let burn_in = cfg.thresholds.burn_in;
    let mut checkpoints = numeric::log_spaced(1.0, cfg.t_end, 30);
    checkpoints.push(burn_in);
    checkpoints.push(100.0f64.min(cfg.t_end));
    checkpoints.retain(|&t| t <= cfg.t_end);
    checkpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    checkpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut opts = OdeOptions::new(cfg.alpha, cfg.ode_step, cfg.t_end, checkpoints);
    opts.schedule = cfg.schedule.clone();
    let traj = integrate(
        spec,
        &ThetaTable::zeros(spec.n_states(), spec.n_actions()),
        &Table::zeros(spec.n_states(), spec.n_actions()),
        &opts,
    )?;
    let opt = optimal_policy(spec)?;

    let min_mass = |p: &crate::ode::OdeCheckpoint| -> f64 {
        let theta = ThetaTable::new(p.theta.clone()).expect("theta stays finite");
        let f = softmax_policy(&theta);
        (0..spec.n_states())
            .map(|x| f[(x, opt.actions[x])])
            .fold(f64::INFINITY, f64::min)
    };
    let gap_raw: Vec<(f64, u64, f64)> = traj
        .points
        .iter()
        .map(|p| (p.t, 0u64, p.j_gap.max(0.0)))
        .collect();
    let mass_raw: Vec<(f64, u64, f64)> =
        traj.points.iter().map(|p| (p.t, 0u64, min_mass(p))).collect();
    let gap_series = aggregate("objective_gap", gap_raw);
    let mass_series = aggregate("min_optimal_action_mass", mass_raw);

    let after_burn: Vec<&SeriesPoint> = gap_series
        .points
        .iter()
        .filter(|p| p.grid >= burn_in - 1e-9)
        .collect();
    let gap_monotone = after_burn.windows(2).all(|w| w[1].mean <= w[0].mean + 1e-9);
    let gap_burn = after_burn.first().map(|p| p.mean).unwrap_or(f64::NAN);
    let gap_final = after_burn.last().map(|p| p.mean).unwrap_or(f64::NAN);
    let gap_ratio_ok = gap_final <= gap_burn / cfg.thresholds.final_gap_ratio + 1e-12;

    let mass_after: Vec<&SeriesPoint> = mass_series
        .points
        .iter()
        .filter(|p| p.grid >= burn_in - 1e-9)
        .collect();
    let mass_monotone = mass_after.windows(2).all(|w| w[1].mean >= w[0].mean - 1e-6);
    let mass_burn = mass_after.first().map(|p| p.mean).unwrap_or(f64::NAN);
    let mass_late_ok = mass_series
        .points
        .iter()
        .filter(|p| p.grid >= 100.0f64.min(cfg.t_end) - 1e-9)
        .all(|p| p.mean >= mass_burn - 1e-9);

    let verdicts = vec![
        Verdict {
            name: "gap-decreasing-after-burn-in".into(),
            pass: gap_monotone,
            detail: format!("gap(burn_in={burn_in}) = {gap_burn:.4e}, gap(T) = {gap_final:.4e}"),
        },
        Verdict {
            name: "final-gap-ratio".into(),
            pass: gap_ratio_ok,
            detail: format!(
                "gap(T) = {gap_final:.4e} vs gap(burn_in)/{} = {:.4e}",
                cfg.thresholds.final_gap_ratio,
                gap_burn / cfg.thresholds.final_gap_ratio
            ),
        },
        Verdict {
            name: "optimal-mass-nondecreasing".into(),
            pass: mass_monotone,
            detail: format!("min optimal-action mass at burn-in = {mass_burn:.4}"),
        },
        Verdict {
            name: "optimal-mass-bounded-away".into(),
            pass: mass_late_ok,
            detail: "mass for t >= 1e2 stays >= its burn-in value".into(),
        },
    ];
    Ok(TrendReport::finish(
        "actor-rate",
        vec![gap_series, mass_series],
        verdicts,
        None,
    ))
}

/// Decay of the empirical stochastic-error tables in N.
pub fn exp_fluctuation(spec: &MdpSpec, cfg: &ExperimentConfig) -> Result<TrendReport> {
    cfg.validate()?;
    let jobs: Vec<(u32, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<Result<(u32, u64, f64, f64)>> = in_pool(cfg.workers, || {
        jobs.par_iter()
            .map(|&(n, seed)| {
                let ac = AcConfig {
                    n,
                    t_end: cfg.t_end,
                    alpha: cfg.alpha,
                    theta0: ThetaTable::zeros(spec.n_states(), spec.n_actions()),
                    q0: Table::zeros(spec.n_states(), spec.n_actions()),
                    seed,
                    stream: n as u64,
                    checkpoints: vec![cfg.t_end],
                    schedule: cfg.schedule.clone(),
                };
                let tables = empirical_fluctuation(spec, &ac, false)?;
                Ok((n, seed, tables.actor_magnitude(), tables.critic_magnitude()))
            })
            .collect()
    })?;
    let mut actor_raw = Vec::new();
    let mut critic_raw = Vec::new();
    for r in results {
        let (n, seed, a, c) = r?;
        actor_raw.push((n as f64, seed, a));
        critic_raw.push((n as f64, seed, c));
    }
    let actor_series = aggregate("actor_error_magnitude", actor_raw);
    let critic_series = aggregate("critic_error_magnitude", critic_raw);

    let n_min = cfg.n_grid[0] as f64;
    let n_max = *cfg.n_grid.last().unwrap() as f64;
    let ratio_ok = n_max / n_min >= cfg.thresholds.min_n_ratio;
    let factor = cfg.thresholds.fluctuation_factor;
    let drop_of = |s: &Series| (s.points[0].mean, s.points.last().unwrap().mean);
    let (a0, a1) = drop_of(&actor_series);
    let (c0, c1) = drop_of(&critic_series);
    let verdicts = vec![
        Verdict {
            name: "n-ratio".into(),
            pass: ratio_ok,
            detail: format!("N_max/N_min = {}", n_max / n_min),
        },
        Verdict {
            name: "actor-error-decays".into(),
            pass: a1 * factor <= a0,
            detail: format!("mean |M| at N_min = {a0:.4e}, at N_max = {a1:.4e}"),
        },
        Verdict {
            name: "critic-error-decays".into(),
            pass: c1 * factor <= c0,
            detail: format!("mean sum |M_i| at N_min = {c0:.4e}, at N_max = {c1:.4e}"),
        },
    ];
    Ok(TrendReport::finish(
        "fluctuation",
        vec![actor_series, critic_series],
        verdicts,
        None,
    ))
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrendReport> {
    cfg.validate()?;
    let spec = cfg.mdp.load()?;
    match cfg.experiment.as_str() {
        "ode-limit" => exp_ode_limit(&spec, cfg),
        "critic-rate" => exp_critic_rate(&spec, cfg),
        "actor-rate" => exp_actor_rate(&spec, cfg),
        "fluctuation" => exp_fluctuation(&spec, cfg),
        other => Err(Error::invalid_argument(format!("unknown experiment {other:?}"))),
    }
}

/// Serializes the raw per-seed values as CSV with columns
/// `series,grid,seed,value`.
pub fn write_raw_csv(report: &TrendReport, mut w: impl Write) -> Result<()> {
    writeln!(w, "series,grid,seed,value")?;
    for series in &report.series {
        for point in &series.points {
            for &(seed, value) in &point.per_seed {
                writeln!(w, "{},{},{},{}", series.name, point.grid, seed, value)?;
            }
        }
    }
    Ok(())
}

/// Writes the self-describing artifact directory: config.json, raw.csv,
/// report.json.
pub fn write_artifacts(
    cfg: &ExperimentConfig,
    report: &TrendReport,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(cfg)?,
    )?;
    let mut raw = Vec::new();
    write_raw_csv(report, &mut raw)?;
    std::fs::write(dir.join("raw.csv"), raw)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    Ok(())
}
