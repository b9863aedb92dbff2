//! The discrete online actor-critic algorithm on two coupled sample chains.
//!
//! One run advances ⌊NT⌋ steps of step size 1/N. At step k, with
//! f_k = softmax(θ_k) and g_k its η_k-exploration mixture:
//!
//! 1. the critic chain moves x_{k+1} ~ p(·|x_k,a_k) and the single entry
//!    (x_k,a_k) of Q is nudged toward the expected-Sarsa target
//!    r(x_k,a_k) + γ Σ_{a''} Q_k(x_{k+1},a'')·g_k(x_{k+1},a'') with rate α/N;
//! 2. the actor chain moves x̃_{k+1} ~ p̃(·|x̃_k,ã_k) through the restart
//!    kernel, and row x̃_k of θ moves along the score
//!    Q_k(x̃_k,ã_k)·(1{a=ã_k} − f_k(x̃_k,a)) with rate ζ_k/N;
//! 3. actions a_{k+1} ~ g_{k+1}(x_{k+1},·) and ã_{k+1} ~ f_{k+1}(x̃_{k+1},·)
//!    are drawn with the post-update parameters and rates.
//!
//! The RNG draw order within a step is pinned: x_{k+1}, x̃_{k+1}, a_{k+1},
//! ã_{k+1} (and x₀, a₀, x̃₀, ã₀ at initialization), so a run is a pure
//! function of (spec, config) and is bitwise reproducible.

use crate::error::{Error, Result};
use crate::mdp::{joint_kernel, KernelKind, MdpSpec};
use crate::policy::{exploration_policy, softmax_policy, ThetaTable};
use crate::rates::RateSchedule;
use crate::solvers::{stationary_distribution, visiting_measures};
use crate::table::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Largest state-action space for which per-step exact solves are allowed
/// in [`empirical_fluctuation`].
pub const FLUCTUATION_SIZE_GUARD: usize = 64;

/// Configuration of one stochastic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcConfig {
    /// Time-rescaling parameter: step size 1/N, ⌊NT⌋ steps.
    pub n: u32,
    /// Horizon T ≥ 0.
    pub t_end: f64,
    /// Critic rate multiplier α ≥ 0.
    pub alpha: f64,
    pub theta0: ThetaTable,
    pub q0: Table,
    pub seed: u64,
    /// Independent RNG stream id, for seed-parallel sweeps reusing seeds.
    #[serde(default)]
    pub stream: u64,
    /// Snapshot times within [0, T]; t = 0 means the initial tables.
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub schedule: RateSchedule,
}

impl AcConfig {
    /// A run from zero tables with the default schedule.
    pub fn from_zero(spec: &MdpSpec, n: u32, t_end: f64, alpha: f64, seed: u64) -> Self {
        AcConfig {
            n,
            t_end,
            alpha,
            theta0: ThetaTable::zeros(spec.n_states(), spec.n_actions()),
            q0: Table::zeros(spec.n_states(), spec.n_actions()),
            seed,
            stream: 0,
            checkpoints: vec![t_end],
            schedule: RateSchedule::Paper,
        }
    }

    pub fn validate(&self, spec: &MdpSpec) -> Result<()> {
        spec.ensure_valid()?;
        self.schedule.validate()?;
        if self.n < 1 {
            return Err(Error::invalid_argument("N must be >= 1"));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::invalid_argument("T must be finite and >= 0"));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::invalid_argument("alpha must be finite and >= 0"));
        }
        let shape_ok = |t: &Table| {
            t.n_states() == spec.n_states() && t.n_actions() == spec.n_actions()
        };
        if !shape_ok(self.theta0.table()) || !shape_ok(&self.q0) {
            return Err(Error::dimension_mismatch(
                "theta0/q0 shape does not match the MDP",
            ));
        }
        if !self.q0.all_finite() {
            return Err(Error::invalid_argument("non-finite q0 entry"));
        }
        for &t in &self.checkpoints {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(Error::invalid_argument(format!(
                    "checkpoint {t} outside [0, {}]",
                    self.t_end
                )));
            }
        }
        Ok(())
    }

    /// Total number of learning steps ⌊NT⌋.
    pub fn total_steps(&self) -> u64 {
        (self.n as f64 * self.t_end).floor() as u64
    }
}

/// Full state of one run.
#[derive(Debug, Clone)]
pub struct AcRunState {
    pub k: u64,
    pub theta: Table,
    pub q: Table,
    /// (x_k, a_k) on the original chain.
    pub critic_chain: (usize, usize),
    /// (x̃_k, ã_k) on the restart chain.
    pub actor_chain: (usize, usize),
    rng: ChaCha8Rng,
    total_steps: u64,
}

impl AcRunState {
    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    /// RNG position fingerprint (word position, stream, seed) for exact
    /// state comparisons.
    pub fn rng_fingerprint(&self) -> (u128, u64, [u8; 32]) {
        (
            self.rng.get_word_pos(),
            self.rng.get_stream(),
            self.rng.get_seed(),
        )
    }
}

impl PartialEq for AcRunState {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.theta == other.theta
            && self.q == other.q
            && self.critic_chain == other.critic_chain
            && self.actor_chain == other.actor_chain
            && self.rng_fingerprint() == other.rng_fingerprint()
    }
}

/// Draws an index from a probability row via inverse CDF on one uniform.
fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn softmax_row(theta: &Table, x: usize, out: &mut [f64]) {
    let row = theta.row(x);
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut sum = 0.0;
    for (a, &v) in row.iter().enumerate() {
        let e = (v - max).exp();
        out[a] = e;
        sum += e;
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
}

fn explore_row(row: &mut [f64], eta: f64) {
    let base = eta / row.len() as f64;
    for v in row.iter_mut() {
        *v = base + (1.0 - eta) * *v;
    }
}

/// Draws the initial chain positions: x₀ ~ μ, a₀ ~ g₀(x₀,·), x̃₀ ~ μ,
/// ã₀ ~ f₀(x̃₀,·). Deterministic given (seed, stream).
pub fn init_run(spec: &MdpSpec, config: &AcConfig) -> Result<AcRunState> {
    config.validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    let theta = config.theta0.table().clone();
    let d_a = spec.n_actions();
    let mut row = vec![0.0; d_a];

    let x0 = sample_categorical(&mut rng, spec.mu());
    softmax_row(&theta, x0, &mut row);
    explore_row(&mut row, config.schedule.eta_discrete(0, config.n));
    let a0 = sample_categorical(&mut rng, &row);

    let xt0 = sample_categorical(&mut rng, spec.mu());
    softmax_row(&theta, xt0, &mut row);
    let at0 = sample_categorical(&mut rng, &row);

    Ok(AcRunState {
        k: 0,
        theta,
        q: config.q0.clone(),
        critic_chain: (x0, a0),
        actor_chain: (xt0, at0),
        rng,
        total_steps: config.total_steps(),
    })
}

/// What one step sampled, for observers.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub x: usize,
    pub a: usize,
    pub x_next: usize,
    pub xt: usize,
    pub at: usize,
    pub xt_next: usize,
    pub zeta: f64,
    pub eta: f64,
}

fn step_inner(
    state: &mut AcRunState,
    spec: &MdpSpec,
    config: &AcConfig,
    apply_updates: bool,
) -> Result<StepRecord> {
    if state.k >= state.total_steps {
        return Err(Error::HorizonExhausted {
            step: state.k,
            total: state.total_steps,
        });
    }
    let k = state.k;
    let n = config.n;
    let gamma = spec.gamma();
    let d_a = spec.n_actions();
    let zeta = config.schedule.zeta_discrete(k, n);
    let eta = config.schedule.eta_discrete(k, n);
    let (x, a) = state.critic_chain;
    let (xt, at) = state.actor_chain;
    let mut row = vec![0.0; d_a.max(spec.n_states())];

    // (1) critic chain transition and single-entry update
    let x_next = sample_categorical(&mut state.rng, spec.p_row(x, a));
    let g_next_state = &mut row[..d_a];
    softmax_row(&state.theta, x_next, g_next_state);
    explore_row(g_next_state, eta);
    let cont: f64 = (0..d_a)
        .map(|a2| state.q[(x_next, a2)] * g_next_state[a2])
        .sum();
    let delta = spec.reward(x, a) + gamma * cont - state.q[(x, a)];
    let q_actor = state.q[(xt, at)]; // pre-update critic value for the actor
    if apply_updates {
        state.q[(x, a)] += config.alpha / n as f64 * delta;
    }

    // (2) actor chain transition and row update
    let restart = &mut row[..spec.n_states()];
    spec.restart_row(xt, at, restart);
    let xt_next = sample_categorical(&mut state.rng, restart);
    if apply_updates {
        let mut f_row = vec![0.0; d_a];
        softmax_row(&state.theta, xt, &mut f_row);
        let scale = zeta / n as f64 * q_actor;
        for a2 in 0..d_a {
            let ind = if a2 == at { 1.0 } else { 0.0 };
            state.theta[(xt, a2)] += scale * (ind - f_row[a2]);
        }
    }

    // (3) post-update action draws
    let eta_next = config.schedule.eta_discrete(k + 1, n);
    let g_row = &mut row[..d_a];
    softmax_row(&state.theta, x_next, g_row);
    explore_row(g_row, eta_next);
    let a_next = sample_categorical(&mut state.rng, g_row);
    let f_row = &mut row[..d_a];
    softmax_row(&state.theta, xt_next, f_row);
    let at_next = sample_categorical(&mut state.rng, f_row);

    state.critic_chain = (x_next, a_next);
    state.actor_chain = (xt_next, at_next);
    state.k += 1;
    Ok(StepRecord {
        x,
        a,
        x_next,
        xt,
        at,
        xt_next,
        zeta,
        eta,
    })
}

/// Advances one learning step. Errors once the horizon ⌊NT⌋ is exhausted.
pub fn step(state: &mut AcRunState, spec: &MdpSpec, config: &AcConfig) -> Result<StepRecord> {
    step_inner(state, spec, config, true)
}

/// One checkpointed snapshot: tables after ⌊N·t⌋ steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub t: f64,
    /// Realized step count ⌊N·t⌋.
    pub step: u64,
    pub theta: Table,
    pub q: Table,
}

/// A finished run: snapshots plus a config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrajectory {
    pub points: Vec<CheckpointRecord>,
    pub total_steps: u64,
    pub config: AcConfig,
}

/// Executes ⌊NT⌋ steps, snapshotting (θ, Q) after step ⌊N·t_c⌋ for every
/// requested checkpoint time t_c (t_c = 0 is the initial tables).
pub fn run(spec: &MdpSpec, config: &AcConfig) -> Result<RunTrajectory> {
    let mut state = init_run(spec, config)?;
    let mut targets: Vec<(u64, f64)> = config
        .checkpoints
        .iter()
        .map(|&t| ((config.n as f64 * t).floor() as u64, t))
        .collect();
    targets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()));
    let mut points = Vec::with_capacity(targets.len());
    let mut pending = targets.into_iter().peekable();
    let snapshot = |state: &AcRunState, t: f64, step: u64| CheckpointRecord {
        t,
        step,
        theta: state.theta.clone(),
        q: state.q.clone(),
    };
    while let Some(&(m, t)) = pending.peek() {
        if m == 0 {
            points.push(snapshot(&state, t, 0));
            pending.next();
        } else {
            break;
        }
    }
    let total = state.total_steps;
    for done in 1..=total {
        step_inner(&mut state, spec, config, true)?;
        while let Some(&(m, t)) = pending.peek() {
            if m == done {
                points.push(snapshot(&state, t, done));
                pending.next();
            } else {
                break;
            }
        }
    }
    Ok(RunTrajectory {
        points,
        total_steps: total,
        config: config.clone(),
    })
}

/// Empirical stochastic-error tables accumulated along one run.
///
/// `actor` is M_T^N: the ζ-weighted gap between the actor-chain score
/// samples and their expectation under the current visiting law
/// sigma_normalized(f_k). The three `critic` tables are the gaps between
/// the critic-chain samples of −Q, r, and the γ-discounted one-step
/// lookahead and their expectations under the stationary law π^{g_k} of the
/// current joint kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationTables {
    pub actor: Table,
    pub critic: [Table; 3],
}

impl FluctuationTables {
    /// Sup norm of the actor table.
    pub fn actor_magnitude(&self) -> f64 {
        self.actor.sup_norm()
    }

    /// Sum of the sup norms of the three critic tables.
    pub fn critic_magnitude(&self) -> f64 {
        self.critic.iter().map(|t| t.sup_norm()).sum()
    }
}

/// Runs the algorithm while accumulating the empirical fluctuation tables,
/// with per-step exact solves for the expectation terms. With
/// `frozen = true` the parameter updates are disabled (the chains still
/// move), which makes every table a mean-zero sum.
///
/// Guarded to state-action spaces of at most [`FLUCTUATION_SIZE_GUARD`].
pub fn empirical_fluctuation(
    spec: &MdpSpec,
    config: &AcConfig,
    frozen: bool,
) -> Result<FluctuationTables> {
    if spec.n_xi() > FLUCTUATION_SIZE_GUARD {
        return Err(Error::SizeGuard {
            size: spec.n_xi(),
            limit: FLUCTUATION_SIZE_GUARD,
        });
    }
    let mut state = init_run(spec, config)?;
    let d_x = spec.n_states();
    let d_a = spec.n_actions();
    let mut actor = Table::zeros(d_x, d_a);
    let mut critic = [
        Table::zeros(d_x, d_a),
        Table::zeros(d_x, d_a),
        Table::zeros(d_x, d_a),
    ];
    let total = state.total_steps;
    for k in 0..total {
        let theta_k = ThetaTable::new(state.theta.clone())?;
        let f_k = softmax_policy(&theta_k);
        let eta_k = config.schedule.eta_discrete(k, config.n);
        let g_k = exploration_policy(&f_k, eta_k)?;
        let q_k = state.q.clone();
        let sigma_n = visiting_measures(spec, &f_k)?.sigma_normalized;
        let pi_g = {
            let kernel = joint_kernel(spec, &g_k, KernelKind::OriginalWithG)?;
            let pi = stationary_distribution(&kernel)?;
            Table::from_flat(d_x, d_a, pi)?
        };

        let rec = step_inner(&mut state, spec, config, !frozen)?;
        let (x, a) = (rec.x, rec.a);
        let (xt, at) = (rec.xt, rec.at);

        // Actor term: ζ_k·[ Q_k(ξ̃_k)·∂ log f_k(ξ̃_k) − Σ σ_n·Q_k·∂ log f_k ].
        // Only row x̃_k carries the sample; the expectation touches all rows.
        let q_at = q_k[(xt, at)];
        for a2 in 0..d_a {
            let ind = if a2 == at { 1.0 } else { 0.0 };
            actor[(xt, a2)] += rec.zeta * q_at * (ind - f_k[(xt, a2)]);
        }
        for x2 in 0..d_x {
            let mixed: f64 = (0..d_a).map(|a2| f_k[(x2, a2)] * q_k[(x2, a2)]).sum();
            for a2 in 0..d_a {
                actor[(x2, a2)] -=
                    rec.zeta * sigma_n[(x2, a2)] * (q_k[(x2, a2)] - mixed);
            }
        }

        // Critic terms, no rate weight (the critic update has constant rate α).
        critic[0][(x, a)] -= q_k[(x, a)];
        critic[1][(x, a)] += spec.reward(x, a);
        let h_next: f64 = (0..d_a)
            .map(|a2| q_k[(rec.x_next, a2)] * g_k[(rec.x_next, a2)])
            .sum();
        critic[2][(x, a)] += spec.gamma() * h_next;
        for x2 in 0..d_x {
            for a2 in 0..d_a {
                let p = pi_g[(x2, a2)];
                critic[0][(x2, a2)] += q_k[(x2, a2)] * p;
                critic[1][(x2, a2)] -= spec.reward(x2, a2) * p;
                let lookahead: f64 = (0..d_x)
                    .map(|z| {
                        let h: f64 =
                            (0..d_a).map(|a3| q_k[(z, a3)] * g_k[(z, a3)]).sum();
                        spec.p(x2, a2, z) * h
                    })
                    .sum();
                critic[2][(x2, a2)] -= spec.gamma() * lookahead * p;
            }
        }
    }
    let scale = 1.0 / config.n as f64;
    actor.scale(scale);
    for t in &mut critic {
        t.scale(scale);
    }
    Ok(FluctuationTables { actor, critic })
}

/// Per-step a-priori bound checks over a full run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub steps: u64,
    /// max over steps of (|ΔQ|_∞ − (α/N)(1 + (1+γ)‖Q_k‖_∞)); ≤ 0 when the
    /// bound holds.
    pub max_critic_violation: f64,
    /// max over steps of (‖Δθ‖₁ − (2ζ_k/N)‖Q_k‖_∞); ≤ 0 when the bound holds.
    pub max_actor_violation: f64,
    /// Whether updates only touched entry (x_k,a_k) of Q and row x̃_k of θ.
    pub updates_local: bool,
    /// max_k ‖Q_k‖_∞ along the run.
    pub q_sup_max: f64,
    /// The telescoped a-priori bound (‖Q₀‖_∞ + α(2+γ)T)·exp(α(1+γ)T).
    pub q_sup_bound: f64,
    pub ok: bool,
}

/// Runs ⌊NT⌋ steps asserting the per-step increment inequalities
/// |Q_{k+1}−Q_k|_∞ ≤ (α/N)(1 + (1+γ)‖Q_k‖_∞) and
/// ‖θ_{k+1}−θ_k‖₁ ≤ (2ζ_k/N)·‖Q_k‖_∞ at every step, and the telescoped
/// run-level critic bound.
pub fn run_with_bound_checks(spec: &MdpSpec, config: &AcConfig) -> Result<BoundCheckReport> {
    let mut state = init_run(spec, config)?;
    let gamma = spec.gamma();
    let n = config.n as f64;
    let total = state.total_steps;
    let mut max_critic_violation = f64::NEG_INFINITY;
    let mut max_actor_violation = f64::NEG_INFINITY;
    let mut updates_local = true;
    let mut q_sup_max = state.q.sup_norm();
    for _ in 0..total {
        let q_before = state.q.clone();
        let theta_before = state.theta.clone();
        let q_sup = q_before.sup_norm();
        let rec = step_inner(&mut state, spec, config, true)?;
        let dq = state.q.sub(&q_before);
        let dtheta = state.theta.sub(&theta_before);
        let critic_bound = config.alpha / n * (1.0 + (1.0 + gamma) * q_sup);
        let actor_bound = 2.0 * rec.zeta / n * q_sup;
        max_critic_violation = max_critic_violation.max(dq.sup_norm() - critic_bound);
        max_actor_violation = max_actor_violation.max(dtheta.l1_norm() - actor_bound);
        for ((x2, a2), v) in dq.iter() {
            if v != 0.0 && (x2, a2) != (rec.x, rec.a) {
                updates_local = false;
            }
        }
        for ((x2, _), v) in dtheta.iter() {
            if v != 0.0 && x2 != rec.xt {
                updates_local = false;
            }
        }
        q_sup_max = q_sup_max.max(state.q.sup_norm());
    }
    if total == 0 {
        max_critic_violation = 0.0;
        max_actor_violation = 0.0;
    }
    let q_sup_bound = (config.q0.sup_norm() + config.alpha * (2.0 + gamma) * config.t_end)
        * (config.alpha * (1.0 + gamma) * config.t_end).exp();
    let ok = max_critic_violation <= 1e-12
        && max_actor_violation <= 1e-12
        && updates_local
        && q_sup_max <= q_sup_bound;
    Ok(BoundCheckReport {
        steps: total,
        max_critic_violation,
        max_actor_violation,
        updates_local,
        q_sup_max,
        q_sup_bound,
        ok,
    })
}

/// Writes a trajectory as long-form CSV with columns `t,x,a,theta,q`.
pub fn write_trajectory_csv(traj: &RunTrajectory, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,x,a,theta,q")?;
    for point in &traj.points {
        for ((x, a), th) in point.theta.iter() {
            writeln!(w, "{},{},{},{},{}", point.t, x, a, th, point.q[(x, a)])?;
        }
    }
    Ok(())
}

/// JSON metadata sidecar for a trajectory export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: AcConfig,
    pub mdp_hash: String,
    pub n_states: usize,
    pub n_actions: usize,
    pub total_steps: u64,
}

impl RunMetadata {
    pub fn new(spec: &MdpSpec, traj: &RunTrajectory) -> Self {
        RunMetadata {
            config: traj.config.clone(),
            mdp_hash: spec.content_hash(),
            n_states: spec.n_states(),
            n_actions: spec.n_actions(),
            total_steps: traj.total_steps,
        }
    }
}
