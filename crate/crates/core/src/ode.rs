//! The deterministic large-N limit of the online actor-critic algorithm,
//! and the scalar comparison ODEs used to bound its convergence.
//!
//! With f = softmax(θ̄), g its η_t-exploration mixture, π^g the stationary
//! law of the joint original chain, and σ^f the normalized (mass-1)
//! discounted visiting measure of the restart chain, the limit system is
//!
//!   dQ̄/dt(x,a) = α·π^g(x,a)·( r(x,a) + γ Σ_{z,a''} Q̄(z,a'')·g(z,a'')·p(z|x,a) − Q̄(x,a) )
//!   dθ̄/dt(x,a) = ζ_t·σ^f(x,a)·( Q̄(x,a) − Σ_{a'} Q̄(x,a')·f(x,a') ).
//!
//! Integration is classical fixed-step RK4 with partial steps landing
//! exactly on checkpoint times. Diagnostics (critic error φ, Y = ½φᵀφ,
//! objective gap, gradient norm) are recomputed from the state at each
//! checkpoint, never integrated separately.

use crate::error::{Error, Result};
use crate::mdp::{joint_kernel, KernelKind, MdpSpec};
use crate::policy::{exploration_policy, softmax_policy, ThetaTable};
use crate::rates::RateSchedule;
use crate::solvers::{
    objective, optimal_policy, policy_gradient, stationary_distribution, value_functions,
    visiting_measures,
};
use crate::table::Table;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Golden ratio (1+√5)/2: the positive stationary point of the transformed
/// actor comparison ODE at C = 1.
pub const GOLDEN_RATIO: f64 = 1.618033988749894848;

/// Live state of the limit system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub t: f64,
    pub theta: Table,
    pub q: Table,
}

/// Integration options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeOptions {
    pub alpha: f64,
    /// Fixed RK4 step; the final sub-step before each checkpoint is
    /// shortened.
    pub h: f64,
    pub t_end: f64,
    /// Diagnostic snapshot times within [0, t_end].
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub schedule: RateSchedule,
    /// Any table entry exceeding this aborts the integration.
    #[serde(default = "default_blowup")]
    pub blowup: f64,
}

fn default_blowup() -> f64 {
    1e6
}

impl OdeOptions {
    pub fn new(alpha: f64, h: f64, t_end: f64, checkpoints: Vec<f64>) -> Self {
        OdeOptions {
            alpha,
            h,
            t_end,
            checkpoints,
            schedule: RateSchedule::Paper,
            blowup: default_blowup(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid_argument("step h must be > 0"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid_argument("t_end must be finite and >= 0"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid_argument("alpha must be finite and >= 0"));
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
}

/// One checkpoint: state plus recomputed diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeCheckpoint {
    pub t: f64,
    pub theta: Table,
    pub q: Table,
    /// Critic error φ = Q̄ − V^{g_θ̄} at the current exploration policy.
    pub phi: Table,
    /// Y = ½·φᵀφ.
    pub y: f64,
    /// J(f*) − J(f_θ̄).
    pub j_gap: f64,
    /// ‖∇_θ J(f_θ̄)‖₂.
    pub grad_norm: f64,
}

/// Checkpointed solution of the limit system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub points: Vec<OdeCheckpoint>,
    /// J(f*) of the optimal-policy oracle, shared by all checkpoints.
    pub j_star: f64,
}

impl OdeTrajectory {
    pub fn last(&self) -> &OdeCheckpoint {
        self.points.last().expect("trajectory has checkpoints")
    }

    /// The checkpoint closest to time `t`.
    pub fn at(&self, t: f64) -> &OdeCheckpoint {
        self.points
            .iter()
            .min_by(|a, b| {
                (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()
            })
            .expect("trajectory has checkpoints")
    }
}

/// Right-hand side of the limit system at time `t`.
pub fn ode_rhs(
    state: &OdeState,
    spec: &MdpSpec,
    alpha: f64,
    schedule: &RateSchedule,
) -> Result<(Table, Table)> {
    let theta = ThetaTable::new(state.theta.clone())?;
    let f = softmax_policy(&theta);
    let eta = schedule.eta(state.t);
    let zeta = schedule.zeta(state.t);
    let g = exploration_policy(&f, eta)?;
    let kernel = joint_kernel(spec, &g, KernelKind::OriginalWithG)?;
    let pi = stationary_distribution(&kernel)?;
    let sigma_n = visiting_measures(spec, &f)?.sigma_normalized;

    let d_x = spec.n_states();
    let d_a = spec.n_actions();
    // h(z) = Σ_{a''} Q̄(z,a'')·g(z,a'')
    let h: Vec<f64> = (0..d_x)
        .map(|z| (0..d_a).map(|a2| state.q[(z, a2)] * g[(z, a2)]).sum())
        .collect();
    let mut dq = Table::zeros(d_x, d_a);
    let mut dtheta = Table::zeros(d_x, d_a);
    for x in 0..d_x {
        let mixed: f64 = (0..d_a).map(|a| state.q[(x, a)] * f[(x, a)]).sum();
        for a in 0..d_a {
            let xi = x * d_a + a;
            let lookahead: f64 = (0..d_x).map(|z| spec.p(x, a, z) * h[z]).sum();
            dq[(x, a)] = alpha
                * pi[xi]
                * (spec.reward(x, a) + spec.gamma() * lookahead - state.q[(x, a)]);
            dtheta[(x, a)] = zeta * sigma_n[(x, a)] * (state.q[(x, a)] - mixed);
        }
    }
    Ok((dtheta, dq))
}

/// Critic error at the current exploration policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticError {
    /// φ = Q̄ − V^{g_θ̄} with η at the state's time.
    pub phi: Table,
    /// Y = ½·φᵀφ.
    pub y: f64,
}

/// Exact critic error via a Bellman solve at the current exploration
/// policy g_{θ̄_t} (with η_t from the schedule).
pub fn critic_error(state: &OdeState, spec: &MdpSpec, schedule: &RateSchedule) -> Result<CriticError> {
    let theta = ThetaTable::new(state.theta.clone())?;
    let f = softmax_policy(&theta);
    let g = exploration_policy(&f, schedule.eta(state.t))?;
    let vp = value_functions(spec, &g)?;
    let phi = state.q.sub(&vp.v_state_action);
    let y = 0.5 * phi.as_slice().iter().map(|v| v * v).sum::<f64>();
    Ok(CriticError { phi, y })
}

fn rk4_step(
    state: &OdeState,
    spec: &MdpSpec,
    opts: &OdeOptions,
    h: f64,
) -> Result<OdeState> {
    let eval = |t: f64, theta: &Table, q: &Table| -> Result<(Table, Table)> {
        ode_rhs(
            &OdeState {
                t,
                theta: theta.clone(),
                q: q.clone(),
            },
            spec,
            opts.alpha,
            &opts.schedule,
        )
    };
    let (k1t, k1q) = eval(state.t, &state.theta, &state.q)?;
    let mut th = state.theta.clone();
    let mut q = state.q.clone();
    th.add_scaled(&k1t, h / 2.0);
    q.add_scaled(&k1q, h / 2.0);
    let (k2t, k2q) = eval(state.t + h / 2.0, &th, &q)?;
    th = state.theta.clone();
    q = state.q.clone();
    th.add_scaled(&k2t, h / 2.0);
    q.add_scaled(&k2q, h / 2.0);
    let (k3t, k3q) = eval(state.t + h / 2.0, &th, &q)?;
    th = state.theta.clone();
    q = state.q.clone();
    th.add_scaled(&k3t, h);
    q.add_scaled(&k3q, h);
    let (k4t, k4q) = eval(state.t + h, &th, &q)?;
    let mut theta = state.theta.clone();
    let mut qn = state.q.clone();
    for (dst, (k1, (k2, (k3, k4)))) in [
        (&mut theta, (&k1t, (&k2t, (&k3t, &k4t)))),
        (&mut qn, (&k1q, (&k2q, (&k3q, &k4q)))),
    ] {
        dst.add_scaled(k1, h / 6.0);
        dst.add_scaled(k2, h / 3.0);
        dst.add_scaled(k3, h / 3.0);
        dst.add_scaled(k4, h / 6.0);
    }
    Ok(OdeState {
        t: state.t + h,
        theta,
        q: qn,
    })
}

/// Integrates the limit system from (θ̄₀, Q̄₀) to `t_end`, attaching
/// diagnostics at every checkpoint.
pub fn integrate(
    spec: &MdpSpec,
    theta0: &ThetaTable,
    q0: &Table,
    opts: &OdeOptions,
) -> Result<OdeTrajectory> {
    spec.ensure_valid()?;
    opts.validate()?;
    if theta0.n_states() != spec.n_states()
        || theta0.n_actions() != spec.n_actions()
        || q0.n_states() != spec.n_states()
        || q0.n_actions() != spec.n_actions()
    {
        return Err(Error::dimension_mismatch("theta0/q0 shape"));
    }
    let opt = optimal_policy(spec)?;
    let mut targets: Vec<f64> = opts.checkpoints.clone();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup();

    let mut state = OdeState {
        t: 0.0,
        theta: theta0.table().clone(),
        q: q0.clone(),
    };
    let mut points = Vec::with_capacity(targets.len());
    let snapshot = |state: &OdeState| -> Result<OdeCheckpoint> {
        let err = critic_error(state, spec, &opts.schedule)?;
        let theta = ThetaTable::new(state.theta.clone())?;
        let f = softmax_policy(&theta);
        let j = objective(spec, &f)?;
        let grad = policy_gradient(spec, &theta)?;
        Ok(OdeCheckpoint {
            t: state.t,
            theta: state.theta.clone(),
            q: state.q.clone(),
            phi: err.phi,
            y: err.y,
            j_gap: opt.j_star - j,
            grad_norm: grad.l2_norm(),
        })
    };

    for target in targets {
        while state.t < target {
            let h = opts.h.min(target - state.t);
            if h < 1e-12 {
                break;
            }
            state = rk4_step(&state, spec, opts, h)?;
            let worst = state.theta.sup_norm().max(state.q.sup_norm());
            if worst > opts.blowup {
                return Err(Error::BlowUp {
                    t: state.t,
                    value: worst,
                    limit: opts.blowup,
                });
            }
        }
        points.push(snapshot(&state)?);
    }
    Ok(OdeTrajectory {
        points,
        j_star: opt.j_star,
    })
}

/// Writes a trajectory as long-form CSV: table rows `t,kind,x,a,value` for
/// kind ∈ {theta,q,phi} plus scalar rows `t,kind,,,value` for
/// kind ∈ {Y,J_gap,grad_norm}.
pub fn write_ode_csv(traj: &OdeTrajectory, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,kind,x,a,value")?;
    for p in &traj.points {
        for (kind, table) in [("theta", &p.theta), ("q", &p.q), ("phi", &p.phi)] {
            for ((x, a), v) in table.iter() {
                writeln!(w, "{},{},{},{},{}", p.t, kind, x, a, v)?;
            }
        }
        writeln!(w, "{},Y,,,{}", p.t, p.y)?;
        writeln!(w, "{},J_gap,,,{}", p.t, p.j_gap)?;
        writeln!(w, "{},grad_norm,,,{}", p.t, p.grad_norm)?;
    }
    Ok(())
}

/// Integrates a scalar ODE dz/dt = rhs(t, z) with RK4 on a geometric grid
/// (step ∝ t, capped by `stability`), landing exactly on each sample time.
fn integrate_scalar(
    rhs: &dyn Fn(f64, f64) -> f64,
    t0: f64,
    z0: f64,
    samples: &[f64],
    stability: &dyn Fn(f64) -> f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(samples.len());
    let mut t = t0;
    let mut z = z0;
    if let Some(&first) = samples.first() {
        if (first - t0).abs() < 1e-12 {
            out.push((t0, z0));
        }
    }
    for &target in samples {
        if (target - t0).abs() < 1e-12 {
            continue;
        }
        while t < target {
            let h = (0.02 * t).min(stability(t)).min(target - t);
            let k1 = rhs(t, z);
            let k2 = rhs(t + h / 2.0, z + h / 2.0 * k1);
            let k3 = rhs(t + h / 2.0, z + h / 2.0 * k2);
            let k4 = rhs(t + h, z + h * k3);
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        out.push((target, z));
    }
    out
}

/// Integrates the critic comparison ODE
/// dZ/dt = −C·Z/log^{2n₀}(t) + 1/t from Z_{t₀} = y₀, returning (t, Z_t) at
/// the requested sample times.
///
/// Solutions stay nonnegative; a negative sample is reported as a
/// numerical failure.
pub fn comparison_ode_critic(
    c: f64,
    n0: u32,
    t0: f64,
    y0: f64,
    t_end: f64,
    samples: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if t0 < 2.0 {
        return Err(Error::invalid_argument("t0 must be >= 2"));
    }
    if c < 0.0 || !c.is_finite() || !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::invalid_argument("need C >= 0 and y0 >= 0"));
    }
    check_samples(samples, t0, t_end)?;
    let rhs = move |t: f64, z: f64| -> f64 { -c * z / t.ln().powi(2 * n0 as i32) + 1.0 / t };
    let stability = move |t: f64| -> f64 {
        if c > 0.0 {
            0.5 * t.ln().powi(2 * n0 as i32) / c
        } else {
            f64::INFINITY
        }
    };
    let out = integrate_scalar(&rhs, t0, y0, samples, &stability);
    for &(t, z) in &out {
        if z < -1e-12 {
            return Err(Error::Numerical(format!(
                "comparison solution went negative: Z({t}) = {z:.3e}"
            )));
        }
    }
    Ok(out)
}

/// One sample of the actor comparison ODE.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ActorComparisonPoint {
    pub t: f64,
    pub z: f64,
    /// X_t = Z_t·log t.
    pub x: f64,
}

/// Result of [`comparison_ode_actor`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActorComparison {
    pub points: Vec<ActorComparisonPoint>,
    /// The verified upper bound on X_t.
    pub bound: f64,
}

/// Positive stationary point of the transformed actor comparison ODE
/// dX/dt = (X − C·X² + C)/(t·log t); equals the golden ratio at C = 1.
pub fn actor_fixed_point(c: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * c * c).sqrt()) / (2.0 * c)
}

/// Integrates the actor comparison ODE
/// dZ/dt = −(C/t)·Z² + C/(t·log²t) from Z_{t₀} = z₀ and checks
/// 0 ≤ X_t ≤ max{X_{t₀}, (1+√5)/2, X₊(C)} + 1e-9 at every sample, where
/// X = Z·log t and X₊ is [`actor_fixed_point`].
///
/// Internally the autonomous transform dX/dt = (X − C·X² + C)/(t·log t) is
/// integrated, which keeps the stationary points exact.
pub fn comparison_ode_actor(
    c: f64,
    t0: f64,
    z0: f64,
    t_end: f64,
    samples: &[f64],
) -> Result<ActorComparison> {
    if t0 < 2.0 {
        return Err(Error::invalid_argument("t0 must be >= 2"));
    }
    if !(c > 0.0 && c.is_finite()) || !(z0.is_finite() && z0 >= 0.0) {
        return Err(Error::invalid_argument("need C > 0 and z0 >= 0"));
    }
    check_samples(samples, t0, t_end)?;
    let rhs = move |t: f64, x: f64| -> f64 { (x - c * x * x + c) / (t * t.ln()) };
    let stability = |_: f64| f64::INFINITY;
    let x0 = z0 * t0.ln();
    let raw = integrate_scalar(&rhs, t0, x0, samples, &stability);
    let bound = x0.max(GOLDEN_RATIO).max(actor_fixed_point(c)) + 1e-9;
    let mut points = Vec::with_capacity(raw.len());
    for (t, x) in raw {
        if !((-1e-12..=bound).contains(&x)) {
            return Err(Error::Numerical(format!(
                "actor comparison bound violated: X({t}) = {x} > {bound}"
            )));
        }
        points.push(ActorComparisonPoint {
            t,
            z: x / t.ln(),
            x,
        });
    }
    Ok(ActorComparison { points, bound })
}

fn check_samples(samples: &[f64], t0: f64, t_end: f64) -> Result<()> {
    if t_end < t0 {
        return Err(Error::invalid_argument("t_end must be >= t0"));
    }
    let mut prev = t0 - 1e-12;
    for &s in samples {
        if s < prev || s > t_end + 1e-12 {
            return Err(Error::invalid_argument(format!(
                "samples must be ascending within [{t0}, {t_end}]: {s}"
            )));
        }
        prev = s;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures;

    #[test]
    fn rhs_vanishes_at_bellman_fixed_point() {
        let spec = fixtures::chain();
        let schedule = RateSchedule::Constant {
            zeta: 0.5,
            eta: 0.2,
        };
        let theta = ThetaTable::zeros(2, 2);
        let f = softmax_policy(&theta);
        let g = exploration_policy(&f, 0.2).unwrap();
        let q = value_functions(&spec, &g).unwrap().v_state_action;
        let state = OdeState {
            t: 3.0,
            theta: theta.table().clone(),
            q,
        };
        let (_, dq) = ode_rhs(&state, &spec, 1.0, &schedule).unwrap();
        assert!(dq.sup_norm() < 1e-10, "dq = {:?}", dq);
    }

    #[test]
    fn single_action_actor_drift_is_zero() {
        let spec = fixtures::single_state();
        let state = OdeState {
            t: 0.0,
            theta: Table::zeros(1, 1),
            q: Table::constant(1, 1, 0.3),
        };
        let (dtheta, _) = ode_rhs(&state, &spec, 1.0, &RateSchedule::Paper).unwrap();
        assert_eq!(dtheta.sup_norm(), 0.0);
    }

    #[test]
    fn frozen_schedule_keeps_bellman_solution_stationary() {
        // ζ ≡ 0 pins the actor and a frozen η pins g, so a critic started
        // at the Bellman solution only drifts by integrator error.
        let spec = fixtures::chain();
        let schedule = RateSchedule::Constant {
            zeta: 0.0,
            eta: 0.3,
        };
        let theta = ThetaTable::zeros(2, 2);
        let f = softmax_policy(&theta);
        let g = exploration_policy(&f, 0.3).unwrap();
        let q0 = value_functions(&spec, &g).unwrap().v_state_action;
        let mut opts = OdeOptions::new(1.0, 0.05, 10.0, vec![0.0, 5.0, 10.0]);
        opts.schedule = schedule;
        let traj = integrate(&spec, &theta, &q0, &opts).unwrap();
        for p in &traj.points {
            let drift = p.q.sub(&q0).sup_norm();
            assert!(drift < 1e-9, "drift {drift} at t={}", p.t);
            assert_eq!(p.theta.sup_norm(), 0.0);
        }
    }

    #[test]
    fn blow_up_guard_trips() {
        let spec = fixtures::chain();
        let mut opts = OdeOptions::new(1.0, 0.1, 5.0, vec![5.0]);
        opts.blowup = 1e-3; // absurdly tight: any motion trips it
        let theta = ThetaTable::zeros(2, 2);
        let q0 = Table::zeros(2, 2);
        assert!(matches!(
            integrate(&spec, &theta, &q0, &opts),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn critic_error_zero_at_bellman_solution() {
        let spec = fixtures::chain();
        let schedule = RateSchedule::Paper;
        let theta = ThetaTable::zeros(2, 2);
        let f = softmax_policy(&theta);
        let t = 4.0;
        let g = exploration_policy(&f, schedule.eta(t)).unwrap();
        let q = value_functions(&spec, &g).unwrap().v_state_action;
        let state = OdeState {
            t,
            theta: theta.table().clone(),
            q,
        };
        let err = critic_error(&state, &spec, &schedule).unwrap();
        assert!(err.phi.sup_norm() < 1e-12);
        assert!(err.y < 1e-24);
    }

    #[test]
    fn critic_error_y_definition() {
        let spec = fixtures::chain();
        let state = OdeState {
            t: 1.0,
            theta: Table::zeros(2, 2),
            q: Table::constant(2, 2, 1.0),
        };
        let err = critic_error(&state, &spec, &RateSchedule::Paper).unwrap();
        assert!(err.y >= 0.0);
        let manual: f64 = err.phi.as_slice().iter().map(|v| 0.5 * v * v).sum();
        assert!((err.y - manual).abs() < 1e-15);
    }

    #[test]
    fn comparison_critic_pure_log_integral() {
        // C = 0: Z_T = y0 + log(T/t0) exactly.
        let samples = [10.0, 100.0, 1e4];
        let out = comparison_ode_critic(0.0, 1, 2.0, 1.0, 1e4, &samples).unwrap();
        for &(t, z) in &out {
            let exact = 1.0 + (t / 2.0_f64).ln();
            assert!((z - exact).abs() < 1e-5, "t={t}: {z} vs {exact}");
        }
    }

    #[test]
    fn comparison_actor_fixed_point_value() {
        assert!((actor_fixed_point(1.0) - GOLDEN_RATIO).abs() < 1e-15);
    }

    #[test]
    fn comparison_actor_cases() {
        let t0 = 2.0;
        let samples: Vec<f64> = crate::numeric::log_spaced(t0, 200.0, 25);
        // Start at the fixed point: X stays within 1e-3 of it.
        let z0 = GOLDEN_RATIO / t0.ln();
        let fixed = comparison_ode_actor(1.0, t0, z0, 200.0, &samples).unwrap();
        for p in &fixed.points {
            assert!((p.x - GOLDEN_RATIO).abs() < 1e-3, "t={}: X={}", p.t, p.x);
        }
        // Start at zero: X increases, bounded by the fixed point.
        let rising = comparison_ode_actor(1.0, t0, 0.0, 200.0, &samples).unwrap();
        for w in rising.points.windows(2) {
            assert!(w[1].x >= w[0].x - 1e-12);
            assert!(w[1].x <= GOLDEN_RATIO + 1e-9);
        }
        // Start high: X decreases toward the bound.
        let falling = comparison_ode_actor(1.0, t0, 10.0 / t0.ln(), 200.0, &samples).unwrap();
        for w in falling.points.windows(2) {
            assert!(w[1].x <= w[0].x + 1e-12);
        }
        assert!(falling.points.last().unwrap().x < 10.0);
    }

    #[test]
    fn comparison_argument_checks() {
        assert!(comparison_ode_critic(1.0, 1, 1.0, 1.0, 10.0, &[5.0]).is_err());
        assert!(comparison_ode_actor(0.0, 2.0, 0.0, 10.0, &[5.0]).is_err());
        assert!(comparison_ode_actor(1.0, 2.0, 0.0, 10.0, &[20.0]).is_err());
    }

    #[test]
    fn ode_csv_shape() {
        let spec = fixtures::chain();
        let opts = OdeOptions::new(1.0, 0.1, 0.5, vec![0.0, 0.5]);
        let traj = integrate(&spec, &ThetaTable::zeros(2, 2), &Table::zeros(2, 2), &opts).unwrap();
        let mut buf = Vec::new();
        write_ode_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,kind,x,a,value");
        // 2 checkpoints × (3 tables × 4 entries + 3 scalars)
        assert_eq!(lines.len(), 1 + 2 * (3 * 4 + 3));
    }
}
