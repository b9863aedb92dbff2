//! Closed-form / linear-algebra ground truth for finite MDPs.
//!
//! Everything here is exact up to dense LU round-off: stationary
//! distributions, discounted visiting measures, value functions, the
//! objective J(f) = Σ μ(x)·V^f(x), advantages, softmax policy gradients
//! ∂_{x,a} J = σ_μ^f(x,a)·A^f(x,a), the performance-difference identity,
//! non-uniform Łojasiewicz lower bounds, Poisson-equation solutions,
//! total-variation mixing profiles, and a policy-iteration optimal-policy
//! oracle.
//!
//! All linear systems go through dense LU with partial pivoting; problem
//! sizes stay at a few hundred state-action pairs.

use crate::error::{Error, Result};
use crate::mdp::{check_ergodicity, MdpSpec, StateActionKernel};
use crate::numeric;
use crate::policy::{softmax_policy, PolicyTable, ThetaTable};
use crate::table::Table;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Greedy-set tie tolerance: actions within this of the row maximum of
/// V^f(x,·) count as greedy.
pub const GREEDY_TIE_TOL: f64 = 1e-9;

/// Max residual accepted from the stationary-distribution solve.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

fn solve_dense(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))
}

/// State and state-action value functions of a policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuePair {
    /// V^f(x), the fixed point of (I − γP_f)V = r_f.
    pub v_state: Vec<f64>,
    /// V^f(x,a) = r(x,a) + γ Σ_{x'} p(x'|x,a)·V^f(x').
    pub v_state_action: Table,
}

/// Discounted visiting measures of a policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisitingMeasures {
    /// ν(x) = Σ_k γ^k P(x_k = x); total mass 1/(1−γ).
    pub nu: Vec<f64>,
    /// σ(x,a) = f(x,a)·ν(x); total mass 1/(1−γ).
    pub sigma: Table,
    /// (1−γ)·σ, a probability over state-action pairs — the stationary law
    /// of the restart chain under f.
    pub sigma_normalized: Table,
}

/// Unique stationary distribution π of an ergodic kernel, solved by
/// replacing one balance equation with the normalization row.
///
/// Errors if the kernel is reducible or periodic, or if the solved π fails
/// the residual check ‖πᵀK − πᵀ‖_∞ ≤ 1e-10.
pub fn stationary_distribution(kernel: &StateActionKernel) -> Result<Vec<f64>> {
    let report = check_ergodicity(kernel);
    if !report.is_ergodic() {
        return Err(Error::NotErgodic(format!(
            "irreducible={}, period={}, classes={}",
            report.irreducible, report.period, report.n_communicating_classes
        )));
    }
    let d = kernel.n();
    // Rows 0..d-1 of (I − Kᵀ), last row replaced by the normalization.
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = (if i == j { 1.0 } else { 0.0 }) - kernel.entry(j, i);
        }
    }
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let pi = solve_dense(a, b)?;
    let mut pi: Vec<f64> = pi.iter().copied().collect();
    let sum: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= sum;
    }
    let back = kernel.apply_left(&pi);
    let residual = back
        .iter()
        .zip(&pi)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "stationary residual {residual:.3e} exceeds {STATIONARY_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(pi)
}

/// Visiting measures for the chain started from μ.
pub fn visiting_measures(spec: &MdpSpec, f: &PolicyTable) -> Result<VisitingMeasures> {
    visiting_measures_from(spec, f, spec.mu())
}

/// Visiting measures for the chain started from an arbitrary distribution.
///
/// ν solves (I − γP_fᵀ)ν = start, where P_f(x,x') = Σ_a f(x,a)·p(x'|x,a).
pub fn visiting_measures_from(
    spec: &MdpSpec,
    f: &PolicyTable,
    start: &[f64],
) -> Result<VisitingMeasures> {
    spec.ensure_valid()?;
    check_policy_shape(spec, f)?;
    if start.len() != spec.n_states() {
        return Err(Error::dimension_mismatch("start distribution length"));
    }
    let n = spec.n_states();
    let gamma = spec.gamma();
    let mut a = DMatrix::zeros(n, n);
    for x in 0..n {
        for x2 in 0..n {
            let p_f: f64 = (0..spec.n_actions())
                .map(|act| f[(x, act)] * spec.p(x, act, x2))
                .sum();
            // transposed: coefficient of nu(x) in the equation for x2
            a[(x2, x)] = (if x == x2 { 1.0 } else { 0.0 }) - gamma * p_f;
        }
    }
    let b = DVector::from_column_slice(start);
    let nu_v = solve_dense(a, b)?;
    let nu: Vec<f64> = nu_v.iter().copied().collect();
    let mut sigma = Table::zeros(n, spec.n_actions());
    for x in 0..n {
        for act in 0..spec.n_actions() {
            sigma[(x, act)] = f[(x, act)] * nu[x];
        }
    }
    let mut sigma_normalized = sigma.clone();
    sigma_normalized.scale(1.0 - gamma);
    Ok(VisitingMeasures {
        nu,
        sigma,
        sigma_normalized,
    })
}

/// State and state-action value functions of `f`, by Bellman solve.
pub fn value_functions(spec: &MdpSpec, f: &PolicyTable) -> Result<ValuePair> {
    spec.ensure_valid()?;
    check_policy_shape(spec, f)?;
    let n = spec.n_states();
    let gamma = spec.gamma();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for x in 0..n {
        for x2 in 0..n {
            let p_f: f64 = (0..spec.n_actions())
                .map(|act| f[(x, act)] * spec.p(x, act, x2))
                .sum();
            a[(x, x2)] = (if x == x2 { 1.0 } else { 0.0 }) - gamma * p_f;
        }
        b[x] = (0..spec.n_actions())
            .map(|act| f[(x, act)] * spec.reward(x, act))
            .sum();
    }
    let v = solve_dense(a, b)?;
    let v_state: Vec<f64> = v.iter().copied().collect();
    let mut q = Table::zeros(n, spec.n_actions());
    for x in 0..n {
        for act in 0..spec.n_actions() {
            let cont: f64 = (0..n).map(|x2| spec.p(x, act, x2) * v_state[x2]).sum();
            q[(x, act)] = spec.reward(x, act) + gamma * cont;
        }
    }
    Ok(ValuePair {
        v_state,
        v_state_action: q,
    })
}

/// J(f) = Σ_x μ(x)·V^f(x).
pub fn objective(spec: &MdpSpec, f: &PolicyTable) -> Result<f64> {
    let vp = value_functions(spec, f)?;
    Ok(spec
        .mu()
        .iter()
        .zip(&vp.v_state)
        .map(|(m, v)| m * v)
        .sum())
}

/// Advantage A(x,a) = V(x,a) − V(x).
pub fn advantage(vp: &ValuePair) -> Table {
    let mut out = vp.v_state_action.clone();
    for x in 0..out.n_states() {
        let v = vp.v_state[x];
        for a in 0..out.n_actions() {
            out[(x, a)] -= v;
        }
    }
    out
}

/// Softmax policy gradient: ∂_{x,a} J(f_θ) = σ_μ^{f_θ}(x,a)·A^{f_θ}(x,a),
/// with the unnormalized (mass 1/(1−γ)) visiting measure.
pub fn policy_gradient(spec: &MdpSpec, theta: &ThetaTable) -> Result<Table> {
    let f = softmax_policy(theta);
    let vm = visiting_measures(spec, &f)?;
    let vp = value_functions(spec, &f)?;
    let adv = advantage(&vp);
    let mut out = Table::zeros(spec.n_states(), spec.n_actions());
    for x in 0..spec.n_states() {
        for a in 0..spec.n_actions() {
            out[(x, a)] = vm.sigma[(x, a)] * adv[(x, a)];
        }
    }
    Ok(out)
}

/// The two sides of the performance-difference identity
/// V^f(x₀) − V^{f'}(x₀) = Σ_{x,a} σ_{x₀}^f(x,a)·A^{f'}(x,a).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerformanceDifference {
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates both sides of the performance-difference identity, with the
/// visiting measure of `f` started from δ_{x₀}.
pub fn performance_difference(
    spec: &MdpSpec,
    f: &PolicyTable,
    f2: &PolicyTable,
    x0: usize,
) -> Result<PerformanceDifference> {
    if x0 >= spec.n_states() {
        return Err(Error::invalid_argument(format!("state {x0} out of range")));
    }
    let vp1 = value_functions(spec, f)?;
    let vp2 = value_functions(spec, f2)?;
    let lhs = vp1.v_state[x0] - vp2.v_state[x0];
    let mut start = vec![0.0; spec.n_states()];
    start[x0] = 1.0;
    let vm = visiting_measures_from(spec, f, &start)?;
    let adv2 = advantage(&vp2);
    let rhs = vm
        .sigma
        .iter()
        .map(|((x, a), s)| s * adv2[(x, a)])
        .sum();
    Ok(PerformanceDifference { lhs, rhs })
}

/// Both sides of the non-uniform Łojasiewicz inequalities for a softmax
/// policy against a deterministic optimal policy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LojasiewiczReport {
    /// ‖∇_θ J(f_θ)‖₂.
    pub grad_norm: f64,
    /// Lower bound for the unique-optimal-action case:
    /// (1/√d_X)·‖ν^{f*}/ν^{f_θ}‖_∞⁻¹·min_x f_θ(x,a*(x))·[J(f*) − J(f_θ)].
    pub rhs_unique: f64,
    /// Lower bound using the greedy-set mass of f_θ in place of the
    /// optimal-action mass, with the extra 1/√d_A factor.
    pub rhs_general: f64,
    /// ‖ν^{f*}/ν^{f_θ}‖_∞, the distribution-mismatch coefficient.
    pub distribution_mismatch: f64,
    /// min_x f_θ(x, a*(x)).
    pub min_optimal_mass: f64,
}

/// Evaluates the Łojasiewicz gradient lower bounds.
///
/// Requires `f_star` deterministic (from [`optimal_policy`]) and μ of full
/// support; the greedy set of f_θ uses tie tolerance [`GREEDY_TIE_TOL`].
pub fn lojasiewicz_bounds(
    spec: &MdpSpec,
    theta: &ThetaTable,
    f_star: &PolicyTable,
) -> Result<LojasiewiczReport> {
    if !f_star.is_deterministic() {
        return Err(Error::invalid_argument(
            "f_star must be a deterministic policy",
        ));
    }
    if spec.mu().iter().any(|&m| m <= 0.0) {
        return Err(Error::invalid_argument(
            "mu must have full support for the Łojasiewicz bounds",
        ));
    }
    check_policy_shape(spec, f_star)?;
    let f = softmax_policy(theta);
    let grad = policy_gradient(spec, theta)?;
    let grad_norm = grad.l2_norm();

    let vm_theta = visiting_measures(spec, &f)?;
    let vm_star = visiting_measures(spec, f_star)?;
    let mismatch = vm_star
        .nu
        .iter()
        .zip(&vm_theta.nu)
        .fold(0.0f64, |m, (s, t)| m.max(s / t));

    let a_star = f_star.greedy_actions();
    let min_optimal_mass = (0..spec.n_states())
        .map(|x| f[(x, a_star[x])])
        .fold(f64::INFINITY, f64::min);

    let j_gap = (objective(spec, f_star)? - objective(spec, &f)?).max(0.0);

    let d_x = spec.n_states() as f64;
    let d_a = spec.n_actions() as f64;
    let rhs_unique = d_x.sqrt().recip() / mismatch * min_optimal_mass * j_gap;

    let vp = value_functions(spec, &f)?;
    let min_greedy_mass = (0..spec.n_states())
        .map(|x| {
            let row = vp.v_state_action.row(x);
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.iter()
                .enumerate()
                .filter(|(_, &q)| q >= max - GREEDY_TIE_TOL)
                .map(|(a, _)| f[(x, a)])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let rhs_general = (d_x * d_a).sqrt().recip() / mismatch * min_greedy_mass * j_gap;

    Ok(LojasiewiczReport {
        grad_norm,
        rhs_unique,
        rhs_general,
        distribution_mismatch: mismatch,
        min_optimal_mass,
    })
}

/// Solves the Poisson equation ν − Kν = 1{·=ξ} − π(ξ) via the
/// fundamental-matrix system (I − K + 1·πᵀ)ν = rhs.
///
/// The returned ν is the centered solution (πᵀν = 0), matching the series
/// Σ_{n≥0} [Kⁿ(·;ξ) − π(ξ)]. The residual of the identity is checked to
/// 1e-10.
pub fn poisson_solution(kernel: &StateActionKernel, pi: &[f64], xi: usize) -> Result<Vec<f64>> {
    let d = kernel.n();
    if pi.len() != d {
        return Err(Error::dimension_mismatch("pi length"));
    }
    if xi >= d {
        return Err(Error::invalid_argument(format!("xi {xi} out of range")));
    }
    let report = check_ergodicity(kernel);
    if !report.is_ergodic() {
        return Err(Error::NotErgodic("Poisson equation needs ergodicity".into()));
    }
    let back = kernel.apply_left(pi);
    let pi_residual = back
        .iter()
        .zip(pi)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if pi_residual > 1e-8 {
        return Err(Error::invalid_argument(format!(
            "pi is not stationary for this kernel (residual {pi_residual:.3e})"
        )));
    }
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = (if i == j { 1.0 } else { 0.0 }) - kernel.entry(i, j) + pi[j];
        }
    }
    let mut b = DVector::zeros(d);
    for i in 0..d {
        b[i] = (if i == xi { 1.0 } else { 0.0 }) - pi[xi];
    }
    let nu = solve_dense(a, b)?;
    let nu: Vec<f64> = nu.iter().copied().collect();
    let k_nu = kernel.apply(&nu);
    let residual = (0..d)
        .map(|i| {
            let rhs = (if i == xi { 1.0 } else { 0.0 }) - pi[xi];
            (nu[i] - k_nu[i] - rhs).abs()
        })
        .fold(0.0f64, f64::max);
    if residual > 1e-10 {
        return Err(Error::Numerical(format!(
            "Poisson residual {residual:.3e} exceeds 1e-10"
        )));
    }
    Ok(nu)
}

/// Fitted geometric decay of the total-variation mixing profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometricFit {
    /// Fitted rate ρ: d(n) ≈ C·ρⁿ.
    pub rho: f64,
    pub log_c: f64,
    pub r_squared: f64,
    /// Inclusive n-range used for the fit.
    pub window: (usize, usize),
}

/// Worst-case total-variation distances to stationarity per step count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingProfile {
    /// d(n) = max_ξ ½‖Kⁿ(ξ,·) − π‖₁ for n = 1..=n_max.
    pub tv: Vec<f64>,
    /// Least-squares fit of log d(n) over the window d(n) ∈ [1e-12, 1e-2];
    /// absent when fewer than two profile points fall in the window.
    pub fit: Option<GeometricFit>,
    /// min_ξ π(ξ) > 0.
    pub min_stationary: f64,
}

/// Computes the mixing profile by explicit matrix powers.
pub fn mixing_profile(kernel: &StateActionKernel, n_max: usize) -> Result<MixingProfile> {
    if n_max == 0 {
        return Err(Error::invalid_argument("n_max must be >= 1"));
    }
    let pi = stationary_distribution(kernel)?; // ergodicity gate
    let d = kernel.n();
    let mut power: Vec<f64> = kernel.as_slice().to_vec();
    let mut tv = Vec::with_capacity(n_max);
    let tv_of = |m: &[f64]| -> f64 {
        (0..d)
            .map(|xi| {
                0.5 * m[xi * d..(xi + 1) * d]
                    .iter()
                    .zip(&pi)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max)
    };
    tv.push(tv_of(&power));
    for _ in 1..n_max {
        let mut next = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let v = power[i * d + k];
                if v == 0.0 {
                    continue;
                }
                let row = kernel.row(k);
                for (j, kj) in row.iter().enumerate() {
                    next[i * d + j] += v * kj;
                }
            }
        }
        power = next;
        tv.push(tv_of(&power));
    }

    // Regression window clear of both the O(1) head and the noise floor.
    let pts: Vec<(f64, f64)> = tv
        .iter()
        .enumerate()
        .filter(|(_, &v)| (1e-12..=1e-2).contains(&v))
        .map(|(i, &v)| ((i + 1) as f64, v.ln()))
        .collect();
    let fit = if pts.len() >= 2 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (slope, intercept, r2) = numeric::linear_fit(&xs, &ys)?;
        Some(GeometricFit {
            rho: slope.exp(),
            log_c: intercept,
            r_squared: r2,
            window: (xs[0] as usize, *xs.last().unwrap() as usize),
        })
    } else {
        None
    };
    let min_stationary = pi.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(MixingProfile {
        tv,
        fit,
        min_stationary,
    })
}

/// A deterministic optimal policy and its objective value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalPolicy {
    pub f_star: PolicyTable,
    pub j_star: f64,
    /// Chosen action per state (lowest index on ties).
    pub actions: Vec<usize>,
}

/// Policy iteration to the exact greedy fixed point, with lowest-index
/// tie-breaking at tolerance [`GREEDY_TIE_TOL`].
pub fn optimal_policy(spec: &MdpSpec) -> Result<OptimalPolicy> {
    spec.ensure_valid()?;
    let mut actions = vec![0usize; spec.n_states()];
    let mut policy = PolicyTable::one_hot(&actions, spec.n_actions())?;
    let mut j_prev = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let vp = value_functions(spec, &policy)?;
        let new_actions: Vec<usize> = (0..spec.n_states())
            .map(|x| {
                let row = vp.v_state_action.row(x);
                let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                row.iter()
                    .position(|&q| q >= max - GREEDY_TIE_TOL)
                    .expect("row has a maximum")
            })
            .collect();
        let j = spec
            .mu()
            .iter()
            .zip(&vp.v_state)
            .map(|(m, v)| m * v)
            .sum::<f64>();
        if new_actions == actions || j <= j_prev + 1e-13 {
            return Ok(OptimalPolicy {
                f_star: policy,
                j_star: j,
                actions,
            });
        }
        j_prev = j;
        actions = new_actions;
        policy = PolicyTable::one_hot(&actions, spec.n_actions())?;
    }
    Err(Error::Numerical(
        "policy iteration failed to settle in 1000 rounds".into(),
    ))
}

fn check_policy_shape(spec: &MdpSpec, f: &PolicyTable) -> Result<()> {
    if f.n_states() != spec.n_states() || f.n_actions() != spec.n_actions() {
        return Err(Error::dimension_mismatch(format!(
            "policy is {}x{}, spec is {}x{}",
            f.n_states(),
            f.n_actions(),
            spec.n_states(),
            spec.n_actions()
        )));
    }
    Ok(())
}
