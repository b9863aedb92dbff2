//! Exact-solver checks against independent oracles: truncated Neumann
//! series, Monte-Carlo rollouts, central finite differences, truncated
//! Poisson series, and exhaustive policy enumeration. The oracles here are
//! deliberately separate code paths from the dense linear solves they
//! check.

use aclab_core::mdp::{fixtures, joint_kernel, KernelKind, MdpSpec, StateActionKernel};
use aclab_core::policy::{log_policy_gradient, softmax_policy, PolicyTable, ThetaTable};
use aclab_core::solvers::{
    lojasiewicz_bounds, mixing_profile, objective, optimal_policy, poisson_solution,
    policy_gradient, stationary_distribution, value_functions, visiting_measures,
};
use aclab_core::table::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// State-marginal transition matrix P_f(x,x') = Σ_a f(x,a)·p(x'|x,a).
fn state_transition(spec: &MdpSpec, f: &PolicyTable) -> Vec<Vec<f64>> {
    (0..spec.n_states())
        .map(|x| {
            (0..spec.n_states())
                .map(|x2| {
                    (0..spec.n_actions())
                        .map(|a| f[(x, a)] * spec.p(x, a, x2))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Truncated Neumann series Σ_k γ^k·(μᵀ P_f^k), run until the geometric
/// tail bound drops below `tail`.
fn neumann_nu(spec: &MdpSpec, f: &PolicyTable, tail: f64) -> Vec<f64> {
    let p_f = state_transition(spec, f);
    let gamma = spec.gamma();
    let mut dist: Vec<f64> = spec.mu().to_vec();
    let mut nu = vec![0.0; spec.n_states()];
    let mut weight = 1.0;
    loop {
        for (n, d) in nu.iter_mut().zip(&dist) {
            *n += weight * d;
        }
        weight *= gamma;
        // remaining mass: Σ_{j>k} γ^j = weight/(1−γ)
        if weight / (1.0 - gamma) < tail {
            break;
        }
        let next: Vec<f64> = (0..spec.n_states())
            .map(|x2| (0..spec.n_states()).map(|x| dist[x] * p_f[x][x2]).sum())
            .collect();
        dist = next;
    }
    nu
}

fn seeded_theta(spec: &MdpSpec, seed: u64) -> ThetaTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..spec.n_xi()).map(|_| rng.gen_range(-1.5..1.5)).collect();
    ThetaTable::new(Table::from_flat(spec.n_states(), spec.n_actions(), data).unwrap()).unwrap()
}

#[test]
fn visiting_measure_matches_truncated_neumann_series() {
    // Tail bound γ^(k+1)/(1−γ) < 1e-13 keeps the oracle itself sharper
    // than the 1e-12 comparison.
    let spec = fixtures::chain();
    let f = PolicyTable::uniform(2, 2);
    let oracle = neumann_nu(&spec, &f, 1e-13);
    let vm = visiting_measures(&spec, &f).unwrap();
    for x in 0..2 {
        assert!(
            (vm.nu[x] - oracle[x]).abs() < 1e-12,
            "nu({x}) = {} vs oracle {}",
            vm.nu[x],
            oracle[x]
        );
    }
}

#[test]
fn restart_stationary_matches_neumann_occupancy() {
    // The stationary law of the restart joint chain equals the normalized
    // visiting measure (1−γ)·σ, computed here through the independent
    // Neumann route.
    let spec = fixtures::chain();
    for (label, f) in [
        ("uniform", PolicyTable::uniform(2, 2)),
        ("tilted", softmax_policy(&seeded_theta(&spec, 5))),
    ] {
        let kernel = joint_kernel(&spec, &f, KernelKind::RestartWithF).unwrap();
        let pi = stationary_distribution(&kernel).unwrap();
        let oracle_nu = neumann_nu(&spec, &f, 1e-13);
        for xi in 0..4 {
            let (x, a) = (xi / 2, xi % 2);
            let sigma_norm = (1.0 - spec.gamma()) * f[(x, a)] * oracle_nu[x];
            assert!(
                (pi[xi] - sigma_norm).abs() < 1e-8,
                "{label}: pi({xi}) = {} vs (1-gamma)*sigma = {sigma_norm}",
                pi[xi]
            );
        }
    }
}

#[test]
fn value_functions_match_monte_carlo_rollouts() {
    let spec = fixtures::chain();
    let f = PolicyTable::uniform(2, 2);
    let vp = value_functions(&spec, &f).unwrap();
    let gamma = spec.gamma();
    // Horizon with truncation bias below 1e-8·(reward scale)/(1−γ).
    let horizon = ((1e-8f64).ln() / gamma.ln()).ceil() as usize;
    let n_rollouts = 500_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(314159);
    for x0 in 0..2 {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_rollouts {
            let mut x = x0;
            let mut ret = 0.0;
            let mut w = 1.0;
            for _ in 0..horizon {
                let a = if rng.gen::<f64>() < 0.5 { 0 } else { 1 };
                ret += w * spec.reward(x, a);
                w *= gamma;
                let row = spec.p_row(x, a);
                let u: f64 = rng.gen();
                x = if u < row[0] { 0 } else { 1 };
            }
            sum += ret;
            sum_sq += ret * ret;
        }
        let mean = sum / n_rollouts as f64;
        let var = (sum_sq / n_rollouts as f64 - mean * mean).max(0.0);
        let se = (var / n_rollouts as f64).sqrt();
        assert!(
            (vp.v_state[x0] - mean).abs() <= 3.0 * se,
            "V({x0}) = {} vs MC {mean} ± {se}",
            vp.v_state[x0]
        );
    }
    let j = objective(&spec, &f).unwrap();
    let mu_v: f64 = (0..2).map(|x| 0.5 * vp.v_state[x]).sum();
    assert!((j - mu_v).abs() < 1e-12);
}

#[test]
fn policy_gradient_matches_central_finite_differences() {
    let eps = 1e-5;
    let mut specs = vec![fixtures::chain()];
    for seed in [1u64, 2, 3] {
        specs.push(aclab_core::mdp::random_mdp(3, 2, 0.85, seed, 0.02).unwrap());
    }
    for (i, spec) in specs.iter().enumerate() {
        let theta = seeded_theta(spec, 40 + i as u64);
        let grad = policy_gradient(spec, &theta).unwrap();
        for x in 0..spec.n_states() {
            for a in 0..spec.n_actions() {
                let mut up = theta.table().clone();
                up[(x, a)] += eps;
                let mut dn = theta.table().clone();
                dn[(x, a)] -= eps;
                let ju = objective(spec, &softmax_policy(&ThetaTable::new(up).unwrap())).unwrap();
                let jd = objective(spec, &softmax_policy(&ThetaTable::new(dn).unwrap())).unwrap();
                let fd = (ju - jd) / (2.0 * eps);
                let an = grad[(x, a)];
                assert!(
                    (an - fd).abs() <= 1e-6 * an.abs().max(fd.abs()) + 1e-9,
                    "spec {i} ({x},{a}): analytic {an} vs FD {fd}"
                );
            }
        }
    }
}

#[test]
fn log_policy_gradient_matches_finite_differences() {
    let spec = fixtures::chain();
    let theta = seeded_theta(&spec, 99);
    let eps = 1e-5;
    for x in 0..2 {
        for a in 0..2 {
            let analytic = log_policy_gradient(&theta, x, a).unwrap();
            for x2 in 0..2 {
                for a2 in 0..2 {
                    let mut up = theta.table().clone();
                    up[(x2, a2)] += eps;
                    let mut dn = theta.table().clone();
                    dn[(x2, a2)] -= eps;
                    let fu = softmax_policy(&ThetaTable::new(up).unwrap())[(x, a)].ln();
                    let fd_val = softmax_policy(&ThetaTable::new(dn).unwrap())[(x, a)].ln();
                    let fd = (fu - fd_val) / (2.0 * eps);
                    let an = analytic[(x2, a2)];
                    assert!(
                        (an - fd).abs() <= 1e-6 * an.abs().max(fd.abs()) + 1e-9,
                        "({x},{a}) wrt ({x2},{a2}): {an} vs {fd}"
                    );
                }
            }
        }
    }
}

/// Independent Poisson oracle: partial sums of Σ_n [Kⁿ(ξ';ξ) − π(ξ)],
/// stopped once the worst per-row deviation from π is below `tol` and the
/// measured geometric tail is accounted for.
fn truncated_poisson(kernel: &StateActionKernel, pi: &[f64], xi: usize, tol: f64) -> Vec<f64> {
    let d = kernel.n();
    // dist[row] holds the row of Kⁿ as a distribution, evolved per row.
    let mut rows: Vec<Vec<f64>> = (0..d)
        .map(|r| {
            let mut e = vec![0.0; d];
            e[r] = 1.0;
            e
        })
        .collect();
    let mut nu = vec![0.0; d];
    for n in 0..10_000 {
        let mut worst = 0.0f64;
        for (r, dist) in rows.iter().enumerate() {
            nu[r] += dist[xi] - pi[xi];
            let dev: f64 = dist
                .iter()
                .zip(pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(dev);
        }
        if n > 2 && worst < tol {
            break;
        }
        rows = rows
            .iter()
            .map(|dist| {
                (0..d)
                    .map(|j| (0..d).map(|i| dist[i] * kernel.entry(i, j)).sum())
                    .collect()
            })
            .collect();
    }
    nu
}

#[test]
fn poisson_solution_matches_truncated_series() {
    let spec = fixtures::chain();
    let tilted = softmax_policy(&seeded_theta(&spec, 7));
    for kind in [KernelKind::RestartWithF, KernelKind::OriginalWithG] {
        let kernel = joint_kernel(&spec, &tilted, kind).unwrap();
        let pi = stationary_distribution(&kernel).unwrap();
        for xi in 0..4 {
            let solved = poisson_solution(&kernel, &pi, xi).unwrap();
            let oracle = truncated_poisson(&kernel, &pi, xi, 1e-14);
            for i in 0..4 {
                assert!(
                    (solved[i] - oracle[i]).abs() < 1e-10,
                    "{kind:?} xi={xi} i={i}: {} vs series {}",
                    solved[i],
                    oracle[i]
                );
            }
        }
    }
}

#[test]
fn mixing_profile_geometric_on_tilted_chain() {
    let spec = fixtures::chain();
    let f = PolicyTable::new(Table::from_rows(&[vec![0.8, 0.2], vec![0.8, 0.2]]).unwrap()).unwrap();
    let kernel = joint_kernel(&spec, &f, KernelKind::OriginalWithG).unwrap();
    let profile = mixing_profile(&kernel, 50).unwrap();
    let fit = profile.fit.expect("window is populated");
    assert!(fit.r_squared >= 0.99, "R² = {}", fit.r_squared);
    assert!(fit.rho > 0.0 && fit.rho < 1.0);
    // d(n) ≤ C·ρⁿ over the fitted window with C from the fit.
    for n in fit.window.0..=fit.window.1 {
        let d = profile.tv[n - 1];
        let bound = (fit.log_c + fit.rho.ln() * n as f64).exp();
        assert!(d <= bound * 1.05, "d({n}) = {d} vs C·ρⁿ = {bound}");
    }
    // Independent oracle: evolve a single row distribution step by step.
    let pi = stationary_distribution(&kernel).unwrap();
    let mut dist = vec![0.0; 4];
    dist[0] = 1.0;
    for n in 1..=10usize {
        dist = kernel.apply_left(&dist);
        let tv: f64 = 0.5
            * dist
                .iter()
                .zip(&pi)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        assert!(
            tv <= profile.tv[n - 1] + 1e-12,
            "row-0 TV at n={n} exceeds the max profile"
        );
    }
}

#[test]
fn uniform_policy_chain_mixes_in_two_steps() {
    // The chain fixture's two actions have complementary rows, so the
    // exactly uniform policy collapses the joint chain onto its stationary
    // law at n = 2.
    let spec = fixtures::chain();
    let f = PolicyTable::uniform(2, 2);
    let kernel = joint_kernel(&spec, &f, KernelKind::OriginalWithG).unwrap();
    let profile = mixing_profile(&kernel, 10).unwrap();
    assert!(profile.tv[0] > 0.1);
    for n in 2..=10 {
        assert!(profile.tv[n - 1] < 1e-14, "d({n}) = {}", profile.tv[n - 1]);
    }
    assert!(profile.fit.is_none());
}

#[test]
fn optimal_policy_matches_exhaustive_enumeration() {
    let spec = fixtures::chain();
    let mut best = (f64::NEG_INFINITY, vec![0usize, 0]);
    for a0 in 0..2 {
        for a1 in 0..2 {
            let f = PolicyTable::one_hot(&[a0, a1], 2).unwrap();
            let j = objective(&spec, &f).unwrap();
            if j > best.0 {
                best = (j, vec![a0, a1]);
            }
        }
    }
    let opt = optimal_policy(&spec).unwrap();
    assert_eq!(opt.actions, best.1);
    assert_eq!(opt.actions, vec![1, 0]);
    assert!((opt.j_star - best.0).abs() < 1e-10);
}

#[test]
fn lojasiewicz_bounds_on_chain() {
    let spec = fixtures::chain();
    let opt = optimal_policy(&spec).unwrap();

    // θ ≡ 0: both sides strictly positive and ordered.
    let rep = lojasiewicz_bounds(&spec, &ThetaTable::zeros(2, 2), &opt.f_star).unwrap();
    assert!(rep.grad_norm > 0.0 && rep.rhs_unique > 0.0);
    assert!(rep.grad_norm >= rep.rhs_unique);
    assert!(rep.grad_norm >= rep.rhs_general);
    assert!(rep.distribution_mismatch >= 1.0);
    assert!((rep.min_optimal_mass - 0.5).abs() < 1e-12);

    // Near-optimal θ: both sides close to zero, inequality still holds.
    let near = ThetaTable::new(Table::from_rows(&[vec![0.0, 12.0], vec![12.0, 0.0]]).unwrap())
        .unwrap();
    let rep = lojasiewicz_bounds(&spec, &near, &opt.f_star).unwrap();
    assert!(rep.grad_norm < 1e-3);
    assert!(rep.rhs_unique < 1e-3);
    assert!(rep.grad_norm >= rep.rhs_unique - 1e-12);
    assert!(rep.grad_norm >= rep.rhs_general - 1e-12);
}
