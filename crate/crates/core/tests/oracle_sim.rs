//! Stochastic-algorithm checks against hand evaluation and statistical
//! bands: a single step replayed with scalar arithmetic against the
//! recorded random draws, mean-zero bands for the frozen-parameter
//! fluctuation tables, and chain visit frequencies against the exact
//! stationary law.

use aclab_core::mdp::{fixtures, joint_kernel, KernelKind};
use aclab_core::policy::ThetaTable;
use aclab_core::rates::{eta_discrete, zeta_discrete};
use aclab_core::sim::{empirical_fluctuation, init_run, run_with_bound_checks, step, AcConfig};
use aclab_core::solvers::stationary_distribution;
use aclab_core::table::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mirror of the simulator's inverse-CDF draw for replaying its RNG tape.
fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
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

#[test]
fn one_step_matches_hand_evaluation() {
    // chainmdp, N = 1, θ₀ = 0, distinct Q₀ entries, one step from a known
    // seed, recomputed with scalar arithmetic.
    let spec = fixtures::chain();
    let seed = 20240717u64;
    let q0 = Table::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
    let config = AcConfig {
        n: 1,
        t_end: 1.0,
        alpha: 0.8,
        theta0: ThetaTable::zeros(2, 2),
        q0: q0.clone(),
        seed,
        stream: 0,
        checkpoints: vec![],
        schedule: aclab_core::rates::RateSchedule::Paper,
    };
    let mut state = init_run(&spec, &config).unwrap();

    // Replay the init draws on an identical RNG tape.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let x0 = draw(&mut rng, &[0.5, 0.5]);
    // η₀ = 1: g₀ is exactly uniform regardless of θ.
    assert_eq!(eta_discrete(0, 1), 1.0);
    let a0 = draw(&mut rng, &[0.5, 0.5]);
    let xt0 = draw(&mut rng, &[0.5, 0.5]);
    let at0 = draw(&mut rng, &[0.5, 0.5]);
    assert_eq!(state.critic_chain, (x0, a0));
    assert_eq!(state.actor_chain, (xt0, at0));

    step(&mut state, &spec, &config).unwrap();

    // Step draws, in the pinned order: x₁, x̃₁, a₁, ã₁.
    let x1 = draw(&mut rng, spec.p_row(x0, a0));
    let mut restart = [0.0; 2];
    spec.restart_row(xt0, at0, &mut restart);
    let xt1 = draw(&mut rng, &restart);

    // Hand-evaluated critic update: only entry (x₀,a₀) changes.
    let g0 = [0.5, 0.5]; // η₀ = 1
    let target: f64 = spec.reward(x0, a0)
        + spec.gamma() * (q0[(x1, 0)] * g0[0] + q0[(x1, 1)] * g0[1]);
    let mut q1 = q0.clone();
    q1[(x0, a0)] += config.alpha / 1.0 * (target - q0[(x0, a0)]);

    // Hand-evaluated actor update: row x̃₀ moves along the score of f₀.
    let zeta0 = zeta_discrete(0, 1);
    assert_eq!(zeta0, 1.0);
    let mut theta1 = Table::zeros(2, 2);
    for a in 0..2 {
        let ind = if a == at0 { 1.0 } else { 0.0 };
        theta1[(xt0, a)] = zeta0 * q0[(xt0, at0)] * (ind - 0.5);
    }

    for x in 0..2 {
        for a in 0..2 {
            assert!(
                (state.q[(x, a)] - q1[(x, a)]).abs() <= 1e-15,
                "Q({x},{a}): {} vs hand {}",
                state.q[(x, a)],
                q1[(x, a)]
            );
            assert!(
                (state.theta[(x, a)] - theta1[(x, a)]).abs() <= 1e-15,
                "theta({x},{a}): {} vs hand {}",
                state.theta[(x, a)],
                theta1[(x, a)]
            );
        }
    }

    // Post-update draws condition on θ₁ and the k = 1 exploration rate.
    let softmax_row = |theta: &Table, x: usize| -> [f64; 2] {
        let m = theta[(x, 0)].max(theta[(x, 1)]);
        let e0 = (theta[(x, 0)] - m).exp();
        let e1 = (theta[(x, 1)] - m).exp();
        [e0 / (e0 + e1), e1 / (e0 + e1)]
    };
    let eta1 = eta_discrete(1, 1);
    let f1_x1 = softmax_row(&theta1, x1);
    let g1_x1 = [
        eta1 / 2.0 + (1.0 - eta1) * f1_x1[0],
        eta1 / 2.0 + (1.0 - eta1) * f1_x1[1],
    ];
    let a1 = draw(&mut rng, &g1_x1);
    let f1_xt1 = softmax_row(&theta1, xt1);
    let at1 = draw(&mut rng, &f1_xt1);
    assert_eq!(state.critic_chain, (x1, a1));
    assert_eq!(state.actor_chain, (xt1, at1));
    assert_eq!(state.k, 1);
}

#[test]
fn frozen_fluctuation_tables_have_zero_mean() {
    // With θ ≡ 0 (uniform policy) and frozen tables, both chains start in
    // their stationary laws on the chain fixture, so every entry of every
    // error table is an exactly mean-zero average. Check |mean| over 100
    // seeds against 4 standard errors.
    let spec = fixtures::chain();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let q0 = Table::from_rows(&[
        vec![rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)],
        vec![rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)],
    ])
    .unwrap();
    let n_seeds = 100usize;
    let mut samples: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); 4]; 4];
    for seed in 0..n_seeds as u64 {
        let config = AcConfig {
            n: 200,
            t_end: 2.0,
            alpha: 1.0,
            theta0: ThetaTable::zeros(2, 2),
            q0: q0.clone(),
            seed,
            stream: 0,
            checkpoints: vec![],
            schedule: aclab_core::rates::RateSchedule::Paper,
        };
        let tables = empirical_fluctuation(&spec, &config, true).unwrap();
        let all = [
            &tables.actor,
            &tables.critic[0],
            &tables.critic[1],
            &tables.critic[2],
        ];
        for (c, table) in all.iter().enumerate() {
            for xi in 0..4 {
                samples[c][xi].push(table.as_slice()[xi]);
            }
        }
    }
    let names = ["actor", "critic-1", "critic-2", "critic-3"];
    for (c, name) in names.iter().enumerate() {
        for xi in 0..4 {
            let vals = &samples[c][xi];
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (vals.len() - 1) as f64;
            let band = 4.0 * (var.sqrt() / (n_seeds as f64).sqrt()) + 1e-12;
            assert!(
                mean.abs() <= band,
                "{name} entry {xi}: mean {mean:.3e} outside ±{band:.3e}"
            );
        }
    }
}

#[test]
fn frozen_chain_visit_frequencies_match_stationary_law() {
    // α = 0 with Q₀ = 0 freezes both tables; the critic chain under the
    // uniform policy has stationary law 0.25 per pair. 3σ multinomial
    // bands over 5·10⁴ steps.
    let spec = fixtures::chain();
    let config = AcConfig {
        n: 25_000,
        t_end: 2.0,
        alpha: 0.0,
        theta0: ThetaTable::zeros(2, 2),
        q0: Table::zeros(2, 2),
        seed: 4242,
        stream: 0,
        checkpoints: vec![],
        schedule: aclab_core::rates::RateSchedule::Paper,
    };
    let mut state = init_run(&spec, &config).unwrap();
    let total = state.total_steps();
    let mut counts = [0u64; 4];
    for _ in 0..total {
        let (x, a) = state.critic_chain;
        counts[x * 2 + a] += 1;
        step(&mut state, &spec, &config).unwrap();
    }
    let uniform = aclab_core::policy::PolicyTable::uniform(2, 2);
    let kernel = joint_kernel(&spec, &uniform, KernelKind::OriginalWithG).unwrap();
    let pi = stationary_distribution(&kernel).unwrap();
    for xi in 0..4 {
        let freq = counts[xi] as f64 / total as f64;
        let sigma = (pi[xi] * (1.0 - pi[xi]) / total as f64).sqrt();
        assert!(
            (freq - pi[xi]).abs() <= 3.0 * sigma,
            "pair {xi}: freq {freq} vs pi {} (3σ = {})",
            pi[xi],
            3.0 * sigma
        );
    }
}

#[test]
fn per_step_bounds_hold_on_moderate_run() {
    let spec = fixtures::chain();
    let config = AcConfig::from_zero(&spec, 5_000, 2.0, 1.0, 31);
    let report = run_with_bound_checks(&spec, &config).unwrap();
    assert!(report.ok, "{report:?}");
    assert_eq!(report.steps, 10_000);
    assert!(report.max_critic_violation <= 1e-12);
    assert!(report.max_actor_violation <= 1e-12);
    assert!(report.updates_local);
    assert!(report.q_sup_max <= report.q_sup_bound);
}
