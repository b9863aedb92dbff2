//! Registry of numerical property checks, runnable by name.
//!
//! Each property is a pure, internally seeded check of one identity or
//! inequality on fixtures plus randomized instances: policy gradients
//! against central finite differences, Bellman and Poisson residuals, the
//! performance-difference identity, the restart-chain stationarity
//! identity, Łojasiewicz gradient lower bounds, rate-schedule properties,
//! per-step increment bounds of the stochastic algorithm, and the a-priori
//! box for the limit critic.

use crate::mdp::{self, fixtures, joint_kernel, KernelKind, MdpSpec};
use crate::ode::{integrate, OdeOptions};
use crate::policy::{log_policy_gradient, softmax_policy, PolicyTable, ThetaTable};
use crate::rates::{check_rate_properties, eta_discrete, zeta_discrete, RateSchedule};
use crate::sim::{run_with_bound_checks, AcConfig};
use crate::solvers::{
    lojasiewicz_bounds, objective, optimal_policy, performance_difference, poisson_solution,
    policy_gradient, stationary_distribution, value_functions, visiting_measures,
};
use crate::table::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of one property check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of a verify run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySummary {
    pub results: Vec<PropertyResult>,
}

impl VerifySummary {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

/// Names of every registered property, in execution order.
pub fn property_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(name, _)| *name).collect()
}

type PropertyFn = fn() -> PropertyResult;

static REGISTRY: &[(&str, PropertyFn)] = &[
    ("softmax-simplex", prop_softmax_simplex),
    ("rates-monotone", prop_rates_monotone),
    ("rates-properties", prop_rates_properties),
    ("kernel-rows", prop_kernel_rows),
    ("restart-ergodic", prop_restart_ergodic),
    ("bellman-residual", prop_bellman_residual),
    ("konda-stationarity", prop_konda_stationarity),
    ("loggrad-fd", prop_loggrad_fd),
    ("pg-fd", prop_pg_fd),
    ("poisson-residual", prop_poisson_residual),
    ("perf-diff", prop_perf_diff),
    ("lojasiewicz", prop_lojasiewicz),
    ("critic-increment-bounds", prop_critic_increment_bounds),
    ("ode-critic-box", prop_ode_critic_box),
    ("mixing-geometric", prop_mixing_geometric),
];

/// Runs every registered property whose name contains `filter` (all when
/// `filter` is `None`).
pub fn run_verify(filter: Option<&str>) -> VerifySummary {
    let results = REGISTRY
        .iter()
        .filter(|(name, _)| filter.map_or(true, |f| name.contains(f)))
        .map(|(_, f)| f())
        .collect();
    VerifySummary { results }
}

fn result(name: &str, pass: bool, detail: String) -> PropertyResult {
    PropertyResult {
        name: name.into(),
        pass,
        detail,
    }
}

fn random_spec(seed: u64) -> MdpSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000);
    let n_states = rng.gen_range(2..=4);
    let n_actions = rng.gen_range(2..=3);
    let gamma = [0.5, 0.8, 0.9, 0.95][rng.gen_range(0..4)];
    mdp::random_mdp(n_states, n_actions, gamma, seed, 0.02).expect("random spec is valid")
}

fn random_theta(spec: &MdpSpec, seed: u64) -> ThetaTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e7a);
    let data: Vec<f64> = (0..spec.n_xi()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    ThetaTable::new(Table::from_flat(spec.n_states(), spec.n_actions(), data).unwrap()).unwrap()
}

fn prop_softmax_simplex() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let data: Vec<f64> = (0..12).map(|_| rng.gen_range(-700.0..700.0)).collect();
        let theta = ThetaTable::new(Table::from_flat(4, 3, data).unwrap()).unwrap();
        let f = softmax_policy(&theta);
        for x in 0..4 {
            let sum: f64 = f.row(x).iter().sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    result(
        "softmax-simplex",
        worst <= 1e-12,
        format!("worst row-sum deviation {worst:.3e} (tol 1e-12)"),
    )
}

fn prop_rates_monotone() -> PropertyResult {
    let mut ok = true;
    for &n in &[1u32, 7, 100, 1000] {
        for k in 0..1000u64 {
            if zeta_discrete(k + 1, n) > zeta_discrete(k, n)
                || eta_discrete(k + 1, n) > eta_discrete(k, n)
            {
                ok = false;
            }
        }
    }
    result(
        "rates-monotone",
        ok,
        "zeta and eta nonincreasing in k for N in {1,7,100,1000}".into(),
    )
}

fn prop_rates_properties() -> PropertyResult {
    let report = check_rate_properties(&RateSchedule::Paper, 1e6, &[1, 2, 4]);
    let detail = report
        .properties
        .iter()
        .map(|p| format!("{}={}", p.name, p.pass))
        .collect::<Vec<_>>()
        .join(", ");
    result("rates-properties", report.all_pass(), detail)
}

fn prop_kernel_rows() -> PropertyResult {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let spec = random_spec(seed);
        let f = softmax_policy(&random_theta(&spec, seed));
        for kind in [KernelKind::OriginalWithG, KernelKind::RestartWithF] {
            let k = joint_kernel(&spec, &f, kind).expect("kernel builds");
            for xi in 0..k.n() {
                let sum: f64 = k.row(xi).iter().sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
    }
    result(
        "kernel-rows",
        worst <= 1e-9,
        format!("worst joint-kernel row-sum deviation {worst:.3e} (tol 1e-9)"),
    )
}

fn prop_restart_ergodic() -> PropertyResult {
    let mut ok = true;
    let mut detail = String::new();
    for seed in 0..10 {
        let spec = random_spec(seed);
        let f = softmax_policy(&random_theta(&spec, seed));
        let k = joint_kernel(&spec, &f, KernelKind::RestartWithF).expect("kernel builds");
        let rep = mdp::check_ergodicity(&k);
        if !rep.is_ergodic() {
            ok = false;
            detail = format!("seed {seed}: {rep:?}");
        }
    }
    result(
        "restart-ergodic",
        ok,
        if ok {
            "restart kernel ergodic for 10 random full-support instances".into()
        } else {
            detail
        },
    )
}

fn prop_bellman_residual() -> PropertyResult {
    let mut worst = 0.0f64;
    let mut range_ok = true;
    for seed in 0..10 {
        let spec = random_spec(seed);
        let f = softmax_policy(&random_theta(&spec, seed + 100));
        let vp = value_functions(&spec, &f).expect("value solve");
        let vmax = 1.0 / (1.0 - spec.gamma());
        for x in 0..spec.n_states() {
            if !(0.0 - 1e-9..=vmax + 1e-9).contains(&vp.v_state[x]) {
                range_ok = false;
            }
            for a in 0..spec.n_actions() {
                let cont: f64 = (0..spec.n_states())
                    .map(|z| spec.p(x, a, z) * vp.v_state[z])
                    .sum();
                let res =
                    vp.v_state_action[(x, a)] - spec.reward(x, a) - spec.gamma() * cont;
                worst = worst.max(res.abs());
            }
        }
    }
    result(
        "bellman-residual",
        worst <= 1e-10 && range_ok,
        format!("worst Bellman residual {worst:.3e} (tol 1e-10), values in range: {range_ok}"),
    )
}

fn prop_konda_stationarity() -> PropertyResult {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let spec = random_spec(seed);
        let f = softmax_policy(&random_theta(&spec, seed + 7));
        let k = joint_kernel(&spec, &f, KernelKind::RestartWithF).expect("kernel builds");
        let pi = stationary_distribution(&k).expect("stationary solve");
        let vm = visiting_measures(&spec, &f).expect("visiting solve");
        for (xi, &p) in pi.iter().enumerate() {
            let (x, a) = vm.sigma_normalized.split_xi(xi);
            worst = worst.max((p - vm.sigma_normalized[(x, a)]).abs());
        }
    }
    result(
        "konda-stationarity",
        worst <= 1e-8,
        format!(
            "worst |pi - sigma_normalized| = {worst:.3e} over 10 random pairs (tol 1e-8)"
        ),
    )
}

fn fd_tolerance_ok(analytic: f64, fd: f64) -> bool {
    (analytic - fd).abs() <= 1e-6 * analytic.abs().max(fd.abs()) + 1e-9
}

fn prop_loggrad_fd() -> PropertyResult {
    let spec = fixtures::chain();
    let theta = random_theta(&spec, 42);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for x in 0..2 {
        for a in 0..2 {
            let analytic = log_policy_gradient(&theta, x, a).unwrap();
            for x2 in 0..2 {
                for a2 in 0..2 {
                    let mut up = theta.table().clone();
                    up[(x2, a2)] += eps;
                    let mut dn = theta.table().clone();
                    dn[(x2, a2)] -= eps;
                    let fu = softmax_policy(&ThetaTable::new(up).unwrap());
                    let fd_ = softmax_policy(&ThetaTable::new(dn).unwrap());
                    let fd = (fu[(x, a)].ln() - fd_[(x, a)].ln()) / (2.0 * eps);
                    let an = analytic[(x2, a2)];
                    worst = worst.max((an - fd).abs());
                    if !fd_tolerance_ok(an, fd) {
                        ok = false;
                    }
                }
            }
        }
    }
    result(
        "loggrad-fd",
        ok,
        format!("worst |analytic − central FD| = {worst:.3e} (1e-6 rel + 1e-9 abs)"),
    )
}

fn prop_pg_fd() -> PropertyResult {
    let eps = 1e-5;
    let mut checked = 0;
    let mut ok = true;
    let mut worst_rel = 0.0f64;
    for seed in 0..20u64 {
        let spec = random_spec(seed);
        let theta = random_theta(&spec, seed + 1000);
        let grad = policy_gradient(&spec, &theta).expect("gradient");
        for x in 0..spec.n_states() {
            for a in 0..spec.n_actions() {
                let mut up = theta.table().clone();
                up[(x, a)] += eps;
                let mut dn = theta.table().clone();
                dn[(x, a)] -= eps;
                let ju = objective(&spec, &softmax_policy(&ThetaTable::new(up).unwrap()))
                    .expect("objective");
                let jd = objective(&spec, &softmax_policy(&ThetaTable::new(dn).unwrap()))
                    .expect("objective");
                let fd = (ju - jd) / (2.0 * eps);
                let an = grad[(x, a)];
                if !fd_tolerance_ok(an, fd) {
                    ok = false;
                }
                let scale = an.abs().max(fd.abs()).max(1e-12);
                worst_rel = worst_rel.max((an - fd).abs() / scale);
                checked += 1;
            }
        }
    }
    result(
        "pg-fd",
        ok,
        format!(
            "{checked} coordinates over 20 random (spec, theta); worst relative gap {worst_rel:.3e}"
        ),
    )
}

fn prop_poisson_residual() -> PropertyResult {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for seed in 0..6 {
        let spec = random_spec(seed);
        let f = softmax_policy(&random_theta(&spec, seed + 3));
        for kind in [KernelKind::OriginalWithG, KernelKind::RestartWithF] {
            // Original kernels need exploration for guaranteed ergodicity.
            let policy = if matches!(kind, KernelKind::OriginalWithG) {
                crate::policy::exploration_policy(&f, 0.2).unwrap()
            } else {
                f.clone()
            };
            let k = joint_kernel(&spec, &policy, kind).expect("kernel builds");
            let pi = stationary_distribution(&k).expect("stationary solve");
            for xi in 0..k.n() {
                match poisson_solution(&k, &pi, xi) {
                    Ok(nu) => {
                        let k_nu = k.apply(&nu);
                        for i in 0..k.n() {
                            let rhs = (if i == xi { 1.0 } else { 0.0 }) - pi[xi];
                            worst = worst.max((nu[i] - k_nu[i] - rhs).abs());
                        }
                    }
                    Err(e) => {
                        ok = false;
                        detail = format!("seed {seed} xi {xi}: {e}");
                    }
                }
            }
        }
    }
    if ok {
        detail = format!("worst Poisson residual {worst:.3e} (tol 1e-10)");
    }
    result("poisson-residual", ok && worst <= 1e-10, detail)
}

fn prop_perf_diff() -> PropertyResult {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let spec = random_spec(seed);
        let f = softmax_policy(&random_theta(&spec, seed + 11));
        let f2 = softmax_policy(&random_theta(&spec, seed + 23));
        for x0 in 0..spec.n_states() {
            let pd = performance_difference(&spec, &f, &f2, x0).expect("perf diff");
            worst = worst.max((pd.lhs - pd.rhs).abs());
        }
    }
    result(
        "perf-diff",
        worst <= 1e-8,
        format!("worst |lhs − rhs| = {worst:.3e} over 10 random pairs (tol 1e-8)"),
    )
}

fn prop_lojasiewicz() -> PropertyResult {
    let mut checked = 0;
    let mut ok = true;
    let mut detail = String::new();
    for (fixture_name, spec) in [
        ("chainmdp", fixtures::chain()),
        ("chainmdp-gamma05", fixtures::chain_with_gamma(0.5)),
    ] {
        let opt = optimal_policy(&spec).expect("optimal policy");
        for i in 0..100u64 {
            let theta = random_theta(&spec, 9000 + i);
            let rep = lojasiewicz_bounds(&spec, &theta, &opt.f_star).expect("bounds");
            checked += 1;
            if rep.grad_norm + 1e-12 < rep.rhs_unique
                || rep.grad_norm + 1e-12 < rep.rhs_general
            {
                ok = false;
                detail = format!(
                    "{fixture_name} draw {i}: grad {:.3e} < rhs ({:.3e}, {:.3e})",
                    rep.grad_norm, rep.rhs_unique, rep.rhs_general
                );
            }
        }
    }
    if ok {
        detail = format!("{checked}/{checked} gradient lower bounds hold");
    }
    result("lojasiewicz", ok, detail)
}

fn prop_critic_increment_bounds() -> PropertyResult {
    let spec = fixtures::chain();
    // 10⁵ steps: N = 5e4, T = 2.
    let config = AcConfig::from_zero(&spec, 50_000, 2.0, 1.0, 12345);
    match run_with_bound_checks(&spec, &config) {
        Ok(rep) => result(
            "critic-increment-bounds",
            rep.ok,
            format!(
                "{} steps; worst critic slack {:.3e}, actor slack {:.3e}, local={}, \
                 sup Q {:.4} <= bound {:.4}",
                rep.steps,
                rep.max_critic_violation,
                rep.max_actor_violation,
                rep.updates_local,
                rep.q_sup_max,
                rep.q_sup_bound
            ),
        ),
        Err(e) => result("critic-increment-bounds", false, e.to_string()),
    }
}

fn prop_ode_critic_box() -> PropertyResult {
    let spec = fixtures::chain();
    let box_bound = 2.0 / (1.0 - spec.gamma());
    let opts = OdeOptions::new(
        1.0,
        0.05,
        50.0,
        crate::numeric::lin_spaced(0.0, 50.0, 26),
    );
    match integrate(
        &spec,
        &ThetaTable::zeros(2, 2),
        &Table::zeros(2, 2),
        &opts,
    ) {
        Ok(traj) => {
            let worst = traj
                .points
                .iter()
                .map(|p| p.q.sup_norm())
                .fold(0.0f64, f64::max);
            result(
                "ode-critic-box",
                worst <= box_bound,
                format!("sup |Q̄| along trajectory = {worst:.4} vs 2/(1−γ) = {box_bound:.4}"),
            )
        }
        Err(e) => result("ode-critic-box", false, e.to_string()),
    }
}

fn prop_mixing_geometric() -> PropertyResult {
    let spec = fixtures::chain();
    // A tilted policy; the exactly uniform one mixes in two steps and
    // leaves nothing to fit.
    let f = PolicyTable::new(
        Table::from_rows(&[vec![0.8, 0.2], vec![0.8, 0.2]]).unwrap(),
    )
    .unwrap();
    let k = joint_kernel(&spec, &f, KernelKind::OriginalWithG).expect("kernel builds");
    match crate::solvers::mixing_profile(&k, 50) {
        Ok(profile) => match profile.fit {
            Some(fit) => result(
                "mixing-geometric",
                fit.r_squared >= 0.99 && fit.rho > 0.0 && fit.rho < 1.0,
                format!(
                    "rho = {:.4}, R² = {:.6}, window n ∈ [{}, {}], min pi = {:.4e}",
                    fit.rho, fit.r_squared, fit.window.0, fit.window.1, profile.min_stationary
                ),
            ),
            None => result("mixing-geometric", false, "no fit window".into()),
        },
        Err(e) => result("mixing-geometric", false, e.to_string()),
    }
}
