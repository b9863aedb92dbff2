//! Finite MDPs and their state-action Markov kernels.
//!
//! An [`MdpSpec`] is the tuple (X, A, p, μ, r, γ) with a transition tensor
//! `p[x][a][x']`, initial distribution μ, rewards r(x,a) ∈ [0,1], and
//! discount γ ∈ (0,1). Two derived chains matter downstream:
//!
//! * the original chain under an exploration policy g, with joint kernel
//!   `P((x,a); (x',a')) = p(x'|x,a)·g(x',a')`, and
//! * the restart chain under a policy f, which follows p with probability γ
//!   and re-draws the state from μ otherwise:
//!   `p̃(x'|x,a) = γ·p(x'|x,a) + (1−γ)·μ(x')`, joint kernel
//!   `Π((x,a); (x',a')) = p̃(x'|x,a)·f(x',a')`.
//!
//! State-action pairs are flattened row-major, ξ = x·d_A + a, everywhere.

use crate::error::{Error, Result};
use crate::numeric;
use crate::policy::PolicyTable;
use crate::table::Table;
use petgraph::graphmap::DiGraphMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

/// Tolerance for simplex constraints (row sums, μ sum).
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A finite MDP.
///
/// Invariants (checked by [`MdpSpec::validate`]):
/// * every transition row `p[x][a][·]` is a probability vector,
/// * μ is a probability vector,
/// * rewards lie in [0,1],
/// * 0 < γ < 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpSpecFile", into = "MdpSpecFile")]
pub struct MdpSpec {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    mu: Vec<f64>,
    r: Table,
    /// Flattened transitions, index ((x·d_A + a)·d_X + x').
    p: Vec<f64>,
}

/// On-disk JSON shape: `{"n_states","n_actions","gamma","mu","r","p"}` with
/// `p` indexed `[x][a][x']`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpSpecFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub mu: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub p: Vec<Vec<Vec<f64>>>,
}

impl MdpSpec {
    /// Builds and fully validates a spec from nested rows.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        mu: Vec<f64>,
        r: Vec<Vec<f64>>,
        p: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let spec = Self::from_parts(n_states, n_actions, gamma, mu, r, p)?;
        spec.ensure_valid()?;
        Ok(spec)
    }

    /// Shape-checks only; value constraints are left to [`MdpSpec::validate`].
    fn from_parts(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        mu: Vec<f64>,
        r: Vec<Vec<f64>>,
        p: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid_argument("n_states and n_actions must be >= 1"));
        }
        if mu.len() != n_states {
            return Err(Error::dimension_mismatch(format!(
                "mu has length {}, expected {n_states}",
                mu.len()
            )));
        }
        let r = Table::from_rows(&r)?;
        if r.n_states() != n_states || r.n_actions() != n_actions {
            return Err(Error::dimension_mismatch("reward table shape"));
        }
        if p.len() != n_states {
            return Err(Error::dimension_mismatch("p outer length"));
        }
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        for (x, per_action) in p.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(Error::dimension_mismatch(format!("p[{x}] length")));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::dimension_mismatch(format!("p[{x}][{a}] length")));
                }
                flat.extend_from_slice(row);
            }
        }
        Ok(MdpSpec {
            n_states,
            n_actions,
            gamma,
            mu,
            r: r.clone(),
            p: flat,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Size of the flattened state-action space.
    pub fn n_xi(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn rewards(&self) -> &Table {
        &self.r
    }

    pub fn reward(&self, x: usize, a: usize) -> f64 {
        self.r[(x, a)]
    }

    /// Transition probability p(x'|x,a).
    pub fn p(&self, x: usize, a: usize, x_next: usize) -> f64 {
        self.p[(x * self.n_actions + a) * self.n_states + x_next]
    }

    /// The row p(·|x,a).
    pub fn p_row(&self, x: usize, a: usize) -> &[f64] {
        let start = (x * self.n_actions + a) * self.n_states;
        &self.p[start..start + self.n_states]
    }

    /// Lists every invariant violation; empty report iff the spec is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for x in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.p_row(x, a);
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    violations.push(Violation {
                        what: format!("transition row ({x},{a}) sums to {sum}"),
                        magnitude: (sum - 1.0).abs(),
                    });
                }
                for (x2, &v) in row.iter().enumerate() {
                    if v < 0.0 {
                        violations.push(Violation {
                            what: format!("negative transition p({x2}|{x},{a}) = {v}"),
                            magnitude: -v,
                        });
                    }
                }
                let rv = self.r[(x, a)];
                if !(0.0..=1.0).contains(&rv) {
                    violations.push(Violation {
                        what: format!("reward out of [0,1] at ({x},{a}): {rv}"),
                        magnitude: if rv < 0.0 { -rv } else { rv - 1.0 },
                    });
                }
            }
        }
        let mu_sum: f64 = self.mu.iter().sum();
        if (mu_sum - 1.0).abs() > SIMPLEX_TOL {
            violations.push(Violation {
                what: format!("mu sums to {mu_sum}"),
                magnitude: (mu_sum - 1.0).abs(),
            });
        }
        for (x, &v) in self.mu.iter().enumerate() {
            if v < 0.0 {
                violations.push(Violation {
                    what: format!("negative mu({x}) = {v}"),
                    magnitude: -v,
                });
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            violations.push(Violation {
                what: format!("gamma out of (0,1): {}", self.gamma),
                magnitude: (self.gamma - 0.5).abs(),
            });
        }
        ValidationReport { violations }
    }

    /// Errors with the full violation list unless the spec is valid.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMdp(report))
        }
    }

    /// Renormalizes every stored distribution that is within [`SIMPLEX_TOL`]
    /// of the simplex, then re-validates. Survives round-trips through
    /// decimal text.
    pub fn renormalized(mut self) -> Result<Self> {
        for x in 0..self.n_states {
            for a in 0..self.n_actions {
                let start = (x * self.n_actions + a) * self.n_states;
                let row = &mut self.p[start..start + self.n_states];
                let sum: f64 = row.iter().sum();
                if sum > 0.0 && (sum - 1.0).abs() <= SIMPLEX_TOL {
                    for v in row.iter_mut() {
                        *v /= sum;
                    }
                }
            }
        }
        let mu_sum: f64 = self.mu.iter().sum();
        if mu_sum > 0.0 && (mu_sum - 1.0).abs() <= SIMPLEX_TOL {
            for v in &mut self.mu {
                *v /= mu_sum;
            }
        }
        self.ensure_valid()?;
        Ok(self)
    }

    /// Loads a spec from its JSON file format, applying the renormalization
    /// rule and full validation.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Parses the JSON file format, renormalizing and validating.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MdpSpecFile = serde_json::from_str(text)?;
        let spec = Self::from_parts(
            file.n_states,
            file.n_actions,
            file.gamma,
            file.mu,
            file.r,
            file.p,
        )?;
        spec.renormalized()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MdpSpecFile::from(self.clone()))
            .expect("spec serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization; stable content id for
    /// metadata sidecars.
    pub fn content_hash(&self) -> String {
        let compact = serde_json::to_string(&MdpSpecFile::from(self.clone()))
            .expect("spec serialization cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(compact.as_bytes());
        hex::encode(hasher.finalize())
    }

    /// The restart transition tensor p̃(x'|x,a) = γ·p(x'|x,a) + (1−γ)·μ(x'),
    /// same flattened layout as `p`.
    pub fn restart_kernel(&self) -> Result<Vec<f64>> {
        self.ensure_valid()?;
        let mut out = Vec::with_capacity(self.p.len());
        for x in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.p_row(x, a);
                for x2 in 0..self.n_states {
                    out.push(self.gamma * row[x2] + (1.0 - self.gamma) * self.mu[x2]);
                }
            }
        }
        Ok(out)
    }

    /// One row p̃(·|x,a) of the restart kernel, without materializing the
    /// whole tensor.
    pub fn restart_row(&self, x: usize, a: usize, out: &mut [f64]) {
        let row = self.p_row(x, a);
        for x2 in 0..self.n_states {
            out[x2] = self.gamma * row[x2] + (1.0 - self.gamma) * self.mu[x2];
        }
    }
}

impl TryFrom<MdpSpecFile> for MdpSpec {
    type Error = String;
    fn try_from(f: MdpSpecFile) -> std::result::Result<Self, String> {
        MdpSpec::from_parts(f.n_states, f.n_actions, f.gamma, f.mu, f.r, f.p)
            .map_err(|e| e.to_string())
    }
}

impl From<MdpSpec> for MdpSpecFile {
    fn from(s: MdpSpec) -> Self {
        let p = (0..s.n_states)
            .map(|x| {
                (0..s.n_actions)
                    .map(|a| s.p_row(x, a).to_vec())
                    .collect()
            })
            .collect();
        MdpSpecFile {
            n_states: s.n_states,
            n_actions: s.n_actions,
            gamma: s.gamma,
            mu: s.mu.clone(),
            r: s.r.to_rows(),
            p,
        }
    }
}

/// One invariant violation with its location and size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub what: String,
    pub magnitude: f64,
}

/// Result of [`MdpSpec::validate`]; empty iff all invariants hold.
/// Validation never fails — it reports.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "  - {} (magnitude {:.3e})", v.what, v.magnitude)?;
        }
        Ok(())
    }
}

/// Which joint-chain construction a kernel encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// Original transitions with an exploration policy:
    /// `P((x,a);(x',a')) = p(x'|x,a)·g(x',a')`.
    OriginalWithG,
    /// Restart transitions with a plain policy:
    /// `Π((x,a);(x',a')) = p̃(x'|x,a)·f(x',a')`.
    RestartWithF,
}

/// A row-stochastic kernel over flattened state-action pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateActionKernel {
    n_states: usize,
    n_actions: usize,
    kind: KernelKind,
    /// Dense rows, index ξ·d + ξ' with d = d_X·d_A.
    rows: Vec<f64>,
}

impl StateActionKernel {
    /// Wraps a dense matrix after checking row-stochasticity within 1e-9.
    pub fn from_rows(
        n_states: usize,
        n_actions: usize,
        kind: KernelKind,
        rows: Vec<f64>,
    ) -> Result<Self> {
        let d = n_states * n_actions;
        if rows.len() != d * d {
            return Err(Error::dimension_mismatch(format!(
                "kernel storage {} != {d}x{d}",
                rows.len()
            )));
        }
        for xi in 0..d {
            let row = &rows[xi * d..(xi + 1) * d];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::invalid_argument(format!(
                    "kernel row {xi} sums to {sum}"
                )));
            }
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid_argument(format!(
                    "kernel row {xi} has a negative entry"
                )));
            }
        }
        Ok(StateActionKernel {
            n_states,
            n_actions,
            kind,
            rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn entry(&self, xi: usize, xi2: usize) -> f64 {
        self.rows[xi * self.n() + xi2]
    }

    pub fn row(&self, xi: usize) -> &[f64] {
        let d = self.n();
        &self.rows[xi * d..(xi + 1) * d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    /// Right-multiplies a column vector: `(Kv)(ξ) = Σ_ξ' K(ξ,ξ')·v(ξ')`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.n();
        assert_eq!(v.len(), d);
        (0..d)
            .map(|xi| self.row(xi).iter().zip(v).map(|(k, x)| k * x).sum())
            .collect()
    }

    /// Left-multiplies a row vector: `(uᵀK)(ξ') = Σ_ξ u(ξ)·K(ξ,ξ')`.
    pub fn apply_left(&self, u: &[f64]) -> Vec<f64> {
        let d = self.n();
        assert_eq!(u.len(), d);
        let mut out = vec![0.0; d];
        for xi in 0..d {
            let w = u[xi];
            if w == 0.0 {
                continue;
            }
            for (xi2, k) in self.row(xi).iter().enumerate() {
                out[xi2] += w * k;
            }
        }
        out
    }
}

/// Joint state-action kernel for the requested construction.
///
/// `entry[(x,a)][(x',a')] = kernel(x'|x,a) · policy(x',a')` where `kernel`
/// is the original tensor p for [`KernelKind::OriginalWithG`] and the
/// restart tensor p̃ for [`KernelKind::RestartWithF`].
pub fn joint_kernel(
    spec: &MdpSpec,
    policy: &PolicyTable,
    kind: KernelKind,
) -> Result<StateActionKernel> {
    spec.ensure_valid()?;
    if policy.n_states() != spec.n_states || policy.n_actions() != spec.n_actions {
        return Err(Error::dimension_mismatch(format!(
            "policy is {}x{}, spec is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            spec.n_states,
            spec.n_actions
        )));
    }
    let d = spec.n_xi();
    let mut rows = vec![0.0; d * d];
    let mut state_row = vec![0.0; spec.n_states];
    for x in 0..spec.n_states {
        for a in 0..spec.n_actions {
            match kind {
                KernelKind::OriginalWithG => state_row.copy_from_slice(spec.p_row(x, a)),
                KernelKind::RestartWithF => spec.restart_row(x, a, &mut state_row),
            }
            let xi = x * spec.n_actions + a;
            for x2 in 0..spec.n_states {
                for a2 in 0..spec.n_actions {
                    let xi2 = x2 * spec.n_actions + a2;
                    rows[xi * d + xi2] = state_row[x2] * policy[(x2, a2)];
                }
            }
        }
    }
    StateActionKernel::from_rows(spec.n_states, spec.n_actions, kind, rows)
}

/// Irreducibility and periodicity of a kernel's positive-entry digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    pub aperiodic: bool,
    /// gcd of cycle lengths through node 0; 0 when node 0 lies on no cycle.
    pub period: usize,
    pub n_communicating_classes: usize,
}

impl ErgodicityReport {
    pub fn is_ergodic(&self) -> bool {
        self.irreducible && self.aperiodic
    }
}

/// Checks irreducibility via strong connectivity of the positive-entry
/// digraph and the period via the gcd of cycle lengths through node 0.
pub fn check_ergodicity(kernel: &StateActionKernel) -> ErgodicityReport {
    let d = kernel.n();
    let mut graph: DiGraphMap<usize, ()> = DiGraphMap::new();
    for xi in 0..d {
        graph.add_node(xi);
    }
    for xi in 0..d {
        for (xi2, &v) in kernel.row(xi).iter().enumerate() {
            if v > 0.0 {
                graph.add_edge(xi, xi2, ());
            }
        }
    }
    let sccs = petgraph::algo::kosaraju_scc(&graph);
    let irreducible = sccs.len() == 1;

    // Period of node 0's class: BFS levels, then gcd of (level[u]+1-level[v])
    // over in-class edges.
    let class: Vec<usize> = sccs
        .iter()
        .find(|c| c.contains(&0))
        .expect("node 0 is always present")
        .clone();
    let in_class = |n: usize| class.contains(&n);
    let mut level = vec![None::<i64>; d];
    level[0] = Some(0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for (xi2, &v) in kernel.row(u).iter().enumerate() {
            if v > 0.0 && in_class(xi2) && level[xi2].is_none() {
                level[xi2] = Some(lu + 1);
                queue.push_back(xi2);
            }
        }
    }
    let mut g: u64 = 0;
    for &u in &class {
        if let Some(lu) = level[u] {
            for (xi2, &v) in kernel.row(u).iter().enumerate() {
                if v > 0.0 && in_class(xi2) {
                    if let Some(lv) = level[xi2] {
                        g = numeric::gcd(g, (lu + 1 - lv).unsigned_abs());
                    }
                }
            }
        }
    }
    let period = g as usize;
    ErgodicityReport {
        irreducible,
        aperiodic: irreducible && period == 1,
        period,
        n_communicating_classes: sccs.len(),
    }
}

/// Randomly generated MDP, deterministic in `seed`.
///
/// Transition rows are flat simplex samples floored at `min_prob` and
/// renormalized; rewards are uniform in [0,1]; μ is uniform.
pub fn random_mdp(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    seed: u64,
    min_prob: f64,
) -> Result<MdpSpec> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::invalid_argument("n_states and n_actions must be >= 1"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid_argument(format!("gamma out of (0,1): {gamma}")));
    }
    if !(0.0..=1.0 / n_states as f64).contains(&min_prob) {
        return Err(Error::invalid_argument(format!(
            "min_prob {min_prob} infeasible for {n_states} states"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let mut per_action = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            // Exponential spacings give a flat Dirichlet(1,..,1) sample.
            let mut row: Vec<f64> = (0..n_states)
                .map(|_| -f64::ln(1.0 - rng.gen::<f64>()))
                .collect();
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v = (*v / sum).max(min_prob);
            }
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            per_action.push(row);
        }
        p.push(per_action);
    }
    let r: Vec<Vec<f64>> = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mu = vec![1.0 / n_states as f64; n_states];
    MdpSpec::new(n_states, n_actions, gamma, mu, r, p)
}

/// Canonical small MDPs used across tests and experiments.
pub mod fixtures {
    use super::*;

    /// Two states, two actions: action 0 stays with probability 0.9, action 1
    /// switches with probability 0.9; reward 1 in state 1, else 0; γ = 0.9;
    /// μ uniform. The smallest MDP with a nontrivial optimal policy and full
    /// ergodicity.
    pub fn chain() -> MdpSpec {
        chain_with_gamma(0.9)
    }

    /// The chain fixture with a different discount.
    pub fn chain_with_gamma(gamma: f64) -> MdpSpec {
        MdpSpec::new(
            2,
            2,
            gamma,
            vec![0.5, 0.5],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![
                vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                vec![vec![0.1, 0.9], vec![0.9, 0.1]],
            ],
        )
        .expect("chain fixture is valid")
    }

    /// One state, one action, reward 0.5, γ = 0.5.
    pub fn single_state() -> MdpSpec {
        MdpSpec::new(
            1,
            1,
            0.5,
            vec![1.0],
            vec![vec![0.5]],
            vec![vec![vec![1.0]]],
        )
        .expect("single-state fixture is valid")
    }

    /// The chain transitions with constant reward 0.5: every policy is
    /// optimal and all advantages vanish.
    pub fn constant_reward() -> MdpSpec {
        MdpSpec::new(
            2,
            2,
            0.9,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![
                vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                vec![vec![0.1, 0.9], vec![0.9, 0.1]],
            ],
        )
        .expect("constant-reward fixture is valid")
    }

    /// Looks a fixture up by CLI name.
    pub fn by_name(name: &str) -> Option<MdpSpec> {
        match name {
            "chainmdp" => Some(chain()),
            "chainmdp-gamma05" => Some(chain_with_gamma(0.5)),
            "single" => Some(single_state()),
            "constreward" => Some(constant_reward()),
            _ => None,
        }
    }

    /// Names accepted by [`by_name`].
    pub const NAMES: [&str; 4] = ["chainmdp", "chainmdp-gamma05", "single", "constreward"];
}
