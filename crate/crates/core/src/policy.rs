//! Tabular softmax policies and exploration mixing.
//!
//! The actor is parametrized by a free table θ(x,a) through the softmax
//!
//!   f_θ(x,a) = exp(θ(x,a)) / Σ_{a'} exp(θ(x,a')),
//!
//! and data-collecting actions mix in uniform exploration with weight η:
//!
//!   g(x,a) = η/d_A + (1−η)·f(x,a).
//!
//! The log-policy score has the closed form
//! ∂_{x'',a''} log f_θ(x,a) = 1{x''=x}·(1{a''=a} − f_θ(x,a'')).

use crate::error::{Error, Result};
use crate::table::Table;
use serde::{Deserialize, Serialize};
use std::ops::Index;

/// Row-sum tolerance for a valid policy table.
pub const POLICY_ROW_TOL: f64 = 1e-12;

/// Actor parameters θ(x,a); all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Table", into = "Table")]
pub struct ThetaTable(Table);

impl ThetaTable {
    pub fn new(table: Table) -> Result<Self> {
        if !table.all_finite() {
            return Err(Error::invalid_argument("non-finite theta entry"));
        }
        Ok(ThetaTable(table))
    }

    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        ThetaTable(Table::zeros(n_states, n_actions))
    }

    pub fn table(&self) -> &Table {
        &self.0
    }

    pub fn into_table(self) -> Table {
        self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.0.n_actions()
    }
}

impl Index<(usize, usize)> for ThetaTable {
    type Output = f64;
    fn index(&self, i: (usize, usize)) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Table> for ThetaTable {
    type Error = String;
    fn try_from(t: Table) -> std::result::Result<Self, String> {
        ThetaTable::new(t).map_err(|e| e.to_string())
    }
}

impl From<ThetaTable> for Table {
    fn from(t: ThetaTable) -> Table {
        t.0
    }
}

/// A table of per-state action distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Table", into = "Table")]
pub struct PolicyTable(Table);

impl PolicyTable {
    /// Validates that each row is a probability vector within
    /// [`POLICY_ROW_TOL`].
    pub fn new(table: Table) -> Result<Self> {
        for x in 0..table.n_states() {
            let row = table.row(x);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > POLICY_ROW_TOL {
                return Err(Error::invalid_argument(format!(
                    "policy row {x} sums to {sum}"
                )));
            }
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid_argument(format!(
                    "policy row {x} has a negative entry"
                )));
            }
        }
        Ok(PolicyTable(table))
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        PolicyTable(Table::constant(
            n_states,
            n_actions,
            1.0 / n_actions as f64,
        ))
    }

    /// Deterministic policy taking `actions[x]` in state x.
    pub fn one_hot(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut t = Table::zeros(actions.len(), n_actions);
        for (x, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::invalid_argument(format!(
                    "action {a} out of range in state {x}"
                )));
            }
            t[(x, a)] = 1.0;
        }
        Ok(PolicyTable(t))
    }

    pub fn table(&self) -> &Table {
        &self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.0.n_actions()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.0.row(x)
    }

    /// True when every row is supported on a single action.
    pub fn is_deterministic(&self) -> bool {
        (0..self.n_states()).all(|x| self.row(x).iter().filter(|&&v| v > 0.0).count() == 1)
    }

    /// The argmax action per state (first index on ties).
    pub fn greedy_actions(&self) -> Vec<usize> {
        (0..self.n_states())
            .map(|x| {
                self.row(x)
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                    .map(|(i, _)| i)
                    .unwrap()
            })
            .collect()
    }
}

impl Index<(usize, usize)> for PolicyTable {
    type Output = f64;
    fn index(&self, i: (usize, usize)) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Table> for PolicyTable {
    type Error = String;
    fn try_from(t: Table) -> std::result::Result<Self, String> {
        PolicyTable::new(t).map_err(|e| e.to_string())
    }
}

impl From<PolicyTable> for Table {
    fn from(t: PolicyTable) -> Table {
        t.0
    }
}

/// Softmax of θ with per-row max subtraction, safe for |θ| up to ~700.
pub fn softmax_policy(theta: &ThetaTable) -> PolicyTable {
    let t = theta.table();
    let mut out = Table::zeros(t.n_states(), t.n_actions());
    for x in 0..t.n_states() {
        let row = t.row(x);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let dst = out.row_mut(x);
        let mut sum = 0.0;
        for (a, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            dst[a] = e;
            sum += e;
        }
        for v in dst.iter_mut() {
            *v /= sum;
        }
    }
    PolicyTable(out)
}

/// Uniform-mixture exploration policy g = η/d_A + (1−η)·f.
///
/// η = 1 is accepted (it arises at step 0 of the default schedule and still
/// yields a valid distribution: g is exactly uniform); values outside [0,1]
/// error.
pub fn exploration_policy(f: &PolicyTable, eta: f64) -> Result<PolicyTable> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid_argument(format!(
            "exploration rate {eta} outside [0,1]"
        )));
    }
    let base = eta / f.n_actions() as f64;
    Ok(PolicyTable(f.table().map(|v| base + (1.0 - eta) * v)))
}

/// The score table ∇_θ log f_θ(x,a): entry (x'',a'') is
/// 1{x''=x}·(1{a''=a} − f_θ(x,a'')); only row x is nonzero.
pub fn log_policy_gradient(theta: &ThetaTable, x: usize, a: usize) -> Result<Table> {
    if x >= theta.n_states() || a >= theta.n_actions() {
        return Err(Error::invalid_argument(format!(
            "state-action ({x},{a}) out of range for {}x{} table",
            theta.n_states(),
            theta.n_actions()
        )));
    }
    let f = softmax_policy(theta);
    let mut out = Table::zeros(theta.n_states(), theta.n_actions());
    let dst = out.row_mut(x);
    for (a2, v) in dst.iter_mut().enumerate() {
        *v = if a2 == a { 1.0 } else { 0.0 } - f[(x, a2)];
    }
    Ok(out)
}
