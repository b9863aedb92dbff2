//! Dense state×action tables of reals.
//!
//! A [`Table`] is the common storage for actor parameters θ(x,a), critic
//! estimates Q(x,a), policies, advantages, and gradients. Flattened
//! state-action indices ξ are row-major: ξ = x·d_A + a.

use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// A dense `n_states × n_actions` grid of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Table {
    n_states: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, 0.0)
    }

    pub fn constant(n_states: usize, n_actions: usize, value: f64) -> Self {
        assert!(n_states > 0 && n_actions > 0, "table must be non-empty");
        Table {
            n_states,
            n_actions,
            data: vec![value; n_states * n_actions],
        }
    }

    /// Builds a table from per-state rows; rows must be equally long.
    pub fn from_rows(rows: &[Vec<f64>]) -> crate::Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(crate::Error::dimension_mismatch("empty table"));
        }
        let n_actions = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * n_actions);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n_actions {
                return Err(crate::Error::dimension_mismatch(format!(
                    "row {x} has length {} but row 0 has length {n_actions}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Table {
            n_states: rows.len(),
            n_actions,
            data,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of state-action pairs.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Table) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    /// Flattened state-action index ξ = x·d_A + a.
    pub fn xi(&self, x: usize, a: usize) -> usize {
        debug_assert!(x < self.n_states && a < self.n_actions);
        x * self.n_actions + a
    }

    /// Inverse of [`Table::xi`].
    pub fn split_xi(&self, xi: usize) -> (usize, usize) {
        (xi / self.n_actions, xi % self.n_actions)
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let start = x * self.n_actions;
        &self.data[start..start + self.n_actions]
    }

    pub fn row_mut(&mut self, x: usize) -> &mut [f64] {
        let start = x * self.n_actions;
        &mut self.data[start..start + self.n_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states).map(|x| self.row(x).to_vec()).collect()
    }

    /// Iterates `((x, a), value)` in ξ order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let d = self.n_actions;
        self.data
            .iter()
            .enumerate()
            .map(move |(xi, &v)| ((xi / d, xi % d), v))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Table {
        Table {
            n_states: self.n_states,
            n_actions: self.n_actions,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self += c * other`, shapes must agree.
    pub fn add_scaled(&mut self, other: &Table, c: f64) {
        assert!(self.same_shape(other), "shape mismatch");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += c * o;
        }
    }

    pub fn sub(&self, other: &Table) -> Table {
        assert!(self.same_shape(other), "shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Table {
            n_states: self.n_states,
            n_actions: self.n_actions,
            data,
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Builds a table from a flat ξ-ordered slice.
    pub fn from_flat(n_states: usize, n_actions: usize, data: Vec<f64>) -> crate::Result<Self> {
        if data.len() != n_states * n_actions {
            return Err(crate::Error::dimension_mismatch(format!(
                "flat length {} != {n_states}x{n_actions}",
                data.len()
            )));
        }
        Ok(Table {
            n_states,
            n_actions,
            data,
        })
    }
}

impl Index<(usize, usize)> for Table {
    type Output = f64;
    fn index(&self, (x, a): (usize, usize)) -> &f64 {
        &self.data[x * self.n_actions + a]
    }
}

impl IndexMut<(usize, usize)> for Table {
    fn index_mut(&mut self, (x, a): (usize, usize)) -> &mut f64 {
        &mut self.data[x * self.n_actions + a]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Table {
    type Error = String;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        Table::from_rows(&rows).map_err(|e| e.to_string())
    }
}

impl From<Table> for Vec<Vec<f64>> {
    fn from(t: Table) -> Self {
        t.to_rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_round_trip() {
        let t = Table::zeros(3, 4);
        for x in 0..3 {
            for a in 0..4 {
                assert_eq!(t.split_xi(t.xi(x, a)), (x, a));
            }
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Table::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn norms() {
        let t = Table::from_rows(&[vec![3.0, -4.0]]).unwrap();
        assert_eq!(t.sup_norm(), 4.0);
        assert_eq!(t.l1_norm(), 7.0);
        assert_eq!(t.l2_norm(), 5.0);
    }

    #[test]
    fn serde_rows_round_trip() {
        let t = Table::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        let back: Table = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
