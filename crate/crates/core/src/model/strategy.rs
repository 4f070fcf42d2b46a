use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{normalize, simplex_violation, SIMPLEX_TOL};

/// A stationary (Markov, time-invariant) randomized strategy: one
/// probability vector over the owning player's actions per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StationaryStrategy {
    rows: Vec<Vec<f64>>,
}

impl StationaryStrategy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dimension("strategy has no states".into()));
        }
        let width = rows[0].len();
        for (state, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension(format!(
                    "strategy row {state} has {} actions, expected {width}",
                    row.len()
                )));
            }
            if let Some(detail) = simplex_violation(row, SIMPLEX_TOL) {
                return Err(Error::NotSimplex { state, detail });
            }
        }
        Ok(Self { rows })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            rows: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }

    /// Deterministic strategy playing `selector[x]` at state `x`.
    pub fn pure(n_actions: usize, selector: &[usize]) -> Self {
        let rows = selector
            .iter()
            .map(|&s| {
                let mut row = vec![0.0; n_actions];
                row[s] = 1.0;
                row
            })
            .collect();
        Self { rows }
    }

    /// Convex combination `(1 - weight) * self + weight * other`, renormalized
    /// so that repeated mixing does not drift off the simplex.
    pub fn mix(&self, other: &StationaryStrategy, weight: f64) -> StationaryStrategy {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(p, q)| {
                let mut r: Vec<f64> = p
                    .iter()
                    .zip(q)
                    .map(|(p, q)| (1.0 - weight) * p + weight * q)
                    .collect();
                normalize(&mut r);
                r
            })
            .collect();
        StationaryStrategy { rows }
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_actions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Actions played with positive probability at state `x`.
    pub fn support(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[x]
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
    }

    /// Sup-norm distance between two strategies of equal shape.
    pub fn distance(&self, other: &StationaryStrategy) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_shape(&self, n_states: usize, n_actions: usize, who: &str) -> Result<()> {
        if self.n_states() != n_states || self.n_actions() != n_actions {
            return Err(Error::Dimension(format!(
                "{who} strategy is {}x{}, instance needs {n_states}x{n_actions}",
                self.n_states(),
                self.n_actions()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for StationaryStrategy {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        StationaryStrategy::new(rows)
    }
}

impl From<StationaryStrategy> for Vec<Vec<f64>> {
    fn from(s: StationaryStrategy) -> Self {
        s.rows
    }
}
