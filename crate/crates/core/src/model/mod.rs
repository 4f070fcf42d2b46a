//! Finite two-player game instances, stationary strategies and the
//! assumption diagnostics that certify an instance for the solvers.

mod arat;
mod diagnostics;
pub mod fixtures;
mod generate;
mod strategy;

pub use arat::{arat_violations, assemble_from_arat, AratStructure, AratViolations};
pub use diagnostics::{
    compute_delta, compute_kappa, validate, validate_with, AssumptionCheck, ModelDiagnostics,
    ValidationOptions, DEFAULT_MIN_PROB,
};
pub use generate::{random_instance, RandomSpec};
pub use strategy::StationaryStrategy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance applied when an instance is constructed or loaded.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }
}

impl TryFrom<u8> for Player {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Player::One),
            2 => Ok(Player::Two),
            other => Err(format!("player must be 1 or 2, got {other}")),
        }
    }
}

impl From<Player> for u8 {
    fn from(p: Player) -> u8 {
        p.index() as u8 + 1
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub states: usize,
    pub actions_a: usize,
    pub actions_b: usize,
}

impl Dims {
    pub fn new(states: usize, actions_a: usize, actions_b: usize) -> Self {
        Self {
            states,
            actions_a,
            actions_b,
        }
    }

    pub fn actions(&self, player: Player) -> usize {
        match player {
            Player::One => self.actions_a,
            Player::Two => self.actions_b,
        }
    }

    fn n_rows(&self) -> usize {
        self.states * self.actions_a * self.actions_b
    }
}

/// A finite two-player stochastic game with risk-sensitive costs.
///
/// Tables are stored flat: the transition tensor in `[x][a][b][y]` order and
/// the cost tables in `[x][a][b]` order. Instances are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    dims: Dims,
    transition: Vec<f64>,
    cost1: Vec<f64>,
    cost2: Vec<f64>,
    theta: f64,
    anchor_state: usize,
    arat: Option<AratStructure>,
    min_transition: f64,
}

impl GameInstance {
    /// Builds an instance from flat tables, checking dimensions, finiteness,
    /// nonnegativity and row sums (within [`ROW_SUM_TOL`]).
    ///
    /// Zero transition entries are accepted here; [`validate`] reports them.
    pub fn new(
        dims: Dims,
        transition: Vec<f64>,
        cost1: Vec<f64>,
        cost2: Vec<f64>,
        theta: f64,
        anchor_state: usize,
    ) -> Result<Self> {
        if dims.states == 0 || dims.actions_a == 0 || dims.actions_b == 0 {
            return Err(Error::Dimension(format!(
                "states and action sets must be non-empty, got {}x{}x{}",
                dims.states, dims.actions_a, dims.actions_b
            )));
        }
        let rows = dims.n_rows();
        if transition.len() != rows * dims.states {
            return Err(Error::Dimension(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                rows * dims.states
            )));
        }
        for (name, table) in [("cost1", &cost1), ("cost2", &cost2)] {
            if table.len() != rows {
                return Err(Error::Dimension(format!(
                    "{name} has {} entries, expected {rows}",
                    table.len()
                )));
            }
            if let Some(v) = table.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidEntry {
                    table: name,
                    detail: format!("costs must be finite and nonnegative, found {v}"),
                });
            }
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if anchor_state >= dims.states {
            return Err(Error::InvalidParameter(format!(
                "anchor_state {anchor_state} out of range for {} states",
                dims.states
            )));
        }
        let mut min_transition = f64::INFINITY;
        for (r, row) in transition.chunks(dims.states).enumerate() {
            let (x, a, b) = unflatten(&dims, r);
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidEntry {
                    table: "transition",
                    detail: format!("entry {v} in row (x={x}, a={a}, b={b})"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSum { x, a, b, sum });
            }
            min_transition = row.iter().copied().fold(min_transition, f64::min);
        }
        Ok(Self {
            dims,
            transition,
            cost1,
            cost2,
            theta,
            anchor_state,
            arat: None,
            min_transition,
        })
    }

    /// Builds an instance from nested `[x][a][b][y]` and `[x][a][b]` tables.
    pub fn from_nested(
        transition: &[Vec<Vec<Vec<f64>>>],
        cost1: &[Vec<Vec<f64>>],
        cost2: &[Vec<Vec<f64>>],
        theta: f64,
        anchor_state: usize,
    ) -> Result<Self> {
        let states = transition.len();
        let actions_a = transition.first().map_or(0, Vec::len);
        let actions_b = transition
            .first()
            .and_then(|t| t.first())
            .map_or(0, Vec::len);
        let dims = Dims::new(states, actions_a, actions_b);
        let flat_t = flatten4(transition, &dims, "transition")?;
        let flat_c1 = flatten3(cost1, &dims, "cost1")?;
        let flat_c2 = flatten3(cost2, &dims, "cost2")?;
        Self::new(dims, flat_t, flat_c1, flat_c2, theta, anchor_state)
    }

    /// Attaches an ARAT decomposition. Only its shape is checked here;
    /// consistency with the full tables is a validation concern.
    pub fn with_arat(mut self, arat: AratStructure) -> Result<Self> {
        arat.check_shape(&self.dims)?;
        self.arat = Some(arat);
        Ok(self)
    }

    pub fn without_arat(mut self) -> Self {
        self.arat = None;
        self
    }

    /// Same tables with a different risk parameter.
    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn n_states(&self) -> usize {
        self.dims.states
    }

    pub fn n_actions(&self, player: Player) -> usize {
        self.dims.actions(player)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn anchor_state(&self) -> usize {
        self.anchor_state
    }

    pub fn arat(&self) -> Option<&AratStructure> {
        self.arat.as_ref()
    }

    #[inline]
    fn row_index(&self, x: usize, a: usize, b: usize) -> usize {
        (x * self.dims.actions_a + a) * self.dims.actions_b + b
    }

    /// Next-state distribution `P(.|x,a,b)`.
    #[inline]
    pub fn transition_row(&self, x: usize, a: usize, b: usize) -> &[f64] {
        let n = self.dims.states;
        let r = self.row_index(x, a, b);
        &self.transition[r * n..(r + 1) * n]
    }

    #[inline]
    pub fn cost(&self, player: Player, x: usize, a: usize, b: usize) -> f64 {
        let r = self.row_index(x, a, b);
        match player {
            Player::One => self.cost1[r],
            Player::Two => self.cost2[r],
        }
    }

    pub fn transition_flat(&self) -> &[f64] {
        &self.transition
    }

    pub fn cost_flat(&self, player: Player) -> &[f64] {
        match player {
            Player::One => &self.cost1,
            Player::Two => &self.cost2,
        }
    }

    /// Largest cost entry over both players.
    pub fn c_bar(&self) -> f64 {
        self.cost1
            .iter()
            .chain(&self.cost2)
            .copied()
            .fold(0.0, f64::max)
    }

    /// Smallest transition probability in the tensor.
    pub fn min_transition(&self) -> f64 {
        self.min_transition
    }

    pub fn transition_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let d = self.dims;
        (0..d.states)
            .map(|x| {
                (0..d.actions_a)
                    .map(|a| {
                        (0..d.actions_b)
                            .map(|b| self.transition_row(x, a, b).to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn cost_nested(&self, player: Player) -> Vec<Vec<Vec<f64>>> {
        let d = self.dims;
        (0..d.states)
            .map(|x| {
                (0..d.actions_a)
                    .map(|a| {
                        (0..d.actions_b)
                            .map(|b| self.cost(player, x, a, b))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Iterates over every pure index tuple `(x, a, b)`.
    pub fn tuples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let d = self.dims;
        (0..d.n_rows()).map(move |r| unflatten(&d, r))
    }

    /// Fails with the density-ratio assumption when `kappa` is infinite.
    pub(crate) fn require_finite_kappa(&self) -> Result<()> {
        if self.min_transition > 0.0 || compute_kappa(self).is_finite() {
            return Ok(());
        }
        Err(diagnostics::kappa_witness(self))
    }
}

fn unflatten(d: &Dims, r: usize) -> (usize, usize, usize) {
    let b = r % d.actions_b;
    let a = (r / d.actions_b) % d.actions_a;
    let x = r / (d.actions_a * d.actions_b);
    (x, a, b)
}

fn flatten3(t: &[Vec<Vec<f64>>], d: &Dims, name: &str) -> Result<Vec<f64>> {
    if t.len() != d.states {
        return Err(Error::Dimension(format!(
            "{name} has {} states, expected {}",
            t.len(),
            d.states
        )));
    }
    let mut out = Vec::with_capacity(d.n_rows());
    for (x, per_a) in t.iter().enumerate() {
        if per_a.len() != d.actions_a {
            return Err(Error::Dimension(format!(
                "{name}[{x}] has {} actions, expected {}",
                per_a.len(),
                d.actions_a
            )));
        }
        for (a, per_b) in per_a.iter().enumerate() {
            if per_b.len() != d.actions_b {
                return Err(Error::Dimension(format!(
                    "{name}[{x}][{a}] has {} actions, expected {}",
                    per_b.len(),
                    d.actions_b
                )));
            }
            out.extend_from_slice(per_b);
        }
    }
    Ok(out)
}

fn flatten4(t: &[Vec<Vec<Vec<f64>>>], d: &Dims, name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(d.n_rows() * d.states);
    if t.len() != d.states {
        return Err(Error::Dimension(format!("{name} has wrong state count")));
    }
    for (x, per_a) in t.iter().enumerate() {
        if per_a.len() != d.actions_a {
            return Err(Error::Dimension(format!(
                "{name}[{x}] has {} actions, expected {}",
                per_a.len(),
                d.actions_a
            )));
        }
        for (a, per_b) in per_a.iter().enumerate() {
            if per_b.len() != d.actions_b {
                return Err(Error::Dimension(format!(
                    "{name}[{x}][{a}] has {} actions, expected {}",
                    per_b.len(),
                    d.actions_b
                )));
            }
            for (b, row) in per_b.iter().enumerate() {
                if row.len() != d.states {
                    return Err(Error::Dimension(format!(
                        "{name}[{x}][{a}][{b}] has {} next states, expected {}",
                        row.len(),
                        d.states
                    )));
                }
                out.extend_from_slice(row);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(p: [[f64; 2]; 2]) -> Result<GameInstance> {
        GameInstance::new(
            Dims::new(2, 1, 1),
            vec![p[0][0], p[0][1], p[1][0], p[1][1]],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            1.0,
            0,
        )
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = two_state([[0.5, 0.6], [0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::RowSum { x: 0, .. }), "{err}");
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = GameInstance::new(
            Dims::new(2, 1, 1),
            vec![1.0; 3],
            vec![0.0; 2],
            vec![0.0; 2],
            1.0,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = GameInstance::from_nested(
            &[vec![vec![vec![1.0]]], vec![vec![vec![1.0]]]],
            &[vec![vec![0.0]]],
            &[vec![vec![0.0]], vec![vec![0.0]]],
            1.0,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn rejects_negative_cost_and_bad_theta() {
        let e = GameInstance::new(Dims::new(1, 1, 1), vec![1.0], vec![-0.1], vec![0.0], 1.0, 0);
        assert!(matches!(e, Err(Error::InvalidEntry { .. })));
        let e = GameInstance::new(Dims::new(1, 1, 1), vec![1.0], vec![0.1], vec![0.0], 0.0, 0);
        assert!(matches!(e, Err(Error::InvalidParameter(_))));
        let e = GameInstance::new(Dims::new(1, 1, 1), vec![1.0], vec![0.1], vec![0.0], 1.0, 1);
        assert!(matches!(e, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_entries_are_loadable_but_flagged() {
        let g = two_state([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.min_transition(), 0.0);
        assert!(g.require_finite_kappa().is_err());
    }

    #[test]
    fn nested_round_trip() {
        let g = fixtures::g2();
        let again = GameInstance::from_nested(
            &g.transition_nested(),
            &g.cost_nested(Player::One),
            &g.cost_nested(Player::Two),
            g.theta(),
            g.anchor_state(),
        )
        .unwrap();
        assert_eq!(g.without_arat(), again);
    }

    #[test]
    fn tuple_order_matches_layout() {
        let g = fixtures::g2();
        let tuples: Vec<_> = g.tuples().collect();
        assert_eq!(tuples.len(), 8);
        assert_eq!(tuples[0], (0, 0, 0));
        assert_eq!(tuples[1], (0, 0, 1));
        assert_eq!(tuples[2], (0, 1, 0));
        assert_eq!(tuples[7], (1, 1, 1));
    }
}
