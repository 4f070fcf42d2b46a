//! Perron-Frobenius oracle for the ergodic cost of a fixed stationary pair.
//!
//! Under a stationary pair the expected exponential cost over `n` steps is
//! `(Q^n 1)(x)` with `Q[x][y] = sum_{a,b} Phi(a|x) Psi(b|x) e^{theta c_i} P(y|x,a,b)`,
//! so the long-run growth rate is the log of the spectral radius of `Q`.
//! [`finite_horizon_growth`] computes the prelimit exactly and needs no
//! spectral theory, which makes the two routes independent checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GameInstance, Player, StationaryStrategy};
use crate::numeric::max_of;

/// Iteration cap for power iteration.
pub const POWER_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistedMatrix {
    pub player: Player,
    pub n: usize,
    /// State at which the Perron vector is normalized to one.
    pub anchor: usize,
    /// Row-major `n x n`.
    pub entries: Vec<f64>,
}

impl TwistedMatrix {
    /// Builds a matrix from rows; used for standalone oracle checks.
    pub fn from_rows(player: Player, anchor: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) || anchor >= n {
            return Err(Error::Dimension(
                "matrix must be square and non-empty".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("matrix must be nonnegative".into()));
        }
        Ok(Self {
            player,
            n,
            anchor,
            entries: rows.concat(),
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.n + y]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().zip(w).map(|(q, w)| q * w).sum())
            .collect()
    }
}

pub fn twisted_matrix(
    instance: &GameInstance,
    player: Player,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
) -> Result<TwistedMatrix> {
    let n = instance.n_states();
    phi.check_shape(n, instance.n_actions(Player::One), "Phi")?;
    psi.check_shape(n, instance.n_actions(Player::Two), "Psi")?;
    let theta = instance.theta();
    let mut entries = vec![0.0; n * n];
    for x in 0..n {
        let row = &mut entries[x * n..(x + 1) * n];
        for (a, pa) in phi.row(x).iter().enumerate() {
            for (b, pb) in psi.row(x).iter().enumerate() {
                let w = pa * pb;
                if w == 0.0 {
                    continue;
                }
                let w = w * (theta * instance.cost(player, x, a, b)).exp();
                for (q, p) in row.iter_mut().zip(instance.transition_row(x, a, b)) {
                    *q += w * p;
                }
            }
        }
    }
    Ok(TwistedMatrix {
        player,
        n,
        anchor: instance.anchor_state(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronResult {
    /// `ln r` for the spectral radius `r`.
    pub log_radius: f64,
    pub radius: f64,
    /// Positive right eigenvector with `w[anchor] = 1`.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration with max-normalization; the normalizing factor is the
/// eigenvalue estimate. Stops when both the estimate and the normalized
/// vector change by less than `tol` (relative / absolute).
pub fn perron_value(q: &TwistedMatrix, tol: f64) -> Result<PerronResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let mut w = vec![1.0; q.n];
    let mut lambda = f64::NAN;
    for k in 1..=POWER_MAX_ITER {
        let mut u = q.mul_vec(&w);
        let s = max_of(&u);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power iteration degenerated (scale {s})"
            )));
        }
        u.iter_mut().for_each(|v| *v /= s);
        let moved = u
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let settled = (s - lambda).abs() <= tol * s && moved <= tol;
        lambda = s;
        w = u;
        if settled {
            let pin = w[q.anchor];
            w.iter_mut().for_each(|v| *v /= pin);
            return Ok(PerronResult {
                log_radius: lambda.ln(),
                radius: lambda,
                eigenvector: w,
                iterations: k,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
        residual: f64::NAN,
    })
}

/// Default power-iteration tolerance.
pub const PERRON_TOL: f64 = 1e-12;

/// Risk-sensitive ergodic cost `J_i(Phi, Psi)`: the log spectral radius of
/// the twisted matrix. Independent of the start state for positive `Q`.
pub fn ergodic_cost(
    instance: &GameInstance,
    player: Player,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
) -> Result<f64> {
    let q = twisted_matrix(instance, player, phi, psi)?;
    Ok(perron_value(&q, PERRON_TOL)?.log_radius)
}

/// `(1/n) ln E_x[exp(theta sum_{t<n} c_i)]` for every start state `x`,
/// computed as `(1/n) ln (Q^n 1)(x)` with per-step rescaling.
pub fn finite_horizon_growth_all(
    instance: &GameInstance,
    player: Player,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    n: usize,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let q = twisted_matrix(instance, player, phi, psi)?;
    let mut u = vec![1.0; q.n];
    let mut log_scale = 0.0;
    for _ in 0..n {
        u = q.mul_vec(&u);
        let s = max_of(&u);
        u.iter_mut().for_each(|v| *v /= s);
        log_scale += s.ln();
    }
    Ok(u.iter().map(|v| (v.ln() + log_scale) / n as f64).collect())
}

pub fn finite_horizon_growth(
    instance: &GameInstance,
    player: Player,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    x: usize,
    n: usize,
) -> Result<f64> {
    if x >= instance.n_states() {
        return Err(Error::Dimension(format!("state {x} out of range")));
    }
    Ok(finite_horizon_growth_all(instance, player, phi, psi, n)?[x])
}
