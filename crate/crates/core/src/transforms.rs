//! Exponential-cost kernel transformations.
//!
//! For player `i` the twisted kernel is `e^{theta c_i(x,a,b)} P(y|x,a,b)`.
//! Mixing it over `(phi, psi)` and normalizing by its total mass (the
//! normalizer, always in `[1, e^{theta c_bar}]`) gives a probability kernel
//! `P_hat`, with log-normalizer `c_hat`. Sums of exponentials are formed in
//! log space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GameInstance, Player};
use crate::numeric::{log_sum_exp, max_of, simplex_violation, SIMPLEX_TOL};

/// Entrywise `e^{theta c_i} P`, stored in the instance's `[x][a][b][y]` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedKernel {
    pub player: Player,
    n_states: usize,
    actions_a: usize,
    actions_b: usize,
    table: Vec<f64>,
}

impl TwistedKernel {
    pub fn row(&self, x: usize, a: usize, b: usize) -> &[f64] {
        let r = (x * self.actions_a + a) * self.actions_b + b;
        &self.table[r * self.n_states..(r + 1) * self.n_states]
    }

    pub fn row_total(&self, x: usize, a: usize, b: usize) -> f64 {
        self.row(x, a, b).iter().sum()
    }
}

pub fn twist(instance: &GameInstance, player: Player) -> TwistedKernel {
    let d = instance.dims();
    let theta = instance.theta();
    let mut table = Vec::with_capacity(instance.transition_flat().len());
    for (x, a, b) in instance.tuples() {
        let weight = (theta * instance.cost(player, x, a, b)).exp();
        table.extend(instance.transition_row(x, a, b).iter().map(|p| weight * p));
    }
    TwistedKernel {
        player,
        n_states: d.states,
        actions_a: d.actions_a,
        actions_b: d.actions_b,
        table,
    }
}

/// Normalizer, log-normalizer and normalized kernel at one `(x, phi, psi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedEvaluation {
    pub x: usize,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub c_tilde: f64,
    pub c_hat: f64,
    pub p_hat: Vec<f64>,
}

pub(crate) fn check_mix(instance: &GameInstance, x: usize, phi: &[f64], psi: &[f64]) -> Result<()> {
    if x >= instance.n_states() {
        return Err(Error::Dimension(format!("state {x} out of range")));
    }
    if phi.len() != instance.n_actions(Player::One) || psi.len() != instance.n_actions(Player::Two)
    {
        return Err(Error::Dimension(format!(
            "mixes have lengths {}x{}, instance needs {}x{}",
            phi.len(),
            psi.len(),
            instance.n_actions(Player::One),
            instance.n_actions(Player::Two)
        )));
    }
    for p in [phi, psi] {
        if let Some(detail) = simplex_violation(p, SIMPLEX_TOL) {
            return Err(Error::NotSimplex { state: x, detail });
        }
    }
    Ok(())
}

/// Pure action pairs carrying positive weight under `(phi, psi)`, with the
/// log of that weight.
pub(crate) fn weighted_pairs<'a>(
    phi: &'a [f64],
    psi: &'a [f64],
) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
    phi.iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .flat_map(move |(a, pa)| {
            psi.iter()
                .enumerate()
                .filter(|(_, q)| **q > 0.0)
                .map(move |(b, pb)| (a, b, pa.ln() + pb.ln()))
        })
}

/// Log-normalizer `c_hat_i(x, phi, psi) = ln sum_{a,b} phi(a) psi(b) e^{theta c_i(x,a,b)}`.
pub fn log_normalizer(
    instance: &GameInstance,
    player: Player,
    x: usize,
    phi: &[f64],
    psi: &[f64],
) -> Result<f64> {
    check_mix(instance, x, phi, psi)?;
    let theta = instance.theta();
    Ok(log_sum_exp(weighted_pairs(phi, psi).map(|(a, b, lw)| {
        lw + theta * instance.cost(player, x, a, b)
    })))
}

/// Normalizer `c_tilde_i(x, phi, psi)`, the total mass of the mixed twisted kernel.
pub fn normalizer(
    instance: &GameInstance,
    player: Player,
    x: usize,
    phi: &[f64],
    psi: &[f64],
) -> Result<f64> {
    log_normalizer(instance, player, x, phi, psi).map(f64::exp)
}

/// The twisted kernel mixed over `(phi, psi)` and normalized to a probability vector.
pub fn normalized_kernel(
    instance: &GameInstance,
    player: Player,
    x: usize,
    phi: &[f64],
    psi: &[f64],
) -> Result<MixedEvaluation> {
    let c_hat = log_normalizer(instance, player, x, phi, psi)?;
    let theta = instance.theta();
    let mut p_hat = vec![0.0; instance.n_states()];
    for (a, b, lw) in weighted_pairs(phi, psi) {
        // weight relative to the normalizer stays <= 1
        let w = (lw + theta * instance.cost(player, x, a, b) - c_hat).exp();
        for (acc, p) in p_hat.iter_mut().zip(instance.transition_row(x, a, b)) {
            *acc += w * p;
        }
    }
    Ok(MixedEvaluation {
        x,
        phi: phi.to_vec(),
        psi: psi.to_vec(),
        c_tilde: c_hat.exp(),
        c_hat,
        p_hat,
    })
}

/// `mu(y) ∝ e^{v(y)} p_hat(y)`, the maximizer of `∫v dmu - I(mu, p_hat)`.
pub fn twisted_measure(p_hat: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if p_hat.len() != v.len() {
        return Err(Error::Dimension(format!(
            "measure has {} entries, value vector {}",
            p_hat.len(),
            v.len()
        )));
    }
    if p_hat.iter().all(|p| *p <= 0.0) {
        return Err(Error::InvalidParameter("all-zero base measure".into()));
    }
    let shift = max_of(v);
    let mut mu: Vec<f64> = p_hat
        .iter()
        .zip(v)
        .map(|(p, v)| if *p > 0.0 { p * (v - shift).exp() } else { 0.0 })
        .collect();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= total);
    Ok(mu)
}

/// Kullback-Leibler divergence `I(p, q)`, `+inf` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn relative_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&p, &q)| {
            if p <= 0.0 {
                0.0
            } else if q <= 0.0 {
                f64::INFINITY
            } else {
                p * (p / q).ln()
            }
        })
        .sum()
}

/// `∫ v dmu - I(mu, p_hat)`, the objective of the entropy dual.
pub fn dual_objective(p_hat: &[f64], v: &[f64], mu: &[f64]) -> f64 {
    let linear: f64 = mu.iter().zip(v).map(|(m, v)| m * v).sum();
    linear - relative_entropy(mu, p_hat)
}

/// `sum_{a,b} P(.|x,a,b) phi(a) psi(b)`.
pub fn mix_transition(
    instance: &GameInstance,
    x: usize,
    phi: &[f64],
    psi: &[f64],
) -> Result<Vec<f64>> {
    check_mix(instance, x, phi, psi)?;
    let mut out = vec![0.0; instance.n_states()];
    for (a, pa) in phi.iter().enumerate() {
        for (b, pb) in psi.iter().enumerate() {
            let w = pa * pb;
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(instance.transition_row(x, a, b)) {
                *o += w * p;
            }
        }
    }
    Ok(out)
}
