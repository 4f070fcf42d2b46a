//! Best responses, epsilon-Nash certificates and equilibrium search.
//!
//! A certificate is sound however its candidate pair was found: each gap is
//! `J_i(Phi, Psi) - rho_i*`, the player's spectral ergodic cost minus the
//! optimal value of its optimality equation against the fixed opponent.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::{solve_optimality, state_action_values, SolveOptions, SolveResult};
use crate::error::{Error, Result};
use crate::model::{arat_violations, GameInstance, Player, StationaryStrategy};
use crate::numeric::{min_of, normalize};
use crate::spectral::{ergodic_cost, perron_value, twisted_matrix, PERRON_TOL};

/// Gaps may dip below zero by solver round-off, never by more than this.
pub const GAP_FLOOR: f64 = -1e-9;
/// Agreement required between stored and recomputed certificate values.
pub const VERIFY_TOL: f64 = 1e-8;
/// Largest strategy grid [`brute_force_nash`] will enumerate.
pub const MAX_GRID_PAIRS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub solve: SolveResult,
    pub tied_actions: Vec<Vec<usize>>,
    /// Pure at the solver's selector.
    pub response_strategy: StationaryStrategy,
}

impl BestResponse {
    /// Membership in the best-response set: the strategy's support lies in
    /// the tied minimizers at every state.
    pub fn contains(&self, strategy: &StationaryStrategy) -> bool {
        strategy.n_states() == self.tied_actions.len()
            && (0..strategy.n_states()).all(|x| {
                strategy
                    .support(x)
                    .all(|k| self.tied_actions[x].contains(&k))
            })
    }
}

pub fn best_response(
    instance: &GameInstance,
    player: Player,
    opponent: &StationaryStrategy,
    opts: &SolveOptions,
) -> Result<BestResponse> {
    let solve = solve_optimality(instance, player, opponent, opts)?;
    Ok(BestResponse {
        tied_actions: solve.tied_actions.clone(),
        response_strategy: StationaryStrategy::pure(instance.n_actions(player), &solve.selector),
        solve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCertificate {
    pub phi: StationaryStrategy,
    pub psi: StationaryStrategy,
    pub j1: f64,
    pub j2: f64,
    pub rho1_star: f64,
    pub rho2_star: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub rounds: usize,
    pub converged: bool,
}

impl NashCertificate {
    pub fn max_gap(&self) -> f64 {
        self.eps1.max(self.eps2)
    }

    pub fn is_epsilon_nash(&self, eps: f64) -> bool {
        self.max_gap() <= eps
    }
}

fn certificate(
    instance: &GameInstance,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    rho1_star: f64,
    rho2_star: f64,
) -> Result<NashCertificate> {
    let j1 = ergodic_cost(instance, Player::One, phi, psi)?;
    let j2 = ergodic_cost(instance, Player::Two, phi, psi)?;
    Ok(NashCertificate {
        phi: phi.clone(),
        psi: psi.clone(),
        j1,
        j2,
        rho1_star,
        rho2_star,
        eps1: j1 - rho1_star,
        eps2: j2 - rho2_star,
        rounds: 0,
        converged: false,
    })
}

/// Deviation gaps of a stationary pair.
pub fn epsilon_gap(
    instance: &GameInstance,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    opts: &SolveOptions,
) -> Result<NashCertificate> {
    let rho1 = solve_optimality(instance, Player::One, psi, opts)?.rho;
    let rho2 = solve_optimality(instance, Player::Two, phi, opts)?.rho;
    certificate(instance, phi, psi, rho1, rho2)
}

/// Recomputes both gaps from scratch; fails when any stored value disagrees
/// with the recomputation or the recomputed gap exceeds `eps`.
pub fn verify_certificate(instance: &GameInstance, cert: &NashCertificate, eps: f64) -> bool {
    let fresh = match epsilon_gap(instance, &cert.phi, &cert.psi, &SolveOptions::default()) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let agree = [
        (cert.j1, fresh.j1),
        (cert.j2, fresh.j2),
        (cert.rho1_star, fresh.rho1_star),
        (cert.rho2_star, fresh.rho2_star),
        (cert.eps1, fresh.eps1),
        (cert.eps2, fresh.eps2),
    ]
    .iter()
    .all(|(s, f)| (s - f).abs() <= VERIFY_TOL);
    agree && fresh.max_gap() <= eps
}

/// Logit response with temperature `tau` over per-state action values.
pub fn logit_response(action_values: &[Vec<f64>], tau: f64) -> StationaryStrategy {
    let rows = action_values
        .iter()
        .map(|q| {
            let best = min_of(q);
            let mut p: Vec<f64> = q.iter().map(|v| (-(v - best) / tau).exp()).collect();
            normalize(&mut p);
            p
        })
        .collect();
    StationaryStrategy::new(rows).expect("logit weights are a probability vector")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    /// Damping weight on the new response, in `(0, 1]`.
    pub beta: f64,
    /// Logit smoothing; `false` uses pure responses at the selector.
    pub smoothing: bool,
    pub tau0: f64,
    pub tau_min: f64,
    /// Rounds over which `tau` decays geometrically from `tau0` to `tau_min`.
    pub anneal_rounds: usize,
    pub max_rounds: usize,
    pub eps_target: f64,
    /// Finish with Newton refinement on the equilibrium support.
    pub polish: bool,
    pub solve: SolveOptions,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            beta: 0.5,
            smoothing: true,
            tau0: 0.1,
            tau_min: 1e-4,
            anneal_rounds: 250,
            max_rounds: 500,
            eps_target: 1e-6,
            polish: true,
            solve: SolveOptions::default(),
        }
    }
}

impl DynamicsOptions {
    fn check(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.smoothing && !(self.tau0 > 0.0 && self.tau_min > 0.0 && self.tau_min <= self.tau0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < tau_min <= tau0, got {} / {}",
                self.tau_min, self.tau0
            )));
        }
        if !(self.eps_target > 0.0) || self.max_rounds == 0 {
            return Err(Error::InvalidParameter(
                "eps_target must be positive and max_rounds nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Temperature used in round `k` (0-based).
    pub fn tau(&self, k: usize) -> f64 {
        if self.anneal_rounds == 0 || k >= self.anneal_rounds {
            return self.tau_min;
        }
        let t = k as f64 / self.anneal_rounds as f64;
        self.tau0 * (self.tau_min / self.tau0).powf(t)
    }
}

/// Repetition of a strategy pair within the fingerprint window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub period: usize,
    pub detected_at_round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsOutcome {
    /// The certificate meeting the target, or the best one seen.
    pub certificate: NashCertificate,
    pub cycle: Option<CycleReport>,
    pub polished: bool,
    /// Max gap at the start of every round.
    pub gap_history: Vec<f64>,
}

const CYCLE_WINDOW: usize = 50;

fn fingerprint(phi: &StationaryStrategy, psi: &StationaryStrategy) -> u64 {
    let mut h = DefaultHasher::new();
    for p in phi.rows().iter().chain(psi.rows()).flatten() {
        ((p * 1e9).round() as i64).hash(&mut h);
    }
    h.finish()
}

fn respond(
    sol: &SolveResult,
    n_actions: usize,
    opts: &DynamicsOptions,
    round: usize,
) -> StationaryStrategy {
    if opts.smoothing {
        logit_response(&sol.action_values, opts.tau(round))
    } else {
        StationaryStrategy::pure(n_actions, &sol.selector)
    }
}

/// Alternating damped best-response dynamics:
/// `Phi <- (1 - beta) Phi + beta BR1(Psi)`, then `Psi <- (1 - beta) Psi + beta BR2(Phi)`.
pub fn best_response_dynamics(
    instance: &GameInstance,
    init: (StationaryStrategy, StationaryStrategy),
    opts: &DynamicsOptions,
) -> Result<DynamicsOutcome> {
    opts.check()?;
    let (mut phi, mut psi) = init;
    let n = instance.n_states();
    phi.check_shape(n, instance.n_actions(Player::One), "Phi")?;
    psi.check_shape(n, instance.n_actions(Player::Two), "Psi")?;

    let mut best: Option<NashCertificate> = None;
    let mut window: VecDeque<(u64, usize)> = VecDeque::with_capacity(CYCLE_WINDOW);
    let mut cycle = None;
    let mut gap_history = Vec::new();

    for round in 0..opts.max_rounds {
        let sol1 = solve_optimality(instance, Player::One, &psi, &opts.solve)?;
        let sol2 = solve_optimality(instance, Player::Two, &phi, &opts.solve)?;
        let mut cert = certificate(instance, &phi, &psi, sol1.rho, sol2.rho)?;
        cert.rounds = round;
        gap_history.push(cert.max_gap());
        if cert.max_gap() <= opts.eps_target {
            cert.converged = true;
            return Ok(DynamicsOutcome {
                certificate: cert,
                cycle,
                polished: false,
                gap_history,
            });
        }
        if best.as_ref().is_none_or(|b| cert.max_gap() < b.max_gap()) {
            best = Some(cert);
        }

        let fp = fingerprint(&phi, &psi);
        if let Some(&(_, seen)) = window.iter().find(|(f, _)| *f == fp) {
            cycle.get_or_insert(CycleReport {
                period: round - seen,
                detected_at_round: round,
            });
            // the map no longer changes once tau sits at its floor
            if !opts.smoothing || round >= opts.anneal_rounds {
                break;
            }
        }
        if window.len() == CYCLE_WINDOW {
            window.pop_front();
        }
        window.push_back((fp, round));

        phi = phi.mix(
            &respond(&sol1, instance.n_actions(Player::One), opts, round),
            opts.beta,
        );
        let sol2 = solve_optimality(instance, Player::Two, &phi, &opts.solve)?;
        psi = psi.mix(
            &respond(&sol2, instance.n_actions(Player::Two), opts, round),
            opts.beta,
        );
    }

    let mut best = best.expect("at least one round ran");
    let rounds = gap_history.len();
    if opts.polish {
        let mut starts = vec![(best.phi.clone(), best.psi.clone())];
        if (phi.clone(), psi.clone()) != starts[0] {
            starts.push((phi, psi));
        }
        for (p, q) in starts {
            if let Some(mut c) = refine_equilibrium(instance, &p, &q, &opts.solve)? {
                if c.max_gap() < best.max_gap() {
                    c.rounds = rounds;
                    c.converged = c.max_gap() <= opts.eps_target;
                    let polished = c.converged;
                    if polished {
                        return Ok(DynamicsOutcome {
                            certificate: c,
                            cycle,
                            polished,
                            gap_history,
                        });
                    }
                    best = c;
                }
            }
        }
    }
    best.rounds = rounds;
    Ok(DynamicsOutcome {
        certificate: best,
        cycle,
        polished: false,
        gap_history,
    })
}

/// Free coordinates of one mixed row: support actions after the first.
struct SupportBlock {
    player: Player,
    state: usize,
    support: Vec<usize>,
}

fn build_pair(
    base: (&StationaryStrategy, &StationaryStrategy),
    blocks: &[SupportBlock],
    z: &[f64],
) -> Option<(StationaryStrategy, StationaryStrategy)> {
    let mut rows = [base.0.rows().to_vec(), base.1.rows().to_vec()];
    let mut k = 0;
    for blk in blocks {
        let row = &mut rows[blk.player.index()][blk.state];
        row.iter_mut().for_each(|p| *p = 0.0);
        let mut rest = 1.0;
        for &a in &blk.support[1..] {
            row[a] = z[k];
            rest -= z[k];
            k += 1;
        }
        row[blk.support[0]] = rest;
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return None;
        }
    }
    let [r1, r2] = rows;
    Some((
        StationaryStrategy::new(r1).ok()?,
        StationaryStrategy::new(r2).ok()?,
    ))
}

/// Indifference residuals: within each mixed row, action values relative to
/// the first support action, under the player's own policy-evaluation values
/// `ln w` (`w` the Perron vector of its twisted matrix).
fn indifference(
    instance: &GameInstance,
    pair: &(StationaryStrategy, StationaryStrategy),
    blocks: &[SupportBlock],
) -> Result<Vec<f64>> {
    let mut values: [Option<Vec<f64>>; 2] = [None, None];
    let mut out = Vec::new();
    for blk in blocks {
        let i = blk.player.index();
        if values[i].is_none() {
            let q = twisted_matrix(instance, blk.player, &pair.0, &pair.1)?;
            let w = perron_value(&q, PERRON_TOL)?.eigenvector;
            values[i] = Some(w.iter().map(|w| w.ln()).collect());
        }
        let v = values[i].as_ref().unwrap();
        let opp = match blk.player {
            Player::One => pair.1.row(blk.state),
            Player::Two => pair.0.row(blk.state),
        };
        let q = state_action_values(instance, blk.player, blk.state, opp, v);
        let base = q[blk.support[0]];
        out.extend(blk.support[1..].iter().map(|&a| q[a] - base));
    }
    Ok(out)
}

/// Newton refinement of a near-equilibrium pair: keeps each row's support
/// (actions with probability above a threshold) and solves the indifference
/// conditions on it. Returns the best certificate over several support
/// thresholds, or `None` when no refinement stays on the simplex.
pub fn refine_equilibrium(
    instance: &GameInstance,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    opts: &SolveOptions,
) -> Result<Option<NashCertificate>> {
    let mut best: Option<NashCertificate> = None;
    for threshold in [1e-2, 1e-3, 1e-5] {
        let mut blocks = Vec::new();
        let mut z = Vec::new();
        let mut base = (phi.clone(), psi.clone());
        for (player, strat) in [(Player::One, phi), (Player::Two, psi)] {
            let mut rows = strat.rows().to_vec();
            for (x, row) in rows.iter_mut().enumerate() {
                let support: Vec<usize> = (0..row.len()).filter(|&a| row[a] > threshold).collect();
                let mass: f64 = support.iter().map(|&a| row[a]).sum();
                let restricted: Vec<f64> = (0..row.len())
                    .map(|a| {
                        if support.contains(&a) {
                            row[a] / mass
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if support.len() > 1 {
                    z.extend(support[1..].iter().map(|&a| restricted[a]));
                    blocks.push(SupportBlock {
                        player,
                        state: x,
                        support,
                    });
                }
                *row = restricted;
            }
            let s = StationaryStrategy::new(rows)?;
            match player {
                Player::One => base.0 = s,
                Player::Two => base.1 = s,
            }
        }
        let candidate = if blocks.is_empty() {
            Some(base.clone())
        } else {
            newton(instance, (&base.0, &base.1), &blocks, z)?
        };
        if let Some((p, q)) = candidate {
            let c = epsilon_gap(instance, &p, &q, opts)?;
            if best.as_ref().is_none_or(|b| c.max_gap() < b.max_gap()) {
                best = Some(c);
            }
        }
    }
    Ok(best)
}

fn newton(
    instance: &GameInstance,
    base: (&StationaryStrategy, &StationaryStrategy),
    blocks: &[SupportBlock],
    mut z: Vec<f64>,
) -> Result<Option<(StationaryStrategy, StationaryStrategy)>> {
    let Some(mut pair) = build_pair(base, blocks, &z) else {
        return Ok(None);
    };
    let mut r = indifference(instance, &pair, blocks)?;
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = 1e-7;
    for _ in 0..50 {
        if norm(&r) < 1e-14 {
            break;
        }
        let m = r.len();
        let k = z.len();
        let mut jac = DMatrix::<f64>::zeros(m, k);
        for j in 0..k {
            let mut zp = z.clone();
            let step = if z[j] + h <= 1.0 { h } else { -h };
            zp[j] += step;
            let Some(pp) = build_pair(base, blocks, &zp) else {
                return Ok(None);
            };
            let rp = indifference(instance, &pp, blocks)?;
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / step;
            }
        }
        let rhs = -DVector::from_column_slice(&r);
        let Ok(dz) = jac.svd(true, true).solve(&rhs, 1e-12) else {
            return Ok(None);
        };
        // backtrack until the residual shrinks and the rows stay feasible
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-4 {
            let zn: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + t * d).collect();
            if let Some(pn) = build_pair(base, blocks, &zn) {
                let rn = indifference(instance, &pn, blocks)?;
                if norm(&rn) < norm(&r) {
                    z = zn;
                    pair = pn;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(Some(pair))
}

/// All grid points `i / m` on the simplex with `k` vertices.
pub fn simplex_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == k - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(k, left - c, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, m, m, &mut Vec::with_capacity(k), &mut out);
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Every stationary strategy whose rows lie on the simplex grid.
fn strategy_grid(n_states: usize, points: &[Vec<f64>]) -> Vec<StationaryStrategy> {
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for _ in 0..n_states {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                points.iter().map(move |p| {
                    let mut rows = prefix.clone();
                    rows.push(p.clone());
                    rows
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|rows| StationaryStrategy::new(rows).expect("grid rows are normalized"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceReport {
    /// Certified pairs with `max gap <= eps`, smallest gap first.
    pub certificates: Vec<NashCertificate>,
    pub grid_step: f64,
    pub eps: f64,
    pub pairs_examined: u128,
    /// Whether the instance carries a consistent ARAT decomposition.
    pub existence_guaranteed: bool,
    pub label: String,
}

/// Certifies every pair on a per-state simplex grid of step `grid_step`.
pub fn brute_force_nash(
    instance: &GameInstance,
    grid_step: f64,
    eps: f64,
    opts: &SolveOptions,
) -> Result<BruteForceReport> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step {grid_step} not in (0, 1]"
        )));
    }
    let m = (1.0 / grid_step).round() as usize;
    if ((m as f64) * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "grid step {grid_step} must divide 1"
        )));
    }
    let n = instance.n_states();
    let (ka, kb) = (
        instance.n_actions(Player::One),
        instance.n_actions(Player::Two),
    );
    let per_state = |k: usize| binomial((m + k - 1) as u128, (k - 1) as u128);
    let count = |k: usize| -> Option<u128> {
        (0..n).try_fold(1u128, |acc, _| acc.checked_mul(per_state(k)))
    };
    let pairs = match (count(ka), count(kb)) {
        (Some(a), Some(b)) => a.saturating_mul(b),
        _ => u128::MAX,
    };
    if pairs > MAX_GRID_PAIRS {
        return Err(Error::GridTooLarge {
            pairs,
            limit: MAX_GRID_PAIRS,
        });
    }
    let phis = strategy_grid(n, &simplex_grid(ka, m));
    let psis = strategy_grid(n, &simplex_grid(kb, m));

    // rho_1* depends only on Psi and rho_2* only on Phi
    let rho1: Vec<f64> = psis
        .par_iter()
        .map(|psi| solve_optimality(instance, Player::One, psi, opts).map(|s| s.rho))
        .collect::<Result<_>>()?;
    let rho2: Vec<f64> = phis
        .par_iter()
        .map(|phi| solve_optimality(instance, Player::Two, phi, opts).map(|s| s.rho))
        .collect::<Result<_>>()?;

    let found: Vec<Vec<NashCertificate>> = phis
        .par_iter()
        .enumerate()
        .map(|(i, phi)| {
            let mut keep = Vec::new();
            for (j, psi) in psis.iter().enumerate() {
                let c = certificate(instance, phi, psi, rho1[j], rho2[i])?;
                if c.max_gap() <= eps {
                    keep.push(c);
                }
            }
            Ok(keep)
        })
        .collect::<Result<_>>()?;
    let mut certificates: Vec<NashCertificate> = found.into_iter().flatten().collect();
    certificates.sort_by(|a, b| a.max_gap().total_cmp(&b.max_gap()));

    let existence_guaranteed = arat_violations(instance).is_some_and(|v| v.is_empty());
    Ok(BruteForceReport {
        certificates,
        grid_step,
        eps,
        pairs_examined: pairs,
        existence_guaranteed,
        label: if existence_guaranteed {
            "ARAT instance: a stationary equilibrium exists".into()
        } else {
            "existence not guaranteed".into()
        },
    })
}
