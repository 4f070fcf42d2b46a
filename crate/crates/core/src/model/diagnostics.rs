use serde::Serialize;

use super::{arat_violations, GameInstance};
use crate::error::{Assumption, Error, Result};

/// Default positivity threshold for transition probabilities.
pub const DEFAULT_MIN_PROB: f64 = 1e-6;

/// Cap on how many violating index tuples a failed check lists.
const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Every transition probability must be at least this value.
    pub min_prob: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            min_prob: DEFAULT_MIN_PROB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub label: &'static str,
    pub passed: bool,
    pub detail: String,
    pub violations: Vec<String>,
}

impl AssumptionCheck {
    fn new(assumption: Assumption, passed: bool, detail: String, violations: Vec<String>) -> Self {
        Self {
            assumption,
            label: assumption.label(),
            passed,
            detail,
            violations,
        }
    }
}

/// Constants certifying the standing assumptions on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDiagnostics {
    /// Half the largest total-variation distance between transition rows.
    pub delta: f64,
    /// Largest density ratio `P(y|x,a,b) / P(y|x',a,b)`.
    pub kappa: f64,
    pub c_bar: f64,
    pub theta: f64,
    /// `ln(kappa) + 3 theta c_bar`, the bound on the span of any `T v`.
    pub span_bound: f64,
    /// Smallest transition probability.
    pub min_prob: f64,
    pub min_prob_threshold: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl ModelDiagnostics {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, assumption: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == assumption)
    }
}

/// Half the maximal total-variation distance over pairs of pure tuples.
///
/// The supremum over mixed strategies is attained at pure tuples: the TV
/// distance is convex in each measure and mixing is affine.
pub fn compute_delta(instance: &GameInstance) -> f64 {
    let rows: Vec<&[f64]> = instance
        .tuples()
        .map(|(x, a, b)| instance.transition_row(x, a, b))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, p) in rows.iter().enumerate() {
        for q in &rows[i + 1..] {
            worst = worst.max(tv_half(p, q));
        }
    }
    worst
}

fn tv_half(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

/// Largest ratio `P(y|x,a,b) / P(y|x',a,b)`; `+inf` when a positive entry
/// faces a zero one. Pairs where both entries vanish are skipped.
pub fn compute_kappa(instance: &GameInstance) -> f64 {
    let d = instance.dims();
    let mut kappa: f64 = 1.0;
    for a in 0..d.actions_a {
        for b in 0..d.actions_b {
            for y in 0..d.states {
                let column: Vec<f64> = (0..d.states)
                    .map(|x| instance.transition_row(x, a, b)[y])
                    .collect();
                let hi = column.iter().copied().fold(0.0, f64::max);
                let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
                if hi == 0.0 {
                    continue;
                }
                if lo == 0.0 {
                    return f64::INFINITY;
                }
                kappa = kappa.max(hi / lo);
            }
        }
    }
    kappa
}

/// Error naming a tuple where the density ratio is unbounded.
pub(crate) fn kappa_witness(instance: &GameInstance) -> Error {
    let d = instance.dims();
    for (x_prime, a, b) in instance.tuples() {
        for y in 0..d.states {
            if instance.transition_row(x_prime, a, b)[y] > 0.0 {
                continue;
            }
            if let Some(x) = (0..d.states).find(|&x| instance.transition_row(x, a, b)[y] > 0.0) {
                return Error::KappaInfinite {
                    x,
                    x_prime,
                    a,
                    b,
                    y,
                };
            }
        }
    }
    Error::InvalidEntry {
        table: "transition",
        detail: "zero transition entries".into(),
    }
}

pub fn validate(instance: &GameInstance) -> Result<ModelDiagnostics> {
    validate_with(instance, &ValidationOptions::default())
}

/// Computes the assumption constants and one PASS/FAIL check per assumption.
///
/// An unbounded density ratio is an error rather than a failed check, since
/// no span bound exists for such an instance.
pub fn validate_with(
    instance: &GameInstance,
    opts: &ValidationOptions,
) -> Result<ModelDiagnostics> {
    if !(opts.min_prob > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "min_prob threshold must be positive, got {}",
            opts.min_prob
        )));
    }
    let kappa = compute_kappa(instance);
    if kappa.is_infinite() {
        return Err(kappa_witness(instance));
    }
    let delta = compute_delta(instance);
    let c_bar = instance.c_bar();
    let theta = instance.theta();
    let span_bound = kappa.ln() + 3.0 * theta * c_bar;
    let min_prob = instance.min_transition();

    let mut checks = Vec::new();

    let mut tv_pairs = Vec::new();
    if delta >= 1.0 {
        let tuples: Vec<_> = instance.tuples().collect();
        'outer: for (i, &(x, a, b)) in tuples.iter().enumerate() {
            for &(x2, a2, b2) in &tuples[i + 1..] {
                let tv = tv_half(
                    instance.transition_row(x, a, b),
                    instance.transition_row(x2, a2, b2),
                );
                if tv >= 1.0 {
                    tv_pairs.push(format!("({x},{a},{b}) vs ({x2},{a2},{b2})"));
                    if tv_pairs.len() == MAX_LISTED {
                        break 'outer;
                    }
                }
            }
        }
    }
    checks.push(AssumptionCheck::new(
        Assumption::Ergodicity,
        delta < 1.0,
        if delta < 1.0 {
            format!("delta = {delta}")
        } else {
            format!("delta >= 1 (delta = {delta})")
        },
        tv_pairs,
    ));

    let low: Vec<String> = instance
        .tuples()
        .flat_map(|(x, a, b)| {
            instance
                .transition_row(x, a, b)
                .iter()
                .enumerate()
                .filter(|(_, p)| **p < opts.min_prob)
                .map(move |(y, p)| format!("P({y}|{x},{a},{b}) = {p}"))
        })
        .take(MAX_LISTED)
        .collect();
    checks.push(AssumptionCheck::new(
        Assumption::Positivity,
        low.is_empty(),
        format!(
            "min transition probability {min_prob}, threshold {}",
            opts.min_prob
        ),
        low,
    ));

    checks.push(AssumptionCheck::new(
        Assumption::DensityRatio,
        true,
        format!("kappa = {kappa}"),
        Vec::new(),
    ));

    if let Some(v) = arat_violations(instance) {
        let mut listed: Vec<String> = v
            .transition
            .iter()
            .take(MAX_LISTED)
            .map(|(x, a, b, y)| {
                format!("p1[{x}][{a}][{y}] + p2[{x}][{b}][{y}] != P({y}|{x},{a},{b})")
            })
            .collect();
        if v.negative > 0 {
            listed.push(format!("{} negative entries in p1/p2", v.negative));
        }
        checks.push(AssumptionCheck::new(
            Assumption::AdditiveTransitions,
            v.transition.is_empty() && v.negative == 0,
            format!("{} inconsistent transition entries", v.transition.len()),
            listed,
        ));
        checks.push(AssumptionCheck::new(
            Assumption::SeparableCosts,
            v.cost.is_empty(),
            format!("{} inconsistent cost entries", v.cost.len()),
            v.cost
                .iter()
                .take(MAX_LISTED)
                .map(|(i, x, a, b)| format!("c{i}{{1,2}} parts != c{i}({x},{a},{b})"))
                .collect(),
        ));
    }

    Ok(ModelDiagnostics {
        delta,
        kappa,
        c_bar,
        theta,
        span_bound,
        min_prob,
        min_prob_threshold: opts.min_prob,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, Dims};

    fn rows_instance(rows: &[[f64; 2]]) -> GameInstance {
        // one state per row, single actions; transition depends only on x
        let n = rows.len();
        assert_eq!(n, 2);
        GameInstance::new(
            Dims::new(2, 1, 1),
            rows.iter().flatten().copied().collect(),
            vec![0.0; 2],
            vec![0.0; 2],
            1.0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn identical_rows_give_zero_delta_and_unit_kappa() {
        let g = rows_instance(&[[0.3, 0.7], [0.3, 0.7]]);
        assert_eq!(compute_delta(&g), 0.0);
        assert_eq!(compute_kappa(&g), 1.0);
        let d = validate(&g).unwrap();
        assert!(d.passed());
        assert_eq!(d.span_bound, 0.0);
    }

    #[test]
    fn disjoint_rows_fail_ergodicity() {
        // positivity relaxed: kappa is infinite, so go through compute_delta
        let g = rows_instance(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(compute_delta(&g), 1.0);
        assert_eq!(compute_kappa(&g), f64::INFINITY);
        let err = validate(&g).unwrap_err();
        assert_eq!(err.assumption(), Some(Assumption::DensityRatio));
        assert!(err.to_string().contains("kappa"));
    }

    #[test]
    fn single_state_kappa_is_one() {
        let g = GameInstance::new(
            Dims::new(1, 2, 3),
            vec![1.0; 6],
            vec![0.5; 6],
            vec![0.1; 6],
            2.0,
            0,
        )
        .unwrap();
        assert_eq!(compute_kappa(&g), 1.0);
        assert_eq!(compute_delta(&g), 0.0);
    }

    #[test]
    fn g2_constants() {
        let d = validate(&fixtures::g2()).unwrap();
        assert!(d.passed(), "{:?}", d.checks);
        assert!((d.delta - 0.4).abs() < 1e-15);
        assert!((d.kappa - 1.5).abs() < 1e-15);
        assert!((d.c_bar - 1.0).abs() < 1e-15);
        assert!((d.span_bound - (1.5f64.ln() + 3.0)).abs() < 1e-15);
        assert_eq!(d.checks.len(), 5);
    }

    #[test]
    fn positivity_threshold_is_configurable() {
        let g = fixtures::g2();
        let d = validate_with(&g, &ValidationOptions { min_prob: 0.25 }).unwrap();
        assert!(!d.passed());
        let failed: Vec<_> = d.failures().map(|c| c.assumption).collect();
        assert_eq!(failed, vec![Assumption::Positivity]);
        assert!(!d
            .check(Assumption::Positivity)
            .unwrap()
            .violations
            .is_empty());
    }
}
