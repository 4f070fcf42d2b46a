//! Small numeric helpers shared by the solvers.

/// Tolerance for a strategy row or probability vector to count as normalized.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// `ln(sum(exp(x)))` without overflow. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

pub fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `max(v) - min(v)` for a non-empty slice.
pub(crate) fn span_unchecked(v: &[f64]) -> f64 {
    max_of(v) - min_of(v)
}

/// Checks that `p` is nonnegative and sums to one within `tol`.
pub fn simplex_violation(p: &[f64], tol: f64) -> Option<String> {
    if p.is_empty() {
        return Some("empty".into());
    }
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Some(format!("entry {i} = {v}"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Some(format!("sum = {sum}"));
    }
    None
}

/// Rescales a nonnegative vector to sum to one.
pub(crate) fn normalize(p: &mut [f64]) {
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        p.iter_mut().for_each(|v| *v /= sum);
    }
}
