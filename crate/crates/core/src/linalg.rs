//! Small dense-vector helpers shared by the solver, the generator and the baseline.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

/// Rescales `v` to unit length unless it is already unit within 1e-12.
///
/// Leaving near-unit vectors untouched keeps write/read cycles bit-identical.
/// Returns `false` for a zero (or non-finite) vector.
pub fn normalize_in_place(v: &mut [f64]) -> bool {
    let n = norm(v);
    if !(n.is_finite() && n > 0.0) {
        return false;
    }
    if (n - 1.0).abs() > 1e-12 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    true
}
