//! Small dense-vector helpers shared by the numeric modules.

/// Vectors whose norm is already this close to 1 are left untouched by
/// [`normalized`], which makes normalization idempotent bit-for-bit.
pub const UNIT_NORM_SLACK: f64 = 1e-12;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Cosine similarity. Returns `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

/// Unit-L2 copy of `v`, or `None` for zero or non-finite input.
///
/// The vector is rescaled by its largest magnitude before the norm is taken
/// so that very large or very small entries neither overflow nor underflow.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let direct = norm(v);
    if direct.is_finite() && (direct - 1.0).abs() <= UNIT_NORM_SLACK {
        return Some(v.to_vec());
    }
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / scale).collect();
    let n = norm(&scaled);
    Some(scaled.into_iter().map(|x| x / n).collect())
}
