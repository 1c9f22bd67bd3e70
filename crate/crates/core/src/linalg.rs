//! Small dense-vector helpers used throughout the crate.
//!
//! Dimensions here are tiny (tens of coordinates), so plain `Vec<f64>`
//! arithmetic beats pulling a matrix library into every signature. The
//! version-space solver uses `nalgebra` internally for its active-set
//! refinement; everything else goes through these.

/// Inner product. Panics on length mismatch (programmer error).
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dot: dimension mismatch");
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `x + s * y`, returning a new vector.
pub fn axpy(x: &[f64], s: f64, y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len(), "axpy: dimension mismatch");
    x.iter().zip(y).map(|(a, b)| a + s * b).collect()
}

/// Componentwise difference `x - y`.
pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    axpy(x, -1.0, y)
}

/// Scale in place.
pub fn scale(x: &mut [f64], s: f64) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// `⟨1 ⊕ θ, z⟩` for a `(d+1)`-vector `z` and a `d`-vector `θ`.
///
/// This is the residual form used everywhere the crate contracts a
/// temporal-difference vector against a value parameter.
pub fn one_oplus_dot(z: &[f64], theta: &[f64]) -> f64 {
    assert_eq!(
        z.len(),
        theta.len() + 1,
        "one_oplus_dot: expected len(z) = len(theta) + 1"
    );
    z[0] + dot(&z[1..], theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_oplus_dot_matches_manual_expansion() {
        let z = [0.5, 1.0, -2.0];
        let theta = [3.0, 0.25];
        assert_eq!(one_oplus_dot(&z, &theta), 0.5 + 3.0 - 0.5);
    }

    #[test]
    #[should_panic]
    fn dot_rejects_mismatched_lengths() {
        dot(&[1.0], &[1.0, 2.0]);
    }
}
