//! Small dense helpers for `R^e` vectors and `R^{e x e}` matrices stored as
//! flat row-major slices. Dimensions here are tiny (e <= a few dozen), so
//! plain loops beat any external matrix stack.

/// Euclidean norm of a vector.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius norm of a flat matrix.
pub fn frobenius(m: &[f64]) -> f64 {
    norm2(m)
}

/// Euclidean distance between two vectors.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out += coef * u (x) v` where `(x)` is the outer product `u v^T`.
pub fn outer_add(u: &[f64], v: &[f64], coef: f64, out: &mut [f64]) {
    let n = v.len();
    debug_assert_eq!(out.len(), u.len() * n);
    for (r, &ur) in u.iter().enumerate() {
        let row = &mut out[r * n..(r + 1) * n];
        for (c, &vc) in v.iter().enumerate() {
            row[c] += coef * ur * vc;
        }
    }
}

/// `a - b` elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `out += coef * a` elementwise.
pub fn axpy(coef: f64, a: &[f64], out: &mut [f64]) {
    for (o, x) in out.iter_mut().zip(a) {
        *o += coef * x;
    }
}

/// Maximum absolute entry.
pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Maximum absolute difference between two slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_add_matches_hand_value() {
        let mut out = vec![0.0; 4];
        outer_add(&[1.0, 2.0], &[3.0, 4.0], 1.0, &mut out);
        assert_eq!(out, vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn norms() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(max_abs_diff(&[1.0, -2.0], &[0.0, 1.0]), 3.0);
    }
}
