//! Small dense symmetric solves.

/// In-place Cholesky of a row-major `n x n` matrix; the lower triangle
/// receives the factor. Fails if the matrix is not numerically positive definite.
pub(crate) fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for l in 0..j {
            d -= a[j * n + l] * a[j * n + l];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for l in 0..j {
                v -= a[i * n + l] * a[j * n + l];
            }
            a[i * n + j] = v / d;
        }
    }
    true
}

/// Solves `L L^T z = b` in place given the factor from [`cholesky`].
pub(crate) fn solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * n + k] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= l[k * n + i] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
}

/// Inverse of a symmetric positive definite matrix, or `None`.
pub(crate) fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    // Jacobi scaling keeps tiny covariances well conditioned
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / a[i * n + i].max(1e-300).sqrt()).collect();
    let mut f: Vec<f64> = (0..n * n).map(|ij| a[ij] * scale[ij / n] * scale[ij % n]).collect();
    if !cholesky(&mut f, n) {
        return None;
    }
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        solve(&f, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i] * scale[i] * scale[j];
        }
    }
    Some(inv)
}
