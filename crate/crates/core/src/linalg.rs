//! Small dense linear-algebra helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Full SVD `a = u * diag(s) * v^H` with square unitary factors.
///
/// nalgebra computes the thin factorization; the missing columns of `u` and
/// `v` span the respective orthogonal complements and are filled in by
/// Householder completion. Singular values come back sorted descending.
pub fn full_svd(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
    let svd = a.clone().svd(true, true);
    let u_thin = svd.u.expect("svd requested u");
    let v_thin = svd.v_t.expect("svd requested v_t").adjoint();
    let s = svd.singular_values.iter().copied().collect();
    (complete_unitary(&u_thin), s, complete_unitary(&v_thin))
}

/// Extends a matrix with orthonormal columns to a square unitary matrix.
///
/// The first columns of the result are the input columns unchanged; the
/// remaining columns are an orthonormal basis of the orthogonal complement,
/// obtained from the QR factorization of `[cols | I]`. Deterministic.
pub fn complete_unitary(cols: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = cols.nrows();
    let r = cols.ncols();
    assert!(r <= n, "more columns than rows");
    if r == n {
        return cols.clone();
    }
    let mut aug = DMatrix::<Complex64>::zeros(n, r + n);
    aug.view_mut((0, 0), (n, r)).copy_from(cols);
    aug.view_mut((0, r), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    let q = aug.qr().q();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    out.view_mut((0, 0), (n, r)).copy_from(cols);
    out.view_mut((0, r), (n, n - r))
        .copy_from(&q.view((0, r), (n, n - r)));
    out
}

/// Frobenius-norm distance to the identity of `m * m^H`.
pub fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    (m * m.adjoint() - DMatrix::<Complex64>::identity(n, n)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    #[test]
    fn full_svd_reconstructs_and_sorts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(rows, cols) in &[(4usize, 7usize), (7, 4), (5, 5), (1, 6)] {
            let a = random_complex(&mut rng, rows, cols);
            let (u, s, v) = full_svd(&a);
            assert_eq!(u.nrows(), rows);
            assert_eq!(u.ncols(), rows);
            assert_eq!(v.nrows(), cols);
            assert_eq!(v.ncols(), cols);
            for w in s.windows(2) {
                assert!(w[0] >= w[1], "singular values not descending: {:?}", s);
            }
            let mut s_rect = DMatrix::<Complex64>::zeros(rows, cols);
            for (i, &sv) in s.iter().enumerate() {
                s_rect[(i, i)] = Complex64::new(sv, 0.0);
            }
            let recon = &u * s_rect * v.adjoint();
            assert!((recon - &a).norm() <= 1e-10 * a.norm().max(1.0));
            assert!(unitarity_defect(&u) < 1e-12 * rows as f64 + 1e-13);
            assert!(unitarity_defect(&v) < 1e-12 * cols as f64 + 1e-13);
        }
    }

    #[test]
    fn completion_keeps_input_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_complex(&mut rng, 6, 6);
        let (u, _, _) = full_svd(&a);
        let thin = u.columns(0, 2).into_owned();
        let full = complete_unitary(&thin);
        assert_eq!(full.columns(0, 2).into_owned(), thin);
        assert!(unitarity_defect(&full) < 1e-12);
    }
}
