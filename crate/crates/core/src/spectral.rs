//! SVD analysis of one channel realization: degree of freedom, the
//! performance upper bound, the relaxed (non-reciprocal) optimum that
//! attains it, and the obstruction that keeps reciprocal surfaces below it.
//!
//! With `H^H = U S V^H` and `E = P Σ W^H`, the sum channel gain of any
//! unitary `Θ` is at most `||S_M Σ_M||_F^2` where `M = min(K, L, N)`; the
//! bound is met exactly by `Θ* = V_M Φ P_M^H + V_{N-M} X P_{N-M}^H` for any
//! phases `Φ` and unitary `X`. That `Θ*` is generally not symmetric, and
//! for `M > 1` no symmetric choice exists: symmetry would force
//! `Λ = P_M^H conj(V_M)` to equal its own transpose, which fails with
//! probability one for independent continuous channels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{full_svd, unitarity_defect};
use crate::scattering::ChannelSet;
use crate::SystemDims;

/// Full SVDs of `H^H` and `E` plus the channel degree of freedom.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Left factor of `H^H`, K x K unitary.
    pub u: DMatrix<Complex64>,
    /// Singular values of `H^H`, descending, length `min(K, N)`.
    pub s: DVector<f64>,
    /// Right factor of `H^H`, N x N unitary.
    pub v: DMatrix<Complex64>,
    /// Left factor of `E`, N x N unitary.
    pub p: DMatrix<Complex64>,
    /// Singular values of `E`, descending, length `min(N, L)`.
    pub sigma: DVector<f64>,
    /// Right factor of `E`, L x L unitary.
    pub w: DMatrix<Complex64>,
    /// Degree of freedom `min(K, L, N)`.
    pub m: usize,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// First `m` columns of `v`.
    pub fn v_m(&self) -> DMatrix<Complex64> {
        self.v.columns(0, self.m).into_owned()
    }

    /// First `m` columns of `p`.
    pub fn p_m(&self) -> DMatrix<Complex64> {
        self.p.columns(0, self.m).into_owned()
    }

    /// Trailing `n - m` columns of `v`.
    pub fn v_tail(&self) -> DMatrix<Complex64> {
        self.v.columns(self.m, self.n() - self.m).into_owned()
    }

    /// Trailing `n - m` columns of `p`.
    pub fn p_tail(&self) -> DMatrix<Complex64> {
        self.p.columns(self.m, self.n() - self.m).into_owned()
    }

    /// Rectangular K x N singular-value matrix of `H^H`.
    pub fn s_rect(&self) -> DMatrix<Complex64> {
        let k = self.u.nrows();
        let mut m = DMatrix::zeros(k, self.n());
        for (i, &sv) in self.s.iter().enumerate() {
            m[(i, i)] = Complex64::new(sv, 0.0);
        }
        m
    }

    /// Rectangular N x L singular-value matrix of `E`.
    pub fn sigma_rect(&self) -> DMatrix<Complex64> {
        let l = self.w.nrows();
        let mut m = DMatrix::zeros(self.n(), l);
        for (i, &sv) in self.sigma.iter().enumerate() {
            m[(i, i)] = Complex64::new(sv, 0.0);
        }
        m
    }
}

/// Diagonal phases of the bound-attaining solution family, wrapped to
/// `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    phis: Vec<f64>,
}

impl PhaseVector {
    pub fn new(phis: Vec<f64>) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            phis: phis.into_iter().map(|p| p.rem_euclid(tau)).collect(),
        }
    }

    /// All phases zero.
    pub fn zeros(m: usize) -> Self {
        Self { phis: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phis
    }
}

/// Degree of freedom of the effective channel, `min(K, L, N)`.
pub fn dof(dims: SystemDims) -> usize {
    dims.dof()
}

/// Full SVDs of `H^H` and `E`.
pub fn decompose(ch: &ChannelSet) -> SpectralDecomposition {
    let dims = ch.dims();
    let (u, s, v) = full_svd(&ch.h.adjoint());
    let (p, sigma, w) = full_svd(&ch.e);
    SpectralDecomposition {
        u,
        s: DVector::from_vec(s),
        v,
        p,
        sigma: DVector::from_vec(sigma),
        w,
        m: dims.dof(),
    }
}

/// Maximum sum channel gain over unconstrained unitary scattering,
/// `sum_i (s_i sigma_i)^2` over the top `m` singular-value pairs.
pub fn upper_bound(dec: &SpectralDecomposition) -> f64 {
    (0..dec.m).map(|i| (dec.s[i] * dec.sigma[i]).powi(2)).sum()
}

/// The bound-attaining scattering matrix `V_M Φ P_M^H + V_{N-M} X P_{N-M}^H`.
///
/// Unitary for any unitary `x`, but in general not symmetric: it ignores
/// reciprocity, which is what makes it an upper-bound witness rather than a
/// realizable design.
pub fn relaxed_optimal_theta(
    dec: &SpectralDecomposition,
    phases: &PhaseVector,
    x: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n = dec.n();
    let m = dec.m;
    if phases.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for dof {m}",
            phases.len()
        )));
    }
    if x.nrows() != n - m || x.ncols() != n - m {
        return Err(Error::DimensionMismatch(format!(
            "x is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            n - m,
            n - m
        )));
    }
    let defect = unitarity_defect(x);
    if defect > 1e-10 * (n - m).max(1) as f64 {
        return Err(Error::NotUnitary { defect });
    }
    let phi = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        phases.as_slice().iter().map(|&p| Complex64::new(0.0, p).exp()),
    ));
    let head = dec.v_m() * phi * dec.p_m().adjoint();
    if m == n {
        return Ok(head);
    }
    Ok(head + dec.v_tail() * x * dec.p_tail().adjoint())
}

/// The obstruction pair `(Λ, ||Λ - Λ^T||_F)` with `Λ = P_M^H conj(V_M)`.
///
/// A symmetric bound-attaining scattering matrix exists only if `Λ` is
/// symmetric; the asymmetry magnitude is invariant to the SVD phase
/// ambiguity in the sense that it is zero exactly when some phase choice
/// symmetrizes the problem, which for `m = 1` always holds.
pub fn reciprocity_obstruction(dec: &SpectralDecomposition) -> (DMatrix<Complex64>, f64) {
    let lambda = dec.p_m().adjoint() * dec.v_m().conjugate();
    let asym = (&lambda - lambda.transpose()).norm();
    (lambda, asym)
}
