//! Closed-form least-squares susceptance design.
//!
//! The bound-attaining condition `V_M^H Θ P_M = I` is, for unitary `Θ` from
//! the susceptance map, equivalent to the linear matrix equation
//!
//! ```text
//! B * C = D,    C = j z0 (V_M + P_M),    D = P_M - V_M,
//! ```
//!
//! which splits into real and imaginary parts and vectorizes over the free
//! variables `b` of the masked symmetric `B` into one real system
//! `A b = z` with `A in R^{2MN x d}`. The design solves it in the
//! least-squares sense and feeds the result back through the scattering
//! map, so the produced `Θ` is feasible (symmetric unitary) no matter how
//! large the residual is. For `M > 1` the system has no exact solution and
//! the residual is the price of reciprocity.
//!
//! The stacked matrix is assembled column by column from the one or two
//! nonzero entries each free variable contributes; the Kronecker-product
//! form it equals is never materialized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scattering::{scattering_from_susceptance, sum_channel_gain, ChannelSet, ScatteringMatrix};
use crate::spectral::{decompose, upper_bound, SpectralDecomposition};
use crate::topology::{build_mask, build_transform, ArchitectureSpec, SusceptanceVector, TransformMatrix};

/// The real stacked least-squares system together with the complex factors
/// it came from.
#[derive(Debug, Clone)]
pub struct LsSystem {
    /// Stacked real coefficient matrix, `2MN x d`.
    pub matrix: DMatrix<f64>,
    /// Stacked real right-hand side, length `2MN`.
    pub rhs: DVector<f64>,
    /// Complex coefficient factor `C`, N x M.
    pub coeff: DMatrix<Complex64>,
    /// Complex right-hand side `D`, N x M.
    pub target: DMatrix<Complex64>,
}

/// Outcome of the least-squares design.
#[derive(Debug, Clone)]
pub struct LsResult {
    /// Minimum-norm least-squares susceptance variables.
    pub b: SusceptanceVector,
    /// Euclidean residual of the stacked system at `b`.
    pub residual: f64,
    /// Scattering matrix of the expanded susceptance.
    pub theta: ScatteringMatrix,
    /// Sum channel gain achieved by `theta`.
    pub gain: f64,
    /// Row count `2MN` of the stacked system; fewer rows than columns means
    /// the design ran in the underdetermined regime.
    pub system_rows: usize,
    /// Column count `d` of the stacked system.
    pub system_cols: usize,
}

impl LsResult {
    /// True when the stacked system had fewer rows than unknowns.
    pub fn underdetermined(&self) -> bool {
        self.system_rows < self.system_cols
    }
}

/// The complex factors `(C, D)` of the linear condition `B C = D`.
pub fn condition_matrices(
    dec: &SpectralDecomposition,
    z0: f64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let v_m = dec.v_m();
    let p_m = dec.p_m();
    let jz0 = Complex64::new(0.0, z0);
    let coeff = (&v_m + &p_m).map(|x| jz0 * x);
    let target = &p_m - &v_m;
    (coeff, target)
}

/// Stacks the real and imaginary parts of `B C = D` into one real system
/// over the free variables of the mask.
pub fn assemble_system(
    coeff: &DMatrix<Complex64>,
    target: &DMatrix<Complex64>,
    transform: &TransformMatrix,
) -> Result<LsSystem> {
    let n = transform.n();
    let m = coeff.ncols();
    if coeff.nrows() != n || target.nrows() != n || target.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "factors are {}x{} and {}x{}, transform expects {n} rows",
            coeff.nrows(),
            coeff.ncols(),
            target.nrows(),
            target.ncols()
        )));
    }
    let d = transform.dim();
    let rows = 2 * m * n;
    let mut matrix = DMatrix::zeros(rows, d);
    // Free variable (i, j) contributes row j of C to block row i and, when
    // off-diagonal, row i of C to block row j; one block per column of C,
    // real parts first.
    for (col, &(i, j)) in transform.vars().iter().enumerate() {
        for c in 0..m {
            matrix[(c * n + i, col)] += coeff[(j, c)].re;
            matrix[(m * n + c * n + i, col)] += coeff[(j, c)].im;
            if i != j {
                matrix[(c * n + j, col)] += coeff[(i, c)].re;
                matrix[(m * n + c * n + j, col)] += coeff[(i, c)].im;
            }
        }
    }
    let mut rhs = DVector::zeros(rows);
    for c in 0..m {
        for r in 0..n {
            rhs[c * n + r] = target[(r, c)].re;
            rhs[m * n + c * n + r] = target[(r, c)].im;
        }
    }
    Ok(LsSystem {
        matrix,
        rhs,
        coeff: coeff.clone(),
        target: target.clone(),
    })
}

/// Minimum-norm least-squares solution of the stacked system.
///
/// Computed through the SVD pseudo-inverse with a rank cutoff of
/// `1e-10 * sigma_max`, which covers both the overdetermined regime (where
/// it matches the normal equations) and the rank-deficient or
/// underdetermined one (where the normal equations break down).
pub fn solve_ls(sys: &LsSystem) -> SusceptanceVector {
    let svd = sys.matrix.clone().svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    svd.solve(&sys.rhs, cutoff)
        .expect("svd computed with both factors")
}

/// Runs the full closed-form design for one channel realization.
pub fn ls_design(ch: &ChannelSet, spec: &ArchitectureSpec, z0: f64) -> Result<LsResult> {
    let dims = ch.dims();
    if spec.n != dims.n {
        return Err(Error::DimensionMismatch(format!(
            "architecture is for {} elements, channels for {}",
            spec.n, dims.n
        )));
    }
    let dec = decompose(ch);
    let transform = build_transform(&build_mask(spec));
    let (coeff, target) = condition_matrices(&dec, z0);
    let sys = assemble_system(&coeff, &target, &transform)?;
    let b = solve_ls(&sys);
    let residual = (&sys.matrix * &b - &sys.rhs).norm();
    let theta = scattering_from_susceptance(&transform.expand(&b)?, z0)?;
    let gain = sum_channel_gain(ch, &theta)?;
    Ok(LsResult {
        b,
        residual,
        theta,
        gain,
        system_rows: sys.matrix.nrows(),
        system_cols: sys.matrix.ncols(),
    })
}

/// Convenience wrapper: the upper bound for the same channels, for
/// gain-versus-bound comparisons.
pub fn design_upper_bound(ch: &ChannelSet) -> f64 {
    upper_bound(&decompose(ch))
}
