//! Susceptance-to-scattering map and the sum channel gain objective.
//!
//! A lossless reciprocal N-port with admittance matrix `Y = jB` (real
//! symmetric susceptance `B`) has the scattering matrix
//!
//! ```text
//! Θ = (I + j z0 B)^-1 (I - j z0 B)
//! ```
//!
//! which is symmetric unitary for every real symmetric `B`; the inverse
//! always exists because the eigenvalues of `I + j z0 B` have modulus at
//! least one. The design objective throughout the crate is the sum channel
//! gain `||H^H Θ E||_F^2` of the reflected multi-user link.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SystemDims;

/// Default reference impedance in ohms.
pub const DEFAULT_Z0: f64 = 50.0;

/// Scattering matrix of a lossless reciprocal port network.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    /// N x N complex scattering matrix.
    pub theta: DMatrix<Complex64>,
    /// Reference impedance used to compute it, in ohms.
    pub z0: f64,
}

impl ScatteringMatrix {
    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    /// `||Θ Θ^H - I||_F`; at most `1e-10 * n` for matrices built from a
    /// real symmetric susceptance.
    pub fn unitarity_defect(&self) -> f64 {
        crate::linalg::unitarity_defect(&self.theta)
    }

    /// `||Θ - Θ^T||_F`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.theta - self.theta.transpose()).norm()
    }
}

/// One realization of the two-hop channels: `h` stacks the RIS-to-user
/// columns (N x K) and `e` is the BS-to-RIS channel (N x L).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: DMatrix<Complex64>,
    pub e: DMatrix<Complex64>,
}

impl ChannelSet {
    pub fn new(h: DMatrix<Complex64>, e: DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() != e.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "channel row counts differ: {} vs {}",
                h.nrows(),
                e.nrows()
            )));
        }
        Ok(Self { h, e })
    }

    pub fn dims(&self) -> SystemDims {
        SystemDims::new(self.h.nrows(), self.e.ncols(), self.h.ncols())
    }
}

/// Maps a real symmetric susceptance matrix to its scattering matrix.
///
/// The linear system `(I + j z0 B) Θ = I - j z0 B` is solved by a dense LU
/// factorization; asymmetric input is rejected.
pub fn scattering_from_susceptance(
    b_matrix: &DMatrix<f64>,
    z0: f64,
) -> Result<ScatteringMatrix> {
    let n = b_matrix.nrows();
    if b_matrix.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "susceptance matrix is {}x{}",
            n,
            b_matrix.ncols()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if b_matrix[(i, j)] != b_matrix[(j, i)] {
                return Err(Error::NotSymmetric(format!(
                    "susceptance entries ({i}, {j}) and ({j}, {i}) differ"
                )));
            }
        }
    }
    let jz0 = Complex64::new(0.0, z0);
    let scaled = b_matrix.map(|x| jz0 * x);
    let plus = DMatrix::<Complex64>::identity(n, n) + &scaled;
    let minus = DMatrix::<Complex64>::identity(n, n) - &scaled;
    let theta = plus
        .lu()
        .solve(&minus)
        .expect("I + j z0 B is always invertible for real symmetric B");
    Ok(ScatteringMatrix { theta, z0 })
}

/// Sum channel gain `||H^H Θ E||_F^2`.
pub fn sum_channel_gain(ch: &ChannelSet, theta: &ScatteringMatrix) -> Result<f64> {
    let n = theta.n();
    if ch.h.nrows() != n || ch.e.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "channels are for {} elements, scattering matrix is {n}x{n}",
            ch.h.nrows()
        )));
    }
    let effective = ch.h.adjoint() * &theta.theta * &ch.e;
    Ok(effective.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                s[(i, j)] = a[(i, j)];
                s[(j, i)] = a[(i, j)];
            }
        }
        s
    }

    fn random_channels(rng: &mut ChaCha8Rng, n: usize, l: usize, k: usize) -> ChannelSet {
        let h = DMatrix::from_fn(n, k, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let e = DMatrix::from_fn(n, l, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        ChannelSet::new(h, e).unwrap()
    }

    #[test]
    fn zero_susceptance_gives_identity() {
        let theta = scattering_from_susceptance(&DMatrix::zeros(5, 5), DEFAULT_Z0).unwrap();
        assert!((theta.theta - DMatrix::<Complex64>::identity(5, 5)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_susceptance_gives_unit_modulus_phase_shifts() {
        let values = [0.7, -1.3, 0.0, 2.4];
        let b = DMatrix::from_diagonal(&DVector::from_row_slice(&values));
        let theta = scattering_from_susceptance(&b, DEFAULT_Z0).unwrap();
        for (i, &bi) in values.iter().enumerate() {
            let expected = Complex64::new(1.0, -DEFAULT_Z0 * bi)
                / Complex64::new(1.0, DEFAULT_Z0 * bi);
            assert!((theta.theta[(i, i)] - expected).norm() < 1e-12);
            assert!((theta.theta[(i, i)].norm() - 1.0).abs() < 1e-12);
        }
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(theta.theta[(i, j)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn random_susceptance_is_symmetric_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let b = random_symmetric(&mut rng, 8);
            let theta = scattering_from_susceptance(&b, DEFAULT_Z0).unwrap();
            assert!(theta.unitarity_defect() < 1e-10);
            assert!(theta.symmetry_defect() < 1e-10);
        }
    }

    #[test]
    fn asymmetric_susceptance_is_rejected() {
        let mut b = DMatrix::zeros(3, 3);
        b[(0, 1)] = 1.0;
        assert!(matches!(
            scattering_from_susceptance(&b, DEFAULT_Z0),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn identity_gain_counts_elements() {
        let n = 6;
        let eye = DMatrix::<Complex64>::identity(n, n);
        let ch = ChannelSet::new(eye.clone(), eye.clone()).unwrap();
        let theta = ScatteringMatrix { theta: eye, z0: DEFAULT_Z0 };
        let gain = sum_channel_gain(&ch, &theta).unwrap();
        assert!((gain - n as f64).abs() < 1e-12);
    }

    #[test]
    fn per_user_sum_equals_frobenius_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ch = random_channels(&mut rng, 8, 4, 3);
        let theta = scattering_from_susceptance(&random_symmetric(&mut rng, 8), DEFAULT_Z0).unwrap();
        let gain = sum_channel_gain(&ch, &theta).unwrap();
        let mut per_user = 0.0;
        for k in 0..3 {
            let hk = ch.h.column(k).into_owned();
            let row = hk.adjoint() * &theta.theta * &ch.e;
            per_user += row.norm_squared();
        }
        assert!((gain - per_user).abs() <= 1e-9 * gain.max(1e-300));
    }

    #[test]
    fn gain_is_quadratic_in_channel_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let ch = random_channels(&mut rng, 6, 3, 2);
        let theta = scattering_from_susceptance(&random_symmetric(&mut rng, 6), DEFAULT_Z0).unwrap();
        let gain = sum_channel_gain(&ch, &theta).unwrap();
        let c = Complex64::new(1.7, -0.4);
        let scaled = ChannelSet::new(ch.h.map(|x| c * x), ch.e.clone()).unwrap();
        let scaled_gain = sum_channel_gain(&scaled, &theta).unwrap();
        assert!((scaled_gain - c.norm_sqr() * gain).abs() < 1e-9 * scaled_gain);
    }

    #[test]
    fn unitary_scattering_preserves_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ch = random_channels(&mut rng, 8, 5, 2);
        let theta = scattering_from_susceptance(&random_symmetric(&mut rng, 8), DEFAULT_Z0).unwrap();
        let reflected = &theta.theta * &ch.e;
        assert!((reflected.norm() - ch.e.norm()).abs() < 1e-10 * ch.e.norm());
    }

    #[test]
    fn map_is_continuous_in_susceptance() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let b = random_symmetric(&mut rng, 16);
        let theta = scattering_from_susceptance(&b, DEFAULT_Z0).unwrap();
        let mut delta = random_symmetric(&mut rng, 16);
        delta.scale_mut(1e-8 / delta.norm());
        let perturbed = scattering_from_susceptance(&(b + delta), DEFAULT_Z0).unwrap();
        assert!((perturbed.theta - theta.theta).norm() < 1e-5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let ch = ChannelSet::new(
            DMatrix::<Complex64>::zeros(4, 2),
            DMatrix::<Complex64>::zeros(4, 3),
        )
        .unwrap();
        let theta = scattering_from_susceptance(&DMatrix::zeros(5, 5), DEFAULT_Z0).unwrap();
        assert!(matches!(
            sum_channel_gain(&ch, &theta),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(ChannelSet::new(
            DMatrix::<Complex64>::zeros(4, 2),
            DMatrix::<Complex64>::zeros(5, 3)
        )
        .is_err());
    }
}
