//! Scattering matrix design for beyond-diagonal reconfigurable intelligent
//! surfaces (BD-RIS).
//!
//! A BD-RIS is an N-port reconfigurable impedance network whose scattering
//! matrix may carry off-diagonal entries thanks to tunable admittances
//! interconnecting the ports. This crate models the family of architectures
//! obtained by connecting the first Q ports to every port (single connected
//! at Q = 0, tree connected at Q = 1, fully connected at Q = N - 1) and
//! designs the scattering matrix to maximize the sum channel gain
//! `||H^H Θ E||_F^2` of a multi-user downlink.
//!
//! The main pieces:
//!
//! - [`topology`]: connectivity masks, independent-variable vectorization and
//!   the 0/1 transform between the free susceptances and the full matrix.
//! - [`scattering`]: the susceptance-to-scattering map and the channel gain
//!   objective.
//! - [`channels`]: seeded Rayleigh channel generation with distance-based
//!   path loss.
//! - [`spectral`]: SVD analysis, the performance upper bound, the relaxed
//!   (non-reciprocal) optimum and the reciprocity obstruction.
//! - [`ls_solver`]: the closed-form least-squares susceptance design.
//! - [`quasi_newton`]: limited-memory quasi-Newton refinement of the gain.
//! - [`experiment`]: the Monte-Carlo comparison harness with CSV output.
//!
//! Monte-Carlo realizations run in parallel through rayon when the default
//! `parallel` feature is enabled; results are bit-identical either way.

pub mod channels;
pub mod error;
pub mod experiment;
pub(crate) mod linalg;
pub mod ls_solver;
pub mod quasi_newton;
pub mod scattering;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};

/// Problem dimensions: `n` RIS elements, `l` BS antennas, `k` users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SystemDims {
    /// Number of RIS elements (ports).
    pub n: usize,
    /// Number of base-station transmit antennas.
    pub l: usize,
    /// Number of single-antenna users.
    pub k: usize,
}

impl SystemDims {
    pub fn new(n: usize, l: usize, k: usize) -> Self {
        Self { n, l, k }
    }

    /// Degree of freedom of the effective channel, `min(k, l, n)`.
    pub fn dof(&self) -> usize {
        self.k.min(self.l).min(self.n)
    }
}
