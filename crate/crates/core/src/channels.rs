//! Seeded random channel generation: distance-based path loss with Rayleigh
//! small-scale fading.
//!
//! Each channel entry is circularly-symmetric complex Gaussian with variance
//! equal to the linear path-loss gain of its link, sampled as two
//! independent real normals scaled by `sqrt(power / 2)`. Generation is a
//! pure function of `(dims, config, seed)`, so Monte-Carlo realizations can
//! run in parallel with per-realization derived seeds and still reproduce
//! bit-identically.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering::ChannelSet;
use crate::SystemDims;

/// Large-scale propagation parameters of the two hops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Reference path loss at 1 m, in dB.
    pub l0_db: f64,
    /// Path-loss exponent of the BS-to-RIS link.
    pub alpha_bs_ris: f64,
    /// Path-loss exponent of the RIS-to-user links.
    pub alpha_ris_user: f64,
    /// BS-to-RIS distance in meters.
    pub d_bs_ris: f64,
    /// RIS-to-user distance in meters.
    pub d_ris_user: f64,
}

impl Default for PropagationConfig {
    /// -30 dB reference loss, exponents 2 / 2.2, both hops 50 * sqrt(2) m.
    fn default() -> Self {
        let d = 50.0 * 2.0_f64.sqrt();
        Self {
            l0_db: -30.0,
            alpha_bs_ris: 2.0,
            alpha_ris_user: 2.2,
            d_bs_ris: d,
            d_ris_user: d,
        }
    }
}

/// Base seed of a reproducible run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Derives an independent stream seed from this one and a tuple of
    /// indices (realization number, grid position, ...). Splittable by
    /// construction: distinct tuples give statistically independent seeds
    /// and the derivation is order-insensitive to parallel scheduling.
    pub fn derive(self, stream: &[u64]) -> Seed {
        let mut h = splitmix64(self.0 ^ 0x9e37_79b9_7f4a_7c15);
        for (i, &part) in stream.iter().enumerate() {
            h = splitmix64(h ^ part.wrapping_add((i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        }
        Seed(h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Linear power gain `10^(l0_db / 10) * d^(-alpha)` of a link of length `d`.
pub fn path_loss(d: f64, l0_db: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("distance must be positive, got {d}")));
    }
    Ok(10f64.powf(l0_db / 10.0) * d.powf(-alpha))
}

/// Draws one channel realization. Entries of `e` have per-entry variance
/// `path_loss(d_bs_ris, l0_db, alpha_bs_ris)`, entries of `h` likewise with
/// the RIS-user parameters; `e` is filled before `h`, both column-major.
pub fn sample_channels(dims: SystemDims, cfg: &PropagationConfig, seed: Seed) -> Result<ChannelSet> {
    let p_e = path_loss(cfg.d_bs_ris, cfg.l0_db, cfg.alpha_bs_ris)?;
    let p_h = path_loss(cfg.d_ris_user, cfg.l0_db, cfg.alpha_ris_user)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let e = sample_matrix(&mut rng, dims.n, dims.l, p_e);
    let h = sample_matrix(&mut rng, dims.n, dims.k, p_h);
    ChannelSet::new(h, e)
}

fn sample_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, power: f64) -> DMatrix<Complex64> {
    let scale = (power / 2.0).sqrt();
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(r, c)] = Complex64::new(scale * re, scale * im);
        }
    }
    m
}

/// Writes a channel set as CSV for regression fixtures: a `n,k,l` header
/// line, then the rows of `h` and the rows of `e` with interleaved
/// real/imag entries. Values use the shortest exact decimal form, so a
/// round trip reproduces the matrices bit-identically.
pub fn dump_csv<P: AsRef<Path>>(ch: &ChannelSet, path: P) -> Result<()> {
    let dims = ch.dims();
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "{},{},{}", dims.n, dims.k, dims.l)?;
    for m in [&ch.h, &ch.e] {
        for r in 0..m.nrows() {
            let fields: Vec<String> = (0..m.ncols())
                .flat_map(|c| [m[(r, c)].re.to_string(), m[(r, c)].im.to_string()])
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
    }
    Ok(())
}

/// Reads a channel set written by [`dump_csv`].
pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<ChannelSet> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty channel file".into()))??;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse(format!("expected n,k,l header, got {header:?}")));
    }
    let (n, k, l) = (dims[0], dims[1], dims[2]);
    let mut parse_row = |cols: usize| -> Result<Vec<Complex64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated channel file".into()))??;
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad value in {line:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * cols {
            return Err(Error::Parse(format!(
                "expected {} fields, got {}",
                2 * cols,
                vals.len()
            )));
        }
        Ok((0..cols).map(|c| Complex64::new(vals[2 * c], vals[2 * c + 1])).collect())
    };
    let mut h = DMatrix::zeros(n, k);
    for r in 0..n {
        let row = parse_row(k)?;
        for (c, v) in row.into_iter().enumerate() {
            h[(r, c)] = v;
        }
    }
    let mut e = DMatrix::zeros(n, l);
    for r in 0..n {
        let row = parse_row(l)?;
        for (c, v) in row.into_iter().enumerate() {
            e[(r, c)] = v;
        }
    }
    ChannelSet::new(h, e)
}
