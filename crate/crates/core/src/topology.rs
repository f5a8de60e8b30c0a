//! RIS circuit architectures as symmetric connectivity masks.
//!
//! An architecture is described by an N x N boolean mask of permitted
//! nonzeros in the real symmetric susceptance matrix `B`. The stem family
//! connects the first Q ports to every port and leaves the remaining ports
//! connected only to the first Q, so `B[i][j] = 0` exactly when `i != j`
//! and both indices exceed Q. Q = 0 recovers the single connected
//! (diagonal) architecture, Q = 1 the tree connected one and Q = N - 1 the
//! fully connected one.
//!
//! The free entries of a masked symmetric matrix are collected into a
//! vector `b` by scanning the upper structure row-major; the sparse 0/1
//! [`TransformMatrix`] links the two representations through
//! `vec(B) = R * b` (column-major `vec`).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Independent susceptance variables of a masked symmetric matrix, in the
/// canonical row-major upper-structure order. Entries are in siemens.
pub type SusceptanceVector = DVector<f64>;

/// Architecture family of the reconfigurable impedance network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchitectureKind {
    /// Each port connects only to its own load (diagonal mask).
    Single,
    /// Port 1 connects to every port; no other interconnections.
    Tree,
    /// Disjoint all-to-all groups of `group_size` consecutive ports.
    Group { group_size: usize },
    /// The first `q` ports connect to every port.
    QStem { q: usize },
    /// Every port connects to every other port.
    Fully,
}

/// A validated (architecture kind, element count) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchitectureSpec {
    pub kind: ArchitectureKind,
    pub n: usize,
}

impl ArchitectureSpec {
    pub fn new(kind: ArchitectureKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArchitecture("element count must be positive".into()));
        }
        match kind {
            ArchitectureKind::QStem { q } if q > n - 1 => Err(Error::InvalidArchitecture(
                format!("stem size {q} out of range 0..={}", n - 1),
            )),
            ArchitectureKind::Group { group_size } if group_size == 0 || n % group_size != 0 => {
                Err(Error::InvalidArchitecture(format!(
                    "group size {group_size} does not divide {n}"
                )))
            }
            _ => Ok(Self { kind, n }),
        }
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::new(ArchitectureKind::Single, n)
    }

    pub fn tree(n: usize) -> Result<Self> {
        Self::new(ArchitectureKind::Tree, n)
    }

    pub fn group(group_size: usize, n: usize) -> Result<Self> {
        Self::new(ArchitectureKind::Group { group_size }, n)
    }

    pub fn q_stem(q: usize, n: usize) -> Result<Self> {
        Self::new(ArchitectureKind::QStem { q }, n)
    }

    pub fn fully(n: usize) -> Result<Self> {
        Self::new(ArchitectureKind::Fully, n)
    }

    /// Parses the CLI form: `single`, `tree`, `group:G`, `qstem:Q`, `fully`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let kind = match text.trim() {
            "single" => ArchitectureKind::Single,
            "tree" => ArchitectureKind::Tree,
            "fully" => ArchitectureKind::Fully,
            other => {
                if let Some(g) = other.strip_prefix("group:") {
                    let group_size = g
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad group size in {other:?}")))?;
                    ArchitectureKind::Group { group_size }
                } else if let Some(q) = other.strip_prefix("qstem:") {
                    let q = q
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad stem size in {other:?}")))?;
                    ArchitectureKind::QStem { q }
                } else {
                    return Err(Error::Parse(format!(
                        "unknown architecture {other:?}; expected single, tree, group:G, qstem:Q or fully"
                    )));
                }
            }
        };
        Self::new(kind, n)
    }
}

/// Symmetric boolean pattern of permitted nonzeros, diagonal always allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SusceptanceMask {
    n: usize,
    allowed: Vec<bool>,
}

impl SusceptanceMask {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    /// Number of independent variables: diagonal entries plus one per
    /// off-diagonal symmetric pair.
    pub fn independent_dim(&self) -> usize {
        let mut off = 0usize;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.allowed(i, j) {
                    off += 1;
                }
            }
        }
        self.n + off
    }

    /// Plain-text 0/1 grid, one row per line.
    pub fn to_grid_string(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for i in 0..self.n {
            for j in 0..self.n {
                out.push(if self.allowed(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the connectivity mask of an architecture.
pub fn build_mask(spec: &ArchitectureSpec) -> SusceptanceMask {
    let n = spec.n;
    let mut allowed = vec![false; n * n];
    let set = |i: usize, j: usize, allowed: &mut Vec<bool>| {
        allowed[i * n + j] = true;
        allowed[j * n + i] = true;
    };
    match spec.kind {
        ArchitectureKind::Group { group_size } => {
            for block in 0..(n / group_size) {
                let base = block * group_size;
                for i in base..base + group_size {
                    for j in i..base + group_size {
                        set(i, j, &mut allowed);
                    }
                }
            }
        }
        kind => {
            // Stem family: ports 0..q connect to everything.
            let q = match kind {
                ArchitectureKind::Single => 0,
                ArchitectureKind::Tree => 1.min(n - 1),
                ArchitectureKind::QStem { q } => q,
                ArchitectureKind::Fully => n - 1,
                ArchitectureKind::Group { .. } => unreachable!(),
            };
            for i in 0..n {
                for j in i..n {
                    if i == j || i < q || j < q {
                        set(i, j, &mut allowed);
                    }
                }
            }
        }
    }
    SusceptanceMask { n, allowed }
}

/// Sparse 0/1 matrix `R` with `vec(B) = R * b` for column-major `vec`.
///
/// Column `c` of `R` carries a single 1 for a diagonal variable and two 1s
/// for an off-diagonal symmetric pair. Columns are ordered by the row-major
/// upper-structure scan of the mask, which for the stem family runs through
/// row 1 left to right, then row 2 from the diagonal, and so on, followed by
/// the remaining diagonal entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformMatrix {
    n: usize,
    /// Upper-structure positions `(i, j)` with `i <= j`, one per variable.
    vars: Vec<(usize, usize)>,
}

impl TransformMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of independent variables `d`.
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// Upper-structure position of variable `idx`.
    pub fn var(&self, idx: usize) -> (usize, usize) {
        self.vars[idx]
    }

    pub fn vars(&self) -> &[(usize, usize)] {
        &self.vars
    }

    /// Materializes the dense N^2 x d form.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut r = DMatrix::zeros(n * n, self.vars.len());
        for (c, &(i, j)) in self.vars.iter().enumerate() {
            r[(j * n + i, c)] = 1.0;
            if i != j {
                r[(i * n + j, c)] = 1.0;
            }
        }
        r
    }

    /// Reconstructs the full symmetric matrix from its free variables.
    pub fn expand(&self, b: &SusceptanceVector) -> Result<DMatrix<f64>> {
        if b.len() != self.vars.len() {
            return Err(Error::DimensionMismatch(format!(
                "susceptance vector has length {}, transform expects {}",
                b.len(),
                self.vars.len()
            )));
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for (c, &(i, j)) in self.vars.iter().enumerate() {
            m[(i, j)] = b[c];
            m[(j, i)] = b[c];
        }
        Ok(m)
    }

    /// Extracts the free variables of a masked symmetric matrix.
    ///
    /// Rejects asymmetric input and any nonzero outside the mask; inputs are
    /// constructed, so both checks are exact.
    pub fn contract(&self, b_matrix: &DMatrix<f64>) -> Result<SusceptanceVector> {
        let n = self.n;
        if b_matrix.nrows() != n || b_matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, transform expects {n}x{n}",
                b_matrix.nrows(),
                b_matrix.ncols()
            )));
        }
        let mut in_mask = vec![false; n * n];
        for &(i, j) in &self.vars {
            in_mask[i * n + j] = true;
            in_mask[j * n + i] = true;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if b_matrix[(i, j)] != b_matrix[(j, i)] {
                    return Err(Error::NotSymmetric(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
                if !in_mask[i * n + j] && b_matrix[(i, j)] != 0.0 {
                    return Err(Error::MaskViolation { row: i, col: j });
                }
            }
        }
        Ok(DVector::from_iterator(
            self.vars.len(),
            self.vars.iter().map(|&(i, j)| b_matrix[(i, j)]),
        ))
    }
}

/// Builds the transform of a mask with the canonical variable order.
pub fn build_transform(mask: &SusceptanceMask) -> TransformMatrix {
    let n = mask.n();
    let mut vars = Vec::with_capacity(mask.independent_dim());
    for i in 0..n {
        for j in i..n {
            if mask.allowed(i, j) {
                vars.push((i, j));
            }
        }
    }
    TransformMatrix { n, vars }
}

/// Extracts the free variables of `b_matrix` under `mask`; see
/// [`TransformMatrix::contract`].
pub fn contract(b_matrix: &DMatrix<f64>, mask: &SusceptanceMask) -> Result<SusceptanceVector> {
    build_transform(mask).contract(b_matrix)
}
