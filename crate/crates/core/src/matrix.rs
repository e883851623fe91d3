//! Dense symmetric matrices and patterned Cholesky factors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated when ingesting a matrix that should be
/// symmetric; storage is mirrored so the kept matrix is exactly symmetric.
const SYM_TOL: f64 = 1e-12;

/// A dense, exactly symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Validate squareness, finiteness, and symmetry (within a small relative
    /// tolerance), then store the lower triangle mirrored exactly.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::input(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut scale = 0.0f64;
        for v in m.iter() {
            if !v.is_finite() {
                return Err(Error::input("matrix contains a non-finite entry"));
            }
            scale = scale.max(v.abs());
        }
        let tol = SYM_TOL * scale.max(1.0);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::input(format!(
                        "matrix is not symmetric at ({}, {}): {} vs {}",
                        i + 1,
                        j + 1,
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::mirror_lower(m))
    }

    /// Take the lower triangle (including diagonal) as authoritative.
    pub fn mirror_lower(mut m: DMatrix<f64>) -> Self {
        for i in 0..m.nrows() {
            for j in 0..i {
                m[(j, i)] = m[(i, j)];
            }
        }
        SymMatrix { m }
    }

    pub fn zeros(p: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(p, p),
        }
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(p, p),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = DMatrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        SymMatrix { m }
    }

    pub fn p(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.p()).map(|i| self.m[(i, i)]).collect()
    }

    /// Principal submatrix at the given (distinct) indices, in order.
    pub fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.m[(idx[r], idx[c])])
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Eigenvalues, ascending (symmetric eigendecomposition).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::INFINITY)
    }

    /// Inverse via Cholesky; fails if not positive definite.
    pub fn inverse_spd(&self) -> Result<SymMatrix> {
        let chol = nalgebra::Cholesky::new(self.m.clone())
            .ok_or_else(|| Error::numerical("matrix is not positive definite"))?;
        Ok(SymMatrix::mirror_lower(chol.inverse()))
    }

    /// Moore-Penrose style generalized inverse through the symmetric
    /// eigendecomposition: eigenvalues with |lambda| <= rel_cutoff * max|lambda|
    /// are treated as zero.
    pub fn pseudo_inverse(&self, rel_cutoff: f64) -> SymMatrix {
        let eig = self.m.clone().symmetric_eigen();
        let max_abs = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        let cut = rel_cutoff * max_abs;
        let mut d = DMatrix::zeros(self.p(), self.p());
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda.abs() > cut {
                d[(k, k)] = 1.0 / lambda;
            }
        }
        let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        SymMatrix::mirror_lower(m)
    }
}

/// A lower-triangular factor with strictly positive diagonal whose
/// below-diagonal support is confined to an explicit pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    l: DMatrix<f64>,
    pattern: Vec<(usize, usize)>,
}

impl CholFactor {
    /// Validate: lower triangular, positive diagonal, exact zeros outside
    /// `pattern` (below-diagonal `(row, col)` positions) and the diagonal.
    pub fn from_parts(l: DMatrix<f64>, mut pattern: Vec<(usize, usize)>) -> Result<Self> {
        let p = l.nrows();
        if l.ncols() != p {
            return Err(Error::input("factor must be square"));
        }
        pattern.sort_unstable();
        pattern.dedup();
        for &(i, j) in &pattern {
            if j >= i || i >= p {
                return Err(Error::input(format!(
                    "pattern position ({}, {}) is not below the diagonal",
                    i + 1,
                    j + 1
                )));
            }
        }
        for i in 0..p {
            if !(l[(i, i)] > 0.0) {
                return Err(Error::numerical(format!(
                    "factor diagonal entry {} is not positive: {}",
                    i + 1,
                    l[(i, i)]
                )));
            }
            for j in i + 1..p {
                if l[(i, j)] != 0.0 {
                    return Err(Error::input(format!(
                        "factor has a non-zero above the diagonal at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let allowed: std::collections::HashSet<(usize, usize)> = pattern.iter().copied().collect();
        for i in 0..p {
            for j in 0..i {
                if l[(i, j)] != 0.0 && !allowed.contains(&(i, j)) {
                    return Err(Error::input(format!(
                        "factor has a non-zero outside its pattern at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(CholFactor { l, pattern })
    }

    pub fn p(&self) -> usize {
        self.l.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Below-diagonal positions allowed non-zero, sorted.
    pub fn pattern(&self) -> &[(usize, usize)] {
        &self.pattern
    }

    /// The assembled product `L L^T` (exactly symmetric).
    pub fn product(&self) -> SymMatrix {
        let m = &self.l * self.l.transpose();
        SymMatrix::mirror_lower(m)
    }

    pub(crate) fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.l
    }
}
