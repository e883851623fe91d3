//! Data ingestion, sample covariance/correlation, and thresholding-based
//! graph selection when no graph is supplied.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SymMatrix;

/// Relative eigenvalue cutoff for the generalized inverse used in graph
/// selection.
pub const PINV_REL_CUTOFF: f64 = 1e-10;

/// An n-by-p observation matrix (rows are observations).
#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    variable_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, variable_names: Option<Vec<String>>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::input(
                "data matrix must have at least one row and column",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("data matrix contains a non-finite entry"));
        }
        if let Some(names) = &variable_names {
            if names.len() != values.ncols() {
                return Err(Error::input(format!(
                    "{} variable names for {} columns",
                    names.len(),
                    values.ncols()
                )));
            }
        }
        Ok(DataMatrix {
            values,
            variable_names,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn variable_names(&self) -> Option<&[String]> {
        self.variable_names.as_deref()
    }

    /// Rows `lo..hi` as a new data matrix (half-open, 0-based).
    pub fn row_window(&self, lo: usize, hi: usize) -> Result<DataMatrix> {
        if lo >= hi || hi > self.n() {
            return Err(Error::input(format!(
                "bad row window {}..{} for n = {}",
                lo,
                hi,
                self.n()
            )));
        }
        Ok(DataMatrix {
            values: self.values.rows(lo, hi - lo).into_owned(),
            variable_names: self.variable_names.clone(),
        })
    }
}

/// Sample covariance with divisor n. With `center` set the column means are
/// subtracted first (requires n >= 2).
pub fn sample_covariance(d: &DataMatrix, center: bool) -> Result<SymMatrix> {
    let n = d.n();
    let p = d.p();
    if center && n < 2 {
        return Err(Error::input("centering requires at least 2 observations"));
    }
    let mut x = d.values().clone();
    if center {
        for j in 0..p {
            let mean = x.column(j).sum() / n as f64;
            for i in 0..n {
                x[(i, j)] -= mean;
            }
        }
    }
    let mut s = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..=a {
            let mut acc = 0.0;
            for i in 0..n {
                acc += x[(i, a)] * x[(i, b)];
            }
            s[(a, b)] = acc / n as f64;
        }
    }
    Ok(SymMatrix::mirror_lower(s))
}

/// Correlation matrix `R[i][j] = S[i][j] / sqrt(S[i][i] S[j][j])` with an
/// exactly unit diagonal.
pub fn to_correlation(s: &SymMatrix) -> Result<SymMatrix> {
    let p = s.p();
    for i in 0..p {
        if !(s.get(i, i) > 0.0) {
            return Err(Error::numerical(format!(
                "diagonal entry {} is not positive: {}",
                i + 1,
                s.get(i, i)
            )));
        }
    }
    let inv_sqrt: Vec<f64> = (0..p).map(|i| 1.0 / s.get(i, i).sqrt()).collect();
    let mut r = DMatrix::zeros(p, p);
    for i in 0..p {
        r[(i, i)] = 1.0;
        for j in 0..i {
            r[(i, j)] = s.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(SymMatrix::mirror_lower(r))
}

/// How to choose the threshold for graph selection.
#[derive(Debug, Clone, Copy)]
pub enum ThresholdTarget {
    /// Keep edges where the inverse magnitude strictly exceeds tau.
    Absolute(f64),
    /// Smallest tau achieving off-diagonal sparsity >= f, f in (0,1).
    Sparsity(f64),
}

/// Threshold the (generalized) inverse of `s`: edge (i,j) iff
/// `|inv(s)[i][j]| > tau`. Returns the graph and the tau actually used.
pub fn threshold_graph(s: &SymMatrix, target: ThresholdTarget) -> Result<(Graph, f64)> {
    let p = s.p();
    let inv = s.pseudo_inverse(PINV_REL_CUTOFF);
    let tau = match target {
        ThresholdTarget::Absolute(t) => {
            if !(t >= 0.0) {
                return Err(Error::input(format!(
                    "threshold must be non-negative, got {t}"
                )));
            }
            t
        }
        ThresholdTarget::Sparsity(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::input(format!(
                    "target sparsity must lie strictly between 0 and 1, got {f}"
                )));
            }
            let total = p * (p - 1) / 2;
            let mut mags: Vec<f64> = Vec::with_capacity(total);
            for i in 0..p {
                for j in 0..i {
                    mags.push(inv.get(i, j).abs());
                }
            }
            mags.sort_by(|a, b| b.total_cmp(a));
            // keep at most k largest magnitudes
            let k = ((1.0 - f) * total as f64).floor() as usize;
            if k >= mags.len() {
                0.0
            } else {
                mags[k]
            }
        }
    };
    let edges = (0..p).flat_map(|i| {
        let inv = &inv;
        (0..i).filter_map(move |j| (inv.get(i, j).abs() > tau).then_some((j, i)))
    });
    Ok((Graph::from_edges(p, edges)?, tau))
}
