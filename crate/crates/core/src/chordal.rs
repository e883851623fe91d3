//! Closed-form Cholesky MLE on a filled (decomposable) graph.
//!
//! Three routes are provided and cross-check each other:
//! - the per-column formula over filled neighborhoods (`chordal_cholesky_mle`),
//! - the clique/separator closed form (`clique_mle_oracle`),
//! - positive-definite completion followed by dense factorization
//!   (`dense_step1`), used when the filled graph is dense.
//!
//! All matrices here are indexed by ordering positions: callers relabel the
//! covariance into the estimation order first.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fill::FilledGraph;
use crate::matrix::{CholFactor, SymMatrix};

/// Column count past which Step-I columns are computed in parallel.
const PAR_COLUMN_THRESHOLD: usize = 64;

fn check_dims(s: &SymMatrix, fg: &FilledGraph) -> Result<()> {
    if s.p() != fg.p() {
        return Err(Error::input(format!(
            "covariance is {}x{} but the filled graph has {} vertices",
            s.p(),
            s.p(),
            fg.p()
        )));
    }
    Ok(())
}

/// One column of the factor: diagonal entry and the values at `N_j^>`.
fn mle_column(s: &SymMatrix, fg: &FilledGraph, j: usize) -> Result<(f64, Vec<f64>)> {
    let below = fg.below_col(j);
    if below.is_empty() {
        let d = s.get(j, j);
        if !(d > 0.0) {
            return Err(Error::numerical(format!(
                "column {}: diagonal entry {} is not positive",
                j + 1,
                d
            )));
        }
        return Ok((1.0 / d.sqrt(), Vec::new()));
    }
    let sub = s.submatrix(below);
    let q = DVector::from_iterator(below.len(), below.iter().map(|&k| s.get(k, j)));
    let chol = Cholesky::new(sub).ok_or_else(|| {
        Error::numerical(format!(
            "column {}: filled-neighborhood covariance block is singular; \
             a larger sample size is needed",
            j + 1
        ))
    })?;
    let x = chol.solve(&q);
    let d = s.get(j, j) - q.dot(&x);
    if !(d > 0.0) {
        return Err(Error::numerical(format!(
            "column {}: non-positive Schur complement {}; a larger sample size is needed",
            j + 1,
            d
        )));
    }
    let diag = 1.0 / d.sqrt();
    Ok((diag, x.iter().map(|&v| -v * diag).collect()))
}

fn assemble(fg: &FilledGraph, columns: Vec<(f64, Vec<f64>)>) -> CholFactor {
    let p = fg.p();
    let mut l = DMatrix::zeros(p, p);
    for (j, (diag, below)) in columns.into_iter().enumerate() {
        l[(j, j)] = diag;
        for (t, &i) in fg.below_col(j).iter().enumerate() {
            l[(i, j)] = below[t];
        }
    }
    let pattern: Vec<(usize, usize)> = (0..p)
        .flat_map(|j| fg.below_col(j).iter().map(move |&i| (i, j)))
        .collect();
    CholFactor::from_parts(l, pattern).expect("columns respect the filled pattern")
}

/// Step I, column route: the Cholesky factor of the decomposable-model MLE,
/// one closed-form column per vertex. Columns are mutually independent; the
/// within-column reduction order is fixed, so the result does not depend on
/// evaluation order.
pub fn chordal_cholesky_mle(s: &SymMatrix, fg: &FilledGraph) -> Result<CholFactor> {
    check_dims(s, fg)?;
    let p = fg.p();
    let columns: Result<Vec<(f64, Vec<f64>)>> = if p >= PAR_COLUMN_THRESHOLD {
        (0..p)
            .into_par_iter()
            .map(|j| mle_column(s, fg, j))
            .collect()
    } else {
        (0..p).map(|j| mle_column(s, fg, j)).collect()
    };
    Ok(assemble(fg, columns?))
}

/// Maximal cliques of the filled graph with a perfect (running-intersection)
/// sequence and the matching separators, built from the elimination cliques
/// via a maximum-weight spanning forest over pairwise intersections.
pub fn clique_separator_sequence(fg: &FilledGraph) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let p = fg.p();
    // elimination cliques {j} ∪ N_j^>, already sorted ascending
    let mut cands: Vec<Vec<usize>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut k = vec![j];
        k.extend_from_slice(fg.below_col(j));
        cands.push(k);
    }
    let is_strict_subset = |a: &[usize], b: &[usize]| -> bool {
        a.len() < b.len() && a.iter().all(|v| b.binary_search(v).is_ok())
    };
    let cliques: Vec<Vec<usize>> = cands
        .iter()
        .filter(|k| !cands.iter().any(|other| is_strict_subset(k, other)))
        .cloned()
        .collect();

    let m = cliques.len();
    let inter_size = |a: &[usize], b: &[usize]| -> usize {
        a.iter().filter(|v| b.binary_search(v).is_ok()).count()
    };
    let mut in_tree = vec![false; m];
    let mut order: Vec<usize> = Vec::with_capacity(m);
    let mut parent: Vec<Option<usize>> = vec![None; m];
    for root in 0..m {
        if in_tree[root] {
            continue;
        }
        in_tree[root] = true;
        order.push(root);
        loop {
            let mut best: Option<(usize, usize, usize)> = None; // (w, k, t)
            for k in 0..m {
                if in_tree[k] {
                    continue;
                }
                for &t in &order {
                    let w = inter_size(&cliques[k], &cliques[t]);
                    if w > best.map_or(0, |b| b.0) {
                        best = Some((w, k, t));
                    }
                }
            }
            match best {
                Some((_, k, t)) => {
                    in_tree[k] = true;
                    parent[k] = Some(t);
                    order.push(k);
                }
                None => break,
            }
        }
    }
    let sequence: Vec<Vec<usize>> = order.iter().map(|&k| cliques[k].clone()).collect();
    let separators: Vec<Vec<usize>> = order
        .iter()
        .filter_map(|&k| {
            parent[k].map(|t| {
                cliques[k]
                    .iter()
                    .copied()
                    .filter(|v| cliques[t].binary_search(v).is_ok())
                    .collect()
            })
        })
        .collect();
    (sequence, separators)
}

fn inv_padded(s: &SymMatrix, idx: &[usize], sign: f64, acc: &mut DMatrix<f64>) -> Result<()> {
    let sub = s.submatrix(idx);
    let chol = Cholesky::new(sub).ok_or_else(|| {
        Error::numerical(format!(
            "clique submatrix {:?} is singular",
            idx.iter().map(|v| v + 1).collect::<Vec<_>>()
        ))
    })?;
    let inv = chol.inverse();
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            acc[(i, j)] += sign * inv[(a, b)];
        }
    }
    Ok(())
}

/// The decomposable-model MLE by the clique/separator closed form:
/// sum of padded clique-block inverses of S minus the separator terms.
/// Its inverse matches S entrywise on the filled pattern and the diagonal.
pub fn clique_mle_oracle(s: &SymMatrix, fg: &FilledGraph) -> Result<SymMatrix> {
    check_dims(s, fg)?;
    let p = fg.p();
    let (cliques, separators) = clique_separator_sequence(fg);
    let mut acc = DMatrix::zeros(p, p);
    for c in &cliques {
        inv_padded(s, c, 1.0, &mut acc)?;
    }
    for sep in &separators {
        if !sep.is_empty() {
            inv_padded(s, sep, -1.0, &mut acc)?;
        }
    }
    Ok(SymMatrix::mirror_lower(acc))
}

/// The unique positive-definite completion of S over the non-edges of the
/// filled graph: filled-pattern entries (and the diagonal) are kept, every
/// other entry is propagated clique by clique through the separators.
pub fn pd_completion(s: &SymMatrix, fg: &FilledGraph) -> Result<SymMatrix> {
    check_dims(s, fg)?;
    let p = fg.p();
    let (cliques, _) = clique_separator_sequence(fg);
    let mut filled = DMatrix::zeros(p, p);
    for i in 0..p {
        filled[(i, i)] = s.get(i, i);
    }
    for (lo, hi) in fg.edges_filled() {
        filled[(lo, hi)] = s.get(lo, hi);
        filled[(hi, lo)] = s.get(hi, lo);
    }
    let mut hist: Vec<bool> = vec![false; p];
    let mut any_hist = false;
    for c in &cliques {
        if any_hist {
            let sep: Vec<usize> = c.iter().copied().filter(|&v| hist[v]).collect();
            let new: Vec<usize> = c.iter().copied().filter(|&v| !hist[v]).collect();
            let old: Vec<usize> = (0..p)
                .filter(|&v| hist[v] && c.binary_search(&v).is_err())
                .collect();
            if !new.is_empty() && !old.is_empty() && !sep.is_empty() {
                // block = S[new, sep] * S[sep, sep]^{-1} * S[sep, old],
                // read from the partially completed matrix
                let sss = DMatrix::from_fn(sep.len(), sep.len(), |a, b| filled[(sep[a], sep[b])]);
                let chol = Cholesky::new(sss).ok_or_else(|| {
                    Error::numerical("separator covariance block is singular during completion")
                })?;
                let ssb = DMatrix::from_fn(sep.len(), old.len(), |a, b| filled[(sep[a], old[b])]);
                let x = chol.solve(&ssb);
                let sas = DMatrix::from_fn(new.len(), sep.len(), |a, b| filled[(new[a], sep[b])]);
                let blk = sas * x;
                for (a, &i) in new.iter().enumerate() {
                    for (b, &j) in old.iter().enumerate() {
                        filled[(i, j)] = blk[(a, b)];
                        filled[(j, i)] = blk[(a, b)];
                    }
                }
            }
            // disconnected pieces (empty separator) keep zero cross blocks
        }
        for &v in c {
            hist[v] = true;
        }
        any_hist = true;
    }
    Ok(SymMatrix::mirror_lower(filled))
}

/// Step I, dense route: complete S over the filled graph's non-edges, invert,
/// and factor. The factor's structural zeros outside the filled pattern are
/// exact by the perfect-elimination property; dense rounding noise there is
/// cleared to keep the pattern contract.
pub fn dense_step1(s: &SymMatrix, fg: &FilledGraph) -> Result<CholFactor> {
    check_dims(s, fg)?;
    let p = fg.p();
    let completed = pd_completion(s, fg)?;
    let omega = completed.inverse_spd().map_err(|_| {
        Error::numerical(
            "completed covariance is not positive definite; a larger sample size is needed",
        )
    })?;
    let chol = Cholesky::new(omega.as_dmatrix().clone())
        .ok_or_else(|| Error::numerical("completed-model precision is not positive definite"))?;
    let mut l = chol.l();
    let mut pattern = Vec::new();
    for i in 0..p {
        for j in 0..i {
            if fg.has_edge_filled(i, j) {
                pattern.push((i, j));
            } else {
                l[(i, j)] = 0.0;
            }
        }
    }
    CholFactor::from_parts(l, pattern)
        .map_err(|e| Error::numerical(format!("dense factorization failed: {e}")))
}
