//! Graph diagnostics for the error-propagation factor of the two-step
//! estimator: pattern widths of the filled graph, fill-in dependency sets,
//! and the recursion that bounds how perturbations travel between fill-ins.

use crate::error::{Error, Result};
use crate::fill::FilledGraph;

/// Which form of the propagation recursion to evaluate.
///
/// The two forms differ in a constant offset per step: the `Proof` form is
/// `g(r) = (3/delta) * (2 + sum over dependencies)`, the `MainText` form
/// drops the `2` for `r >= 2`. The proof form dominates and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GRecursionForm {
    Proof,
    MainText,
}

/// Diagnostics packet for one filled graph at an eigenvalue-bound parameter.
#[derive(Debug, Clone)]
pub struct SccaReport {
    /// Product of max column nnz and max row nnz of the filled
    /// lower-triangular pattern, diagonal included.
    pub a_d: u64,
    /// Same product restricted to fill-in entries only (no diagonal term).
    pub a_tilde_d: u64,
    /// Fill-in count.
    pub c: usize,
    /// Dependency sets: for each fill-in (by traversal index), the earlier
    /// fill-ins that enter its update.
    pub fill_dependencies: Vec<Vec<usize>>,
    /// Propagation values, one per fill-in in traversal order.
    pub g_values: Vec<f64>,
    /// The composite quantity
    /// `min(a_d, |E^D|+1) * a_tilde_d * (1 + max g)^2`,
    /// with the trailing factor defined as 1 when there are no fill-ins.
    pub s_cca: f64,
    /// Eigenvalue-bound parameter used.
    pub delta: f64,
    /// Recursion form used for `g_values`.
    pub form: GRecursionForm,
}

/// Dependency sets of the fill-ins in traversal order.
///
/// For the `r`-th fill-in `(i, j)` the set collects every earlier fill-in
/// that appears as `(j, k)` with `(i, k)` in the filled pattern, or as
/// `(i, k)` with `(j, k)` in the filled pattern, over `k < j`.
pub fn fill_dependency_sets(fg: &FilledGraph) -> Vec<Vec<usize>> {
    let fillins = fg.fillins();
    let mut index = std::collections::HashMap::new();
    for (r, &pos) in fillins.iter().enumerate() {
        index.insert(pos, r);
    }
    fillins
        .iter()
        .map(|&(i, j)| {
            let mut deps = Vec::new();
            for k in 0..j {
                if let Some(&r) = index.get(&(j, k)) {
                    if fg.has_edge_filled(i, k) {
                        deps.push(r);
                    }
                }
                if let Some(&r) = index.get(&(i, k)) {
                    if fg.has_edge_filled(j, k) {
                        deps.push(r);
                    }
                }
            }
            deps.sort_unstable();
            deps.dedup();
            deps
        })
        .collect()
}

/// Evaluate the propagation recursion over given dependency sets.
pub fn g_recursion(deps: &[Vec<usize>], delta: f64, form: GRecursionForm) -> Vec<f64> {
    let mut g: Vec<f64> = Vec::with_capacity(deps.len());
    for (r, set) in deps.iter().enumerate() {
        let sum: f64 = set.iter().map(|&t| g[t]).sum();
        let value = match form {
            GRecursionForm::Proof => (3.0 / delta) * (2.0 + sum),
            GRecursionForm::MainText => {
                if r == 0 {
                    6.0 / delta
                } else {
                    (3.0 / delta) * sum
                }
            }
        };
        g.push(value);
    }
    g
}

/// Full diagnostics with the default (proof-form) recursion.
pub fn s_cca_diagnostics(fg: &FilledGraph, delta: f64) -> Result<SccaReport> {
    s_cca_diagnostics_with_form(fg, delta, GRecursionForm::Proof)
}

pub fn s_cca_diagnostics_with_form(
    fg: &FilledGraph,
    delta: f64,
    form: GRecursionForm,
) -> Result<SccaReport> {
    if !(delta > 0.0) {
        return Err(Error::input(format!("delta must be positive, got {delta}")));
    }
    let p = fg.p();

    let max_col = (0..p.saturating_sub(1))
        .map(|j| fg.below_col(j).len())
        .max()
        .unwrap_or(0);
    let max_row = (1..p).map(|i| fg.row_count(i)).max().unwrap_or(0);
    let a_d = (1 + max_col as u64) * (1 + max_row as u64);

    let is_fill = {
        let mut set = std::collections::HashSet::new();
        for &f in fg.fillins() {
            set.insert(f);
        }
        set
    };
    let max_fill_col = (0..p.saturating_sub(1))
        .map(|j| {
            fg.below_col(j)
                .iter()
                .filter(|&&i| is_fill.contains(&(i, j)))
                .count()
        })
        .max()
        .unwrap_or(0);
    let max_fill_row = (1..p)
        .map(|i| {
            fg.row_cols(i)
                .iter()
                .filter(|&&j| is_fill.contains(&(i, j)))
                .count()
        })
        .max()
        .unwrap_or(0);
    let a_tilde_d = max_fill_col as u64 * max_fill_row as u64;

    let fill_dependencies = fill_dependency_sets(fg);
    let g_values = g_recursion(&fill_dependencies, delta, form);

    let step1 = (a_d).min(fg.edge_count_filled() as u64 + 1) as f64;
    let step2 = if g_values.is_empty() {
        1.0
    } else {
        let max_g = g_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        a_tilde_d as f64 * (1.0 + max_g).powi(2)
    };

    Ok(SccaReport {
        a_d,
        a_tilde_d,
        c: fg.fillin_count(),
        fill_dependencies,
        g_values,
        s_cca: step1 * step2,
        delta,
        form,
    })
}
