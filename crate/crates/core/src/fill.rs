//! Decomposable covers: the filled graph of an ordered graph, its fill-in
//! entries, and the cost model that picks the Step-I computation path.

use std::collections::BTreeSet;

use crate::order::{is_perfect_elimination, OrderedGraph};

/// The filled graph of an ordered graph: the minimal decomposable cover whose
/// edge set contains every Cholesky fill position, produced by the
/// elimination procedure (make each vertex's higher neighborhood a clique).
#[derive(Debug, Clone)]
pub struct FilledGraph {
    base: OrderedGraph,
    edges_filled: BTreeSet<(usize, usize)>,
    /// Fill-in positions `(i, j)` with `i > j`, in row-major lower-triangular
    /// traversal order (`i` ascending, then `j` ascending).
    fillins: Vec<(usize, usize)>,
    /// `N_j^>` per column: higher-position neighbors in the filled graph.
    below_cols: Vec<Vec<usize>>,
    /// Below-diagonal pattern count per row.
    row_counts: Vec<usize>,
    /// Below-diagonal pattern columns per row, sorted.
    row_cols: Vec<Vec<usize>>,
}

impl FilledGraph {
    pub fn p(&self) -> usize {
        self.base.p()
    }

    pub fn base(&self) -> &OrderedGraph {
        &self.base
    }

    /// Filled edges as canonical `(lo, hi)` position pairs.
    pub fn edges_filled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges_filled.iter().copied()
    }

    pub fn edge_count_filled(&self) -> usize {
        self.edges_filled.len()
    }

    pub fn has_edge_filled(&self, i: usize, j: usize) -> bool {
        i != j && self.edges_filled.contains(&(i.min(j), i.max(j)))
    }

    /// Fill-in entries `(row, col)` in the Step-II traversal order.
    pub fn fillins(&self) -> &[(usize, usize)] {
        &self.fillins
    }

    pub fn fillin_count(&self) -> usize {
        self.fillins.len()
    }

    /// `N_j^>`: rows below the diagonal allowed non-zero in column `j`.
    pub fn below_col(&self, j: usize) -> &[usize] {
        &self.below_cols[j]
    }

    /// Number of below-diagonal pattern entries in row `i`.
    pub fn row_count(&self, i: usize) -> usize {
        self.row_counts[i]
    }

    /// Below-diagonal pattern columns of row `i`, sorted ascending.
    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.row_cols[i]
    }

    /// The filled edge set viewed as an ordered graph under the identity
    /// relabeling; always passes `is_perfect_elimination`.
    pub fn as_ordered(&self) -> OrderedGraph {
        use crate::graph::Graph;
        use crate::order::{apply_ordering, VertexOrdering};
        let g = Graph::from_edges(self.p(), self.edges_filled()).expect("valid edges");
        apply_ordering(&g, &VertexOrdering::identity(self.p())).expect("identity fits")
    }
}

/// Compute the filled graph by the elimination procedure: for each position
/// `k` in turn, connect all pairs of its higher-position neighbors.
pub fn filled_graph(og: &OrderedGraph) -> FilledGraph {
    let p = og.p();
    let mut adj = vec![false; p * p];
    for (i, j) in og.edges_sigma() {
        adj[i * p + j] = true;
        adj[j * p + i] = true;
    }
    for k in 0..p.saturating_sub(2) {
        let higher: Vec<usize> = (k + 1..p).filter(|&i| adj[k * p + i]).collect();
        for (a, &i) in higher.iter().enumerate() {
            for &j in &higher[a + 1..] {
                adj[i * p + j] = true;
                adj[j * p + i] = true;
            }
        }
    }
    let mut edges_filled = BTreeSet::new();
    let mut fillins = Vec::new();
    for i in 0..p {
        for j in 0..i {
            if adj[i * p + j] {
                edges_filled.insert((j, i));
                if !og.has_edge_sigma(i, j) {
                    fillins.push((i, j));
                }
            }
        }
    }
    let below_cols: Vec<Vec<usize>> = (0..p)
        .map(|j| (j + 1..p).filter(|&i| adj[i * p + j]).collect())
        .collect();
    let row_cols: Vec<Vec<usize>> = (0..p)
        .map(|i| (0..i).filter(|&j| adj[i * p + j]).collect())
        .collect();
    let row_counts = row_cols.iter().map(Vec::len).collect();
    let fg = FilledGraph {
        base: og.clone(),
        edges_filled,
        fillins,
        below_cols,
        row_counts,
        row_cols,
    };
    debug_assert!(is_perfect_elimination(&fg.as_ordered()));
    fg
}

/// Which route Step I takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step1Path {
    /// Per-column closed form over the filled neighborhoods.
    ColumnFormula,
    /// Positive-definite completion followed by dense factorization.
    Dense,
}

impl std::fmt::Display for Step1Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Step1Path::ColumnFormula => write!(f, "column"),
            Step1Path::Dense => write!(f, "dense"),
        }
    }
}

/// Cost model for one estimation run on a filled graph.
#[derive(Debug, Clone)]
pub struct CostReport {
    /// Step-I column-formula cost driver.
    pub sum_nj_cubed: u128,
    /// Step-II cost driver `p * |fill-ins|`.
    pub step2_cost: u128,
    /// Dense-route cost driver.
    pub p_cubed: u128,
    /// Filled edge count.
    pub edges_filled: usize,
    /// Dense-path threshold `p^(5/3)`.
    pub dense_threshold: f64,
    /// Chosen path: column formula while `|E^D| <= p^(5/3)`, dense beyond.
    pub path: Step1Path,
}

/// Evaluate the cost drivers and pick the Step-I path.
pub fn complexity_estimate(fg: &FilledGraph) -> CostReport {
    let p = fg.p();
    let sum_nj_cubed = (0..p).map(|j| (fg.below_col(j).len() as u128).pow(3)).sum();
    let threshold = (p as f64).powf(5.0 / 3.0);
    let path = if fg.edge_count_filled() as f64 <= threshold {
        Step1Path::ColumnFormula
    } else {
        Step1Path::Dense
    };
    CostReport {
        sum_nj_cubed,
        step2_cost: p as u128 * fg.fillin_count() as u128,
        p_cubed: (p as u128).pow(3),
        edges_filled: fg.edge_count_filled(),
        dense_threshold: threshold,
        path,
    }
}
