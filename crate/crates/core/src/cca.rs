//! The two-step estimator: Step-II fill-in adjustment, the full pipeline
//! (ordering, fill, Step I, Step II, per connected component), and membership
//! verification for the produced estimates.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::chordal::{chordal_cholesky_mle, dense_step1};
use crate::error::{Error, Result};
use crate::fill::{complexity_estimate, filled_graph, FilledGraph, Step1Path};
use crate::graph::Graph;
use crate::matrix::{CholFactor, SymMatrix};
use crate::order::{apply_ordering, rcm_ordering, OrderedGraph, VertexOrdering};

/// How the estimation ordering is chosen.
#[derive(Debug, Clone)]
pub enum OrderingChoice {
    /// Keep the original labels (time- or location-ordered data).
    Natural,
    /// Fill-reducing reverse Cuthill-McKee ordering (the default).
    Rcm,
    /// Caller-supplied ordering over the whole vertex set.
    Explicit(VertexOrdering),
}

/// Step-I route selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathChoice {
    /// Follow the cost model's threshold rule.
    #[default]
    Auto,
    ColumnFormula,
    Dense,
}

#[derive(Debug, Clone, Default)]
pub struct EstimateOptions {
    pub path: PathChoice,
}

/// Wall time per pipeline phase, in seconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub ordering: f64,
    pub fill: f64,
    pub step1: f64,
    pub step2: f64,
}

/// Estimate plus diagnostics.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// The precision estimate in the original vertex labels.
    pub omega_hat: SymMatrix,
    /// Its Cholesky factor in estimation coordinates (block lower triangular,
    /// one block per connected component).
    pub l_hat: CholFactor,
    /// Original label -> estimation position; relates the two:
    /// `omega_hat[u][v] = (l_hat l_hat^T)[sigma(u)][sigma(v)]`.
    pub ordering: VertexOrdering,
    pub min_eigenvalue: f64,
    /// Max |omega_hat| over non-edges of the input graph (off-diagonal).
    pub max_nonedge_abs: f64,
    pub timings: PhaseTimings,
    /// Dense if any component took the dense Step-I route.
    pub path: Step1Path,
    pub fillin_count: usize,
    pub components: usize,
}

/// Step II: one pass over the fill-in entries in traversal order, resetting
/// each so the assembled precision matrix is zero there. Diagonal and
/// original-edge entries are returned bit-identical to the input.
pub fn cca_adjust(ld: &CholFactor, og: &OrderedGraph, fg: &FilledGraph) -> Result<CholFactor> {
    if ld.p() != fg.p() || og.p() != fg.p() {
        return Err(Error::input(
            "factor, ordered graph, and filled graph sizes differ",
        ));
    }
    for &(i, j) in ld.pattern() {
        if !fg.has_edge_filled(i, j) {
            return Err(Error::input(format!(
                "factor pattern entry ({}, {}) lies outside the filled graph",
                i + 1,
                j + 1
            )));
        }
    }
    let mut out = ld.clone();
    let l = out.values_mut();
    for &(i, j) in fg.fillins() {
        // sum over k < j with both (i,k) and (j,k) in the filled pattern;
        // all other terms have a structural zero factor
        let row_i = fg.row_cols(i);
        let row_j = fg.row_cols(j);
        let mut sum = 0.0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < row_i.len() && b < row_j.len() {
            let (ka, kb) = (row_i[a], row_j[b]);
            if ka >= j {
                break;
            }
            match ka.cmp(&kb) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += l[(i, ka)] * l[(j, ka)];
                    a += 1;
                    b += 1;
                }
            }
        }
        l[(i, j)] = -sum / l[(j, j)];
    }
    Ok(out)
}

/// The Step-II target: sum of squared deviations from the intermediate
/// factor over original edges and the diagonal.
pub fn step2_objective(l: &CholFactor, ld: &CholFactor, og: &OrderedGraph) -> Result<f64> {
    if l.p() != ld.p() || l.p() != og.p() {
        return Err(Error::input("dimension mismatch"));
    }
    let mut h = 0.0;
    for i in 0..l.p() {
        let d = ld.get(i, i) - l.get(i, i);
        h += d * d;
    }
    for (lo, hi) in og.edges_sigma() {
        let d = ld.get(hi, lo) - l.get(hi, lo);
        h += d * d;
    }
    Ok(h)
}

/// Outcome of a membership check against an ordered graph's pattern.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub min_eigenvalue: f64,
    pub max_offpattern_abs: f64,
    pub max_abs: f64,
    pub worst_position: Option<(usize, usize)>,
    pub tol: f64,
    pub pass: bool,
}

/// Report the minimum eigenvalue and the largest off-pattern magnitude of
/// `omega` (indexed like the ordered graph's positions). Passes iff the
/// matrix is positive definite and every off-pattern entry is at most
/// `tol * max|omega|`.
pub fn verify_membership(
    omega: &SymMatrix,
    og: &OrderedGraph,
    tol: f64,
) -> Result<MembershipReport> {
    if !(tol > 0.0) {
        return Err(Error::input(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if omega.p() != og.p() {
        return Err(Error::input("matrix and graph sizes differ"));
    }
    let p = omega.p();
    let mut worst = 0.0f64;
    let mut worst_pos = None;
    for i in 0..p {
        for j in 0..i {
            if !og.has_edge_sigma(i, j) {
                let v = omega.get(i, j).abs();
                if v > worst {
                    worst = v;
                    worst_pos = Some((i, j));
                }
            }
        }
    }
    let min_eigenvalue = omega.min_eigenvalue();
    let max_abs = omega.max_abs();
    Ok(MembershipReport {
        min_eigenvalue,
        max_offpattern_abs: worst,
        max_abs,
        worst_position: worst_pos,
        tol,
        pass: min_eigenvalue > 0.0 && worst <= tol * max_abs,
    })
}

/// Run the full pipeline with default options.
pub fn cca_estimate(s: &SymMatrix, g: &Graph, ordering: OrderingChoice) -> Result<EstimateReport> {
    cca_estimate_with_options(s, g, ordering, &EstimateOptions::default())
}

/// Full pipeline: per connected component, order, fill, Step I (route per
/// the cost model unless overridden), Step II, then assemble the block
/// result in original labels with exact zeros across components.
pub fn cca_estimate_with_options(
    s: &SymMatrix,
    g: &Graph,
    ordering: OrderingChoice,
    opts: &EstimateOptions,
) -> Result<EstimateReport> {
    let p = g.p();
    if s.p() != p {
        return Err(Error::input(format!(
            "covariance is {}x{} but the graph has {} vertices",
            s.p(),
            s.p(),
            p
        )));
    }
    for i in 0..p {
        if !(s.get(i, i) > 0.0) {
            return Err(Error::input(format!(
                "covariance diagonal entry {} is not positive",
                i + 1
            )));
        }
    }

    let mut timings = PhaseTimings::default();
    let t0 = Instant::now();
    let components = g.connected_components();
    let mut component_orderings: Vec<VertexOrdering> = Vec::with_capacity(components.len());
    let mut subgraphs: Vec<Graph> = Vec::with_capacity(components.len());
    for comp in &components {
        let sub = g.induced_subgraph(comp)?;
        let sigma = match &ordering {
            OrderingChoice::Natural => VertexOrdering::identity(comp.len()),
            OrderingChoice::Rcm => rcm_ordering(&sub),
            OrderingChoice::Explicit(full) => {
                if full.p() != p {
                    return Err(Error::input(format!(
                        "explicit ordering has {} entries but the graph has {} vertices",
                        full.p(),
                        p
                    )));
                }
                // induced relative ranks within the component
                let mut locals: Vec<usize> = (0..comp.len()).collect();
                locals.sort_by_key(|&t| full.position_of(comp[t]));
                VertexOrdering::from_sequence(locals)?
            }
        };
        component_orderings.push(sigma);
        subgraphs.push(sub);
    }
    timings.ordering = t0.elapsed().as_secs_f64();

    let mut global_positions = vec![0usize; p];
    let mut offset = 0usize;
    let mut omega = DMatrix::zeros(p, p);
    let mut l_global = DMatrix::zeros(p, p);
    let mut pattern_global: Vec<(usize, usize)> = Vec::new();
    let mut fillin_count = 0usize;
    let mut any_dense = false;

    for (c, comp) in components.iter().enumerate() {
        let m = comp.len();
        let sigma = &component_orderings[c];
        let ctx = |e: Error| -> Error {
            match e {
                Error::Numerical(msg) => Error::Numerical(format!(
                    "component {} (vertices {}..{}): {}",
                    c + 1,
                    comp[0] + 1,
                    comp[m - 1] + 1,
                    msg
                )),
                other => other,
            }
        };

        let t_fill = Instant::now();
        let og = apply_ordering(&subgraphs[c], sigma)?;
        let fg = filled_graph(&og);
        let cost = complexity_estimate(&fg);
        timings.fill += t_fill.elapsed().as_secs_f64();

        // covariance block in estimation position order
        let orig_at = |pos: usize| comp[sigma.vertex_at(pos)];
        let s_local =
            SymMatrix::mirror_lower(DMatrix::from_fn(m, m, |a, b| s.get(orig_at(a), orig_at(b))));

        let path = match opts.path {
            PathChoice::Auto => cost.path,
            PathChoice::ColumnFormula => Step1Path::ColumnFormula,
            PathChoice::Dense => Step1Path::Dense,
        };
        let t1 = Instant::now();
        let ld = match path {
            Step1Path::ColumnFormula => chordal_cholesky_mle(&s_local, &fg).map_err(ctx)?,
            Step1Path::Dense => dense_step1(&s_local, &fg).map_err(ctx)?,
        };
        timings.step1 += t1.elapsed().as_secs_f64();
        if path == Step1Path::Dense {
            any_dense = true;
        }

        let t2 = Instant::now();
        let l = cca_adjust(&ld, &og, &fg).map_err(ctx)?;
        timings.step2 += t2.elapsed().as_secs_f64();
        fillin_count += fg.fillin_count();

        let local_omega = l.product();
        for a in 0..m {
            for b in 0..m {
                omega[(orig_at(a), orig_at(b))] = local_omega.get(a, b);
            }
        }
        for a in 0..m {
            global_positions[orig_at(a)] = offset + a;
            for b in 0..=a {
                l_global[(offset + a, offset + b)] = l.get(a, b);
            }
        }
        for &(i, j) in l.pattern() {
            pattern_global.push((offset + i, offset + j));
        }
        offset += m;
    }

    let omega_hat = SymMatrix::mirror_lower(omega);
    let l_hat = CholFactor::from_parts(l_global, pattern_global)
        .map_err(|e| Error::numerical(format!("assembled factor invalid: {e}")))?;
    let ordering = VertexOrdering::from_positions(global_positions)?;

    let mut max_nonedge = 0.0f64;
    for i in 0..p {
        for j in 0..i {
            if !g.has_edge(i, j) {
                max_nonedge = max_nonedge.max(omega_hat.get(i, j).abs());
            }
        }
    }

    Ok(EstimateReport {
        min_eigenvalue: omega_hat.min_eigenvalue(),
        max_nonedge_abs: max_nonedge,
        omega_hat,
        l_hat,
        ordering,
        timings,
        path: if any_dense {
            Step1Path::Dense
        } else {
            Step1Path::ColumnFormula
        },
        fillin_count,
        components: components.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn paper_omega() -> SymMatrix {
        SymMatrix::from_dense(DMatrix::from_row_slice(
            4,
            4,
            &[
                3.0, 1.0, 0.0, 1.0, 1.0, 3.0, 1.0, 0.0, 0.0, 1.0, 3.0, 2.0, 1.0, 0.0, 2.0, 3.0,
            ],
        ))
        .unwrap()
    }

    fn four_cycle() -> Graph {
        parse_graph("p 4\n1 2\n2 3\n3 4\n4 1\n").unwrap()
    }

    fn wishart(p: usize, n: usize, rng: &mut ChaCha12Rng) -> SymMatrix {
        let x = DMatrix::from_fn(n, p, |_, _| {
            let u: f64 = rng.random::<f64>();
            let v: f64 = rng.random::<f64>();
            (-2.0 * u.max(1e-12).ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        });
        SymMatrix::mirror_lower(x.transpose() * &x / n as f64)
    }

    #[test]
    fn adjust_recomputes_zeroed_fillin() {
        let g = four_cycle();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        let fg = filled_graph(&og);
        let s = paper_omega().inverse_spd().unwrap();
        let ld = chordal_cholesky_mle(&s, &fg).unwrap();
        // zero the (4,2) entry, then let Step II restore it
        let mut blanked = ld.clone();
        blanked.values_mut()[(3, 1)] = 0.0;
        let adjusted = cca_adjust(&blanked, &og, &fg).unwrap();
        let want = -(adjusted.get(3, 0) * adjusted.get(1, 0)) / adjusted.get(1, 1);
        assert_eq!(adjusted.get(3, 1), want);
        assert!((adjusted.get(3, 1) - (-0.204)).abs() < 1e-3);
    }

    #[test]
    fn adjust_without_fillins_is_identity_bitwise() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n").unwrap();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        let fg = filled_graph(&og);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let s = wishart(4, 20, &mut rng);
        let ld = chordal_cholesky_mle(&s, &fg).unwrap();
        let out = cca_adjust(&ld, &og, &fg).unwrap();
        for i in 0..4 {
            for j in 0..=i {
                assert_eq!(out.get(i, j).to_bits(), ld.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn adjust_zeroes_nonedges_of_five_cycle() {
        let g = parse_graph("p 5\n1 2\n2 3\n3 4\n4 5\n5 1\n").unwrap();
        let sigma = rcm_ordering(&g);
        let og = apply_ordering(&g, &sigma).unwrap();
        let fg = filled_graph(&og);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        // relabel a random covariance into estimation order
        let s = wishart(5, 25, &mut rng);
        let ld = chordal_cholesky_mle(&s, &fg).unwrap();
        let l = cca_adjust(&ld, &og, &fg).unwrap();
        // brute-force product: zero at every non-edge position
        let prod = l.product();
        for i in 0..5 {
            for j in 0..i {
                if !og.has_edge_sigma(i, j) {
                    assert!(
                        prod.get(i, j).abs() <= 1e-12 * prod.max_abs(),
                        "({i},{j}) leaked: {}",
                        prod.get(i, j)
                    );
                }
            }
        }
        // invariance at edges and diagonal, bitwise
        for i in 0..5 {
            assert_eq!(l.get(i, i).to_bits(), ld.get(i, i).to_bits());
        }
        for (lo, hi) in og.edges_sigma() {
            assert_eq!(l.get(hi, lo).to_bits(), ld.get(hi, lo).to_bits());
        }
    }

    #[test]
    fn step2_objective_examples() {
        let g = four_cycle();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        let fg = filled_graph(&og);
        let s = paper_omega().inverse_spd().unwrap();
        let ld = chordal_cholesky_mle(&s, &fg).unwrap();
        assert_eq!(step2_objective(&ld, &ld, &og).unwrap(), 0.0);

        let adjusted = cca_adjust(&ld, &og, &fg).unwrap();
        assert_eq!(step2_objective(&adjusted, &ld, &og).unwrap(), 0.0);

        // +1 at one original-edge position -> objective exactly 1
        let mut perturbed = ld.clone();
        perturbed.values_mut()[(1, 0)] += 1.0;
        assert!((step2_objective(&perturbed, &ld, &og).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verify_membership_examples() {
        let g = four_cycle();
        let og = apply_ordering(&g, &VertexOrdering::identity(4)).unwrap();
        let omega = paper_omega();
        let report = verify_membership(&omega, &og, 1e-10).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_offpattern_abs, 0.0);
        assert!(report.min_eigenvalue > 0.0);

        let identity = SymMatrix::identity(4);
        assert!(verify_membership(&identity, &og, 1e-10).unwrap().pass);

        // a 1e-3 leak at a non-edge fails at tol 1e-10 and names the spot
        let mut leaky = omega.as_dmatrix().clone();
        leaky[(2, 0)] = 1e-3;
        leaky[(0, 2)] = 1e-3;
        let leaky = SymMatrix::from_dense(leaky).unwrap();
        let report = verify_membership(&leaky, &og, 1e-10).unwrap();
        assert!(!report.pass);
        assert_eq!(report.worst_position, Some((2, 0)));
    }

    #[test]
    fn estimate_identity_covariance() {
        let g = four_cycle();
        let s = SymMatrix::identity(4);
        let report = cca_estimate(&s, &g, OrderingChoice::Rcm).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((report.omega_hat.get(i, j) - want).abs() < 1e-12);
                assert!((report.l_hat.get(i.min(j), j.min(i)) - 0.0).abs() < 2.0);
            }
        }
        assert_eq!(report.fillin_count, 1);
    }

    #[test]
    fn estimate_recovers_paper_omega() {
        let g = four_cycle();
        let s = paper_omega().inverse_spd().unwrap();
        for ordering in [OrderingChoice::Natural, OrderingChoice::Rcm] {
            let report = cca_estimate(&s, &g, ordering).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (report.omega_hat.get(i, j) - paper_omega().get(i, j)).abs() < 1e-8,
                        "({i},{j})"
                    );
                }
            }
            assert!(report.min_eigenvalue > 0.0);
            assert!(report.max_nonedge_abs <= 1e-12);
        }
    }

    #[test]
    fn estimate_handles_disconnected_graphs() {
        // 4-cycle plus an isolated edge and an isolated vertex
        let g = parse_graph("p 7\n1 2\n2 3\n3 4\n4 1\n5 6\n").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let s = wishart(7, 40, &mut rng);
        let report = cca_estimate(&s, &g, OrderingChoice::Rcm).unwrap();
        assert_eq!(report.components, 3);
        // cross-component entries are exactly zero
        for i in 4..7 {
            for j in 0..4 {
                assert_eq!(report.omega_hat.get(i, j), 0.0);
            }
        }
        assert_eq!(report.omega_hat.get(6, 4), 0.0);
        assert_eq!(report.omega_hat.get(6, 5), 0.0);
        // the report invariant: omega in original labels matches the factor
        // through the stored ordering
        let prod = report.l_hat.product();
        let sig = &report.ordering;
        for u in 0..7 {
            for v in 0..7 {
                let got = prod.get(sig.position_of(u), sig.position_of(v));
                assert!(
                    (report.omega_hat.get(u, v) - got).abs()
                        <= 1e-10 * report.omega_hat.max_abs().max(1.0)
                );
            }
        }
        // isolated vertex: precision entry is 1/S_ii
        assert!(
            (report.omega_hat.get(6, 6) - 1.0 / s.get(6, 6)).abs()
                < 1e-12 * (1.0 / s.get(6, 6)).abs()
        );
    }

    #[test]
    fn estimate_idempotent_on_feasible_input() {
        // if S^{-1} already has the pattern, the estimate returns it
        let g = four_cycle();
        let s = paper_omega().inverse_spd().unwrap();
        let report = cca_estimate(&s, &g, OrderingChoice::Natural).unwrap();
        let err: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| (report.omega_hat.get(i, j) - paper_omega().get(i, j)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8);
    }

    #[test]
    fn estimate_rejects_bad_inputs() {
        let g = four_cycle();
        let s = SymMatrix::identity(3);
        assert!(matches!(
            cca_estimate(&s, &g, OrderingChoice::Rcm),
            Err(Error::Input(_))
        ));
        let mut bad = DMatrix::identity(4, 4);
        bad[(2, 2)] = 0.0;
        let s = SymMatrix::from_dense(bad).unwrap();
        let err = cca_estimate(&s, &g, OrderingChoice::Rcm).unwrap_err();
        assert!(err.to_string().contains('3'), "{err}");
    }

    #[test]
    fn cycle_fillins_match_closed_form_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for p in 5..=12 {
            let g = Graph::from_edges(p, (0..p).map(|i| (i, (i + 1) % p))).unwrap();
            let sigma = rcm_ordering(&g);
            let og = apply_ordering(&g, &sigma).unwrap();
            let fg = filled_graph(&og);
            let s = wishart(p, 3 * p, &mut rng);
            let ld = chordal_cholesky_mle(&s, &fg).unwrap();
            let l = cca_adjust(&ld, &og, &fg).unwrap();
            // closed form (1-based): L[i][i-1] =
            // (-1)^(i-2) L[i][i-2] (L[2][1]/L[2][2]) prod_{j=3}^{i-1} L[j][j-2]/L[j][j]
            for &(i0, j0) in fg.fillins() {
                assert_eq!(j0, i0 - 1);
                let i = i0 + 1;
                let sign = if (i - 2) % 2 == 0 { 1.0 } else { -1.0 };
                let mut value = sign * l.get(i0, i0 - 2) * (l.get(1, 0) / l.get(1, 1));
                for j in 3..i {
                    value *= l.get(j - 1, j - 3) / l.get(j - 1, j - 1);
                }
                assert!(
                    (value - l.get(i0, j0)).abs() <= 1e-10 * l.as_dmatrix().amax(),
                    "p = {p}, fill ({i0},{j0}): {} vs {}",
                    l.get(i0, j0),
                    value
                );
            }
        }
    }

    #[test]
    fn estimate_scaling_equivariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(123);
        let g = parse_graph("p 6\n1 2\n2 3\n3 4\n4 5\n5 6\n6 1\n1 4\n").unwrap();
        let s = wishart(6, 30, &mut rng);
        let d: Vec<f64> = (0..6).map(|_| 0.5 + 1.5 * rng.random::<f64>()).collect();
        let scaled =
            SymMatrix::mirror_lower(DMatrix::from_fn(6, 6, |i, j| d[i] * s.get(i, j) * d[j]));
        let base = cca_estimate(&s, &g, OrderingChoice::Rcm).unwrap();
        let scaled_rep = cca_estimate(&scaled, &g, OrderingChoice::Rcm).unwrap();
        let scale = base.omega_hat.max_abs();
        for i in 0..6 {
            for j in 0..6 {
                let want = base.omega_hat.get(i, j) / (d[i] * d[j]);
                assert!(
                    (scaled_rep.omega_hat.get(i, j) - want).abs() <= 1e-10 * scale,
                    "({i},{j})"
                );
            }
        }
    }
}
