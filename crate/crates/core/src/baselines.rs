//! Iterative maximum-likelihood baselines for a known zero pattern:
//! clique-based proportional fitting and row-wise block coordinate descent.
//! Both minimize `tr(Omega S) - log det(Omega)` over the pattern-constrained
//! positive definite cone, serve as oracles in tests, and as comparison
//! methods in benchmarks.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{Graph, DEFAULT_CLIQUE_CAP};
use crate::matrix::SymMatrix;

/// Starting point for the sweeps.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// The identity matrix.
    IdentityScaled,
    /// diag(1 / S_ii).
    DiagonalInvS,
    /// A supplied pattern-respecting positive definite estimate
    /// (e.g. the non-iterative two-step estimate).
    WarmStart(SymMatrix),
}

#[derive(Debug, Clone)]
pub struct IterativeConfig {
    /// Convergence threshold: max absolute parameter change per full sweep.
    pub tol: f64,
    /// Sweep cap; hitting it flags the result instead of erroring.
    pub max_iter: usize,
    pub init: InitStrategy,
    /// Cap for the clique enumeration (clique-based fitting only).
    pub clique_cap: usize,
    /// Record the objective after every sweep (costs one factorization per
    /// sweep); the final objective is always reported.
    pub track_objective: bool,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        IterativeConfig {
            tol: 1e-8,
            max_iter: 5000,
            init: InitStrategy::DiagonalInvS,
            clique_cap: DEFAULT_CLIQUE_CAP,
            track_objective: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterativeResult {
    pub omega: SymMatrix,
    /// Completed sweeps.
    pub iterations: usize,
    pub converged: bool,
    /// Max absolute change over the last sweep.
    pub final_delta: f64,
    /// `tr(Omega S) - log det(Omega)` at the returned estimate.
    pub neg_loglik: f64,
    /// Objective at the start and after each sweep (when tracked).
    pub neg_loglik_trace: Vec<f64>,
}

fn validate(cfg: &IterativeConfig) -> Result<()> {
    if !(cfg.tol > 0.0) {
        return Err(Error::input(format!(
            "tol must be positive, got {}",
            cfg.tol
        )));
    }
    if cfg.max_iter == 0 {
        return Err(Error::input("max_iter must be at least 1"));
    }
    Ok(())
}

/// `tr(Omega S) - log det(Omega)`; fails if Omega is not positive definite.
pub fn neg_loglik(omega: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    let p = omega.p();
    let mut trace = 0.0;
    for i in 0..p {
        for j in 0..p {
            trace += omega.get(i, j) * s.get(j, i);
        }
    }
    let chol = Cholesky::new(omega.as_dmatrix().clone())
        .ok_or_else(|| Error::numerical("estimate is not positive definite"))?;
    let logdet: f64 = (0..p).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
    Ok(trace - logdet)
}

fn initial_omega(s: &SymMatrix, g: &Graph, init: &InitStrategy) -> Result<DMatrix<f64>> {
    let p = s.p();
    match init {
        InitStrategy::IdentityScaled => Ok(DMatrix::identity(p, p)),
        InitStrategy::DiagonalInvS => {
            let mut m = DMatrix::zeros(p, p);
            for i in 0..p {
                if !(s.get(i, i) > 0.0) {
                    return Err(Error::input(format!(
                        "covariance diagonal entry {} is not positive",
                        i + 1
                    )));
                }
                m[(i, i)] = 1.0 / s.get(i, i);
            }
            Ok(m)
        }
        InitStrategy::WarmStart(omega0) => {
            if omega0.p() != p {
                return Err(Error::input("warm start dimension mismatch"));
            }
            // the sweeps never touch non-edge positions, so the start must
            // respect the pattern; clear floating-point residue, reject
            // genuine violations
            let scale = omega0.max_abs().max(1.0);
            let mut m = omega0.as_dmatrix().clone();
            for i in 0..p {
                for j in 0..i {
                    if !g.has_edge(i, j) {
                        if m[(i, j)].abs() > 1e-8 * scale {
                            return Err(Error::input(format!(
                                "warm start violates the pattern at ({}, {})",
                                i + 1,
                                j + 1
                            )));
                        }
                        m[(i, j)] = 0.0;
                        m[(j, i)] = 0.0;
                    }
                }
            }
            Ok(m)
        }
    }
}

fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(m.clone())
        .map(|c| c.inverse())
        .ok_or_else(|| Error::numerical("working estimate lost positive definiteness"))
}

/// Clique-based iterative proportional fitting: sweep the maximal cliques,
/// each update fitting the clique marginal exactly:
/// `Omega_CC <- (S_CC)^{-1} + Omega_CC - ((Omega^{-1})_CC)^{-1}`.
pub fn ipf_mle(s: &SymMatrix, g: &Graph, cfg: &IterativeConfig) -> Result<IterativeResult> {
    validate(cfg)?;
    if s.p() != g.p() {
        return Err(Error::input("covariance and graph sizes differ"));
    }
    let p = s.p();
    let cliques = g.maximal_cliques_capped(cfg.clique_cap)?;
    let clique_inverses: Vec<DMatrix<f64>> = cliques
        .iter()
        .map(|c| {
            Cholesky::new(s.submatrix(c))
                .map(|ch| ch.inverse())
                .ok_or_else(|| {
                    Error::numerical(format!(
                        "clique submatrix {:?} of S is singular; a larger sample size is needed",
                        c.iter().map(|v| v + 1).collect::<Vec<_>>()
                    ))
                })
        })
        .collect::<Result<_>>()?;

    let mut omega = initial_omega(s, g, &cfg.init)?;
    let mut trace = Vec::new();
    if cfg.track_objective {
        trace.push(neg_loglik(&SymMatrix::mirror_lower(omega.clone()), s)?);
    }
    let mut iterations = 0;
    let mut converged = false;
    let mut final_delta = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let mut w = spd_inverse(&omega)?;
        let mut delta = 0.0f64;
        for (ci, c) in cliques.iter().enumerate() {
            let idx = c.as_slice();
            let k = idx.len();
            let w_cc = DMatrix::from_fn(k, k, |a, b| w[(idx[a], idx[b])]);
            let w_cc_inv = Cholesky::new(w_cc.clone())
                .map(|ch| ch.inverse())
                .ok_or_else(|| Error::numerical("clique block of the inverse is singular"))?;
            let change = &clique_inverses[ci] - w_cc_inv;
            for a in 0..k {
                for b in 0..k {
                    let d: f64 = change[(a, b)];
                    delta = delta.max(d.abs());
                }
            }
            // apply the block update
            for a in 0..k {
                for b in 0..k {
                    omega[(idx[a], idx[b])] += change[(a, b)];
                }
            }
            // low-rank refresh of W = Omega^{-1}:
            // (Omega + U D U^T)^{-1} = W - W U (I + D W_CC)^{-1} D U^T W
            let wu = {
                let mut m = DMatrix::zeros(p, k);
                for b in 0..k {
                    for i in 0..p {
                        m[(i, b)] = w[(i, idx[b])];
                    }
                }
                m
            };
            let inner = DMatrix::identity(k, k) + &change * &w_cc;
            match inner.lu().try_inverse() {
                Some(inner_inv) => {
                    let k_mat = inner_inv * &change;
                    let correction = &wu * k_mat * wu.transpose();
                    w -= correction;
                }
                None => {
                    w = spd_inverse(&omega)?;
                }
            }
        }
        iterations += 1;
        if cfg.track_objective {
            trace.push(neg_loglik(&SymMatrix::mirror_lower(omega.clone()), s)?);
        }
        final_delta = delta;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    let omega = SymMatrix::mirror_lower(omega);
    let nll = neg_loglik(&omega, s)?;
    Ok(IterativeResult {
        omega,
        iterations,
        converged,
        final_delta,
        neg_loglik: nll,
        neg_loglik_trace: trace,
    })
}

/// Row-wise block coordinate descent on the pattern-constrained likelihood
/// (the known-sparsity, penalty-free relative of the graphical lasso sweep).
/// Each row subproblem is solved exactly in closed form over the row's
/// neighbor set, so the objective is non-increasing by construction.
pub fn gipf_mle(s: &SymMatrix, g: &Graph, cfg: &IterativeConfig) -> Result<IterativeResult> {
    validate(cfg)?;
    if s.p() != g.p() {
        return Err(Error::input("covariance and graph sizes differ"));
    }
    let p = s.p();
    for i in 0..p {
        if !(s.get(i, i) > 0.0) {
            return Err(Error::input(format!(
                "covariance diagonal entry {} is not positive",
                i + 1
            )));
        }
    }

    let mut omega = initial_omega(s, g, &cfg.init)?;
    let mut trace = Vec::new();
    if cfg.track_objective {
        trace.push(neg_loglik(&SymMatrix::mirror_lower(omega.clone()), s)?);
    }
    let mut iterations = 0;
    let mut converged = false;
    let mut final_delta = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let mut w = spd_inverse(&omega)?;
        let mut delta = 0.0f64;
        for j in 0..p {
            let nbrs = g.neighbors(j);
            let k = nbrs.len();
            // A = ((Omega_{-j,-j})^{-1})_{JJ} via block inversion of W
            let a_jj = DMatrix::from_fn(k, k, |x, y| {
                w[(nbrs[x], nbrs[y])] - w[(nbrs[x], j)] * w[(nbrs[y], j)] / w[(j, j)]
            });
            let (u, v) = if k > 0 {
                let q = DVector::from_iterator(k, nbrs.iter().map(|&t| s.get(t, j)));
                let chol = Cholesky::new(a_jj.clone()).ok_or_else(|| {
                    Error::numerical(format!("row {}: neighbor block became singular", j + 1))
                })?;
                let u = chol.solve(&q) * (-1.0 / s.get(j, j));
                let quad = (&a_jj * &u).dot(&u);
                (u, 1.0 / s.get(j, j) + quad)
            } else {
                (DVector::zeros(0), 1.0 / s.get(j, j))
            };

            // symmetric rank-2 change of row/column j
            let mut d = DVector::zeros(p);
            for (t, &nb) in nbrs.iter().enumerate() {
                d[nb] = u[t] - omega[(nb, j)];
            }
            let alpha = v - omega[(j, j)];
            delta = delta.max(alpha.abs());
            for t in 0..k {
                delta = delta.max(d[nbrs[t]].abs());
            }

            for (t, &nb) in nbrs.iter().enumerate() {
                omega[(nb, j)] = u[t];
                omega[(j, nb)] = u[t];
            }
            omega[(j, j)] = v;

            // W update: Omega' = Omega + e_j d^T + d e_j^T + alpha e_j e_j^T
            //         = Omega + U M U^T, U = [e_j, d], M = [[alpha,1],[1,0]]
            // W' = W - (W U) ((M^{-1} + U^T W U)^{-1}) (W U)^T,
            // M^{-1} = [[0,1],[1,-alpha]]
            let wj = w.column(j).into_owned();
            let wd = &w * &d;
            let m00 = w[(j, j)];
            let m01 = wd[j];
            let m11 = d.dot(&wd);
            let k00 = m00;
            let k01 = m01 + 1.0;
            let k11 = m11 - alpha;
            let det = k00 * k11 - k01 * k01;
            if det.abs() < 1e-14 * (k00.abs() + k01.abs() + k11.abs()).max(1.0) {
                w = spd_inverse(&omega)?;
            } else {
                // inverse of [[k00, k01], [k01, k11]]
                let i00 = k11 / det;
                let i01 = -k01 / det;
                let i11 = k00 / det;
                // W -= [wj wd] K [wj wd]^T
                for col in 0..p {
                    let c0 = i00 * wj[col] + i01 * wd[col];
                    let c1 = i01 * wj[col] + i11 * wd[col];
                    for row in 0..p {
                        w[(row, col)] -= wj[row] * c0 + wd[row] * c1;
                    }
                }
            }
        }
        iterations += 1;
        if cfg.track_objective {
            trace.push(neg_loglik(&SymMatrix::mirror_lower(omega.clone()), s)?);
        }
        final_delta = delta;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    let omega = SymMatrix::mirror_lower(omega);
    let nll = neg_loglik(&omega, s)?;
    Ok(IterativeResult {
        omega,
        iterations,
        converged,
        final_delta,
        neg_loglik: nll,
        neg_loglik_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chordal::clique_mle_oracle;
    use crate::fill::filled_graph;
    use crate::graph::parse_graph;
    use crate::order::{apply_ordering, rcm_ordering, VertexOrdering};
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

    fn wishart(p: usize, n: usize, rng: &mut ChaCha12Rng) -> SymMatrix {
        let x = DMatrix::from_fn(n, p, |_, _| {
            let u: f64 = rng.random::<f64>();
            let v: f64 = rng.random::<f64>();
            (-2.0 * u.max(1e-12).ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        });
        SymMatrix::mirror_lower(x.transpose() * &x / n as f64)
    }

    fn assert_monotone(trace: &[f64]) {
        for w in trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()),
                "objective increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn ipf_complete_graph_one_sweep() {
        let g = parse_graph("p 3\n1 2\n1 3\n2 3\n").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let s = wishart(3, 30, &mut rng);
        let result = ipf_mle(&s, &g, &IterativeConfig::default()).unwrap();
        assert!(result.converged);
        assert!(result.iterations <= 2);
        let direct = s.inverse_spd().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((result.omega.get(i, j) - direct.get(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn both_recover_the_four_cycle_truth() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n4 1\n").unwrap();
        let s = paper_omega().inverse_spd().unwrap();
        let cfg = IterativeConfig {
            tol: 1e-10,
            ..IterativeConfig::default()
        };
        for solver in [ipf_mle, gipf_mle] {
            let result = solver(&s, &g, &cfg).unwrap();
            assert!(result.converged);
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (result.omega.get(i, j) - paper_omega().get(i, j)).abs() < 1e-6,
                        "({i},{j})"
                    );
                }
            }
            assert_monotone(&result.neg_loglik_trace);
            // the fitted covariance matches S on every edge and the diagonal
            let sigma_hat = result.omega.inverse_spd().unwrap();
            for i in 0..4 {
                assert!((sigma_hat.get(i, i) - s.get(i, i)).abs() < 1e-7);
            }
            for (u, v) in g.edges() {
                assert!((sigma_hat.get(u, v) - s.get(u, v)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn gipf_edgeless_is_inverse_diagonal() {
        let g = parse_graph("p 3\n").unwrap();
        let s = SymMatrix::from_diagonal(&[2.0, 4.0, 0.5]);
        let result = gipf_mle(&s, &g, &IterativeConfig::default()).unwrap();
        for (i, want) in [0.5, 0.25, 2.0].into_iter().enumerate() {
            assert!((result.omega.get(i, i) - want).abs() < 1e-12);
        }
        assert_eq!(result.omega.get(0, 1), 0.0);
    }

    #[test]
    fn decomposable_graphs_match_the_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for trial in 0..8 {
            let p = 6 + trial;
            // build a decomposable graph: fill a random graph, then use the
            // filled edges under the identity ordering
            let mut edges = Vec::new();
            for i in 0..p {
                for j in 0..i {
                    if rng.random::<f64>() < 0.25 {
                        edges.push((j, i));
                    }
                }
            }
            let g0 = crate::graph::Graph::from_edges(p, edges).unwrap();
            let fg0 = filled_graph(&apply_ordering(&g0, &rcm_ordering(&g0)).unwrap());
            let g = crate::graph::Graph::from_edges(p, fg0.edges_filled()).unwrap();
            let fg = filled_graph(&apply_ordering(&g, &VertexOrdering::identity(p)).unwrap());
            assert_eq!(fg.fillin_count(), 0);

            let s = wishart(p, 3 * p + 5, &mut rng);
            let oracle = clique_mle_oracle(&s, &fg).unwrap();
            let cfg = IterativeConfig {
                tol: 1e-10,
                ..IterativeConfig::default()
            };
            let a = ipf_mle(&s, &g, &cfg).unwrap();
            let b = gipf_mle(&s, &g, &cfg).unwrap();
            let scale = oracle.max_abs();
            for i in 0..p {
                for j in 0..p {
                    assert!(
                        (a.omega.get(i, j) - oracle.get(i, j)).abs() <= 1e-6 * scale,
                        "ipf trial {trial} ({i},{j})"
                    );
                    assert!(
                        (b.omega.get(i, j) - oracle.get(i, j)).abs() <= 1e-6 * scale,
                        "gipf trial {trial} ({i},{j})"
                    );
                }
            }
            assert_monotone(&a.neg_loglik_trace);
            assert_monotone(&b.neg_loglik_trace);
        }
    }

    #[test]
    fn cross_method_agreement_on_nonchordal_graphs() {
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        let g = parse_graph("p 6\n1 2\n2 3\n3 4\n4 5\n5 6\n6 1\n").unwrap();
        let s = wishart(6, 40, &mut rng);
        let cfg = IterativeConfig {
            tol: 1e-10,
            ..IterativeConfig::default()
        };
        let a = ipf_mle(&s, &g, &cfg).unwrap();
        let b = gipf_mle(&s, &g, &cfg).unwrap();
        let gap = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .map(|(i, j)| (a.omega.get(i, j) - b.omega.get(i, j)).abs())
            .fold(0.0f64, f64::max);
        assert!(
            gap <= 10.0 * cfg.tol * a.omega.max_abs().max(1.0),
            "gap {gap}"
        );
        // zeros maintained by construction
        for i in 0..6 {
            for j in 0..i {
                if !g.has_edge(i, j) {
                    assert_eq!(a.omega.get(i, j), 0.0);
                    assert_eq!(b.omega.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn non_convergence_is_flagged_not_fatal() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n4 1\n").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let s = wishart(4, 30, &mut rng);
        let cfg = IterativeConfig {
            max_iter: 1,
            tol: 1e-14,
            ..IterativeConfig::default()
        };
        let result = gipf_mle(&s, &g, &cfg).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn clique_cap_surfaces_resource_error() {
        // complete tripartite 3+3+3: 27 maximal cliques
        let mut edges = Vec::new();
        for u in 0..9 {
            for v in 0..u {
                if u / 3 != v / 3 {
                    edges.push((v, u));
                }
            }
        }
        let g = crate::graph::Graph::from_edges(9, edges).unwrap();
        let s = SymMatrix::identity(9);
        let cfg = IterativeConfig {
            clique_cap: 5,
            ..IterativeConfig::default()
        };
        assert!(matches!(ipf_mle(&s, &g, &cfg), Err(Error::Resource(_))));
    }

    /// Seeded battery: starting from the two-step estimate never needs more
    /// sweeps than the diagonal start.
    #[test]
    fn warm_start_never_increases_sweep_count() {
        use crate::cca::{cca_estimate, OrderingChoice};
        use crate::simgen::{gen_random_model, sample_gaussian};
        for trial in 0..10u64 {
            let p = 10 + 3 * (trial as usize);
            let model = gen_random_model(p, 600 + trial).unwrap();
            let data = sample_gaussian(&model, 3 * p, 700 + trial).unwrap();
            let s = crate::cov::sample_covariance(&data, false).unwrap();
            let estimate = cca_estimate(&s, &model.graph, OrderingChoice::Rcm)
                .unwrap()
                .omega_hat;
            let cfg = IterativeConfig {
                track_objective: false,
                ..IterativeConfig::default()
            };
            let cold = gipf_mle(&s, &model.graph, &cfg).unwrap();
            let warm_cfg = IterativeConfig {
                init: InitStrategy::WarmStart(estimate),
                track_objective: false,
                ..IterativeConfig::default()
            };
            let warm = gipf_mle(&s, &model.graph, &warm_cfg).unwrap();
            assert!(
                warm.iterations <= cold.iterations,
                "trial {trial}: warm {} > cold {}",
                warm.iterations,
                cold.iterations
            );
        }
    }

    #[test]
    fn warm_start_respects_pattern_and_converges_quickly() {
        let g = parse_graph("p 4\n1 2\n2 3\n3 4\n4 1\n").unwrap();
        let s = paper_omega().inverse_spd().unwrap();
        let cold = gipf_mle(&s, &g, &IterativeConfig::default()).unwrap();
        let warm_cfg = IterativeConfig {
            init: InitStrategy::WarmStart(paper_omega()),
            ..IterativeConfig::default()
        };
        let warm = gipf_mle(&s, &g, &warm_cfg).unwrap();
        assert!(warm.iterations <= cold.iterations);

        // a warm start violating the pattern is rejected
        let mut bad = paper_omega().as_dmatrix().clone();
        bad[(2, 0)] = 0.5;
        bad[(0, 2)] = 0.5;
        let bad_cfg = IterativeConfig {
            init: InitStrategy::WarmStart(SymMatrix::from_dense(bad).unwrap()),
            ..IterativeConfig::default()
        };
        assert!(gipf_mle(&s, &g, &bad_cfg).is_err());
    }
}
