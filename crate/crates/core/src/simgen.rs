//! Synthetic truth generation, named graph families, seeded samplers, error
//! metrics, and the benchmark harness.
//!
//! Every generator is a pure function of its parameters and seed (ChaCha12
//! streams). Replication seeds are derived from the base seed with a fixed
//! 64-bit mix (splitmix64), documented at `rep_seed`.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::baselines::{gipf_mle, ipf_mle, InitStrategy, IterativeConfig};
use crate::cca::{cca_estimate, OrderingChoice};
use crate::cov::{sample_covariance, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{CholFactor, SymMatrix};

/// Support tolerance: |Omega_ij| above this is an edge of the truth graph.
pub const SUPPORT_TOL: f64 = 1e-12;

/// A synthetic ground truth: a sparse factor, its precision matrix, and the
/// exact support graph.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub omega_true: SymMatrix,
    pub l_true: CholFactor,
    /// Exact off-diagonal support of `omega_true` (may exceed the factor's
    /// 2p positions because the product couples rows sharing a column).
    pub graph: Graph,
    pub seed: u64,
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random sparse truth: a lower-triangular factor with 2p below-diagonal
/// entries at uniformly random positions, magnitudes U[0.3, 0.7], exactly
/// half the signs negative (rounding down), diagonal U[2, 5];
/// `omega = L L^T`.
pub fn gen_random_model(p: usize, seed: u64) -> Result<SyntheticModel> {
    if p < 2 {
        return Err(Error::input(format!("p must be at least 2, got {p}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let total = p * (p - 1) / 2;
    let k = (2 * p).min(total);

    // draw k distinct linear indices into the strict lower triangle
    let chosen = rand::seq::index::sample(&mut rng, total, k);
    let mut positions: Vec<(usize, usize)> = chosen
        .into_iter()
        .map(|t| {
            // invert t = i(i-1)/2 + j
            let i = ((1.0 + (1.0 + 8.0 * t as f64).sqrt()) / 2.0).floor() as usize;
            let i = if i * (i - 1) / 2 > t { i - 1 } else { i };
            (i, t - i * (i - 1) / 2)
        })
        .collect();
    positions.sort_unstable();

    let negatives = k / 2;
    let mut signs = vec![1.0; k - negatives];
    signs.extend(vec![-1.0; negatives]);
    signs.shuffle(&mut rng);

    let mut l = DMatrix::zeros(p, p);
    for (t, &(i, j)) in positions.iter().enumerate() {
        l[(i, j)] = signs[t] * rng.random_range(0.3..0.7);
    }
    for i in 0..p {
        l[(i, i)] = rng.random_range(2.0..5.0);
    }
    let l_true = CholFactor::from_parts(l, positions)?;
    let omega_true = l_true.product();
    let edges = (0..p).flat_map(|i| {
        let omega = &omega_true;
        (0..i).filter_map(move |j| (omega.get(i, j).abs() > SUPPORT_TOL).then_some((j, i)))
    });
    let graph = Graph::from_edges(p, edges)?;
    Ok(SyntheticModel {
        omega_true,
        l_true,
        graph,
        seed,
    })
}

/// Named graph families used in the worked examples and benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGraph {
    /// a-by-b grid of unit squares: (a+1)(b+1) lattice vertices,
    /// 2ab+a+b edges.
    Grid { a: usize, b: usize },
    /// Cycle on p vertices.
    Cycle { p: usize },
    /// Complete bipartite graph; the part of size m takes the last labels.
    Bipartite { m: usize, p: usize },
    /// Complete multipartite graph with m parts of 3 consecutive labels each.
    Multipartite3 { m: usize },
    /// Complete graph minus the edges (p, p-2) and (p-1, p-3).
    AlmostComplete { p: usize },
}

pub fn gen_named_graph(kind: NamedGraph) -> Result<Graph> {
    match kind {
        NamedGraph::Grid { a, b } => {
            if a == 0 || b == 0 {
                return Err(Error::input("grid sides must be at least 1"));
            }
            let cols = b + 1;
            let p = (a + 1) * cols;
            let mut edges = Vec::new();
            for i in 0..=a {
                for j in 0..=b {
                    let v = i * cols + j;
                    if j < b {
                        edges.push((v, v + 1));
                    }
                    if i < a {
                        edges.push((v, v + cols));
                    }
                }
            }
            Graph::from_edges(p, edges)
        }
        NamedGraph::Cycle { p } => {
            if p < 3 {
                return Err(Error::input("a cycle needs at least 3 vertices"));
            }
            Graph::from_edges(p, (0..p).map(|i| (i, (i + 1) % p)))
        }
        NamedGraph::Bipartite { m, p } => {
            if m == 0 || 2 * m > p {
                return Err(Error::input(format!(
                    "bipartite part sizes need 1 <= m <= p/2, got m = {m}, p = {p}"
                )));
            }
            let split = p - m; // vertices split.. are the m-part
            let edges = (0..split).flat_map(|u| (split..p).map(move |v| (u, v)));
            Graph::from_edges(p, edges)
        }
        NamedGraph::Multipartite3 { m } => {
            if m == 0 {
                return Err(Error::input("multipartite graph needs at least one part"));
            }
            let p = 3 * m;
            let edges = (0..p)
                .flat_map(|u| (0..u).map(move |v| (v, u)))
                .filter(|&(v, u)| v / 3 != u / 3);
            Graph::from_edges(p, edges)
        }
        NamedGraph::AlmostComplete { p } => {
            if p < 4 {
                return Err(Error::input("the almost-complete family needs p >= 4"));
            }
            let edges = (0..p)
                .flat_map(|u| (0..u).map(move |v| (v, u)))
                .filter(|&(v, u)| !(u == p - 1 && v == p - 3) && !(u == p - 2 && v == p - 4));
            Graph::from_edges(p, edges)
        }
    }
}

fn gaussian_rows(model: &SyntheticModel, n: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    let p = model.omega_true.p();
    let l = model.l_true.as_dmatrix();
    let mut x = DMatrix::zeros(n, p);
    let mut z = vec![0.0f64; p];
    for row in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(rng);
        }
        // solve L^T x = z by back substitution
        for i in (0..p).rev() {
            let mut acc = z[i];
            for k in i + 1..p {
                acc -= l[(k, i)] * x[(row, k)];
            }
            x[(row, i)] = acc / l[(i, i)];
        }
    }
    x
}

/// n i.i.d. mean-zero draws with covariance `omega_true^{-1}`, generated by
/// solving `L^T x = z` for standard normal z.
pub fn sample_gaussian(model: &SyntheticModel, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::input("need at least one observation"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    DataMatrix::new(gaussian_rows(model, n, &mut rng), None)
}

pub(crate) fn mvt_rows_with_mixing(
    model: &SyntheticModel,
    n: usize,
    seed: u64,
    mixing: &[f64],
) -> DMatrix<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut x = gaussian_rows(model, n, &mut rng);
    for row in 0..n {
        let scale = 1.0 / mixing[row].sqrt();
        for col in 0..x.ncols() {
            x[(row, col)] *= scale;
        }
    }
    x
}

/// Heavy-tailed draws: Gaussian rows divided by per-row sqrt(chi^2_df / df)
/// mixing variables (scale matrix `omega_true^{-1}`; the population
/// covariance is df/(df-2) times that for df > 2). The Gaussian stream
/// matches `sample_gaussian` for the same seed; the mixing variables come
/// from a separately derived stream.
pub fn sample_mvt(model: &SyntheticModel, df: f64, n: usize, seed: u64) -> Result<DataMatrix> {
    if !(df > 0.0) {
        return Err(Error::input(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if n == 0 {
        return Err(Error::input("need at least one observation"));
    }
    let mut mix_rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ 0x6D76_7400_0000_0001));
    let chi = ChiSquared::new(df).map_err(|e| Error::input(format!("bad df: {e}")))?;
    let mixing: Vec<f64> = (0..n).map(|_| chi.sample(&mut mix_rng) / df).collect();
    DataMatrix::new(mvt_rows_with_mixing(model, n, seed, &mixing), None)
}

/// `||est - truth||_F / ||truth||_F`.
pub fn rel_frobenius_error(est: &SymMatrix, truth: &SymMatrix) -> Result<f64> {
    if est.p() != truth.p() {
        return Err(Error::input("dimension mismatch"));
    }
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::input("truth matrix is zero"));
    }
    Ok((est.as_dmatrix() - truth.as_dmatrix()).norm() / denom)
}

/// Estimation methods the harness can time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Cca,
    Ipf,
    Gipf,
    /// Two-step estimate used to warm-start the row-wise solver; the timing
    /// covers both phases.
    CcaWarmGipf,
}

impl std::str::FromStr for BenchMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cca" => Ok(BenchMethod::Cca),
            "ipf" => Ok(BenchMethod::Ipf),
            "gipf" => Ok(BenchMethod::Gipf),
            "cca_warm_gipf" => Ok(BenchMethod::CcaWarmGipf),
            other => Err(Error::input(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            BenchMethod::Cca => "cca",
            BenchMethod::Ipf => "ipf",
            BenchMethod::Gipf => "gipf",
            BenchMethod::CcaWarmGipf => "cca_warm_gipf",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchDistribution {
    Gaussian,
    /// Multivariate t with 3 degrees of freedom.
    T3,
}

impl std::str::FromStr for BenchDistribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(BenchDistribution::Gaussian),
            "t3" => Ok(BenchDistribution::T3),
            other => Err(Error::input(format!("unknown distribution '{other}'"))),
        }
    }
}

impl std::fmt::Display for BenchDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BenchDistribution::Gaussian => write!(f, "gaussian"),
            BenchDistribution::T3 => write!(f, "t3"),
        }
    }
}

/// One benchmark cell: a (p, n, distribution) setting with methods,
/// replication count, and base seed.
#[derive(Debug, Clone)]
pub struct BenchCell {
    pub p: usize,
    pub n: usize,
    pub dist: BenchDistribution,
    pub methods: Vec<BenchMethod>,
    pub reps: usize,
    pub base_seed: u64,
}

/// One timed estimation run.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: BenchMethod,
    pub p: usize,
    pub n: usize,
    pub dist: BenchDistribution,
    pub seed: u64,
    pub time_seconds: f64,
    pub rel_frob: f64,
}

/// Per-cell means over replications.
#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub method: BenchMethod,
    pub p: usize,
    pub n: usize,
    pub dist: BenchDistribution,
    pub reps: usize,
    pub mean_time_seconds: f64,
    pub mean_rel_frob: f64,
}

/// Replication seed: a fixed mix of the base seed and the replication index.
pub fn rep_seed(base_seed: u64, rep: usize) -> u64 {
    splitmix64(base_seed.wrapping_add(splitmix64(rep as u64 + 1)))
}

fn bench_config() -> IterativeConfig {
    IterativeConfig {
        track_objective: false,
        ..IterativeConfig::default()
    }
}

/// Run every cell: one row per (cell, method, replication). Replications run
/// sequentially so each timing measures an exclusive solver.
pub fn run_benchmark(cells: &[BenchCell]) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for cell in cells {
        if cell.reps == 0 {
            return Err(Error::input("reps must be at least 1"));
        }
        for rep in 0..cell.reps {
            let seed = rep_seed(cell.base_seed, rep);
            let model = gen_random_model(cell.p, splitmix64(seed ^ 1))?;
            let data = match cell.dist {
                BenchDistribution::Gaussian => {
                    sample_gaussian(&model, cell.n, splitmix64(seed ^ 2))?
                }
                BenchDistribution::T3 => sample_mvt(&model, 3.0, cell.n, splitmix64(seed ^ 2))?,
            };
            // the generator is mean-zero, so the uncentered covariance is used
            let s = sample_covariance(&data, false)?;
            for &method in &cell.methods {
                let (elapsed, omega) = match method {
                    BenchMethod::Cca => {
                        let t = Instant::now();
                        let report = cca_estimate(&s, &model.graph, OrderingChoice::Rcm)?;
                        (t.elapsed().as_secs_f64(), report.omega_hat)
                    }
                    BenchMethod::Ipf => {
                        let t = Instant::now();
                        let result = ipf_mle(&s, &model.graph, &bench_config())?;
                        (t.elapsed().as_secs_f64(), result.omega)
                    }
                    BenchMethod::Gipf => {
                        let t = Instant::now();
                        let result = gipf_mle(&s, &model.graph, &bench_config())?;
                        (t.elapsed().as_secs_f64(), result.omega)
                    }
                    BenchMethod::CcaWarmGipf => {
                        let t = Instant::now();
                        let report = cca_estimate(&s, &model.graph, OrderingChoice::Rcm)?;
                        let cfg = IterativeConfig {
                            init: InitStrategy::WarmStart(report.omega_hat),
                            ..bench_config()
                        };
                        let result = gipf_mle(&s, &model.graph, &cfg)?;
                        (t.elapsed().as_secs_f64(), result.omega)
                    }
                };
                rows.push(BenchRow {
                    method,
                    p: cell.p,
                    n: cell.n,
                    dist: cell.dist,
                    seed,
                    time_seconds: elapsed,
                    rel_frob: rel_frobenius_error(&omega, &model.omega_true)?,
                });
            }
        }
    }
    Ok(rows)
}

type CellKey = (String, usize, usize, String);

/// Aggregate rows into per-(method, p, n, dist) means, in first-seen order.
pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut order: Vec<(BenchMethod, usize, usize, BenchDistribution)> = Vec::new();
    let mut acc: std::collections::HashMap<CellKey, (usize, f64, f64)> =
        std::collections::HashMap::new();
    for row in rows {
        let key = (row.method.to_string(), row.p, row.n, row.dist.to_string());
        let entry = acc.entry(key).or_insert((0, 0.0, 0.0));
        if entry.0 == 0 {
            order.push((row.method, row.p, row.n, row.dist));
        }
        entry.0 += 1;
        entry.1 += row.time_seconds;
        entry.2 += row.rel_frob;
    }
    order
        .into_iter()
        .map(|(method, p, n, dist)| {
            let (count, time_sum, err_sum) = acc[&(method.to_string(), p, n, dist.to_string())];
            BenchSummary {
                method,
                p,
                n,
                dist,
                reps: count,
                mean_time_seconds: time_sum / count as f64,
                mean_rel_frob: err_sum / count as f64,
            }
        })
        .collect()
}
