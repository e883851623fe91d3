//! Minimum variance portfolio weights and a rolling-window rebalancing
//! backtest driven by the precision estimator.

use crate::cca::{cca_estimate, OrderingChoice};
use crate::cov::{sample_covariance, threshold_graph, DataMatrix, ThresholdTarget};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SymMatrix;

/// Budget-constrained minimum variance weights `w = Omega 1 / (1' Omega 1)`.
pub fn min_variance_weights(omega: &SymMatrix) -> Result<Vec<f64>> {
    let p = omega.p();
    let mut row_sums = vec![0.0f64; p];
    for (i, sum) in row_sums.iter_mut().enumerate() {
        for j in 0..p {
            *sum += omega.get(i, j);
        }
    }
    let denom: f64 = row_sums.iter().sum();
    if !(denom > 0.0) {
        return Err(Error::numerical(format!(
            "1' Omega 1 = {denom} is not positive; weights are undefined"
        )));
    }
    Ok(row_sums.into_iter().map(|v| v / denom).collect())
}

/// Where the zero pattern for each window comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    /// A fixed graph used for every window.
    Fixed(Graph),
    /// Threshold the window covariance's generalized inverse to hit this
    /// off-diagonal sparsity fraction.
    TargetSparsity(f64),
}

#[derive(Debug, Clone)]
pub struct PortfolioOptions {
    /// Estimation window length in days.
    pub nest: usize,
    /// Holding period between rebalances, in days.
    pub rebalance: usize,
    pub graph: GraphSource,
    pub ordering: OrderingChoice,
}

/// One rebalancing period.
#[derive(Debug, Clone)]
pub struct PeriodResult {
    pub index: usize,
    /// First and last holding day, 1-based inclusive.
    pub start_day: usize,
    pub end_day: usize,
    pub weights: Vec<f64>,
    /// `w' S w` under the estimation-window sample covariance.
    pub est_variance: f64,
    /// Variance of realized portfolio returns over the holding days
    /// (population convention; 0 for a single-day period).
    pub realized_variance: f64,
    /// Edges in the window's selection graph.
    pub graph_edges: usize,
}

#[derive(Debug, Clone)]
pub struct PortfolioReport {
    pub periods: Vec<PeriodResult>,
}

/// Rolling backtest: at each rebalancing point, estimate the precision matrix
/// from the previous `nest` days and hold the minimum variance weights for
/// the next `rebalance` days.
pub fn rolling_portfolio(returns: &DataMatrix, opts: &PortfolioOptions) -> Result<PortfolioReport> {
    let n = returns.n();
    if opts.nest < 2 {
        return Err(Error::input("estimation window must cover at least 2 days"));
    }
    if opts.rebalance == 0 {
        return Err(Error::input("rebalance period must be at least 1 day"));
    }
    if opts.nest >= n {
        return Err(Error::input(format!(
            "estimation window of {} days leaves no holding days out of {}",
            opts.nest, n
        )));
    }
    let mut periods = Vec::new();
    let mut start = opts.nest; // first holding day (0-based)
    let mut index = 0;
    while start < n {
        let end = (start + opts.rebalance).min(n);
        let window = returns.row_window(start - opts.nest, start)?;
        let s = sample_covariance(&window, true)?;
        let graph = match &opts.graph {
            GraphSource::Fixed(g) => {
                if g.p() != returns.p() {
                    return Err(Error::input("graph size does not match the return columns"));
                }
                g.clone()
            }
            GraphSource::TargetSparsity(f) => threshold_graph(&s, ThresholdTarget::Sparsity(*f))?.0,
        };
        let report = cca_estimate(&s, &graph, opts.ordering.clone()).map_err(|e| match e {
            Error::Numerical(msg) => {
                Error::Numerical(format!("window ending day {} failed: {msg}", start))
            }
            other => other,
        })?;
        let weights = min_variance_weights(&report.omega_hat)?;
        let est_variance = {
            let mut acc = 0.0;
            for i in 0..returns.p() {
                for j in 0..returns.p() {
                    acc += weights[i] * s.get(i, j) * weights[j];
                }
            }
            acc
        };
        let realized: Vec<f64> = (start..end)
            .map(|day| {
                (0..returns.p())
                    .map(|j| returns.values()[(day, j)] * weights[j])
                    .sum()
            })
            .collect();
        let mean = realized.iter().sum::<f64>() / realized.len() as f64;
        let realized_variance =
            realized.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / realized.len() as f64;
        periods.push(PeriodResult {
            index,
            start_day: start + 1,
            end_day: end,
            weights,
            est_variance,
            realized_variance,
            graph_edges: graph.edge_count(),
        });
        index += 1;
        start = end;
    }
    Ok(PortfolioReport { periods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn identity_gives_equal_weights() {
        let omega = SymMatrix::identity(5);
        let w = min_variance_weights(&omega).unwrap();
        for wi in &w {
            assert!((wi - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_weights_scale_with_precision() {
        let omega = SymMatrix::from_diagonal(&[1.0, 4.0]);
        let w = min_variance_weights(&omega).unwrap();
        assert!((w[0] - 0.2).abs() < 1e-15);
        assert!((w[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(40, 4, |_, _| rng.random::<f64>() - 0.5);
        let s = SymMatrix::mirror_lower(x.transpose() * &x / 40.0);
        let omega = s.inverse_spd().unwrap();
        let w = min_variance_weights(&omega).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rolling_backtest_produces_periods() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 60;
        let p = 3;
        let x = DMatrix::from_fn(n, p, |_, _| 0.01 * (rng.random::<f64>() - 0.5));
        let returns = DataMatrix::new(x, None).unwrap();
        let g = Graph::from_edges(p, [(0, 1), (1, 2)]).unwrap();
        let opts = PortfolioOptions {
            nest: 30,
            rebalance: 10,
            graph: GraphSource::Fixed(g),
            ordering: OrderingChoice::Rcm,
        };
        let report = rolling_portfolio(&returns, &opts).unwrap();
        assert_eq!(report.periods.len(), 3);
        for period in &report.periods {
            assert!((period.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(period.est_variance >= 0.0);
            assert!(period.realized_variance >= 0.0);
        }
        assert_eq!(report.periods[0].start_day, 31);
        assert_eq!(report.periods[2].end_day, 60);
    }

    #[test]
    fn rolling_backtest_with_selection() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let x = DMatrix::from_fn(50, 4, |_, _| 0.01 * (rng.random::<f64>() - 0.5));
        let returns = DataMatrix::new(x, None).unwrap();
        let opts = PortfolioOptions {
            nest: 40,
            rebalance: 10,
            graph: GraphSource::TargetSparsity(0.5),
            ordering: OrderingChoice::Rcm,
        };
        let report = rolling_portfolio(&returns, &opts).unwrap();
        assert_eq!(report.periods.len(), 1);
        assert!(report.periods[0].graph_edges as f64 <= 0.5 * 6.0);
    }

    #[test]
    fn window_validation() {
        let x = DMatrix::from_element(10, 2, 0.01);
        let returns = DataMatrix::new(x, None).unwrap();
        let opts = PortfolioOptions {
            nest: 10,
            rebalance: 5,
            graph: GraphSource::TargetSparsity(0.5),
            ordering: OrderingChoice::Rcm,
        };
        assert!(rolling_portfolio(&returns, &opts).is_err());
    }
}
