//! `cca`: estimate a positive definite precision matrix under a fixed zero
//! pattern without iteration, run the iterative MLE baselines, inspect
//! orderings and fill, compute pattern diagnostics, benchmark the methods,
//! and backtest a minimum variance portfolio.
//!
//! Exit codes: 0 success, 2 input/resource error, 3 numerical failure.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cca_core::baselines::{gipf_mle, ipf_mle, InitStrategy, IterativeConfig};
use cca_core::cca::{
    cca_estimate_with_options, verify_membership, EstimateOptions, EstimateReport, OrderingChoice,
    PathChoice,
};
use cca_core::cov::{sample_covariance, threshold_graph, ThresholdTarget};
use cca_core::error::Error;
use cca_core::fill::{complexity_estimate, filled_graph};
use cca_core::graph::{parse_graph, Graph};
use cca_core::io::{
    format_csv_matrix, format_ordering, format_triplets, read_csv_data, read_ordering,
    read_sym_matrix,
};
use cca_core::matrix::SymMatrix;
use cca_core::order::{apply_ordering, rcm_ordering, VertexOrdering};
use cca_core::portfolio::{rolling_portfolio, GraphSource, PortfolioOptions};
use cca_core::scca::{s_cca_diagnostics_with_form, GRecursionForm};
use cca_core::simgen::{run_benchmark, summarize, BenchCell, BenchDistribution, BenchMethod};

use report::{Format, Report};

#[derive(Parser)]
#[command(
    name = "cca",
    version,
    about = "Precision matrix estimation under a fixed zero pattern"
)]
struct Cli {
    /// Worker threads for column-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report format (the matrix outputs are unaffected).
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Non-iterative positive definite estimation under a given pattern.
    Estimate(EstimateArgs),
    /// Iterative maximum-likelihood baselines (clique fitting / row sweeps).
    Mle(MleArgs),
    /// Compute and print a vertex ordering.
    Order(OrderArgs),
    /// Fill analysis: the decomposable cover and its fill-in entries.
    Fill(FillArgs),
    /// Pattern diagnostics for the error-propagation factor.
    Scca(SccaArgs),
    /// Synthetic benchmark over (p, n, distribution) cells.
    Bench(BenchArgs),
    /// Rolling-window minimum variance portfolio backtest.
    Portfolio(PortfolioArgs),
}

#[derive(Args)]
struct CovInput {
    /// Observations CSV (rows = observations; header auto-detected).
    #[arg(long, value_name = "FILE", conflicts_with = "cov")]
    data: Option<PathBuf>,
    /// Covariance matrix file (dense CSV or %-headed triplets).
    #[arg(long, value_name = "FILE")]
    cov: Option<PathBuf>,
    /// Skip mean-centering when computing the covariance from --data.
    /// The covariance always uses the 1/n divisor.
    #[arg(long)]
    no_center: bool,
}

impl CovInput {
    fn load(&self) -> Result<SymMatrix, Error> {
        match (&self.data, &self.cov) {
            (Some(path), None) => {
                let data = read_csv_data(&read_text(path)?)?;
                sample_covariance(&data, !self.no_center)
            }
            (None, Some(path)) => read_sym_matrix(&read_text(path)?),
            (None, None) => Err(Error::input("one of --data or --cov is required")),
            (Some(_), Some(_)) => unreachable!("clap rejects the conflict"),
        }
    }
}

#[derive(Args)]
struct GraphInput {
    /// Edge-list file ('p <count>' header, 1-based 'i j' lines).
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Select the graph by thresholding the covariance's generalized inverse
    /// at this absolute magnitude.
    #[arg(long, value_name = "TAU", conflicts_with = "graph")]
    select_threshold: Option<f64>,
    /// Select the graph so the off-diagonal sparsity reaches this fraction.
    #[arg(
        long,
        value_name = "F",
        conflicts_with_all = ["graph", "select_threshold"]
    )]
    select_sparsity: Option<f64>,
}

impl GraphInput {
    fn load(&self, s: &SymMatrix) -> Result<(Graph, Option<f64>), Error> {
        match (&self.graph, self.select_threshold, self.select_sparsity) {
            (Some(path), None, None) => Ok((parse_graph(&read_text(path)?)?, None)),
            (None, Some(tau), None) => {
                let (g, tau) = threshold_graph(s, ThresholdTarget::Absolute(tau))?;
                Ok((g, Some(tau)))
            }
            (None, None, Some(f)) => {
                let (g, tau) = threshold_graph(s, ThresholdTarget::Sparsity(f))?;
                Ok((g, Some(tau)))
            }
            (None, None, None) => Err(Error::input(
                "one of --graph, --select-threshold, or --select-sparsity is required",
            )),
            _ => unreachable!("clap rejects the conflicts"),
        }
    }
}

fn parse_ordering_choice(value: &str, p: usize) -> Result<OrderingChoice, Error> {
    match value {
        "rcm" => Ok(OrderingChoice::Rcm),
        "natural" => Ok(OrderingChoice::Natural),
        path => {
            let text = read_text(Path::new(path)).map_err(|e| {
                Error::input(format!(
                    "--ordering expects 'rcm', 'natural', or an ordering file: {e}"
                ))
            })?;
            Ok(OrderingChoice::Explicit(read_ordering(&text, p)?))
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    cov: CovInput,
    #[command(flatten)]
    graph: GraphInput,
    /// 'rcm', 'natural', or a file with one 1-based label per line.
    #[arg(long, default_value = "rcm")]
    ordering: String,
    /// Step-I route: follow the cost model, or force a route.
    #[arg(long, value_enum, default_value_t = Step1Arg::Auto)]
    step1: Step1Arg,
    /// Estimate output path ('-' for stdout).
    #[arg(long, default_value = "-")]
    out: String,
    /// Estimate encoding: sparse triplets or dense CSV.
    #[arg(long, value_enum, default_value_t = OutFormat::Triplets)]
    out_format: OutFormat,
    /// Report path (timings, diagnostics); stderr when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Step1Arg {
    Auto,
    Column,
    Dense,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum OutFormat {
    Triplets,
    Csv,
}

#[derive(Args)]
struct MleArgs {
    #[command(flatten)]
    cov: CovInput,
    #[command(flatten)]
    graph: GraphInput,
    /// ipf (clique fitting) or gipf (row sweeps).
    #[arg(long)]
    method: String,
    /// Convergence threshold: max absolute change per sweep.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Start from the non-iterative estimate ('cca').
    #[arg(long, value_name = "METHOD")]
    warm_start: Option<String>,
    /// Initial value when not warm-started.
    #[arg(long, value_enum, default_value_t = InitArg::Diag)]
    init: InitArg,
    /// Abort if the graph has more maximal cliques than this (ipf only).
    #[arg(long, default_value_t = cca_core::graph::DEFAULT_CLIQUE_CAP)]
    clique_cap: usize,
    /// Ordering used for the warm start estimate.
    #[arg(long, default_value = "rcm")]
    ordering: String,
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = OutFormat::Triplets)]
    out_format: OutFormat,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum InitArg {
    /// The identity matrix.
    Identity,
    /// diag(1/S_ii).
    Diag,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// 'rcm' or 'natural'.
    #[arg(long, default_value = "rcm")]
    ordering: String,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct FillArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[arg(long, default_value = "rcm")]
    ordering: String,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct SccaArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[arg(long, default_value = "rcm")]
    ordering: String,
    /// Eigenvalue-bound parameter (positive).
    #[arg(long)]
    delta: f64,
    /// Propagation recursion form.
    #[arg(long, value_enum, default_value_t = GFormArg::Proof)]
    g_form: GFormArg,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum GFormArg {
    Proof,
    Main,
}

#[derive(Args)]
struct BenchArgs {
    /// Dimensions, comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "spec")]
    p: Vec<usize>,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "spec")]
    n: Vec<usize>,
    /// gaussian or t3.
    #[arg(long, default_value = "gaussian", conflicts_with = "spec")]
    dist: String,
    /// Methods, comma-separated: cca, ipf, gipf, cca_warm_gipf.
    #[arg(long, value_delimiter = ',', conflicts_with = "spec")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1, conflicts_with = "spec")]
    reps: usize,
    #[arg(long, default_value_t = 1, conflicts_with = "spec")]
    seed: u64,
    /// Benchmark spec file with key=value lines (p, n, dist, methods, reps,
    /// seed; lists comma-separated).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Raw per-replication rows CSV.
    #[arg(long, value_name = "FILE")]
    out_raw: PathBuf,
    /// Per-cell means CSV.
    #[arg(long, value_name = "FILE")]
    out_summary: PathBuf,
}

#[derive(Args)]
struct PortfolioArgs {
    /// Daily returns CSV (rows = days, columns = assets).
    #[arg(long, value_name = "FILE")]
    returns: PathBuf,
    /// Estimation window length in days.
    #[arg(long)]
    nest: usize,
    /// Holding period between rebalances, in days.
    #[arg(long, default_value_t = 30)]
    rebalance: usize,
    /// Fixed pattern file; otherwise use --target-sparsity selection.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    #[arg(long, value_name = "F", conflicts_with = "graph")]
    target_sparsity: Option<f64>,
    #[arg(long, default_value = "rcm")]
    ordering: String,
    /// Per-period weights CSV.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(target: &str, content: &str) -> Result<(), Error> {
    if target == "-" {
        print!("{content}");
        Ok(())
    } else {
        fs::write(target, content).map_err(Error::Io)
    }
}

fn write_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), Error> {
    let rendered = report.render(format);
    match path {
        Some(path) => fs::write(path, rendered).map_err(Error::Io),
        None => {
            eprint!("{rendered}");
            Ok(())
        }
    }
}

fn matrix_output(s: &SymMatrix, format: OutFormat, label: &str) -> String {
    match format {
        OutFormat::Triplets => format_triplets(s, label),
        OutFormat::Csv => format_csv_matrix(s.as_dmatrix()),
    }
}

fn estimate_report_entries(report: &mut Report, est: &EstimateReport, g: &Graph) {
    report.push("p", g.p() as u64);
    report.push("edges", g.edge_count() as u64);
    report.push("components", est.components as u64);
    report.push("fillins", est.fillin_count as u64);
    report.push("step1_path", est.path.to_string());
    report.push_f64("min_eigenvalue", est.min_eigenvalue);
    report.push_f64("max_nonedge_abs", est.max_nonedge_abs);
    report.push_f64("time_ordering_seconds", est.timings.ordering);
    report.push_f64("time_fill_seconds", est.timings.fill);
    report.push_f64("time_step1_seconds", est.timings.step1);
    report.push_f64("time_step2_seconds", est.timings.step2);
}

fn cmd_estimate(args: &EstimateArgs, format: Format) -> Result<(), Error> {
    let s = args.cov.load()?;
    let (g, tau) = args.graph.load(&s)?;
    let ordering = parse_ordering_choice(&args.ordering, g.p())?;
    let opts = EstimateOptions {
        path: match args.step1 {
            Step1Arg::Auto => PathChoice::Auto,
            Step1Arg::Column => PathChoice::ColumnFormula,
            Step1Arg::Dense => PathChoice::Dense,
        },
    };
    let est = cca_estimate_with_options(&s, &g, ordering, &opts)?;
    write_output(
        &args.out,
        &matrix_output(&est.omega_hat, args.out_format, "precision estimate"),
    )?;

    let mut report = Report::new();
    report.push("command", "estimate");
    if let Some(tau) = tau {
        report.push_f64("selection_tau", tau);
    }
    estimate_report_entries(&mut report, &est, &g);
    let og = apply_ordering(&g, &VertexOrdering::identity(g.p()))?;
    let membership = verify_membership(&est.omega_hat, &og, 1e-10)?;
    report.push("membership_pass", membership.pass);
    write_report(&report, format, args.report.as_deref())
}

fn cmd_mle(args: &MleArgs, format: Format) -> Result<(), Error> {
    let s = args.cov.load()?;
    let (g, tau) = args.graph.load(&s)?;
    let init = match &args.warm_start {
        Some(kind) if kind == "cca" => {
            let ordering = parse_ordering_choice(&args.ordering, g.p())?;
            let est = cca_estimate_with_options(&s, &g, ordering, &EstimateOptions::default())?;
            InitStrategy::WarmStart(est.omega_hat)
        }
        Some(other) => {
            return Err(Error::input(format!(
                "unknown warm start '{other}' (supported: cca)"
            )))
        }
        None => match args.init {
            InitArg::Identity => InitStrategy::IdentityScaled,
            InitArg::Diag => InitStrategy::DiagonalInvS,
        },
    };
    let cfg = IterativeConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        init,
        clique_cap: args.clique_cap,
        track_objective: false,
    };
    let result = match args.method.as_str() {
        "ipf" => ipf_mle(&s, &g, &cfg)?,
        "gipf" => gipf_mle(&s, &g, &cfg)?,
        other => return Err(Error::input(format!("unknown method '{other}' (ipf|gipf)"))),
    };
    write_output(
        &args.out,
        &matrix_output(&result.omega, args.out_format, "mle estimate"),
    )?;

    let mut report = Report::new();
    report.push("command", "mle");
    report.push("method", args.method.clone());
    if let Some(tau) = tau {
        report.push_f64("selection_tau", tau);
    }
    report.push("p", g.p() as u64);
    report.push("edges", g.edge_count() as u64);
    report.push("iterations", result.iterations as u64);
    report.push("converged", result.converged);
    report.push_f64("final_delta", result.final_delta);
    report.push_f64("neg_loglik", result.neg_loglik);
    write_report(&report, format, args.report.as_deref())
}

fn cmd_order(args: &OrderArgs) -> Result<(), Error> {
    let g = parse_graph(&read_text(&args.graph)?)?;
    let sigma = match args.ordering.as_str() {
        "rcm" => rcm_ordering(&g),
        "natural" => VertexOrdering::identity(g.p()),
        other => {
            return Err(Error::input(format!(
                "unknown ordering '{other}' (rcm|natural)"
            )))
        }
    };
    write_output(&args.out, &format_ordering(&sigma))
}

fn cmd_fill(args: &FillArgs, format: Format) -> Result<(), Error> {
    let g = parse_graph(&read_text(&args.graph)?)?;
    let sigma = match args.ordering.as_str() {
        "rcm" => rcm_ordering(&g),
        "natural" => VertexOrdering::identity(g.p()),
        other => {
            return Err(Error::input(format!(
                "unknown ordering '{other}' (rcm|natural)"
            )))
        }
    };
    let og = apply_ordering(&g, &sigma)?;
    let fg = filled_graph(&og);
    let cost = complexity_estimate(&fg);

    let mut report = Report::new();
    report.push("command", "fill");
    report.push("p", g.p() as u64);
    report.push("edges", og.edge_count() as u64);
    report.push("filled_edges", fg.edge_count_filled() as u64);
    report.push("fillins", fg.fillin_count() as u64);
    report.push("sum_nj_cubed", cost.sum_nj_cubed as u64);
    report.push("step2_cost", cost.step2_cost as u64);
    report.push("step1_path", cost.path.to_string());
    report.push_list(
        "filled_edge_list",
        fg.edges_filled()
            .map(|(lo, hi)| format!("{}-{}", hi + 1, lo + 1))
            .collect(),
    );
    report.push_list(
        "fillin_list",
        fg.fillins()
            .iter()
            .map(|&(i, j)| format!("{}-{}", i + 1, j + 1))
            .collect(),
    );
    let rendered = report.render(format);
    write_output(&args.out, &rendered)
}

fn cmd_scca(args: &SccaArgs, format: Format) -> Result<(), Error> {
    let g = parse_graph(&read_text(&args.graph)?)?;
    let sigma = match args.ordering.as_str() {
        "rcm" => rcm_ordering(&g),
        "natural" => VertexOrdering::identity(g.p()),
        other => {
            return Err(Error::input(format!(
                "unknown ordering '{other}' (rcm|natural)"
            )))
        }
    };
    let og = apply_ordering(&g, &sigma)?;
    let fg = filled_graph(&og);
    let report_data = s_cca_diagnostics_with_form(
        &fg,
        args.delta,
        match args.g_form {
            GFormArg::Proof => GRecursionForm::Proof,
            GFormArg::Main => GRecursionForm::MainText,
        },
    )?;

    let mut report = Report::new();
    report.push("command", "scca");
    report.push("p", g.p() as u64);
    report.push_f64("delta", report_data.delta);
    report.push(
        "g_form",
        match args.g_form {
            GFormArg::Proof => "proof",
            GFormArg::Main => "main",
        },
    );
    report.push("a_d", report_data.a_d);
    report.push("a_tilde_d", report_data.a_tilde_d);
    report.push("c", report_data.c as u64);
    report.push_f64("s_cca", report_data.s_cca);
    report.push_list("g_values", report_data.g_values.clone());
    write_output(&args.out, &report.render(format))
}

fn parse_bench_cells(args: &BenchArgs) -> Result<Vec<BenchCell>, Error> {
    let (ps, ns, dist, methods, reps, seed) = if let Some(spec_path) = &args.spec {
        parse_bench_spec(&read_text(spec_path)?)?
    } else {
        if args.p.is_empty() || args.n.is_empty() || args.methods.is_empty() {
            return Err(Error::input(
                "--p, --n, and --methods are required (or use --spec)",
            ));
        }
        (
            args.p.clone(),
            args.n.clone(),
            args.dist.parse::<BenchDistribution>()?,
            args.methods
                .iter()
                .map(|m| m.parse::<BenchMethod>())
                .collect::<Result<Vec<_>, _>>()?,
            args.reps,
            args.seed,
        )
    };
    let mut cells = Vec::new();
    for &p in &ps {
        for &n in &ns {
            cells.push(BenchCell {
                p,
                n,
                dist,
                methods: methods.clone(),
                reps,
                base_seed: seed,
            });
        }
    }
    Ok(cells)
}

type BenchSpecTuple = (
    Vec<usize>,
    Vec<usize>,
    BenchDistribution,
    Vec<BenchMethod>,
    usize,
    u64,
);

fn parse_bench_spec(text: &str) -> Result<BenchSpecTuple, Error> {
    let mut ps = Vec::new();
    let mut ns = Vec::new();
    let mut dist = BenchDistribution::Gaussian;
    let mut methods = Vec::new();
    let mut reps = 1usize;
    let mut seed = 1u64;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let ln = lineno + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::input(format!("line {ln}: expected key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_list = |v: &str| -> Result<Vec<usize>, Error> {
            v.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::input(format!("line {ln}: bad number '{t}'")))
                })
                .collect()
        };
        match key {
            "p" => ps = parse_list(value)?,
            "n" => ns = parse_list(value)?,
            "dist" => dist = value.parse()?,
            "methods" => {
                methods = value
                    .split(',')
                    .map(|t| t.trim().parse::<BenchMethod>())
                    .collect::<Result<Vec<_>, _>>()?
            }
            "reps" => {
                reps = value
                    .parse()
                    .map_err(|_| Error::input(format!("line {ln}: bad reps '{value}'")))?
            }
            "seed" => {
                seed = value
                    .parse()
                    .map_err(|_| Error::input(format!("line {ln}: bad seed '{value}'")))?
            }
            other => return Err(Error::input(format!("line {ln}: unknown key '{other}'"))),
        }
    }
    if ps.is_empty() || ns.is_empty() || methods.is_empty() {
        return Err(Error::input("benchmark spec needs p, n, and methods"));
    }
    Ok((ps, ns, dist, methods, reps, seed))
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let cells = parse_bench_cells(args)?;
    let rows = run_benchmark(&cells)?;

    let mut raw = String::from("method,p,n,seed,time_seconds,rel_frob\n");
    for row in &rows {
        raw.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method, row.p, row.n, row.seed, row.time_seconds, row.rel_frob
        ));
    }
    fs::write(&args.out_raw, raw).map_err(Error::Io)?;

    let mut summary = String::from("method,p,n,dist,reps,mean_time_seconds,mean_rel_frob\n");
    for cell in summarize(&rows) {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.method,
            cell.p,
            cell.n,
            cell.dist,
            cell.reps,
            cell.mean_time_seconds,
            cell.mean_rel_frob
        ));
    }
    fs::write(&args.out_summary, summary).map_err(Error::Io)?;
    Ok(())
}

fn cmd_portfolio(args: &PortfolioArgs, format: Format) -> Result<(), Error> {
    let returns = read_csv_data(&read_text(&args.returns)?)?;
    let graph = match (&args.graph, args.target_sparsity) {
        (Some(path), None) => GraphSource::Fixed(parse_graph(&read_text(path)?)?),
        (None, Some(f)) => GraphSource::TargetSparsity(f),
        (None, None) => {
            return Err(Error::input(
                "one of --graph or --target-sparsity is required",
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the conflict"),
    };
    let ordering = parse_ordering_choice(&args.ordering, returns.p())?;
    let opts = PortfolioOptions {
        nest: args.nest,
        rebalance: args.rebalance,
        graph,
        ordering,
    };
    let result = rolling_portfolio(&returns, &opts)?;

    let mut out = String::from("period,start_day,end_day");
    for j in 0..returns.p() {
        match returns.variable_names() {
            Some(names) => out.push_str(&format!(",{}", names[j])),
            None => out.push_str(&format!(",w{}", j + 1)),
        }
    }
    out.push('\n');
    for period in &result.periods {
        out.push_str(&format!(
            "{},{},{}",
            period.index + 1,
            period.start_day,
            period.end_day
        ));
        for w in &period.weights {
            out.push_str(&format!(",{w}"));
        }
        out.push('\n');
    }
    write_output(&args.out, &out)?;

    let mut report = Report::new();
    report.push("command", "portfolio");
    report.push("periods", result.periods.len() as u64);
    report.push("nest", args.nest as u64);
    report.push("rebalance", args.rebalance as u64);
    report.push_list(
        "est_variance",
        result.periods.iter().map(|p| p.est_variance).collect(),
    );
    report.push_list(
        "realized_variance",
        result.periods.iter().map(|p| p.realized_variance).collect(),
    );
    report.push_list(
        "graph_edges",
        result
            .periods
            .iter()
            .map(|p| p.graph_edges as u64)
            .collect(),
    );
    write_report(&report, format, args.report.as_deref())
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::input(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Estimate(args) => cmd_estimate(args, cli.format),
        Command::Mle(args) => cmd_mle(args, cli.format),
        Command::Order(args) => cmd_order(args),
        Command::Fill(args) => cmd_fill(args, cli.format),
        Command::Scca(args) => cmd_scca(args, cli.format),
        Command::Bench(args) => cmd_bench(args),
        Command::Portfolio(args) => cmd_portfolio(args, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Numerical(_) => 3u8,
                _ => 2u8,
            };
            ExitCode::from(code)
        }
    }
}
