//! `graphlet`: build graphs, extract SGWT features, and run the synthetic
//! benchmark from the command line.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 when a
//! computation or output write fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphlet_core::construct::{
    correlation_graph, covariance_graph, kalofolias_learn, knn_graph, semi_local_graph,
    semi_local_threshold, threshold_graph, KalofoliasParams, TimeSeriesMatrix,
};
use graphlet_core::io::{read_matrix, write_json, write_matrix};
use graphlet_core::pipeline::{run_synthetic_benchmark, BenchmarkConfig};
use graphlet_core::{
    build_frame, build_laplacian, eigendecompose, Error, FeatureSlot, Graph, KernelBank,
    KernelFamily, KernelSpec, LaplacianKind,
};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "graphlet",
    version,
    about = "Spectral graph wavelet features for regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the synthetic regression benchmark and write report.csv/report.json.
    SynthBench(SynthBenchArgs),
    /// Build a weight matrix from time series or an existing graph.
    GraphBuild(GraphBuildArgs),
    /// Extract SGWT features from signals on a graph.
    Transform(TransformArgs),
}

#[derive(Args)]
struct SynthBenchArgs {
    /// JSON config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    edge_prob: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated kernel families, default bands.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    kernels: Option<Vec<KernelFamily>>,
    #[arg(long)]
    k_best: Option<usize>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    halved_diffusion: bool,
    #[arg(long)]
    diffusion_steps: Option<usize>,
    #[arg(long, value_enum)]
    laplacian: Option<LaplacianArg>,
    #[arg(long)]
    augment: bool,
    #[arg(long)]
    report_csv: Option<PathBuf>,
    #[arg(long)]
    report_json: Option<PathBuf>,
    /// Worker threads; the report does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Method {
    Covariance,
    Correlation,
    Threshold,
    Knn,
    SemiLocal,
    Kalofolias,
}

#[derive(Args)]
struct GraphBuildArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Time series (rows are observations) for covariance, correlation and
    /// kalofolias; a weight matrix otherwise.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Parameter echo; defaults to the output path with a `.json` extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Set kept edges to weight 1.
    #[arg(long)]
    binary: bool,
    /// Node coordinates, one row per node (semi_local).
    #[arg(long)]
    coords: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    graph: PathBuf,
    /// One signal per row.
    #[arg(long)]
    signals: PathBuf,
    #[arg(long, value_parser = parse_family, default_value = "warped_translate")]
    kernel: KernelFamily,
    #[arg(long)]
    bands: Option<usize>,
    /// Cosine coefficients for warped translates, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Option<Vec<f64>>,
    /// Single all-pass band; features equal the input signals.
    #[arg(long)]
    identity: bool,
    #[arg(long, value_enum, default_value = "combinatorial")]
    laplacian: LaplacianArg,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    layout: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LaplacianArg {
    Combinatorial,
    Normalized,
}

impl From<LaplacianArg> for LaplacianKind {
    fn from(a: LaplacianArg) -> Self {
        match a {
            LaplacianArg::Combinatorial => LaplacianKind::Combinatorial,
            LaplacianArg::Normalized => LaplacianKind::Normalized,
        }
    }
}

fn parse_family(s: &str) -> Result<KernelFamily, String> {
    KernelFamily::ALL
        .iter()
        .copied()
        .find(|f| f.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = KernelFamily::ALL.iter().map(|f| f.name()).collect();
            format!(
                "unknown kernel '{s}', expected one of: {}",
                names.join(", ")
            )
        })
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Errors that describe bad input rather than a failed computation.
fn classify(e: Error) -> Failure {
    match e {
        Error::DimensionMismatch { .. }
        | Error::AsymmetricInput { .. }
        | Error::NonzeroDiagonal(_)
        | Error::IsolatedNode(_)
        | Error::NegativeArgument(_)
        | Error::InadmissibleCoefficients(_)
        | Error::TooFewTranslates(_)
        | Error::DegenerateSeries(_)
        | Error::KTooLarge { .. }
        | Error::KOutOfRange { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidConfig { .. }
        | Error::Parse { .. }
        | Error::Json(_) => Failure::Invalid(e.to_string()),
        _ => Failure::Runtime(e.to_string()),
    }
}

fn read_input(path: &Path) -> Result<nalgebra::DMatrix<f64>, Failure> {
    read_matrix(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write_output(result: graphlet_core::Result<()>, path: &Path) -> Result<(), Failure> {
    result.map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_config(args: &SynthBenchArgs) -> Result<BenchmarkConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Invalid(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Invalid(format!("config {}: {e}", path.display())))?
        }
        None => BenchmarkConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                config.$field = v;
            }
        )*};
    }
    set!(
        nodes,
        samples,
        trials,
        edge_prob,
        noise_sigma,
        seed,
        k_best,
        split_ratio,
        diffusion_steps,
        report_csv,
        report_json
    );
    if let Some(families) = &args.kernels {
        config.kernels = families.iter().map(|&f| KernelSpec::new(f)).collect();
    }
    if let Some(l) = args.laplacian {
        config.laplacian = l.into();
    }
    config.halved_diffusion |= args.halved_diffusion;
    config.augment |= args.augment;
    config
        .validate()
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    Ok(config)
}

fn synth_bench(args: SynthBenchArgs) -> Result<(), Failure> {
    let config = load_config(&args)?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    log::info!("running {} trials on {jobs} threads", config.trials);
    let report =
        run_synthetic_benchmark(&config, jobs).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_output(report.write_csv(&config.report_csv), &config.report_csv)?;
    write_output(report.write_json(&config.report_json), &config.report_json)?;
    if report.failed_trials > 0 {
        log::warn!(
            "{} of {} trials failed",
            report.failed_trials,
            config.trials
        );
    }
    for row in &report.rows {
        println!(
            "{:<18} r2 {:.6}  mse {:.6e}",
            row.kernel, row.r2_mean, row.mse_mean
        );
    }
    Ok(())
}

fn need<T>(value: Option<T>, flag: &str, method: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Invalid(format!("--{flag} is required for method {method}")))
}

fn graph_build(args: GraphBuildArgs) -> Result<(), Failure> {
    let input = read_input(&args.input)?;
    let name = args
        .method
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let series = || TimeSeriesMatrix::new(input.clone()).map_err(classify);
    let as_graph = || Graph::new(input.clone()).map_err(classify);
    let mut extra = serde_json::Map::new();
    let graph = match args.method {
        Method::Covariance => covariance_graph(&series()?).map_err(classify)?,
        Method::Correlation => correlation_graph(&series()?).map_err(classify)?,
        Method::Threshold => {
            let t = need(args.threshold, "threshold", &name)?;
            extra.insert("threshold".into(), json!(t));
            extra.insert("binary".into(), json!(args.binary));
            threshold_graph(&as_graph()?, t, args.binary).map_err(classify)?
        }
        Method::Knn => {
            let k = need(args.k, "k", &name)?;
            extra.insert("k".into(), json!(k));
            extra.insert("binary".into(), json!(args.binary));
            knn_graph(&as_graph()?, k, args.binary).map_err(classify)?
        }
        Method::SemiLocal => {
            let path = need(args.coords.as_ref(), "coords", &name)?;
            let coords = read_input(path)?;
            let g = as_graph()?;
            let t = semi_local_threshold(&g, &coords).map_err(classify)?;
            extra.insert("coords".into(), json!(path));
            extra.insert("distance_threshold".into(), json!(t));
            semi_local_graph(&g, &coords).map_err(classify)?
        }
        Method::Kalofolias => {
            let params = KalofoliasParams {
                alpha: args.alpha,
                beta: args.beta,
                max_iter: args.max_iter,
                tol: args.tol,
            };
            let learned = kalofolias_learn(&series()?, params).map_err(classify)?;
            if !learned.converged {
                log::warn!(
                    "kalofolias stopped after {} iterations without converging",
                    learned.iterations
                );
            }
            extra.insert("params".into(), json!(params));
            extra.insert("converged".into(), json!(learned.converged));
            extra.insert("iterations".into(), json!(learned.iterations));
            extra.insert(
                "objective".into(),
                json!(learned.objective_checkpoints.last()),
            );
            learned.graph
        }
    };
    write_output(write_matrix(&args.output, graph.weights()), &args.output)?;
    let sidecar = args
        .sidecar
        .unwrap_or_else(|| args.output.with_extension("json"));
    let echo = json!({
        "method": name,
        "input": args.input,
        "output": args.output,
        "n_nodes": graph.n_nodes(),
        "edges": graph.edge_count(),
        "details": extra,
    });
    write_output(write_json(&sidecar, &echo), &sidecar)
}

#[derive(Serialize)]
struct Layout<'a> {
    bands: &'a [graphlet_core::BandLabel],
    columns: Vec<FeatureSlot>,
}

fn transform(args: TransformArgs) -> Result<(), Failure> {
    let weights = read_input(&args.graph)?;
    let signals = read_input(&args.signals)?;
    let graph = Graph::new(weights).map_err(classify)?;
    if signals.ncols() != graph.n_nodes() {
        return Err(Failure::Invalid(format!(
            "dimension mismatch: graph is {n}x{n} but signals are {}x{}",
            signals.nrows(),
            signals.ncols(),
            n = graph.n_nodes()
        )));
    }
    let laplacian = build_laplacian(&graph, args.laplacian.into()).map_err(classify)?;
    let spectrum = Arc::new(eigendecompose(&laplacian).map_err(classify)?);
    let bank = if args.identity {
        KernelBank::identity(1, spectrum.lambda_max().max(f64::MIN_POSITIVE)).map_err(classify)?
    } else {
        let spec = KernelSpec {
            family: args.kernel,
            n_bands: args.bands.unwrap_or(graphlet_core::kernels::DEFAULT_BANDS),
            coeffs: args.coeffs,
        };
        let eigenvalues: Vec<f64> = spectrum.eigenvalues().iter().copied().collect();
        spec.build(&eigenvalues).map_err(classify)?
    };
    let frame = build_frame(spectrum, &bank).map_err(classify)?;
    let features = frame.extract_features(&signals).map_err(classify)?;
    write_output(write_matrix(&args.features, &features), &args.features)?;
    let layout = Layout {
        bands: frame.labels(),
        columns: frame.feature_layout(),
    };
    write_output(write_json(&args.layout, &layout), &args.layout)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRAPHLET_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthBench(a) => synth_bench(a),
        Command::GraphBuild(a) => graph_build(a),
        Command::Transform(a) => transform(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
