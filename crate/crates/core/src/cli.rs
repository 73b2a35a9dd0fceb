//! Command-line front end: `impute`, `evaluate`, `simulate` and `bench`.
//!
//! Exit codes: 0 on success, 1 on runtime failures (I/O, invalid data,
//! numerical problems), 2 on usage errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::evaluation::{apply_dropout, encode_labels, evaluate_clustering, masked_rmse};
use crate::graph::cosine_knn;
use crate::io::{self, MatrixFormat, Orientation};
use crate::model::{EvaluationReport, ExpressionMatrix, Mode, ScfpConfig};
use crate::pipeline::{preprocess, run_scfp, PreprocessOptions};
use crate::propagation::spmm;
use crate::report;
use crate::synth::{false_zero_rate, simulate, SimulationSpec};

#[derive(Debug, Parser)]
#[command(
    name = "scfp",
    version,
    about = "Impute and denoise single-cell count matrices by feature propagation"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "SCFP_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Impute a matrix and write the denoised result.
    Impute(ImputeArgs),
    /// Score imputation by masked RMSE and/or clustering agreement.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset with planted groups and false zeros.
    Simulate(SimulateArgs),
    /// Time graph construction, one propagation sweep and the full pipeline.
    Bench(BenchArgs),
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("{a} is outside (0, 1)"))
    }
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&r) {
        Ok(r)
    } else {
        Err(format!("{r} is outside [0, 1)"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Neighbors per cell.
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    /// Neighborhood weight of soft propagation, in (0, 1).
    #[arg(long, default_value_t = 0.99, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
    pub iters_hard: u32,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
    pub iters_soft: u32,
    /// Stop a phase early once its residual is at most this (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Pipeline variant: full, hard_only, soft_only, hard_soft_no_refine,
    /// soft_then_hard or full_diffusion_baseline.
    #[arg(long, default_value = "full", value_parser = Mode::from_str_clap)]
    pub mode: Mode,
    /// Steps for the full_diffusion_baseline mode.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub diffusion_steps: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PipelineArgs {
    pub fn config(&self) -> ScfpConfig {
        ScfpConfig {
            k: self.k as usize,
            alpha: self.alpha,
            hard_iterations: self.iters_hard as usize,
            soft_iterations: self.iters_soft as usize,
            convergence_tolerance: self.tol,
            mode: self.mode,
            diffusion_steps: self.diffusion_steps as usize,
            seed: self.seed,
        }
    }
}

impl Mode {
    fn from_str_clap(s: &str) -> Result<Mode, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Matrix file (.mtx or .csv).
    #[arg(long)]
    pub input: PathBuf,
    /// The file stores genes as rows and cells as columns.
    #[arg(long)]
    pub genes_as_rows: bool,
}

impl InputArgs {
    fn orientation(&self) -> Orientation {
        if self.genes_as_rows {
            Orientation::GenesAsRows
        } else {
            Orientation::CellsAsRows
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Where to write the denoised matrix (format from the extension).
    #[arg(long)]
    pub output: PathBuf,
    /// Write the run report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Scale each cell to `--target-sum` total counts before imputing.
    #[arg(long)]
    pub normalize: bool,
    /// Apply log(1 + x) before imputing.
    #[arg(long)]
    pub log1p: bool,
    #[arg(long, default_value_t = 1e4, value_parser = parse_positive)]
    pub target_sum: f64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterPreprocess {
    /// Library-size normalization followed by log1p.
    Standard,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Hide this fraction of nonzero entries and score their recovery.
    #[arg(long, value_parser = parse_rate)]
    pub dropout: Option<f64>,
    /// Cluster raw and imputed matrices and score against `--labels`.
    #[arg(long)]
    pub cluster: bool,
    /// One label per line, or `cell_id,label` rows.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Number of clusters, or `auto` for the number of distinct labels.
    #[arg(long, default_value = "auto")]
    pub n_clusters: String,
    /// Preprocessing applied before the clustering track.
    #[arg(long, value_enum, default_value_t = ClusterPreprocess::Standard)]
    pub cluster_preprocess: ClusterPreprocess,
    #[arg(long, default_value_t = 1e4, value_parser = parse_positive)]
    pub target_sum: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also print a TSV header and one row per report.
    #[arg(long)]
    pub table_row: bool,
    /// Use this matrix as the imputation result instead of running the
    /// pipeline (for testing the scoring path).
    #[arg(long, hide = true)]
    pub oracle_imputation: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..))]
    pub cells: u32,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u32).range(1..))]
    pub genes: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub n_groups: u32,
    #[arg(long, default_value_t = 0.1)]
    pub de_fraction: f64,
    #[arg(long, default_value_t = 6.0, value_parser = parse_positive)]
    pub de_strength: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub base_mean: f64,
    #[arg(long, default_value_t = 0.5, value_parser = parse_positive)]
    pub dispersion: f64,
    /// Probability that a nonzero count is observed as zero.
    #[arg(long, alias = "dropout", default_value_t = 0.6, value_parser = parse_rate)]
    pub dropout_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for truth, observed, labels.txt and spec.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Mtx)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Mtx,
    Csv,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Mtx => MatrixFormat::Mtx,
            FormatArg::Csv => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u32).range(1..))]
    pub cells: u32,
    #[arg(long, default_value_t = 15000, value_parser = clap::value_parser!(u32).range(1..))]
    pub genes: u32,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    /// Iterations for each propagation phase.
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
    pub iters: u32,
    /// False-zero rate of the synthetic input.
    #[arg(long, alias = "dropout", default_value_t = 0.6, value_parser = parse_rate)]
    pub dropout_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failure of a subcommand, mapped to an exit code by [`main`].
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t as usize);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Impute(a) => impute(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Bench(a) => bench(&a),
    })
}

fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => io::write_text(text, p)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn impute(args: &ImputeArgs) -> CliResult<()> {
    let format =
        MatrixFormat::from_path(&args.output).map_err(|e| CliError::Usage(e.to_string()))?;
    let orientation = args.input.orientation();
    let x = io::read_matrix(&args.input.input, orientation)?;
    let options = PreprocessOptions {
        library_size_normalize: args.normalize,
        log1p: args.log1p,
        target_sum: args.target_sum,
    };
    let start = Instant::now();
    let x = preprocess(&x, &options)?;
    let result = run_scfp(&x, &args.pipeline.config())?;
    let wall = start.elapsed().as_secs_f64();
    let out = match orientation {
        Orientation::CellsAsRows => result.denoised.clone(),
        Orientation::GenesAsRows => result.denoised.transpose(),
    };
    io::write_matrix(&out, &args.output, format)?;
    let text = report::format_run(&args.input.input.display().to_string(), &result, wall);
    emit(&text, args.report.as_deref())
}

fn resolve_clusters(spec: &str, truth: &[usize]) -> CliResult<usize> {
    if spec == "auto" {
        return Ok(truth.iter().collect::<BTreeSet<_>>().len());
    }
    match spec.parse::<usize>() {
        Ok(c) if c >= 1 => Ok(c),
        _ => Err(CliError::Usage(format!(
            "--n-clusters expects a positive integer or `auto`, got `{spec}`"
        ))),
    }
}

fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    if args.dropout.is_none() && !args.cluster {
        return Err(CliError::Usage(
            "evaluate needs --dropout and/or --cluster".into(),
        ));
    }
    if args.cluster && args.labels.is_none() {
        return Err(CliError::Runtime(Error::Labels(
            "--cluster requires --labels".into(),
        )));
    }
    let x = io::read_matrix(&args.input.input, args.input.orientation())?;
    let config = args.pipeline.config();
    let oracle = args
        .oracle_imputation
        .as_ref()
        .map(|p| io::read_matrix(p, args.input.orientation()))
        .transpose()?;
    let imputed_label = config.mode.as_str().to_string();
    let mut raw = EvaluationReport {
        label: "raw".into(),
        ..Default::default()
    };
    let mut imputed = EvaluationReport {
        label: imputed_label,
        config_echo: Some(config.clone()),
        ..Default::default()
    };

    if let Some(rate) = args.dropout {
        let start = Instant::now();
        let experiment = apply_dropout(&x, rate, config.seed)?;
        raw.rmse_masked = Some(masked_rmse(&experiment.corrupted, &experiment.held_out)?);
        let result = match &oracle {
            Some(o) => o.clone(),
            None => run_scfp(&experiment.corrupted, &config)?.denoised,
        };
        imputed.rmse_masked = Some(masked_rmse(&result, &experiment.held_out)?);
        imputed.wall_time_seconds += start.elapsed().as_secs_f64();
        imputed.notes.push(format!(
            "dropout: {} held-out entries, realized rate {:.6}",
            experiment.held_out.len(),
            experiment.realized_rate
        ));
    }

    if args.cluster {
        let path = args.labels.as_deref().expect("checked above");
        let names = io::read_labels(path, Some(x.cell_ids()))?;
        if names.len() != x.n_cells() {
            return Err(
                Error::Labels(format!("{} labels for {} cells", names.len(), x.n_cells())).into(),
            );
        }
        let (truth, _) = encode_labels(&names);
        let c = resolve_clusters(&args.n_clusters, &truth)?;
        let options = match args.cluster_preprocess {
            ClusterPreprocess::Standard => PreprocessOptions {
                target_sum: args.target_sum,
                ..PreprocessOptions::standard()
            },
            ClusterPreprocess::None => PreprocessOptions::default(),
        };
        let prepared = preprocess(&x, &options)?;

        let start = Instant::now();
        evaluate_clustering(&prepared, &truth, c, config.seed)?.fill(&mut raw);
        raw.wall_time_seconds += start.elapsed().as_secs_f64();

        let start = Instant::now();
        let result = match &oracle {
            Some(o) => o.clone(),
            None => run_scfp(&prepared, &config)?.denoised,
        };
        evaluate_clustering(&result, &truth, c, config.seed)?.fill(&mut imputed);
        imputed.wall_time_seconds += start.elapsed().as_secs_f64();
    }

    let reports = [raw, imputed];
    emit(&report::format_evaluation(&reports), args.report.as_deref())?;
    if args.table_row {
        println!("{}", report::TABLE_HEADER);
        for r in &reports {
            println!("{}", report::table_row(r));
        }
    }
    Ok(())
}

fn simulate_cmd(args: &SimulateArgs) -> CliResult<()> {
    let spec = SimulationSpec {
        n_cells: args.cells as usize,
        n_genes: args.genes as usize,
        n_groups: args.n_groups as usize,
        de_fraction: args.de_fraction,
        de_strength: args.de_strength,
        base_mean: args.base_mean,
        dispersion: args.dispersion,
        dropout_rate: args.dropout_rate,
        seed: args.seed,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let data = simulate(&spec)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let ext = match args.format {
        FormatArg::Mtx => "mtx",
        FormatArg::Csv => "csv",
    };
    let format = args.format.into();
    io::write_matrix(
        &data.ground_truth,
        &args.out_dir.join(format!("truth.{ext}")),
        format,
    )?;
    io::write_matrix(
        &data.observed,
        &args.out_dir.join(format!("observed.{ext}")),
        format,
    )?;
    io::write_labels(&data.label_names(), &args.out_dir.join("labels.txt"))?;
    let rate = false_zero_rate(&data.ground_truth, &data.observed)?;
    let text = format!(
        "[simulation]\ncells = {}\ngenes = {}\nn_groups = {}\nde_fraction = {}\nde_strength = {}\n\
         base_mean = {}\ndispersion = {}\ndropout_rate = {}\nseed = {}\nfalse_zero_rate = {rate:.6}\n",
        spec.n_cells,
        spec.n_genes,
        spec.n_groups,
        spec.de_fraction,
        spec.de_strength,
        spec.base_mean,
        spec.dispersion,
        spec.dropout_rate,
        spec.seed
    );
    io::write_text(&text, &args.out_dir.join("spec.txt"))?;
    println!("false_zero_rate = {rate:.6}");
    Ok(())
}

/// FNV-1a over the bit patterns of the values.
fn checksum(values: &[f64]) -> u64 {
    values.iter().fold(0xcbf2_9ce4_8422_2325, |h, v| {
        v.to_bits().to_le_bytes().iter().fold(h, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    })
}

fn bench(args: &BenchArgs) -> CliResult<()> {
    let (n, m) = (args.cells as usize, args.genes as usize);
    if n < 2 {
        return Err(CliError::Usage("bench needs at least 2 cells".into()));
    }
    let spec = SimulationSpec {
        n_cells: n,
        n_genes: m,
        n_groups: 3.min(n),
        dropout_rate: args.dropout_rate,
        seed: args.seed,
        ..SimulationSpec::default()
    };
    let x: ExpressionMatrix = simulate(&spec)?.observed;
    let config = ScfpConfig {
        k: args.k as usize,
        hard_iterations: args.iters as usize,
        soft_iterations: args.iters as usize,
        seed: args.seed,
        ..ScfpConfig::default()
    };

    let start = Instant::now();
    let graph = cosine_knn(&x, config.k)?;
    let knn_seconds = start.elapsed().as_secs_f64();

    let mut scratch = vec![0.0; n * m];
    let start = Instant::now();
    spmm(&graph, x.values(), &mut scratch, m);
    let sweep_seconds = start.elapsed().as_secs_f64();
    drop(scratch);
    drop(graph);

    let start = Instant::now();
    let result = run_scfp(&x, &config)?;
    let pipeline_seconds = start.elapsed().as_secs_f64();

    println!("[bench]");
    println!("cells = {n}");
    println!("genes = {m}");
    println!("nnz = {}", x.nnz());
    println!("k = {}", config.k);
    println!("iterations = {}", args.iters);
    println!("threads = {}", rayon::current_num_threads());
    println!("knn_seconds = {knn_seconds:.3}");
    println!("sweep_seconds = {sweep_seconds:.3}");
    println!("pipeline_seconds = {pipeline_seconds:.3}");
    println!("cells_per_second = {:.1}", n as f64 / pipeline_seconds);
    println!(
        "entries_per_second = {:.1}",
        (n * m) as f64 / pipeline_seconds
    );
    println!("checksum = {:016x}", checksum(result.denoised.values()));
    Ok(())
}
