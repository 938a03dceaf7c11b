use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unca_cli::commands::{self, MetricsArgs};
use unca_cli::{CliError, ConfigLayer, RunConfig};
use unca_core::ingest::{CsvSchema, LabelColumn};

/// Neutrosophic clustering: similarity closure, neutrosophic k-means,
/// cluster graphs, refinement and validity metrics.
#[derive(Debug, Parser)]
#[command(name = "unca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write model, metrics, graph and report files.
    Cluster(RunArgs),
    /// Cut and refine at several lambda values; writes lambda_sweep.csv.
    SweepLambda {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
    },
    /// Score a predicted labeling against ground truth.
    Metrics {
        /// Predicted labels, one per line.
        #[arg(long)]
        predicted: PathBuf,
        /// Ground-truth labels, one per line.
        #[arg(long)]
        truth: PathBuf,
        /// Feature CSV the labels refer to.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long)]
        no_header: bool,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long, default_value = "unca-out")]
        out: PathBuf,
        #[arg(long)]
        dataset_name: Option<String>,
    },
    /// Write the similarity, closure and lambda-cut matrices as CSV.
    ExportMatrices(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// random, kmeans_pp or heuristic.
    #[arg(long)]
    init: Option<String>,
    /// max, weighted or cog.
    #[arg(long)]
    defuzz: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Use features as given instead of min-max normalizing them.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    no_header: bool,
    /// Ground-truth column, by header name or 0-based index.
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of model,metrics,graph,mst,matrices,report.
    #[arg(long, value_delimiter = ',')]
    emit: Option<Vec<String>>,
    /// Skip the O(n³ log n) similarity closure.
    #[arg(long)]
    skip_closure: bool,
    /// Also write the cluster graph after every iteration.
    #[arg(long)]
    graph_every_iteration: bool,
    /// Dataset name used to pick reference rows in the report.
    #[arg(long)]
    dataset_name: Option<String>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        self.resolve_or_k(None)
    }

    /// `fallback_k` applies when neither flags nor config file set `k`.
    fn resolve_or_k(self, fallback_k: Option<usize>) -> Result<RunConfig, CliError> {
        let mut base = match &self.config {
            Some(path) => ConfigLayer::from_json_file(path)?,
            None => ConfigLayer::default(),
        };
        base.k = base.k.or(fallback_k);
        let flags = ConfigLayer {
            input: self.input,
            has_header: self.no_header.then_some(false),
            label_column: self.label_column,
            delimiter: self.delimiter,
            normalize: self.no_normalize.then_some(false),
            k: self.k,
            init: self.init,
            seed: self.seed,
            lambda: self.lambda,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            defuzz: self.defuzz,
            out: self.out,
            emit: self.emit,
            skip_closure: self.skip_closure.then_some(true),
            graph_every_iteration: self.graph_every_iteration.then_some(true),
            dataset_name: self.dataset_name,
        };
        RunConfig::resolve(flags.over(base))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cluster(args) => {
            let cfg = args.resolve()?;
            let (run, written) = commands::cmd_cluster(&cfg)?;
            print!(
                "{}",
                commands::report_text("UNCA (this run)", &cfg.dataset_label(), &run.metrics)
            );
            for path in written {
                log::info!("wrote {}", path.display());
            }
        }
        Command::SweepLambda { run, lambdas } => {
            let cfg = run.resolve()?;
            let rows = commands::cmd_sweep_lambda(&cfg, &lambdas)?;
            print!("{}", commands::sweep_csv(&rows));
        }
        Command::Metrics {
            predicted,
            truth,
            data,
            label_column,
            no_header,
            no_normalize,
            out,
            dataset_name,
        } => {
            let args = MetricsArgs {
                predicted,
                truth,
                data,
                schema: CsvSchema {
                    has_header: !no_header,
                    label_column: label_column.as_deref().map(LabelColumn::parse),
                    ..CsvSchema::default()
                },
                normalize: !no_normalize,
                out,
                dataset_name,
            };
            let (_, text) = commands::cmd_metrics(&args)?;
            print!("{text}");
        }
        Command::ExportMatrices(args) => {
            // the matrices do not depend on k
            let cfg = args.resolve_or_k(Some(1))?;
            for path in commands::cmd_export_matrices(&cfg)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UNCA_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
