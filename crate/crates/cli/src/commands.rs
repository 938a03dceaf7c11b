//! Subcommand implementations. Each command computes everything in memory
//! first and only then writes its files, removing any it managed to write if
//! a later write fails.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use serde_json::{json, Value};
use unca_core::graph::{build_cluster_graph, build_mst, centroid_similarity, graph_from_similarity, render_dot, render_json};
use unca_core::ingest::{load_csv, min_max_normalize, CsvSchema};
use unca_core::metrics::{self, reference_row, render_table, MetricsReport, ReferenceRow, REFERENCE_TABLE};
use unca_core::model::encode_labels;
use unca_core::neutro::{
    block_count, build_similarity_matrix, cut_partition, lambda_cut, neutrosophify, transitive_closure,
    DEFAULT_MAX_SQUARINGS,
};
use unca_core::nkm::{fit_with_observer, NkmError};
use unca_core::refine::{refine_assignments, Defuzzifier};
use unca_core::{
    ClosureResult, ClusterGraph, ClusterModel, Dataset, MembershipMatrix, RefinementReport, SimilarityMatrix,
    SpanningTree,
};

use crate::config::{validate_lambda, Emit, RunConfig};
use crate::error::CliError;

/// Load the configured input, normalizing unless disabled.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let raw = load_csv(&cfg.input, &cfg.schema())?;
    Ok(if cfg.normalize { min_max_normalize(&raw) } else { raw })
}

/// Closure of the SVNS similarity matrix and its λ-cut partition.
#[derive(Debug, Clone)]
pub struct ClosureStage {
    pub similarity: SimilarityMatrix,
    pub closure: ClosureResult,
    pub partition: Vec<usize>,
}

pub fn closure_stage(d: &Dataset, lambda: f64) -> Result<ClosureStage, CliError> {
    let similarity = build_similarity_matrix(&neutrosophify(d)?);
    let closure = transitive_closure(&similarity, DEFAULT_MAX_SQUARINGS);
    let partition = cut_partition(&lambda_cut(&closure.matrix, lambda)?)?;
    Ok(ClosureStage {
        similarity,
        closure,
        partition,
    })
}

/// Validity indices for the emitted labels. Internal indices are absent when
/// the labeling has a single cluster; external ones when there is no ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsDocument {
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub notes: Vec<String>,
}

impl MetricsDocument {
    pub fn compute(points: ArrayView2<'_, f64>, predicted: &[usize], truth: Option<&[usize]>) -> Result<Self, CliError> {
        let mut notes = Vec::new();
        let mut internal = |r: Result<f64, metrics::MetricsError>, name: &str| match r {
            Ok(v) => Ok(Some(v)),
            Err(e @ (metrics::MetricsError::SingleCluster | metrics::MetricsError::CoincidentCentroids { .. })) => {
                notes.push(format!("{name}: {e}"));
                Ok(None)
            }
            Err(e) => Err(e),
        };
        let silhouette = internal(metrics::silhouette(points, predicted), "silhouette")?;
        let davies_bouldin = internal(metrics::davies_bouldin(points, predicted), "davies_bouldin")?;
        let (ari, nmi) = match truth {
            Some(t) if t.len() >= 2 => (Some(metrics::adjusted_rand(t, predicted)?), Some(metrics::nmi(t, predicted)?)),
            _ => (None, None),
        };
        Ok(Self {
            silhouette,
            davies_bouldin,
            ari,
            nmi,
            notes,
        })
    }

    pub fn as_report(&self) -> MetricsReport {
        MetricsReport {
            silhouette: self.silhouette.unwrap_or(f64::NAN),
            davies_bouldin: self.davies_bouldin.unwrap_or(f64::NAN),
            ari: self.ari,
            nmi: self.nmi,
        }
    }
}

/// Everything a `cluster` run computes.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: RunConfig,
    pub dataset: Dataset,
    pub closure: Option<ClosureStage>,
    pub fitted: ClusterModel,
    /// Centroids after every iteration, kept only for per-iteration graph output.
    pub centroid_history: Vec<Array2<f64>>,
    pub graph: ClusterGraph,
    pub mst: SpanningTree,
    pub refined: ClusterModel,
    pub refinement: RefinementReport,
    pub labels: Vec<usize>,
    pub metrics: MetricsDocument,
}

/// Ingestion, similarity closure and λ-cut, neutrosophic k-means, cluster
/// graph and MST, refinement, defuzzification and metrics, in that order.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineRun, CliError> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    if cfg.k > dataset.n_points() {
        return Err(NkmError::KExceedsN {
            k: cfg.k,
            n: dataset.n_points(),
        }
        .into());
    }
    info!("loaded {} points with {} features", dataset.n_points(), dataset.n_features());

    let closure = if cfg.skip_closure {
        None
    } else {
        let stage = closure_stage(&dataset, cfg.lambda)?;
        info!(
            "closure after {} squarings, {} blocks at lambda {}",
            stage.closure.squarings,
            block_count(&stage.partition),
            cfg.lambda
        );
        Some(stage)
    };

    let mut centroid_history = Vec::new();
    let fitted = fit_with_observer(&dataset, &cfg.nkm_config(), |state| {
        if cfg.graph_every_iteration {
            centroid_history.push(state.centroids.to_owned());
        }
    })?;
    info!("fit ran {} iterations, converged = {}", fitted.iterations_run(), fitted.converged());

    let graph = build_cluster_graph(&fitted);
    let mst = build_mst(&graph);

    let (refined, refinement) = refine_assignments(&dataset, &fitted, cfg.lambda)?;
    info!(
        "refinement reassigned {}, suppressed {}",
        refinement.reassigned_count, refinement.suppressed_count
    );
    let labels = match cfg.defuzz {
        // max-membership on the thresholded truths is exactly the refinement assignment
        Defuzzifier::Max => refinement.final_labels.clone(),
        rule => rule.apply(refined.memberships(), refined.centroids())?,
    };

    let truth = dataset.label_indices();
    let metrics = MetricsDocument::compute(dataset.features(), &labels, truth.as_deref())?;
    Ok(PipelineRun {
        config: cfg.clone(),
        dataset,
        closure,
        fitted,
        centroid_history,
        graph,
        mst,
        refined,
        refinement,
        labels,
        metrics,
    })
}

fn rows(m: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

fn memberships_json(m: &MembershipMatrix) -> Value {
    json!({
        "truth": rows(m.truth()),
        "indeterminacy": rows(m.indeterminacy()),
        "falsity": rows(m.falsity()),
    })
}

fn pretty(value: &Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    text.into_bytes()
}

fn to_json<T: Serialize>(value: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(value)?)
}

pub fn model_json(run: &PipelineRun) -> Result<Value, CliError> {
    let closure = run.closure.as_ref().map(|c| {
        json!({
            "lambda": run.config.lambda,
            "squarings": c.closure.squarings,
            "converged": c.closure.converged,
            "block_count": block_count(&c.partition),
            "partition": c.partition,
        })
    });
    Ok(json!({
        "centroids": rows(run.fitted.centroids()),
        "centroid_shift_trace": run.fitted.centroid_shift_trace(),
        "closure": closure,
        "config": to_json(&run.config)?,
        "converged": run.fitted.converged(),
        "fitted_labels": run.fitted.labels(),
        "iterations_run": run.fitted.iterations_run(),
        "labels": run.labels,
        "memberships": memberships_json(run.fitted.memberships()),
        "seed": run.config.seed,
    }))
}

fn mst_json(t: &SpanningTree) -> Value {
    let edges: Vec<Value> = t
        .edges
        .iter()
        .map(|e| json!({ "i": e.i, "j": e.j, "weight": e.weight }))
        .collect();
    json!({ "edges": edges, "total_weight": t.total_weight })
}

/// Matrix as CSV, 17 significant digits per entry.
pub fn matrix_csv(m: ArrayView2<'_, f64>) -> String {
    let mut out = String::new();
    for row in m.outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn bits_csv(m: ArrayView2<'_, bool>) -> String {
    let mut out = String::new();
    for row in m.outer_iter() {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn references_for(dataset: &str) -> Vec<ReferenceRow> {
    let wanted = dataset.to_ascii_lowercase();
    let matching: Vec<ReferenceRow> = REFERENCE_TABLE
        .iter()
        .filter(|r| r.method == "UNCA" && wanted.contains(&r.dataset.to_ascii_lowercase()))
        .copied()
        .collect();
    if matching.is_empty() {
        REFERENCE_TABLE.iter().filter(|r| r.method == "UNCA").copied().collect()
    } else {
        matching
    }
}

/// Metrics table followed by the published rows for the named dataset.
pub fn report_text(method: &str, dataset: &str, metrics: &MetricsDocument) -> String {
    let mut text = render_table(method, dataset, &metrics.as_report(), &references_for(dataset));
    for note in &metrics.notes {
        let _ = writeln!(text, "note: {note}");
    }
    text
}

/// File name and contents of every requested artifact.
pub fn render_outputs(run: &PipelineRun) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let emit = &run.config.emit;
    let mut files = Vec::new();
    if emit.contains(&Emit::Model) {
        files.push(("model.json".into(), pretty(&model_json(run)?)));
    }
    if emit.contains(&Emit::Metrics) {
        files.push(("metrics.json".into(), pretty(&to_json(&run.metrics)?)));
    }
    if emit.contains(&Emit::Graph) {
        files.push(("graph.dot".into(), render_dot(&run.graph, &run.mst).into_bytes()));
        files.push(("graph.json".into(), render_json(&run.graph, &run.mst).into_bytes()));
        for (i, centroids) in run.centroid_history.iter().enumerate() {
            let g = graph_from_similarity(centroid_similarity(centroids.view()));
            let t = build_mst(&g);
            files.push((format!("graph_iter_{:04}.dot", i + 1), render_dot(&g, &t).into_bytes()));
            files.push((format!("graph_iter_{:04}.json", i + 1), render_json(&g, &t).into_bytes()));
        }
    }
    if emit.contains(&Emit::Mst) {
        files.push(("mst.json".into(), pretty(&mst_json(&run.mst))));
    }
    if emit.contains(&Emit::Report) {
        let mut doc = to_json(&run.refinement)?;
        doc["lambda"] = json!(run.config.lambda);
        doc["defuzz"] = json!(run.config.defuzz.to_string());
        doc["labels"] = json!(run.labels);
        doc["refined_memberships"] = memberships_json(run.refined.memberships());
        files.push(("refinement.json".into(), pretty(&doc)));
        let text = report_text("UNCA (this run)", &run.config.dataset_label(), &run.metrics);
        files.push(("report.txt".into(), text.into_bytes()));
    }
    if emit.contains(&Emit::Matrices) {
        if let Some(c) = &run.closure {
            files.push(("similarity.csv".into(), matrix_csv(c.similarity.values()).into_bytes()));
            files.push(("closure.csv".into(), matrix_csv(c.closure.matrix.values()).into_bytes()));
            let cut = lambda_cut(&c.closure.matrix, run.config.lambda)?;
            files.push(("cut.csv".into(), bits_csv(cut.bits()).into_bytes()));
        }
    }
    Ok(files)
}

/// Write all files into `dir`; on any failure the files already written are removed.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

/// Run the full pipeline and write the requested artifacts.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<(PipelineRun, Vec<PathBuf>), CliError> {
    let run = run_pipeline(cfg)?;
    let files = render_outputs(&run)?;
    let written = write_outputs(&cfg.out, &files)?;
    Ok((run, written))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// Blocks of the λ-cut partition; absent when the closure is skipped.
    pub blocks: Option<usize>,
    pub suppressed: usize,
    /// ARI of the refined labels against ground truth, when available.
    pub ari: Option<f64>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,blocks,suppressed,ari_if_truth\n");
    for r in rows {
        let blocks = r.blocks.map(|b| b.to_string()).unwrap_or_default();
        let ari = r.ari.map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.lambda, blocks, r.suppressed, ari);
    }
    out
}

/// Closure and fit once, then cut and refine at every λ. Writes `lambda_sweep.csv`.
pub fn cmd_sweep_lambda(cfg: &RunConfig, lambdas: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    cfg.validate()?;
    if lambdas.is_empty() {
        return Err(CliError::Config("no lambda values given".into()));
    }
    for &l in lambdas {
        validate_lambda(l)?;
    }
    let dataset = load_dataset(cfg)?;
    let closure = if cfg.skip_closure {
        None
    } else {
        let similarity = build_similarity_matrix(&neutrosophify(&dataset)?);
        Some(transitive_closure(&similarity, DEFAULT_MAX_SQUARINGS))
    };
    let fitted = fit_with_observer(&dataset, &cfg.nkm_config(), |_| {})?;
    let truth = dataset.label_indices();

    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let blocks = match &closure {
            Some(c) => Some(block_count(&cut_partition(&lambda_cut(&c.matrix, lambda)?)?)),
            None => None,
        };
        let (_, report) = refine_assignments(&dataset, &fitted, lambda)?;
        let ari = match truth.as_deref() {
            Some(t) if t.len() >= 2 => Some(metrics::adjusted_rand(t, &report.final_labels)?),
            _ => None,
        };
        rows.push(SweepRow {
            lambda,
            blocks,
            suppressed: report.suppressed_count,
            ari,
        });
    }
    write_outputs(&cfg.out, &[("lambda_sweep.csv".into(), sweep_csv(&rows).into_bytes())])?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct MetricsArgs {
    pub predicted: PathBuf,
    pub truth: PathBuf,
    pub data: PathBuf,
    pub schema: CsvSchema,
    pub normalize: bool,
    pub out: PathBuf,
    pub dataset_name: Option<String>,
}

/// One label per line; blank lines are skipped.
pub fn read_label_file(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => unca_core::ingest::IngestError::FileNotFound(path.display().to_string()).into(),
        _ => CliError::Io(e),
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Score predicted labels against truth on the given data; writes
/// `metrics.json` and returns it together with the text report.
pub fn cmd_metrics(args: &MetricsArgs) -> Result<(MetricsDocument, String), CliError> {
    let predicted = encode_labels(&read_label_file(&args.predicted)?);
    let truth = encode_labels(&read_label_file(&args.truth)?);
    if predicted.len() != truth.len() {
        return Err(metrics::MetricsError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        }
        .into());
    }
    let raw = load_csv(&args.data, &args.schema)?;
    let data = if args.normalize { min_max_normalize(&raw) } else { raw };
    let doc = MetricsDocument::compute(data.features(), &predicted, Some(&truth))?;
    let dataset = args.dataset_name.clone().unwrap_or_else(|| {
        args.data
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
    });
    let text = report_text("computed", &dataset, &doc);
    write_outputs(&args.out, &[("metrics.json".into(), pretty(&to_json(&doc)?))])?;
    Ok((doc, text))
}

/// Write the similarity, closure and λ-cut matrices as CSV.
pub fn cmd_export_matrices(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    validate_lambda(cfg.lambda)?;
    let dataset = load_dataset(cfg)?;
    let stage = closure_stage(&dataset, cfg.lambda)?;
    let cut = lambda_cut(&stage.closure.matrix, cfg.lambda)?;
    let files = vec![
        ("similarity.csv".to_owned(), matrix_csv(stage.similarity.values()).into_bytes()),
        ("closure.csv".to_owned(), matrix_csv(stage.closure.matrix.values()).into_bytes()),
        ("cut.csv".to_owned(), bits_csv(cut.bits()).into_bytes()),
    ];
    write_outputs(&cfg.out, &files)
}

/// `Some(row)` when the published table has the given method/dataset pair.
pub fn published(method: &str, dataset: &str) -> Option<&'static ReferenceRow> {
    reference_row(method, dataset)
}
