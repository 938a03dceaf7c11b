//! Run configuration: defaults, JSON config files and command-line overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unca_core::ingest::{CsvSchema, LabelColumn};
use unca_core::nkm::{InitStrategy, NkmConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use unca_core::refine::Defuzzifier;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Output artifacts a `cluster` run can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Model,
    Metrics,
    Graph,
    Mst,
    Matrices,
    Report,
}

impl Emit {
    pub const ALL: [Emit; 6] = [Self::Model, Self::Metrics, Self::Graph, Self::Mst, Self::Matrices, Self::Report];

    /// Everything except the O(n²) matrix dumps.
    pub fn defaults() -> BTreeSet<Emit> {
        [Self::Model, Self::Metrics, Self::Graph, Self::Mst, Self::Report].into()
    }
}

impl FromStr for Emit {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "model" => Self::Model,
            "metrics" => Self::Metrics,
            "graph" => Self::Graph,
            "mst" => Self::Mst,
            "matrices" => Self::Matrices,
            "report" => Self::Report,
            other => return Err(CliError::Config(format!("unknown emit target {other:?}"))),
        })
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Model => "model",
            Self::Metrics => "metrics",
            Self::Graph => "graph",
            Self::Mst => "mst",
            Self::Matrices => "matrices",
            Self::Report => "report",
        })
    }
}

/// Every configurable key, all optional. Used both for JSON config files
/// (flat keys) and for command-line flags; flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub input: Option<PathBuf>,
    pub has_header: Option<bool>,
    pub label_column: Option<String>,
    pub delimiter: Option<char>,
    pub normalize: Option<bool>,
    pub k: Option<usize>,
    pub init: Option<String>,
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub defuzz: Option<String>,
    pub out: Option<PathBuf>,
    pub emit: Option<Vec<String>>,
    pub skip_closure: Option<bool>,
    pub graph_every_iteration: Option<bool>,
    pub dataset_name: Option<String>,
}

impl ConfigLayer {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// `self` takes precedence over `base`.
    pub fn over(self, base: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            input: self.input.or(base.input),
            has_header: self.has_header.or(base.has_header),
            label_column: self.label_column.or(base.label_column),
            delimiter: self.delimiter.or(base.delimiter),
            normalize: self.normalize.or(base.normalize),
            k: self.k.or(base.k),
            init: self.init.or(base.init),
            seed: self.seed.or(base.seed),
            lambda: self.lambda.or(base.lambda),
            tolerance: self.tolerance.or(base.tolerance),
            max_iterations: self.max_iterations.or(base.max_iterations),
            defuzz: self.defuzz.or(base.defuzz),
            out: self.out.or(base.out),
            emit: self.emit.or(base.emit),
            skip_closure: self.skip_closure.or(base.skip_closure),
            graph_every_iteration: self.graph_every_iteration.or(base.graph_every_iteration),
            dataset_name: self.dataset_name.or(base.dataset_name),
        }
    }
}

/// Fully resolved settings for one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub has_header: bool,
    pub label_column: Option<String>,
    pub delimiter: char,
    pub normalize: bool,
    pub k: usize,
    pub init: InitStrategy,
    pub seed: u64,
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub defuzz: Defuzzifier,
    pub out: PathBuf,
    pub emit: BTreeSet<Emit>,
    pub skip_closure: bool,
    pub graph_every_iteration: bool,
    pub dataset_name: Option<String>,
}

impl RunConfig {
    /// Defaults for everything except the input path and `k`.
    pub fn new(input: impl Into<PathBuf>, k: usize) -> Self {
        Self {
            input: input.into(),
            has_header: true,
            label_column: None,
            delimiter: ',',
            normalize: true,
            k,
            init: InitStrategy::KmeansPp,
            seed: DEFAULT_SEED,
            lambda: DEFAULT_LAMBDA,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            defuzz: Defuzzifier::Max,
            out: PathBuf::from("unca-out"),
            emit: Emit::defaults(),
            skip_closure: false,
            graph_every_iteration: false,
            dataset_name: None,
        }
    }

    pub fn resolve(layer: ConfigLayer) -> Result<Self, CliError> {
        let input = layer.input.ok_or_else(|| CliError::Config("missing input path".into()))?;
        let k = layer.k.ok_or_else(|| CliError::Config("missing cluster count k".into()))?;
        let mut cfg = Self::new(input, k);
        if let Some(v) = layer.has_header {
            cfg.has_header = v;
        }
        cfg.label_column = layer.label_column;
        if let Some(v) = layer.delimiter {
            cfg.delimiter = v;
        }
        if let Some(v) = layer.normalize {
            cfg.normalize = v;
        }
        if let Some(v) = layer.init {
            cfg.init = v.parse().map_err(|e: unca_core::nkm::NkmError| CliError::Config(e.to_string()))?;
        }
        if let Some(v) = layer.seed {
            cfg.seed = v;
        }
        if let Some(v) = layer.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = layer.tolerance {
            cfg.tolerance = v;
        }
        if let Some(v) = layer.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = layer.defuzz {
            cfg.defuzz = v.parse().map_err(CliError::Config)?;
        }
        if let Some(v) = layer.out {
            cfg.out = v;
        }
        if let Some(list) = layer.emit {
            cfg.emit = list.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = layer.skip_closure {
            cfg.skip_closure = v;
        }
        if let Some(v) = layer.graph_every_iteration {
            cfg.graph_every_iteration = v;
        }
        cfg.dataset_name = layer.dataset_name;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.nkm_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        validate_lambda(self.lambda)?;
        if !self.delimiter.is_ascii() {
            return Err(CliError::Config(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        Ok(())
    }

    pub fn nkm_config(&self) -> NkmConfig {
        NkmConfig::new(self.k)
            .with_init(self.init)
            .with_seed(self.seed)
            .with_tolerance(self.tolerance)
            .with_max_iterations(self.max_iterations)
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            has_header: self.has_header,
            label_column: self.label_column.as_deref().map(LabelColumn::parse),
            delimiter: self.delimiter as u8,
        }
    }

    /// Name used to look up reference rows; falls back to the input file stem.
    pub fn dataset_label(&self) -> String {
        self.dataset_name.clone().unwrap_or_else(|| {
            self.input
                .file_stem()
                .map_or_else(|| "dataset".to_owned(), |s| s.to_string_lossy().into_owned())
        })
    }
}

pub fn validate_lambda(lambda: f64) -> Result<(), CliError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(CliError::Config(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    Ok(())
}
