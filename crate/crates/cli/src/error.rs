use std::io;

use thiserror::Error;
use unca_core::graph::GraphError;
use unca_core::ingest::IngestError;
use unca_core::metrics::MetricsError;
use unca_core::neutro::NeutroError;
use unca_core::nkm::NkmError;
use unca_core::refine::RefineError;
use unca_core::ModelError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Neutro(#[from] NeutroError),
    #[error(transparent)]
    Nkm(#[from] NkmError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Short error class printed at the start of the diagnostic line.
    pub fn class(&self) -> &'static str {
        match self {
            Self::Config(_) => "ConfigError",
            Self::Ingest(e) => match e {
                IngestError::FileNotFound(_) => "FileNotFound",
                IngestError::ParseError { .. } | IngestError::Csv(_) => "ParseError",
                IngestError::EmptyFile => "EmptyFile",
                IngestError::LabelColumnNotFound(_) => "LabelColumnNotFound",
                IngestError::InvalidParameter(_) => "InvalidParameter",
                IngestError::Io(_) => "IoError",
                IngestError::Model(_) => "InvalidData",
            },
            Self::Model(_) => "InvalidData",
            Self::Neutro(_) => "SimilarityError",
            Self::Nkm(NkmError::KExceedsN { .. } | NkmError::InvalidConfig(_)) => "ConfigError",
            Self::Nkm(_) => "ClusteringError",
            Self::Refine(_) => "RefinementError",
            Self::Metrics(MetricsError::LengthMismatch { .. }) => "LengthMismatch",
            Self::Metrics(_) => "MetricsError",
            Self::Graph(_) | Self::Io(_) => "IoError",
            Self::Json(_) => "SerializationError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "ConfigError" => 2,
            _ => 1,
        }
    }

    /// Single-line diagnostic.
    pub fn diagnostic(&self) -> String {
        format!("error: {}: {}", self.class(), self.to_string().replace('\n', " "))
    }
}
