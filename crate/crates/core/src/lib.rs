//! Neutrosophic clustering.
//!
//! The pipeline runs from CSV ingestion and min-max normalization through
//! SVNS similarity, max-min transitive closure and λ-cut partitions, to
//! neutrosophic k-means, a cluster MST, SVNS refinement and
//! defuzzification. Validity indices score the result.

pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod neutro;
pub mod nkm;
pub mod refine;

pub use graph::{build_cluster_graph, build_mst, ClusterGraph, SpanningTree};
pub use ingest::{load_csv, min_max_normalize, CsvSchema, LabelColumn};
pub use metrics::MetricsReport;
pub use model::{
    ClusterModel, CutMatrix, Dataset, MembershipMatrix, ModelError, SimilarityMatrix, SvnsRepresentation, SvnsTriple,
};
pub use neutro::ClosureResult;
pub use nkm::{fit, InitStrategy, NkmConfig};
pub use refine::{Defuzzifier, RefinementReport};
