//! Shared domain types.
//!
//! Every type here is validated at construction and immutable afterwards;
//! the algorithmic modules only ever see data that satisfies the documented
//! invariants.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::Serialize;
use thiserror::Error;

/// Errors raised when constructing a domain type from invalid data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("empty input: {rows} rows, {cols} columns")]
    EmptyInput { rows: usize, cols: usize },
    #[error("non-finite value {value} at ({row}, {col})")]
    NonFiniteValue { row: usize, col: usize, value: f64 },
    #[error("ragged input: row {row} has {found} values, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("label length mismatch: {labels} labels for {rows} rows")]
    LabelLengthMismatch { rows: usize, labels: usize },
    #[error("feature name count mismatch: {names} names for {cols} columns")]
    FeatureNameMismatch { cols: usize, names: usize },
    #[error("{component} degree {value} outside [0, 1]")]
    DegreeOutOfRange { component: &'static str, value: f64 },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("diagonal entry {index} is {value}, expected 1")]
    NotReflexive { index: usize, value: f64 },
    #[error("entry ({row}, {col}) = {value} outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("lambda {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error("membership matrix shapes disagree")]
    ShapeMismatch,
    #[error("membership invariant violated at ({row}, {col}): {reason}")]
    InvalidMembership {
        row: usize,
        col: usize,
        reason: &'static str,
    },
    #[error("cluster model has no clusters")]
    NoClusters,
    #[error("label {label} at point {index} is not a cluster index below {k}")]
    LabelOutOfRange { index: usize, label: usize, k: usize },
    #[error("non-finite centroid coordinate at ({row}, {col})")]
    NonFiniteCentroid { row: usize, col: usize },
}

/// Index of the largest value, lowest index on ties. Returns 0 for an empty row.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = j;
        }
    }
    best
}

/// An n×p matrix of finite features with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Option<Vec<String>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Option<Vec<String>>) -> Result<Self, ModelError> {
        let (rows, cols) = features.dim();
        if rows == 0 || cols == 0 {
            return Err(ModelError::EmptyInput { rows, cols });
        }
        for ((row, col), &value) in features.indexed_iter() {
            if !value.is_finite() {
                return Err(ModelError::NonFiniteValue { row, col, value });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != rows {
                return Err(ModelError::LabelLengthMismatch {
                    rows,
                    labels: labels.len(),
                });
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self, ModelError> {
        if names.len() != self.n_features() {
            return Err(ModelError::FeatureNameMismatch {
                cols: self.n_features(),
                names: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn n_points(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Ground-truth labels encoded as dense indices in order of first appearance.
    pub fn label_indices(&self) -> Option<Vec<usize>> {
        self.labels.as_ref().map(|l| encode_labels(l))
    }

    /// Replace the feature matrix, keeping labels and names.
    pub(crate) fn map_features(&self, features: Array2<f64>) -> Self {
        debug_assert_eq!(features.dim(), self.features.dim());
        Self {
            features,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Encode arbitrary labels as dense `0..m` indices in order of first appearance.
pub fn encode_labels<L: PartialEq>(labels: &[L]) -> Vec<usize> {
    let mut seen: Vec<&L> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| *s == l) {
            Some(idx) => idx,
            None => {
                seen.push(l);
                seen.len() - 1
            }
        })
        .collect()
}

/// Build a [`Dataset`] from row vectors.
pub fn validate_dataset(raw: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Dataset, ModelError> {
    let rows = raw.len();
    let cols = raw.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(ModelError::EmptyInput { rows, cols });
    }
    let mut flat = Vec::with_capacity(rows * cols);
    for (row, values) in raw.iter().enumerate() {
        if values.len() != cols {
            return Err(ModelError::RaggedRows {
                row,
                expected: cols,
                found: values.len(),
            });
        }
        flat.extend_from_slice(values);
    }
    let features = Array2::from_shape_vec((rows, cols), flat).expect("shape checked above");
    Dataset::new(features, labels)
}

/// Truth, indeterminacy and falsity degrees of a single-valued neutrosophic element.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SvnsTriple {
    t: f64,
    i: f64,
    f: f64,
}

impl SvnsTriple {
    pub fn new(t: f64, i: f64, f: f64) -> Result<Self, ModelError> {
        for (component, value) in [("truth", t), ("indeterminacy", i), ("falsity", f)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::DegreeOutOfRange { component, value });
            }
        }
        Ok(Self { t, i, f })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn i(&self) -> f64 {
        self.i
    }

    pub fn f(&self) -> f64 {
        self.f
    }
}

/// Per-point, per-feature SVNS triples.
#[derive(Debug, Clone, PartialEq)]
pub struct SvnsRepresentation {
    triples: Array2<SvnsTriple>,
}

impl SvnsRepresentation {
    pub fn new(triples: Array2<SvnsTriple>) -> Result<Self, ModelError> {
        let (rows, cols) = triples.dim();
        if rows == 0 || cols == 0 {
            return Err(ModelError::EmptyInput { rows, cols });
        }
        Ok(Self { triples })
    }

    pub fn triples(&self) -> ArrayView2<'_, SvnsTriple> {
        self.triples.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, SvnsTriple> {
        self.triples.row(i)
    }

    pub fn n_points(&self) -> usize {
        self.triples.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.triples.ncols()
    }
}

/// Symmetric, reflexive n×n matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
}

impl SimilarityMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, ModelError> {
        let (rows, cols) = values.dim();
        if rows != cols {
            return Err(ModelError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(ModelError::EmptyInput { rows, cols });
        }
        for ((row, col), &value) in values.indexed_iter() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::EntryOutOfRange { row, col, value });
            }
            if row == col && value != 1.0 {
                return Err(ModelError::NotReflexive { index: row, value });
            }
            if col > row && value != values[[col, row]] {
                return Err(ModelError::NotSymmetric { row, col });
            }
        }
        Ok(Self { values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: Array2::eye(n),
        }
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

/// Binary λ-cut of a similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CutMatrix {
    bits: Array2<bool>,
    lambda: f64,
}

impl CutMatrix {
    pub fn new(bits: Array2<bool>, lambda: f64) -> Result<Self, ModelError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(ModelError::InvalidLambda(lambda));
        }
        let (rows, cols) = bits.dim();
        if rows != cols {
            return Err(ModelError::NotSquare { rows, cols });
        }
        for i in 0..rows {
            if !bits[[i, i]] {
                return Err(ModelError::NotReflexive {
                    index: i,
                    value: 0.0,
                });
            }
            for j in i + 1..rows {
                if bits[[i, j]] != bits[[j, i]] {
                    return Err(ModelError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { bits, lambda })
    }

    pub fn bits(&self) -> ArrayView2<'_, bool> {
        self.bits.view()
    }

    pub fn related(&self, i: usize, j: usize) -> bool {
        self.bits[[i, j]]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn size(&self) -> usize {
        self.bits.nrows()
    }
}

/// n×k truth, indeterminacy and falsity degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    truth: Array2<f64>,
    indeterminacy: Array2<f64>,
    falsity: Array2<f64>,
}

impl MembershipMatrix {
    /// Validates `T ∈ (0,1]`, `F = 1 − T` exactly, `I ∈ [0,1)` and constant `I` per row.
    pub fn new(
        truth: Array2<f64>,
        indeterminacy: Array2<f64>,
        falsity: Array2<f64>,
    ) -> Result<Self, ModelError> {
        if truth.dim() != indeterminacy.dim() || truth.dim() != falsity.dim() {
            return Err(ModelError::ShapeMismatch);
        }
        let (rows, cols) = truth.dim();
        if rows == 0 || cols == 0 {
            return Err(ModelError::EmptyInput { rows, cols });
        }
        for ((row, col), &t) in truth.indexed_iter() {
            let invalid = |reason| ModelError::InvalidMembership { row, col, reason };
            if !(t > 0.0 && t <= 1.0) {
                return Err(invalid("truth outside (0, 1]"));
            }
            if falsity[[row, col]] != 1.0 - t {
                return Err(invalid("falsity is not 1 - truth"));
            }
            let i = indeterminacy[[row, col]];
            if !(0.0..1.0).contains(&i) {
                return Err(invalid("indeterminacy outside [0, 1)"));
            }
            if i != indeterminacy[[row, 0]] {
                return Err(invalid("indeterminacy varies within a row"));
            }
        }
        Ok(Self {
            truth,
            indeterminacy,
            falsity,
        })
    }

    /// Build from truths and per-point indeterminacy; falsity is derived.
    pub fn from_truth(truth: Array2<f64>, row_indeterminacy: &[f64]) -> Result<Self, ModelError> {
        let (rows, cols) = truth.dim();
        if row_indeterminacy.len() != rows {
            return Err(ModelError::ShapeMismatch);
        }
        let falsity = truth.mapv(|t| 1.0 - t);
        let indeterminacy = Array2::from_shape_fn((rows, cols), |(i, _)| row_indeterminacy[i]);
        Self::new(truth, indeterminacy, falsity)
    }

    pub fn truth(&self) -> ArrayView2<'_, f64> {
        self.truth.view()
    }

    pub fn indeterminacy(&self) -> ArrayView2<'_, f64> {
        self.indeterminacy.view()
    }

    pub fn falsity(&self) -> ArrayView2<'_, f64> {
        self.falsity.view()
    }

    pub fn n_points(&self) -> usize {
        self.truth.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.truth.ncols()
    }

    /// The (shared) indeterminacy of each point.
    pub fn row_indeterminacy(&self) -> Vec<f64> {
        self.indeterminacy.column(0).to_vec()
    }
}

/// A fitted clustering: centroids, memberships, hard labels and convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Array2<f64>,
    memberships: MembershipMatrix,
    labels: Vec<usize>,
    iterations_run: usize,
    converged: bool,
    centroid_shift_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn new(
        centroids: Array2<f64>,
        memberships: MembershipMatrix,
        labels: Vec<usize>,
        iterations_run: usize,
        converged: bool,
        centroid_shift_trace: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let k = centroids.nrows();
        if k == 0 || centroids.ncols() == 0 {
            return Err(ModelError::NoClusters);
        }
        if memberships.n_clusters() != k || memberships.n_points() != labels.len() {
            return Err(ModelError::ShapeMismatch);
        }
        for ((row, col), v) in centroids.indexed_iter() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteCentroid { row, col });
            }
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(ModelError::LabelOutOfRange { index, label, k });
        }
        Ok(Self {
            centroids,
            memberships,
            labels,
            iterations_run,
            converged,
            centroid_shift_trace,
        })
    }

    pub fn centroids(&self) -> ArrayView2<'_, f64> {
        self.centroids.view()
    }

    pub fn memberships(&self) -> &MembershipMatrix {
        &self.memberships
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn centroid_shift_trace(&self) -> &[f64] {
        &self.centroid_shift_trace
    }

    pub fn n_clusters(&self) -> usize {
        self.centroids.nrows()
    }

    /// Same centroids and convergence record with new memberships and labels.
    pub fn with_assignments(
        &self,
        memberships: MembershipMatrix,
        labels: Vec<usize>,
    ) -> Result<Self, ModelError> {
        Self::new(
            self.centroids.clone(),
            memberships,
            labels,
            self.iterations_run,
            self.converged,
            self.centroid_shift_trace.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn single_row_dataset() {
        let d = validate_dataset(&[vec![1.0, 2.0]], None).unwrap();
        assert_eq!((d.n_points(), d.n_features()), (1, 2));
        assert!(d.labels().is_none());
    }

    #[test]
    fn nan_is_rejected_with_position() {
        let err = validate_dataset(&[vec![1.0], vec![f64::NAN]], None).unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteValue { row: 1, col: 0, .. }));
    }

    #[test]
    fn label_length_must_match() {
        let err = validate_dataset(&[vec![1.0, 2.0], vec![3.0, 4.0]], Some(vec!["a".into()])).unwrap_err();
        assert_eq!(err, ModelError::LabelLengthMismatch { rows: 2, labels: 1 });
    }

    #[test]
    fn empty_and_ragged_inputs() {
        assert!(matches!(validate_dataset(&[], None), Err(ModelError::EmptyInput { .. })));
        assert!(matches!(validate_dataset(&[vec![]], None), Err(ModelError::EmptyInput { .. })));
        assert!(matches!(
            validate_dataset(&[vec![1.0, 2.0], vec![1.0]], None),
            Err(ModelError::RaggedRows { row: 1, .. })
        ));
    }

    #[test]
    fn label_encoding_follows_first_appearance() {
        assert_eq!(encode_labels(&["b", "a", "b", "c"]), vec![0, 1, 0, 2]);
    }

    #[test]
    fn triple_bounds() {
        assert!(SvnsTriple::new(1.0, 1.0, 1.0).is_ok());
        assert!(SvnsTriple::new(1.1, 0.0, 0.0).is_err());
        assert!(SvnsTriple::new(0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn similarity_matrix_validation() {
        assert!(SimilarityMatrix::new(array![[1.0, 0.5], [0.5, 1.0]]).is_ok());
        assert!(matches!(
            SimilarityMatrix::new(array![[1.0, 0.5], [0.4, 1.0]]),
            Err(ModelError::NotSymmetric { .. })
        ));
        assert!(matches!(
            SimilarityMatrix::new(array![[0.9, 0.5], [0.5, 1.0]]),
            Err(ModelError::NotReflexive { .. })
        ));
        assert!(matches!(
            SimilarityMatrix::new(array![[1.0, 1.5], [1.5, 1.0]]),
            Err(ModelError::EntryOutOfRange { .. })
        ));
    }

    #[test]
    fn cut_matrix_validation() {
        let bits = array![[true, false], [false, true]];
        assert!(CutMatrix::new(bits.clone(), 0.5).is_ok());
        assert!(CutMatrix::new(bits.clone(), 0.0).is_err());
        assert!(CutMatrix::new(bits, 1.5).is_err());
        assert!(CutMatrix::new(array![[true, true], [false, true]], 0.5).is_err());
    }

    #[test]
    fn membership_validation() {
        let t = array![[1.0, 0.5]];
        assert!(MembershipMatrix::from_truth(t.clone(), &[0.25]).is_ok());
        let bad_f = MembershipMatrix::new(t.clone(), array![[0.0, 0.0]], array![[0.0, 0.4]]);
        assert!(bad_f.is_err());
        let uneven_i = MembershipMatrix::new(t.clone(), array![[0.0, 0.1]], array![[0.0, 0.5]]);
        assert!(uneven_i.is_err());
        assert!(MembershipMatrix::from_truth(array![[0.0, 0.5]], &[0.0]).is_err());
        assert!(MembershipMatrix::from_truth(t, &[1.0]).is_err());
    }

    #[test]
    fn cluster_model_rejects_bad_labels() {
        let m = MembershipMatrix::from_truth(array![[1.0]], &[0.0]).unwrap();
        assert!(ClusterModel::new(array![[0.0]], m.clone(), vec![0], 1, true, vec![0.0]).is_ok());
        assert!(ClusterModel::new(array![[0.0]], m.clone(), vec![1], 1, true, vec![]).is_err());
        assert!(ClusterModel::new(array![[f64::INFINITY]], m, vec![0], 1, true, vec![]).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(array![0.5, 0.5].view()), 0);
        assert_eq!(argmax(array![0.2, 0.9, 0.1].view()), 1);
        assert_eq!(argmin(&[3.0, 1.0, 1.0]), 1);
    }

    fn symmetric_unit(n: usize) -> impl Strategy<Value = Array2<f64>> {
        prop::collection::vec(0.0..=1.0f64, n * n).prop_map(move |v| {
            let mut m = Array2::from_shape_vec((n, n), v).unwrap();
            for i in 0..n {
                m[[i, i]] = 1.0;
                for j in 0..i {
                    m[[i, j]] = m[[j, i]];
                }
            }
            m
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn valid_similarity_round_trips(m in (1usize..8).prop_flat_map(symmetric_unit)) {
            let s = SimilarityMatrix::new(m.clone()).unwrap();
            prop_assert_eq!(s.values(), m.view());
            let n = s.size();
            for i in 0..n {
                prop_assert_eq!(s.get(i, i), 1.0);
                for j in 0..n {
                    prop_assert_eq!(s.get(i, j).to_bits(), s.get(j, i).to_bits());
                }
            }
        }

        #[test]
        fn valid_dataset_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e6..1e6f64, 3), 1..20)) {
            let d = validate_dataset(&rows, None).unwrap();
            for (i, r) in rows.iter().enumerate() {
                prop_assert_eq!(d.point(i).to_vec(), r.clone());
            }
        }
    }
}
