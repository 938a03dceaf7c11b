//! Post-fit refinement and defuzzification.
//!
//! Points and centroids are compared through their SVNS triples; similarities
//! under the confidence level λ are dropped before reassignment. The
//! defuzzifiers turn membership degrees into one hard label per point.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use thiserror::Error;

use crate::model::{argmax, argmin, ClusterModel, Dataset, MembershipMatrix, ModelError};
use crate::neutro::{neutrosophify, neutrosophify_points, row_similarity, NeutroError};
use crate::nkm::distance_unchecked;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("centroid coordinate {value} at ({row}, {col}) outside [0, 1]; the data must be normalized")]
    CentroidOutOfUnitRange { row: usize, col: usize, value: f64 },
    #[error("lambda {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Neutro(#[from] NeutroError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome of [`refine_assignments`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinementReport {
    pub reassigned_count: usize,
    /// Points whose whole filtered row was zero; they keep their previous label.
    pub suppressed_count: usize,
    pub final_labels: Vec<usize>,
}

/// SVNS similarity between every point and every centroid.
pub fn point_cluster_refined_truth(d: &Dataset, model: &ClusterModel) -> Result<Array2<f64>, RefineError> {
    let centroids = model.centroids();
    if centroids.ncols() != d.n_features() {
        return Err(RefineError::DimensionMismatch(format!(
            "centroids have {} features, data has {}",
            centroids.ncols(),
            d.n_features()
        )));
    }
    if let Some(((row, col), &value)) = centroids.indexed_iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(RefineError::CentroidOutOfUnitRange { row, col, value });
    }
    let points = neutrosophify(d)?;
    let centers = neutrosophify_points(centroids)?;
    Ok(Array2::from_shape_fn((d.n_points(), model.n_clusters()), |(i, j)| {
        row_similarity(points.row(i), centers.row(j))
    }))
}

/// Keep `s` when it reaches `λ`, otherwise zero.
pub fn filter_similarity(s: f64, lambda: f64) -> f64 {
    if s >= lambda {
        s
    } else {
        0.0
    }
}

/// Reassign every point to its best λ-filtered refined similarity.
///
/// The returned model keeps the fitted centroids; its truths are the refined
/// (unfiltered) similarities with falsity recomputed and indeterminacy
/// carried over.
pub fn refine_assignments(
    d: &Dataset,
    model: &ClusterModel,
    lambda: f64,
) -> Result<(ClusterModel, RefinementReport), RefineError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(RefineError::InvalidLambda(lambda));
    }
    let refined = point_cluster_refined_truth(d, model)?;
    let mut labels = Vec::with_capacity(d.n_points());
    let mut suppressed_count = 0;
    for (row, &prior) in refined.outer_iter().zip(model.labels()) {
        let filtered = row.mapv(|s| filter_similarity(s, lambda));
        if filtered.iter().all(|&s| s == 0.0) {
            suppressed_count += 1;
            labels.push(prior);
        } else {
            labels.push(argmax(filtered.view()));
        }
    }
    let reassigned_count = labels.iter().zip(model.labels()).filter(|(a, b)| a != b).count();
    let memberships = MembershipMatrix::from_truth(refined, &model.memberships().row_indeterminacy())?;
    let refined_model = model.with_assignments(memberships, labels.clone())?;
    Ok((
        refined_model,
        RefinementReport {
            reassigned_count,
            suppressed_count,
            final_labels: labels,
        },
    ))
}

/// Highest truth degree per point, lowest index on ties.
pub fn defuzz_max(m: &MembershipMatrix) -> Vec<usize> {
    m.truth().outer_iter().map(argmax).collect()
}

fn check_centroids(m: &MembershipMatrix, centroids: ArrayView2<'_, f64>) -> Result<(), RefineError> {
    if centroids.nrows() != m.n_clusters() {
        return Err(RefineError::DimensionMismatch(format!(
            "{} centroids for {} membership columns",
            centroids.nrows(),
            m.n_clusters()
        )));
    }
    Ok(())
}

/// Truth-weighted average of the centroids for every point.
pub fn weighted_representatives(
    m: &MembershipMatrix,
    centroids: ArrayView2<'_, f64>,
) -> Result<Array2<f64>, RefineError> {
    check_centroids(m, centroids)?;
    let truth = m.truth();
    let mut reps = truth.dot(&centroids);
    for (mut rep, weights) in reps.outer_iter_mut().zip(truth.outer_iter()) {
        rep /= weights.sum();
    }
    Ok(reps)
}

fn nearest_centroid(reps: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>) -> Vec<usize> {
    reps.outer_iter()
        .map(|rep| {
            let distances: Vec<f64> = centroids.outer_iter().map(|c| distance_unchecked(rep, c)).collect();
            argmin(&distances)
        })
        .collect()
}

/// Representative points plus the label of the centroid nearest each one.
pub fn defuzz_weighted_average(
    m: &MembershipMatrix,
    centroids: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Vec<usize>), RefineError> {
    let reps = weighted_representatives(m, centroids)?;
    let labels = nearest_centroid(reps.view(), centroids);
    Ok((reps, labels))
}

/// Cluster whose centroid lies closest to the truth-weighted average position.
pub fn defuzz_center_of_gravity(
    m: &MembershipMatrix,
    centroids: ArrayView2<'_, f64>,
) -> Result<Vec<usize>, RefineError> {
    let reps = weighted_representatives(m, centroids)?;
    Ok(nearest_centroid(reps.view(), centroids))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Defuzzifier {
    Max,
    Weighted,
    Cog,
}

impl Defuzzifier {
    pub fn apply(self, m: &MembershipMatrix, centroids: ArrayView2<'_, f64>) -> Result<Vec<usize>, RefineError> {
        match self {
            Self::Max => Ok(defuzz_max(m)),
            Self::Weighted => defuzz_weighted_average(m, centroids).map(|(_, l)| l),
            Self::Cog => defuzz_center_of_gravity(m, centroids),
        }
    }
}

impl FromStr for Defuzzifier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Self::Max),
            "weighted" => Ok(Self::Weighted),
            "cog" => Ok(Self::Cog),
            other => Err(format!("unknown defuzzifier {other:?} (expected max, weighted or cog)")),
        }
    }
}

impl fmt::Display for Defuzzifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Max => "max",
            Self::Weighted => "weighted",
            Self::Cog => "cog",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{make_blobs, min_max_normalize, BlobSpec};
    use crate::metrics::adjusted_rand;
    use crate::model::{validate_dataset, SvnsTriple};
    use crate::neutro::{neutrosophify_value, svns_similarity};
    use crate::nkm::{assign_memberships, fit, NkmConfig};
    use ndarray::array;
    use proptest::prelude::*;

    fn memberships(truth: Array2<f64>) -> MembershipMatrix {
        let n = truth.nrows();
        MembershipMatrix::from_truth(truth, &vec![0.0; n]).unwrap()
    }

    fn model_at(centroids: Array2<f64>, d: &Dataset) -> ClusterModel {
        let m = assign_memberships(d, centroids.view()).unwrap();
        let labels = defuzz_max(&m);
        ClusterModel::new(centroids, m, labels, 1, true, vec![0.0]).unwrap()
    }

    fn unit_data(rows: &[&[f64]]) -> Dataset {
        validate_dataset(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), None).unwrap()
    }

    #[test]
    fn refined_truth_examples() {
        let d = unit_data(&[&[0.2, 0.7]]);
        let model = model_at(array![[0.2, 0.7]], &d);
        assert_eq!(point_cluster_refined_truth(&d, &model).unwrap(), array![[1.0]]);
    }

    #[test]
    fn refined_truth_matches_entry_oracle() {
        let d = unit_data(&[&[0.0, 0.1], &[0.5, 0.9], &[1.0, 0.3]]);
        let centroids = array![[0.25, 0.4], [0.8, 0.6]];
        let model = model_at(centroids.clone(), &d);
        let refined = point_cluster_refined_truth(&d, &model).unwrap();
        let triples = |row: &[f64]| -> Vec<SvnsTriple> { row.iter().map(|&v| neutrosophify_value(v).unwrap()).collect() };
        for i in 0..3 {
            for j in 0..2 {
                let expected = svns_similarity(
                    &triples(&d.point(i).to_vec()),
                    &triples(&centroids.row(j).to_vec()),
                )
                .unwrap();
                assert_eq!(refined[[i, j]], expected);
            }
        }
    }

    #[test]
    fn unnormalized_centroids_are_rejected() {
        let d = unit_data(&[&[0.0], &[3.0]]);
        let model = model_at(array![[2.0]], &d);
        assert!(matches!(
            point_cluster_refined_truth(&d, &model),
            Err(RefineError::CentroidOutOfUnitRange { .. })
        ));
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_similarity(0.7, 0.5), 0.7);
        assert_eq!(filter_similarity(0.3, 0.5), 0.0);
        assert_eq!(filter_similarity(0.5, 0.5), 0.5);
    }

    #[test]
    fn tiny_lambda_never_suppresses() {
        let d = unit_data(&[&[0.0], &[0.1], &[0.9], &[1.0]]);
        let model = model_at(array![[0.05], [0.95]], &d);
        let (refined, report) = refine_assignments(&d, &model, 1e-9).unwrap();
        assert_eq!(report.suppressed_count, 0);
        assert_eq!(report.final_labels, defuzz_max(refined.memberships()));
        assert_eq!(refined.centroids(), model.centroids());
    }

    #[test]
    fn unit_lambda_suppresses_everything() {
        let d = unit_data(&[&[0.0], &[0.1], &[0.9], &[1.0]]);
        let model = model_at(array![[0.05], [0.95]], &d);
        let (refined, report) = refine_assignments(&d, &model, 1.0).unwrap();
        assert_eq!(report.suppressed_count, 4);
        assert_eq!(report.reassigned_count, 0);
        assert_eq!(report.final_labels, model.labels());
        assert_eq!(refined.labels(), model.labels());
        assert!(refine_assignments(&d, &model, 0.0).is_err());
    }

    #[test]
    fn refined_memberships_keep_indeterminacy() {
        let d = unit_data(&[&[0.0], &[0.4], &[1.0]]);
        let model = model_at(array![[0.1], [0.9]], &d);
        let (refined, _) = refine_assignments(&d, &model, 0.5).unwrap();
        assert_eq!(
            refined.memberships().indeterminacy(),
            model.memberships().indeterminacy()
        );
        let m = refined.memberships();
        for (t, f) in m.truth().iter().zip(m.falsity().iter()) {
            assert_eq!(*f, 1.0 - t);
        }
    }

    #[test]
    fn separated_blobs_survive_refinement() {
        let raw = make_blobs(BlobSpec {
            k: 2,
            n_per: 30,
            p: 2,
            separation: 10.0,
            spread: 0.5,
            seed: 4,
        })
        .unwrap();
        let d = min_max_normalize(&raw);
        let model = fit(&d, &NkmConfig::new(2)).unwrap();
        let (_, report) = refine_assignments(&d, &model, 0.5).unwrap();
        assert_eq!(adjusted_rand(model.labels(), &report.final_labels).unwrap(), 1.0);
    }

    #[test]
    fn defuzz_max_examples() {
        assert_eq!(defuzz_max(&memberships(array![[0.2, 0.9, 0.1]])), [1]);
        assert_eq!(defuzz_max(&memberships(array![[0.5, 0.5]])), [0]);
        assert_eq!(defuzz_max(&memberships(array![[0.3], [0.8]])), [0, 0]);
    }

    #[test]
    fn weighted_average_examples() {
        let (reps, labels) = defuzz_weighted_average(&memberships(array![[0.4]]), array![[2.0, 3.0]].view()).unwrap();
        assert!((&reps - &array![[2.0, 3.0]]).iter().all(|d| d.abs() < 1e-12));
        assert_eq!(labels, [0]);

        let (reps, labels) = defuzz_weighted_average(&memberships(array![[1.0, 1.0]]), array![[0.0], [2.0]].view()).unwrap();
        assert_eq!((reps, labels), (array![[1.0]], vec![0]));

        let (reps, labels) = defuzz_weighted_average(&memberships(array![[0.9, 0.1]]), array![[0.0], [10.0]].view()).unwrap();
        assert!((reps[[0, 0]] - 1.0).abs() < 1e-12);
        assert_eq!(labels, [0]);

        assert!(defuzz_weighted_average(&memberships(array![[0.9, 0.1]]), array![[0.0]].view()).is_err());
    }

    #[test]
    fn center_of_gravity_examples() {
        let m = memberships(array![[0.3], [0.6]]);
        assert_eq!(defuzz_center_of_gravity(&m, array![[1.0]].view()).unwrap(), [0, 0]);
        // all weight on centroid 2 puts the representative exactly on it
        let m = memberships(array![[1e-300, 1e-300, 1.0]]);
        let c = array![[0.0], [5.0], [9.0]];
        assert_eq!(defuzz_center_of_gravity(&m, c.view()).unwrap(), [2]);
        let m = memberships(array![[0.9, 0.1]]);
        assert_eq!(defuzz_center_of_gravity(&m, array![[0.0], [10.0]].view()).unwrap(), [0]);
    }

    #[test]
    fn defuzzifier_parsing() {
        assert_eq!("cog".parse::<Defuzzifier>().unwrap(), Defuzzifier::Cog);
        assert!("centroid".parse::<Defuzzifier>().is_err());
    }

    proptest! {
        #[test]
        fn filter_is_idempotent(s in 0.0..=1.0f64, lambda in 1e-9..=1.0f64) {
            let once = filter_similarity(s, lambda);
            prop_assert_eq!(filter_similarity(once, lambda), once);
        }

        #[test]
        fn lambda_below_every_refined_truth_suppresses_nothing(
            rows in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 2), 2..15),
        ) {
            let d = validate_dataset(&rows, None).unwrap();
            let model = fit(&d, &NkmConfig::new(2)).unwrap();
            let refined = point_cluster_refined_truth(&d, &model).unwrap();
            let floor = refined.iter().copied().fold(f64::INFINITY, f64::min);
            let (_, report) = refine_assignments(&d, &model, floor).unwrap();
            prop_assert_eq!(report.suppressed_count, 0);
        }
    }
}
