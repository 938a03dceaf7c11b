//! Neutrosophic k-means.
//!
//! Each point gets a truth degree `1 / (1 + d)` towards every centroid, an
//! indeterminacy degree from the spread of its distances to all centroids,
//! and a falsity degree `1 − T`. Centroids are truth-weighted means of all
//! points. Only the truth degrees drive the centroid updates and the labels;
//! indeterminacy and falsity are reported alongside.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{argmax, ClusterModel, Dataset, MembershipMatrix, ModelError};

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NkmError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("centroids have {centroid_dims} dimensions, data has {data_dims}")]
    DimensionMismatch { data_dims: usize, centroid_dims: usize },
    #[error("truth degree {0} outside (0, 1]")]
    OutOfRange(f64),
    #[error("k = {k} exceeds the number of points n = {n}")]
    KExceedsN { k: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    Random,
    KmeansPp,
    Heuristic,
}

impl FromStr for InitStrategy {
    type Err = NkmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "kmeans_pp" | "kmeans++" => Ok(Self::KmeansPp),
            "heuristic" => Ok(Self::Heuristic),
            other => Err(NkmError::InvalidConfig(format!("unknown init strategy {other:?}"))),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::KmeansPp => "kmeans_pp",
            Self::Heuristic => "heuristic",
        })
    }
}

/// Fitting parameters. Distance is always Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NkmConfig {
    pub k: usize,
    pub init: InitStrategy,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl NkmConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            init: InitStrategy::KmeansPp,
            seed: 42,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    /// Checks everything except `k ≤ n`, which needs the dataset.
    pub fn validate(&self) -> Result<(), NkmError> {
        if self.k == 0 {
            return Err(NkmError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(NkmError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(NkmError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn euclidean_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64, NkmError> {
    if a.len() != b.len() {
        return Err(NkmError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(distance_unchecked(a, b))
}

pub(crate) fn distance_unchecked(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn truth_degree(distance: f64) -> f64 {
    1.0 / (1.0 + distance)
}

/// Population variance `v` of the distances, bounded as `v / (1 + v)`.
pub fn indeterminacy_degree(distances: &[f64]) -> f64 {
    if distances.len() < 2 {
        return 0.0;
    }
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let variance = distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    variance / (1.0 + variance)
}

pub fn falsity_degree(truth: f64) -> Result<f64, NkmError> {
    if !(truth > 0.0 && truth <= 1.0) {
        return Err(NkmError::OutOfRange(truth));
    }
    Ok(1.0 - truth)
}

fn check_dims(d: &Dataset, centroids: ArrayView2<'_, f64>) -> Result<(), NkmError> {
    if centroids.ncols() != d.n_features() {
        return Err(NkmError::DimensionMismatch {
            data_dims: d.n_features(),
            centroid_dims: centroids.ncols(),
        });
    }
    Ok(())
}

/// Truth, indeterminacy and falsity of every point towards every centroid.
pub fn assign_memberships(d: &Dataset, centroids: ArrayView2<'_, f64>) -> Result<MembershipMatrix, NkmError> {
    check_dims(d, centroids)?;
    let n = d.n_points();
    let k = centroids.nrows();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = d.point(i);
            let distances: Vec<f64> = centroids.outer_iter().map(|c| distance_unchecked(x, c)).collect();
            let indeterminacy = indeterminacy_degree(&distances);
            (distances.into_iter().map(truth_degree).collect(), indeterminacy)
        })
        .collect();
    let mut truth = Vec::with_capacity(n * k);
    let mut indeterminacy = Vec::with_capacity(n);
    for (t, i) in rows {
        truth.extend(t);
        indeterminacy.push(i);
    }
    let truth = Array2::from_shape_vec((n, k), truth).expect("n*k truths");
    Ok(MembershipMatrix::from_truth(truth, &indeterminacy)?)
}

/// Truth-weighted mean of all points for each cluster.
pub fn update_centroids(d: &Dataset, m: &MembershipMatrix) -> Result<Array2<f64>, NkmError> {
    if m.n_points() != d.n_points() {
        return Err(NkmError::LengthMismatch {
            left: d.n_points(),
            right: m.n_points(),
        });
    }
    let x = d.features();
    let truth = m.truth();
    let (lo, hi) = feature_bounds(x);
    let mut centroids = truth.t().dot(&x);
    for (mut c, weights) in centroids.outer_iter_mut().zip(truth.axis_iter(Axis(1))) {
        let total = weights.sum();
        c /= total;
        // The exact weighted mean lies in the convex hull; clamping only removes rounding overshoot.
        for ((v, &l), &h) in c.iter_mut().zip(lo.iter()).zip(hi.iter()) {
            *v = v.clamp(l, h);
        }
    }
    Ok(centroids)
}

fn feature_bounds(x: ArrayView2<'_, f64>) -> (Array1<f64>, Array1<f64>) {
    let lo = x.fold_axis(Axis(0), f64::INFINITY, |a, &b| a.min(b));
    let hi = x.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b));
    (lo, hi)
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Initial centroids drawn from the data rows.
pub fn init_centroids(d: &Dataset, cfg: &NkmConfig) -> Result<Array2<f64>, NkmError> {
    cfg.validate()?;
    let n = d.n_points();
    if cfg.k > n {
        return Err(NkmError::KExceedsN { k: cfg.k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rows = match cfg.init {
        InitStrategy::Random => rand::seq::index::sample(&mut rng, n, cfg.k).into_vec(),
        InitStrategy::KmeansPp => kmeans_pp_rows(d, cfg.k, &mut rng),
        InitStrategy::Heuristic => farthest_point_rows(d, cfg.k),
    };
    Ok(d.features().select(Axis(0), &rows))
}

fn kmeans_pp_rows(d: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = d.n_points();
    let x = d.features();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // every remaining point coincides with a chosen centroid
            Err(_) => {
                let unchosen: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                unchosen[rng.random_range(0..unchosen.len())]
            }
        };
        chosen.push(next);
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(squared_distance(x.row(i), x.row(next)));
        }
        nearest[next] = 0.0;
    }
    chosen
}

/// Greedy farthest-point selection starting from the point farthest from the mean.
fn farthest_point_rows(d: &Dataset, k: usize) -> Vec<usize> {
    let x = d.features();
    let n = d.n_points();
    let mean = x.mean_axis(Axis(0)).expect("n >= 1");
    let first = first_max((0..n).map(|i| squared_distance(x.row(i), mean.view())));
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(first))).collect();
    while chosen.len() < k {
        let next = first_max(
            nearest
                .iter()
                .enumerate()
                .map(|(i, &v)| if chosen.contains(&i) { f64::NEG_INFINITY } else { v }),
        );
        chosen.push(next);
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(squared_distance(x.row(i), x.row(next)));
        }
    }
    chosen
}

fn first_max(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// State handed to a [`fit_with_observer`] callback after each iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Memberships computed from the centroids at the start of the iteration.
    pub memberships: &'a MembershipMatrix,
    /// Centroids after the update.
    pub centroids: ArrayView2<'a, f64>,
    pub shift: f64,
}

pub fn fit(d: &Dataset, cfg: &NkmConfig) -> Result<ClusterModel, NkmError> {
    fit_with_observer(d, cfg, |_| {})
}

/// Alternate membership assignment and centroid update until the largest
/// centroid displacement drops below the tolerance or the iteration budget
/// runs out.
pub fn fit_with_observer(
    d: &Dataset,
    cfg: &NkmConfig,
    mut observe: impl FnMut(&IterationState<'_>),
) -> Result<ClusterModel, NkmError> {
    let mut centroids = init_centroids(d, cfg)?;
    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 1..=cfg.max_iterations {
        let memberships = assign_memberships(d, centroids.view())?;
        let updated = update_centroids(d, &memberships)?;
        let shift = updated
            .outer_iter()
            .zip(centroids.outer_iter())
            .map(|(a, b)| distance_unchecked(a, b))
            .fold(0.0, f64::max);
        centroids = updated;
        trace.push(shift);
        observe(&IterationState {
            iteration,
            memberships: &memberships,
            centroids: centroids.view(),
            shift,
        });
        if shift < cfg.tolerance {
            converged = true;
            break;
        }
    }
    let memberships = assign_memberships(d, centroids.view())?;
    let labels = memberships.truth().outer_iter().map(argmax).collect();
    let iterations = trace.len();
    Ok(ClusterModel::new(centroids, memberships, labels, iterations, converged, trace)?)
}
