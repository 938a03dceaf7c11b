//! Neutrosophic similarity and fuzzy-equivalence machinery.
//!
//! Normalized features are mapped to SVNS triples, compared pairwise into a
//! similarity matrix, closed under max-min composition and finally cut at a
//! confidence level λ into an equivalence partition.

use ndarray::{Array2, ArrayView1, ArrayView2};
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CutMatrix, Dataset, ModelError, SimilarityMatrix, SvnsRepresentation, SvnsTriple};

/// Default bound on the number of squarings in [`transitive_closure`].
pub const DEFAULT_MAX_SQUARINGS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeutroError {
    #[error("feature value {value} at ({row}, {col}) is outside [0, 1]; normalize first")]
    NotNormalized { row: usize, col: usize, value: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("lambda {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error("cut relation is not transitive: {i} and {j} share a block but are unrelated")]
    NotEquivalence { i: usize, j: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Map one normalized value to `(t, i, f) = (v, 1 − |2v − 1|, 1 − v)`.
pub fn neutrosophify_value(v: f64) -> Result<SvnsTriple, ModelError> {
    SvnsTriple::new(v, 1.0 - (2.0 * v - 1.0).abs(), 1.0 - v)
}

fn neutrosophify_row(row: ArrayView1<'_, f64>, index: usize) -> Result<Vec<SvnsTriple>, NeutroError> {
    row.iter()
        .enumerate()
        .map(|(col, &value)| {
            if !(0.0..=1.0).contains(&value) {
                return Err(NeutroError::NotNormalized { row: index, col, value });
            }
            Ok(neutrosophify_value(value)?)
        })
        .collect()
}

/// SVNS triples for every point and feature of a min-max normalized dataset.
pub fn neutrosophify(d: &Dataset) -> Result<SvnsRepresentation, NeutroError> {
    neutrosophify_points(d.features())
}

/// As [`neutrosophify`], over any matrix of unit-interval values (e.g. centroids).
pub fn neutrosophify_points(points: ArrayView2<'_, f64>) -> Result<SvnsRepresentation, NeutroError> {
    let (n, p) = points.dim();
    let mut flat = Vec::with_capacity(n * p);
    for (i, row) in points.outer_iter().enumerate() {
        flat.extend(neutrosophify_row(row, i)?);
    }
    let triples = Array2::from_shape_vec((n, p), flat).expect("n*p triples");
    Ok(SvnsRepresentation::new(triples)?)
}

/// Mean over features of the per-feature score
/// `((1 − |Δt|) + (1 − |Δi|) + (1 − |Δf|)) / 3`.
pub fn svns_similarity(a: &[SvnsTriple], b: &[SvnsTriple]) -> Result<f64, NeutroError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(NeutroError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(similarity_unchecked(a.iter(), b.iter(), a.len()))
}

fn similarity_unchecked<'a>(
    a: impl Iterator<Item = &'a SvnsTriple>,
    b: impl Iterator<Item = &'a SvnsTriple>,
    p: usize,
) -> f64 {
    let total: f64 = a
        .zip(b)
        .map(|(x, y)| {
            ((1.0 - (x.t() - y.t()).abs()) + (1.0 - (x.i() - y.i()).abs()) + (1.0 - (x.f() - y.f()).abs())) / 3.0
        })
        .sum();
    (total / p as f64).clamp(0.0, 1.0)
}

pub(crate) fn row_similarity(a: ArrayView1<'_, SvnsTriple>, b: ArrayView1<'_, SvnsTriple>) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    similarity_unchecked(a.iter(), b.iter(), a.len())
}

/// Pairwise SVNS similarity of all points; rows are computed in parallel.
pub fn build_similarity_matrix(rep: &SvnsRepresentation) -> SimilarityMatrix {
    let n = rep.n_points();
    let triples = rep.triples();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { row_similarity(triples.row(i), triples.row(j)) })
                .collect()
        })
        .collect();
    let values = Array2::from_shape_vec((n, n), rows.concat()).expect("n*n entries");
    SimilarityMatrix::new(values).expect("svns similarity is symmetric, reflexive and bounded")
}

fn compose_values(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = a.nrows();
    // b is read by columns; a transposed copy keeps the inner loop contiguous.
    let bt = b.t().as_standard_layout().into_owned();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ai = a.row(i);
            (0..n)
                .map(|j| {
                    ai.iter()
                        .zip(bt.row(j).iter())
                        .fold(0.0f64, |acc, (&x, &y)| acc.max(x.min(y)))
                })
                .collect()
        })
        .collect();
    Array2::from_shape_vec((n, n), rows.concat()).expect("n*n entries")
}

/// Max-min composition `out[i][j] = max_k min(a[i][k], b[k][j])`.
///
/// Composing two distinct similarity matrices can yield an asymmetric
/// relation, which is rejected as a [`ModelError::NotSymmetric`].
pub fn max_min_compose(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<SimilarityMatrix, NeutroError> {
    if a.size() != b.size() {
        return Err(NeutroError::DimensionMismatch {
            left: a.size(),
            right: b.size(),
        });
    }
    Ok(SimilarityMatrix::new(compose_values(a.values(), b.values()))?)
}

/// Fixed point of repeated max-min squaring.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureResult {
    pub matrix: SimilarityMatrix,
    /// Squarings that changed the matrix; the final confirming squaring is not counted.
    pub squarings: usize,
    pub converged: bool,
}

/// Square `c` under max-min composition until it stops changing.
///
/// Max-min composition only ever selects existing entry values, so the
/// fixed point is detected by exact equality. For `n ≥ 2` it is reached
/// after at most `⌈log2(n − 1)⌉` effective squarings; `max_squarings` is a
/// safety rail, and hitting it leaves `converged = false`.
pub fn transitive_closure(c: &SimilarityMatrix, max_squarings: usize) -> ClosureResult {
    let mut current = c.values().to_owned();
    let mut squarings = 0;
    loop {
        let next = compose_values(current.view(), current.view());
        if next == current {
            return ClosureResult {
                matrix: SimilarityMatrix::new(current).expect("squaring preserves similarity invariants"),
                squarings,
                converged: true,
            };
        }
        if squarings == max_squarings {
            return ClosureResult {
                matrix: SimilarityMatrix::new(current).expect("squaring preserves similarity invariants"),
                squarings,
                converged: false,
            };
        }
        current = next;
        squarings += 1;
    }
}

/// Binary relation `c[i][j] ≥ λ`.
pub fn lambda_cut(c: &SimilarityMatrix, lambda: f64) -> Result<CutMatrix, NeutroError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(NeutroError::InvalidLambda(lambda));
    }
    let bits = c.values().mapv(|v| v >= lambda);
    Ok(CutMatrix::new(bits, lambda)?)
}

/// Equivalence classes of a cut relation, numbered by first appearance.
///
/// Blocks are the connected components of the relation; each must be a
/// clique, otherwise the relation was not transitive.
pub fn cut_partition(cut: &CutMatrix) -> Result<Vec<usize>, NeutroError> {
    let n = cut.size();
    let mut components = UnionFind::<usize>::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if cut.related(i, j) {
                components.union(i, j);
            }
        }
    }
    let roots = components.into_labeling();
    for i in 0..n {
        for j in i + 1..n {
            if roots[i] == roots[j] && !cut.related(i, j) {
                return Err(NeutroError::NotEquivalence { i, j });
            }
        }
    }
    Ok(crate::model::encode_labels(&roots))
}

/// Number of blocks in a partition produced by [`cut_partition`].
pub fn block_count(partition: &[usize]) -> usize {
    partition.iter().max().map_or(0, |m| m + 1)
}
