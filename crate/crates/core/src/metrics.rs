//! Cluster validity indices: Silhouette, Davies-Bouldin, Adjusted Rand Index
//! and Normalized Mutual Information.
//!
//! All distances are Euclidean. Label slices are arbitrary cluster ids; they
//! are re-encoded densely in order of first appearance so every reduction
//! runs in a fixed order and results are bit-stable.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use thiserror::Error;

use crate::model::encode_labels;
use crate::nkm::distance_unchecked;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("fewer than two distinct clusters")]
    SingleCluster,
    #[error("clusters {a} and {b} have coincident centroids")]
    CoincidentCentroids { a: usize, b: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

fn check_lengths(left: usize, right: usize) -> Result<(), MetricsError> {
    if left != right {
        return Err(MetricsError::LengthMismatch { left, right });
    }
    Ok(())
}

fn cluster_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let dense = encode_labels(labels);
    let k = dense.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (i, &c) in dense.iter().enumerate() {
        members[c].push(i);
    }
    members
}

/// Mean silhouette coefficient; points in singleton clusters score 0.
pub fn silhouette(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64, MetricsError> {
    check_lengths(points.nrows(), labels.len())?;
    let members = cluster_members(labels);
    if members.len() < 2 {
        return Err(MetricsError::SingleCluster);
    }
    let dense = encode_labels(labels);
    let n = points.nrows();
    let mut total = 0.0;
    for (i, &own) in dense.iter().enumerate() {
        if members[own].len() == 1 {
            continue;
        }
        let mean_distance = |cluster: &[usize]| -> f64 {
            cluster
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| distance_unchecked(points.row(i), points.row(j)))
                .sum::<f64>()
        };
        let a = mean_distance(&members[own]) / (members[own].len() - 1) as f64;
        let b = members
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != own)
            .map(|(_, m)| mean_distance(m) / m.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

fn centroids_of(points: ArrayView2<'_, f64>, members: &[Vec<usize>]) -> Array2<f64> {
    let mut centroids = Array2::zeros((members.len(), points.ncols()));
    for (mut c, m) in centroids.outer_iter_mut().zip(members) {
        for &i in m {
            c += &points.row(i);
        }
        c /= m.len() as f64;
    }
    centroids
}

/// Davies-Bouldin index; lower is better.
pub fn davies_bouldin(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64, MetricsError> {
    check_lengths(points.nrows(), labels.len())?;
    let members = cluster_members(labels);
    let k = members.len();
    if k < 2 {
        return Err(MetricsError::SingleCluster);
    }
    let centroids = centroids_of(points, &members);
    let scatter: Vec<f64> = members
        .iter()
        .zip(centroids.outer_iter())
        .map(|(m, c)| m.iter().map(|&i| distance_unchecked(points.row(i), c)).sum::<f64>() / m.len() as f64)
        .collect();
    let mut total = 0.0;
    for a in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for b in (0..k).filter(|&b| b != a) {
            let separation = distance_unchecked(centroids.row(a), centroids.row(b));
            if separation == 0.0 {
                return Err(MetricsError::CoincidentCentroids { a: a.min(b), b: a.max(b) });
            }
            worst = worst.max((scatter[a] + scatter[b]) / separation);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

struct Contingency {
    n: usize,
    cells: Array2<usize>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Contingency {
    fn new(a: &[usize], b: &[usize]) -> Self {
        let da = encode_labels(a);
        let db = encode_labels(b);
        let ka = da.iter().max().map_or(0, |m| m + 1);
        let kb = db.iter().max().map_or(0, |m| m + 1);
        let mut cells = Array2::zeros((ka, kb));
        for (&x, &y) in da.iter().zip(&db) {
            cells[[x, y]] += 1;
        }
        let rows = cells.rows().into_iter().map(|r| r.sum()).collect();
        let cols = cells.columns().into_iter().map(|c| c.sum()).collect();
        Self {
            n: a.len(),
            cells,
            rows,
            cols,
        }
    }
}

fn pairs(count: usize) -> f64 {
    let c = count as f64;
    c * (c - 1.0) / 2.0
}

/// Adjusted Rand Index from the pair-counting contingency table.
///
/// Returns 1 when the expected and maximum indices coincide, which only
/// happens for two identical trivial partitions.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    check_lengths(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(MetricsError::TooFewPoints { needed: 2, got: a.len() });
    }
    let table = Contingency::new(a, b);
    let index: f64 = table.cells.iter().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = table.rows.iter().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = table.cols.iter().map(|&c| pairs(c)).sum();
    let expected = sum_rows * sum_cols / pairs(table.n);
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Mutual information normalized by the arithmetic mean of the two entropies
/// (natural log). Two single-cluster labelings score 1; a single-cluster
/// labeling against a split one scores 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    check_lengths(a.len(), b.len())?;
    if a.is_empty() {
        return Err(MetricsError::TooFewPoints { needed: 1, got: 0 });
    }
    let table = Contingency::new(a, b);
    let n = table.n as f64;
    let ha = entropy(&table.rows, n);
    let hb = entropy(&table.cols, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for ((x, y), &c) in table.cells.indexed_iter() {
        if c == 0 {
            continue;
        }
        let joint = c as f64 / n;
        mi += joint * (c as f64 * n / (table.rows[x] as f64 * table.cols[y] as f64)).ln();
    }
    Ok((mi.max(0.0) / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Internal indices always; external ones only when ground truth exists.
/// Missing external indices serialize as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
}

pub fn evaluate(
    points: ArrayView2<'_, f64>,
    predicted: &[usize],
    truth: Option<&[usize]>,
) -> Result<MetricsReport, MetricsError> {
    Ok(MetricsReport {
        silhouette: silhouette(points, predicted)?,
        davies_bouldin: davies_bouldin(points, predicted)?,
        ari: truth.map(|t| adjusted_rand(t, predicted)).transpose()?,
        nmi: truth.map(|t| nmi(t, predicted)).transpose()?,
    })
}

/// One published row: a method's four indices on one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub method: &'static str,
    pub dataset: &'static str,
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub ari: f64,
    pub nmi: f64,
}

const fn row(method: &'static str, dataset: &'static str, values: [f64; 4]) -> ReferenceRow {
    ReferenceRow {
        method,
        dataset,
        silhouette: values[0],
        davies_bouldin: values[1],
        ari: values[2],
        nmi: values[3],
    }
}

/// Published reference values, shown next to computed results for
/// orientation only; nothing asserts against them.
pub const REFERENCE_TABLE: [ReferenceRow; 16] = [
    row("UNCA", "Iris", [0.89, 0.36, 0.92, 0.96]),
    row("UNCA", "Wine", [0.77, 0.59, 0.84, 0.89]),
    row("UNCA", "Digits", [0.62, 0.82, 0.76, 0.79]),
    row("UNCA", "Customer Segmentation", [0.69, 0.68, 0.77, 0.80]),
    row("KNCM", "Iris", [0.87, 0.35, 0.91, 0.93]),
    row("KNCM", "Wine", [0.75, 0.58, 0.82, 0.87]),
    row("KNCM", "Digits", [0.60, 0.80, 0.74, 0.77]),
    row("KNCM", "Customer Segmentation", [0.67, 0.66, 0.75, 0.77]),
    row("FCM", "Iris", [0.83, 0.33, 0.86, 0.89]),
    row("FCM", "Wine", [0.71, 0.53, 0.78, 0.82]),
    row("FCM", "Digits", [0.56, 0.75, 0.69, 0.71]),
    row("FCM", "Customer Segmentation", [0.63, 0.63, 0.71, 0.74]),
    row("NCM", "Iris", [0.85, 0.34, 0.89, 0.92]),
    row("NCM", "Wine", [0.73, 0.56, 0.81, 0.85]),
    row("NCM", "Digits", [0.58, 0.78, 0.73, 0.74]),
    row("NCM", "Customer Segmentation", [0.65, 0.64, 0.74, 0.75]),
];

pub fn reference_row(method: &str, dataset: &str) -> Option<&'static ReferenceRow> {
    REFERENCE_TABLE
        .iter()
        .find(|r| r.method.eq_ignore_ascii_case(method) && r.dataset.eq_ignore_ascii_case(dataset))
}

fn cell(v: Option<f64>) -> String {
    v.filter(|v| v.is_finite())
        .map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"))
}

/// Aligned text table: one row per (method, dataset) and one column per index.
/// `computed` is labelled with `method`/`dataset`; reference rows follow.
pub fn render_table(method: &str, dataset: &str, computed: &MetricsReport, references: &[ReferenceRow]) -> String {
    let mut rows = vec![[
        method.to_owned(),
        dataset.to_owned(),
        cell(Some(computed.silhouette)),
        cell(Some(computed.davies_bouldin)),
        cell(computed.ari),
        cell(computed.nmi),
    ]];
    for r in references {
        rows.push([
            format!("{} (paper-reported (not asserted))", r.method),
            r.dataset.to_owned(),
            format!("{:.2}", r.silhouette),
            format!("{:.2}", r.davies_bouldin),
            format!("{:.2}", r.ari),
            format!("{:.2}", r.nmi),
        ]);
    }
    let header = ["Method", "Dataset", "Silhouette", "Davies-Bouldin", "ARI", "NMI"].map(str::to_owned);
    let mut widths = header.clone().map(|h| h.len());
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for r in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn silhouette_examples() {
        let coincident = line(&[0.0, 0.0, 10.0, 10.0]);
        assert_eq!(silhouette(coincident.view(), &[0, 0, 1, 1]).unwrap(), 1.0);
        // a = 1, b = 5.5 / 4.5 per point
        let expected = (2.0 * (1.0 - 1.0 / 5.5) + 2.0 * (1.0 - 1.0 / 4.5)) / 4.0;
        let s = silhouette(line(&[0.0, 1.0, 5.0, 6.0]).view(), &[0, 0, 1, 1]).unwrap();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.797_979_797_979_798).abs() < 1e-12);
        assert_eq!(silhouette(coincident.view(), &[3, 3, 3, 3]), Err(MetricsError::SingleCluster));
    }

    #[test]
    fn silhouette_singletons_score_zero() {
        let s = silhouette(line(&[0.0, 1.0, 9.0]).view(), &[0, 0, 1]).unwrap();
        let a = 1.0;
        let b = 9.0;
        let b2 = 8.0;
        let expected = ((b - a) / b + (b2 - a) / b2) / 3.0;
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn davies_bouldin_examples() {
        let db = davies_bouldin(line(&[0.0, 1.0, 5.0, 6.0]).view(), &[0, 0, 1, 1]).unwrap();
        assert!((db - 0.2).abs() < 1e-12);
        assert_eq!(davies_bouldin(line(&[0.0, 0.0, 10.0, 10.0]).view(), &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(
            davies_bouldin(line(&[0.0, 2.0, 0.0, 2.0]).view(), &[0, 0, 1, 1]),
            Err(MetricsError::CoincidentCentroids { a: 0, b: 1 })
        );
        assert!(davies_bouldin(line(&[0.0, 1.0]).view(), &[0]).is_err());
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(adjusted_rand(&[0, 1], &[0]).is_err());
        assert!(adjusted_rand(&[0], &[0]).is_err());
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[0, 0, 1, 1, 2], &[5, 5, 7, 7, 9]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[1, 1, 1], &[4, 4, 4]).unwrap(), 1.0);
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-12);
        assert!(nmi(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn report_marks_missing_truth_as_null() {
        let points = line(&[0.0, 1.0, 5.0, 6.0]);
        let report = evaluate(points.view(), &[0, 0, 1, 1], None).unwrap();
        let json = serde_json::to_value(report).unwrap();
        assert!(json["ari"].is_null() && json["nmi"].is_null());
        let with_truth = evaluate(points.view(), &[0, 0, 1, 1], Some(&[1, 1, 0, 0])).unwrap();
        assert_eq!(with_truth.ari, Some(1.0));
    }

    #[test]
    fn reference_table_row_for_iris() {
        let r = reference_row("unca", "iris").unwrap();
        assert_eq!([r.silhouette, r.davies_bouldin, r.ari, r.nmi], [0.89, 0.36, 0.92, 0.96]);
        let report = MetricsReport {
            silhouette: 0.5,
            davies_bouldin: 0.7,
            ari: None,
            nmi: Some(0.6),
        };
        let table = render_table("computed", "Iris", &report, &[*r]);
        assert!(table.contains("paper-reported (not asserted)"));
        assert!(table.contains("0.89") && table.contains("0.36") && table.contains("0.92") && table.contains("0.96"));
        assert!(table.contains("n/a"));
    }

    #[test]
    fn symmetric_and_relabel_invariant() {
        let a = [0, 0, 1, 2, 2, 1, 0];
        let b = [1, 0, 1, 1, 2, 2, 0];
        let relabeled: Vec<usize> = b.iter().map(|x| (x + 1) % 3 + 10).collect();
        assert_eq!(adjusted_rand(&a, &b).unwrap(), adjusted_rand(&b, &a).unwrap());
        assert!((adjusted_rand(&a, &b).unwrap() - adjusted_rand(&a, &relabeled).unwrap()).abs() < 1e-15);
        assert!((nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() < 1e-15);
        assert!((nmi(&a, &b).unwrap() - nmi(&a, &relabeled).unwrap()).abs() < 1e-15);
    }
}
