//! Dataset ingestion: CSV reading and writing, min-max normalization, and
//! synthetic/fixture datasets.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::model::{Dataset, ModelError};

/// Bundled copy of the Iris dataset (150 rows, 4 features, `species` label column).
pub const IRIS_CSV: &str = include_str!("../fixtures/iris.csv");

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("parse error at row {row}, column {column}: {token:?}")]
    ParseError {
        row: usize,
        column: String,
        token: String,
    },
    #[error("empty file")]
    EmptyFile,
    #[error("label column {0} not found")]
    LabelColumnNotFound(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which column carries the ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Numeric strings are treated as indices, anything else as a header name.
    pub fn parse(s: &str) -> Self {
        s.parse().map_or_else(|_| Self::Name(s.to_owned()), Self::Index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
    pub delimiter: u8,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            has_header: true,
            label_column: None,
            delimiter: b',',
        }
    }
}

impl CsvSchema {
    pub fn with_label(mut self, column: LabelColumn) -> Self {
        self.label_column = Some(column);
        self
    }
}

/// Load a dataset from a CSV file.
///
/// Every non-label column must parse as a number; a bad cell rejects the
/// whole file with its 1-based data row and column name.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => IngestError::FileNotFound(path.display().to_string()),
        _ => IngestError::Io(e),
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if schema.has_header {
        let h = rdr.headers()?;
        if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
            return Err(IngestError::EmptyFile);
        }
        Some(h.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let records = rdr.records().collect::<Result<Vec<_>, _>>()?;
    let Some(first) = records.first() else {
        return Err(IngestError::EmptyFile);
    };
    let width = header.as_ref().map_or(first.len(), Vec::len);

    let label_idx = match &schema.label_column {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => return Err(IngestError::LabelColumnNotFound(i.to_string())),
        Some(LabelColumn::Name(name)) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| IngestError::LabelColumnNotFound(name.clone()))?,
        ),
    };
    let column_name = |c: usize| header.as_ref().map_or_else(|| c.to_string(), |h| h[c].clone());

    let n_features = width - usize::from(label_idx.is_some());
    let mut flat = Vec::with_capacity(records.len() * n_features);
    let mut labels = label_idx.map(|_| Vec::with_capacity(records.len()));
    for (r, record) in records.iter().enumerate() {
        for (c, token) in record.iter().enumerate() {
            if Some(c) == label_idx {
                if let Some(l) = labels.as_mut() {
                    l.push(token.to_owned());
                }
                continue;
            }
            let value: f64 = token.parse().map_err(|_| IngestError::ParseError {
                row: r + 1,
                column: column_name(c),
                token: token.to_owned(),
            })?;
            flat.push(value);
        }
    }

    let features = Array2::from_shape_vec((records.len(), n_features), flat)
        .map_err(|_| IngestError::InvalidParameter("inconsistent row width".into()))?;
    let mut dataset = Dataset::new(features, labels)?;
    if let Some(h) = header {
        let names = h
            .into_iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != label_idx)
            .map(|(_, n)| n)
            .collect();
        dataset = dataset.with_feature_names(names)?;
    }
    Ok(dataset)
}

/// Write a dataset as CSV with a header row; labels, when present, go in a
/// trailing `label` column. Values use the shortest round-trip representation.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match d.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..d.n_features()).map(|j| format!("x{j}")).collect(),
    };
    if d.labels().is_some() {
        header.push("label".into());
    }
    wtr.write_record(&header)?;
    for i in 0..d.n_points() {
        let mut row: Vec<String> = d.point(i).iter().map(|v| v.to_string()).collect();
        if let Some(labels) = d.labels() {
            row.push(labels[i].clone());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<(), IngestError> {
    write_csv(d, File::create(path)?)
}

/// Rescale every feature column to `[0, 1]`; constant columns become 0.5.
pub fn min_max_normalize(d: &Dataset) -> Dataset {
    let mut features = d.features().to_owned();
    for mut column in features.axis_iter_mut(Axis(1)) {
        let (lo, hi) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let range = hi - lo;
        if range > 0.0 {
            // clamp guards the last ulp of (x - lo) / range
            column.mapv_inplace(|v| ((v - lo) / range).clamp(0.0, 1.0));
        } else {
            column.fill(0.5);
        }
    }
    d.map_features(features)
}

/// Parameters for [`make_blobs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub k: usize,
    pub n_per: usize,
    pub p: usize,
    pub separation: f64,
    pub spread: f64,
    pub seed: u64,
}

/// Blobs together with the centers that generated them.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub dataset: Dataset,
    pub centers: Array2<f64>,
}

const CENTER_ATTEMPTS: usize = 1000;

/// `k` isotropic Gaussian clusters whose centers are pairwise at least
/// `separation` apart. Labels are the generating cluster index.
pub fn make_blobs(spec: BlobSpec) -> Result<Dataset, IngestError> {
    make_blobs_with_centers(spec).map(|b| b.dataset)
}

pub fn make_blobs_with_centers(spec: BlobSpec) -> Result<Blobs, IngestError> {
    let BlobSpec {
        k,
        n_per,
        p,
        separation,
        spread,
        seed,
    } = spec;
    if k == 0 || n_per == 0 || p == 0 {
        return Err(IngestError::InvalidParameter("k, n_per and p must be at least 1".into()));
    }
    if !(separation > 0.0 && separation.is_finite() && spread > 0.0 && spread.is_finite()) {
        return Err(IngestError::InvalidParameter(
            "separation and spread must be positive and finite".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Centers are rejection-sampled in a box that grows whenever a draw keeps failing.
    let mut half_width = separation * (k as f64).powf(1.0 / p as f64);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    while centers.len() < k {
        let mut placed = false;
        for _ in 0..CENTER_ATTEMPTS {
            let candidate: Vec<f64> = (0..p).map(|_| rng.random_range(-half_width..=half_width)).collect();
            let far_enough = centers.iter().all(|c| {
                c.iter()
                    .zip(&candidate)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    >= separation
            });
            if far_enough {
                centers.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            half_width *= 1.5;
        }
    }

    let noise = Normal::new(0.0, spread).map_err(|e| IngestError::InvalidParameter(e.to_string()))?;
    let mut flat = Vec::with_capacity(k * n_per * p);
    let mut labels = Vec::with_capacity(k * n_per);
    for (j, center) in centers.iter().enumerate() {
        for _ in 0..n_per {
            flat.extend(center.iter().map(|&c| c + noise.sample(&mut rng)));
            labels.push(j.to_string());
        }
    }
    let features = Array2::from_shape_vec((k * n_per, p), flat).expect("sized above");
    let centers = Array2::from_shape_vec((k, p), centers.concat()).expect("sized above");
    Ok(Blobs {
        dataset: Dataset::new(features, Some(labels))?,
        centers,
    })
}

/// The bundled Iris fixture with species labels.
pub fn load_iris() -> Dataset {
    let schema = CsvSchema::default().with_label(LabelColumn::Name("species".into()));
    read_csv(IRIS_CSV.as_bytes(), &schema).expect("bundled fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Dataset, IngestError> {
        read_csv(text.as_bytes(), &CsvSchema::default())
    }

    #[test]
    fn parses_header_and_rows() {
        let d = parse("a,b\n1,2\n3,4").unwrap();
        assert_eq!((d.n_points(), d.n_features()), (2, 2));
        assert_eq!(d.feature_names().unwrap(), ["a", "b"]);
        assert_eq!(d.features(), array![[1.0, 2.0], [3.0, 4.0]].view());
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        match parse("a,b\n1,x") {
            Err(IngestError::ParseError { row, column, token }) => {
                assert_eq!((row, column.as_str(), token.as_str()), (1, "b", "x"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse(""), Err(IngestError::EmptyFile)));
        assert!(matches!(parse("a,b\n"), Err(IngestError::EmptyFile)));
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/definitely/not/here.csv", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, IngestError::FileNotFound(_)));
    }

    #[test]
    fn label_column_by_name_and_index() {
        let text = "x,cls,y\n1,a,2\n3,b,4\n";
        let by_name = read_csv(text.as_bytes(), &CsvSchema::default().with_label(LabelColumn::parse("cls"))).unwrap();
        let by_idx = read_csv(text.as_bytes(), &CsvSchema::default().with_label(LabelColumn::parse("1"))).unwrap();
        assert_eq!(by_name, by_idx);
        assert_eq!(by_name.labels().unwrap(), ["a", "b"]);
        assert_eq!(by_name.feature_names().unwrap(), ["x", "y"]);
        let missing = read_csv(text.as_bytes(), &CsvSchema::default().with_label(LabelColumn::Index(3)));
        assert!(matches!(missing, Err(IngestError::LabelColumnNotFound(_))));
    }

    #[test]
    fn headerless_with_semicolons() {
        let schema = CsvSchema {
            has_header: false,
            label_column: None,
            delimiter: b';',
        };
        let d = read_csv("1;2\n3;4\n".as_bytes(), &schema).unwrap();
        assert_eq!(d.n_points(), 2);
        assert!(d.feature_names().is_none());
    }

    #[test]
    fn iris_fixture_shape() {
        let iris = load_iris();
        assert_eq!((iris.n_points(), iris.n_features()), (150, 4));
        let labels = iris.label_indices().unwrap();
        assert_eq!(labels.iter().max(), Some(&2));
    }

    fn column(values: &[f64]) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let d = crate::model::validate_dataset(&rows, None).unwrap();
        min_max_normalize(&d).features().column(0).to_vec()
    }

    #[test]
    fn min_max_examples() {
        assert_eq!(column(&[0.0, 5.0, 10.0]), [0.0, 0.5, 1.0]);
        assert_eq!(column(&[7.0, 7.0, 7.0]), [0.5, 0.5, 0.5]);
        assert_eq!(column(&[2.0, 4.0]), [0.0, 1.0]);
    }

    #[test]
    fn normalization_keeps_labels() {
        let d = parse("a,b\n1,2\n3,4").unwrap();
        let labelled = Dataset::new(d.features().to_owned(), Some(vec!["p".into(), "q".into()])).unwrap();
        assert_eq!(min_max_normalize(&labelled).labels(), labelled.labels());
    }

    fn spec(k: usize, n_per: usize, seed: u64) -> BlobSpec {
        BlobSpec {
            k,
            n_per,
            p: 2,
            separation: 10.0,
            spread: 1.0,
            seed,
        }
    }

    #[test]
    fn blobs_single_cluster() {
        let d = make_blobs(spec(1, 3, 0)).unwrap();
        let labels = d.labels().unwrap();
        assert!(labels.iter().all(|l| l == &labels[0]));
    }

    #[test]
    fn blobs_are_deterministic() {
        let s = BlobSpec { n_per: 50, ..spec(2, 50, 7) };
        assert_eq!(make_blobs(s).unwrap(), make_blobs(s).unwrap());
    }

    #[test]
    fn blob_centers_are_separated() {
        let blobs = make_blobs_with_centers(BlobSpec { p: 4, ..spec(3, 100, 11) }).unwrap();
        let c = &blobs.centers;
        for a in 0..3 {
            for b in a + 1..3 {
                let d = (&c.row(a) - &c.row(b)).mapv(|x| x * x).sum().sqrt();
                assert!(d >= 10.0, "centers {a},{b} only {d} apart");
            }
        }
        assert_eq!(blobs.dataset.n_points(), 300);
    }

    #[test]
    fn blobs_reject_bad_parameters() {
        assert!(make_blobs(spec(0, 3, 0)).is_err());
        assert!(make_blobs(BlobSpec { spread: 0.0, ..spec(2, 3, 0) }).is_err());
    }

    #[test]
    fn csv_round_trip_on_blobs() {
        let d = make_blobs(spec(3, 20, 5)).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let schema = CsvSchema::default().with_label(LabelColumn::Name("label".into()));
        let back = read_csv(buf.as_slice(), &schema).unwrap();
        assert_eq!(back.labels(), d.labels());
        for (a, b) in back.features().iter().zip(d.features().iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_bounded(
            rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 3), 1..30)
        ) {
            let d = crate::model::validate_dataset(&rows, None).unwrap();
            let once = min_max_normalize(&d);
            let twice = min_max_normalize(&once);
            for (a, b) in once.features().iter().zip(twice.features().iter()) {
                prop_assert!((0.0..=1.0).contains(a));
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }
    }
}
