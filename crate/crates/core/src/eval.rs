//! Dataset ingestion, confusion matrix and accuracy.
//!
//! The positive class is Virginica (label 1); Versicolor is label 0. Every
//! report records this so results stay interpretable.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::activations::DispatchMode;
use crate::error::{Error, Result};
use crate::inference::{self, Batch};
use crate::linalg::Matrix;
use crate::network::NetworkSpec;

pub const POSITIVE_CLASS: &str = "virginica";
pub const NEGATIVE_CLASS: &str = "versicolor";

/// Number of features in the Iris measurements.
pub const IRIS_FEATURES: usize = 4;

/// The 100 Versicolor and Virginica rows of Fisher's Iris data, in their
/// canonical order, with a header line and species names as labels.
pub const IRIS_VERSICOLOR_VIRGINICA_CSV: &str =
    include_str!("../data/iris_versicolor_virginica.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    /// samples x features, centimeters for Iris.
    pub features: Matrix,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::LengthMismatch {
                expected: features.rows(),
                actual: labels.len(),
            });
        }
        check_binary(&labels)?;
        Ok(Self {
            name: name.into(),
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn batch(&self) -> Batch {
        Batch::new(self.features.clone())
    }

    /// The vendored Versicolor/Virginica subset.
    pub fn iris_versicolor_virginica() -> Self {
        let mut ds = load_csv(IRIS_VERSICOLOR_VIRGINICA_CSV).expect("vendored fixture parses");
        ds.name = "iris-versicolor-virginica".into();
        ds
    }
}

/// Parses a labelled Iris CSV: four feature columns and a label column
/// (`0`/`1` or a species name, case-insensitive, optionally `Iris-`
/// prefixed). A header line is detected when its first field is not a
/// number.
pub fn load_csv(text: &str) -> Result<LabeledDataset> {
    match parse_samples(text, IRIS_FEATURES)? {
        (features, Some(labels)) => LabeledDataset::new("csv", features, labels),
        (_, None) => Err(Error::Csv {
            row: 1,
            message: format!("expected {} columns including a label", IRIS_FEATURES + 1),
        }),
    }
}

/// Parses `input_dim` feature columns with an optional trailing label
/// column. The column count of the first data row decides whether labels
/// are present; a count that fits neither case is a dimension mismatch.
pub fn parse_samples(text: &str, input_dim: usize) -> Result<(Matrix, Option<Vec<u8>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            row: i + 1,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, record));
    }
    if let Some((_, first)) = rows.first() {
        if first.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            rows.remove(0);
        }
    }
    let Some((_, first)) = rows.first() else {
        return Err(Error::Empty("csv data"));
    };

    let columns = first.len();
    let last_is_label = first.get(columns - 1).is_some_and(|f| f.parse::<f64>().is_err());
    let labelled = if columns == input_dim && !last_is_label {
        false
    } else if columns == input_dim + 1 {
        true
    } else {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            actual: if last_is_label { columns - 1 } else { columns },
        });
    };

    let mut data = Vec::with_capacity(rows.len() * input_dim);
    let mut labels = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        if record.len() != columns {
            return Err(Error::Csv {
                row: *line,
                message: format!("expected {columns} columns, found {}", record.len()),
            });
        }
        for field in record.iter().take(input_dim) {
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                row: *line,
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    row: *line,
                    message: format!("non-finite feature `{field}`"),
                });
            }
            data.push(v);
        }
        if labelled {
            labels.push(parse_label(&record[input_dim], *line)?);
        }
    }
    let features = Matrix::from_vec(rows.len(), input_dim, data)?;
    Ok((features, labelled.then_some(labels)))
}

fn parse_label(token: &str, line: usize) -> Result<u8> {
    let lower = token.to_ascii_lowercase();
    let name = lower.strip_prefix("iris-").unwrap_or(&lower);
    match name {
        "0" | NEGATIVE_CLASS => Ok(0),
        "1" | POSITIVE_CLASS => Ok(1),
        _ => Err(Error::Csv {
            row: line,
            message: format!("unknown label `{token}` (expected 0, 1, versicolor or virginica)"),
        }),
    }
}

fn check_binary(labels: &[u8]) -> Result<()> {
    match labels.iter().position(|l| *l > 1) {
        Some(index) => Err(Error::NonBinaryLabel {
            index,
            value: labels[index],
        }),
        None => Ok(()),
    }
}

/// Binary confusion counts. Rows are actual classes, columns predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    pub fn accuracy(&self) -> Result<f64> {
        accuracy(self)
    }

    /// The 2x2 scoreboard: actual classes in rows, predicted in columns.
    pub fn scoreboard(&self) -> String {
        let w = [self.tp, self.fn_, self.fp, self.tn]
            .iter()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1)
            .max("Predicted Negative".len());
        format!(
            "{:<16}  {:>w$}  {:>w$}\n{:<16}  {:>w$}  {:>w$}\n{:<16}  {:>w$}  {:>w$}",
            "",
            "Predicted Positive",
            "Predicted Negative",
            "Actual Positive",
            self.tp,
            self.fn_,
            "Actual Negative",
            self.fp,
            self.tn,
        )
    }
}

pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Empty("label vector"));
    }
    check_binary(actual)?;
    check_binary(predicted)?;
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        match (a, p) {
            (1, 1) => cm.tp += 1,
            (1, _) => cm.fn_ += 1,
            (_, 1) => cm.fp += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    Ok(cm.correct() as f64 / cm.total() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    #[default]
    None,
    MinMax,
    Standard,
}

impl Scaling {
    pub fn as_str(self) -> &'static str {
        match self {
            Scaling::None => "none",
            Scaling::MinMax => "minmax",
            Scaling::Standard => "standard",
        }
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Scaling::None),
            "minmax" => Ok(Scaling::MinMax),
            "standard" => Ok(Scaling::Standard),
            other => Err(Error::UnknownScaling(other.to_string())),
        }
    }
}

/// Per-feature affine transform `(x - offset) / scale`, fitted on the data
/// being evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureScaling {
    pub kind: Scaling,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl FeatureScaling {
    /// Min-max maps each column onto [0, 1]; standard uses the mean and the
    /// population standard deviation. Constant columns get scale 1.
    pub fn fit(features: &Matrix, kind: Scaling) -> Self {
        let n = features.rows() as f64;
        let mut offsets = Vec::with_capacity(features.cols());
        let mut scales = Vec::with_capacity(features.cols());
        for c in 0..features.cols() {
            let col = features.column(c);
            let (offset, scale) = match kind {
                Scaling::None => (0.0, 1.0),
                Scaling::MinMax => {
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi - lo)
                }
                Scaling::Standard => {
                    let mean = col.iter().sum::<f64>() / n;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
            };
            offsets.push(offset);
            scales.push(if scale > 0.0 { scale } else { 1.0 });
        }
        Self {
            kind,
            offsets,
            scales,
        }
    }

    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: self.offsets.len(),
                actual: features.cols(),
            });
        }
        let mut out = features.clone();
        for r in 0..out.rows() {
            for c in 0..out.cols() {
                out.set(r, c, (features.get(r, c) - self.offsets[c]) / self.scales[c]);
            }
        }
        Ok(out)
    }
}

/// Fits `scaling` on `features` and applies it. `None` returns the input
/// unchanged and no parameters.
pub fn scale_features(features: &Matrix, scaling: Scaling) -> Result<(Matrix, Option<FeatureScaling>)> {
    if scaling == Scaling::None {
        return Ok((features.clone(), None));
    }
    let params = FeatureScaling::fit(features, scaling);
    let scaled = params.apply(features)?;
    Ok((scaled, Some(params)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub model: String,
    pub dataset: String,
    pub dispatch_mode: DispatchMode,
    pub scaling: Scaling,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling_params: Option<FeatureScaling>,
    pub threshold: f64,
    pub positive_class: &'static str,
    pub negative_class: &'static str,
    pub samples: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "model: {} | data: {} ({} samples) | dispatch: {} | scaling: {} | threshold: {}",
            self.model, self.dataset, self.samples, self.dispatch_mode, self.scaling, self.threshold
        )?;
        writeln!(f, "positive class: {} (1), negative class: {} (0)", self.positive_class, self.negative_class)?;
        writeln!(f, "{}", self.confusion.scoreboard())?;
        write!(f, "Accuracy: {:.1}%", self.accuracy * 100.0)
    }
}

pub fn evaluate(spec: &NetworkSpec, ds: &LabeledDataset, scaling: Scaling) -> Result<EvaluationReport> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let (features, scaling_params) = scale_features(&ds.features, scaling)?;
    let predicted = inference::predict(spec, &Batch::new(features))?;
    let cm = confusion(&ds.labels, &predicted)?;
    Ok(EvaluationReport {
        model: spec.name.clone(),
        dataset: ds.name.clone(),
        dispatch_mode: spec.dispatch_mode,
        scaling,
        scaling_params,
        threshold: spec.threshold,
        positive_class: POSITIVE_CLASS,
        negative_class: NEGATIVE_CLASS,
        samples: ds.len(),
        accuracy: accuracy(&cm)?,
        confusion: cm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::builtin;
    use proptest::prelude::*;

    #[test]
    fn single_row_parse() {
        let ds = load_csv("5.0,3.0,4.0,1.0,versicolor").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels, vec![0]);
        assert_eq!(ds.features.row(0), &[5.0, 3.0, 4.0, 1.0]);
    }

    #[test]
    fn label_spellings() {
        let ds = load_csv("h1,h2,h3,h4,y\n1,2,3,4,Virginica\n1,2,3,4,Iris-versicolor\n1,2,3,4,1\n1,2,3,4,0\n")
            .unwrap();
        assert_eq!(ds.labels, vec![1, 0, 1, 0]);
    }

    #[test]
    fn setosa_is_rejected() {
        match load_csv("5.0,3.0,4.0,1.0,setosa") {
            Err(Error::Csv { row: 1, message }) => assert!(message.contains("setosa")),
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn csv_errors_carry_row_numbers() {
        let text = "a,b,c,d,e\n5.0,3.0,4.0,1.0,virginica\n5.0,x,4.0,1.0,virginica\n";
        assert!(matches!(load_csv(text), Err(Error::Csv { row: 3, .. })));
        let text = "5.0,3.0,4.0,1.0,virginica\n5.0,3.0,4.0,virginica\n";
        assert!(matches!(load_csv(text), Err(Error::Csv { row: 2, .. })));
        assert!(matches!(load_csv("5.0,3.0,4.0,1.0"), Err(Error::Csv { .. })));
        assert!(matches!(load_csv("h1,h2\n"), Err(Error::Empty(_))));
    }

    #[test]
    fn wrong_feature_count_is_dimension_mismatch() {
        assert!(matches!(
            parse_samples("1,2,3,virginica\n", 4),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
        let (m, labels) = parse_samples("1,2,3\n4,5,6\n", 3).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert!(labels.is_none());
    }

    #[test]
    fn vendored_fixture_counts() {
        let ds = LabeledDataset::iris_versicolor_virginica();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.labels.iter().filter(|l| **l == 0).count(), 50);
        assert_eq!(ds.labels.iter().filter(|l| **l == 1).count(), 50);
        assert_eq!(ds.features.row(0), &[7.0, 3.2, 4.7, 1.4]);
        assert_eq!(ds.features.row(99), &[5.9, 3.0, 5.1, 1.8]);
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[1, 0, 0], &[1, 1, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, fn_: 0, fp: 1, tn: 1 });
        let cm = confusion(&[1; 5], &[1; 5]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 5, fn_: 0, fp: 0, tn: 0 });
    }

    #[test]
    fn scoreboard_counts() {
        let actual: Vec<u8> = [vec![1; 10], vec![0; 10]].concat();
        let predicted: Vec<u8> = [vec![1; 9], vec![0; 11]].concat();
        let cm = confusion(&actual, &predicted).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 9, fn_: 1, fp: 0, tn: 10 });
        assert_eq!(accuracy(&cm).unwrap(), 0.95);
    }

    #[test]
    fn confusion_errors() {
        assert!(matches!(confusion(&[1, 0], &[1]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion(&[], &[]), Err(Error::Empty(_))));
        assert!(matches!(
            confusion(&[1, 2], &[1, 1]),
            Err(Error::NonBinaryLabel { index: 1, value: 2 })
        ));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&ConfusionMatrix { tp: 3, fn_: 0, fp: 0, tn: 4 }).unwrap(), 1.0);
        assert_eq!(accuracy(&ConfusionMatrix { tp: 1, fn_: 1, fp: 1, tn: 1 }).unwrap(), 0.5);
        assert!(accuracy(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn scaling_fits() {
        let m = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]]).unwrap();
        let (mm, p) = scale_features(&m, Scaling::MinMax).unwrap();
        assert_eq!(mm.column(0).0, vec![0.0, 0.5, 1.0]);
        assert_eq!(mm.column(1).0, vec![0.0, 0.0, 0.0]);
        assert_eq!(p.unwrap().scales, vec![4.0, 1.0]);
        let (st, p) = scale_features(&m, Scaling::Standard).unwrap();
        let p = p.unwrap();
        assert_eq!(p.offsets, vec![3.0, 5.0]);
        assert!((p.scales[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(st.column(0).iter().sum::<f64>().abs() < 1e-15);
        let (same, none) = scale_features(&m, Scaling::None).unwrap();
        assert_eq!(same, m);
        assert!(none.is_none());
    }

    #[test]
    fn evaluate_single_sample() {
        let ds = LabeledDataset::new(
            "one",
            Matrix::from_rows(&[[6.3, 2.9, 5.6, 1.8]]).unwrap(),
            vec![1],
        )
        .unwrap();
        let report = evaluate(&builtin("iris-6").unwrap(), &ds, Scaling::None).unwrap();
        assert_eq!(report.confusion.total(), 1);
        assert_eq!(report.samples, 1);
        assert_eq!(report.positive_class, "virginica");
    }

    #[test]
    fn report_text_mirrors_scoreboard() {
        let cm = ConfusionMatrix { tp: 9, fn_: 1, fp: 0, tn: 10 };
        let board = cm.scoreboard();
        let lines: Vec<&str> = board.lines().collect();
        assert!(lines[0].contains("Predicted Positive") && lines[0].contains("Predicted Negative"));
        assert!(lines[1].starts_with("Actual Positive"));
        assert!(lines[1].trim_end().ends_with('1'));
        assert!(lines[2].trim_end().ends_with("10"));
    }

    proptest! {
        #[test]
        fn cells_sum_and_polarity_swap(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..64)) {
            let (a, p): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let cm = confusion(&a, &p).unwrap();
            prop_assert_eq!(cm.total(), a.len());
            let acc = accuracy(&cm).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            let flip = |v: &[u8]| v.iter().map(|x| 1 - x).collect::<Vec<u8>>();
            let swapped = confusion(&flip(&a), &flip(&p)).unwrap();
            prop_assert_eq!(swapped, ConfusionMatrix { tp: cm.tn, fn_: cm.fp, fp: cm.fn_, tn: cm.tp });
            prop_assert_eq!(confusion(&a, &a).unwrap().accuracy().unwrap(), 1.0);
        }
    }
}
