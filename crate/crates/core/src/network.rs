//! Model representation, validation and the model document format.
//!
//! Weights are stored the way they are printed in the reference tables:
//! `input_width` rows by `units` columns, so column `i` holds the incoming
//! weights of neuron `i`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::activations::{Activation, DispatchMode};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 2] = ["iris-8", "iris-6"];

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub units: usize,
    /// `input_width x units`; column `i` feeds neuron `i`.
    pub weights: Matrix,
    pub biases: Vector,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Self {
        Self {
            units: weights.cols(),
            weights,
            biases: Vector(biases),
            activation,
        }
    }

    pub fn input_width(&self) -> usize {
        self.weights.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub name: String,
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
    /// Probability at or above which the binary label is 1.
    pub threshold: f64,
    pub dispatch_mode: DispatchMode,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, input_dim: usize, layers: Vec<LayerSpec>) -> Self {
        Self {
            name: name.into(),
            input_dim,
            layers,
            threshold: DEFAULT_THRESHOLD,
            dispatch_mode: DispatchMode::Corrected,
        }
    }

    pub fn with_dispatch_mode(mut self, mode: DispatchMode) -> Self {
        self.dispatch_mode = mode;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// `[input_dim, units_0, units_1, ...]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(|l| l.units))
            .collect()
    }

    pub fn output_units(&self) -> usize {
        self.layers.last().map_or(0, |l| l.units)
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.units).sum()
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.rows() * l.weights.cols()).sum()
    }

    pub fn bias_count(&self) -> usize {
        self.layers.iter().map(|l| l.biases.len()).sum()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::parameter_count).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Validates and converts a failing report into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// `None` for model-level problems.
    pub layer: Option<usize>,
    pub field: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(i) => write!(f, "layer {i} {}", self.field)?,
            None => f.write_str(&self.field)?,
        }
        write!(f, ": expected {}, got {}", self.expected, self.actual)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, layer: Option<usize>, field: &str, expected: impl ToString, actual: impl ToString) {
        self.violations.push(Violation {
            layer,
            field: field.to_string(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks the chained shape invariants, parameter finiteness and the
/// decision threshold. Never fails; problems are listed in the report.
pub fn validate(spec: &NetworkSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    if spec.input_dim == 0 {
        report.push(None, "input_dim", "at least 1", 0);
    }
    if spec.layers.is_empty() {
        report.push(None, "layers", "at least one layer", "none");
    }
    if !(spec.threshold.is_finite() && (0.0..=1.0).contains(&spec.threshold)) {
        report.push(None, "threshold", "a value in [0, 1]", spec.threshold);
    }

    let mut width = spec.input_dim;
    for (i, layer) in spec.layers.iter().enumerate() {
        let at = Some(i);
        if layer.units == 0 {
            report.push(at, "units", "at least 1", 0);
        }
        if layer.weights.rows() != width {
            report.push(at, "weight rows", width, layer.weights.rows());
        }
        if layer.weights.cols() != layer.units {
            report.push(at, "weight columns", layer.units, layer.weights.cols());
        }
        if layer.biases.len() != layer.units {
            report.push(at, "bias length", layer.units, layer.biases.len());
        }
        if !layer.weights.is_finite() {
            report.push(at, "weights", "finite values", "NaN or infinity");
        }
        if !layer.biases.iter().all(|b| b.is_finite()) {
            report.push(at, "biases", "finite values", "NaN or infinity");
        }
        if let Some(alpha) = layer.activation.alpha() {
            if !(alpha.is_finite() && alpha >= 0.0) {
                report.push(at, "alpha", "finite and non-negative", alpha);
            }
        }
        width = layer.units;
    }
    report
}

/// Returns one of the two pre-trained Iris Versicolor/Virginica classifiers.
///
/// Both use the published constants verbatim and default to
/// [`DispatchMode::PaperCompat`], which is the dispatch their reported
/// accuracies were produced with.
pub fn builtin(name: &str) -> Result<NetworkSpec> {
    let layers = match name {
        "iris-8" => vec![
            layer(
                &[
                    [-0.75323504, -0.25906014].as_slice(),
                    &[-0.46379513, -0.5019245],
                    &[2.1273055, 1.7724446],
                    &[1.1853403, 0.88468695],
                ],
                &[0.53405946, 0.32578036],
                Activation::Relu,
            ),
            layer(
                &[
                    [-1.6785783, 2.0158117, 1.2769054].as_slice(),
                    &[-1.4055765, 0.6828738, 1.5902631],
                ],
                &[1.18362, -1.1555661, -1.0966455],
                Activation::Tanh,
            ),
            layer(
                &[
                    [0.729278, -1.0240695].as_slice(),
                    &[-0.80972326, 1.4383037],
                    &[-0.90892404, 1.6760625],
                ],
                &[0.10695826, 0.01635581],
                Activation::Softmax,
            ),
            layer(
                &[[-0.2019448].as_slice(), &[1.5772797]],
                &[-1.2177287],
                Activation::Sigmoid,
            ),
        ],
        "iris-6" => vec![
            layer(
                &[
                    [0.50914556, -0.18116623, -0.04498423].as_slice(),
                    &[0.33949652, -0.42303845, -0.37400272],
                    &[-1.4968083, 1.2034143, 0.95544535],
                    &[-1.344156, 0.39220142, 1.2244085],
                ],
                &[0.83684736, 0.5311056, 0.7652087],
                Activation::Relu,
            ),
            layer(
                &[
                    [-2.1645586, 1.3892978].as_slice(),
                    &[0.43439832, -1.8758974],
                    &[0.92036045, -1.5745732],
                ],
                &[0.9615521, 0.4445824],
                Activation::Sigmoid,
            ),
            layer(
                &[[1.6905344].as_slice(), &[-2.6346245]],
                &[0.4316521],
                Activation::Sigmoid,
            ),
        ],
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(NetworkSpec::new(name, 4, layers).with_dispatch_mode(DispatchMode::PaperCompat))
}

fn layer(rows: &[&[f64]], biases: &[f64], activation: Activation) -> LayerSpec {
    let weights = Matrix::from_rows(rows).expect("built-in weight tables are rectangular");
    LayerSpec::new(weights, biases.to_vec(), activation)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    name: String,
    input_dim: usize,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default = "default_dispatch")]
    dispatch_mode: DispatchMode,
    layers: Vec<LayerDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDocument {
    units: usize,
    activation: String,
    #[serde(default)]
    alpha: Option<f64>,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_dispatch() -> DispatchMode {
    DispatchMode::Corrected
}

/// Parses and validates a model document.
///
/// `threshold` defaults to 0.5 and `dispatch_mode` to `corrected` when
/// absent. Unknown fields are rejected.
pub fn load(text: &str) -> Result<NetworkSpec> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut report = ValidationReport::default();
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, l) in doc.layers.into_iter().enumerate() {
        if let Some(alpha) = l.alpha.filter(|_| l.activation != "leaky_relu") {
            report.push(Some(i), "alpha", "absent for non-leaky_relu activations", alpha);
        }
        let activation = match Activation::parse(&l.activation, l.alpha) {
            Ok(a) => a,
            Err(Error::InvalidAlpha(alpha)) => {
                report.push(Some(i), "alpha", "finite and non-negative", alpha);
                continue;
            }
            Err(e) => return Err(e),
        };
        let weights = match Matrix::from_rows(&l.weights) {
            Ok(w) => w,
            Err(Error::ShapeMismatch { context, expected, actual }) => {
                report.push(Some(i), &format!("weights {context} length"), expected, actual);
                continue;
            }
            Err(_) => {
                report.push(Some(i), "weights", "a non-empty rectangular matrix", "empty");
                continue;
            }
        };
        layers.push(LayerSpec {
            units: l.units,
            weights,
            biases: Vector(l.biases),
            activation,
        });
    }
    if !report.is_ok() {
        return Err(Error::Validation(report));
    }

    let spec = NetworkSpec {
        name: doc.name,
        input_dim: doc.input_dim,
        layers,
        threshold: doc.threshold,
        dispatch_mode: doc.dispatch_mode,
    };
    spec.ensure_valid()?;
    Ok(spec)
}

/// Canonical text form: two-space indentation, one weight row per line,
/// shortest round-trip decimals. `save(load(save(s))) == save(s)`.
pub fn save(spec: &NetworkSpec) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", json_string(&spec.name)));
    out.push_str(&format!("  \"input_dim\": {},\n", spec.input_dim));
    out.push_str(&format!("  \"threshold\": {},\n", json_number(spec.threshold)));
    out.push_str(&format!("  \"dispatch_mode\": \"{}\",\n", spec.dispatch_mode.as_str()));
    out.push_str("  \"layers\": [\n");
    for (i, layer) in spec.layers.iter().enumerate() {
        out.push_str("    {\n");
        out.push_str(&format!("      \"units\": {},\n", layer.units));
        out.push_str(&format!("      \"activation\": \"{}\",\n", layer.activation.name()));
        if let Some(alpha) = layer.activation.alpha() {
            out.push_str(&format!("      \"alpha\": {},\n", json_number(alpha)));
        }
        out.push_str("      \"weights\": [\n");
        let rows = layer.weights.rows();
        for (r, row) in layer.weights.iter_rows().enumerate() {
            let sep = if r + 1 < rows { "," } else { "" };
            out.push_str(&format!("        {}{sep}\n", json_array(row)));
        }
        out.push_str("      ],\n");
        out.push_str(&format!("      \"biases\": {}\n", json_array(&layer.biases)));
        let sep = if i + 1 < spec.layers.len() { "," } else { "" };
        out.push_str(&format!("    }}{sep}\n"));
    }
    out.push_str("  ]\n}\n");
    out
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_number(v: f64) -> String {
    // Shortest round-trip representation; non-finite values are caught by
    // validation before a model is saved.
    serde_json::to_string(&v).expect("f64 always serializes")
}

fn json_array(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| json_number(*v)).collect();
    format!("[{}]", items.join(", "))
}
