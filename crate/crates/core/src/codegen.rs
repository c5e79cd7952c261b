//! MicroPython emission.
//!
//! [`emit_micropython`] writes one self-contained source file that rebuilds
//! a network on a microcontroller: matrix helpers, activation functions,
//! the neuron dispatcher, weight literals and a layer-by-layer pipeline.
//! The only import is `math`.
//!
//! By default the emitted activations and dispatcher are the corrected ones.
//! With `compat` set, the activation and neuron code is the published
//! MicroPython source, including its `softmax`/`leaky_relu` fall-throughs.
//! In both variants `dense` reads column `i` of the printed weight matrix as
//! neuron `i`'s weights.

use std::fmt::Write as _;

use serde::Serialize;

use crate::activations::{Activation, DispatchMode};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::NetworkSpec;
use crate::pyfloat;

#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions<'a> {
    /// Emit the published activation/neuron code instead of the corrected one.
    pub compat: bool,
    /// Append the confusion-matrix and accuracy block.
    pub include_eval: bool,
    /// Samples embedded as `Xtest` (samples x input_dim).
    pub samples: Option<&'a Matrix>,
    /// Labels embedded as `ytest`; used by the evaluation block.
    pub labels: Option<&'a [u8]>,
}

pub fn emit_micropython(spec: &NetworkSpec, options: &EmitOptions<'_>) -> Result<String> {
    spec.ensure_valid()?;
    if let Some(x) = options.samples {
        if x.cols() != spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim,
                actual: x.cols(),
            });
        }
        if let Some(y) = options.labels {
            if y.len() != x.rows() {
                return Err(Error::LengthMismatch {
                    expected: x.rows(),
                    actual: y.len(),
                });
            }
        }
    }

    let mut out = String::new();
    let widths: Vec<String> = spec.widths().iter().map(ToString::to_string).collect();
    let variant = if options.compat {
        "published activation and neuron code"
    } else {
        "corrected activation and neuron code"
    };
    writeln!(out, "# Neural network \"{}\" for MicroPython.", escape_comment(&spec.name)).unwrap();
    writeln!(out, "# Layer widths: {}.", widths.join(" -> ")).unwrap();
    writeln!(out, "# Variant: {variant}.").unwrap();
    out.push_str("# Generated file; needs only the math module.\n");
    out.push_str("import math\n\n");

    out.push_str(MATH_BASICS);
    out.push('\n');
    if options.compat {
        out.push_str(COMPAT_DENSE);
        out.push('\n');
        out.push_str(COMPAT_ACTIVATIONS);
        out.push('\n');
        out.push_str(COMPAT_NEURON);
    } else {
        out.push_str(CORRECTED_DENSE);
        out.push('\n');
        out.push_str(CORRECTED_ACTIVATIONS);
        out.push('\n');
        out.push_str(CORRECTED_NEURON);
    }
    out.push('\n');

    out.push_str("# Weights and Biases\n");
    for (k, layer) in spec.layers.iter().enumerate() {
        let n = k + 1;
        push_matrix_literal(&mut out, &format!("w{n}"), &layer.weights);
        writeln!(out, "b{n} = {}", list_literal(&layer.biases)).unwrap();
    }
    out.push('\n');

    out.push_str("# Neural Network\n");
    out.push_str("def predict(Xtest):\n");
    let last = spec.layers.len() - 1;
    for (k, layer) in spec.layers.iter().enumerate() {
        let n = k + 1;
        let target = if k == last { "ypred".to_string() } else { format!("yout{n}") };
        let input = if k == 0 { "transpose(Xtest)".to_string() } else { format!("yout{k}") };
        let alpha = match layer.activation {
            Activation::LeakyRelu { alpha } if !options.compat => format!(", {}", pyfloat::repr(alpha)),
            _ => String::new(),
        };
        writeln!(
            out,
            "    {target} = dense({}, {input}, w{n}, b{n}, '{}'{alpha})",
            layer.units,
            layer.activation.name()
        )
        .unwrap();
    }
    out.push_str("    return ypred\n\n");

    if options.include_eval {
        out.push_str(EVAL_FUNCTIONS);
        out.push('\n');
    }

    out.push_str("# Test Data\n");
    match options.samples {
        Some(x) => push_matrix_literal(&mut out, "Xtest", x),
        None => out.push_str("Xtest = []\n"),
    }
    match options.labels {
        Some(y) if options.samples.is_some() => {
            let items: Vec<String> = y.iter().map(ToString::to_string).collect();
            writeln!(out, "ytest = [{}]", items.join(", ")).unwrap();
        }
        _ => out.push_str("ytest = []\n"),
    }
    writeln!(out, "threshold = {}", pyfloat::repr(spec.threshold)).unwrap();
    out.push('\n');

    out.push_str("if len(Xtest) > 0:\n");
    out.push_str("    ypred = predict(Xtest)\n");
    out.push_str("    for row in ypred:\n");
    out.push_str("        for v in row:\n");
    out.push_str("            print(repr(v))\n");
    if options.include_eval {
        out.push_str("    if len(ytest) == len(Xtest):\n");
        out.push_str("        labels = [1 if p >= threshold else 0 for p in ypred[0]]\n");
        out.push_str("        cm = confusion_matrix(ytest, labels)\n");
        out.push_str("        print_matrix(cm, 2)\n");
        out.push_str("        print(\"Accuracy:\", accuracy(cm))\n");
    }
    Ok(out)
}

fn escape_comment(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn list_literal(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| pyfloat::repr(*v)).collect();
    format!("[{}]", items.join(", "))
}

/// Matrix literal with one row per line, continuation rows aligned under
/// the first.
fn push_matrix_literal(out: &mut String, name: &str, m: &Matrix) {
    let indent = " ".repeat(name.len() + 4);
    for (r, row) in m.iter_rows().enumerate() {
        if r == 0 {
            write!(out, "{name} = [").unwrap();
        } else {
            out.push_str(&indent);
        }
        out.push_str(&list_literal(row));
        out.push_str(if r + 1 == m.rows() { "]\n" } else { ",\n" });
    }
}

const MATH_BASICS: &str = r#"# Mathematical Basics - I
def zero_dim(x):
    z = [0 for i in range(len(x))]
    return z

# Mathematical Basics - II
def add_dim(x, y):
    z = [x[i] + y[i] for i in range(len(x))]
    return z

# Mathematical Basics - III
def zeros(rows, cols):
    M = []
    while len(M) < rows:
        M.append([])
        while len(M[-1]) < cols:
            M[-1].append(0.0)
    return M

# Mathematical Basics - IV
def transpose(M):
    if not isinstance(M[0], list):
        M = [M]
    rows = len(M)
    cols = len(M[0])
    MT = zeros(cols, rows)
    for i in range(rows):
        for j in range(cols):
            MT[j][i] = M[i][j]
    return MT

# Mathematical Basics - V
def print_matrix(M, decimals=3):
    for row in M:
        print([round(x, decimals) + 0 for x in row])
"#;

const COMPAT_DENSE: &str = r#"# Mathematical Basics - VI
# w is printed with one row per input; column i holds neuron i's weights.
def dense(nunit, x, w, b, activation):
    wt = transpose(w)
    res = []
    for i in range(nunit):
        z = neuron(x, wt[i], b[i], activation)
        res.append(z)
    return res
"#;

const CORRECTED_DENSE: &str = r#"# Mathematical Basics - VI
# w is printed with one row per input; column i holds neuron i's weights.
# Softmax normalizes across the units of the layer for each sample.
def dense(nunit, x, w, b, activation, alpha=0.01):
    wt = transpose(w)
    if activation == "softmax":
        z = [neuron_sum(x, wt[i], b[i]) for i in range(nunit)]
        return transpose([softmax(col) for col in transpose(z)])
    res = []
    for i in range(nunit):
        z = neuron(x, wt[i], b[i], activation, alpha)
        res.append(z)
    return res
"#;

const COMPAT_ACTIVATIONS: &str = r#"# Sigmoid
def sigmoid(x):
    z = [1 / (1 + math.exp(-x[val])) for val in range(len(x))]
    return z

# ReLU
def relu(x):
    y = []
    for i in range(len(x)):
        if x[i] >= 0:
            y.append(x[i])
        else:
            y.append(0)
    return y

# Leaky ReLU
def leaky_relu(x, alpha=0.01):
    p = []
    for i in range(len(x)):
        if x[i] >= 0:
            p.append(x[i])
        else:
            p.append(alpha * x[i])
    return p

# Tanh
def tanh(x):
    t = [(math.exp(x[val]) - math.exp(-x[val])) / (math.exp(x[val])
      + math.exp(-x[val])) for val in range(len(x))]
    return t

# Softmax (as published; never reached through neuron below)
def softmax(x):
    max_x = max(x[val])
    exp_x = [math.exp(val - max_x) for val in range(len(x))]
    sum_exp_x = sum(exp_x)
    s = [j / sum_exp_x for j in exp_x]
    return s
"#;

const CORRECTED_ACTIVATIONS: &str = r#"# Sigmoid
def sigmoid(x):
    z = []
    for v in x:
        if v >= 0:
            z.append(1 / (1 + math.exp(-v)))
        else:
            e = math.exp(v)
            z.append(e / (1 + e))
    return z

# ReLU
def relu(x):
    y = []
    for i in range(len(x)):
        if x[i] >= 0:
            y.append(x[i])
        else:
            y.append(0.0)
    return y

# Leaky ReLU
def leaky_relu(x, alpha=0.01):
    p = []
    for i in range(len(x)):
        if x[i] >= 0:
            p.append(x[i])
        else:
            p.append(alpha * x[i])
    return p

# Tanh
def tanh(x):
    t = []
    for v in x:
        e = math.exp(-2 * abs(v))
        r = (1 - e) / (1 + e)
        t.append(r if v >= 0 else -r)
    return t

# Softmax
def softmax(x):
    max_x = max(x)
    exp_x = [math.exp(v - max_x) for v in x]
    sum_exp_x = sum(exp_x)
    s = [j / sum_exp_x for j in exp_x]
    return s
"#;

const COMPAT_NEURON: &str = r#"# Single Neuron
def neuron(x, w, b, activation):

    tmp = zero_dim(x[0])

    for i in range(len(x)):
        tmp = add_dim(tmp, [(float(w[i]) * float(x[i][j]))
          for j in range(len(x[0]))])

    if activation == "sigmoid":
        yp = sigmoid([tmp[i] + b for i in range(len(tmp))])
    elif activation == "relu":
        yp = relu([tmp[i] + b for i in range(len(tmp))])
    elif activation == "leaky_relu":
        yp = relu([tmp[i] + b for i in range(len(tmp))])
    elif activation == "tanh":
        yp = tanh([tmp[i] + b for i in range(len(tmp))])
    elif activation == "softmax":
        yp = tanh([tmp[i] + b for i in range(len(tmp))])
    else:
        print("Function unknown!")

    return yp
"#;

const CORRECTED_NEURON: &str = r#"# Weighted Sum
def neuron_sum(x, w, b):
    tmp = zero_dim(x[0])
    for i in range(len(x)):
        tmp = add_dim(tmp, [(float(w[i]) * float(x[i][j]))
          for j in range(len(x[0]))])
    return [tmp[i] + b for i in range(len(tmp))]

# Single Neuron
def neuron(x, w, b, activation, alpha=0.01):
    z = neuron_sum(x, w, b)
    if activation == "sigmoid":
        yp = sigmoid(z)
    elif activation == "relu":
        yp = relu(z)
    elif activation == "leaky_relu":
        yp = leaky_relu(z, alpha)
    elif activation == "tanh":
        yp = tanh(z)
    elif activation == "softmax":
        yp = [softmax([v])[0] for v in z]
    else:
        raise ValueError("Function unknown!")
    return yp
"#;

const EVAL_FUNCTIONS: &str = r#"# Confusion Matrix
def confusion_matrix(actual, predicted):
    tp = 0
    fn_ = 0
    fp = 0
    tn = 0
    for i in range(len(actual)):
        if actual[i] == 1 and predicted[i] == 1:
            tp += 1
        elif actual[i] == 1:
            fn_ += 1
        elif predicted[i] == 1:
            fp += 1
        else:
            tn += 1
    return [[tp, fn_], [fp, tn]]

# Accuracy
def accuracy(cm):
    correct = cm[0][0] + cm[1][1]
    total = cm[0][0] + cm[0][1] + cm[1][0] + cm[1][1]
    return correct / total
"#;

/// A device memory budget the card compares parameter storage against.
#[derive(Debug, Clone, Serialize)]
pub struct DeviceBudget {
    pub device: &'static str,
    pub sram_bytes: usize,
    pub flash_bytes: usize,
}

pub const PICO_BUDGETS: [DeviceBudget; 2] = [
    DeviceBudget {
        device: "Raspberry Pi Pico (RP2040)",
        sram_bytes: 264 * 1024,
        flash_bytes: 2 * 1024 * 1024,
    },
    DeviceBudget {
        device: "Raspberry Pi Pico 2 (RP2350)",
        sram_bytes: 520 * 1024,
        flash_bytes: 4 * 1024 * 1024,
    },
];

#[derive(Debug, Clone, Serialize)]
pub struct LayerCard {
    pub index: usize,
    pub input_width: usize,
    pub units: usize,
    pub activation: String,
    /// Function that actually runs under the model's dispatch mode.
    pub runs_as: String,
    pub weights: usize,
    pub biases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCard {
    pub name: String,
    pub widths: Vec<usize>,
    pub layer_count: usize,
    pub neurons: usize,
    pub weights: usize,
    pub biases: usize,
    pub parameters: usize,
    pub dispatch_mode: DispatchMode,
    pub threshold: f64,
    pub f64_bytes: usize,
    pub f32_bytes: usize,
    pub layers: Vec<LayerCard>,
    pub budgets: Vec<DeviceBudget>,
}

impl ModelCard {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        spec.ensure_valid()?;
        let parameters = spec.parameter_count();
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(index, l)| LayerCard {
                index,
                input_width: l.input_width(),
                units: l.units,
                activation: l.activation.to_string(),
                runs_as: spec.dispatch_mode.resolve(l.activation).to_string(),
                weights: l.weights.rows() * l.weights.cols(),
                biases: l.biases.len(),
            })
            .collect();
        Ok(Self {
            name: spec.name.clone(),
            widths: spec.widths(),
            layer_count: spec.layers.len(),
            neurons: spec.neuron_count(),
            weights: spec.weight_count(),
            biases: spec.bias_count(),
            parameters,
            dispatch_mode: spec.dispatch_mode,
            threshold: spec.threshold,
            f64_bytes: parameters * std::mem::size_of::<f64>(),
            f32_bytes: parameters * std::mem::size_of::<f32>(),
            layers,
            budgets: PICO_BUDGETS.to_vec(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cards always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let widths: Vec<String> = self.widths.iter().map(ToString::to_string).collect();
        writeln!(s, "model: {}", self.name).unwrap();
        writeln!(s, "layers: {} ({})", self.layer_count, widths.join(" -> ")).unwrap();
        writeln!(s, "neurons: {}", self.neurons).unwrap();
        writeln!(
            s,
            "parameters: {} ({} weights + {} biases)",
            self.parameters, self.weights, self.biases
        )
        .unwrap();
        writeln!(s, "dispatch mode: {}", self.dispatch_mode).unwrap();
        writeln!(s, "threshold: {}", self.threshold).unwrap();
        for l in &self.layers {
            let runs = if l.runs_as != l.activation {
                format!(" (runs as {})", l.runs_as)
            } else {
                String::new()
            };
            writeln!(
                s,
                "  layer {}: {} -> {} {}{runs}",
                l.index, l.input_width, l.units, l.activation
            )
            .unwrap();
        }
        writeln!(
            s,
            "parameter memory: {} bytes as float64, {} bytes as float32",
            self.f64_bytes, self.f32_bytes
        )
        .unwrap();
        for b in &self.budgets {
            writeln!(
                s,
                "  {}: {:.4}% of {} KiB SRAM (float64)",
                b.device,
                100.0 * self.f64_bytes as f64 / b.sram_bytes as f64,
                b.sram_bytes / 1024
            )
            .unwrap();
        }
        s
    }
}

pub fn emit_model_card(spec: &NetworkSpec) -> Result<String> {
    Ok(ModelCard::from_spec(spec)?.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::builtin;

    #[test]
    fn iris6_pipeline_lines() {
        let text = emit_micropython(&builtin("iris-6").unwrap(), &EmitOptions::default()).unwrap();
        assert!(text.contains("    yout1 = dense(3, transpose(Xtest), w1, b1, 'relu')\n"));
        assert!(text.contains("    yout2 = dense(2, yout1, w2, b2, 'sigmoid')\n"));
        assert!(text.contains("    ypred = dense(1, yout2, w3, b3, 'sigmoid')\n"));
        assert!(text.contains("b3 = [0.4316521]\n"));
    }

    #[test]
    fn iris8_weight_layout_and_dense_calls() {
        let text = emit_micropython(&builtin("iris-8").unwrap(), &EmitOptions::default()).unwrap();
        assert!(text.contains(
            "w1 = [[-0.75323504, -0.25906014],\n      [-0.46379513, -0.5019245],\n      [2.1273055, 1.7724446],\n      [1.1853403, 0.88468695]]\n"
        ));
        let units: Vec<&str> = text
            .lines()
            .filter(|l| l.contains("= dense("))
            .map(|l| l.split("dense(").nth(1).unwrap().split(',').next().unwrap())
            .collect();
        assert_eq!(units, ["2", "3", "2", "1"]);
    }

    #[test]
    fn only_math_is_imported() {
        for compat in [false, true] {
            let opts = EmitOptions { compat, include_eval: true, ..Default::default() };
            let text = emit_micropython(&builtin("iris-8").unwrap(), &opts).unwrap();
            let imports: Vec<&str> = text
                .lines()
                .filter(|l| l.trim_start().starts_with("import ") || l.trim_start().starts_with("from "))
                .collect();
            assert_eq!(imports, ["import math"]);
            assert!(!text.contains('\r'));
        }
    }

    #[test]
    fn compat_variant_keeps_fallthroughs() {
        let opts = EmitOptions { compat: true, ..Default::default() };
        let text = emit_micropython(&builtin("iris-8").unwrap(), &opts).unwrap();
        assert!(text.contains(
            "    elif activation == \"softmax\":\n        yp = tanh([tmp[i] + b for i in range(len(tmp))])"
        ));
        assert!(text.contains("print(\"Function unknown!\")"));
        assert!(text.contains("max_x = max(x[val])"));
    }

    #[test]
    fn emission_is_deterministic() {
        let spec = builtin("iris-8").unwrap();
        let opts = EmitOptions { include_eval: true, ..Default::default() };
        assert_eq!(
            emit_micropython(&spec, &opts).unwrap(),
            emit_micropython(&spec, &opts).unwrap()
        );
    }

    #[test]
    fn embedded_samples_must_match_input_dim() {
        let spec = builtin("iris-6").unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let opts = EmitOptions { samples: Some(&x), ..Default::default() };
        assert!(matches!(
            emit_micropython(&spec, &opts),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn model_card_counts() {
        let card = ModelCard::from_spec(&builtin("iris-8").unwrap()).unwrap();
        assert_eq!(card.neurons, 8);
        assert_eq!(card.layer_count, 4);
        assert_eq!(card.weights, 8 + 6 + 6 + 2);
        assert_eq!(card.biases, 8);
        assert_eq!(card.parameters, 30);
        assert_eq!(card.f64_bytes, 240);
        assert_eq!(card.f32_bytes, 120);
        assert_eq!(card.layers[2].runs_as, "tanh");

        let card = ModelCard::from_spec(&builtin("iris-6").unwrap()).unwrap();
        assert_eq!((card.neurons, card.layer_count), (6, 3));
        assert_eq!(card.parameters, 12 + 6 + 2 + 6);
        assert_eq!(card.f64_bytes, card.parameters * 8);

        let text = emit_model_card(&builtin("iris-6").unwrap()).unwrap();
        assert!(text.contains("layers: 3 (4 -> 3 -> 2 -> 1)"));
    }
}
