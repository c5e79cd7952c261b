//! Embedded invariant suite run by `tinydense selftest`.
//!
//! Every check uses fixed seeds, so repeated runs produce identical reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::activations::{self, Activation, DispatchMode};
use crate::codegen::{self, EmitOptions};
use crate::inference::{self, Batch};
use crate::linalg::Matrix;
use crate::network::{self, LayerSpec, NetworkSpec, BUILTIN_NAMES};

const SEED: u64 = 0x5EED_0001;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Expected fingerprint of a built-in model.
struct Fingerprint {
    name: &'static str,
    widths: &'static [usize],
    first_weight: f64,
    last_bias: f64,
    parameter_sum: f64,
    parameter_abs_sum: f64,
    /// (input, probability in paper-compat mode)
    probes: [([f64; 4], f64); 2],
}

const FINGERPRINTS: [Fingerprint; 2] = [
    Fingerprint {
        name: "iris-8",
        widths: &[4, 2, 3, 2, 1],
        first_weight: -0.75323504,
        last_bias: -1.2177287,
        parameter_sum: 7.646557630000002,
        parameter_abs_sum: 30.600100649999998,
        probes: [
            ([0.0, 0.0, 0.0, 0.0], 0.41012660073968943),
            ([5.0, 3.0, 4.0, 1.0], 0.635761211375383),
        ],
    },
    Fingerprint {
        name: "iris-6",
        widths: &[4, 3, 2, 1],
        first_weight: 0.50914556,
        last_bias: 0.4316521,
        parameter_sum: 0.9158412500000006,
        parameter_abs_sum: 25.143460510000004,
        probes: [
            ([0.0, 0.0, 0.0, 0.0], 0.5928285322845708),
            ([5.0, 3.0, 4.0, 1.0], 0.892824829335587),
        ],
    },
];

/// Runs every check against the shipped built-in models.
pub fn run() -> SelftestReport {
    let builtins: Vec<NetworkSpec> = BUILTIN_NAMES
        .iter()
        .map(|n| network::builtin(n).expect("built-in names resolve"))
        .collect();
    run_with_builtins(&builtins)
}

/// Runs every check, fingerprinting `builtins` in place of the shipped
/// models. Lets a harness verify that corrupted constants are caught.
pub fn run_with_builtins(builtins: &[NetworkSpec]) -> SelftestReport {
    let checks = vec![
        check_builtins(builtins),
        check_activation_identities(),
        check_oracle_equivalence(),
        check_mode_equivalence(),
        check_codegen_fidelity(builtins),
    ];
    SelftestReport { checks }
}

fn result(name: &'static str, failure: Option<String>, ok_detail: String) -> CheckResult {
    match failure {
        Some(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
        None => CheckResult {
            name,
            passed: true,
            detail: ok_detail,
        },
    }
}

fn check_builtins(builtins: &[NetworkSpec]) -> CheckResult {
    const NAME: &str = "builtin-fidelity";
    for fp in &FINGERPRINTS {
        let Some(spec) = builtins.iter().find(|s| s.name == fp.name) else {
            return result(NAME, Some(format!("{} missing", fp.name)), String::new());
        };
        if let Some(err) = fingerprint_mismatch(spec, fp) {
            return result(NAME, Some(format!("{}: {err}", fp.name)), String::new());
        }
    }
    result(NAME, None, format!("{} models match their fingerprints", FINGERPRINTS.len()))
}

fn fingerprint_mismatch(spec: &NetworkSpec, fp: &Fingerprint) -> Option<String> {
    let report = spec.validate();
    if !report.is_ok() {
        return Some(format!("validation failed\n{report}"));
    }
    if spec.widths() != fp.widths {
        return Some(format!("widths {:?}, expected {:?}", spec.widths(), fp.widths));
    }
    let first = spec.layers[0].weights.get(0, 0);
    if first.to_bits() != fp.first_weight.to_bits() {
        return Some(format!("first weight {first}, expected {}", fp.first_weight));
    }
    let last = *spec.layers.last()?.biases.last()?;
    if last.to_bits() != fp.last_bias.to_bits() {
        return Some(format!("last bias {last}, expected {}", fp.last_bias));
    }
    let (mut sum, mut abs_sum) = (0.0f64, 0.0f64);
    for layer in &spec.layers {
        for v in layer.weights.as_slice().iter().chain(layer.biases.iter()) {
            sum += v;
            abs_sum += v.abs();
        }
    }
    if (sum - fp.parameter_sum).abs() > 1e-12 || (abs_sum - fp.parameter_abs_sum).abs() > 1e-12 {
        return Some(format!(
            "parameter checksum ({sum}, {abs_sum}), expected ({}, {})",
            fp.parameter_sum, fp.parameter_abs_sum
        ));
    }
    let compat = spec.clone().with_dispatch_mode(DispatchMode::PaperCompat);
    for (input, expected) in &fp.probes {
        let batch = Batch::from_rows(&[*input]).ok()?;
        let got = match inference::forward(&compat, &batch) {
            Ok(m) => m.get(0, 0),
            Err(e) => return Some(e.to_string()),
        };
        if (got - expected).abs() > 1e-12 {
            return Some(format!("probe {input:?} gave {got}, expected {expected}"));
        }
    }
    None
}

fn check_activation_identities() -> CheckResult {
    const NAME: &str = "activation-identities";
    const POINTS: usize = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..POINTS {
        let x: f64 = rng.gen_range(-500.0..=500.0);
        let s = activations::sigmoid_scalar(x) + activations::sigmoid_scalar(-x);
        if (s - 1.0).abs() > 1e-12 {
            return result(NAME, Some(format!("sigmoid({x}) + sigmoid(-{x}) = {s}")), String::new());
        }
        let t = activations::tanh_scalar(x);
        let via_sigmoid = 2.0 * activations::sigmoid_scalar(2.0 * x) - 1.0;
        if (t - via_sigmoid).abs() > 1e-12 {
            return result(NAME, Some(format!("tanh({x}) = {t}, 2*sigmoid(2x)-1 = {via_sigmoid}")), String::new());
        }
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-500.0..=500.0)).collect();
        let sm = activations::softmax(&v);
        let total: f64 = sm.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return result(NAME, Some(format!("softmax({v:?}) sums to {total}")), String::new());
        }
        let c: f64 = rng.gen_range(-100.0..=100.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let sm2 = activations::softmax(&shifted);
        if sm.iter().zip(sm2.iter()).any(|(a, b)| (a - b).abs() > 1e-12) {
            return result(NAME, Some(format!("softmax({v:?}) changes under shift {c}")), String::new());
        }
    }
    result(NAME, None, format!("{POINTS} points within 1e-12"))
}

/// Random network with `1..=max_layers` layers of `1..=max_units` units,
/// weights and biases uniform in [-3, 3] and a random activation per layer.
pub fn random_spec<R: Rng>(rng: &mut R, max_layers: usize, max_units: usize) -> NetworkSpec {
    let input_dim = rng.gen_range(1..=max_units);
    let layer_count = rng.gen_range(1..=max_layers);
    let mut width = input_dim;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let units = rng.gen_range(1..=max_units);
        let data = (0..width * units).map(|_| rng.gen_range(-3.0..=3.0)).collect();
        let weights = Matrix::from_vec(width, units, data).expect("dimensions are positive");
        let biases = (0..units).map(|_| rng.gen_range(-3.0..=3.0)).collect();
        let activation = match rng.gen_range(0..5) {
            0 => Activation::Sigmoid,
            1 => Activation::Relu,
            2 => Activation::LeakyRelu {
                alpha: rng.gen_range(0.0..=0.3),
            },
            3 => Activation::Tanh,
            _ => Activation::Softmax,
        };
        layers.push(LayerSpec::new(weights, biases, activation));
        width = units;
    }
    let mode = if rng.gen_bool(0.5) {
        DispatchMode::Corrected
    } else {
        DispatchMode::PaperCompat
    };
    NetworkSpec::new("random", input_dim, layers).with_dispatch_mode(mode)
}

/// Random batch of `samples` rows with features uniform in [-3, 3].
pub fn random_batch<R: Rng>(rng: &mut R, samples: usize, input_dim: usize) -> Batch {
    let data = (0..samples * input_dim).map(|_| rng.gen_range(-3.0..=3.0)).collect();
    Batch::new(Matrix::from_vec(samples, input_dim, data).expect("dimensions are positive"))
}

/// Sample-at-a-time evaluation with nested loops; shares no code with the
/// batched engine beyond the scalar activation definitions.
fn naive_forward(spec: &NetworkSpec, sample: &[f64]) -> Vec<f64> {
    let mut x = sample.to_vec();
    for layer in &spec.layers {
        let mut z = vec![0.0; layer.units];
        for (u, zu) in z.iter_mut().enumerate() {
            let mut acc = layer.biases[u];
            for (i, xi) in x.iter().enumerate() {
                acc += layer.weights.get(i, u) * xi;
            }
            *zu = acc;
        }
        x = match spec.dispatch_mode.resolve(layer.activation) {
            Activation::Sigmoid => z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
            Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
            Activation::LeakyRelu { alpha } => z.iter().map(|&v| if v >= 0.0 { v } else { alpha * v }).collect(),
            Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
            Activation::Softmax => {
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
        };
    }
    x
}

fn check_oracle_equivalence() -> CheckResult {
    const NAME: &str = "oracle-equivalence";
    const NETS: usize = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for n in 0..NETS {
        let spec = random_spec(&mut rng, 3, 5);
        let batch = random_batch(&mut rng, 6, spec.input_dim);
        let out = match inference::forward(&spec, &batch) {
            Ok(o) => o,
            Err(e) => return result(NAME, Some(format!("net {n}: {e}")), String::new()),
        };
        for (j, sample) in batch.features().iter_rows().enumerate() {
            let want = naive_forward(&spec, sample);
            for (u, w) in want.iter().enumerate() {
                let got = out.get(u, j);
                if (got - w).abs() > 1e-9 {
                    return result(
                        NAME,
                        Some(format!("net {n} sample {j} unit {u}: engine {got}, oracle {w}")),
                        String::new(),
                    );
                }
            }
        }
    }
    result(NAME, None, format!("{NETS} random networks within 1e-9"))
}

fn check_mode_equivalence() -> CheckResult {
    const NAME: &str = "mode-equivalence";
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for n in 0..25 {
        let mut spec = random_spec(&mut rng, 3, 5);
        for layer in &mut spec.layers {
            if matches!(layer.activation, Activation::Softmax | Activation::LeakyRelu { .. }) {
                layer.activation = Activation::Tanh;
            }
        }
        let batch = random_batch(&mut rng, 4, spec.input_dim);
        let a = inference::forward(&spec.clone().with_dispatch_mode(DispatchMode::Corrected), &batch);
        let b = inference::forward(&spec.with_dispatch_mode(DispatchMode::PaperCompat), &batch);
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => {}
            _ => return result(NAME, Some(format!("net {n}: modes disagree")), String::new()),
        }
    }
    result(NAME, None, "25 networks agree exactly".into())
}

fn check_codegen_fidelity(builtins: &[NetworkSpec]) -> CheckResult {
    const NAME: &str = "codegen-fidelity";
    for spec in builtins {
        let opts = EmitOptions::default();
        let (a, b) = match (codegen::emit_micropython(spec, &opts), codegen::emit_micropython(spec, &opts)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return result(NAME, Some(format!("{}: {e}", spec.name)), String::new()),
        };
        if a != b {
            return result(NAME, Some(format!("{}: emission is not deterministic", spec.name)), String::new());
        }
        let parsed = literal_values(&a);
        let expected: Vec<f64> = spec
            .layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(l.biases.iter()).copied())
            .collect();
        if parsed.len() != expected.len()
            || parsed.iter().zip(&expected).any(|(p, e)| p.to_bits() != e.to_bits())
        {
            return result(NAME, Some(format!("{}: weight literals do not round-trip", spec.name)), String::new());
        }
    }
    result(NAME, None, "emission deterministic, literals bit-exact".into())
}

/// Numbers in the `w<n> = ...` / `b<n> = ...` block of an emitted program,
/// in order of appearance.
fn literal_values(program: &str) -> Vec<f64> {
    let block = program
        .split("# Weights and Biases\n")
        .nth(1)
        .and_then(|rest| rest.split("\n\n").next())
        .unwrap_or("");
    let mut values = Vec::new();
    for line in block.lines() {
        let body = line.split_once('=').map_or(line, |(_, rhs)| rhs);
        for token in body.split(|c: char| c == '[' || c == ']' || c == ',' || c.is_whitespace()) {
            if let Ok(v) = token.parse::<f64>() {
                values.push(v);
            }
        }
    }
    values
}
