//! Forward pass.
//!
//! Layer outputs are kept as `units x samples` matrices: the batch is
//! transposed once on entry and every dense layer maps a
//! `width x samples` input to a `units x samples` output.

use crate::activations::{self, Activation, DispatchMode};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::network::NetworkSpec;

/// Input features, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Matrix,
}

impl Batch {
    pub fn new(features: Matrix) -> Self {
        Self { features }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Matrix::from_rows(rows).map(Self::new)
    }

    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }
}

impl From<Matrix> for Batch {
    fn from(features: Matrix) -> Self {
        Self::new(features)
    }
}

/// Weighted sum plus bias for every sample: `sum_i w[i] * x[i][j] + b`.
///
/// Accumulates feature by feature, starting from zero, and adds the bias
/// last.
pub fn weighted_sum(x: &Matrix, w: &[f64], b: f64) -> Result<Vector> {
    if w.len() != x.rows() {
        return Err(Error::ShapeMismatch {
            context: "neuron weight vector".into(),
            expected: x.rows(),
            actual: w.len(),
        });
    }
    let mut acc = vec![0.0; x.cols()];
    for (wi, row) in w.iter().zip(x.iter_rows()) {
        for (a, xij) in acc.iter_mut().zip(row) {
            *a += wi * xij;
        }
    }
    Ok(acc.into_iter().map(|z| z + b).collect())
}

/// A single neuron over a `width x samples` input.
///
/// A lone neuron is a one-unit layer, so in corrected mode softmax yields
/// 1.0 for every sample.
pub fn neuron(
    x: &Matrix,
    w: &[f64],
    b: f64,
    kind: Activation,
    mode: DispatchMode,
) -> Result<Vector> {
    let z = weighted_sum(x, w, b)?;
    let kind = mode.resolve(kind);
    if kind.is_normalizing() {
        return Ok(z.iter().map(|v| activations::softmax(&[*v])[0]).collect());
    }
    Ok(activations::apply(kind, &z))
}

/// A dense layer. Row `i` of the result is neuron `i` fed with column `i`
/// of `weights`. In corrected mode softmax normalizes across units for
/// each sample.
pub fn dense(
    nunit: usize,
    x: &Matrix,
    weights: &Matrix,
    biases: &[f64],
    kind: Activation,
    mode: DispatchMode,
) -> Result<Matrix> {
    check("dense weight columns", nunit, weights.cols())?;
    check("dense bias length", nunit, biases.len())?;
    check("dense weight rows", x.rows(), weights.rows())?;
    if nunit == 0 {
        return Err(Error::InvalidDimension {
            what: "dense units",
            value: 0,
        });
    }

    let samples = x.cols();
    let mut z = Vec::with_capacity(nunit * samples);
    for (i, &b) in biases.iter().enumerate() {
        z.extend(weighted_sum(x, &weights.column(i), b)?.into_inner());
    }

    let kind = mode.resolve(kind);
    let out = if kind.is_normalizing() {
        let mut out = vec![0.0; z.len()];
        let mut column = vec![0.0; nunit];
        for j in 0..samples {
            for (i, c) in column.iter_mut().enumerate() {
                *c = z[i * samples + j];
            }
            for (i, p) in activations::softmax(&column).iter().enumerate() {
                out[i * samples + j] = *p;
            }
        }
        out
    } else {
        activations::apply(kind, &z).into_inner()
    };
    Matrix::from_vec(nunit, samples, out)
}

fn check(context: &str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            context: context.into(),
            expected,
            actual,
        })
    }
}

/// Output of every layer, in order. The last entry is the network output.
pub fn forward_layers(spec: &NetworkSpec, batch: &Batch) -> Result<Vec<Matrix>> {
    spec.ensure_valid()?;
    if batch.input_dim() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: batch.input_dim(),
        });
    }
    let mut outputs: Vec<Matrix> = Vec::with_capacity(spec.layers.len());
    let input = batch.features().transpose();
    for layer in &spec.layers {
        let x = outputs.last().unwrap_or(&input);
        let y = dense(
            layer.units,
            x,
            &layer.weights,
            &layer.biases,
            layer.activation,
            spec.dispatch_mode,
        )?;
        outputs.push(y);
    }
    Ok(outputs)
}

/// Runs the whole network and returns the `output_units x samples` result.
pub fn forward(spec: &NetworkSpec, batch: &Batch) -> Result<Matrix> {
    Ok(forward_layers(spec, batch)?
        .pop()
        .expect("validated networks have at least one layer"))
}

/// Probability of the positive class for every sample. Requires a single
/// output unit.
pub fn probabilities(spec: &NetworkSpec, batch: &Batch) -> Result<Vec<f64>> {
    if spec.output_units() > 1 {
        return Err(Error::MultiUnitOutput(spec.output_units()));
    }
    Ok(forward(spec, batch)?.row(0).to_vec())
}

/// Label 1 where the probability reaches the threshold.
pub fn labels_from_probabilities(probabilities: &[f64], threshold: f64) -> Vec<u8> {
    probabilities.iter().map(|p| u8::from(*p >= threshold)).collect()
}

pub fn predict(spec: &NetworkSpec, batch: &Batch) -> Result<Vec<u8>> {
    let p = probabilities(spec, batch)?;
    Ok(labels_from_probabilities(&p, spec.threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{builtin, LayerSpec};

    fn m<const C: usize>(rows: &[[f64; C]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn neuron_hand_examples() {
        let x = m(&[[1.0, -2.0], [0.0, 3.0]]);
        let y = neuron(&x, &[1.0, 1.0], 0.0, Activation::Relu, DispatchMode::Corrected).unwrap();
        assert_eq!(&*y, &[1.0, 1.0]);

        let x = m(&[[4.0, -7.0, 0.3], [1.0, 2.0, 3.0]]);
        let y = neuron(&x, &[0.0, 0.0], 0.0, Activation::Sigmoid, DispatchMode::Corrected).unwrap();
        assert_eq!(&*y, &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn neuron_compat_fallthroughs() {
        let x = m(&[[0.3, -1.2, 2.0], [-0.7, 0.4, 1.1]]);
        let w = [0.8, -1.5];
        let compat = DispatchMode::PaperCompat;
        assert_eq!(
            neuron(&x, &w, 0.1, Activation::Softmax, compat).unwrap(),
            neuron(&x, &w, 0.1, Activation::Tanh, compat).unwrap()
        );
        assert_eq!(
            neuron(&x, &w, 0.1, Activation::LeakyRelu { alpha: 0.2 }, compat).unwrap(),
            neuron(&x, &w, 0.1, Activation::Relu, compat).unwrap()
        );
        let single = neuron(&x, &w, 0.1, Activation::Softmax, DispatchMode::Corrected).unwrap();
        assert_eq!(&*single, &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn neuron_rejects_length_mismatch() {
        let x = m(&[[1.0], [2.0]]);
        assert!(matches!(
            neuron(&x, &[1.0], 0.0, Activation::Relu, DispatchMode::Corrected),
            Err(Error::ShapeMismatch { expected: 2, actual: 1, .. })
        ));
    }

    #[test]
    fn dense_hand_examples() {
        let x = m(&[[1.0, 0.0], [0.0, 1.0]]);
        let eye = m(&[[1.0, 0.0], [0.0, 1.0]]);
        let y = dense(2, &x, &eye, &[0.0, 0.0], Activation::Relu, DispatchMode::Corrected).unwrap();
        assert_eq!(y, eye);

        let x = m(&[[2.0], [3.0]]);
        let w = m(&[[0.5], [0.5]]);
        let y = dense(1, &x, &w, &[-2.5], Activation::Sigmoid, DispatchMode::Corrected).unwrap();
        assert_eq!(y.to_rows(), vec![vec![0.5]]);
    }

    #[test]
    fn dense_reads_columns_as_neurons() {
        // 3 inputs, 2 units; unit 1 only sees input 2.
        let w = m(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let x = m(&[[1.0], [2.0], [5.0]]);
        let y = dense(2, &x, &w, &[0.0, 0.0], Activation::Relu, DispatchMode::Corrected).unwrap();
        assert_eq!(y.to_rows(), vec![vec![3.0], vec![5.0]]);
    }

    #[test]
    fn dense_softmax_normalizes_each_sample() {
        let w = m(&[[1.0, -1.0, 0.5], [0.2, 0.3, -0.4]]);
        let x = m(&[[1.0, -2.0, 0.5, 4.0], [0.0, 1.0, 3.0, -1.0]]);
        let y = dense(3, &x, &w, &[0.0, 0.1, 0.2], Activation::Softmax, DispatchMode::Corrected)
            .unwrap();
        for j in 0..4 {
            let s: f64 = (0..3).map(|i| y.get(i, j)).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_shape_errors() {
        let x = m(&[[1.0], [2.0]]);
        let w = m(&[[1.0, 2.0], [3.0, 4.0]]);
        assert!(dense(3, &x, &w, &[0.0, 0.0], Activation::Relu, DispatchMode::Corrected).is_err());
        assert!(dense(2, &x, &w, &[0.0], Activation::Relu, DispatchMode::Corrected).is_err());
        let x3 = m(&[[1.0], [2.0], [3.0]]);
        assert!(dense(2, &x3, &w, &[0.0, 0.0], Activation::Relu, DispatchMode::Corrected).is_err());
    }

    #[test]
    fn iris6_single_sample_unrolled() {
        let spec = builtin("iris-6").unwrap();
        let x = [5.0, 3.0, 4.0, 1.0];
        let h1: Vec<f64> = (0..3)
            .map(|u| {
                let z: f64 = (0..4).map(|i| spec.layers[0].weights.get(i, u) * x[i]).sum::<f64>()
                    + spec.layers[0].biases[u];
                z.max(0.0)
            })
            .collect();
        let h2: Vec<f64> = (0..2)
            .map(|u| {
                let z: f64 = (0..3).map(|i| spec.layers[1].weights.get(i, u) * h1[i]).sum::<f64>()
                    + spec.layers[1].biases[u];
                1.0 / (1.0 + (-z).exp())
            })
            .collect();
        let z: f64 = (0..2).map(|i| spec.layers[2].weights.get(i, 0) * h2[i]).sum::<f64>()
            + spec.layers[2].biases[0];
        let expected = 1.0 / (1.0 + (-z).exp());

        let out = forward(&spec, &Batch::from_rows(&[x]).unwrap()).unwrap();
        assert_eq!(out.shape(), (1, 1));
        assert!((out.get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_feature_count() {
        let spec = builtin("iris-8").unwrap();
        let batch = Batch::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            forward(&spec, &batch),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        for name in ["iris-8", "iris-6"] {
            let spec = builtin(name).unwrap();
            let rows = vec![[6.1, 2.8, 4.7, 1.2]; 7];
            let out = forward(&spec, &Batch::from_rows(&rows).unwrap()).unwrap();
            assert_eq!(out.shape(), (1, 7));
            assert!(out.row(0).iter().all(|v| *v == out.get(0, 0)));
            assert!(out.row(0).iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn predict_threshold_rule() {
        assert_eq!(labels_from_probabilities(&[0.9, 0.1], 0.5), vec![1, 0]);
        assert_eq!(labels_from_probabilities(&[0.5], 0.5), vec![1]);
    }

    #[test]
    fn predict_rejects_multi_unit_output() {
        let layer = LayerSpec::new(Matrix::zeros(2, 2).unwrap(), vec![0.0, 0.0], Activation::Sigmoid);
        let spec = NetworkSpec::new("two-out", 2, vec![layer]);
        let batch = Batch::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(matches!(predict(&spec, &batch), Err(Error::MultiUnitOutput(2))));
    }
}
