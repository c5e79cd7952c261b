use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tinydense::eval::IRIS_VERSICOLOR_VIRGINICA_CSV;
use tinydense::selftest::{random_batch, random_spec};
use tinydense::{builtin, forward, load, save, Activation, Batch, DispatchMode, Error, Matrix, NetworkSpec};

fn seeded(seed: u64) -> (NetworkSpec, Batch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_spec(&mut rng, 3, 5);
    let batch = random_batch(&mut rng, 6, spec.input_dim);
    (spec, batch)
}

fn substituted(spec: &NetworkSpec) -> NetworkSpec {
    let mut out = spec.clone().with_dispatch_mode(DispatchMode::Corrected);
    for layer in &mut out.layers {
        layer.activation = match layer.activation {
            Activation::Softmax => Activation::Tanh,
            Activation::LeakyRelu { .. } => Activation::Relu,
            k => k,
        };
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn each_sample_is_evaluated_independently(seed in any::<u64>()) {
        let (spec, batch) = seeded(seed);
        let whole = forward(&spec, &batch).unwrap();
        for (j, row) in batch.features().iter_rows().enumerate() {
            let single = forward(&spec, &Batch::from_rows(&[row]).unwrap()).unwrap();
            for u in 0..spec.output_units() {
                prop_assert_eq!(single.get(u, 0).to_bits(), whole.get(u, j).to_bits());
            }
        }
    }

    #[test]
    fn paper_compat_is_the_substituted_corrected_network(seed in any::<u64>()) {
        let (spec, batch) = seeded(seed);
        let compat = forward(&spec.clone().with_dispatch_mode(DispatchMode::PaperCompat), &batch).unwrap();
        let reference = forward(&substituted(&spec), &batch).unwrap();
        prop_assert_eq!(compat, reference);
    }

    #[test]
    fn corrected_softmax_columns_sum_to_one(seed in any::<u64>()) {
        let (mut spec, batch) = seeded(seed);
        spec.dispatch_mode = DispatchMode::Corrected;
        spec.layers.last_mut().unwrap().activation = Activation::Softmax;
        let out = forward(&spec, &batch).unwrap();
        for j in 0..batch.samples() {
            let total: f64 = (0..out.rows()).map(|u| out.get(u, j)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn save_then_load_is_identity(seed in any::<u64>()) {
        let (spec, _) = seeded(seed);
        let text = save(&spec);
        prop_assert_eq!(load(&text).unwrap(), spec);
    }
}

#[test]
fn output_shape_is_units_by_samples() {
    let spec = builtin("iris-8").unwrap();
    let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64; 4]).collect();
    let out = forward(&spec, &Batch::from_rows(&rows).unwrap()).unwrap();
    assert_eq!(out.shape(), (1, 7));
}

#[test]
fn wrong_input_width_is_a_dimension_mismatch() {
    let spec = builtin("iris-6").unwrap();
    let batch = Batch::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
    assert!(matches!(forward(&spec, &batch), Err(Error::DimensionMismatch { expected: 4, actual: 3 })));
}

#[test]
fn invalid_spec_is_rejected_before_inference() {
    let mut spec = builtin("iris-6").unwrap();
    spec.layers[1].biases.0.pop();
    let batch = Batch::from_rows(&[[1.0, 2.0, 3.0, 4.0]]).unwrap();
    match forward(&spec, &batch) {
        Err(Error::Validation(report)) => assert!(report.to_string().contains("layer 1 bias length")),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn model_document_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("iris-8.json");
    let spec = builtin("iris-8").unwrap();
    std::fs::write(&path, save(&spec)).unwrap();
    let loaded = load(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(loaded, spec);
}

#[test]
fn vendored_dataset_is_balanced() {
    let rows: Vec<&str> = IRIS_VERSICOLOR_VIRGINICA_CSV.lines().skip(1).collect();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",virginica")).count(), 50);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",versicolor")).count(), 50);
}

#[test]
fn huge_pre_activations_stay_finite() {
    let w = Matrix::from_rows(&[vec![1.0, -1.0, 0.5]]).unwrap();
    for kind in [Activation::Sigmoid, Activation::Tanh, Activation::Softmax, Activation::leaky_relu(0.1).unwrap()] {
        let spec = NetworkSpec::new("big", 1, vec![tinydense::LayerSpec::new(w.clone(), vec![0.0; 3], kind)]);
        let out = forward(&spec, &Batch::from_rows(&[[1e6], [-1e6]]).unwrap()).unwrap();
        assert!(out.is_finite(), "{kind} overflowed");
    }
}
