use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tinydense::activations;
use tinydense::{builtin, forward, DispatchMode, LabeledDataset};

fn bench_forward(c: &mut Criterion) {
    let ds = LabeledDataset::iris_versicolor_virginica();
    let batch = ds.batch();
    let mut group = c.benchmark_group("forward/iris-100");
    for name in ["iris-8", "iris-6"] {
        for mode in [DispatchMode::PaperCompat, DispatchMode::Corrected] {
            let spec = builtin(name).unwrap().with_dispatch_mode(mode);
            group.bench_with_input(BenchmarkId::new(name, mode), &spec, |b, spec| {
                b.iter(|| forward(black_box(spec), black_box(&batch)).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_activations(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1024).map(|i| (i as f64 - 512.0) * 0.37).collect();
    let mut group = c.benchmark_group("activations/1024");
    group.bench_function("sigmoid", |b| b.iter(|| activations::sigmoid(black_box(&xs))));
    group.bench_function("tanh", |b| b.iter(|| activations::tanh(black_box(&xs))));
    group.bench_function("softmax", |b| b.iter(|| activations::softmax(black_box(&xs))));
    group.finish();
}

criterion_group!(benches, bench_forward, bench_activations);
criterion_main!(benches);
