use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use tinydense::{builtin, emit_micropython, load, save, EmitOptions, LabeledDataset};

fn bench_emit(c: &mut Criterion) {
    let ds = LabeledDataset::iris_versicolor_virginica();
    let spec = builtin("iris-8").unwrap();
    c.bench_function("emit/iris-8", |b| {
        b.iter(|| emit_micropython(black_box(&spec), &EmitOptions::default()).unwrap())
    });
    let with_data = EmitOptions {
        include_eval: true,
        samples: Some(&ds.features),
        labels: Some(&ds.labels),
        ..Default::default()
    };
    c.bench_function("emit/iris-8+fixture", |b| {
        b.iter(|| emit_micropython(black_box(&spec), &with_data).unwrap())
    });
}

fn bench_model_document(c: &mut Criterion) {
    let spec = builtin("iris-6").unwrap();
    let text = save(&spec);
    c.bench_function("model/save", |b| b.iter(|| save(black_box(&spec))));
    c.bench_function("model/load", |b| b.iter(|| load(black_box(&text)).unwrap()));
}

criterion_group!(benches, bench_emit, bench_model_document);
criterion_main!(benches);
