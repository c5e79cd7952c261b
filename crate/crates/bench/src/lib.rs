//! Criterion benchmarks for `tinydense`; see `benches/`.
