//! Criterion benchmarks for the skewinfo library; see `benches/`.
