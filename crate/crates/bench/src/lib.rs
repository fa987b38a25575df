//! Criterion benchmarks for `saw-core`; see `benches/`.
