//! Criterion benchmarks for `meanfield-core`; see `benches/`.
