//! Criterion benchmarks for `retest-core`; see `benches/`.
