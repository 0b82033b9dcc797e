//! Criterion benchmarks for `dcts-core`; see `benches/`.
