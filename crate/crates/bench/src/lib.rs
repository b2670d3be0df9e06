//! Criterion benchmarks for the `conevol` crate; see `benches/`.
