//! Criterion benchmarks for phonolex live under `benches/`.
