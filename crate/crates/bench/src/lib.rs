//! Criterion benchmarks for stratprice live under `benches/`.
