//! Criterion benchmarks for burgerlab kernels live in `benches/`.
