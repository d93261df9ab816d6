//! Benchmarks for the kernels and solvers live in `benches/`.
