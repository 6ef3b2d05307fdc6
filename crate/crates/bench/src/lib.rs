//! Criterion benchmarks for the geometry kernels, scoring and gradients; see `benches/`.
