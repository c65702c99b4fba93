//! Criterion benchmarks for the modelspace kernels; see `benches/`.
