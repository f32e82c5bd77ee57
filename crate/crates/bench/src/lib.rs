//! Criterion benchmarks for the stencil, right-hand-side and time-stepping kernels live in `benches/`.
