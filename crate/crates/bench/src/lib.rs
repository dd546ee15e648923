//! Criterion benchmarks for the core crate live in `benches/`. Run with `cargo bench -p isingflow-bench`.
