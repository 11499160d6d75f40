//! Criterion benchmarks for the dGEV engine live in benches/.
