//! Benchmark-only crate; the measured targets live under `benches/`.
