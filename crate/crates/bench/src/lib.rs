//! Benchmark support crate; see `benches/pipeline.rs`.
