//! Benchmarks live in `benches/`; this target only anchors the package.
