//! Criterion benchmarks for the barcode and angle-search pipeline; see `benches/`.
