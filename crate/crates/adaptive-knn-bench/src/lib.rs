//! Helper crate that exists to host the criterion benchmarks in
//! `benches/`; see `cargo bench -p adaptive-knn-bench`.
