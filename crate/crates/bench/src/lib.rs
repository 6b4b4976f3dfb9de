//! Empty library; this crate exists to host the criterion benchmarks.
