//! Binds every chapter of the guide (`book/src/*.md`) into the crate's
//! documentation tests, so each code block in the book compiles and runs
//! against the current API on every `cargo test`.

#[doc = include_str!("../../../README.md")]
pub mod readme {}

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/algorithms.md")]
pub mod algorithms {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
