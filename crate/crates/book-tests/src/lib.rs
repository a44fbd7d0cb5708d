//! Runs every Rust listing of the guide under `book/src` as a doc-test.
//! One module per chapter so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}
#[doc = include_str!("../../../book/src/linear-models.md")]
pub mod linear_models {}
#[doc = include_str!("../../../book/src/system-gmm.md")]
pub mod system_gmm {}
#[doc = include_str!("../../../book/src/random-forests.md")]
pub mod random_forests {}
#[doc = include_str!("../../../book/src/importance-tests.md")]
pub mod importance_tests {}
#[doc = include_str!("../../../book/src/reports.md")]
pub mod reports {}
#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
