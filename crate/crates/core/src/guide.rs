//! The user guide, chapter by chapter.
//!
//! Each submodule's documentation is included verbatim from the book under
//! `book/src/`, so the guide's code blocks compile and run as doc-tests and
//! cannot drift from the library.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}

#[doc = include_str!("../../../book/src/grams.md")]
pub mod grams {}

#[doc = include_str!("../../../book/src/geodesics.md")]
pub mod geodesics {}

#[doc = include_str!("../../../book/src/toeplitz.md")]
pub mod toeplitz {}

#[doc = include_str!("../../../book/src/bergman.md")]
pub mod bergman {}

#[doc = include_str!("../../../book/src/measures.md")]
pub mod measures {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
