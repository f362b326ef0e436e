//! Doc tests for the book chapters.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/exactmath.md")]
pub mod exactmath {}

#[doc = include_str!("../../../book/src/search.md")]
pub mod search {}

#[doc = include_str!("../../../book/src/gradings.md")]
pub mod gradings {}

#[doc = include_str!("../../../book/src/filters.md")]
pub mod filters {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../book/src/goldens.md")]
pub mod goldens {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
