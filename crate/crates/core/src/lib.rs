//! Exact enumeration of Frobenius-Perron dimension arrays for odd-dimensional
//! modular tensor categories, plus the combinatorial discard tests used to
//! whittle the candidates down rank by rank.
//!
//! The crate is organised bottom-up:
//!
//! - [`exactmath`]: integer square roots, squarefree parts, factorization.
//! - [`dimsearch`]: the recursive dimension-array search, over all simples or
//!   over the adjoint subcategory only.
//! - [`oracle`]: a brute-force enumerator used to certify [`dimsearch`].
//! - [`gradings`]: universal-grading rank decompositions and their filters.
//! - [`filters`]: discard tests on individual dimension arrays.
//! - [`goldens`]: the published tables, embedded and checksummed.
//! - [`pipeline`]: per-rank classification and report rendering.
//!
//! ```
//! use oddmtc::dimsearch::{enumerate, SearchParams};
//!
//! let params = SearchParams::basic(27, 3).with_min_m1(5);
//! let found = enumerate(&params).unwrap();
//! assert_eq!(found.len(), 1);
//! assert_eq!(found[0].fpdim, 2475);
//! assert_eq!(found[0].dims, [15, 15, 15, 15, 15, 5, 5, 5, 3, 3, 3, 3]);
//! ```

pub mod dimsearch;
pub mod exactmath;
pub mod filters;
pub mod goldens;
pub mod gradings;
pub mod oracle;
pub mod pipeline;

pub use dimsearch::{DimSolution, Mode, Predicates, SearchParams};

/// Errors surfaced by the library. Binary front ends map these to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}: argument must be positive")]
    ZeroInput(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("value does not fit in {0}")]
    Overflow(&'static str),
    #[error("embedded table data is corrupt: {0}")]
    Integrity(String),
}
