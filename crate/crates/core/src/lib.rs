//! Corpus-driven semantic spaces and similarity-gain tracing.
//!
//! The pipeline: normalize raw text into paragraphs ([`corpus`]), count
//! words per paragraph into a sparse matrix, reduce it by truncated SVD
//! into word vectors ([`semspace`]), then either query similarities
//! directly, replay corpus growth paragraph by paragraph while booking
//! every similarity change of traced word pairs to an occurrence or
//! co-occurrence category ([`tracer`], [`cooc`]), or score the space
//! against vocabulary-test items and association norms ([`eval`]).

pub mod cooc;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod semspace;
pub mod tracer;

pub use error::{CoreError, Result};
