//! Coadjoint orbits of the compact classical groups, Lagrangian embeddings of
//! flag manifolds into products of orbits, and the classical spin chain whose
//! reduced motion is a magnetic geodesic.
//!
//! The guide in `book/` walks through each module; its code blocks are run as
//! doc-tests.

// `!(x > tol)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embeddings;
pub mod error;
pub mod export;
pub mod geodesics;
pub mod lie_core;
pub mod linalg;
pub mod orbits;
pub mod spinchain;
pub mod tolerance;

pub use error::{Error, Result};

// One module per chapter so a failing snippet points at its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    mod orbits {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    mod embeddings {}
    #[doc = include_str!("../../../book/src/spin_chain.md")]
    mod spin_chain {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
