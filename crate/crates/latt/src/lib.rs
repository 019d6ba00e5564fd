//! Exact-arithmetic toolkit for integral lattices: enumeration of short
//! vectors, LLL reduction, automorphism and isometry search, discriminant
//! group computations, glue constructions, and p-neighbor genus walks.
//!
//! Every decision path uses exact rational arithmetic; floating point never
//! influences a result.

pub mod autotype;
pub mod disc;
pub mod enumerate;
pub mod error;
pub mod formats;
pub mod glue;
pub mod isom;
pub mod lattice;
pub mod lll;
pub mod mat;
pub mod neighbor;
pub mod rat;
pub mod search;
pub mod stdlat;

pub use error::{Error, Result};
