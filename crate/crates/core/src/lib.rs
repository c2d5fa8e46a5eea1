//! k-means over the design matrix of an acyclic relational database,
//! computed without materializing the join.
//!
//! The pipeline samples `k'` centers with an exact relational simulation of
//! k-means++ ([`sampler`]), weights them from near-uniform samples drawn
//! inside geometrically growing balls ([`weigher`], [`approx`]), and solves
//! weighted k-means on the resulting coreset ([`cluster`]). Everything
//! touching the join goes through SumProd queries ([`sumprod`]) over a join
//! tree built by GYO reduction ([`relational`]).

pub mod approx;
pub mod boxes;
pub mod cluster;
pub mod error;
pub mod oracle;
pub mod pipeline;
pub mod relational;
pub mod sampler;
mod sequential;
pub mod sumprod;
pub mod weigher;

pub use error::{Error, Result};
pub use relational::{Database, JoinTree, Point, Table};
