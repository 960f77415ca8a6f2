//! Output-sensitive evaluation of acyclic conjunctive queries over semirings.

pub mod analysis;
pub mod bench;
pub mod error;
pub mod generalized;
pub mod generate;
mod index;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod path;
pub mod relation;
pub mod semiring;
pub mod stats;
pub mod tree;
mod work;
pub mod yannakakis;

pub use analysis::*;
pub use bench::*;
pub use error::{Error, Result};
pub use generalized::*;
pub use generate::*;
pub use kernel::*;
pub use model::*;
pub use oracle::*;
pub use path::*;
pub use relation::*;
pub use semiring::*;
pub use stats::EvalStats;
pub use tree::{JoinTree, Rooted};
pub use yannakakis::*;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/queries.md")]
    mod queries {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/yannakakis.md")]
    mod yannakakis {}
    #[doc = include_str!("../../../book/src/generalized.md")]
    mod generalized {}
    #[doc = include_str!("../../../book/src/doubling.md")]
    mod doubling {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
