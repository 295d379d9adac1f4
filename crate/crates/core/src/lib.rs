//! Maximum sum-free subsets of random subsets of finite abelian groups of
//! even order: group arithmetic, index-2 subgroups and their odd cosets,
//! Cayley graphs on the odd coset, exact solvers, samplers, hypergeometric
//! numerics and the Monte Carlo experiments built from them.
//!
//! Elements are dense indices `0..|G|` with `0` the identity; see
//! [`group::AbelianGroup`] for the layout.

pub mod caps;
pub mod cayley;
pub mod config;
pub mod cover;
pub mod error;
pub mod experiments;
pub mod group;
pub mod hypergeom;
pub mod index2;
pub mod parse;
pub mod sampling;
pub mod set;
pub mod solver;
pub mod sumfree;
pub mod verify;

pub use caps::Caps;
pub use error::{Error, Result};
pub use group::AbelianGroup;
pub use index2::Index2Subgroup;
pub use set::ElementSet;
