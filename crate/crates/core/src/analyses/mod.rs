//! Static analyses that shrink the verification problem: commutativity
//! summaries, definitive-write inference, path pruning, and resource
//! elimination.

pub mod commutativity;
pub mod defwrite;
pub mod eliminate;
pub mod prune;

pub use commutativity::{access_map, commutes, maps_commute, Access, AccessMap};
pub use defwrite::{def_writes, AbsVal, DefWrites, FileAbs};
pub use eliminate::{eliminate, select_prunable_paths, Eliminated};
pub use prune::{prune, Kind, KindSet, PruneError, Pruned, Sigma};
