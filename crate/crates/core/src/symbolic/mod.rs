//! The symbolic engine: domain bounding, logical encoding, SMT-LIB
//! emission, solver sessions, and the equivalence check built on them.

pub mod dom;
pub mod encode;
pub mod equiv;
pub mod smtlib;
pub mod solver;
pub mod term;

pub use dom::{dom_bound, dom_bound_joint, is_fresh_child};
pub use encode::{differ, encode, encode_pred, input_tree_closure, LogicalState, QueryVocab};
pub use equiv::{check_equiv, check_success_divergence, equiv_query, EquivError, Witness};
pub use smtlib::{build_query, Query};
pub use solver::{QueryOutcome, SolverConfig, SolverError, SolverSession, SOLVER_ENV};
pub use term::{BoolTerm, ContentTerm, StatTerm};
