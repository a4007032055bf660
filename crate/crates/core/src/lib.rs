//! Verifies that declarative system-configuration manifests (a Puppet-style
//! subset) are deterministic and idempotent.
//!
//! Manifests are parsed into a resource graph, each resource is compiled to
//! a small filesystem-operation IR, and equivalence of all valid resource
//! orderings is discharged to an SMT solver. Verdicts come with concrete
//! counterexample filesystems that replay under the concrete evaluator.

pub mod analyses;
pub mod checker;
pub mod ir;
pub mod manifest;
pub mod resources;
pub mod symbolic;

#[cfg(doctest)]
mod book;
