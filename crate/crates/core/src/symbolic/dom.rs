//! Domain bounding: the finite, parent-closed set of paths a query has to
//! reason about.
//!
//! Removal and emptiness tests observe *children* of a path, not just the
//! path itself, so for every such path we add one fresh child standing in
//! for "some other entry the expressions never mention". Fresh children are
//! shared across all expressions of a joint query so both sides see the same
//! inputs.

use std::collections::BTreeSet;

use crate::ir::{parent_closure, FsExpr, FsPred, Path};

/// Segment prefix of generated fresh children; real manifests never produce
/// it because `*` cannot appear in resource titles' path positions we parse.
const FRESH_PREFIX: &str = "*";

/// True for paths introduced by [`dom_bound`] rather than the expressions.
pub fn is_fresh_child(p: &Path) -> bool {
    p.last_segment().is_some_and(|s| s.starts_with(FRESH_PREFIX))
}

/// Paths whose children an expression observes (via `Rm` or emptiness tests).
fn child_observing_paths(e: &FsExpr, out: &mut BTreeSet<Path>) {
    match e {
        FsExpr::Skip | FsExpr::Error | FsExpr::Mkdir(_) | FsExpr::CreateFile(_, _) => {}
        FsExpr::Rm(p) => {
            out.insert(p.clone());
        }
        FsExpr::Cp(_, _) => {}
        FsExpr::Seq(a, b) => {
            child_observing_paths(a, out);
            child_observing_paths(b, out);
        }
        FsExpr::If(c, a, b) => {
            pred_child_observing_paths(c, out);
            child_observing_paths(a, out);
            child_observing_paths(b, out);
        }
    }
}

fn pred_child_observing_paths(pred: &FsPred, out: &mut BTreeSet<Path>) {
    match pred {
        FsPred::IsEmptyDir(p) => {
            out.insert(p.clone());
        }
        FsPred::And(a, b) | FsPred::Or(a, b) => {
            pred_child_observing_paths(a, out);
            pred_child_observing_paths(b, out);
        }
        FsPred::Not(a) => pred_child_observing_paths(a, out),
        _ => {}
    }
}

/// The joint domain bound for a set of expressions: all mentioned paths,
/// one fresh child per child-observing path, closed under parents.
///
/// Fresh children get distinct tokens `*0`, `*1`, … assigned per distinct
/// parent in path order, so the result is deterministic.
pub fn dom_bound_joint<'a>(exprs: impl IntoIterator<Item = &'a FsExpr>) -> BTreeSet<Path> {
    let mut mentioned: BTreeSet<Path> = BTreeSet::new();
    let mut observing: BTreeSet<Path> = BTreeSet::new();
    for e in exprs {
        mentioned.extend(e.mentioned_paths());
        child_observing_paths(e, &mut observing);
    }
    let mut all = mentioned;
    for (i, parent) in observing.iter().enumerate() {
        all.insert(parent.child(&format!("{FRESH_PREFIX}{i}")));
    }
    parent_closure(all)
}

/// Domain bound of a single expression.
pub fn dom_bound(e: &FsExpr) -> BTreeSet<Path> {
    dom_bound_joint([e])
}
