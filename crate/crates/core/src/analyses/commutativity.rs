//! Commutativity by abstract interpretation: each expression is summarized
//! as a per-path access level, and two expressions commute when their
//! summaries never conflict. Sound (a "commutes" answer implies semantic
//! commutativity over the joint domain) but incomplete.

use std::collections::{BTreeMap, BTreeSet};

use crate::ir::{FsExpr, FsPred, Path};
use crate::symbolic::dom_bound_joint;

/// How strongly an expression touches one path.
///
/// `Dir` is the special level of the guarded make-directory pattern
/// ([`FsExpr::idemdir`]): two of them on the same path commute even though
/// both may write it. Levels do not stack: combining distinct levels on the
/// same path (for example a plain read next to a guarded make-directory)
/// escalates to `Write`, because the combination is order-sensitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Dir,
    Write,
}

pub type AccessMap = BTreeMap<Path, Access>;

fn record(map: &mut AccessMap, p: &Path, a: Access) {
    map.entry(p.clone())
        .and_modify(|cur| {
            if *cur != a {
                *cur = Access::Write;
            }
        })
        .or_insert(a);
}

/// Paths whose current state is already fully determined by the writes this
/// expression has performed so far. A read of such a path sees the same
/// value no matter what ran before the expression, so it is not an access
/// the other side could interfere with.
type Forced = BTreeSet<Path>;

fn record_read(map: &mut AccessMap, p: &Path, forced: &Forced) {
    if !forced.contains(p) {
        record(map, p, Access::Read);
    }
}

/// Children of `p` within the domain; the domain bound guarantees at least
/// the fresh child, so child reads are never silently empty.
fn record_child_reads(map: &mut AccessMap, p: &Path, dom: &BTreeSet<Path>, forced: &Forced) {
    for q in dom {
        if p.is_parent_of(q) {
            record_read(map, q, forced);
        }
    }
}

fn pred_accesses(pred: &FsPred, map: &mut AccessMap, dom: &BTreeSet<Path>, forced: &Forced) {
    match pred {
        FsPred::True | FsPred::False => {}
        FsPred::DoesNotExist(p) | FsPred::IsFile(p) | FsPred::IsDir(p) => {
            record_read(map, p, forced)
        }
        FsPred::IsEmptyDir(p) => {
            record_read(map, p, forced);
            record_child_reads(map, p, dom, forced);
        }
        FsPred::And(a, b) | FsPred::Or(a, b) => {
            pred_accesses(a, map, dom, forced);
            pred_accesses(b, map, dom, forced);
        }
        FsPred::Not(a) => pred_accesses(a, map, dom, forced),
    }
}

fn expr_accesses(e: &FsExpr, map: &mut AccessMap, dom: &BTreeSet<Path>, forced: &mut Forced) {
    if let Some(p) = e.as_idemdir() {
        record(map, p, Access::Dir);
        if let Some(parent) = p.parent() {
            record_read(map, &parent, forced);
        }
        forced.insert(p.clone());
        return;
    }
    match e {
        FsExpr::Skip | FsExpr::Error => {}
        FsExpr::Mkdir(p) | FsExpr::CreateFile(p, _) => {
            record(map, p, Access::Write);
            if let Some(parent) = p.parent() {
                record_read(map, &parent, forced);
            }
            forced.insert(p.clone());
        }
        FsExpr::Rm(p) => {
            record(map, p, Access::Write);
            record_child_reads(map, p, dom, forced);
            forced.insert(p.clone());
        }
        FsExpr::Cp(src, dst) => {
            record_read(map, src, forced);
            record(map, dst, Access::Write);
            if let Some(parent) = dst.parent() {
                record_read(map, &parent, forced);
            }
            forced.insert(dst.clone());
        }
        FsExpr::Seq(a, b) => {
            expr_accesses(a, map, dom, forced);
            expr_accesses(b, map, dom, forced);
        }
        FsExpr::If(c, a, b) => {
            pred_accesses(c, map, dom, forced);
            let mut fa = forced.clone();
            let mut fb = forced.clone();
            expr_accesses(a, map, dom, &mut fa);
            expr_accesses(b, map, dom, &mut fb);
            // Only paths determined on both branches stay determined.
            *forced = fa.intersection(&fb).cloned().collect();
        }
    }
}

/// The access summary of `e` over a (joint) domain.
pub fn access_map(e: &FsExpr, dom: &BTreeSet<Path>) -> AccessMap {
    let mut map = AccessMap::new();
    expr_accesses(e, &mut map, dom, &mut Forced::new());
    map
}

/// Whether two summaries are conflict-free: on every path, either one side
/// is untouched, or both only read, or both are guarded directory creations.
pub fn maps_commute(a: &AccessMap, b: &AccessMap) -> bool {
    a.iter().all(|(p, &va)| match b.get(p) {
        None => true,
        Some(&vb) => va == vb && va != Access::Write,
    })
}

/// Conservative commutativity check for a pair of expressions.
pub fn commutes(e1: &FsExpr, e2: &FsExpr) -> bool {
    let dom = dom_bound_joint([e1, e2]);
    maps_commute(&access_map(e1, &dom), &access_map(e2, &dom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{oracle_equiv, ContentId};
    use std::collections::BTreeSet;

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    /// Semantic commutativity over the joint domain, by brute force.
    fn oracle_commutes(e1: &FsExpr, e2: &FsExpr) -> bool {
        let dom = dom_bound_joint([e1, e2]);
        let mut contents: BTreeSet<ContentId> = e1.mentioned_contents();
        contents.extend(e2.mentioned_contents());
        contents.insert(ContentId::new("#other"));
        oracle_equiv(
            &FsExpr::seq(e1.clone(), e2.clone()),
            &FsExpr::seq(e2.clone(), e1.clone()),
            &dom,
            &contents,
        )
        .unwrap()
    }

    #[test]
    fn same_idemdir_commutes() {
        let e = FsExpr::idemdir(p("/a"));
        assert!(commutes(&e, &e));
        assert!(oracle_commutes(&e, &e));
    }

    #[test]
    fn idemdir_of_parent_and_child_do_not_commute() {
        let e1 = FsExpr::idemdir(p("/a"));
        let e2 = FsExpr::idemdir(p("/a/b"));
        assert!(!commutes(&e1, &e2));
        assert!(!oracle_commutes(&e1, &e2));
    }

    #[test]
    fn disjoint_writes_commute() {
        let e1 = FsExpr::CreateFile(p("/a"), ContentId::new("x"));
        let e2 = FsExpr::CreateFile(p("/b"), ContentId::new("y"));
        assert!(commutes(&e1, &e2));
        assert!(oracle_commutes(&e1, &e2));
    }

    #[test]
    fn same_path_writes_conflict() {
        let e1 = FsExpr::CreateFile(p("/a"), ContentId::new("x"));
        let e2 = FsExpr::CreateFile(p("/a"), ContentId::new("x"));
        assert!(!commutes(&e1, &e2));
    }

    #[test]
    fn rm_conflicts_with_write_into_dir() {
        let e1 = FsExpr::Rm(p("/d"));
        let e2 = FsExpr::CreateFile(p("/d/f"), ContentId::new("x"));
        // e2 writes a child of /d; the joint domain makes e1 read it. (The
        // two orders happen to agree semantically here -- both always error
        // -- so only the conservative direction is asserted.)
        assert!(!commutes(&e1, &e2));
    }

    #[test]
    fn reads_commute_with_reads() {
        let e1 = FsExpr::ite(FsPred::IsFile(p("/a")), FsExpr::Skip, FsExpr::Error);
        let e2 = FsExpr::ite(FsPred::IsDir(p("/a")), FsExpr::Skip, FsExpr::Error);
        assert!(commutes(&e1, &e2));
        assert!(oracle_commutes(&e1, &e2));
    }

    #[test]
    fn write_conflicts_with_read() {
        let e1 = FsExpr::CreateFile(p("/a"), ContentId::new("x"));
        let e2 = FsExpr::ite(FsPred::DoesNotExist(p("/a")), FsExpr::Skip, FsExpr::Error);
        assert!(!commutes(&e1, &e2));
        assert!(!oracle_commutes(&e1, &e2));
    }
}
