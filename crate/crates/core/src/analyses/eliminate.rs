//! Search-space reductions that run before order exploration: dropping
//! resources whose position provably cannot matter, and finding paths whose
//! final value is order-independent (candidates for pruning).

use std::collections::BTreeSet;

use crate::ir::{FsExpr, Path};

use super::commutativity::{access_map, maps_commute};
use super::prune::{prune, Kind, Sigma};
use crate::symbolic::dom_bound_joint;

/// The result of resource elimination: indices kept for exploration and the
/// indices removed, in removal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eliminated {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
}

/// Repeatedly removes a vertex that (a) no other live vertex depends on and
/// (b) commutes with every other live vertex. Such a vertex can be moved to
/// the end of every valid order, and appending the same commuting suffix to
/// two orders neither creates nor hides a difference, so removal preserves
/// the determinism verdict.
///
/// Exempting a vertex's ancestors from the commutativity requirement would
/// remove more, but is unsound: a final resource that overwrites a path its
/// ancestors write in conflicting ways masks their conflict, and dropping it
/// would surface a difference the full graph does not have.
///
/// Candidates are tried in ascending index order, so the result is
/// deterministic.
pub fn eliminate(exprs: &[FsExpr], edges: &BTreeSet<(usize, usize)>) -> Eliminated {
    let n = exprs.len();
    let dom = dom_bound_joint(exprs.iter());
    let maps: Vec<_> = exprs.iter().map(|e| access_map(e, &dom)).collect();

    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut removed = Vec::new();
    loop {
        let candidate = alive.iter().copied().find(|&v| {
            let is_sink = !alive
                .iter()
                .any(|&w| w != v && edges.contains(&(v, w)));
            is_sink
                && alive
                    .iter()
                    .all(|&u| u == v || maps_commute(&maps[v], &maps[u]))
        });
        match candidate {
            Some(v) => {
                alive.remove(&v);
                removed.push(v);
            }
            None => break,
        }
    }
    Eliminated {
        kept: alive.into_iter().collect(),
        removed,
    }
}

/// Paths whose writes can be dropped from every explored order without
/// changing the determinism verdict.
///
/// `exprs` are the surviving per-resource expressions and `seqs` the
/// sequenced expression of each explored order. A written path is accepted
/// when [`prune`] succeeds on every order and either
///
/// - the exit status is the same fully-determined state everywhere
///   (`Known(Dne | Dir | File(Some(_)))`): every successful run of every
///   order leaves the path in that one state, so comparing it is redundant
///   (the §4.4 "definitively written" case); or
/// - the outcome is input-dependent (`Mixed` or `Known(File(None))`), but
///   the path and — transitively — every path that controlled its writes is
///   mentioned by exactly one resource. Then whether and what the path is
///   written is the same function of the input in every order, so its final
///   value cannot distinguish orders.
///
/// The pruned expressions still *read* the path's input value where the
/// original's success depended on it; callers treat such paths as read-only.
pub fn select_prunable_paths(exprs: &[FsExpr], seqs: &[FsExpr]) -> BTreeSet<Path> {
    let mentioned: Vec<BTreeSet<Path>> = exprs.iter().map(|e| e.mentioned_paths()).collect();
    let sole_mentioner = |q: &Path| -> Option<usize> {
        let mut owner = None;
        for (i, m) in mentioned.iter().enumerate() {
            if m.contains(q) {
                if owner.is_some() {
                    return None;
                }
                owner = Some(i);
            }
        }
        owner
    };

    let mut written: BTreeSet<Path> = BTreeSet::new();
    for e in exprs {
        written.extend(e.write_targets());
    }

    let mut out = BTreeSet::new();
    'paths: for p in &written {
        let mut first: Option<Sigma> = None;
        let mut control: BTreeSet<Path> = BTreeSet::new();
        for seq in seqs {
            let Ok(r) = prune(seq, p) else {
                continue 'paths;
            };
            match &first {
                None => first = Some(r.sigma),
                Some(s) if *s == r.sigma => {}
                Some(_) => continue 'paths,
            }
            control.extend(r.control);
        }
        let definitive = matches!(
            first,
            Some(Sigma::Known(Kind::Dne) | Sigma::Known(Kind::Dir))
                | Some(Sigma::Known(Kind::File(Some(_))))
        );
        if definitive {
            out.insert(p.clone());
            continue;
        }
        if matches!(first, None | Some(Sigma::Unknown(_))) {
            continue;
        }
        // Input-dependent outcome: require the path and its transitive
        // controllers to be private to a single resource.
        let Some(owner) = sole_mentioner(p) else {
            continue;
        };
        let mut done: BTreeSet<Path> = [p.clone()].into();
        let mut todo: Vec<Path> = control.into_iter().collect();
        while let Some(q) = todo.pop() {
            if !done.insert(q.clone()) {
                continue;
            }
            if sole_mentioner(&q) != Some(owner) {
                continue 'paths;
            }
            for seq in seqs {
                let Ok(r) = prune(seq, &q) else {
                    continue 'paths;
                };
                todo.extend(r.control.into_iter().filter(|c| !done.contains(c)));
            }
        }
        out.insert(p.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::ContentId;

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    fn create(path: &str, c: &str) -> FsExpr {
        FsExpr::CreateFile(p(path), ContentId::new(c))
    }

    #[test]
    fn independent_resources_all_eliminate() {
        let exprs = vec![create("/a", "x"), create("/b", "y"), FsExpr::idemdir(p("/c"))];
        let r = eliminate(&exprs, &BTreeSet::new());
        assert!(r.kept.is_empty());
        assert_eq!(r.removed, vec![0, 1, 2]);
    }

    #[test]
    fn conflicting_pair_survives() {
        let exprs = vec![create("/a", "x"), create("/a", "y"), create("/b", "z")];
        let r = eliminate(&exprs, &BTreeSet::new());
        assert_eq!(r.kept, vec![0, 1]);
        assert_eq!(r.removed, vec![2]);
    }

    #[test]
    fn ordered_conflicting_pair_not_removable() {
        // Even with an order imposed, a sink that conflicts with its
        // ancestor stays: removing it could unmask a difference the full
        // graph does not exhibit.
        let exprs = vec![create("/a", "x"), create("/a", "y")];
        let edges: BTreeSet<(usize, usize)> = [(0, 1)].into_iter().collect();
        let r = eliminate(&exprs, &edges);
        assert_eq!(r.kept, vec![0, 1]);
        assert!(r.removed.is_empty());
    }

    #[test]
    fn sink_that_conflicts_with_unordered_peer_stays() {
        // 0 -> 1 but 2 is unordered with both and conflicts with 1. The
        // sinks (1 and 2) conflict with each other, and 0 is not a sink,
        // so nothing can be removed.
        let exprs = vec![create("/a", "x"), create("/b", "y"), create("/b", "z")];
        let edges: BTreeSet<(usize, usize)> = [(0, 1)].into_iter().collect();
        let r = eliminate(&exprs, &edges);
        assert_eq!(r.kept, vec![0, 1, 2]);
        assert!(r.removed.is_empty());
    }

    fn both_orders(exprs: &[FsExpr]) -> Vec<FsExpr> {
        assert_eq!(exprs.len(), 2);
        vec![
            FsExpr::seq(exprs[0].clone(), exprs[1].clone()),
            FsExpr::seq(exprs[1].clone(), exprs[0].clone()),
        ]
    }

    fn overwrite(c: &str) -> FsExpr {
        FsExpr::ite(
            crate::ir::FsPred::IsFile(p("/f")),
            FsExpr::seq(FsExpr::Rm(p("/f")), create("/f", c)),
            FsExpr::ite(
                crate::ir::FsPred::DoesNotExist(p("/f")),
                create("/f", c),
                FsExpr::Error,
            ),
        )
    }

    #[test]
    fn agreeing_definitive_writes_are_prunable() {
        // Same definitive content in every order: final value is constant.
        let same = vec![overwrite("x"), overwrite("x")];
        let paths = select_prunable_paths(&same, &both_orders(&same));
        assert!(paths.contains(&p("/f")));
        // Different contents: exit states disagree across orders.
        let diff = vec![overwrite("x"), overwrite("y")];
        assert!(select_prunable_paths(&diff, &both_orders(&diff)).is_empty());
    }

    #[test]
    fn shared_input_dependent_path_not_prunable() {
        // A guarded create plus an overwrite: whether /f ends up as "x" or
        // "y" depends on the order, and two resources mention it.
        let guard = FsExpr::ite(
            crate::ir::FsPred::DoesNotExist(p("/f")),
            create("/f", "y"),
            FsExpr::Skip,
        );
        let exprs = vec![overwrite("x"), guard];
        assert!(select_prunable_paths(&exprs, &both_orders(&exprs)).is_empty());
    }

    #[test]
    fn private_guarded_write_is_prunable() {
        // One resource writes /d/f behind its own marker; the other touches
        // unrelated paths. The outcome is input-dependent but private.
        let pkg = FsExpr::ite(
            crate::ir::FsPred::DoesNotExist(p("/marker")),
            FsExpr::seq(create("/d/f", "x"), create("/marker", "m")),
            FsExpr::Skip,
        );
        let other = create("/b", "y");
        let exprs = vec![pkg, other];
        let paths = select_prunable_paths(&exprs, &both_orders(&exprs));
        assert!(paths.contains(&p("/d/f")));
        // The marker controls itself only, so it is prunable too.
        assert!(paths.contains(&p("/marker")));
        // /b has a single definitive writer, so it prunes as well.
        assert!(paths.contains(&p("/b")));

        // Same write, but the guard tests a path the other resource also
        // mentions: the controller is shared, so the write does not prune.
        let pkg = FsExpr::ite(
            crate::ir::FsPred::DoesNotExist(p("/b")),
            create("/d/f", "x"),
            FsExpr::Skip,
        );
        let exprs = vec![pkg, create("/b", "y")];
        let paths = select_prunable_paths(&exprs, &both_orders(&exprs));
        assert!(!paths.contains(&p("/d/f")));
    }

    #[test]
    fn ancestors_of_mentioned_paths_not_prunable() {
        let exprs = vec![FsExpr::idemdir(p("/a")), create("/a/f", "x")];
        let paths = select_prunable_paths(&exprs, &both_orders(&exprs));
        assert!(!paths.contains(&p("/a")));
        assert!(paths.contains(&p("/a/f")));
    }
}
