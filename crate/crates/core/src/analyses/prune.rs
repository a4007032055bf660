//! Pruning: rewriting an expression so it never *writes* one chosen path,
//! while behaving identically everywhere else.
//!
//! Every operation on the target path is replaced by a guard that keeps
//! exactly the original error behavior, and the path's would-be status is
//! tracked through the rewrite. While the path is untouched, reads see the
//! input value in both the original and the pruned expression, so they may
//! stay; branch conditions narrow the set of input states the path can still
//! be in. Once a write has pinned the status, later reads fold to constants.
//!
//! The caller is responsible for the *global* argument that dropping the
//! path from an equivalence query is sound; [`prune`] reports what it
//! learned: the exit status and the set of paths that controlled whether the
//! writes happened.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ir::{ContentId, FsExpr, FsPred, Path};

/// The status of the target path after a write has been tracked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kind {
    Dne,
    Dir,
    /// A file; `None` when the content is input-dependent.
    File(Option<ContentId>),
}

/// The set of states the target path's *input* value can still be in, given
/// the branch conditions seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KindSet(u8);

impl KindSet {
    const DNE: u8 = 1;
    const FILE: u8 = 2;
    const DIR: u8 = 4;
    pub const FULL: KindSet = KindSet(7);

    fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }
    fn is_only(self, bit: u8) -> bool {
        self.0 == bit
    }
    fn restrict(self, bit: u8) -> KindSet {
        KindSet(self.0 & bit)
    }
    fn without(self, bit: u8) -> KindSet {
        KindSet(self.0 & !bit)
    }
    fn union(self, other: KindSet) -> KindSet {
        KindSet(self.0 | other.0)
    }
}

/// What is known about the target path at a program point of the pruned
/// expression, relative to the original execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sigma {
    /// Not yet touched: the original's current value is the input value,
    /// whose state lies in the given set.
    Unknown(KindSet),
    /// A write happened: the original's current status is exactly this.
    Known(Kind),
    /// Merged branches disagree; no further observation of the path can be
    /// folded.
    Mixed,
}

/// The result of pruning one path out of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    /// The rewritten expression: same success/error behavior, same outputs
    /// away from the target, never writes the target.
    pub expr: FsExpr,
    /// Status at exit: `Known(k)` means every successful run of the original
    /// ends with the target in state `k` (`File(None)`: a file of
    /// input-dependent content); `Unknown` means the target is left at its
    /// input value.
    pub sigma: Sigma,
    /// Paths other than the target whose state decided whether (or with
    /// what content) the target was written: branch conditions enclosing a
    /// write, and copy sources.
    pub control: BTreeSet<Path>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PruneError {
    #[error("cannot prune {path}: {why}")]
    Inapplicable { path: Path, why: &'static str },
}

fn inapplicable(p: &Path, why: &'static str) -> PruneError {
    PruneError::Inapplicable {
        path: p.clone(),
        why,
    }
}

/// Prunes `e` with respect to `p`.
///
/// Fails when the expression observes `p` in a way that cannot be folded or
/// deferred to the input: emptiness of a directory the expression itself
/// created at `p`, copies out of `p` with input-dependent content,
/// operations on paths below `p`, or any observation after branches that
/// disagree about `p`'s status.
pub fn prune(e: &FsExpr, p: &Path) -> Result<Pruned, PruneError> {
    if p.is_root() {
        return Err(inapplicable(p, "the root is never prunable"));
    }
    if e.mentioned_paths().iter().any(|q| p.is_ancestor_of(q)) {
        return Err(inapplicable(p, "expression touches paths below it"));
    }
    let mut control = BTreeSet::new();
    let (expr, sigma, _) = prune_rec(e, p, Sigma::Unknown(KindSet::FULL), &mut control)?;
    Ok(Pruned {
        expr,
        sigma,
        control,
    })
}

/// Returns the rewritten expression, the exit status, and whether the
/// subtree contained an operation targeting `p`.
fn prune_rec(
    e: &FsExpr,
    p: &Path,
    sigma: Sigma,
    control: &mut BTreeSet<Path>,
) -> Result<(FsExpr, Sigma, bool), PruneError> {
    match e {
        FsExpr::Skip | FsExpr::Error => Ok((e.clone(), sigma, false)),

        FsExpr::Mkdir(q) if q == p => {
            let side = FsPred::and(FsPred::DoesNotExist(p.clone()), parent_dir_pred(p));
            write_guard(p, side, Kind::Dir, sigma)
        }

        FsExpr::CreateFile(q, c) if q == p => {
            let side = FsPred::and(FsPred::DoesNotExist(p.clone()), parent_dir_pred(p));
            write_guard(p, side, Kind::File(Some(c.clone())), sigma)
        }

        FsExpr::Rm(q) if q == p => {
            let side = FsPred::or(FsPred::IsFile(p.clone()), FsPred::IsEmptyDir(p.clone()));
            write_guard(p, side, Kind::Dne, sigma)
        }

        // Removing the target's parent observes the target (the parent must
        // be a file or an empty directory).
        FsExpr::Rm(q) if Some(q.clone()) == p.parent() => match sigma {
            Sigma::Unknown(_) => Ok((e.clone(), sigma, false)),
            Sigma::Known(Kind::Dne) => {
                Err(inapplicable(p, "parent removal depends on siblings"))
            }
            Sigma::Known(_) => Ok((FsExpr::Error, sigma, false)),
            Sigma::Mixed => Err(inapplicable(p, "observation after diverging branches")),
        },

        FsExpr::Cp(src, dst) if src == p && dst == p => {
            // Source must be a file and destination absent: contradictory.
            Ok((FsExpr::Error, sigma, true))
        }

        FsExpr::Cp(src, dst) if dst == p => {
            control.insert(src.clone());
            let side = FsPred::and(
                FsPred::IsFile(src.clone()),
                FsPred::and(FsPred::DoesNotExist(p.clone()), parent_dir_pred(p)),
            );
            write_guard(p, side, Kind::File(None), sigma)
        }

        FsExpr::Cp(src, dst) if src == p => match sigma {
            // Untouched: the copy reads the input value, as the original
            // does, unless the input cannot be a file at all.
            Sigma::Unknown(s) if !s.has(KindSet::FILE) => Ok((FsExpr::Error, sigma, false)),
            Sigma::Unknown(_) => Ok((e.clone(), sigma, false)),
            Sigma::Known(Kind::File(Some(ref c))) => {
                let create = FsExpr::CreateFile(dst.clone(), c.clone());
                Ok((create, sigma, false))
            }
            Sigma::Known(Kind::File(None)) => {
                Err(inapplicable(p, "copied content is input-dependent"))
            }
            Sigma::Known(_) => Ok((FsExpr::Error, sigma, false)),
            Sigma::Mixed => Err(inapplicable(p, "observation after diverging branches")),
        },

        FsExpr::Mkdir(_) | FsExpr::CreateFile(_, _) | FsExpr::Rm(_) | FsExpr::Cp(_, _) => {
            Ok((e.clone(), sigma, false))
        }

        FsExpr::Seq(a, b) => {
            let (a2, s1, wa) = prune_rec(a, p, sigma, control)?;
            let (b2, s2, wb) = prune_rec(b, p, s1, control)?;
            Ok((FsExpr::seq(a2, b2), s2, wa || wb))
        }

        FsExpr::If(c, a, b) => {
            let c2 = fold_pred(c, p, &sigma)?;
            match c2 {
                FsPred::True => prune_rec(a, p, refine(c, true, p, sigma), control),
                FsPred::False => prune_rec(b, p, refine(c, false, p, sigma), control),
                c2 => {
                    let sa_in = refine(c, true, p, sigma.clone());
                    let sb_in = refine(c, false, p, sigma);
                    let (a2, sa, wa) = prune_rec(a, p, sa_in, control)?;
                    let (b2, sb, wb) = prune_rec(b, p, sb_in, control)?;
                    if wa || wb {
                        for q in c.mentioned_paths() {
                            if q != *p {
                                control.insert(q);
                            }
                        }
                    }
                    let out = join_sigma(&a2, sa, &b2, sb);
                    Ok((FsExpr::ite(c2, a2, b2), out, wa || wb))
                }
            }
        }
    }
}

/// Replaces a write to the target by a guard asserting its side condition,
/// folded under the current status, and records the state the write leaves
/// the target in. The status is only meaningful on the guard's success
/// continuation, which is the only place execution proceeds.
fn write_guard(
    p: &Path,
    side: FsPred,
    result: Kind,
    sigma: Sigma,
) -> Result<(FsExpr, Sigma, bool), PruneError> {
    if sigma == Sigma::Mixed {
        return Err(inapplicable(p, "write after diverging branches"));
    }
    let folded = fold_pred(&side, p, &sigma)?;
    let guard = match folded {
        FsPred::True => FsExpr::Skip,
        FsPred::False => FsExpr::Error,
        c => FsExpr::ite(c, FsExpr::Skip, FsExpr::Error),
    };
    Ok((guard, Sigma::Known(result), true))
}

/// Syntactic over-approximation of "some input lets this branch succeed".
/// Only certainly-failing branches matter here: they contribute no exit
/// status to a join.
fn may_succeed(e: &FsExpr) -> bool {
    match e {
        FsExpr::Error => false,
        FsExpr::Seq(a, b) => may_succeed(a) && may_succeed(b),
        FsExpr::If(_, a, b) => may_succeed(a) || may_succeed(b),
        _ => true,
    }
}

fn join_sigma(a: &FsExpr, sa: Sigma, b: &FsExpr, sb: Sigma) -> Sigma {
    // A branch with no successful runs contributes no exit status.
    if !may_succeed(a) {
        return sb;
    }
    if !may_succeed(b) {
        return sa;
    }
    match (sa, sb) {
        (sa, sb) if sa == sb => sa,
        (Sigma::Unknown(s1), Sigma::Unknown(s2)) => Sigma::Unknown(s1.union(s2)),
        // An untouched value pinned to one fully-determined state coincides
        // with a write of that state.
        (Sigma::Unknown(s), Sigma::Known(Kind::Dne))
        | (Sigma::Known(Kind::Dne), Sigma::Unknown(s))
            if s.is_only(KindSet::DNE) =>
        {
            Sigma::Known(Kind::Dne)
        }
        (Sigma::Unknown(s), Sigma::Known(Kind::Dir))
        | (Sigma::Known(Kind::Dir), Sigma::Unknown(s))
            if s.is_only(KindSet::DIR) =>
        {
            Sigma::Known(Kind::Dir)
        }
        _ => Sigma::Mixed,
    }
}

/// Narrows the input-state set on entering a branch whose condition just
/// evaluated to `positive`. Only meaningful while the target is untouched.
fn refine(pred: &FsPred, positive: bool, p: &Path, sigma: Sigma) -> Sigma {
    let Sigma::Unknown(s) = sigma else {
        return sigma;
    };
    Sigma::Unknown(refine_set(pred, positive, p, s))
}

fn refine_set(pred: &FsPred, positive: bool, p: &Path, s: KindSet) -> KindSet {
    match pred {
        FsPred::DoesNotExist(q) if q == p => {
            if positive {
                s.restrict(KindSet::DNE)
            } else {
                s.without(KindSet::DNE)
            }
        }
        FsPred::IsFile(q) if q == p => {
            if positive {
                s.restrict(KindSet::FILE)
            } else {
                s.without(KindSet::FILE)
            }
        }
        FsPred::IsDir(q) if q == p => {
            if positive {
                s.restrict(KindSet::DIR)
            } else {
                s.without(KindSet::DIR)
            }
        }
        // A false emptiness test does not rule the directory state out.
        FsPred::IsEmptyDir(q) if q == p && positive => s.restrict(KindSet::DIR),
        FsPred::And(a, b) if positive => {
            let s = refine_set(a, true, p, s);
            refine_set(b, true, p, s)
        }
        FsPred::Or(a, b) if !positive => {
            let s = refine_set(a, false, p, s);
            refine_set(b, false, p, s)
        }
        FsPred::Not(a) => refine_set(a, !positive, p, s),
        _ => s,
    }
}

fn parent_dir_pred(p: &Path) -> FsPred {
    match p.parent() {
        Some(parent) => FsPred::IsDir(parent),
        None => FsPred::False,
    }
}

/// Folds atoms observing `p` where the tracked status decides them, keeps
/// them where the target still holds its input value, and refuses where
/// branches have diverged.
fn fold_pred(pred: &FsPred, p: &Path, sigma: &Sigma) -> Result<FsPred, PruneError> {
    Ok(match pred {
        FsPred::True | FsPred::False => pred.clone(),
        FsPred::DoesNotExist(q) if q == p => match sigma {
            Sigma::Unknown(s) if s.is_only(KindSet::DNE) => FsPred::True,
            Sigma::Unknown(s) if !s.has(KindSet::DNE) => FsPred::False,
            Sigma::Unknown(_) => pred.clone(),
            Sigma::Known(k) => constant(*k == Kind::Dne),
            Sigma::Mixed => {
                return Err(inapplicable(p, "observation after diverging branches"))
            }
        },
        FsPred::IsFile(q) if q == p => match sigma {
            Sigma::Unknown(s) if s.is_only(KindSet::FILE) => FsPred::True,
            Sigma::Unknown(s) if !s.has(KindSet::FILE) => FsPred::False,
            Sigma::Unknown(_) => pred.clone(),
            Sigma::Known(k) => constant(matches!(k, Kind::File(_))),
            Sigma::Mixed => {
                return Err(inapplicable(p, "observation after diverging branches"))
            }
        },
        FsPred::IsDir(q) if q == p => match sigma {
            Sigma::Unknown(s) if s.is_only(KindSet::DIR) => FsPred::True,
            Sigma::Unknown(s) if !s.has(KindSet::DIR) => FsPred::False,
            Sigma::Unknown(_) => pred.clone(),
            Sigma::Known(k) => constant(*k == Kind::Dir),
            Sigma::Mixed => {
                return Err(inapplicable(p, "observation after diverging branches"))
            }
        },
        FsPred::IsEmptyDir(q) if q == p => match sigma {
            // Untouched (and nothing below p is touched): emptiness of the
            // input value, identical in both expressions.
            Sigma::Unknown(s) if !s.has(KindSet::DIR) => FsPred::False,
            Sigma::Unknown(_) => pred.clone(),
            Sigma::Known(Kind::Dir) => {
                return Err(inapplicable(p, "emptiness depends on other children"))
            }
            Sigma::Known(_) => FsPred::False,
            Sigma::Mixed => {
                return Err(inapplicable(p, "observation after diverging branches"))
            }
        },
        FsPred::IsEmptyDir(q) if Some(q.clone()) == p.parent() => match sigma {
            Sigma::Unknown(_) => pred.clone(),
            Sigma::Known(Kind::Dne) => {
                return Err(inapplicable(p, "parent emptiness depends on siblings"))
            }
            Sigma::Known(_) => FsPred::False,
            Sigma::Mixed => {
                return Err(inapplicable(p, "observation after diverging branches"))
            }
        },
        FsPred::DoesNotExist(_)
        | FsPred::IsFile(_)
        | FsPred::IsDir(_)
        | FsPred::IsEmptyDir(_) => pred.clone(),
        FsPred::And(a, b) => match (fold_pred(a, p, sigma)?, fold_pred(b, p, sigma)?) {
            (FsPred::False, _) | (_, FsPred::False) => FsPred::False,
            (FsPred::True, x) | (x, FsPred::True) => x,
            (x, y) => FsPred::and(x, y),
        },
        FsPred::Or(a, b) => match (fold_pred(a, p, sigma)?, fold_pred(b, p, sigma)?) {
            (FsPred::True, _) | (_, FsPred::True) => FsPred::True,
            (FsPred::False, x) | (x, FsPred::False) => x,
            (x, y) => FsPred::or(x, y),
        },
        FsPred::Not(a) => match fold_pred(a, p, sigma)? {
            FsPred::True => FsPred::False,
            FsPred::False => FsPred::True,
            x => FsPred::not(x),
        },
    })
}

fn constant(b: bool) -> FsPred {
    if b {
        FsPred::True
    } else {
        FsPred::False
    }
}
