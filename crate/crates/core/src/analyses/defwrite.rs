//! Definitive writes: paths whose value after every *successful* run is the
//! same, independent of the input filesystem.
//!
//! The analysis abstractly executes the expression over a per-path set of
//! possible statuses, refining the sets along branch conditions and
//! operation side conditions. A path whose final set is a singleton is
//! definitively written.

use std::collections::BTreeMap;

use crate::ir::{ContentId, FsExpr, FsPred, Path};

use super::prune::Kind;

/// The set of statuses a path may have at a program point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsVal {
    pub dne: bool,
    pub dir: bool,
    pub file: FileAbs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileAbs {
    No,
    Exactly(ContentId),
    Any,
}

impl AbsVal {
    pub fn top() -> AbsVal {
        AbsVal {
            dne: true,
            dir: true,
            file: FileAbs::Any,
        }
    }

    fn only_dne() -> AbsVal {
        AbsVal {
            dne: true,
            dir: false,
            file: FileAbs::No,
        }
    }

    fn only_dir() -> AbsVal {
        AbsVal {
            dne: false,
            dir: true,
            file: FileAbs::No,
        }
    }

    fn only_file(f: FileAbs) -> AbsVal {
        AbsVal {
            dne: false,
            dir: false,
            file: f,
        }
    }

    fn is_empty(&self) -> bool {
        !self.dne && !self.dir && self.file == FileAbs::No
    }

    fn join(&self, other: &AbsVal) -> AbsVal {
        AbsVal {
            dne: self.dne || other.dne,
            dir: self.dir || other.dir,
            file: match (&self.file, &other.file) {
                (FileAbs::No, f) | (f, FileAbs::No) => f.clone(),
                (FileAbs::Exactly(a), FileAbs::Exactly(b)) if a == b => {
                    FileAbs::Exactly(a.clone())
                }
                _ => FileAbs::Any,
            },
        }
    }

    /// The singleton this set denotes, if it is one.
    pub fn singleton(&self) -> Option<Kind> {
        match (self.dne, self.dir, &self.file) {
            (true, false, FileAbs::No) => Some(Kind::Dne),
            (false, true, FileAbs::No) => Some(Kind::Dir),
            (false, false, FileAbs::Exactly(c)) => Some(Kind::File(Some(c.clone()))),
            (false, false, FileAbs::Any) => Some(Kind::File(None)),
            _ => None,
        }
    }
}

/// The analysis result over an expression's mentioned paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefWrites {
    state: BTreeMap<Path, AbsVal>,
    pub may_succeed: bool,
}

impl DefWrites {
    /// The definitive post-status of `p`, when every successful run agrees.
    /// `Kind::File(None)` means "definitely a file, content input-dependent".
    pub fn definitive(&self, p: &Path) -> Option<Kind> {
        self.state.get(p).and_then(AbsVal::singleton)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct AbsState {
    map: BTreeMap<Path, AbsVal>,
    may_succeed: bool,
}

impl AbsState {
    fn get(&self, p: &Path) -> AbsVal {
        self.map.get(p).cloned().unwrap_or_else(AbsVal::top)
    }

    fn set(&mut self, p: &Path, v: AbsVal) {
        if v.is_empty() {
            // Contradictory status: no successful run reaches this point.
            self.may_succeed = false;
        }
        self.map.insert(p.clone(), v);
    }

    /// Tightens `p` to the intersection with `v`.
    fn meet(&mut self, p: &Path, v: AbsVal) {
        let cur = self.get(p);
        let next = AbsVal {
            dne: cur.dne && v.dne,
            dir: cur.dir && v.dir,
            file: match (&cur.file, &v.file) {
                (FileAbs::No, _) | (_, FileAbs::No) => FileAbs::No,
                (FileAbs::Exactly(a), FileAbs::Exactly(b)) => {
                    if a == b {
                        FileAbs::Exactly(a.clone())
                    } else {
                        FileAbs::No
                    }
                }
                (FileAbs::Exactly(a), FileAbs::Any) | (FileAbs::Any, FileAbs::Exactly(a)) => {
                    FileAbs::Exactly(a.clone())
                }
                (FileAbs::Any, FileAbs::Any) => FileAbs::Any,
            },
        };
        self.set(p, next);
    }

    fn join(&self, other: &AbsState) -> AbsState {
        match (self.may_succeed, other.may_succeed) {
            (false, false) => AbsState {
                map: BTreeMap::new(),
                may_succeed: false,
            },
            (true, false) => self.clone(),
            (false, true) => other.clone(),
            (true, true) => {
                let mut map = BTreeMap::new();
                for p in self.map.keys().chain(other.map.keys()) {
                    map.insert(p.clone(), self.get(p).join(&other.get(p)));
                }
                AbsState {
                    map,
                    may_succeed: true,
                }
            }
        }
    }
}

pub fn def_writes(e: &FsExpr) -> DefWrites {
    let init = AbsState {
        map: e
            .mentioned_paths()
            .into_iter()
            .map(|p| (p, AbsVal::top()))
            .collect(),
        may_succeed: true,
    };
    let out = transfer(e, init);
    DefWrites {
        state: out.map,
        may_succeed: out.may_succeed,
    }
}

fn transfer(e: &FsExpr, mut state: AbsState) -> AbsState {
    match e {
        FsExpr::Skip => state,
        FsExpr::Error => {
            state.may_succeed = false;
            state
        }
        FsExpr::Mkdir(p) => {
            // Success implies the target was absent and the parent is a
            // directory (and stays one: nothing changed it here).
            state.meet(p, AbsVal::only_dne());
            if let Some(parent) = p.parent() {
                state.meet(&parent, AbsVal::only_dir());
            } else {
                state.may_succeed = false;
            }
            state.set(p, AbsVal::only_dir());
            state
        }
        FsExpr::CreateFile(p, c) => {
            state.meet(p, AbsVal::only_dne());
            if let Some(parent) = p.parent() {
                state.meet(&parent, AbsVal::only_dir());
            } else {
                state.may_succeed = false;
            }
            state.set(p, AbsVal::only_file(FileAbs::Exactly(c.clone())));
            state
        }
        FsExpr::Rm(p) => {
            if p.is_root() {
                state.may_succeed = false;
            }
            // Success implies the target was a file or an (empty) dir.
            let cur = state.get(p);
            state.meet(
                p,
                AbsVal {
                    dne: false,
                    dir: cur.dir,
                    file: cur.file,
                },
            );
            state.set(p, AbsVal::only_dne());
            state
        }
        FsExpr::Cp(src, dst) => {
            state.meet(src, AbsVal::only_file(FileAbs::Any));
            state.meet(dst, AbsVal::only_dne());
            if let Some(parent) = dst.parent() {
                state.meet(&parent, AbsVal::only_dir());
            } else {
                state.may_succeed = false;
            }
            let content = match state.get(src).file {
                FileAbs::Exactly(c) => FileAbs::Exactly(c),
                _ => FileAbs::Any,
            };
            state.set(dst, AbsVal::only_file(content));
            state
        }
        FsExpr::Seq(a, b) => {
            let mid = transfer(a, state);
            if !mid.may_succeed {
                return mid;
            }
            transfer(b, mid)
        }
        FsExpr::If(c, a, b) => {
            let mut then_state = state.clone();
            refine(c, true, &mut then_state);
            let mut else_state = state;
            refine(c, false, &mut else_state);
            transfer(a, then_state).join(&transfer(b, else_state))
        }
    }
}

/// Tightens the state with what `pred == positive` implies.
fn refine(pred: &FsPred, positive: bool, state: &mut AbsState) {
    match (pred, positive) {
        (FsPred::True, false) | (FsPred::False, true) => state.may_succeed = false,
        (FsPred::True, true) | (FsPred::False, false) => {}
        (FsPred::DoesNotExist(p), true) => state.meet(p, AbsVal::only_dne()),
        (FsPred::DoesNotExist(p), false) => {
            state.meet(
                p,
                AbsVal {
                    dne: false,
                    dir: true,
                    file: FileAbs::Any,
                },
            );
        }
        (FsPred::IsFile(p), true) => state.meet(p, AbsVal::only_file(FileAbs::Any)),
        (FsPred::IsFile(p), false) => {
            state.meet(
                p,
                AbsVal {
                    dne: true,
                    dir: true,
                    file: FileAbs::No,
                },
            );
        }
        (FsPred::IsDir(p), true) | (FsPred::IsEmptyDir(p), true) => {
            state.meet(p, AbsVal::only_dir())
        }
        (FsPred::IsDir(p), false) => {
            state.meet(
                p,
                AbsVal {
                    dne: true,
                    dir: false,
                    file: FileAbs::Any,
                },
            );
        }
        // A non-empty test tells us nothing the status sets can express.
        (FsPred::IsEmptyDir(_), false) => {}
        (FsPred::And(a, b), true) => {
            refine(a, true, state);
            refine(b, true, state);
        }
        (FsPred::Or(a, b), false) => {
            refine(a, false, state);
            refine(b, false, state);
        }
        // One-of-two information is not representable pointwise.
        (FsPred::And(_, _), false) | (FsPred::Or(_, _), true) => {}
        (FsPred::Not(a), pos) => refine(a, !pos, state),
    }
}
