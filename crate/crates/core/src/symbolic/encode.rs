//! The logical encoding: a symbolic run of an expression over a bounded
//! domain produces a success formula (`ok`) and, per path, a stat term
//! describing the output filesystem as a function of the input variables.

use std::collections::{BTreeMap, BTreeSet};

use crate::ir::{ContentId, FileContent, FileSystem, FsExpr, FsPred, Path};

use super::term::{BoolTerm, ContentTerm, StatTerm};

/// The variable and content tables of one query. Variable `i` is the input
/// stat of `paths[i]`; content literal `i` is `contents[i]`, and one extra
/// literal (index `contents.len()`) stands for every content the
/// expressions never mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryVocab {
    paths: Vec<Path>,
    contents: Vec<ContentId>,
}

impl QueryVocab {
    /// Builds the vocabulary for a domain bound and the contents mentioned
    /// by the query's expressions.
    pub fn new(dom: &BTreeSet<Path>, contents: &BTreeSet<ContentId>) -> QueryVocab {
        QueryVocab {
            paths: dom.iter().cloned().collect(),
            contents: contents.iter().cloned().collect(),
        }
    }

    pub fn for_exprs<'a>(
        dom: &BTreeSet<Path>,
        exprs: impl IntoIterator<Item = &'a FsExpr>,
    ) -> QueryVocab {
        let mut contents = BTreeSet::new();
        for e in exprs {
            contents.extend(e.mentioned_contents());
        }
        QueryVocab::new(dom, &contents)
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn contents(&self) -> &[ContentId] {
        &self.contents
    }

    pub fn var(&self, p: &Path) -> u32 {
        self.paths
            .binary_search(p)
            .unwrap_or_else(|_| panic!("path {p} outside the query domain")) as u32
    }

    pub fn path_of_var(&self, i: u32) -> &Path {
        &self.paths[i as usize]
    }

    pub fn content_index(&self, c: &ContentId) -> u32 {
        self.contents
            .binary_search(c)
            .unwrap_or_else(|_| panic!("content {c:?} outside the query vocabulary")) as u32
    }

    /// The index of the stand-in for unmentioned contents.
    pub fn other_content_index(&self) -> u32 {
        self.contents.len() as u32
    }

    /// A concrete content token for the "other" literal that cannot collide
    /// with any mentioned content.
    pub fn other_content_token(&self) -> ContentId {
        let mut t = "#other".to_string();
        while self.contents.iter().any(|c| c.as_str() == t) {
            t.push('_');
        }
        ContentId::new(t)
    }

    /// Encodes a concrete filesystem as an assignment to the input
    /// variables. Contents outside the table map to the "other" literal.
    pub fn assignment(&self, fs: &FileSystem) -> Vec<StatTerm> {
        self.paths
            .iter()
            .map(|p| match fs.get(p) {
                None => StatTerm::Dne,
                Some(FileContent::Dir) => StatTerm::Dir,
                Some(FileContent::File(c)) => StatTerm::File(ContentTerm::Lit(
                    self.contents
                        .binary_search(c)
                        .map(|i| i as u32)
                        .unwrap_or_else(|_| self.other_content_index()),
                )),
            })
            .collect()
    }
}

/// A symbolic filesystem-and-success-flag pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalState {
    pub ok: BoolTerm,
    pub stats: BTreeMap<Path, StatTerm>,
}

impl LogicalState {
    /// The initial state: every path maps to its input variable.
    pub fn init(vocab: &QueryVocab) -> LogicalState {
        LogicalState {
            ok: BoolTerm::True,
            stats: vocab
                .paths()
                .iter()
                .enumerate()
                .map(|(i, p)| (p.clone(), StatTerm::Var(i as u32)))
                .collect(),
        }
    }

    fn stat(&self, p: &Path) -> StatTerm {
        self.stats
            .get(p)
            .unwrap_or_else(|| panic!("path {p} outside the query domain"))
            .clone()
    }

    fn children<'s>(&'s self, p: &'s Path) -> impl Iterator<Item = &'s Path> + 's {
        self.stats.keys().filter(move |q| p.is_parent_of(q))
    }
}

/// The tree-closure constraint on the input variables: a present non-root
/// path needs a directory parent, and the root is never a file.
pub fn input_tree_closure(vocab: &QueryVocab) -> BoolTerm {
    let mut clauses = Vec::new();
    for (i, p) in vocab.paths().iter().enumerate() {
        let v = StatTerm::Var(i as u32);
        match p.parent() {
            None => clauses.push(BoolTerm::not(BoolTerm::is_file(v))),
            Some(parent) => {
                let pv = StatTerm::Var(vocab.var(&parent));
                clauses.push(BoolTerm::or(
                    BoolTerm::is_dne(v),
                    BoolTerm::is_dir(pv),
                ));
            }
        }
    }
    BoolTerm::and_all(clauses)
}

/// Encodes a predicate against a symbolic state.
///
/// Emptiness is "is a directory and every in-domain child is absent", which
/// is sound because the domain bound adds a fresh child for every emptiness
/// test.
pub fn encode_pred(pred: &FsPred, state: &LogicalState) -> BoolTerm {
    match pred {
        FsPred::True => BoolTerm::True,
        FsPred::False => BoolTerm::False,
        FsPred::DoesNotExist(p) => BoolTerm::is_dne(state.stat(p)),
        FsPred::IsFile(p) => BoolTerm::is_file(state.stat(p)),
        FsPred::IsDir(p) => BoolTerm::is_dir(state.stat(p)),
        FsPred::IsEmptyDir(p) => BoolTerm::and(
            BoolTerm::is_dir(state.stat(p)),
            BoolTerm::and_all(
                state
                    .children(p)
                    .map(|c| BoolTerm::is_dne(state.stat(c)))
                    .collect::<Vec<_>>(),
            ),
        ),
        FsPred::And(a, b) => BoolTerm::and(encode_pred(a, state), encode_pred(b, state)),
        FsPred::Or(a, b) => BoolTerm::or(encode_pred(a, state), encode_pred(b, state)),
        FsPred::Not(a) => BoolTerm::not(encode_pred(a, state)),
    }
}

/// Symbolically runs `e` from `state`. On paths where the success formula is
/// false the stat terms are unconstrained garbage; consumers must guard
/// output comparisons with `ok`.
pub fn encode(e: &FsExpr, state: &LogicalState, vocab: &QueryVocab) -> LogicalState {
    match e {
        FsExpr::Skip => state.clone(),
        FsExpr::Error => LogicalState {
            ok: BoolTerm::False,
            stats: state.stats.clone(),
        },
        FsExpr::Mkdir(p) => write_step(state, p, StatTerm::Dir),
        FsExpr::CreateFile(p, c) => write_step(
            state,
            p,
            StatTerm::File(ContentTerm::Lit(vocab.content_index(c))),
        ),
        FsExpr::Rm(p) => {
            let pre = if p.is_root() {
                BoolTerm::False
            } else {
                BoolTerm::or(
                    BoolTerm::is_file(state.stat(p)),
                    encode_pred(&FsPred::IsEmptyDir(p.clone()), state),
                )
            };
            let mut stats = state.stats.clone();
            stats.insert(p.clone(), StatTerm::Dne);
            LogicalState {
                ok: BoolTerm::and(state.ok.clone(), pre),
                stats,
            }
        }
        FsExpr::Cp(src, dst) => {
            let src_stat = state.stat(src);
            let pre = BoolTerm::and(
                BoolTerm::is_file(src_stat.clone()),
                target_free(state, dst),
            );
            let mut stats = state.stats.clone();
            stats.insert(
                dst.clone(),
                StatTerm::File(ContentTerm::Of(Box::new(src_stat))),
            );
            LogicalState {
                ok: BoolTerm::and(state.ok.clone(), pre),
                stats,
            }
        }
        FsExpr::Seq(a, b) => {
            let mid = encode(a, state, vocab);
            encode(b, &mid, vocab)
        }
        FsExpr::If(c, a, b) => {
            let cond = encode_pred(c, state);
            // Branches start from a neutral success flag; the prefix formula
            // is conjoined once at the end. Embedding it in both branches
            // would double the emitted term per conditional.
            let branch_in = LogicalState {
                ok: BoolTerm::True,
                stats: state.stats.clone(),
            };
            let sa = encode(a, &branch_in, vocab);
            let sb = encode(b, &branch_in, vocab);
            let stats = sa
                .stats
                .iter()
                .map(|(p, ta)| {
                    (
                        p.clone(),
                        StatTerm::ite(cond.clone(), ta.clone(), sb.stats[p].clone()),
                    )
                })
                .collect();
            LogicalState {
                ok: BoolTerm::and(state.ok.clone(), BoolTerm::ite(cond, sa.ok, sb.ok)),
                stats,
            }
        }
    }
}

/// Parent is a directory and the target is absent.
fn target_free(state: &LogicalState, p: &Path) -> BoolTerm {
    match p.parent() {
        None => BoolTerm::False,
        Some(parent) => BoolTerm::and(
            BoolTerm::is_dir(state.stat(&parent)),
            BoolTerm::is_dne(state.stat(p)),
        ),
    }
}

fn write_step(state: &LogicalState, p: &Path, new: StatTerm) -> LogicalState {
    let pre = target_free(state, p);
    let mut stats = state.stats.clone();
    stats.insert(p.clone(), new);
    LogicalState {
        ok: BoolTerm::and(state.ok.clone(), pre),
        stats,
    }
}

/// Asserts that two already-encoded runs over the same vocabulary differ:
/// exactly one succeeds, or both succeed with different outputs.
pub fn differ(s1: &LogicalState, s2: &LogicalState) -> BoolTerm {
    let ok_differs = BoolTerm::and(
        BoolTerm::or(s1.ok.clone(), s2.ok.clone()),
        BoolTerm::not(BoolTerm::and(s1.ok.clone(), s2.ok.clone())),
    );
    let some_path_differs = BoolTerm::or_all(s1.stats.iter().map(|(p, t1)| {
        BoolTerm::not(BoolTerm::stat_eq(t1.clone(), s2.stats[p].clone()))
    }));
    BoolTerm::or(
        ok_differs,
        BoolTerm::and(BoolTerm::and(s1.ok.clone(), s2.ok.clone()), some_path_differs),
    )
}

/// "Both runs succeed and produce different filesystems" — the restriction
/// of [`differ`] used to look for the most informative counterexamples.
pub fn success_differ(s1: &LogicalState, s2: &LogicalState) -> BoolTerm {
    let some_path_differs = BoolTerm::or_all(s1.stats.iter().map(|(p, t1)| {
        BoolTerm::not(BoolTerm::stat_eq(t1.clone(), s2.stats[p].clone()))
    }));
    BoolTerm::and(BoolTerm::and(s1.ok.clone(), s2.ok.clone()), some_path_differs)
}

/// Interprets terms under a concrete assignment of the input variables —
/// the reference semantics the SMT emission must agree with, and the tool
/// for validating models returned by the solver.
pub mod interp {
    use super::*;

    /// A concrete stat value; contents are literal indices into the
    /// vocabulary (with the "other" index representing any unmentioned
    /// content).
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum StatVal {
        Dir,
        File(u32),
        Dne,
    }

    pub fn of_assignment(terms: &[StatTerm]) -> Vec<StatVal> {
        terms
            .iter()
            .map(|t| match t {
                StatTerm::Dir => StatVal::Dir,
                StatTerm::Dne => StatVal::Dne,
                StatTerm::File(ContentTerm::Lit(i)) => StatVal::File(*i),
                other => panic!("not a ground assignment term: {other:?}"),
            })
            .collect()
    }

    pub fn eval_stat(t: &StatTerm, env: &[StatVal]) -> StatVal {
        match t {
            StatTerm::Var(i) => env[*i as usize],
            StatTerm::Dir => StatVal::Dir,
            StatTerm::Dne => StatVal::Dne,
            StatTerm::File(c) => StatVal::File(eval_content(c, env)),
            StatTerm::Ite(c, a, b) => {
                if eval_bool(c, env) {
                    eval_stat(a, env)
                } else {
                    eval_stat(b, env)
                }
            }
        }
    }

    fn eval_content(c: &ContentTerm, env: &[StatVal]) -> u32 {
        match c {
            ContentTerm::Lit(i) => *i,
            ContentTerm::Of(s) => match eval_stat(s, env) {
                StatVal::File(i) => i,
                // `(content s)` of a non-file is an arbitrary fixed value in
                // the logic; pick one deterministically.
                _ => u32::MAX,
            },
        }
    }

    pub fn eval_bool(t: &BoolTerm, env: &[StatVal]) -> bool {
        match t {
            BoolTerm::True => true,
            BoolTerm::False => false,
            BoolTerm::IsDir(s) => eval_stat(s, env) == StatVal::Dir,
            BoolTerm::IsFile(s) => matches!(eval_stat(s, env), StatVal::File(_)),
            BoolTerm::IsDne(s) => eval_stat(s, env) == StatVal::Dne,
            BoolTerm::StatEq(a, b) => eval_stat(a, env) == eval_stat(b, env),
            BoolTerm::And(a, b) => eval_bool(a, env) && eval_bool(b, env),
            BoolTerm::Or(a, b) => eval_bool(a, env) || eval_bool(b, env),
            BoolTerm::Not(a) => !eval_bool(a, env),
            BoolTerm::Ite(c, a, b) => {
                if eval_bool(c, env) {
                    eval_bool(a, env)
                } else {
                    eval_bool(b, env)
                }
            }
        }
    }

    /// Converts an input assignment back into a filesystem.
    pub fn to_filesystem(
        vocab: &QueryVocab,
        env: &[StatVal],
    ) -> Result<FileSystem, crate::ir::fs::FileSystemError> {
        let other = vocab.other_content_token();
        FileSystem::from_entries(vocab.paths().iter().enumerate().filter_map(|(i, p)| {
            match env[i] {
                StatVal::Dne => None,
                StatVal::Dir => Some((p.clone(), FileContent::Dir)),
                StatVal::File(c) => {
                    let content = vocab
                        .contents()
                        .get(c as usize)
                        .cloned()
                        .unwrap_or_else(|| other.clone());
                    Some((p.clone(), FileContent::File(content)))
                }
            }
        }))
    }
}
