//! Equivalence of two expressions over all tree-closed inputs, decided by
//! the solver and confirmed by concrete replay.

use thiserror::Error;

use crate::ir::{eval, EvalResult, FileSystem, FsExpr};

use super::dom::dom_bound_joint;
use super::encode::{
    differ, encode, input_tree_closure, interp, success_differ, LogicalState, QueryVocab,
};
use super::smtlib::{build_query, Query};
use super::solver::{QueryOutcome, SolverError, SolverSession};

#[derive(Debug, Error)]
pub enum EquivError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver returned unknown")]
    Unknown,
    #[error("solver model is not a valid filesystem: {0}")]
    BadModel(#[from] crate::ir::fs::FileSystemError),
    #[error("solver model does not distinguish the expressions under replay")]
    WitnessMismatch,
}

/// A concrete input on which the two expressions disagree, together with
/// both replayed outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub input: FileSystem,
    pub out1: EvalResult,
    pub out2: EvalResult,
}

/// The query asserting "some tree-closed input distinguishes `e1` and
/// `e2`", plus the vocabulary needed to decode its models.
pub fn equiv_query(e1: &FsExpr, e2: &FsExpr) -> (Query, QueryVocab) {
    let dom = dom_bound_joint([e1, e2]);
    let vocab = QueryVocab::for_exprs(&dom, [e1, e2]);
    let init = LogicalState::init(&vocab);
    let s1 = encode(e1, &init, &vocab);
    let s2 = encode(e2, &init, &vocab);
    let query = build_query(&vocab, &[input_tree_closure(&vocab), differ(&s1, &s2)]);
    (query, vocab)
}

/// Decides `e1 ≡ e2`. Returns `None` when equivalent, or a replayed
/// counterexample when not. Every witness is validated against the concrete
/// evaluator before being reported.
pub fn check_equiv(
    e1: &FsExpr,
    e2: &FsExpr,
    session: &mut SolverSession,
) -> Result<Option<Witness>, EquivError> {
    let (query, vocab) = equiv_query(e1, e2);
    match session.query(&query)? {
        QueryOutcome::Unsat => Ok(None),
        QueryOutcome::Unknown => Err(EquivError::Unknown),
        QueryOutcome::Sat(model) => {
            let input = interp::to_filesystem(&vocab, &model)?;
            let out1 = eval(e1, &input);
            let out2 = eval(e2, &input);
            if out1 == out2 {
                return Err(EquivError::WitnessMismatch);
            }
            Ok(Some(Witness { input, out1, out2 }))
        }
    }
}

/// Looks for an input on which *both* expressions succeed but produce
/// different filesystems — the most informative kind of difference, shown
/// in preference to a success/error divergence. `None` only means no such
/// input exists, not that the expressions are equivalent.
pub fn check_success_divergence(
    e1: &FsExpr,
    e2: &FsExpr,
    session: &mut SolverSession,
) -> Result<Option<Witness>, EquivError> {
    let dom = dom_bound_joint([e1, e2]);
    let vocab = QueryVocab::for_exprs(&dom, [e1, e2]);
    let init = LogicalState::init(&vocab);
    let s1 = encode(e1, &init, &vocab);
    let s2 = encode(e2, &init, &vocab);
    let query = build_query(&vocab, &[input_tree_closure(&vocab), success_differ(&s1, &s2)]);
    match session.query(&query)? {
        QueryOutcome::Unsat => Ok(None),
        QueryOutcome::Unknown => Err(EquivError::Unknown),
        QueryOutcome::Sat(model) => {
            let input = interp::to_filesystem(&vocab, &model)?;
            let out1 = eval(e1, &input);
            let out2 = eval(e2, &input);
            if out1 == out2 || !matches!((&out1, &out2), (EvalResult::Ok(_), EvalResult::Ok(_))) {
                return Err(EquivError::WitnessMismatch);
            }
            Ok(Some(Witness { input, out1, out2 }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{oracle_equiv, ContentId, FsPred, Path};
    use crate::symbolic::solver::SolverConfig;
    use std::collections::BTreeSet;

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    fn session() -> SolverSession {
        SolverSession::new(SolverConfig::default()).expect("solver binary available")
    }

    #[test]
    fn idemdir_is_idempotent() {
        let e = FsExpr::idemdir(p("/a"));
        let twice = FsExpr::seq(e.clone(), e.clone());
        let mut s = session();
        assert_eq!(check_equiv(&e, &twice, &mut s).unwrap(), None);
    }

    #[test]
    fn cp_then_rm_is_not_idempotent_and_witness_replays() {
        let e = FsExpr::seq(FsExpr::Cp(p("/src"), p("/dst")), FsExpr::Rm(p("/src")));
        let twice = FsExpr::seq(e.clone(), e.clone());
        let mut s = session();
        let w = check_equiv(&e, &twice, &mut s).unwrap().expect("witness");
        // Replay already validated inside check_equiv; double-check here.
        assert_ne!(eval(&e, &w.input), eval(&twice, &w.input));
    }

    #[test]
    fn agrees_with_oracle_on_small_cases() {
        let cases = [
            (FsExpr::Mkdir(p("/a")), FsExpr::idemdir(p("/a"))),
            (FsExpr::Skip, FsExpr::Skip),
            (
                FsExpr::CreateFile(p("/f"), ContentId::new("x")),
                FsExpr::CreateFile(p("/f"), ContentId::new("y")),
            ),
            (
                FsExpr::ite(FsPred::DoesNotExist(p("/a")), FsExpr::Mkdir(p("/a")), FsExpr::Skip),
                FsExpr::idemdir(p("/a")),
            ),
        ];
        let mut s = session();
        for (e1, e2) in &cases {
            let dom = dom_bound_joint([e1, e2]);
            let mut contents: BTreeSet<ContentId> = e1.mentioned_contents();
            contents.extend(e2.mentioned_contents());
            contents.insert(ContentId::new("#other"));
            let oracle = oracle_equiv(e1, e2, &dom, &contents).unwrap();
            let solver_says = check_equiv(e1, e2, &mut s).unwrap().is_none();
            assert_eq!(solver_says, oracle, "disagreement on {e1:?} vs {e2:?}");
        }
    }
}
