//! The top-level verdicts: is a resource graph deterministic (every valid
//! application order produces the same filesystem), and is applying it twice
//! the same as applying it once.
//!
//! The pipeline compiles each resource to an [`FsExpr`], shrinks the search
//! space (resource elimination, path pruning), enumerates application orders
//! with partial-order reduction, and discharges the remaining pairwise
//! equivalence queries to the solver. Counterexamples are always replayed
//! concretely against the *unreduced* programs before being reported.

mod explore;

pub use explore::{explore, BudgetExceeded, Explored};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::analyses::{access_map, maps_commute, prune, select_prunable_paths};
use crate::analyses::eliminate as elim;
use crate::ir::{eval, EvalResult, FileSystem, FsExpr, Path};
use crate::manifest::{GraphError, ResourceGraph};
use crate::resources::{compile_resource, CompileEnv, CompileError};
use crate::symbolic::{
    check_equiv, check_success_divergence, dom_bound_joint, EquivError, SolverSession,
};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

/// Which reductions to apply and how much exploration to allow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    /// Partial-order reduction during order enumeration.
    pub por: bool,
    /// Fold order-independent paths out of the compared programs.
    pub prune: bool,
    /// Drop resources whose position provably cannot matter.
    pub elim: bool,
    /// Maximum branch expansions during order enumeration.
    pub max_branches: usize,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            por: true,
            prune: true,
            elim: true,
            max_branches: 10_000,
        }
    }
}

/// Two application orders and a concrete input filesystem on which they
/// produce different outcomes. Replayable: `eval` of the sequenced resources
/// in `order1` / `order2` on `input` yields `out1` / `out2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub input: FileSystem,
    pub order1: Vec<String>,
    pub order2: Vec<String>,
    pub out1: EvalResult,
    pub out2: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeterminismVerdict {
    Deterministic,
    NonDeterministic(Box<Counterexample>),
}

/// How much work the check did, for reporting and benchmarks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckStats {
    pub resources: usize,
    pub eliminated: usize,
    /// Paths whose state the compared programs still write; pruned paths
    /// survive only as reads of the input and are not counted.
    pub modeled_paths: usize,
    pub pruned_paths: usize,
    pub linearizations: usize,
    pub branches: usize,
    pub solver_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterminismReport {
    pub verdict: DeterminismVerdict,
    pub stats: CheckStats,
}

/// An input on which one application of the graph differs from two
/// consecutive applications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdempotenceCounterexample {
    pub input: FileSystem,
    pub order: Vec<String>,
    pub once: EvalResult,
    pub twice: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdempotenceVerdict {
    Idempotent,
    NonIdempotent(Box<IdempotenceCounterexample>),
}

fn compile_all(
    graph: &ResourceGraph,
    env: &CompileEnv,
) -> Result<(Vec<FsExpr>, Vec<String>), CheckError> {
    let mut exprs = Vec::new();
    let mut labels = Vec::new();
    for r in graph.resources() {
        exprs.push(compile_resource(r, env)?);
        labels.push(r.label());
    }
    Ok((exprs, labels))
}

/// Decides whether every valid application order of `graph` produces the
/// same outcome on every input filesystem.
pub fn check_determinism(
    graph: &ResourceGraph,
    env: &CompileEnv,
    opts: &CheckOptions,
    session: &mut SolverSession,
) -> Result<DeterminismReport, CheckError> {
    graph.toposort()?;
    let (exprs, labels) = compile_all(graph, env)?;
    let mut stats = CheckStats {
        resources: exprs.len(),
        ..CheckStats::default()
    };

    // Reduce the vertex set before enumerating orders.
    let (kept, removed): (Vec<usize>, Vec<usize>) = if opts.elim {
        let r = elim::eliminate(&exprs, graph.edges());
        stats.eliminated = r.removed.len();
        (r.kept, r.removed)
    } else {
        ((0..exprs.len()).collect(), Vec::new())
    };
    let kept_exprs: Vec<FsExpr> = kept.iter().map(|&i| exprs[i].clone()).collect();
    let local = |g: usize| kept.iter().position(|&k| k == g).unwrap();
    let local_edges: BTreeSet<(usize, usize)> = graph
        .edges()
        .iter()
        .filter(|(a, b)| kept.contains(a) && kept.contains(b))
        .map(|&(a, b)| (local(a), local(b)))
        .collect();

    let dom = dom_bound_joint(kept_exprs.iter());
    let access: Vec<_> = kept_exprs.iter().map(|e| access_map(e, &dom)).collect();
    let commute: Vec<Vec<bool>> = (0..kept_exprs.len())
        .map(|i| {
            (0..kept_exprs.len())
                .map(|j| maps_commute(&access[i], &access[j]))
                .collect()
        })
        .collect();

    let explored = explore(
        kept_exprs.len(),
        &local_edges,
        &commute,
        opts.por,
        opts.max_branches,
    )?;
    stats.linearizations = explored.orders.len();
    stats.branches = explored.branches;

    if explored.orders.len() <= 1 {
        return Ok(DeterminismReport {
            verdict: DeterminismVerdict::Deterministic,
            stats,
        });
    }

    let sequence = |order: &[usize]| {
        FsExpr::seq_all(order.iter().map(|&i| kept_exprs[i].clone()))
    };
    let base_seqs: Vec<FsExpr> = explored.orders.iter().map(|o| sequence(o)).collect();

    // Fold order-independent paths out of every compared program. A path is
    // only pruned if pruning applies in every explored order, also after
    // earlier candidates have been pruned.
    let seqs: Vec<FsExpr> = if opts.prune {
        let mut candidates: Vec<Path> =
            select_prunable_paths(&kept_exprs, &base_seqs).into_iter().collect();
        loop {
            let mut seqs = Vec::with_capacity(base_seqs.len());
            let mut failed: Option<Path> = None;
            'orders: for base in &base_seqs {
                let mut e = base.clone();
                for p in &candidates {
                    match prune(&e, p) {
                        Ok(r) => e = r.expr,
                        Err(_) => {
                            failed = Some(p.clone());
                            break 'orders;
                        }
                    }
                }
                seqs.push(e);
            }
            match failed {
                Some(p) => candidates.retain(|q| *q != p),
                None => {
                    stats.pruned_paths = candidates.len();
                    break seqs;
                }
            }
        }
    } else {
        base_seqs
    };
    let written: BTreeSet<Path> = seqs.iter().flat_map(|s| s.write_targets()).collect();
    stats.modeled_paths = written.len();

    // Equivalence is transitive, so comparing everything against the first
    // order decides mutual equivalence.
    for (i, seq) in seqs.iter().enumerate().skip(1) {
        if *seq == seqs[0] {
            continue;
        }
        stats.solver_queries += 1;
        if let Some(w) = check_equiv(&seqs[0], seq, session)? {
            let full1 = full_order(&explored.orders[0], &kept, &removed);
            let full2 = full_order(&explored.orders[i], &kept, &removed);
            // An eliminated resource appended to both orders can mask a
            // difference (for example by erroring on every input that
            // exposes it), so a difference between reduced programs only
            // counts once it is confirmed on the full programs.
            if let Some(cx) =
                confirm_difference(&w.input, &full1, &full2, &exprs, &labels, session)?
            {
                return Ok(DeterminismReport {
                    verdict: DeterminismVerdict::NonDeterministic(Box::new(cx)),
                    stats,
                });
            }
        }
    }
    Ok(DeterminismReport {
        verdict: DeterminismVerdict::Deterministic,
        stats,
    })
}

/// Extends an order over the kept vertices to an order over all vertices.
/// Each eliminated vertex was a sink among the vertices still live at its
/// removal, so appending the removed vertices in reverse removal order
/// keeps the order valid.
fn full_order(local: &[usize], kept: &[usize], removed: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = local.iter().map(|&i| kept[i]).collect();
    order.extend(removed.iter().rev());
    order
}

/// Rebuilds a counterexample against the unreduced programs: the witness
/// input from the reduced query is replayed on the full sequences, falling
/// back to a fresh solver query on the full programs if the replay does not
/// distinguish them. `None` means the full programs are equivalent after
/// all — the eliminated suffix neutralizes the difference on every input.
fn confirm_difference(
    input: &FileSystem,
    order1: &[usize],
    order2: &[usize],
    exprs: &[FsExpr],
    labels: &[String],
    session: &mut SolverSession,
) -> Result<Option<Counterexample>, CheckError> {
    let e1 = FsExpr::seq_all(order1.iter().map(|&i| exprs[i].clone()));
    let e2 = FsExpr::seq_all(order2.iter().map(|&i| exprs[i].clone()));
    let name = |order: &[usize]| order.iter().map(|&i| labels[i].clone()).collect();

    // A divergence between two *successful* runs is the most telling kind
    // of counterexample; show one whenever it exists.
    if let Some(w) = check_success_divergence(&e1, &e2, session)? {
        return Ok(Some(Counterexample {
            input: w.input,
            order1: name(order1),
            order2: name(order2),
            out1: w.out1,
            out2: w.out2,
        }));
    }

    let out1 = eval(&e1, input);
    let out2 = eval(&e2, input);
    if out1 != out2 {
        return Ok(Some(Counterexample {
            input: input.clone(),
            order1: name(order1),
            order2: name(order2),
            out1,
            out2,
        }));
    }
    Ok(check_equiv(&e1, &e2, session)?.map(|w| Counterexample {
        input: w.input,
        order1: name(order1),
        order2: name(order2),
        out1: w.out1,
        out2: w.out2,
    }))
}

/// Decides whether applying the graph twice equals applying it once.
///
/// Only meaningful for a deterministic graph (the caller is expected to have
/// established determinism first); the check uses one fixed valid order, the
/// full unreduced program.
pub fn check_idempotence(
    graph: &ResourceGraph,
    env: &CompileEnv,
    session: &mut SolverSession,
) -> Result<IdempotenceVerdict, CheckError> {
    let order = graph.toposort()?;
    let (exprs, labels) = compile_all(graph, env)?;
    let e = FsExpr::seq_all(order.iter().map(|&i| exprs[i].clone()));
    let twice = FsExpr::seq(e.clone(), e.clone());
    match check_equiv(&e, &twice, session)? {
        None => Ok(IdempotenceVerdict::Idempotent),
        Some(w) => Ok(IdempotenceVerdict::NonIdempotent(Box::new(
            IdempotenceCounterexample {
                input: w.input,
                order: order.iter().map(|&i| labels[i].clone()).collect(),
                once: w.out1,
                twice: w.out2,
            },
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::load;
    use crate::resources::PackageDb;
    use crate::symbolic::SolverConfig;

    fn session() -> SolverSession {
        SolverSession::new(SolverConfig::default()).expect("solver binary available")
    }

    fn env_with(db: &PackageDb) -> CompileEnv<'_> {
        CompileEnv { db }
    }

    fn check(src: &str, opts: &CheckOptions) -> DeterminismReport {
        let graph = load(src).unwrap();
        let db = PackageDb::new("test");
        let mut s = session();
        check_determinism(&graph, &env_with(&db), opts, &mut s).unwrap()
    }

    #[test]
    fn conflicting_unordered_writes_are_nondeterministic() {
        let src = r#"
            file { '/etc/app.conf': content => 'alpha' }
            file { '/etc/other.conf': content => 'beta', path => '/etc/app.conf' }
        "#;
        let r = check(src, &CheckOptions::default());
        let DeterminismVerdict::NonDeterministic(cx) = r.verdict else {
            panic!("expected a counterexample");
        };
        // The counterexample must replay: two full orders, different results.
        assert_ne!(cx.out1, cx.out2);
        assert_eq!(cx.order1.len(), 2);
        assert_ne!(cx.order1, cx.order2);
    }

    #[test]
    fn ordering_edge_restores_determinism() {
        let src = r#"
            file { '/etc/app.conf': content => 'alpha' }
            file { '/etc/other.conf': content => 'beta', path => '/etc/app.conf' }
            File['/etc/app.conf'] -> File['/etc/other.conf']
        "#;
        let r = check(src, &CheckOptions::default());
        assert_eq!(r.verdict, DeterminismVerdict::Deterministic);
    }

    #[test]
    fn independent_resources_deterministic_without_solver() {
        let src = r#"
            file { '/etc/a.conf': content => 'x' }
            file { '/etc/b.conf': content => 'y' }
            file { '/srv/www': ensure => directory }
        "#;
        let r = check(src, &CheckOptions::default());
        assert_eq!(r.verdict, DeterminismVerdict::Deterministic);
        assert_eq!(r.stats.solver_queries, 0);
    }

    #[test]
    fn toggles_agree_on_verdict() {
        let src = r#"
            file { '/etc/a.conf': content => 'x' }
            file { '/etc/dup': content => 'one' }
            file { '/etc/dup2': content => 'two', path => '/etc/dup' }
        "#;
        let mut verdicts = Vec::new();
        for por in [true, false] {
            for pr in [true, false] {
                for el in [true, false] {
                    let opts = CheckOptions {
                        por,
                        prune: pr,
                        elim: el,
                        ..CheckOptions::default()
                    };
                    let r = check(src, &opts);
                    verdicts.push(matches!(r.verdict, DeterminismVerdict::Deterministic));
                }
            }
        }
        assert!(verdicts.iter().all(|&v| !v), "all toggles must find the conflict");
    }

    #[test]
    fn file_resources_are_idempotent() {
        let src = r#"
            file { '/etc/a.conf': content => 'x' }
            file { '/srv/www': ensure => directory }
        "#;
        let graph = load(src).unwrap();
        let db = PackageDb::new("test");
        let mut s = session();
        let v = check_idempotence(&graph, &env_with(&db), &mut s).unwrap();
        assert_eq!(v, IdempotenceVerdict::Idempotent);
    }

    #[test]
    fn package_install_is_idempotent() {
        let db = PackageDb::from_json(
            r#"{ "platform": "test",
                 "packages": { "vim": { "files": ["/usr/bin/vim", "/usr/share/vim/vimrc"] } } }"#,
        )
        .unwrap();
        let graph = load("package { 'vim': ensure => present }").unwrap();
        let mut s = session();
        assert_eq!(
            check_idempotence(&graph, &env_with(&db), &mut s).unwrap(),
            IdempotenceVerdict::Idempotent
        );
        let r = check_determinism(
            &graph,
            &env_with(&db),
            &CheckOptions::default(),
            &mut s,
        )
        .unwrap();
        assert_eq!(r.verdict, DeterminismVerdict::Deterministic);
    }

    #[test]
    fn budget_overflow_is_reported() {
        let src = r#"
            file { '/etc/x1': content => 'a', path => '/etc/x' }
            file { '/etc/x2': content => 'b', path => '/etc/x' }
            file { '/etc/x3': content => 'c', path => '/etc/x' }
            file { '/etc/x4': content => 'd', path => '/etc/x' }
        "#;
        let graph = load(src).unwrap();
        let db = PackageDb::new("test");
        let opts = CheckOptions {
            max_branches: 3,
            ..CheckOptions::default()
        };
        let mut s = session();
        let err = check_determinism(&graph, &env_with(&db), &opts, &mut s).unwrap_err();
        assert!(matches!(err, CheckError::Budget(_)));
    }
}
