//! Verdict rendering. Text output is for humans and not stable; JSON output
//! carries a schema version and is the machine-readable contract.

use manivet::checker::{
    CheckStats, Counterexample, DeterminismVerdict, IdempotenceCounterexample,
};
use manivet::ir::{EvalResult, FileContent, FileSystem};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

pub fn fs_to_json(fs: &FileSystem) -> Value {
    let mut map = serde_json::Map::new();
    for (p, c) in fs.iter() {
        let v = match c {
            FileContent::Dir => json!("dir"),
            FileContent::File(content) => json!({ "file": content.as_str() }),
        };
        map.insert(p.to_string(), v);
    }
    Value::Object(map)
}

pub fn outcome_to_json(r: &EvalResult) -> Value {
    match r {
        EvalResult::Ok(fs) => json!({ "ok": fs_to_json(fs) }),
        EvalResult::Err => json!("error"),
    }
}

pub fn stats_to_json(s: &CheckStats) -> Value {
    json!({
        "resources": s.resources,
        "eliminated": s.eliminated,
        "modeled_paths": s.modeled_paths,
        "pruned_paths": s.pruned_paths,
        "linearizations": s.linearizations,
        "branches": s.branches,
        "solver_queries": s.solver_queries,
    })
}

pub fn counterexample_to_json(cx: &Counterexample) -> Value {
    json!({
        "input": fs_to_json(&cx.input),
        "order1": cx.order1,
        "order2": cx.order2,
        "outcome1": outcome_to_json(&cx.out1),
        "outcome2": outcome_to_json(&cx.out2),
    })
}

pub fn idem_counterexample_to_json(cx: &IdempotenceCounterexample) -> Value {
    json!({
        "input": fs_to_json(&cx.input),
        "order": cx.order,
        "once": outcome_to_json(&cx.once),
        "twice": outcome_to_json(&cx.twice),
    })
}

fn write_fs(out: &mut String, fs: &FileSystem, indent: &str) {
    for (p, c) in fs.iter() {
        match c {
            FileContent::Dir => out.push_str(&format!("{indent}{p}  (dir)\n")),
            FileContent::File(content) => {
                out.push_str(&format!("{indent}{p}  (file: {:?})\n", content.as_str()))
            }
        }
    }
}

fn write_outcome(out: &mut String, r: &EvalResult, indent: &str) {
    match r {
        EvalResult::Err => out.push_str(&format!("{indent}error\n")),
        EvalResult::Ok(fs) => write_fs(out, fs, indent),
    }
}

pub fn determinism_text(verdict: &DeterminismVerdict, stats: &CheckStats) -> String {
    let mut out = String::new();
    match verdict {
        DeterminismVerdict::Deterministic => {
            out.push_str("deterministic: every application order produces the same result\n");
        }
        DeterminismVerdict::NonDeterministic(cx) => {
            out.push_str("NON-DETERMINISTIC: two application orders disagree\n");
            out.push_str("starting from:\n");
            write_fs(&mut out, &cx.input, "  ");
            out.push_str(&format!("order A: {}\n", cx.order1.join(" -> ")));
            out.push_str("produces:\n");
            write_outcome(&mut out, &cx.out1, "  ");
            out.push_str(&format!("order B: {}\n", cx.order2.join(" -> ")));
            out.push_str("produces:\n");
            write_outcome(&mut out, &cx.out2, "  ");
        }
    }
    out.push_str(&format!(
        "resources: {} ({} eliminated), orders explored: {}, solver queries: {}\n",
        stats.resources, stats.eliminated, stats.linearizations, stats.solver_queries
    ));
    out
}

pub fn idempotence_text(cx: Option<&IdempotenceCounterexample>) -> String {
    match cx {
        None => "idempotent: applying the manifest twice equals applying it once\n".to_string(),
        Some(cx) => {
            let mut out = String::new();
            out.push_str("NOT IDEMPOTENT: a second application changes the result\n");
            out.push_str("starting from:\n");
            write_fs(&mut out, &cx.input, "  ");
            out.push_str(&format!("order: {}\n", cx.order.join(" -> ")));
            out.push_str("one application produces:\n");
            write_outcome(&mut out, &cx.once, "  ");
            out.push_str("two applications produce:\n");
            write_outcome(&mut out, &cx.twice, "  ");
            out
        }
    }
}
