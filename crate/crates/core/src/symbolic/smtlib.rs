//! Deterministic SMT-LIB 2 emission for equivalence queries, and parsing of
//! solver models back into concrete assignments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::encode::{interp::StatVal, QueryVocab};
use super::term::BoolTerm;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed model response: {0}")]
    Malformed(String),
    #[error("model does not assign variable {0}")]
    MissingVariable(String),
}

/// A complete query: declarations, assertions, and the variables whose
/// values decode a counterexample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Everything up to (but excluding) `(check-sat)`.
    pub preamble: String,
    /// The declared input variable names, in variable-index order.
    pub var_names: Vec<String>,
}

/// Builds the query script for a vocabulary and a list of assertions.
/// Emission is deterministic: identical inputs produce identical bytes.
pub fn build_query(vocab: &QueryVocab, assertions: &[BoolTerm]) -> Query {
    let mut s = String::new();
    let n_contents = vocab.contents().len() + 1; // + the "other" literal

    let ctor_list: Vec<String> = (0..n_contents).map(|i| format!("(c{i})")).collect();
    for (i, c) in vocab.contents().iter().enumerate() {
        let _ = writeln!(s, "; c{i} = {}", sanitize_comment(c.as_str()));
    }
    let _ = writeln!(s, "; c{} = <any other content>", n_contents - 1);
    let _ = writeln!(
        s,
        "(declare-datatypes ((Content 0)) (({})))",
        ctor_list.join(" ")
    );
    let _ = writeln!(
        s,
        "(declare-datatypes ((Stat 0)) (((dir) (file (content Content)) (dne))))"
    );
    if n_contents > 1 {
        let names: Vec<String> = (0..n_contents).map(|i| format!("c{i}")).collect();
        let _ = writeln!(s, "(assert (distinct {}))", names.join(" "));
    }

    let mut var_names = Vec::with_capacity(vocab.paths().len());
    for (i, p) in vocab.paths().iter().enumerate() {
        let _ = writeln!(s, "; s{i} = {p}");
        let _ = writeln!(s, "(declare-const s{i} Stat)");
        var_names.push(format!("s{i}"));
    }
    for a in assertions {
        let _ = writeln!(s, "(assert {a})");
    }
    Query {
        preamble: s,
        var_names,
    }
}

impl Query {
    /// A standalone script runnable as `z3 file.smt2`, for `--emit-smt`
    /// dumps and golden tests.
    pub fn standalone_script(&self) -> String {
        let mut s = String::from("(set-option :produce-models true)\n");
        s.push_str(&self.preamble);
        s.push_str("(check-sat)\n");
        let _ = writeln!(s, "(get-value ({}))", self.var_names.join(" "));
        s
    }
}

fn sanitize_comment(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .take(120)
        .collect()
}

/// One node of a parsed solver response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Parses a single complete s-expression (or bare atom).
pub fn parse_sexp(src: &str) -> Result<Sexp, ModelError> {
    let mut pos = 0;
    let bytes = src.as_bytes();
    let e = parse_sexp_at(bytes, &mut pos)?;
    Ok(e)
}

fn parse_sexp_at(src: &[u8], pos: &mut usize) -> Result<Sexp, ModelError> {
    skip_ws(src, pos);
    match src.get(*pos) {
        None => Err(ModelError::Malformed("unexpected end".to_string())),
        Some(b'(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(src, pos);
                match src.get(*pos) {
                    Some(b')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_sexp_at(src, pos)?),
                    None => {
                        return Err(ModelError::Malformed("unclosed list".to_string()))
                    }
                }
            }
        }
        Some(b')') => Err(ModelError::Malformed("unexpected ')'".to_string())),
        Some(_) => {
            let start = *pos;
            while *pos < src.len()
                && !src[*pos].is_ascii_whitespace()
                && src[*pos] != b'('
                && src[*pos] != b')'
            {
                *pos += 1;
            }
            Ok(Sexp::Atom(
                String::from_utf8_lossy(&src[start..*pos]).into_owned(),
            ))
        }
    }
}

fn skip_ws(src: &[u8], pos: &mut usize) {
    while let Some(&b) = src.get(*pos) {
        if b.is_ascii_whitespace() {
            *pos += 1;
        } else if b == b';' {
            while *pos < src.len() && src[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

/// Decodes a `(get-value ...)` response into per-variable stat values.
///
/// The response shape is `((s0 dir) (s1 (file c2)) ...)`.
pub fn decode_model(response: &str, var_names: &[String]) -> Result<Vec<StatVal>, ModelError> {
    let sexp = parse_sexp(response)?;
    let Sexp::List(pairs) = sexp else {
        return Err(ModelError::Malformed(response.to_string()));
    };
    let mut by_name: BTreeMap<&str, StatVal> = BTreeMap::new();
    for pair in &pairs {
        let Sexp::List(kv) = pair else {
            return Err(ModelError::Malformed(format!("{pair:?}")));
        };
        let [Sexp::Atom(name), value] = kv.as_slice() else {
            return Err(ModelError::Malformed(format!("{kv:?}")));
        };
        by_name.insert(name.as_str(), decode_stat(value)?);
    }
    var_names
        .iter()
        .map(|n| {
            by_name
                .get(n.as_str())
                .copied()
                .ok_or_else(|| ModelError::MissingVariable(n.clone()))
        })
        .collect()
}

fn decode_stat(v: &Sexp) -> Result<StatVal, ModelError> {
    match v {
        Sexp::Atom(a) if a == "dir" => Ok(StatVal::Dir),
        Sexp::Atom(a) if a == "dne" => Ok(StatVal::Dne),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(f), Sexp::Atom(c)] if f == "file" => {
                let idx = c
                    .strip_prefix('c')
                    .and_then(|n| n.parse::<u32>().ok())
                    .ok_or_else(|| ModelError::Malformed(format!("content {c:?}")))?;
                Ok(StatVal::File(idx))
            }
            // Some solvers wrap constructor values in `(as ... Stat)`.
            [Sexp::Atom(a), inner, _] if a == "as" => decode_stat(inner),
            _ => Err(ModelError::Malformed(format!("{items:?}"))),
        },
        other => Err(ModelError::Malformed(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ContentId, FsExpr, Path};
    use crate::symbolic::dom::dom_bound;
    use crate::symbolic::encode::{encode, input_tree_closure, LogicalState};

    fn demo_query() -> Query {
        let e = FsExpr::CreateFile(Path::parse("/a/f").unwrap(), ContentId::new("hello"));
        let dom = dom_bound(&e);
        let vocab = QueryVocab::for_exprs(&dom, [&e]);
        let init = LogicalState::init(&vocab);
        let out = encode(&e, &init, &vocab);
        build_query(&vocab, &[input_tree_closure(&vocab), out.ok])
    }

    #[test]
    fn emission_is_deterministic() {
        let a = demo_query().standalone_script();
        let b = demo_query().standalone_script();
        assert_eq!(a, b);
        assert!(a.contains("(declare-datatypes ((Content 0)) (((c0) (c1))))"));
        assert!(a.contains("(declare-const s0 Stat)"));
        assert!(a.contains("(check-sat)"));
        assert!(a.ends_with("(get-value (s0 s1 s2))\n"));
    }

    #[test]
    fn model_roundtrip() {
        let resp = "((s0 dir) (s1 (file c1))\n (s2 dne))";
        let names = vec!["s0".to_string(), "s1".to_string(), "s2".to_string()];
        assert_eq!(
            decode_model(resp, &names).unwrap(),
            vec![StatVal::Dir, StatVal::File(1), StatVal::Dne]
        );
        let wrapped = "((s0 (as dne Stat)))";
        assert_eq!(
            decode_model(wrapped, &["s0".to_string()]).unwrap(),
            vec![StatVal::Dne]
        );
        assert!(decode_model("((s0 dir))", &names).is_err());
        assert!(decode_model("sat", &names).is_err());
    }
}
