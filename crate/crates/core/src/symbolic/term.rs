//! Term language for the logical encoding: file stats as a three-constructor
//! datatype (`dir`, `file c`, `dne`) over a finite content enumeration, plus
//! the boolean formulas built from testers and equalities.

use std::fmt;
use std::sync::Arc;

/// A term of the stat sort.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StatTerm {
    /// A declared input variable, by index into the query's variable table.
    Var(u32),
    Dir,
    File(ContentTerm),
    Dne,
    Ite(Box<BoolTerm>, Box<StatTerm>, Box<StatTerm>),
}

/// A term of the content sort.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ContentTerm {
    /// A known content literal, by index into the query's content table.
    Lit(u32),
    /// `(content s)` — the content field of a stat known to be a file.
    Of(Box<StatTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolTerm {
    True,
    False,
    IsDir(Arc<StatTerm>),
    IsFile(Arc<StatTerm>),
    IsDne(Arc<StatTerm>),
    StatEq(Arc<StatTerm>, Arc<StatTerm>),
    And(Arc<BoolTerm>, Arc<BoolTerm>),
    Or(Arc<BoolTerm>, Arc<BoolTerm>),
    Not(Arc<BoolTerm>),
    Ite(Arc<BoolTerm>, Arc<BoolTerm>, Arc<BoolTerm>),
}

impl StatTerm {
    pub fn ite(c: BoolTerm, t: StatTerm, e: StatTerm) -> StatTerm {
        match c {
            BoolTerm::True => t,
            BoolTerm::False => e,
            _ if t == e => t,
            c => StatTerm::Ite(Box::new(c), Box::new(t), Box::new(e)),
        }
    }
}

impl BoolTerm {
    pub fn is_dir(s: StatTerm) -> BoolTerm {
        match s {
            StatTerm::Dir => BoolTerm::True,
            StatTerm::File(_) | StatTerm::Dne => BoolTerm::False,
            s => BoolTerm::IsDir(Arc::new(s)),
        }
    }

    pub fn is_file(s: StatTerm) -> BoolTerm {
        match s {
            StatTerm::File(_) => BoolTerm::True,
            StatTerm::Dir | StatTerm::Dne => BoolTerm::False,
            s => BoolTerm::IsFile(Arc::new(s)),
        }
    }

    pub fn is_dne(s: StatTerm) -> BoolTerm {
        match s {
            StatTerm::Dne => BoolTerm::True,
            StatTerm::Dir | StatTerm::File(_) => BoolTerm::False,
            s => BoolTerm::IsDne(Arc::new(s)),
        }
    }

    pub fn stat_eq(a: StatTerm, b: StatTerm) -> BoolTerm {
        match (&a, &b) {
            _ if a == b => BoolTerm::True,
            (StatTerm::Dir, StatTerm::Dne)
            | (StatTerm::Dne, StatTerm::Dir)
            | (StatTerm::Dir, StatTerm::File(_))
            | (StatTerm::File(_), StatTerm::Dir)
            | (StatTerm::Dne, StatTerm::File(_))
            | (StatTerm::File(_), StatTerm::Dne) => BoolTerm::False,
            _ => BoolTerm::StatEq(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn and(a: BoolTerm, b: BoolTerm) -> BoolTerm {
        match (&a, &b) {
            (BoolTerm::False, _) | (_, BoolTerm::False) => BoolTerm::False,
            (BoolTerm::True, _) => b,
            (_, BoolTerm::True) => a,
            _ => BoolTerm::And(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn or(a: BoolTerm, b: BoolTerm) -> BoolTerm {
        match (&a, &b) {
            (BoolTerm::True, _) | (_, BoolTerm::True) => BoolTerm::True,
            (BoolTerm::False, _) => b,
            (_, BoolTerm::False) => a,
            _ => BoolTerm::Or(Arc::new(a), Arc::new(b)),
        }
    }

    // An associated constructor alongside `and`/`or`, not an operator.
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: BoolTerm) -> BoolTerm {
        match a {
            BoolTerm::True => BoolTerm::False,
            BoolTerm::False => BoolTerm::True,
            BoolTerm::Not(inner) => (*inner).clone(),
            a => BoolTerm::Not(Arc::new(a)),
        }
    }

    pub fn ite(c: BoolTerm, t: BoolTerm, e: BoolTerm) -> BoolTerm {
        match c {
            BoolTerm::True => t,
            BoolTerm::False => e,
            _ if t == e => t,
            c => match (&t, &e) {
                (BoolTerm::True, BoolTerm::False) => c,
                (BoolTerm::False, BoolTerm::True) => BoolTerm::not(c),
                _ => BoolTerm::Ite(Arc::new(c), Arc::new(t), Arc::new(e)),
            },
        }
    }

    pub fn and_all(items: impl IntoIterator<Item = BoolTerm>) -> BoolTerm {
        items.into_iter().fold(BoolTerm::True, BoolTerm::and)
    }

    pub fn or_all(items: impl IntoIterator<Item = BoolTerm>) -> BoolTerm {
        items.into_iter().fold(BoolTerm::False, BoolTerm::or)
    }
}

impl fmt::Display for StatTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatTerm::Var(i) => write!(f, "s{i}"),
            StatTerm::Dir => write!(f, "dir"),
            StatTerm::File(c) => write!(f, "(file {c})"),
            StatTerm::Dne => write!(f, "dne"),
            StatTerm::Ite(c, t, e) => write!(f, "(ite {c} {t} {e})"),
        }
    }
}

impl fmt::Display for ContentTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContentTerm::Lit(i) => write!(f, "c{i}"),
            ContentTerm::Of(s) => write!(f, "(content {s})"),
        }
    }
}

impl fmt::Display for BoolTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolTerm::True => write!(f, "true"),
            BoolTerm::False => write!(f, "false"),
            BoolTerm::IsDir(s) => write!(f, "((_ is dir) {s})"),
            BoolTerm::IsFile(s) => write!(f, "((_ is file) {s})"),
            BoolTerm::IsDne(s) => write!(f, "((_ is dne) {s})"),
            BoolTerm::StatEq(a, b) => write!(f, "(= {a} {b})"),
            BoolTerm::And(a, b) => write!(f, "(and {a} {b})"),
            BoolTerm::Or(a, b) => write!(f, "(or {a} {b})"),
            BoolTerm::Not(a) => write!(f, "(not {a})"),
            BoolTerm::Ite(c, t, e) => write!(f, "(ite {c} {t} {e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplification() {
        assert_eq!(BoolTerm::and(BoolTerm::True, BoolTerm::False), BoolTerm::False);
        assert_eq!(BoolTerm::not(BoolTerm::not(BoolTerm::is_dir(StatTerm::Var(0)))), BoolTerm::is_dir(StatTerm::Var(0)));
        assert_eq!(BoolTerm::is_file(StatTerm::Dir), BoolTerm::False);
        assert_eq!(
            BoolTerm::stat_eq(StatTerm::Dir, StatTerm::Dne),
            BoolTerm::False
        );
        assert_eq!(
            StatTerm::ite(BoolTerm::is_dne(StatTerm::Var(1)), StatTerm::Dir, StatTerm::Dir),
            StatTerm::Dir
        );
    }

    #[test]
    fn display_is_smtlib() {
        let t = BoolTerm::and(
            BoolTerm::is_dir(StatTerm::Var(0)),
            BoolTerm::stat_eq(StatTerm::Var(1), StatTerm::File(ContentTerm::Lit(2))),
        );
        assert_eq!(
            t.to_string(),
            "(and ((_ is dir) s0) (= s1 (file c2)))"
        );
    }
}
