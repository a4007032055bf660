use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::path::Path;

/// An opaque, interned file-content token. Contents are never parsed or
/// concatenated; equality is the only operation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentId(Arc<str>);

impl ContentId {
    pub fn new(s: impl Into<String>) -> ContentId {
        ContentId(Arc::from(s.into().into_boxed_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for ContentId {
    fn from(s: &str) -> ContentId {
        ContentId::new(s)
    }
}

/// Predicates over filesystem states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FsPred {
    True,
    False,
    DoesNotExist(Path),
    IsFile(Path),
    IsDir(Path),
    IsEmptyDir(Path),
    And(Box<FsPred>, Box<FsPred>),
    Or(Box<FsPred>, Box<FsPred>),
    Not(Box<FsPred>),
}

/// The filesystem-operation IR. Loop-free, so every program terminates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FsExpr {
    Skip,
    Error,
    Mkdir(Path),
    CreateFile(Path, ContentId),
    Rm(Path),
    Cp(Path, Path),
    Seq(Box<FsExpr>, Box<FsExpr>),
    If(FsPred, Box<FsExpr>, Box<FsExpr>),
}

impl FsPred {
    pub fn and(a: FsPred, b: FsPred) -> FsPred {
        FsPred::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: FsPred, b: FsPred) -> FsPred {
        FsPred::Or(Box::new(a), Box::new(b))
    }

    // An associated constructor alongside `and`/`or`, not an operator.
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: FsPred) -> FsPred {
        FsPred::Not(Box::new(a))
    }

    /// Paths syntactically mentioned by the predicate.
    pub fn mentioned_paths(&self) -> BTreeSet<Path> {
        let mut out = BTreeSet::new();
        self.collect_paths(&mut out);
        out
    }

    fn collect_paths(&self, out: &mut BTreeSet<Path>) {
        match self {
            FsPred::True | FsPred::False => {}
            FsPred::DoesNotExist(p)
            | FsPred::IsFile(p)
            | FsPred::IsDir(p)
            | FsPred::IsEmptyDir(p) => {
                out.insert(p.clone());
            }
            FsPred::And(a, b) | FsPred::Or(a, b) => {
                a.collect_paths(out);
                b.collect_paths(out);
            }
            FsPred::Not(a) => a.collect_paths(out),
        }
    }
}

impl FsExpr {
    pub fn seq(a: FsExpr, b: FsExpr) -> FsExpr {
        FsExpr::Seq(Box::new(a), Box::new(b))
    }

    /// Right-associated sequence of any number of expressions; `Skip` when empty.
    pub fn seq_all(items: impl IntoIterator<Item = FsExpr>) -> FsExpr {
        let mut items: Vec<FsExpr> = items.into_iter().collect();
        match items.len() {
            0 => FsExpr::Skip,
            _ => {
                let mut acc = items.pop().unwrap();
                while let Some(e) = items.pop() {
                    acc = FsExpr::seq(e, acc);
                }
                acc
            }
        }
    }

    pub fn ite(cond: FsPred, then: FsExpr, els: FsExpr) -> FsExpr {
        FsExpr::If(cond, Box::new(then), Box::new(els))
    }

    /// The guarded make-directory pattern: a no-op when the directory
    /// already exists, an error when a file is in the way.
    pub fn idemdir(p: Path) -> FsExpr {
        FsExpr::ite(
            FsPred::DoesNotExist(p.clone()),
            FsExpr::Mkdir(p.clone()),
            FsExpr::ite(FsPred::IsFile(p), FsExpr::Error, FsExpr::Skip),
        )
    }

    /// Recognizes the exact shape produced by [`FsExpr::idemdir`].
    pub fn as_idemdir(&self) -> Option<&Path> {
        if let FsExpr::If(FsPred::DoesNotExist(p), then, els) = self {
            if let (FsExpr::Mkdir(p2), FsExpr::If(FsPred::IsFile(p3), e_err, e_skip)) =
                (&**then, &**els)
            {
                if p == p2
                    && p == p3
                    && matches!(**e_err, FsExpr::Error)
                    && matches!(**e_skip, FsExpr::Skip)
                {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Paths syntactically occurring in the expression, including copy
    /// sources/targets and predicate paths.
    pub fn mentioned_paths(&self) -> BTreeSet<Path> {
        let mut out = BTreeSet::new();
        self.collect_paths(&mut out);
        out
    }

    fn collect_paths(&self, out: &mut BTreeSet<Path>) {
        match self {
            FsExpr::Skip | FsExpr::Error => {}
            FsExpr::Mkdir(p) | FsExpr::CreateFile(p, _) | FsExpr::Rm(p) => {
                out.insert(p.clone());
            }
            FsExpr::Cp(src, dst) => {
                out.insert(src.clone());
                out.insert(dst.clone());
            }
            FsExpr::Seq(a, b) => {
                a.collect_paths(out);
                b.collect_paths(out);
            }
            FsExpr::If(c, a, b) => {
                c.collect_paths(out);
                a.collect_paths(out);
                b.collect_paths(out);
            }
        }
    }

    /// Paths targeted by an operation anywhere in the expression (copy
    /// destinations, not sources; predicate paths excluded).
    pub fn write_targets(&self) -> BTreeSet<Path> {
        let mut out = BTreeSet::new();
        self.collect_write_targets(&mut out);
        out
    }

    fn collect_write_targets(&self, out: &mut BTreeSet<Path>) {
        match self {
            FsExpr::Skip | FsExpr::Error => {}
            FsExpr::Mkdir(p) | FsExpr::CreateFile(p, _) | FsExpr::Rm(p) => {
                out.insert(p.clone());
            }
            FsExpr::Cp(_, dst) => {
                out.insert(dst.clone());
            }
            FsExpr::Seq(a, b) | FsExpr::If(_, a, b) => {
                a.collect_write_targets(out);
                b.collect_write_targets(out);
            }
        }
    }

    /// Content-ids syntactically occurring in the expression.
    pub fn mentioned_contents(&self) -> BTreeSet<ContentId> {
        let mut out = BTreeSet::new();
        self.collect_contents(&mut out);
        out
    }

    fn collect_contents(&self, out: &mut BTreeSet<ContentId>) {
        match self {
            FsExpr::CreateFile(_, c) => {
                out.insert(c.clone());
            }
            FsExpr::Seq(a, b) => {
                a.collect_contents(out);
                b.collect_contents(out);
            }
            FsExpr::If(_, a, b) => {
                a.collect_contents(out);
                b.collect_contents(out);
            }
            _ => {}
        }
    }

    pub fn size(&self) -> usize {
        match self {
            FsExpr::Skip
            | FsExpr::Error
            | FsExpr::Mkdir(_)
            | FsExpr::CreateFile(_, _)
            | FsExpr::Rm(_)
            | FsExpr::Cp(_, _) => 1,
            FsExpr::Seq(a, b) => 1 + a.size() + b.size(),
            FsExpr::If(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    #[test]
    fn mentioned_paths_cases() {
        assert!(FsExpr::Skip.mentioned_paths().is_empty());
        assert_eq!(
            FsExpr::Mkdir(p("/a/b")).mentioned_paths(),
            [p("/a/b")].into_iter().collect()
        );
        let e = FsExpr::ite(FsPred::IsEmptyDir(p("/a")), FsExpr::Skip, FsExpr::Error);
        assert_eq!(e.mentioned_paths(), [p("/a")].into_iter().collect());
        let cp = FsExpr::Cp(p("/src"), p("/dst"));
        assert_eq!(
            cp.mentioned_paths(),
            [p("/src"), p("/dst")].into_iter().collect()
        );
    }

    #[test]
    fn idemdir_roundtrip() {
        let e = FsExpr::idemdir(p("/a"));
        assert_eq!(e.as_idemdir(), Some(&p("/a")));
        let not = FsExpr::ite(
            FsPred::DoesNotExist(p("/a")),
            FsExpr::Mkdir(p("/b")),
            FsExpr::Skip,
        );
        assert_eq!(not.as_idemdir(), None);
    }
}
