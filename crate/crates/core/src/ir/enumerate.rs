//! Brute-force enumeration of small filesystems, used as the independent
//! oracle for equivalence checking.

use std::collections::BTreeSet;

use thiserror::Error;

use super::expr::{ContentId, FsExpr};
use super::fs::{eval, FileContent, FileSystem};
use super::path::{parent_closure, Path};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("path set is not parent-closed: missing parent of {0}")]
    NotParentClosed(Path),
}

/// Yields every tree-closed filesystem whose domain is a subset of `paths`
/// and whose file contents are drawn from `contents`.
///
/// `paths` must be parent-closed. The root, when present, is always a
/// directory. The stream is finite and deterministic.
pub fn enumerate_filesystems(
    paths: &BTreeSet<Path>,
    contents: &BTreeSet<ContentId>,
) -> Result<Vec<FileSystem>, EnumerateError> {
    for p in paths {
        if let Some(parent) = p.parent() {
            if !paths.contains(&parent) {
                return Err(EnumerateError::NotParentClosed(p.clone()));
            }
        }
    }
    // BTreeSet iteration yields parents before children (prefix order), so a
    // single left-to-right sweep can check the parent constraint.
    let ordered: Vec<&Path> = paths.iter().collect();
    let contents: Vec<&ContentId> = contents.iter().collect();
    let mut out = Vec::new();
    let mut partial: Vec<Option<FileContent>> = Vec::with_capacity(ordered.len());
    enumerate_rec(&ordered, &contents, &mut partial, &mut out);
    Ok(out)
}

fn enumerate_rec(
    ordered: &[&Path],
    contents: &[&ContentId],
    partial: &mut Vec<Option<FileContent>>,
    out: &mut Vec<FileSystem>,
) {
    let idx = partial.len();
    if idx == ordered.len() {
        let fs = FileSystem::from_entries(
            ordered
                .iter()
                .zip(partial.iter())
                .filter_map(|(p, v)| v.clone().map(|v| ((*p).clone(), v))),
        )
        .expect("enumeration preserves tree-closure");
        out.push(fs);
        return;
    }
    let p = ordered[idx];
    let parent_is_dir = match p.parent() {
        None => true,
        Some(parent) => {
            let pi = ordered
                .iter()
                .position(|q| **q == parent)
                .expect("parent-closed");
            partial[pi] == Some(FileContent::Dir)
        }
    };

    partial.push(None);
    enumerate_rec(ordered, contents, partial, out);
    partial.pop();

    if parent_is_dir {
        partial.push(Some(FileContent::Dir));
        enumerate_rec(ordered, contents, partial, out);
        partial.pop();

        if !p.is_root() {
            for c in contents {
                partial.push(Some(FileContent::File((*c).clone())));
                enumerate_rec(ordered, contents, partial, out);
                partial.pop();
            }
        }
    }
}

/// Brute-force equivalence: true iff both expressions produce the same
/// output (or both error) on every enumerated input filesystem.
///
/// `paths` must cover the mentioned paths of both expressions and be
/// parent-closed; callers typically pass the symbolic domain bound so the
/// oracle sees the same inputs the solver does.
pub fn oracle_equiv(
    e1: &FsExpr,
    e2: &FsExpr,
    paths: &BTreeSet<Path>,
    contents: &BTreeSet<ContentId>,
) -> Result<bool, EnumerateError> {
    for fs in enumerate_filesystems(paths, contents)? {
        if eval(e1, &fs) != eval(e2, &fs) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convenience wrapper that closes the path set under parents first.
pub fn oracle_equiv_closed(
    e1: &FsExpr,
    e2: &FsExpr,
    paths: impl IntoIterator<Item = Path>,
    contents: &BTreeSet<ContentId>,
) -> bool {
    let closed = parent_closure(paths);
    oracle_equiv(e1, e2, &closed, contents).expect("closed set is parent-closed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::expr::FsPred;

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    #[test]
    fn enumerate_root_only() {
        let paths: BTreeSet<Path> = [Path::root()].into_iter().collect();
        let states = enumerate_filesystems(&paths, &BTreeSet::new()).unwrap();
        assert_eq!(states.len(), 2);
        assert!(states.contains(&FileSystem::empty()));
        assert!(states.contains(&FileSystem::with_root()));
    }

    #[test]
    fn enumerate_root_and_child() {
        let paths: BTreeSet<Path> = [Path::root(), p("/a")].into_iter().collect();
        let contents: BTreeSet<ContentId> = [ContentId::new("c")].into_iter().collect();
        let states = enumerate_filesystems(&paths, &contents).unwrap();
        assert_eq!(states.len(), 4);
    }

    #[test]
    fn enumerate_empty_paths() {
        let states = enumerate_filesystems(&BTreeSet::new(), &BTreeSet::new()).unwrap();
        assert_eq!(states, vec![FileSystem::empty()]);
    }

    #[test]
    fn rejects_non_parent_closed() {
        let paths: BTreeSet<Path> = [p("/a/b")].into_iter().collect();
        assert!(enumerate_filesystems(&paths, &BTreeSet::new()).is_err());
    }

    #[test]
    fn oracle_trivial() {
        assert!(oracle_equiv_closed(
            &FsExpr::Skip,
            &FsExpr::Skip,
            [p("/a")],
            &BTreeSet::new()
        ));
    }

    // The emptiness test and the directory test differ only on inputs with
    // a child inside /a; the oracle must see such a path to notice.
    #[test]
    fn oracle_isempty_vs_isdir() {
        let e1 = FsExpr::ite(FsPred::IsEmptyDir(p("/a")), FsExpr::Skip, FsExpr::Error);
        let e2 = FsExpr::ite(FsPred::IsDir(p("/a")), FsExpr::Skip, FsExpr::Error);
        let contents: BTreeSet<ContentId> = [ContentId::new("c")].into_iter().collect();
        assert!(!oracle_equiv_closed(
            &e1,
            &e2,
            [p("/a"), p("/a/x")],
            &contents
        ));
        // Without a witness path inside /a the difference is invisible.
        assert!(oracle_equiv_closed(&e1, &e2, [p("/a")], &contents));
    }
}
