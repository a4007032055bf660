use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::expr::{ContentId, FsExpr, FsPred};
use super::path::Path;

/// What a path maps to: a directory, or a file with an opaque content token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FileContent {
    Dir,
    File(ContentId),
}

/// A finite map from paths to contents, closed under the tree invariant:
/// every non-root member's parent is present and is a directory.
///
/// The root, when present, is always a directory.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FileSystem {
    map: BTreeMap<Path, FileContent>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FileSystemError {
    #[error("parent of {0} is absent or not a directory")]
    BrokenTree(Path),
    #[error("root cannot be a file")]
    RootIsFile,
}

impl FileSystem {
    /// The empty filesystem (not even the root directory exists).
    pub fn empty() -> FileSystem {
        FileSystem::default()
    }

    /// A filesystem containing just the root directory.
    pub fn with_root() -> FileSystem {
        let mut map = BTreeMap::new();
        map.insert(Path::root(), FileContent::Dir);
        FileSystem { map }
    }

    /// Builds a filesystem from entries, validating tree-closure.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (Path, FileContent)>,
    ) -> Result<FileSystem, FileSystemError> {
        let map: BTreeMap<Path, FileContent> = entries.into_iter().collect();
        let fs = FileSystem { map };
        fs.check_tree_closure()?;
        Ok(fs)
    }

    pub fn check_tree_closure(&self) -> Result<(), FileSystemError> {
        for p in self.map.keys() {
            if p.is_root() {
                if self.map[p] != FileContent::Dir {
                    return Err(FileSystemError::RootIsFile);
                }
                continue;
            }
            let parent = p.parent().unwrap();
            if self.map.get(&parent) != Some(&FileContent::Dir) {
                return Err(FileSystemError::BrokenTree(p.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, p: &Path) -> Option<&FileContent> {
        self.map.get(p)
    }

    pub fn contains(&self, p: &Path) -> bool {
        self.map.contains_key(p)
    }

    pub fn is_dir(&self, p: &Path) -> bool {
        self.map.get(p) == Some(&FileContent::Dir)
    }

    pub fn is_file(&self, p: &Path) -> bool {
        matches!(self.map.get(p), Some(FileContent::File(_)))
    }

    pub fn has_child(&self, p: &Path) -> bool {
        self.map
            .range(p.clone()..)
            .skip(1)
            .take_while(|(q, _)| p.is_ancestor_of(q))
            .any(|(q, _)| p.is_parent_of(q))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &FileContent)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn with(&self, p: Path, v: FileContent) -> FileSystem {
        let mut map = self.map.clone();
        map.insert(p, v);
        FileSystem { map }
    }

    fn without(&self, p: &Path) -> FileSystem {
        let mut map = self.map.clone();
        map.remove(p);
        FileSystem { map }
    }
}

impl fmt::Debug for FileSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (p, v) in &self.map {
            match v {
                FileContent::Dir => m.entry(&format_args!("{p}"), &"dir"),
                FileContent::File(c) => m.entry(&format_args!("{p}"), &format_args!("file({c})")),
            };
        }
        m.finish()
    }
}

/// Evaluation outcome: a new filesystem, or the error state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EvalResult {
    Ok(FileSystem),
    Err,
}

impl EvalResult {
    pub fn ok(self) -> Option<FileSystem> {
        match self {
            EvalResult::Ok(fs) => Some(fs),
            EvalResult::Err => None,
        }
    }

    pub fn is_err(&self) -> bool {
        matches!(self, EvalResult::Err)
    }
}

/// Denotation of a predicate on a tree-closed filesystem. Total.
pub fn eval_pred(pred: &FsPred, fs: &FileSystem) -> bool {
    match pred {
        FsPred::True => true,
        FsPred::False => false,
        FsPred::DoesNotExist(p) => !fs.contains(p),
        FsPred::IsFile(p) => fs.is_file(p),
        FsPred::IsDir(p) => fs.is_dir(p),
        FsPred::IsEmptyDir(p) => fs.is_dir(p) && !fs.has_child(p),
        FsPred::And(a, b) => eval_pred(a, fs) && eval_pred(b, fs),
        FsPred::Or(a, b) => eval_pred(a, fs) || eval_pred(b, fs),
        FsPred::Not(a) => !eval_pred(a, fs),
    }
}

/// Concrete denotational evaluator.
///
/// Mkdir and CreateFile require the parent to be a directory and the target
/// absent; Rm requires a file or an empty directory (removing the root is an
/// error); Cp requires a file source, a directory destination parent, and an
/// absent destination. Seq short-circuits on error.
pub fn eval(expr: &FsExpr, fs: &FileSystem) -> EvalResult {
    match expr {
        FsExpr::Skip => EvalResult::Ok(fs.clone()),
        FsExpr::Error => EvalResult::Err,
        FsExpr::Mkdir(p) => match p.parent() {
            Some(parent) if fs.is_dir(&parent) && !fs.contains(p) => {
                EvalResult::Ok(fs.with(p.clone(), FileContent::Dir))
            }
            _ => EvalResult::Err,
        },
        FsExpr::CreateFile(p, c) => match p.parent() {
            Some(parent) if fs.is_dir(&parent) && !fs.contains(p) => {
                EvalResult::Ok(fs.with(p.clone(), FileContent::File(c.clone())))
            }
            _ => EvalResult::Err,
        },
        FsExpr::Rm(p) => {
            if p.is_root() {
                return EvalResult::Err;
            }
            if fs.is_file(p) || (fs.is_dir(p) && !fs.has_child(p)) {
                EvalResult::Ok(fs.without(p))
            } else {
                EvalResult::Err
            }
        }
        FsExpr::Cp(src, dst) => {
            let content = match fs.get(src) {
                Some(FileContent::File(c)) => c.clone(),
                _ => return EvalResult::Err,
            };
            match dst.parent() {
                Some(parent) if fs.is_dir(&parent) && !fs.contains(dst) => {
                    EvalResult::Ok(fs.with(dst.clone(), FileContent::File(content)))
                }
                _ => EvalResult::Err,
            }
        }
        FsExpr::Seq(a, b) => match eval(a, fs) {
            EvalResult::Ok(fs2) => eval(b, &fs2),
            EvalResult::Err => EvalResult::Err,
        },
        FsExpr::If(cond, then, els) => {
            if eval_pred(cond, fs) {
                eval(then, fs)
            } else {
                eval(els, fs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    fn fs(entries: &[(&str, Option<&str>)]) -> FileSystem {
        FileSystem::from_entries(entries.iter().map(|(path, c)| {
            (
                p(path),
                match c {
                    None => FileContent::Dir,
                    Some(c) => FileContent::File(ContentId::new(*c)),
                },
            )
        }))
        .unwrap()
    }

    #[test]
    fn pred_examples() {
        let f = fs(&[("/", None), ("/a", None)]);
        assert!(eval_pred(&FsPred::IsDir(p("/a")), &f));

        let f2 = fs(&[("/", None), ("/a", None), ("/a/b", Some("x"))]);
        assert!(!eval_pred(&FsPred::IsEmptyDir(p("/a")), &f2));
        assert!(eval_pred(&FsPred::IsEmptyDir(p("/a")), &f));

        let f3 = fs(&[("/", None)]);
        assert!(!eval_pred(
            &FsPred::not(FsPred::DoesNotExist(p("/a"))),
            &f3
        ));
    }

    #[test]
    fn skip_is_identity() {
        let f = fs(&[("/", None), ("/a", None)]);
        assert_eq!(eval(&FsExpr::Skip, &f), EvalResult::Ok(f));
    }

    #[test]
    fn cp_then_rm_fails_second_time() {
        let f = fs(&[("/", None), ("/src", Some("c"))]);
        let e = FsExpr::seq(FsExpr::Cp(p("/src"), p("/dst")), FsExpr::Rm(p("/src")));
        let once = eval(&e, &f).ok().expect("first run succeeds");
        assert!(once.is_file(&p("/dst")));
        assert!(!once.contains(&p("/src")));
        assert_eq!(eval(&e, &once), EvalResult::Err);
    }

    #[test]
    fn mkdir_requires_parent() {
        let f = fs(&[("/", None)]);
        assert_eq!(eval(&FsExpr::Mkdir(p("/a/b")), &f), EvalResult::Err);
        let ok = eval(&FsExpr::Mkdir(p("/a")), &f).ok().unwrap();
        assert!(ok.is_dir(&p("/a")));
    }

    #[test]
    fn rm_root_is_error() {
        let f = fs(&[("/", None)]);
        assert_eq!(eval(&FsExpr::Rm(Path::root()), &f), EvalResult::Err);
    }

    #[test]
    fn rm_nonempty_dir_is_error() {
        let f = fs(&[("/", None), ("/a", None), ("/a/b", Some("x"))]);
        assert_eq!(eval(&FsExpr::Rm(p("/a")), &f), EvalResult::Err);
        let ok = eval(&FsExpr::Rm(p("/a/b")), &f).ok().unwrap();
        assert!(eval(&FsExpr::Rm(p("/a")), &ok).ok().is_some());
    }
}
