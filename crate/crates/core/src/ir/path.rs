use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A canonical absolute path: a list of non-empty segments rooted at `/`.
///
/// Two paths are equal iff their segment lists are equal. There is no
/// notion of `.`, `..`, or trailing separators.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    segments: Arc<Vec<String>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("path must be absolute (start with '/'): {0:?}")]
    NotAbsolute(String),
    #[error("path contains an empty, '.' or '..' segment: {0:?}")]
    BadSegment(String),
}

impl Path {
    pub fn root() -> Path {
        Path {
            segments: Arc::new(Vec::new()),
        }
    }

    pub fn from_segments<I, S>(segments: I) -> Result<Path, PathError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segs: Vec<String> = segments.into_iter().map(Into::into).collect();
        for s in &segs {
            if s.is_empty() || s == "." || s == ".." || s.contains('/') {
                return Err(PathError::BadSegment(s.clone()));
            }
        }
        Ok(Path {
            segments: Arc::new(segs),
        })
    }

    /// Parses an absolute path string such as `/usr/bin/vim`.
    pub fn parse(s: &str) -> Result<Path, PathError> {
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| PathError::NotAbsolute(s.to_string()))?;
        if rest.is_empty() {
            return Ok(Path::root());
        }
        // A trailing slash is tolerated ("/a/" == "/a"); interior empty
        // segments are not.
        let rest = rest.strip_suffix('/').unwrap_or(rest);
        let segs: Vec<&str> = rest.split('/').collect();
        for seg in &segs {
            if seg.is_empty() || *seg == "." || *seg == ".." {
                return Err(PathError::BadSegment(s.to_string()));
            }
        }
        Path::from_segments(segs)
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn depth(&self) -> usize {
        self.segments.len()
    }

    /// The parent path; `None` for the root.
    pub fn parent(&self) -> Option<Path> {
        if self.is_root() {
            return None;
        }
        Some(Path {
            segments: Arc::new(self.segments[..self.segments.len() - 1].to_vec()),
        })
    }

    pub fn child(&self, segment: &str) -> Path {
        let mut segs = (*self.segments).clone();
        segs.push(segment.to_string());
        Path {
            segments: Arc::new(segs),
        }
    }

    pub fn last_segment(&self) -> Option<&str> {
        self.segments.last().map(|s| s.as_str())
    }

    /// True when `self` is the immediate parent of `other`.
    pub fn is_parent_of(&self, other: &Path) -> bool {
        other.depth() == self.depth() + 1 && other.segments[..self.depth()] == self.segments[..]
    }

    /// True when `self` is a proper ancestor of `other`.
    pub fn is_ancestor_of(&self, other: &Path) -> bool {
        other.depth() > self.depth() && other.segments[..self.depth()] == self.segments[..]
    }

    /// All ancestors from the root down to (and excluding) `self`.
    pub fn ancestors(&self) -> Vec<Path> {
        let mut out = Vec::with_capacity(self.depth());
        for k in 0..self.depth() {
            out.push(Path {
                segments: Arc::new(self.segments[..k].to_vec()),
            });
        }
        out
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, "/");
        }
        for seg in self.segments.iter() {
            write!(f, "/{seg}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Closes a path set under `parent`.
pub fn parent_closure(
    paths: impl IntoIterator<Item = Path>,
) -> std::collections::BTreeSet<Path> {
    let mut out = std::collections::BTreeSet::new();
    for p in paths {
        for a in p.ancestors() {
            out.insert(a);
        }
        out.insert(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!(Path::parse("/").unwrap(), Path::root());
        let p = Path::parse("/a/b").unwrap();
        assert_eq!(p.to_string(), "/a/b");
        assert_eq!(p.parent().unwrap().to_string(), "/a");
        assert_eq!(Path::root().parent(), None);
        assert!(Path::parse("a/b").is_err());
        assert!(Path::parse("/a//b").is_err());
        assert!(Path::parse("/a/../b").is_err());
    }

    #[test]
    fn ancestry() {
        let p = Path::parse("/a/b/c").unwrap();
        let a = Path::parse("/a").unwrap();
        assert!(a.is_ancestor_of(&p));
        assert!(!a.is_parent_of(&p));
        assert!(Path::parse("/a/b").unwrap().is_parent_of(&p));
        assert_eq!(
            p.ancestors(),
            vec![
                Path::root(),
                Path::parse("/a").unwrap(),
                Path::parse("/a/b").unwrap()
            ]
        );
    }

    #[test]
    fn closure_contains_root() {
        let set = parent_closure([Path::parse("/a/b").unwrap()]);
        assert!(set.contains(&Path::root()));
        assert_eq!(set.len(), 3);
    }
}
