//! The package database: which files each package installs and which
//! packages it depends on, per platform. Stored as JSON on disk.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::Path;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("package db: {0}")]
    Json(#[from] serde_json::Error),
    #[error("package listing line {line}: {msg}")]
    Listing { line: usize, msg: String },
    #[error("package db: unknown dependency {dep:?} of package {package:?}")]
    UnknownDependency { package: String, dep: String },
    #[error("package db: dependency cycle involving {0:?}")]
    DependencyCycle(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageEntry {
    /// Absolute paths of the regular files the package installs.
    pub files: Vec<String>,
    /// Names of packages that must be installed first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deps: Vec<String>,
}

/// All known packages for one platform.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageDb {
    pub platform: String,
    pub packages: BTreeMap<String, PackageEntry>,
}

impl PackageDb {
    pub fn new(platform: impl Into<String>) -> PackageDb {
        PackageDb {
            platform: platform.into(),
            packages: BTreeMap::new(),
        }
    }

    pub fn from_json(s: &str) -> Result<PackageDb, DbError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("db serializes");
        s.push('\n');
        s
    }

    pub fn get(&self, name: &str) -> Option<&PackageEntry> {
        self.packages.get(name)
    }

    /// The file paths of `name`, parsed. Call [`PackageDb::validate`] first;
    /// invalid paths are skipped here.
    pub fn file_paths(&self, name: &str) -> Vec<Path> {
        self.get(name)
            .map(|e| e.files.iter().filter_map(|f| Path::parse(f).ok()).collect())
            .unwrap_or_default()
    }

    /// `name` plus its transitive dependencies, dependencies first, each
    /// package once.
    pub fn install_order(&self, name: &str) -> Result<Vec<String>, DbError> {
        let mut order = Vec::new();
        let mut done = BTreeSet::new();
        let mut on_stack = BTreeSet::new();
        self.visit(name, &mut order, &mut done, &mut on_stack)?;
        Ok(order)
    }

    fn visit(
        &self,
        name: &str,
        order: &mut Vec<String>,
        done: &mut BTreeSet<String>,
        on_stack: &mut BTreeSet<String>,
    ) -> Result<(), DbError> {
        if done.contains(name) {
            return Ok(());
        }
        if !on_stack.insert(name.to_string()) {
            return Err(DbError::DependencyCycle(name.to_string()));
        }
        let entry = self
            .get(name)
            .ok_or_else(|| DbError::UnknownDependency {
                package: name.to_string(),
                dep: name.to_string(),
            })?;
        for dep in &entry.deps {
            self.visit(dep, order, done, on_stack)?;
        }
        on_stack.remove(name);
        done.insert(name.to_string());
        order.push(name.to_string());
        Ok(())
    }

    /// Packages whose installation (transitively) requires `name`,
    /// excluding `name` itself, in reverse install order.
    pub fn dependents(&self, name: &str) -> Vec<String> {
        let mut out: Vec<String> = self
            .packages
            .keys()
            .filter(|&p| {
                p != name
                    && self
                        .install_order(p)
                        .map(|o| o.iter().any(|q| q == name))
                        .unwrap_or(false)
            })
            .cloned()
            .collect();
        // Most-dependent first so removal order respects dependencies.
        out.sort_by_key(|p| {
            std::cmp::Reverse(self.install_order(p).map(|o| o.len()).unwrap_or(0))
        });
        out
    }

    /// Checks paths parse, dependencies resolve, and there are no cycles.
    pub fn validate(&self) -> Result<(), DbError> {
        for (name, entry) in &self.packages {
            for f in &entry.files {
                Path::parse(f).map_err(|e| DbError::Listing {
                    line: 0,
                    msg: format!("package {name:?}: {e}"),
                })?;
            }
            for dep in &entry.deps {
                if !self.packages.contains_key(dep) {
                    return Err(DbError::UnknownDependency {
                        package: name.clone(),
                        dep: dep.clone(),
                    });
                }
            }
            self.install_order(name)?;
        }
        Ok(())
    }

    /// Adds (or replaces) a package from a plain file listing: one absolute
    /// path per line, `#` comments and blank lines ignored. Paths that are
    /// ancestors of other listed paths are taken to be directories and are
    /// not recorded as files.
    pub fn ingest_package_listing(
        &mut self,
        name: &str,
        listing: &str,
        deps: Vec<String>,
    ) -> Result<(), DbError> {
        let mut paths: Vec<Path> = Vec::new();
        for (i, raw) in listing.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p = Path::parse(line).map_err(|e| DbError::Listing {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if p.is_root() {
                continue;
            }
            paths.push(p);
        }
        paths.sort();
        paths.dedup();
        let files: Vec<String> = paths
            .iter()
            .filter(|p| !paths.iter().any(|q| p.is_ancestor_of(q)))
            .map(|p| p.to_string())
            .collect();
        self.packages
            .insert(name.to_string(), PackageEntry { files, deps });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PackageDb {
        let mut db = PackageDb::new("debian");
        db.ingest_package_listing("perl", "/usr/bin/perl\n/usr/lib/perl/base.pm\n", vec![])
            .unwrap();
        db.ingest_package_listing(
            "golang-go",
            "/usr/bin/go\n/usr/lib/go/bin/go\n",
            vec!["perl".to_string()],
        )
        .unwrap();
        db
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let db = toy();
        let json = db.to_json();
        let back = PackageDb::from_json(&json).unwrap();
        assert_eq!(back, db);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn listing_drops_directories_and_dups() {
        let mut db = PackageDb::new("debian");
        db.ingest_package_listing(
            "p",
            "# comment\n/usr\n/usr/bin\n/usr/bin/p\n/usr/bin/p\n\n/etc/p.conf\n",
            vec![],
        )
        .unwrap();
        assert_eq!(
            db.get("p").unwrap().files,
            vec!["/etc/p.conf".to_string(), "/usr/bin/p".to_string()]
        );
    }

    #[test]
    fn listing_error_carries_line_number() {
        let mut db = PackageDb::new("debian");
        let err = db
            .ingest_package_listing("p", "/ok\nrelative/path\n", vec![])
            .unwrap_err();
        match err {
            DbError::Listing { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn install_order_puts_deps_first() {
        let db = toy();
        assert_eq!(
            db.install_order("golang-go").unwrap(),
            vec!["perl".to_string(), "golang-go".to_string()]
        );
        assert_eq!(db.dependents("perl"), vec!["golang-go".to_string()]);
        assert!(db.dependents("golang-go").is_empty());
    }

    #[test]
    fn validate_catches_unknown_dep_and_cycles() {
        let mut db = toy();
        db.packages.get_mut("perl").unwrap().deps = vec!["nosuch".to_string()];
        assert!(matches!(
            db.validate(),
            Err(DbError::UnknownDependency { .. })
        ));
        db.packages.get_mut("perl").unwrap().deps = vec!["golang-go".to_string()];
        assert!(matches!(db.validate(), Err(DbError::DependencyCycle(_))));
    }
}
