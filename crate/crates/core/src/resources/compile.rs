//! Compilation of primitive resources to filesystem-operation expressions.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ir::{ContentId, FsExpr, FsPred, Path};
use crate::manifest::{PrimitiveResource, ResourceValue};

use super::db::{DbError, PackageDb};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("line {line}: {resource}: {msg}")]
    InvalidAttributes {
        line: u32,
        resource: String,
        msg: String,
    },
    #[error("line {line}: unknown package {name:?} on platform {platform:?}")]
    UnknownPackage {
        line: u32,
        name: String,
        platform: String,
    },
    #[error(transparent)]
    Db(#[from] DbError),
}

/// Context shared by all compilations of one manifest.
pub struct CompileEnv<'a> {
    pub db: &'a PackageDb,
}

/// Attributes accepted on any resource but irrelevant to the filesystem
/// behavior we model.
const IGNORED_ATTRS: &[&str] = &["mode", "owner", "group", "backup", "recurse", "purge"];

pub fn compile_resource(
    r: &PrimitiveResource,
    env: &CompileEnv<'_>,
) -> Result<FsExpr, CompileError> {
    match r.rtype.as_str() {
        "file" => compile_file(r),
        "package" => compile_package(r, env.db),
        "user" => compile_flat_entry(r, "/etc/users", "user"),
        "group" => compile_flat_entry(r, "/etc/groups", "group"),
        "ssh_authorized_key" => compile_ssh_key(r),
        other => Err(invalid(r, format!("unsupported resource type {other:?}"))),
    }
}

fn invalid(r: &PrimitiveResource, msg: impl Into<String>) -> CompileError {
    CompileError::InvalidAttributes {
        line: r.line,
        resource: r.label(),
        msg: msg.into(),
    }
}

fn str_attr<'r>(
    r: &'r PrimitiveResource,
    name: &str,
) -> Result<Option<&'r str>, CompileError> {
    match r.attrs.get(name) {
        None => Ok(None),
        Some(ResourceValue::Str(s)) => Ok(Some(s)),
        Some(other) => Err(invalid(
            r,
            format!("attribute {name} must be a string, found {}", other.kind()),
        )),
    }
}

fn bool_attr(r: &PrimitiveResource, name: &str) -> Result<bool, CompileError> {
    match str_attr(r, name)? {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(invalid(
            r,
            format!("attribute {name} must be true or false, found {other:?}"),
        )),
    }
}

fn check_attrs(r: &PrimitiveResource, allowed: &[&str]) -> Result<(), CompileError> {
    for name in r.attrs.keys() {
        if !allowed.contains(&name.as_str()) && !IGNORED_ATTRS.contains(&name.as_str()) {
            return Err(invalid(r, format!("unknown attribute {name:?}")));
        }
    }
    Ok(())
}

/// Creates `p` with content `c`, replacing an existing file; errors if `p`
/// is a directory.
fn overwrite_create(p: &Path, c: ContentId) -> FsExpr {
    FsExpr::ite(
        FsPred::IsFile(p.clone()),
        FsExpr::seq(FsExpr::Rm(p.clone()), FsExpr::CreateFile(p.clone(), c.clone())),
        FsExpr::ite(
            FsPred::DoesNotExist(p.clone()),
            FsExpr::CreateFile(p.clone(), c),
            FsExpr::Error,
        ),
    )
}

/// Removes a file; a no-op if absent, an error if `p` is a directory.
fn remove_file(p: &Path) -> FsExpr {
    FsExpr::ite(
        FsPred::IsFile(p.clone()),
        FsExpr::Rm(p.clone()),
        FsExpr::ite(FsPred::DoesNotExist(p.clone()), FsExpr::Skip, FsExpr::Error),
    )
}

/// Guarded mkdirs for every directory in `dirs`, shallowest first.
fn idemdirs(dirs: &BTreeSet<Path>) -> Vec<FsExpr> {
    dirs.iter()
        .filter(|d| !d.is_root())
        .map(|d| FsExpr::idemdir(d.clone()))
        .collect()
}

fn ancestors_of<'a>(paths: impl IntoIterator<Item = &'a Path>) -> BTreeSet<Path> {
    let mut out = BTreeSet::new();
    for p in paths {
        out.extend(p.ancestors());
    }
    out
}

fn compile_file(r: &PrimitiveResource) -> Result<FsExpr, CompileError> {
    check_attrs(r, &["ensure", "content", "source", "force", "path"])?;
    let path_str = str_attr(r, "path")?.unwrap_or(&r.title);
    let p = Path::parse(path_str)
        .map_err(|e| invalid(r, format!("file path: {e}")))?;
    if p.is_root() {
        return Err(invalid(r, "cannot manage the filesystem root"));
    }
    let content = str_attr(r, "content")?;
    let source = str_attr(r, "source")?;
    let ensure = str_attr(r, "ensure")?.unwrap_or(if content.is_some() || source.is_some() {
        "file"
    } else {
        "present"
    });

    match ensure {
        "absent" => {
            if content.is_some() || source.is_some() {
                return Err(invalid(r, "absent file cannot have content or source"));
            }
            if bool_attr(r, "force")? {
                // With force, an empty directory is removed too; a non-empty
                // one still errors under Rm.
                Ok(FsExpr::ite(
                    FsPred::DoesNotExist(p.clone()),
                    FsExpr::Skip,
                    FsExpr::Rm(p),
                ))
            } else {
                Ok(remove_file(&p))
            }
        }
        "directory" => {
            if content.is_some() || source.is_some() {
                return Err(invalid(r, "directory cannot have content or source"));
            }
            Ok(FsExpr::idemdir(p))
        }
        "present" | "file" => match (content, source) {
            (Some(_), Some(_)) => Err(invalid(r, "content and source are mutually exclusive")),
            (Some(c), None) => Ok(overwrite_create(&p, ContentId::new(c))),
            (None, Some(src)) => {
                let src = Path::parse(src)
                    .map_err(|e| invalid(r, format!("source path: {e}")))?;
                Ok(FsExpr::ite(
                    FsPred::IsFile(p.clone()),
                    FsExpr::seq(FsExpr::Rm(p.clone()), FsExpr::Cp(src.clone(), p.clone())),
                    FsExpr::ite(
                        FsPred::DoesNotExist(p.clone()),
                        FsExpr::Cp(src, p),
                        FsExpr::Error,
                    ),
                ))
            }
            (None, None) => Ok(overwrite_create(&p, ContentId::new(""))),
        },
        other => Err(invalid(r, format!("unknown ensure value {other:?}"))),
    }
}

/// The sentinel file recording that a package is installed.
pub fn package_sentinel(name: &str) -> Path {
    Path::root()
        .child("var")
        .child("db")
        .child("pkgs")
        .child(name)
}

fn package_file_content(pkg: &str, path: &Path) -> ContentId {
    ContentId::new(format!("pkg:{pkg}:{path}"))
}

/// Installs a package: if the package's own sentinel is absent, create
/// directories and files for the package *and its whole dependency chain*,
/// then drop the sentinels; otherwise do nothing at all.
///
/// The single outer guard mirrors how a real package manager decides: it
/// checks whether the requested package is registered and, if so, assumes
/// the dependencies it pulled in are still there. That check-then-act gap is
/// what makes remove-dependency-then-install manifests flip between states
/// on repeated runs, and modeling it is what lets the idempotence check find
/// those manifests.
///
/// File writes replace existing files, the way a forced install does; two
/// packages shipping the same path therefore reach different states
/// depending on install order, which is exactly the conflict this tool
/// exists to find.
fn install_with_deps(db: &PackageDb, name: &str, order: &[String]) -> FsExpr {
    let mut steps = Vec::new();
    for q in order {
        let sentinel = package_sentinel(q);
        let files = db.file_paths(q);
        let mut dirs = ancestors_of(files.iter());
        dirs.extend(sentinel.ancestors());
        steps.extend(idemdirs(&dirs));
        for f in &files {
            steps.push(overwrite_create(f, package_file_content(q, f)));
        }
        let content = ContentId::new(format!("pkg:{q}"));
        if q == name {
            // Guarded absent by the outer condition; a raw create suffices.
            steps.push(FsExpr::CreateFile(sentinel, content));
        } else {
            // A dependency may or may not already be registered.
            steps.push(overwrite_create(&sentinel, content));
        }
    }
    FsExpr::ite(
        FsPred::DoesNotExist(package_sentinel(name)),
        FsExpr::seq_all(steps),
        FsExpr::Skip,
    )
}

/// Removes a package if its sentinel is present: delete its files, then any
/// directory only this package uses (if now empty), then the sentinel.
/// Shared directories and the files of packages that depend on this one are
/// left alone — the other half of the check-then-act gap described on
/// [`install_with_deps`].
fn remove_package(db: &PackageDb, name: &str) -> FsExpr {
    let sentinel = package_sentinel(name);
    let mut files = db.file_paths(name);
    files.sort_by_key(|p| std::cmp::Reverse(p.depth()));
    let mut steps: Vec<FsExpr> = files.into_iter().map(FsExpr::Rm).collect();
    let mut unique_dirs: Vec<Path> = private_dirs(db, name).into_iter().collect();
    unique_dirs.sort_by_key(|p| std::cmp::Reverse(p.depth()));
    for d in unique_dirs {
        // Only remove a directory the user hasn't put their own files into.
        steps.push(FsExpr::ite(
            FsPred::IsEmptyDir(d.clone()),
            FsExpr::Rm(d),
            FsExpr::Skip,
        ));
    }
    steps.push(FsExpr::Rm(sentinel.clone()));
    FsExpr::ite(
        FsPred::DoesNotExist(sentinel),
        FsExpr::Skip,
        FsExpr::seq_all(steps),
    )
}

/// Directories used by `name`'s files and by no other package in the
/// database. The sentinel directory tree is always shared.
fn private_dirs(db: &PackageDb, name: &str) -> BTreeSet<Path> {
    let mut dirs = ancestors_of(db.file_paths(name).iter());
    dirs.remove(&Path::root());
    for other in db.packages.keys() {
        if other == name {
            continue;
        }
        for shared in ancestors_of(db.file_paths(other).iter()) {
            dirs.remove(&shared);
        }
    }
    for shared in package_sentinel(name).ancestors() {
        dirs.remove(&shared);
    }
    dirs
}

fn compile_package(r: &PrimitiveResource, db: &PackageDb) -> Result<FsExpr, CompileError> {
    check_attrs(r, &["ensure", "provider"])?;
    let name = &r.title;
    if db.get(name).is_none() {
        return Err(CompileError::UnknownPackage {
            line: r.line,
            name: name.clone(),
            platform: db.platform.clone(),
        });
    }
    let ensure = str_attr(r, "ensure")?.unwrap_or("present");
    match ensure {
        "present" | "installed" | "latest" => {
            let order = db.install_order(name)?;
            Ok(install_with_deps(db, name, &order))
        }
        "absent" | "purged" => Ok(remove_package(db, name)),
        other => Err(invalid(r, format!("unknown ensure value {other:?}"))),
    }
}

/// Users and groups are modeled as entry files in a flat directory
/// (`/etc/users/<name>`, `/etc/groups/<name>`).
fn compile_flat_entry(
    r: &PrimitiveResource,
    dir: &str,
    kind: &str,
) -> Result<FsExpr, CompileError> {
    check_attrs(r, &["ensure", "managehome", "gid", "uid", "shell", "home"])?;
    let dir = Path::parse(dir).expect("static path");
    let entry = dir.child(&r.title);
    if r.title.contains('/') {
        return Err(invalid(r, format!("invalid {kind} name {:?}", r.title)));
    }
    let ensure = str_attr(r, "ensure")?.unwrap_or("present");
    match ensure {
        "present" => {
            let mut steps = idemdirs(&entry.ancestors().into_iter().collect());
            steps.push(FsExpr::ite(
                FsPred::DoesNotExist(entry.clone()),
                FsExpr::CreateFile(entry.clone(), ContentId::new(format!("rsrc:{kind}:{}", r.title))),
                FsExpr::ite(FsPred::IsFile(entry.clone()), FsExpr::Skip, FsExpr::Error),
            ));
            if kind == "user" && bool_attr(r, "managehome")? {
                let home = Path::root().child("home").child(&r.title);
                steps.push(FsExpr::idemdir(home.parent().unwrap()));
                steps.push(FsExpr::idemdir(home));
            }
            Ok(FsExpr::seq_all(steps))
        }
        "absent" => Ok(remove_file(&entry)),
        other => Err(invalid(r, format!("unknown ensure value {other:?}"))),
    }
}

fn compile_ssh_key(r: &PrimitiveResource) -> Result<FsExpr, CompileError> {
    check_attrs(r, &["ensure", "user", "key", "type"])?;
    let user = str_attr(r, "user")?
        .ok_or_else(|| invalid(r, "missing required attribute user"))?;
    if user.contains('/') || user.is_empty() {
        return Err(invalid(r, format!("invalid user name {user:?}")));
    }
    let ssh_dir = Path::root().child("home").child(user).child(".ssh");
    let target = ssh_dir.child("authorized_keys");
    let ensure = str_attr(r, "ensure")?.unwrap_or("present");
    match ensure {
        "present" => {
            let mut steps = idemdirs(&target.ancestors().into_iter().collect());
            steps.push(overwrite_create(
                &target,
                ContentId::new(format!("rsrc:ssh_authorized_key:{}", r.title)),
            ));
            Ok(FsExpr::seq_all(steps))
        }
        "absent" => Ok(remove_file(&target)),
        other => Err(invalid(r, format!("unknown ensure value {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{eval, EvalResult, FileContent, FileSystem};

    fn resource(rtype: &str, title: &str, attrs: &[(&str, &str)]) -> PrimitiveResource {
        PrimitiveResource {
            rtype: rtype.to_string(),
            title: title.to_string(),
            attrs: attrs
                .iter()
                .map(|(k, v)| (k.to_string(), ResourceValue::Str(v.to_string())))
                .collect(),
            line: 1,
        }
    }

    fn toy_db() -> PackageDb {
        let mut db = PackageDb::new("debian");
        db.ingest_package_listing("perl", "/usr/bin/perl\n", vec![])
            .unwrap();
        db.ingest_package_listing("golang-go", "/usr/bin/go\n", vec!["perl".to_string()])
            .unwrap();
        db
    }

    fn run(e: &FsExpr, fs: &FileSystem) -> EvalResult {
        eval(e, fs)
    }

    fn empty() -> FileSystem {
        FileSystem::with_root()
    }

    #[test]
    fn file_with_content_creates_and_overwrites() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let r = resource("file", "/a", &[("content", "hello")]);
        let e = compile_resource(&r, &env).unwrap();
        let EvalResult::Ok(fs1) = run(&e, &empty()) else {
            panic!("first run errored")
        };
        assert_eq!(
            fs1.get(&Path::parse("/a").unwrap()),
            Some(&FileContent::File(ContentId::new("hello")))
        );
        // Idempotent: second run overwrites with the same content.
        assert_eq!(run(&e, &fs1), EvalResult::Ok(fs1.clone()));
        // A directory in the way is an error.
        let blocked = FileSystem::from_entries([
            (Path::root(), FileContent::Dir),
            (Path::parse("/a").unwrap(), FileContent::Dir),
        ])
        .unwrap();
        assert_eq!(run(&e, &blocked), EvalResult::Err);
    }

    #[test]
    fn directory_resource_is_guarded() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let r = resource("file", "/d", &[("ensure", "directory")]);
        let e = compile_resource(&r, &env).unwrap();
        let EvalResult::Ok(fs1) = run(&e, &empty()) else {
            panic!()
        };
        assert_eq!(run(&e, &fs1), EvalResult::Ok(fs1));
    }

    #[test]
    fn package_install_is_idempotent_from_empty() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let r = resource("package", "golang-go", &[("ensure", "present")]);
        let e = compile_resource(&r, &env).unwrap();
        let EvalResult::Ok(fs1) = run(&e, &empty()) else {
            panic!()
        };
        assert!(matches!(
            fs1.get(&Path::parse("/usr/bin/go").unwrap()),
            Some(FileContent::File(_))
        ));
        // Dependency files land too, with their own sentinel.
        assert!(fs1.get(&package_sentinel("perl")).is_some());
        assert_eq!(run(&e, &fs1), EvalResult::Ok(fs1));
    }

    #[test]
    fn package_absent_removes_only_its_own_files() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let install = compile_resource(
            &resource("package", "golang-go", &[("ensure", "present")]),
            &env,
        )
        .unwrap();
        let remove_perl = compile_resource(
            &resource("package", "perl", &[("ensure", "absent")]),
            &env,
        )
        .unwrap();
        let EvalResult::Ok(installed) = run(&install, &empty()) else {
            panic!()
        };
        let EvalResult::Ok(after) = run(&remove_perl, &installed) else {
            panic!("removal errored")
        };
        assert_eq!(after.get(&Path::parse("/usr/bin/perl").unwrap()), None);
        assert_eq!(after.get(&package_sentinel("perl")), None);
        // The dependent package is left as the package manager sees it.
        assert!(after.get(&Path::parse("/usr/bin/go").unwrap()).is_some());
        assert!(after.get(&package_sentinel("golang-go")).is_some());
    }

    #[test]
    fn remove_dep_then_install_flip_flops() {
        // remove perl; install golang-go (which depends on perl). From an
        // empty system the install pulls perl in; the next run removes perl
        // and the install guard — keyed on golang-go's own sentinel — does
        // nothing. The two outcomes differ: the composition is not
        // idempotent, matching what a real check-then-act package manager
        // does.
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let remove_perl = compile_resource(
            &resource("package", "perl", &[("ensure", "absent")]),
            &env,
        )
        .unwrap();
        let install_go = compile_resource(
            &resource("package", "golang-go", &[("ensure", "present")]),
            &env,
        )
        .unwrap();
        let e = FsExpr::seq(remove_perl, install_go);
        let EvalResult::Ok(once) = run(&e, &empty()) else {
            panic!()
        };
        assert!(once.get(&package_sentinel("perl")).is_some());
        let EvalResult::Ok(twice) = run(&e, &once) else {
            panic!()
        };
        assert_eq!(twice.get(&package_sentinel("perl")), None);
        assert_ne!(once, twice);
    }

    #[test]
    fn unknown_package_is_reported() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let r = resource("package", "nosuch", &[]);
        assert!(matches!(
            compile_resource(&r, &env),
            Err(CompileError::UnknownPackage { .. })
        ));
    }

    #[test]
    fn user_and_sshkey_compile_and_replay() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let u = compile_resource(
            &resource(
                "user",
                "alice",
                &[("ensure", "present"), ("managehome", "true")],
            ),
            &env,
        )
        .unwrap();
        let k = compile_resource(
            &resource("ssh_authorized_key", "alice_key", &[("user", "alice")]),
            &env,
        )
        .unwrap();
        let EvalResult::Ok(fs1) = run(&u, &empty()) else {
            panic!()
        };
        assert!(fs1.get(&Path::parse("/etc/users/alice").unwrap()).is_some());
        assert_eq!(
            fs1.get(&Path::parse("/home/alice").unwrap()),
            Some(&FileContent::Dir)
        );
        let EvalResult::Ok(fs2) = run(&k, &fs1) else {
            panic!()
        };
        assert!(matches!(
            fs2.get(&Path::parse("/home/alice/.ssh/authorized_keys").unwrap()),
            Some(FileContent::File(_))
        ));
        assert_eq!(run(&k, &fs2), EvalResult::Ok(fs2));
    }

    #[test]
    fn bad_attributes_rejected() {
        let db = toy_db();
        let env = CompileEnv { db: &db };
        let cases = [
            resource("file", "/a", &[("content", "x"), ("source", "/b")]),
            resource("file", "/a", &[("ensure", "running")]),
            resource("file", "relative", &[]),
            resource("file", "/a", &[("frobnicate", "yes")]),
            resource("ssh_authorized_key", "k", &[]),
            resource("user", "a/b", &[]),
        ];
        for r in cases {
            assert!(
                matches!(
                    compile_resource(&r, &env),
                    Err(CompileError::InvalidAttributes { .. })
                ),
                "expected rejection of {r:?}"
            );
        }
    }
}
