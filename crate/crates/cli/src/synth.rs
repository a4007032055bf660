//! The synthetic scaling family: n packages that all ship the same file, so
//! no pair commutes and every application order must be explored.

use manivet::resources::PackageDb;

/// A package database with packages `a-1` .. `a-n`, each owning `/a`.
pub fn synthetic_db(n: usize) -> PackageDb {
    let mut db = PackageDb::new("synthetic");
    for i in 1..=n {
        db.ingest_package_listing(&format!("a-{i}"), "/a\n", Vec::new())
            .expect("static listing");
    }
    db
}

/// The manifest installing those packages. In deterministic mode, a final
/// file resource overwrites `/a` after every package, which makes all orders
/// agree and forces the check to prove unsatisfiability instead of stopping
/// at the first differing pair.
pub fn synthetic_manifest(n: usize, deterministic: bool) -> String {
    let mut out = String::new();
    for i in 1..=n {
        if deterministic {
            out.push_str(&format!(
                "package {{ 'a-{i}': ensure => present, before => File['/a'] }}\n"
            ));
        } else {
            out.push_str(&format!("package {{ 'a-{i}': ensure => present }}\n"));
        }
    }
    if deterministic {
        out.push_str("file { '/a': content => 'x' }\n");
    }
    out
}
