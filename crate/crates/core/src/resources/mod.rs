//! Resource models: the package database and the translation of each
//! primitive resource into a filesystem-operation expression.

pub mod compile;
pub mod db;

pub use compile::{compile_resource, package_sentinel, CompileEnv, CompileError};
pub use db::{DbError, PackageDb, PackageEntry};
