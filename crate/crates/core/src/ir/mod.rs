//! The filesystem-operation intermediate representation: paths, contents,
//! predicates, expressions, a concrete evaluator, and the brute-force
//! enumeration oracle used throughout the test suites.

pub mod enumerate;
pub mod expr;
pub mod fs;
pub mod path;
pub mod sexp;

pub use enumerate::{enumerate_filesystems, oracle_equiv, oracle_equiv_closed};
pub use expr::{ContentId, FsExpr, FsPred};
pub use fs::{eval, eval_pred, EvalResult, FileContent, FileSystem};
pub use path::{parent_closure, Path};
