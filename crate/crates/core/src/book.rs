//! Runs every code block in the guide (`book/`) as a doc-test, so the
//! prose can never drift from the API. Each chapter gets its own module to
//! make failures attributable.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(manifests, "manifests.md");
chapter!(filesystem_ir, "filesystem-ir.md");
chapter!(resources, "resources.md");
chapter!(equivalence, "equivalence.md");
chapter!(determinism, "determinism.md");
chapter!(idempotence, "idempotence.md");
