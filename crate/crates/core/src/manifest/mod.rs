//! Manifest frontend: parsing the Puppet-style surface syntax and expanding
//! it into a flat [`ResourceGraph`].

pub mod ast;
pub mod expand;
pub mod graph;
pub mod parser;

pub use expand::{expand, ExpandError};
pub use graph::{GraphError, PrimitiveResource, ResourceGraph, ResourceValue};
pub use parser::{parse, ParseError};

use thiserror::Error;

/// Any error on the source-to-graph path.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManifestError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parses and expands manifest source, and checks the graph is acyclic.
pub fn load(src: &str) -> Result<ResourceGraph, ManifestError> {
    let ast = parse(src)?;
    let graph = expand(&ast)?;
    graph.toposort()?;
    Ok(graph)
}
