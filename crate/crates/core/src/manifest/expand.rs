//! Expansion of a parsed manifest into a flat resource graph: defined types
//! are instantiated, variables and string interpolations are resolved, and
//! dependency declarations / metaparameters become graph edges.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;
use super::graph::{PrimitiveResource, ResourceGraph, ResourceValue};

/// Resource types with built-in models; everything else must be a define.
pub const PRIMITIVE_TYPES: &[&str] = &["file", "package", "user", "group", "ssh_authorized_key"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExpandError {
    #[error("line {line}: unknown resource type {rtype:?}")]
    UnknownType { line: u32, rtype: String },
    #[error("line {line}: duplicate resource {rtype}[{title}]")]
    DuplicateResource {
        line: u32,
        rtype: String,
        title: String,
    },
    #[error("line {line}: duplicate definition of type {name:?}")]
    DuplicateDefine { line: u32, name: String },
    #[error("line {line}: unbound variable ${name}")]
    UnboundVariable { line: u32, name: String },
    #[error("line {line}: recursive instantiation of define {name:?}")]
    RecursiveDefine { line: u32, name: String },
    #[error("line {line}: define {name:?} has no parameter {param:?}")]
    UnknownParameter {
        line: u32,
        name: String,
        param: String,
    },
    #[error("line {line}: dependency references undeclared resource {rtype}[{title}]")]
    DanglingDependency {
        line: u32,
        rtype: String,
        title: String,
    },
    #[error("line {line}: {what} must be a string, found {found}")]
    NotAString {
        line: u32,
        what: String,
        found: String,
    },
    #[error("line {line}: {name} => expects resource references, found {found}")]
    BadMetaparameter {
        line: u32,
        name: String,
        found: String,
    },
    #[error("line {line}: defines cannot be nested inside defines")]
    NestedDefine { line: u32 },
}

type Env = BTreeMap<String, ResourceValue>;

/// Expands a manifest into its resource graph.
pub fn expand(manifest: &Manifest) -> Result<ResourceGraph, ExpandError> {
    // Pass 1: collect defined types.
    let mut defines: BTreeMap<String, &DefineDecl> = BTreeMap::new();
    for item in &manifest.items {
        if let Item::Define(d) = item {
            if defines.insert(d.name.clone(), d).is_some() {
                return Err(ExpandError::DuplicateDefine {
                    line: d.line,
                    name: d.name.clone(),
                });
            }
            for inner in &d.body.items {
                if let Item::Define(nested) = inner {
                    return Err(ExpandError::NestedDefine { line: nested.line });
                }
            }
        }
    }

    let mut exp = Expander {
        defines,
        graph: ResourceGraph::default(),
        pending_edges: Vec::new(),
        stack: Vec::new(),
    };
    exp.items(&manifest.items, &Env::new())?;

    for (from, to, line) in std::mem::take(&mut exp.pending_edges) {
        let a = exp.resolve_endpoint(&from, line)?;
        let b = exp.resolve_endpoint(&to, line)?;
        exp.graph.add_edge(a, b);
    }
    add_parent_edges(&mut exp.graph);
    Ok(exp.graph)
}

/// Adds an edge from each `file` resource to every `file` resource whose
/// title path it is an ancestor of, so directories are realized before
/// their contents.
fn add_parent_edges(graph: &mut ResourceGraph) {
    use crate::ir::Path;
    let files: Vec<(usize, Path)> = graph
        .resources()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rtype == "file")
        .filter_map(|(i, r)| Path::parse(&r.title).ok().map(|p| (i, p)))
        .collect();
    for &(i, ref pi) in &files {
        for &(j, ref pj) in &files {
            if pi.is_ancestor_of(pj) {
                graph.add_edge(i, j);
            }
        }
    }
}

/// A resource reference by (type, title), as written in edge syntax.
type EdgeEndpoint = (String, String);

struct Expander<'a> {
    defines: BTreeMap<String, &'a DefineDecl>,
    graph: ResourceGraph,
    /// Edges recorded before all resources exist: (from, to, source line),
    /// with each endpoint as a (type, title) reference.
    pending_edges: Vec<(EdgeEndpoint, EdgeEndpoint, u32)>,
    /// Defines currently being instantiated, for recursion detection.
    stack: Vec<String>,
}

impl<'a> Expander<'a> {
    fn items(&mut self, items: &[Item], env: &Env) -> Result<(), ExpandError> {
        for item in items {
            match item {
                Item::Define(_) => {} // collected in pass 1
                Item::Resource(r) => self.resource(r, env)?,
                Item::Dependency(d) => {
                    let from_title = self.string_value(&d.from_title, env, d.line, "title")?;
                    let to_title = self.string_value(&d.to_title, env, d.line, "title")?;
                    self.pending_edges.push((
                        (d.from_rtype.clone(), from_title),
                        (d.to_rtype.clone(), to_title),
                        d.line,
                    ));
                }
            }
        }
        Ok(())
    }

    fn resource(&mut self, decl: &ResourceDecl, env: &Env) -> Result<(), ExpandError> {
        let title = self.string_value(&decl.title, env, decl.line, "title")?;
        if let Some(def) = self.defines.get(decl.rtype.as_str()).copied() {
            return self.instantiate(def, &title, decl, env);
        }
        if !PRIMITIVE_TYPES.contains(&decl.rtype.as_str()) {
            return Err(ExpandError::UnknownType {
                line: decl.line,
                rtype: decl.rtype.clone(),
            });
        }

        let mut attrs = BTreeMap::new();
        for attr in &decl.attrs {
            let value = self.value(&attr.value, env, attr.line)?;
            if attr.name == "before" || attr.name == "require" {
                self.metaparam_edges(&attr.name, &value, &decl.rtype, &title, attr.line)?;
            } else {
                attrs.insert(attr.name.clone(), value);
            }
        }
        let added = self.graph.add_resource(PrimitiveResource {
            rtype: decl.rtype.clone(),
            title: title.clone(),
            attrs,
            line: decl.line,
        });
        if !added {
            return Err(ExpandError::DuplicateResource {
                line: decl.line,
                rtype: decl.rtype.clone(),
                title,
            });
        }
        Ok(())
    }

    fn metaparam_edges(
        &mut self,
        name: &str,
        value: &ResourceValue,
        rtype: &str,
        title: &str,
        line: u32,
    ) -> Result<(), ExpandError> {
        let refs: Vec<(String, String)> = match value {
            ResourceValue::Ref(rt, t) => vec![(rt.clone(), t.clone())],
            ResourceValue::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        ResourceValue::Ref(rt, t) => out.push((rt.clone(), t.clone())),
                        other => {
                            return Err(ExpandError::BadMetaparameter {
                                line,
                                name: name.to_string(),
                                found: other.kind().to_string(),
                            })
                        }
                    }
                }
                out
            }
            other => {
                return Err(ExpandError::BadMetaparameter {
                    line,
                    name: name.to_string(),
                    found: other.kind().to_string(),
                })
            }
        };
        let me = (rtype.to_string(), title.to_string());
        for r in refs {
            if name == "before" {
                self.pending_edges.push((me.clone(), r, line));
            } else {
                self.pending_edges.push((r, me.clone(), line));
            }
        }
        Ok(())
    }

    fn instantiate(
        &mut self,
        def: &'a DefineDecl,
        title: &str,
        decl: &ResourceDecl,
        env: &Env,
    ) -> Result<(), ExpandError> {
        if self.stack.iter().any(|n| n == &def.name) {
            return Err(ExpandError::RecursiveDefine {
                line: decl.line,
                name: def.name.clone(),
            });
        }
        let mut inner = Env::new();
        inner.insert("title".to_string(), ResourceValue::Str(title.to_string()));
        for attr in &decl.attrs {
            if !def.params.contains(&attr.name) && attr.name != "title" {
                return Err(ExpandError::UnknownParameter {
                    line: attr.line,
                    name: def.name.clone(),
                    param: attr.name.clone(),
                });
            }
            let v = self.value(&attr.value, env, attr.line)?;
            inner.insert(attr.name.clone(), v);
        }
        self.stack.push(def.name.clone());
        let result = self.items(&def.body.items, &inner);
        self.stack.pop();
        result
    }

    fn value(&self, v: &Value, env: &Env, line: u32) -> Result<ResourceValue, ExpandError> {
        match v {
            Value::Str(parts) => Ok(ResourceValue::Str(self.interpolate(parts, env, line)?)),
            Value::Num(n) => Ok(ResourceValue::Num(*n)),
            Value::Var(name) => env.get(name).cloned().ok_or(ExpandError::UnboundVariable {
                line,
                name: name.clone(),
            }),
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(self.value(item, env, line)?);
                }
                Ok(ResourceValue::Array(out))
            }
            Value::Ref(rtype, title) => {
                let t = self.string_value(title, env, line, "resource reference title")?;
                Ok(ResourceValue::Ref(rtype.clone(), t))
            }
        }
    }

    fn string_value(
        &self,
        v: &Value,
        env: &Env,
        line: u32,
        what: &str,
    ) -> Result<String, ExpandError> {
        match self.value(v, env, line)? {
            ResourceValue::Str(s) => Ok(s),
            ResourceValue::Num(n) => Ok(n.to_string()),
            other => Err(ExpandError::NotAString {
                line,
                what: what.to_string(),
                found: other.kind().to_string(),
            }),
        }
    }

    fn interpolate(
        &self,
        parts: &[StrPart],
        env: &Env,
        line: u32,
    ) -> Result<String, ExpandError> {
        let mut out = String::new();
        for part in parts {
            match part {
                StrPart::Lit(s) => out.push_str(s),
                StrPart::Var(name) => match env.get(name) {
                    Some(ResourceValue::Str(s)) => out.push_str(s),
                    Some(ResourceValue::Num(n)) => out.push_str(&n.to_string()),
                    Some(other) => {
                        return Err(ExpandError::NotAString {
                            line,
                            what: format!("interpolated variable ${name}"),
                            found: other.kind().to_string(),
                        })
                    }
                    None => {
                        return Err(ExpandError::UnboundVariable {
                            line,
                            name: name.clone(),
                        })
                    }
                },
            }
        }
        Ok(out)
    }

    fn resolve_endpoint(
        &self,
        (rtype, title): &(String, String),
        line: u32,
    ) -> Result<usize, ExpandError> {
        self.graph
            .find(rtype, title)
            .ok_or_else(|| ExpandError::DanglingDependency {
                line,
                rtype: rtype.clone(),
                title: title.clone(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::parser::parse;

    fn graph(src: &str) -> ResourceGraph {
        expand(&parse(src).unwrap()).unwrap()
    }

    fn graph_err(src: &str) -> ExpandError {
        expand(&parse(src).unwrap()).unwrap_err()
    }

    #[test]
    fn simple_flat_manifest() {
        let g = graph(
            "package{'vim': ensure => present}\n\
             file{'/etc/motd': content => 'hello'}",
        );
        assert_eq!(g.resources().len(), 2);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn dependency_edges() {
        let g = graph(
            "package{'a': ensure => present}\n\
             package{'b': ensure => present}\n\
             Package['a'] -> Package['b']",
        );
        let a = g.find("package", "a").unwrap();
        let b = g.find("package", "b").unwrap();
        assert_eq!(g.edges(), &[(a, b)].into_iter().collect());
    }

    #[test]
    fn before_and_require() {
        let g = graph(
            "package{'a': before => File['/x']}\n\
             file{'/x': ensure => directory, require => Package['b']}\n\
             package{'b': ensure => present}",
        );
        let a = g.find("package", "a").unwrap();
        let b = g.find("package", "b").unwrap();
        let x = g.find("file", "/x").unwrap();
        assert!(g.edges().contains(&(a, x)));
        assert!(g.edges().contains(&(b, x)));
    }

    #[test]
    fn define_instantiation_binds_title_and_params() {
        let g = graph(
            r#"
            define myuser($key) {
              user {"$title": ensure => present }
              file {"/home/${title}/.ssh": ensure => directory }
              ssh_authorized_key {"${title}_key": user => "$title", key => $key }
            }
            myuser {'alice': key => 'AAAA' }
            myuser {'bob': key => 'BBBB' }
            "#,
        );
        assert_eq!(g.resources().len(), 6);
        assert!(g.find("user", "alice").is_some());
        assert!(g.find("file", "/home/bob/.ssh").is_some());
        let k = g.find("ssh_authorized_key", "alice_key").unwrap();
        assert_eq!(
            g.resources()[k].attrs.get("key"),
            Some(&ResourceValue::Str("AAAA".to_string()))
        );
    }

    #[test]
    fn file_parent_auto_edge() {
        let g = graph(
            "file{'/a': ensure => directory}\n\
             file{'/a/b/c': content => 'x'}",
        );
        let parent = g.find("file", "/a").unwrap();
        let child = g.find("file", "/a/b/c").unwrap();
        assert!(g.edges().contains(&(parent, child)));
    }

    #[test]
    fn duplicate_resource_rejected() {
        let err = graph_err("file{'/a': ensure => present} file{'/a': ensure => absent}");
        assert!(matches!(err, ExpandError::DuplicateResource { .. }));
    }

    #[test]
    fn recursion_rejected() {
        let err = graph_err("define loop() { loop {\"$title-x\": } } loop {'go': }");
        assert!(matches!(err, ExpandError::RecursiveDefine { .. }));
    }

    #[test]
    fn unknown_type_rejected() {
        let err = graph_err("service{'nginx': ensure => running}");
        assert_eq!(
            err,
            ExpandError::UnknownType {
                line: 1,
                rtype: "service".to_string()
            }
        );
    }

    #[test]
    fn unbound_variable_rejected() {
        let err = graph_err("file{\"/a/$missing\": ensure => present}");
        assert!(matches!(err, ExpandError::UnboundVariable { .. }));
    }

    #[test]
    fn dangling_dependency_rejected() {
        let err = graph_err("package{'a': } Package['a'] -> Package['b']");
        assert!(matches!(err, ExpandError::DanglingDependency { .. }));
    }
}
