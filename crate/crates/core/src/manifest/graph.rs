//! The flat resource graph produced by expansion: primitive resources plus
//! ordering edges.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// A fully-resolved attribute value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResourceValue {
    Str(String),
    Num(i64),
    Array(Vec<ResourceValue>),
    /// A reference to another resource, `(rtype, title)`.
    Ref(String, String),
}

impl ResourceValue {
    pub fn kind(&self) -> &'static str {
        match self {
            ResourceValue::Str(_) => "string",
            ResourceValue::Num(_) => "number",
            ResourceValue::Array(_) => "array",
            ResourceValue::Ref(_, _) => "resource reference",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ResourceValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// A resource of one of the built-in types, with resolved attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveResource {
    pub rtype: String,
    pub title: String,
    pub attrs: BTreeMap<String, ResourceValue>,
    pub line: u32,
}

impl PrimitiveResource {
    /// `"package[vim]"` — the display form used in messages and DOT output.
    pub fn label(&self) -> String {
        format!("{}[{}]", self.rtype, self.title)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("dependency cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

/// Resources plus a strict partial order. An edge `(a, b)` means resource
/// `a` must be applied before resource `b`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResourceGraph {
    resources: Vec<PrimitiveResource>,
    edges: BTreeSet<(usize, usize)>,
}

impl ResourceGraph {
    /// Adds a resource; returns false if `(rtype, title)` is already present.
    pub fn add_resource(&mut self, r: PrimitiveResource) -> bool {
        if self.find(&r.rtype, &r.title).is_some() {
            return false;
        }
        self.resources.push(r);
        true
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        assert!(from < self.resources.len() && to < self.resources.len());
        if from != to {
            self.edges.insert((from, to));
        }
    }

    pub fn resources(&self) -> &[PrimitiveResource] {
        &self.resources
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn find(&self, rtype: &str, title: &str) -> Option<usize> {
        self.resources
            .iter()
            .position(|r| r.rtype == rtype && r.title == title)
    }

    pub fn predecessors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(_, b)| b == v)
            .map(|&(a, _)| a)
    }

    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .range((v, 0)..(v + 1, 0))
            .map(|&(_, b)| b)
    }

    /// A deterministic topological order (Kahn's algorithm, ties broken by
    /// `(rtype, title)`), or the cycle that prevents one.
    pub fn toposort(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.resources.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let key = |v: usize| (&self.resources[v].rtype, &self.resources[v].title);
        let mut ready: BTreeSet<(&String, &String, usize)> = (0..n)
            .filter(|&v| indeg[v] == 0)
            .map(|v| (key(v).0, key(v).1, v))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&(rt, t, v)) = ready.iter().next() {
            ready.remove(&(rt, t, v));
            order.push(v);
            for w in self.successors(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert((key(w).0, key(w).1, w));
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(GraphError::Cycle(self.find_cycle()))
        }
    }

    /// Labels along one directed cycle, first label repeated at the end.
    fn find_cycle(&self) -> Vec<String> {
        let n = self.resources.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            if let Some(cycle) = self.dfs_cycle(start, &mut state, &mut stack) {
                return cycle;
            }
        }
        Vec::new()
    }

    fn dfs_cycle(&self, v: usize, state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<String>> {
        state[v] = 1;
        stack.push(v);
        for w in self.successors(v) {
            if state[w] == 1 {
                let from = stack.iter().position(|&x| x == w).unwrap();
                let mut labels: Vec<String> = stack[from..]
                    .iter()
                    .map(|&x| self.resources[x].label())
                    .collect();
                labels.push(self.resources[w].label());
                return Some(labels);
            }
            if state[w] == 0 {
                if let Some(c) = self.dfs_cycle(w, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }

    /// Graphviz DOT rendering for debugging and reports.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("digraph resources {\n");
        for (i, r) in self.resources.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label={:?}];", r.label());
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}
