//! Enumeration of the orders a resource graph can be applied in, with
//! partial-order reduction: when some ready resource commutes with every
//! other remaining resource, its position cannot matter, so only the branch
//! that applies it first is explored.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("exploration exceeded the branch budget of {budget}")]
pub struct BudgetExceeded {
    pub budget: usize,
}

/// All explored linearizations (as vertex orders) plus how many branch
/// expansions it took to find them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explored {
    pub orders: Vec<Vec<usize>>,
    pub branches: usize,
}

/// Enumerates topological orders of `n` vertices under `edges` (an edge
/// `(u, v)` puts `u` before `v`). `commute[i][j]` must be a sound
/// commutativity verdict for the vertex pair. With `por` off, every order
/// is produced.
pub fn explore(
    n: usize,
    edges: &BTreeSet<(usize, usize)>,
    commute: &[Vec<bool>],
    por: bool,
    budget: usize,
) -> Result<Explored, BudgetExceeded> {
    let mut state = Search {
        edges,
        commute,
        por,
        budget,
        branches: 0,
        orders: Vec::new(),
    };
    let remaining: BTreeSet<usize> = (0..n).collect();
    let mut prefix = Vec::with_capacity(n);
    state.go(remaining, &mut prefix)?;
    Ok(Explored {
        orders: state.orders,
        branches: state.branches,
    })
}

struct Search<'a> {
    edges: &'a BTreeSet<(usize, usize)>,
    commute: &'a [Vec<bool>],
    por: bool,
    budget: usize,
    branches: usize,
    orders: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn go(
        &mut self,
        remaining: BTreeSet<usize>,
        prefix: &mut Vec<usize>,
    ) -> Result<(), BudgetExceeded> {
        if remaining.is_empty() {
            self.orders.push(prefix.clone());
            return Ok(());
        }
        let ready: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&v| !remaining.iter().any(|&u| self.edges.contains(&(u, v))))
            .collect();
        if self.por {
            let free = ready.iter().copied().find(|&v| {
                remaining
                    .iter()
                    .all(|&u| u == v || self.commute[v][u])
            });
            if let Some(v) = free {
                return self.step(remaining, prefix, v);
            }
        }
        for v in ready {
            self.step(remaining.clone(), prefix, v)?;
        }
        Ok(())
    }

    fn step(
        &mut self,
        mut remaining: BTreeSet<usize>,
        prefix: &mut Vec<usize>,
        v: usize,
    ) -> Result<(), BudgetExceeded> {
        self.branches += 1;
        if self.branches > self.budget {
            return Err(BudgetExceeded {
                budget: self.budget,
            });
        }
        remaining.remove(&v);
        prefix.push(v);
        let r = self.go(remaining, prefix);
        prefix.pop();
        r
    }
}
