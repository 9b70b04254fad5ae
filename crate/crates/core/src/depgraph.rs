//! Majority dependency graph over transactions.
//!
//! Every pair of transactions gets exactly one directed edge, pointing from
//! the transaction a strict majority of nodes received first. Condorcet
//! cycles are the strongly connected components with more than one vertex.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{LocalOrdering, Origin, Registry, TxId};

/// Complete weighted tournament over a set of transactions.
///
/// Vertices are indexed `0..len()` in lexicographic id order, so comparing
/// indices compares ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedTournament {
    ids: Vec<TxId>,
    weights: Vec<u64>,
    orderings_used: usize,
}

impl WeightedTournament {
    /// Builds a tournament from a dense weight matrix (`weights[u * m + v]`).
    /// `ids` must be strictly increasing.
    pub fn from_weight_matrix(ids: Vec<TxId>, weights: Vec<u64>, orderings_used: usize) -> Result<Self> {
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NotTournament("vertex ids must be strictly increasing".into()));
        }
        if weights.len() != ids.len() * ids.len() {
            return Err(Error::NotTournament("weight matrix has the wrong shape".into()));
        }
        Ok(WeightedTournament { ids, weights, orderings_used })
    }

    /// Unweighted tournament from an explicit edge list. Each unordered pair
    /// of endpoints must appear exactly once.
    pub fn from_edges<I, A, B>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<TxId>,
        B: Into<TxId>,
    {
        let edges: Vec<(TxId, TxId)> = edges.into_iter().map(|(a, b)| (a.into(), b.into())).collect();
        let ids: Vec<TxId> = edges
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let m = ids.len();
        let mut weights = vec![0u64; m * m];
        let mut seen = vec![false; m * m];
        for (a, b) in &edges {
            let u = ids.binary_search(a).expect("collected above");
            let v = ids.binary_search(b).expect("collected above");
            if u == v {
                return Err(Error::NotTournament(format!("self-loop on `{a}`")));
            }
            let key = u.min(v) * m + u.max(v);
            if seen[key] {
                return Err(Error::NotTournament(format!("pair {{{a}, {b}}} appears twice")));
            }
            seen[key] = true;
            weights[u * m + v] = 1;
        }
        for u in 0..m {
            for v in u + 1..m {
                if !seen[u * m + v] {
                    return Err(Error::NotTournament(format!(
                        "no edge between `{}` and `{}`",
                        ids[u], ids[v]
                    )));
                }
            }
        }
        Ok(WeightedTournament { ids, weights, orderings_used: 1 })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[TxId] {
        &self.ids
    }

    pub fn id(&self, v: usize) -> &TxId {
        &self.ids[v]
    }

    pub fn index_of(&self, id: &TxId) -> Option<usize> {
        self.ids.binary_search(id).ok()
    }

    pub fn orderings_used(&self) -> usize {
        self.orderings_used
    }

    /// Number of orderings that place `u` before `v`.
    pub fn weight(&self, u: usize, v: usize) -> u64 {
        self.weights[u * self.ids.len() + v]
    }

    /// Whether the tournament edge between `u` and `v` points `u -> v`.
    /// Ties point toward the lexicographically larger id.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let (fwd, back) = (self.weight(u, v), self.weight(v, u));
        fwd > back || (fwd == back && u < v)
    }

    /// All edges `(u, v)` with both endpoints in `vertices`.
    pub fn edges_within(&self, vertices: &[usize]) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(vertices.len() * vertices.len().saturating_sub(1) / 2);
        for (i, &u) in vertices.iter().enumerate() {
            for &v in &vertices[i + 1..] {
                if self.has_edge(u, v) {
                    out.push((u, v));
                } else {
                    out.push((v, u));
                }
            }
        }
        out
    }

    pub fn all_vertices(&self) -> Vec<usize> {
        (0..self.ids.len()).collect()
    }

    /// Graphviz rendering; edges are labelled with their weight. With a
    /// registry, adversarial transactions are drawn in red and honest ones
    /// in blue.
    pub fn to_dot(&self, registry: Option<&Registry>) -> String {
        let mut out = String::from("digraph tournament {\n  node [shape=circle];\n");
        for id in &self.ids {
            let tx = registry.and_then(|r| r.get(id));
            let (color, label) = match tx {
                Some(tx) if tx.origin == Origin::Adversarial => (
                    "red",
                    match &tx.clone_group {
                        Some(g) => format!("{id}\\n({g})"),
                        None => id.to_string(),
                    },
                ),
                Some(_) => ("blue", id.to_string()),
                None => ("black", id.to_string()),
            };
            let _ = writeln!(out, "  \"{id}\" [label=\"{label}\", color={color}];");
        }
        for (u, v) in self.edges_within(&self.all_vertices()) {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                self.ids[u],
                self.ids[v],
                self.weight(u, v)
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Counts, for every pair of transactions, how many orderings put one
/// before the other.
pub fn build_tournament(orderings: &[LocalOrdering]) -> Result<WeightedTournament> {
    let first = orderings.first().ok_or(Error::NoOrderings)?;
    let mut ids = first.sequence.clone();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateTransaction(w[0].clone()));
    }
    let m = ids.len();
    let mut weights = vec![0u64; m * m];
    let mut seq = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    for ordering in orderings {
        let mismatch = || Error::MismatchedOrderings { node: ordering.node.0 };
        if ordering.sequence.len() != m {
            return Err(mismatch());
        }
        seq.clear();
        seen.iter_mut().for_each(|s| *s = false);
        for id in &ordering.sequence {
            let v = ids.binary_search(id).map_err(|_| mismatch())?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::DuplicateTransaction(id.clone()));
            }
            seq.push(v);
        }
        for (i, &u) in seq.iter().enumerate() {
            let row = &mut weights[u * m..(u + 1) * m];
            for &v in &seq[i + 1..] {
                row[v] += 1;
            }
        }
    }
    Ok(WeightedTournament { ids, weights, orderings_used: orderings.len() })
}

/// Strongly connected components of a tournament, contracted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condensation {
    /// Components in topological order; vertices ascending within each.
    pub components: Vec<Vec<usize>>,
    /// `component_of[v]` is the position of `v`'s component.
    pub component_of: Vec<usize>,
    /// Edges between components, as pairs of component positions.
    pub dag: Vec<(usize, usize)>,
}

impl Condensation {
    pub fn component_ids(&self, t: &WeightedTournament) -> Vec<Vec<TxId>> {
        self.components
            .iter()
            .map(|c| c.iter().map(|&v| t.id(v).clone()).collect())
            .collect()
    }
}

/// Strongly connected components of the sub-tournament induced by
/// `vertices`, in topological order, each sorted ascending.
pub fn components_of(t: &WeightedTournament, vertices: &[usize]) -> Vec<Vec<usize>> {
    let k = vertices.len();
    let mut index: Vec<Option<usize>> = vec![None; k];
    let mut low = vec![0usize; k];
    let mut on_stack = vec![false; k];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;
    // (vertex, next successor to examine)
    let mut calls: Vec<(usize, usize)> = Vec::new();

    for root in 0..k {
        if index[root].is_some() {
            continue;
        }
        calls.push((root, 0));
        index[root] = Some(counter);
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, start)) = calls.last() {
            let mut next = start;
            let mut child = None;
            while next < k {
                let w = next;
                next += 1;
                if !t.has_edge(vertices[v], vertices[w]) {
                    continue;
                }
                match index[w] {
                    None => {
                        child = Some(w);
                        break;
                    }
                    Some(iw) if on_stack[w] => low[v] = low[v].min(iw),
                    Some(_) => {}
                }
            }
            if let Some(frame) = calls.last_mut() {
                frame.1 = next;
            }
            if let Some(w) = child {
                index[w] = Some(counter);
                low[w] = counter;
                counter += 1;
                stack.push(w);
                on_stack[w] = true;
                calls.push((w, 0));
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if Some(low[v]) == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(vertices[w]);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    // Tarjan emits sink components first.
    comps.reverse();
    comps
}

pub fn scc_decompose(t: &WeightedTournament) -> Condensation {
    let components = components_of(t, &t.all_vertices());
    let mut component_of = vec![0; t.len()];
    for (c, comp) in components.iter().enumerate() {
        for &v in comp {
            component_of[v] = c;
        }
    }
    let mut dag = BTreeSet::new();
    for (u, v) in t.edges_within(&t.all_vertices()) {
        let (cu, cv) = (component_of[u], component_of[v]);
        if cu != cv {
            dag.insert((cu, cv));
        }
    }
    Condensation { components, component_of, dag: dag.into_iter().collect() }
}

/// Every strongly connected component with at least two vertices, in
/// condensation order.
pub fn condorcet_cycles(t: &WeightedTournament) -> Vec<Vec<TxId>> {
    let cond = scc_decompose(t);
    cond.components
        .iter()
        .filter(|c| c.len() > 1)
        .map(|c| c.iter().map(|&v| t.id(v).clone()).collect())
        .collect()
}
