//! Batch-ordering schemes: how transactions inside one Condorcet cycle are
//! linearized, and how the per-cycle results are stitched into a total
//! order along the condensation.
//!
//! All functions here take vertex indices of a [`WeightedTournament`].
//! Because indices follow lexicographic id order, "smallest id" and
//! "smallest index" coincide.

use std::fmt;
use std::str::FromStr;

use crate::depgraph::{build_tournament, components_of, scc_decompose, WeightedTournament};
use crate::error::{Error, Result};
use crate::model::{LocalOrdering, Registry, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BreakPolicy {
    /// Cut the cycle edge entering the smallest vertex.
    Arbitrary,
    /// Cut a minimum-weight cycle edge.
    WeakestLink,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BatchScheme {
    Alphabetical,
    Hamiltonian(BreakPolicy),
    RankedPairs,
    /// Order independent groups separately; the inner scheme may not itself
    /// be post-decryption.
    PostDecryption(Box<BatchScheme>),
}

impl BatchScheme {
    pub fn post_decryption(inner: BatchScheme) -> Result<Self> {
        if matches!(inner, BatchScheme::PostDecryption(_)) {
            return Err(Error::UnknownScheme("post-decryption cannot nest".into()));
        }
        Ok(BatchScheme::PostDecryption(Box::new(inner)))
    }

    /// Every non-nested scheme, in a fixed order.
    pub fn all() -> Vec<BatchScheme> {
        vec![
            BatchScheme::Alphabetical,
            BatchScheme::Hamiltonian(BreakPolicy::Arbitrary),
            BatchScheme::Hamiltonian(BreakPolicy::WeakestLink),
            BatchScheme::RankedPairs,
            BatchScheme::PostDecryption(Box::new(BatchScheme::RankedPairs)),
        ]
    }
}

impl fmt::Display for BatchScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchScheme::Alphabetical => f.write_str("alphabetical"),
            BatchScheme::Hamiltonian(BreakPolicy::Arbitrary) => f.write_str("hamiltonian-arbitrary"),
            BatchScheme::Hamiltonian(BreakPolicy::WeakestLink) => f.write_str("hamiltonian-weakest"),
            BatchScheme::RankedPairs => f.write_str("ranked-pairs"),
            BatchScheme::PostDecryption(inner) => write!(f, "post-decryption:{inner}"),
        }
    }
}

impl FromStr for BatchScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alphabetical" => Ok(BatchScheme::Alphabetical),
            "hamiltonian-arbitrary" => Ok(BatchScheme::Hamiltonian(BreakPolicy::Arbitrary)),
            "hamiltonian-weakest" => Ok(BatchScheme::Hamiltonian(BreakPolicy::WeakestLink)),
            "ranked-pairs" => Ok(BatchScheme::RankedPairs),
            other => match other.strip_prefix("post-decryption:") {
                Some(inner) => BatchScheme::post_decryption(inner.parse()?),
                None => Err(Error::UnknownScheme(other.to_owned())),
            },
        }
    }
}

pub fn order_alphabetical(component: &[usize]) -> Vec<usize> {
    let mut out = component.to_vec();
    out.sort_unstable();
    out
}

fn check_vertices(t: &WeightedTournament, vertices: &[usize]) -> Result<()> {
    let mut seen = vec![false; t.len()];
    for &v in vertices {
        match seen.get_mut(v) {
            None => return Err(Error::NotTournament(format!("vertex {v} out of range"))),
            Some(true) => return Err(Error::NotTournament(format!("vertex {v} repeated"))),
            Some(s) => *s = true,
        }
    }
    Ok(())
}

/// Hamiltonian path by insertion. Vertices are taken in ascending order;
/// each is appended if the current tail beats it, otherwise placed at the
/// first position from the head that keeps every consecutive edge valid.
pub fn hamiltonian_path(t: &WeightedTournament, vertices: &[usize]) -> Result<Vec<usize>> {
    check_vertices(t, vertices)?;
    let mut intake = vertices.to_vec();
    intake.sort_unstable();
    let mut path: Vec<usize> = Vec::with_capacity(intake.len());
    for v in intake {
        if path.last().is_none_or(|&tail| t.has_edge(tail, v)) {
            path.push(v);
            continue;
        }
        let pos = (0..path.len())
            .find(|&p| (p == 0 || t.has_edge(path[p - 1], v)) && t.has_edge(v, path[p]))
            .expect("a tournament always admits an insertion point");
        path.insert(pos, v);
    }
    Ok(path)
}

/// Hamiltonian cycle of a strongly connected sub-tournament with at least
/// three vertices, returned as a vertex sequence (closing edge implied).
///
/// Starts from the Hamiltonian path, closes the shortest prefix that has a
/// back edge to the head, then grows the cycle one vertex at a time. When
/// no outside vertex can be spliced between two consecutive cycle vertices,
/// every outside vertex either beats the whole cycle or loses to it, and an
/// edge from a loser `b` to a winner `a` lets `c0 -> b -> a -> c2` replace
/// `c0 -> c1 -> c2`.
pub fn hamiltonian_cycle(t: &WeightedTournament, vertices: &[usize]) -> Result<Vec<usize>> {
    let k = vertices.len();
    if k < 3 {
        return Err(Error::NotStronglyConnected(k));
    }
    let path = hamiltonian_path(t, vertices)?;
    let close = (2..k)
        .find(|&j| t.has_edge(path[j], path[0]))
        .ok_or(Error::NotStronglyConnected(k))?;
    let mut cycle = path[..=close].to_vec();
    let mut outside: Vec<usize> = path[close + 1..].to_vec();

    while !outside.is_empty() {
        let splice = outside.iter().enumerate().find_map(|(oi, &x)| {
            (0..cycle.len())
                .find(|&i| t.has_edge(cycle[i], x) && t.has_edge(x, cycle[(i + 1) % cycle.len()]))
                .map(|i| (oi, i))
        });
        if let Some((oi, i)) = splice {
            let x = outside.remove(oi);
            cycle.insert(i + 1, x);
            continue;
        }
        let (winners, losers): (Vec<usize>, Vec<usize>) =
            outside.iter().partition(|&&x| t.has_edge(x, cycle[0]));
        let (b, a) = losers
            .iter()
            .flat_map(|&b| winners.iter().map(move |&a| (b, a)))
            .filter(|&(b, a)| t.has_edge(b, a))
            .min()
            .ok_or(Error::NotStronglyConnected(k))?;
        let c1 = cycle[1];
        cycle.splice(1..2, [b, a]);
        outside.retain(|&x| x != a && x != b);
        outside.push(c1);
    }
    Ok(cycle)
}

/// Linearizes a strongly connected component by building a Hamiltonian
/// cycle and cutting one of its edges; the output starts at the head of
/// the cut edge.
///
/// With [`BreakPolicy::WeakestLink`], ties between minimum-weight edges go
/// to the edge leaving the smallest vertex.
pub fn order_hamiltonian(t: &WeightedTournament, component: &[usize], policy: BreakPolicy) -> Result<Vec<usize>> {
    check_vertices(t, component)?;
    match component {
        [] => return Ok(Vec::new()),
        [v] => return Ok(vec![*v]),
        [u, v] => return Ok(if t.has_edge(*u, *v) { vec![*u, *v] } else { vec![*v, *u] }),
        _ => {}
    }
    if components_of(t, component).len() != 1 {
        return Err(Error::NotStronglyConnected(component.len()));
    }
    let cycle = hamiltonian_cycle(t, component)?;
    let k = cycle.len();
    let start = match policy {
        BreakPolicy::Arbitrary => {
            (0..k).min_by_key(|&i| cycle[i]).expect("non-empty cycle")
        }
        BreakPolicy::WeakestLink => {
            let cut = (0..k)
                .min_by_key(|&i| (t.weight(cycle[i], cycle[(i + 1) % k]), cycle[i]))
                .expect("non-empty cycle");
            (cut + 1) % k
        }
    };
    Ok(cycle[start..].iter().chain(&cycle[..start]).copied().collect())
}

/// Result of running ranked pairs, including which edges were locked in
/// and which were dropped for contradicting stronger ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedPairsOutcome {
    pub order: Vec<usize>,
    pub locked: Vec<(usize, usize)>,
    pub skipped: Vec<(usize, usize)>,
}

/// Reachability over locked edges, one bitset row per vertex.
struct Closure {
    words: usize,
    rows: Vec<u64>,
}

impl Closure {
    fn new(k: usize) -> Self {
        let words = k.div_ceil(64).max(1);
        let mut rows = vec![0u64; k * words];
        for v in 0..k {
            rows[v * words + v / 64] |= 1 << (v % 64);
        }
        Closure { words, rows }
    }

    fn reaches(&self, a: usize, b: usize) -> bool {
        self.rows[a * self.words + b / 64] & (1 << (b % 64)) != 0
    }

    /// Adds `u -> v`; the caller has checked `v` does not reach `u`.
    fn lock(&mut self, u: usize, v: usize) {
        let k = self.rows.len() / self.words;
        let w = self.words;
        let target: Vec<u64> = self.rows[v * w..(v + 1) * w].to_vec();
        for a in 0..k {
            if self.reaches(a, u) {
                for (dst, src) in self.rows[a * w..(a + 1) * w].iter_mut().zip(&target) {
                    *dst |= src;
                }
            }
        }
    }

    fn out_count(&self, a: usize) -> u32 {
        self.rows[a * self.words..(a + 1) * self.words].iter().map(|x| x.count_ones()).sum()
    }
}

/// Tideman's ranked pairs over the edges inside `component`.
///
/// Edges are visited by descending weight, then ascending source, then
/// ascending target. An edge is locked unless its head already reaches its
/// tail through locked edges. Once every edge has been visited the locked
/// relation is a strict total order.
pub fn ranked_pairs(t: &WeightedTournament, component: &[usize]) -> RankedPairsOutcome {
    let k = component.len();
    let mut local: Vec<usize> = component.to_vec();
    local.sort_unstable();
    let pos = |v: usize| local.binary_search(&v).expect("edge endpoint in component");

    let mut edges = t.edges_within(&local);
    edges.sort_by(|&(a, b), &(c, d)| t.weight(c, d).cmp(&t.weight(a, b)).then((a, b).cmp(&(c, d))));

    let mut closure = Closure::new(k);
    let mut locked = Vec::new();
    let mut skipped = Vec::new();
    for (u, v) in edges {
        let (lu, lv) = (pos(u), pos(v));
        if closure.reaches(lv, lu) {
            skipped.push((u, v));
        } else {
            closure.lock(lu, lv);
            debug_assert!(!closure.reaches(lv, lu), "locked relation became cyclic");
            locked.push((u, v));
        }
    }

    // In a strict total order the i-th element reaches exactly k - i vertices
    // (itself included).
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(closure.out_count(i)));
    debug_assert!(order.iter().enumerate().all(|(r, &i)| closure.out_count(i) as usize == k - r));
    RankedPairsOutcome { order: order.into_iter().map(|i| local[i]).collect(), locked, skipped }
}

pub fn order_ranked_pairs(t: &WeightedTournament, component: &[usize]) -> Vec<usize> {
    ranked_pairs(t, component).order
}

/// Connected components of the conflict graph on `component`, where two
/// transactions conflict iff their key sets intersect. Groups are sorted
/// internally and listed by smallest member.
pub fn dependency_groups(t: &WeightedTournament, component: &[usize], registry: &Registry) -> Result<Vec<Vec<usize>>> {
    let mut local = component.to_vec();
    local.sort_unstable();
    let mut parent: Vec<usize> = (0..local.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut owner: std::collections::BTreeMap<&str, usize> = Default::default();
    for (i, &v) in local.iter().enumerate() {
        let tx = registry.get(t.id(v)).ok_or_else(|| Error::UnknownTransaction(t.id(v).clone()))?;
        for key in &tx.keys {
            match owner.get(key.as_str()) {
                Some(&j) => {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    // Keep the smaller index as root so roots are group minima.
                    parent[ri.max(rj)] = ri.min(rj);
                }
                None => {
                    owner.insert(key.as_str(), i);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &v) in local.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(v);
    }
    Ok(groups.into_values().collect())
}

/// Orders `vertices` by condensing their induced sub-tournament and
/// applying `scheme` to each component in turn.
fn order_condensed(
    t: &WeightedTournament,
    vertices: &[usize],
    scheme: &BatchScheme,
    registry: Option<&Registry>,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(vertices.len());
    for comp in components_of(t, vertices) {
        out.extend(order_component(t, &comp, scheme, registry)?);
    }
    Ok(out)
}

/// Post-decryption resolution: split the component into independent
/// groups, order each group with `inner`, then order the groups by ranked
/// pairs on summed cross-group weights.
pub fn order_post_decryption(
    t: &WeightedTournament,
    component: &[usize],
    registry: &Registry,
    inner: &BatchScheme,
) -> Result<Vec<usize>> {
    if matches!(inner, BatchScheme::PostDecryption(_)) {
        return Err(Error::UnknownScheme("post-decryption cannot nest".into()));
    }
    let groups = dependency_groups(t, component, registry)?;
    if groups.len() == 1 {
        return order_condensed(t, &groups[0], inner, Some(registry));
    }
    let g = groups.len();
    let mut weights = vec![0u64; g * g];
    for (i, gi) in groups.iter().enumerate() {
        for (j, gj) in groups.iter().enumerate() {
            if i != j {
                weights[i * g + j] = gi.iter().flat_map(|&u| gj.iter().map(move |&v| t.weight(u, v))).sum();
            }
        }
    }
    // A group is named by its smallest member, so the tie rule of the group
    // tournament favours the group holding the smaller id.
    let names: Vec<TxId> = groups.iter().map(|gr| t.id(gr[0]).clone()).collect();
    let group_tournament = WeightedTournament::from_weight_matrix(names, weights, t.orderings_used())?;
    let group_order = order_ranked_pairs(&group_tournament, &group_tournament.all_vertices());

    let mut out = Vec::with_capacity(component.len());
    for gi in group_order {
        out.extend(order_condensed(t, &groups[gi], inner, Some(registry))?);
    }
    Ok(out)
}

/// Applies `scheme` to one strongly connected component.
pub fn order_component(
    t: &WeightedTournament,
    component: &[usize],
    scheme: &BatchScheme,
    registry: Option<&Registry>,
) -> Result<Vec<usize>> {
    match scheme {
        BatchScheme::Alphabetical => Ok(order_alphabetical(component)),
        BatchScheme::Hamiltonian(policy) => order_hamiltonian(t, component, *policy),
        BatchScheme::RankedPairs => Ok(order_ranked_pairs(t, component)),
        BatchScheme::PostDecryption(inner) => {
            order_post_decryption(t, component, registry.ok_or(Error::MissingRegistry)?, inner)
        }
    }
}

/// Total order over every vertex: components in condensation order, each
/// linearized by `scheme`.
pub fn order_tournament(t: &WeightedTournament, scheme: &BatchScheme, registry: Option<&Registry>) -> Result<Vec<TxId>> {
    let cond = scc_decompose(t);
    let mut out = Vec::with_capacity(t.len());
    for comp in &cond.components {
        out.extend(order_component(t, comp, scheme, registry)?.into_iter().map(|v| t.id(v).clone()));
    }
    Ok(out)
}

pub fn final_ordering(orderings: &[LocalOrdering], scheme: &BatchScheme, registry: Option<&Registry>) -> Result<Vec<TxId>> {
    order_tournament(&build_tournament(orderings)?, scheme, registry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Transaction;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orderings(lists: &[&[&str]]) -> Vec<LocalOrdering> {
        let owned: Vec<Vec<&str>> = lists.iter().map(|l| l.to_vec()).collect();
        LocalOrdering::from_lists(&owned).unwrap()
    }

    fn three_node_attack() -> WeightedTournament {
        build_tournament(&orderings(&[
            &["A", "B", "t1", "t2", "t3"],
            &["B", "t1", "t2", "t3", "A"],
            &["t1", "t2", "t3", "A", "B"],
        ]))
        .unwrap()
    }

    fn names(t: &WeightedTournament, vs: &[usize]) -> Vec<String> {
        vs.iter().map(|&v| t.id(v).to_string()).collect()
    }

    fn ix(t: &WeightedTournament, s: &str) -> usize {
        t.index_of(&s.into()).unwrap()
    }

    fn three_cycle() -> WeightedTournament {
        WeightedTournament::from_edges([("x", "y"), ("y", "z"), ("z", "x")]).unwrap()
    }

    fn random_tournament(rng: &mut ChaCha8Rng, m: usize) -> WeightedTournament {
        let mut edges = Vec::new();
        for u in 0..m {
            for v in u + 1..m {
                let (a, b) = if rng.random_bool(0.5) { (u, v) } else { (v, u) };
                edges.push((format!("v{a:02}"), format!("v{b:02}")));
            }
        }
        WeightedTournament::from_edges(edges).unwrap()
    }

    fn path_is_valid(t: &WeightedTournament, path: &[usize]) -> bool {
        path.windows(2).all(|w| t.has_edge(w[0], w[1]))
    }

    // Independent ranked-pairs oracle: edge list + DFS cycle test + Kahn.
    fn ranked_pairs_oracle(t: &WeightedTournament, comp: &[usize]) -> Vec<usize> {
        let mut edges = Vec::new();
        for &u in comp {
            for &v in comp {
                if t.has_edge(u, v) {
                    edges.push((t.weight(u, v), u, v));
                }
            }
        }
        edges.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut locked: Vec<(usize, usize)> = Vec::new();
        let reaches = |locked: &[(usize, usize)], from: usize, to: usize| {
            let mut stack = vec![from];
            let mut seen = vec![from];
            while let Some(x) = stack.pop() {
                if x == to {
                    return true;
                }
                for &(a, b) in locked {
                    if a == x && !seen.contains(&b) {
                        seen.push(b);
                        stack.push(b);
                    }
                }
            }
            false
        };
        for (_, u, v) in edges {
            if !reaches(&locked, v, u) {
                locked.push((u, v));
            }
        }
        let mut remaining: Vec<usize> = comp.to_vec();
        let mut out = Vec::new();
        while !remaining.is_empty() {
            let src = *remaining
                .iter()
                .filter(|&&x| !locked.iter().any(|&(a, b)| b == x && remaining.contains(&a)))
                .min()
                .unwrap();
            out.push(src);
            remaining.retain(|&x| x != src);
        }
        out
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in BatchScheme::all() {
            assert_eq!(s.to_string().parse::<BatchScheme>().unwrap(), s);
        }
        assert_eq!(
            "post-decryption:hamiltonian-weakest".parse::<BatchScheme>().unwrap(),
            BatchScheme::PostDecryption(Box::new(BatchScheme::Hamiltonian(BreakPolicy::WeakestLink)))
        );
        assert!("post-decryption:post-decryption:ranked-pairs".parse::<BatchScheme>().is_err());
        assert!("kemeny".parse::<BatchScheme>().is_err());
        assert!(BatchScheme::post_decryption(BatchScheme::PostDecryption(Box::new(BatchScheme::RankedPairs))).is_err());
    }

    #[test]
    fn alphabetical_sorts_ids() {
        let t = three_node_attack();
        let comp = [ix(&t, "t2"), ix(&t, "A"), ix(&t, "t1")];
        assert_eq!(names(&t, &order_alphabetical(&comp)), ["A", "t1", "t2"]);
        assert_eq!(order_alphabetical(&[3]), vec![3]);
        assert_eq!(names(&t, &order_alphabetical(&t.all_vertices())), ["A", "B", "t1", "t2", "t3"]);
    }

    #[test]
    fn hamiltonian_path_small_cases() {
        let tr = WeightedTournament::from_edges([("x", "y"), ("y", "z"), ("x", "z")]).unwrap();
        assert_eq!(names(&tr, &hamiltonian_path(&tr, &tr.all_vertices()).unwrap()), ["x", "y", "z"]);

        let c = three_cycle();
        let path = hamiltonian_path(&c, &c.all_vertices()).unwrap();
        // All three rotations are valid paths; the intake order picks the first.
        let rotations = [[0, 1, 2], [1, 2, 0], [2, 0, 1]];
        for r in rotations {
            assert!(path_is_valid(&c, &r));
        }
        assert!(rotations.iter().any(|r| r[..] == path[..]));
        assert_eq!(names(&c, &path), ["x", "y", "z"]);

        assert!(hamiltonian_path(&c, &[0, 0]).is_err());
        assert!(hamiltonian_path(&c, &[7]).is_err());
    }

    #[test]
    fn hamiltonian_paths_on_random_tournaments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let t = random_tournament(&mut rng, 9);
            let path = hamiltonian_path(&t, &t.all_vertices()).unwrap();
            let mut sorted = path.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, t.all_vertices());
            assert!(path_is_valid(&t, &path));
        }
    }

    #[test]
    fn weakest_link_on_three_node_attack() {
        let t = three_node_attack();
        // Enumerate every Hamiltonian cycle through vertex 0 by brute force.
        let rest: Vec<usize> = (1..5).collect();
        let mut cycles = Vec::new();
        let mut perm = rest.clone();
        let mut permute = |p: &[usize]| {
            let cyc: Vec<usize> = std::iter::once(0).chain(p.iter().copied()).collect();
            if (0..5).all(|i| t.has_edge(cyc[i], cyc[(i + 1) % 5])) {
                cycles.push(cyc);
            }
        };
        fn heap(k: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            if k == 1 {
                f(a);
                return;
            }
            for i in 0..k {
                heap(k - 1, a, f);
                let j = if k.is_multiple_of(2) { i } else { 0 };
                a.swap(j, k - 1);
            }
        }
        heap(4, &mut perm, &mut permute);
        assert_eq!(cycles.len(), 1);
        assert_eq!(names(&t, &cycles[0]), ["A", "B", "t1", "t2", "t3"]);
        let weights: Vec<u64> = (0..5).map(|i| t.weight(cycles[0][i], cycles[0][(i + 1) % 5])).collect();
        assert_eq!(weights, [2, 2, 3, 3, 2]);

        let got = order_hamiltonian(&t, &t.all_vertices(), BreakPolicy::WeakestLink).unwrap();
        assert_eq!(names(&t, &got), ["B", "t1", "t2", "t3", "A"]);
        let arb = order_hamiltonian(&t, &t.all_vertices(), BreakPolicy::Arbitrary).unwrap();
        assert_eq!(names(&t, &arb), ["A", "B", "t1", "t2", "t3"]);
    }

    #[test]
    fn hamiltonian_small_components() {
        let c = three_cycle();
        assert_eq!(order_hamiltonian(&c, &[1], BreakPolicy::Arbitrary).unwrap(), vec![1]);
        assert_eq!(order_hamiltonian(&c, &[2, 0], BreakPolicy::WeakestLink).unwrap(), vec![2, 0]);
        assert_eq!(names(&c, &order_hamiltonian(&c, &[0, 1, 2], BreakPolicy::Arbitrary).unwrap()), ["x", "y", "z"]);

        let tr = WeightedTournament::from_edges([("x", "y"), ("y", "z"), ("x", "z")]).unwrap();
        assert_eq!(
            order_hamiltonian(&tr, &tr.all_vertices(), BreakPolicy::Arbitrary).unwrap_err(),
            Error::NotStronglyConnected(3)
        );
    }

    #[test]
    fn hamiltonian_cycles_on_random_strong_tournaments() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut checked = 0;
        while checked < 300 {
            let m = rng.random_range(3..=12);
            let t = random_tournament(&mut rng, m);
            if components_of(&t, &t.all_vertices()).len() != 1 {
                continue;
            }
            checked += 1;
            let cyc = hamiltonian_cycle(&t, &t.all_vertices()).unwrap();
            assert_eq!(cyc.len(), m);
            assert!((0..m).all(|i| t.has_edge(cyc[i], cyc[(i + 1) % m])));
            for policy in [BreakPolicy::Arbitrary, BreakPolicy::WeakestLink] {
                let p = order_hamiltonian(&t, &t.all_vertices(), policy).unwrap();
                assert!(path_is_valid(&t, &p));
                assert!(t.has_edge(p[m - 1], p[0]), "closing edge restores the cycle");
            }
        }
    }

    #[test]
    fn ranked_pairs_on_three_node_attack() {
        let t = three_node_attack();
        let out = ranked_pairs(&t, &t.all_vertices());
        assert_eq!(names(&t, &out.order), ["A", "B", "t1", "t2", "t3"]);
        let e = |a: &str, b: &str| (ix(&t, a), ix(&t, b));
        assert_eq!(&out.locked[..3], &[e("t1", "t2"), e("t1", "t3"), e("t2", "t3")]);
        for edge in [e("A", "B"), e("B", "t1"), e("B", "t2"), e("B", "t3")] {
            assert!(out.locked.contains(&edge));
        }
        let mut skipped = out.skipped.clone();
        skipped.sort_unstable();
        let mut expect = vec![e("t1", "A"), e("t2", "A"), e("t3", "A")];
        expect.sort_unstable();
        assert_eq!(skipped, expect);
        assert_eq!(out.order, ranked_pairs_oracle(&t, &t.all_vertices()));
    }

    #[test]
    fn ranked_pairs_on_transitive_input() {
        let t = build_tournament(&orderings(&[&["c", "a", "d", "b"], &["c", "a", "d", "b"]])).unwrap();
        let out = ranked_pairs(&t, &t.all_vertices());
        assert_eq!(names(&t, &out.order), ["c", "a", "d", "b"]);
        assert!(out.skipped.is_empty());
    }

    #[test]
    fn ranked_pairs_with_minority_reversal() {
        let t = build_tournament(&orderings(&[
            &["A1", "A2", "A3", "A4", "t1", "t2", "t3"],
            &["A2", "A3", "A4", "t1", "t2", "t3", "A1"],
            &["A3", "A4", "t1", "t2", "t3", "A1", "A2"],
            &["A4", "t1", "t2", "t3", "A1", "A2", "A3"],
            &["t3", "t2", "t1", "A1", "A2", "A3", "A4"],
        ]))
        .unwrap();
        assert_eq!(t.weight(ix(&t, "t1"), ix(&t, "t2")), 4);
        let out = ranked_pairs(&t, &t.all_vertices());
        let mut sorted = out.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, t.all_vertices());
        let rank: Vec<usize> = {
            let mut r = vec![0; t.len()];
            for (i, &v) in out.order.iter().enumerate() {
                r[v] = i;
            }
            r
        };
        for &(u, v) in &out.locked {
            assert!(rank[u] < rank[v]);
        }
        assert_eq!(out.order, ranked_pairs_oracle(&t, &t.all_vertices()));
    }

    fn keyed_registry(items: &[(&str, &[&str])]) -> Registry {
        Registry::from_transactions(
            items.iter().enumerate().map(|(i, (id, keys))| Transaction::honest(*id, i as f64).with_keys(keys.iter().copied())),
        )
        .unwrap()
    }

    #[test]
    fn dependency_groups_follow_key_overlap() {
        let t = three_node_attack();
        let all = t.all_vertices();
        let reg = keyed_registry(&[("A", &["k9"]), ("B", &["k9"]), ("t1", &["k1"]), ("t2", &["k1", "k2"]), ("t3", &["k2"])]);
        let groups = dependency_groups(&t, &all, &reg).unwrap();
        let named: Vec<Vec<String>> = groups.iter().map(|g| names(&t, g)).collect();
        assert_eq!(named, [vec!["A", "B"], vec!["t1", "t2", "t3"]]);

        let disjoint = keyed_registry(&[("A", &["a"]), ("B", &["b"]), ("t1", &["c"]), ("t2", &["d"]), ("t3", &[])]);
        assert_eq!(dependency_groups(&t, &all, &disjoint).unwrap().len(), 5);

        let shared = keyed_registry(&[("A", &["k"]), ("B", &["k"]), ("t1", &["k"]), ("t2", &["k"]), ("t3", &["k"])]);
        assert_eq!(dependency_groups(&t, &all, &shared).unwrap(), vec![all.clone()]);

        let partial = keyed_registry(&[("A", &["k"])]);
        assert!(dependency_groups(&t, &all, &partial).is_err());
    }

    #[test]
    fn post_decryption_on_three_node_attack() {
        let t = three_node_attack();
        let all = t.all_vertices();
        let reg = keyed_registry(&[("A", &["k9"]), ("B", &["k9"]), ("t1", &["k1"]), ("t2", &["k1"]), ("t3", &["k1"])]);
        // Summed cross weights straight from the three orderings.
        let lists = [
            ["A", "B", "t1", "t2", "t3"],
            ["B", "t1", "t2", "t3", "A"],
            ["t1", "t2", "t3", "A", "B"],
        ];
        let before = |x: &str, y: &str| lists.iter().filter(|l| l.iter().position(|s| *s == x) < l.iter().position(|s| *s == y)).count();
        let adv_first: usize = ["A", "B"].iter().flat_map(|a| ["t1", "t2", "t3"].map(|h| before(a, h))).sum();
        let hon_first: usize = ["A", "B"].iter().flat_map(|a| ["t1", "t2", "t3"].map(|h| before(h, a))).sum();
        assert_eq!((adv_first, hon_first), (9, 9));

        let out = order_post_decryption(&t, &all, &reg, &BatchScheme::RankedPairs).unwrap();
        // Tie between the groups goes to the one holding "A".
        assert_eq!(names(&t, &out), ["A", "B", "t1", "t2", "t3"]);
        for inner in [BatchScheme::Alphabetical, BatchScheme::Hamiltonian(BreakPolicy::Arbitrary)] {
            let out = names(&t, &order_post_decryption(&t, &all, &reg, &inner).unwrap());
            let honest: Vec<&String> = out.iter().filter(|s| s.starts_with('t')).collect();
            assert_eq!(honest, ["t1", "t2", "t3"]);
        }
    }

    #[test]
    fn post_decryption_degenerate_groupings() {
        let t = three_node_attack();
        let all = t.all_vertices();
        let shared = keyed_registry(&[("A", &["k"]), ("B", &["k"]), ("t1", &["k"]), ("t2", &["k"]), ("t3", &["k"])]);
        for inner in [BatchScheme::RankedPairs, BatchScheme::Hamiltonian(BreakPolicy::WeakestLink), BatchScheme::Alphabetical] {
            assert_eq!(
                order_post_decryption(&t, &all, &shared, &inner).unwrap(),
                order_component(&t, &all, &inner, None).unwrap()
            );
        }

        let pair = build_tournament(&orderings(&[&["u", "v"], &["u", "v"], &["v", "u"]])).unwrap();
        let reg = keyed_registry(&[("u", &["a"]), ("v", &["b"])]);
        assert_eq!(names(&pair, &order_post_decryption(&pair, &[0, 1], &reg, &BatchScheme::RankedPairs).unwrap()), ["u", "v"]);
        let nested = BatchScheme::PostDecryption(Box::new(BatchScheme::RankedPairs));
        assert!(order_post_decryption(&pair, &[0, 1], &reg, &nested).is_err());
        assert_eq!(
            order_component(&pair, &[0, 1], &BatchScheme::post_decryption(BatchScheme::RankedPairs).unwrap(), None),
            Err(Error::MissingRegistry)
        );
    }

    #[test]
    fn final_ordering_examples() {
        let unanimous = orderings(&[&["x", "y", "z"] as &[&str]; 3]);
        for scheme in BatchScheme::all() {
            let reg = keyed_registry(&[("x", &[]), ("y", &[]), ("z", &[])]);
            let out = final_ordering(&unanimous, &scheme, Some(&reg)).unwrap();
            assert_eq!(out, ["x", "y", "z"].map(TxId::from).to_vec(), "{scheme}");
        }

        let ex = orderings(&[
            &["A", "B", "t1", "t2", "t3"],
            &["B", "t1", "t2", "t3", "A"],
            &["t1", "t2", "t3", "A", "B"],
        ]);
        let expect = ["A", "B", "t1", "t2", "t3"].map(TxId::from).to_vec();
        assert_eq!(final_ordering(&ex, &BatchScheme::RankedPairs, None).unwrap(), expect);
        assert_eq!(final_ordering(&ex, &BatchScheme::Alphabetical, None).unwrap(), expect);

        // tx1 -> "0c", tx2 -> "0b", tx3 -> "0a": alphabetical now reverses them.
        let renamed = orderings(&[
            &["A", "B", "0c", "0b", "0a"],
            &["B", "0c", "0b", "0a", "A"],
            &["0c", "0b", "0a", "A", "B"],
        ]);
        assert_eq!(
            final_ordering(&renamed, &BatchScheme::Alphabetical, None).unwrap(),
            ["0a", "0b", "0c", "A", "B"].map(TxId::from).to_vec()
        );
        // Hand-executed: the weight-3 honest edges lock first, then the
        // weight-2 edges in (source, target) order lock 0a->A, 0b->A, 0c->A
        // and A->B; every B->0x edge would close a cycle.
        let t = build_tournament(&renamed).unwrap();
        let rp = final_ordering(&renamed, &BatchScheme::RankedPairs, None).unwrap();
        assert_eq!(rp, ["0c", "0b", "0a", "A", "B"].map(TxId::from).to_vec());
        let oracle: Vec<TxId> = ranked_pairs_oracle(&t, &t.all_vertices()).into_iter().map(|v| t.id(v).clone()).collect();
        assert_eq!(rp, oracle);
    }

    /// Random attack-shaped instance: nodes split into parts, each part gets
    /// every adversarial transaction either before or after the honest
    /// block, and all nodes agree on the honest order.
    fn unanimous_honest_instance(rng: &mut ChaCha8Rng) -> (Vec<LocalOrdering>, Vec<TxId>) {
        let parts = rng.random_range(3..=5);
        let n = rng.random_range(parts..=3 * parts);
        let mut honest: Vec<String> = (0..rng.random_range(2..=6)).map(|i| format!("h{i}{:04x}", rng.random::<u16>())).collect();
        honest.shuffle(rng);
        let adv: Vec<String> = (0..rng.random_range(2..=4)).map(|i| format!("a{i}")).collect();
        let templates: Vec<Vec<String>> = (0..parts)
            .map(|_| {
                let mut shuffled = adv.clone();
                shuffled.shuffle(rng);
                let split = rng.random_range(0..=shuffled.len());
                let mut seq = shuffled[..split].to_vec();
                seq.extend(honest.iter().cloned());
                seq.extend(shuffled[split..].iter().cloned());
                seq
            })
            .collect();
        let lists: Vec<Vec<String>> = (0..n).map(|i| templates[i % parts].clone()).collect();
        (LocalOrdering::from_lists(&lists).unwrap(), honest.into_iter().map(TxId::from).collect())
    }

    #[test]
    fn ranked_pairs_keeps_unanimous_honest_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut strong = 0;
        for _ in 0..2000 {
            let (ords, honest) = unanimous_honest_instance(&mut rng);
            let t = build_tournament(&ords).unwrap();
            if scc_decompose(&t).components.len() == 1 {
                strong += 1;
            }
            let out = order_tournament(&t, &BatchScheme::RankedPairs, None).unwrap();
            let projected: Vec<TxId> = out.into_iter().filter(|id| honest.contains(id)).collect();
            assert_eq!(projected, honest);
        }
        assert!(strong > 50, "too few strongly connected instances: {strong}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn schemes_output_permutations_respecting_condensation(seed in any::<u64>(), n in 1usize..8, m in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<String> = (0..m).map(|i| format!("t{i}")).collect();
            let lists: Vec<Vec<String>> = (0..n).map(|_| { let mut l = base.clone(); l.shuffle(&mut rng); l }).collect();
            let ords = LocalOrdering::from_lists(&lists).unwrap();
            let t = build_tournament(&ords).unwrap();
            let reg = Registry::from_transactions(base.iter().map(|id| Transaction::honest(id.as_str(), 0.0).with_keys([format!("k{}", rng.random_range(0..3))]))).unwrap();
            let cond = scc_decompose(&t);
            for scheme in BatchScheme::all() {
                let out = order_tournament(&t, &scheme, Some(&reg)).unwrap();
                let mut sorted = out.clone();
                sorted.sort();
                prop_assert_eq!(&sorted, &t.ids().to_vec());
                let comp_seq: Vec<usize> = out.iter().map(|id| cond.component_of[t.index_of(id).unwrap()]).collect();
                prop_assert!(comp_seq.windows(2).all(|w| w[0] <= w[1]));
            }
            for comp in &cond.components {
                prop_assert_eq!(order_ranked_pairs(&t, comp), ranked_pairs_oracle(&t, comp));
            }
        }
    }
}
