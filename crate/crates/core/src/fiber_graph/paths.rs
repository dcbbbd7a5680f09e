use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use rayon::prelude::*;

use super::{FiberGraph, PathResult};

/// Relative slack when deciding whether an edge lies on a shortest path.
const TIGHT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawPath {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub length: f64,
}

impl RawPath {
    fn from_edges(g: &FiberGraph, src: usize, edges: Vec<usize>) -> Self {
        let mut nodes = Vec::with_capacity(edges.len() + 1);
        nodes.push(src);
        let mut cur = src;
        let mut length = 0.0;
        for &e in &edges {
            let (a, b) = g.ends(e);
            cur = if a == cur { b } else { a };
            nodes.push(cur);
            length += g.weight(e);
        }
        RawPath { nodes, edges, length }
    }
}

/// Single-source distances over the enabled edges (and nodes, when given).
pub(crate) fn dijkstra(g: &FiberGraph, src: usize, edge_ok: &[bool], node_ok: Option<&[bool]>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    if node_ok.is_some_and(|ok| !ok[src]) {
        return dist;
    }
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Key(0.0), src)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(e, v) in g.adjacency(u) {
            if !edge_ok[e] || node_ok.is_some_and(|ok| !ok[v]) {
                continue;
            }
            let nd = d + g.weight(e);
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    dist
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIGHT_EPS * b.abs().max(1.0)
}

/// True when `e` (from `u` to `v`) lies on some shortest path out of the source.
pub(crate) fn is_tight(g: &FiberGraph, dist: &[f64], u: usize, e: usize, v: usize) -> bool {
    dist[u].is_finite() && dist[u] < dist[v] && approx_eq(dist[u] + g.weight(e), dist[v])
}

/// Among the shortest `src`-`dst` paths described by `dist`, the one with the
/// lexicographically smallest conduit-id sequence.
pub(crate) fn tie_broken_path(
    g: &FiberGraph,
    dist: &[f64],
    src: usize,
    dst: usize,
    edge_ok: &[bool],
    node_ok: Option<&[bool]>,
) -> Option<RawPath> {
    if !dist[dst].is_finite() {
        return None;
    }
    if src == dst {
        return Some(RawPath { nodes: vec![src], edges: vec![], length: 0.0 });
    }
    let usable = |e: usize, n: usize| edge_ok[e] && node_ok.is_none_or(|ok| ok[n]);

    // Nodes from which dst is reached along tight edges.
    let mut leads = vec![false; g.node_count()];
    leads[dst] = true;
    let mut stack = vec![dst];
    while let Some(v) = stack.pop() {
        for &(e, u) in g.adjacency(v) {
            if !leads[u] && usable(e, u) && is_tight(g, dist, u, e, v) {
                leads[u] = true;
                stack.push(u);
            }
        }
    }
    debug_assert!(leads[src]);

    let mut edges = Vec::new();
    let mut cur = src;
    while cur != dst {
        // adjacency lists are sorted by conduit rank
        let &(e, _) = g
            .adjacency(cur)
            .iter()
            .find(|&&(e, v)| leads[v] && usable(e, v) && is_tight(g, dist, cur, e, v))?;
        let (a, b) = g.ends(e);
        cur = if a == cur { b } else { a };
        edges.push(e);
    }
    Some(RawPath::from_edges(g, src, edges))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AllPairs {
    /// Ordered by source, then destination, in endpoint-table order.
    pub paths: Vec<PathResult>,
    pub unreachable: Vec<(String, String)>,
}

pub(crate) fn all_pairs(g: &FiberGraph, sources: &[usize], edge_ok: &[bool]) -> AllPairs {
    let per_source: Vec<(Vec<PathResult>, Vec<(String, String)>)> = sources
        .par_iter()
        .map(|&s| {
            let dist = dijkstra(g, s, edge_ok, None);
            let mut found = Vec::new();
            let mut missing = Vec::new();
            for t in 0..g.node_count() {
                if t == s {
                    continue;
                }
                match tie_broken_path(g, &dist, s, t, edge_ok, None) {
                    Some(raw) => found.push(g.to_path_result(&raw)),
                    None => missing.push((g.endpoints()[s].id.clone(), g.endpoints()[t].id.clone())),
                }
            }
            (found, missing)
        })
        .collect();
    let mut out = AllPairs::default();
    for (found, missing) in per_source {
        out.paths.extend(found);
        out.unreachable.extend(missing);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    length: f64,
    ranks: Vec<u32>,
    path: RawPath,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then_with(|| self.ranks.cmp(&other.ranks))
    }
}

/// Yen's k loopless shortest paths.
pub(crate) fn yen(g: &FiberGraph, src: usize, dst: usize, k: usize, edge_ok: &[bool]) -> Vec<RawPath> {
    let dist = dijkstra(g, src, edge_ok, None);
    let Some(first) = tie_broken_path(g, &dist, src, dst, edge_ok, None) else {
        return Vec::new();
    };
    let mut accepted = vec![first];
    if src == dst {
        return accepted;
    }
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    seen.insert(accepted[0].edges.clone());
    let mut pending: BTreeSet<Candidate> = BTreeSet::new();

    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.edges.len() {
            let spur = prev.nodes[i];
            let root_nodes = &prev.nodes[..=i];
            let root_edges = &prev.edges[..i];

            let mut edges = edge_ok.to_vec();
            for p in &accepted {
                if p.edges.len() > i && p.nodes[..=i] == *root_nodes && p.edges[..i] == *root_edges {
                    edges[p.edges[i]] = false;
                }
            }
            let mut nodes = vec![true; g.node_count()];
            for &n in &root_nodes[..i] {
                nodes[n] = false;
            }

            let spur_dist = dijkstra(g, spur, &edges, Some(&nodes));
            let Some(tail) = tie_broken_path(g, &spur_dist, spur, dst, &edges, Some(&nodes)) else {
                continue;
            };
            let mut full = root_edges.to_vec();
            full.extend_from_slice(&tail.edges);
            if seen.insert(full.clone()) {
                let path = RawPath::from_edges(g, src, full);
                let ranks = path.edges.iter().map(|&e| g.rank(e)).collect();
                pending.insert(Candidate { length: path.length, ranks, path });
            }
        }
        match pending.pop_first() {
            Some(c) => accepted.push(c.path),
            None => break,
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::super::tests::ep;
    use super::super::{Conduit, FiberGraph};
    use proptest::prelude::*;

    /// Random connected-ish multigraph with integer lengths so float sums are exact.
    fn random_graph(n: usize, edges: &[(usize, usize, u32)]) -> FiberGraph {
        let eps = (0..n).map(|i| ep(&format!("v{i:02}"), (i / 4) as f64 * 0.001, (i % 4) as f64 * 0.001, None)).collect();
        let cs = edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b, _))| a != b)
            .map(|(i, &(a, b, w))| Conduit::new(&format!("e{i:02}"), &format!("v{a:02}"), &format!("v{b:02}"), w as f64, &[]))
            .collect();
        FiberGraph::new(eps, cs, false).unwrap().0
    }

    fn floyd_warshall(g: &FiberGraph) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in 0..g.conduit_count() {
            let (a, b) = g.ends(e);
            let w = g.weight(e);
            if w < d[a][b] {
                d[a][b] = w;
                d[b][a] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    /// Every simple path between two nodes, as conduit-index sequences.
    fn simple_paths(g: &FiberGraph, s: usize, t: usize) -> Vec<(f64, Vec<usize>)> {
        fn walk(g: &FiberGraph, cur: usize, t: usize, seen: &mut Vec<bool>, stack: &mut Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>) {
            if cur == t {
                out.push((stack.iter().map(|&e| g.weight(e)).sum(), stack.clone()));
                return;
            }
            for &(e, v) in g.adjacency(cur) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(e);
                    walk(g, v, t, seen, stack, out);
                    stack.pop();
                    seen[v] = false;
                }
            }
        }
        let mut seen = vec![false; g.node_count()];
        seen[s] = true;
        let mut out = Vec::new();
        walk(g, s, t, &mut seen, &mut Vec::new(), &mut out);
        out
    }

    fn graph_strategy() -> impl Strategy<Value = FiberGraph> {
        (2usize..=8).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, 1u32..20), 1..14).prop_map(move |e| random_graph(n, &e))
        })
    }

    proptest! {
        #[test]
        fn tie_break_is_lexicographic_minimum(g in graph_strategy()) {
            let all = g.all_edges();
            for s in 0..g.node_count() {
                let dist = super::dijkstra(&g, s, &all, None);
                for t in 0..g.node_count() {
                    if s == t { continue; }
                    let got = super::tie_broken_path(&g, &dist, s, t, &all, None);
                    let mut brute = simple_paths(&g, s, t);
                    brute.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| {
                        let ra: Vec<u32> = a.1.iter().map(|&e| g.rank(e)).collect();
                        let rb: Vec<u32> = b.1.iter().map(|&e| g.rank(e)).collect();
                        ra.cmp(&rb)
                    }));
                    match (got, brute.first()) {
                        (None, None) => {}
                        (Some(p), Some(best)) => {
                            prop_assert_eq!(p.length, best.0);
                            prop_assert_eq!(&p.edges, &best.1);
                        }
                        (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
                    }
                }
            }
        }

        #[test]
        fn yen_matches_enumeration(g in graph_strategy(), k in 1usize..6) {
            let n = g.node_count();
            let all = g.all_edges();
            let (s, t) = (0, n - 1);
            let got = super::yen(&g, s, t, k, &all);
            let mut brute = simple_paths(&g, s, t);
            brute.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert_eq!(got.len(), brute.len().min(k));
            for (i, p) in got.iter().enumerate() {
                prop_assert_eq!(p.length, brute[i].0, "rank {} lengths differ", i);
            }
        }

        #[test]
        fn dijkstra_matches_floyd_warshall(g in graph_strategy()) {
            let fw = floyd_warshall(&g);
            let all = g.all_edges();
            for s in 0..g.node_count() {
                let d = super::dijkstra(&g, s, &all, None);
                prop_assert_eq!(&d, &fw[s]);
            }
        }
    }
}
