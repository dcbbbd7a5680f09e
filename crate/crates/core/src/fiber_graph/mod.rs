//! The fiber map: endpoints, conduits and the graph queries built on them.

mod io;
mod paths;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint, EARTH_RADIUS_KM};
use crate::stats;

pub use io::{load_graph, load_graph_files, write_conduits, write_endpoints, LoadOptions};
pub use paths::AllPairs;
pub(crate) use paths::{dijkstra, is_tight, tie_broken_path, RawPath};

/// Lengths below LOS by more than this are reported.
pub const LOS_TOLERANCE_KM: f64 = 0.01;

/// Default multiplier applied to LOS for conduits without a known length.
pub const DEFAULT_IMPUTE_FACTOR: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoint {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub population: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthProvenance {
    Measured,
    Imputed,
    /// No length in the source table; must be imputed before routing.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conduit {
    pub id: String,
    pub a: String,
    pub b: String,
    pub length_km: Option<f64>,
    pub provenance: LengthProvenance,
    pub isps: BTreeSet<String>,
}

impl Conduit {
    pub fn new(id: &str, a: &str, b: &str, length_km: f64, isps: &[&str]) -> Self {
        Conduit {
            id: id.to_string(),
            a: a.to_string(),
            b: b.to_string(),
            length_km: Some(length_km),
            provenance: LengthProvenance::Measured,
            isps: isps.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn unknown_length(id: &str, a: &str, b: &str, isps: &[&str]) -> Self {
        Conduit {
            length_km: None,
            provenance: LengthProvenance::Unknown,
            ..Conduit::new(id, a, b, 1.0, isps)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BelowLos {
    pub conduit: String,
    pub length_km: f64,
    pub los_km: f64,
}

/// Non-fatal findings from loading a graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub below_los: Vec<BelowLos>,
    pub unknown_length: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathResult {
    pub nodes: Vec<String>,
    pub conduits: Vec<String>,
    pub total_length_km: f64,
    pub hop_count: usize,
}

impl PathResult {
    pub fn src(&self) -> &str {
        &self.nodes[0]
    }

    pub fn dst(&self) -> &str {
        self.nodes.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Route {
    Found(PathResult),
    Unreachable,
}

impl Route {
    pub fn path(&self) -> Option<&PathResult> {
        match self {
            Route::Found(p) => Some(p),
            Route::Unreachable => None,
        }
    }

    pub fn into_path(self) -> Option<PathResult> {
        match self {
            Route::Found(p) => Some(p),
            Route::Unreachable => None,
        }
    }
}

/// Immutable after construction. Conduits are undirected; parallel conduits
/// between the same endpoints are kept as distinct edges.
#[derive(Debug, Clone)]
pub struct FiberGraph {
    endpoints: Vec<Endpoint>,
    conduits: Vec<Conduit>,
    index: HashMap<String, usize>,
    ends: Vec<(usize, usize)>,
    weights: Vec<f64>,
    rank: Vec<u32>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl FiberGraph {
    /// Builds a graph from in-memory tables.
    ///
    /// With `strict`, conduits shorter than the LOS between their endpoints are
    /// rejected; otherwise they are listed in the returned report.
    pub fn new(
        endpoints: Vec<Endpoint>,
        conduits: Vec<Conduit>,
        strict: bool,
    ) -> Result<(FiberGraph, ValidationReport)> {
        let mut index = HashMap::with_capacity(endpoints.len());
        for (i, e) in endpoints.iter().enumerate() {
            e.location
                .validate()
                .map_err(|err| Error::load("endpoints", i + 1, format!("{}: {err}", e.id)))?;
            if index.insert(e.id.clone(), i).is_some() {
                return Err(Error::load("endpoints", i + 1, format!("duplicate endpoint id {}", e.id)));
            }
        }

        let mut report = ValidationReport::default();
        let mut seen = HashMap::with_capacity(conduits.len());
        let mut ends = Vec::with_capacity(conduits.len());
        for (i, c) in conduits.iter().enumerate() {
            let row = i + 1;
            if seen.insert(c.id.as_str(), i).is_some() {
                return Err(Error::load("conduits", row, format!("duplicate conduit id {}", c.id)));
            }
            let a = *index
                .get(&c.a)
                .ok_or_else(|| Error::load("conduits", row, format!("{}: unknown endpoint {}", c.id, c.a)))?;
            let b = *index
                .get(&c.b)
                .ok_or_else(|| Error::load("conduits", row, format!("{}: unknown endpoint {}", c.id, c.b)))?;
            if a == b {
                return Err(Error::load("conduits", row, format!("{}: both ends are {}", c.id, c.a)));
            }
            match c.length_km {
                Some(len) if !(len > 0.0) || !len.is_finite() => {
                    return Err(Error::load(
                        "conduits",
                        row,
                        format!("{}: length must be positive, got {len}", c.id),
                    ));
                }
                Some(len) => {
                    let los = haversine_km(endpoints[a].location, endpoints[b].location, EARTH_RADIUS_KM);
                    if len < los - LOS_TOLERANCE_KM {
                        if strict {
                            return Err(Error::load(
                                "conduits",
                                row,
                                format!("{}: length {len} km is below LOS {los:.3} km", c.id),
                            ));
                        }
                        report.below_los.push(BelowLos { conduit: c.id.clone(), length_km: len, los_km: los });
                    }
                }
                None => report.unknown_length.push(c.id.clone()),
            }
            ends.push((a, b));
        }
        drop(seen);

        let mut order: Vec<usize> = (0..conduits.len()).collect();
        order.sort_by(|&x, &y| conduits[x].id.cmp(&conduits[y].id));
        let mut rank = vec![0u32; conduits.len()];
        for (r, &e) in order.iter().enumerate() {
            rank[e] = r as u32;
        }

        let mut adjacency = vec![Vec::new(); endpoints.len()];
        for (e, &(a, b)) in ends.iter().enumerate() {
            adjacency[a].push((e, b));
            adjacency[b].push((e, a));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(e, _)| rank[e]);
        }

        let weights = conduits.iter().map(|c| c.length_km.unwrap_or(f64::NAN)).collect();
        Ok((
            FiberGraph { endpoints, conduits, index, ends, weights, rank, adjacency },
            report,
        ))
    }

    pub fn endpoints(&self) -> &[Endpoint] {
        &self.endpoints
    }

    pub fn conduits(&self) -> &[Conduit] {
        &self.conduits
    }

    pub fn endpoint(&self, id: &str) -> Option<&Endpoint> {
        self.index.get(id).map(|&i| &self.endpoints[i])
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown endpoint id {id}")))
    }

    pub fn conduit_index(&self, id: &str) -> Option<usize> {
        self.conduits.iter().position(|c| c.id == id)
    }

    pub fn node_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn conduit_count(&self) -> usize {
        self.conduits.len()
    }

    pub(crate) fn ends(&self, conduit: usize) -> (usize, usize) {
        self.ends[conduit]
    }

    pub(crate) fn weight(&self, conduit: usize) -> f64 {
        self.weights[conduit]
    }

    pub(crate) fn rank(&self, conduit: usize) -> u32 {
        self.rank[conduit]
    }

    pub(crate) fn adjacency(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    /// LOS distance between two endpoints by index.
    pub(crate) fn los(&self, a: usize, b: usize) -> f64 {
        haversine_km(self.endpoints[a].location, self.endpoints[b].location, EARTH_RADIUS_KM)
    }

    pub fn los_km(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.los(self.node_index(a)?, self.node_index(b)?))
    }

    pub fn conduit_los_km(&self, conduit: usize) -> f64 {
        let (a, b) = self.ends[conduit];
        self.los(a, b)
    }

    pub fn has_unknown_lengths(&self) -> bool {
        self.conduits.iter().any(|c| c.length_km.is_none())
    }

    pub(crate) fn ensure_routable(&self) -> Result<()> {
        match self.conduits.iter().find(|c| c.length_km.is_none()) {
            Some(c) => Err(Error::invalid(format!(
                "conduit {} has unknown length; impute lengths before routing",
                c.id
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn all_edges(&self) -> Vec<bool> {
        vec![true; self.conduits.len()]
    }

    /// Edges carrying at least one of the given ISP labels.
    pub(crate) fn isp_edges(&self, isps: &[&str]) -> Vec<bool> {
        self.conduits
            .iter()
            .map(|c| isps.iter().any(|i| c.isps.contains(*i)))
            .collect()
    }

    fn edge_filter(&self, isp_filter: Option<&[&str]>) -> Vec<bool> {
        match isp_filter {
            Some(isps) => self.isp_edges(isps),
            None => self.all_edges(),
        }
    }

    pub(crate) fn to_path_result(&self, raw: &RawPath) -> PathResult {
        PathResult {
            nodes: raw.nodes.iter().map(|&n| self.endpoints[n].id.clone()).collect(),
            conduits: raw.edges.iter().map(|&e| self.conduits[e].id.clone()).collect(),
            total_length_km: raw.length,
            hop_count: raw.nodes.len().saturating_sub(2),
        }
    }

    /// Shortest conduit path between two endpoints, optionally using only
    /// conduits tagged with one of the given ISPs. Equal-length paths are
    /// resolved to the lexicographically smallest conduit-id sequence.
    pub fn shortest_path(&self, src: &str, dst: &str, isp_filter: Option<&[&str]>) -> Result<Route> {
        let s = self.node_index(src)?;
        let t = self.node_index(dst)?;
        self.ensure_routable()?;
        let edges = self.edge_filter(isp_filter);
        let dist = dijkstra(self, s, &edges, None);
        Ok(match tie_broken_path(self, &dist, s, t, &edges, None) {
            Some(raw) => Route::Found(self.to_path_result(&raw)),
            None => Route::Unreachable,
        })
    }

    /// Shortest paths for every ordered pair of distinct endpoints, or only for
    /// pairs starting at `sources` when given.
    pub fn all_pairs_shortest_paths(&self, sources: Option<&[&str]>) -> Result<AllPairs> {
        self.ensure_routable()?;
        let srcs: Vec<usize> = match sources {
            Some(ids) => ids.iter().map(|id| self.node_index(id)).collect::<Result<_>>()?,
            None => (0..self.node_count()).collect(),
        };
        Ok(paths::all_pairs(self, &srcs, &self.all_edges()))
    }

    /// Up to `k` loopless paths in non-decreasing length (Yen).
    pub fn k_shortest_paths(&self, src: &str, dst: &str, k: usize) -> Result<Vec<PathResult>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let s = self.node_index(src)?;
        let t = self.node_index(dst)?;
        self.ensure_routable()?;
        let raws = paths::yen(self, s, t, k, &self.all_edges());
        Ok(raws.iter().map(|r| self.to_path_result(r)).collect())
    }

    /// Sets the length of every unknown-length conduit to `factor` times LOS.
    pub fn impute_missing_lengths(&self, factor: f64) -> Result<FiberGraph> {
        if !(factor >= 1.0) || !factor.is_finite() {
            return Err(Error::invalid(format!("impute factor must be >= 1, got {factor}")));
        }
        let mut g = self.clone();
        for (i, c) in g.conduits.iter_mut().enumerate() {
            if c.length_km.is_none() {
                let (a, b) = self.ends[i];
                let len = factor * self.los(a, b);
                c.length_km = Some(len);
                c.provenance = LengthProvenance::Imputed;
                g.weights[i] = len;
            }
        }
        Ok(g)
    }

    /// Number of connected components in each ISP's conduit subgraph.
    /// Endpoints not touched by the ISP are ignored.
    pub fn isp_connectivity_report(&self) -> BTreeMap<String, usize> {
        let mut by_isp: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.conduits.iter().enumerate() {
            for isp in &c.isps {
                by_isp.entry(isp.as_str()).or_default().push(i);
            }
        }
        by_isp
            .into_iter()
            .map(|(isp, edges)| {
                let mut uf = UnionFind::new(self.node_count());
                let mut touched = BTreeSet::new();
                for e in edges {
                    let (a, b) = self.ends[e];
                    uf.union(a, b);
                    touched.insert(a);
                    touched.insert(b);
                }
                let roots: BTreeSet<usize> = touched.into_iter().map(|n| uf.find(n)).collect();
                (isp.to_string(), roots.len())
            })
            .collect()
    }

    /// Distribution of conduit length over LOS for measured conduits.
    pub fn length_to_los_stats(&self) -> Result<LengthLosStats> {
        let mut ratios = Vec::new();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, c) in self.conduits.iter().enumerate() {
            let (LengthProvenance::Measured, Some(len)) = (c.provenance, c.length_km) else {
                continue;
            };
            let los = self.conduit_los_km(i);
            if los <= 0.0 {
                continue;
            }
            num += len * los;
            den += los * los;
            ratios.push(ConduitRatio { conduit: c.id.clone(), length_km: len, los_km: los, ratio: len / los });
        }
        if ratios.is_empty() {
            return Err(Error::EmptyStats("no measured-length conduits".into()));
        }
        let samples: Vec<(f64, f64)> = ratios.iter().map(|r| (r.ratio, 1.0)).collect();
        let summary = stats::summarize(&samples)?;
        Ok(LengthLosStats { ratios, summary, slope: num / den })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConduitRatio {
    pub conduit: String,
    pub length_km: f64,
    pub los_km: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthLosStats {
    pub ratios: Vec<ConduitRatio>,
    pub summary: stats::Summary,
    /// Least-squares slope of length against LOS, through the origin.
    pub slope: f64,
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}
