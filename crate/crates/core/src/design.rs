//! Latency-optimal network design over population centers: take the union of
//! all terminal-pair shortest paths, then greedily delete the non-cut link whose
//! removal raises the traffic-weighted mean stretch the least.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_graph::{dijkstra, tie_broken_path, FiberGraph};
use crate::geo::{haversine_km, GeoPoint, EARTH_RADIUS_KM};
use crate::stats;
use crate::stretch::TrafficModel;

pub const DEFAULT_MERGE_RADIUS_KM: f64 = 50.0;
pub const DEFAULT_TOP_N: usize = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub population: u64,
}

impl City {
    fn location(&self) -> GeoPoint {
        GeoPoint { lat: self.lat, lon: self.lon }
    }
}

pub fn load_cities<R: Read>(reader: R) -> Result<Vec<City>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<City>().enumerate() {
        let city = row.map_err(|e| Error::load("cities", i + 1, e.to_string()))?;
        city.location()
            .validate()
            .map_err(|e| Error::load("cities", i + 1, e.to_string()))?;
        out.push(city);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationCenter {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub population: u64,
    pub members: Vec<String>,
    pub nearest_endpoint: Option<String>,
    pub snap_distance_km: Option<f64>,
}

/// Greedy merge by descending population: a city within `merge_radius_km` of
/// an accepted center joins the nearest such center, otherwise it founds a new
/// one. Returns the `top_n` centers by merged population.
pub fn coalesce_population_centers(cities: &[City], top_n: usize, merge_radius_km: f64) -> Result<Vec<PopulationCenter>> {
    if cities.is_empty() {
        return Err(Error::invalid("city table is empty"));
    }
    if top_n == 0 {
        return Err(Error::invalid("top_n must be at least 1"));
    }
    if !(merge_radius_km >= 0.0) {
        return Err(Error::invalid(format!("merge radius must be >= 0, got {merge_radius_km}")));
    }
    for c in cities {
        c.location().validate()?;
    }
    let mut order: Vec<&City> = cities.iter().collect();
    order.sort_by(|a, b| b.population.cmp(&a.population).then_with(|| a.name.cmp(&b.name)));

    let mut centers: Vec<PopulationCenter> = Vec::new();
    for city in order {
        let nearest = centers
            .iter()
            .enumerate()
            .map(|(i, c)| (i, haversine_km(c.location, city.location(), EARTH_RADIUS_KM)))
            .filter(|&(_, d)| d <= merge_radius_km)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((i, _)) => {
                centers[i].population += city.population;
                centers[i].members.push(city.name.clone());
            }
            None => centers.push(PopulationCenter {
                id: String::new(),
                name: city.name.clone(),
                location: city.location(),
                population: city.population,
                members: vec![city.name.clone()],
                nearest_endpoint: None,
                snap_distance_km: None,
            }),
        }
    }
    // stable: founding order breaks population ties
    centers.sort_by(|a, b| b.population.cmp(&a.population));
    centers.truncate(top_n);
    for (i, c) in centers.iter_mut().enumerate() {
        c.id = format!("pc{:03}", i + 1);
    }
    Ok(centers)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Terminal {
    pub endpoint: String,
    pub population: Option<u64>,
}

impl Terminal {
    /// Terminals for the given endpoints, carrying each endpoint's own population.
    pub fn from_endpoints(graph: &FiberGraph, ids: &[&str]) -> Result<Vec<Terminal>> {
        ids.iter()
            .map(|id| {
                let ep = graph
                    .endpoint(id)
                    .ok_or_else(|| Error::invalid(format!("unknown endpoint id {id}")))?;
                Ok(Terminal { endpoint: ep.id.clone(), population: ep.population })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterMapping {
    pub centers: Vec<PopulationCenter>,
    /// One terminal per distinct snapped endpoint, populations summed.
    pub terminals: Vec<Terminal>,
    pub mean_snap_km: f64,
}

/// Snaps each center to its geodesically nearest endpoint.
pub fn map_centers_to_endpoints(centers: &[PopulationCenter], graph: &FiberGraph) -> Result<CenterMapping> {
    if graph.node_count() == 0 {
        return Err(Error::invalid("graph has no endpoints"));
    }
    let mut mapped = centers.to_vec();
    let mut terminals: Vec<Terminal> = Vec::new();
    let mut total = 0.0;
    for c in &mut mapped {
        let (best, d) = graph
            .endpoints()
            .iter()
            .map(|e| (e, haversine_km(c.location, e.location, EARTH_RADIUS_KM)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        c.nearest_endpoint = Some(best.id.clone());
        c.snap_distance_km = Some(d);
        total += d;
        match terminals.iter_mut().find(|t| t.endpoint == best.id) {
            Some(t) => t.population = Some(t.population.unwrap_or(0) + c.population),
            None => terminals.push(Terminal { endpoint: best.id.clone(), population: Some(c.population) }),
        }
    }
    let mean_snap_km = if mapped.is_empty() { 0.0 } else { total / mapped.len() as f64 };
    Ok(CenterMapping { centers: mapped, terminals, mean_snap_km })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub removed_conduit: Option<String>,
    pub links: usize,
    pub fiber_km: f64,
    pub mean_stretch: f64,
    pub median_stretch: f64,
    pub p95_stretch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignNetwork {
    pub terminals: Vec<Terminal>,
    pub model: TrafficModel,
    /// Conduits of the union-of-shortest-paths network, before pruning.
    pub initial_conduits: Vec<String>,
    /// Conduits still in the network, sorted by id.
    pub active: BTreeSet<String>,
    /// Entry 0 is the initial state; each later entry follows one removal.
    pub trace: Vec<TraceEntry>,
}

impl DesignNetwork {
    pub fn link_count(&self) -> usize {
        self.active.len()
    }

    /// Active conduit set after the first `iteration` removals.
    pub fn state_at(&self, iteration: usize) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = self.initial_conduits.iter().cloned().collect();
        for entry in self.trace.iter().skip(1).take(iteration) {
            if let Some(id) = &entry.removed_conduit {
                set.remove(id);
            }
        }
        set
    }
}

/// Terminal-pair stretch evaluation over a masked subgraph.
pub(crate) struct Evaluator<'g> {
    pub graph: &'g FiberGraph,
    pub nodes: Vec<usize>,
    factors: Vec<f64>,
    los: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairStats {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
}

impl<'g> Evaluator<'g> {
    pub fn new(graph: &'g FiberGraph, terminals: &[Terminal], model: TrafficModel) -> Result<Self> {
        graph.ensure_routable()?;
        let mut nodes = Vec::with_capacity(terminals.len());
        let mut factors = Vec::with_capacity(terminals.len());
        for t in terminals {
            let n = graph.node_index(&t.endpoint)?;
            if nodes.contains(&n) {
                return Err(Error::invalid(format!("terminal {} listed twice", t.endpoint)));
            }
            nodes.push(n);
            factors.push(match model {
                TrafficModel::Uniform => 1.0,
                TrafficModel::Gravity => t
                    .population
                    .or(graph.endpoints()[n].population)
                    .ok_or_else(|| Error::invalid(format!("gravity model needs a population for terminal {}", t.endpoint)))?
                    as f64,
            });
        }
        let los: Vec<Vec<f64>> = nodes.iter().map(|&a| nodes.iter().map(|&b| graph.los(a, b)).collect()).collect();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if los[i][j] <= 0.0 {
                    return Err(Error::UndefinedStretch(terminals[i].endpoint.clone(), terminals[j].endpoint.clone()));
                }
            }
        }
        Ok(Evaluator { graph, nodes, factors, los })
    }

    pub fn distances(&self, active: &[bool]) -> Vec<Vec<f64>> {
        self.nodes.par_iter().map(|&s| dijkstra(self.graph, s, active, None)).collect()
    }

    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        self.factors[i] * self.factors[j]
    }

    /// (stretch, weight) per unordered terminal pair, or the first disconnected pair.
    fn samples<'a>(&self, dist_of: impl Fn(usize) -> &'a [f64]) -> std::result::Result<Vec<(f64, f64)>, (usize, usize)> {
        let mut out = Vec::with_capacity(self.nodes.len() * self.nodes.len() / 2);
        for i in 0..self.nodes.len() {
            let d = dist_of(i);
            for j in i + 1..self.nodes.len() {
                let km = d[self.nodes[j]];
                if !km.is_finite() {
                    return Err((i, j));
                }
                out.push((km / self.los[i][j], self.pair_weight(i, j)));
            }
        }
        Ok(out)
    }

    fn mean<'a>(&self, dist_of: impl Fn(usize) -> &'a [f64]) -> Option<f64> {
        let samples = self.samples(dist_of).ok()?;
        stats::weighted_mean(&samples).ok()
    }

    pub fn stats(&self, dists: &[Vec<f64>]) -> Result<PairStats> {
        let samples = self.samples(|i| &dists[i]).map_err(|(i, j)| self.disconnected(i, j))?;
        if samples.is_empty() {
            return Ok(PairStats { mean: 1.0, median: 1.0, p95: 1.0 });
        }
        Ok(PairStats {
            mean: stats::weighted_mean(&samples)?,
            median: stats::weighted_percentile(&samples, 0.5)?,
            p95: stats::weighted_percentile(&samples, 0.95)?,
        })
    }

    pub fn disconnected(&self, i: usize, j: usize) -> Error {
        let id = |k: usize| self.graph.endpoints()[self.nodes[k]].id.clone();
        Error::Disconnected(id(i), id(j))
    }
}

fn mask_from(graph: &FiberGraph, ids: &BTreeSet<String>) -> Result<Vec<bool>> {
    let mut mask = vec![false; graph.conduit_count()];
    for id in ids {
        let i = graph
            .conduit_index(id)
            .ok_or_else(|| Error::invalid(format!("unknown conduit {id}")))?;
        mask[i] = true;
    }
    Ok(mask)
}

fn fiber_km(graph: &FiberGraph, mask: &[bool]) -> f64 {
    (0..mask.len()).filter(|&e| mask[e]).map(|e| graph.weight(e)).sum()
}

fn entry(iteration: usize, removed: Option<String>, graph: &FiberGraph, mask: &[bool], s: PairStats) -> TraceEntry {
    TraceEntry {
        iteration,
        removed_conduit: removed,
        links: mask.iter().filter(|&&m| m).count(),
        fiber_km: fiber_km(graph, mask),
        mean_stretch: s.mean,
        median_stretch: s.median,
        p95_stretch: s.p95,
    }
}

/// Union of the conduits on every terminal pair's shortest path.
pub fn union_shortest_path_network(graph: &FiberGraph, terminals: &[Terminal], model: TrafficModel) -> Result<DesignNetwork> {
    let eval = Evaluator::new(graph, terminals, model)?;
    let all = graph.all_edges();
    let dists = eval.distances(&all);
    let mut mask = vec![false; graph.conduit_count()];
    for (i, &s) in eval.nodes.iter().enumerate() {
        for (j, &t) in eval.nodes.iter().enumerate().skip(i + 1) {
            let path = tie_broken_path(graph, &dists[i], s, t, &all, None).ok_or_else(|| eval.disconnected(i, j))?;
            for e in path.edges {
                mask[e] = true;
            }
        }
    }
    let active: BTreeSet<String> = (0..mask.len()).filter(|&e| mask[e]).map(|e| graph.conduits()[e].id.clone()).collect();
    let stats = eval.stats(&eval.distances(&mask))?;
    Ok(DesignNetwork {
        terminals: terminals.to_vec(),
        model,
        initial_conduits: active.iter().cloned().collect(),
        active,
        trace: vec![entry(0, None, graph, &mask, stats)],
    })
}

/// Conduits whose removal disconnects some pair of terminals within the
/// active subgraph.
pub fn find_bridges(graph: &FiberGraph, active: &BTreeSet<String>, terminals: &[Terminal]) -> Result<BTreeSet<String>> {
    let mask = mask_from(graph, active)?;
    let nodes = terminals
        .iter()
        .map(|t| graph.node_index(&t.endpoint))
        .collect::<Result<Vec<_>>>()?;
    Ok(terminal_cuts(graph, &mask, &nodes)
        .into_iter()
        .enumerate()
        .filter(|&(_, cut)| cut)
        .map(|(e, _)| graph.conduits()[e].id.clone())
        .collect())
}

/// Per-conduit flag: bridge of the active subgraph separating terminals.
/// Iterative Tarjan low-link over edge ids, so parallel conduits are never bridges.
pub(crate) fn terminal_cuts(graph: &FiberGraph, active: &[bool], terminals: &[usize]) -> Vec<bool> {
    let n = graph.node_count();
    let mut is_terminal = vec![false; n];
    for &t in terminals {
        is_terminal[t] = true;
    }
    let mut cuts = vec![false; active.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut below = vec![0usize; n];
    let mut clock = 0;

    for root in 0..n {
        if disc[root] != usize::MAX || !graph.adjacency(root).iter().any(|&(e, _)| active[e]) {
            continue;
        }
        // terminals in this component
        let mut comp_terminals = 0;
        // frames: (node, parent edge, next adjacency slot)
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = clock;
        low[root] = clock;
        below[root] = is_terminal[root] as usize;
        clock += 1;
        let mut finished: Vec<(usize, usize, usize)> = Vec::new();
        while let Some(frame) = stack.last_mut() {
            let (u, parent_edge, slot) = *frame;
            let adj = graph.adjacency(u);
            if slot < adj.len() {
                frame.2 += 1;
                let (e, v) = adj[slot];
                if !active[e] || Some(e) == parent_edge {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = clock;
                    low[v] = clock;
                    below[v] = is_terminal[v] as usize;
                    clock += 1;
                    stack.push((v, Some(e), 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if is_terminal[u] {
                    comp_terminals += 1;
                }
                if let (Some(e), Some(&(p, _, _))) = (parent_edge, stack.last()) {
                    low[p] = low[p].min(low[u]);
                    below[p] += below[u];
                    if low[u] > disc[p] {
                        finished.push((e, u, below[u]));
                    }
                }
            }
        }
        for (e, _, sub) in finished {
            cuts[e] = sub > 0 && sub < comp_terminals;
        }
    }
    cuts
}

#[derive(Debug, Clone, PartialEq)]
pub enum PruneOutcome {
    Removed(String),
    /// Every remaining link is a cut.
    NoRemovableLink,
}

struct PruneState<'g> {
    eval: Evaluator<'g>,
    mask: Vec<bool>,
    dists: Vec<Vec<f64>>,
}

impl<'g> PruneState<'g> {
    fn new(network: &DesignNetwork, graph: &'g FiberGraph) -> Result<Self> {
        let eval = Evaluator::new(graph, &network.terminals, network.model)?;
        let mask = mask_from(graph, &network.active)?;
        let dists = eval.distances(&mask);
        Ok(PruneState { eval, mask, dists })
    }

    /// Conduits on the tie-broken route of at least one terminal pair.
    fn routed_edges(&self) -> Vec<bool> {
        let g = self.eval.graph;
        let mut used = vec![false; self.mask.len()];
        for (i, &s) in self.eval.nodes.iter().enumerate() {
            for &t in self.eval.nodes.iter().skip(i + 1) {
                if let Some(p) = tie_broken_path(g, &self.dists[i], s, t, &self.mask, None) {
                    for e in p.edges {
                        used[e] = true;
                    }
                }
            }
        }
        used
    }

    /// Weighted mean stretch with `e` removed. Only sources for which `e` is
    /// on some shortest path are recomputed; the rest keep bit-identical distances.
    fn mean_without(&self, e: usize) -> Option<f64> {
        let g = self.eval.graph;
        let (a, b) = g.ends(e);
        let mut reduced = self.mask.clone();
        reduced[e] = false;
        let fresh: Vec<Option<Vec<f64>>> = self
            .eval
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let d = &self.dists[i];
                let tight = crate::fiber_graph::is_tight(g, d, a, e, b) || crate::fiber_graph::is_tight(g, d, b, e, a);
                tight.then(|| dijkstra(g, s, &reduced, None))
            })
            .collect();
        self.eval.mean(|i| fresh[i].as_deref().unwrap_or(&self.dists[i]))
    }

    fn step(&mut self) -> Option<usize> {
        let g = self.eval.graph;
        let cuts = terminal_cuts(g, &self.mask, &self.eval.nodes);
        let used = self.routed_edges();
        let candidates: Vec<usize> = (0..self.mask.len()).filter(|&e| self.mask[e] && !cuts[e]).collect();
        let scored: Vec<(f64, bool, u32, usize)> = candidates
            .par_iter()
            .filter_map(|&e| self.mean_without(e).map(|m| (m, used[e], g.rank(e), e)))
            .collect();
        let best = scored
            .into_iter()
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)).then(Ordering::Equal))?;
        let e = best.3;
        self.mask[e] = false;
        self.dists = self.eval.distances(&self.mask);
        Some(e)
    }
}

/// Removes the single non-cut link whose deletion minimizes the resulting
/// weighted mean stretch. Ties prefer links no terminal pair is routed over,
/// then the smallest conduit id.
pub fn prune_step(network: &mut DesignNetwork, graph: &FiberGraph) -> Result<PruneOutcome> {
    let mut state = PruneState::new(network, graph)?;
    apply_step(network, &mut state)
}

fn apply_step(network: &mut DesignNetwork, state: &mut PruneState) -> Result<PruneOutcome> {
    let Some(e) = state.step() else {
        return Ok(PruneOutcome::NoRemovableLink);
    };
    let graph = state.eval.graph;
    let id = graph.conduits()[e].id.clone();
    network.active.remove(&id);
    let stats = state.eval.stats(&state.dists)?;
    let iteration = network.trace.len();
    network.trace.push(entry(iteration, Some(id.clone()), graph, &state.mask, stats));
    Ok(PruneOutcome::Removed(id))
}

/// Prunes until `target_links` remain or nothing more can be removed.
pub fn prune_to(mut network: DesignNetwork, graph: &FiberGraph, target_links: usize) -> Result<DesignNetwork> {
    if network.terminals.len() > 1 && target_links + 1 < network.terminals.len() {
        return Err(Error::invalid(format!(
            "cannot connect {} terminals with {target_links} links",
            network.terminals.len()
        )));
    }
    let mut state = PruneState::new(&network, graph)?;
    while network.link_count() > target_links {
        if apply_step(&mut network, &mut state)? == PruneOutcome::NoRemovableLink {
            break;
        }
    }
    Ok(network)
}

pub fn write_trace<W: Write>(network: &DesignNetwork, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "removed_conduit", "links", "fiber_km", "mean_stretch", "median_stretch", "p95_stretch"])?;
    for t in &network.trace {
        w.write_record([
            t.iteration.to_string(),
            t.removed_conduit.clone().unwrap_or_default(),
            t.links.to_string(),
            format!("{:.3}", t.fiber_km),
            format!("{:.6}", t.mean_stretch),
            format!("{:.6}", t.median_stretch),
            format!("{:.6}", t.p95_stretch),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// GeoJSON FeatureCollection with one straight LineString per active conduit.
/// `demand_gbps`, when given, is attached as a property.
pub fn network_geojson(graph: &FiberGraph, active: &BTreeSet<String>, demand_gbps: Option<&dyn Fn(&str) -> f64>) -> Result<serde_json::Value> {
    let mut features = Vec::new();
    for id in active {
        let i = graph
            .conduit_index(id)
            .ok_or_else(|| Error::invalid(format!("unknown conduit {id}")))?;
        let c = &graph.conduits()[i];
        let (a, b) = graph.ends(i);
        let (pa, pb) = (graph.endpoints()[a].location, graph.endpoints()[b].location);
        let mut props = serde_json::json!({
            "id": c.id,
            "endpoint_a": c.a,
            "endpoint_b": c.b,
            "length_km": c.length_km,
        });
        if let Some(f) = demand_gbps {
            props["demand_gbps"] = serde_json::json!(f(id));
        }
        features.push(serde_json::json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": [[pa.lon, pa.lat], [pb.lon, pb.lat]] },
            "properties": props,
        }));
    }
    Ok(serde_json::json!({ "type": "FeatureCollection", "features": features }))
}
