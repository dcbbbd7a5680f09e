//! Stitching raw fiber-segment polylines into a routable graph.
//!
//! Segment endpoints closer than the snap threshold are treated as the same
//! junction (transitively, via union-find). Only segment ends become graph
//! nodes; interior vertices only contribute to segment length unless
//! near-pass promotion is switched on.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fiber_graph::{Conduit, Endpoint, FiberGraph, PathResult, UnionFind};
use crate::geo::{haversine_km, polyline_length, BoundingBox, GeoPoint, EARTH_RADIUS_KM, KM_PER_DEGREE};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Longhaul,
    Metro,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub id: String,
    pub polyline: Vec<GeoPoint>,
    pub kind: SegmentKind,
    pub length_km: f64,
}

impl Segment {
    pub fn new(id: impl Into<String>, polyline: Vec<GeoPoint>, kind: SegmentKind) -> Result<Self> {
        let id = id.into();
        if polyline.len() < 2 {
            return Err(Error::invalid(format!("segment {id} needs at least two points")));
        }
        let length_km = polyline_length(&polyline)?;
        if !(length_km > 0.0) {
            return Err(Error::invalid(format!("segment {id} has zero length")));
        }
        Ok(Segment { id, polyline, kind, length_km })
    }

    fn ends(&self) -> [GeoPoint; 2] {
        [self.polyline[0], *self.polyline.last().unwrap()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchConfig {
    pub snap_threshold_m: f64,
    pub escalation_thresholds_m: Vec<f64>,
    pub bbox_margin_km: f64,
    /// Split segments at interior vertices that pass within the snap threshold
    /// of another segment's end.
    pub promote_near_passes: bool,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig {
            snap_threshold_m: 50.0,
            escalation_thresholds_m: vec![100.0, 250.0, 500.0],
            bbox_margin_km: 100.0,
            promote_near_passes: false,
        }
    }
}

impl StitchConfig {
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0.0;
        for &t in std::iter::once(&self.snap_threshold_m).chain(&self.escalation_thresholds_m) {
            if !(t > prev) || !t.is_finite() {
                return Err(Error::invalid("snap thresholds must be positive and ascending"));
            }
            prev = t;
        }
        if !(self.bbox_margin_km >= 0.0) {
            return Err(Error::invalid("bounding box margin must be >= 0"));
        }
        Ok(())
    }
}

fn point_from_json(v: &Value) -> Option<GeoPoint> {
    let arr = v.as_array()?;
    Some(GeoPoint { lon: arr.first()?.as_f64()?, lat: arr.get(1)?.as_f64()? })
}

/// Reads a GeoJSON FeatureCollection of LineString (or MultiLineString)
/// features with `id` and `kind` properties. Multi-part features become one
/// segment per part, suffixed `#<part>`.
pub fn load_segments<R: Read>(reader: R) -> Result<Vec<Segment>> {
    let doc: Value = serde_json::from_reader(reader)?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("expected a FeatureCollection with a features array"))?;
    let mut out = Vec::new();
    for (i, f) in features.iter().enumerate() {
        let row = i + 1;
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let id = match props.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(Error::load("segments", row, "feature has no id property")),
        };
        let kind = match props.get("kind").and_then(Value::as_str) {
            None | Some("longhaul") => SegmentKind::Longhaul,
            Some("metro") => SegmentKind::Metro,
            Some(other) => return Err(Error::load("segments", row, format!("unknown kind {other}"))),
        };
        let geom = f.get("geometry").ok_or_else(|| Error::load("segments", row, "feature has no geometry"))?;
        let parse_line = |coords: &Value| -> Result<Vec<GeoPoint>> {
            coords
                .as_array()
                .ok_or_else(|| Error::load("segments", row, "coordinates must be an array"))?
                .iter()
                .map(|c| point_from_json(c).ok_or_else(|| Error::load("segments", row, "bad coordinate")))
                .collect()
        };
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);
        let lines = match geom.get("type").and_then(Value::as_str) {
            Some("LineString") => vec![(id.clone(), parse_line(coords)?)],
            Some("MultiLineString") => coords
                .as_array()
                .ok_or_else(|| Error::load("segments", row, "coordinates must be an array"))?
                .iter()
                .enumerate()
                .map(|(k, part)| Ok((format!("{id}#{k}"), parse_line(part)?)))
                .collect::<Result<_>>()?,
            other => return Err(Error::load("segments", row, format!("unsupported geometry {other:?}"))),
        };
        for (sid, line) in lines {
            out.push(Segment::new(sid, line, kind).map_err(|e| Error::load("segments", row, e.to_string()))?);
        }
    }
    Ok(out)
}

pub fn write_segments<W: Write>(segments: &[Segment], out: W) -> Result<()> {
    let features: Vec<Value> = segments
        .iter()
        .map(|s| {
            serde_json::json!({
                "type": "Feature",
                "properties": { "id": s.id, "kind": s.kind },
                "geometry": {
                    "type": "LineString",
                    "coordinates": s.polyline.iter().map(|p| [p.lon, p.lat]).collect::<Vec<_>>(),
                },
            })
        })
        .collect();
    serde_json::to_writer(out, &serde_json::json!({ "type": "FeatureCollection", "features": features }))?;
    Ok(())
}

/// Keeps segments with at least one vertex inside the box.
pub fn filter_segments(segments: &[Segment], bbox: &BoundingBox) -> Vec<Segment> {
    segments
        .iter()
        .filter(|s| s.polyline.iter().any(|p| bbox.contains(*p)))
        .cloned()
        .collect()
}

/// Uniform lat/lon grid for neighbor queries within a fixed radius.
struct Grid {
    cell_lat: f64,
    cell_lon: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(radius_km: f64, max_abs_lat: f64) -> Self {
        let cell_lat = (radius_km / KM_PER_DEGREE).max(1e-9);
        let cos = max_abs_lat.min(89.0).to_radians().cos();
        Grid { cell_lat, cell_lon: cell_lat / cos, cells: HashMap::new() }
    }

    fn key(&self, p: GeoPoint) -> (i64, i64) {
        ((p.lat / self.cell_lat).floor() as i64, (p.lon / self.cell_lon).floor() as i64)
    }

    fn insert(&mut self, p: GeoPoint, item: usize) {
        self.cells.entry(self.key(p)).or_default().push(item);
    }

    fn near(&self, p: GeoPoint) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.key(p);
        (-1..=1)
            .flat_map(move |dr| (-1..=1).map(move |dc| (r + dr, c + dc)))
            .filter_map(|k| self.cells.get(&k))
            .flatten()
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentEdge {
    pub segment: String,
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentGraph {
    pub threshold_m: f64,
    /// Cluster centroids, numbered by their lowest raw endpoint id.
    pub nodes: Vec<GeoPoint>,
    pub edges: Vec<SegmentEdge>,
    /// Raw endpoint `2 * i + end` of segment `i` (segments in id order) to node.
    pub cluster_of: Vec<usize>,
    segments: Vec<Segment>,
    routing: FiberGraph,
}

fn node_id(n: usize) -> String {
    format!("n{n}")
}

fn split_near_passes(segments: &[Segment], threshold_km: f64) -> Result<Vec<Segment>> {
    let max_lat = segments.iter().flat_map(|s| s.polyline.iter()).map(|p| p.lat.abs()).fold(0.0, f64::max);
    let mut grid = Grid::new(threshold_km, max_lat);
    let ends: Vec<GeoPoint> = segments.iter().flat_map(|s| s.ends()).collect();
    for (i, p) in ends.iter().enumerate() {
        grid.insert(*p, i);
    }
    let mut out = Vec::with_capacity(segments.len());
    for (si, s) in segments.iter().enumerate() {
        let mut cuts = Vec::new();
        for k in 1..s.polyline.len() - 1 {
            let v = s.polyline[k];
            let hit = grid
                .near(v)
                .any(|r| r / 2 != si && haversine_km(ends[r], v, EARTH_RADIUS_KM) <= threshold_km);
            if hit {
                cuts.push(k);
            }
        }
        if cuts.is_empty() {
            out.push(s.clone());
            continue;
        }
        let mut start = 0;
        for (part, &k) in cuts.iter().chain(std::iter::once(&(s.polyline.len() - 1))).enumerate() {
            out.push(Segment::new(format!("{}#{part}", s.id), s.polyline[start..=k].to_vec(), s.kind)?);
            start = k;
        }
    }
    Ok(out)
}

/// Clusters segment endpoints within `config.snap_threshold_m` of each other
/// and joins segments at the clusters.
pub fn build_segment_graph(segments: &[Segment], config: &StitchConfig) -> Result<SegmentGraph> {
    config.validate()?;
    build_at(segments, config.snap_threshold_m, config.promote_near_passes)
}

fn build_at(segments: &[Segment], threshold_m: f64, promote: bool) -> Result<SegmentGraph> {
    if segments.is_empty() {
        return Err(Error::invalid("no segments to stitch"));
    }
    let threshold_km = threshold_m / 1000.0;
    let mut segs: Vec<Segment> = segments.to_vec();
    segs.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = segs.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::invalid(format!("duplicate segment id {}", w[0].id)));
    }
    if promote {
        segs = split_near_passes(&segs, threshold_km)?;
        segs.sort_by(|a, b| a.id.cmp(&b.id));
    }

    let raw: Vec<GeoPoint> = segs.iter().flat_map(|s| s.ends()).collect();
    let max_lat = raw.iter().map(|p| p.lat.abs()).fold(0.0, f64::max);
    let mut grid = Grid::new(threshold_km, max_lat);
    let mut uf = UnionFind::new(raw.len());
    for (i, &p) in raw.iter().enumerate() {
        let close: Vec<usize> = grid
            .near(p)
            .filter(|&j| haversine_km(raw[j], p, EARTH_RADIUS_KM) <= threshold_km)
            .collect();
        for j in close {
            uf.union(i, j);
        }
        grid.insert(p, i);
    }

    // Number clusters by first (lowest) raw endpoint; accumulate centroids in id order.
    let mut node_of_root: HashMap<usize, usize> = HashMap::new();
    let mut cluster_of = Vec::with_capacity(raw.len());
    let mut sums: Vec<(f64, f64, usize)> = Vec::new();
    for (i, p) in raw.iter().enumerate() {
        let root = uf.find(i);
        let n = *node_of_root.entry(root).or_insert_with(|| {
            sums.push((0.0, 0.0, 0));
            sums.len() - 1
        });
        sums[n].0 += p.lat;
        sums[n].1 += p.lon;
        sums[n].2 += 1;
        cluster_of.push(n);
    }
    let nodes: Vec<GeoPoint> = sums
        .iter()
        .map(|&(lat, lon, k)| GeoPoint { lat: lat / k as f64, lon: lon / k as f64 })
        .collect();
    let edges: Vec<SegmentEdge> = segs
        .iter()
        .enumerate()
        .map(|(i, s)| SegmentEdge { segment: s.id.clone(), a: cluster_of[2 * i], b: cluster_of[2 * i + 1], length_km: s.length_km })
        .collect();

    let endpoints = nodes
        .iter()
        .enumerate()
        .map(|(i, &p)| Endpoint { id: node_id(i), name: node_id(i), location: p, population: None })
        .collect();
    let conduits = edges
        .iter()
        .filter(|e| e.a != e.b)
        .map(|e| Conduit::new(&e.segment, &node_id(e.a), &node_id(e.b), e.length_km, &[]))
        .collect();
    let (routing, _) = FiberGraph::new(endpoints, conduits, false)?;
    Ok(SegmentGraph { threshold_m, nodes, edges, cluster_of, segments: segments.to_vec(), routing })
}

impl SegmentGraph {
    pub fn routing_graph(&self) -> &FiberGraph {
        &self.routing
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.a, e.b);
        }
        (0..self.nodes.len()).filter(|&n| uf.find(n) == n).count()
    }

    fn nearest_node(&self, p: GeoPoint) -> (usize, f64) {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (i, haversine_km(n, p, EARTH_RADIUS_KM)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .unwrap()
    }

    fn component_size(&self, node: usize) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.a, e.b);
        }
        let root = uf.find(node);
        (0..self.nodes.len()).filter(|&n| uf.find(n) == root).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchedRoute {
    pub paths: Vec<PathResult>,
    pub threshold_m: f64,
    pub src_anchor_km: f64,
    pub dst_anchor_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchDiagnostics {
    pub thresholds_tried_m: Vec<f64>,
    pub src_anchor_km: f64,
    pub dst_anchor_km: f64,
    /// Nodes reachable from each anchor at the largest threshold.
    pub src_component_nodes: usize,
    pub dst_component_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StitchResult {
    Routed(StitchedRoute),
    Unreachable(StitchDiagnostics),
}

/// Up to `k` loopless routes between the nodes nearest `src` and `dst`.
/// When they are disconnected at the graph's threshold, the graph is rebuilt
/// at each larger escalation threshold in turn.
pub fn stitch_route(graph: &SegmentGraph, src: GeoPoint, dst: GeoPoint, k: usize, config: &StitchConfig) -> Result<StitchResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    config.validate()?;
    src.validate()?;
    dst.validate()?;
    let mut thresholds = vec![graph.threshold_m];
    thresholds.extend(config.escalation_thresholds_m.iter().copied().filter(|&t| t > graph.threshold_m));

    let mut tried = Vec::new();
    let mut last = None;
    for t in thresholds {
        let rebuilt;
        let g = if t == graph.threshold_m {
            graph
        } else {
            rebuilt = build_at(&graph.segments, t, config.promote_near_passes)?;
            &rebuilt
        };
        tried.push(t);
        let (s, ds) = g.nearest_node(src);
        let (d, dd) = g.nearest_node(dst);
        let paths = g.routing.k_shortest_paths(&node_id(s), &node_id(d), k)?;
        if !paths.is_empty() {
            return Ok(StitchResult::Routed(StitchedRoute { paths, threshold_m: t, src_anchor_km: ds, dst_anchor_km: dd }));
        }
        last = Some(StitchDiagnostics {
            thresholds_tried_m: Vec::new(),
            src_anchor_km: ds,
            dst_anchor_km: dd,
            src_component_nodes: g.component_size(s),
            dst_component_nodes: g.component_size(d),
        });
    }
    let mut diag = last.unwrap();
    diag.thresholds_tried_m = tried;
    Ok(StitchResult::Unreachable(diag))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchedLink {
    pub a: String,
    pub b: String,
    /// Stitched route lengths, shortest first.
    pub lengths_km: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetLink {
    pub a: String,
    pub b: String,
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub a: String,
    pub b: String,
    pub dataset_km: f64,
    pub shortest_km: f64,
    pub mean_km: f64,
    pub longest_km: f64,
    pub shortest_ratio: f64,
    pub mean_ratio: f64,
    pub longest_ratio: f64,
    /// The dataset length exceeds every stitched route.
    pub dataset_exceeds_longest: bool,
    /// Shortest stitched route differs from the dataset by more than the allowed fraction.
    pub large_discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub median_shortest_ratio: f64,
    pub median_mean_ratio: f64,
    pub median_longest_ratio: f64,
    pub unmatched: Vec<(String, String)>,
}

pub const DEFAULT_DISCREPANCY_FRACTION: f64 = 0.5;

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) }
}

/// Matches stitched routes to dataset conduits by unordered city pair.
pub fn compare_with_dataset(stitched: &[StitchedLink], dataset: &[DatasetLink], discrepancy_fraction: f64) -> Result<Comparison> {
    let by_pair: BTreeMap<(String, String), &DatasetLink> = dataset.iter().map(|d| (pair_key(&d.a, &d.b), d)).collect();
    let mut rows = Vec::new();
    let mut unmatched = Vec::new();
    for s in stitched {
        let Some(d) = by_pair.get(&pair_key(&s.a, &s.b)) else {
            unmatched.push((s.a.clone(), s.b.clone()));
            continue;
        };
        if s.lengths_km.is_empty() || !(d.length_km > 0.0) {
            unmatched.push((s.a.clone(), s.b.clone()));
            continue;
        }
        let shortest = s.lengths_km.iter().copied().fold(f64::INFINITY, f64::min);
        let longest = s.lengths_km.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = s.lengths_km.iter().sum::<f64>() / s.lengths_km.len() as f64;
        let ratio = shortest / d.length_km;
        rows.push(ComparisonRow {
            a: s.a.clone(),
            b: s.b.clone(),
            dataset_km: d.length_km,
            shortest_km: shortest,
            mean_km: mean,
            longest_km: longest,
            shortest_ratio: ratio,
            mean_ratio: mean / d.length_km,
            longest_ratio: longest / d.length_km,
            dataset_exceeds_longest: d.length_km > longest,
            large_discrepancy: (ratio - 1.0).abs() > discrepancy_fraction,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyStats("no stitched link matches a dataset conduit".into()));
    }
    let med = |f: fn(&ComparisonRow) -> f64| stats::percentile(&rows.iter().map(f).collect::<Vec<_>>(), 0.5);
    Ok(Comparison {
        median_shortest_ratio: med(|r| r.shortest_ratio)?,
        median_mean_ratio: med(|r| r.mean_ratio)?,
        median_longest_ratio: med(|r| r.longest_ratio)?,
        rows,
        unmatched,
    })
}

pub fn write_comparison<W: Write>(cmp: &Comparison, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "a", "b", "dataset_km", "shortest_km", "mean_km", "longest_km", "shortest_ratio", "mean_ratio", "longest_ratio",
        "dataset_exceeds_longest", "large_discrepancy",
    ])?;
    for r in &cmp.rows {
        w.write_record([
            r.a.clone(),
            r.b.clone(),
            format!("{:.3}", r.dataset_km),
            format!("{:.3}", r.shortest_km),
            format!("{:.3}", r.mean_km),
            format!("{:.3}", r.longest_km),
            format!("{:.4}", r.shortest_ratio),
            format!("{:.4}", r.mean_ratio),
            format!("{:.4}", r.longest_ratio),
            r.dataset_exceeds_longest.to_string(),
            r.large_discrepancy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::bounding_box;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint { lat, lon }
    }

    fn m(meters: f64) -> f64 {
        meters / 1000.0 / KM_PER_DEGREE
    }

    fn seg(id: &str, pts: &[(f64, f64)]) -> Segment {
        Segment::new(id, pts.iter().map(|&(a, b)| p(a, b)).collect(), SegmentKind::Longhaul).unwrap()
    }

    #[test]
    fn snapping_thresholds() {
        let segs = vec![seg("s1", &[(0.0, 0.0), (0.0, 0.5)]), seg("s2", &[(m(30.0), 0.5), (0.0, 1.0)])];
        let cfg = StitchConfig::default();
        let g = build_segment_graph(&segs, &cfg).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.component_count(), 1);
        let route = g.routing_graph().shortest_path("n0", "n2", None).unwrap().into_path().unwrap();
        assert_eq!(route.conduits.len(), 2);
        assert_eq!(route.total_length_km, segs[0].length_km + segs[1].length_km);

        let tight = StitchConfig { snap_threshold_m: 20.0, ..cfg.clone() };
        let g = build_segment_graph(&segs, &tight).unwrap();
        assert_eq!(g.component_count(), 2);
    }

    #[test]
    fn snapping_is_transitive() {
        // three ends 40 m apart in a row: 0 m, 40 m, 80 m
        let segs = vec![
            seg("a", &[(0.0, -0.5), (0.0, 0.0)]),
            seg("b", &[(m(40.0), 0.0), (0.5, 0.0)]),
            seg("c", &[(m(80.0), 0.0), (0.0, 0.5)]),
        ];
        let g = build_segment_graph(&segs, &StitchConfig::default()).unwrap();
        assert_eq!(g.cluster_of[1], g.cluster_of[2]);
        assert_eq!(g.cluster_of[2], g.cluster_of[4]);
        assert_eq!(g.nodes.len(), 4);
        assert!((g.nodes[g.cluster_of[1]].lat - m(40.0)).abs() < 1e-12);
    }

    #[test]
    fn filtering() {
        let bx = bounding_box(p(0.0, 0.0), p(1.0, 1.0), 0.0).unwrap();
        let segs = vec![
            seg("in", &[(0.2, 0.2), (0.8, 0.8)]),
            seg("out", &[(2.0, 2.0), (3.0, 3.0)]),
            seg("cross", &[(0.5, 0.5), (0.5, 1.7)]),
        ];
        let kept: Vec<String> = filter_segments(&segs, &bx).into_iter().map(|s| s.id).collect();
        assert_eq!(kept, vec!["in", "cross"]);
    }

    #[test]
    fn chain_route_and_escalation() {
        let segs = vec![
            seg("a", &[(0.0, 0.0), (0.0, 0.3)]),
            seg("b", &[(0.0, 0.3), (0.1, 0.5), (0.0, 0.7)]),
            seg("c", &[(m(200.0), 0.7), (0.0, 1.0)]),
        ];
        let cfg = StitchConfig::default();
        let g = build_segment_graph(&segs, &cfg).unwrap();
        let StitchResult::Routed(r) = stitch_route(&g, p(0.0, 0.0), p(0.0, 1.0), 3, &cfg).unwrap() else {
            panic!("expected a route after escalation");
        };
        assert_eq!(r.threshold_m, 250.0);
        assert_eq!(r.paths.len(), 1);
        let want: f64 = segs.iter().map(|s| s.length_km).sum();
        assert!((r.paths[0].total_length_km - want).abs() < 1e-9);

        let no_escalation = StitchConfig { escalation_thresholds_m: vec![], ..cfg };
        match stitch_route(&g, p(0.0, 0.0), p(0.0, 1.0), 1, &no_escalation).unwrap() {
            StitchResult::Unreachable(d) => {
                assert_eq!(d.thresholds_tried_m, vec![50.0]);
                assert_eq!(d.src_component_nodes, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_pass_promotion() {
        // "spur" ends on an interior vertex of "main"
        let segs = vec![seg("main", &[(0.0, 0.0), (0.0, 0.5), (0.0, 1.0)]), seg("spur", &[(0.0, 0.5), (0.5, 0.5)])];
        let off = build_segment_graph(&segs, &StitchConfig::default()).unwrap();
        assert_eq!(off.component_count(), 2);
        let on = build_segment_graph(&segs, &StitchConfig { promote_near_passes: true, ..StitchConfig::default() }).unwrap();
        assert_eq!(on.component_count(), 1);
        assert_eq!(on.edges.len(), 3);
    }

    #[test]
    fn rejects_bad_config() {
        let segs = vec![seg("a", &[(0.0, 0.0), (0.0, 0.3)])];
        let bad = StitchConfig { escalation_thresholds_m: vec![40.0], ..StitchConfig::default() };
        assert!(build_segment_graph(&segs, &bad).is_err());
        assert!(build_segment_graph(&[], &StitchConfig::default()).is_err());
        assert!(Segment::new("x", vec![p(0.0, 0.0)], SegmentKind::Metro).is_err());
        assert!(Segment::new("x", vec![p(0.0, 0.0), p(0.0, 0.0)], SegmentKind::Metro).is_err());
    }

    #[test]
    fn geojson_round_trip() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"id":7,"kind":"metro"},
             "geometry":{"type":"LineString","coordinates":[[-119.8,39.5],[-119.7,39.6]]}},
            {"type":"Feature","properties":{"id":"m"},
             "geometry":{"type":"MultiLineString","coordinates":[[[0,0],[1,0]],[[1,0],[2,0]]]}}]}"#;
        let segs = load_segments(text.as_bytes()).unwrap();
        assert_eq!(segs.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), vec!["7", "m#0", "m#1"]);
        assert_eq!(segs[0].kind, SegmentKind::Metro);
        assert_eq!(segs[0].polyline[0], p(39.5, -119.8));
        let mut buf = Vec::new();
        write_segments(&segs, &mut buf).unwrap();
        assert_eq!(load_segments(&buf[..]).unwrap(), segs);
        assert!(load_segments(r#"{"features":[{"properties":{},"geometry":null}]}"#.as_bytes()).is_err());
    }

    #[test]
    fn dataset_comparison() {
        let stitched = vec![
            StitchedLink { a: "Reno".into(), b: "Salt Lake City".into(), lengths_km: vec![841.0, 921.0, 1019.0] },
            StitchedLink { a: "Nashville".into(), b: "Atlanta".into(), lengths_km: vec![618.7] },
            StitchedLink { a: "X".into(), b: "Y".into(), lengths_km: vec![100.0] },
            StitchedLink { a: "Nowhere".into(), b: "Y".into(), lengths_km: vec![100.0] },
        ];
        let dataset = vec![
            DatasetLink { a: "Salt Lake City".into(), b: "Reno".into(), length_km: 813.7 },
            DatasetLink { a: "Atlanta".into(), b: "Nashville".into(), length_km: 405.3 },
            DatasetLink { a: "X".into(), b: "Y".into(), length_km: 100.0 },
        ];
        let c = compare_with_dataset(&stitched, &dataset, DEFAULT_DISCREPANCY_FRACTION).unwrap();
        assert_eq!(c.rows.len(), 3);
        assert!((c.rows[0].shortest_ratio - 1.034).abs() < 0.001);
        assert!(!c.rows[0].large_discrepancy);
        assert!((c.rows[1].shortest_ratio - 1.53).abs() < 0.005);
        assert!(c.rows[1].large_discrepancy);
        assert_eq!(c.rows[2].shortest_ratio, 1.0);
        assert!(!c.rows[2].large_discrepancy && !c.rows[2].dataset_exceeds_longest);
        assert_eq!(c.unmatched.len(), 1);
        assert!(compare_with_dataset(&stitched[3..], &dataset, 0.5).is_err());
    }
}
