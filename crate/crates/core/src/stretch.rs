//! Stretch of shortest fiber paths over line-of-sight, weighted by a traffic model.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber_graph::{dijkstra, tie_broken_path, FiberGraph, Route};
use crate::stats::{self, Summary};

pub use crate::stats::weighted_percentile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    /// Every pair weighs 1.
    Uniform,
    /// Pair weight is the product of the two endpoint populations.
    Gravity,
}

impl FromStr for TrafficModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(TrafficModel::Uniform),
            "gravity" => Ok(TrafficModel::Gravity),
            other => Err(Error::invalid(format!("unknown traffic model {other}"))),
        }
    }
}

impl TrafficModel {
    /// Per-endpoint factor whose pairwise product is the pair weight.
    pub(crate) fn endpoint_factor(&self, graph: &FiberGraph, node: usize) -> Result<f64> {
        match self {
            TrafficModel::Uniform => Ok(1.0),
            TrafficModel::Gravity => {
                let ep = &graph.endpoints()[node];
                ep.population
                    .map(|p| p as f64)
                    .ok_or_else(|| Error::invalid(format!("gravity model needs a population for endpoint {}", ep.id)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StretchRow {
    pub src: String,
    pub dst: String,
    pub fiber_km: f64,
    pub los_km: f64,
    pub stretch: f64,
    pub hops: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairStretch {
    Row(StretchRow),
    Unreachable,
}

/// Shortest fiber path length over LOS for one pair (weight 1).
pub fn pair_stretch(graph: &FiberGraph, src: &str, dst: &str) -> Result<PairStretch> {
    if src == dst {
        return Err(Error::invalid("stretch needs two distinct endpoints"));
    }
    let los = graph.los_km(src, dst)?;
    let path = match graph.shortest_path(src, dst, None)? {
        Route::Found(p) => p,
        Route::Unreachable => return Ok(PairStretch::Unreachable),
    };
    if los <= 0.0 {
        return Err(Error::UndefinedStretch(src.into(), dst.into()));
    }
    Ok(PairStretch::Row(StretchRow {
        src: src.into(),
        dst: dst.into(),
        fiber_km: path.total_length_km,
        los_km: los,
        stretch: path.total_length_km / los,
        hops: path.hop_count,
        weight: 1.0,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StretchReport {
    pub model: TrafficModel,
    pub min_population: Option<u64>,
    /// One row per unordered reachable pair, in endpoint-table order.
    pub rows: Vec<StretchRow>,
    pub summary: Option<Summary>,
    pub unreachable: Vec<(String, String)>,
    /// Pairs at zero LOS distance, which have no defined stretch.
    pub colocated: Vec<(String, String)>,
}

impl StretchReport {
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.stretch, r.weight)).collect()
    }

    pub fn cdf(&self) -> Vec<(f64, f64)> {
        stats::cdf_table(&self.samples())
    }
}

/// Stretch over all unordered pairs of endpoints whose population is at least
/// `min_population` (all endpoints when `None`).
pub fn stretch_report(graph: &FiberGraph, model: TrafficModel, min_population: Option<u64>) -> Result<StretchReport> {
    graph.ensure_routable()?;
    let scope: Vec<usize> = (0..graph.node_count())
        .filter(|&i| match min_population {
            Some(min) => graph.endpoints()[i].population.is_some_and(|p| p >= min),
            None => true,
        })
        .collect();
    let factors: Vec<f64> = scope
        .iter()
        .map(|&i| model.endpoint_factor(graph, i))
        .collect::<Result<_>>()?;

    let edges = graph.all_edges();
    type PerSource = (Vec<StretchRow>, Vec<(String, String)>, Vec<(String, String)>);
    let per_source: Vec<PerSource> = (0..scope.len())
        .into_par_iter()
        .map(|si| {
            let s = scope[si];
            let dist = dijkstra(graph, s, &edges, None);
            let (mut rows, mut unreachable, mut colocated) = (Vec::new(), Vec::new(), Vec::new());
            let id = |n: usize| graph.endpoints()[n].id.clone();
            for ti in si + 1..scope.len() {
                let t = scope[ti];
                let Some(path) = tie_broken_path(graph, &dist, s, t, &edges, None) else {
                    unreachable.push((id(s), id(t)));
                    continue;
                };
                let los = graph.los(s, t);
                if los <= 0.0 {
                    colocated.push((id(s), id(t)));
                    continue;
                }
                rows.push(StretchRow {
                    src: id(s),
                    dst: id(t),
                    fiber_km: path.length,
                    los_km: los,
                    stretch: path.length / los,
                    hops: path.nodes.len() - 2,
                    weight: factors[si] * factors[ti],
                });
            }
            (rows, unreachable, colocated)
        })
        .collect();

    let mut report = StretchReport {
        model,
        min_population,
        rows: Vec::new(),
        summary: None,
        unreachable: Vec::new(),
        colocated: Vec::new(),
    };
    for (rows, unreachable, colocated) in per_source {
        report.rows.extend(rows);
        report.unreachable.extend(unreachable);
        report.colocated.extend(colocated);
    }
    let samples = report.samples();
    if samples.iter().any(|s| s.1 > 0.0) {
        report.summary = Some(stats::summarize(&samples)?);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopGroup {
    pub hops: usize,
    pub pairs: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Stretch range per intermediate-hop count.
pub fn stretch_by_hops(report: &StretchReport) -> Result<Vec<HopGroup>> {
    if report.rows.is_empty() {
        return Err(Error::EmptyStats("stretch report has no rows".into()));
    }
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &report.rows {
        groups.entry(r.hops).or_default().push(r.stretch);
    }
    groups
        .into_iter()
        .map(|(hops, values)| {
            Ok(HopGroup {
                hops,
                pairs: values.len(),
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                median: stats::percentile(&values, 0.5)?,
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

/// Unweighted median and 95th percentile of hop counts.
pub fn hop_percentiles(report: &StretchReport) -> Result<(f64, f64)> {
    let hops: Vec<f64> = report.rows.iter().map(|r| r.hops as f64).collect();
    Ok((stats::percentile(&hops, 0.5)?, stats::percentile(&hops, 0.95)?))
}

pub fn write_rows<W: Write>(report: &StretchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "fiber_km", "los_km", "stretch", "hops", "weight"])?;
    for r in &report.rows {
        w.write_record([
            r.src.clone(),
            r.dst.clone(),
            format!("{:.3}", r.fiber_km),
            format!("{:.3}", r.los_km),
            format!("{:.6}", r.stretch),
            r.hops.to_string(),
            r.weight.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cdf<W: Write>(report: &StretchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stretch", "cumulative_weight_fraction"])?;
    for (v, f) in report.cdf() {
        w.write_record([format!("{v:.6}"), format!("{f:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber_graph::tests::{ep, triangle};
    use crate::fiber_graph::Conduit;
    use crate::geo::KM_PER_DEGREE;
    use proptest::prelude::*;

    #[test]
    fn pair_examples() {
        let g = triangle();
        let PairStretch::Row(r) = pair_stretch(&g, "A", "C").unwrap() else { panic!() };
        assert!((r.stretch - 1.4).abs() < 1e-6, "{}", r.stretch);
        assert_eq!(r.fiber_km, 7.0);

        let g = FiberGraph::new(
            vec![ep("a", 0.0, 0.0, None), ep("b", 0.0, 7.0 / KM_PER_DEGREE, None)],
            vec![Conduit::new("ab", "a", "b", 7.0, &[])],
            false,
        )
        .unwrap()
        .0;
        let PairStretch::Row(r) = pair_stretch(&g, "a", "b").unwrap() else { panic!() };
        assert!((r.stretch - 1.0).abs() < 1e-9);

        let g = FiberGraph::new(
            vec![ep("a", 0.0, 0.0, None), ep("b", 0.0, 813.4 / KM_PER_DEGREE, None)],
            vec![Conduit::new("ab", "a", "b", 943.6, &[])],
            false,
        )
        .unwrap()
        .0;
        let PairStretch::Row(r) = pair_stretch(&g, "a", "b").unwrap() else { panic!() };
        assert!((r.stretch - 1.16).abs() < 0.005);
    }

    #[test]
    fn pair_errors() {
        let g = FiberGraph::new(
            vec![ep("a", 1.0, 1.0, None), ep("b", 1.0, 1.0, None), ep("c", 2.0, 2.0, None)],
            vec![Conduit::new("ab", "a", "b", 1.0, &[])],
            false,
        )
        .unwrap()
        .0;
        assert!(matches!(pair_stretch(&g, "a", "b"), Err(Error::UndefinedStretch(..))));
        assert_eq!(pair_stretch(&g, "a", "c").unwrap(), PairStretch::Unreachable);
        let r = stretch_report(&g, TrafficModel::Uniform, None).unwrap();
        assert_eq!(r.colocated.len(), 1);
        assert_eq!(r.unreachable.len(), 2);
        assert!(r.summary.is_none());
    }

    #[test]
    fn gravity_needs_population() {
        let g = FiberGraph::new(
            vec![ep("a", 0.0, 0.0, Some(5)), ep("b", 0.0, 1.0, None)],
            vec![Conduit::new("ab", "a", "b", 120.0, &[])],
            false,
        )
        .unwrap()
        .0;
        let err = stretch_report(&g, TrafficModel::Gravity, None).unwrap_err();
        assert!(err.to_string().contains("endpoint b"), "{err}");
        // out-of-scope endpoints do not need one
        let r = stretch_report(&g, TrafficModel::Gravity, Some(1)).unwrap();
        assert!(r.rows.is_empty());
    }

    #[test]
    fn hop_groups() {
        let g = triangle();
        let r = stretch_report(&g, TrafficModel::Uniform, None).unwrap();
        let groups = stretch_by_hops(&r).unwrap();
        assert_eq!(groups.iter().map(|g| (g.hops, g.pairs)).collect::<Vec<_>>(), vec![(0, 2), (1, 1)]);
        assert!((groups[1].median - 1.4).abs() < 1e-6);

        let direct = FiberGraph::new(
            vec![ep("a", 0.0, 0.0, None), ep("b", 0.0, 1.0, None)],
            vec![Conduit::new("ab", "a", "b", 120.0, &[])],
            false,
        )
        .unwrap()
        .0;
        let r = stretch_report(&direct, TrafficModel::Uniform, None).unwrap();
        assert_eq!(stretch_by_hops(&r).unwrap().len(), 1);
        let empty = StretchReport { rows: vec![], ..r };
        assert!(stretch_by_hops(&empty).is_err());
    }

    fn populated(n: usize, edges: &[(usize, usize, f64)], pops: &[u64]) -> FiberGraph {
        let eps = (0..n)
            .map(|i| ep(&format!("n{i}"), (i % 3) as f64, (i / 3) as f64, Some(pops[i % pops.len()])))
            .collect();
        let cs = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.0 != e.1)
            .map(|(i, &(a, b, extra))| {
                let pa = ((a % 3) as f64, (a / 3) as f64);
                let pb = ((b % 3) as f64, (b / 3) as f64);
                let los = crate::geo::haversine_km(
                    crate::GeoPoint { lat: pa.0, lon: pa.1 },
                    crate::GeoPoint { lat: pb.0, lon: pb.1 },
                    crate::geo::EARTH_RADIUS_KM,
                );
                Conduit::new(&format!("e{i}"), &format!("n{a}"), &format!("n{b}"), los * (1.0 + extra), &[])
            })
            .collect();
        FiberGraph::new(eps, cs, true).unwrap().0
    }

    proptest! {
        #[test]
        fn invariants(
            n in 3usize..8,
            raw in prop::collection::vec((0usize..8, 0usize..8, 0.0f64..0.5), 2..16),
            pops in prop::collection::vec(1u64..1_000_000, 1..5),
            scale in 2u64..50,
            cut in 1u64..1_000_000,
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b, x)| (a % n, b % n, x)).collect();
            let g = populated(n, &edges, &pops);
            let uni = stretch_report(&g, TrafficModel::Uniform, None).unwrap();
            let grav = stretch_report(&g, TrafficModel::Gravity, None).unwrap();

            // stretch >= 1 on strict data
            for r in &uni.rows {
                prop_assert!(r.stretch >= 1.0 - 1e-12);
            }
            // same rows under both models
            let key = |r: &StretchRow| (r.src.clone(), r.dst.clone(), r.fiber_km);
            prop_assert_eq!(uni.rows.iter().map(key).collect::<Vec<_>>(), grav.rows.iter().map(key).collect::<Vec<_>>());

            // scaling populations leaves gravity percentiles alone
            let scaled: Vec<u64> = pops.iter().map(|p| p * scale).collect();
            let g2 = populated(n, &edges, &scaled);
            let grav2 = stretch_report(&g2, TrafficModel::Gravity, None).unwrap();
            if let (Some(a), Some(b)) = (grav.summary, grav2.summary) {
                prop_assert_eq!(a.median, b.median);
                prop_assert_eq!(a.p95, b.p95);
                prop_assert!((a.mean - b.mean).abs() <= 1e-12 * a.mean);
            }

            // filter monotonicity
            let lo = stretch_report(&g, TrafficModel::Uniform, Some(cut)).unwrap();
            let hi = stretch_report(&g, TrafficModel::Uniform, Some(cut.saturating_mul(2))).unwrap();
            prop_assert!(hi.rows.len() <= lo.rows.len());
            for r in &hi.rows {
                prop_assert!(lo.rows.iter().any(|q| q.src == r.src && q.dst == r.dst));
            }
        }
    }
}
