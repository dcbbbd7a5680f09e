//! Wavelength-lease pricing of a design network.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{DesignNetwork, Evaluator, Terminal};
use crate::error::{Error, Result};
use crate::fiber_graph::{dijkstra, tie_broken_path, FiberGraph};
use crate::stretch::TrafficModel;

/// Seconds in one lease month (a twelfth of a 365-day year).
pub const SECONDS_PER_MONTH: f64 = 365.0 * 86_400.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavelengthSku {
    pub capacity_gbps: f64,
    /// Dollars per Gbps per km per month.
    pub unit_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostModelParams {
    pub aggregate_input_gbps: f64,
    pub lease_months: u32,
    pub equipment_per_site_usd: f64,
    pub colo_per_site_per_month_usd: f64,
    pub skus: Vec<WavelengthSku>,
    pub utilization_lo: f64,
    pub utilization_hi: f64,
}

pub const DEFAULT_UNIT_PRICE: f64 = 0.25;

impl Default for CostModelParams {
    fn default() -> Self {
        CostModelParams {
            aggregate_input_gbps: 1000.0,
            lease_months: 60,
            equipment_per_site_usd: 10_000.0,
            colo_per_site_per_month_usd: 2_000.0,
            skus: [1.0, 10.0, 40.0, 100.0]
                .iter()
                .map(|&c| WavelengthSku { capacity_gbps: c, unit_price: DEFAULT_UNIT_PRICE })
                .collect(),
            utilization_lo: 0.20,
            utilization_hi: 0.90,
        }
    }
}

impl CostModelParams {
    pub fn with_unit_price(mut self, price: f64) -> Self {
        for s in &mut self.skus {
            s.unit_price = price;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.skus.is_empty() {
            return Err(Error::invalid("no wavelength SKUs configured"));
        }
        if self.skus.iter().any(|s| !(s.capacity_gbps > 0.0) || !(s.unit_price > 0.0)) {
            return Err(Error::invalid("SKU capacity and price must be positive"));
        }
        if !(self.utilization_lo > 0.0 && self.utilization_lo <= self.utilization_hi && self.utilization_hi <= 1.0) {
            return Err(Error::invalid("utilization band must satisfy 0 < lo <= hi <= 1"));
        }
        if self.lease_months < 1 {
            return Err(Error::invalid("lease must last at least one month"));
        }
        if !(self.aggregate_input_gbps >= 0.0) {
            return Err(Error::invalid("aggregate input rate must be >= 0"));
        }
        Ok(())
    }

    fn smallest_sku(&self) -> WavelengthSku {
        *self.skus.iter().min_by(|a, b| a.capacity_gbps.total_cmp(&b.capacity_gbps)).unwrap()
    }

    fn largest_sku(&self) -> WavelengthSku {
        *self.skus.iter().max_by(|a, b| a.capacity_gbps.total_cmp(&b.capacity_gbps)).unwrap()
    }
}

/// Why a provision sits outside the utilization band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorCase {
    /// Demand is too small for even one smallest wavelength to reach the band floor.
    BelowSmallestSku,
    /// Demand falls between SKUs: no combination of one or two wavelengths is
    /// inside the band, so the cheapest one that is not overloaded is used.
    SkuGap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkProvision {
    pub conduit: String,
    pub demand_gbps: f64,
    pub sku: WavelengthSku,
    pub wavelength_count: u32,
    pub utilization: f64,
    pub floor: Option<FloorCase>,
}

impl LinkProvision {
    pub fn provisioned_gbps(&self) -> f64 {
        self.sku.capacity_gbps * self.wavelength_count as f64
    }
}

/// Picks the cheapest one- or two-wavelength configuration whose utilization
/// is inside the band. Ties go to the smaller capacity, then fewer wavelengths.
pub fn provision_link(demand_gbps: f64, params: &CostModelParams) -> Result<LinkProvision> {
    params.validate()?;
    if !(demand_gbps >= 0.0) || !demand_gbps.is_finite() {
        return Err(Error::invalid(format!("demand must be >= 0, got {demand_gbps}")));
    }
    let make = |sku: WavelengthSku, count: u32, floor| LinkProvision {
        conduit: String::new(),
        demand_gbps,
        sku,
        wavelength_count: count,
        utilization: demand_gbps / (sku.capacity_gbps * count as f64),
        floor,
    };
    let mut options: Vec<(f64, WavelengthSku, u32)> = Vec::new();
    for &sku in &params.skus {
        for count in [1u32, 2] {
            options.push((sku.capacity_gbps * count as f64 * sku.unit_price, sku, count));
        }
    }
    options.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.capacity_gbps.total_cmp(&b.1.capacity_gbps))
            .then(a.2.cmp(&b.2))
    });
    let util = |sku: &WavelengthSku, count: u32| demand_gbps / (sku.capacity_gbps * count as f64);

    if let Some(&(_, sku, count)) = options
        .iter()
        .find(|(_, s, c)| (params.utilization_lo..=params.utilization_hi).contains(&util(s, *c)))
    {
        return Ok(make(sku, count, None));
    }
    let smallest = params.smallest_sku();
    if util(&smallest, 1) < params.utilization_lo {
        return Ok(make(smallest, 1, Some(FloorCase::BelowSmallestSku)));
    }
    if let Some(&(_, sku, count)) = options.iter().find(|(_, s, c)| util(s, *c) <= params.utilization_hi) {
        return Ok(make(sku, count, Some(FloorCase::SkuGap)));
    }
    let largest = params.largest_sku();
    let count = (demand_gbps / (params.utilization_hi * largest.capacity_gbps)).ceil().max(3.0) as u32;
    Ok(make(largest, count, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDemand {
    pub src: String,
    pub dst: String,
    pub demand_gbps: f64,
    pub conduits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficRouting {
    /// Demand per active conduit, including idle ones at zero.
    pub demands: BTreeMap<String, f64>,
    pub pairs: Vec<PairDemand>,
}

/// Splits `aggregate_gbps` across terminal pairs in proportion to their
/// traffic weight and loads each pair's tie-broken shortest path.
pub fn route_traffic(network: &DesignNetwork, graph: &FiberGraph, aggregate_gbps: f64) -> Result<TrafficRouting> {
    route_on(graph, &network.terminals, network.model, &network.active, aggregate_gbps)
}

pub(crate) fn route_on(
    graph: &FiberGraph,
    terminals: &[Terminal],
    model: TrafficModel,
    active: &BTreeSet<String>,
    aggregate_gbps: f64,
) -> Result<TrafficRouting> {
    let eval = Evaluator::new(graph, terminals, model)?;
    let mut mask = vec![false; graph.conduit_count()];
    for id in active {
        let i = graph
            .conduit_index(id)
            .ok_or_else(|| Error::invalid(format!("unknown conduit {id}")))?;
        mask[i] = true;
    }
    let n = eval.nodes.len();
    let total_weight: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| eval.pair_weight(i, j)).sum();
    if n > 1 && !(total_weight > 0.0) {
        return Err(Error::invalid("traffic weights sum to zero"));
    }
    let mut load = vec![0.0; graph.conduit_count()];
    let mut pairs = Vec::new();
    for i in 0..n {
        let s = eval.nodes[i];
        let dist = dijkstra(graph, s, &mask, None);
        for j in i + 1..n {
            let t = eval.nodes[j];
            let path = tie_broken_path(graph, &dist, s, t, &mask, None).ok_or_else(|| eval.disconnected(i, j))?;
            let demand = aggregate_gbps * eval.pair_weight(i, j) / total_weight;
            for &e in &path.edges {
                load[e] += demand;
            }
            pairs.push(PairDemand {
                src: graph.endpoints()[s].id.clone(),
                dst: graph.endpoints()[t].id.clone(),
                demand_gbps: demand,
                conduits: path.edges.iter().map(|&e| graph.conduits()[e].id.clone()).collect(),
            });
        }
    }
    let demands = (0..mask.len())
        .filter(|&e| mask[e])
        .map(|e| (graph.conduits()[e].id.clone(), load[e]))
        .collect();
    Ok(TrafficRouting { demands, pairs })
}

pub fn provision_all(routing: &TrafficRouting, params: &CostModelParams) -> Result<Vec<LinkProvision>> {
    routing
        .demands
        .iter()
        .map(|(id, &d)| {
            let mut p = provision_link(d, params)?;
            p.conduit = id.clone();
            Ok(p)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub sites: usize,
    pub bandwidth_usd: f64,
    pub equipment_usd: f64,
    pub colo_usd: f64,
    pub total_usd: f64,
    pub goodput_gb: f64,
    pub usd_per_gb: f64,
}

/// Monthly bandwidth price of one provisioned link.
pub fn monthly_bandwidth_usd(p: &LinkProvision, length_km: f64) -> f64 {
    p.provisioned_gbps() * length_km * p.sku.unit_price
}

/// Lease cost over the contract. Sites are the terminals plus every endpoint
/// touched by an active conduit, each counted once.
pub fn network_cost(
    graph: &FiberGraph,
    terminals: &[Terminal],
    active: &BTreeSet<String>,
    provisions: &[LinkProvision],
    params: &CostModelParams,
) -> Result<CostBreakdown> {
    params.validate()?;
    let by_id: BTreeMap<&str, &LinkProvision> = provisions.iter().map(|p| (p.conduit.as_str(), p)).collect();
    let mut sites: BTreeSet<usize> = terminals
        .iter()
        .map(|t| graph.node_index(&t.endpoint))
        .collect::<Result<_>>()?;
    let months = params.lease_months as f64;
    let mut bandwidth = 0.0;
    for id in active {
        let i = graph
            .conduit_index(id)
            .ok_or_else(|| Error::invalid(format!("unknown conduit {id}")))?;
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::invalid(format!("no provision for conduit {id}")))?;
        bandwidth += monthly_bandwidth_usd(p, graph.weight(i)) * months;
        let (a, b) = graph.ends(i);
        sites.insert(a);
        sites.insert(b);
    }
    let n_sites = sites.len() as f64;
    let equipment = n_sites * params.equipment_per_site_usd;
    let colo = n_sites * params.colo_per_site_per_month_usd * months;
    let total = bandwidth + equipment + colo;
    let goodput_gb = params.aggregate_input_gbps / 8.0 * months * SECONDS_PER_MONTH;
    Ok(CostBreakdown {
        sites: sites.len(),
        bandwidth_usd: bandwidth,
        equipment_usd: equipment,
        colo_usd: colo,
        total_usd: total,
        goodput_gb,
        usd_per_gb: if goodput_gb > 0.0 { total / goodput_gb } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostPoint {
    pub iteration: usize,
    pub links: usize,
    pub fiber_km: f64,
    pub cost: CostBreakdown,
}

/// Cost of the network at the given active set: route, provision, price.
pub fn price_state(
    graph: &FiberGraph,
    terminals: &[Terminal],
    model: TrafficModel,
    active: &BTreeSet<String>,
    params: &CostModelParams,
) -> Result<CostBreakdown> {
    let routing = route_on(graph, terminals, model, active, params.aggregate_input_gbps)?;
    let provisions = provision_all(&routing, params)?;
    network_cost(graph, terminals, active, &provisions, params)
}

/// Re-routes and re-prices every state of the network's prune trace.
pub fn cost_curve(graph: &FiberGraph, network: &DesignNetwork, params: &CostModelParams) -> Result<Vec<CostPoint>> {
    params.validate()?;
    network
        .trace
        .par_iter()
        .map(|entry| {
            let active = network.state_at(entry.iteration);
            let cost = price_state(graph, &network.terminals, network.model, &active, params)?;
            Ok(CostPoint { iteration: entry.iteration, links: entry.links, fiber_km: entry.fiber_km, cost })
        })
        .collect()
}

pub fn write_cost_curve<W: Write>(points: &[CostPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["links", "fiber_km", "bandwidth_usd", "equipment_usd", "colo_usd", "total_usd", "usd_per_gb"])?;
    for p in points {
        w.write_record([
            p.links.to_string(),
            format!("{:.3}", p.fiber_km),
            format!("{:.2}", p.cost.bandwidth_usd),
            format!("{:.2}", p.cost.equipment_usd),
            format!("{:.2}", p.cost.colo_usd),
            format!("{:.2}", p.cost.total_usd),
            format!("{:.6}", p.cost.usd_per_gb),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{prune_to, union_shortest_path_network};
    use crate::fiber_graph::tests::ep;
    use crate::fiber_graph::Conduit;

    fn params() -> CostModelParams {
        CostModelParams::default()
    }

    #[test]
    fn provisioning_examples() {
        let p = provision_link(25.0, &params()).unwrap();
        assert_eq!((p.sku.capacity_gbps, p.wavelength_count, p.utilization, p.floor), (40.0, 1, 0.625, None));
        let p = provision_link(95.0, &params()).unwrap();
        assert_eq!((p.sku.capacity_gbps, p.wavelength_count, p.utilization), (100.0, 2, 0.475));
        let p = provision_link(0.05, &params()).unwrap();
        assert_eq!((p.sku.capacity_gbps, p.wavelength_count, p.floor), (1.0, 1, Some(FloorCase::BelowSmallestSku)));
        assert!((p.utilization - 0.05).abs() < 1e-12);
        let p = provision_link(1.9, &params()).unwrap();
        assert_eq!((p.sku.capacity_gbps, p.wavelength_count, p.floor), (10.0, 1, Some(FloorCase::SkuGap)));
        let p = provision_link(500.0, &params()).unwrap();
        assert_eq!((p.sku.capacity_gbps, p.wavelength_count), (100.0, 6));
        assert!(p.utilization <= 0.9 && p.floor.is_none());
        assert!(provision_link(-1.0, &params()).is_err());
    }

    #[test]
    fn two_site_cost() {
        let g = FiberGraph::new(
            vec![ep("ny", 40.7, -74.0, Some(1)), ep("chi", 41.9, -87.6, Some(1))],
            vec![Conduit::new("l", "ny", "chi", 1200.0, &[])],
            false,
        )
        .unwrap()
        .0;
        let terminals = Terminal::from_endpoints(&g, &["ny", "chi"]).unwrap();
        let active: BTreeSet<String> = ["l".to_string()].into_iter().collect();
        let prov = LinkProvision {
            conduit: "l".into(),
            demand_gbps: 50.0,
            sku: WavelengthSku { capacity_gbps: 100.0, unit_price: 0.25 },
            wavelength_count: 1,
            utilization: 0.5,
            floor: None,
        };
        assert_eq!(monthly_bandwidth_usd(&prov, 1200.0), 30_000.0);
        let c = network_cost(&g, &terminals, &active, &[prov], &params()).unwrap();
        assert_eq!(c.bandwidth_usd, 1_800_000.0);
        assert_eq!(c.equipment_usd, 20_000.0);
        assert_eq!(c.colo_usd, 240_000.0);
        assert_eq!(c.total_usd, 2_060_000.0);
        assert!((c.usd_per_gb - c.total_usd / c.goodput_gb).abs() < 1e-18);

        assert!(network_cost(&g, &terminals, &active, &[], &params()).is_err());

        let lonely = Terminal::from_endpoints(&g, &["ny"]).unwrap();
        let c = network_cost(&g, &lonely, &BTreeSet::new(), &[], &params()).unwrap();
        assert_eq!((c.bandwidth_usd, c.sites), (0.0, 1));
        assert_eq!(c.total_usd, 10_000.0 + 2_000.0 * 60.0);
    }

    fn line() -> FiberGraph {
        FiberGraph::new(
            vec![ep("A", 0.0, 0.0, Some(1000)), ep("B", 0.0, 2.0, Some(1000)), ep("C", 0.0, 4.0, Some(1000))],
            vec![Conduit::new("ab", "A", "B", 230.0, &[]), Conduit::new("bc", "B", "C", 230.0, &[])],
            false,
        )
        .unwrap()
        .0
    }

    #[test]
    fn routing_splits() {
        let g = line();
        let t = Terminal::from_endpoints(&g, &["A", "C"]).unwrap();
        let net = union_shortest_path_network(&g, &t, TrafficModel::Gravity).unwrap();
        let r = route_traffic(&net, &g, 1000.0).unwrap();
        assert_eq!(r.demands["ab"], 1000.0);
        assert_eq!(r.demands["bc"], 1000.0);

        let t = Terminal::from_endpoints(&g, &["A", "B", "C"]).unwrap();
        let grav = union_shortest_path_network(&g, &t, TrafficModel::Gravity).unwrap();
        let r = route_traffic(&grav, &g, 900.0).unwrap();
        // pairs AB, BC, AC each get 300; each conduit carries two of them
        assert!((r.demands["ab"] - 600.0).abs() < 1e-9);
        let total: f64 = r.pairs.iter().map(|p| p.demand_gbps).sum();
        assert!((total - 900.0).abs() < 1e-9);

        let uni = union_shortest_path_network(&g, &t, TrafficModel::Uniform).unwrap();
        assert_eq!(route_traffic(&uni, &g, 900.0).unwrap().demands, r.demands);
    }

    #[test]
    fn curve_over_trace() {
        let g = line();
        let t = Terminal::from_endpoints(&g, &["A", "C"]).unwrap();
        let net = union_shortest_path_network(&g, &t, TrafficModel::Gravity).unwrap();
        let curve = cost_curve(&g, &net, &params()).unwrap();
        assert_eq!(curve.len(), 1);
        let net = prune_to(net, &g, 2).unwrap();
        assert_eq!(cost_curve(&g, &net, &params()).unwrap().len(), 1);
    }

    #[test]
    fn linear_in_price_and_term() {
        let g = line();
        let t = Terminal::from_endpoints(&g, &["A", "B", "C"]).unwrap();
        let net = union_shortest_path_network(&g, &t, TrafficModel::Gravity).unwrap();
        let base = price_state(&g, &t, net.model, &net.active, &params()).unwrap();
        let doubled = price_state(&g, &t, net.model, &net.active, &params().with_unit_price(0.5)).unwrap();
        assert!((doubled.bandwidth_usd - 2.0 * base.bandwidth_usd).abs() < 1e-6);
        let longer = CostModelParams { lease_months: 120, ..params() };
        let longer = price_state(&g, &t, net.model, &net.active, &longer).unwrap();
        assert!((longer.bandwidth_usd - 2.0 * base.bandwidth_usd).abs() < 1e-6);
    }
}
