//! Latency measurement analytics: minimum RTTs, inflation over f-latency and
//! line-of-sight, speed-of-light violations, conduit coverage, the max-gap
//! traceroute/conduit match and skew-cancelled one-way delays.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_graph::FiberGraph;
use crate::geo::{haversine_km, GeoPoint, EARTH_RADIUS_KM};
use crate::latency::{f_latency_one_way, f_latency_rtt, FIBER_SPEED_KM_S};
use crate::stats::{self, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RttRecord {
    pub src: String,
    pub dst: String,
    pub provider: String,
    pub rtt_ms: f64,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl RttRecord {
    pub fn new(src: &str, dst: &str, provider: &str, rtt_ms: f64) -> Self {
        RttRecord { src: src.into(), dst: dst.into(), provider: provider.into(), rtt_ms, timestamp: None }
    }
}

/// Reads `src,dst,provider,rtt_ms,timestamp` rows.
pub fn load_rtt_records<R: Read>(reader: R) -> Result<Vec<RttRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RttRecord>().enumerate() {
        let mut r = row.map_err(|e| Error::load("rtt", i + 1, e.to_string()))?;
        if !(r.rtt_ms > 0.0) || !r.rtt_ms.is_finite() {
            return Err(Error::load("rtt", i + 1, format!("rtt_ms must be positive, got {}", r.rtt_ms)));
        }
        if r.timestamp.as_deref() == Some("") {
            r.timestamp = None;
        }
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinRtt {
    pub src: String,
    pub dst: String,
    pub provider: Option<String>,
    pub min_rtt_ms: f64,
    pub count: usize,
}

/// Minimum RTT per unordered pair (and per provider when `by_provider`).
/// Output is sorted by (src, dst, provider) with `src <= dst`.
pub fn min_rtt(records: &[RttRecord], by_provider: bool) -> Vec<MinRtt> {
    let mut groups: BTreeMap<(String, String, Option<String>), (f64, usize)> = BTreeMap::new();
    for r in records {
        let (a, b) = if r.src <= r.dst { (&r.src, &r.dst) } else { (&r.dst, &r.src) };
        let provider = by_provider.then(|| r.provider.clone());
        let e = groups.entry((a.clone(), b.clone(), provider)).or_insert((f64::INFINITY, 0));
        e.0 = e.0.min(r.rtt_ms);
        e.1 += 1;
    }
    groups
        .into_iter()
        .map(|((src, dst, provider), (min_rtt_ms, count))| MinRtt { src, dst, provider, min_rtt_ms, count })
        .collect()
}

/// Maps city labels to endpoint ids: aliases first, then endpoint id, then
/// exact endpoint name. A name shared by several endpoints is an error.
#[derive(Debug, Clone)]
pub struct LabelResolver {
    ids: HashMap<String, String>,
    names: HashMap<String, Vec<String>>,
    aliases: BTreeMap<String, String>,
}

impl LabelResolver {
    pub fn new(graph: &FiberGraph, aliases: BTreeMap<String, String>) -> Self {
        let mut names: HashMap<String, Vec<String>> = HashMap::new();
        let mut ids = HashMap::new();
        for e in graph.endpoints() {
            ids.insert(e.id.clone(), e.id.clone());
            names.entry(e.name.clone()).or_default().push(e.id.clone());
        }
        LabelResolver { ids, names, aliases }
    }

    pub fn resolve(&self, label: &str) -> Result<String> {
        let target = self.aliases.get(label).map(String::as_str).unwrap_or(label);
        if let Some(id) = self.ids.get(target) {
            return Ok(id.clone());
        }
        match self.names.get(target).map(Vec::as_slice) {
            Some([id]) => Ok(id.clone()),
            Some(many) => Err(Error::invalid(format!("label {label} is ambiguous: {}", many.join(", ")))),
            None => Err(Error::invalid(format!("label {label} matches no endpoint"))),
        }
    }
}

/// Reads an `alias,endpoint` table.
pub fn load_aliases<R: Read>(reader: R) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let (Some(a), Some(e)) = (row.get(0), row.get(1)) else {
            return Err(Error::load("aliases", i + 1, "expected alias,endpoint"));
        };
        if out.insert(a.to_string(), e.to_string()).is_some() {
            return Err(Error::load("aliases", i + 1, format!("duplicate alias {a}")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflationOptions {
    /// Route only over conduits carrying this ISP.
    pub isp: Option<String>,
    /// Keep only pairs whose shortest path is a single conduit.
    pub direct_only: bool,
    pub speed_km_s: f64,
}

impl Default for InflationOptions {
    fn default() -> Self {
        InflationOptions { isp: None, direct_only: false, speed_km_s: FIBER_SPEED_KM_S }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflationRow {
    pub src: String,
    pub dst: String,
    pub min_rtt_ms: f64,
    pub path_km: f64,
    pub conduits: usize,
    pub f_latency_ms: f64,
    pub los_km: f64,
    pub los_latency_ms: f64,
    pub inflation: f64,
    pub los_inflation: f64,
    /// The RTT beats f-latency of the shortest path.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub src: String,
    pub dst: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflationTable {
    pub rows: Vec<InflationRow>,
    pub errors: Vec<RowError>,
    pub unreachable: Vec<(String, String)>,
    /// Over rows without a violation.
    pub inflation: Option<Summary>,
    pub los_inflation: Option<Summary>,
}

/// Inflation of each pair's minimum RTT over the f-latency of its shortest
/// path and of its line-of-sight distance. Unresolvable labels become row
/// errors; violating rows stay in `rows` but are left out of the summaries.
pub fn inflation_table(pairs: &[MinRtt], graph: &FiberGraph, resolver: &LabelResolver, opts: &InflationOptions) -> Result<InflationTable> {
    let isp_filter: Option<Vec<&str>> = opts.isp.as_deref().map(|i| vec![i]);
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut unreachable = Vec::new();
    for p in pairs {
        let err = |message: String| RowError { src: p.src.clone(), dst: p.dst.clone(), message };
        let (a, b) = match (resolver.resolve(&p.src), resolver.resolve(&p.dst)) {
            (Ok(a), Ok(b)) if a != b => (a, b),
            (Ok(_), Ok(_)) => {
                errors.push(err("both labels resolve to the same endpoint".into()));
                continue;
            }
            (Err(e), _) | (_, Err(e)) => {
                errors.push(err(e.to_string()));
                continue;
            }
        };
        let route = match graph.shortest_path(&a, &b, isp_filter.as_deref()) {
            Ok(r) => r,
            Err(e) => {
                errors.push(err(e.to_string()));
                continue;
            }
        };
        let Some(path) = route.into_path() else {
            unreachable.push((p.src.clone(), p.dst.clone()));
            continue;
        };
        if opts.direct_only && path.conduits.len() != 1 {
            continue;
        }
        let f = f_latency_rtt(path.total_length_km, opts.speed_km_s)?;
        let los_km = graph.los_km(&a, &b)?;
        let los_f = f_latency_rtt(los_km, opts.speed_km_s)?;
        rows.push(InflationRow {
            src: p.src.clone(),
            dst: p.dst.clone(),
            min_rtt_ms: p.min_rtt_ms,
            path_km: path.total_length_km,
            conduits: path.conduits.len(),
            f_latency_ms: f,
            los_km,
            los_latency_ms: los_f,
            inflation: p.min_rtt_ms / f,
            los_inflation: p.min_rtt_ms / los_f,
            violation: p.min_rtt_ms < f,
        });
    }
    let summary = |field: fn(&InflationRow) -> f64| {
        let s: Vec<(f64, f64)> = rows.iter().filter(|r| !r.violation).map(|r| (field(r), 1.0)).collect();
        stats::summarize(&s).ok()
    };
    Ok(InflationTable {
        inflation: summary(|r| r.inflation),
        los_inflation: summary(|r| r.los_inflation),
        rows,
        errors,
        unreachable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub src: String,
    pub dst: String,
    pub min_rtt_ms: f64,
    pub path_km: f64,
    pub f_latency_ms: f64,
    /// Longest fiber path consistent with the RTT.
    pub max_consistent_km: f64,
    pub diagnosis: String,
}

/// Rows whose RTT is strictly below the f-latency of the shortest path. Each
/// points at a missing conduit (or wrong length) shorter than the one mapped.
pub fn detect_sol_violations(table: &InflationTable, speed_km_s: f64) -> Vec<Violation> {
    table
        .rows
        .iter()
        .filter(|r| r.violation)
        .map(|r| {
            let max_km = r.min_rtt_ms / 1000.0 * speed_km_s / 2.0;
            Violation {
                src: r.src.clone(),
                dst: r.dst.clone(),
                min_rtt_ms: r.min_rtt_ms,
                path_km: r.path_km,
                f_latency_ms: r.f_latency_ms,
                max_consistent_km: max_km,
                diagnosis: format!(
                    "mapped path of {:.1} km exceeds the {:.1} km the RTT allows; a shorter conduit between {} and {} is likely missing",
                    r.path_km, max_km, r.src, r.dst
                ),
            }
        })
        .collect()
}

pub fn write_inflation<W: Write>(table: &InflationTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "src", "dst", "min_rtt_ms", "path_km", "conduits", "f_latency_ms", "los_km", "los_latency_ms", "inflation", "los_inflation",
        "violation",
    ])?;
    for r in &table.rows {
        w.write_record([
            r.src.clone(),
            r.dst.clone(),
            format!("{:.3}", r.min_rtt_ms),
            format!("{:.2}", r.path_km),
            r.conduits.to_string(),
            format!("{:.3}", r.f_latency_ms),
            format!("{:.2}", r.los_km),
            format!("{:.3}", r.los_latency_ms),
            format!("{:.4}", r.inflation),
            format!("{:.4}", r.los_inflation),
            r.violation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_violations<W: Write>(violations: &[Violation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "min_rtt_ms", "path_km", "f_latency_ms", "max_consistent_km", "diagnosis"])?;
    for v in violations {
        w.write_record([
            v.src.clone(),
            v.dst.clone(),
            format!("{:.3}", v.min_rtt_ms),
            format!("{:.2}", v.path_km),
            format!("{:.3}", v.f_latency_ms),
            format!("{:.2}", v.max_consistent_km),
            v.diagnosis.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageBand {
    pub fraction: f64,
    pub floor_ms: f64,
}

impl Default for CoverageBand {
    fn default() -> Self {
        CoverageBand { fraction: 0.25, floor_ms: 0.5 }
    }
}

/// `rtt <= f + max(fraction * f, floor)`.
pub fn is_covered(f_latency_ms: f64, rtt_ms: f64, band: CoverageBand) -> bool {
    rtt_ms <= f_latency_ms + (band.fraction * f_latency_ms).max(band.floor_ms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConduitRtt {
    pub conduit: String,
    pub min_rtt_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub conduit: String,
    pub length_km: f64,
    pub f_latency_ms: f64,
    pub min_rtt_ms: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub band: CoverageBand,
    pub rows: Vec<CoverageRow>,
    pub covered: usize,
    /// All conduits in the graph, measured or not.
    pub total: usize,
    pub fraction: f64,
}

/// Classifies each measured conduit by whether its minimum RTT falls within
/// the band above f-latency. Several measurements of one conduit keep the minimum.
pub fn coverage_classification(graph: &FiberGraph, measured: &[ConduitRtt], band: CoverageBand, speed_km_s: f64) -> Result<CoverageReport> {
    if !(band.fraction >= 0.0) || !(band.floor_ms >= 0.0) {
        return Err(Error::invalid("coverage band fraction and floor must be >= 0"));
    }
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for m in measured {
        let e = best.entry(m.conduit.as_str()).or_insert(f64::INFINITY);
        *e = e.min(m.min_rtt_ms);
    }
    let mut rows = Vec::new();
    for (id, rtt) in best {
        let idx = graph.conduit_index(id).ok_or_else(|| Error::invalid(format!("unknown conduit {id}")))?;
        let Some(len) = graph.conduits()[idx].length_km else { continue };
        let f = f_latency_rtt(len, speed_km_s)?;
        rows.push(CoverageRow { conduit: id.to_string(), length_km: len, f_latency_ms: f, min_rtt_ms: rtt, covered: is_covered(f, rtt, band) });
    }
    let covered = rows.iter().filter(|r| r.covered).count();
    let total = graph.conduit_count();
    Ok(CoverageReport { band, rows, covered, total, fraction: if total == 0 { 0.0 } else { covered as f64 / total as f64 } })
}

pub fn write_coverage<W: Write>(report: &CoverageReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["conduit", "length_km", "f_latency_ms", "min_rtt_ms", "covered"])?;
    for r in &report.rows {
        w.write_record([
            r.conduit.clone(),
            format!("{:.2}", r.length_km),
            format!("{:.3}", r.f_latency_ms),
            format!("{:.3}", r.min_rtt_ms),
            r.covered.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    #[serde(default)]
    pub ip: Option<String>,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub lon: Option<f64>,
    #[serde(default)]
    pub rtt_ms: Option<f64>,
}

impl Hop {
    pub fn location(&self) -> Option<GeoPoint> {
        match (self.lat, self.lon) {
            (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracerouteRecord {
    pub src: String,
    pub dst: String,
    pub rtt_ms: f64,
    pub hops: Vec<Hop>,
}

/// One JSON record per line; blank lines are skipped.
pub fn load_traceroutes<R: Read>(reader: R) -> Result<Vec<TracerouteRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TracerouteRecord = serde_json::from_str(&line).map_err(|e| Error::load("traceroutes", i + 1, e.to_string()))?;
        for h in &rec.hops {
            if let Some(p) = h.location() {
                p.validate().map_err(|e| Error::load("traceroutes", i + 1, e.to_string()))?;
            }
        }
        out.push(rec);
    }
    Ok(out)
}

fn km(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_km(a, b, EARTH_RADIUS_KM)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub endpoint_radius_km: f64,
    pub length_tolerance: f64,
    /// Drop hops whose RTT is below the one-way f-latency of their distance
    /// from the first geolocated hop.
    pub filter_geolocation_errors: bool,
    pub speed_km_s: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams { endpoint_radius_km: 15.0, length_tolerance: 0.30, filter_geolocation_errors: true, speed_km_s: FIBER_SPEED_KM_S }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchReason {
    Matched,
    InsufficientGeolocation,
    EndpointRadius,
    LengthMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConduitMatchVerdict {
    pub matched: bool,
    /// Indices into the trace's hop list.
    pub r1: Option<usize>,
    pub r2: Option<usize>,
    pub gap_km: Option<f64>,
    pub reason: MatchReason,
    pub dropped_hops: usize,
}

/// Finds the consecutive pair of geolocated hops with the largest geodesic gap
/// and checks it against the conduit `a`–`b`.
pub fn max_gap_match(tr: &TracerouteRecord, a: GeoPoint, b: GeoPoint, conduit_km: f64, params: &MatchParams) -> Result<ConduitMatchVerdict> {
    if !(conduit_km > 0.0) {
        return Err(Error::invalid("conduit length must be positive"));
    }
    a.validate()?;
    b.validate()?;
    let located: Vec<(usize, GeoPoint, Option<f64>)> =
        tr.hops.iter().enumerate().filter_map(|(i, h)| h.location().map(|p| (i, p, h.rtt_ms))).collect();
    let mut dropped = 0;
    let kept: Vec<(usize, GeoPoint)> = match located.first() {
        Some(&(_, origin, _)) if params.filter_geolocation_errors => {
            let mut kept = Vec::new();
            for &(i, p, rtt) in &located {
                let bound = f_latency_one_way(km(origin, p), params.speed_km_s)?;
                if rtt.is_some_and(|r| r < bound) {
                    dropped += 1;
                } else {
                    kept.push((i, p));
                }
            }
            kept
        }
        _ => located.iter().map(|&(i, p, _)| (i, p)).collect(),
    };
    let mut verdict = ConduitMatchVerdict { matched: false, r1: None, r2: None, gap_km: None, reason: MatchReason::InsufficientGeolocation, dropped_hops: dropped };
    if kept.len() < 2 {
        return Ok(verdict);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..kept.len() - 1 {
        let gap = km(kept[k].1, kept[k + 1].1);
        if gap > best.1 {
            best = (k, gap);
        }
    }
    let (r1, p1) = kept[best.0];
    let (r2, p2) = kept[best.0 + 1];
    verdict.r1 = Some(r1);
    verdict.r2 = Some(r2);
    verdict.gap_km = Some(best.1);
    let near = |x: GeoPoint, y: GeoPoint| km(x, y) <= params.endpoint_radius_km;
    if !((near(p1, a) && near(p2, b)) || (near(p1, b) && near(p2, a))) {
        verdict.reason = MatchReason::EndpointRadius;
    } else if (best.1 - conduit_km).abs() > params.length_tolerance * conduit_km {
        verdict.reason = MatchReason::LengthMismatch;
    } else {
        verdict.matched = true;
        verdict.reason = MatchReason::Matched;
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(alias = "forward", alias = "fwd")]
    Forward,
    #[serde(alias = "reverse", alias = "rev")]
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneWayRecord {
    pub src: String,
    pub dst: String,
    pub direction: Direction,
    pub minute: i64,
    pub min_one_way_ms: f64,
}

/// Reads `src,dst,direction,minute,min_one_way_ms` rows. Values may be
/// negative (clock skew) but must be finite.
pub fn load_one_way_records<R: Read>(reader: R) -> Result<Vec<OneWayRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<OneWayRecord>().enumerate() {
        let r = row.map_err(|e| Error::load("owamp", i + 1, e.to_string()))?;
        if !r.min_one_way_ms.is_finite() {
            return Err(Error::load("owamp", i + 1, "min_one_way_ms must be finite"));
        }
        out.push(r);
    }
    Ok(out)
}

/// Splits records into per-pair forward and reverse streams keyed by `(src, dst)`.
pub fn group_one_way(records: &[OneWayRecord]) -> BTreeMap<(String, String), (Vec<OneWayRecord>, Vec<OneWayRecord>)> {
    let mut out: BTreeMap<_, (Vec<_>, Vec<_>)> = BTreeMap::new();
    for r in records {
        let e = out.entry((r.src.clone(), r.dst.clone())).or_default();
        match r.direction {
            Direction::Forward => e.0.push(r.clone()),
            Direction::Reverse => e.1.push(r.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelaySeries {
    /// (minute, skew-cancelled one-way delay ms), by minute.
    pub points: Vec<(i64, f64)>,
    pub skipped_minutes: usize,
}

/// Per minute, the mean of the two directions' minimum one-way delays. A
/// constant clock offset adds to one direction and subtracts from the other,
/// so it cancels. Minutes seen in only one direction are skipped.
pub fn owamp_pair_delay(forward: &[OneWayRecord], reverse: &[OneWayRecord]) -> DelaySeries {
    let fold = |recs: &[OneWayRecord]| {
        let mut m: BTreeMap<i64, f64> = BTreeMap::new();
        for r in recs {
            let e = m.entry(r.minute).or_insert(f64::INFINITY);
            *e = e.min(r.min_one_way_ms);
        }
        m
    };
    let fwd = fold(forward);
    let rev = fold(reverse);
    let mut points = Vec::new();
    let mut skipped = 0;
    for (&minute, &f) in &fwd {
        match rev.get(&minute) {
            Some(&r) => points.push((minute, (f + r) / 2.0)),
            None => skipped += 1,
        }
    }
    skipped += rev.keys().filter(|m| !fwd.contains_key(m)).count();
    DelaySeries { points, skipped_minutes: skipped }
}

pub const MINUTES_PER_DAY: i64 = 1440;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailyInflation {
    pub day: i64,
    pub count: usize,
    /// Percent over one-way f-latency.
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub p95: f64,
}

/// Daily statistics of one-way delay inflation over the one-way f-latency of
/// a `path_km` path, in percent.
pub fn inflation_timeseries(series: &DelaySeries, path_km: f64, speed_km_s: f64) -> Result<Vec<DailyInflation>> {
    let f = f_latency_one_way(path_km, speed_km_s)?;
    if !(f > 0.0) {
        return Err(Error::invalid("path length must be positive"));
    }
    let mut days: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for &(minute, d) in &series.points {
        days.entry(minute.div_euclid(MINUTES_PER_DAY)).or_default().push(((d / f - 1.0) * 100.0, 1.0));
    }
    days.into_iter()
        .map(|(day, samples)| {
            let s = stats::summarize(&samples)?;
            Ok(DailyInflation { day, count: s.count, min: s.min, median: s.median, mean: s.mean, p95: s.p95 })
        })
        .collect()
}

pub fn write_timeseries<W: Write>(rows: &[DailyInflation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "count", "min_pct", "median_pct", "mean_pct", "p95_pct"])?;
    for r in rows {
        w.write_record([
            r.day.to_string(),
            r.count.to_string(),
            format!("{:.4}", r.min),
            format!("{:.4}", r.median),
            format!("{:.4}", r.mean),
            format!("{:.4}", r.p95),
        ])?;
    }
    w.flush()?;
    Ok(())
}
