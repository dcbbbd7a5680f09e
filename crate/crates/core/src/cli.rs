//! Command-line front end. Every subcommand reads CSV/JSON inputs and writes
//! plain tables into `--out`.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::expand_config;
use crate::cost::{self, CostModelParams, WavelengthSku};
use crate::design::{self, DesignNetwork, Terminal, DEFAULT_MERGE_RADIUS_KM, DEFAULT_TOP_N};
use crate::error::Error;
use crate::fiber_graph::{load_graph_files, FiberGraph, LoadOptions};
use crate::geo::{bounding_box, GeoPoint};
use crate::latency::FIBER_SPEED_KM_S;
use crate::measurements::{self as m, CoverageBand, InflationOptions, LabelResolver, MatchParams};
use crate::route_stitch::{self as rs, StitchConfig, StitchResult, StitchedLink, DEFAULT_DISCREPANCY_FRACTION};
use crate::stats;
use crate::stretch::{self, TrafficModel};

#[derive(Debug, Parser)]
#[command(name = "fibermap", version, about = "Fiber map latency toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conduit length over line-of-sight distributions and ISP connectivity.
    Stats(StatsArgs),
    /// Path stretch over line-of-sight for every endpoint pair.
    Stretch(StretchArgs),
    /// Union-of-shortest-paths network and its greedy prune trace.
    Design(DesignArgs),
    /// Lease cost of every state of the prune trace.
    Cost(CostArgs),
    /// Stitch segment polylines into routes and compare with conduit lengths.
    Stitch(StitchArgs),
    /// RTT inflation, speed-of-light violations, coverage, trace matching, OWAMP delays.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Table format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// `key = value` file with defaults for any flag of this subcommand.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Endpoint table: id,name,lat,lon,population.
    #[arg(long)]
    pub endpoints: PathBuf,
    /// Conduit table: id,endpoint_a,endpoint_b,length_km,isps.
    #[arg(long)]
    pub conduits: PathBuf,
    /// Reject conduits shorter than their endpoints' line-of-sight distance.
    #[arg(long)]
    pub strict: bool,
    /// Fill unknown conduit lengths as FACTOR times line-of-sight.
    #[arg(long, value_name = "FACTOR", num_args = 0..=1, default_missing_value = "1.2")]
    pub impute: Option<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct StretchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Pair weighting: uniform or gravity (population product).
    #[arg(long, default_value = "uniform")]
    pub model: TrafficModel,
    /// Only endpoints with at least this population.
    #[arg(long)]
    pub min_pop: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TerminalArgs {
    /// Comma-separated endpoint ids to connect.
    #[arg(long, conflicts_with = "cities")]
    pub terminals: Option<String>,
    /// City table (name,lat,lon,population) to coalesce into population centers.
    #[arg(long)]
    pub cities: Option<PathBuf>,
    /// Number of population centers kept.
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub top_n: usize,
    /// Cities within this distance of a larger center join it.
    #[arg(long, default_value_t = DEFAULT_MERGE_RADIUS_KM)]
    pub merge_radius_km: f64,
    #[arg(long, default_value = "uniform")]
    pub model: TrafficModel,
    /// Stop pruning at this many links (default: one fewer than the terminal count).
    #[arg(long)]
    pub target_links: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DesignArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub design: TerminalArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CostArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub design: TerminalArgs,
    /// Aggregate offered load in Gbps, split over terminal pairs.
    #[arg(long, default_value_t = 1000.0)]
    pub aggregate_gbps: f64,
    #[arg(long, default_value_t = 60)]
    pub lease_months: u32,
    #[arg(long, default_value_t = 10_000.0)]
    pub equipment_usd: f64,
    /// Colocation per site per month.
    #[arg(long, default_value_t = 2_000.0)]
    pub colo_usd: f64,
    /// Dollars per Gbps per km per month.
    #[arg(long, default_value_t = cost::DEFAULT_UNIT_PRICE)]
    pub unit_price: f64,
    /// Comma-separated wavelength capacities in Gbps.
    #[arg(long, default_value = "1,10,40,100")]
    pub skus: String,
    #[arg(long, default_value_t = 0.20)]
    pub util_lo: f64,
    #[arg(long, default_value_t = 0.90)]
    pub util_hi: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct StitchArgs {
    /// GeoJSON FeatureCollection of segment LineStrings.
    #[arg(long)]
    pub segments: PathBuf,
    /// City pairs: a,a_lat,a_lon,b,b_lat,b_lon.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Conduit lengths to compare against: a,b,length_km.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Routes per pair.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 50.0)]
    pub snap_m: f64,
    /// Comma-separated thresholds tried when a pair is disconnected.
    #[arg(long, default_value = "100,250,500")]
    pub escalate_m: String,
    #[arg(long, default_value_t = 100.0)]
    pub bbox_margin_km: f64,
    /// Split segments where they pass within the snap threshold of another segment's end.
    #[arg(long)]
    pub promote_near_passes: bool,
    /// Relative difference flagged as a large discrepancy.
    #[arg(long, default_value_t = DEFAULT_DISCREPANCY_FRACTION)]
    pub discrepancy: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// RTT table: src,dst,provider,rtt_ms,timestamp.
    #[arg(long)]
    pub rtt: Option<PathBuf>,
    /// Label aliases: alias,endpoint.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Route RTT pairs only over this ISP's conduits.
    #[arg(long)]
    pub isp: Option<String>,
    /// Keep only pairs whose shortest path is one conduit.
    #[arg(long)]
    pub direct_only: bool,
    /// Keep providers apart when taking minimum RTTs.
    #[arg(long)]
    pub by_provider: bool,
    /// Per-conduit minimum RTTs: conduit,min_rtt_ms.
    #[arg(long)]
    pub conduit_rtt: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    pub band_fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    pub band_floor_ms: f64,
    /// Traceroutes, one JSON record per line.
    #[arg(long)]
    pub traceroutes: Option<PathBuf>,
    #[arg(long, default_value_t = 15.0)]
    pub endpoint_radius_km: f64,
    #[arg(long, default_value_t = 0.30)]
    pub length_tolerance: f64,
    /// Keep hops whose RTT is below the f-latency of their distance.
    #[arg(long)]
    pub no_geo_filter: bool,
    /// One-way delays: src,dst,direction,minute,min_one_way_ms.
    #[arg(long)]
    pub owamp: Option<PathBuf>,
    /// Propagation speed in km/s.
    #[arg(long, default_value_t = FIBER_SPEED_KM_S)]
    pub speed_km_s: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

type CliResult<T> = std::result::Result<T, String>;

fn at(path: &Path) -> impl Fn(Error) -> String + '_ {
    move |e| match e {
        Error::File { .. } => e.to_string(),
        other => format!("{}: {other}", path.display()),
    }
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| format!("{}: {e}", path.display()))
}

struct Out<'a> {
    args: &'a OutputArgs,
}

impl Out<'_> {
    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        let p = self.args.out.join(name);
        File::create(&p).map(BufWriter::new).map_err(|e| format!("{}: {e}", p.display()))
    }

    fn json<T: Serialize + ?Sized>(&self, stem: &str, value: &T) -> CliResult<()> {
        let mut w = self.create(&format!("{stem}.json"))?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| e.to_string())?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| e.to_string())
    }

    /// Writes `stem.csv` with `csv_fn`, or `stem.json` from `value` in JSON mode.
    fn table<T: Serialize + ?Sized>(&self, stem: &str, value: &T, csv_fn: impl FnOnce(&mut BufWriter<File>) -> crate::Result<()>) -> CliResult<()> {
        match self.args.format {
            Format::Json => self.json(stem, value),
            Format::Csv => {
                let mut w = self.create(&format!("{stem}.csv"))?;
                csv_fn(&mut w).map_err(|e| e.to_string())?;
                w.flush().map_err(|e| e.to_string())
            }
        }
    }

    fn rows<R: Serialize>(&self, stem: &str, header: &[&str], rows: &[R], cells: impl Fn(&R) -> Vec<String>) -> CliResult<()> {
        self.table(stem, rows, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header)?;
            for r in rows {
                c.write_record(cells(r))?;
            }
            c.flush()?;
            Ok(())
        })
    }
}

fn prepare_out(args: &OutputArgs) -> CliResult<Out<'_>> {
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    Ok(Out { args })
}

fn load_graph(args: &GraphArgs) -> CliResult<(FiberGraph, crate::fiber_graph::ValidationReport)> {
    let (g, report) = load_graph_files(&args.endpoints, &args.conduits, LoadOptions { strict: args.strict }).map_err(|e| match e {
        Error::Load { ref table, .. } => {
            let p = if table == "endpoints" { &args.endpoints } else { &args.conduits };
            format!("{}: {e}", p.display())
        }
        Error::File { .. } => e.to_string(),
        other => format!("{} / {}: {other}", args.endpoints.display(), args.conduits.display()),
    })?;
    let g = match args.impute {
        Some(f) => g.impute_missing_lengths(f).map_err(|e| e.to_string())?,
        None => g,
    };
    Ok((g, report))
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad {what} value {t:?}")))
        .collect()
}

fn cmd_stats(a: &StatsArgs) -> CliResult<()> {
    let (g, report) = load_graph(&a.graph)?;
    let out = prepare_out(&a.output)?;
    let s = g.length_to_los_stats().map_err(|e| e.to_string())?;
    out.rows("length_los", &["conduit", "length_km", "los_km", "ratio"], &s.ratios, |r| {
        vec![r.conduit.clone(), f3(r.length_km), f3(r.los_km), f6(r.ratio)]
    })?;
    let cdf = stats::cdf_table(&s.ratios.iter().map(|r| (r.ratio, 1.0)).collect::<Vec<_>>());
    out.rows("length_los_cdf", &["ratio", "cumulative_fraction"], &cdf, |&(v, f)| vec![f6(v), f6(f)])?;
    let isps: Vec<(String, usize)> = g.isp_connectivity_report().into_iter().collect();
    out.rows("isp_connectivity", &["isp", "conduits"], &isps, |(i, n)| vec![i.clone(), n.to_string()])?;
    out.json(
        "stats_summary",
        &json!({
            "endpoints": g.node_count(),
            "conduits": g.conduit_count(),
            "length_los": s.summary,
            "slope": s.slope,
            "validation": report,
        }),
    )
}

fn cmd_stretch(a: &StretchArgs) -> CliResult<()> {
    let (g, _) = load_graph(&a.graph)?;
    let out = prepare_out(&a.output)?;
    let r = stretch::stretch_report(&g, a.model, a.min_pop).map_err(|e| e.to_string())?;
    out.table("stretch_rows", &r.rows, |w| stretch::write_rows(&r, w))?;
    out.table("stretch_cdf", &r.cdf(), |w| stretch::write_cdf(&r, w))?;
    let hops = if r.rows.is_empty() { Vec::new() } else { stretch::stretch_by_hops(&r).map_err(|e| e.to_string())? };
    out.rows("stretch_by_hops", &["hops", "pairs", "min", "median", "max"], &hops, |h| {
        vec![h.hops.to_string(), h.pairs.to_string(), f6(h.min), f6(h.median), f6(h.max)]
    })?;
    let hop_pct = stretch::hop_percentiles(&r).ok();
    out.json(
        "stretch_summary",
        &json!({
            "model": r.model,
            "min_population": r.min_population,
            "pairs": r.rows.len(),
            "summary": r.summary,
            "hops_median": hop_pct.map(|h| h.0),
            "hops_p95": hop_pct.map(|h| h.1),
            "unreachable": r.unreachable,
            "colocated": r.colocated,
        }),
    )
}

fn run_design(g: &FiberGraph, d: &TerminalArgs, out: &Out) -> CliResult<DesignNetwork> {
    let terminals: Vec<Terminal> = match (&d.terminals, &d.cities) {
        (Some(list), None) => {
            let ids: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            Terminal::from_endpoints(g, &ids).map_err(|e| e.to_string())?
        }
        (None, Some(path)) => {
            let cities = design::load_cities(open(path)?).map_err(at(path))?;
            let centers = design::coalesce_population_centers(&cities, d.top_n, d.merge_radius_km).map_err(|e| e.to_string())?;
            let mapping = design::map_centers_to_endpoints(&centers, g).map_err(|e| e.to_string())?;
            out.rows(
                "centers",
                &["id", "name", "lat", "lon", "population", "members", "endpoint", "snap_km"],
                &mapping.centers,
                |c| {
                    vec![
                        c.id.clone(),
                        c.name.clone(),
                        f6(c.location.lat),
                        f6(c.location.lon),
                        c.population.to_string(),
                        c.members.join(";"),
                        c.nearest_endpoint.clone().unwrap_or_default(),
                        c.snap_distance_km.map(f3).unwrap_or_default(),
                    ]
                },
            )?;
            mapping.terminals
        }
        _ => return Err("give exactly one of --terminals or --cities".into()),
    };
    let net = design::union_shortest_path_network(g, &terminals, d.model).map_err(|e| e.to_string())?;
    let initial = net.active.clone();
    let floor = net.terminals.len().saturating_sub(1);
    let net = design::prune_to(net, g, d.target_links.unwrap_or(floor)).map_err(|e| e.to_string())?;
    out.table("design_trace", &net.trace, |w| design::write_trace(&net, w))?;
    let geo = |active: &BTreeSet<String>, name: &str| -> CliResult<()> {
        let v = design::network_geojson(g, active, None).map_err(|e| e.to_string())?;
        let mut w = out.create(name)?;
        serde_json::to_writer(&mut w, &v).map_err(|e| e.to_string())?;
        w.flush().map_err(|e| e.to_string())
    };
    geo(&initial, "network_initial.geojson")?;
    geo(&net.active, "network_final.geojson")?;
    Ok(net)
}

fn cmd_design(a: &DesignArgs) -> CliResult<()> {
    let (g, _) = load_graph(&a.graph)?;
    let out = prepare_out(&a.output)?;
    let net = run_design(&g, &a.design, &out)?;
    out.json(
        "design_summary",
        &json!({
            "terminals": net.terminals,
            "model": net.model,
            "initial_links": net.initial_conduits.len(),
            "final_links": net.link_count(),
            "prune_steps": net.trace.len() - 1,
            "final_conduits": net.active,
        }),
    )
}

fn cmd_cost(a: &CostArgs) -> CliResult<()> {
    let (g, _) = load_graph(&a.graph)?;
    let out = prepare_out(&a.output)?;
    let params = CostModelParams {
        aggregate_input_gbps: a.aggregate_gbps,
        lease_months: a.lease_months,
        equipment_per_site_usd: a.equipment_usd,
        colo_per_site_per_month_usd: a.colo_usd,
        skus: parse_list(&a.skus, "SKU")?.into_iter().map(|c| WavelengthSku { capacity_gbps: c, unit_price: a.unit_price }).collect(),
        utilization_lo: a.util_lo,
        utilization_hi: a.util_hi,
    };
    params.validate().map_err(|e| e.to_string())?;
    let net = run_design(&g, &a.design, &out)?;
    let curve = cost::cost_curve(&g, &net, &params).map_err(|e| e.to_string())?;
    out.table("cost_curve", &curve, |w| cost::write_cost_curve(&curve, w))?;
    let routing = cost::route_traffic(&net, &g, params.aggregate_input_gbps).map_err(|e| e.to_string())?;
    let provisions = cost::provision_all(&routing, &params).map_err(|e| e.to_string())?;
    out.rows(
        "provisions",
        &["conduit", "demand_gbps", "sku_gbps", "wavelengths", "utilization", "floor_case"],
        &provisions,
        |p| {
            vec![
                p.conduit.clone(),
                f6(p.demand_gbps),
                p.sku.capacity_gbps.to_string(),
                p.wavelength_count.to_string(),
                f6(p.utilization),
                p.floor.map(|f| serde_json::to_value(f).unwrap().as_str().unwrap_or_default().to_string()).unwrap_or_default(),
            ]
        },
    )?;
    let final_cost = cost::network_cost(&g, &net.terminals, &net.active, &provisions, &params).map_err(|e| e.to_string())?;
    out.json("cost_summary", &json!({ "params": params, "final_links": net.link_count(), "final": final_cost }))
}

#[derive(Debug, serde::Deserialize)]
struct PairRow {
    a: String,
    a_lat: f64,
    a_lon: f64,
    b: String,
    b_lat: f64,
    b_lon: f64,
}

#[derive(Debug, Serialize)]
struct RouteRow {
    a: String,
    b: String,
    rank: usize,
    length_km: f64,
    segments: String,
    threshold_m: f64,
    src_anchor_km: f64,
    dst_anchor_km: f64,
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path, table: &str) -> CliResult<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format!("{}: {}", path.display(), Error::load(table, i + 1, e.to_string()))))
        .collect()
}

fn cmd_stitch(a: &StitchArgs) -> CliResult<()> {
    let segments = rs::load_segments(open(&a.segments)?).map_err(at(&a.segments))?;
    let pairs: Vec<PairRow> = read_csv(&a.pairs, "pairs")?;
    let cfg = StitchConfig {
        snap_threshold_m: a.snap_m,
        escalation_thresholds_m: parse_list(&a.escalate_m, "threshold")?,
        bbox_margin_km: a.bbox_margin_km,
        promote_near_passes: a.promote_near_passes,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let out = prepare_out(&a.output)?;
    let mut routes = Vec::new();
    let mut links = Vec::new();
    let mut unreachable = Vec::new();
    for p in &pairs {
        let (src, dst) = (GeoPoint { lat: p.a_lat, lon: p.a_lon }, GeoPoint { lat: p.b_lat, lon: p.b_lon });
        let bbox = bounding_box(src, dst, cfg.bbox_margin_km).map_err(|e| format!("{}-{}: {e}", p.a, p.b))?;
        let kept = rs::filter_segments(&segments, &bbox);
        if kept.is_empty() {
            unreachable.push(json!({ "a": p.a, "b": p.b, "reason": "no segments inside the bounding box" }));
            continue;
        }
        let graph = rs::build_segment_graph(&kept, &cfg).map_err(|e| e.to_string())?;
        match rs::stitch_route(&graph, src, dst, a.k, &cfg).map_err(|e| e.to_string())? {
            StitchResult::Routed(r) => {
                for (i, path) in r.paths.iter().enumerate() {
                    routes.push(RouteRow {
                        a: p.a.clone(),
                        b: p.b.clone(),
                        rank: i + 1,
                        length_km: path.total_length_km,
                        segments: path.conduits.join(";"),
                        threshold_m: r.threshold_m,
                        src_anchor_km: r.src_anchor_km,
                        dst_anchor_km: r.dst_anchor_km,
                    });
                }
                links.push(StitchedLink { a: p.a.clone(), b: p.b.clone(), lengths_km: r.paths.iter().map(|p| p.total_length_km).collect() });
            }
            StitchResult::Unreachable(d) => unreachable.push(json!({ "a": p.a, "b": p.b, "diagnostics": d })),
        }
    }
    out.rows(
        "stitched_routes",
        &["a", "b", "rank", "length_km", "segments", "threshold_m", "src_anchor_km", "dst_anchor_km"],
        &routes,
        |r| {
            vec![
                r.a.clone(),
                r.b.clone(),
                r.rank.to_string(),
                f3(r.length_km),
                r.segments.clone(),
                r.threshold_m.to_string(),
                f3(r.src_anchor_km),
                f3(r.dst_anchor_km),
            ]
        },
    )?;
    let mut summary = json!({ "pairs": pairs.len(), "routed": links.len(), "unreachable": unreachable });
    if let Some(path) = &a.dataset {
        let dataset: Vec<rs::DatasetLink> = read_csv(path, "dataset")?;
        let cmp = rs::compare_with_dataset(&links, &dataset, a.discrepancy).map_err(|e| e.to_string())?;
        out.table("comparison", &cmp.rows, |w| rs::write_comparison(&cmp, w))?;
        summary["comparison"] = json!({
            "median_shortest_ratio": cmp.median_shortest_ratio,
            "median_mean_ratio": cmp.median_mean_ratio,
            "median_longest_ratio": cmp.median_longest_ratio,
            "unmatched": cmp.unmatched,
        });
    }
    out.json("stitch_summary", &summary)
}

#[derive(Debug, Serialize)]
struct MatchRow {
    src: String,
    dst: String,
    conduit: String,
    conduit_km: f64,
    verdict: m::ConduitMatchVerdict,
}

fn cmd_analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let (g, _) = load_graph(&a.graph)?;
    let aliases = match &a.aliases {
        Some(p) => m::load_aliases(open(p)?).map_err(at(p))?,
        None => BTreeMap::new(),
    };
    let resolver = LabelResolver::new(&g, aliases);
    let out = prepare_out(&a.output)?;
    let mut summary = serde_json::Map::new();

    if let Some(path) = &a.rtt {
        let recs = m::load_rtt_records(open(path)?).map_err(at(path))?;
        let pairs = m::min_rtt(&recs, a.by_provider);
        let opts = InflationOptions { isp: a.isp.clone(), direct_only: a.direct_only, speed_km_s: a.speed_km_s };
        let table = m::inflation_table(&pairs, &g, &resolver, &opts).map_err(|e| e.to_string())?;
        let violations = m::detect_sol_violations(&table, a.speed_km_s);
        out.table("inflation", &table.rows, |w| m::write_inflation(&table, w))?;
        out.table("violations", &violations, |w| m::write_violations(&violations, w))?;
        summary.insert(
            "rtt".into(),
            json!({
                "pairs": pairs.len(),
                "rows": table.rows.len(),
                "violations": violations.len(),
                "inflation": table.inflation,
                "los_inflation": table.los_inflation,
                "row_errors": table.errors,
                "unreachable": table.unreachable,
            }),
        );
    }

    if let Some(path) = &a.conduit_rtt {
        let measured: Vec<m::ConduitRtt> = read_csv(path, "conduit_rtt")?;
        let band = CoverageBand { fraction: a.band_fraction, floor_ms: a.band_floor_ms };
        let rep = m::coverage_classification(&g, &measured, band, a.speed_km_s).map_err(at(path))?;
        out.table("coverage", &rep.rows, |w| m::write_coverage(&rep, w))?;
        summary.insert("coverage".into(), json!({ "band": rep.band, "covered": rep.covered, "total": rep.total, "fraction": rep.fraction }));
    }

    if let Some(path) = &a.traceroutes {
        let traces = m::load_traceroutes(open(path)?).map_err(at(path))?;
        let params = MatchParams {
            endpoint_radius_km: a.endpoint_radius_km,
            length_tolerance: a.length_tolerance,
            filter_geolocation_errors: !a.no_geo_filter,
            speed_km_s: a.speed_km_s,
        };
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for t in &traces {
            let ends = resolver.resolve(&t.src).and_then(|s| Ok((s, resolver.resolve(&t.dst)?)));
            let Ok((s, d)) = ends else {
                skipped.push(json!({ "src": t.src, "dst": t.dst, "reason": "unresolved label" }));
                continue;
            };
            let direct = g
                .conduits()
                .iter()
                .filter(|c| (c.a == s && c.b == d) || (c.a == d && c.b == s))
                .filter_map(|c| c.length_km.map(|l| (c, l)))
                .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.id.cmp(&y.0.id)));
            let Some((c, len)) = direct else {
                skipped.push(json!({ "src": t.src, "dst": t.dst, "reason": "no direct conduit" }));
                continue;
            };
            let (pa, pb) = (g.endpoint(&c.a).unwrap().location, g.endpoint(&c.b).unwrap().location);
            let verdict = m::max_gap_match(t, pa, pb, len, &params).map_err(|e| e.to_string())?;
            rows.push(MatchRow { src: t.src.clone(), dst: t.dst.clone(), conduit: c.id.clone(), conduit_km: len, verdict });
        }
        let idx = |v: Option<usize>| v.map(|i| i.to_string()).unwrap_or_default();
        out.rows(
            "conduit_match",
            &["src", "dst", "conduit", "conduit_km", "matched", "reason", "r1", "r2", "gap_km", "dropped_hops"],
            &rows,
            |r| {
                vec![
                    r.src.clone(),
                    r.dst.clone(),
                    r.conduit.clone(),
                    f3(r.conduit_km),
                    r.verdict.matched.to_string(),
                    serde_json::to_value(r.verdict.reason).unwrap().as_str().unwrap_or_default().to_string(),
                    idx(r.verdict.r1),
                    idx(r.verdict.r2),
                    r.verdict.gap_km.map(f3).unwrap_or_default(),
                    r.verdict.dropped_hops.to_string(),
                ]
            },
        )?;
        let matched = rows.iter().filter(|r| r.verdict.matched).count();
        summary.insert("traceroutes".into(), json!({ "records": traces.len(), "evaluated": rows.len(), "matched": matched, "skipped": skipped }));
    }

    if let Some(path) = &a.owamp {
        let recs = m::load_one_way_records(open(path)?).map_err(at(path))?;
        let mut daily = Vec::new();
        let mut pairs = Vec::new();
        for ((src, dst), (fwd, rev)) in m::group_one_way(&recs) {
            let series = m::owamp_pair_delay(&fwd, &rev);
            let path_km = resolver
                .resolve(&src)
                .and_then(|s| Ok((s, resolver.resolve(&dst)?)))
                .and_then(|(s, d)| g.shortest_path(&s, &d, None))
                .map_err(|e| format!("{src}-{dst}: {e}"))?
                .into_path()
                .ok_or_else(|| format!("{src}-{dst}: not connected in the graph"))?
                .total_length_km;
            let days = if series.points.is_empty() {
                Vec::new()
            } else {
                m::inflation_timeseries(&series, path_km, a.speed_km_s).map_err(|e| e.to_string())?
            };
            pairs.push(json!({ "src": src, "dst": dst, "path_km": path_km, "minutes": series.points.len(), "skipped_minutes": series.skipped_minutes }));
            daily.extend(days.into_iter().map(|d| (src.clone(), dst.clone(), d)));
        }
        out.rows(
            "owamp_daily",
            &["src", "dst", "day", "count", "min_pct", "median_pct", "mean_pct", "p95_pct"],
            &daily,
            |(s, d, r)| {
                vec![
                    s.clone(),
                    d.clone(),
                    r.day.to_string(),
                    r.count.to_string(),
                    format!("{:.4}", r.min),
                    format!("{:.4}", r.median),
                    format!("{:.4}", r.mean),
                    format!("{:.4}", r.p95),
                ]
            },
        )?;
        summary.insert("owamp".into(), json!(pairs));
    }

    if summary.is_empty() {
        return Err("nothing to analyze: give at least one of --rtt, --conduit-rtt, --traceroutes, --owamp".into());
    }
    out.json("analyze_summary", &summary)
}

/// Runs the command line and returns the process exit code: 0 on success, 2
/// for usage errors, 1 for data errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Stretch(a) => cmd_stretch(a),
        Command::Design(a) => cmd_design(a),
        Command::Cost(a) => cmd_cost(a),
        Command::Stitch(a) => cmd_stitch(a),
        Command::Analyze(a) => cmd_analyze(a),
    };
    match result {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
