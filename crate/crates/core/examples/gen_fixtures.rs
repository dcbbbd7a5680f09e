//! Regenerates the synthetic fixtures under `fixtures/`.
//!
//! cargo run -p fibermap --example gen_fixtures

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use fibermap::fiber_graph::{write_conduits, write_endpoints, Conduit, Endpoint};
use fibermap::geo::{haversine_km, polyline_length, GeoPoint, EARTH_RADIUS_KM, KM_PER_DEGREE};
use fibermap::latency::{f_latency_one_way, FIBER_SPEED_KM_S};
use fibermap::route_stitch::{write_segments, Segment, SegmentKind};

fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint { lat, lon }
}

fn ep(id: &str, name: &str, p: GeoPoint, pop: Option<u64>) -> Endpoint {
    Endpoint { id: id.into(), name: name.into(), location: p, population: pop }
}

fn km(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_km(a, b, EARTH_RADIUS_KM)
}

fn graph_files(dir: &Path, stem: &str, endpoints: &[Endpoint], conduits: &[Conduit]) {
    write_endpoints(endpoints, File::create(dir.join(format!("{stem}_endpoints.csv"))).unwrap()).unwrap();
    write_conduits(conduits, File::create(dir.join(format!("{stem}_conduits.csv"))).unwrap()).unwrap();
}

fn write_text(dir: &Path, name: &str, text: &str) {
    File::create(dir.join(name)).unwrap().write_all(text.as_bytes()).unwrap();
}

fn square(dir: &Path) {
    let d = 0.9 / KM_PER_DEGREE;
    let eps = [("A", 0.0, 0.0), ("B", 0.0, d), ("C", d, d), ("D", d, 0.0)]
        .map(|(id, lat, lon)| ep(id, id, pt(lat, lon), Some(10)));
    let cs = [("ab", "A", "B"), ("bc", "B", "C"), ("cd", "C", "D"), ("da", "D", "A")].map(|(id, a, b)| Conduit::new(id, a, b, 1.0, &[]));
    graph_files(dir, "square", &eps, &cs);
}

fn triangle(dir: &Path) {
    let eps = [ep("A", "A", pt(3.0 / KM_PER_DEGREE, 0.0), Some(100)), ep("B", "B", pt(0.0, 0.0), Some(100)), ep("C", "C", pt(0.0, 4.0 / KM_PER_DEGREE), Some(100))];
    let cs = [Conduit::new("ab", "A", "B", 3.0, &["x"]), Conduit::new("ac", "A", "C", 10.0, &["x"]), Conduit::new("bc", "B", "C", 4.0, &["x"])];
    graph_files(dir, "triangle", &eps, &cs);
}

/// Chicago, Springfield, St. Louis, Indianapolis. The tagged ISP's only
/// Chicago-Indianapolis route detours through St. Louis.
fn midwest(dir: &Path) {
    let eps = [
        ep("chi", "Chicago", pt(41.8781, -87.6298), Some(2_700_000)),
        ep("spi", "Springfield", pt(39.7817, -89.6501), Some(114_000)),
        ep("stl", "St. Louis", pt(38.6270, -90.1994), Some(300_000)),
        ep("ind", "Indianapolis", pt(39.7684, -86.1581), Some(880_000)),
    ];
    let cs = [
        Conduit::new("c1", "chi", "spi", 338.65, &["att"]),
        Conduit::new("c2", "spi", "stl", 155.0, &["att"]),
        Conduit::new("c3", "stl", "ind", 434.21, &["att"]),
        Conduit::new("c4", "chi", "ind", 322.8, &["other"]),
    ];
    graph_files(dir, "midwest", &eps, &cs);
    write_text(
        dir,
        "midwest_rtt.csv",
        "src,dst,provider,rtt_ms,timestamp\n\
         Chicago,Indianapolis,att,5.3,2015-06-01T00:00\n\
         Indianapolis,Chicago,att,5.0,2015-06-01T01:00\n\
         Chicago,Springfield,att,4.1,\n\
         Springfield,STL,att,2.1,\n\
         STL,Indianapolis,att,5.5,\n\
         Chicago,Peoria,att,3.0,\n",
    );
    write_text(dir, "midwest_aliases.csv", "alias,endpoint\nSTL,St. Louis\n");
    write_text(dir, "midwest_conduit_rtt.csv", "conduit,min_rtt_ms\nc2,1.6\nc3,9.0\nc1,3.9\n");
    write_text(
        dir,
        "midwest_cities.csv",
        "name,lat,lon,population\n\
         Chicago,41.8781,-87.6298,2700000\n\
         Evanston,42.0451,-87.6877,74000\n\
         Indianapolis,39.7684,-86.1581,880000\n\
         St. Louis,38.6270,-90.1994,300000\n\
         Springfield,39.7817,-89.6501,114000\n",
    );

    // Skew-laden one-way minima for Chicago -> Indianapolis over two days.
    let f = f_latency_one_way(322.8, FIBER_SPEED_KM_S).unwrap();
    let skew = 40.0;
    let mut text = String::from("src,dst,direction,minute,min_one_way_ms\n");
    for k in 0..96i64 {
        let minute = k * 30;
        let infl = 0.02 + 0.01 * ((k as f64) * 0.7).sin();
        let d = f * (1.0 + infl);
        text += &format!("Chicago,Indianapolis,forward,{minute},{:.6}\n", d + skew);
        if k % 17 != 5 {
            text += &format!("Chicago,Indianapolis,reverse,{minute},{:.6}\n", d - skew);
        }
    }
    write_text(dir, "midwest_owamp.csv", &text);
}

fn offset(p: GeoPoint, north_m: f64, east_m: f64) -> GeoPoint {
    let dlat = north_m / 1000.0 / KM_PER_DEGREE;
    let dlon = east_m / 1000.0 / (KM_PER_DEGREE * p.lat.to_radians().cos());
    pt(p.lat + dlat, p.lon + dlon)
}

/// Deterministic jitter of 8-14 m at a golden-angle bearing.
fn jitter(p: GeoPoint, k: usize) -> GeoPoint {
    let ang = (k as f64) * 2.399_963;
    let r = 8.0 + (k % 7) as f64;
    offset(p, r * ang.sin(), r * ang.cos())
}

const RENO: GeoPoint = GeoPoint { lat: 39.5296, lon: -119.8138 };
const SLC: GeoPoint = GeoPoint { lat: 40.7608, lon: -111.8910 };

fn route_points(c: f64, amp: f64, waves: f64) -> Vec<GeoPoint> {
    let n = 480;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let env = (std::f64::consts::PI * t).sin();
            pt(
                RENO.lat + (SLC.lat - RENO.lat) * t + env * (c + amp * (2.0 * std::f64::consts::PI * waves * t).sin()),
                RENO.lon + (SLC.lon - RENO.lon) * t,
            )
        })
        .collect()
}

/// Cuts a route into `parts` segments whose shared ends are jittered apart.
fn split_route(name: &str, pts: &[GeoPoint], parts: usize, seed: usize) -> Vec<Segment> {
    let n = pts.len() - 1;
    let cuts: Vec<usize> = (0..=parts).map(|k| k * n / parts).collect();
    let mut segs = Vec::new();
    for k in 0..parts {
        let mut line = pts[cuts[k]..=cuts[k + 1]].to_vec();
        let last = line.len() - 1;
        line[0] = jitter(line[0], seed + 2 * k);
        line[last] = jitter(line[last], seed + 2 * k + 1);
        segs.push(Segment::new(format!("{name}-{:02}", k + 1), line, SegmentKind::Longhaul).unwrap());
    }
    segs
}

fn route_length(segs: &[Segment]) -> f64 {
    segs.iter().map(|s| s.length_km).sum()
}

/// Solves the wiggle amplitude so the stitched route is `target` km long.
fn tuned_route(name: &str, c: f64, waves: f64, target: f64, seed: usize) -> Vec<Segment> {
    let (mut lo, mut hi) = (0.0, 0.6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if route_length(&split_route(name, &route_points(c, mid, waves), 6, seed)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let segs = split_route(name, &route_points(c, lo, waves), 6, seed);
    assert!((route_length(&segs) - target).abs() < 1e-6, "{name} did not converge");
    segs
}

fn reno_slc(dir: &Path) {
    let mut segs = Vec::new();
    segs.extend(tuned_route("north", 0.2, 5.0, 841.0, 0));
    segs.extend(tuned_route("south", -0.4, 6.0, 921.0, 20));
    segs.extend(tuned_route("ridge", 0.7, 8.0, 1019.0, 40));
    // metro spurs hanging off the Reno and Salt Lake City junctions
    let spur = |id: &str, from: GeoPoint, k: usize, north_km: f64, east_km: f64| {
        let a = jitter(from, k);
        let b = offset(from, north_km * 1000.0, east_km * 1000.0);
        Segment::new(id, vec![a, offset(from, north_km * 500.0, east_km * 600.0), b], SegmentKind::Metro).unwrap()
    };
    segs.push(spur("reno-metro-1", RENO, 90, 6.0, -4.0));
    segs.push(spur("reno-metro-2", RENO, 91, -5.0, -3.0));
    segs.push(spur("slc-metro-1", SLC, 92, 8.0, 3.0));
    // far outside the Reno-SLC box
    segs.push(Segment::new("denver-east", vec![pt(39.7392, -104.9903), pt(39.5, -102.0)], SegmentKind::Longhaul).unwrap());
    write_segments(&segs, File::create(dir.join("reno_slc_segments.geojson")).unwrap()).unwrap();
    write_text(
        dir,
        "reno_slc_pairs.csv",
        &format!("a,a_lat,a_lon,b,b_lat,b_lon\nReno,{},{},Salt Lake City,{},{}\n", RENO.lat, RENO.lon, SLC.lat, SLC.lon),
    );
    write_text(dir, "reno_slc_dataset.csv", "a,b,length_km\nSalt Lake City,Reno,813.7\n");
    let total: f64 = segs.iter().map(|s| polyline_length(&s.polyline).unwrap()).sum();
    eprintln!("reno_slc: {} segments, {total:.1} km", segs.len());
}

/// SLC, PHX, LA, San Jose with one direct SLC-PHX conduit and two traces.
fn west(dir: &Path) {
    let slc = pt(40.7608, -111.8910);
    let r1 = offset(slc, -400.0, 0.0);
    // place PHX so that the trace's widest hop spans 811.2 km
    let phx_at = |lat: f64| pt(lat, -112.0740);
    let (mut lo, mut hi) = (33.0, 34.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if km(r1, offset(phx_at(mid), 300.0, 0.0)) > 811.2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phx = phx_at(lo);
    let r2 = offset(phx, 300.0, 0.0);
    let lax = pt(34.0522, -118.2437);
    let sjc = pt(37.3382, -121.8863);
    let eps = [
        ep("slc", "Salt Lake City", slc, Some(200_000)),
        ep("phx", "Phoenix", phx, Some(1_600_000)),
        ep("lax", "Los Angeles", lax, Some(3_900_000)),
        ep("sjc", "San Jose", sjc, Some(1_000_000)),
    ];
    let by = |a: GeoPoint, b: GeoPoint| (km(a, b) * 1.2 * 100.0).round() / 100.0;
    let cs = [
        Conduit::new("slc-phx", "slc", "phx", 943.6, &["level3"]),
        Conduit::new("slc-sjc", "slc", "sjc", by(slc, sjc), &["level3"]),
        Conduit::new("sjc-lax", "sjc", "lax", by(sjc, lax), &["level3"]),
        Conduit::new("lax-phx", "lax", "phx", by(lax, phx), &["level3"]),
    ];
    graph_files(dir, "west", &eps, &cs);

    let hop = |p: Option<GeoPoint>, ip: &str, rtt: f64| {
        serde_json::json!({ "ip": ip, "lat": p.map(|p| p.lat), "lon": p.map(|p| p.lon), "rtt_ms": rtt })
    };
    let direct = serde_json::json!({
        "src": "Salt Lake City", "dst": "Phoenix", "rtt_ms": 15.1,
        "hops": [
            hop(Some(offset(slc, 150.0, 200.0)), "198.51.100.1", 0.3),
            hop(None, "198.51.100.9", 0.6),
            hop(Some(r1), "198.51.100.17", 0.8),
            hop(Some(r2), "203.0.113.5", 14.7),
            hop(Some(offset(phx, -200.0, 100.0)), "203.0.113.9", 15.0),
        ],
    });
    let detour = serde_json::json!({
        "src": "Salt Lake City", "dst": "Phoenix", "rtt_ms": 33.4,
        "hops": [
            hop(Some(offset(slc, 150.0, 200.0)), "198.51.100.1", 0.3),
            hop(Some(offset(sjc, 500.0, 0.0)), "192.0.2.33", 19.8),
            hop(Some(offset(lax, 0.0, 400.0)), "192.0.2.77", 26.1),
            hop(Some(offset(phx, -200.0, 100.0)), "203.0.113.9", 33.2),
        ],
    });
    write_text(dir, "west_traces.jsonl", &format!("{direct}\n{detour}\n"));
}

fn main() {
    let dir: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();
    square(&dir);
    triangle(&dir);
    midwest(&dir);
    reno_slc(&dir);
    west(&dir);
    eprintln!("fixtures written to {}", dir.display());
}
