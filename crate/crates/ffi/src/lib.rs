//! C ABI over the fibermap core.
//!
//! Every function returns an [`FmStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`fm_last_error_message`]. Graphs are opaque handles released with
//! [`fm_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fibermap::cost::{provision_link, CostModelParams, FloorCase};
use fibermap::fiber_graph::{load_graph, load_graph_files, LoadOptions};
use fibermap::geo::geodesic_distance;
use fibermap::latency::{f_latency_rtt, speed_from_index};
use fibermap::stretch::{stretch_report, TrafficModel};
use fibermap::{Error, FiberGraph, GeoPoint, Route};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Parse = 5,
    Disconnected = 6,
    EmptyStats = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmTrafficModel {
    Uniform = 0,
    Gravity = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmFloorCase {
    None = 0,
    BelowSmallestSku = 1,
    SkuGap = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FmSummary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmProvision {
    pub sku_gbps: f64,
    pub wavelength_count: u32,
    pub utilization: f64,
    pub floor: FmFloorCase,
}

/// Opaque graph handle.
pub struct FmGraph {
    inner: FiberGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

type Failure = (FmStatus, String);

fn status_of(e: &Error) -> FmStatus {
    match e {
        Error::InvalidInput(_) | Error::UndefinedStretch(..) => FmStatus::InvalidInput,
        Error::Load { .. } | Error::Csv(_) | Error::Json(_) => FmStatus::Parse,
        Error::File { .. } | Error::Io(_) => FmStatus::Io,
        Error::Disconnected(..) => FmStatus::Disconnected,
        Error::EmptyStats(_) => FmStatus::EmptyStats,
    }
}

fn core(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FmStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (FmStatus::Ok, String::new()),
        Ok(Err(failure)) => failure,
        Err(_) => (FmStatus::Panic, "internal panic".to_string()),
    };
    LAST_ERROR.with(|m| *m.borrow_mut() = msg);
    status
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| (FmStatus::NullPointer, format!("{name} is null")))
}

unsafe fn graph_ref<'a>(g: *const FmGraph) -> Result<&'a FiberGraph, Failure> {
    g.as_ref().map(|g| &g.inner).ok_or_else(|| (FmStatus::NullPointer, "graph is null".to_string()))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((FmStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (FmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            std::ptr::copy_nonoverlapping(m.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn fm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn store(out: &mut *mut FmGraph, g: FiberGraph) {
    *out = Box::into_raw(Box::new(FmGraph { inner: g }));
}

/// Loads a graph from endpoint and conduit CSV files.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_graph_load(endpoints_path: *const c_char, conduits_path: *const c_char, strict: bool, out: *mut *mut FmGraph) -> FmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let e = text(endpoints_path, "endpoints_path")?;
        let c = text(conduits_path, "conduits_path")?;
        let (g, _) = load_graph_files(Path::new(e), Path::new(c), LoadOptions { strict }).map_err(core)?;
        store(out, g);
        Ok(())
    })
}

/// Loads a graph from in-memory endpoint and conduit CSV text.
///
/// # Safety
/// Inputs must be NUL-terminated strings; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_graph_from_csv(endpoints_csv: *const c_char, conduits_csv: *const c_char, strict: bool, out: *mut *mut FmGraph) -> FmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let e = text(endpoints_csv, "endpoints_csv")?;
        let c = text(conduits_csv, "conduits_csv")?;
        let (g, _) = load_graph(e.as_bytes(), c.as_bytes(), LoadOptions { strict }).map_err(core)?;
        store(out, g);
        Ok(())
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must come from a load function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fm_graph_free(g: *mut FmGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle or null; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_graph_counts(g: *const FmGraph, endpoints: *mut usize, conduits: *mut usize) -> FmStatus {
    guard(|| {
        let g = graph_ref(g)?;
        *out_ref(endpoints, "endpoints")? = g.node_count();
        *out_ref(conduits, "conduits")? = g.conduit_count();
        Ok(())
    })
}

/// Shortest conduit path length between two endpoint ids. `isp` may be null
/// for no restriction. Returns `Disconnected` when no path exists.
///
/// # Safety
/// Strings must be NUL-terminated; `g`, `out_km` and `out_conduits` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_shortest_path_km(
    g: *const FmGraph,
    src: *const c_char,
    dst: *const c_char,
    isp: *const c_char,
    out_km: *mut f64,
    out_conduits: *mut usize,
) -> FmStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let (s, d) = (text(src, "src")?, text(dst, "dst")?);
        let filter = if isp.is_null() { None } else { Some([text(isp, "isp")?]) };
        let route = g.shortest_path(s, d, filter.as_ref().map(|f| &f[..])).map_err(core)?;
        match route {
            Route::Found(p) => {
                *out_ref(out_km, "out_km")? = p.total_length_km;
                *out_ref(out_conduits, "out_conduits")? = p.conduits.len();
                Ok(())
            }
            Route::Unreachable => Err((FmStatus::Disconnected, format!("endpoints {s} and {d} are not connected"))),
        }
    })
}

/// Stretch summary over all endpoint pairs. A negative `min_population`
/// disables the population filter.
///
/// # Safety
/// `g` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_stretch_summary(g: *const FmGraph, model: FmTrafficModel, min_population: i64, out: *mut FmSummary) -> FmStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_ref(out, "out")?;
        let model = match model {
            FmTrafficModel::Uniform => TrafficModel::Uniform,
            FmTrafficModel::Gravity => TrafficModel::Gravity,
        };
        let min_pop = u64::try_from(min_population).ok();
        let r = stretch_report(g, model, min_pop).map_err(core)?;
        let s = r.summary.ok_or_else(|| (FmStatus::EmptyStats, "no endpoint pairs to summarize".to_string()))?;
        *out = FmSummary { min: s.min, median: s.median, mean: s.mean, p95: s.p95, max: s.max, count: s.count };
        Ok(())
    })
}

/// Round-trip f-latency in ms of `length_km` of fiber at `speed_km_s`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_f_latency_rtt_ms(length_km: f64, speed_km_s: f64, out: *mut f64) -> FmStatus {
    guard(|| {
        *out_ref(out, "out")? = f_latency_rtt(length_km, speed_km_s).map_err(core)?;
        Ok(())
    })
}

/// Propagation speed in km/ms for refraction index `n`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_speed_from_index(n: f64, out: *mut f64) -> FmStatus {
    guard(|| {
        *out_ref(out, "out")? = speed_from_index(n).map_err(core)?;
        Ok(())
    })
}

/// Great-circle distance in km.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_geodesic_distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64, out: *mut f64) -> FmStatus {
    guard(|| {
        let d = geodesic_distance(GeoPoint { lat: lat1, lon: lon1 }, GeoPoint { lat: lat2, lon: lon2 }).map_err(core)?;
        *out_ref(out, "out")? = d;
        Ok(())
    })
}

/// Wavelength provisioning for `demand_gbps` with the default SKUs and band.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_provision_link(demand_gbps: f64, out: *mut FmProvision) -> FmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let p = provision_link(demand_gbps, &CostModelParams::default()).map_err(core)?;
        *out = FmProvision {
            sku_gbps: p.sku.capacity_gbps,
            wavelength_count: p.wavelength_count,
            utilization: p.utilization,
            floor: match p.floor {
                None => FmFloorCase::None,
                Some(FloorCase::BelowSmallestSku) => FmFloorCase::BelowSmallestSku,
                Some(FloorCase::SkuGap) => FmFloorCase::SkuGap,
            },
        };
        Ok(())
    })
}
