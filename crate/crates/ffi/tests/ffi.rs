use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use fibermap_ffi::*;

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { fm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(s.len(), n.min(255));
    s
}

fn load(stem: &str) -> *mut FmGraph {
    let mut g = ptr::null_mut();
    let st = unsafe {
        fm_graph_load(fixture(&format!("{stem}_endpoints.csv")).as_ptr(), fixture(&format!("{stem}_conduits.csv")).as_ptr(), false, &mut g)
    };
    assert_eq!(st, FmStatus::Ok, "{}", last_error());
    g
}

#[test]
fn graph_queries() {
    let g = load("midwest");
    let (mut n, mut c) = (0usize, 0usize);
    assert_eq!(unsafe { fm_graph_counts(g, &mut n, &mut c) }, FmStatus::Ok);
    assert_eq!((n, c), (4, 4));

    let (mut km, mut hops) = (0.0, 0usize);
    let chi = CString::new("chi").unwrap();
    let ind = CString::new("ind").unwrap();
    let att = CString::new("att").unwrap();
    assert_eq!(unsafe { fm_shortest_path_km(g, chi.as_ptr(), ind.as_ptr(), ptr::null(), &mut km, &mut hops) }, FmStatus::Ok);
    assert_eq!((km, hops), (322.8, 1));
    assert_eq!(unsafe { fm_shortest_path_km(g, chi.as_ptr(), ind.as_ptr(), att.as_ptr(), &mut km, &mut hops) }, FmStatus::Ok);
    assert!((km - 927.86).abs() < 1e-9);
    assert_eq!(hops, 3);

    let nobody = CString::new("nobody").unwrap();
    assert_eq!(unsafe { fm_shortest_path_km(g, chi.as_ptr(), ind.as_ptr(), nobody.as_ptr(), &mut km, &mut hops) }, FmStatus::Disconnected);
    assert!(last_error().contains("not connected"));
    let zz = CString::new("zz").unwrap();
    assert_eq!(unsafe { fm_shortest_path_km(g, chi.as_ptr(), zz.as_ptr(), ptr::null(), &mut km, &mut hops) }, FmStatus::InvalidInput);

    let mut s = FmSummary::default();
    assert_eq!(unsafe { fm_stretch_summary(g, FmTrafficModel::Uniform, -1, &mut s) }, FmStatus::Ok);
    assert_eq!(s.count, 6);
    assert!(s.min >= 1.0 && s.min <= s.median && s.median <= s.max);
    assert_eq!(unsafe { fm_stretch_summary(g, FmTrafficModel::Gravity, 10_000_000, &mut s) }, FmStatus::EmptyStats);
    unsafe { fm_graph_free(g) };
}

#[test]
fn arithmetic() {
    let mut v = 0.0;
    assert_eq!(unsafe { fm_f_latency_rtt_ms(1418.38, 204_000.0, &mut v) }, FmStatus::Ok);
    assert!((v - 13.91).abs() < 0.01);
    assert_eq!(unsafe { fm_speed_from_index(1.468, &mut v) }, FmStatus::Ok);
    assert!((v - 204.2).abs() < 0.05);
    assert_eq!(unsafe { fm_speed_from_index(0.9, &mut v) }, FmStatus::InvalidInput);
    assert_eq!(unsafe { fm_geodesic_distance_km(0.0, 0.0, 0.0, 1.0, &mut v) }, FmStatus::Ok);
    assert!((v - 111.195).abs() < 0.001);
    assert_eq!(unsafe { fm_geodesic_distance_km(91.0, 0.0, 0.0, 1.0, &mut v) }, FmStatus::InvalidInput);

    let mut p = FmProvision { sku_gbps: 0.0, wavelength_count: 0, utilization: 0.0, floor: FmFloorCase::None };
    assert_eq!(unsafe { fm_provision_link(95.0, &mut p) }, FmStatus::Ok);
    assert_eq!((p.sku_gbps, p.wavelength_count, p.utilization, p.floor), (100.0, 2, 0.475, FmFloorCase::None));
    assert_eq!(unsafe { fm_provision_link(0.01, &mut p) }, FmStatus::Ok);
    assert_eq!(p.floor, FmFloorCase::BelowSmallestSku);
}

#[test]
fn error_paths() {
    let mut g = ptr::null_mut();
    let missing = CString::new("/no/such/endpoints.csv").unwrap();
    let st = unsafe { fm_graph_load(missing.as_ptr(), missing.as_ptr(), false, &mut g) };
    assert_eq!(st, FmStatus::Io);
    assert!(g.is_null());
    assert!(last_error().contains("/no/such/endpoints.csv"));

    let eps = CString::new("id,name,lat,lon,population\na,A,0,0,\nb,B,0,1,\n").unwrap();
    let bad = CString::new("id,endpoint_a,endpoint_b,length_km,isps\nx,a,b,oops,\n").unwrap();
    assert_eq!(unsafe { fm_graph_from_csv(eps.as_ptr(), bad.as_ptr(), false, &mut g) }, FmStatus::Parse);
    let good = CString::new("id,endpoint_a,endpoint_b,length_km,isps\nx,a,b,120,\n").unwrap();
    assert_eq!(unsafe { fm_graph_from_csv(eps.as_ptr(), good.as_ptr(), true, &mut g) }, FmStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { fm_graph_free(g) };
    unsafe { fm_graph_free(ptr::null_mut()) };

    assert_eq!(unsafe { fm_graph_counts(ptr::null(), ptr::null_mut(), ptr::null_mut()) }, FmStatus::NullPointer);
    assert_eq!(unsafe { fm_f_latency_rtt_ms(1.0, 1.0, ptr::null_mut()) }, FmStatus::NullPointer);
    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { fm_graph_from_csv(invalid.as_ptr() as *const c_char, good.as_ptr(), false, &mut g) },
        FmStatus::InvalidUtf8
    );
    let len = unsafe { fm_last_error_message(ptr::null_mut(), 0) };
    assert!(len > 0);
    assert_eq!(unsafe { CStr::from_ptr(fm_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fibermap.h")).unwrap();
    for sym in [
        "typedef struct FmGraph FmGraph;",
        "FM_STATUS_DISCONNECTED = 6",
        "fm_graph_load(",
        "fm_graph_from_csv(",
        "fm_graph_free(",
        "fm_shortest_path_km(",
        "fm_stretch_summary(",
        "fm_f_latency_rtt_ms(",
        "fm_speed_from_index(",
        "fm_geodesic_distance_km(",
        "fm_provision_link(",
        "fm_last_error_message(",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libfibermap_ffi.a");
    let cc = Command::new("cc").arg("--version").output();
    if !lib.exists() || cc.is_err() {
        eprintln!("skipping C link check: static library or C compiler not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "fibermap.h"
int main(int argc, char **argv) {
    FmGraph *g = NULL;
    if (fm_graph_load(argv[1], argv[2], false, &g) != FM_STATUS_OK) {
        char msg[256];
        fm_last_error_message(msg, sizeof msg);
        fprintf(stderr, "%s\n", msg);
        return 1;
    }
    double km = 0; size_t hops = 0;
    FmStatus st = fm_shortest_path_km(g, "chi", "ind", "att", &km, &hops);
    double rtt = 0;
    fm_f_latency_rtt_ms(km, 204000.0, &rtt);
    printf("%d %.2f %zu %.2f\n", (int)st, km, hops, rtt);
    fm_graph_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile/link failed");
    let out = Command::new(&exe)
        .arg(fixture("midwest_endpoints.csv").to_str().unwrap())
        .arg(fixture("midwest_conduits.csv").to_str().unwrap())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0 927.86 3 9.10");
}
