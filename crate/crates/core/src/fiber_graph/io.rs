//! CSV tables for endpoints and conduits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Conduit, Endpoint, FiberGraph, LengthProvenance, ValidationReport};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject conduits shorter than the LOS between their endpoints.
    pub strict: bool,
}

#[derive(Debug, Deserialize, Serialize)]
struct EndpointRow {
    id: String,
    name: String,
    lat: f64,
    lon: f64,
    population: Option<u64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ConduitRow {
    id: String,
    endpoint_a: String,
    endpoint_b: String,
    length_km: Option<f64>,
    isps: String,
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(reader: R, table: &str) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        rows.push(rec.map_err(|e| Error::load(table, i + 1, e.to_string()))?);
    }
    Ok(rows)
}

/// Reads `id,name,lat,lon,population` and
/// `id,endpoint_a,endpoint_b,length_km,isps` tables. An empty `length_km`
/// marks a conduit of unknown length; `isps` is `;`-separated.
pub fn load_graph<R1: Read, R2: Read>(
    endpoints: R1,
    conduits: R2,
    opts: LoadOptions,
) -> Result<(FiberGraph, ValidationReport)> {
    let ep_rows: Vec<EndpointRow> = read_rows(endpoints, "endpoints")?;
    let c_rows: Vec<ConduitRow> = read_rows(conduits, "conduits")?;
    let eps = ep_rows
        .into_iter()
        .map(|r| Endpoint { id: r.id, name: r.name, location: GeoPoint { lat: r.lat, lon: r.lon }, population: r.population })
        .collect();
    let cs = c_rows
        .into_iter()
        .map(|r| Conduit {
            id: r.id,
            a: r.endpoint_a,
            b: r.endpoint_b,
            provenance: if r.length_km.is_some() { LengthProvenance::Measured } else { LengthProvenance::Unknown },
            length_km: r.length_km,
            isps: r.isps.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        })
        .collect();
    FiberGraph::new(eps, cs, opts.strict)
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File { path: path.to_path_buf(), source })
}

pub fn load_graph_files(
    endpoints: &Path,
    conduits: &Path,
    opts: LoadOptions,
) -> Result<(FiberGraph, ValidationReport)> {
    load_graph(open(endpoints)?, open(conduits)?, opts)
}

pub fn write_endpoints<W: Write>(endpoints: &[Endpoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in endpoints {
        w.serialize(EndpointRow {
            id: e.id.clone(),
            name: e.name.clone(),
            lat: e.location.lat,
            lon: e.location.lon,
            population: e.population,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_conduits<W: Write>(conduits: &[Conduit], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in conduits {
        let length_km = match c.provenance {
            LengthProvenance::Measured => c.length_km,
            _ => None,
        };
        w.serialize(ConduitRow {
            id: c.id.clone(),
            endpoint_a: c.a.clone(),
            endpoint_b: c.b.clone(),
            length_km,
            isps: c.isps.iter().cloned().collect::<Vec<_>>().join(";"),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: &str = "id,name,lat,lon,population\na,Alpha,0.0,0.0,1000\nb,Beta,0.0,1.0,\n";

    #[test]
    fn parses_tables() {
        let cs = "id,endpoint_a,endpoint_b,length_km,isps\nc1,a,b,130.5,AT&T;Zayo\nc2,a,b,,Level3\n";
        let (g, report) = load_graph(EPS.as_bytes(), cs.as_bytes(), LoadOptions::default()).unwrap();
        assert_eq!(g.endpoints()[1].population, None);
        assert_eq!(g.endpoints()[0].population, Some(1000));
        assert_eq!(g.conduits()[0].isps.len(), 2);
        assert!(g.conduits()[0].isps.contains("AT&T"));
        assert_eq!(g.conduits()[1].provenance, LengthProvenance::Unknown);
        assert_eq!(report.unknown_length, vec!["c2"]);
    }

    #[test]
    fn names_offending_row() {
        let cs = "id,endpoint_a,endpoint_b,length_km,isps\nc1,a,b,130.5,x\nc2,a,q,100,x\n";
        let err = load_graph(EPS.as_bytes(), cs.as_bytes(), LoadOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("q"), "{msg}");

        let cs = "id,endpoint_a,endpoint_b,length_km,isps\nc1,a,b,abc,x\n";
        assert!(load_graph(EPS.as_bytes(), cs.as_bytes(), LoadOptions::default()).is_err());
    }

    #[test]
    fn writes_what_it_reads() {
        let cs = "id,endpoint_a,endpoint_b,length_km,isps\nc1,a,b,130.5,x;y\nc2,a,b,,\n";
        let (g, _) = load_graph(EPS.as_bytes(), cs.as_bytes(), LoadOptions::default()).unwrap();
        let (mut e_out, mut c_out) = (Vec::new(), Vec::new());
        write_endpoints(g.endpoints(), &mut e_out).unwrap();
        write_conduits(g.conduits(), &mut c_out).unwrap();
        let (h, _) = load_graph(&e_out[..], &c_out[..], LoadOptions::default()).unwrap();
        assert_eq!(g.endpoints(), h.endpoints());
        assert_eq!(g.conduits(), h.conduits());
    }
}
