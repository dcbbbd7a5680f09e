//! Great-circle primitives on a spherical Earth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.008_8;

/// Kilometers per degree of latitude (and of longitude at the equator).
pub const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

/// Bounding boxes are rejected above this latitude; the longitude margin
/// conversion degenerates toward the poles.
pub const MAX_BOX_LATITUDE: f64 = 85.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || !self.lon.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite coordinate ({}, {})",
                self.lat, self.lon
            )));
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::invalid(format!(
                "coordinate out of range ({}, {})",
                self.lat, self.lon
            )));
        }
        Ok(())
    }
}

/// Haversine distance on a sphere of the given radius. Inputs are assumed valid.
pub fn haversine_km(a: GeoPoint, b: GeoPoint, radius_km: f64) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * radius_km * h.sqrt().min(1.0).asin()
}

/// Geodesic (great-circle) distance in kilometers.
pub fn geodesic_distance(a: GeoPoint, b: GeoPoint) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(haversine_km(a, b, EARTH_RADIUS_KM))
}

/// Sum of hop distances along a polyline.
pub fn polyline_length(points: &[GeoPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("polyline has no points"));
    }
    for p in points {
        p.validate()?;
    }
    Ok(points
        .windows(2)
        .map(|w| haversine_km(w[0], w[1], EARTH_RADIUS_KM))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
    pub margin_km: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: GeoPoint) -> bool {
        point_in_box(p, self)
    }
}

/// Rectangle enclosing `a` and `b`, grown on every side by `margin_km`.
pub fn bounding_box(a: GeoPoint, b: GeoPoint, margin_km: f64) -> Result<BoundingBox> {
    a.validate()?;
    b.validate()?;
    if !(margin_km >= 0.0) || !margin_km.is_finite() {
        return Err(Error::invalid(format!("margin must be >= 0, got {margin_km}")));
    }
    if a.lat.abs() > MAX_BOX_LATITUDE || b.lat.abs() > MAX_BOX_LATITUDE {
        return Err(Error::invalid(format!(
            "bounding boxes are limited to |lat| <= {MAX_BOX_LATITUDE}"
        )));
    }
    let (min_lat, max_lat) = (a.lat.min(b.lat), a.lat.max(b.lat));
    let (min_lon, max_lon) = (a.lon.min(b.lon), a.lon.max(b.lon));
    let mid_lat = (min_lat + max_lat) / 2.0;
    let dlat = margin_km / KM_PER_DEGREE;
    let dlon = margin_km / (KM_PER_DEGREE * mid_lat.to_radians().cos());
    Ok(BoundingBox {
        min_lat: min_lat - dlat,
        max_lat: max_lat + dlat,
        min_lon: min_lon - dlon,
        max_lon: max_lon + dlon,
        margin_km,
    })
}

/// Inclusive on all four edges.
pub fn point_in_box(p: GeoPoint, bbox: &BoundingBox) -> bool {
    p.lat >= bbox.min_lat && p.lat <= bbox.max_lat && p.lon >= bbox.min_lon && p.lon <= bbox.max_lon
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(geodesic_distance(pt(40.0, -100.0), pt(40.0, -100.0)).unwrap(), 0.0);
        // one equatorial degree: R * pi / 180
        let d = geodesic_distance(pt(0.0, 0.0), pt(0.0, 1.0)).unwrap();
        assert!((d - 111.195).abs() < 0.001, "{d}");
        let d = geodesic_distance(pt(0.0, 0.0), pt(0.0, 180.0)).unwrap();
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::PI).abs() < 1e-6);
        assert!((d - 20015.1).abs() < 0.1);
    }

    #[test]
    fn rejects_bad_coordinates() {
        let bad = GeoPoint { lat: 91.0, lon: 0.0 };
        assert!(geodesic_distance(bad, pt(0.0, 0.0)).is_err());
        let nan = GeoPoint { lat: f64::NAN, lon: 0.0 };
        assert!(geodesic_distance(pt(0.0, 0.0), nan).is_err());
        assert!(GeoPoint::new(0.0, 180.5).is_err());
    }

    #[test]
    fn polyline_examples() {
        assert!(polyline_length(&[]).is_err());
        assert_eq!(polyline_length(&[pt(1.0, 2.0)]).unwrap(), 0.0);
        let (p, q) = (pt(10.0, 10.0), pt(11.0, 12.0));
        assert_eq!(polyline_length(&[p, q]).unwrap(), geodesic_distance(p, q).unwrap());
        let l = polyline_length(&[pt(0.0, 0.0), pt(0.0, 1.0), pt(0.0, 2.0)]).unwrap();
        assert!((l - 222.390).abs() < 0.002, "{l}");
    }

    #[test]
    fn box_examples() {
        let b = bounding_box(pt(40.0, -100.0), pt(40.0, -100.0), 0.0).unwrap();
        assert_eq!((b.min_lat, b.max_lat, b.min_lon, b.max_lon), (40.0, 40.0, -100.0, -100.0));
        assert!(point_in_box(pt(40.0, -100.0), &b));

        let b = bounding_box(pt(40.0, -100.0), pt(41.0, -99.0), 0.0).unwrap();
        assert_eq!((b.min_lat, b.max_lat, b.min_lon, b.max_lon), (40.0, 41.0, -100.0, -99.0));

        let b = bounding_box(pt(0.0, 0.0), pt(0.0, 1.0), 111.195).unwrap();
        for (got, want) in [(b.min_lat, -1.0), (b.max_lat, 1.0), (b.min_lon, -1.0), (b.max_lon, 2.0)] {
            assert!((got - want).abs() < 0.01, "{got} vs {want}");
        }

        assert!(bounding_box(pt(0.0, 0.0), pt(1.0, 1.0), -1.0).is_err());
        assert!(bounding_box(pt(86.0, 0.0), pt(1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn box_membership() {
        let b = bounding_box(pt(40.0, -100.0), pt(41.0, -99.0), 0.0).unwrap();
        assert!(point_in_box(pt(40.5, -99.5), &b));
        assert!(!point_in_box(pt(42.0, -99.5), &b));
        assert!(point_in_box(pt(41.0, -99.0), &b));
        assert!(point_in_box(pt(40.0, -99.5), &b));
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(lat, lon)| GeoPoint { lat, lon })
    }

    proptest! {
        #[test]
        fn symmetric(a in arb_point(), b in arb_point()) {
            prop_assert_eq!(geodesic_distance(a, b).unwrap(), geodesic_distance(b, a).unwrap());
        }

        #[test]
        fn triangle_inequality(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ac = geodesic_distance(a, c).unwrap();
            let ab = geodesic_distance(a, b).unwrap();
            let bc = geodesic_distance(b, c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn reversed_polyline(points in prop::collection::vec(arb_point(), 1..12)) {
            let fwd = polyline_length(&points).unwrap();
            let mut rev = points.clone();
            rev.reverse();
            let back = polyline_length(&rev).unwrap();
            prop_assert!((fwd - back).abs() <= 1e-9 * fwd.max(1.0));
        }

        #[test]
        fn box_holds_generators(
            a in (-85.0f64..=85.0, -180.0f64..=180.0),
            b in (-85.0f64..=85.0, -180.0f64..=180.0),
            m in 0.0f64..500.0,
        ) {
            let (a, b) = (GeoPoint { lat: a.0, lon: a.1 }, GeoPoint { lat: b.0, lon: b.1 });
            let bx = bounding_box(a, b, m).unwrap();
            prop_assert!(point_in_box(a, &bx));
            prop_assert!(point_in_box(b, &bx));
        }
    }
}
