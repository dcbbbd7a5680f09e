//! Optical latency arithmetic: f-latency, propagation speed from refraction
//! index, and slack/DCF overhead envelopes.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in fiber, km/s.
pub const FIBER_SPEED_KM_S: f64 = 204_000.0;

/// Speed of light in vacuum, km/s.
pub const VACUUM_SPEED_KM_S: f64 = 299_792.458;

fn check_speed(speed_km_s: f64) -> Result<()> {
    if !(speed_km_s > 0.0) || !speed_km_s.is_finite() {
        return Err(Error::invalid(format!("propagation speed must be positive, got {speed_km_s}")));
    }
    Ok(())
}

/// Round-trip time in ms to traverse `length_km` of fiber and back.
pub fn f_latency_rtt(length_km: f64, speed_km_s: f64) -> Result<f64> {
    check_speed(speed_km_s)?;
    if !(length_km >= 0.0) {
        return Err(Error::invalid(format!("length must be >= 0, got {length_km}")));
    }
    Ok(2.0 * length_km / speed_km_s * 1000.0)
}

pub fn f_latency_one_way(length_km: f64, speed_km_s: f64) -> Result<f64> {
    Ok(f_latency_rtt(length_km, speed_km_s)? / 2.0)
}

/// Propagation speed in km/ms for a fiber with refraction index `n`.
pub fn speed_from_index(n: f64) -> Result<f64> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::invalid(format!("refraction index must exceed 1, got {n}")));
    }
    Ok(VACUUM_SPEED_KM_S / n / 1000.0)
}

/// Ratio of an observed latency over its baseline. Values below 1 mean the
/// observation beats the physical bound.
pub fn inflation(observed_ms: f64, baseline_ms: f64) -> Result<f64> {
    if !(baseline_ms > 0.0) {
        return Err(Error::invalid(format!("baseline must be positive, got {baseline_ms}")));
    }
    Ok(observed_ms / baseline_ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackEstimate {
    pub fraction: f64,
    /// Set when the cable is shorter than its route, which points at bad data.
    pub suspicious: bool,
}

/// Extra cable relative to the surveyed route: `cable / route - 1`.
pub fn slack_fraction(cable_km: f64, route_km: f64) -> Result<SlackEstimate> {
    if !(route_km > 0.0) {
        return Err(Error::invalid(format!("route length must be positive, got {route_km}")));
    }
    let fraction = cable_km / route_km - 1.0;
    Ok(SlackEstimate { fraction, suspicious: fraction < 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub slack_fraction: f64,
    pub dcf_fraction_lo: f64,
    pub dcf_fraction_hi: f64,
    /// Additive opto-electrical delay per hop, microseconds (transponders, FEC).
    pub per_hop_us: f64,
}

impl OverheadModel {
    pub const SMF: OverheadModel =
        OverheadModel { slack_fraction: 0.05, dcf_fraction_lo: 0.15, dcf_fraction_hi: 0.25, per_hop_us: 0.0 };
    pub const NZ_DSF: OverheadModel =
        OverheadModel { slack_fraction: 0.05, dcf_fraction_lo: 0.05, dcf_fraction_hi: 0.05, per_hop_us: 0.0 };
    pub const NONE: OverheadModel =
        OverheadModel { slack_fraction: 0.0, dcf_fraction_lo: 0.0, dcf_fraction_hi: 0.0, per_hop_us: 0.0 };

    pub fn validate(&self) -> Result<()> {
        let fields = [self.slack_fraction, self.dcf_fraction_lo, self.dcf_fraction_hi, self.per_hop_us];
        if fields.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
            return Err(Error::invalid("overhead fractions must be finite and >= 0"));
        }
        if self.dcf_fraction_lo > self.dcf_fraction_hi {
            return Err(Error::invalid("DCF range has lo > hi"));
        }
        Ok(())
    }
}

impl Default for OverheadModel {
    fn default() -> Self {
        OverheadModel::SMF
    }
}

/// RTT range expected over a conduit once slack loops and dispersion
/// compensation are accounted for. Overheads compose multiplicatively.
pub fn expected_rtt_envelope(conduit_km: f64, overhead: &OverheadModel, hops: usize, speed_km_s: f64) -> Result<(f64, f64)> {
    overhead.validate()?;
    let cable = conduit_km * (1.0 + overhead.slack_fraction);
    let extra_ms = 2.0 * hops as f64 * overhead.per_hop_us / 1000.0;
    let lo = f_latency_rtt(cable * (1.0 + overhead.dcf_fraction_lo), speed_km_s)? + extra_ms;
    let hi = f_latency_rtt(cable * (1.0 + overhead.dcf_fraction_hi), speed_km_s)? + extra_ms;
    Ok((lo, hi))
}

/// Fiber length implied by a one-way signal latency.
pub fn length_from_signal_latency(one_way_ms: f64, speed_km_s: f64) -> Result<f64> {
    check_speed(speed_km_s)?;
    if !(one_way_ms >= 0.0) {
        return Err(Error::invalid(format!("latency must be >= 0, got {one_way_ms}")));
    }
    Ok(one_way_ms * speed_km_s / 1000.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub name: String,
    pub index: f64,
    /// Dispersion in ps/(nm*km), if known.
    pub dcf_coefficient: Option<f64>,
}

impl FiberSpec {
    pub fn speed_km_per_ms(&self) -> Result<f64> {
        speed_from_index(self.index)
    }
}

pub fn builtin_fiber_specs() -> Vec<FiberSpec> {
    vec![
        FiberSpec { name: "ULL".into(), index: 1.462, dcf_coefficient: None },
        FiberSpec { name: "SMF".into(), index: 1.468, dcf_coefficient: Some(16.5) },
        FiberSpec { name: "NZ-DSF".into(), index: 1.470, dcf_coefficient: Some(4.2) },
    ]
}

/// Reads `name,index,dcf_coefficient` rows. Rows override built-in specs of
/// the same name; new names are appended.
pub fn load_fiber_specs<R: Read>(reader: R) -> Result<Vec<FiberSpec>> {
    let mut specs = builtin_fiber_specs();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (i, row) in rdr.deserialize::<FiberSpec>().enumerate() {
        let spec = row.map_err(|e| Error::load("fiber specs", i + 1, e.to_string()))?;
        if !(spec.index > 1.0 && spec.index < 2.0) {
            return Err(Error::load("fiber specs", i + 1, format!("index {} outside (1, 2)", spec.index)));
        }
        match specs.iter_mut().find(|s| s.name == spec.name) {
            Some(existing) => *existing = spec,
            None => specs.push(spec),
        }
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: f64 = FIBER_SPEED_KM_S;

    #[test]
    fn f_latency_examples() {
        assert!((f_latency_rtt(943.6, C).unwrap() - 9.25).abs() < 0.01);
        assert!((f_latency_rtt(1418.38, C).unwrap() - 13.91).abs() < 0.01);
        assert_eq!(f_latency_rtt(0.0, C).unwrap(), 0.0);
        assert!(f_latency_rtt(10.0, 0.0).is_err());
        assert!(f_latency_rtt(10.0, -5.0).is_err());
    }

    #[test]
    fn speeds() {
        for (n, v) in [(1.462, 205.1), (1.468, 204.2), (1.470, 203.9)] {
            assert!((speed_from_index(n).unwrap() - v).abs() < 0.05, "{n}");
        }
        assert!(speed_from_index(1.0).is_err());
        assert!(speed_from_index(0.5).is_err());
    }

    #[test]
    fn inflation_examples() {
        assert!((inflation(15.1, 9.25).unwrap() - 1.63).abs() < 0.01);
        assert_eq!(inflation(4.0, 4.0).unwrap(), 1.0);
        let r = inflation(5.0, 9.1).unwrap();
        assert!((r - 0.55).abs() < 0.01 && r < 1.0);
        assert!(inflation(1.0, 0.0).is_err());
    }

    #[test]
    fn slack_examples() {
        let s = slack_fraction(1328.0, 1253.0).unwrap();
        assert!((s.fraction - 0.0599).abs() < 1e-4 && !s.suspicious);
        assert_eq!(slack_fraction(10.0, 10.0).unwrap().fraction, 0.0);
        assert!(slack_fraction(9.0, 10.0).unwrap().suspicious);
        assert!(slack_fraction(9.0, 0.0).is_err());
    }

    #[test]
    fn envelopes() {
        let nz = OverheadModel { slack_fraction: 0.05, ..OverheadModel::NZ_DSF };
        let (lo, hi) = expected_rtt_envelope(1000.0, &nz, 0, C).unwrap();
        let want = 2.0 * 1000.0 * 1.05 * 1.05 / 204.0;
        assert!((lo - want).abs() < 1e-12 && lo == hi);
        assert!((lo - 10.81).abs() < 0.01);

        let (lo, hi) = expected_rtt_envelope(943.6, &OverheadModel::NONE, 0, C).unwrap();
        assert_eq!((lo, hi), (f_latency_rtt(943.6, C).unwrap(), f_latency_rtt(943.6, C).unwrap()));

        let (lo, hi) = expected_rtt_envelope(943.6, &OverheadModel::SMF, 0, C).unwrap();
        assert!((lo - 11.17).abs() < 0.02 && (hi - 12.14).abs() < 0.02, "{lo} {hi}");
        assert!(15.1 > hi);

        let bad = OverheadModel { dcf_fraction_lo: 0.3, dcf_fraction_hi: 0.1, ..OverheadModel::NONE };
        assert!(expected_rtt_envelope(1.0, &bad, 0, C).is_err());

        let hop = OverheadModel { per_hop_us: 100.0, ..OverheadModel::NONE };
        let (lo, _) = expected_rtt_envelope(0.0, &hop, 3, C).unwrap();
        assert!((lo - 0.6).abs() < 1e-12);
    }

    #[test]
    fn length_from_latency() {
        assert!((length_from_signal_latency(5.0, C).unwrap() - 1020.0).abs() < 1e-9);
        assert_eq!(length_from_signal_latency(0.0, C).unwrap(), 0.0);
        assert!(length_from_signal_latency(-1.0, C).is_err());
    }

    #[test]
    fn spec_table() {
        let csv = "name,index,dcf_coefficient\nSMF,1.4675,17.0\nHollow,1.003,\n";
        let specs = load_fiber_specs(csv.as_bytes()).unwrap();
        assert_eq!(specs.len(), 4);
        assert_eq!(specs[1].index, 1.4675);
        assert_eq!(specs[3].dcf_coefficient, None);
        assert!(load_fiber_specs("name,index,dcf_coefficient\nX,2.5,\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_length(len in 0.0f64..20_000.0) {
            let one = f_latency_rtt(len, C).unwrap();
            prop_assert_eq!(f_latency_rtt(2.0 * len, C).unwrap(), 2.0 * one);
        }

        #[test]
        fn speed_decreases_with_index(a in 1.0001f64..1.999, b in 1.0001f64..1.999) {
            prop_assume!(a < b);
            prop_assert!(speed_from_index(a).unwrap() > speed_from_index(b).unwrap());
        }

        #[test]
        fn self_inflation_is_one(len in 0.001f64..20_000.0) {
            let f = f_latency_rtt(len, C).unwrap();
            prop_assert_eq!(inflation(f, f).unwrap(), 1.0);
        }

        #[test]
        fn envelope_ordered(len in 0.0f64..5000.0, s in 0.0f64..0.2, lo in 0.0f64..0.3, extra in 0.0f64..0.3) {
            let m = OverheadModel { slack_fraction: s, dcf_fraction_lo: lo, dcf_fraction_hi: lo + extra, per_hop_us: 0.0 };
            let (a, b) = expected_rtt_envelope(len, &m, 0, C).unwrap();
            prop_assert!(a <= b);
        }

        #[test]
        fn length_inverts_one_way(len in 0.0f64..50_000.0) {
            let back = length_from_signal_latency(f_latency_rtt(len, C).unwrap() / 2.0, C).unwrap();
            prop_assert!((back - len).abs() <= 1e-9 * len.max(1.0));
        }
    }
}
