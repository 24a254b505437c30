//! Physical model: hover rate/energy/time and flight power/energy/time.
//!
//! Everything downstream (routing, refinement, validation) computes through
//! the closed forms in this module. All quantities are SI: watts, joules,
//! meters, seconds, bits. The "virtual time" of an activity is its physical
//! duration plus the recharging time needed to replace the energy it burned.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units;

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("velocity {velocity} m/s outside (0, {v_max}] m/s")]
    VelocityOutOfRange { velocity: f64, v_max: f64 },
    #[error("non-positive rate {rate} bit/s cannot finish a transfer")]
    InfeasibleRate { rate: f64 },
    #[error("instance has no terminals")]
    NoTerminals,
    #[error("terminal ids must be unique and contiguous from 1 (got {found:?} at position {index})")]
    BadTerminalId { found: usize, index: usize },
    #[error("terminals {a} and {b} share position ({x}, {y})")]
    DuplicatePosition { a: usize, b: usize, x: f64, y: f64 },
    #[error("terminal {id}: data_bits must be positive, got {value}")]
    NonPositiveData { id: usize, value: f64 },
    #[error("coordinate of {name} is not finite")]
    NonFiniteCoordinate { name: String },
}

/// Horizontal coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Position) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A ground terminal waiting for `data_bits` of payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTerminal {
    pub id: usize,
    #[serde(flatten)]
    pub position: Position,
    #[serde(deserialize_with = "units::de_bits")]
    pub data_bits: f64,
}

/// The recharging station (depot). Node index 0 everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Station {
    #[serde(flatten)]
    pub position: Position,
}

fn default_p_max() -> f64 {
    0.5
}

/// Channel and link-budget parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Bandwidth B in Hz.
    #[serde(deserialize_with = "units::de_frequency")]
    pub bandwidth_hz: f64,
    /// Noise power at the receiver in W.
    #[serde(deserialize_with = "units::de_power")]
    pub noise_power_w: f64,
    /// Reference channel power gain at 1 m, linear.
    #[serde(deserialize_with = "units::de_gain")]
    pub ref_gain: f64,
    /// Fixed flight altitude in m.
    #[serde(deserialize_with = "units::de_length")]
    pub altitude_m: f64,
    /// Minimum acceptable downlink rate in bit/s.
    #[serde(deserialize_with = "units::de_rate")]
    pub rate_threshold_bps: f64,
    /// Transmit power ceiling in W.
    #[serde(default = "default_p_max", deserialize_with = "units::de_power")]
    pub p_max_w: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_power_w", self.noise_power_w),
            ("ref_gain", self.ref_gain),
            ("altitude_m", self.altitude_m),
            ("rate_threshold_bps", self.rate_threshold_bps),
            ("p_max_w", self.p_max_w),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::NonPositive { name, value: v });
            }
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 2e6,
            noise_power_w: 1e-14, // -110 dBm
            ref_gain: 1e-6,       // -60 dB
            altitude_m: 100.0,
            rate_threshold_bps: 1.5e7,
            p_max_w: 0.5,
        }
    }
}

/// Raw rotor-craft parameters used to derive the per-meter flight
/// energy/time polynomial coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotorParams {
    /// Blade profile power in hover, W.
    pub p0_w: f64,
    /// Induced power in hover, W.
    pub pi_w: f64,
    /// Rotor blade tip speed, m/s.
    pub u_tip_mps: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v0_mps: f64,
    /// Fuselage drag ratio.
    pub d0: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor solidity.
    pub solidity: f64,
    /// Rotor disc area, m^2.
    pub disc_area_m2: f64,
}

/// UAV energy model: per-meter flight polynomials plus hover/recharge powers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawUavParams")]
pub struct UavParams {
    /// Flight energy per meter is `psi[0] v^2 + psi[1] v + psi[2]/v + psi[3]/v^2` J/m.
    pub psi: [f64; 4],
    /// Flight virtual time per meter is `tau[0] v^2 + tau[1] v + tau[2]/v + tau[3]/v^2` s/m.
    pub tau: [f64; 4],
    /// Hover power, W.
    pub hover_power_w: f64,
    /// Transmit power amplifier coefficient, dimensionless.
    pub transmit_coeff: f64,
    /// Recharging power at the station, W.
    pub recharge_power_w: f64,
    /// On-board battery capacity, J.
    pub battery_capacity_j: f64,
    /// Velocity ceiling, m/s.
    pub v_max_mps: f64,
}

#[derive(Deserialize)]
struct RawUavParams {
    psi: Option<[f64; 4]>,
    tau: Option<[f64; 4]>,
    rotor: Option<RotorParams>,
    #[serde(deserialize_with = "units::de_power")]
    hover_power_w: f64,
    transmit_coeff: f64,
    #[serde(deserialize_with = "units::de_power")]
    recharge_power_w: f64,
    #[serde(deserialize_with = "units::de_energy")]
    battery_capacity_j: f64,
    #[serde(deserialize_with = "units::de_velocity")]
    v_max_mps: f64,
}

impl TryFrom<RawUavParams> for UavParams {
    type Error = ModelError;

    fn try_from(raw: RawUavParams) -> Result<Self, ModelError> {
        let derived = match &raw.rotor {
            Some(rotor) => Some(derive_coefficients(rotor, raw.recharge_power_w)?),
            None => None,
        };
        let psi = match (raw.psi, &derived) {
            (Some(direct), Some((dpsi, _))) => {
                if !close_quad(&direct, dpsi) {
                    log::warn!(
                        "psi supplied directly ({direct:?}) disagrees with rotor-derived \
                         values ({dpsi:?}); using the direct values"
                    );
                }
                direct
            }
            (Some(direct), None) => direct,
            (None, Some((dpsi, _))) => *dpsi,
            (None, None) => {
                return Err(ModelError::Negative {
                    name: "psi (supply psi or rotor)",
                    value: f64::NAN,
                })
            }
        };
        let tau = match (raw.tau, &derived) {
            (Some(direct), Some((_, dtau))) => {
                if !close_quad(&direct, dtau) {
                    log::warn!(
                        "tau supplied directly ({direct:?}) disagrees with rotor-derived \
                         values ({dtau:?}); using the direct values"
                    );
                }
                direct
            }
            (Some(direct), None) => direct,
            (None, Some((_, dtau))) => *dtau,
            // With psi given but no tau and no rotor we can still derive tau
            // from psi and the recharge power: tau_i = psi_i / P^r except the
            // 1/v term, which also carries the travel time itself.
            (None, None) => {
                let pr = raw.recharge_power_w;
                if pr <= 0.0 {
                    return Err(ModelError::NonPositive {
                        name: "recharge_power_w",
                        value: pr,
                    });
                }
                [psi[0] / pr, psi[1] / pr, (psi[2] + pr) / pr, psi[3] / pr]
            }
        };
        let uav = UavParams {
            psi,
            tau,
            hover_power_w: raw.hover_power_w,
            transmit_coeff: raw.transmit_coeff,
            recharge_power_w: raw.recharge_power_w,
            battery_capacity_j: raw.battery_capacity_j,
            v_max_mps: raw.v_max_mps,
        };
        uav.validate()?;
        Ok(uav)
    }
}

fn close_quad(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= 0.05 * x.abs().max(y.abs()) + 1e-12)
}

impl UavParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("hover_power_w", self.hover_power_w),
            ("transmit_coeff", self.transmit_coeff),
            ("recharge_power_w", self.recharge_power_w),
            ("battery_capacity_j", self.battery_capacity_j),
            ("v_max_mps", self.v_max_mps),
        ] {
            if !(v > 0.0 && (v.is_finite() || name == "battery_capacity_j")) {
                return Err(ModelError::NonPositive { name, value: v });
            }
        }
        for (arr, name) in [(&self.psi, "psi"), (&self.tau, "tau")] {
            for &c in arr.iter() {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(ModelError::Negative { name, value: c });
                }
            }
        }
        Ok(())
    }
}

impl Default for UavParams {
    /// Reference rotary-wing platform. `tau` is derived from `psi` and the
    /// recharging power, so the identity `virtual time = travel time +
    /// energy / P^r` holds at machine precision. (The commonly printed
    /// rounded vector `[0.9e-4, 1.6e-4, 1.8, 3.6]` breaks that identity by
    /// a few tenths of a percent; supply it directly when exact agreement
    /// with the printed numbers matters more than the decomposition.)
    fn default() -> Self {
        let psi = [9.2e-3, 16.6e-3, 79.9, 357.2];
        let p_r = 100.0;
        Self {
            psi,
            tau: [psi[0] / p_r, psi[1] / p_r, (psi[2] + p_r) / p_r, psi[3] / p_r],
            hover_power_w: 165.0,
            transmit_coeff: 4.2,
            recharge_power_w: p_r,
            battery_capacity_j: 399_600.0,
            v_max_mps: 25.0,
        }
    }
}

/// One complete planning problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    pub station: Station,
    pub terminals: Vec<GroundTerminal>,
    pub channel: ChannelParams,
    pub uav: UavParams,
}

#[derive(Deserialize)]
struct RawInstance {
    station: Station,
    terminals: Vec<GroundTerminal>,
    channel: ChannelParams,
    uav: UavParams,
}

impl TryFrom<RawInstance> for Instance {
    type Error = ModelError;

    fn try_from(raw: RawInstance) -> Result<Self, ModelError> {
        Instance::new(raw.station, raw.terminals, raw.channel, raw.uav)
    }
}

impl Instance {
    pub fn new(
        station: Station,
        terminals: Vec<GroundTerminal>,
        channel: ChannelParams,
        uav: UavParams,
    ) -> Result<Self, ModelError> {
        if terminals.is_empty() {
            return Err(ModelError::NoTerminals);
        }
        if !station.position.is_finite() {
            return Err(ModelError::NonFiniteCoordinate {
                name: "station".into(),
            });
        }
        for (index, t) in terminals.iter().enumerate() {
            if t.id != index + 1 {
                return Err(ModelError::BadTerminalId {
                    found: t.id,
                    index,
                });
            }
            if !t.position.is_finite() {
                return Err(ModelError::NonFiniteCoordinate {
                    name: format!("terminal {}", t.id),
                });
            }
            if !(t.data_bits > 0.0 && t.data_bits.is_finite()) {
                return Err(ModelError::NonPositiveData {
                    id: t.id,
                    value: t.data_bits,
                });
            }
        }
        for i in 0..terminals.len() {
            for j in (i + 1)..terminals.len() {
                if terminals[i].position == terminals[j].position {
                    return Err(ModelError::DuplicatePosition {
                        a: terminals[i].id,
                        b: terminals[j].id,
                        x: terminals[i].position.x,
                        y: terminals[i].position.y,
                    });
                }
            }
        }
        channel.validate()?;
        uav.validate()?;
        Ok(Self {
            station,
            terminals,
            channel,
            uav,
        })
    }

    /// Number of ground terminals K.
    pub fn k(&self) -> usize {
        self.terminals.len()
    }

    /// Position of node `i` in the extended set {0} ∪ terminals, 0 = station.
    pub fn node_position(&self, i: usize) -> Position {
        if i == 0 {
            self.station.position
        } else {
            self.terminals[i - 1].position
        }
    }
}

/// Evaluates `c[0] v^2 + c[1] v + c[2]/v + c[3]/v^2`, the shape shared by the
/// per-meter flight energy (psi) and per-meter flight virtual time (tau).
#[inline]
pub fn velocity_poly(c: &[f64; 4], v: f64) -> f64 {
    c[0] * v * v + c[1] * v + c[2] / v + c[3] / (v * v)
}

/// Downlink rate in bit/s when hovering at `hover` and transmitting `p_t` W
/// to a terminal at `gt`. Free-space path loss at fixed altitude.
pub fn achievable_rate(p_t: f64, hover: &Position, gt: &Position, ch: &ChannelParams) -> f64 {
    let h_eff_sq = ch.altitude_m * ch.altitude_m + hover.dist_sq(gt);
    let snr = p_t * ch.ref_gain / (ch.noise_power_w * h_eff_sq);
    ch.bandwidth_hz * (1.0 + snr).log2()
}

/// Transmit power needed to reach exactly `rate` bit/s at squared horizontal
/// offset `offset_sq`; the inverse of [`achievable_rate`].
pub fn power_for_rate(rate: f64, offset_sq: f64, ch: &ChannelParams) -> f64 {
    let h_eff_sq = ch.altitude_m * ch.altitude_m + offset_sq;
    ((rate / ch.bandwidth_hz).exp2() - 1.0) * ch.noise_power_w * h_eff_sq / ch.ref_gain
}

/// Time to push `data_bits` through a link running at `rate`.
pub fn hover_duration(data_bits: f64, rate: f64) -> Result<f64, ModelError> {
    if rate <= 0.0 {
        return Err(ModelError::InfeasibleRate { rate });
    }
    Ok(data_bits / rate)
}

/// Battery energy burned while hovering for a full transfer.
pub fn hover_energy(p_t: f64, data_bits: f64, rate: f64, uav: &UavParams) -> Result<f64, ModelError> {
    let duration = hover_duration(data_bits, rate)?;
    Ok(duration * (uav.transmit_coeff * p_t + uav.hover_power_w))
}

/// Hover virtual time: transfer duration plus the recharging time for the
/// energy it consumed. Identity: `hover_vtc = duration + hover_energy / P^r`.
pub fn hover_vtc(p_t: f64, data_bits: f64, rate: f64, uav: &UavParams) -> Result<f64, ModelError> {
    if rate <= 0.0 {
        return Err(ModelError::InfeasibleRate { rate });
    }
    Ok(
        data_bits * (uav.transmit_coeff * p_t + uav.hover_power_w + uav.recharge_power_w)
            / (uav.recharge_power_w * rate),
    )
}

/// Instantaneous power draw of level flight at speed `v`.
pub fn flight_power(v: f64, rotor: &RotorParams) -> Result<f64, ModelError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(ModelError::NonPositive {
            name: "velocity",
            value: v,
        });
    }
    let profile = rotor.p0_w * (1.0 + 3.0 * v * v / (rotor.u_tip_mps * rotor.u_tip_mps));
    let induced = rotor.pi_w * rotor.v0_mps / v;
    let parasite = 0.5 * rotor.d0 * rotor.air_density * rotor.solidity * rotor.disc_area_m2 * v * v * v;
    Ok(profile + induced + parasite)
}

fn check_leg(dist: f64, v: f64, uav: &UavParams) -> Result<(), ModelError> {
    if !(dist >= 0.0 && dist.is_finite()) {
        return Err(ModelError::Negative {
            name: "distance",
            value: dist,
        });
    }
    if !(v > 0.0 && v <= uav.v_max_mps) {
        return Err(ModelError::VelocityOutOfRange {
            velocity: v,
            v_max: uav.v_max_mps,
        });
    }
    Ok(())
}

/// Energy to fly `dist` meters in a straight line at constant speed `v`.
pub fn flight_energy(dist: f64, v: f64, uav: &UavParams) -> Result<f64, ModelError> {
    check_leg(dist, v, uav)?;
    Ok(dist * velocity_poly(&uav.psi, v))
}

/// Flight virtual time for the same leg: travel time plus recharging time.
/// Identity: `flight_vtc = dist / v + flight_energy / P^r`.
pub fn flight_vtc(dist: f64, v: f64, uav: &UavParams) -> Result<f64, ModelError> {
    check_leg(dist, v, uav)?;
    Ok(dist * velocity_poly(&uav.tau, v))
}

/// Derives the per-meter coefficient vectors (psi, tau) from raw rotor
/// parameters and the station recharging power.
///
/// Fields that appear in denominators (`u_tip_mps` and the recharge power)
/// must be strictly positive; the rest may be zero, which degrades the model
/// gracefully (a zeroed rotor costs nothing to fly).
pub fn derive_coefficients(
    rotor: &RotorParams,
    recharge_power_w: f64,
) -> Result<([f64; 4], [f64; 4]), ModelError> {
    for (name, v) in [
        ("p0_w", rotor.p0_w),
        ("pi_w", rotor.pi_w),
        ("v0_mps", rotor.v0_mps),
        ("d0", rotor.d0),
        ("air_density", rotor.air_density),
        ("solidity", rotor.solidity),
        ("disc_area_m2", rotor.disc_area_m2),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ModelError::Negative { name, value: v });
        }
    }
    for (name, v) in [
        ("u_tip_mps", rotor.u_tip_mps),
        ("recharge_power_w", recharge_power_w),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ModelError::NonPositive { name, value: v });
        }
    }
    let psi = [
        0.5 * rotor.d0 * rotor.air_density * rotor.solidity * rotor.disc_area_m2,
        3.0 * rotor.p0_w / (rotor.u_tip_mps * rotor.u_tip_mps),
        rotor.p0_w,
        rotor.pi_w * rotor.v0_mps,
    ];
    let tau = [
        psi[0] / recharge_power_w,
        psi[1] / recharge_power_w,
        (rotor.p0_w + recharge_power_w) / recharge_power_w,
        psi[3] / recharge_power_w,
    ];
    Ok((psi, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table_uav() -> UavParams {
        UavParams::default()
    }

    fn table_channel() -> ChannelParams {
        ChannelParams::default()
    }

    /// Rotor parameters reproducing the reference psi vector exactly.
    fn reference_rotor() -> RotorParams {
        let p0 = 79.9;
        let u_tip = (3.0 * p0 / 16.6e-3_f64).sqrt();
        let v0 = 4.03;
        let pi = 357.2 / v0;
        let d0 = 0.6;
        let rho = 1.225;
        let s = 0.05;
        let area = 9.2e-3 * 2.0 / (d0 * rho * s);
        RotorParams {
            p0_w: p0,
            pi_w: pi,
            u_tip_mps: u_tip,
            v0_mps: v0,
            d0,
            air_density: rho,
            solidity: s,
            disc_area_m2: area,
        }
    }

    #[test]
    fn derive_matches_reference_table() {
        let rotor = reference_rotor();
        let (psi, tau) = derive_coefficients(&rotor, 100.0).unwrap();
        assert_relative_eq!(psi[0], 9.2e-3, max_relative = 1e-12);
        assert_relative_eq!(psi[1], 16.6e-3, max_relative = 1e-12);
        assert_relative_eq!(psi[2], 79.9, max_relative = 1e-12);
        assert_relative_eq!(psi[3], 357.2, max_relative = 1e-12);
        // Exact identities against psi.
        assert_relative_eq!(tau[0], psi[0] / 100.0, max_relative = 1e-12);
        assert_relative_eq!(tau[1], psi[1] / 100.0, max_relative = 1e-12);
        assert_relative_eq!(tau[2], (psi[2] + 100.0) / 100.0, max_relative = 1e-12);
        assert_relative_eq!(tau[3], psi[3] / 100.0, max_relative = 1e-12);
        // The published tau vector is a rounded print of these.
        let printed = [0.9e-4, 1.6e-4, 1.8, 3.6];
        for (d, p) in tau.iter().zip(printed) {
            assert!((d - p).abs() <= 0.05 * p, "derived {d} vs printed {p}");
        }
    }

    #[test]
    fn derive_zeroed_rotor() {
        let rotor = RotorParams {
            p0_w: 0.0,
            pi_w: 0.0,
            u_tip_mps: 120.0,
            v0_mps: 4.03,
            d0: 0.0,
            air_density: 1.225,
            solidity: 0.05,
            disc_area_m2: 0.503,
        };
        let (psi, tau) = derive_coefficients(&rotor, 100.0).unwrap();
        assert_eq!(psi, [0.0, 0.0, 0.0, 0.0]);
        assert_eq!(tau, [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn derive_rejects_negative_and_zero_denominators() {
        let mut rotor = reference_rotor();
        rotor.d0 = -0.1;
        assert!(derive_coefficients(&rotor, 100.0).is_err());
        let mut rotor = reference_rotor();
        rotor.u_tip_mps = 0.0;
        assert!(derive_coefficients(&rotor, 100.0).is_err());
        assert!(derive_coefficients(&reference_rotor(), 0.0).is_err());
    }

    #[test]
    fn psi_match_direct_power_evaluation() {
        // psi must reproduce P(v)/v, the energy per meter, at any speed.
        let rotor = reference_rotor();
        let (psi, _) = derive_coefficients(&rotor, 100.0).unwrap();
        for v in [3.7, 11.9, 24.2] {
            let per_meter = flight_power(v, &rotor).unwrap() / v;
            assert_relative_eq!(velocity_poly(&psi, v), per_meter, max_relative = 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        let ch = table_channel();
        let origin = Position::new(0.0, 0.0);
        assert_eq!(achievable_rate(0.0, &origin, &origin, &ch), 0.0);
        // Directly overhead at 0.1 W: SNR = 1000.
        let rate = achievable_rate(0.1, &origin, &origin, &ch);
        let expected = 2e6 * 1001f64.log2();
        assert_relative_eq!(rate, expected, max_relative = 1e-12);
        assert!((rate - 1.993e7).abs() < 1e4);
    }

    #[test]
    fn rate_monotonicity() {
        let ch = table_channel();
        let gt = Position::new(10.0, -4.0);
        let mut prev = 0.0;
        for i in 1..=40 {
            let r = achievable_rate(0.0125 * i as f64, &gt, &gt, &ch);
            assert!(r > prev);
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let hover = Position::new(10.0 + 25.0 * i as f64, -4.0);
            let r = achievable_rate(0.1, &hover, &gt, &ch);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn doubling_effective_distance_halves_snr() {
        let ch = table_channel();
        let gt = Position::new(0.0, 0.0);
        // offset^2 + H^2 doubles when offset = H.
        let hover = Position::new(ch.altitude_m, 0.0);
        let r_near = achievable_rate(0.1, &gt, &gt, &ch);
        let r_far = achievable_rate(0.1, &hover, &gt, &ch);
        let snr_near = (r_near / ch.bandwidth_hz).exp2() - 1.0;
        let snr_far = (r_far / ch.bandwidth_hz).exp2() - 1.0;
        assert_relative_eq!(snr_far, snr_near / 2.0, max_relative = 1e-9);
        assert!(r_far < r_near);
    }

    #[test]
    fn hover_energy_example() {
        let uav = table_uav();
        let e = hover_energy(0.1, 1e9, 2e7, &uav).unwrap();
        assert_relative_eq!(e, 8271.0, max_relative = 1e-12);
        assert_eq!(hover_energy(0.1, 0.0, 2e7, &uav).unwrap(), 0.0);
        let e2 = hover_energy(0.1, 2e9, 2e7, &uav).unwrap();
        assert_relative_eq!(e2, 2.0 * e, max_relative = 1e-12);
        assert!(hover_energy(0.1, 1e9, 0.0, &uav).is_err());
    }

    #[test]
    fn hover_vtc_example_and_identity() {
        let uav = table_uav();
        let vtc = hover_vtc(0.1, 1e9, 2e7, &uav).unwrap();
        assert_relative_eq!(vtc, 132.71, max_relative = 1e-12);
        // Decomposition: vtc = duration + energy / P^r.
        let duration = hover_duration(1e9, 2e7).unwrap();
        let energy = hover_energy(0.1, 1e9, 2e7, &uav).unwrap();
        assert_relative_eq!(vtc, duration + energy / uav.recharge_power_w, max_relative = 1e-12);
        // Infinite recharge power: vtc collapses to the bare duration.
        let mut fast = table_uav();
        fast.recharge_power_w = 1e12;
        let vtc = hover_vtc(0.1, 1e9, 2e7, &fast).unwrap();
        assert!((vtc - duration).abs() < 1e-6 * duration);
    }

    #[test]
    fn flight_power_shape() {
        let rotor = reference_rotor();
        // At the tip speed the profile term is four times the profile power.
        let at_tip = flight_power(rotor.u_tip_mps, &rotor).unwrap();
        let profile = rotor.p0_w * 4.0;
        let rest = rotor.pi_w * rotor.v0_mps / rotor.u_tip_mps
            + 0.5 * rotor.d0
                * rotor.air_density
                * rotor.solidity
                * rotor.disc_area_m2
                * rotor.u_tip_mps.powi(3);
        assert_relative_eq!(at_tip, profile + rest, max_relative = 1e-12);
        // Cubic drag dominates at large speed.
        let v = 1e3;
        let cubic = 0.5 * rotor.d0 * rotor.air_density * rotor.solidity * rotor.disc_area_m2 * v * v * v;
        assert!((flight_power(v, &rotor).unwrap() / cubic - 1.0).abs() < 0.05);
        assert!(flight_power(0.0, &rotor).is_err());
    }

    #[test]
    fn flight_energy_examples() {
        let uav = table_uav();
        assert_eq!(flight_energy(0.0, 20.0, &uav).unwrap(), 0.0);
        let e = flight_energy(1000.0, 20.0, &uav).unwrap();
        assert!((e - 8900.0).abs() < 0.5, "got {e}");
        assert_relative_eq!(
            flight_energy(2000.0, 20.0, &uav).unwrap(),
            2.0 * e,
            max_relative = 1e-12
        );
        assert!(flight_energy(1000.0, 25.1, &uav).is_err());
        assert!(flight_energy(1000.0, 0.0, &uav).is_err());
    }

    #[test]
    fn flight_vtc_example_and_identity() {
        // The printed rounded tau vector reproduces the textbook number.
        let mut printed = table_uav();
        printed.tau = [0.9e-4, 1.6e-4, 1.8, 3.6];
        assert_eq!(flight_vtc(0.0, 20.0, &printed).unwrap(), 0.0);
        let t = flight_vtc(1000.0, 20.0, &printed).unwrap();
        assert!((t - 138.2).abs() < 0.1, "got {t}");
        // The default (identity-consistent) tau decomposes exactly:
        // vtc = travel time + energy / P^r.
        let uav = table_uav();
        for (d, v) in [(37.0, 4.2), (910.0, 17.3), (12_000.0, 24.9)] {
            let vtc = flight_vtc(d, v, &uav).unwrap();
            let decomposed = d / v + flight_energy(d, v, &uav).unwrap() / uav.recharge_power_w;
            assert_relative_eq!(vtc, decomposed, max_relative = 1e-12);
        }
        // flight consistency: E(d, v) = d/v * P(v).
        let rotor = reference_rotor();
        let (psi, _) = derive_coefficients(&rotor, 100.0).unwrap();
        let mut uav2 = table_uav();
        uav2.psi = psi;
        for (d, v) in [(37.0, 4.2), (910.0, 17.3), (12_000.0, 24.9)] {
            let e = flight_energy(d, v, &uav2).unwrap();
            assert_relative_eq!(e, d / v * flight_power(v, &rotor).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn flight_convexity_on_grid() {
        // Second finite difference of both per-meter polynomials stays
        // positive across the admissible speed range.
        let uav = table_uav();
        let h = 0.05;
        for coeffs in [&uav.psi, &uav.tau] {
            let mut v = 0.5;
            while v + 2.0 * h <= uav.v_max_mps {
                let d2 = velocity_poly(coeffs, v) - 2.0 * velocity_poly(coeffs, v + h)
                    + velocity_poly(coeffs, v + 2.0 * h);
                assert!(d2 > 0.0, "second difference at {v}");
                v += 0.25;
            }
        }
    }

    #[test]
    fn instance_validation() {
        let ch = table_channel();
        let uav = table_uav();
        let station = Station {
            position: Position::new(0.0, 0.0),
        };
        let gt = |id, x, y| GroundTerminal {
            id,
            position: Position::new(x, y),
            data_bits: 1e9,
        };
        assert!(Instance::new(station.clone(), vec![], ch.clone(), uav.clone()).is_err());
        let dup = Instance::new(
            station.clone(),
            vec![gt(1, 5.0, 5.0), gt(2, 5.0, 5.0)],
            ch.clone(),
            uav.clone(),
        );
        assert!(matches!(dup, Err(ModelError::DuplicatePosition { .. })));
        let bad_ids = Instance::new(
            station.clone(),
            vec![gt(1, 1.0, 0.0), gt(3, 2.0, 0.0)],
            ch.clone(),
            uav.clone(),
        );
        assert!(matches!(bad_ids, Err(ModelError::BadTerminalId { .. })));
        let ok = Instance::new(
            station,
            vec![gt(1, 1.0, 0.0), gt(2, 2.0, 0.0)],
            ch,
            uav,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn instance_json_round_trip_with_units() {
        let text = r#"{
            "station": {"x": 0.0, "y": 0.0},
            "terminals": [
                {"id": 1, "x": 120.0, "y": -40.0, "data_bits": "1 Gbit"},
                {"id": 2, "x": -300.0, "y": 55.0, "data_bits": 5e8}
            ],
            "channel": {
                "bandwidth_hz": "2 MHz",
                "noise_power_w": "-110 dBm",
                "ref_gain": "-60 dB",
                "altitude_m": 100,
                "rate_threshold_bps": "15 Mbps"
            },
            "uav": {
                "psi": [9.2e-3, 16.6e-3, 79.9, 357.2],
                "tau": [0.9e-4, 1.6e-4, 1.8, 3.6],
                "hover_power_w": 165.0,
                "transmit_coeff": 4.2,
                "recharge_power_w": 100.0,
                "battery_capacity_j": 399600.0,
                "v_max_mps": 25.0
            }
        }"#;
        let inst: Instance = serde_json::from_str(text).unwrap();
        assert_eq!(inst.k(), 2);
        assert_eq!(inst.terminals[0].data_bits, 1e9);
        assert_eq!(inst.channel.noise_power_w, 1e-14);
        assert_eq!(inst.channel.ref_gain, 1e-6);
        assert_eq!(inst.channel.p_max_w, 0.5); // default
        let back = serde_json::to_string(&inst).unwrap();
        let reparsed: Instance = serde_json::from_str(&back).unwrap();
        assert_eq!(reparsed.channel.bandwidth_hz, 2e6);
    }

    #[test]
    fn uav_params_from_rotor_only() {
        let text = r#"{
            "rotor": {
                "p0_w": 79.9, "pi_w": 88.63, "u_tip_mps": 120.0, "v0_mps": 4.03,
                "d0": 0.6, "air_density": 1.225, "solidity": 0.05, "disc_area_m2": 0.503
            },
            "hover_power_w": 165.0,
            "transmit_coeff": 4.2,
            "recharge_power_w": 100.0,
            "battery_capacity_j": 399600.0,
            "v_max_mps": 25.0
        }"#;
        let uav: UavParams = serde_json::from_str(text).unwrap();
        assert_relative_eq!(uav.psi[2], 79.9, max_relative = 1e-12);
        assert_relative_eq!(uav.tau[2], 1.799, max_relative = 1e-12);
    }
}
