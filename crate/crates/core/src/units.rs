//! Unit-suffixed quantity parsing.
//!
//! Config and instance files may write quantities either as plain SI numbers
//! or as strings with a unit suffix ("-110 dBm", "2 MHz", "15 Mbps"). All
//! conversions happen once at load time; everything downstream is SI.

use serde::{Deserialize, Deserializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("cannot parse quantity from {0:?}")]
    Malformed(String),
    #[error("unknown unit {unit:?} in {input:?}")]
    UnknownUnit { input: String, unit: String },
}

/// Splits "-110 dBm" into (-110.0, "dBm"). A bare number gets an empty unit.
fn split_quantity(s: &str) -> Result<(f64, &str), UnitError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok((v, ""));
    }
    // Unit suffix = trailing run of letters and '/'.
    let split = s
        .rfind(|c: char| !(c.is_ascii_alphabetic() || c == '/'))
        .map(|i| i + c_len(s, i))
        .unwrap_or(0);
    let (num, unit) = s.split_at(split);
    let v = num
        .trim()
        .parse::<f64>()
        .map_err(|_| UnitError::Malformed(s.to_string()))?;
    Ok((v, unit.trim()))
}

fn c_len(s: &str, i: usize) -> usize {
    s[i..].chars().next().map(char::len_utf8).unwrap_or(0)
}

fn convert(value: f64, unit: &str, table: &[(&str, f64)], input: &str) -> Result<f64, UnitError> {
    if unit.is_empty() {
        return Ok(value);
    }
    // Tolerate a plural "s" ("1 Gbits").
    let trimmed = unit.strip_suffix('s').filter(|u| !u.is_empty());
    for &(name, scale) in table {
        if unit == name || trimmed == Some(name) {
            return Ok(value * scale);
        }
    }
    Err(UnitError::UnknownUnit {
        input: input.to_string(),
        unit: unit.to_string(),
    })
}

/// Power in watts; accepts W, mW, kW, dBm, dBW.
pub fn parse_power(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    match unit {
        "dBm" => Ok(10f64.powf((v - 30.0) / 10.0)),
        "dBW" => Ok(10f64.powf(v / 10.0)),
        _ => convert(v, unit, &[("W", 1.0), ("mW", 1e-3), ("kW", 1e3)], s),
    }
}

/// Dimensionless gain; accepts dB or a bare linear value.
pub fn parse_gain(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    match unit {
        "" => Ok(v),
        "dB" => Ok(10f64.powf(v / 10.0)),
        other => Err(UnitError::UnknownUnit {
            input: s.to_string(),
            unit: other.to_string(),
        }),
    }
}

/// Frequency in Hz; accepts Hz, kHz, MHz, GHz.
pub fn parse_frequency(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    convert(
        v,
        unit,
        &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
        s,
    )
}

/// Data rate in bit/s; accepts bps (or bit/s), kbps, Mbps, Gbps.
pub fn parse_rate(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    convert(
        v,
        unit,
        &[
            ("bps", 1.0),
            ("bit/s", 1.0),
            ("kbps", 1e3),
            ("Mbps", 1e6),
            ("Gbps", 1e9),
        ],
        s,
    )
}

/// Length in meters; accepts m, km.
pub fn parse_length(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    convert(v, unit, &[("m", 1.0), ("km", 1e3)], s)
}

/// Energy in joules; accepts J, kJ, MJ, Wh, kWh.
pub fn parse_energy(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    convert(
        v,
        unit,
        &[
            ("J", 1.0),
            ("kJ", 1e3),
            ("MJ", 1e6),
            ("Wh", 3600.0),
            ("kWh", 3.6e6),
        ],
        s,
    )
}

/// Velocity in m/s; accepts m/s, mps, km/h.
pub fn parse_velocity(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    convert(
        v,
        unit,
        &[("m/s", 1.0), ("mps", 1.0), ("km/h", 1.0 / 3.6)],
        s,
    )
}

/// Data volume in bits; accepts bit, kbit, Mbit, Gbit (plural tolerated).
pub fn parse_bits(s: &str) -> Result<f64, UnitError> {
    let (v, unit) = split_quantity(s)?;
    convert(
        v,
        unit,
        &[("bit", 1.0), ("kbit", 1e3), ("Mbit", 1e6), ("Gbit", 1e9)],
        s,
    )
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(f64),
    Text(String),
}

fn de_with<'de, D>(d: D, parse: fn(&str) -> Result<f64, UnitError>) -> Result<f64, D::Error>
where
    D: Deserializer<'de>,
{
    match NumOrText::deserialize(d)? {
        NumOrText::Num(v) => Ok(v),
        NumOrText::Text(s) => parse(&s).map_err(serde::de::Error::custom),
    }
}

pub fn de_power<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_power)
}

pub fn de_gain<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_gain)
}

pub fn de_frequency<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_frequency)
}

pub fn de_rate<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_rate)
}

pub fn de_length<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_length)
}

pub fn de_energy<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_energy)
}

pub fn de_velocity<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_velocity)
}

pub fn de_bits<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    de_with(d, parse_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_floor_in_dbm() {
        let w = parse_power("-110 dBm").unwrap();
        assert!((w - 1e-14).abs() < 1e-28, "got {w}");
    }

    #[test]
    fn reference_gain_in_db() {
        let g = parse_gain("-60 dB").unwrap();
        assert!((g - 1e-6).abs() < 1e-20);
    }

    #[test]
    fn bandwidth_and_rate() {
        assert_eq!(parse_frequency("2 MHz").unwrap(), 2e6);
        assert_eq!(parse_rate("15 Mbps").unwrap(), 1.5e7);
        assert_eq!(parse_bits("1 Gbits").unwrap(), 1e9);
    }

    #[test]
    fn bare_numbers_pass_through() {
        assert_eq!(parse_power("0.5").unwrap(), 0.5);
        assert_eq!(parse_frequency("2e6").unwrap(), 2e6);
    }

    #[test]
    fn no_space_suffix() {
        assert_eq!(parse_power("-110dBm").unwrap(), parse_power("-110 dBm").unwrap());
        assert_eq!(parse_velocity("25m/s").unwrap(), 25.0);
    }

    #[test]
    fn rejects_unknown_unit() {
        assert!(matches!(
            parse_power("3 parsec"),
            Err(UnitError::UnknownUnit { .. })
        ));
        assert!(parse_power("abc").is_err());
    }
}
