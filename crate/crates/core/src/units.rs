//! Unit-suffixed quantity parsing.
//!
//! Grammar (whitespace between number and unit is allowed):
//!
//! ```text
//! quantity := number [prefix] unit | number
//! prefix   := "p" | "n" | "u" | "µ" | "μ" | "m" | "k" | "M" | "G"
//! unit     := "T" | "s" | "Hz" | "eV" | "K" | "A" | "m" | "V" | "W" | "Ohm" | "Ω"
//! ```
//!
//! A bare number is taken in the SI base unit of the expected dimension
//! (eV for energies). Examples: `5T`, `100us`, `0.01mT`, `200nm`, `1meV`, `30GHz`.

use crate::constants::CONSTANTS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Field,
    Time,
    Frequency,
    Energy,
    Temperature,
    Current,
    Length,
    Voltage,
    Power,
    Resistance,
    /// Energy given either in eV or as an equivalent frequency (E = h f).
    EnergyOrFrequency,
}

impl Dimension {
    fn accepts(self, unit: &str) -> bool {
        match self {
            Dimension::Field => unit == "T",
            Dimension::Time => unit == "s",
            Dimension::Frequency => unit == "Hz",
            Dimension::Energy => unit == "eV",
            Dimension::Temperature => unit == "K",
            Dimension::Current => unit == "A",
            Dimension::Length => unit == "m",
            Dimension::Voltage => unit == "V",
            Dimension::Power => unit == "W",
            Dimension::Resistance => unit == "Ohm" || unit == "Ω",
            Dimension::EnergyOrFrequency => unit == "eV" || unit == "Hz",
        }
    }
}

// Longest suffixes first so "Hz" is not read as a prefix plus "z".
const UNITS: [&str; 11] = ["Ohm", "Hz", "eV", "Ω", "T", "s", "K", "A", "m", "V", "W"];

/// Decimal exponent of an SI prefix.
fn prefix_exponent(prefix: &str) -> Option<i32> {
    Some(match prefix {
        "" => 0,
        "p" => -12,
        "n" => -9,
        "u" | "µ" | "μ" => -6,
        "m" => -3,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        _ => return None,
    })
}

fn bad(input: &str, reason: impl Into<String>) -> Error {
    Error::Quantity {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Parse a unit-suffixed quantity into the internal unit of `dim`.
pub fn parse_quantity(input: &str, dim: Dimension) -> Result<f64> {
    let text = input.trim();
    if text.is_empty() {
        return Err(bad(input, "empty"));
    }
    if let Ok(v) = text.parse::<f64>() {
        return Ok(v);
    }
    let unit = UNITS
        .iter()
        .find(|u| text.ends_with(*u))
        .ok_or_else(|| bad(input, "missing or unknown unit"))?;
    if !dim.accepts(unit) {
        return Err(bad(input, format!("unit `{unit}` does not match {dim:?}")));
    }
    let head = text[..text.len() - unit.len()].trim_end();
    let (number, prefix) = split_prefix(head);
    let exponent = prefix_exponent(prefix).ok_or_else(|| bad(input, "unknown prefix"))?;
    let number = number.trim();
    let value: f64 = number
        .parse()
        .map_err(|_| bad(input, format!("`{number}` is not a number")))?;
    // Shift the decimal exponent in text so "10us" rounds like the literal 10e-6.
    let mut si = if value.is_finite() {
        let (mantissa, e) = match number.find(['e', 'E']) {
            Some(i) => (&number[..i], number[i + 1..].parse::<i32>().unwrap_or(0)),
            None => (number, 0),
        };
        format!("{mantissa}e{}", e + exponent).parse().unwrap_or(value * 10f64.powi(exponent))
    } else {
        value
    };
    if dim == Dimension::EnergyOrFrequency && *unit == "Hz" {
        si *= CONSTANTS.h;
    }
    Ok(si)
}

fn split_prefix(head: &str) -> (&str, &str) {
    if head.parse::<f64>().is_ok() {
        return (head, "");
    }
    match head.char_indices().last() {
        Some((idx, c)) if !c.is_ascii_digit() && c != '.' => (&head[..idx], &head[idx..]),
        _ => (head, ""),
    }
}

/// Serde helpers accepting either a bare number (SI) or a unit-suffixed string.
pub mod serde_quantity {
    use super::{parse_quantity, Dimension};
    use serde::de::{self, Deserializer};
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    fn read<'de, D: Deserializer<'de>>(d: D, dim: Dimension) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(s) => parse_quantity(&s, dim).map_err(de::Error::custom),
        }
    }

    fn read_opt<'de, D: Deserializer<'de>>(d: D, dim: Dimension) -> Result<Option<f64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Number(v)) => Ok(Some(v)),
            Some(Raw::Text(s)) => parse_quantity(&s, dim).map(Some).map_err(de::Error::custom),
        }
    }

    macro_rules! dimension_module {
        ($name:ident, $dim:expr) => {
            pub mod $name {
                use super::*;
                pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                    read(d, $dim)
                }
                pub mod option {
                    use super::super::*;
                    pub fn deserialize<'de, D: Deserializer<'de>>(
                        d: D,
                    ) -> Result<Option<f64>, D::Error> {
                        read_opt(d, $dim)
                    }
                }
            }
        };
    }

    dimension_module!(field, Dimension::Field);
    dimension_module!(time, Dimension::Time);
    dimension_module!(frequency, Dimension::Frequency);
    dimension_module!(energy, Dimension::Energy);
    dimension_module!(temperature, Dimension::Temperature);
    dimension_module!(current, Dimension::Current);
    dimension_module!(length, Dimension::Length);
    dimension_module!(voltage, Dimension::Voltage);
    dimension_module!(power, Dimension::Power);
    dimension_module!(resistance, Dimension::Resistance);
    dimension_module!(energy_or_frequency, Dimension::EnergyOrFrequency);
}
