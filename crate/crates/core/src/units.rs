//! Internal unit system and conversion from SI quantities.
//!
//! Everything inside the crate works in atomic mass units, micrometres and
//! microseconds. Energies are then `amu·µm²/µs²` (about 1.66e-27 J), which keeps
//! the magnitudes that appear in two-ion problems close to unity instead of the
//! 1e-28 J scale of SI.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// CODATA 2018 values, SI.
pub mod codata {
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
}

const METRE: f64 = 1e6; // internal lengths per metre
const SECOND: f64 = 1e6; // internal times per second

/// One internal energy unit in joules.
pub const ENERGY_UNIT_JOULE: f64 = codata::ATOMIC_MASS_UNIT;

/// Physical constants expressed in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    /// `e²/(4πε₀)` in energy·length.
    pub coulomb: f64,
    /// Reduced Planck constant in energy·time.
    pub hbar: f64,
    /// Mass of one internal mass unit in kilograms.
    pub amu_kg: f64,
}

impl PhysConstants {
    pub fn codata() -> Self {
        use codata::*;
        let cc_si = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
            / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);
        Self {
            coulomb: cc_si / (ENERGY_UNIT_JOULE / METRE),
            hbar: HBAR / (ENERGY_UNIT_JOULE / SECOND),
            amu_kg: ATOMIC_MASS_UNIT,
        }
    }
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self::codata()
    }
}

/// Physical dimension of a configured quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Mass,
    Time,
    Frequency,
    Energy,
    /// Coefficient of `x⁴` in a potential (energy/length⁴).
    Quartic,
    /// Homogeneous electric field acting on a singly charged ion.
    Field,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Energy => "energy",
            Dimension::Quartic => "quartic coefficient",
            Dimension::Field => "electric field",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("cannot parse quantity {0:?}: expected \"<number> <unit>\"")]
    Malformed(String),
    #[error("unknown unit {unit:?} for a {expected} quantity")]
    UnknownUnit { unit: String, expected: Dimension },
    #[error(
        "quantity {0:?} is expressed in critical distances but no critical distance is known here"
    )]
    NoCriticalDistance(String),
}

/// Scale factor from one unit of `unit` to internal units, if `unit` has dimension `dim`.
fn factor(unit: &str, dim: Dimension) -> Option<f64> {
    use Dimension::*;
    let e_unit = ENERGY_UNIT_JOULE;
    let f = match (dim, unit) {
        (Length, "m") => METRE,
        (Length, "mm") => METRE * 1e-3,
        (Length, "um" | "µm" | "micron") => 1.0,
        (Length, "nm") => 1e-3,
        (Mass, "amu" | "u" | "Da") => 1.0,
        (Mass, "kg") => 1.0 / codata::ATOMIC_MASS_UNIT,
        (Time, "s") => SECOND,
        (Time, "ms") => 1e3,
        (Time, "us" | "µs") => 1.0,
        (Time, "ns") => 1e-3,
        (Frequency, "Hz") => 1.0 / SECOND,
        (Frequency, "kHz") => 1e3 / SECOND,
        (Frequency, "MHz") => 1.0,
        (Energy, "J") => 1.0 / e_unit,
        (Energy, "eV") => codata::ELEMENTARY_CHARGE / e_unit,
        (Quartic, "N/m^3" | "N/m3" | "J/m^4" | "J/m4") => 1.0 / e_unit / METRE.powi(4),
        // eE for a singly charged ion, in internal force units (energy/length).
        (Field, "V/m") => codata::ELEMENTARY_CHARGE / (e_unit * METRE),
        (Dimensionless, "" | "1") => 1.0,
        _ => return None,
    };
    Some(f)
}

/// Splits `"0.85e-3 N/m^3"` into its number and unit.
fn split(text: &str) -> Result<(f64, &str), UnitError> {
    let trimmed = text.trim();
    let (num, unit) = match trimmed.find(char::is_whitespace) {
        Some(i) => (&trimmed[..i], trimmed[i..].trim()),
        None => (trimmed, ""),
    };
    let value: f64 = num
        .parse()
        .map_err(|_| UnitError::Malformed(text.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::Malformed(text.to_string()));
    }
    Ok((value, unit))
}

/// Parses a quantity with an explicit unit into internal units.
///
/// Lengths may also be given as multiples of the critical distance (`"1.1 d_c"`);
/// those need `critical_distance` to be known.
pub fn parse_quantity(
    text: &str,
    dim: Dimension,
    critical_distance: Option<f64>,
) -> Result<f64, UnitError> {
    let (value, unit) = split(text)?;
    if dim == Dimension::Length && matches!(unit, "d_c" | "dc") {
        return critical_distance
            .map(|dc| value * dc)
            .ok_or_else(|| UnitError::NoCriticalDistance(text.to_string()));
    }
    factor(unit, dim)
        .map(|f| value * f)
        .ok_or_else(|| UnitError::UnknownUnit {
            unit: unit.to_string(),
            expected: dim,
        })
}

/// Converts an internal value back into the SI base unit of `dim`.
pub fn to_si(value: f64, dim: Dimension) -> f64 {
    let unit = match dim {
        Dimension::Length => "m",
        Dimension::Mass => "kg",
        Dimension::Time => "s",
        Dimension::Frequency => "Hz",
        Dimension::Energy => "J",
        Dimension::Quartic => "N/m^3",
        Dimension::Field => "V/m",
        Dimension::Dimensionless => "",
    };
    value / factor(unit, dim).expect("SI base unit is always known")
}

/// Converts an SI value of dimension `dim` into internal units.
pub fn from_si(value: f64, dim: Dimension) -> f64 {
    value / to_si(1.0, dim)
}

/// Human-readable description of the internal unit system, embedded in outputs.
pub const UNIT_SYSTEM: &str = "mass=amu length=um time=us energy=amu*um^2/us^2";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_have_expected_magnitude() {
        let c = PhysConstants::codata();
        assert!(
            (c.coulomb - 1.389_35e5).abs() / 1.389e5 < 1e-4,
            "{}",
            c.coulomb
        );
        assert!((c.hbar - 6.3508e-2).abs() / 6.35e-2 < 1e-4, "{}", c.hbar);
    }

    #[test]
    fn micrometre_is_identity() {
        assert_eq!(
            parse_quantity("70.1 um", Dimension::Length, None).unwrap(),
            70.1
        );
    }

    #[test]
    fn quartic_coefficient_conversion() {
        // 0.85e-3 J/m^4 / (1.66053906660e-27 J / (1e6 um)^4) computed by hand.
        let expected = 0.85e-3 * 1e-24 / 1.660_539_066_60e-27;
        let v = parse_quantity("0.85e-3 N/m^3", Dimension::Quartic, None).unwrap();
        assert!((v - expected).abs() / expected < 1e-14);
        assert!((v - 0.5119).abs() < 1e-3);
    }

    #[test]
    fn critical_distance_multiples() {
        let v = parse_quantity("1.1 d_c", Dimension::Length, Some(14.0)).unwrap();
        assert!((v - 15.4).abs() < 1e-12);
        assert!(matches!(
            parse_quantity("1.1 d_c", Dimension::Length, None),
            Err(UnitError::NoCriticalDistance(_))
        ));
    }

    #[test]
    fn bad_units_are_rejected() {
        assert!(matches!(
            parse_quantity("3 furlong", Dimension::Length, None),
            Err(UnitError::UnknownUnit { .. })
        ));
        assert!(matches!(
            parse_quantity("abc um", Dimension::Length, None),
            Err(UnitError::Malformed(_))
        ));
        // A mass unit is not a length unit.
        assert!(parse_quantity("3 amu", Dimension::Length, None).is_err());
    }

    #[test]
    fn si_round_trip() {
        for (v, dim) in [
            (0.85e-3, Dimension::Quartic),
            (70.1e-6, Dimension::Length),
            (6.64e-26, Dimension::Mass),
            (14.2e-6, Dimension::Time),
            (1.0, Dimension::Field),
            (1e-28, Dimension::Energy),
        ] {
            let back = to_si(from_si(v, dim), dim);
            assert!((back - v).abs() / v < 1e-12, "{dim}: {v} -> {back}");
        }
    }
}
