//! Quantity parsing for configuration files. Every dimensioned value must
//! carry an explicit unit suffix; the frequency convention decides whether
//! rate numbers are read as cycles (×2π) or as already-angular values.
//!
//! Internal units after resolution: rad/µs for rates and frequencies, µs for
//! times.

use serde::Serialize;

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Numbers are ordinary frequencies f; internally ω = 2πf.
    DividedBy2Pi,
    /// Numbers are angular rates already.
    Angular,
}

impl Convention {
    pub fn parse(s: &str) -> Result<Self, ScenarioError> {
        match s {
            "divided_by_2pi" => Ok(Self::DividedBy2Pi),
            "angular" => Ok(Self::Angular),
            other => Err(ScenarioError::BadValue {
                key: "frequency_convention".into(),
                reason: format!(
                    "expected \"divided_by_2pi\" or \"angular\", got \"{other}\""
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Rates and frequencies; resolved to rad/µs.
    Frequency,
    /// Durations; resolved to µs.
    Time,
    /// Plain numbers.
    Dimensionless,
    /// Non-negative integers.
    Count,
}

impl Kind {
    pub fn unit_label(self) -> &'static str {
        match self {
            Kind::Frequency => "rad/us",
            Kind::Time => "us",
            Kind::Dimensionless | Kind::Count => "1",
        }
    }
}

fn frequency_factor(unit: &str) -> Option<f64> {
    // 1 MHz (as a plain rate) is 1 rad/µs in angular units.
    match unit {
        "GHz" => Some(1e3),
        "MHz" => Some(1.0),
        "kHz" => Some(1e-3),
        "Hz" => Some(1e-6),
        _ => None,
    }
}

fn time_factor(unit: &str) -> Option<f64> {
    match unit {
        "s" => Some(1e6),
        "ms" => Some(1e3),
        "us" | "µs" => Some(1.0),
        "ns" => Some(1e-3),
        _ => None,
    }
}

fn split_quantity(raw: &str) -> Option<(f64, &str)> {
    let trimmed = raw.trim();
    let mut parts = trimmed.split_whitespace();
    let number: f64 = parts.next()?.parse().ok()?;
    let unit = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    Some((number, unit))
}

/// Parse one configuration value of the given kind. Dimensioned kinds demand
/// a string like `"2 MHz"`; bare numbers are only legal for dimensionless
/// and count values.
pub fn parse_quantity(
    key: &str,
    raw: &toml::Value,
    kind: Kind,
    convention: Convention,
) -> Result<f64, ScenarioError> {
    let missing_unit = || ScenarioError::MissingUnit {
        key: key.to_string(),
    };
    let bad = |reason: String| ScenarioError::BadValue {
        key: key.to_string(),
        reason,
    };
    match kind {
        Kind::Dimensionless => match raw {
            toml::Value::Float(v) => Ok(*v),
            toml::Value::Integer(v) => Ok(*v as f64),
            toml::Value::String(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("expected a plain number, got \"{s}\""))),
            other => Err(bad(format!("expected a number, got {other}"))),
        },
        Kind::Count => match raw {
            toml::Value::Integer(v) if *v >= 0 => Ok(*v as f64),
            other => Err(bad(format!("expected a non-negative integer, got {other}"))),
        },
        Kind::Frequency | Kind::Time => {
            let s = match raw {
                toml::Value::String(s) => s.as_str(),
                toml::Value::Float(_) | toml::Value::Integer(_) => {
                    return Err(missing_unit());
                }
                other => {
                    return Err(bad(format!("expected \"<number> <unit>\", got {other}")));
                }
            };
            let (number, unit) = split_quantity(s)
                .ok_or_else(|| bad(format!("expected \"<number> <unit>\", got \"{s}\"")))?;
            match kind {
                Kind::Frequency => {
                    let factor = frequency_factor(unit)
                        .ok_or_else(|| bad(format!("unknown frequency unit \"{unit}\"")))?;
                    let angular = match convention {
                        Convention::DividedBy2Pi => 2.0 * std::f64::consts::PI,
                        Convention::Angular => 1.0,
                    };
                    Ok(number * factor * angular)
                }
                Kind::Time => {
                    let factor = time_factor(unit)
                        .ok_or_else(|| bad(format!("unknown time unit \"{unit}\"")))?;
                    Ok(number * factor)
                }
                _ => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &str) -> toml::Value {
        toml::Value::String(v.to_string())
    }

    #[test]
    fn frequency_conventions() {
        let v = parse_quantity("kappa", &s("2 MHz"), Kind::Frequency, Convention::Angular)
            .unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        let v = parse_quantity(
            "kappa",
            &s("2 MHz"),
            Kind::Frequency,
            Convention::DividedBy2Pi,
        )
        .unwrap();
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let v = parse_quantity(
            "omega_c",
            &s("1 GHz"),
            Kind::Frequency,
            Convention::Angular,
        )
        .unwrap();
        assert!((v - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn times_and_counts() {
        let v = parse_quantity("t_final", &s("100 ns"), Kind::Time, Convention::Angular)
            .unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        let v = parse_quantity(
            "n_fock",
            &toml::Value::Integer(50),
            Kind::Count,
            Convention::Angular,
        )
        .unwrap();
        assert_eq!(v, 50.0);
    }

    #[test]
    fn missing_unit_is_a_hard_error() {
        let err = parse_quantity(
            "kappa",
            &toml::Value::Float(2.0),
            Kind::Frequency,
            Convention::Angular,
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::MissingUnit { ref key } if key == "kappa"));
    }

    #[test]
    fn unicode_microseconds_accepted() {
        let v = parse_quantity("t", &s("5 µs"), Kind::Time, Convention::Angular).unwrap();
        assert!((v - 5.0).abs() < 1e-15);
    }
}
