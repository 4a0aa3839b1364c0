//! Central tolerance table with per-job overrides.

use std::collections::BTreeMap;

use crate::CliError;

/// Default residual thresholds by check name.
pub const DEFAULTS: &[(&str, f64)] = &[
    ("zero-curvature", 1e-5),
    ("frame-group", 1e-6),
    ("cross-order", 1e-5),
    ("forms-relative", 1e-3),
    ("area-integrand", 1e-3),
    ("sine-gordon", 1e-7),
    ("kink-fit", 1e-5),
    ("transformed-equation", 1e-6),
    ("eliminant", 1e-5),
    ("gw", 1e-5),
    ("sigma", 1e-5),
    ("sigma-forced", 1e-4),
    ("conservation", 1e-6),
    ("current", 1e-4),
    ("p-equation", 1e-4),
    ("closed-form", 1e-6),
    ("j-identity", 1e-6),
    ("path-independence", 1e-6),
    ("mean-curvature-std", 1e-3),
    ("conformal", 1e-4),
    ("gaussian-vs-p", 1e-2),
    ("quartic", 1e-4),
    ("quartic-fraction", 0.99),
    ("landau-lifshitz", 1e-5),
    ("landau-lifshitz-forced", 1e-4),
    ("spin-algebra", 1e-12),
    ("curvature", 1e-4),
    ("mainardi-codazzi", 1e-5),
    ("pseudospherical", 1e-4),
    ("cocycle-identity", 1e-12),
    ("cocycle-on-shell", 1e-4),
    ("sl2", 1e-12),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULTS.iter().copied().collect())
    }
}

impl Tolerances {
    /// Defaults with `overrides` applied; unknown names and non-positive or
    /// non-finite values are rejected.
    pub fn with_overrides(overrides: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        let mut t = Self::default();
        for (name, &value) in overrides {
            let slot = t
                .0
                .iter_mut()
                .find(|(k, _)| **k == name.as_str())
                .map(|(_, v)| v)
                .ok_or_else(|| CliError::Config(format!("unknown tolerance '{name}'")))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::Config(format!("tolerance '{name}' must be positive, got {value}")));
            }
            *slot = value;
        }
        Ok(t)
    }

    pub fn get(&self, name: &str) -> f64 {
        *self.0.get(name).unwrap_or_else(|| panic!("no tolerance named {name}"))
    }
}

/// Parses `name=value`.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = value.trim().parse().map_err(|e| format!("bad value in '{s}': {e}"))?;
    Ok((name.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_and_unknown_names_fail() {
        let mut o = BTreeMap::new();
        o.insert("gw".to_string(), 1e-3);
        assert_eq!(Tolerances::with_overrides(&o).unwrap().get("gw"), 1e-3);
        o.insert("nope".to_string(), 1.0);
        assert!(Tolerances::with_overrides(&o).is_err());
    }

    #[test]
    fn parse_name_value() {
        assert_eq!(parse_override("sigma=2e-5").unwrap(), ("sigma".to_string(), 2e-5));
        assert!(parse_override("sigma").is_err());
        assert!(parse_override("sigma=x").is_err());
    }
}
