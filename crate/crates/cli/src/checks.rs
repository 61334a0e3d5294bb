//! Quantitative checks embedded in figure reports.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `<= 1e-12`.
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("<= {limit:e}"),
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!(">= {limit}"),
            passed: value >= limit,
        }
    }

    pub fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("{target} +- {tol:e}"),
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn equals(name: impl Into<String>, value: i64, target: i64) -> Self {
        Self {
            name: name.into(),
            value: value as f64,
            bound: format!("== {target}"),
            passed: value == target,
        }
    }

    pub fn holds(name: impl Into<String>, value: f64, passed: bool, bound: &str) -> Self {
        Self {
            name: name.into(),
            value,
            bound: bound.to_string(),
            passed,
        }
    }
}

/// Names of failed checks.
pub fn failures(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:e} (want {})", c.name, c.value, c.bound))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Check::at_most("a", 1e-13, 1e-12).passed);
        assert!(!Check::at_most("a", f64::NAN, 1e-12).passed);
        assert!(Check::at_least("b", 0.9995, 0.999).passed);
        assert!(!Check::near("c", 4.1, 4.0, 1e-9).passed);
        assert!(Check::equals("d", -3, -3).passed);
        let list = [
            Check::at_most("x", 2.0, 1.0),
            Check::at_least("y", 2.0, 1.0),
        ];
        assert_eq!(failures(&list).len(), 1);
        assert!(failures(&list)[0].starts_with("x = 2e0"));
    }
}
