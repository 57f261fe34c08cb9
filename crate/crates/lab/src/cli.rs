//! Argument parsing helpers shared by the binary.

use blowup_core::drift::DriftSpec;

use crate::error::{LabError, Result};

/// Parses `zero`, `linear`, `power:P`, `powerlog:P:Q`, `powerlog1p:P:Q` or
/// `capped:P:CAP`.
pub fn parse_drift(s: &str) -> Result<DriftSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| LabError::Config(format!("drift '{s}' is missing a parameter")))?
            .parse::<f64>()
            .map_err(|e| LabError::Config(format!("drift '{s}': {e}")))
    };
    let d = match (parts[0], parts.len()) {
        ("zero", 1) => DriftSpec::Zero,
        ("linear", 1) => DriftSpec::Linear,
        ("power", 2) => DriftSpec::Power { p: num(1)? },
        ("powerlog", 3) => DriftSpec::PowerLog { p: num(1)?, q: num(2)? },
        ("powerlog1p", 3) => DriftSpec::PowerLog1p { p: num(1)?, q: num(2)? },
        ("capped", 3) => DriftSpec::Capped { p: num(1)?, cap: num(2)? },
        _ => return Err(LabError::Config(format!("unknown drift '{s}'"))),
    };
    d.validate()?;
    Ok(d)
}
