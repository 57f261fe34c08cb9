//! Drift terms `b`. Every kind is extended by zero to negative arguments.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftFlags {
    pub convex: bool,
    pub nondecreasing: bool,
    pub locally_lipschitz: bool,
}

/// A drift given by a closure. Flags are the caller's claim.
#[derive(Clone)]
pub struct CustomDrift {
    pub name: String,
    pub flags: DriftFlags,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomDrift {
    pub fn new(name: &str, flags: DriftFlags, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomDrift { name: name.to_string(), flags, f: Arc::new(f) }
    }
}

impl fmt::Debug for CustomDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDrift").field("name", &self.name).field("flags", &self.flags).finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    /// `b(s) = s`
    Linear,
    /// `b(s) = s^p`
    Power { p: f64 },
    /// `b(s) = s^p (ln s)^q` for `s >= 1`, zero below
    PowerLog { p: f64, q: f64 },
    /// `b(s) = s^p (ln(1 + s))^q`
    PowerLog1p { p: f64, q: f64 },
    /// `b(s) = min(s, cap)^p`, bounded
    Capped { p: f64, cap: f64 },
    /// Piecewise linear through `(s, b)` nodes with `s[0] = 0`, continued
    /// beyond the last node by the power law through the last two nodes.
    Table { s: Vec<f64>, b: Vec<f64> },
    #[serde(skip)]
    Custom(CustomDrift),
}

impl DriftSpec {
    pub fn power(p: f64) -> Self {
        DriftSpec::Power { p }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftSpec::Zero | DriftSpec::Linear | DriftSpec::Custom(_) => Ok(()),
            DriftSpec::Power { p } => ensure(*p > 0.0 && p.is_finite(), || format!("power exponent must be positive, got {p}")),
            DriftSpec::PowerLog { p, q } | DriftSpec::PowerLog1p { p, q } => ensure(*p > 0.0 && *q >= 0.0, || {
                format!("power-log drift needs p > 0 and q >= 0, got p = {p}, q = {q}")
            }),
            DriftSpec::Capped { p, cap } => ensure(*p > 0.0 && *cap > 0.0, || {
                format!("capped drift needs p > 0 and cap > 0, got p = {p}, cap = {cap}")
            }),
            DriftSpec::Table { s, b } => {
                ensure(s.len() >= 2 && s.len() == b.len(), || "table drift needs at least two (s, b) nodes".into())?;
                ensure(s[0] == 0.0, || "table drift must start at s = 0".into())?;
                ensure(s.windows(2).all(|w| w[1] > w[0]), || "table nodes must be strictly increasing".into())?;
                ensure(b.iter().all(|v| *v >= 0.0 && v.is_finite()), || "table values must be finite and nonnegative".into())?;
                let n = s.len();
                ensure(b[n - 1] > 0.0 && b[n - 2] > 0.0, || "the last two table values must be positive".into())
            }
        }
    }

    /// Solver precondition: nonnegative, nondecreasing and locally Lipschitz.
    pub fn validate_for_solver(&self) -> Result<()> {
        self.validate()?;
        let f = self.flags();
        if !(f.nondecreasing && f.locally_lipschitz) {
            return invalid(format!("drift {} must be nondecreasing and locally Lipschitz", self.describe()));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return match self {
                DriftSpec::Table { b, .. } if s == 0.0 => b[0],
                DriftSpec::Custom(c) if s == 0.0 => (c.f)(0.0).max(0.0),
                _ => 0.0,
            };
        }
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Linear => s,
            DriftSpec::Power { p } => pow(s, *p),
            DriftSpec::PowerLog { p, q } => {
                if s <= 1.0 {
                    0.0
                } else {
                    pow(s, *p) * pow(s.ln(), *q)
                }
            }
            DriftSpec::PowerLog1p { p, q } => pow(s, *p) * pow(s.ln_1p(), *q),
            DriftSpec::Capped { p, cap } => pow(s.min(*cap), *p),
            DriftSpec::Table { s: xs, b } => table_eval(xs, b, s),
            DriftSpec::Custom(c) => (c.f)(s),
        }
    }

    pub fn flags(&self) -> DriftFlags {
        let all = DriftFlags { convex: true, nondecreasing: true, locally_lipschitz: true };
        match self {
            DriftSpec::Zero | DriftSpec::Linear => all,
            DriftSpec::Power { p } => DriftFlags { convex: *p >= 1.0, nondecreasing: true, locally_lipschitz: *p >= 1.0 },
            // (ln s)^q vanishes at s = 1 like (s - 1)^q
            DriftSpec::PowerLog { p, q } => {
                let regular = *p >= 1.0 && *q >= 1.0;
                DriftFlags { convex: regular, nondecreasing: true, locally_lipschitz: regular }
            }
            // s^p (ln(1+s))^q behaves like s^(p+q) at the origin
            DriftSpec::PowerLog1p { p, q } => {
                DriftFlags { convex: *p >= 1.0, nondecreasing: true, locally_lipschitz: *p + *q >= 1.0 }
            }
            DriftSpec::Capped { p, .. } => DriftFlags { convex: false, nondecreasing: true, locally_lipschitz: *p >= 1.0 },
            DriftSpec::Table { s, b } => {
                let nondecreasing = b.windows(2).all(|w| w[1] >= w[0]);
                let slopes: Vec<f64> = s.windows(2).zip(b.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
                let n = s.len();
                let tail_p = (b[n - 1] / b[n - 2]).ln() / (s[n - 1] / s[n - 2]).ln();
                let convex = b[0] == 0.0 && slopes.windows(2).all(|w| w[1] >= w[0]) && tail_p >= 1.0;
                DriftFlags { convex, nondecreasing, locally_lipschitz: true }
            }
            DriftSpec::Custom(c) => c.flags,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriftSpec::Zero)
    }

    pub fn describe(&self) -> String {
        match self {
            DriftSpec::Zero => "0".into(),
            DriftSpec::Linear => "s".into(),
            DriftSpec::Power { p } => format!("s^{p}"),
            DriftSpec::PowerLog { p, q } => format!("s^{p} (ln s)^{q}"),
            DriftSpec::PowerLog1p { p, q } => format!("s^{p} (ln(1+s))^{q}"),
            DriftSpec::Capped { p, cap } => format!("min(s, {cap})^{p}"),
            DriftSpec::Table { s, .. } => format!("table({} nodes)", s.len()),
            DriftSpec::Custom(c) => c.name.clone(),
        }
    }
}

fn pow(s: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        s
    } else if p == 2.0 {
        s * s
    } else {
        s.powf(p)
    }
}

fn table_eval(xs: &[f64], b: &[f64], s: f64) -> f64 {
    let n = xs.len();
    if s >= xs[n - 1] {
        let p = (b[n - 1] / b[n - 2]).ln() / (xs[n - 1] / xs[n - 2]).ln();
        return b[n - 1] * (s / xs[n - 1]).powf(p);
    }
    let j = xs.partition_point(|x| *x <= s) - 1;
    let w = (s - xs[j]) / (xs[j + 1] - xs[j]);
    b[j] + w * (b[j + 1] - b[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_differences_nonnegative(d: &DriftSpec, lo: f64, hi: f64) -> bool {
        let n = 2000;
        let h = (hi - lo) / n as f64;
        (1..n).all(|j| {
            let s = lo + j as f64 * h;
            let dd = d.eval(s + h) - 2.0 * d.eval(s) + d.eval(s - h);
            dd >= -1e-12 * d.eval(s + h).max(1.0)
        })
    }

    #[test]
    fn zero_extension_and_values() {
        let d = DriftSpec::power(2.0);
        assert_eq!(d.eval(-3.0), 0.0);
        assert_eq!(d.eval(3.0), 9.0);
        assert_eq!(DriftSpec::PowerLog { p: 1.0, q: 2.0 }.eval(std::f64::consts::E), std::f64::consts::E);
        assert_eq!(DriftSpec::Capped { p: 2.0, cap: 3.0 }.eval(10.0), 9.0);
        assert_eq!(DriftSpec::Linear.eval(f64::NAN), 0.0);
    }

    #[test]
    fn convexity_flags_match_second_differences() {
        for d in [
            DriftSpec::power(1.5),
            DriftSpec::power(3.0),
            DriftSpec::PowerLog { p: 1.0, q: 2.0 },
            DriftSpec::PowerLog { p: 2.0, q: 1.0 },
            DriftSpec::PowerLog1p { p: 1.0, q: 1.0 },
            DriftSpec::PowerLog1p { p: 1.0, q: 2.5 },
        ] {
            assert!(d.flags().convex, "{}", d.describe());
            assert!(second_differences_nonnegative(&d, -2.0, 20.0), "{}", d.describe());
        }
        let not = [DriftSpec::power(0.5), DriftSpec::Capped { p: 2.0, cap: 3.0 }, DriftSpec::PowerLog { p: 2.0, q: 0.5 }];
        for d in not {
            assert!(!d.flags().convex, "{}", d.describe());
            assert!(!second_differences_nonnegative(&d, 1e-3, 20.0), "{}", d.describe());
        }
    }

    #[test]
    fn table_interpolates_and_extrapolates() {
        let d = DriftSpec::Table { s: vec![0.0, 1.0, 2.0], b: vec![0.0, 1.0, 4.0] };
        d.validate().unwrap();
        assert_eq!(d.eval(1.5), 2.5);
        assert!((d.eval(4.0) - 16.0).abs() < 1e-12);
        assert!(d.flags().convex && d.flags().nondecreasing);
        assert!(DriftSpec::Table { s: vec![1.0, 2.0], b: vec![1.0, 2.0] }.validate().is_err());
    }

    #[test]
    fn serde_roundtrip_and_unknown_fields() {
        let d: DriftSpec = serde_json::from_str(r#"{"kind":"power_log","p":1.0,"q":2.0}"#).unwrap();
        assert!(matches!(d, DriftSpec::PowerLog { .. }));
        assert!(serde_json::from_str::<DriftSpec>(r#"{"kind":"power","p":2.0,"x":1}"#).is_err());
        let c = DriftSpec::Custom(CustomDrift::new("f", DriftSpec::Zero.flags(), |s| s));
        assert!(serde_json::to_string(&c).is_err());
    }

    #[test]
    fn solver_precondition() {
        assert!(DriftSpec::power(2.0).validate_for_solver().is_ok());
        assert!(DriftSpec::power(0.5).validate_for_solver().is_err());
    }
}
