//! Osgood integral `int_a^inf ds / b(s)`, the explosion time of `z' = c b(z)`
//! and the level-sequence check used in the whole-space argument.

use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{ensure, invalid, Error, Result};
use crate::quad::Tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Finite,
    Infinite,
    Inconclusive,
}

/// How the integral beyond the quadrature cutoff was handled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TailModel {
    /// `b ~ s^p (ln s)^q` known in closed form.
    Exact { p: f64, q: f64, cutoff: f64, tail: f64 },
    /// Log-log slope fitted on `[cutoff/4, cutoff]`.
    Fitted { slope: f64, cutoff: f64, tail: f64 },
    /// Bounded drift: the integral grows linearly.
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OsgoodVerdict {
    pub classification: Classification,
    /// The integral when finite; otherwise `int_a^S` for the largest cutoff `S`.
    pub value_or_lower_bound: f64,
    pub a: f64,
    pub tail_model: TailModel,
}

impl OsgoodVerdict {
    pub fn is_finite(&self) -> bool {
        self.classification == Classification::Finite
    }
}

/// Slope margin of the fitted tail classifier.
pub const SLOPE_MARGIN: f64 = 0.05;
/// Cutoff ladder of the fitted tail classifier, relative to `max(a, 1)`.
pub const CUTOFF_LADDER: [f64; 4] = [1e3, 1e6, 1e9, 1e12];

const QUAD_TOL: Tol = Tol::new(0.0, 1e-12);

/// `int_lo^hi ds / b(s)` by quadrature in `ln s`.
pub fn osgood_segment(drift: &DriftSpec, lo: f64, hi: f64) -> Result<f64> {
    ensure(lo > 0.0 && hi >= lo, || format!("need 0 < lo <= hi, got [{lo}, {hi}]"))?;
    if hi == lo {
        return Ok(0.0);
    }
    let (x0, x1) = (lo.ln(), hi.ln());
    // split into unit panels in ln s so each panel sees a smooth integrand
    let n = ((x1 - x0).ceil() as usize).clamp(1, 4000);
    let pts: Vec<f64> = (0..=n).map(|j| x0 + (x1 - x0) * j as f64 / n as f64).collect();
    let r = crate::quad::integrate_breaks(
        |x: f64| {
            let s = x.exp();
            s / drift.eval(s)
        },
        &pts,
        QUAD_TOL,
    )?;
    Ok(r.value)
}

/// Parametric tail exponents `(p, q)` of `b ~ s^p (ln s)^q`, when known.
fn exact_tail(drift: &DriftSpec) -> Option<(f64, f64)> {
    match drift {
        DriftSpec::Linear => Some((1.0, 0.0)),
        DriftSpec::Power { p } => Some((*p, 0.0)),
        DriftSpec::PowerLog { p, q } | DriftSpec::PowerLog1p { p, q } => Some((*p, *q)),
        DriftSpec::Table { s, b } => {
            let n = s.len();
            Some(((b[n - 1] / b[n - 2]).ln() / (s[n - 1] / s[n - 2]).ln(), 0.0))
        }
        _ => None,
    }
}

pub fn osgood_integral(drift: &DriftSpec, a: f64) -> Result<OsgoodVerdict> {
    drift.validate()?;
    ensure(a > 0.0 && a.is_finite(), || format!("lower limit must be positive, got {a}"))?;
    let ba = drift.eval(a);
    if !(ba > 0.0) {
        return invalid(format!("drift {} must be positive on [a, inf), b({a}) = {ba}", drift.describe()));
    }
    if let DriftSpec::Capped { .. } = drift {
        let s_max = a.max(1.0) * CUTOFF_LADDER[3];
        return Ok(OsgoodVerdict {
            classification: Classification::Infinite,
            value_or_lower_bound: osgood_segment(drift, a, s_max)?,
            a,
            tail_model: TailModel::Bounded,
        });
    }
    match exact_tail(drift) {
        Some((p, q)) => exact_verdict(drift, a, p, q),
        None => fitted_verdict(drift, a),
    }
}

fn exact_verdict(drift: &DriftSpec, a: f64, p: f64, q: f64) -> Result<OsgoodVerdict> {
    let finite = p > 1.0 || (p == 1.0 && q > 1.0);
    if !finite {
        let s_max = a.max(1.0) * CUTOFF_LADDER[3];
        return Ok(OsgoodVerdict {
            classification: Classification::Infinite,
            value_or_lower_bound: osgood_segment(drift, a, s_max)?,
            a,
            tail_model: TailModel::Exact { p, q, cutoff: s_max, tail: f64::INFINITY },
        });
    }
    // table drifts follow their power law exactly beyond the last node
    let base = match drift {
        DriftSpec::Table { s, .. } => s[s.len() - 1].max(a),
        _ => a.max(1.0),
    };
    let (cutoff, tail) = if p > 1.0 {
        // beyond S the ratio b(s)/(s^p (ln s)^q) is frozen; push S until the
        // tail S/(b(S)(p - 1)) is negligible
        let mut s = base * 1e3;
        loop {
            let tail = s / (drift.eval(s) * (p - 1.0));
            let head = osgood_segment(drift, a, s)?;
            if tail <= 1e-13 * head || s > 1e290 {
                break (s, tail);
            }
            s = (s * 1e6).min(1e300);
        }
    } else {
        // p = 1: int_S^inf ds/(s (ln s)^q) = (ln S)^(1-q)/(q - 1)
        let s = base * 1e12;
        (s, s.ln().powf(1.0 - q) / (q - 1.0))
    };
    let head = osgood_segment(drift, a, cutoff)?;
    Ok(OsgoodVerdict {
        classification: Classification::Finite,
        value_or_lower_bound: head + tail,
        a,
        tail_model: TailModel::Exact { p, q, cutoff, tail },
    })
}

/// Least-squares slope of `ln b` against `ln s` on `[s/4, s]`.
fn fitted_slope(drift: &DriftSpec, s: f64) -> f64 {
    let n = 16;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let x = (s / 4.0).ln() + 4f64.ln() * j as f64 / (n - 1) as f64;
        let y = drift.eval(x.exp()).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let nf = n as f64;
    (nf * sxy - sx * sy) / (nf * sxx - sx * sx)
}

/// Fitted slopes at successive cutoffs must agree to this before a verdict.
pub const SLOPE_STABILITY: f64 = 0.01;

fn fitted_verdict(drift: &DriftSpec, a: f64) -> Result<OsgoodVerdict> {
    let base = a.max(1.0);
    let mut prev: Option<f64> = None;
    let mut last = None;
    for factor in CUTOFF_LADDER {
        let s = base * factor;
        let slope = fitted_slope(drift, s);
        let head = osgood_segment(drift, a, s)?;
        // s ln s has local slope 1 + 1/ln s, so one slope alone is not enough
        let stable = prev.is_some_and(|p| (p - slope).abs() < SLOPE_STABILITY);
        let above = prev.is_some_and(|p| p > 1.0 + SLOPE_MARGIN) && slope > 1.0 + SLOPE_MARGIN;
        let below = prev.is_some_and(|p| p <= 1.0 - SLOPE_MARGIN) && slope <= 1.0 - SLOPE_MARGIN;
        if stable && above {
            let tail = s / (drift.eval(s) * (slope - 1.0));
            return Ok(OsgoodVerdict {
                classification: Classification::Finite,
                value_or_lower_bound: head + tail,
                a,
                tail_model: TailModel::Fitted { slope, cutoff: s, tail },
            });
        }
        if stable && below {
            return Ok(OsgoodVerdict {
                classification: Classification::Infinite,
                value_or_lower_bound: head,
                a,
                tail_model: TailModel::Fitted { slope, cutoff: s, tail: f64::INFINITY },
            });
        }
        prev = Some(slope);
        last = Some((slope, s, head));
    }
    let (slope, cutoff, head) = last.expect("nonempty ladder");
    Ok(OsgoodVerdict {
        classification: Classification::Inconclusive,
        value_or_lower_bound: head,
        a,
        tail_model: TailModel::Fitted { slope, cutoff, tail: f64::NAN },
    })
}

/// Explosion time `(1/c) int_{z0}^inf ds/b(s)` of `z' = c b(z)`, `z(0) = z0`.
pub fn ode_blowup_time(drift: &DriftSpec, z0: f64, c: f64) -> Result<f64> {
    ensure(z0 > 0.0 && c > 0.0, || format!("need z0 > 0 and c > 0, got z0 = {z0}, c = {c}"))?;
    if drift.is_zero() || !(drift.eval(z0) > 0.0) {
        return Ok(f64::INFINITY);
    }
    let v = osgood_integral(drift, z0)?;
    match v.classification {
        Classification::Finite => Ok(v.value_or_lower_bound / c),
        Classification::Infinite => Ok(f64::INFINITY),
        Classification::Inconclusive => Err(Error::NumericFailure {
            method: "osgood tail classification",
            residual: match v.tail_model {
                TailModel::Fitted { slope, .. } => slope - 1.0,
                _ => f64::NAN,
            },
        }),
    }
}

/// First time the RK4 solution of `z' = c b(z)`, `z(0) = z0` reaches `level`,
/// or infinity when it has not by `t_max`. Steps are `eps z/(c b(z))`; the
/// final step is bisected onto the level.
pub fn ode_level_crossing_time(drift: &DriftSpec, z0: f64, c: f64, level: f64, t_max: f64) -> Result<f64> {
    ensure(z0 > 0.0 && c > 0.0 && level > z0, || {
        format!("need 0 < z0 < level and c > 0, got z0 = {z0}, level = {level}, c = {c}")
    })?;
    let rhs = |z: f64| c * drift.eval(z);
    let rk4 = |z: f64, h: f64| {
        let k1 = rhs(z);
        let k2 = rhs(z + 0.5 * h * k1);
        let k3 = rhs(z + 0.5 * h * k2);
        let k4 = rhs(z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let eps = 1e-3;
    let (mut t, mut z) = (0.0, z0);
    while t < t_max {
        let rate = rhs(z);
        if !(rate > 0.0) {
            return Ok(f64::INFINITY);
        }
        let h = (eps * z / rate).min(t_max - t);
        let next = rk4(z, h);
        if next >= level {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rk4(z, mid) >= level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        t += h;
        z = next;
    }
    Ok(f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionReport {
    /// False when the drift is not Osgood; the remaining fields are then empty.
    pub available: bool,
    pub levels: Vec<f64>,
    /// `I_n = int_{L_n}^inf ds/b(s)`.
    pub integrals: Vec<f64>,
    pub decreasing: bool,
    /// 1-based index of the first level with `c I_n < 1` (beyond a relative
    /// margin of 1e-9).
    pub first_below_one: Option<usize>,
}

pub fn theorem13_contradiction_check(levels: &[f64], drift: &DriftSpec, c: f64) -> Result<ContradictionReport> {
    ensure(!levels.is_empty(), || "level sequence is empty".into())?;
    ensure(c > 0.0, || format!("c must be positive, got {c}"))?;
    ensure(levels.iter().all(|l| *l > 0.0 && l.is_finite()), || "levels must be positive".into())?;
    ensure(levels.windows(2).all(|w| w[1] > w[0]), || "levels must be strictly increasing".into())?;
    let first = osgood_integral(drift, levels[0])?;
    if first.classification != Classification::Finite {
        return Ok(ContradictionReport {
            available: false,
            levels: levels.to_vec(),
            integrals: vec![f64::INFINITY; levels.len()],
            decreasing: false,
            first_below_one: None,
        });
    }
    let mut integrals = vec![first.value_or_lower_bound];
    for l in &levels[1..] {
        integrals.push(osgood_integral(drift, *l)?.value_or_lower_bound);
    }
    let decreasing = integrals.windows(2).all(|w| w[1] < w[0]);
    // quadrature noise must not turn c I_n = 1 into a crossing
    let first_below_one = integrals.iter().position(|i| c * i < 1.0 - 1e-9).map(|k| k + 1);
    Ok(ContradictionReport { available: true, levels: levels.to_vec(), integrals, decreasing, first_below_one })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_drift_integral_is_one() {
        let v = osgood_integral(&DriftSpec::power(2.0), 1.0).unwrap();
        assert!(v.is_finite());
        assert!((v.value_or_lower_bound - 1.0).abs() < 1e-10, "{}", v.value_or_lower_bound);
    }

    #[test]
    fn linear_is_infinite_and_capped_is_bounded() {
        let v = osgood_integral(&DriftSpec::Linear, 1.0).unwrap();
        assert_eq!(v.classification, Classification::Infinite);
        assert!((v.value_or_lower_bound - 1e12f64.ln()).abs() < 1e-8);
        let capped = osgood_integral(&DriftSpec::Capped { p: 2.0, cap: 10.0 }, 1.0).unwrap();
        assert_eq!(capped.classification, Classification::Infinite);
    }

    #[test]
    fn nonpositive_drift_is_rejected() {
        assert!(osgood_integral(&DriftSpec::PowerLog { p: 1.0, q: 2.0 }, 1.0).is_err());
        assert!(osgood_integral(&DriftSpec::Zero, 1.0).is_err());
    }

    #[test]
    fn explosion_time_scales_like_one_over_c() {
        let b = DriftSpec::power(3.0);
        let t1 = ode_blowup_time(&b, 2.0, 1.0).unwrap();
        let t3 = ode_blowup_time(&b, 2.0, 3.0).unwrap();
        assert!((t1 - 1.0 / 8.0).abs() < 1e-10);
        assert!((t1 / t3 - 3.0).abs() < 1e-12);
        assert_eq!(ode_blowup_time(&DriftSpec::Zero, 1.0, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn contradiction_levels() {
        let levels: Vec<f64> = (1..=6).map(|n| n as f64).collect();
        let r = theorem13_contradiction_check(&levels, &DriftSpec::power(2.0), 1.0).unwrap();
        assert!(r.available && r.decreasing);
        assert_eq!(r.first_below_one, Some(2));
        for (n, i) in r.integrals.iter().enumerate() {
            assert!((i - 1.0 / (n + 1) as f64).abs() < 1e-10);
        }
        let lin = theorem13_contradiction_check(&levels, &DriftSpec::Linear, 1.0).unwrap();
        assert!(!lin.available);
        assert!(theorem13_contradiction_check(&[2.0, 1.0], &DriftSpec::power(2.0), 1.0).is_err());
    }
}
