//! Finite-time blowup detection on an escalating ladder of levels.
//!
//! A path is declared blown up when its sup-norm crosses the top rung and the
//! times between successive rung crossings agree, within a factor of 3, with
//! `(1/c) int_{r_k}^{r_{k+1}} ds/b(s)`, the time the ODE `z' = c b(z)` needs.

use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{ensure, Result};
use crate::osgood::{osgood_integral, osgood_segment, Classification};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Alive,
    BlownUp { t_blow: f64 },
    HorizonReached,
    Unresolved { reason: String },
}

impl PathStatus {
    pub fn is_blown_up(&self) -> bool {
        matches!(self, PathStatus::BlownUp { .. })
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(self, PathStatus::Unresolved { .. })
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            PathStatus::BlownUp { t_blow } => Some(*t_blow),
            _ => None,
        }
    }
}

pub const DEFAULT_LADDER: [f64; 3] = [1e3, 1e6, 1e9];
/// Allowed ratio between observed and predicted rung-to-rung times.
pub const CONSISTENCY_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungCrossing {
    pub rung: f64,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct BlowupDetector {
    ladder: Vec<f64>,
    /// Predicted times between successive rungs.
    predicted: Vec<f64>,
    /// `(1/c) int_{top}^inf ds/b(s)`, infinite for drifts without explosion.
    remainder: f64,
    crossings: Vec<RungCrossing>,
    last: Option<(f64, f64)>,
}

impl BlowupDetector {
    pub fn new(ladder: &[f64], drift: &DriftSpec, c: f64) -> Result<Self> {
        ensure(!ladder.is_empty(), || "ladder must have at least one rung".into())?;
        ensure(ladder[0] > 0.0, || "rungs must be positive".into())?;
        ensure(ladder.windows(2).all(|w| w[1] > w[0]), || "ladder must be strictly increasing".into())?;
        ensure(c > 0.0, || format!("c must be positive, got {c}"))?;
        let top = *ladder.last().expect("nonempty");
        let positive = drift.eval(ladder[0]) > 0.0;
        let predicted = if positive {
            ladder.windows(2).map(|w| osgood_segment(drift, w[0], w[1]).map(|v| v / c)).collect::<Result<Vec<_>>>()?
        } else {
            vec![f64::INFINITY; ladder.len() - 1]
        };
        let remainder = if positive {
            let v = osgood_integral(drift, top)?;
            if v.classification == Classification::Finite {
                v.value_or_lower_bound / c
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };
        Ok(BlowupDetector { ladder: ladder.to_vec(), predicted, remainder, crossings: Vec::new(), last: None })
    }

    /// Step size needed to resolve the fastest rung-to-rung passage:
    /// `1e-3` of the shortest predicted interval, infinite without one.
    pub fn resolution_floor(&self) -> f64 {
        1e-3 * self.predicted.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Errors when `resolution_floor` is below what double precision can
    /// add to times of order `horizon`.
    pub fn check_resolvable(&self, horizon: f64) -> Result<()> {
        let floor = self.resolution_floor();
        ensure(floor >= 16.0 * f64::EPSILON * horizon.max(1.0), || {
            format!(
                "rung passages of {:e} cannot be resolved at times up to {horizon}; lower the ladder (top rung {:e})",
                floor * 1e3,
                self.ladder.last().expect("nonempty")
            )
        })
    }

    pub fn crossings(&self) -> &[RungCrossing] {
        &self.crossings
    }

    pub fn predicted_intervals(&self) -> &[f64] {
        &self.predicted
    }

    /// Feeds the sup-norm at time `t`. Returns a terminal status once the top
    /// rung is crossed or the value stops being finite.
    pub fn observe(&mut self, t: f64, sup: f64) -> Option<PathStatus> {
        if !sup.is_finite() {
            return Some(PathStatus::Unresolved {
                reason: format!("non-finite sup-norm at t = {t} before the top rung"),
            });
        }
        let (t0, s0) = self.last.unwrap_or((t, sup));
        while self.crossings.len() < self.ladder.len() && sup >= self.ladder[self.crossings.len()] {
            let rung = self.ladder[self.crossings.len()];
            let tc = if s0 > 0.0 && sup > s0 && rung > s0 && t > t0 {
                t0 + (t - t0) * (rung / s0).ln() / (sup / s0).ln()
            } else {
                t
            };
            self.crossings.push(RungCrossing { rung, t: tc });
        }
        self.last = Some((t, sup));
        if self.crossings.len() == self.ladder.len() {
            Some(self.classify())
        } else {
            None
        }
    }

    fn classify(&self) -> PathStatus {
        if !self.remainder.is_finite() {
            return PathStatus::Unresolved {
                reason: "top rung crossed by a drift whose Osgood integral diverges".into(),
            };
        }
        for (k, w) in self.crossings.windows(2).enumerate() {
            let observed = w[1].t - w[0].t;
            let ratio = observed / self.predicted[k];
            if !(1.0 / CONSISTENCY_FACTOR..=CONSISTENCY_FACTOR).contains(&ratio) {
                return PathStatus::Unresolved {
                    reason: format!(
                        "rung {:e} to {:e}: observed {observed:e}, predicted {:e}",
                        w[0].rung, w[1].rung, self.predicted[k]
                    ),
                };
            }
        }
        let top = self.crossings.last().expect("top crossed");
        PathStatus::BlownUp { t_blow: top.t + self.remainder }
    }
}
