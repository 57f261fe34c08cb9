//! Sum-of-exponentials representation of the Mittag-Leffler relaxation.
//!
//! `E_beta(-tau^beta) = int_0^inf exp(-r tau) K(r) dr` with the spectral
//! density of [`crate::special::MittagLeffler`]. The trapezoid rule in
//! `v = ln r` converges geometrically with rate set by the width of the strip
//! of analyticity, `min(pi (1 - beta)/beta, pi/2)`. Nodes below the slowest
//! relevant rate are merged into a rate-zero node, which turns the memory
//! kernel into a finite set of Markov states.

use std::f64::consts::PI;

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    pub beta: f64,
    /// Rates `r_j`, increasing; a leading zero rate carries the lumped
    /// low-frequency mass.
    pub rates: Vec<f64>,
    pub weights: Vec<f64>,
    /// Mass of the spectral density above the largest rate. It relaxes
    /// faster than any step the caller will take.
    pub fast_mass: f64,
}

impl ExpSum {
    /// Representation accurate to about `tol` for `tau` in `[tau_min, tau_max]`.
    ///
    /// Rates below `tol / tau_max` are merged into the rate-zero node; the
    /// largest rate is `45 / tau_min`.
    pub fn new(beta: f64, tau_min: f64, tau_max: f64, tol: f64) -> Result<Self> {
        ensure(beta > 0.0 && beta <= 1.0, || format!("beta must lie in (0, 1], got {beta}"))?;
        ensure(tau_min > 0.0 && tau_max >= tau_min, || {
            format!("need 0 < tau_min <= tau_max, got [{tau_min}, {tau_max}]")
        })?;
        ensure(tol > 0.0 && tol < 1.0, || format!("tol must lie in (0, 1), got {tol}"))?;
        if beta == 1.0 {
            return Ok(ExpSum { beta, rates: vec![1.0], weights: vec![1.0], fast_mass: 0.0 });
        }
        let (sb, cb) = ((beta * PI).sin(), (beta * PI).cos());
        let width = 0.9 * (PI * (1.0 - beta) / beta).min(PI / 2.0);
        let h = 2.0 * PI * width / (1.0 / tol).ln();
        let v_lo = (tol / tau_max).ln();
        let v_hi = (45.0 / tau_min).ln();
        let n = ((v_hi - v_lo) / h).ceil().max(1.0) as usize + 1;
        let v_end = v_lo + (n - 1) as f64 * h;
        // density in v = ln r is sin(beta pi)/pi * x/(x^2 + 2x cos(beta pi) + 1), x = r^beta
        let density = |v: f64| {
            let x = (beta * v).exp();
            sb / PI * x / (x * x + 2.0 * x * cb + 1.0)
        };
        // its integral from x = 0 to x = X
        let mass_below = |x: f64| (((x + cb) / sb).atan() - (cb / sb).atan()) / (PI * beta);
        let mut rates = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        rates.push(0.0);
        // Euler-Maclaurin end correction for the cut at v_lo, where the
        // density behaves like exp(beta v)
        let d_lo = density(v_lo);
        let em = h * h / 12.0 * beta * d_lo - h.powi(4) / 720.0 * beta.powi(3) * d_lo;
        weights.push(mass_below((beta * v_lo).exp()) - 0.5 * h * d_lo + em);
        for j in 0..n {
            let v = v_lo + j as f64 * h;
            rates.push(v.exp());
            weights.push(h * density(v));
        }
        weights[n] *= 0.5;
        let fast_mass = 1.0 - mass_below((beta * v_end).exp());
        Ok(ExpSum { beta, rates, weights, fast_mass })
    }

    /// `sum_j w_j exp(-r_j tau)`, approximating `E_beta(-tau^beta)`.
    pub fn eval(&self, tau: f64) -> f64 {
        let mut s: f64 = self.rates.iter().zip(&self.weights).map(|(r, w)| w * (-r * tau).exp()).sum();
        if tau == 0.0 {
            s += self.fast_mass;
        }
        s
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.fast_mass
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// `(1 - exp(-x))/x`, stable near zero.
pub fn phi1(x: f64) -> f64 {
    if x < 1e-5 {
        1.0 - 0.5 * x + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Markov states of one relaxation mode with rate scale `k`
/// (`E_beta(-mu t^beta)` uses `k = mu^(1/beta)`).
///
/// State `S_j` carries `w_j int exp(-k r_j (t - s)) f(ds)`; the mode value is
/// `sum_j S_j`. Forcing over a step is spread uniformly across the step.
#[derive(Debug, Clone)]
pub struct ModeStates {
    pub states: Vec<f64>,
}

/// Per-step coefficients of one mode for one step size.
#[derive(Debug, Clone)]
pub struct StepTable {
    pub dt: f64,
    pub decay: Vec<f64>,
    pub gain: Vec<f64>,
    /// Gain of the fast mass, which keeps no memory beyond one step.
    pub fast_gain: f64,
}

impl StepTable {
    pub fn new(sum: &ExpSum, k: f64, dt: f64) -> Self {
        let mut decay = Vec::with_capacity(sum.len());
        let mut gain = Vec::with_capacity(sum.len());
        for (r, w) in sum.rates.iter().zip(&sum.weights) {
            let x = k * r * dt;
            decay.push((-x).exp());
            gain.push(w * phi1(x));
        }
        // above the largest rate R the density is ~ r^(-1-beta), so the step
        // average of the fast mass is fast_mass * beta/(1 + beta) / (k R dt)
        let r_end = *sum.rates.last().expect("nonempty");
        let fast_gain = sum.fast_mass * sum.beta / (1.0 + sum.beta) * phi1(k * r_end * dt);
        StepTable { dt, decay, gain, fast_gain }
    }
}

impl ModeStates {
    /// States for initial value `a0`.
    pub fn new(sum: &ExpSum, a0: f64) -> Self {
        ModeStates { states: sum.weights.iter().map(|w| w * a0).collect() }
    }

    pub fn zeros(n: usize) -> Self {
        ModeStates { states: vec![0.0; n] }
    }

    /// Advance by one step with total forcing `f` (drift times `dt` plus the
    /// noise increment). Returns the new mode value.
    pub fn advance(&mut self, table: &StepTable, f: f64) -> f64 {
        let mut sum = 0.0;
        for ((s, d), g) in self.states.iter_mut().zip(&table.decay).zip(&table.gain) {
            *s = *s * d + g * f;
            sum += *s;
        }
        sum + table.fast_gain * f
    }

    pub fn value(&self) -> f64 {
        self.states.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::MittagLeffler;

    #[test]
    fn classical_limit_is_one_exponential() {
        let s = ExpSum::new(1.0, 1e-6, 10.0, 1e-10).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.eval(2.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matches_mittag_leffler_over_range() {
        for beta in [0.3, 0.5, 0.75, 0.9] {
            let s = ExpSum::new(beta, 1e-6, 1e6, 1e-10).unwrap();
            let ml = MittagLeffler::new(beta).unwrap();
            for tau in crate::quad::logspace(1e-6, 1e6, 300) {
                let e = ml.eval(tau.powf(beta)).unwrap();
                assert!((s.eval(tau) - e).abs() < 1e-8, "beta {beta} tau {tau}: {} vs {e}", s.eval(tau));
            }
            assert!((s.total_mass() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn mode_states_reproduce_relaxation() {
        let beta = 0.75;
        let mu: f64 = 2.5;
        let k = mu.powf(1.0 / beta);
        let dt = 1e-3;
        let s = ExpSum::new(beta, k * dt, k * 2.0, 1e-10).unwrap();
        let table = StepTable::new(&s, k, dt);
        let mut st = ModeStates::new(&s, 1.0);
        let mut v = 0.0;
        for _ in 0..1000 {
            v = st.advance(&table, 0.0);
        }
        let e = MittagLeffler::new(beta).unwrap().eval(mu).unwrap();
        assert!((v - e).abs() < 1e-8, "{v} vs {e}");
    }

    #[test]
    fn constant_forcing_matches_integral() {
        // a(t) = int_0^t E(-mu s^beta) ds for unit forcing, computed by quadrature
        let beta = 0.6;
        let mu: f64 = 1.3;
        let k = mu.powf(1.0 / beta);
        let dt = 1e-3;
        let s = ExpSum::new(beta, k * dt / 64.0, k * 1.0, 1e-10).unwrap();
        let table = StepTable::new(&s, k, dt);
        let mut st = ModeStates::zeros(s.len());
        let mut a = 0.0;
        for _ in 0..1000 {
            a = st.advance(&table, dt);
        }
        let ml = MittagLeffler::new(beta).unwrap();
        let q = crate::quad::integrate(
            |u: f64| ml.eval(mu * u.powf(beta)).unwrap(),
            0.0,
            1.0,
            crate::quad::Tol::new(1e-13, 1e-12),
        )
        .unwrap()
        .value;
        assert!((a - q).abs() < 1e-6, "{a} vs {q}");
    }

    #[test]
    fn phi1_is_continuous() {
        let x = 1e-5;
        assert!((phi1(x * (1.0 - 1e-9)) - phi1(x * (1.0 + 1e-9))).abs() < 1e-13);
        assert_eq!(phi1(0.0), 1.0);
    }
}
