//! Reduction-SDE suites: Girsanov weights, weighted law comparison,
//! explosion frequencies and the pathwise comparison on the ball.

use rayon::prelude::*;
use serde::Serialize;

use blowup_core::drift::DriftSpec;
use blowup_core::kernels::SpectralBasis;
use blowup_core::model::ModelParams;
use blowup_core::noise::{derive_seed, ModeNoise, NoiseKind};
use blowup_core::reduction::*;
use blowup_core::solver::{solve_ball, SolverSettings};

use crate::campaign::with_workers;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GirsanovSuite {
    pub paths: usize,
    pub entropy: EntropyReport,
    pub law: LawReport,
    pub u_blowups: usize,
    pub v_blowups: usize,
}

/// `U` and its Girsanov weight on one noise, `V` on an independent one.
pub fn girsanov_suite(rp: &ReductionParams, dt: f64, horizon: f64, paths: usize, seed: u64, workers: usize) -> Result<GirsanovSuite> {
    let n = (horizon / dt).round() as usize;
    let h = h_step_averages(rp.beta, rp.lambda1, dt, n)?;
    let sims: Vec<Result<(ScalarPath, f64, ScalarPath)>> = with_workers(workers, || {
        (0..paths)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, &[i as u64, 0]);
                let inc = brownian_increments(s, n, dt);
                let xi = xi_path(&h, &inc)?;
                let u = simulate_u(rp, &xi, &inc, &ScalarSettings::new(dt, horizon, s).with_record(0))?;
                let lw = girsanov_log_weight(&xi, &inc, dt)?;
                let s2 = derive_seed(seed, &[i as u64, 1]);
                let v = simulate_v(rp, &brownian_increments(s2, n, dt), &ScalarSettings::new(dt, horizon, s2).with_record(0))?;
                Ok((u, lw, v))
            })
            .collect()
    })?;
    let sims = sims.into_iter().collect::<Result<Vec<_>>>()?;
    let lw: Vec<f64> = sims.iter().map(|s| s.1).collect();
    let a_t = h_l2_norm(rp.beta, rp.lambda1, horizon)?;
    let entropy = entropy_check(&lw, a_t, horizon)?;
    let w: Vec<f64> = lw.iter().map(|l| l.exp()).collect();
    let (us, vs): (Vec<ScalarPath>, Vec<ScalarPath>) = sims.into_iter().map(|s| (s.0, s.2)).unzip();
    let law = weighted_law_check(&us, &vs, &w, &Functional::standard_panel())?;
    Ok(GirsanovSuite {
        paths,
        entropy,
        law,
        u_blowups: us.iter().filter(|p| p.status.is_blown_up()).count(),
        v_blowups: vs.iter().filter(|p| p.status.is_blown_up()).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplosionFrequency {
    pub paths: usize,
    pub u_blowups: usize,
    pub v_blowups: usize,
    pub unresolved: usize,
}

/// Blowup counts of `U` and `V` on independent Brownian paths.
pub fn explosion_frequency(rp: &ReductionParams, settings: &ScalarSettings, paths: usize, seed: u64, workers: usize) -> Result<ExplosionFrequency> {
    let n = settings.n_steps();
    let h = h_step_averages(rp.beta, rp.lambda1, settings.dt, n)?;
    let runs: Vec<Result<(ScalarPath, ScalarPath)>> = with_workers(workers, || {
        (0..paths)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, &[i as u64, 2]);
                let inc = brownian_increments(s, n, settings.dt);
                let xi = xi_path(&h, &inc)?;
                let st = ScalarSettings { seed: s, ..settings.clone() };
                Ok((simulate_u(rp, &xi, &inc, &st)?, simulate_v(rp, &inc, &st)?))
            })
            .collect()
    })?;
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExplosionFrequency {
        paths,
        u_blowups: runs.iter().filter(|r| r.0.status.is_blown_up()).count(),
        v_blowups: runs.iter().filter(|r| r.1.status.is_blown_up()).count(),
        unresolved: runs.iter().filter(|r| r.0.status.is_unresolved() || r.1.status.is_unresolved()).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonInstance {
    pub beta: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub eta: Option<f64>,
    pub seed: u64,
    pub min_margin: f64,
    pub scale: f64,
    pub holds: bool,
}

/// Pathwise `Y >= Z` on one coupled solve of the ball equation.
#[allow(clippy::too_many_arguments)]
pub fn comparison_instance(
    params: &ModelParams,
    basis: &SpectralBasis,
    drift: &DriftSpec,
    amplitude: f64,
    seed: u64,
    dt: f64,
    horizon: f64,
    tol: f64,
) -> Result<ComparisonInstance> {
    let noise = ModeNoise::new(basis, NoiseKind::from_eta(params.eta), seed)?;
    let u0: Vec<f64> = basis.phi[0].iter().map(|v| (amplitude * v).max(0.0)).collect();
    let f = solve_ball(params, drift, &u0, basis, &noise, &SolverSettings::new(dt, horizon).with_trace())?;
    let trace = f.trace.as_ref().expect("trace requested");
    let rep = comparison_process(trace, basis, params.beta, drift, tol)?;
    let scale = rep.y.iter().chain(&rep.z).fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(ComparisonInstance {
        beta: params.beta,
        sigma: params.sigma,
        amplitude,
        eta: params.eta,
        seed,
        min_margin: rep.min_margin,
        scale,
        holds: rep.holds,
    })
}
