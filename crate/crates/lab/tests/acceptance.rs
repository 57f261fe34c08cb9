//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use blowup_core::drift::DriftSpec;
use blowup_core::kernels::{ball_mass_lower_bound, green_l2, green_l2_spatial, loglog_slope};
use blowup_core::model::{Domain, ModelParams};
use blowup_core::noise::{ModeNoise, NoiseKind};
use blowup_core::osgood::{ode_blowup_time, ode_level_crossing_time, osgood_integral, theorem13_contradiction_check, Classification};
use blowup_core::quad::logspace;
use blowup_core::reduction::ReductionParams;
use blowup_core::solver::{solve_ball, SolverSettings};
use blowup_core::special::{c_beta_lambda, ml_eval, ml_lower_bound};

use blowup_lab::campaign::run_blowup_campaign;
use blowup_lab::checks::{convolution_variance_check, divergent_inf_sequence, lil_check, moment_scaling_check};
use blowup_lab::config::{basis, ConvolutionSection, DomainKind, InitialKind, LilSection, MomentSection, ScenarioConfig};
use blowup_lab::ensemble::{simulate_long_runs, LongRunEnsemble, LongRunLayout};
use blowup_lab::reduction::{comparison_instance, girsanov_suite};
use blowup_lab::run::run_scenario;

const SEED: u64 = 20_240_917;

type Outcome = Result<(bool, String), String>;

fn main() {
    let mut failed = Vec::new();
    let long = long_ensemble();
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "Mittag-Leffler accuracy", Box::new(c1_ml_accuracy)),
        (2, "Mittag-Leffler lower bound", Box::new(c2_ml_lower_bound)),
        (3, "kernel L2 decay slope", Box::new(c3_green_l2_slope)),
        (4, "ball mass positivity", Box::new(c4_ball_mass)),
        (5, "eigenrelation", Box::new(c5_eigenrelation)),
        (6, "stochastic convolution variance", Box::new(c6_convolution_variance)),
        (7, "increment moment scaling", Box::new(c7_moment_slope)),
        (8, "iterated-logarithm proxy", Box::new(|| c8_lil(&long))),
        (9, "Osgood exactness", Box::new(c9_osgood)),
        (10, "Girsanov suite", Box::new(c10_girsanov)),
        (11, "ball blowup campaign", Box::new(c11_ball_campaign)),
        (12, "whole-space blowup campaign", Box::new(|| c12_whole_space(&long))),
        (13, "comparison principle", Box::new(c13_comparison)),
        (14, "determinism across worker counts", Box::new(c14_determinism)),
    ];
    for (n, name, f) in &criteria {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("criterion {n:>2} {}: {name} ({:.1} s): {detail}", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        if !pass {
            failed.push(*n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria pass", criteria.len());
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// `e^{x^2} erfc(x)`: product form below 5, continued fraction above.
fn erfcx(x: f64) -> f64 {
    if x < 5.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // Laplace continued fraction, 60 levels
    let mut f = 0.0;
    for k in (1..=60).rev() {
        f = (k as f64 / 2.0) / (x + f);
    }
    1.0 / (std::f64::consts::PI.sqrt() * (x + f))
}

fn c1_ml_accuracy() -> Outcome {
    let mut worst1 = 0.0f64;
    for i in 0..=5000 {
        let x = 50.0 * i as f64 / 5000.0;
        worst1 = worst1.max((e(ml_eval(1.0, x))? - (-x).exp()).abs());
    }
    let mut worst2 = 0.0f64;
    for i in 0..=2000 {
        let x = 10.0 * i as f64 / 2000.0;
        worst2 = worst2.max((e(ml_eval(0.5, x))? - erfcx(x)).abs());
    }
    Ok((worst1 < 1e-10 && worst2 < 1e-8, format!("max error beta=1 {worst1:.2e} (< 1e-10), beta=0.5 {worst2:.2e} (< 1e-8)")))
}

fn c2_ml_lower_bound() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for beta in [0.3, 0.5, 0.75, 0.9] {
        for i in 0..10_000 {
            // dense near the origin, out to 1e4
            let x = if i < 5000 { 10.0 * i as f64 / 5000.0 } else { 10f64.powf(1.0 + 3.0 * (i - 5000) as f64 / 4999.0) };
            worst = worst.max(e(ml_lower_bound(beta, x))? - e(ml_eval(beta, x))?);
        }
    }
    let mut c_ok = true;
    let mut cs = Vec::new();
    for beta in [0.3, 0.5, 0.75, 0.9] {
        for lambda in [0.5, 1.0, 2.4674, 10.0] {
            let c = e(c_beta_lambda(beta, lambda))?;
            c_ok &= c > 0.0 && c <= 1.0;
            cs.push(c);
        }
    }
    let cmin = cs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((worst <= 1e-10 && c_ok, format!("max(bound - E) = {worst:.2e} (<= 1e-10), c_beta_lambda in [{cmin:.4}, 1]: {c_ok}")))
}

fn c3_green_l2_slope() -> Outcome {
    let t = logspace(0.5, 8.0, 9);
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, beta) in [(2.0, 0.75), (1.8, 0.8)] {
        let p = e(ModelParams::ball(alpha, beta))?;
        let target = -beta / alpha;
        let closed: Vec<f64> = t.iter().map(|&t| green_l2(&p, t)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let quad: Vec<f64> = t.iter().map(|&t| green_l2_spatial(&p, t)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let (s1, s2) = (loglog_slope(&t, &closed), loglog_slope(&t, &quad));
        let r = ((s1 / target - 1.0).abs(), (s2 / target - 1.0).abs());
        ok &= r.0 < 0.02 && r.1 < 0.02;
        parts.push(format!("(alpha {alpha}, beta {beta}) target {target:.4}, closed form {s1:.4}, spatial quadrature {s2:.4}"));
    }
    Ok((ok, parts.join("; ")))
}

fn c4_ball_mass() -> Outcome {
    let r: Vec<f64> = (0..16).map(|i| (i as f64 + 0.5) / 16.0).collect();
    let x: Vec<f64> = (0..16).map(|i| -1.0 + 2.0 * i as f64 / 15.0).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, beta) in [(2.0, 0.75), (1.8, 0.8), (1.5, 0.5)] {
        let p = e(ModelParams::ball(alpha, beta))?;
        let m = e(ball_mass_lower_bound(&p, &r, &x))?;
        ok &= m.min_mass > 0.0;
        parts.push(format!("({alpha}, {beta}) min {:.4}", m.min_mass));
    }
    Ok((ok, parts.join(", ")))
}

fn c5_eigenrelation() -> Outcome {
    let p = e(ModelParams::ball(2.0, 0.75))?.with_sigma(0.0);
    let b = e(basis(&p, 16, 129))?;
    let noise = e(ModeNoise::new(&b, NoiseKind::White, 0))?;
    let f = e(solve_ball(&p, &DriftSpec::Zero, &b.phi[0], &b, &noise, &SolverSettings::new(1e-3, 1.0)))?;
    let decay = e(ml_eval(0.75, b.mu[0]))?;
    let last = f.values.last().ok_or("no recorded values")?;
    let err = last.iter().zip(&b.phi[0]).map(|(u, q)| (u - decay * q).abs()).fold(0.0, f64::max);
    Ok((err < 1e-3, format!("sup error at t = 1: {err:.2e} (< 1e-3)")))
}

fn c6_convolution_variance() -> Outcome {
    let model = e(ModelParams::ball(2.0, 0.5))?;
    let s = ConvolutionSection { paths: 10_000, dt: 1e-3, ..ConvolutionSection::default() };
    let (r, _) = e(convolution_variance_check(&model, &s, SEED, 0))?;
    Ok((r.pass, format!("Var g(1, 0) = {:.5}, C*/(1 - beta d/alpha) = {:.5}, rel. error {:.4} (< 0.05), {} paths", r.statistic, r.expected, (r.statistic / r.expected - 1.0).abs(), r.sample_size)))
}

fn c7_moment_slope() -> Outcome {
    let model = e(ModelParams::ball(2.0, 0.5))?;
    let s = MomentSection::default();
    let (r, _) = e(moment_scaling_check(&model, &s, SEED, 0))?;
    Ok((r.pass, format!("slope {:.4}, expected {:.4} within 10%, {} paths; {}", r.statistic, r.expected, r.sample_size, r.note)))
}

fn long_ensemble() -> Result<LongRunEnsemble, String> {
    let cfg = ScenarioConfig::default();
    let params = e(ModelParams::new(2.0, 0.5, 1.0, 1.0, None, Domain::TruncatedSpace { half_width: cfg.long_run.half_width }))?;
    let lay = LongRunLayout::new(&cfg.long_run, cfg.lil.per_doubling, &cfg.lil.t_max, &cfg.increments.n);
    e(simulate_long_runs(&params, &cfg.long_run, lay, SEED, 0))
}

fn c8_lil(long: &Result<LongRunEnsemble, String>) -> Outcome {
    let long = long.as_ref().map_err(|e| e.clone())?;
    let (r, rows) = e(lil_check(long, &LilSection::default()))?;
    let med: Vec<String> = rows.iter().map(|r| format!("T={}: {:.4}", r.t_max, r.median)).collect();
    Ok((r.pass, format!("medians {} over {} paths; band [0.4, 1.6], increasing", med.join(", "), r.sample_size)))
}

fn c9_osgood() -> Outcome {
    let sq = DriftSpec::power(2.0);
    let v = e(osgood_integral(&sq, 1.0))?;
    let quad = e(ode_blowup_time(&sq, 1.0, 1.0))?;
    // RK integration to a high level plus the remaining tail
    let level = 1e12;
    let rk = e(ode_level_crossing_time(&sq, 1.0, 1.0, level, 10.0))? + e(osgood_integral(&sq, level))?.value_or_lower_bound;
    let lin = e(osgood_integral(&DriftSpec::Linear, 1.0))?;
    let ok = (v.value_or_lower_bound - 1.0).abs() < 1e-6
        && (quad - 1.0).abs() < 1e-3
        && (rk - 1.0).abs() < 1e-3
        && lin.classification == Classification::Infinite;
    Ok((ok, format!("integral {:.9}, T* quadrature {quad:.6}, T* Runge-Kutta {rk:.6}, linear {:?}", v.value_or_lower_bound, lin.classification)))
}

fn c10_girsanov() -> Outcome {
    let beta = 0.75;
    let c = e(c_beta_lambda(beta, 1.0))?;
    let rp = e(ReductionParams::new(1.0, c, 1.0, beta, DriftSpec::Capped { p: 2.0, cap: 2.0 }, 0.0))?;
    let g = e(girsanov_suite(&rp, 1e-3, 1.0, 10_000, SEED, 0))?;
    let en = &g.entropy;
    let z_ok = g.law.rows.len() == 5 && g.law.max_abs_z < 3.0;
    Ok((
        en.martingale_ok && en.entropy_ok && z_ok,
        format!(
            "E[R] = {:.4} +- {:.4}, E[R log R] = {:.4} +- {:.4} vs bound {:.4}, max |z| = {:.3} over {} functionals, ESS {:.0}",
            en.weight.mean, en.weight.se, en.entropy.mean, en.entropy.se, en.bound, g.law.max_abs_z, g.law.rows.len(), g.law.effective_sample_size
        ),
    ))
}

fn ball_campaign(drift: DriftSpec) -> ScenarioConfig {
    let mut cfg = ScenarioConfig { name: "ball".into(), drift, ..ScenarioConfig::default() };
    cfg.model.beta = 0.75;
    cfg.model.eta = Some(0.5);
    cfg.initial.kind = InitialKind::Zero;
    cfg.solver.horizon = 10.0;
    cfg.campaign.paths = 200;
    cfg.campaign.seed = SEED;
    cfg
}

fn c11_ball_campaign() -> Outcome {
    let sq = e(run_blowup_campaign(&ball_campaign(DriftSpec::power(2.0))))?;
    let lin = e(run_blowup_campaign(&ball_campaign(DriftSpec::Linear)))?;
    Ok((
        sq.ci_low > 0.0 && lin.blown_up == 0,
        format!(
            "s^2: {}/{} blown up, Wilson 95% lower bound {:.4}, {} unresolved; s: {}/{} blown up by t = 10",
            sq.blown_up, sq.n_paths, sq.ci_low, sq.unresolved, lin.blown_up, lin.n_paths
        ),
    ))
}

fn c12_whole_space(long: &Result<LongRunEnsemble, String>) -> Outcome {
    let mut cfg = ScenarioConfig { name: "whole space".into(), drift: DriftSpec::power(2.0), ..ScenarioConfig::default() };
    cfg.model.beta = 0.5;
    cfg.model.eta = None;
    cfg.model.domain = DomainKind::TruncatedSpace;
    cfg.model.half_width = 20.0;
    cfg.solver.modes = 64;
    cfg.solver.grid_points = 513;
    cfg.solver.horizon = 20.0;
    cfg.campaign.paths = 200;
    cfg.campaign.seed = SEED;
    let rep = e(run_blowup_campaign(&cfg))?;
    let long = long.as_ref().map_err(|e| e.clone())?;
    let (d, _, summary) = e(divergent_inf_sequence(long, 1e2, 0.8, &DriftSpec::power(2.0)))?;
    let levels: Vec<f64> = (1..=10).map(|n| n as f64).collect();
    let seq = e(theorem13_contradiction_check(&levels, &DriftSpec::power(2.0), 1.0))?;
    let tails_ok = summary.contradiction_paths > 0 && summary.contradiction_decreasing == summary.contradiction_paths && seq.decreasing;
    let ok = rep.fraction >= 0.9 && d.pass && tails_ok && !rep.boundary_warning;
    Ok((
        ok,
        format!(
            "blowup fraction {:.3} ({} of {}, {} unresolved, boundary warning {}); record pass rate {:.2} (>= 0.8); I_n decreasing on {} of {} record sequences",
            rep.fraction, rep.blown_up, rep.n_paths, rep.unresolved, rep.boundary_warning, d.statistic, summary.contradiction_decreasing, summary.contradiction_paths
        ),
    ))
}

fn c13_comparison() -> Outcome {
    let drift = DriftSpec::power(2.0);
    let mut held = 0;
    let mut worst = f64::INFINITY;
    let betas = [0.5, 0.6, 0.75, 0.8, 0.9];
    let etas = [None, Some(0.3), Some(0.5), None];
    for k in 0..20 {
        let beta = betas[k % betas.len()];
        let eta = etas[k % etas.len()];
        let sigma = [0.5, 1.0, 2.0][k % 3];
        let amplitude = [0.0, 0.5, 1.0, 2.0, 3.0][(k / 4) % 5];
        let p = e(ModelParams::ball(2.0, beta))?.with_sigma(sigma).with_eta(eta);
        let b = e(basis(&p, 12, 97))?;
        let inst = e(comparison_instance(&p, &b, &drift, amplitude, SEED + k as u64, 1e-3, 0.5, 1e-3))?;
        held += inst.holds as usize;
        worst = worst.min(inst.min_margin);
    }
    Ok((held == 20, format!("Y >= Z on {held} of 20 instances, worst relative margin {worst:.2e} (>= -1e-3)")))
}

fn c14_determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/golden.toml");
    let mut cfg = e(ScenarioConfig::load(&root))?;
    let tmp = e(tempfile::tempdir())?;
    let mut outputs = Vec::new();
    for workers in [1, 4, 8] {
        cfg.campaign.workers = workers;
        cfg.output.dir = tmp.path().join(format!("w{workers}"));
        let o = e(run_scenario(&cfg))?;
        let mut csvs: Vec<(String, Vec<u8>)> = Vec::new();
        for f in o.files.iter().filter(|f| f.extension().is_some_and(|x| x == "csv")) {
            csvs.push((f.file_name().unwrap().to_string_lossy().into_owned(), e(std::fs::read(f))?));
        }
        outputs.push(csvs);
    }
    let n_files = outputs[0].len();
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok((same && n_files > 0, format!("{n_files} CSV files identical across 1, 4 and 8 workers: {same}")))
}
