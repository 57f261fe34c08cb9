use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blowup_core::drift::DriftSpec;
use blowup_core::kernels::{ball_mass_lower_bound, c_star, green_l2, green_l2_spatial, loglog_slope};
use blowup_core::model::ModelParams;
use blowup_core::osgood::{ode_blowup_time, osgood_integral};
use blowup_core::quad::logspace;
use blowup_core::reduction::{feller_explosion_test, ReductionParams, ScalarSettings};
use blowup_core::special::{c_beta_lambda, ml_deriv, ml_eval, ml_lower_bound};

use blowup_lab::cli::parse_drift;
use blowup_lab::config::{CheckKind, DomainKind, Expectation, InitialKind, ScenarioConfig};
use blowup_lab::error::Result;
use blowup_lab::reduction::{explosion_frequency, girsanov_suite};
use blowup_lab::run::{run_config, run_scenario, Overrides};

#[derive(Parser)]
#[command(name = "blowup-lab", about = "Blowup experiments for space-time fractional stochastic equations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Output directory for CSV, JSON and text reports.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Base time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a config file.
    Run { config: PathBuf },
    /// Evaluate E_beta(-x), its derivative and the lower bound 1/(1 + Gamma(1-beta) x).
    MlEval {
        #[arg(long)]
        beta: f64,
        #[arg(long, num_args = 1.., required = true)]
        x: Vec<f64>,
    },
    /// Kernel constants: C*, L2 decay slope, ball mass bound, c_beta_lambda.
    KernelCheck {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
    },
    /// Osgood integral and ODE blowup time of z' = c b(z).
    Osgood {
        #[arg(long, default_value = "power:2")]
        drift: String,
        #[arg(long, default_value_t = 1.0)]
        z0: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Feller test, explosion frequencies and Girsanov suite of the reduction SDEs.
    Reduction {
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Defaults to c_beta_lambda(beta, lambda).
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value = "power:2")]
        drift: String,
    },
    /// Blowup campaign for the ball or truncated whole-space equation.
    McBlowup {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        /// Riesz exponent of colored noise; white noise when absent.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value = "power:2")]
        drift: String,
        /// Truncated whole space [-L, L] instead of the ball.
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value_t = 16)]
        modes: usize,
        #[arg(long, default_value_t = 129)]
        grid_points: usize,
        /// Multiple of phi_1 used as initial data.
        #[arg(long, default_value_t = 0.0)]
        amplitude: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        seed: c.seed,
        paths: c.paths,
        out_dir: c.out_dir.clone(),
        dt: c.dt,
        horizon: c.horizon,
        workers: c.workers,
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    let common = cli.common;
    match cli.command {
        Command::Run { config } => {
            let o = run_config(&config, &overrides(&common))?;
            for r in &o.results {
                println!("{} {} statistic {:.6} expected {:.6}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.statistic, r.expected);
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            Ok(o.exit_code() as u8)
        }
        Command::MlEval { beta, x } => {
            println!("x,ml,ml_deriv,lower_bound");
            for x in x {
                println!("{x},{},{},{}", ml_eval(beta, x)?, ml_deriv(beta, x)?, ml_lower_bound(beta, x)?);
            }
            Ok(0)
        }
        Command::KernelCheck { alpha, beta } => {
            let p = ModelParams::ball(alpha, beta)?;
            let t = logspace(0.5, 8.0, 9);
            let l2: Vec<f64> = t.iter().map(|&t| green_l2(&p, t)).collect::<std::result::Result<_, _>>()?;
            let sp: Vec<f64> = t.iter().map(|&t| green_l2_spatial(&p, t)).collect::<std::result::Result<_, _>>()?;
            println!("C* = {}", c_star(&p)?);
            println!("expected L2 slope = {}", -p.decay());
            println!("closed-form slope = {}", loglog_slope(&t, &l2));
            println!("quadrature slope = {}", loglog_slope(&t, &sp));
            let grid: Vec<f64> = (0..16).map(|i| (i as f64 + 0.5) / 16.0).collect();
            let xs: Vec<f64> = (0..16).map(|i| -1.0 + 2.0 * i as f64 / 15.0).collect();
            let m = ball_mass_lower_bound(&p, &grid, &xs)?;
            println!("min ball mass = {} at x = {}, r = {}", m.min_mass, m.argmin_x, m.argmin_r);
            println!("c_beta_lambda(beta, 1) = {}", c_beta_lambda(beta, 1.0)?);
            Ok(0)
        }
        Command::Osgood { drift, z0, c } => {
            let d = parse_drift(&drift)?;
            let v = osgood_integral(&d, z0)?;
            println!("drift {}", d.describe());
            println!("classification {:?}, integral from {z0}: {}", v.classification, v.value_or_lower_bound);
            match ode_blowup_time(&d, z0, c) {
                Ok(t) => println!("blowup time of z' = {c} b(z), z(0) = {z0}: {t}"),
                Err(e) => println!("blowup time unavailable: {e}"),
            }
            Ok(0)
        }
        Command::Reduction { beta, lambda, c, kappa, drift } => {
            let d = parse_drift(&drift)?;
            let c = match c {
                Some(c) => c,
                None => c_beta_lambda(beta, lambda)?,
            };
            let rp = ReductionParams::new(lambda, c, kappa, beta, d, 0.0)?;
            let f = feller_explosion_test(&rp)?;
            println!("Feller verdict {:?} at cutoff {}: {}", f.verdict, f.cutoff, f.note);
            let seed = common.seed.unwrap_or(1);
            let paths = common.paths.unwrap_or(1000);
            let dt = common.dt.unwrap_or(1e-2);
            let horizon = common.horizon.unwrap_or(10.0);
            let workers = common.workers.unwrap_or(0);
            let st = ScalarSettings::new(dt, horizon, seed).with_record(0);
            let fr = explosion_frequency(&rp, &st, paths, seed, workers)?;
            println!("explosions by t = {horizon}: U {} / {paths}, V {} / {paths}, unresolved {}", fr.u_blowups, fr.v_blowups, fr.unresolved);
            if !matches!(rp.drift, DriftSpec::Capped { .. } | DriftSpec::Zero) {
                println!("Girsanov suite skipped: needs a bounded drift (capped:P:CAP)");
            } else {
                let g = girsanov_suite(&rp, dt, horizon, paths, seed, workers)?;
                println!(
                    "E[R] = {:.5} +- {:.5}, E[R log R] = {:.5} +- {:.5}, bound {:.5}",
                    g.entropy.weight.mean, g.entropy.weight.se, g.entropy.entropy.mean, g.entropy.entropy.se, g.entropy.bound
                );
                for r in &g.law.rows {
                    println!("  {}: weighted {:.5}, plain {:.5}, z = {:.3}", r.functional, r.weighted.mean, r.plain.mean, r.z);
                }
            }
            Ok(0)
        }
        Command::McBlowup { alpha, beta, eta, sigma, drift, half_width, modes, grid_points, amplitude } => {
            let mut cfg = ScenarioConfig { name: "mc-blowup".into(), drift: parse_drift(&drift)?, ..ScenarioConfig::default() };
            cfg.model.alpha = alpha;
            cfg.model.beta = beta;
            cfg.model.eta = eta;
            cfg.model.sigma = sigma;
            if let Some(l) = half_width {
                cfg.model.domain = DomainKind::TruncatedSpace;
                cfg.model.half_width = l;
            }
            cfg.solver.modes = modes;
            cfg.solver.grid_points = grid_points;
            cfg.initial.kind = if amplitude > 0.0 { InitialKind::Phi1 } else { InitialKind::Zero };
            cfg.initial.amplitude = amplitude;
            cfg.checks.run = vec![CheckKind::Blowup];
            cfg.blowup.expect = Expectation::None;
            cfg.output.dir = PathBuf::from("out/mc-blowup");
            overrides(&common).apply(&mut cfg)?;
            let o = run_scenario(&cfg)?;
            let rep = o.blowup.as_ref().expect("blowup check ran");
            println!(
                "{} of {} paths blew up by t = {} (unresolved {}), fraction {:.4}, Wilson 95% [{:.4}, {:.4}]",
                rep.blown_up, rep.n_paths, rep.horizon, rep.unresolved, rep.fraction, rep.ci_low, rep.ci_high
            );
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
    }
}
