//! Command-line front end: config resolution, subcommand dispatch, CSV
//! emission. Exit codes: 0 success, 1 domain error (the error name is
//! printed), 2 usage error.

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kdvlab::experiments::{self, BaseShapes, MapRanges};
use kdvlab::integrator::{self, SimOptions};
use kdvlab::lyapunov::{ConstantsRegistry, FunctionalKind, FunctionalSet, WeightChoice};
use kdvlab::model::{CoupledState, Disturbance, Regime};
use kdvlab::{critical, profiles, spectral, verify, RunConfig};

use output::{num, OutputDir};

/// Environment variable prefix for config overrides: `KDVLAB_<KEY>`
/// (e.g. `KDVLAB_EPSILON=0.05`) applies between the config file and the
/// `--set` flags.
const ENV_PREFIX: &str = "KDVLAB_";
const CONFIG_KEYS: [&str; 12] = [
    "a",
    "b",
    "c",
    "epsilon",
    "L",
    "regime",
    "n",
    "dt",
    "T",
    "snapshot_stride",
    "weight_beta",
    "seed",
];

#[derive(Parser)]
#[command(
    name = "kdvlab",
    about = "Simulation and stability lab for coupled KdV/ODE cascade systems",
    after_help = "Config resolution order: defaults < --config file < KDVLAB_* environment \
                  variables < --set key=value flags.\nKeys: a, b, c, epsilon, L, regime, n, dt, \
                  T, snapshot_stride, weight_beta, seed."
)]
struct Cli {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (manifest + CSVs).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bypass the critical-length validation (spectral degeneracy studies).
    #[arg(long, global = true)]
    allow_critical: bool,
    /// Config override, repeatable: --set key=value.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the critical length set up to a bound (CSV to stdout and
    /// the output directory).
    CriticalLengths {
        #[arg(long)]
        max: f64,
    },
    /// Sample the closed-form profiles M, f and the steady shape, with a
    /// discrete residual report.
    Profiles {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Integrate the coupled system; trajectory CSV plus strided snapshots.
    Simulate {
        /// none | mms | file (boundary disturbance from --disturbance-file)
        #[arg(long, default_value = "none")]
        disturbance: String,
        /// CSV of `t,d2` rows, linearly interpolated.
        #[arg(long)]
        disturbance_file: Option<PathBuf>,
        /// Initial ODE state.
        #[arg(long, default_value_t = 1.0)]
        z0: f64,
    },
    /// Eigenvalues of the discretized coupled generator.
    Spectrum,
    /// Tikhonov epsilon sweep for one regime.
    Sweep {
        #[arg(long)]
        regime: u8,
        /// Comma-separated epsilon list, e.g. 0.2,0.1,0.05.
        #[arg(long)]
        eps_list: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        t_eval: f64,
    },
    /// Random parameter-box classification by spectral abscissa vs the
    /// theorem predicates.
    StabilityMap {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// lo:hi
        #[arg(long, default_value = "-0.5:0.5")]
        a_range: String,
        #[arg(long, default_value = "-1.5:0.5")]
        b_range: String,
        #[arg(long, default_value = "-1.0:1.0")]
        c_range: String,
    },
    /// Run the built-in property suite and print a pass/fail table.
    Verify,
}

enum CliError {
    Domain(kdvlab::Error),
    Io(std::io::Error),
}

impl From<kdvlab::Error> for CliError {
    fn from(e: kdvlab::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: Io: {e}");
            ExitCode::from(1)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        cfg.apply_lines(&text)?;
    }
    for key in CONFIG_KEYS {
        if let Ok(value) = std::env::var(format!("{ENV_PREFIX}{}", key.to_uppercase())) {
            cfg.set(key, &value)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| kdvlab::Error::Config(format!("--set expects key=value, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| kdvlab::Error::Config(format!("range `{s}` must be lo:hi")))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| kdvlab::Error::Config(format!("bad range bound in `{s}`")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| kdvlab::Error::Config(format!("bad range bound in `{s}`")))?;
    Ok((lo, hi))
}

const VALIDATION_TOL: f64 = 1e-9;

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli)?;
    match &cli.cmd {
        Command::CriticalLengths { max } => {
            let out = OutputDir::create(&cli.out, &cfg, "critical-lengths")?;
            let members = critical::critical_lengths_up_to(*max);
            let mut csv = out.csv("critical_lengths.csv", "value,k,l")?;
            println!("value,k,l");
            for m in &members {
                let row = [num(m.value), m.k.to_string(), m.l.to_string()];
                println!("{}", row.join(","));
                csv.row(&row)?;
            }
            Ok(())
        }
        Command::Profiles { a, c, l, n } => {
            let mut cfg = cfg;
            if let Some(a) = a {
                cfg.a = *a;
            }
            if let Some(c) = c {
                cfg.c = *c;
            }
            if let Some(l) = l {
                cfg.l = *l;
            }
            if let Some(n) = n {
                cfg.n = *n;
            }
            let out = OutputDir::create(&cli.out, &cfg, "profiles")?;
            let grid = cfg.grid()?;
            let mut csv = out.csv("profiles.csv", "x,M,f,h_at_z1")?;
            for x in grid.nodes() {
                let m = profiles::eval_m(x, cfg.c, cfg.l)?;
                let f = profiles::eval_f(x, cfg.a, cfg.l)?;
                let h = profiles::eval_steady_h(x, cfg.a, cfg.l, 1.0)?;
                csv.row(&[num(x), num(m), num(f), num(h)])?;
            }
            let rm = profiles::profile_residuals(&grid, cfg.c, cfg.l)?;
            let rf = profiles::steady_profile_residuals(&grid, cfg.a, cfg.l)?;
            println!(
                "M: |M''' + M'| max = {:.3e}, M'(0) ~ {:.6} (expect {}), M'(L) ~ {:.6} (expect {})",
                rm.bvp_residual, rm.left_trace, cfg.c, rm.right_trace, -cfg.c
            );
            println!(
                "f: |f' + f'''| max = {:.3e}, f'(0) ~ {:.6} (expect {}), f'(L) ~ {:.6} (expect {})",
                rf.bvp_residual, rf.left_trace, cfg.a, rf.right_trace, -cfg.a
            );
            println!(
                "K = int M f dx = {:.12e}",
                profiles::coupling_constant_k(cfg.a, cfg.c, cfg.l)?
            );
            Ok(())
        }
        Command::Simulate {
            disturbance,
            disturbance_file,
            z0,
        } => {
            let params = cfg.params();
            if !cli.allow_critical {
                params.validate(VALIDATION_TOL)?;
            }
            let out = OutputDir::create(&cli.out, &cfg, "simulate")?;
            let grid = cfg.grid()?;
            let dist = match disturbance.as_str() {
                "none" => Disturbance::zero(),
                "mms" => {
                    let exact = integrator::poly_decay_solution(cfg.l);
                    let (eps_y, _) = params.epsilon_scales();
                    exact.disturbance(eps_y, cfg.l)
                }
                "file" => {
                    let path = disturbance_file.as_ref().ok_or_else(|| {
                        kdvlab::Error::Config(
                            "disturbance=file needs --disturbance-file".to_string(),
                        )
                    })?;
                    boundary_disturbance_from_file(path)?
                }
                other => {
                    return Err(kdvlab::Error::Config(format!(
                        "unknown disturbance `{other}` (none | mms | file)"
                    ))
                    .into())
                }
            };
            // normalized smooth default shape; z(0) from the flag
            let mut y0: Vec<f64> = grid
                .nodes()
                .map(|x| {
                    (2.0 * std::f64::consts::PI * x / cfg.l).sin() * x * (cfg.l - x)
                        / (cfg.l * cfg.l)
                })
                .collect();
            let nrm = grid.norm_sq(&y0).sqrt();
            for v in &mut y0 {
                *v /= nrm;
            }
            let ic = CoupledState::new(0.0, y0, *z0);
            let mut kinds = vec![FunctionalKind::Energy];
            if cfg.weight_beta > 0.0 {
                kinds.push(FunctionalKind::W);
            }
            kinds.push(FunctionalKind::V1);
            if cfg.b < 0.0 {
                kinds.push(FunctionalKind::V2);
                if cfg.regime == Regime::FastOde {
                    kinds.push(FunctionalKind::V3);
                }
            }
            let weight = if cfg.weight_beta > 0.0 {
                WeightChoice::Affine(cfg.weight_beta)
            } else {
                WeightChoice::Uniform
            };
            let observers = FunctionalSet {
                weight,
                registry: ConstantsRegistry::for_weight(weight, cfg.l),
                kinds,
            };
            let opts =
                SimOptions::new(cfg.t_final, cfg.resolved_dt()).with_stride(cfg.snapshot_stride);
            let traj = integrator::simulate(&params, &grid, &ic, &opts, &dist, &observers)?;

            // the ISS residual needs a snapshot at every sample
            let iss_residual = if cfg.snapshot_stride == 1 {
                Some(kdvlab::lyapunov::iss_balance_monitor(
                    &traj,
                    &params,
                    &grid,
                    WeightChoice::Uniform,
                    &ConstantsRegistry::uniform_identity(),
                )?)
            } else {
                None
            };
            let names: Vec<&str> = observers.kinds.iter().map(|k| k.name()).collect();
            let mut header = format!("t,z,yx0,{}", names.join(","));
            if iss_residual.is_some() {
                header.push_str(",iss_residual");
            }
            let mut csv = out.csv("trajectory.csv", &header)?;
            for k in 0..traj.len() {
                let mut row = vec![
                    num(traj.times[k]),
                    num(traj.z_series[k]),
                    num(traj.yx0_series[k]),
                ];
                for name in &names {
                    row.push(num(traj.functional(name).unwrap()[k]));
                }
                if let Some(resid) = &iss_residual {
                    // residual k covers the step into sample k
                    row.push(num(if k == 0 { 0.0 } else { resid[k - 1] }));
                }
                csv.row(&row)?;
            }
            for snap in &traj.snapshots {
                let name = format!("snapshot_{:06}.csv", snap.index);
                let mut csv = out.csv(&name, "x,y")?;
                for (i, x) in grid.nodes().enumerate() {
                    csv.row(&[num(x), num(snap.y[i])])?;
                }
            }
            println!(
                "simulate: {} samples, {} snapshots -> {}",
                traj.len(),
                traj.snapshots.len(),
                out.path("trajectory.csv").display()
            );
            Ok(())
        }
        Command::Spectrum => {
            let params = cfg.params();
            if !cli.allow_critical {
                params.validate(VALIDATION_TOL)?;
            }
            let out = OutputDir::create(&cli.out, &cfg, "spectrum")?;
            let grid = cfg.grid()?;
            let g = spectral::assemble_generator(&params, &grid)?;
            let ev = spectral::eigenvalues(&g.matrix, spectral::DEFAULT_DIM_CAP)?;
            let mut sorted = ev.clone();
            sorted.sort_by(|x, y| {
                y.re.partial_cmp(&x.re)
                    .unwrap()
                    .then(y.im.partial_cmp(&x.im).unwrap())
            });
            let mut csv = out.csv("spectrum.csv", "re,im")?;
            for e in &sorted {
                csv.row(&[num(e.re), num(e.im)])?;
            }
            let abscissa = sorted.first().map(|e| e.re).unwrap_or(f64::NEG_INFINITY);
            println!("abscissa = {abscissa:.12e}");
            Ok(())
        }
        Command::Sweep {
            regime,
            eps_list,
            t_eval,
        } => {
            let out = OutputDir::create(&cli.out, &cfg, "sweep")?;
            let grid = cfg.grid()?;
            let shapes = BaseShapes::default();
            let registry = ConstantsRegistry::uniform_identity();
            let (params, eps): (kdvlab::SystemParams, Vec<f64>) = match regime {
                1 => {
                    let mut p = cfg.params();
                    p.regime = Regime::FastKdv;
                    (p, vec![0.2, 0.1, 0.05, 0.025])
                }
                2 => {
                    let mut p = cfg.params();
                    p.regime = Regime::FastOde;
                    (p, vec![0.2, 0.1, 0.05])
                }
                other => {
                    return Err(kdvlab::Error::Config(format!(
                        "--regime must be 1 or 2, got {other}"
                    ))
                    .into())
                }
            };
            if !cli.allow_critical {
                params.validate(VALIDATION_TOL)?;
            }
            let eps = match eps_list {
                Some(s) => s
                    .split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<f64>()
                            .map_err(|_| kdvlab::Error::Config(format!("bad epsilon `{tok}`")))
                    })
                    .collect::<Result<Vec<f64>, _>>()?,
                None => eps,
            };
            let report = match regime {
                1 => experiments::tikhonov_sweep_r1(
                    &shapes,
                    &params,
                    &eps,
                    *t_eval,
                    &grid,
                    integrator::dt_rule,
                )?,
                _ => experiments::tikhonov_sweep_r2(
                    &shapes,
                    &params,
                    &eps,
                    *t_eval,
                    &grid,
                    &registry,
                    integrator::dt_rule,
                )?,
            };
            let mut csv = out.csv("sweep.csv", "eps,error,mu_hat")?;
            for p in &report.points {
                csv.row(&[num(p.eps), num(p.error), num(p.mu_hat)])?;
            }
            println!(
                "sweep regime {regime}: slope = {:.4}, r^2 = {:.5}",
                report.slope, report.r_squared
            );
            Ok(())
        }
        Command::StabilityMap {
            samples,
            a_range,
            b_range,
            c_range,
        } => {
            let out = OutputDir::create(&cli.out, &cfg, "stability-map")?;
            let grid = cfg.grid()?;
            let ranges = MapRanges {
                a: parse_range(a_range)?,
                b: parse_range(b_range)?,
                c: parse_range(c_range)?,
            };
            let registry = ConstantsRegistry::uniform_identity();
            let records = experiments::stability_map(
                &ranges,
                cfg.epsilon,
                cfg.regime,
                cfg.l,
                &grid,
                *samples,
                &registry,
                cfg.seed,
            )?;
            let mut csv = out.csv(
                "stability_map.csv",
                "a,b,c,abscissa,pred_thm1,pred_thm2,agree",
            )?;
            let mut agree = 0usize;
            for r in &records {
                csv.row(&[
                    num(r.a),
                    num(r.b),
                    num(r.c),
                    num(r.abscissa),
                    r.pred_thm1.to_string(),
                    r.pred_thm2.to_string(),
                    r.agree.to_string(),
                ])?;
                agree += r.agree as usize;
            }
            println!(
                "stability map: {agree}/{} samples agree with the predicate",
                records.len()
            );
            Ok(())
        }
        Command::Verify => {
            let outcomes = verify::run_all(cfg.seed)?;
            let mut failed = 0usize;
            println!("{:-<78}", "");
            for o in &outcomes {
                println!(
                    "{:4} {:32} {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                failed += (!o.passed) as usize;
            }
            println!("{:-<78}", "");
            if failed > 0 {
                return Err(kdvlab::Error::PredicateViolated("verification suite failed").into());
            }
            println!("all {} checks passed", outcomes.len());
            Ok(())
        }
    }
}

/// Piecewise-linear boundary disturbance `d2(t)` read from `t,d2` rows.
fn boundary_disturbance_from_file(path: &PathBuf) -> Result<Disturbance, CliError> {
    let text = fs::read_to_string(path)?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('t') {
            continue;
        }
        let mut it = line.split(',');
        let t: f64 = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| kdvlab::Error::Config(format!("bad disturbance row `{line}`")))?;
        let d: f64 = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| kdvlab::Error::Config(format!("bad disturbance row `{line}`")))?;
        points.push((t, d));
    }
    if points.is_empty() {
        return Err(kdvlab::Error::Config("disturbance file has no rows".to_string()).into());
    }
    points.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(Disturbance::zero().with_d2(move |t| {
        match points.binary_search_by(|p| p.0.partial_cmp(&t).unwrap()) {
            Ok(i) => points[i].1,
            Err(0) => points[0].1,
            Err(i) if i >= points.len() => points[points.len() - 1].1,
            Err(i) => {
                let (t0, d0) = points[i - 1];
                let (t1, d1) = points[i];
                d0 + (d1 - d0) * (t - t0) / (t1 - t0)
            }
        }
    }))
}
