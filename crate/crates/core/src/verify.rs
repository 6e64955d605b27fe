//! Built-in verification suite behind the `verify` CLI subcommand: each
//! check exercises one measurable property end to end and reports
//! pass/fail with the measured numbers.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::integrator::{self, SimOptions};
use crate::lyapunov::{self, ConstantsRegistry, FunctionalSet, WeightChoice};
use crate::model::{CoupledState, Disturbance, Grid, Regime, SystemParams};
use crate::profiles;
use crate::spectral;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Discrete residuals of `M''' + M'` and `f' + f'''` drop at order >= 1.9
/// over `n` in {100, 200, 400}; endpoint values vanish to 1e-12.
pub fn check_profile_residuals() -> Result<CheckOutcome> {
    let l = 3.0;
    let (c, a) = (1.0, 0.5);
    let mut rs_m = Vec::new();
    let mut rs_f = Vec::new();
    for n in [100usize, 200, 400] {
        let grid = Grid::new(l, n)?;
        rs_m.push(profiles::profile_residuals(&grid, c, l)?.bvp_residual);
        rs_f.push(profiles::steady_profile_residuals(&grid, a, l)?.bvp_residual);
    }
    let orders: Vec<f64> = rs_m
        .windows(2)
        .chain(rs_f.windows(2))
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    let endpoints_ok = [0.0, l].iter().all(|&x| {
        profiles::eval_m(x, c, l).unwrap().abs() <= 1e-12
            && profiles::eval_f(x, a, l).unwrap().abs() <= 1e-12
    });
    let passed = orders.iter().all(|&o| o >= 1.9) && endpoints_ok;
    Ok(CheckOutcome::new(
        "profile-residual-orders",
        passed,
        format!("orders {orders:.3?}, endpoints zero: {endpoints_ok}"),
    ))
}

/// Manufactured-solution convergence for both regimes: spatial and
/// temporal observed orders >= 1.9 on a three-level ladder.
pub fn check_mms_orders() -> Result<CheckOutcome> {
    let l = 3.0;
    let exact = integrator::poly_decay_solution(l);
    let mut detail = String::new();
    let mut passed = true;
    for regime in [Regime::FastKdv, Regime::FastOde] {
        let params = SystemParams::new(0.0, 0.0, 0.0, 0.1, l, regime);
        let report = integrator::mms_run(&params, &exact, 50, 0.02, 1.0)?;
        let sp_ok = report.spatial_orders.iter().all(|&o| o >= 1.9);
        let tm_ok = report.temporal_orders.iter().all(|&o| o >= 1.9);
        passed &= sp_ok && tm_ok;
        detail.push_str(&format!(
            "{}: spatial {:.2?} temporal {:.2?}; ",
            match regime {
                Regime::FastKdv => "fast_kdv",
                Regime::FastOde => "fast_ode",
            },
            report.spatial_orders,
            report.temporal_orders
        ));
    }
    Ok(CheckOutcome::new("mms-convergence-orders", passed, detail))
}

/// Time-integrated residual of the uniform-weight energy balance drops by
/// about four under simultaneous halving of `h` and `dt`.
pub fn check_energy_balance() -> Result<CheckOutcome> {
    let l = 3.0;
    let run = |n: usize, dt: f64| -> Result<f64> {
        let grid = Grid::new(l, n)?;
        let params = SystemParams::new(0.0, 0.0, 0.0, 1.0, l, Regime::FastOde);
        let lc = l;
        let dist = Disturbance::zero()
            .with_d1(move |t, x| 2.0 * (-t).exp() * (std::f64::consts::PI * x / lc).sin())
            .with_d2(|t| 0.3 * (2.0 * t).cos());
        let y0: Vec<f64> = grid
            .nodes()
            .map(|x| (2.0 * std::f64::consts::PI * x / l).sin())
            .collect();
        let ic = CoupledState::new(0.0, y0, 0.0);
        let opts = SimOptions::new(1.0, dt);
        let traj = integrator::simulate(&params, &grid, &ic, &opts, &dist, &FunctionalSet::none())?;
        let resid = lyapunov::iss_balance_monitor(
            &traj,
            &params,
            &grid,
            WeightChoice::Uniform,
            &ConstantsRegistry::uniform_identity(),
        )?;
        Ok(resid.iter().sum::<f64>() * dt)
    };
    let r1 = run(100, 0.01)?;
    let r2 = run(200, 0.005)?;
    let r3 = run(400, 0.0025)?;
    let ratios = [r1 / r2, r2 / r3];
    let passed = ratios.iter().all(|&r| (3.0..=5.5).contains(&r));
    Ok(CheckOutcome::new(
        "energy-balance-identity",
        passed,
        format!("integrated residuals {r1:.3e} {r2:.3e} {r3:.3e}, ratios {ratios:.2?}"),
    ))
}

/// Norm-equivalence sandwiches of `V1` and `V2` on 1000 random states
/// each, zero violations with the registry constants.
pub fn check_norm_sandwiches(seed: u64) -> Result<CheckOutcome> {
    let l = 3.0;
    let grid = Grid::new(l, 120)?;
    let reg = ConstantsRegistry::uniform_identity();
    let p1 = SystemParams::new(0.1, -1.0, 1.0, 0.1, l, Regime::FastKdv);
    let p2 = SystemParams::new(0.4, -0.8, 0.6, 0.3, l, Regime::FastOde);
    let (lo1, hi1) = lyapunov::v1_equivalence_constants(&p1, &grid, &reg)?;
    let (lo2, hi2) = lyapunov::v2_equivalence_constants(&p2, &reg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    for _ in 0..1000 {
        let y: Vec<f64> = (0..=grid.n())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let st = CoupledState::new(0.0, y, rng.random_range(-1.0..1.0));
        let e = lyapunov::eval_energy(&st, &grid);
        let v1 = lyapunov::eval_v1(&st, &p1, &grid, WeightChoice::Uniform)?;
        let v2 = lyapunov::eval_v2(&st, &p2, &grid, WeightChoice::Uniform, &reg)?;
        let tol = 1e-12 * e.max(1.0);
        if v1 < lo1 * e - tol || v1 > hi1 * e + tol {
            violations += 1;
        }
        if v2 < lo2 * e - tol || v2 > hi2 * e + tol {
            violations += 1;
        }
    }
    Ok(CheckOutcome::new(
        "norm-equivalence-sandwiches",
        violations == 0,
        format!("violations: {violations} / 2000 -- V1 [{lo1:.3e}, {hi1:.3e}], V2 [{lo2:.3e}, {hi2:.3e}]"),
    ))
}

/// Spectral degeneracy at the first critical length and stability away
/// from it: abscissa near zero at `L = 2 pi` and strictly negative,
/// refinement-stable, at `L = 3`.
pub fn check_critical_spectrum() -> Result<CheckOutcome> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let a200 = spectral::abscissa_of(
        &spectral::assemble_kdv_block(&Grid::new(two_pi, 200)?, 1.0)?,
        600,
    )?;
    let a400 = spectral::abscissa_of(
        &spectral::assemble_kdv_block(&Grid::new(two_pi, 400)?, 1.0)?,
        600,
    )?;
    let s300 = spectral::abscissa_of(
        &spectral::assemble_kdv_block(&Grid::new(3.0, 300)?, 1.0)?,
        600,
    )?;
    let s600 = spectral::abscissa_of(
        &spectral::assemble_kdv_block(&Grid::new(3.0, 600)?, 1.0)?,
        600,
    )?;
    let critical_ok = a400.abs() < 1e-2 && a400.abs() <= a200.abs() + 1e-12;
    let stable_ok = s300 < 0.0 && s600 < 0.0 && ((s600 - s300) / s600).abs() < 0.1;
    Ok(CheckOutcome::new(
        "critical-length-spectrum",
        critical_ok && stable_ok,
        format!("at 2pi: {a200:+.2e} -> {a400:+.2e}; at 3: {s300:+.5} -> {s600:+.5}"),
    ))
}

/// Runs the whole property suite.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_profile_residuals()?,
        check_mms_orders()?,
        check_energy_balance()?,
        check_norm_sandwiches(seed)?,
        check_critical_spectrum()?,
    ])
}
