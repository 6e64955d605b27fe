//! Stability predicates, Tikhonov error assembly with epsilon sweeps for
//! both regimes, and parameter-space stability maps.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::integrator::{self, SimOptions, SubsystemKind};
use crate::lyapunov::{fit_decay, ConstantsRegistry, FunctionalSet};
use crate::model::{CoupledState, Disturbance, Grid, Regime, SystemParams};
use crate::operator;
use crate::profiles;
use crate::spectral;

/// Reduced-system condition of the regime-1 theorem: `b - a c < 0` strictly.
pub fn predicate_thm1(a: f64, b: f64, c: f64) -> bool {
    b - a * c < 0.0
}

/// Root condition of the regime-1 any-epsilon proposition: with
/// `alpha = lambda / (2 ||M||^2 eps^2)` and `a^2 < alpha / (4 kappa2)`, the
/// polynomial `X^2/alpha - X + kappa2 a^2` has roots `X1 < X2` and the
/// predicate is `X1 < -(b - a c) < X2`.
pub fn predicate_prop1(
    a: f64,
    b: f64,
    c: f64,
    eps: f64,
    registry: &ConstantsRegistry,
    m_norm_sq: f64,
) -> Result<bool> {
    if registry.lambda <= 0.0 {
        return Err(Error::ZeroLambda);
    }
    let target = -(b - a * c);
    let denom = 2.0 * m_norm_sq * eps * eps;
    if denom == 0.0 {
        // M = 0 limit: the roots degenerate to kappa2 a^2 and +infinity.
        return Ok(registry.kappa2 * a * a < target);
    }
    let alpha = registry.lambda / denom;
    if a * a >= alpha / (4.0 * registry.kappa2) {
        return Ok(false);
    }
    let disc = (1.0 - 4.0 * registry.kappa2 * a * a / alpha).sqrt();
    let x1 = alpha * (1.0 - disc) / 2.0;
    let x2 = alpha * (1.0 + disc) / 2.0;
    Ok(x1 < target && target < x2)
}

/// Regime-2 any-epsilon proposition: `b < 0` and `a^2 c^2 / b^2 < kappa3 / (4 kappa2)`.
pub fn predicate_prop2(a: f64, b: f64, c: f64, registry: &ConstantsRegistry) -> bool {
    b < 0.0 && (a * a * c * c) / (b * b) < registry.kappa3 / (4.0 * registry.kappa2)
}

/// Regime-2 small-epsilon theorem: `b < 0` and `a^2 c^2 / b^2 < kappa3 / kappa2`.
pub fn predicate_thm2(a: f64, b: f64, c: f64, registry: &ConstantsRegistry) -> bool {
    b < 0.0 && (a * a * c * c) / (b * b) < registry.kappa3 / registry.kappa2
}

/// Regime-2 Tikhonov hypothesis: `b < 0` and
/// `a^2 c^2 / b^2 < kappa3 / (44 kappa2 eps^2)`.
pub fn predicate_tikh2(a: f64, b: f64, c: f64, eps: f64, registry: &ConstantsRegistry) -> bool {
    b < 0.0 && (a * a * c * c) / (b * b) < registry.kappa3 / (44.0 * registry.kappa2 * eps * eps)
}

type ShapeFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Smooth initial shapes of the sweep initial data: both vanish at the two
/// ends, so reconstructed initial data stay boundary compatible.
#[derive(Clone)]
pub struct BaseShapes {
    pub yhat_shape: Arc<ShapeFn>,
    pub ybar_shape: Arc<ShapeFn>,
    pub zeta: f64,
}

impl Default for BaseShapes {
    fn default() -> Self {
        Self {
            yhat_shape: Arc::new(|x, l| {
                (2.0 * std::f64::consts::PI * x / l).sin() * x * (l - x) / (l * l)
            }),
            ybar_shape: Arc::new(|x, l| {
                (4.0 * std::f64::consts::PI * x / l).sin() * x * (l - x) / (l * l)
            }),
            zeta: 1.0,
        }
    }
}

impl BaseShapes {
    /// Samples a shape on the grid and normalizes it to unit trapezoidal
    /// `L^2` norm.
    fn sample_unit(&self, which: Which, grid: &Grid) -> Vec<f64> {
        let f = match which {
            Which::YHat => &self.yhat_shape,
            Which::YBar => &self.ybar_shape,
        };
        let mut v: Vec<f64> = grid.nodes().map(|x| f(x, grid.l())).collect();
        let nrm = grid.norm_sq(&v).sqrt();
        if nrm > 0.0 {
            for x in &mut v {
                *x /= nrm;
            }
        }
        v
    }
}

enum Which {
    YHat,
    YBar,
}

/// Regime-1 Tikhonov error variables at one time:
/// `z^ = z - zbar`, `y^ = y + f zbar - ybar(t/eps)`.
#[derive(Debug, Clone)]
pub struct ErrorStateR1 {
    pub z_hat: f64,
    pub y_hat: Vec<f64>,
}

pub fn assemble_error_r1(
    y: &[f64],
    z: f64,
    f_values: &[f64],
    zbar: f64,
    ybar_stretched: &[f64],
) -> ErrorStateR1 {
    let y_hat = y
        .iter()
        .zip(f_values)
        .zip(ybar_stretched)
        .map(|((y, f), yb)| y + f * zbar - yb)
        .collect();
    ErrorStateR1 {
        z_hat: z - zbar,
        y_hat,
    }
}

/// Regime-2 Tikhonov error variables at one time:
/// `z^ = z + (c/b) y_x(0) - zbar(t/eps)`, `y^ = y - ybar(t)`,
/// `v^ = v - vbar`.
#[derive(Debug, Clone)]
pub struct ErrorStateR2 {
    pub z_hat: f64,
    pub y_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
}

pub fn assemble_error_r2(
    state: &CoupledState,
    params: &SystemParams,
    grid: &Grid,
    ybar: &[f64],
    zbar_stretched: f64,
) -> Result<ErrorStateR2> {
    if params.b == 0.0 {
        return Err(Error::ZeroB);
    }
    let op = operator::build_operator(grid, params.a)?;
    let y_hat: Vec<f64> = state.y.iter().zip(ybar).map(|(a, b)| a - b).collect();
    let trace = op.trace_yx0_interior(state.interior());
    let z_hat = state.z + (params.c / params.b) * trace - zbar_stretched;
    // v of the full state under its feedback datum, vbar of the reduced
    // state under the reflective datum.
    let v = integrator::compute_v(state, params, grid)?;
    let gamma = -(params.a * params.c) / params.b;
    let ybar_int = &ybar[1..ybar.len() - 1];
    let tr_bar = op.trace_yx0_interior(ybar_int);
    let vbar_int = op.apply(ybar_int, gamma * tr_bar);
    let mut v_hat = Vec::with_capacity(ybar.len());
    v_hat.push(0.0);
    for (vi, vb) in v[1..v.len() - 1].iter().zip(&vbar_int) {
        v_hat.push(vi - params.epsilon * vb);
    }
    v_hat.push(0.0);
    Ok(ErrorStateR2 {
        z_hat,
        y_hat,
        v_hat,
    })
}

/// Discrete `H^3` surrogate: `L^2` norms of `y` and of the one-sided
/// difference derivatives `D1 y, D2 y, D3 y`. A surrogate of the continuum
/// norm, not a claim about it.
pub fn h3_surrogate_norm(y: &[f64], grid: &Grid) -> f64 {
    let h = grid.h();
    let mut s = grid.norm_sq(y);
    s += grid.norm_sq(&operator::d1_nodal(y, h));
    s += grid.norm_sq(&operator::d2_nodal(y, h));
    s += grid.norm_sq(&operator::d3_nodal(y, h));
    s.sqrt()
}

/// One epsilon of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub eps: f64,
    pub dt: f64,
    /// Theorem error norm at `t_eval`.
    pub error: f64,
    /// Fitted decay rate of the error-norm series over `[0, t_eval]`.
    pub mu_hat: f64,
    pub fit_r_squared: f64,
    /// `|y0'(L) - a z0|` of the constructed initial data (regime 2 records
    /// the system compatibility condition; regime 1 stores 0).
    pub compat_residual: f64,
}

/// Epsilon-sweep outcome with the fitted log-log slope.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub slope: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `log(err)` against `log(eps)` plus `r^2`.
pub fn fit_loglog(eps: &[f64], errors: &[f64]) -> (f64, f64) {
    assert_eq!(eps.len(), errors.len());
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let slope = sxy / sxx;
    let r2 = if syy <= f64::EPSILON * n {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() || eps_list.iter().any(|&e| e <= 0.0 || e >= 1.0) {
        return Err(Error::PredicateViolated("eps_list must lie in (0, 1)"));
    }
    Ok(())
}

/// Regime-1 Tikhonov sweep. For each epsilon the initial data follow the
/// theorem scalings exactly:
/// `yhat0 = eps^{3/2} phi`, `zhat0 = eps^{3/2} zeta`,
/// `zbar0 = eps^{1/2} zeta`, `ybar0 = eps^{3/2} psi`, with
/// `y0 = yhat0 + ybar0 - f zbar0` and `z0 = zhat0 + zbar0`. The full
/// system, the scalar reduced model and the stretched-time boundary layer
/// are integrated on aligned grids and the error norm
/// `||y + f zbar - ybar(t/eps)|| + |z - zbar|` is fitted against epsilon.
pub fn tikhonov_sweep_r1(
    shapes: &BaseShapes,
    params: &SystemParams,
    eps_list: &[f64],
    t_eval: f64,
    grid: &Grid,
    dt_rule: impl Fn(f64) -> f64 + Sync,
) -> Result<SweepReport> {
    if !predicate_thm1(params.a, params.b, params.c) {
        return Err(Error::PredicateViolated("thm1 requires b - a c < 0"));
    }
    check_eps_list(eps_list)?;
    let f_values: Vec<f64> = grid
        .nodes()
        .map(|x| profiles::eval_f(x, params.a, grid.l()))
        .collect::<Result<_>>()?;
    let phi = shapes.sample_unit(Which::YHat, grid);
    let psi = shapes.sample_unit(Which::YBar, grid);

    let points: Vec<Result<SweepPoint>> = exec::map_batch(eps_list, |&eps| {
        let dt = dt_rule(eps);
        let p = SystemParams {
            epsilon: eps,
            regime: Regime::FastKdv,
            ..*params
        };
        let s32 = eps.powf(1.5);
        let s12 = eps.sqrt();
        let yhat0: Vec<f64> = phi.iter().map(|v| s32 * v).collect();
        let zhat0 = s32 * shapes.zeta;
        let zbar0 = s12 * shapes.zeta;
        let ybar0: Vec<f64> = psi.iter().map(|v| s32 * v).collect();
        let y0: Vec<f64> = yhat0
            .iter()
            .zip(&ybar0)
            .zip(&f_values)
            .map(|((yh, yb), f)| yh + yb - f * zbar0)
            .collect();
        let z0 = zhat0 + zbar0;

        let full_ic = CoupledState::new(0.0, y0, z0);
        let opts = SimOptions::new(t_eval, dt);
        let full = integrator::simulate(
            &p,
            grid,
            &full_ic,
            &opts,
            &Disturbance::zero(),
            &FunctionalSet::none(),
        )?;
        let reduced = integrator::simulate_subsystem(
            SubsystemKind::ReducedR1,
            &p,
            grid,
            &CoupledState::new(0.0, vec![0.0; grid.n() + 1], zbar0),
            &opts,
        )?;
        let layer_opts = SimOptions::new(t_eval / eps, dt / eps);
        let layer = integrator::simulate_subsystem(
            SubsystemKind::BoundaryLayerR1,
            &p,
            grid,
            &CoupledState::new(0.0, ybar0.clone(), 0.0),
            &layer_opts,
        )?;

        let nsamp = full.len();
        debug_assert_eq!(layer.len(), nsamp);
        let mut errs = Vec::with_capacity(nsamp);
        for k in 0..nsamp {
            let e = assemble_error_r1(
                &full.snapshots[k].y,
                full.z_series[k],
                &f_values,
                reduced.z_series[k],
                &layer.snapshots[k].y,
            );
            errs.push(grid.norm_sq(&e.y_hat).sqrt() + e.z_hat.abs());
        }
        let fit = fit_decay(&full.times, &errs);
        let (mu_hat, r2) = fit
            .map(|f| (f.mu_hat, f.r_squared))
            .unwrap_or((f64::NAN, f64::NAN));
        Ok(SweepPoint {
            eps,
            dt,
            error: *errs.last().unwrap(),
            mu_hat,
            fit_r_squared: r2,
            compat_residual: 0.0,
        })
    });
    let points: Vec<SweepPoint> = points.into_iter().collect::<Result<_>>()?;
    let errs: Vec<f64> = points.iter().map(|p| p.error).collect();
    let (slope, r_squared) = fit_loglog(eps_list, &errs);
    Ok(SweepReport {
        points,
        slope,
        r_squared,
    })
}

/// Regime-2 Tikhonov sweep with the discrete `H^3` surrogate norm. Initial
/// scalings: `yhat0 = eps^{5/2} phi`, `ybar0 = eps^{3/2} psi`,
/// `zbar0 = zhat0 = eps^{5/2} zeta`, `y0 = yhat0 + ybar0`,
/// `z0 = zbar0 + zhat0 - (c/b) y0_x(0)` (discrete trace). The compatibility
/// residual `|y0'(L) - a z0|` of each point is recorded.
pub fn tikhonov_sweep_r2(
    shapes: &BaseShapes,
    params: &SystemParams,
    eps_list: &[f64],
    t_eval: f64,
    grid: &Grid,
    registry: &ConstantsRegistry,
    dt_rule: impl Fn(f64) -> f64 + Sync,
) -> Result<SweepReport> {
    if params.b >= 0.0 {
        return Err(Error::NonNegativeB(params.b));
    }
    check_eps_list(eps_list)?;
    for &eps in eps_list {
        if !predicate_tikh2(params.a, params.b, params.c, eps, registry) {
            return Err(Error::PredicateViolated(
                "tikh2 requires a^2 c^2 / b^2 < kappa3 / (44 kappa2 eps^2)",
            ));
        }
    }
    let phi = shapes.sample_unit(Which::YHat, grid);
    let psi = shapes.sample_unit(Which::YBar, grid);
    let op = operator::build_operator(grid, params.a)?;

    let points: Vec<Result<SweepPoint>> = exec::map_batch(eps_list, |&eps| {
        let dt = dt_rule(eps);
        let p = SystemParams {
            epsilon: eps,
            regime: Regime::FastOde,
            ..*params
        };
        let s52 = eps.powf(2.5);
        let s32 = eps.powf(1.5);
        let yhat0: Vec<f64> = phi.iter().map(|v| s52 * v).collect();
        let ybar0: Vec<f64> = psi.iter().map(|v| s32 * v).collect();
        let y0: Vec<f64> = yhat0.iter().zip(&ybar0).map(|(a, b)| a + b).collect();
        let zbar0 = s52 * shapes.zeta;
        let zhat0 = s52 * shapes.zeta;
        let y0_state = CoupledState::new(0.0, y0, 0.0);
        let tr0 = op.trace_yx0_interior(y0_state.interior());
        let z0 = zbar0 + zhat0 - (p.c / p.b) * tr0;

        let h = grid.h();
        let n = grid.n();
        let right_trace =
            (3.0 * y0_state.y[n] - 4.0 * y0_state.y[n - 1] + y0_state.y[n - 2]) / (2.0 * h);
        let compat_residual = (right_trace - p.a * z0).abs();

        let full_ic = CoupledState::new(0.0, y0_state.y.clone(), z0);
        // The regime-2 theorem lives on strong solutions; two implicit-Euler
        // startup steps damp the parasitic transient that the H^3 surrogate
        // norm would otherwise amplify through its third-difference term.
        let opts = SimOptions::new(t_eval, dt).with_startup(2);
        let full = integrator::simulate(
            &p,
            grid,
            &full_ic,
            &opts,
            &Disturbance::zero(),
            &FunctionalSet::none(),
        )?;
        let reduced = integrator::simulate_subsystem(
            SubsystemKind::ReducedR2,
            &p,
            grid,
            &CoupledState::new(0.0, ybar0.clone(), 0.0),
            &opts,
        )?;
        let layer_opts = SimOptions::new(t_eval / eps, dt / eps);
        let layer = integrator::simulate_subsystem(
            SubsystemKind::BoundaryLayerR2,
            &p,
            grid,
            &CoupledState::new(0.0, vec![0.0; grid.n() + 1], zbar0),
            &layer_opts,
        )?;

        let nsamp = full.len();
        let mut errs = Vec::with_capacity(nsamp);
        for k in 0..nsamp {
            let yk = &full.snapshots[k].y;
            let diff: Vec<f64> = yk
                .iter()
                .zip(&reduced.snapshots[k].y)
                .map(|(a, b)| a - b)
                .collect();
            let z_hat = full.z_series[k] + (p.c / p.b) * full.yx0_series[k] - layer.z_series[k];
            errs.push(h3_surrogate_norm(&diff, grid) + z_hat.abs());
        }
        let fit = fit_decay(&full.times, &errs);
        let (mu_hat, r2) = fit
            .map(|f| (f.mu_hat, f.r_squared))
            .unwrap_or((f64::NAN, f64::NAN));
        Ok(SweepPoint {
            eps,
            dt,
            error: *errs.last().unwrap(),
            mu_hat,
            fit_r_squared: r2,
            compat_residual,
        })
    });
    let points: Vec<SweepPoint> = points.into_iter().collect::<Result<_>>()?;
    let errs: Vec<f64> = points.iter().map(|p| p.error).collect();
    let (slope, r_squared) = fit_loglog(eps_list, &errs);
    Ok(SweepReport {
        points,
        slope,
        r_squared,
    })
}

/// Parameter box of a stability map.
#[derive(Debug, Clone, Copy)]
pub struct MapRanges {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
}

/// One sampled parameter triple with its spectral classification.
#[derive(Debug, Clone, Copy)]
pub struct MapRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub abscissa: f64,
    pub pred_thm1: bool,
    pub pred_thm2: bool,
    /// Spectral verdict (`abscissa < 0`) equals the regime-appropriate
    /// theorem predicate.
    pub agree: bool,
}

/// Samples parameter triples uniformly in the box and classifies each by
/// the spectral abscissa of the discretized generator alongside the
/// theorem predicates. Deterministic per `(seed, index)` and independent
/// of thread count.
#[allow(clippy::too_many_arguments)]
pub fn stability_map(
    ranges: &MapRanges,
    eps: f64,
    regime: Regime,
    l: f64,
    grid: &Grid,
    samples: usize,
    registry: &ConstantsRegistry,
    seed: u64,
) -> Result<Vec<MapRecord>> {
    let idx: Vec<u64> = (0..samples as u64).collect();
    let recs: Vec<Result<MapRecord>> = exec::map_batch(&idx, |&i| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(i.wrapping_mul(0x9E3779B97F4A7C15)));
        let a = rng.random_range(ranges.a.0..=ranges.a.1);
        let b = rng.random_range(ranges.b.0..=ranges.b.1);
        let c = rng.random_range(ranges.c.0..=ranges.c.1);
        let params = SystemParams::new(a, b, c, eps, l, regime);
        let g = spectral::assemble_generator(&params, grid)?;
        let abscissa = spectral::spectral_abscissa(&g)?;
        let pred_thm1 = predicate_thm1(a, b, c);
        let pred_thm2 = predicate_thm2(a, b, c, registry);
        let relevant = match regime {
            Regime::FastKdv => pred_thm1,
            Regime::FastOde => pred_thm2,
        };
        Ok(MapRecord {
            a,
            b,
            c,
            abscissa,
            pred_thm1,
            pred_thm2,
            agree: relevant == (abscissa < 0.0),
        })
    });
    recs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const L: f64 = 3.0;

    #[test]
    fn thm1_predicate_cases() {
        assert!(predicate_thm1(0.1, -1.0, 1.0)); // b - a c = -1.1
        assert!(!predicate_thm1(0.0, 1.0, 0.0));
        assert!(!predicate_thm1(1.0, 1.0, 1.0)); // boundary: b - a c = 0, strict
    }

    #[test]
    fn prop1_needs_positive_lambda() {
        let reg = ConstantsRegistry::uniform_identity();
        assert_eq!(
            predicate_prop1(0.1, -1.0, 1.0, 0.1, &reg, 1.0),
            Err(Error::ZeroLambda)
        );
    }

    #[test]
    fn prop1_zero_gain_reduces_to_interval_check() {
        // a = 0: roots are 0 and alpha, predicate <=> 0 < -b < alpha.
        let reg = ConstantsRegistry::uniform_identity().with_lambda(0.5);
        let m_sq = 2.0;
        let eps = 0.5;
        let alpha = 0.5 / (2.0 * m_sq * eps * eps);
        assert!(predicate_prop1(0.0, -alpha * 0.5, 0.0, eps, &reg, m_sq).unwrap());
        assert!(!predicate_prop1(0.0, -alpha * 1.5, 0.0, eps, &reg, m_sq).unwrap());
        assert!(!predicate_prop1(0.0, 0.5, 0.0, eps, &reg, m_sq).unwrap());
    }

    #[test]
    fn prop1_discriminant_boundary_is_false() {
        let reg = ConstantsRegistry::uniform_identity().with_lambda(1.0);
        let m_sq = 1.0;
        let eps = 0.5;
        let alpha: f64 = 1.0 / (2.0 * m_sq * eps * eps);
        let a = (alpha / 4.0).sqrt(); // a^2 = alpha / (4 kappa2) exactly
        assert!(!predicate_prop1(a, -alpha / 2.0, 0.0, eps, &reg, m_sq).unwrap());
    }

    #[test]
    fn prop1_root_formula_oracle() {
        // (a, b, c, eps) = (0.05, -0.5, 1, 0.5), lambda fitted = 0.3,
        // kappa2 = 1, ||M||^2 = 1.3: direct root computation.
        let reg = ConstantsRegistry::uniform_identity().with_lambda(0.3);
        let (a, b, c, eps, m_sq) = (0.05f64, -0.5, 1.0, 0.5, 1.3);
        let alpha = 0.3 / (2.0 * m_sq * eps * eps);
        let disc = (1.0f64 - 4.0 * a * a / alpha).sqrt();
        let x1 = alpha * (1.0 - disc) / 2.0;
        let x2 = alpha * (1.0 + disc) / 2.0;
        let target = -(b - a * c);
        let expect = x1 < target && target < x2;
        assert_eq!(predicate_prop1(a, b, c, eps, &reg, m_sq).unwrap(), expect);
    }

    #[test]
    fn regime2_predicates_agree_with_arithmetic() {
        let reg = ConstantsRegistry::uniform_identity();
        for p in [
            predicate_prop2(1.0, 0.0, 1.0, &reg),
            predicate_thm2(1.0, 0.0, 1.0, &reg),
            predicate_tikh2(1.0, 0.0, 1.0, 0.1, &reg),
        ] {
            assert!(!p, "b = 0 must fail all three");
        }
        for p in [
            predicate_prop2(0.0, -1.0, 5.0, &reg),
            predicate_thm2(0.0, -1.0, 5.0, &reg),
            predicate_tikh2(0.0, -1.0, 5.0, 0.1, &reg),
        ] {
            assert!(p, "a = 0, b < 0 must pass all three");
        }
        // (a, c, b) = (1, 1, -2): ratio = 0.25 < 1 (thm2 true) but the
        // prop2 threshold 0.25 is strict (false).
        assert!(predicate_thm2(1.0, -2.0, 1.0, &reg));
        assert!(!predicate_prop2(1.0, -2.0, 1.0, &reg));
    }

    #[test]
    fn prop2_implies_thm2() {
        let reg = ConstantsRegistry::uniform_identity();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let a = rng.random_range(-2.0..2.0);
            let b = rng.random_range(-2.0..-0.01);
            let c = rng.random_range(-2.0..2.0);
            if predicate_prop2(a, b, c, &reg) {
                assert!(predicate_thm2(a, b, c, &reg));
            }
        }
    }

    #[test]
    fn loglog_fit_recovers_synthetic_exponents() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let lin: Vec<f64> = eps.iter().map(|e| 3.0 * e).collect();
        let (s, r2) = fit_loglog(&eps, &lin);
        assert_relative_eq!(s, 1.0, max_relative = 1e-10);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-10);
        let quad: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        let (s, _) = fit_loglog(&eps, &quad);
        assert_relative_eq!(s, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn sweep_r1_rejects_bad_hypotheses() {
        let grid = Grid::new(L, 40).unwrap();
        let shapes = BaseShapes::default();
        let params = SystemParams::new(0.1, 1.0, 0.0, 0.1, L, Regime::FastKdv);
        assert!(matches!(
            tikhonov_sweep_r1(&shapes, &params, &[0.1], 1.0, &grid, integrator::dt_rule),
            Err(Error::PredicateViolated(_))
        ));
        let ok = SystemParams::new(0.1, -1.0, 1.0, 0.1, L, Regime::FastKdv);
        assert!(matches!(
            tikhonov_sweep_r1(&shapes, &ok, &[1.5], 1.0, &grid, integrator::dt_rule),
            Err(Error::PredicateViolated(_))
        ));
    }

    #[test]
    fn error_assembly_round_trips_at_t_zero() {
        // The constructed initial data must reproduce the prescribed
        // scalings exactly when reassembled.
        let grid = Grid::new(L, 60).unwrap();
        let shapes = BaseShapes::default();
        let eps = 0.1f64;
        let phi = shapes.sample_unit(Which::YHat, &grid);
        let psi = shapes.sample_unit(Which::YBar, &grid);
        let f_values: Vec<f64> = grid
            .nodes()
            .map(|x| profiles::eval_f(x, 0.1, L).unwrap())
            .collect();
        let s32 = eps.powf(1.5);
        let zbar0 = eps.sqrt();
        let y0: Vec<f64> = phi
            .iter()
            .zip(&psi)
            .zip(&f_values)
            .map(|((p, q), f)| s32 * p + s32 * q - f * zbar0)
            .collect();
        let z0 = s32 + zbar0;
        let ybar0: Vec<f64> = psi.iter().map(|v| s32 * v).collect();
        let e = assemble_error_r1(&y0, z0, &f_values, zbar0, &ybar0);
        assert_relative_eq!(e.z_hat, s32, max_relative = 1e-12);
        for (got, want) in e.y_hat.iter().zip(&phi) {
            assert_relative_eq!(*got, s32 * want, max_relative = 1e-10, epsilon = 1e-14);
        }
        assert_relative_eq!(grid.norm_sq(&e.y_hat).sqrt(), s32, max_relative = 1e-10);
    }

    #[test]
    fn stability_map_decoupled_line() {
        // a = c = 0: stable iff b < 0 (the KdV block at L = 3 is stable).
        let grid = Grid::new(L, 48).unwrap();
        let reg = ConstantsRegistry::uniform_identity();
        let ranges = MapRanges {
            a: (0.0, 0.0),
            b: (-1.0, 1.0),
            c: (0.0, 0.0),
        };
        let recs = stability_map(&ranges, 0.5, Regime::FastOde, L, &grid, 24, &reg, 11).unwrap();
        for r in recs {
            assert_eq!(
                r.abscissa < 0.0,
                r.b < 0.0,
                "b = {} abscissa = {}",
                r.b,
                r.abscissa
            );
        }
    }

    #[test]
    fn stability_map_is_deterministic() {
        let grid = Grid::new(L, 32).unwrap();
        let reg = ConstantsRegistry::uniform_identity();
        let ranges = MapRanges {
            a: (-0.5, 0.5),
            b: (-1.0, 0.5),
            c: (-1.0, 1.0),
        };
        let r1 = stability_map(&ranges, 0.1, Regime::FastKdv, L, &grid, 10, &reg, 99).unwrap();
        let r2 = stability_map(&ranges, 0.1, Regime::FastKdv, L, &grid, 10, &reg, 99).unwrap();
        for (x, y) in r1.iter().zip(&r2) {
            assert_eq!(x.a, y.a);
            assert_eq!(x.abscissa, y.abscissa);
        }
    }
}
