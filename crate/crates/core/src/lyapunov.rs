//! Energy and Lyapunov functional evaluation, the ISS energy-balance
//! monitor, and exponential decay-rate fitting.
//!
//! The ISS functional `W` of the disturbed equation is not reconstructible
//! from the statements used here (only its properties are), so it is a
//! pluggable weighted `L^2` energy: `W(y) = \int w(x) y^2 dx` with
//! `w = 1` (UNIFORM) or `w = 1 + beta x` (AFFINE). The registry carries the
//! constants `(lambda, kappa_1..3, c_lower, c_upper)` attached to the chosen
//! weight; for UNIFORM the energy balance is an exact identity with
//! `kappa_2 = kappa_3 = 1` and `lambda = 0`, and strict decay rates are
//! recovered empirically by fitting.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{CoupledState, Grid, SystemParams, Trajectory};
use crate::profiles;

/// ISS constants attached to a weight choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsRegistry {
    /// Strict decay constant (`>= 0`; 0 for the exact uniform identity).
    pub lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

impl Default for ConstantsRegistry {
    /// Identity constants of the uniform weight, for which the energy
    /// balance holds exactly in the un-halved convention.
    fn default() -> Self {
        Self {
            lambda: 0.0,
            kappa1: 1.0,
            kappa2: 1.0,
            kappa3: 1.0,
            c_lower: 1.0,
            c_upper: 1.0,
        }
    }
}

impl ConstantsRegistry {
    pub fn uniform_identity() -> Self {
        Self::default()
    }

    /// Registry for a weight choice on a domain of length `l`; the norm
    /// equivalence constants are exact by construction.
    pub fn for_weight(weight: WeightChoice, l: f64) -> Self {
        let (c_lower, c_upper) = weight.norm_bounds(l);
        Self {
            c_lower,
            c_upper,
            ..Self::default()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Weight of the pluggable ISS energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightChoice {
    Uniform,
    /// `w(x) = 1 + beta x`, `beta > 0`.
    Affine(f64),
}

impl WeightChoice {
    pub fn weight_at(&self, x: f64) -> f64 {
        match self {
            WeightChoice::Uniform => 1.0,
            WeightChoice::Affine(beta) => 1.0 + beta * x,
        }
    }

    /// `(c_lower, c_upper)` with `c_lower ||y||^2 <= W(y) <= c_upper ||y||^2`.
    pub fn norm_bounds(&self, l: f64) -> (f64, f64) {
        match self {
            WeightChoice::Uniform => (1.0, 1.0),
            WeightChoice::Affine(beta) => (1.0, 1.0 + beta * l),
        }
    }
}

/// `||y||^2 + z^2` with trapezoidal quadrature.
pub fn eval_energy(state: &CoupledState, grid: &Grid) -> f64 {
    grid.norm_sq(&state.y) + state.z * state.z
}

/// Weighted energy `W(y) = sum h_i w(x_i) y_i^2`.
pub fn eval_w(y: &[f64], grid: &Grid, weight: WeightChoice) -> f64 {
    let mut s = 0.0;
    for (i, yi) in y.iter().enumerate() {
        s += grid.quad_weight(i) * weight.weight_at(grid.x(i)) * yi * yi;
    }
    s
}

/// `V1(y, z) = eps W(y) + 1/2 (eps \int M y dx - z)^2`.
pub fn eval_v1(
    state: &CoupledState,
    params: &SystemParams,
    grid: &Grid,
    weight: WeightChoice,
) -> Result<f64> {
    let eps = params.epsilon;
    let m = profiles::sample_profile(grid, profiles::ProfileKind::M, params.c)?;
    let im = grid.inner(&m.values, &state.y);
    let r = eps * im - state.z;
    Ok(eps * eval_w(&state.y, grid, weight) + 0.5 * r * r)
}

/// Norm-equivalence constants `(nu_lower, nu_upper)` of `V1`, computed with
/// the discrete `||M||^2` of the grid so the sandwich holds exactly on
/// discrete states.
pub fn v1_equivalence_constants(
    params: &SystemParams,
    grid: &Grid,
    registry: &ConstantsRegistry,
) -> Result<(f64, f64)> {
    let eps = params.epsilon;
    let m = profiles::sample_profile(grid, profiles::ProfileKind::M, params.c)?;
    let m_sq = grid.norm_sq(&m.values);
    let upper = (eps * registry.c_upper + eps * eps * m_sq).max(1.0);
    let ce = registry.c_lower * eps;
    let lower = (ce / 2.0).min(0.5 * ce / (eps * eps * m_sq + ce));
    Ok((lower, upper))
}

/// `V2(y, z) = -(eps kappa2 a^2 / b) z^2 + W(y)`, requiring `b < 0`.
pub fn eval_v2(
    state: &CoupledState,
    params: &SystemParams,
    grid: &Grid,
    weight: WeightChoice,
    registry: &ConstantsRegistry,
) -> Result<f64> {
    if params.b >= 0.0 {
        return Err(Error::NonNegativeB(params.b));
    }
    let coeff = -params.epsilon * registry.kappa2 * params.a * params.a / params.b;
    Ok(coeff * state.z * state.z + eval_w(&state.y, grid, weight))
}

/// `(nu_lower, nu_upper)` of `V2`.
pub fn v2_equivalence_constants(
    params: &SystemParams,
    registry: &ConstantsRegistry,
) -> Result<(f64, f64)> {
    if params.b >= 0.0 {
        return Err(Error::NonNegativeB(params.b));
    }
    let q = -params.epsilon * registry.kappa2 * params.a * params.a / params.b;
    Ok((registry.c_lower.min(q), registry.c_upper.max(q)))
}

/// `V3(v, z~) = W(v) - eps kappa2 a^2 b z~^2`, requiring `b < 0`.
pub fn eval_v3(
    v: &[f64],
    z_tilde: f64,
    params: &SystemParams,
    grid: &Grid,
    weight: WeightChoice,
    registry: &ConstantsRegistry,
) -> Result<f64> {
    if params.b >= 0.0 {
        return Err(Error::NonNegativeB(params.b));
    }
    let coeff = -params.epsilon * registry.kappa2 * params.a * params.a * params.b;
    Ok(eval_w(v, grid, weight) + coeff * z_tilde * z_tilde)
}

/// `V4(v^, z^) = W(v^) - 3 eps kappa2 a^2 b z^2`, requiring `b < 0`.
pub fn eval_v4(
    v_hat: &[f64],
    z_hat: f64,
    params: &SystemParams,
    grid: &Grid,
    weight: WeightChoice,
    registry: &ConstantsRegistry,
) -> Result<f64> {
    if params.b >= 0.0 {
        return Err(Error::NonNegativeB(params.b));
    }
    let coeff = -3.0 * params.epsilon * registry.kappa2 * params.a * params.a * params.b;
    Ok(eval_w(v_hat, grid, weight) + coeff * z_hat * z_hat)
}

/// `(nu_lower, nu_upper)` of `V4`.
pub fn v4_equivalence_constants(
    params: &SystemParams,
    registry: &ConstantsRegistry,
) -> Result<(f64, f64)> {
    if params.b >= 0.0 {
        return Err(Error::NonNegativeB(params.b));
    }
    let q = -3.0 * params.epsilon * registry.kappa2 * params.a * params.a * params.b;
    Ok((registry.c_lower.min(q), registry.c_upper.max(q)))
}

/// Per-step residual of the energy balance along a densely sampled
/// trajectory.
///
/// For the UNIFORM weight the exact identity
/// `d/dt ||y||^2 = datum^2 - y_x(0)^2 + 2 \int d1 y` (divided by `eps` in
/// the fast-PDE regime) is checked and `|lhs - rhs|` is returned per step.
/// For other weights the signed slack of the ISS inequality with the
/// registry constants is returned instead (diagnostic only).
pub fn iss_balance_monitor(
    traj: &Trajectory,
    params: &SystemParams,
    grid: &Grid,
    weight: WeightChoice,
    registry: &ConstantsRegistry,
) -> Result<Vec<f64>> {
    if !traj.has_dense_snapshots() {
        return Err(Error::DenseSnapshotsRequired);
    }
    let (eps_y, _) = params.epsilon_scales();
    let uniform = matches!(weight, WeightChoice::Uniform);
    let energies: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| eval_w(&s.y, grid, weight))
        .collect();
    let mut out = Vec::with_capacity(traj.len().saturating_sub(1));
    for k in 0..traj.len().saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k];
        let lhs = (energies[k + 1] - energies[k]) / dt;
        let datum = 0.5 * (traj.datum_series[k] + traj.datum_series[k + 1]);
        let yx0 = 0.5 * (traj.yx0_series[k] + traj.yx0_series[k + 1]);
        let d1y = 0.5 * (traj.d1_inner_y_series[k] + traj.d1_inner_y_series[k + 1]);
        if uniform {
            let rhs = (datum * datum - yx0 * yx0 + 2.0 * d1y) / eps_y;
            out.push((lhs - rhs).abs());
        } else {
            let ynorm =
                0.5 * (grid.norm_sq(&traj.snapshots[k].y) + grid.norm_sq(&traj.snapshots[k + 1].y));
            let d1sq = 0.5 * (traj.d1_norm_sq_series[k] + traj.d1_norm_sq_series[k + 1]);
            let rhs = (-registry.lambda * ynorm
                + registry.kappa1 * d1sq
                + registry.kappa2 * datum * datum
                - registry.kappa3 * yx0 * yx0)
                / eps_y;
            out.push(lhs - rhs);
        }
    }
    Ok(out)
}

/// Exponential rate fitted to a positive series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `values ~ exp(-mu_hat t)`.
    pub mu_hat: f64,
    pub r_squared: f64,
}

pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.2;
pub const MIN_FIT_WINDOW: usize = 10;

/// Least-squares fit of `log(values)` against `times` after discarding the
/// default transient fraction.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    fit_decay_with(times, values, DEFAULT_TRANSIENT_FRACTION)
}

pub fn fit_decay_with(times: &[f64], values: &[f64], transient_fraction: f64) -> Result<DecayFit> {
    assert_eq!(times.len(), values.len());
    let skip = ((times.len() as f64) * transient_fraction).floor() as usize;
    let t = &times[skip..];
    let v = &values[skip..];
    if t.len() < MIN_FIT_WINDOW {
        return Err(Error::NonPositiveValues);
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::NonPositiveValues);
    }
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (ti, li) in t.iter().zip(&logs) {
        sxx += (ti - tm) * (ti - tm);
        sxy += (ti - tm) * (li - lm);
        syy += (li - lm) * (li - lm);
    }
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * n {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(DecayFit {
        mu_hat: -slope,
        r_squared,
    })
}

/// Observers a simulation can sample per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    Energy,
    W,
    V1,
    V2,
    /// `V3(v, z~)` with `v = compute_v(state)` and `z~ = z + (c/b) y_x(0)`.
    V3,
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::Energy => "energy",
            FunctionalKind::W => "W",
            FunctionalKind::V1 => "V1",
            FunctionalKind::V2 => "V2",
            FunctionalKind::V3 => "V3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "energy" => Some(Self::Energy),
            "W" | "w" => Some(Self::W),
            "V1" | "v1" => Some(Self::V1),
            "V2" | "v2" => Some(Self::V2),
            "V3" | "v3" => Some(Self::V3),
            _ => None,
        }
    }
}

/// Named functionals sampled along a trajectory.
#[derive(Debug, Clone)]
pub struct FunctionalSet {
    pub weight: WeightChoice,
    pub registry: ConstantsRegistry,
    pub kinds: Vec<FunctionalKind>,
}

impl FunctionalSet {
    pub fn energy_only() -> Self {
        Self {
            weight: WeightChoice::Uniform,
            registry: ConstantsRegistry::uniform_identity(),
            kinds: vec![FunctionalKind::Energy],
        }
    }

    pub fn none() -> Self {
        Self {
            weight: WeightChoice::Uniform,
            registry: ConstantsRegistry::uniform_identity(),
            kinds: Vec::new(),
        }
    }

    pub fn series_template(&self) -> BTreeMap<String, Vec<f64>> {
        self.kinds
            .iter()
            .map(|k| (k.name().to_string(), Vec::new()))
            .collect()
    }
}
