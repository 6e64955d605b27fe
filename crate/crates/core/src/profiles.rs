//! Closed-form auxiliary profiles and their defining identities.
//!
//! `M(x) = 2 c sin(x/2) sin((L-x)/2) / sin(L/2)` solves `M''' + M' = 0` with
//! `M(0) = M(L) = 0`; the steady shape `f` is the same expression with gain
//! `a`, and the quasi-steady PDE profile is `h(t, x) = -f(x) z(t)`. The
//! coupling constant `K = \int_0^L M f dx` feeds the regime-1 analysis.
//!
//! Trace values follow the explicit formulas: `M'(0) = +c`, `M'(L) = -c`
//! (and `f'(0) = a`, `f'(L) = -a`); all downstream uses take these, not the
//! sign stated in the boundary-value problem.

use crate::error::{Error, Result};
use crate::model::Grid;

/// Below this, `|sin(L/2)|` is treated as zero and the profiles as singular.
pub const SINGULAR_SIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    M,
    F,
    SteadyH,
}

/// A profile sampled on a grid.
#[derive(Debug, Clone)]
pub struct ProfileSample {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub kind: ProfileKind,
}

fn sin_half(l: f64) -> Result<f64> {
    let s = (l / 2.0).sin();
    if s.abs() <= SINGULAR_SIN_TOL {
        Err(Error::SingularProfile(l))
    } else {
        Ok(s)
    }
}

/// `M(x) = 2 c sin(x/2) sin((L-x)/2) / sin(L/2)`.
pub fn eval_m(x: f64, c: f64, l: f64) -> Result<f64> {
    let s = sin_half(l)?;
    Ok(2.0 * c * (x / 2.0).sin() * ((l - x) / 2.0).sin() / s)
}

/// `f(x) = 2 a sin(x/2) sin((L-x)/2) / sin(L/2)`.
pub fn eval_f(x: f64, a: f64, l: f64) -> Result<f64> {
    eval_m(x, a, l)
}

/// Steady profile `h = -f(x) z`.
pub fn eval_steady_h(x: f64, a: f64, l: f64, z: f64) -> Result<f64> {
    Ok(-eval_f(x, a, l)? * z)
}

/// Samples one of the profiles on a grid (`z = 1` for the steady profile).
pub fn sample_profile(grid: &Grid, kind: ProfileKind, gain: f64) -> Result<ProfileSample> {
    let values = grid
        .nodes()
        .map(|x| match kind {
            ProfileKind::M => eval_m(x, gain, grid.l()),
            ProfileKind::F => eval_f(x, gain, grid.l()),
            ProfileKind::SteadyH => eval_steady_h(x, gain, grid.l(), 1.0),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileSample {
        grid: *grid,
        values,
        kind,
    })
}

/// Composite-Simpson value of `\int_0^L g dx`, refined until the change per
/// doubling is below `1e-10` relative.
fn simpson_refined(g: impl Fn(f64) -> f64, l: f64) -> f64 {
    let simpson = |n: usize| -> f64 {
        let h = l / n as f64;
        let mut s = g(0.0) + g(l);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(i as f64 * h);
        }
        s * h / 3.0
    };
    let mut n = 64;
    let mut prev = simpson(n);
    loop {
        n *= 2;
        let cur = simpson(n);
        if (cur - prev).abs() <= 1e-10 * cur.abs().max(1e-30) || n >= 1 << 20 {
            return cur;
        }
        prev = cur;
    }
}

/// `K = \int_0^L M(x) f(x) dx`, bilinear in the gains `a` and `c`.
pub fn coupling_constant_k(a: f64, c: f64, l: f64) -> Result<f64> {
    sin_half(l)?;
    if a == 0.0 || c == 0.0 {
        return Ok(0.0);
    }
    Ok(simpson_refined(
        |x| {
            let m = eval_m(x, c, l).expect("sin(L/2) checked above");
            let f = eval_f(x, a, l).expect("sin(L/2) checked above");
            m * f
        },
        l,
    ))
}

/// Squared `L^2` norm of `M`; coincides with `K` evaluated at gains `(c, c)`.
pub fn m_norm_sq(c: f64, l: f64) -> Result<f64> {
    coupling_constant_k(c, c, l)
}

/// Discrete residual report for a sampled profile: max of `|p''' + p'|`
/// over interior nodes plus one-sided trace estimates of `p'(0)`, `p'(L)`.
#[derive(Debug, Clone, Copy)]
pub struct ProfileResiduals {
    pub bvp_residual: f64,
    pub left_trace: f64,
    pub right_trace: f64,
}

fn residuals_of(values: &[f64], grid: &Grid) -> ProfileResiduals {
    let n = grid.n();
    let h = grid.h();
    let h3 = 2.0 * h * h * h;
    let v = values;
    let mut worst = 0.0f64;
    for i in 1..n {
        let d3 = if i == 1 {
            (-3.0 * v[0] + 10.0 * v[1] - 12.0 * v[2] + 6.0 * v[3] - v[4]) / h3
        } else if i == n - 1 {
            (3.0 * v[n] - 10.0 * v[n - 1] + 12.0 * v[n - 2] - 6.0 * v[n - 3] + v[n - 4]) / h3
        } else {
            (v[i + 2] - 2.0 * v[i + 1] + 2.0 * v[i - 1] - v[i - 2]) / h3
        };
        let d1 = (v[i + 1] - v[i - 1]) / (2.0 * h);
        worst = worst.max((d3 + d1).abs());
    }
    ProfileResiduals {
        bvp_residual: worst,
        left_trace: (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
        right_trace: (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h),
    }
}

/// Residuals of the discrete `M''' + M'` identity together with one-sided
/// estimates of `M'(0)` and `M'(L)`.
pub fn profile_residuals(grid: &Grid, c: f64, l: f64) -> Result<ProfileResiduals> {
    let mut g = *grid;
    if (g.l() - l).abs() > f64::EPSILON * l.abs() {
        g = Grid::new(l, grid.n())?;
    }
    let sample = sample_profile(&g, ProfileKind::M, c)?;
    Ok(residuals_of(&sample.values, &g))
}

/// Same residual report for the steady shape `f` (gain `a`).
pub fn steady_profile_residuals(grid: &Grid, a: f64, l: f64) -> Result<ProfileResiduals> {
    let mut g = *grid;
    if (g.l() - l).abs() > f64::EPSILON * l.abs() {
        g = Grid::new(l, grid.n())?;
    }
    let sample = sample_profile(&g, ProfileKind::F, a)?;
    Ok(residuals_of(&sample.values, &g))
}
