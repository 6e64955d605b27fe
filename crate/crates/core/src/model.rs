//! Shared domain types: system parameters, grid, coupled state, disturbances
//! and trajectories.
//!
//! Everything here is an immutable value object; copies can be handed to
//! concurrent workers freely.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::critical;
use crate::error::{Error, Result};

/// Which equation carries the small time-scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `eps * y_t + y_x + y_xxx = 0` coupled to `z' = b z + c y_x(0)`:
    /// the PDE is fast.
    FastKdv,
    /// `y_t + y_x + y_xxx = 0` coupled to `eps * z' = b z + c y_x(0)`:
    /// the ODE is fast.
    FastOde,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fast_kdv" | "fastkdv" | "1" => Ok(Regime::FastKdv),
            "fast_ode" | "fastode" | "2" => Ok(Regime::FastOde),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected fast_kdv or fast_ode)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::FastKdv => "fast_kdv",
            Regime::FastOde => "fast_ode",
        }
    }
}

/// Gains, time-scale ratio and domain length of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Boundary actuation gain: `y_x(t, L) = a z(t)`.
    pub a: f64,
    /// ODE self-term gain.
    pub b: f64,
    /// Trace feedback gain on `y_x(t, 0)`.
    pub c: f64,
    /// Time-scale ratio, strictly positive.
    pub epsilon: f64,
    /// Domain length, strictly positive and away from the critical set.
    pub l: f64,
    pub regime: Regime,
}

impl SystemParams {
    pub fn new(a: f64, b: f64, c: f64, epsilon: f64, l: f64, regime: Regime) -> Self {
        Self {
            a,
            b,
            c,
            epsilon,
            l,
            regime,
        }
    }

    /// Time-scale factors `(eps_y, eps_z)` multiplying the time derivative of
    /// each block: `eps_y * y_t = ...`, `eps_z * z' = ...`.
    pub fn epsilon_scales(&self) -> (f64, f64) {
        match self.regime {
            Regime::FastKdv => (self.epsilon, 1.0),
            Regime::FastOde => (1.0, self.epsilon),
        }
    }

    /// Validates positivity of `epsilon` and `L`, distance of `L` from the
    /// critical set and from the zeros of `sin(L/2)` that would make the
    /// explicit profiles singular.
    pub fn validate(&self, tol: f64) -> Result<Self> {
        if self.epsilon <= 0.0 {
            return Err(Error::NonPositiveEpsilon(self.epsilon));
        }
        if self.l <= 0.0 {
            return Err(Error::NonPositiveLength(self.l));
        }
        let near = critical::is_critical(self.l, tol);
        if near.is_critical {
            return Err(Error::CriticalLength {
                length: self.l,
                tol,
                nearest: near.nearest.value,
                k: near.nearest.k,
                l: near.nearest.l,
                distance: near.distance,
            });
        }
        // Multiples of 2*pi make sin(L/2) vanish; 2*pi itself is already in
        // the critical set, the higher even multiples are not.
        if (self.l / 2.0).sin().abs() <= tol {
            return Err(Error::SingularProfile(self.l));
        }
        Ok(*self)
    }
}

/// Uniform spatial mesh on `[0, L]` with `n` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    l: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::GridTooCoarse(n));
        }
        if l <= 0.0 {
            return Err(Error::NonPositiveLength(l));
        }
        Ok(Self {
            l,
            n,
            h: l / n as f64,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Number of intervals; there are `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Node coordinate `x_i = i * h`.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |i| self.x(i))
    }

    /// Trapezoidal quadrature weight of node `i`.
    pub fn quad_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Trapezoidal `L^2(0, L)` inner product of two nodal vectors.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.n + 1);
        debug_assert_eq!(v.len(), self.n + 1);
        let mut s = 0.0;
        for i in 0..=self.n {
            s += self.quad_weight(i) * u[i] * v[i];
        }
        s
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }
}

/// PDE state `y` (all `n + 1` nodal values) plus the scalar ODE state `z`
/// at a time `t`. The Dirichlet traces `y[0] = y[n] = 0` are held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub t: f64,
    pub y: Vec<f64>,
    pub z: f64,
}

impl CoupledState {
    /// Builds a state, pinning the Dirichlet end values to zero.
    pub fn new(t: f64, mut y: Vec<f64>, z: f64) -> Self {
        let n = y.len() - 1;
        y[0] = 0.0;
        y[n] = 0.0;
        Self { t, y, z }
    }

    pub fn zero(grid: &Grid) -> Self {
        Self {
            t: 0.0,
            y: vec![0.0; grid.n() + 1],
            z: 0.0,
        }
    }

    /// Interior nodal values `y[1..n]`.
    pub fn interior(&self) -> &[f64] {
        &self.y[1..self.y.len() - 1]
    }

    /// Rebuilds a full nodal vector from interior unknowns.
    pub fn from_interior(t: f64, interior: &[f64], z: f64) -> Self {
        let mut y = Vec::with_capacity(interior.len() + 2);
        y.push(0.0);
        y.extend_from_slice(interior);
        y.push(0.0);
        Self { t, y, z }
    }
}

pub type SpaceTimeFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
pub type TimeFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Forcing pair of the disturbed KdV equation: a distributed term `d1(t, x)`
/// and a Neumann boundary term `d2(t)`. When `d2` is present it replaces the
/// feedback datum `a z(t)` in the boundary row, which is how the disturbed
/// equation is simulated stand-alone.
#[derive(Clone, Default)]
pub struct Disturbance {
    d1: Option<Arc<SpaceTimeFn>>,
    d2: Option<Arc<TimeFn>>,
}

impl Disturbance {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with_d1(mut self, d1: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_d2(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn d1(&self, t: f64, x: f64) -> f64 {
        self.d1.as_ref().map_or(0.0, |f| f(t, x))
    }

    pub fn has_d1(&self) -> bool {
        self.d1.is_some()
    }

    /// Neumann datum override; `None` means the feedback datum `a z` applies.
    pub fn d2(&self, t: f64) -> Option<f64> {
        self.d2.as_ref().map(|f| f(t))
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }
}

impl std::fmt::Debug for Disturbance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Disturbance")
            .field("d1", &self.d1.is_some())
            .field("d2", &self.d2.is_some())
            .finish()
    }
}

/// Full nodal snapshot taken at sample index `index` of a trajectory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub index: usize,
    pub t: f64,
    pub y: Vec<f64>,
}

/// Time series produced by a simulation: scalar series at every sample,
/// full-state snapshots every `snapshot_stride` samples.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub z_series: Vec<f64>,
    /// Left Neumann trace `y_x(t, 0)` per sample.
    pub yx0_series: Vec<f64>,
    /// Neumann datum actually applied at `x = L` per sample (`a z` or `d2`).
    pub datum_series: Vec<f64>,
    /// `\int d1(t, x) y(t, x) dx` per sample (zero when `d1` is absent).
    pub d1_inner_y_series: Vec<f64>,
    /// `\int d1(t, x)^2 dx` per sample.
    pub d1_norm_sq_series: Vec<f64>,
    /// Named functional observers sampled alongside the state.
    pub functional_series: BTreeMap<String, Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when a snapshot exists for every sample.
    pub fn has_dense_snapshots(&self) -> bool {
        self.snapshots.len() == self.times.len()
            && self.snapshots.iter().enumerate().all(|(k, s)| s.index == k)
    }

    pub fn functional(&self, name: &str) -> Option<&[f64]> {
        self.functional_series.get(name).map(|v| v.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn accepts_reference_parameters() {
        // (a, b, c, eps, L) = (0.1, -1, 1, 0.1, 3): L = 3 is far from the
        // critical set (nearest member is 2*pi with k = l = 1).
        let p = SystemParams::new(0.1, -1.0, 1.0, 0.1, 3.0, Regime::FastKdv);
        let v = p.validate(TOL).unwrap();
        assert_eq!(v, p);
    }

    #[test]
    fn rejects_critical_length_two_pi() {
        let p = SystemParams::new(
            0.1,
            -1.0,
            1.0,
            0.1,
            2.0 * std::f64::consts::PI,
            Regime::FastKdv,
        );
        match p.validate(TOL) {
            Err(Error::CriticalLength { k, l, .. }) => {
                assert_eq!((k, l), (1, 1));
            }
            other => panic!("expected CriticalLength, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let p = SystemParams::new(0.1, -1.0, 1.0, 0.0, 3.0, Regime::FastKdv);
        assert_eq!(p.validate(TOL), Err(Error::NonPositiveEpsilon(0.0)));
    }

    #[test]
    fn rejects_nonpositive_length() {
        let p = SystemParams::new(0.1, -1.0, 1.0, 0.1, -3.0, Regime::FastKdv);
        assert_eq!(p.validate(TOL), Err(Error::NonPositiveLength(-3.0)));
    }

    #[test]
    fn four_pi_is_critical_before_singular() {
        // Every exact multiple of 2*pi is in the critical set (k = l = m),
        // so the criticality check fires first there.
        let p = SystemParams::new(
            0.1,
            -1.0,
            1.0,
            0.1,
            4.0 * std::f64::consts::PI,
            Regime::FastKdv,
        );
        assert!(matches!(
            p.validate(TOL),
            Err(Error::CriticalLength { k: 2, l: 2, .. })
        ));
    }

    #[test]
    fn flags_singular_profile_in_the_tolerance_sliver() {
        // Just outside the criticality band of 4*pi but with sin(L/2)
        // still below tolerance: the profiles are singular there.
        let l = 4.0 * std::f64::consts::PI + 1.5 * TOL;
        let p = SystemParams::new(0.1, -1.0, 1.0, 0.1, l, Regime::FastKdv);
        assert!(matches!(p.validate(TOL), Err(Error::SingularProfile(_))));
    }

    #[test]
    fn validate_is_idempotent() {
        let p = SystemParams::new(0.2, -0.5, 0.7, 0.05, 3.0, Regime::FastOde);
        let once = p.validate(TOL).unwrap();
        let twice = once.validate(TOL).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::new(3.0, 24).unwrap();
        assert_eq!(g.n(), 24);
        assert!((g.h() * g.n() as f64 - g.l()).abs() < 1e-15);
        let xs: Vec<f64> = g.nodes().collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert!(Grid::new(3.0, 4).is_err());
    }

    #[test]
    fn state_pins_dirichlet_traces() {
        let s = CoupledState::new(0.0, vec![3.0, 1.0, 2.0, -7.0], 0.5);
        assert_eq!(s.y[0], 0.0);
        assert_eq!(*s.y.last().unwrap(), 0.0);
        assert_eq!(s.interior(), &[1.0, 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn accepted_lengths_clear_the_critical_set(l in 0.5..12.0f64) {
            // Acceptance implies every set member within [0, L + 1] stays
            // farther than the tolerance from L (enumeration oracle).
            let p = SystemParams::new(0.1, -1.0, 1.0, 0.1, l, Regime::FastKdv);
            if p.validate(TOL).is_ok() {
                for m in critical::critical_lengths_up_to(l + 1.0) {
                    prop_assert!((m.value - l).abs() > TOL);
                }
            }
        }
    }

    #[test]
    fn disturbance_defaults_to_zero() {
        let d = Disturbance::zero();
        assert_eq!(d.d1(1.0, 2.0), 0.0);
        assert_eq!(d.d2(1.0), None);
        let d = Disturbance::zero().with_d2(|t| 2.0 * t);
        assert_eq!(d.d2(3.0), Some(6.0));
    }
}
