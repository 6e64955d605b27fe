//! Dense assembly of the discretized coupled generator, spectra, and the
//! dissipativity quadratic-form check.
//!
//! The spectral abscissa of the discretized generator is the numerical
//! stability classifier used throughout: negative means the discretization
//! is exponentially stable. Statements are about the discrete operator;
//! refinement checks guard against reading too much into one grid.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Grid, SystemParams};
use crate::operator;

/// Default dimension cap of the dense eigensolver.
pub const DEFAULT_DIM_CAP: usize = 600;

/// Dense `(n-1)+1` generator acting on `(y[1..n], z)`.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub matrix: DMatrix<f64>,
    pub params: SystemParams,
    pub grid: Grid,
}

/// Assembles the coupled generator with regime scaling (`1/eps` on the
/// PDE block for the fast-KdV regime, on the `z` row for fast-ODE).
///
/// Parameter validation is the caller's responsibility; criticality studies
/// deliberately assemble at critical lengths.
pub fn assemble_generator(params: &SystemParams, grid: &Grid) -> Result<GeneratorMatrix> {
    let op = operator::build_operator(grid, params.a)?;
    let (eps_y, eps_z) = params.epsilon_scales();
    let m = grid.n() - 1;
    let mut g = DMatrix::zeros(m + 1, m + 1);
    let band = op.interior_matrix();
    for i in 0..m {
        let jlo = i.saturating_sub(2);
        let jhi = (i + 3).min(m - 1);
        for j in jlo..=jhi {
            let v = band.get(i, j);
            if v != 0.0 {
                g[(i, j)] = v / eps_y;
            }
        }
        g[(i, m)] = op.neumann_coupling()[i] / eps_y;
    }
    let trace = op.trace_stencil();
    for (j, v) in trace.iter().enumerate() {
        if *v != 0.0 {
            g[(m, j)] = params.c * v / eps_z;
        }
    }
    g[(m, m)] = params.b / eps_z;
    Ok(GeneratorMatrix {
        matrix: g,
        params: *params,
        grid: *grid,
    })
}

/// Dense KdV block alone (no `z` row), with PDE regime scaling; the
/// homogeneous datum corresponds to `a = 0` boundary data.
pub fn assemble_kdv_block(grid: &Grid, eps_y: f64) -> Result<DMatrix<f64>> {
    let op = operator::build_operator(grid, 0.0)?;
    let m = grid.n() - 1;
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        let jlo = i.saturating_sub(2);
        let jhi = (i + 3).min(m - 1);
        for j in jlo..=jhi {
            let v = op.interior_matrix().get(i, j);
            if v != 0.0 {
                g[(i, j)] = v / eps_y;
            }
        }
    }
    Ok(g)
}

/// All eigenvalues of a dense real matrix (Schur iteration).
pub fn eigenvalues(matrix: &DMatrix<f64>, cap: usize) -> Result<Vec<nalgebra::Complex<f64>>> {
    let dim = matrix.nrows();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let schur = nalgebra::Schur::try_new(matrix.clone(), f64::EPSILON, 100 * dim.max(30))
        .ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Max real part of the generator spectrum, default dimension cap.
pub fn spectral_abscissa(g: &GeneratorMatrix) -> Result<f64> {
    spectral_abscissa_with_cap(g, DEFAULT_DIM_CAP)
}

pub fn spectral_abscissa_with_cap(g: &GeneratorMatrix, cap: usize) -> Result<f64> {
    abscissa_of(&g.matrix, cap)
}

/// Max real part of an arbitrary dense matrix spectrum.
pub fn abscissa_of(matrix: &DMatrix<f64>, cap: usize) -> Result<f64> {
    let ev = eigenvalues(matrix, cap)?;
    Ok(ev.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Outcome of the quadratic-form dissipativity check.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticFormReport {
    /// `max <G x, x> - C ||x||^2` over the sampled unit states.
    pub worst_slack: f64,
    pub trials: usize,
}

/// Samples smooth random unit states and reports the worst slack of
/// `<G x, x> <= C ||x||^2` in the trapezoidal inner product. The trace
/// terms of the form converge at the boundary-closure order, so the slack
/// of a valid `C` shrinks like `O(h)`.
pub fn quadratic_form_bound(
    g: &GeneratorMatrix,
    trials: usize,
    c_bound: f64,
    seed: u64,
) -> QuadraticFormReport {
    let grid = &g.grid;
    let m = grid.n() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let modes = 6;
    for _ in 0..trials {
        // smooth random field: low Fourier-sine modes with decaying weights
        let coeffs: Vec<f64> = (1..=modes)
            .map(|k| rng.random_range(-1.0..1.0) / (k * k) as f64)
            .collect();
        let mut x = vec![0.0; m + 1];
        for (i, slot) in x.iter_mut().take(m).enumerate() {
            let xi = grid.x(i + 1);
            *slot = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * xi / grid.l()).sin())
                .sum();
        }
        x[m] = rng.random_range(-1.0..1.0);
        // normalize in the trapezoidal energy norm
        let mut nrm = x[m] * x[m];
        for xi in &x[..m] {
            nrm += grid.h() * xi * xi;
        }
        let nrm = nrm.sqrt();
        for v in &mut x {
            *v /= nrm;
        }
        let xv = nalgebra::DVector::from_column_slice(&x);
        let gx = &g.matrix * &xv;
        let mut form = gx[m] * x[m];
        for (gxi, xi) in gx.iter().take(m).zip(&x[..m]) {
            form += grid.h() * gxi * xi;
        }
        worst = worst.max(form - c_bound);
    }
    QuadraticFormReport {
        worst_slack: worst,
        trials,
    }
}

/// The dissipativity constant of the un-halved form computation with the
/// Young step at `alpha = 1/4`: `C = 2 a^2 + 2 b + 8 c^2`, floored at zero
/// (the bound constant is positive by construction).
pub fn dissipativity_constant(a: f64, b: f64, c: f64) -> f64 {
    (2.0 * a * a + 2.0 * b + 8.0 * c * c).max(0.0)
}
