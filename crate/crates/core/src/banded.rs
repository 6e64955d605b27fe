//! Banded LU with partial pivoting plus the two cheap extensions the
//! steppers need: a Sherman-Morrison rank-one update (trace-feedback
//! boundary rows) and a single bordered row/column (the scalar ODE state in
//! the monolithic solve).

use crate::error::{Error, Result};

/// Row-compact banded matrix: row `i` stores columns `i - kl ..= i + ku`.
#[derive(Debug, Clone)]
pub struct Banded {
    m: usize,
    kl: usize,
    ku: usize,
    rows: Vec<f64>,
}

impl Banded {
    pub fn zeros(m: usize, kl: usize, ku: usize) -> Self {
        Self {
            m,
            kl,
            ku,
            rows: vec![0.0; m * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn pos(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if j < self.m && off >= 0 && (off as usize) < self.width() {
            Some(i * self.width() + off as usize)
        } else {
            None
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pos(i, j).map_or(0.0, |p| self.rows[p])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pos(i, j).unwrap_or_else(|| {
            panic!(
                "entry ({i}, {j}) outside band kl={} ku={}",
                self.kl, self.ku
            )
        });
        self.rows[p] += v;
    }

    /// `out = A x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.m);
        debug_assert_eq!(out.len(), self.m);
        let w = self.width();
        for i in 0..self.m {
            let jlo = i.saturating_sub(self.kl);
            let jhi = (i + self.ku).min(self.m - 1);
            let row = &self.rows[i * w..(i + 1) * w];
            let mut s = 0.0;
            for j in jlo..=jhi {
                s += row[j + self.kl - i] * x[j];
            }
            out[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.matvec_into(x, &mut out);
        out
    }

    /// Dense copy, used by the spectral module and the tests.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.m, self.m);
        for i in 0..self.m {
            let jlo = i.saturating_sub(self.kl);
            let jhi = (i + self.ku).min(self.m - 1);
            for j in jlo..=jhi {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    /// Element-wise scaled copy.
    pub fn scaled(&self, factor: f64) -> Banded {
        let mut out = self.clone();
        for v in &mut out.rows {
            *v *= factor;
        }
        out
    }

    /// `I + alpha * A` over the same band.
    pub fn identity_plus_scaled(&self, alpha: f64) -> Banded {
        let mut out = self.clone();
        for v in &mut out.rows {
            *v *= alpha;
        }
        for i in 0..self.m {
            let p = out.pos(i, i).unwrap();
            out.rows[p] += 1.0;
        }
        out
    }

    /// LU factorization with partial pivoting (classic compact band scheme).
    pub fn lu(&self) -> Result<BandedLu> {
        let m = self.m;
        let (kl, ku) = (self.kl, self.ku);
        let mm = kl + ku + 1;
        let mut a = self.rows.clone();
        let mut al = vec![0.0; m * kl.max(1)];
        let mut indx = vec![0usize; m];

        // Left-align the first kl rows so that stored position 0 of every
        // active row tracks the current elimination column.
        let mut l = kl;
        for i in 0..kl.min(m) {
            for j in (kl - i)..mm {
                a[i * mm + j - l] = a[i * mm + j];
            }
            l -= 1;
            for j in (mm - l - 1)..mm {
                a[i * mm + j] = 0.0;
            }
        }

        let mut l = kl;
        for k in 0..m {
            let mut piv = a[k * mm];
            let mut ipiv = k;
            if l < m {
                l += 1;
            }
            for j in (k + 1)..l {
                if a[j * mm].abs() > piv.abs() {
                    piv = a[j * mm];
                    ipiv = j;
                }
            }
            indx[k] = ipiv;
            if piv == 0.0 {
                return Err(Error::SolveFailure);
            }
            if ipiv != k {
                for j in 0..mm {
                    a.swap(k * mm + j, ipiv * mm + j);
                }
            }
            for i in (k + 1)..l {
                let mult = a[i * mm] / a[k * mm];
                al[k * kl.max(1) + (i - k - 1)] = mult;
                for j in 1..mm {
                    a[i * mm + j - 1] = a[i * mm + j] - mult * a[k * mm + j];
                }
                a[i * mm + mm - 1] = 0.0;
            }
        }
        Ok(BandedLu {
            m,
            kl,
            ku,
            a,
            al,
            indx,
        })
    }
}

/// Factorized banded matrix; `a` holds the upper factor row-compact with
/// `U[i, i+k]` at position `k`, `al` the elimination multipliers.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: usize,
    kl: usize,
    ku: usize,
    a: Vec<f64>,
    al: Vec<f64>,
    indx: Vec<usize>,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.m);
        let m = self.m;
        let mm = self.kl + self.ku + 1;
        let klw = self.kl.max(1);
        let mut l = self.kl;
        for k in 0..m {
            let i = self.indx[k];
            if i != k {
                b.swap(k, i);
            }
            if l < m {
                l += 1;
            }
            for i in (k + 1)..l {
                b[i] -= self.al[k * klw + (i - k - 1)] * b[k];
            }
        }
        let mut l = 1;
        for i in (0..m).rev() {
            let mut x = b[i];
            for k in 1..l {
                x -= self.a[i * mm + k] * b[i + k];
            }
            b[i] = x / self.a[i * mm];
            if l < mm {
                l += 1;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solves `(B + alpha e_r w^T) x = b` through Sherman-Morrison on a
/// factorized `B`.
#[derive(Debug, Clone)]
pub struct Rank1Solver {
    lu: BandedLu,
    /// `B^{-1} e_r`
    p: Vec<f64>,
    w: Vec<f64>,
    alpha: f64,
    denom: f64,
}

impl Rank1Solver {
    pub fn new(lu: BandedLu, r: usize, w: Vec<f64>, alpha: f64) -> Result<Self> {
        let mut e = vec![0.0; lu.dim()];
        e[r] = 1.0;
        lu.solve_in_place(&mut e);
        let denom = 1.0 + alpha * dot(&w, &e);
        if denom.abs() < 1e-300 {
            return Err(Error::SolveFailure);
        }
        Ok(Self {
            lu,
            p: e,
            w,
            alpha,
            denom,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.lu.solve_in_place(b);
        let s = self.alpha * dot(&self.w, b) / self.denom;
        for (x, p) in b.iter_mut().zip(&self.p) {
            *x -= s * p;
        }
    }
}

/// Solves the bordered system `[[B, u], [v^T, d]] (x, zeta) = (b, s)` by
/// block elimination on a factorized `B`.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    lu: BandedLu,
    /// `B^{-1} u`
    x1: Vec<f64>,
    v: Vec<f64>,
    gamma: f64,
}

impl BorderedSolver {
    pub fn new(lu: BandedLu, u: &[f64], v: Vec<f64>, d: f64) -> Result<Self> {
        let x1 = lu.solve(u);
        let gamma = d - dot(&v, &x1);
        if gamma.abs() < 1e-300 {
            return Err(Error::SolveFailure);
        }
        Ok(Self { lu, x1, v, gamma })
    }

    /// Solves in place for the block part and returns `zeta`.
    pub fn solve_in_place(&self, b: &mut [f64], s: f64) -> f64 {
        self.lu.solve_in_place(b);
        let zeta = (s - dot(&self.v, b)) / self.gamma;
        for (x, x1) in b.iter_mut().zip(&self.x1) {
            *x -= zeta * x1;
        }
        zeta
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
