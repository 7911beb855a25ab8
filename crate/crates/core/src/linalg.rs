//! Linear-algebra kernels behind the Green's function solvers and the
//! operator-norm verifiers.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatMut, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Factorized periodic tridiagonal matrix with constant off-diagonals:
/// `off·x_{i-1} + diag_i·x_i + off·x_{i+1}`, indices mod `n`.
///
/// Solved with the Thomas algorithm on a rank-one-modified matrix plus a
/// Sherman–Morrison correction for the two corner entries.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    off: Complex64,
    corner_ratio: Complex64,
    cprime: Vec<Complex64>,
    inv_den: Vec<Complex64>,
    z: Vec<Complex64>,
    inv_correction: Complex64,
}

impl CyclicTridiagonal {
    pub fn new(diag: &[Complex64], off: Complex64) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(Error::invalid("n", "cyclic tridiagonal system needs n ≥ 3"));
        }
        let scale = diag.iter().map(|d| d.norm()).fold(off.norm(), f64::max);
        let gamma = -diag[0];
        if gamma.norm() <= f64::EPSILON * scale {
            return Err(singular("vanishing leading diagonal entry"));
        }
        let mut modified = diag.to_vec();
        modified[0] -= gamma;
        modified[n - 1] -= off * off / gamma;

        let mut cprime = vec![ZERO; n];
        let mut inv_den = vec![ZERO; n];
        let mut prev_c = ZERO;
        for i in 0..n {
            let den = modified[i] - off * prev_c;
            if den.norm() <= 1e-14 * scale || !den.is_finite() {
                return Err(singular(format!("zero pivot at row {i}")));
            }
            inv_den[i] = den.inv();
            cprime[i] = off * inv_den[i];
            prev_c = cprime[i];
        }

        let mut this = Self {
            off,
            corner_ratio: off / gamma,
            cprime,
            inv_den,
            z: Vec::new(),
            inv_correction: ZERO,
        };
        let mut u = vec![ZERO; n];
        u[0] = gamma;
        u[n - 1] = off;
        let z = this.solve_modified(&u);
        let correction = Complex64::new(1.0, 0.0) + z[0] + this.corner_ratio * z[n - 1];
        if correction.norm() <= 1e-14 || !correction.is_finite() {
            return Err(singular("Sherman–Morrison denominator vanishes"));
        }
        this.z = z;
        this.inv_correction = correction.inv();
        Ok(this)
    }

    pub fn len(&self) -> usize {
        self.inv_den.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_den.is_empty()
    }

    fn solve_modified(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut x = vec![ZERO; n];
        let mut prev = ZERO;
        for i in 0..n {
            prev = (rhs[i] - self.off * prev) * self.inv_den[i];
            x[i] = prev;
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= self.cprime[i] * next;
        }
        x
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut y = self.solve_modified(rhs);
        let fact = (y[0] + self.corner_ratio * y[n - 1]) * self.inv_correction;
        for (yi, zi) in y.iter_mut().zip(&self.z) {
            *yi -= fact * zi;
        }
        y
    }
}

fn singular(detail: impl Into<String>) -> Error {
    Error::SingularResolvent {
        detail: detail.into(),
    }
}

/// Partial-pivoted LU whose pivots have been screened for singularity.
#[derive(Debug)]
pub struct DenseLu {
    lu: PartialPivLu<Complex64>,
}

impl DenseLu {
    pub fn new(a: MatRef<'_, Complex64>) -> Result<Self> {
        let n = a.nrows();
        let lu = PartialPivLu::new(a);
        let u = lu.U();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for i in 0..n {
            let p = u[(i, i)].norm();
            if !p.is_finite() {
                return Err(singular(format!("non-finite pivot at row {i}")));
            }
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if n > 0 && lo <= 1e-14 * hi {
            return Err(singular(format!(
                "pivot ratio {:e} below tolerance",
                lo / hi
            )));
        }
        Ok(Self { lu })
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, Complex64>) {
        self.lu.solve_in_place(rhs);
    }

    pub fn solve_adjoint_in_place(&self, rhs: MatMut<'_, Complex64>) {
        self.lu.solve_adjoint_in_place(rhs);
    }
}

/// `‖A‖₂` from the full singular-value decomposition.
pub fn spectral_norm_svd(a: MatRef<'_, Complex64>) -> Result<f64> {
    let s = a.singular_values().map_err(|_| Error::NoConvergence {
        method: "singular value decomposition",
        iterations: 0,
    })?;
    Ok(s.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 50_000,
        }
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖A‖₂` by power iteration on the Gram operator `AᴴA`, given matrix-free
/// applications of `A` and `Aᴴ`. Stops when successive estimates of `σ_max`
/// agree to `rel_tol`.
pub fn spectral_norm_power(
    n: usize,
    mut apply: impl FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    mut apply_adjoint: impl FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    opts: PowerIteration,
) -> Result<f64> {
    // Deterministic start with energy in every mode.
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(
                1.0 + 0.5 * (1.618_033_988_75 * t).sin(),
                0.3 * (0.414_213_562_37 * t).cos(),
            )
        })
        .collect();
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut sigma = 0.0;
    for _ in 0..opts.max_iter {
        let av = apply(&v)?;
        let next_sigma = vec_norm(&av);
        let w = apply_adjoint(&av)?;
        let nw = vec_norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if (next_sigma - sigma).abs() <= opts.rel_tol * next_sigma {
            return Ok(next_sigma.max(sigma));
        }
        sigma = next_sigma;
    }
    Err(Error::NoConvergence {
        method: "power iteration",
        iterations: opts.max_iter,
    })
}

// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `a`
// and off-diagonal `b`, by Sturm-sequence bisection.
fn tridiagonal_max_eigenvalue(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let tiny = (f64::EPSILON * (hi.abs() + lo.abs())).max(f64::MIN_POSITIVE);
    // Count of eigenvalues strictly below `x`.
    let below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
            q = a[i] - x - if i > 0 { off / q } else { 0.0 };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lanczos {
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for Lanczos {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_steps: 800,
        }
    }
}

/// `‖A‖₂` from Lanczos iteration on the Gram operator `AᴴA` with full
/// reorthogonalization. This is the Krylov-accelerated form of the power
/// iteration: it converges like `exp(-c k √gap)` rather than
/// `exp(-c k gap)`, which matters when the top singular values cluster.
pub fn spectral_norm_lanczos(
    n: usize,
    mut apply: impl FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    mut apply_adjoint: impl FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    opts: Lanczos,
) -> Result<f64> {
    let steps = opts.max_steps.min(n);
    let mut q: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(
                1.0 + 0.5 * (1.618_033_988_75 * t).sin(),
                0.3 * (0.414_213_562_37 * t).cos(),
            )
        })
        .collect();
    let nq = vec_norm(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut estimate = 0.0_f64;
    let mut settled = 0;
    for _ in 0..steps {
        let mut w = apply_adjoint(&apply(&q)?)?;
        let a: f64 = q.iter().zip(&w).map(|(qi, wi)| (qi.conj() * wi).re).sum();
        basis.push(q);
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c: Complex64 = v.iter().zip(&w).map(|(vi, wi)| vi.conj() * wi).sum();
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let next = tridiagonal_max_eigenvalue(&alpha, &beta).max(0.0);
        let b = vec_norm(&w);
        let scale = next.max(f64::MIN_POSITIVE);
        if (next - estimate).abs() <= opts.rel_tol * scale {
            settled += 1;
        } else {
            settled = 0;
        }
        estimate = next;
        // Two consecutive quiet steps guard against a lucky stall.
        if settled >= 2 || b <= 1e-14 * scale {
            return Ok(estimate.sqrt());
        }
        beta.push(b);
        q = w.into_iter().map(|x| x / b).collect();
    }
    if basis.len() == n {
        return Ok(estimate.sqrt());
    }
    Err(Error::NoConvergence {
        method: "Lanczos iteration",
        iterations: steps,
    })
}

/// Dense matrix-vector product helper for the power iteration.
pub fn mat_vec(a: MatRef<'_, Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![ZERO; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == ZERO {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn mat_adjoint_vec(a: MatRef<'_, Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            (0..a.nrows()).map(|i| col[i].conj() * x[i]).sum()
        })
        .collect()
}

/// Preconditioned conjugate gradients for a Hermitian positive-definite
/// operator, with diagonal preconditioner `precond_inv ≈ diag(A)^{-1}`.
pub fn conjugate_gradient(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    precond_inv: &[f64],
    b: &[Complex64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<Complex64>> {
    let n = b.len();
    let b_norm = vec_norm(b);
    let mut x: Vec<Complex64> = b.iter().zip(precond_inv).map(|(bi, p)| bi * *p).collect();
    if b_norm == 0.0 {
        return Ok(vec![ZERO; n]);
    }
    let ax = apply(&x);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<Complex64> = r.iter().zip(precond_inv).map(|(ri, p)| ri * *p).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(ri, zi)| (ri.conj() * zi).re).sum();
    for _ in 0..max_iter {
        if vec_norm(&r) <= rel_tol * b_norm {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(pi, ai)| (pi.conj() * ai).re).sum();
        if pap <= 0.0 {
            return Err(singular("operator is not positive definite"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        for i in 0..n {
            z[i] = r[i] * precond_inv[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(ri, zi)| (ri.conj() * zi).re).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    if vec_norm(&r) <= rel_tol * b_norm {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        method: "conjugate gradients",
        iterations: max_iter,
    })
}

/// Column-major dense copy of `nrows × ncols` produced column by column.
pub fn from_columns(
    nrows: usize,
    ncols: usize,
    mut column: impl FnMut(usize) -> Result<Vec<Complex64>>,
) -> Result<Mat<Complex64>> {
    let mut m = Mat::<Complex64>::zeros(nrows, ncols);
    for j in 0..ncols {
        let c = column(j)?;
        for (i, v) in c.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}
