//! Decay measurements and numerical checks of the decay estimates.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::{GreensColumn, GreensSolver, DENSE_CAP_DEFAULT};
use crate::lattice::{mollified_distance, GridSpec, LatticeFunction, NormKind, SpectralFunction};
use crate::linalg::{
    self, conjugate_gradient, spectral_norm_lanczos, spectral_norm_svd, DenseLu, Lanczos,
};
use crate::mollifier::{MollifiedSymbol, MollifierSpec};
use crate::operators::{spectral_difference, Hamiltonian, ProblemSpec, Scheme};

/// Exponential rate `-(log|g(y+x₂)| - log|g(y+x₁)|)/(x₂ - x₁)`.
///
/// `x1`, `x2` are offsets from the source and must be lattice points with
/// `0 ≤ x1 < x2 ≤ L/2`.
pub fn measure_gamma(col: &GreensColumn, x1: f64, x2: f64) -> Result<f64> {
    let grid = *col.g.grid();
    if !(x1.is_finite() && x2.is_finite() && 0.0 <= x1 && x1 < x2 && x2 <= grid.length() / 2.0) {
        return Err(Error::invalid(
            "x1, x2",
            format!("need 0 ≤ x1 < x2 ≤ L/2, got x1 = {x1}, x2 = {x2}"),
        ));
    }
    let index = |x: f64, name: &'static str| {
        grid.grid_index(x)
            .ok_or_else(|| Error::invalid(name, format!("{x} is not a lattice point")))
    };
    let (i1, i2) = (index(x1, "x1")?, index(x2, "x2")?);
    let y = col.y_index as i64;
    let magnitude = |i: usize, x: f64| {
        let v = col.g.at(y + i as i64).norm();
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegenerateProfile { x, value: v })
        }
    };
    let (a1, a2) = (magnitude(i1, x1)?, magnitude(i2, x2)?);
    Ok(-(a2.ln() - a1.ln()) / (x2 - x1))
}

/// `(x, |g(y + x)|)` for the `N/2 + 1` offsets `x ∈ [0, L/2]`.
pub fn decay_profile(col: &GreensColumn) -> Vec<(f64, f64)> {
    let grid = *col.g.grid();
    let y = col.y_index as i64;
    (0..=grid.n() / 2)
        .map(|i| (grid.x(i), col.g.at(y + i as i64).norm()))
        .collect()
}

/// Decay rate `κ` of the FD2 Green's function for `V = 0` and real
/// `λ < 0`: the root of `cosh(κΔx) = 1 + |λ|Δx²/2`.
pub fn fd_characteristic_rate(lambda: f64, dx: f64) -> f64 {
    (1.0 + lambda.abs() * dx * dx / 2.0).acosh() / dx
}

/// Piecewise-linear distance to the origin, `x` on `[0, L/2)` and `L - x`
/// after.
fn linear_distance(grid: &GridSpec, i: usize) -> f64 {
    if i < grid.n() / 2 {
        grid.x(i)
    } else {
        grid.length() - grid.x(i)
    }
}

fn check_order(grid: &GridSpec, m: usize) -> Result<()> {
    let max = grid.n() / 16;
    if m > max {
        return Err(Error::invalid(
            "m",
            format!("order {m} exceeds N/16 = {max}"),
        ));
    }
    Ok(())
}

/// `(‖d^m g‖₂, (π/2)^m (2π)^{-1/2} ‖D^(m) ĝ‖₂)` for `g` centered at the origin.
pub fn moment_pair(g: &LatticeFunction, m: usize) -> Result<(f64, f64)> {
    let grid = *g.grid();
    check_order(&grid, m)?;
    let weighted: Vec<Complex64> = g
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * linear_distance(&grid, i).powi(m as i32))
        .collect();
    let lhs = LatticeFunction::new(grid, weighted)?.norm(NormKind::L2);
    let dg = spectral_difference(&g.dft(), m)?;
    let rhs = (PI / 2.0).powi(m as i32) / (2.0 * PI).sqrt() * dg.norm(NormKind::L2);
    Ok((lhs, rhs))
}

/// Moment bound for a Green's column, measured from its source.
pub fn moment_check(col: &GreensColumn, m: usize) -> Result<(f64, f64)> {
    moment_pair(&col.g.shifted(-(col.y_index as i64)), m)
}

/// `sup_k |(D^(m) ĥ)_k| / (1 + ĥ_k)` over the Fourier grid.
pub fn h_ratio_sup(grid: &GridSpec, spec: &MollifierSpec, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m", "order must be at least 1"));
    }
    check_order(grid, m)?;
    let sym = MollifiedSymbol::new(*grid, *spec);
    let h = SpectralFunction::new(
        *grid,
        sym.h().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    )?;
    let dh = spectral_difference(&h, m)?;
    Ok(dh
        .values()
        .iter()
        .zip(sym.h())
        .map(|(d, hk)| d.norm() / (1.0 + hk))
        .fold(0.0, f64::max))
}

/// `(x, |e^{iΔk x} - 1|/Δk, 2|x|/π)` at every lattice point with `|x| ≤ L/2`,
/// `x` taken in `(-L/2, L/2]`.
pub fn xbound_terms(grid: &GridSpec) -> Vec<(f64, f64, f64)> {
    let dk = grid.dk();
    (0..grid.n())
        .map(|i| {
            let x = if i <= grid.n() / 2 {
                grid.x(i)
            } else {
                grid.x(i) - grid.length()
            };
            let lhs = (Complex64::from_polar(1.0, dk * x) - 1.0).norm() / dk;
            (x, lhs, 2.0 * x.abs() / PI)
        })
        .collect()
}

/// How operator 2-norms are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Largest `N` for a dense Fourier-space factorization.
    pub dense_cap: usize,
    /// Largest `N` for which the operator is materialized and its SVD taken.
    pub svd_max: usize,
    pub lanczos: Lanczos,
    /// Relative tolerance of the inner solves on matrix-free paths.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            dense_cap: DENSE_CAP_DEFAULT,
            svd_max: 1024,
            lanczos: Lanczos::default(),
            inner_tol: 1e-12,
            inner_max_iter: 5_000,
        }
    }
}

/// `‖E_γ (λ-H)^{-1} E_{-γ}‖₂` with `E_{±γ} = diag(exp(±γ d_L(x_i, y)))`, FD2 only.
///
/// The tridiagonal solve is `O(N)`, so no `N × N` matrix is needed: small
/// grids are materialized for an SVD, larger ones go through Lanczos on the
/// Gram operator.
pub fn weighted_resolvent_norm(
    spec: &ProblemSpec,
    gamma: f64,
    y_index: usize,
    opts: &NormOptions,
) -> Result<f64> {
    if spec.scheme != Scheme::FiniteDifference {
        return Err(Error::invalid(
            "scheme",
            "weighted resolvent norm is defined for fd2",
        ));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(
            "gamma",
            format!("must be finite and ≥ 0, got {gamma}"),
        ));
    }
    let grid = spec.grid;
    if y_index >= grid.n() {
        return Err(Error::invalid(
            "y_index",
            format!("{y_index} is outside 0..{}", grid.n()),
        ));
    }
    let solver = GreensSolver::new(spec)?;
    let y = grid.x(y_index);
    let w: Vec<f64> = grid
        .xs()
        .into_iter()
        .map(|x| gamma * mollified_distance(x, y, grid.length()).value)
        .collect();
    let up: Vec<f64> = w.iter().map(|v| v.exp()).collect();
    let down: Vec<f64> = w.iter().map(|v| (-v).exp()).collect();
    let n = grid.n();
    if n <= opts.svd_max {
        let a = linalg::from_columns(n, n, |j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(down[j], 0.0);
            Ok(scale(&up, solver.solve(&e)))
        })?;
        return spectral_norm_svd(a.as_ref());
    }
    spectral_norm_lanczos(
        n,
        |v| Ok(scale(&up, solver.solve(&scale(&down, v.to_vec())))),
        |v| Ok(scale(&down, solver.solve_adjoint(&scale(&up, v.to_vec())))),
        opts.lanczos,
    )
}

fn scale(d: &[f64], mut v: Vec<Complex64>) -> Vec<Complex64> {
    for (x, s) in v.iter_mut().zip(d) {
        *x *= *s;
    }
    v
}

/// `‖Ĝ (1 + ĥ)‖₂` together with `‖Ĝ‖₂` and the a-priori bound
/// `1 + ‖Ĝ‖ (|1 + λ| + √(2π) ‖V‖∞)`, where `Ĝ = (λ - Ĥ)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhNorm {
    pub value: f64,
    pub g_norm: f64,
    pub bound: f64,
}

/// Evaluates [`GhNorm`] for a PS or MPS problem.
///
/// Up to `dense_cap` the dense factorization of `λ - Ĥ` is used. Beyond it,
/// and only when `λ` is real and below `min s + min V` so that `Ĥ - λ` is
/// positive definite, `Ĝ` is applied matrix-free by preconditioned
/// conjugate gradients.
pub fn weighted_g_h_norm(spec: &ProblemSpec, opts: &NormOptions) -> Result<GhNorm> {
    if !spec.scheme.is_dense() {
        return Err(Error::invalid(
            "scheme",
            "weighted Ĝ norm is defined for ps and mps",
        ));
    }
    let grid = spec.grid;
    let n = grid.n();
    let h = Hamiltonian::new(spec)?;
    let weight: Vec<f64> = h.symbol().iter().map(|s| 1.0 + s).collect();
    let v_inf = h.potential().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let lambda = spec.lambda;
    let bound = |g_norm: f64| 1.0 + g_norm * ((1.0 + lambda).norm() + (2.0 * PI).sqrt() * v_inf);

    if n <= opts.dense_cap {
        let mut a = h.fourier_matrix();
        for q in 0..n {
            for p in 0..n {
                a[(p, q)] = -a[(p, q)];
            }
            a[(q, q)] += lambda;
        }
        let lu = DenseLu::new(a.as_ref())?;
        drop(a);
        if n <= opts.svd_max {
            let mut g = Mat::<Complex64>::identity(n, n);
            lu.solve_in_place(g.as_mut());
            let g_norm = spectral_norm_svd(g.as_ref())?;
            for q in 0..n {
                for p in 0..n {
                    g[(p, q)] *= weight[q];
                }
            }
            let value = spectral_norm_svd(g.as_ref())?;
            return Ok(GhNorm {
                value,
                g_norm,
                bound: bound(g_norm),
            });
        }
        let solve = |v: &[Complex64], adjoint: bool| {
            let mut rhs = Mat::<Complex64>::from_fn(n, 1, |p, _| v[p]);
            if adjoint {
                lu.solve_adjoint_in_place(rhs.as_mut());
            } else {
                lu.solve_in_place(rhs.as_mut());
            }
            (0..n).map(|p| rhs[(p, 0)]).collect::<Vec<_>>()
        };
        let g_norm = spectral_norm_lanczos(
            n,
            |v| Ok(solve(v, false)),
            |v| Ok(solve(v, true)),
            opts.lanczos,
        )?;
        let value = spectral_norm_lanczos(
            n,
            |v| Ok(solve(&scale(&weight, v.to_vec()), false)),
            |v| Ok(scale(&weight, solve(v, true))),
            opts.lanczos,
        )?;
        return Ok(GhNorm {
            value,
            g_norm,
            bound: bound(g_norm),
        });
    }

    let v_min = h.potential().iter().cloned().fold(f64::INFINITY, f64::min);
    let s_min = h.symbol().iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda.im != 0.0 || lambda.re >= s_min + v_min {
        return Err(Error::CapExceeded {
            n,
            cap: opts.dense_cap,
        });
    }
    let v_mean = h.potential().iter().sum::<f64>() / n as f64;
    let precond: Vec<f64> = h
        .symbol()
        .iter()
        .map(|s| 1.0 / (s + v_mean - lambda.re))
        .collect();
    // A = Ĥ - λ is Hermitian positive definite and Ĝ = -A^{-1}; the sign does
    // not affect any norm.
    let apply_a = |v: &[Complex64]| {
        let f = SpectralFunction::new(grid, v.to_vec()).expect("length preserved");
        let mut out = h.apply_spectral(&f).into_values();
        for (o, x) in out.iter_mut().zip(v) {
            *o -= lambda * x;
        }
        out
    };
    let solve = |v: &[Complex64]| {
        conjugate_gradient(apply_a, &precond, v, opts.inner_tol, opts.inner_max_iter)
    };
    let g_norm = spectral_norm_lanczos(n, solve, solve, opts.lanczos)?;
    let value = spectral_norm_lanczos(
        n,
        |v| solve(&scale(&weight, v.to_vec())),
        |v| Ok(scale(&weight, solve(v)?)),
        opts.lanczos,
    )?;
    Ok(GhNorm {
        value,
        g_norm,
        bound: bound(g_norm),
    })
}

/// Summary of one Green's column.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub gamma: f64,
    pub x1: f64,
    pub x2: f64,
    pub profile: Vec<(f64, f64)>,
    pub moment_table: Vec<(usize, f64, f64)>,
    pub weighted_norms: Vec<(String, f64)>,
}

impl DecayReport {
    /// Rate, profile and moment rows `m = 0..=m_max`; weighted norms are
    /// left for the caller to append.
    pub fn from_column(col: &GreensColumn, x1: f64, x2: f64, m_max: usize) -> Result<Self> {
        let moment_table = (0..=m_max)
            .map(|m| moment_check(col, m).map(|(l, r)| (m, l, r)))
            .collect::<Result<_>>()?;
        Ok(Self {
            gamma: measure_gamma(col, x1, x2)?,
            x1,
            x2,
            profile: decay_profile(col),
            moment_table,
            weighted_norms: Vec::new(),
        })
    }
}
