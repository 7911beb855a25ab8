//! Discrete Green's functions: solutions of `(λ - H) g = e_y / Δx`.
//!
//! FD2 is a periodic tridiagonal system and is solved in `O(N)`. PS and MPS
//! are dense in both bases; they are assembled as `λ - Ĥ` in Fourier space,
//! factorized once with partial pivoting, and each column is transformed
//! back to the lattice. The transform of `e_y/Δx` is `e^{-iky}`.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{LatticeFunction, NormKind, SpectralFunction};
use crate::linalg::{CyclicTridiagonal, DenseLu};
use crate::operators::{Hamiltonian, ProblemSpec, Scheme};

/// Default largest `N` for which a dense `N × N` matrix is materialized.
pub const DENSE_CAP_DEFAULT: usize = 4096;

/// Relative residual every returned column must meet.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GreensColumn {
    pub problem: ProblemSpec,
    pub y_index: usize,
    pub g: LatticeFunction,
    /// `‖(λ-H)g - e_y/Δx‖₂ / ‖e_y/Δx‖₂`.
    pub residual: f64,
}

#[derive(Debug)]
enum Factorization {
    Cyclic(CyclicTridiagonal),
    Dense(DenseLu),
}

/// `λ - H` factorized once, reusable for any number of solves.
#[derive(Debug)]
pub struct GreensSolver {
    spec: ProblemSpec,
    hamiltonian: Hamiltonian,
    factor: Factorization,
}

impl GreensSolver {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let hamiltonian = Hamiltonian::new(spec)?;
        let grid = spec.grid;
        let factor = match spec.scheme {
            Scheme::FiniteDifference => {
                // λ + Δ_h - V: off-diagonals 1/Δx², diagonal λ - V - 2/Δx².
                let inv2 = 1.0 / (grid.dx() * grid.dx());
                let diag: Vec<Complex64> = hamiltonian
                    .potential()
                    .iter()
                    .map(|&v| spec.lambda - v - 2.0 * inv2)
                    .collect();
                Factorization::Cyclic(CyclicTridiagonal::new(&diag, Complex64::new(inv2, 0.0))?)
            }
            Scheme::PseudoSpectral | Scheme::Mollified(_) => {
                let mut a = hamiltonian.fourier_matrix();
                let n = grid.n();
                for q in 0..n {
                    for p in 0..n {
                        a[(p, q)] = -a[(p, q)];
                    }
                    a[(q, q)] += spec.lambda;
                }
                let lu = DenseLu::new(a.as_ref())?;
                drop(a);
                Factorization::Dense(lu)
            }
        };
        Ok(Self {
            spec: spec.clone(),
            hamiltonian,
            factor,
        })
    }

    /// As [`GreensSolver::new`], refusing dense schemes with `N > cap`.
    pub fn with_cap(spec: &ProblemSpec, cap: usize) -> Result<Self> {
        check_cap(spec, cap)?;
        Self::new(spec)
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    /// `(λ - H)^{-1} b` for lattice samples `b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let grid = self.spec.grid;
        match &self.factor {
            Factorization::Cyclic(t) => t.solve(b),
            Factorization::Dense(lu) => {
                let bh = LatticeFunction::new(grid, b.to_vec())
                    .expect("right-hand side sampled on this grid")
                    .dft();
                let mut rhs = Mat::<Complex64>::from_fn(grid.n(), 1, |p, _| bh.values()[p]);
                lu.solve_in_place(rhs.as_mut());
                let gh = SpectralFunction::new(grid, (0..grid.n()).map(|p| rhs[(p, 0)]).collect())
                    .expect("length preserved");
                gh.idft().into_values()
            }
        }
    }

    /// `(λ - H)^{-H} b`.
    ///
    /// `H` is real symmetric on the lattice for every scheme (real `V`, even
    /// real symbol), so `(λ - H)ᵀ = λ - H` and the adjoint solve is a
    /// conjugated forward solve, valid for complex `λ` as well.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = b.iter().map(|v| v.conj()).collect();
        self.solve(&conj).into_iter().map(|v| v.conj()).collect()
    }

    /// Relative residual of `g` against the source `e_y/Δx`.
    pub fn residual(&self, g: &LatticeFunction, y_index: usize) -> f64 {
        let grid = self.spec.grid;
        let hg = self.hamiltonian.apply(g);
        let src = 1.0 / grid.dx();
        let mut sum = 0.0;
        for (i, (gv, hv)) in g.values().iter().zip(hg.values()).enumerate() {
            let mut r = self.spec.lambda * gv - hv;
            if i == y_index {
                r -= src;
            }
            sum += r.norm_sqr();
        }
        (sum * grid.dx()).sqrt() / LatticeFunction::delta(grid, y_index).norm(NormKind::L2)
    }

    pub fn column(&self, y_index: usize) -> Result<GreensColumn> {
        let grid = self.spec.grid;
        if y_index >= grid.n() {
            return Err(Error::invalid(
                "y_index",
                format!("{y_index} is outside 0..{}", grid.n()),
            ));
        }
        let values = match &self.factor {
            Factorization::Cyclic(t) => {
                let mut b = vec![Complex64::new(0.0, 0.0); grid.n()];
                b[y_index] = Complex64::new(1.0 / grid.dx(), 0.0);
                t.solve(&b)
            }
            Factorization::Dense(lu) => {
                let y = grid.x(y_index);
                let mut rhs = Mat::<Complex64>::from_fn(grid.n(), 1, |p, _| {
                    Complex64::from_polar(1.0, -grid.k(p) * y)
                });
                lu.solve_in_place(rhs.as_mut());
                SpectralFunction::new(grid, (0..grid.n()).map(|p| rhs[(p, 0)]).collect())
                    .expect("length preserved")
                    .idft()
                    .into_values()
            }
        };
        let g = LatticeFunction::new(grid, values)?;
        self.finish(g, y_index)
    }

    fn finish(&self, g: LatticeFunction, y_index: usize) -> Result<GreensColumn> {
        if g.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularResolvent {
                detail: "solution contains non-finite values".into(),
            });
        }
        let residual = self.residual(&g, y_index);
        if residual.is_nan() || residual > RESIDUAL_LIMIT {
            return Err(Error::ResidualTooLarge {
                residual,
                limit: RESIDUAL_LIMIT,
            });
        }
        Ok(GreensColumn {
            problem: self.spec.clone(),
            y_index,
            g,
            residual,
        })
    }

    /// All columns, `G[:, j] = column(j).g`, so that `(λ - H) G = I/Δx`.
    pub fn matrix(&self) -> Result<Mat<Complex64>> {
        let grid = self.spec.grid;
        let n = grid.n();
        match &self.factor {
            Factorization::Cyclic(_) => {
                let mut g = Mat::<Complex64>::zeros(n, n);
                for j in 0..n {
                    let col = self.column(j)?;
                    for (i, v) in col.g.values().iter().enumerate() {
                        g[(i, j)] = *v;
                    }
                }
                Ok(g)
            }
            Factorization::Dense(lu) => {
                let mut rhs = Mat::<Complex64>::from_fn(n, n, |p, j| {
                    Complex64::from_polar(1.0, -grid.k(p) * grid.x(j))
                });
                lu.solve_in_place(rhs.as_mut());
                let mut g = Mat::<Complex64>::zeros(n, n);
                for j in 0..n {
                    let gh = SpectralFunction::new(grid, (0..n).map(|p| rhs[(p, j)]).collect())
                        .expect("length preserved");
                    let col = self.finish(gh.idft(), j)?;
                    for (i, v) in col.g.values().iter().enumerate() {
                        g[(i, j)] = *v;
                    }
                }
                Ok(g)
            }
        }
    }
}

fn check_cap(spec: &ProblemSpec, cap: usize) -> Result<()> {
    if spec.scheme.is_dense() && spec.grid.n() > cap {
        return Err(Error::CapExceeded {
            n: spec.grid.n(),
            cap,
        });
    }
    Ok(())
}

/// One Green's column. Dense schemes are not capped here: a single column
/// needs one factorization but no `N × N` output.
pub fn solve_green_column(spec: &ProblemSpec, y_index: usize) -> Result<GreensColumn> {
    GreensSolver::new(spec)?.column(y_index)
}

/// The full Green's matrix; every scheme is capped since the output is dense.
pub fn solve_green_matrix(spec: &ProblemSpec, cap: usize) -> Result<Mat<Complex64>> {
    if spec.grid.n() > cap {
        return Err(Error::CapExceeded {
            n: spec.grid.n(),
            cap,
        });
    }
    GreensSolver::new(spec)?.matrix()
}

/// `ĝ_k = 1/(λ - s(k))` for `V = 0`, where `s` is the scheme symbol.
pub fn closed_form_ghat(spec: &ProblemSpec) -> Result<SpectralFunction> {
    if !spec.potential.is_zero() {
        return Err(Error::invalid(
            "potential",
            "closed form exists only for a vanishing potential",
        ));
    }
    let h = Hamiltonian::new(spec)?;
    let tol = 1e-14 * (1.0 + spec.lambda.norm());
    let mut values = Vec::with_capacity(spec.grid.n());
    for (p, &s) in h.symbol().iter().enumerate() {
        let d = spec.lambda - s;
        if d.norm() < tol {
            return Err(Error::SingularResolvent {
                detail: format!("λ coincides with s(k) at k = {}", spec.grid.k(p)),
            });
        }
        values.push(d.inv());
    }
    SpectralFunction::new(spec.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridSpec;
    use crate::mollifier::MollifierSpec;
    use crate::operators::PotentialSpec;

    fn spec(scheme: Scheme, lambda: f64, potential: PotentialSpec) -> ProblemSpec {
        ProblemSpec::new(
            GridSpec::new(10.0, 128).unwrap(),
            Complex64::new(lambda, 0.0),
            potential,
            scheme,
        )
    }

    fn schemes() -> [Scheme; 3] {
        [
            Scheme::FiniteDifference,
            Scheme::PseudoSpectral,
            Scheme::Mollified(MollifierSpec::default()),
        ]
    }

    fn gaussian() -> PotentialSpec {
        PotentialSpec::Gaussian {
            amplitude: 10.0,
            rate: 0.2,
            center: 0.0,
        }
    }

    #[test]
    fn closed_form_matches_solve() {
        for s in schemes() {
            let sp = spec(s, -1.0, PotentialSpec::Zero);
            let g0 = closed_form_ghat(&sp).unwrap().idft();
            for y in [0usize, 37] {
                let col = solve_green_column(&sp, y).unwrap();
                let want = g0.shifted(y as i64);
                let scale = want.norm(NormKind::Linf);
                for (a, b) in col.g.values().iter().zip(want.values()) {
                    assert!((a - b).norm() <= 1e-10 * scale, "{s}");
                }
            }
        }
    }

    #[test]
    fn columns_meet_residual_contract() {
        for s in schemes() {
            let col = solve_green_column(&spec(s, -10.0, gaussian()), 5).unwrap();
            assert!(col.residual <= RESIDUAL_LIMIT, "{s}: {}", col.residual);
        }
    }

    #[test]
    fn singular_lambda_is_reported() {
        // λ = 0 is an eigenvalue of -Δ_h (constants) for every scheme.
        for s in schemes() {
            let err = solve_green_column(&spec(s, 0.0, PotentialSpec::Zero), 0).unwrap_err();
            assert!(matches!(err, Error::SingularResolvent { .. }), "{s}: {err}");
            assert!(closed_form_ghat(&spec(s, 0.0, PotentialSpec::Zero)).is_err());
        }
    }

    #[test]
    fn matrix_columns_equal_single_solves() {
        for s in schemes() {
            let sp = spec(s, -10.0, gaussian());
            let solver = GreensSolver::new(&sp).unwrap();
            let g = solver.matrix().unwrap();
            for j in [0usize, 64, 127] {
                let col = solver.column(j).unwrap();
                for i in 0..sp.grid.n() {
                    assert!((g[(i, j)] - col.g.values()[i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let sp = spec(Scheme::PseudoSpectral, -1.0, PotentialSpec::Zero);
        assert!(matches!(
            solve_green_matrix(&sp, 64),
            Err(Error::CapExceeded { n: 128, cap: 64 })
        ));
        assert!(GreensSolver::with_cap(&sp, 64).is_err());
        let fd = spec(Scheme::FiniteDifference, -1.0, PotentialSpec::Zero);
        assert!(GreensSolver::with_cap(&fd, 64).is_ok());
    }

    #[test]
    fn adjoint_solve_is_consistent() {
        let mut sp = spec(
            Scheme::Mollified(MollifierSpec::default()),
            -3.0,
            gaussian(),
        );
        sp.lambda = Complex64::new(-3.0, 0.7);
        let solver = GreensSolver::new(&sp).unwrap();
        let n = sp.grid.n();
        let x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64).sin(), 0.3))
            .collect();
        let y: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(0.2, (i as f64 * 0.7).cos()))
            .collect();
        // <y, G x> = <G^H y, x>
        let gx = solver.solve(&x);
        let ghy = solver.solve_adjoint(&y);
        let lhs: Complex64 = y.iter().zip(&gx).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = ghy.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }
}
