use num_complex::Complex64;

use resolvent_decay::greens::RESIDUAL_LIMIT;
use resolvent_decay::lattice::periodic_distance;
use resolvent_decay::{
    closed_form_ghat, solve_green_column, solve_green_matrix, GreensSolver, GridSpec, Hamiltonian,
    LatticeFunction, MollifierSpec, NormKind, PotentialSpec, ProblemSpec, Scheme,
};

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
fn closed_forms_at_lambda_minus_one() {
    let grid = GridSpec::from_spacing(40.0, 0.02).unwrap();
    for s in schemes() {
        let spec = ProblemSpec::new(grid, Complex64::new(-1.0, 0.0), PotentialSpec::Zero, s);
        let gh = closed_form_ghat(&spec).unwrap();
        for p in 0..grid.n() {
            let k = grid.k(p);
            let symbol = match s {
                Scheme::FiniteDifference => {
                    4.0 / (grid.dx() * grid.dx()) * (0.5 * k * grid.dx()).sin().powi(2)
                }
                Scheme::PseudoSpectral => k * k,
                Scheme::Mollified(m) => resolvent_decay::mollifier::h_symbol(k, grid.kc(), &m),
            };
            let want = -1.0 / (1.0 + symbol);
            assert!((gh.values()[p] - want).norm() <= 1e-15, "{s} k={k}");
        }
    }
}

#[test]
fn fd_closed_form_matches_direct_solve() {
    let grid = GridSpec::new(40.0, 1000).unwrap();
    let spec = ProblemSpec::new(
        grid,
        Complex64::new(-1.0, 0.0),
        PotentialSpec::Zero,
        Scheme::FiniteDifference,
    );
    let want = closed_form_ghat(&spec).unwrap().idft();
    let got = solve_green_column(&spec, 0).unwrap();
    let err = got
        .g
        .values()
        .iter()
        .zip(want.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-10 * want.norm(NormKind::Linf));
}

#[test]
fn fd_column_converges_to_continuum_green_function() {
    // -e^{-|x|}/2 solves (-1 + ∂ₓₓ) g = δ.
    let mut errors = Vec::new();
    for dx in [0.04, 0.02, 0.01] {
        let spec = ProblemSpec::new(
            GridSpec::from_spacing(40.0, dx).unwrap(),
            Complex64::new(-1.0, 0.0),
            PotentialSpec::Zero,
            Scheme::FiniteDifference,
        );
        let col = solve_green_column(&spec, 0).unwrap();
        let grid = spec.grid;
        let err = (0..grid.n())
            .map(|i| {
                (col.g.values()[i] + 0.5 * (-periodic_distance(grid.x(i), 0.0, 40.0)).exp()).norm()
            })
            .fold(0.0, f64::max);
        assert!(err <= 0.1 * dx * dx);
        errors.push(err);
    }
    for w in errors.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.2);
    }
}

#[test]
fn free_columns_are_translates() {
    let grid = GridSpec::new(16.0, 256).unwrap();
    for s in schemes() {
        let spec = ProblemSpec::new(grid, Complex64::new(-2.0, 0.5), PotentialSpec::Zero, s);
        let solver = GreensSolver::new(&spec).unwrap();
        let base = solver.column(0).unwrap();
        for j in [1usize, 77, 255] {
            let col = solver.column(j).unwrap();
            let shifted = base.g.shifted(j as i64);
            let err = col
                .g
                .values()
                .iter()
                .zip(shifted.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(
                err <= 1e-12 * base.g.norm(NormKind::Linf),
                "{s} j={j}: {err}"
            );
        }
    }
}

#[test]
fn matrices_satisfy_definition_and_symmetry() {
    // L = 40, N = 800, with the Gaussian potential.
    let grid = GridSpec::new(40.0, 800).unwrap();
    for s in schemes() {
        let spec = ProblemSpec::new(grid, Complex64::new(-10.0, 0.0), gaussian(), s);
        let g = solve_green_matrix(&spec, 1024).unwrap();
        let h = Hamiltonian::new(&spec).unwrap();
        let n = grid.n();
        let inv_dx = 1.0 / grid.dx();
        let mut worst_def = 0.0_f64;
        let mut worst_sym = 0.0_f64;
        let mut max_diag = f64::NEG_INFINITY;
        for j in (0..n).step_by(37) {
            let col = LatticeFunction::new(grid, (0..n).map(|i| g[(i, j)]).collect()).unwrap();
            let hg = h.apply(&col);
            for i in 0..n {
                let want = if i == j { inv_dx } else { 0.0 };
                let r = spec.lambda * col.values()[i] - hg.values()[i] - want;
                worst_def = worst_def.max(r.norm());
            }
        }
        for i in 0..n {
            max_diag = max_diag.max(g[(i, i)].re);
            for j in 0..n {
                worst_sym = worst_sym.max((g[(i, j)] - g[(j, i)].conj()).norm());
                assert!(g[(i, j)].im.abs() <= 1e-10, "{s}: complex entry");
            }
        }
        assert!(
            worst_def <= 1e-9 * inv_dx,
            "{s}: definition residual {worst_def}"
        );
        assert!(worst_sym <= 1e-12, "{s}: asymmetry {worst_sym}");
        assert!(max_diag < 0.0, "{s}: diagonal not strictly negative");
    }
}

#[test]
fn free_matrix_is_circulant() {
    let grid = GridSpec::new(8.0, 64).unwrap();
    for s in schemes() {
        let spec = ProblemSpec::new(grid, Complex64::new(-1.0, 0.0), PotentialSpec::Zero, s);
        let g = solve_green_matrix(&spec, 64).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let a = g[(i, j)];
                let b = g[((i + 1) % 64, (j + 1) % 64)];
                assert!((a - b).norm() <= 1e-12, "{s}");
            }
        }
    }
}

#[test]
fn every_column_meets_the_residual_contract() {
    let grid = GridSpec::from_spacing(40.0, 0.05).unwrap();
    for s in schemes() {
        let spec = ProblemSpec::new(grid, Complex64::new(-10.0, 1.0), gaussian(), s);
        let solver = GreensSolver::new(&spec).unwrap();
        for y in [0usize, 333, 799] {
            let col = solver.column(y).unwrap();
            assert!(col.residual <= RESIDUAL_LIMIT);
            assert_eq!(col.y_index, y);
        }
        assert!(solver.column(800).is_err());
    }
}
