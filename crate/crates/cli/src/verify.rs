//! Fixed desk-scale invariant checks, one named PASS/FAIL line each.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;
use resolvent_decay::analysis::{
    fd_characteristic_rate, h_ratio_sup, measure_gamma, moment_check, weighted_g_h_norm,
    weighted_resolvent_norm, xbound_terms, NormOptions,
};
use resolvent_decay::mollifier::{h_symbol, theta, MollifiedSymbol};
use resolvent_decay::operators::{difference, spectral_difference, Direction};
use resolvent_decay::{
    solve_green_column, GridSpec, LatticeFunction, MollifierSpec, NormKind, PotentialSpec,
    ProblemSpec, Scheme, SpectralFunction,
};

use crate::config::Suite;

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: Suite,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: Suite, name: &'static str, pass: bool, detail: String) -> Self {
        Self {
            suite,
            name,
            pass,
            detail,
        }
    }

    fn failed(suite: Suite, name: &'static str, err: impl std::fmt::Display) -> Self {
        Self::new(suite, name, false, format!("error: {err}"))
    }
}

pub fn run(suites: &[Suite], pool: &ThreadPool) -> Vec<Check> {
    let per_suite: Vec<Vec<Check>> =
        pool.install(|| suites.par_iter().map(|&s| run_suite(s)).collect());
    per_suite.into_iter().flatten().collect()
}

fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Lattice => lattice(),
        Suite::Mollifier => mollifier(),
        Suite::Leibniz => leibniz(),
        Suite::Moments => moments(),
        Suite::FdTheorem => fd_theorem(),
        Suite::MpsTheorems => mps_theorems(),
    }
}

fn grid(l: f64, dx: f64) -> GridSpec {
    GridSpec::from_spacing(l, dx).expect("fixed verification grid")
}

fn sample(grid: GridSpec) -> LatticeFunction {
    LatticeFunction::from_fn(grid, |x| {
        Complex64::new(
            (-(x - 7.0) * (x - 7.0)).exp() + 0.3 * (0.5 * x).sin(),
            0.1 * (1.3 * x).cos(),
        )
    })
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn gaussian() -> PotentialSpec {
    PotentialSpec::Gaussian {
        amplitude: 10.0,
        rate: 0.2,
        center: 0.0,
    }
}

fn problem(l: f64, dx: f64, lambda: f64, v: PotentialSpec, scheme: Scheme) -> ProblemSpec {
    ProblemSpec::new(grid(l, dx), Complex64::new(lambda, 0.0), v, scheme)
}

fn mps() -> Scheme {
    Scheme::Mollified(MollifierSpec::default())
}

fn lattice() -> Vec<Check> {
    let s = Suite::Lattice;
    let g = grid(40.0, 0.02);
    let f = sample(g);
    let fh = f.dft();
    let lhs = fh.norm(NormKind::L2).powi(2);
    let rhs = 2.0 * PI * f.norm(NormKind::L2).powi(2);
    let parseval = (lhs - rhs).abs() / rhs;
    let round_trip = max_err(fh.idft().values(), f.values()) / f.norm(NormKind::Linf);
    let ordering_ok = (0..g.n()).all(|p| g.position_of(g.wavenumber_index(p)) == p)
        && g.wavenumber_index(0) == -(g.n() as i64) / 2 + 1
        && (g.k(g.n() - 1) - g.kc()).abs() <= 1e-12 * g.kc();
    let xbound = xbound_terms(&g)
        .into_iter()
        .map(|(_, l, r)| l - r)
        .fold(f64::INFINITY, f64::min);
    vec![
        Check::new(
            s,
            "parseval",
            parseval <= 1e-12,
            format!("relative defect {parseval:.3e} at N={}", g.n()),
        ),
        Check::new(
            s,
            "round_trip",
            round_trip <= 1e-12,
            format!("max error {round_trip:.3e}"),
        ),
        Check::new(
            s,
            "canonical_order",
            ordering_ok,
            format!("k from {:.6} to {:.6}", g.k(0), g.k(g.n() - 1)),
        ),
        Check::new(
            s,
            "xbound",
            xbound >= -1e-12 * g.length(),
            format!("min(|e^(iΔk x)-1|/Δk - 2|x|/π) = {xbound:.3e}"),
        ),
    ]
}

fn mollifier() -> Vec<Check> {
    let s = Suite::Mollifier;
    let spec = MollifierSpec::default();
    let g = grid(40.0, 0.02);
    let kc = g.kc();
    let mid = theta(0.625 * kc, kc, &spec);
    let plateaus = theta(0.4 * kc, kc, &spec) == 1.0 && theta(0.8 * kc, kc, &spec) == 0.0;
    let sym = MollifiedSymbol::new(g, spec);
    let th = sym.theta();
    let in_range = th.iter().all(|&t| (0.0..=1.0).contains(&t));
    // Positions from k = 0 upwards.
    let zero = g.position_of(0);
    let monotone = (zero..g.n() - 1).all(|p| th[p + 1] <= th[p]);
    let evenness = (1..g.n() as i64 / 2)
        .map(|n| (th[g.position_of(n)] - th[g.position_of(-n)]).abs())
        .fold(0.0, f64::max);
    let dominance = (0..g.n())
        .map(|p| sym.h()[p] - g.k(p).powi(2))
        .fold(f64::INFINITY, f64::min);
    let h03 = h_symbol(0.3 * kc, kc, &spec);
    vec![
        Check::new(
            s,
            "plateaus",
            plateaus,
            format!("θ(0.4kc), θ(0.8kc) at kc={kc:.4}"),
        ),
        Check::new(
            s,
            "midpoint",
            (mid - 0.5).abs() <= 1e-10,
            format!("θ(5kc/8) = {mid:.15}"),
        ),
        Check::new(
            s,
            "range_and_monotone",
            in_range && monotone,
            "0 ≤ θ ≤ 1, non-increasing for k ≥ 0".into(),
        ),
        Check::new(
            s,
            "even",
            evenness <= 1e-12,
            format!("max |θ(k)-θ(-k)| = {evenness:.3e}"),
        ),
        Check::new(
            s,
            "h_dominates_k2",
            dominance >= -1e-12 * kc * kc,
            format!("min(ĥ - k²) = {dominance:.3e}"),
        ),
        Check::new(
            s,
            "h_plateau",
            (h03 - 0.09 * kc * kc).abs() <= 1e-14 * kc * kc,
            format!("ĥ(0.3kc) = {h03:.10}"),
        ),
    ]
}

fn leibniz() -> Vec<Check> {
    let s = Suite::Leibniz;
    let g = grid(40.0, 0.05);
    let f = sample(g);
    let h = LatticeFunction::from_fn(g, |x| Complex64::new((0.7 * x).cos(), (0.2 * x).sin()));
    let fh_prod = LatticeFunction::new(
        g,
        f.values()
            .iter()
            .zip(h.values())
            .map(|(a, b)| a * b)
            .collect(),
    )
    .expect("same grid");
    let lhs = difference(&fh_prod, Direction::Backward);
    let (df, dh) = (
        difference(&f, Direction::Backward),
        difference(&h, Direction::Backward),
    );
    let real_space = (0..g.n())
        .map(|i| {
            let rhs = df.values()[i] * h.values()[i] + f.at(i as i64 - 1) * dh.values()[i];
            (lhs.values()[i] - rhs).norm() * g.dx() / (1.0 + rhs.norm())
        })
        .fold(0.0, f64::max);

    let (a, b) = (f.dft(), h.dft());
    let prod = SpectralFunction::new(
        g,
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x * y)
            .collect(),
    )
    .expect("same grid");
    let spectral = match (
        spectral_difference(&prod, 1),
        spectral_difference(&a, 1),
        spectral_difference(&b, 1),
    ) {
        (Ok(lhs), Ok(da), Ok(db)) => (0..g.n())
            .map(|p| {
                let n = g.wavenumber_index(p);
                let rhs = da.values()[p] * b.at(n - 1) + a.values()[p] * db.values()[p];
                (lhs.values()[p] - rhs).norm() / ((1.0 + rhs.norm()) * g.length())
            })
            .fold(0.0, f64::max),
        _ => f64::INFINITY,
    };
    vec![
        Check::new(
            s,
            "backward_difference",
            real_space <= 1e-12,
            format!("max scaled residual {real_space:.3e}"),
        ),
        Check::new(
            s,
            "spectral_difference",
            spectral <= 1e-12,
            format!("max scaled residual {spectral:.3e}"),
        ),
    ]
}

fn moments() -> Vec<Check> {
    let s = Suite::Moments;
    let cases: [(&'static str, PotentialSpec, Scheme); 3] = [
        ("mps_free", PotentialSpec::Zero, mps()),
        ("mps_gaussian", gaussian(), mps()),
        ("fd2_gaussian", gaussian(), Scheme::FiniteDifference),
    ];
    cases
        .into_iter()
        .map(|(name, v, scheme)| {
            let col = match solve_green_column(&problem(40.0, 0.02, -10.0, v, scheme), 0) {
                Ok(c) => c,
                Err(e) => return Check::failed(s, name, e),
            };
            let mut worst = 0.0_f64;
            for m in 0..=10 {
                match moment_check(&col, m) {
                    Ok((l, r)) => worst = worst.max(l / r),
                    Err(e) => return Check::failed(s, name, e),
                }
            }
            Check::new(
                s,
                name,
                worst <= 1.0 + 1e-10,
                format!(
                    "max lhs/rhs over m=0..10 at N={}: {worst:.6}",
                    col.g.grid().n()
                ),
            )
        })
        .collect()
}

fn fd_theorem() -> Vec<Check> {
    let s = Suite::FdTheorem;
    let opts = NormOptions::default();
    let kappa = fd_characteristic_rate(-10.0, 0.05);
    let mut norms = Vec::new();
    for l in [20.0, 40.0, 80.0] {
        let sp = problem(
            l,
            0.05,
            -10.0,
            PotentialSpec::Zero,
            Scheme::FiniteDifference,
        );
        match weighted_resolvent_norm(&sp, 0.5 * kappa, 0, &opts) {
            Ok(v) => norms.push(v),
            Err(e) => return vec![Check::failed(s, "weighted_norm_uniform", e)],
        }
    }
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = max / min;
    let rate = solve_green_column(
        &problem(
            40.0,
            0.05,
            -10.0,
            PotentialSpec::Zero,
            Scheme::FiniteDifference,
        ),
        0,
    )
    .map_err(|e| e.to_string())
    .and_then(|col| measure_gamma(&col, 1.0, 7.0).map_err(|e| e.to_string()));
    let mut checks = vec![Check::new(
        s,
        "weighted_norm_uniform",
        spread <= 4.0,
        format!("γ=κ/2 over L=20,40,80: norms {norms:.4?}, ratio {spread:.4}"),
    )];
    checks.push(match rate {
        Ok(gamma) => {
            let rel = (gamma / kappa - 1.0).abs();
            Check::new(
                s,
                "decay_rate",
                rel <= 1e-3,
                format!("γ = {gamma:.8} vs κ = {kappa:.8}"),
            )
        }
        Err(e) => Check::failed(s, "decay_rate", e),
    });
    checks
}

fn mps_theorems() -> Vec<Check> {
    let s = Suite::MpsTheorems;
    let spec = MollifierSpec::default();
    let mut checks = Vec::new();
    for (m, name) in [(1, "h_ratio_m1_uniform"), (2, "h_ratio_m2_uniform")] {
        let values: Result<Vec<f64>, _> = [0.05, 0.02, 0.01]
            .iter()
            .map(|&dx| h_ratio_sup(&grid(40.0, dx), &spec, m))
            .collect();
        checks.push(match values {
            Ok(v) => {
                let ratio = v.iter().cloned().fold(0.0, f64::max)
                    / v.iter().cloned().fold(f64::INFINITY, f64::min);
                Check::new(
                    s,
                    name,
                    ratio <= 4.0,
                    format!("sup over dx=0.05,0.02,0.01: {v:.4?}, ratio {ratio:.4}"),
                )
            }
            Err(e) => Check::failed(s, name, e),
        });
    }
    let sp = problem(40.0, 0.05, -10.0, gaussian(), mps());
    checks.push(match weighted_g_h_norm(&sp, &NormOptions::default()) {
        Ok(n) => Check::new(
            s,
            "g_h_bound",
            n.value <= n.bound,
            format!("‖Ĝ(1+ĥ)‖ = {:.6} ≤ {:.6}", n.value, n.bound),
        ),
        Err(e) => Check::failed(s, "g_h_bound", e),
    });
    let tail = |scheme| {
        let col = solve_green_column(&problem(40.0, 0.05, -10.0, PotentialSpec::Zero, scheme), 0)?;
        let i = col.g.grid().grid_index(15.0).expect("lattice point");
        Ok::<f64, resolvent_decay::Error>(col.g.values()[i].norm())
    };
    checks.push(match (tail(mps()), tail(Scheme::PseudoSpectral)) {
        (Ok(a), Ok(b)) => Check::new(
            s,
            "tail_below_ps",
            a < b,
            format!("|G(15)| mps {a:.3e} vs ps {b:.3e}"),
        ),
        (Err(e), _) | (_, Err(e)) => Check::failed(s, "tail_below_ps", e),
    });
    checks
}
