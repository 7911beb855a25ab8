//! Difference operators and the three discretized Hamiltonians.
//!
//! Every scheme uses `H = -Δ_h + V`, so the resolvent is `(λ - H)^{-1}` with
//! `λ - H = λ + Δ_h - V`. The schemes differ only in the symbol `s(k)` with
//! which `-Δ_h` acts on plane waves:
//!
//! | scheme | `s(k)`                     |
//! |--------|----------------------------|
//! | FD2    | `(4/Δx²) sin²(kΔx/2)`      |
//! | PS     | `k²`                       |
//! | MPS    | `ĥ(k)`                     |

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{periodic_distance, GridSpec, LatticeFunction, SpectralFunction};
use crate::mollifier::{MollifiedSymbol, MollifierSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `A exp(-α d̃_L(x, c)²)`, periodized through the periodic distance.
    Gaussian {
        amplitude: f64,
        rate: f64,
        center: f64,
    },
    /// Explicit samples on the lattice.
    Tabulated(Vec<f64>),
}

impl PotentialSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Gaussian { amplitude, .. } => *amplitude == 0.0,
            PotentialSpec::Tabulated(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let values = match self {
            PotentialSpec::Zero => vec![0.0; grid.n()],
            PotentialSpec::Gaussian {
                amplitude,
                rate,
                center,
            } => grid
                .xs()
                .into_iter()
                .map(|x| {
                    let d = periodic_distance(x, *center, grid.length());
                    amplitude * (-rate * d * d).exp()
                })
                .collect(),
            PotentialSpec::Tabulated(v) => {
                if v.len() != grid.n() {
                    return Err(Error::invalid(
                        "potential",
                        format!(
                            "tabulated potential has {} samples, grid has {}",
                            v.len(),
                            grid.n()
                        ),
                    ));
                }
                v.clone()
            }
        };
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "potential",
                format!("sample {bad} is not finite"),
            ));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Second-order central finite differences.
    FiniteDifference,
    PseudoSpectral,
    /// Pseudo-spectral with `k²` replaced by the mollified symbol `ĥ`.
    Mollified(MollifierSpec),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::FiniteDifference => "fd2",
            Scheme::PseudoSpectral => "ps",
            Scheme::Mollified(_) => "mps",
        }
    }

    /// Whether the Green's function solve goes through a dense Fourier-space factorization.
    pub fn is_dense(&self) -> bool {
        !matches!(self, Scheme::FiniteDifference)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// Parses `fd2`, `ps` or `mps`; `mps` gets the default mollifier.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fd2" | "fd" => Ok(Scheme::FiniteDifference),
            "ps" => Ok(Scheme::PseudoSpectral),
            "mps" => Ok(Scheme::Mollified(MollifierSpec::default())),
            other => Err(Error::invalid(
                "scheme",
                format!("unknown scheme `{other}` (expected fd2, ps or mps)"),
            )),
        }
    }
}

/// Everything that determines `λ - H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub lambda: Complex64,
    pub potential: PotentialSpec,
    pub scheme: Scheme,
}

impl ProblemSpec {
    pub fn new(
        grid: GridSpec,
        lambda: Complex64,
        potential: PotentialSpec,
        scheme: Scheme,
    ) -> Self {
        Self {
            grid,
            lambda,
            potential,
            scheme,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// `D⁺f(x) = (f(x+Δx) - f(x))/Δx` or `D⁻f(x) = (f(x) - f(x-Δx))/Δx`, periodic.
pub fn difference(f: &LatticeFunction, direction: Direction) -> LatticeFunction {
    let grid = *f.grid();
    let inv = 1.0 / grid.dx();
    let n = grid.n() as i64;
    let values = (0..n)
        .map(|i| match direction {
            Direction::Forward => (f.at(i + 1) - f.at(i)) * inv,
            Direction::Backward => (f.at(i) - f.at(i - 1)) * inv,
        })
        .collect();
    LatticeFunction::new(grid, values).expect("length preserved")
}

/// `Δ_h f = D⁺D⁻ f`, the periodic three-point Laplacian.
pub fn fd_laplacian(f: &LatticeFunction) -> LatticeFunction {
    let grid = *f.grid();
    let inv2 = 1.0 / (grid.dx() * grid.dx());
    let n = grid.n() as i64;
    let values = (0..n)
        .map(|i| (f.at(i + 1) + f.at(i - 1) - f.at(i) * 2.0) * inv2)
        .collect();
    LatticeFunction::new(grid, values).expect("length preserved")
}

/// Symbol of `-Δ_h` for the three-point stencil.
pub fn fd_symbol(k: f64, dx: f64) -> f64 {
    let s = (0.5 * k * dx).sin();
    4.0 * s * s / (dx * dx)
}

/// `m`-fold backward difference on the Fourier grid,
/// `(Df̂)_k = (f̂_k - f̂_{k-Δk})/Δk`, wrapping below `-N/2+1` to `N/2`.
///
/// `m = 0` returns the input unchanged.
pub fn spectral_difference(fh: &SpectralFunction, m: usize) -> Result<SpectralFunction> {
    let grid = *fh.grid();
    if m >= grid.n() {
        return Err(Error::invalid(
            "m",
            format!("difference order {m} reaches the grid size {}", grid.n()),
        ));
    }
    let inv = 1.0 / grid.dk();
    let mut cur = fh.values().to_vec();
    let mut next = cur.clone();
    let n = cur.len();
    for _ in 0..m {
        for p in 0..n {
            let below = if p == 0 { n - 1 } else { p - 1 };
            next[p] = (cur[p] - cur[below]) * inv;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    SpectralFunction::new(grid, cur)
}

/// A discretized `H` ready to be applied or assembled.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: GridSpec,
    scheme: Scheme,
    potential: Vec<f64>,
    symbol: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let grid = spec.grid;
        let potential = spec.potential.sample(&grid)?;
        let symbol = match spec.scheme {
            Scheme::FiniteDifference => grid
                .wavenumbers()
                .into_iter()
                .map(|k| fd_symbol(k, grid.dx()))
                .collect(),
            Scheme::PseudoSpectral => grid.wavenumbers().into_iter().map(|k| k * k).collect(),
            Scheme::Mollified(m) => MollifiedSymbol::new(grid, m).h().to_vec(),
        };
        Ok(Self {
            grid,
            scheme: spec.scheme,
            potential,
            symbol,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Lattice samples of `V`.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `s(k)` on `K`, canonical order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &LatticeFunction) -> LatticeFunction {
        let mut out = match self.scheme {
            Scheme::FiniteDifference => {
                let mut lap = fd_laplacian(f);
                lap.values_mut().iter_mut().for_each(|v| *v = -*v);
                lap
            }
            Scheme::PseudoSpectral | Scheme::Mollified(_) => {
                let mut fh = f.dft();
                for (v, s) in fh.values_mut().iter_mut().zip(&self.symbol) {
                    *v *= *s;
                }
                fh.idft()
            }
        };
        for ((o, v), fv) in out
            .values_mut()
            .iter_mut()
            .zip(&self.potential)
            .zip(f.values())
        {
            *o += fv * *v;
        }
        out
    }

    /// Applies `H` to a spectral function without leaving Fourier space
    /// for the kinetic part: `(Ĥĝ)_k = s_k ĝ_k + (Vg)^_k`.
    pub fn apply_spectral(&self, gh: &SpectralFunction) -> SpectralFunction {
        let mut vg = gh.idft();
        for (x, v) in vg.values_mut().iter_mut().zip(&self.potential) {
            *x *= *v;
        }
        let mut out = vg.dft();
        for ((o, s), g) in out
            .values_mut()
            .iter_mut()
            .zip(&self.symbol)
            .zip(gh.values())
        {
            *o += g * *s;
        }
        out
    }

    /// `V̂ = dft(V)` on `K`.
    pub fn potential_hat(&self) -> SpectralFunction {
        LatticeFunction::from_real(self.grid, &self.potential)
            .expect("potential sampled on this grid")
            .dft()
    }

    /// `Ĥ_kl = s_k δ_kl + (1/L) V̂_{k-l}`, rows and columns in canonical order.
    ///
    /// `k - l` is folded into `K` by periodicity of the transform of `V`.
    pub fn fourier_matrix(&self) -> Mat<Complex64> {
        let n = self.grid.n();
        let v_hat = self.potential_hat();
        let inv_l = 1.0 / self.grid.length();
        let mut m = Mat::<Complex64>::from_fn(n, n, |p, q| {
            let diff = self.grid.wavenumber_index(p) - self.grid.wavenumber_index(q);
            v_hat.at(diff) * inv_l
        });
        for p in 0..n {
            m[(p, p)] += self.symbol[p];
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> GridSpec {
        GridSpec::new(10.0, 64).unwrap()
    }

    fn plane_wave(g: GridSpec, n: i64) -> (f64, LatticeFunction) {
        let k = n as f64 * g.dk();
        (
            k,
            LatticeFunction::from_fn(g, |x| Complex64::from_polar(1.0, k * x)),
        )
    }

    fn max_diff(a: &LatticeFunction, b: &LatticeFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn differences_of_constants_vanish() {
        let g = grid();
        let c = LatticeFunction::from_fn(g, |_| Complex64::new(3.0, -1.0));
        for f in [
            difference(&c, Direction::Forward),
            difference(&c, Direction::Backward),
            fd_laplacian(&c),
        ] {
            assert!(f.norm(crate::lattice::NormKind::Linf) < 1e-12);
        }
    }

    #[test]
    fn forward_difference_wraps() {
        let g = grid();
        let mut e0 = LatticeFunction::zeros(g);
        e0.values_mut()[0] = Complex64::new(1.0, 0.0);
        let d = difference(&e0, Direction::Forward);
        assert_relative_eq!(d.values()[g.n() - 1].re, 1.0 / g.dx());
        assert_relative_eq!(d.values()[0].re, -1.0 / g.dx());
    }

    #[test]
    fn laplacian_is_forward_of_backward() {
        let g = grid();
        let f = LatticeFunction::from_fn(g, |x| Complex64::new(x.sin() + 0.1 * x, x.cos()));
        let composed = difference(&difference(&f, Direction::Backward), Direction::Forward);
        assert!(max_diff(&fd_laplacian(&f), &composed) < 1e-9);
    }

    #[test]
    fn plane_waves_are_eigenfunctions() {
        let g = grid();
        for n in [-31, -5, 0, 1, 17, 32] {
            let (k, f) = plane_wave(g, n);
            let lap = fd_laplacian(&f);
            let mut want = f.clone();
            let s = fd_symbol(k, g.dx());
            want.values_mut().iter_mut().for_each(|v| *v *= -s);
            assert!(max_diff(&lap, &want) < 1e-9 * (1.0 + s));
        }
    }

    #[test]
    fn hamiltonian_symbols_on_plane_waves() {
        let g = grid();
        let mps = MollifierSpec::default();
        for scheme in [
            Scheme::FiniteDifference,
            Scheme::PseudoSpectral,
            Scheme::Mollified(mps),
        ] {
            let spec = ProblemSpec::new(g, Complex64::new(-1.0, 0.0), PotentialSpec::Zero, scheme);
            let h = Hamiltonian::new(&spec).unwrap();
            for n in [-31_i64, -20, -3, 0, 4, 25, 32] {
                let (k, f) = plane_wave(g, n);
                let s = match scheme {
                    Scheme::FiniteDifference => fd_symbol(k, g.dx()),
                    Scheme::PseudoSpectral => k * k,
                    Scheme::Mollified(m) => crate::mollifier::h_symbol(k, g.kc(), &m),
                };
                let mut want = f.clone();
                want.values_mut().iter_mut().for_each(|v| *v *= s);
                assert!(
                    max_diff(&h.apply(&f), &want) < 1e-10 * (1.0 + s),
                    "{scheme} n={n}"
                );
            }
        }
    }

    #[test]
    fn mps_plateau_at_high_frequency() {
        let g = grid();
        let spec = ProblemSpec::new(
            g,
            Complex64::new(-1.0, 0.0),
            PotentialSpec::Zero,
            Scheme::Mollified(MollifierSpec::default()),
        );
        let h = Hamiltonian::new(&spec).unwrap();
        let kc = g.kc();
        for n in [25_i64, -28, 32] {
            let (k, f) = plane_wave(g, n);
            assert!(k.abs() >= 0.75 * kc);
            let mut want = f.clone();
            want.values_mut().iter_mut().for_each(|v| *v *= kc * kc);
            assert!(max_diff(&h.apply(&f), &want) < 1e-9 * kc * kc);
        }
    }

    #[test]
    fn spectral_difference_rejects_large_order() {
        let g = grid();
        let fh = SpectralFunction::zeros(g);
        assert!(spectral_difference(&fh, g.n()).is_err());
        assert!(spectral_difference(&fh, g.n() - 1).is_ok());
    }

    #[test]
    fn spectral_difference_wraps_at_lowest_index() {
        let g = grid();
        let mut fh = SpectralFunction::zeros(g);
        let top = g.n() - 1;
        fh.values_mut()[top] = Complex64::new(1.0, 0.0);
        let d = spectral_difference(&fh, 1).unwrap();
        assert_relative_eq!(d.values()[0].re, -1.0 / g.dk());
        assert_relative_eq!(d.values()[top].re, 1.0 / g.dk());
        let c = SpectralFunction::from_fn(g, |_| Complex64::new(2.0, 1.0));
        assert!(
            spectral_difference(&c, 3)
                .unwrap()
                .norm(crate::lattice::NormKind::Linf)
                < 1e-10
        );
    }

    #[test]
    fn gaussian_potential_is_periodized() {
        let g = GridSpec::new(40.0, 800).unwrap();
        let v = PotentialSpec::Gaussian {
            amplitude: 10.0,
            rate: 0.2,
            center: 0.0,
        }
        .sample(&g)
        .unwrap();
        assert_relative_eq!(v[0], 10.0);
        // x = 39 sits one unit away from the center through the wrap.
        assert_relative_eq!(v[780], 10.0 * (-0.2f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(v[20], v[780], max_relative = 1e-12);
    }

    #[test]
    fn tabulated_potential_length_checked() {
        let g = grid();
        let bad = PotentialSpec::Tabulated(vec![0.0; 3]);
        assert!(bad.sample(&g).is_err());
        let nan = PotentialSpec::Tabulated(vec![f64::NAN; g.n()]);
        assert!(nan.sample(&g).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in ["fd2", "ps", "mps"] {
            assert_eq!(s.parse::<Scheme>().unwrap().name(), s);
        }
        assert!("spectral".parse::<Scheme>().is_err());
    }
}
