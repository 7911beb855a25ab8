//! Smooth spectral cutoff used by the mollified pseudo-spectral scheme.
//!
//! The cutoff `θ` is the indicator of `|k| ≤ (5/8) k_c` convolved with the
//! compactly supported bump
//!
//! ```text
//! φ(k) = Z exp(-σ²k_c² / (σ²k_c² - k²))   for |k| < σ k_c
//! ```
//!
//! normalized to unit mass. With `σ ≤ 1/8` the result is exactly 1 on
//! `|k| ≤ k_c/2` and exactly 0 on `|k| ≥ (3/4) k_c`. The mollified Laplacian
//! symbol is `ĥ(k) = θ(k)(k² - k_c²) + k_c²`.
//!
//! Substituting `u = k/(σ k_c)` turns every quantity into a function of the
//! universal profile `e^{-1/(1-u²)}` on `(-1, 1)`, so only one normalization
//! integral is ever computed.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lattice::GridSpec;

/// Location of the indicator edge, as a fraction of `k_c`.
const STEP_FRACTION: f64 = 5.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    sigma: f64,
    quad_rel_tol: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self {
            sigma: 0.125,
            quad_rel_tol: 1e-12,
        }
    }
}

impl MollifierSpec {
    pub fn new(sigma: f64, quad_rel_tol: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 0.125) {
            return Err(Error::invalid(
                "sigma",
                format!("must lie in (0, 1/8], got {sigma}"),
            ));
        }
        if !(quad_rel_tol > 0.0 && quad_rel_tol < 1.0) {
            return Err(Error::invalid(
                "quad_rel_tol",
                format!("must lie in (0, 1), got {quad_rel_tol}"),
            ));
        }
        Ok(Self {
            sigma,
            quad_rel_tol,
        })
    }

    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(sigma, Self::default().quad_rel_tol)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn quad_rel_tol(&self) -> f64 {
        self.quad_rel_tol
    }

    /// Normalization `Z` of the bump at edge `kc`.
    pub fn normalization(&self, kc: f64) -> f64 {
        1.0 / (self.sigma * kc * profile_mass())
    }
}

// e^{-1/(1-u²)} on (-1, 1), zero elsewhere.
fn profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    (-1.0 / ((1.0 - u) * (1.0 + u))).exp()
}

/// `∫_{-1}^{1} e^{-1/(1-u²)} du`.
pub fn profile_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| quadrature::integrate(profile, -1.0, 1.0, 1e-17).integral)
}

// ∫_a^1 of the profile, to relative tolerance `rel_tol`.
fn profile_tail(a: f64, rel_tol: f64) -> f64 {
    if a >= 1.0 {
        return 0.0;
    }
    let a = a.max(-1.0);
    let coarse = quadrature::integrate(
        profile,
        a,
        1.0,
        1e-6 * (1.0 - a) * profile(0.5 * (a + 1.0)).max(f64::MIN_POSITIVE),
    );
    let target = (rel_tol * coarse.integral.abs()).max(f64::MIN_POSITIVE);
    quadrature::integrate(profile, a, 1.0, target).integral
}

/// The normalized bump `φ(k)`; support is exactly `(-σ k_c, σ k_c)`.
pub fn bump_phi(k: f64, kc: f64, spec: &MollifierSpec) -> f64 {
    let width = spec.sigma * kc;
    spec.normalization(kc) * profile(k / width)
}

/// Indicator `θ₀(k) = 1_{|k| ≤ (5/8) k_c}` before smoothing.
pub fn theta0(k: f64, kc: f64) -> f64 {
    if k.abs() <= STEP_FRACTION * kc {
        1.0
    } else {
        0.0
    }
}

/// Smooth cutoff `θ = φ * θ₀`.
pub fn theta(k: f64, kc: f64, spec: &MollifierSpec) -> f64 {
    let k = k.abs();
    if k <= 0.5 * kc {
        return 1.0;
    }
    if k >= 0.75 * kc {
        return 0.0;
    }
    // θ(k) = ∫_{k-5/8 kc}^{k+5/8 kc} φ; for k ≥ 0 the upper limit clears the
    // bump support, leaving a single incomplete profile integral.
    let a = (k - STEP_FRACTION * kc) / (spec.sigma * kc);
    if a <= -1.0 {
        return 1.0;
    }
    (profile_tail(a, spec.quad_rel_tol) / profile_mass()).clamp(0.0, 1.0)
}

/// Mollified Laplacian symbol `ĥ(k) = θ(k)(k² - k_c²) + k_c²`.
pub fn h_symbol(k: f64, kc: f64, spec: &MollifierSpec) -> f64 {
    symbol_from_theta(k, kc, theta(k, kc, spec))
}

fn symbol_from_theta(k: f64, kc: f64, th: f64) -> f64 {
    // Plateaus are returned exactly so that ĥ = k² where θ = 1.
    if th == 1.0 {
        k * k
    } else if th == 0.0 {
        kc * kc
    } else {
        th * (k * k - kc * kc) + kc * kc
    }
}

/// `θ` and `ĥ` tabulated on the Fourier grid of one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedSymbol {
    grid: GridSpec,
    spec: MollifierSpec,
    theta: Vec<f64>,
    h: Vec<f64>,
}

impl MollifiedSymbol {
    pub fn new(grid: GridSpec, spec: MollifierSpec) -> Self {
        let n = grid.n();
        let kc = grid.kc();
        // Tabulate n ≥ 0 and mirror, so evenness is exact.
        let half: Vec<f64> = (0..=n / 2)
            .map(|m| theta(m as f64 * grid.dk(), kc, &spec))
            .collect();
        let theta: Vec<f64> = (0..n)
            .map(|p| half[grid.wavenumber_index(p).unsigned_abs() as usize])
            .collect();
        let h = theta
            .iter()
            .enumerate()
            .map(|(p, &th)| symbol_from_theta(grid.k(p), kc, th))
            .collect();
        Self {
            grid,
            spec,
            theta,
            h,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spec(&self) -> &MollifierSpec {
        &self.spec
    }

    /// `θ(k)` in canonical order.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `ĥ(k)` in canonical order.
    pub fn h(&self) -> &[f64] {
        &self.h
    }
}
