//! Boundary symbols of the upward radiation condition.
//!
//! Above the waveguide every Fourier mode `ℓ` of an `α`-quasi-periodic field
//! behaves like `exp(i√(k²-(ℓ+α)²) x₂)`. The square root is taken on the branch
//! that is holomorphic in `ℂ \ iℝ_{≤0}`; for real arguments this makes
//! propagating modes go up and evanescent modes decay.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::contour::QuadratureRule;
use crate::{Error, Result, C64, I};

/// Threshold on `|expm1(±2w)|` below which `coth(w)` is treated as singular.
const COTH_POLE_GUARD: f64 = 1e-300;

/// Beyond this value of `Re(2w)` the correction `2/expm1(2w)` is below one ulp.
const COTH_SATURATION: f64 = 700.0;

/// Square root on the cut `iℝ_{≤0}`: the argument of `z` is measured in
/// `[-π/2, 3π/2)` so that the result has argument in `[-π/4, 3π/4)`.
///
/// Points exactly on the negative imaginary axis use the limit from
/// `Re z > 0`, which keeps purely decaying modes decaying.
pub fn branch_sqrt(z: C64) -> Result<C64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "branch_sqrt of non-finite value {z}"
        )));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut theta = z.im.atan2(z.re);
    if theta < -FRAC_PI_2 {
        theta += 2.0 * PI;
    }
    let r = z.norm().sqrt();
    let half = 0.5 * theta;
    Ok(C64::new(r * half.cos(), r * half.sin()))
}

/// `exp(w) - 1` without cancellation for small `|w|`.
pub fn expm1(w: C64) -> C64 {
    let (s, c) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    C64::new(w.re.exp_m1() * c - 2.0 * half * half, w.re.exp() * s)
}

/// `coth(w)` evaluated as `±(1 + 2/expm1(±2w))`, saturating to `±1` where
/// `e^{2|Re w|}` would overflow.
pub fn coth(w: C64) -> Result<C64> {
    let (sign, w) = if w.re >= 0.0 { (1.0, w) } else { (-1.0, -w) };
    if 2.0 * w.re > COTH_SATURATION {
        return Ok(C64::new(sign, 0.0));
    }
    let d = expm1(2.0 * w);
    if d.norm() < COTH_POLE_GUARD {
        return Err(Error::SingularSymbol(sign * w));
    }
    Ok(sign * (1.0 + 2.0 / d))
}

/// The square root `√(k² - (ℓ+α)²)` on the radiating branch.
pub fn vertical_wavenumber(ell: i64, alpha: C64, k: f64) -> Result<C64> {
    let w = ell as f64 + alpha;
    branch_sqrt(k * k - w * w)
}

/// Symbol of the exact DtN map for Fourier mode `ℓ`: `i√(k² - (ℓ+α)²)`.
pub fn dtn_symbol(ell: i64, alpha: C64, k: f64) -> Result<C64> {
    Ok(I * vertical_wavenumber(ell, alpha, k)?)
}

/// Symbol of the DtN map induced by a PML of complex thickness `σ_ρ`:
/// `i t coth(-i t σ_ρ)` with `t = √(k² - (ℓ+α)²)`.
///
/// At a cut-off (`t = 0`) the product has the finite limit `-1/σ_ρ`.
pub fn pml_dtn_symbol(ell: i64, alpha: C64, k: f64, sigma_rho: C64) -> Result<C64> {
    if !(sigma_rho.re > 0.0 && sigma_rho.im >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "PML thickness σ_ρ = {sigma_rho} must have Re > 0 and Im ≥ 0"
        )));
    }
    let t = vertical_wavenumber(ell, alpha, k)?;
    let w = -I * t * sigma_rho;
    if w.norm() < 1e-8 {
        // t coth(w) = t/w + t w/3 + O(w³), t/w = i/σ
        return Ok(I * (I / sigma_rho + t * w / 3.0));
    }
    Ok(I * t * coth(w)?)
}

/// Vertical stretching `s(x₂) = 1 + ρ e^{iπ/4} ((x₂-h₀)/τ)^m` inside the layer
/// `(h₀, h₀+τ)` and `1` below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlProfile {
    pub rho: f64,
    pub tau: f64,
    pub m: u32,
    pub h0: f64,
}

impl PmlProfile {
    pub fn new(rho: f64, tau: f64, m: u32, h0: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("PML strength ρ = {rho}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("PML thickness τ = {tau}")));
        }
        if m < 1 {
            return Err(Error::InvalidArgument("PML exponent m must be ≥ 1".into()));
        }
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(Error::InvalidArgument(format!("waveguide height h0 = {h0}")));
        }
        Ok(Self { rho, tau, m, h0 })
    }

    /// Top of the computational domain, `h₀ + τ`.
    pub fn top(&self) -> f64 {
        self.h0 + self.tau
    }

    fn phase() -> C64 {
        C64::from_polar(1.0, FRAC_PI_4)
    }

    fn depth(&self, x2: f64) -> Option<f64> {
        (x2 > self.h0).then(|| (x2 - self.h0) / self.tau)
    }

    pub fn s(&self, x2: f64) -> C64 {
        match self.depth(x2) {
            Some(d) => 1.0 + self.rho * Self::phase() * d.powi(self.m as i32),
            None => C64::new(1.0, 0.0),
        }
    }

    /// `s′(x₂)`, one-sided from above at `x₂ = h₀` (relevant for `m = 1`).
    pub fn ds(&self, x2: f64) -> C64 {
        match self.depth(x2) {
            Some(d) => {
                let m = self.m as i32;
                self.rho * Self::phase() * (m as f64) * d.powi(m - 1) / self.tau
            }
            None => C64::new(0.0, 0.0),
        }
    }

    /// Coefficient of `∂₂²` in `(1/s)∂₂((1/s)∂₂ u)`: `a = 1/s²`.
    pub fn a(&self, x2: f64) -> C64 {
        let s = self.s(x2);
        1.0 / (s * s)
    }

    /// Coefficient of `∂₂` in `(1/s)∂₂((1/s)∂₂ u)`: `b = (1/s)(1/s)′ = -s′/s³`.
    pub fn b(&self, x2: f64) -> C64 {
        let s = self.s(x2);
        -self.ds(x2) / (s * s * s)
    }

    /// `χ = (1+i) τ/(m+1)`.
    pub fn chi(&self) -> C64 {
        C64::new(1.0, 1.0) * self.tau / (self.m as f64 + 1.0)
    }

    /// Complex layer thickness `σ_ρ = ∫ s = τ + ρχ`.
    pub fn sigma(&self) -> C64 {
        self.tau + self.rho * self.chi()
    }
}

/// Weighted symbol sup `max |Λ_{α,ρ,ℓ} - Λ_{α,ℓ}| / (1+ℓ²)^{1/2}` over
/// `|ℓ| ≤ l_max` and the nodes of `rule`.
///
/// For diagonal operators in the Fourier basis this is the
/// `H^{1/2} → H^{-1/2}` operator norm of the difference of the two DtN maps.
pub fn dtn_difference_bound(
    k: f64,
    rule: &QuadratureRule,
    l_max: i64,
    pml: &PmlProfile,
) -> Result<f64> {
    if rule.nodes.is_empty() {
        return Err(Error::InvalidArgument("empty contour".into()));
    }
    let sigma = pml.sigma();
    let mut sup = 0.0f64;
    for &alpha in &rule.nodes {
        for ell in -l_max..=l_max {
            let diff = pml_dtn_symbol(ell, alpha, k, sigma)? - dtn_symbol(ell, alpha, k)?;
            let weight = (1.0 + (ell * ell) as f64).sqrt();
            sup = sup.max(diff.norm() / weight);
        }
    }
    Ok(sup)
}
