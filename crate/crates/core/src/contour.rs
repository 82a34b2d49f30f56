//! The integration path `Γ` from `-1/2` to `1/2` in the complex
//! quasi-momentum plane.
//!
//! `Γ` follows the real axis except on small intervals around propagative
//! wavenumbers and cut-off values, where it detours into the half plane in
//! which the cell solution continues analytically. The path is parameterized
//! by `t = Re α + 1/2 ∈ [0, 1]`, so a detour only adds an imaginary part.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result, C64};

const EDGE_TOL: f64 = 1e-13;
const FIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indent {
    /// Detour through `Im α < 0`.
    Below,
    /// Detour through `Im α > 0`.
    Above,
}

impl Indent {
    fn sign(self) -> f64 {
        match self {
            Indent::Below => -1.0,
            Indent::Above => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Indent::Below => Indent::Above,
            Indent::Above => Indent::Below,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpShape {
    /// `ε sin^p(π/2 ((t-a)/δ + 1))` on `(a-δ, a+δ)`.
    SinePower,
    /// Half circle of radius `δ` about the center; only continuous at the
    /// joins, kept as an alternative path for deformation checks.
    HalfCircle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourFeature {
    pub center: f64,
    pub indent: Indent,
    pub half_width: f64,
    pub bump_height: f64,
    pub bump_exponent: u32,
    pub shape: BumpShape,
}

impl ContourFeature {
    pub fn bump(center: f64, indent: Indent, half_width: f64, bump_height: f64, bump_exponent: u32) -> Self {
        Self {
            center,
            indent,
            half_width,
            bump_height,
            bump_exponent,
            shape: BumpShape::SinePower,
        }
    }

    pub fn half_circle(center: f64, indent: Indent, radius: f64) -> Self {
        Self {
            center,
            indent,
            half_width: radius,
            bump_height: radius,
            bump_exponent: 1,
            shape: BumpShape::HalfCircle,
        }
    }

    fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    /// Point and derivative with respect to `t` for `re` inside the feature.
    fn eval(&self, re: f64) -> (C64, C64) {
        let sign = self.indent.sign();
        match self.shape {
            BumpShape::SinePower => {
                let theta = FRAC_PI_2 * ((re - self.center) / self.half_width + 1.0);
                let (s, c) = theta.sin_cos();
                let p = self.bump_exponent as i32;
                let height = self.bump_height * s.powi(p);
                let slope = self.bump_height * p as f64 * s.powi(p - 1) * c * FRAC_PI_2 / self.half_width;
                (C64::new(re, sign * height), C64::new(1.0, sign * slope))
            }
            BumpShape::HalfCircle => {
                let u = (re - self.lo()) / (2.0 * self.half_width);
                let (s, c) = (PI * u).sin_cos();
                let r = self.half_width;
                let point = C64::new(self.center - r * c, sign * r * s);
                let deriv = C64::new(FRAC_PI_2 * s, sign * FRAC_PI_2 * c);
                (point, deriv)
            }
        }
    }
}

/// Piecewise description of `Γ`; feature intervals are disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    features: Vec<ContourFeature>,
}

impl Contour {
    pub fn new(mut features: Vec<ContourFeature>) -> Result<Self> {
        for f in &features {
            if !(f.half_width > 0.0) || !(f.bump_height > 0.0) || f.bump_exponent < 1 {
                return Err(Error::InvalidConfiguration(format!(
                    "feature at {} needs δ > 0, ε > 0, p ≥ 1",
                    f.center
                )));
            }
            if f.lo() < -0.5 - FIT_TOL || f.hi() > 0.5 + FIT_TOL {
                return Err(Error::InvalidConfiguration(format!(
                    "feature ({}, {}) leaves (-1/2, 1/2)",
                    f.lo(),
                    f.hi()
                )));
            }
        }
        features.sort_by(|a, b| a.center.total_cmp(&b.center));
        for pair in features.windows(2) {
            if pair[0].hi() > pair[1].lo() + FIT_TOL {
                return Err(Error::InvalidConfiguration(format!(
                    "features at {} and {} overlap",
                    pair[0].center, pair[1].center
                )));
            }
        }
        Ok(Self { features })
    }

    pub fn straight() -> Self {
        Self { features: Vec::new() }
    }

    /// Detours for one right-going propagative wavenumber `α̂` (and its
    /// left-going mirror `-α̂`) and the cut-off pair `±κ`, all with
    /// sine-power bumps of the same `ε`, `δ`, `p`.
    pub fn waveguide(alpha_hat: f64, kappa: f64, eps: f64, delta: f64, p: u32) -> Result<Self> {
        Self::new(vec![
            ContourFeature::bump(alpha_hat, Indent::Below, delta, eps, p),
            ContourFeature::bump(-alpha_hat, Indent::Above, delta, eps, p),
            ContourFeature::bump(kappa, Indent::Below, delta, eps, p),
            ContourFeature::bump(-kappa, Indent::Above, delta, eps, p),
        ])
    }

    pub fn features(&self) -> &[ContourFeature] {
        &self.features
    }

    fn feature_at(&self, re: f64) -> Option<&ContourFeature> {
        self.features.iter().find(|f| re > f.lo() && re < f.hi())
    }

    /// `γ(t)` for `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> C64 {
        let re = t - 0.5;
        match self.feature_at(re) {
            Some(f) => f.eval(re).0,
            None => C64::new(re, 0.0),
        }
    }

    /// `γ′(t)`; the mean of the one-sided limits on a feature edge.
    pub fn derivative(&self, t: f64) -> C64 {
        let re = t - 0.5;
        for f in &self.features {
            for edge in [f.lo(), f.hi()] {
                if (re - edge).abs() < EDGE_TOL {
                    return 0.5 * (f.eval(edge).1 + 1.0);
                }
            }
        }
        match self.feature_at(re) {
            Some(f) => f.eval(re).1,
            None => C64::new(1.0, 0.0),
        }
    }

    /// Trapezoidal rule with `M+1` nodes `γ(μ/M)` and weights `γ′(μ/M)/M`,
    /// halved at both ends.
    pub fn quadrature(&self, m: usize) -> Result<QuadratureRule> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("quadrature needs M ≥ 2, got {m}")));
        }
        let h = 1.0 / m as f64;
        let mut nodes = Vec::with_capacity(m + 1);
        let mut weights = Vec::with_capacity(m + 1);
        for mu in 0..=m {
            let t = mu as f64 * h;
            if mu == 0 || mu == m {
                nodes.push(C64::new(t - 0.5, 0.0));
                weights.push(C64::new(0.5 * h, 0.0));
            } else {
                nodes.push(self.point(t));
                weights.push(h * self.derivative(t));
            }
        }
        Ok(QuadratureRule { nodes, weights, m })
    }
}

/// Nodes `γ_μ` and complex weights `w_μ` of the trapezoidal rule on `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<C64>,
    pub weights: Vec<C64>,
    pub m: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(C64) -> C64>(&self, mut f: F) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&a, &w)| w * f(a)).sum()
    }

    pub fn weight_sum(&self) -> C64 {
        self.weights.iter().sum()
    }
}

/// `|∫_{Γ₁} f - ∫_{Γ₂} f|` for two rules; small exactly when `f` is analytic
/// in the region between the two paths.
pub fn contour_invariance_check<F: FnMut(C64) -> C64>(first: &QuadratureRule, second: &QuadratureRule, mut f: F) -> f64 {
    (first.integrate(&mut f) - second.integrate(&mut f)).norm()
}
