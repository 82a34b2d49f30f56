//! Guided modes of the constant-index slab `n(x) = n` for `0 < x₂ < 1`,
//! `n(x) = 1` above.
//!
//! A mode with horizontal wavenumber `ω ∈ (k, √n k)` has the profile
//! `sin(z x₂)` in the slab and `sin(z) e^{-d (x₂-1)}` above it, with
//! `z = √(nk² - ω²)` and `d = √(ω² - k²)`. Matching `∂₂` at `x₂ = 1` gives the
//! dispersion relation `d sin z + z cos z = 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::cellsolver::SeparableSource;
use crate::quadrature::CompositeGauss;
use crate::{Error, Result, C64, I};

/// Height of the slab.
pub const LAYER_TOP: f64 = 1.0;

/// Wavenumber, propagative frequency and index of the slab example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabConfig {
    pub k: f64,
    pub omega: f64,
    pub n_index: f64,
}

impl SlabConfig {
    /// Picks the index `n` that makes `omega` a propagative wavenumber.
    pub fn from_frequency(k: f64, omega: f64) -> Result<Self> {
        let (n_index, _) = solve_index(k, omega)?;
        Ok(Self { k, omega, n_index })
    }

    /// `√(nk² - ω²)`.
    pub fn transverse_wavenumber(&self) -> f64 {
        (self.n_index * self.k * self.k - self.omega * self.omega).sqrt()
    }

    /// `√(ω² - k²)`.
    pub fn decay_rate(&self) -> f64 {
        (self.omega * self.omega - self.k * self.k).sqrt()
    }

    /// Refractive index at height `x₂` (the interface takes the mean value).
    pub fn index_at(&self, x2: f64) -> f64 {
        if x2 < LAYER_TOP {
            self.n_index
        } else if x2 > LAYER_TOP {
            1.0
        } else {
            0.5 * (self.n_index + 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedMode {
    pub config: SlabConfig,
    pub z: f64,
    pub decay: f64,
    pub direction: Direction,
    pub norm_const: f64,
    pub lambda: f64,
}

/// Left-hand side of the dispersion relation,
/// `√(ω²-k²) sin(√(nk²-ω²)) + √(nk²-ω²) cos(√(nk²-ω²))`.
pub fn dispersion_residual(k: f64, n_index: f64, omega: f64) -> Result<f64> {
    if !(k > 0.0) || !(omega > k) || !(omega * omega < n_index * k * k) {
        return Err(Error::InvalidArgument(format!(
            "ω = {omega} outside the guided window (k, √n k) for k = {k}, n = {n_index}"
        )));
    }
    let d = (omega * omega - k * k).sqrt();
    let z = (n_index * k * k - omega * omega).sqrt();
    Ok(d * z.sin() + z * z.cos())
}

/// Solves `z cot z = -√(ω²-k²)` on `(π/2, π)` and returns `(n, z)` with
/// `n = (z² + ω²)/k²`.
pub fn solve_index(k: f64, omega: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k.is_finite()) || !(omega > k && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need ω > k > 0, got k = {k}, ω = {omega}"
        )));
    }
    let d = (omega * omega - k * k).sqrt();
    // g decreases from 0⁻ to -∞ on (π/2, π)
    let g = |z: f64| z * z.cos() / z.sin() + d;
    let (mut lo, mut hi) = (FRAC_PI_2 + 1e-9, PI - 1e-9);
    let z = if g(lo) <= 0.0 {
        // ω within ~1e-9 of k: the root is pinned to the left end
        lo
    } else if g(hi) >= 0.0 {
        return Err(Error::RootFinding(format!(
            "no sign change of z cot z + {d} on (π/2, π)"
        )));
    } else {
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        for _ in 0..2 {
            // d/dz (z cot z) = cot z - z / sin² z
            let s = z.sin();
            let dg = z.cos() / s - z / (s * s);
            let step = g(z) / dg;
            if step.is_finite() && (z - step) > FRAC_PI_2 && (z - step) < PI {
                z -= step;
            }
        }
        z
    };
    if !z.is_finite() {
        return Err(Error::RootFinding("non-finite root".into()));
    }
    Ok(((z * z + omega * omega) / (k * k), z))
}

/// Integer/fractional split `x = l + r` with `r ∈ (-1/2, 1/2]`.
pub fn reduce_to_cell(x: f64) -> (i64, f64) {
    let l = (x - 0.5).ceil();
    (l as i64, x - l)
}

/// `∫₀¹ sin²(z t) dt`.
fn slab_sin2(z: f64) -> f64 {
    0.5 - (2.0 * z).sin() / (4.0 * z)
}

/// `∫₀^∞ |profile|²` and `∫₀^∞ n |profile|²` of the unnormalized mode.
fn profile_integrals(n_index: f64, z: f64, decay: f64) -> (f64, f64) {
    let slab = slab_sin2(z);
    let tail = z.sin().powi(2) / (2.0 * decay);
    (slab + tail, n_index * slab + tail)
}

/// Constant `c` with `2k·2π ∫₀^∞ n |c·profile|² dx₂ = 1`.
pub fn normalization_constant(k: f64, n_index: f64, z: f64, decay: f64) -> f64 {
    let (_, i_n) = profile_integrals(n_index, z, decay);
    1.0 / (4.0 * PI * k * i_n).sqrt()
}

/// Eigenvalue `λ = ±ω I₁/(k I_n)` of the one-dimensional group-velocity problem.
pub fn group_eigenvalue(k: f64, omega: f64, n_index: f64, z: f64, decay: f64, direction: Direction) -> f64 {
    let (i1, i_n) = profile_integrals(n_index, z, decay);
    direction.sign() * omega * i1 / (k * i_n)
}

impl GuidedMode {
    /// Unnormalized mode (`norm_const = 1`) with `λ` filled in.
    pub fn new(config: SlabConfig, direction: Direction) -> Result<Self> {
        let residual = dispersion_residual(config.k, config.n_index, config.omega)?;
        if residual.abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "ω = {} is not a propagative wavenumber (residual {residual:e})",
                config.omega
            )));
        }
        let z = config.transverse_wavenumber();
        let decay = config.decay_rate();
        let mut mode = Self {
            config,
            z,
            decay,
            direction,
            norm_const: 1.0,
            lambda: 0.0,
        };
        mode.lambda = mode_lambda(&mode);
        Ok(mode)
    }

    pub fn pair(config: SlabConfig) -> Result<(Self, Self)> {
        Ok((Self::new(config, Direction::Right)?, Self::new(config, Direction::Left)?))
    }

    /// Real vertical profile of the unnormalized mode.
    pub fn profile(&self, x2: f64) -> f64 {
        if x2 <= LAYER_TOP {
            (self.z * x2).sin()
        } else {
            self.z.sin() * (-self.decay * (x2 - LAYER_TOP)).exp()
        }
    }

    /// `∂₂` of the profile; `above` selects the one-sided limit at `x₂ = 1`.
    pub fn profile_derivative(&self, x2: f64, above: bool) -> f64 {
        if x2 < LAYER_TOP || (x2 == LAYER_TOP && !above) {
            self.z * (self.z * x2).cos()
        } else {
            -self.decay * self.z.sin() * (-self.decay * (x2 - LAYER_TOP)).exp()
        }
    }

    pub fn normalized(&self) -> Self {
        normalize_mode(self)
    }

    /// Horizontal wavenumber including direction, `±ω`.
    pub fn signed_omega(&self) -> f64 {
        self.direction.sign() * self.config.omega
    }
}

/// `φ^±(x)`, times `norm_const` when `normalized`.
pub fn mode_eval(mode: &GuidedMode, x1: f64, x2: f64, normalized: bool) -> C64 {
    let scale = if normalized { mode.norm_const } else { 1.0 };
    C64::from_polar(scale * mode.profile(x2), mode.signed_omega() * x1)
}

pub fn normalize_mode(mode: &GuidedMode) -> GuidedMode {
    let c = &mode.config;
    GuidedMode {
        norm_const: normalization_constant(c.k, c.n_index, mode.z, mode.decay),
        ..*mode
    }
}

pub fn mode_lambda(mode: &GuidedMode) -> f64 {
    let c = &mode.config;
    group_eigenvalue(c.k, c.omega, c.n_index, mode.z, mode.decay, mode.direction)
}

/// Far-field coefficient `a = (2πi/|λ|) ∫_Q f conj(φ̂) dx` of a normalized mode.
///
/// The `x₁` factor is integrated in closed form; the `x₂` factor by 64-node
/// composite Gauss-Legendre on each side of the slab interface.
pub fn excitation_coefficient(mode: &GuidedMode, source: &SeparableSource) -> C64 {
    if source.amplitude == 0.0 {
        return C64::new(0.0, 0.0);
    }
    // conj(e^{±iωx₁}) e^{i c x₁} = e^{i (c ∓ ω) x₁};  ∫ W e^{iξx₁} = 2π Ŵ(-ξ)
    let xi = source.carrier - mode.signed_omega();
    let x1_factor = 2.0 * PI * source.window.coefficient(C64::new(-xi, 0.0));

    let gauss = CompositeGauss::new(16, 4);
    let (lo, hi) = (source.x2_lo, source.x2_hi);
    let mut x2_factor = 0.0;
    for (a, b) in [(lo, hi.min(LAYER_TOP)), (lo.max(LAYER_TOP), hi)] {
        if b > a {
            x2_factor += gauss.integrate(a, b, |x2| {
                source.x2_profile(x2) * mode.norm_const * mode.profile(x2)
            });
        }
    }
    2.0 * PI * I / mode.lambda.abs() * source.amplitude * x1_factor * x2_factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_config() -> SlabConfig {
        SlabConfig::from_frequency(0.8, 1.4).unwrap()
    }

    /// Plain bisection with no Newton polish, as an independent oracle.
    fn bisection_root(d: f64) -> f64 {
        let (mut lo, mut hi) = (FRAC_PI_2 + 1e-12, PI - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid / mid.tan() + d > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn default_index() {
        let (n, z) = solve_index(0.8, 1.4).unwrap();
        assert!((n - 9.8).abs() < 0.05, "n = {n}");
        // 40-digit reference
        assert_abs_diff_eq!(n, 9.797958906723805, epsilon = 1e-11);
        assert_abs_diff_eq!(z, 2.076221014319823, epsilon = 1e-12);
        assert!(dispersion_residual(0.8, n, 1.4).unwrap().abs() < 1e-8);
    }

    #[test]
    fn off_root_residual_is_nonzero() {
        assert!(dispersion_residual(0.8, 9.8, 1.39).unwrap().abs() > 1e-3);
        assert!(dispersion_residual(0.8, 9.8, 0.7).is_err());
        assert!(dispersion_residual(0.8, 9.8, 3.0).is_err());
    }

    #[test]
    fn index_round_trip_against_bisection() {
        let (n, z) = solve_index(1.0, 1.5).unwrap();
        let z_ref = bisection_root(1.25f64.sqrt());
        assert_abs_diff_eq!(z, z_ref, epsilon = 1e-12);
        assert_abs_diff_eq!(n, z_ref * z_ref + 2.25, epsilon = 1e-11);
        assert!(dispersion_residual(1.0, n, 1.5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn index_near_light_line() {
        let k = 0.8;
        let (n, z) = solve_index(k, k * (1.0 + 1e-12)).unwrap();
        assert_abs_diff_eq!(z, FRAC_PI_2, epsilon = 1e-6);
        assert_abs_diff_eq!(n, (FRAC_PI_2.powi(2) + k * k) / (k * k), epsilon = 1e-5);
        assert!(solve_index(0.8, 0.8).is_err());
    }

    #[test]
    fn brillouin_reduction_of_default_parameters() {
        let (l, alpha_hat) = reduce_to_cell(1.4);
        assert_eq!(l, 1);
        assert_abs_diff_eq!(alpha_hat, 0.4, epsilon = 1e-15);
        let (l_hat, kappa) = reduce_to_cell(0.8);
        assert_eq!(l_hat, 1);
        assert_abs_diff_eq!(kappa, -0.2, epsilon = 1e-15);
        assert_eq!(reduce_to_cell(0.5), (0, 0.5));
        assert_eq!(reduce_to_cell(-0.5), (-1, 0.5));
    }

    #[test]
    fn mode_values() {
        let (right, left) = GuidedMode::pair(default_config()).unwrap();
        assert_eq!(mode_eval(&right, 3.0, 0.0, false), C64::new(0.0, 0.0));
        assert_abs_diff_eq!(right.profile(1.0), right.z.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(right.profile(1.0 + 1e-13), right.z.sin(), epsilon = 1e-12);
        let v = mode_eval(&right, PI / 1.4, 0.5, false);
        // 40-digit reference of -sin(z/2)
        assert_abs_diff_eq!(v.re, -0.8614461887908550, epsilon = 1e-13);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-13);
        for &(x1, x2) in &[(0.3, 0.2), (-2.0, 1.7), (5.0, 0.9)] {
            let d = mode_eval(&right, x1, x2, false).conj() - mode_eval(&left, x1, x2, false);
            assert!(d.norm() < 1e-15);
        }
    }

    #[test]
    fn interface_derivative_matches() {
        let (right, _) = GuidedMode::pair(default_config()).unwrap();
        let below = right.profile_derivative(1.0, false);
        let above = right.profile_derivative(1.0, true);
        assert!((below - above).abs() < 1e-8);
        for x2 in [1.5, 2.0, 4.0] {
            assert!(right.profile(x2).abs() <= right.z.sin() * (-right.decay * (x2 - 1.0)).exp());
        }
    }

    #[test]
    fn normalization_against_quadrature() {
        let mode = GuidedMode::new(default_config(), Direction::Right).unwrap().normalized();
        let c = mode.config;
        let q = CompositeGauss::new(20, 40);
        let slab = q.integrate(0.0, 1.0, |x| c.n_index * mode.profile(x).powi(2));
        // tail: substitute x₂ = 1 + s, truncated at s = 60/decay
        let tail = q.integrate(1.0, 1.0 + 60.0 / mode.decay, |x| mode.profile(x).powi(2));
        let total = 2.0 * c.k * 2.0 * PI * mode.norm_const.powi(2) * (slab + tail);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn normalization_scaling_and_idempotence() {
        let mode = GuidedMode::new(default_config(), Direction::Right).unwrap();
        let c1 = normalization_constant(0.8, mode.config.n_index, mode.z, mode.decay);
        let c2 = normalization_constant(1.6, mode.config.n_index, mode.z, mode.decay);
        assert_abs_diff_eq!(c2 * c2, 0.5 * c1 * c1, epsilon = 1e-15);
        let once = mode.normalized();
        assert_eq!(once, once.normalized());
    }

    #[test]
    fn lambda_signs_and_quadrature() {
        let (right, left) = GuidedMode::pair(default_config()).unwrap();
        assert!(right.lambda > 0.0);
        assert_abs_diff_eq!(left.lambda, -right.lambda, epsilon = 1e-15);
        assert_eq!(right.normalized().lambda, right.lambda);

        let c = right.config;
        let q = CompositeGauss::new(20, 40);
        let top = 1.0 + 60.0 / right.decay;
        let p2 = |x: f64| right.profile(x).powi(2);
        let i1 = q.integrate(0.0, 1.0, p2) + q.integrate(1.0, top, p2);
        let i_n = c.n_index * q.integrate(0.0, 1.0, p2) + q.integrate(1.0, top, p2);
        assert_abs_diff_eq!(right.lambda, c.omega * i1 / (c.k * i_n), epsilon = 1e-8);

        let unit = group_eigenvalue(0.8, 1.4, 1.0, right.z, right.decay, Direction::Left);
        assert_abs_diff_eq!(unit, -1.4 / 0.8, epsilon = 1e-14);
    }

    fn default_source() -> (GuidedMode, GuidedMode, SeparableSource) {
        let (right, left) = GuidedMode::pair(default_config()).unwrap();
        let q = crate::cellsolver::Perturbation::new(default_config().n_index / 2.0, 1.4, 0.2, 0.7);
        (right.normalized(), left.normalized(), SeparableSource::incident(&q, &right))
    }

    #[test]
    fn excitation_of_left_mode_vanishes() {
        let (_, left, f) = default_source();
        assert!(excitation_coefficient(&left, &f).norm() < 1e-14);
    }

    #[test]
    fn excitation_of_right_mode_is_positive_imaginary() {
        let (right, _, f) = default_source();
        let a = excitation_coefficient(&right, &f);
        assert!(a.re.abs() < 1e-12 * a.norm() && a.im > 0.0, "{a}");

        // brute-force 2-D quadrature of f conj(φ̂) over the support
        let q = CompositeGauss::new(20, 20);
        let inner = |x1: f64| {
            q.integrate_complex(0.2, 0.7, |x2| f.value(x1, x2) * mode_eval(&right, x1, x2, true).conj())
        };
        let integral = q.integrate_complex(0.0, PI / 1.4, inner);
        let reference = 2.0 * PI * I / right.lambda.abs() * integral;
        assert!((a - reference).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn excitation_of_zero_source() {
        let (right, _, _) = default_source();
        assert_eq!(excitation_coefficient(&right, &SeparableSource::zero()), C64::new(0.0, 0.0));
    }
}
