//! Real-line quadrature helpers shared by the modules: composite
//! Gauss-Legendre for complex integrands and the sine integral.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::C64;

/// Composite Gauss-Legendre rule with `nodes_per_panel` points on each of
/// `panels` equal sub-intervals.
#[derive(Debug, Clone)]
pub struct CompositeGauss {
    pairs: Vec<(f64, f64)>,
    panels: usize,
}

impl CompositeGauss {
    pub fn new(nodes_per_panel: usize, panels: usize) -> Self {
        let degree = NonZeroUsize::new(nodes_per_panel.max(1)).unwrap();
        let rule = GaussLegendre::new(degree);
        Self {
            pairs: rule.as_node_weight_pairs().to_vec(),
            panels: panels.max(1),
        }
    }

    /// Nodes and weights mapped to `(a, b)`.
    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let width = (b - a) / self.panels as f64;
        let mut out = Vec::with_capacity(self.pairs.len() * self.panels);
        for p in 0..self.panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for &(x, w) in &self.pairs {
                out.push((mid + 0.5 * width * x, 0.5 * width * w));
            }
        }
        out
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.points(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        self.points(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

const SI_ASYMPTOTIC_FROM: f64 = 200.0;

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`.
///
/// Composite 16-point Gauss-Legendre on panels of width ≤ 2 up to
/// `|x| = 200`, the auxiliary-function asymptotic series beyond.
pub fn sine_integral(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x <= SI_ASYMPTOTIC_FROM {
        let panels = (x / 2.0).ceil() as usize;
        return CompositeGauss::new(16, panels).integrate(0.0, x, sinc);
    }
    // Si(x) = π/2 - f(x) cos x - g(x) sin x
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let (mut f, mut g) = (0.0, 0.0);
    let mut term_f = inv;
    let mut term_g = inv2;
    for n in 0..12 {
        f += term_f;
        g += term_g;
        let n = n as f64;
        term_f *= -(2.0 * n + 1.0) * (2.0 * n + 2.0) * inv2;
        term_g *= -(2.0 * n + 2.0) * (2.0 * n + 3.0) * inv2;
    }
    FRAC_PI_2 - f * x.cos() - g * x.sin()
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}
