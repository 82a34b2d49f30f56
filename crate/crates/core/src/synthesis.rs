//! Field synthesis `u(x₁,x₂) = Σ_ℓ Σ_μ v_ℓ(x₂,γ_μ) w_μ e^{i(ℓ+γ_μ)x₁}`,
//! error norms, mode extraction and the PML convergence study.

use rayon::prelude::*;

use crate::cellsolver::{CellField, DiscretizationParams};
use crate::contour::QuadratureRule;
use crate::experiment::{SlabExperiment, TopKind};
use crate::modes::{mode_eval, GuidedMode, LAYER_TOP};
use crate::quadrature::sine_integral;
use crate::{Error, Result, C64, I};

const GRID_TOL: f64 = 1e-9;

/// Sampling points: an equispaced `x₁` axis and a subset of the solver's
/// vertical grid lines.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGridSpec {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl FieldGridSpec {
    /// Equispaced `x₁ ∈ [lo, hi]` with spacing ≤ `max_step`, and every solver
    /// line with `x₂ ≤ x2_max`.
    pub fn on_solver_grid(params: &DiscretizationParams, x1_range: (f64, f64), max_step: f64, x2_max: f64) -> Self {
        let x1 = equispaced(x1_range.0, x1_range.1, max_step);
        let x2 = (0..=params.n_y)
            .map(|j| params.x2(j))
            .take_while(|&x| x <= x2_max + GRID_TOL)
            .collect();
        Self { x1, x2 }
    }
}

/// `n+1` points from `lo` to `hi` with `n = ceil((hi-lo)/max_step)`.
pub fn equispaced(lo: f64, hi: f64, max_step: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let n = ((hi - lo) / max_step - 1e-12).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Complex samples, row-major `values[i₂·n₁ + i₁]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<C64>,
}

impl FieldGrid {
    pub fn zeros(x1: Vec<f64>, x2: Vec<f64>) -> Self {
        let values = vec![C64::new(0.0, 0.0); x1.len() * x2.len()];
        Self { x1, x2, values }
    }

    pub fn get(&self, i1: usize, i2: usize) -> C64 {
        self.values[i2 * self.x1.len() + i1]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn same_points(&self, other: &FieldGrid) -> bool {
        self.x1 == other.x1 && self.x2 == other.x2
    }

    /// Samples as `(x1, x2, u)`, `x₁` fastest.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, C64)> + '_ {
        let n1 = self.x1.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &u)| (self.x1[i % n1], self.x2[i / n1], u))
    }
}

fn grid_index(params: &DiscretizationParams, x2: f64) -> Result<usize> {
    let s = x2 / params.h_y();
    let j = s.round();
    if (s - j).abs() > GRID_TOL * s.abs().max(1.0) || j < 0.0 || j as usize > params.n_y {
        return Err(Error::InvalidArgument(format!(
            "x2 = {x2} is not a solver grid line (h_y = {})",
            params.h_y()
        )));
    }
    Ok(j as usize)
}

pub fn synthesize_field(
    v: &CellField,
    rule: &QuadratureRule,
    params: &DiscretizationParams,
    spec: &FieldGridSpec,
) -> Result<FieldGrid> {
    if v.n_nodes != rule.len() || v.n_modes != params.n_modes() || v.n_y != params.n_y {
        return Err(Error::InvalidArgument("cell field does not match rule/discretization".into()));
    }
    let rows: Vec<usize> = spec.x2.iter().map(|&x| grid_index(params, x)).collect::<Result<_>>()?;
    let nm = v.n_modes;
    let nn = v.n_nodes;
    // weighted samples per requested row, [row][μ][ℓ]
    let gathered: Vec<Vec<C64>> = rows
        .par_iter()
        .map(|&j| {
            let mut out = Vec::with_capacity(nn * nm);
            for mu in 0..nn {
                let w = rule.weights[mu];
                out.extend(v.node(mu)[j * nm..(j + 1) * nm].iter().map(|&x| w * x));
            }
            out
        })
        .collect();
    let l = params.fourier_l as i64;
    let columns: Vec<Vec<C64>> = spec
        .x1
        .par_iter()
        .map(|&x1| {
            let node_phase: Vec<C64> = rule.nodes.iter().map(|&g| (I * g * x1).exp()).collect();
            let mode_phase: Vec<C64> = (-l..=l).map(|e| C64::from_polar(1.0, e as f64 * x1)).collect();
            gathered
                .iter()
                .map(|row| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (mu, chunk) in row.chunks_exact(nm).enumerate() {
                        let inner: C64 = chunk.iter().zip(&mode_phase).map(|(a, b)| a * b).sum();
                        acc += node_phase[mu] * inner;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut grid = FieldGrid::zeros(spec.x1.clone(), spec.x2.clone());
    let n1 = spec.x1.len();
    for (i1, col) in columns.into_iter().enumerate() {
        for (i2, u) in col.into_iter().enumerate() {
            grid.values[i2 * n1 + i1] = u;
        }
    }
    Ok(grid)
}

/// Axis-aligned closed rectangle used to restrict error norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl Region {
    pub fn everything() -> Self {
        Self {
            x1: (f64::NEG_INFINITY, f64::INFINITY),
            x2: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        x1 >= self.x1.0 && x1 <= self.x1.1 && x2 >= self.x2.0 && x2 <= self.x2.1
    }
}

/// `max_region |a-b| / max_grid |b|`.
pub fn relative_inf_error(a: &FieldGrid, b: &FieldGrid, region: Region) -> Result<f64> {
    if !a.same_points(b) {
        return Err(Error::InvalidArgument("field grids differ".into()));
    }
    let denom = b.max_abs();
    if denom == 0.0 {
        return Err(Error::DivisionByZero("reference field vanishes".into()));
    }
    let num = a
        .iter()
        .zip(&b.values)
        .filter(|((x1, x2, _), _)| region.contains(*x1, *x2))
        .map(|((_, _, u), w)| (u - w).norm())
        .fold(0.0, f64::max);
    Ok(num / denom)
}

/// `‖new - old‖∞ / ‖new‖∞`; zero when both fields vanish.
pub fn relative_change(new: &FieldGrid, old: &FieldGrid) -> Result<f64> {
    if !new.same_points(old) {
        return Err(Error::InvalidArgument("field grids differ".into()));
    }
    let num = new.values.iter().zip(&old.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if num == 0.0 {
        return Ok(0.0);
    }
    let denom = new.max_abs();
    if denom == 0.0 {
        return Err(Error::DivisionByZero("iterate vanishes".into()));
    }
    Ok(num / denom)
}

/// Least-squares amplitude `a` minimising `Σ |u - a φ|²` over samples with
/// `x₁` in `window` and `0 < x₂ < 1`.
pub fn extract_mode_amplitude(field: &FieldGrid, mode: &GuidedMode, window: (f64, f64), normalized: bool) -> Result<C64> {
    let first = field.x1.first().copied().unwrap_or(f64::NAN);
    let last = field.x1.last().copied().unwrap_or(f64::NAN);
    if !(window.0 < window.1 && window.0 >= first - GRID_TOL && window.1 <= last + GRID_TOL) {
        return Err(Error::InvalidArgument(format!(
            "window ({}, {}) not inside grid ({first}, {last})",
            window.0, window.1
        )));
    }
    let (mut num, mut den, mut count) = (C64::new(0.0, 0.0), 0.0, 0usize);
    for (x1, x2, u) in field.iter() {
        if x1 >= window.0 && x1 <= window.1 && x2 > 0.0 && x2 < LAYER_TOP {
            let phi = mode_eval(mode, x1, x2, normalized);
            num += phi.conj() * u;
            den += phi.norm_sqr();
            count += 1;
        }
    }
    if count == 0 || !(den > 1e-300 * count as f64) {
        return Err(Error::IllPosedExtraction(format!(
            "{count} samples with mode energy {den:e} in window"
        )));
    }
    Ok(num / den)
}

/// Cut-off pair `ψ^± = 1/2 ± Si(δx₁/2)/π`.
pub fn psi_profile(x1: f64, delta: f64) -> (f64, f64) {
    let s = sine_integral(0.5 * delta * x1) / std::f64::consts::PI;
    (0.5 + s, 0.5 - s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`; `None` below two
/// distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit { slope, intercept, r2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmlSweepResult {
    /// Ascending.
    pub rho_values: Vec<f64>,
    pub rel_errors: Vec<f64>,
    /// Fit of `ln(rel_error)` against `ρ`; `None` for fewer than two values.
    pub fit: Option<LinearFit>,
}

/// Compares iterate `t` of the PML run at every `ρ` with the Rayleigh run on
/// `x₂ ≤ 0.9 h₀`.
pub fn pml_sweep(base: &SlabExperiment, rho_values: &[f64], iteration: usize) -> Result<PmlSweepResult> {
    if rho_values.is_empty() {
        return Err(Error::InvalidArgument("empty ρ list".into()));
    }
    if iteration < 1 {
        return Err(Error::InvalidArgument("iteration must be ≥ 1".into()));
    }
    let mut rhos = rho_values.to_vec();
    if rhos.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidArgument("non-finite ρ".into()));
    }
    rhos.sort_by(|a, b| a.total_cmp(b));
    rhos.dedup();

    let mut exp = base.clone();
    exp.x2_max = 0.9 * base.h0;
    exp.t_max = iteration;
    exp.tol = 0.0;
    let reference = exp.run(TopKind::Rayleigh)?;
    let u_ref = reference
        .fields
        .get(iteration - 1)
        .ok_or_else(|| Error::InvalidArgument("reference run stopped early".into()))?;
    let mut errors = Vec::with_capacity(rhos.len());
    for &rho in &rhos {
        let run = exp.run(TopKind::Pml { rho })?;
        let u = run
            .fields
            .get(iteration - 1)
            .ok_or_else(|| Error::InvalidArgument("PML run stopped early".into()))?;
        errors.push(relative_inf_error(u, u_ref, Region::everything())?);
    }
    let logs: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let fit = linear_fit(&rhos, &logs);
    Ok(PmlSweepResult {
        rho_values: rhos,
        rel_errors: errors,
        fit,
    })
}
