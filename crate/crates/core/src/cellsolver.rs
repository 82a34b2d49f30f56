//! Quasi-periodic cell problems on the contour nodes and the fixpoint
//! iteration that couples them through the perturbation.
//!
//! For every node `γ_ν` of `Γ` the Fourier coefficients `v_ℓ(x₂)`,
//! `ℓ = -L..L`, solve
//!
//! ```text
//! a v_ℓ'' + b v_ℓ' - (ℓ+γ_ν)² v_ℓ + k² Σ_m n_{ℓ-m} v_m = -f_ℓ(·, γ_ν) - k² Σ_μ w_μ Σ_m q_{ℓ-m}(·, γ_ν-γ_μ) v_{m,μ}
//! ```
//!
//! on `(0, h₀+τ)` with `v_ℓ(0) = 0`. Second-order central differences in
//! `x₂` turn this into a block-tridiagonal system with `(2L+1)²` blocks. The
//! top row is closed either by `v = 0` (PML) or by the Rayleigh condition
//! `∂₂v_ℓ = i√(k²-(ℓ+γ_ν)²) v_ℓ` through a ghost point.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::contour::QuadratureRule;
use crate::linalg::{BlockTridiagonal, PivotBreakdown};
use crate::modes::{GuidedMode, SlabConfig};
use crate::symbols::{dtn_symbol, expm1, PmlProfile};
use crate::synthesis::{relative_change, synthesize_field, FieldGrid, FieldGridSpec};
use crate::{Error, Result, C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopCondition {
    /// Stretched coordinates in `(h₀, h₀+τ)` and `v = 0` on top.
    PmlDirichlet(PmlProfile),
    /// No stretching; discrete Rayleigh condition on the top grid line.
    DiscreteD2N,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationParams {
    /// Fourier modes `-L..=L`.
    pub fourier_l: usize,
    pub n_y: usize,
    /// Height `h₀+τ` of the computational domain.
    pub height: f64,
    pub top: TopCondition,
}

impl DiscretizationParams {
    pub fn new(fourier_l: usize, n_y: usize, height: f64, top: TopCondition) -> Result<Self> {
        if fourier_l < 1 {
            return Err(Error::InvalidConfiguration("Fourier truncation L must be ≥ 1".into()));
        }
        if n_y < 8 {
            return Err(Error::InvalidConfiguration(format!("n_y = {n_y} must be ≥ 8")));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidConfiguration(format!("domain height {height}")));
        }
        if let TopCondition::PmlDirichlet(p) = top {
            if (p.top() - height).abs() > 1e-12 * height {
                return Err(Error::InvalidConfiguration(format!(
                    "PML top h0 + τ = {} does not match domain height {height}",
                    p.top()
                )));
            }
        }
        Ok(Self { fourier_l, n_y, height, top })
    }

    pub fn n_modes(&self) -> usize {
        2 * self.fourier_l + 1
    }

    pub fn ell(&self, index: usize) -> i64 {
        index as i64 - self.fourier_l as i64
    }

    pub fn h_y(&self) -> f64 {
        self.height / self.n_y as f64
    }

    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h_y()
    }

    /// `(a, b)` of the stretched operator `a ∂₂² + b ∂₂` at `x₂`.
    pub fn stretching(&self, x2: f64) -> (C64, C64) {
        match self.top {
            TopCondition::PmlDirichlet(p) => (p.a(x2), p.b(x2)),
            TopCondition::DiscreteD2N => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        }
    }
}

/// `sin²(2ωx₁)` on `(0, π/ω)`, zero on the rest of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineSquaredWindow {
    pub omega: f64,
}

impl SineSquaredWindow {
    pub fn length(&self) -> f64 {
        PI / self.omega
    }

    pub fn value(&self, x1: f64) -> f64 {
        if x1 > 0.0 && x1 < self.length() {
            (2.0 * self.omega * x1).sin().powi(2)
        } else {
            0.0
        }
    }

    /// `(1/2π) ∫₀^{π/ω} sin²(2ωx) e^{-icx} dx` for complex `c`, from
    /// `sin² = (2 - e^{4iωx} - e^{-4iωx})/4`.
    pub fn coefficient(&self, c: C64) -> C64 {
        let x = self.length();
        let four = 4.0 * self.omega;
        let e = |d: C64| -> C64 {
            // ∫₀ˣ e^{idt} dt, removable singularity at d = 0
            let w = I * d * x;
            if w.norm() < 1e-8 {
                x * (1.0 + 0.5 * w)
            } else {
                expm1(w) / (I * d)
            }
        };
        (2.0 * e(-c) - e(four - c) - e(-four - c)) / (8.0 * PI)
    }
}

/// `q^{(1)}_m(s) = (1/2π) ∫₀^{2π} q₀ sin²(2ωx₁) 𝟙_{(0,π/ω)} e^{-i(m+s)x₁} dx₁`.
pub fn fourier_coefficients_q1(m: i64, s: C64, q0: f64, omega: f64) -> C64 {
    q0 * SineSquaredWindow { omega }.coefficient(m as f64 + s)
}

/// Separable perturbation `q = q₀ sin²(2ωx₁) 𝟙_{(0,π/ω)}(x₁) · 𝟙_{(lo,hi)}(x₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub q0: f64,
    pub window: SineSquaredWindow,
    pub x2_lo: f64,
    pub x2_hi: f64,
}

impl Perturbation {
    pub fn new(q0: f64, omega: f64, x2_lo: f64, x2_hi: f64) -> Self {
        Self {
            q0,
            window: SineSquaredWindow { omega },
            x2_lo,
            x2_hi,
        }
    }

    pub fn profile(&self, x2: f64) -> f64 {
        if x2 > self.x2_lo && x2 < self.x2_hi {
            1.0
        } else {
            0.0
        }
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        self.q0 * self.window.value(x1) * self.profile(x2)
    }

    pub fn coefficient(&self, m: i64, s: C64) -> C64 {
        self.q0 * self.window.coefficient(m as f64 + s)
    }
}

/// Source `f(x) = A · sin²(2ωx₁)𝟙_{(0,π/ω)}(x₁) · e^{ic x₁} · 𝟙_{(lo,hi)}(x₂) sin(z x₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableSource {
    pub amplitude: f64,
    pub window: SineSquaredWindow,
    pub carrier: f64,
    pub x2_lo: f64,
    pub x2_hi: f64,
    pub x2_wavenumber: f64,
}

impl SeparableSource {
    /// `f = k² q φ`, the source of the field scattered from incident mode `φ`.
    pub fn incident(perturbation: &Perturbation, incident: &GuidedMode) -> Self {
        let k = incident.config.k;
        Self {
            amplitude: k * k * perturbation.q0,
            window: perturbation.window,
            carrier: incident.signed_omega(),
            x2_lo: perturbation.x2_lo,
            x2_hi: perturbation.x2_hi.min(crate::modes::LAYER_TOP),
            x2_wavenumber: incident.z,
        }
    }

    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            window: SineSquaredWindow { omega: 1.0 },
            carrier: 0.0,
            x2_lo: 0.0,
            x2_hi: 0.0,
            x2_wavenumber: 0.0,
        }
    }

    pub fn x2_profile(&self, x2: f64) -> f64 {
        if x2 > self.x2_lo && x2 < self.x2_hi {
            (self.x2_wavenumber * x2).sin()
        } else {
            0.0
        }
    }

    pub fn value(&self, x1: f64, x2: f64) -> C64 {
        self.amplitude * self.window.value(x1) * self.x2_profile(x2) * C64::from_polar(1.0, self.carrier * x1)
    }

    /// Fourier coefficient `f_ℓ(x₂, α)` of `f e^{-iαx₁}` (plain series, no `1/√2π`).
    pub fn coefficient(&self, ell: i64, alpha: C64, x2: f64) -> C64 {
        if self.amplitude == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let profile = self.x2_profile(x2);
        if profile == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.amplitude * profile * self.window.coefficient(ell as f64 + alpha - self.carrier)
    }
}

/// Fourier coefficients `n_m(x₂)` of the refractive index on the vertical
/// grid, `m = -order..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTable {
    order: usize,
    values: Vec<C64>,
}

impl IndexTable {
    /// Index independent of `x₁`: only `n₀` is nonzero.
    pub fn from_profile<F: Fn(f64) -> f64>(params: &DiscretizationParams, n: F) -> Self {
        let values = (0..=params.n_y).map(|j| C64::new(n(params.x2(j)), 0.0)).collect();
        Self { order: 0, values }
    }

    pub fn slab(params: &DiscretizationParams, slab: &SlabConfig) -> Self {
        Self::from_profile(params, |x2| slab.index_at(x2))
    }

    /// General table; `coefficients(j, m)` gives `n_m(j h_y)` for `|m| ≤ order`.
    pub fn from_fn<F: Fn(usize, i64) -> C64>(params: &DiscretizationParams, order: usize, coefficients: F) -> Self {
        let width = 2 * order + 1;
        let mut values = Vec::with_capacity((params.n_y + 1) * width);
        for j in 0..=params.n_y {
            for m in 0..width {
                values.push(coefficients(j, m as i64 - order as i64));
            }
        }
        Self { order, values }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, j: usize, m: i64) -> C64 {
        if m.unsigned_abs() as usize > self.order {
            return C64::new(0.0, 0.0);
        }
        self.values[j * (2 * self.order + 1) + (m + self.order as i64) as usize]
    }
}

/// Everything the cell problems need besides the discretization.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub k: f64,
    pub index: IndexTable,
    pub perturbation: Option<Perturbation>,
    pub source: SeparableSource,
    pub rule: QuadratureRule,
}

/// Solution tensor `v[ℓ][ν][j]`, stored node-major as `[ν][j][ℓ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub n_modes: usize,
    pub n_nodes: usize,
    pub n_y: usize,
    data: Vec<C64>,
}

impl CellField {
    pub fn zeros(n_modes: usize, n_nodes: usize, n_y: usize) -> Self {
        Self {
            n_modes,
            n_nodes,
            n_y,
            data: vec![C64::new(0.0, 0.0); n_modes * n_nodes * (n_y + 1)],
        }
    }

    fn offset(&self, ell_index: usize, nu: usize, j: usize) -> usize {
        (nu * (self.n_y + 1) + j) * self.n_modes + ell_index
    }

    pub fn get(&self, ell_index: usize, nu: usize, j: usize) -> C64 {
        self.data[self.offset(ell_index, nu, j)]
    }

    pub fn set(&mut self, ell_index: usize, nu: usize, j: usize, value: C64) {
        let o = self.offset(ell_index, nu, j);
        self.data[o] = value;
    }

    /// Values at node `ν` as `[j][ℓ]`, `j = 0..=n_y`.
    pub fn node(&self, nu: usize) -> &[C64] {
        let len = (self.n_y + 1) * self.n_modes;
        &self.data[nu * len..(nu + 1) * len]
    }

    pub fn node_mut(&mut self, nu: usize) -> &mut [C64] {
        let len = (self.n_y + 1) * self.n_modes;
        &mut self.data[nu * len..(nu + 1) * len]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Precomputed source table and perturbation coupling matrix.
#[derive(Debug, Clone)]
pub struct FourierTables {
    pub k: f64,
    pub n_modes: usize,
    pub n_nodes: usize,
    pub n_y: usize,
    /// `f_ℓ(j h_y, γ_ν)` as `[ν][j][ℓ]`.
    pub source: Vec<C64>,
    /// `q^{(2)}(j h_y)`.
    pub q2: Vec<f64>,
    /// `Q_{(ℓ,ν),(m,μ)} = q^{(1)}_{ℓ-m}(γ_ν-γ_μ) w_μ`, row `ν·(2L+1)+ℓ`,
    /// column `μ·(2L+1)+m`; `None` without perturbation.
    pub coupling: Option<Vec<C64>>,
}

impl FourierTables {
    pub fn new(params: &DiscretizationParams, data: &ProblemData) -> Self {
        let nm = params.n_modes();
        let nn = data.rule.len();
        let ny = params.n_y;
        let mut source = vec![C64::new(0.0, 0.0); nn * (ny + 1) * nm];
        if data.source.amplitude != 0.0 {
            source
                .par_chunks_mut((ny + 1) * nm)
                .enumerate()
                .for_each(|(nu, slab)| {
                    let alpha = data.rule.nodes[nu];
                    for j in 0..=ny {
                        let x2 = params.x2(j);
                        for l in 0..nm {
                            slab[j * nm + l] = data.source.coefficient(params.ell(l), alpha, x2);
                        }
                    }
                });
        }
        let q2 = (0..=ny)
            .map(|j| data.perturbation.map_or(0.0, |p| p.profile(params.x2(j))))
            .collect();
        let coupling = data.perturbation.filter(|p| p.q0 != 0.0).map(|p| {
            let dim = nn * nm;
            let mut q = vec![C64::new(0.0, 0.0); dim * dim];
            q.par_chunks_mut(dim).enumerate().for_each(|(row, out)| {
                let (nu, l) = (row / nm, row % nm);
                for mu in 0..nn {
                    let s = data.rule.nodes[nu] - data.rule.nodes[mu];
                    let w = data.rule.weights[mu];
                    for m in 0..nm {
                        out[mu * nm + m] = p.coefficient(params.ell(l) - params.ell(m), s) * w;
                    }
                }
            });
            q
        });
        Self {
            k: data.k,
            n_modes: nm,
            n_nodes: nn,
            n_y: ny,
            source,
            q2,
            coupling,
        }
    }

    pub fn source_at(&self, nu: usize) -> &[C64] {
        let len = (self.n_y + 1) * self.n_modes;
        &self.source[nu * len..(nu + 1) * len]
    }
}

/// `k² q^{(2)}(j h_y) Σ_{μ,m} Q_{(ℓ,ν),(m,μ)} v[m][μ][j]`, laid out like a
/// [`CellField`].
pub fn coupling_rhs(v_prev: &CellField, tables: &FourierTables) -> CellField {
    let nm = tables.n_modes;
    let nn = tables.n_nodes;
    let ny = tables.n_y;
    let mut out = CellField::zeros(nm, nn, ny);
    let Some(q) = tables.coupling.as_ref() else {
        return out;
    };
    let k2 = tables.k * tables.k;
    let dim = nn * nm;
    let rows: Vec<usize> = (0..=ny).filter(|&j| tables.q2[j] != 0.0).collect();
    // x_j[(μ, m)] = v[m][μ][j]
    let gathered: Vec<Vec<C64>> = rows
        .iter()
        .map(|&j| {
            let mut x = Vec::with_capacity(dim);
            for mu in 0..nn {
                x.extend_from_slice(&v_prev.node(mu)[j * nm..(j + 1) * nm]);
            }
            x
        })
        .collect();
    out.as_mut_slice()
        .par_chunks_mut((ny + 1) * nm)
        .enumerate()
        .for_each(|(nu, slab)| {
            for (x, &j) in gathered.iter().zip(&rows) {
                let scale = k2 * tables.q2[j];
                for l in 0..nm {
                    let row = &q[(nu * nm + l) * dim..(nu * nm + l + 1) * dim];
                    let acc: C64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                    slab[j * nm + l] = scale * acc;
                }
            }
        });
    out
}

/// Scalar tridiagonal system `lower_i x_{i-1} + diag_i x_i + upper_i x_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
}

impl Tridiagonal {
    /// Thomas algorithm, in place.
    pub fn solve(&self, rhs: &mut [C64]) -> std::result::Result<(), PivotBreakdown> {
        let n = self.diag.len();
        let mut c = vec![C64::new(0.0, 0.0); n];
        let scale = self.diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i] * c[i - 1];
                rhs[i] = rhs[i] - self.lower[i] * rhs[i - 1];
            }
            if !(pivot.norm() > 1e-14 * scale) {
                return Err(PivotBreakdown { index: i });
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { C64::new(0.0, 0.0) };
            rhs[i] /= pivot;
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - c[i] * rhs[i + 1];
        }
        Ok(())
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum CellMatrix {
    /// Index with `x₁`-dependence: dense `(2L+1)²` blocks.
    Coupled(BlockTridiagonal),
    /// `x₁`-independent index: one scalar tridiagonal system per Fourier mode.
    Decoupled(Vec<Tridiagonal>),
}

/// Discrete cell problem at one contour node, interior unknowns
/// `j = 1..n_y-1` ordered `[j][ℓ]`.
#[derive(Debug, Clone)]
pub struct CellSystem {
    pub node: usize,
    pub n_modes: usize,
    pub matrix: CellMatrix,
    pub rhs: Vec<C64>,
}

impl CellSystem {
    /// The same system written with dense blocks.
    pub fn to_block(&self) -> BlockTridiagonal {
        match &self.matrix {
            CellMatrix::Coupled(b) => b.clone(),
            CellMatrix::Decoupled(modes) => {
                let n = modes[0].diag.len();
                let mut b = BlockTridiagonal::zeros(self.n_modes, n);
                for (l, t) in modes.iter().enumerate() {
                    for i in 0..n {
                        b.lower[i][(l, l)] = t.lower[i];
                        b.diag[i][(l, l)] = t.diag[i];
                        b.upper[i][(l, l)] = t.upper[i];
                    }
                }
                b
            }
        }
    }

    /// `A x` for interior values ordered `[j][ℓ]`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match &self.matrix {
            CellMatrix::Coupled(b) => b.apply(x),
            CellMatrix::Decoupled(modes) => {
                let nm = self.n_modes;
                let mut out = vec![C64::new(0.0, 0.0); x.len()];
                for (l, t) in modes.iter().enumerate() {
                    let xs: Vec<C64> = x.iter().skip(l).step_by(nm).copied().collect();
                    for (i, y) in t.apply(&xs).into_iter().enumerate() {
                        out[i * nm + l] = y;
                    }
                }
                out
            }
        }
    }
}

/// Builds the system at node `ν`. `rhs_coupling` is the node's `[j][ℓ]` slab
/// of [`coupling_rhs`] (`j = 0..=n_y`) or `None` for the uncoupled problem.
pub fn assemble_cell_system(
    nu: usize,
    params: &DiscretizationParams,
    data: &ProblemData,
    tables: &FourierTables,
    rhs_coupling: Option<&[C64]>,
) -> Result<CellSystem> {
    let nm = params.n_modes();
    let n = params.n_y - 1;
    let h = params.h_y();
    let alpha = data.rule.nodes[nu];
    let k2 = data.k * data.k;

    let source = tables.source_at(nu);
    let mut rhs = Vec::with_capacity(n * nm);
    for j in 1..params.n_y {
        for l in 0..nm {
            let mut r = -source[j * nm + l];
            if let Some(c) = rhs_coupling {
                r -= c[j * nm + l];
            }
            rhs.push(r);
        }
    }

    // ghost elimination for the Rayleigh row: v_{n_y} = v_{n_y-2} + 2h β_ℓ v_{n_y-1}
    let betas: Option<Vec<C64>> = match params.top {
        TopCondition::DiscreteD2N => Some(
            (0..nm)
                .map(|l| dtn_symbol(params.ell(l), alpha, data.k))
                .collect::<Result<_>>()?,
        ),
        TopCondition::PmlDirichlet(_) => None,
    };

    let stencil = |j: usize, l: usize| -> (C64, C64, C64) {
        let (a, b) = params.stretching(params.x2(j));
        let lower = a / (h * h) - b / (2.0 * h);
        let upper = a / (h * h) + b / (2.0 * h);
        let w = params.ell(l) as f64 + alpha;
        let mut diag = -2.0 * a / (h * h) - w * w + k2 * data.index.get(j, 0);
        let (mut lower, mut upper) = (lower, upper);
        if j == params.n_y - 1 {
            if let Some(betas) = &betas {
                lower += upper;
                diag += upper * 2.0 * h * betas[l];
            }
            upper = C64::new(0.0, 0.0);
        }
        (lower, diag, upper)
    };

    let matrix = if data.index.order() == 0 {
        let modes = (0..nm)
            .map(|l| {
                let mut t = Tridiagonal {
                    lower: Vec::with_capacity(n),
                    diag: Vec::with_capacity(n),
                    upper: Vec::with_capacity(n),
                };
                for j in 1..params.n_y {
                    let (lo, d, up) = stencil(j, l);
                    t.lower.push(lo);
                    t.diag.push(d);
                    t.upper.push(up);
                }
                t
            })
            .collect();
        CellMatrix::Decoupled(modes)
    } else {
        let mut b = BlockTridiagonal::zeros(nm, n);
        for j in 1..params.n_y {
            let i = j - 1;
            for l in 0..nm {
                let (lo, d, up) = stencil(j, l);
                b.lower[i][(l, l)] = lo;
                b.diag[i][(l, l)] = d;
                b.upper[i][(l, l)] = up;
                for m in 0..nm {
                    if m != l {
                        let order = params.ell(l) - params.ell(m);
                        b.diag[i][(l, m)] = k2 * data.index.get(j, order);
                    }
                }
            }
        }
        CellMatrix::Coupled(b)
    };
    Ok(CellSystem { node: nu, n_modes: nm, matrix, rhs })
}

/// Interior solution `[j][ℓ]`, `j = 1..n_y-1`.
pub fn solve_cell_system(system: &CellSystem) -> Result<Vec<C64>> {
    let fail = |_| Error::SolverFailure { node: system.node };
    let mut x = system.rhs.clone();
    match &system.matrix {
        CellMatrix::Coupled(b) => b.solve(&mut x).map_err(fail)?,
        CellMatrix::Decoupled(modes) => {
            let nm = system.n_modes;
            for (l, t) in modes.iter().enumerate() {
                let mut col: Vec<C64> = x.iter().skip(l).step_by(nm).copied().collect();
                t.solve(&mut col).map_err(fail)?;
                for (i, v) in col.into_iter().enumerate() {
                    x[i * nm + l] = v;
                }
            }
        }
    }
    Ok(x)
}

/// Solves every node with the given coupling and returns the full field,
/// including the boundary rows `j = 0` (and `j = n_y`).
pub fn solve_all_nodes(
    params: &DiscretizationParams,
    data: &ProblemData,
    tables: &FourierTables,
    coupling: Option<&CellField>,
) -> Result<CellField> {
    let nm = params.n_modes();
    let nn = data.rule.len();
    let ny = params.n_y;
    let mut field = CellField::zeros(nm, nn, ny);
    let betas_needed = matches!(params.top, TopCondition::DiscreteD2N);
    field
        .as_mut_slice()
        .par_chunks_mut((ny + 1) * nm)
        .enumerate()
        .try_for_each(|(nu, slab)| -> Result<()> {
            let system = assemble_cell_system(nu, params, data, tables, coupling.map(|c| c.node(nu)))?;
            let interior = solve_cell_system(&system)?;
            slab[nm..ny * nm].copy_from_slice(&interior);
            if betas_needed {
                // reconstruct the ghost value as the top-row value
                for l in 0..nm {
                    let beta = dtn_symbol(params.ell(l), data.rule.nodes[nu], data.k)?;
                    let below = slab[(ny - 2) * nm + l];
                    let top = slab[(ny - 1) * nm + l];
                    slab[ny * nm + l] = below + 2.0 * params.h_y() * beta * top;
                }
            }
            Ok(())
        })?;
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub t_max: usize,
    /// Stop once `e_t < tol`; `0` runs all `t_max` iterations.
    pub tol: f64,
    /// Keep every `CellField` iterate (memory heavy at full resolution).
    pub keep_cells: bool,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            t_max: 9,
            tol: 0.0,
            keep_cells: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationResult {
    /// `u^{(1)}, u^{(2)}, …` on the synthesis grid.
    pub fields: Vec<FieldGrid>,
    /// `e_t = ‖u^{(t+1)} - u^{(t)}‖∞ / ‖u^{(t+1)}‖∞`, `t = 1, 2, …`.
    pub errors: Vec<f64>,
    /// All iterates when requested, otherwise only the last one.
    pub cells: Vec<CellField>,
}

/// Born series `v^{(0)} = 0`, `v^{(t+1)} = solve(f + coupling(v^{(t)}))`.
pub fn fixpoint_iterate(
    params: &DiscretizationParams,
    data: &ProblemData,
    grid: &FieldGridSpec,
    options: IterationOptions,
) -> Result<IterationResult> {
    if options.t_max < 1 {
        return Err(Error::InvalidArgument("t_max must be ≥ 1".into()));
    }
    let tables = FourierTables::new(params, data);
    let mut fields: Vec<FieldGrid> = Vec::new();
    let mut errors: Vec<f64> = Vec::new();
    let mut cells: Vec<CellField> = Vec::new();
    let mut prev: Option<CellField> = None;
    for _ in 0..options.t_max {
        let coupling = match (&prev, tables.coupling.is_some()) {
            (Some(v), true) => Some(coupling_rhs(v, &tables)),
            _ => None,
        };
        let v = solve_all_nodes(params, data, &tables, coupling.as_ref())?;
        let u = synthesize_field(&v, &data.rule, params, grid)?;
        if let Some(last) = fields.last() {
            let e = relative_change(&u, last)?;
            errors.push(e);
        }
        fields.push(u);
        if options.keep_cells {
            cells.push(v.clone());
        }
        prev = Some(v);

        let n = errors.len();
        if n >= 4 && errors[n - 4] < errors[n - 3] && errors[n - 3] < errors[n - 2] && errors[n - 2] < errors[n - 1] {
            return Err(Error::NonContraction { errors });
        }
        if n > 0 && errors[n - 1] < options.tol {
            break;
        }
        if tables.coupling.is_none() && n > 0 {
            // without perturbation every further iterate repeats the first
            break;
        }
    }
    if !options.keep_cells {
        cells.extend(prev);
    }
    Ok(IterationResult { fields, errors, cells })
}
