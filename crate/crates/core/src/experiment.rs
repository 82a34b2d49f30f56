//! Scattering of the right-going slab mode by a local perturbation, set up
//! from physical parameters.

use std::f64::consts::PI;

use crate::cellsolver::{
    fixpoint_iterate, DiscretizationParams, IndexTable, IterationOptions, IterationResult, Perturbation, ProblemData,
    SeparableSource, TopCondition,
};
use crate::contour::{Contour, QuadratureRule};
use crate::modes::{reduce_to_cell, Direction, GuidedMode, SlabConfig};
use crate::symbols::PmlProfile;
use crate::synthesis::FieldGridSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopKind {
    Rayleigh,
    Pml { rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabExperiment {
    pub k: f64,
    pub omega: f64,
    pub h0: f64,
    pub tau: f64,
    pub pml_m: u32,
    pub n_y: usize,
    pub fourier_l: usize,
    /// Nodes on `Γ`, `M+1`.
    pub quad_points: usize,
    pub bump_eps: f64,
    pub bump_delta: f64,
    pub bump_p: u32,
    /// `None` selects `n/2`.
    pub q0: Option<f64>,
    pub q_x2: (f64, f64),
    pub x1_range: (f64, f64),
    pub x1_step: f64,
    pub x2_max: f64,
    pub t_max: usize,
    pub tol: f64,
    pub keep_cells: bool,
}

impl Default for SlabExperiment {
    fn default() -> Self {
        Self {
            k: 0.8,
            omega: 1.4,
            h0: 2.5,
            tau: 1.5,
            pml_m: 3,
            n_y: 512,
            fourier_l: 7,
            quad_points: 101,
            bump_eps: 0.1,
            bump_delta: 0.1,
            bump_p: 3,
            q0: None,
            q_x2: (0.2, 0.7),
            x1_range: (-4.0 * PI, 6.0 * PI),
            x1_step: 0.05,
            x2_max: 4.0,
            t_max: 9,
            tol: 0.0,
            keep_cells: false,
        }
    }
}

impl SlabExperiment {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfiguration(m));
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k = {} must be positive", self.k));
        }
        let twice = 2.0 * self.k;
        if (twice - twice.round()).abs() < 1e-12 {
            return bad(format!("k = {} lies in ½ℕ", self.k));
        }
        if !(self.omega > self.k) {
            return bad(format!("ω = {} must exceed k = {}", self.omega, self.k));
        }
        if !(self.h0 > crate::modes::LAYER_TOP && self.tau > 0.0) {
            return bad(format!("need h0 > 1 and τ > 0 (h0 = {}, τ = {})", self.h0, self.tau));
        }
        if !(self.x1_step > 0.0) || self.x1_range.1 < self.x1_range.0 {
            return bad("bad x1 grid".into());
        }
        if !(self.q_x2.0 >= 0.0 && self.q_x2.0 < self.q_x2.1) {
            return bad(format!("bad perturbation support {:?}", self.q_x2));
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.h0 + self.tau
    }

    pub fn slab(&self) -> Result<SlabConfig> {
        self.validate()?;
        SlabConfig::from_frequency(self.k, self.omega)
    }

    /// `(α̂, κ)`: reduced mode wavenumber and cut-off value.
    pub fn reduced_values(&self) -> (f64, f64) {
        (reduce_to_cell(self.omega).1, reduce_to_cell(self.k).1)
    }

    pub fn contour(&self) -> Result<Contour> {
        let (alpha_hat, kappa) = self.reduced_values();
        Contour::waveguide(alpha_hat, kappa, self.bump_eps, self.bump_delta, self.bump_p)
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        if self.quad_points < 3 {
            return Err(Error::InvalidConfiguration(format!("need ≥ 3 contour points, got {}", self.quad_points)));
        }
        self.contour()?.quadrature(self.quad_points - 1)
    }

    pub fn pml(&self, rho: f64) -> Result<PmlProfile> {
        PmlProfile::new(rho, self.tau, self.pml_m, self.h0)
    }

    pub fn params(&self, top: TopKind) -> Result<DiscretizationParams> {
        let top = match top {
            TopKind::Rayleigh => TopCondition::DiscreteD2N,
            TopKind::Pml { rho } => TopCondition::PmlDirichlet(self.pml(rho)?),
        };
        DiscretizationParams::new(self.fourier_l, self.n_y, self.height(), top)
    }

    pub fn q0_value(&self) -> Result<f64> {
        Ok(match self.q0 {
            Some(q) => q,
            None => self.slab()?.n_index / 2.0,
        })
    }

    pub fn incident(&self) -> Result<GuidedMode> {
        GuidedMode::new(self.slab()?, Direction::Right)
    }

    pub fn perturbation(&self) -> Result<Perturbation> {
        Ok(Perturbation::new(self.q0_value()?, self.omega, self.q_x2.0, self.q_x2.1))
    }

    pub fn problem(&self, params: &DiscretizationParams) -> Result<ProblemData> {
        let slab = self.slab()?;
        let q = self.perturbation()?;
        let incident = self.incident()?;
        let rule = self.rule()?;
        Ok(ProblemData {
            k: self.k,
            index: IndexTable::slab(params, &slab),
            perturbation: (q.q0 != 0.0).then_some(q),
            source: if q.q0 != 0.0 {
                SeparableSource::incident(&q, &incident)
            } else {
                SeparableSource::zero()
            },
            rule,
        })
    }

    pub fn grid(&self, params: &DiscretizationParams) -> FieldGridSpec {
        FieldGridSpec::on_solver_grid(params, self.x1_range, self.x1_step, self.x2_max)
    }

    pub fn run(&self, top: TopKind) -> Result<IterationResult> {
        let params = self.params(top)?;
        let data = self.problem(&params)?;
        let grid = self.grid(&params);
        fixpoint_iterate(
            &params,
            &data,
            &grid,
            IterationOptions {
                t_max: self.t_max,
                tol: self.tol,
                keep_cells: self.keep_cells,
            },
        )
    }
}
