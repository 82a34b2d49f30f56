//! Reduced-resolution runs of the slab scattering problem.

use std::f64::consts::PI;

use owg_core::cellsolver::{assemble_cell_system, solve_cell_system, FourierTables, SeparableSource};
use owg_core::experiment::{SlabExperiment, TopKind};
use owg_core::modes::{excitation_coefficient, mode_eval, GuidedMode};
use owg_core::synthesis::{extract_mode_amplitude, relative_inf_error, synthesize_field, FieldGridSpec, Region};
use owg_core::C64;

fn coarse() -> SlabExperiment {
    SlabExperiment {
        n_y: 128,
        fourier_l: 4,
        quad_points: 61,
        x1_step: 0.1,
        t_max: 4,
        ..Default::default()
    }
}

#[test]
fn halving_q0_lowers_every_relative_change() {
    let base = coarse();
    let full = base.run(TopKind::Rayleigh).unwrap().errors;
    let q0 = base.q0_value().unwrap();
    let half = SlabExperiment { q0: Some(q0 / 2.0), ..base }.run(TopKind::Rayleigh).unwrap().errors;
    assert_eq!(full.len(), half.len());
    for (a, b) in full.iter().zip(&half) {
        assert!(b < a, "{full:?} vs {half:?}");
    }
}

#[test]
fn zero_q0_converges_immediately() {
    let e = SlabExperiment { q0: Some(0.0), ..coarse() };
    let r = e.run(TopKind::Rayleigh).unwrap();
    assert_eq!(r.errors, vec![0.0]);
}

#[test]
fn unperturbed_modes_stay_decoupled() {
    // source only in mode ℓ = 0 ⇒ every other Fourier slice is zero
    let e = coarse();
    let params = e.params(TopKind::Rayleigh).unwrap();
    let mut data = e.problem(&params).unwrap();
    data.perturbation = None;
    data.source = SeparableSource::zero();
    let tables = FourierTables::new(&params, &data);
    let nm = params.n_modes();
    let mut forcing = vec![C64::new(0.0, 0.0); (params.n_y + 1) * nm];
    for j in 0..=params.n_y {
        forcing[j * nm + params.fourier_l] = C64::new(1.0, -(params.x2(j)));
    }
    for nu in [0, 7, 30] {
        let system = assemble_cell_system(nu, &params, &data, &tables, Some(&forcing)).unwrap();
        let x = solve_cell_system(&system).unwrap();
        for (i, v) in x.iter().enumerate() {
            if i % nm != params.fourier_l {
                assert!(v.norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn born_far_field_matches_excitation_coefficient() {
    let e = SlabExperiment { t_max: 1, ..coarse() };
    let born = &e.run(TopKind::Rayleigh).unwrap().fields[0];
    let right = e.incident().unwrap();
    let source = SeparableSource::incident(&e.perturbation().unwrap(), &right);
    let normalized = right.normalized();
    // u ~ a φ̂ = (a c) φ on the far right
    let predicted = excitation_coefficient(&normalized, &source) * normalized.norm_const;
    let measured = extract_mode_amplitude(born, &right, (4.0 * PI, 6.0 * PI), false).unwrap();
    assert!((measured - predicted).norm() < 0.03 * predicted.norm(), "{measured} vs {predicted}");

    let shifted = extract_mode_amplitude(born, &right, (2.0 * PI, 4.0 * PI), false).unwrap();
    assert!((shifted - measured).norm() < 0.02 * measured.norm());
}

#[test]
fn field_on_grid_satisfies_helmholtz_away_from_sources() {
    // 5-point residual in a source-free box above the slab; x₁-differencing
    // error is O(h₁²) since the x₂ stencil is solved exactly.
    let e = SlabExperiment { t_max: 1, ..coarse() };
    let params = e.params(TopKind::Rayleigh).unwrap();
    let data = e.problem(&params).unwrap();
    let tables = FourierTables::new(&params, &data);
    let v = owg_core::cellsolver::solve_all_nodes(&params, &data, &tables, None).unwrap();
    let h = params.h_y();
    let k2 = e.k * e.k;
    let residual = |h1: f64| {
        let x1: Vec<f64> = (0..=40).map(|i| -9.0 + i as f64 * h1).collect();
        let rows: Vec<usize> = (48..=96).collect(); // x₂ ∈ [1.5, 3]
        let x2: Vec<f64> = rows.iter().map(|&j| params.x2(j)).collect();
        let u = synthesize_field(&v, &data.rule, &params, &FieldGridSpec { x1: x1.clone(), x2 }).unwrap();
        let mut worst: f64 = 0.0;
        for i2 in 1..rows.len() - 1 {
            for i1 in 1..x1.len() - 1 {
                let c = u.get(i1, i2);
                let lap = (u.get(i1 + 1, i2) + u.get(i1 - 1, i2) - 2.0 * c) / (h1 * h1)
                    + (u.get(i1, i2 + 1) + u.get(i1, i2 - 1) - 2.0 * c) / (h * h);
                worst = worst.max((lap + k2 * c).norm());
            }
        }
        worst / u.max_abs()
    };
    let (r1, r2) = (residual(0.04), residual(0.02));
    let ratio = r1 / r2;
    assert!((3.6..=4.4).contains(&ratio), "{r1} {r2}");
}

#[test]
fn pml_and_rayleigh_agree_for_strong_absorption() {
    let e = coarse();
    let mut near = e.clone();
    near.x2_max = 0.9 * e.h0;
    let d2n = near.run(TopKind::Rayleigh).unwrap();
    let pml = near.run(TopKind::Pml { rho: 20.0 }).unwrap();
    let err = relative_inf_error(&pml.fields[3], &d2n.fields[3], Region::everything()).unwrap();
    assert!(err <= 1e-3, "{err}");
    // and the relative changes track each other
    for (a, b) in pml.errors.iter().zip(&d2n.errors) {
        assert!((a - b).abs() <= 0.1 * b, "{:?} vs {:?}", pml.errors, d2n.errors);
    }
}

#[test]
fn incident_mode_is_a_homogeneous_solution() {
    // discrete Helmholtz residual of φ⁺ itself, a sanity check on the mode
    let right: GuidedMode = coarse().incident().unwrap();
    let k2 = 0.64;
    let n = right.config.n_index;
    let h = 1e-3;
    for (x1, x2) in [(0.3, 0.5), (2.0, 1.7)] {
        let u = |a: f64, b: f64| mode_eval(&right, a, b, false);
        let lap = (u(x1 + h, x2) + u(x1 - h, x2) + u(x1, x2 + h) + u(x1, x2 - h) - 4.0 * u(x1, x2)) / (h * h);
        let idx = if x2 < 1.0 { n } else { 1.0 };
        assert!((lap + k2 * idx * u(x1, x2)).norm() < 1e-4);
    }
}
