//! Command layer of the `owg` binary: configuration, the four experiment
//! commands, CSV output and run manifests.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use owg_core::contour::{Contour, ContourFeature, Indent};
use owg_core::experiment::TopKind;
use owg_core::modes::{dispersion_residual, GuidedMode};
use owg_core::synthesis::{extract_mode_amplitude, pml_sweep, FieldGrid, PmlSweepResult};
use owg_core::C64;

pub mod config;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(owg_core::Error),
    #[error("self-test failed: {0}")]
    SelfTest(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<owg_core::Error> for CliError {
    fn from(e: owg_core::Error) -> Self {
        match e {
            owg_core::Error::InvalidConfiguration(m) => CliError::Config(m),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::SelfTest(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects output files and writes them with a checksum manifest.
pub struct Artifacts {
    dir: Option<PathBuf>,
    written: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        if let Some(d) = &self.dir {
            fs::write(d.join(name), contents)?;
            self.written.push((name.to_string(), hex::encode(Sha256::digest(contents.as_bytes()))));
        }
        Ok(())
    }

    pub fn finish(self, command: &str, cfg: &RunConfig) -> Result<Vec<String>, CliError> {
        let Some(d) = &self.dir else {
            return Ok(Vec::new());
        };
        let mut m = String::new();
        writeln!(m, "command = {command}").unwrap();
        writeln!(m, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(m, "\n[config]").unwrap();
        for (k, v) in cfg.resolved() {
            writeln!(m, "{k} = {v}").unwrap();
        }
        writeln!(m, "\n[artifacts]").unwrap();
        for (name, sum) in &self.written {
            writeln!(m, "{sum}  {name}").unwrap();
        }
        fs::write(d.join("manifest"), m)?;
        Ok(self.written.into_iter().map(|(n, _)| n).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModesReport {
    pub n_index: f64,
    pub z: f64,
    pub decay: f64,
    pub alpha_hat: f64,
    pub kappa: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub norm_const: f64,
    pub residual: f64,
}

impl ModesReport {
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("n", self.n_index),
            ("z", self.z),
            ("d", self.decay),
            ("alpha_hat", self.alpha_hat),
            ("kappa", self.kappa),
            ("lambda_plus", self.lambda_plus),
            ("lambda_minus", self.lambda_minus),
            ("norm_const", self.norm_const),
            ("dispersion_residual", self.residual),
        ]
    }
}

pub fn cmd_modes(cfg: &RunConfig, out: Option<&Path>) -> Result<ModesReport, CliError> {
    let e = &cfg.experiment;
    let slab = e.slab()?;
    let (right, left) = GuidedMode::pair(slab)?;
    let (alpha_hat, kappa) = e.reduced_values();
    let report = ModesReport {
        n_index: slab.n_index,
        z: right.z,
        decay: right.decay,
        alpha_hat,
        kappa,
        lambda_plus: right.lambda,
        lambda_minus: left.lambda,
        norm_const: right.normalized().norm_const,
        residual: dispersion_residual(slab.k, slab.n_index, slab.omega)?,
    };
    let mut csv = String::from("quantity,value\n");
    for (name, v) in report.rows() {
        writeln!(csv, "{name},{}", num(v)).unwrap();
    }
    let mut art = Artifacts::new(out)?;
    art.write("modes.csv", &csv)?;
    art.finish("modes", cfg)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTest {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl SelfTest {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<32} deviation {:.3e} (tol {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

/// Quadrature self-tests on the configured contour. Returns the results even
/// when some fail; the caller maps failures to the exit code.
pub fn cmd_contour_check(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<SelfTest>, CliError> {
    let e = &cfg.experiment;
    let rule = e.rule()?;
    let mut tests = vec![SelfTest {
        name: "sum of weights".into(),
        deviation: (rule.weight_sum() - 1.0).norm(),
        tolerance: 1e-12,
    }];
    for p in 0..=4 {
        let exact = (0.5f64.powi(p + 1) - (-0.5f64).powi(p + 1)) / (p as f64 + 1.0);
        tests.push(SelfTest {
            name: format!("moment alpha^{p}"),
            deviation: (rule.integrate(|a| a.powi(p)) - exact).norm(),
            tolerance: 1e-8,
        });
    }
    // a single indent at 0, so the principal value part vanishes
    for (indent, sign) in [(Indent::Below, 1.0), (Indent::Above, -1.0)] {
        let single = Contour::new(vec![ContourFeature::bump(0.0, indent, e.bump_delta, e.bump_eps, e.bump_p)])?;
        let v = single.quadrature(rule.m)?.integrate(|a| 1.0 / a);
        tests.push(SelfTest {
            name: format!("half residue {indent:?}"),
            deviation: (v - C64::new(0.0, sign * PI)).norm(),
            tolerance: 1e-4,
        });
    }

    let mut csv = String::from("t,re_alpha,im_alpha,re_w,im_w\n");
    for (mu, (a, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let t = mu as f64 / rule.m as f64;
        writeln!(csv, "{},{},{},{},{}", num(t), num(a.re), num(a.im), num(w.re), num(w.im)).unwrap();
    }
    let mut art = Artifacts::new(out)?;
    art.write("contour.csv", &csv)?;
    let mut report = String::new();
    for t in &tests {
        writeln!(report, "{}", t.line()).unwrap();
    }
    art.write("contour_selftest.txt", &report)?;
    art.finish("contour-check", cfg)?;
    Ok(tests)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitudes {
    pub right: C64,
    pub left: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub errors: Vec<f64>,
    pub iterations: usize,
    /// Far-field content of each iterate; `None` when the grid does not
    /// reach one period beyond both ends.
    pub amplitudes: Option<Vec<ModeAmplitudes>>,
}

impl SolveReport {
    /// `e_t` in a two-row table.
    pub fn table(&self) -> String {
        let mut head = String::from("t:  ");
        let mut row = String::from("e_t:");
        for (i, e) in self.errors.iter().enumerate() {
            write!(head, " {:>8}", i + 1).unwrap();
            write!(row, " {e:>8.4}").unwrap();
        }
        format!("{head}\n{row}")
    }
}

fn field_csv(u: &FieldGrid, stride: usize) -> String {
    let mut s = String::from("x1,x2,re_u,im_u\n");
    for i2 in (0..u.x2.len()).step_by(stride) {
        for i1 in (0..u.x1.len()).step_by(stride) {
            let v = u.get(i1, i2);
            writeln!(s, "{},{},{},{}", num(u.x1[i1]), num(u.x2[i2]), num(v.re), num(v.im)).unwrap();
        }
    }
    s
}

pub fn cmd_solve(cfg: &RunConfig, out: Option<&Path>) -> Result<SolveReport, CliError> {
    let e = &cfg.experiment;
    let result = e.run(cfg.top)?;
    let (x1_lo, x1_hi) = e.x1_range;
    let amplitudes = if x1_hi - x1_lo >= 4.0 * PI && e.x2_max > 0.5 {
        let (right, left) = GuidedMode::pair(e.slab()?)?;
        let mut a = Vec::with_capacity(result.fields.len());
        for u in &result.fields {
            a.push(ModeAmplitudes {
                right: extract_mode_amplitude(u, &right, (x1_hi - 2.0 * PI, x1_hi), false)?,
                left: extract_mode_amplitude(u, &left, (x1_lo, x1_lo + 2.0 * PI), false)?,
            });
        }
        Some(a)
    } else {
        None
    };

    let mut art = Artifacts::new(out)?;
    let mut csv = String::from("t,e_t\n");
    for (i, v) in result.errors.iter().enumerate() {
        writeln!(csv, "{},{}", i + 1, num(*v)).unwrap();
    }
    art.write("errors.csv", &csv)?;
    if let Some(a) = &amplitudes {
        let mut csv = String::from("t,re_right,im_right,re_left,im_left\n");
        for (i, m) in a.iter().enumerate() {
            writeln!(
                csv,
                "{},{},{},{},{}",
                i + 1,
                num(m.right.re),
                num(m.right.im),
                num(m.left.re),
                num(m.left.im)
            )
            .unwrap();
        }
        art.write("amplitudes.csv", &csv)?;
    }
    if cfg.dump_stride > 0 {
        for (i, u) in result.fields.iter().enumerate() {
            art.write(&format!("u_t{}.csv", i + 1), &field_csv(u, cfg.dump_stride))?;
        }
    }
    art.finish("solve", cfg)?;
    Ok(SolveReport {
        iterations: result.fields.len(),
        errors: result.errors,
        amplitudes,
    })
}

pub fn cmd_pml_sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<PmlSweepResult, CliError> {
    let sweep = pml_sweep(&cfg.experiment, &cfg.rho_values, cfg.sweep_iteration)?;
    let mut csv = String::from("rho,rel_error\n");
    for (r, e) in sweep.rho_values.iter().zip(&sweep.rel_errors) {
        writeln!(csv, "{},{}", num(*r), num(*e)).unwrap();
    }
    match sweep.fit {
        Some(f) => writeln!(csv, "# fit ln(rel_error) = slope*rho + intercept: slope={},intercept={},r2={}", num(f.slope), num(f.intercept), num(f.r2)).unwrap(),
        None => writeln!(csv, "# fit absent: fewer than two rho values").unwrap(),
    }
    let mut art = Artifacts::new(out)?;
    art.write("pml_sweep.csv", &csv)?;
    art.finish("pml-sweep", cfg)?;
    Ok(sweep)
}

/// The PML top used by `solve` with `top = pml`, for reporting.
pub fn top_label(top: TopKind) -> String {
    match top {
        TopKind::Rayleigh => "d2n".into(),
        TopKind::Pml { rho } => format!("pml (rho = {rho})"),
    }
}
