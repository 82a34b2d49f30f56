//! Flat `key = value` run configuration.

use std::fs;
use std::path::Path;

use owg_core::experiment::{SlabExperiment, TopKind};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: SlabExperiment,
    pub top: TopKind,
    /// `ρ` of a single PML run.
    pub pml_rho: f64,
    pub rho_values: Vec<f64>,
    pub sweep_iteration: usize,
    /// Every `dump_stride`-th sample in both directions goes to `u_t{t}.csv`;
    /// `0` disables field dumps.
    pub dump_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: SlabExperiment::default(),
            top: TopKind::Rayleigh,
            pml_rho: 20.0,
            rho_values: (1..=10).map(|i| 2.0 * i as f64).collect(),
            sweep_iteration: 4,
            dump_stride: 4,
        }
    }
}

pub const KEYS: &[&str] = &[
    "k",
    "omega",
    "h0",
    "tau",
    "pml_m",
    "pml_rho",
    "top",
    "n_y",
    "L",
    "M",
    "eps",
    "delta",
    "p",
    "q0",
    "q_x2_lo",
    "q_x2_hi",
    "t_max",
    "tol",
    "x1_min",
    "x1_max",
    "x1_step",
    "x2_max",
    "rho_values",
    "sweep_iteration",
    "dump_stride",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let e = &mut self.experiment;
        let v = value.trim();
        match key {
            "k" => e.k = parse(key, v)?,
            "omega" => e.omega = parse(key, v)?,
            "h0" => e.h0 = parse(key, v)?,
            "tau" => e.tau = parse(key, v)?,
            "pml_m" => e.pml_m = parse(key, v)?,
            "pml_rho" => self.pml_rho = parse(key, v)?,
            "top" => {
                self.top = match v {
                    "d2n" => TopKind::Rayleigh,
                    "pml" => TopKind::Pml { rho: self.pml_rho },
                    _ => return Err(CliError::Config(format!("top: expected d2n or pml, got {v:?}"))),
                }
            }
            "n_y" => e.n_y = parse(key, v)?,
            "L" => e.fourier_l = parse(key, v)?,
            "M" => e.quad_points = parse(key, v)?,
            "eps" => e.bump_eps = parse(key, v)?,
            "delta" => e.bump_delta = parse(key, v)?,
            "p" => e.bump_p = parse(key, v)?,
            "q0" => e.q0 = if v == "auto" { None } else { Some(parse(key, v)?) },
            "q_x2_lo" => e.q_x2.0 = parse(key, v)?,
            "q_x2_hi" => e.q_x2.1 = parse(key, v)?,
            "t_max" => e.t_max = parse(key, v)?,
            "tol" => e.tol = parse(key, v)?,
            "x1_min" => e.x1_range.0 = parse(key, v)?,
            "x1_max" => e.x1_range.1 = parse(key, v)?,
            "x1_step" => e.x1_step = parse(key, v)?,
            "x2_max" => e.x2_max = parse(key, v)?,
            "rho_values" => {
                self.rho_values = v
                    .split(',')
                    .map(|s| parse::<f64>(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "sweep_iteration" => self.sweep_iteration = parse(key, v)?,
            "dump_stride" => self.dump_stride = parse(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        if let TopKind::Pml { .. } = self.top {
            self.top = TopKind::Pml { rho: self.pml_rho };
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// `--key value` or `--key=value` pairs.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let flag = arg
                .strip_prefix("--")
                .ok_or_else(|| CliError::Config(format!("expected --key, got {arg:?}")))?;
            match flag.split_once('=') {
                Some((k, v)) => self.set(k, v)?,
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::Config(format!("--{flag} needs a value")))?;
                    self.set(flag, v)?;
                }
            }
        }
        Ok(())
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            cfg.apply_text(&text)?;
        }
        cfg.apply_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.experiment.validate().map_err(CliError::from)?;
        if self.rho_values.is_empty() || self.rho_values.iter().any(|r| !(*r > 0.0)) {
            return Err(CliError::Config("rho_values must be positive".into()));
        }
        if !(self.pml_rho > 0.0) {
            return Err(CliError::Config("pml_rho must be positive".into()));
        }
        if self.sweep_iteration < 1 || self.experiment.t_max < 1 {
            return Err(CliError::Config("iteration counts must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn resolved(&self) -> Vec<(&'static str, String)> {
        let e = &self.experiment;
        let q0 = match e.q0 {
            Some(q) => q.to_string(),
            None => "auto".to_string(),
        };
        let top = match self.top {
            TopKind::Rayleigh => "d2n",
            TopKind::Pml { .. } => "pml",
        };
        let rhos: Vec<String> = self.rho_values.iter().map(|r| r.to_string()).collect();
        let values = [
            e.k.to_string(),
            e.omega.to_string(),
            e.h0.to_string(),
            e.tau.to_string(),
            e.pml_m.to_string(),
            self.pml_rho.to_string(),
            top.to_string(),
            e.n_y.to_string(),
            e.fourier_l.to_string(),
            e.quad_points.to_string(),
            e.bump_eps.to_string(),
            e.bump_delta.to_string(),
            e.bump_p.to_string(),
            q0,
            e.q_x2.0.to_string(),
            e.q_x2.1.to_string(),
            e.t_max.to_string(),
            e.tol.to_string(),
            e.x1_range.0.to_string(),
            e.x1_range.1.to_string(),
            e.x1_step.to_string(),
            e.x2_max.to_string(),
            rhos.join(","),
            self.sweep_iteration.to_string(),
            self.dump_stride.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }
}
