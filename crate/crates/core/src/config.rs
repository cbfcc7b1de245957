//! Run configuration: a sectioned TOML document with every default made
//! explicit by [`RunConfig::resolve`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convergence::{Family, SweepSpec};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::kernels::CapillaryModel;
use crate::lp::DyadicPartition;
use crate::solver::{
    eta_bound, make_initial_data, ModelConfig, PhysParams, PressureLaw, Profile, State,
    StepperConfig, DEFAULT_CFL, DEFAULT_MAX_STEPS,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

fn yes() -> bool {
    true
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Defaults to half the initial minimum of `1+q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_floor: Option<f64>,
    /// Defaults to twice the initial maximum of `1+q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_ceiling: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Epsilon,
    Alpha,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub family: FamilyKind,
    pub values: Vec<f64>,
    /// Rate indices; default `{0.25, 0.5, 1}` in 1D and `{0.25, 0.5, 0.9}` in 2D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
}

impl SweepSection {
    pub fn family(&self) -> Family {
        match self.family {
            FamilyKind::Epsilon => Family::Epsilon(self.values.clone()),
            FamilyKind::Alpha => Family::Alpha(self.values.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Regularity index of `g^s`; default `d/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Truncation level of `S_m`; default `j_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    /// Mixing weight; default 0.9 of the positivity bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            enabled: true,
            s: None,
            m: None,
            eta: None,
        }
    }
}

fn default_dir() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative to the output root.
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Write binary snapshots of every stored sample.
    #[serde(default = "yes")]
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            snapshots: true,
        }
    }
}

/// Everything needed to reproduce a run or a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: CapillaryModel,
    pub physics: PhysParams,
    pub pressure: PressureLaw,
    pub stepper: StepperSection,
    pub initial: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        make_grid(self.grid.dim, self.grid.n, self.grid.length)?;
        self.model.validate()?;
        self.physics.validate()?;
        self.pressure.validate()?;
        let s = &self.stepper;
        if !(s.dt > 0.0) {
            return Err(Error::param("StepperConfig: dt > 0"));
        }
        if s.sample_every == 0 {
            return Err(Error::param("StepperConfig: sample_every >= 1"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.len() < 3 {
                return Err(Error::Sweep(format!(
                    "sweep requires ≥ 3 points, got {}",
                    sweep.values.len()
                )));
            }
            for &v in &sweep.values {
                sweep.family().model(v).validate()?;
            }
        }
        if let Some(eta) = self.diagnostics.eta {
            if !(eta > 0.0) {
                return Err(Error::param("diagnostics: eta > 0"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<std::sync::Arc<Grid>> {
        make_grid(self.grid.dim, self.grid.n, self.grid.length)
    }

    pub fn initial_state(&self) -> Result<State> {
        make_initial_data(&self.grid()?, &self.initial)
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            capillary: self.model,
            params: self.physics,
            pressure: self.pressure,
        }
    }

    /// Fills every optional field with its default; resolving twice is a
    /// no-op.
    pub fn resolve(&self) -> Result<RunConfig> {
        self.validate()?;
        let mut out = self.clone();
        let grid = self.grid()?;
        let initial = self.initial_state()?;
        let (lo, hi) = StepperConfig::default_bounds(&initial.q);
        let lo = *out.stepper.density_floor.get_or_insert(lo);
        let hi = *out.stepper.density_ceiling.get_or_insert(hi);
        if let Some(sweep) = out.sweep.as_mut() {
            if sweep.h.is_none() {
                sweep.h = Some(if grid.dim() == 1 {
                    vec![0.25, 0.5, 1.0]
                } else {
                    vec![0.25, 0.5, 0.9]
                });
            }
        }
        let d = &mut out.diagnostics;
        d.s.get_or_insert(grid.dim() as f64 / 2.0);
        if d.m.is_none() {
            d.m = Some(DyadicPartition::new(&grid)?.j_max());
        }
        d.eta.get_or_insert(0.9 * eta_bound(self.physics.nu(), lo, hi));
        out.stepper_config()?;
        Ok(out)
    }

    /// Stepper settings; density bounds must be resolved.
    pub fn stepper_config(&self) -> Result<StepperConfig> {
        let s = &self.stepper;
        let (Some(lo), Some(hi)) = (s.density_floor, s.density_ceiling) else {
            return Err(Error::Config("density bounds are not resolved".into()));
        };
        let cfg = StepperConfig {
            dt: s.dt,
            t_end: s.t_end,
            sample_every: s.sample_every,
            dealias: s.dealias,
            density_floor: lo,
            density_ceiling: hi,
            cfl: s.cfl,
            max_steps: s.max_steps,
        };
        cfg.validate()?;
        self.pressure.check_range(lo, hi)?;
        cfg.n_steps()?;
        Ok(cfg)
    }

    /// Sweep description; the config must be resolved and carry `[sweep]`.
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        let spec = SweepSpec {
            grid: self.grid()?,
            model: self.model_config(),
            stepper: self.stepper_config()?,
            initial: self.initial_state()?,
            family: sweep.family(),
            h_values: sweep
                .h
                .clone()
                .ok_or_else(|| Error::Config("sweep h values are not resolved".into()))?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Hex SHA-256 of the canonical (JSON) serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
dim = 1
n = 128
length = 10.0

[model]
kind = "nsk"

[physics]
mu = 1.0
lambda = 0.0
kappa = 0.05

[pressure]
kind = "van_der_waals"
a = 1.2
b = 0.3333333333333333
rt = 1.0

[stepper]
dt = 0.001
t_end = 0.1
sample_every = 10

[initial]
kind = "two_phase"
rho1 = 0.7
rho2 = 1.3
interface_width = 1.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert!(cfg.stepper.dealias);
        assert_eq!(cfg.output.dir, "out");
        let r = cfg.resolve().unwrap();
        assert!((r.stepper.density_floor.unwrap() - 0.35).abs() < 1e-12);
        assert!((r.stepper.density_ceiling.unwrap() - 2.6).abs() < 1e-12);
        assert_eq!(r.diagnostics.s, Some(0.5));
        assert!(r.diagnostics.m.is_some() && r.diagnostics.eta.is_some());
        assert_eq!(r.resolve().unwrap(), r);
        let echo = r.to_toml().unwrap();
        assert!(echo.contains("density_floor") && echo.contains("eta"));
    }

    #[test]
    fn round_trip() {
        let r = RunConfig::from_toml(MINIMAL).unwrap().resolve().unwrap();
        let back = RunConfig::from_toml(&r.to_toml().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.hash(), r.hash());
        let mut other = r.clone();
        other.physics.kappa = 0.06;
        assert_ne!(other.hash(), r.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = MINIMAL.replace("kappa = 0.05", "kapa = 0.05");
        assert!(matches!(RunConfig::from_toml(&typo), Err(Error::Config(_))));
        let extra = MINIMAL.replace("[model]\nkind = \"nsk\"", "[model]\nkind = \"nsk\"\nalpha = 3.0");
        assert!(RunConfig::from_toml(&extra).is_err());
        let section = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(RunConfig::from_toml(&section).is_err());
    }

    #[test]
    fn named_constraint_errors() {
        let bad = MINIMAL.replace("kind = \"nsk\"", "kind = \"nsrw\"\nepsilon = 0.0");
        let err = RunConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("Potential: epsilon > 0"), "{err}");
        let two = format!("{MINIMAL}\n[sweep]\nfamily = \"epsilon\"\nvalues = [0.2, 0.1]\n");
        let err = RunConfig::from_toml(&two).unwrap_err().to_string();
        assert!(err.contains("sweep requires ≥ 3 points"), "{err}");
        let grid = MINIMAL.replace("n = 128", "n = 100");
        assert!(matches!(RunConfig::from_toml(&grid), Err(Error::Grid(_))));
    }

    #[test]
    fn sweep_defaults() {
        let text = format!("{MINIMAL}\n[sweep]\nfamily = \"alpha\"\nvalues = [5.0, 10.0, 20.0]\n");
        let r = RunConfig::from_toml(&text).unwrap().resolve().unwrap();
        assert_eq!(r.sweep.as_ref().unwrap().h, Some(vec![0.25, 0.5, 1.0]));
        let spec = r.sweep_spec().unwrap();
        assert_eq!(spec.family, Family::Alpha(vec![5.0, 10.0, 20.0]));
    }
}
