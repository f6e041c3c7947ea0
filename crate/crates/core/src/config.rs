//! Experiment configuration: a single TOML document selecting the preset,
//! the study, the eps sweep, the mesh policy, and the output layout.

use crate::coeff::Preset;
use crate::error::{Error, Result};
use crate::mesh::DomainKind;
use crate::study::{BcKind, DataSelection};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Cell pipeline only: correctors, effective tensor, flux potential.
    Cell,
    /// One boundary-value solve, exported as CSV + JSON.
    Solve,
    /// Convergence-rate sweep (three curves).
    Rates,
    /// Boundary-layer uniformity table.
    Layers,
    /// Flat-boundary local study on the half domain.
    Local,
    /// Interior sub-square study with the reverse-Holder check.
    Interior,
    /// Field structure audit plus the cell residual record.
    Audit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl PresetConfig {
    pub fn build(&self) -> Result<Preset> {
        Preset::from_params(&self.name, &self.params)
    }
}

fn default_eps_list() -> Vec<f64> {
    vec![0.125, 0.0625, 0.03125, 0.015625]
}

fn default_cell_n() -> usize {
    128
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub study: StudyKind,
    pub preset: PresetConfig,
    /// Strictly decreasing reciprocal powers of two.
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    /// Cell grid resolution (power of two, >= 16).
    #[serde(default = "default_cell_n")]
    pub cell_n: usize,
    /// Mesh spacing; `None` resolves to `min(eps) / 8`.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_bc")]
    pub bc: BcKind,
    #[serde(default)]
    pub data: DataSelection,
    /// Domain for the `solve` study.
    #[serde(default = "default_domain")]
    pub domain: DomainKind,
    /// Worker threads; 0 = all available.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_true")]
    pub plot: bool,
}

fn default_bc() -> BcKind {
    BcKind::Dirichlet
}

fn default_domain() -> DomainKind {
    DomainKind::UnitSquare
}

fn dyadic(v: f64) -> bool {
    if v <= 0.0 || v > 0.5 {
        return false;
    }
    let k = (1.0 / v).round();
    (1.0 / v - k).abs() < 1e-12 && (k as u64).is_power_of_two()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Resolved mesh spacing for the sweep studies.
    pub fn resolved_h(&self) -> f64 {
        match self.h {
            Some(h) => h,
            None => self.eps_list.iter().cloned().fold(f64::INFINITY, f64::min) / 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.preset.build()?;
        if self.eps_list.is_empty() {
            return Err(Error::InvalidConfig {
                field: "eps_list".into(),
                message: "must not be empty".into(),
            });
        }
        for (i, &e) in self.eps_list.iter().enumerate() {
            if !dyadic(e) {
                return Err(Error::InvalidConfig {
                    field: format!("eps_list[{i}]"),
                    message: format!("{e} is not a reciprocal power of two"),
                });
            }
            if i > 0 && e >= self.eps_list[i - 1] {
                return Err(Error::InvalidConfig {
                    field: format!("eps_list[{i}]"),
                    message: format!(
                        "{e} does not strictly decrease from {}",
                        self.eps_list[i - 1]
                    ),
                });
            }
        }
        if !self.cell_n.is_power_of_two() || self.cell_n < 16 {
            return Err(Error::InvalidConfig {
                field: "cell_n".into(),
                message: format!("{} is not a power of two >= 16", self.cell_n),
            });
        }
        if let Some(h) = self.h {
            if !dyadic(h) {
                return Err(Error::InvalidConfig {
                    field: "h".into(),
                    message: format!("{h} is not a reciprocal power of two"),
                });
            }
            let eps_min = self.eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
            if matches!(
                self.study,
                StudyKind::Rates | StudyKind::Layers | StudyKind::Solve
            ) && h > eps_min / 8.0 + 1e-15
            {
                return Err(Error::InvalidConfig {
                    field: "h".into(),
                    message: format!("h = {h} does not resolve eps_min = {eps_min} (need h <= eps/8)"),
                });
            }
        }
        Ok(())
    }

    /// Deterministic 64-bit FNV-1a hash of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = self.to_toml();
        let mut state: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            state ^= *b as u64;
            state = state.wrapping_mul(0x100000001b3);
        }
        format!("{state:016x}")
    }
}
