//! Declarative experiment configuration: one TOML file with flat sections per
//! subsystem, command-line `--set section.key=value` overrides, and a content
//! hash stamped into every output file.
//!
//! Unknown keys are rejected so sweep configs cannot silently typo a field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cavity_lattice::dynamics::{
    IntegratorConfig, Method, DEFAULT_CONSERVATION_ALARM, DEFAULT_HP_GUARD,
};
use cavity_lattice::model::{Boundary, ModelParams};

use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sites: usize,
    pub atoms: usize,
    #[serde(default = "one_f64")]
    pub hopping: f64,
    pub coupling: f64,
    #[serde(default = "one_f64")]
    pub spacing: f64,
    #[serde(default = "one_usize")]
    pub hp_order: usize,
    #[serde(default)]
    pub boundary: BoundaryKey,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKey {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default)]
    pub method: MethodKey,
    /// Fixed step; chosen automatically from the spectral bound when absent.
    pub dt: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Record every n-th accepted step; chosen per experiment when absent.
    pub sample_stride: Option<usize>,
    #[serde(default = "default_hp_guard")]
    pub hp_guard: f64,
    #[serde(default = "default_alarm")]
    pub conservation_alarm: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            method: MethodKey::default(),
            dt: None,
            tol: default_tol(),
            t_end: default_t_end(),
            sample_stride: None,
            hp_guard: default_hp_guard(),
            conservation_alarm: default_alarm(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodKey {
    #[default]
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct ExperimentSection {
    /// Carrier wavenumber (1/length).
    pub k: Option<f64>,
    /// Envelope amplitude; envelope-matched when absent.
    pub amplitude: Option<f64>,
    /// Envelope width (length units).
    pub width: Option<f64>,
    /// Envelope center (length units); array midpoint when absent.
    pub center: Option<f64>,
    /// Center-to-center soliton separation for collision runs.
    pub separation: Option<f64>,
    /// Wavenumber grid for dispersion scans.
    pub k_grid: Vec<f64>,
    /// Sites probed by spectral estimators.
    pub probe_sites: Vec<usize>,
    /// Ensemble sizes for the transition sweep.
    pub sweep_atoms: Vec<usize>,
    /// Also run linearized plane waves and measure their frequencies.
    pub measure: bool,
    /// Concurrent sweep workers.
    pub workers: usize,
    /// Seed recorded in reports; reserved for randomized experiments.
    pub seed: u64,
    /// Output directory; overridden by `--out`.
    pub out_dir: Option<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            k: None,
            amplitude: None,
            width: None,
            center: None,
            separation: None,
            k_grid: Vec::new(),
            probe_sites: Vec::new(),
            sweep_atoms: Vec::new(),
            measure: true,
            workers: 4,
            seed: 0,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct OracleSection {
    /// Photon cutoff per cavity.
    pub photon_cutoff: usize,
    /// Initial coherent amplitude placed on `excited_site`.
    pub cavity_amplitude: f64,
    pub excited_site: usize,
    /// Initial ensemble tilt β (same on every site).
    pub ensemble_tilt: f64,
    /// Sample count over the comparison window.
    pub samples: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            photon_cutoff: 6,
            cavity_amplitude: 0.5,
            excited_site: 0,
            ensemble_tilt: 0.0,
            samples: 64,
        }
    }
}

fn one_f64() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-9
}

fn default_t_end() -> f64 {
    50.0
}

fn default_hp_guard() -> f64 {
    DEFAULT_HP_GUARD
}

fn default_alarm() -> f64 {
    DEFAULT_CONSERVATION_ALARM
}

impl ExperimentConfig {
    /// Parse a TOML document and apply `--set section.key=value` overrides.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, LabError> {
        let mut value: toml::Value = toml::from_str(text)
            .map_err(|e| LabError::Config(format!("parse failure: {e}")))?;
        for assignment in overrides {
            apply_override(&mut value, assignment)?;
        }
        let config: ExperimentConfig = value
            .try_into()
            .map_err(|e| LabError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    fn validate(&self) -> Result<(), LabError> {
        self.model_params()?.validate().map_err(LabError::Model)?;
        if !(self.integrator.t_end > 0.0) {
            return Err(LabError::Config("integrator.t_end must be > 0".into()));
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams, LabError> {
        let m = &self.model;
        let params = ModelParams {
            sites: m.sites,
            atoms: m.atoms,
            hopping: m.hopping,
            coupling: m.coupling,
            spacing: m.spacing,
            hp_order: m.hp_order,
            boundary: match m.boundary {
                BoundaryKey::Periodic => Boundary::Periodic,
                BoundaryKey::Open => Boundary::Open,
            },
        };
        params.validate().map_err(LabError::Model)?;
        Ok(params)
    }

    /// Integrator settings with `dt`/stride resolved by the caller.
    pub fn integrator_config(&self, dt: f64, stride: usize) -> IntegratorConfig {
        let s = &self.integrator;
        IntegratorConfig {
            method: match s.method {
                MethodKey::Rk4Fixed => Method::Rk4Fixed,
                MethodKey::Rk45Adaptive => Method::Rk45Adaptive,
            },
            dt,
            tol: s.tol,
            t_end: s.t_end,
            sample_stride: stride,
            hp_guard: s.hp_guard,
            conservation_alarm: s.conservation_alarm,
        }
    }

    /// Short content hash of the fully resolved configuration.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Apply one `section.key=value` assignment to the parsed TOML tree.  The
/// value text is itself parsed as TOML (so numbers, booleans, and arrays
/// work); bare words fall back to strings.
fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<(), LabError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| LabError::Config(format!("override '{assignment}' is not key=value")))?;
    let parsed: toml::Value = toml::from_str(&format!("x = {}", raw.trim()))
        .map(|v: toml::Value| v["x"].clone())
        .unwrap_or_else(|_| toml::Value::String(raw.trim().to_string()));

    let mut node = root;
    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(LabError::Config(format!("override path '{path}' is malformed")));
    }
    for (i, segment) in segments.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("override path '{path}' crosses a non-table")))?;
        if i + 1 == segments.len() {
            table.insert(segment.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(segment.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    unreachable!("loop returns on the last segment");
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\n[model]\nsites = 8\natoms = 10\ncoupling = 1.0\n";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.model.hopping, 1.0);
        assert_eq!(cfg.model.hp_order, 1);
        assert_eq!(cfg.model.boundary, BoundaryKey::Periodic);
        assert_eq!(cfg.oracle.photon_cutoff, 6);
        let params = cfg.model_params().unwrap();
        assert_eq!(params.sites, 8);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = format!("{MINIMAL}typo_key = 3\n");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad, &[]),
            Err(LabError::Config(_))
        ));
        let bad_section = format!("{MINIMAL}[turbo]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&bad_section, &[]).is_err());
    }

    #[test]
    fn overrides_change_typed_values() {
        let cfg = ExperimentConfig::from_toml(
            MINIMAL,
            &[
                "model.atoms=40".to_string(),
                "integrator.t_end=12.5".to_string(),
                "experiment.k_grid=[0.1, 0.2]".to_string(),
                "model.boundary=\"open\"".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.model.atoms, 40);
        assert_eq!(cfg.integrator.t_end, 12.5);
        assert_eq!(cfg.experiment.k_grid, vec![0.1, 0.2]);
        assert_eq!(cfg.model.boundary, BoundaryKey::Open);
    }

    #[test]
    fn override_with_unknown_key_rejected() {
        assert!(ExperimentConfig::from_toml(MINIMAL, &["model.bogus=1".to_string()]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_toml(MINIMAL, &[]).unwrap();
        let b = ExperimentConfig::from_toml(MINIMAL, &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml(MINIMAL, &["model.atoms=11".to_string()]).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn invalid_model_rejected_at_load() {
        let bad = "\n[model]\nsites = 0\natoms = 10\ncoupling = 1.0\n";
        assert!(ExperimentConfig::from_toml(bad, &[]).is_err());
    }
}
