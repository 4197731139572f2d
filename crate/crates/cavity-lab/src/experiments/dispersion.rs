//! Dispersion scan: closed-form branch frequencies on a wavenumber grid,
//! optionally cross-checked by spectral measurement of linearized plane-wave
//! runs.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::Serialize;

use cavity_lattice::analysis::{dispersion_continuous, dispersion_discrete, measure_spectrum, Branch};
use cavity_lattice::dynamics::linearized_integrate;
use cavity_lattice::model::{LatticeState, ModelParams};
use cavity_lattice::Complex64;

use crate::config::ExperimentConfig;
use crate::output::{csv_float, write_json, RunMeta, TableWriter};
use crate::LabError;

#[derive(Debug, Clone, Serialize)]
pub struct DispersionRow {
    pub k: f64,
    pub omega_plus_discrete: f64,
    pub omega_minus_discrete: f64,
    pub omega_plus_cont: f64,
    pub omega_minus_cont: f64,
    pub omega_measured: Option<f64>,
    pub rel_err: Option<f64>,
    pub omega_measured_minus: Option<f64>,
    pub rel_err_minus: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionSummary {
    pub meta: RunMeta,
    pub points: usize,
    pub measured: bool,
    /// Largest relative error of the measured optical-branch frequency.
    pub max_rel_err_plus: Option<f64>,
    /// Largest relative error of the measured acoustic-branch frequency.
    pub max_rel_err_minus: Option<f64>,
    /// Largest deviation of `ω̃₊ω̃₋ = −Ω²N` on a 100-point zone grid,
    /// relative to `Ω²N`.
    pub branch_product_max_dev: f64,
    pub band_gap: f64,
}

#[derive(Debug, Clone)]
pub struct DispersionReport {
    pub rows: Vec<DispersionRow>,
    pub summary: DispersionSummary,
}

/// Nearest ring-commensurate wavenumber `2π m / (M d)`.
fn commensurate(k: f64, params: &ModelParams) -> f64 {
    let span = params.sites as f64 * params.spacing;
    let mode = (k * span / TAU).round();
    TAU * mode / span
}

pub fn run_dispersion(cfg: &ExperimentConfig) -> Result<DispersionReport, LabError> {
    let params = cfg.model_params()?;
    if cfg.experiment.k_grid.is_empty() {
        return Err(LabError::Config("experiment.k_grid must list at least one wavenumber".into()));
    }
    let probe = cfg.experiment.probe_sites.first().copied().unwrap_or(0);
    if probe >= params.sites {
        return Err(LabError::Config(format!("probe site {probe} outside the array")));
    }

    // branch-product identity on a fixed zone grid
    let g2 = params.collective_coupling().powi(2);
    let mut product_dev = 0.0_f64;
    for i in 0..100 {
        let k = -PI / params.spacing + TAU / params.spacing * i as f64 / 100.0;
        let plus = dispersion_discrete(k, &params, Branch::Optical).omega;
        let minus = dispersion_discrete(k, &params, Branch::Acoustic).omega;
        if g2 > 0.0 {
            product_dev = product_dev.max((plus * minus + g2).abs() / g2);
        }
    }

    let mut rows = Vec::with_capacity(cfg.experiment.k_grid.len());
    let mut max_plus: Option<f64> = None;
    let mut max_minus: Option<f64> = None;

    for &k_raw in &cfg.experiment.k_grid {
        let k = if cfg.experiment.measure {
            commensurate(k_raw, &params)
        } else {
            k_raw
        };
        let plus_d = dispersion_discrete(k, &params, Branch::Optical).omega;
        let minus_d = dispersion_discrete(k, &params, Branch::Acoustic).omega;
        let plus_c = dispersion_continuous(k, &params, Branch::Optical).omega;
        let minus_c = dispersion_continuous(k, &params, Branch::Acoustic).omega;

        let mut row = DispersionRow {
            k,
            omega_plus_discrete: plus_d,
            omega_minus_discrete: minus_d,
            omega_plus_cont: plus_c,
            omega_minus_cont: minus_c,
            omega_measured: None,
            rel_err: None,
            omega_measured_minus: None,
            rel_err_minus: None,
        };

        if cfg.experiment.measure {
            let (measured_plus, measured_minus) = measure_branches(cfg, &params, k, probe)?;
            if params.coupling > 0.0 {
                if let Some(mp) = measured_plus {
                    row.omega_measured = Some(mp);
                    row.rel_err = Some((mp - plus_d).abs() / plus_d.abs().max(1e-300));
                    max_plus = Some(max_plus.unwrap_or(0.0).max(row.rel_err.unwrap()));
                }
                if let Some(mm) = measured_minus {
                    row.omega_measured_minus = Some(mm);
                    row.rel_err_minus = Some((mm - minus_d).abs() / minus_d.abs().max(1e-300));
                    max_minus = Some(max_minus.unwrap_or(0.0).max(row.rel_err_minus.unwrap()));
                }
            } else {
                // free chain: one peak; report it against the closer branch
                let peak = measured_plus.or(measured_minus);
                if let Some(m) = peak {
                    let (branch_val, err) = if (m - plus_d).abs() <= (m - minus_d).abs() {
                        (plus_d, (m - plus_d).abs() / plus_d.abs().max(1.0))
                    } else {
                        (minus_d, (m - minus_d).abs() / minus_d.abs().max(1.0))
                    };
                    let _ = branch_val;
                    row.omega_measured = Some(m);
                    row.rel_err = Some(err);
                    max_plus = Some(max_plus.unwrap_or(0.0).max(err));
                }
            }
        }
        rows.push(row);
    }

    let summary = DispersionSummary {
        meta: RunMeta::new("dispersion", cfg.hash()),
        points: rows.len(),
        measured: cfg.experiment.measure,
        max_rel_err_plus: max_plus,
        max_rel_err_minus: max_minus,
        branch_product_max_dev: product_dev,
        band_gap: cavity_lattice::analysis::band_gap(&params),
    };
    Ok(DispersionReport { rows, summary })
}

/// Linearized run from a cavity-only plane wave; both branches are excited,
/// giving one positive (optical) and one negative (acoustic) spectral peak.
fn measure_branches(
    cfg: &ExperimentConfig,
    params: &ModelParams,
    k: f64,
    probe: usize,
) -> Result<(Option<f64>, Option<f64>), LabError> {
    let mut state = LatticeState::zero(params.sites);
    for l in 0..params.sites {
        state.cavity[l] = 0.1 * Complex64::from_polar(1.0, k * params.spacing * l as f64);
    }

    let span = cfg.integrator.t_end;
    let dt_target = cfg
        .integrator
        .dt
        .unwrap_or_else(|| super::rk4_step_for(params, 0.0, span, cfg.integrator.conservation_alarm));
    // Nyquist with a 2x margin against the fastest branch
    let omega_lim = dispersion_discrete(0.0, params, Branch::Acoustic)
        .omega
        .abs()
        .max(dispersion_discrete(0.0, params, Branch::Optical).omega.abs())
        .max(2.0 * params.hopping.abs())
        .max(1e-6);
    let sample_dt_max = PI / (2.0 * omega_lim);
    let samples_target = ((span / sample_dt_max).ceil() as usize).max(512);
    let (dt, stride) = super::plan_steps(span, dt_target, samples_target);
    let config = cfg.integrator_config(dt, stride);

    let traj = linearized_integrate(&state, params, &config)?;
    let spectrum = measure_spectrum(&traj, probe)?;
    let plus = spectrum
        .peaks
        .iter()
        .filter(|p| p.omega > 0.0)
        .max_by(|a, b| a.power.partial_cmp(&b.power).unwrap())
        .map(|p| p.omega);
    let minus = spectrum
        .peaks
        .iter()
        .filter(|p| p.omega < 0.0)
        .max_by(|a, b| a.power.partial_cmp(&b.power).unwrap())
        .map(|p| p.omega);
    Ok((plus, minus))
}

impl DispersionReport {
    pub fn write_files(&self, dir: &Path) -> Result<(), LabError> {
        let columns = [
            "k",
            "omega_plus_discrete",
            "omega_minus_discrete",
            "omega_plus_cont",
            "omega_minus_cont",
            "omega_measured",
            "rel_err",
            "omega_measured_minus",
            "rel_err_minus",
        ];
        let meta = self.summary.meta.csv_meta();
        let mut table = TableWriter::create(&dir.join("dispersion.csv"), "dispersion scan", &meta, &columns)?;
        let opt = |v: Option<f64>| v.map(csv_float).unwrap_or_else(|| "nan".to_string());
        for r in &self.rows {
            table.row(&[
                csv_float(r.k),
                csv_float(r.omega_plus_discrete),
                csv_float(r.omega_minus_discrete),
                csv_float(r.omega_plus_cont),
                csv_float(r.omega_minus_cont),
                opt(r.omega_measured),
                opt(r.rel_err),
                opt(r.omega_measured_minus),
                opt(r.rel_err_minus),
            ])?;
        }
        table.finish()?;
        write_json(&dir.join("dispersion_summary.json"), &self.summary)?;
        Ok(())
    }
}
