//! Soliton-to-linear transition sweep: the same envelope launched at
//! different ensemble sizes.  As the theoretical dispersion/nonlinearity
//! ratio `c₁/c₂` grows (`√N` beyond `Ω/J`), the fixed envelope loses its
//! self-focusing support and the width-growth score approaches the linear
//! control value.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use cavity_lattice::analysis::nls_coefficients;
use cavity_lattice::dynamics::integrate;

use crate::config::ExperimentConfig;
use crate::output::{csv_float, csv_int, write_json, RunMeta, TableWriter};
use crate::LabError;

#[derive(Debug, Clone, Serialize)]
pub struct TransitionPoint {
    pub atoms: usize,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c1_over_c2: Option<f64>,
    /// Delocalization score: RMS width growth factor at the fixed horizon.
    pub score: f64,
    pub width_initial: f64,
    pub width_final: f64,
    pub energy_drift: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionSummary {
    pub meta: RunMeta,
    pub envelope_amplitude: f64,
    pub envelope_width: f64,
    pub carrier_k: f64,
    pub horizon: f64,
    /// Spearman rank correlation of score against `c₁/c₂`.
    pub spearman: Option<f64>,
    /// Whether `c₁/c₂` increases monotonically with the ensemble size.
    pub ratio_monotone: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub points: Vec<TransitionPoint>,
    pub summary: TransitionSummary,
}

pub fn run_transition(cfg: &ExperimentConfig) -> Result<TransitionReport, LabError> {
    let base = cfg.model_params()?;
    if cfg.experiment.sweep_atoms.is_empty() {
        return Err(LabError::Config("experiment.sweep_atoms must list the ensemble sizes".into()));
    }
    let k = cfg
        .experiment
        .k
        .ok_or_else(|| LabError::Config("experiment.k (carrier wavenumber) is required".into()))?;
    let width = cfg
        .experiment
        .width
        .ok_or_else(|| LabError::Config("experiment.width is required".into()))?;
    let span_len = base.sites as f64 * base.spacing;
    let center = cfg.experiment.center.unwrap_or(span_len / 4.0);

    // the fixed envelope: explicit amplitude, or soliton-matched at the
    // smallest ensemble in the sweep (the most nonlinear point)
    let amplitude = match cfg.experiment.amplitude {
        Some(a) => a,
        None => {
            let smallest = *cfg.experiment.sweep_atoms.iter().min().unwrap();
            let mut p = base.clone();
            p.atoms = smallest;
            let coeffs = nls_coefficients(k, &p).map_err(LabError::Analysis)?;
            (2.0 * coeffs.c1 / coeffs.c2).sqrt() / width
        }
    };

    let horizon = cfg.integrator.t_end;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.experiment.workers.max(1))
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;

    let points: Vec<Result<TransitionPoint, LabError>> = pool.install(|| {
        cfg.experiment
            .sweep_atoms
            .par_iter()
            .map(|&atoms| {
                let mut params = base.clone();
                params.atoms = atoms;
                params.validate().map_err(LabError::Model)?;
                let coeffs = nls_coefficients(k, &params).ok();
                let (state0, _, _) =
                    super::launch_envelope(&params, k, width, center, Some(amplitude))?;
                let occupancy = state0.max_hp_occupation(params.atoms);
                let dt_target = cfg.integrator.dt.unwrap_or_else(|| {
                    super::rk4_step_for(&params, 2.0 * occupancy, horizon, cfg.integrator.conservation_alarm)
                });
                let (dt, stride) = super::plan_steps(horizon, dt_target, 60);
                let config = cfg.integrator_config(dt, stride);
                let traj = integrate(&state0, &params, &config)?;
                let w0 = super::ring_width(traj.initial())?;
                let w1 = super::ring_width(traj.last())?;
                let (energy_drift, norm_drift) = super::max_diag_drift(&traj);
                Ok(TransitionPoint {
                    atoms,
                    c1: coeffs.map(|c| c.c1),
                    c2: coeffs.map(|c| c.c2),
                    c1_over_c2: coeffs.map(|c| c.c1 / c.c2),
                    score: w1 / w0,
                    width_initial: w0,
                    width_final: w1,
                    energy_drift,
                    norm_drift,
                })
            })
            .collect()
    });
    let mut resolved = Vec::with_capacity(points.len());
    for p in points {
        resolved.push(p?);
    }

    let with_ratio: Vec<&TransitionPoint> =
        resolved.iter().filter(|p| p.c1_over_c2.is_some()).collect();
    let spearman = if with_ratio.len() >= 3 {
        let scores: Vec<f64> = with_ratio.iter().map(|p| p.score).collect();
        let ratios: Vec<f64> = with_ratio.iter().map(|p| p.c1_over_c2.unwrap()).collect();
        Some(super::spearman(&scores, &ratios))
    } else {
        None
    };
    let ratio_monotone = if with_ratio.len() >= 2 {
        let mut ordered: Vec<(usize, f64)> = with_ratio
            .iter()
            .map(|p| (p.atoms, p.c1_over_c2.unwrap()))
            .collect();
        ordered.sort_by_key(|(atoms, _)| *atoms);
        Some(ordered.windows(2).all(|w| w[1].1 > w[0].1))
    } else {
        None
    };

    let summary = TransitionSummary {
        meta: RunMeta::new("transition", cfg.hash()),
        envelope_amplitude: amplitude,
        envelope_width: width,
        carrier_k: k,
        horizon,
        spearman,
        ratio_monotone,
    };
    Ok(TransitionReport {
        points: resolved,
        summary,
    })
}

impl TransitionReport {
    pub fn write_files(&self, dir: &Path) -> Result<(), LabError> {
        let meta = self.summary.meta.csv_meta();
        let columns = [
            "atoms",
            "c1",
            "c2",
            "c1_over_c2",
            "score",
            "width_initial",
            "width_final",
            "energy_drift",
            "norm_drift",
        ];
        let mut table = TableWriter::create(
            &dir.join("transition.csv"),
            "soliton-to-linear transition sweep",
            &meta,
            &columns,
        )?;
        let opt = |v: Option<f64>| v.map(csv_float).unwrap_or_else(|| "nan".to_string());
        for p in &self.points {
            table.row(&[
                csv_int(p.atoms as i64),
                opt(p.c1),
                opt(p.c2),
                opt(p.c1_over_c2),
                csv_float(p.score),
                csv_float(p.width_initial),
                csv_float(p.width_final),
                csv_float(p.energy_drift),
                csv_float(p.norm_drift),
            ])?;
        }
        table.finish()?;
        write_json(&dir.join("transition_summary.json"), &self.summary)?;
        Ok(())
    }
}
