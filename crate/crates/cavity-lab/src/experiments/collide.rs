//! Head-on soliton collision: two envelopes with opposite carriers are
//! superposed, integrated through the crossing, and re-fitted after they
//! separate.

use std::path::Path;

use serde::Serialize;

use cavity_lattice::analysis::{fit_sech, group_velocity, SechFit};
use cavity_lattice::dynamics::integrate;
use cavity_lattice::initcond::superpose;
use cavity_lattice::model::LatticeState;

use crate::config::ExperimentConfig;
use crate::output::{csv_float, write_json, RunMeta, TableWriter};
use crate::LabError;

/// Fitted parameters of one soliton, identified by its position ordering.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeakTrace {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollideSummary {
    pub meta: RunMeta,
    pub carrier_k: f64,
    pub width: f64,
    pub separation: f64,
    /// Left/right soliton fits before the collision.
    pub pre: [PeakTrace; 2],
    /// Left/right soliton fits at the end of the run.
    pub post: [PeakTrace; 2],
    /// Relative amplitude change per soliton (matched by position order).
    pub amp_change: [f64; 2],
    /// Relative width change per soliton.
    pub width_change: [f64; 2],
    /// Smallest peak separation observed (units of d).
    pub min_separation: f64,
    pub collided: bool,
    pub energy_drift: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone)]
pub struct CollideReport {
    /// Per-sample `(t, left fit, right fit)`; merged blobs are skipped.
    pub samples: Vec<(f64, PeakTrace, PeakTrace)>,
    pub summary: CollideSummary,
}

/// Locate the two dominant, well-separated peaks and fit each within a local
/// window.  `None` while the solitons overlap into one blob.
fn two_peak_fits(
    state: &LatticeState,
    width_guess: f64,
    carrier_k: f64,
    spacing: f64,
) -> Result<Option<(SechFit, SechFit)>, LabError> {
    let m = state.sites();
    let mags: Vec<f64> = state.cavity.iter().map(|z| z.norm()).collect();
    let first = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let exclusion = (4.0 * width_guess).ceil() as usize;
    let mut second = None;
    let mut best = 0.0;
    for (i, &v) in mags.iter().enumerate() {
        let dist = {
            let raw = (i as isize - first as isize).unsigned_abs();
            raw.min(m - raw)
        };
        if dist > exclusion && v > best {
            best = v;
            second = Some(i);
        }
    }
    let Some(second) = second else {
        return Ok(None);
    };
    if best < 0.35 * mags[first] {
        return Ok(None);
    }

    let window = (5.0 * width_guess).ceil() as usize;
    let fit_at = |peak: usize| -> Result<SechFit, LabError> {
        let mut local = LatticeState::zero(2 * window + 1);
        for (j, slot) in (0..2 * window + 1).enumerate() {
            let src = (peak + m + j - window) % m;
            local.cavity[slot] = state.cavity[src];
            local.ensemble[slot] = state.ensemble[src];
        }
        let mut fit = fit_sech(&local, carrier_k, spacing)?;
        fit.center = (peak as f64 + (fit.center - window as f64)).rem_euclid(m as f64);
        Ok(fit)
    };
    let fit_a = fit_at(first)?;
    let fit_b = fit_at(second)?;
    let (left, right) = if fit_a.center <= fit_b.center {
        (fit_a, fit_b)
    } else {
        (fit_b, fit_a)
    };
    Ok(Some((left, right)))
}

fn trace(fit: &SechFit) -> PeakTrace {
    PeakTrace {
        amplitude: fit.amplitude,
        width: fit.width,
        center: fit.center,
    }
}

pub fn run_collide(cfg: &ExperimentConfig) -> Result<CollideReport, LabError> {
    let params = cfg.model_params()?;
    let k = cfg
        .experiment
        .k
        .ok_or_else(|| LabError::Config("experiment.k (carrier wavenumber) is required".into()))?;
    let width = cfg
        .experiment
        .width
        .ok_or_else(|| LabError::Config("experiment.width is required".into()))?;
    let separation = cfg.experiment.separation.unwrap_or(10.0 * width);
    let span_len = params.sites as f64 * params.spacing;
    if separation + 10.0 * width > span_len {
        return Err(LabError::Config(
            "array too small for the requested separation and width".into(),
        ));
    }
    let mid = span_len / 2.0;
    let left = super::launch_envelope(&params, k, width, mid - separation / 2.0, cfg.experiment.amplitude)?;
    let right = super::launch_envelope(&params, -k, width, mid + separation / 2.0, cfg.experiment.amplitude)?;
    let state0 = superpose(&left.0, &right.0)?;

    let v_g = group_velocity(k, &params).abs().max(1e-9);
    let span = cfg.integrator.t_end;
    let occupancy = state0.max_hp_occupation(params.atoms);
    let dt_target = cfg
        .integrator
        .dt
        .unwrap_or_else(|| super::rk4_step_for(&params, 2.0 * occupancy, span, cfg.integrator.conservation_alarm));
    let (dt, stride) = super::plan_steps(span, dt_target, 120);
    let config = cfg.integrator_config(dt, stride);
    let traj = integrate(&state0, &params, &config)?;

    let mut samples = Vec::new();
    let mut min_separation = f64::INFINITY;
    for state in &traj.states {
        if let Some((l, r)) = two_peak_fits(state, width / params.spacing, k, params.spacing)? {
            let m = params.sites as f64;
            let raw = (r.center - l.center).abs();
            min_separation = min_separation.min(raw.min(m - raw));
            samples.push((state.time, trace(&l), trace(&r)));
        }
    }
    if samples.len() < 2 {
        return Err(LabError::Config(
            "collision run never resolved two separated solitons".into(),
        ));
    }
    let (_, pre_l, pre_r) = samples[0];
    let (_, post_l, post_r) = *samples.last().unwrap();
    let collided = min_separation < 2.0 * width / params.spacing;
    let (energy_drift, norm_drift) = super::max_diag_drift(&traj);

    let summary = CollideSummary {
        meta: RunMeta::new("collide", cfg.hash()),
        carrier_k: k,
        width,
        separation,
        pre: [pre_l, pre_r],
        post: [post_l, post_r],
        amp_change: [
            (post_l.amplitude - pre_l.amplitude).abs() / pre_l.amplitude,
            (post_r.amplitude - pre_r.amplitude).abs() / pre_r.amplitude,
        ],
        width_change: [
            (post_l.width - pre_l.width).abs() / pre_l.width,
            (post_r.width - pre_r.width).abs() / pre_r.width,
        ],
        min_separation,
        collided,
        energy_drift,
        norm_drift,
    };
    Ok(CollideReport { samples, summary })
}

impl CollideReport {
    pub fn write_files(&self, dir: &Path) -> Result<(), LabError> {
        let meta = self.summary.meta.csv_meta();
        let columns = [
            "t",
            "amp_left",
            "width_left",
            "center_left",
            "amp_right",
            "width_right",
            "center_right",
        ];
        let mut table =
            TableWriter::create(&dir.join("collide.csv"), "two-soliton collision traces", &meta, &columns)?;
        for (t, l, r) in &self.samples {
            table.row(&[
                csv_float(*t),
                csv_float(l.amplitude),
                csv_float(l.width),
                csv_float(l.center),
                csv_float(r.amplitude),
                csv_float(r.width),
                csv_float(r.center),
            ])?;
        }
        table.finish()?;
        write_json(&dir.join("collide_summary.json"), &self.summary)?;
        Ok(())
    }
}
