//! Soliton launch experiment: integrate a sech envelope with the full
//! nonlinearity, track its fitted amplitude/width/center, and contrast with
//! the same envelope under linearized (dispersive) dynamics.
//!
//! The assessment horizon is where the linear control has broadened to twice
//! its initial RMS width (capped by `t_end`); a soliton must hold its fitted
//! amplitude and width across that horizon while the control delocalizes.

use std::path::Path;

use serde::Serialize;

use cavity_lattice::analysis::group_velocity;
use cavity_lattice::dynamics::{integrate, linearized_integrate};

use crate::config::ExperimentConfig;
use crate::output::{csv_float, write_json, RunMeta, TableWriter};
use crate::LabError;

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSample {
    pub time: f64,
    /// Largest |cavity| over the array.
    pub peak_amp: f64,
    /// Fitted sech width (units of d).
    pub width: f64,
    /// Fitted center on the ring (units of d).
    pub center: f64,
    /// Fitted sech amplitude.
    pub fit_amp: f64,
    pub energy: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonSummary {
    pub meta: RunMeta,
    pub empty_field: bool,
    pub carrier_k: f64,
    pub width: f64,
    pub amplitude: f64,
    /// Largest relative drift of the fitted amplitude over the horizon.
    pub amp_drift: Option<f64>,
    /// Largest relative drift of the fitted width over the horizon.
    pub width_drift: Option<f64>,
    /// Envelope speed from a linear fit of the unwrapped center.
    pub measured_velocity: Option<f64>,
    pub v_g_predicted: f64,
    /// Assessment horizon: linear-control doubling time, else `t_end`.
    pub horizon: Option<f64>,
    /// Whether the linear control reached 2x broadening inside `t_end`.
    pub control_doubled: Option<bool>,
    /// Width growth factor of the linear control at `t_end`.
    pub linear_width_growth: Option<f64>,
    pub energy_drift: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone)]
pub struct SolitonReport {
    pub samples: Vec<EnvelopeSample>,
    /// `(t, rms width)` of the linearized control run.
    pub linear_widths: Vec<(f64, f64)>,
    pub summary: SolitonSummary,
}

pub fn run_soliton(cfg: &ExperimentConfig) -> Result<SolitonReport, LabError> {
    let params = cfg.model_params()?;
    let k = cfg
        .experiment
        .k
        .ok_or_else(|| LabError::Config("experiment.k (carrier wavenumber) is required".into()))?;
    let width = cfg
        .experiment
        .width
        .ok_or_else(|| LabError::Config("experiment.width is required".into()))?;
    let span_len = params.sites as f64 * params.spacing;
    let center = cfg.experiment.center.unwrap_or(span_len / 4.0);
    let v_g = group_velocity(k, &params);

    if cfg.experiment.amplitude == Some(0.0) {
        // explicit empty-field request: report without running
        let summary = SolitonSummary {
            meta: RunMeta::new("soliton", cfg.hash()),
            empty_field: true,
            carrier_k: k,
            width,
            amplitude: 0.0,
            amp_drift: None,
            width_drift: None,
            measured_velocity: None,
            v_g_predicted: v_g,
            horizon: None,
            control_doubled: None,
            linear_width_growth: None,
            energy_drift: 0.0,
            norm_drift: 0.0,
        };
        return Ok(SolitonReport {
            samples: Vec::new(),
            linear_widths: Vec::new(),
            summary,
        });
    }

    let (state0, amplitude, _coeffs) =
        super::launch_envelope(&params, k, width, center, cfg.experiment.amplitude)?;

    let span = cfg.integrator.t_end;
    let occupancy = state0.max_hp_occupation(params.atoms);
    let dt_target = cfg
        .integrator
        .dt
        .unwrap_or_else(|| super::rk4_step_for(&params, 2.0 * occupancy, span, cfg.integrator.conservation_alarm));
    let samples_target = cfg.integrator.sample_stride.map_or(160, |s| ((span / dt_target) as usize / s).max(2));
    let (dt, stride) = super::plan_steps(span, dt_target, samples_target);
    let config = cfg.integrator_config(dt, stride);

    let traj = integrate(&state0, &params, &config)?;
    let control = linearized_integrate(&state0, &params, &config)?;

    // envelope metrics per sample
    let mut samples = Vec::with_capacity(traj.len());
    let mut centers = Vec::with_capacity(traj.len());
    for (state, diag) in traj.states.iter().zip(&traj.diagnostics) {
        let fit = super::ring_fit(state, k, params.spacing)?;
        centers.push(fit.center);
        samples.push(EnvelopeSample {
            time: state.time,
            peak_amp: super::peak_amplitude(state),
            width: fit.width,
            center: fit.center,
            fit_amp: fit.amplitude,
            energy: diag.energy,
            norm: diag.norm,
        });
    }
    let unwrapped = super::unwrap_centers(&centers, params.sites);

    // linear control widths and the doubling time
    let mut linear_widths = Vec::with_capacity(control.len());
    for state in &control.states {
        linear_widths.push((state.time, super::ring_width(state)?));
    }
    let w0 = linear_widths[0].1;
    let mut horizon = span;
    let mut doubled = false;
    for pair in linear_widths.windows(2) {
        let (t0, a) = pair[0];
        let (t1, b) = pair[1];
        if !doubled && b >= 2.0 * w0 {
            let frac = if b > a { (2.0 * w0 - a) / (b - a) } else { 1.0 };
            horizon = t0 + frac * (t1 - t0);
            doubled = true;
        }
    }
    let growth = linear_widths.last().unwrap().1 / w0;

    // drifts over the horizon window
    let fit0 = &samples[0];
    let mut amp_drift = 0.0_f64;
    let mut width_drift = 0.0_f64;
    let mut window_t = Vec::new();
    let mut window_c = Vec::new();
    for (s, &c) in samples.iter().zip(&unwrapped) {
        if s.time > horizon + 1e-9 {
            break;
        }
        amp_drift = amp_drift.max((s.fit_amp - fit0.fit_amp).abs() / fit0.fit_amp);
        width_drift = width_drift.max((s.width - fit0.width).abs() / fit0.width);
        window_t.push(s.time);
        window_c.push(c * params.spacing);
    }
    let (velocity, _) = super::linear_fit(&window_t, &window_c);
    let (energy_drift, norm_drift) = super::max_diag_drift(&traj);

    let summary = SolitonSummary {
        meta: RunMeta::new("soliton", cfg.hash()),
        empty_field: false,
        carrier_k: k,
        width,
        amplitude,
        amp_drift: Some(amp_drift),
        width_drift: Some(width_drift),
        measured_velocity: Some(velocity),
        v_g_predicted: v_g,
        horizon: Some(horizon),
        control_doubled: Some(doubled),
        linear_width_growth: Some(growth),
        energy_drift,
        norm_drift,
    };
    Ok(SolitonReport {
        samples,
        linear_widths,
        summary,
    })
}

impl SolitonReport {
    pub fn write_files(&self, dir: &Path) -> Result<(), LabError> {
        let meta = self.summary.meta.csv_meta();
        let columns = ["t", "peak_amp", "width", "center", "fit_amp", "energy", "norm"];
        let mut table =
            TableWriter::create(&dir.join("soliton.csv"), "soliton envelope time series", &meta, &columns)?;
        for s in &self.samples {
            table.row(&[
                csv_float(s.time),
                csv_float(s.peak_amp),
                csv_float(s.width),
                csv_float(s.center),
                csv_float(s.fit_amp),
                csv_float(s.energy),
                csv_float(s.norm),
            ])?;
        }
        table.finish()?;

        let mut control = TableWriter::create(
            &dir.join("linear_control.csv"),
            "linearized control widths",
            &meta,
            &["t", "rms_width"],
        )?;
        for &(t, w) in &self.linear_widths {
            control.row(&[csv_float(t), csv_float(w)])?;
        }
        control.finish()?;

        write_json(&dir.join("soliton_summary.json"), &self.summary)?;
        Ok(())
    }
}
