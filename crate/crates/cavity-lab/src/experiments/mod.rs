//! Config-driven experiments behind the `sim` subcommands.  Every experiment
//! is a pure `run_*` function returning a typed report plus a `write_files`
//! step, so the CLI, the tests, and the acceptance suite share one code path.

mod collide;
mod dispersion;
mod oracle_compare;
mod soliton;
mod transition;

pub use collide::{run_collide, CollideReport, CollideSummary, PeakTrace};
pub use dispersion::{run_dispersion, DispersionReport, DispersionRow, DispersionSummary};
pub use oracle_compare::{run_oracle_compare, OracleCompareReport, OracleCompareSummary};
pub use soliton::{run_soliton, EnvelopeSample, SolitonReport, SolitonSummary};
pub use transition::{run_transition, TransitionPoint, TransitionReport, TransitionSummary};

use cavity_lattice::analysis::{
    dispersion_continuous, fit_sech, nls_coefficients, packet_width, recentered, Branch,
    NlsCoefficients, SechFit,
};
use cavity_lattice::dynamics::{omega_max, Trajectory, DEFAULT_HP_GUARD, RK4_STABILITY_CAP};
use cavity_lattice::initcond::{soliton_state, MIN_SOLITON_WIDTH_SPACINGS};
use cavity_lattice::model::{LatticeState, ModelParams};
use cavity_lattice::Complex64;

use crate::LabError;

/// Fixed step sized so the empirical RK4 drift model
/// `drift ≈ t_end · ω_max · (dt·ω_max)⁵ / 72` stays a factor 4 below the
/// conservation alarm, capped by the `dt·ω_max ≤ 0.05` stability bound.
pub(crate) fn rk4_step_for(params: &ModelParams, x_max: f64, t_end: f64, alarm: f64) -> f64 {
    let omega = omega_max(params, x_max);
    let target = alarm / 4.0;
    let theta = (72.0 * target / (t_end * omega))
        .powf(0.2)
        .min(RK4_STABILITY_CAP);
    theta / omega
}

/// Step and stride such that the step count is an exact multiple of the
/// stride: uniform sampling with roughly `samples_target` samples.
pub(crate) fn plan_steps(span: f64, dt_target: f64, samples_target: usize) -> (f64, usize) {
    let stride = (span / (samples_target as f64 * dt_target))
        .round()
        .max(1.0) as usize;
    let n_strides = (span / (stride as f64 * dt_target)).ceil().max(1.0) as usize;
    let n_steps = n_strides * stride;
    (span / n_steps as f64, stride)
}

/// Least-squares line through `(x, y)` pairs; returns `(slope, intercept)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of the rank vectors, with
/// average ranks on ties).
pub(crate) fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = ranks(a);
    let rb = ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

/// Sech envelope with carrier `k`, ensemble seeded on the optical branch (or
/// left dark when the coupling vanishes).  With `amplitude = None` the
/// envelope is soliton-matched, `A = √(2c₁/c₂)/width`; an explicit amplitude
/// rescales the matched state, or builds a bare envelope in the linear
/// (`c₂ = 0` or `Ω = 0`) medium where no matched amplitude exists.
pub(crate) fn launch_envelope(
    params: &ModelParams,
    k: f64,
    width: f64,
    center: f64,
    amplitude: Option<f64>,
) -> Result<(LatticeState, f64, Option<NlsCoefficients>), LabError> {
    match nls_coefficients(k, params) {
        Ok(coeffs) if coeffs.c2 > 0.0 && coeffs.c1 > 0.0 => {
            let spec = cavity_lattice::analysis::SolitonSpec::fundamental(coeffs);
            let state = soliton_state(&spec, params, center, width)?;
            let matched = (2.0 * coeffs.c1 / coeffs.c2).sqrt() / width;
            match amplitude {
                None => Ok((state, matched, Some(coeffs))),
                Some(a) => {
                    let factor = a / matched;
                    let scaled = scale_state(&state, factor);
                    let occupation = scaled.max_hp_occupation(params.atoms);
                    if occupation > DEFAULT_HP_GUARD {
                        return Err(LabError::Init(
                            cavity_lattice::initcond::InitError::HpGuardViolation {
                                occupation,
                                guard: DEFAULT_HP_GUARD,
                            },
                        ));
                    }
                    Ok((scaled, a, Some(coeffs)))
                }
            }
        }
        _ => {
            let a = amplitude.ok_or_else(|| {
                LabError::Config(
                    "experiment.amplitude is required when the medium has no focusing nonlinearity"
                        .into(),
                )
            })?;
            let min_width = MIN_SOLITON_WIDTH_SPACINGS * params.spacing;
            if width < min_width {
                return Err(LabError::Init(
                    cavity_lattice::initcond::InitError::WidthTooNarrow {
                        width,
                        min: min_width,
                    },
                ));
            }
            let omega = dispersion_continuous(k, params, Branch::Optical).omega;
            let ratio = if params.coupling == 0.0 || omega == 0.0 {
                0.0
            } else {
                params.collective_coupling() / omega
            };
            let mut state = LatticeState::zero(params.sites);
            for l in 0..params.sites {
                let x = params.spacing * l as f64;
                let envelope = a / ((x - center) / width).cosh();
                let c = envelope * Complex64::from_polar(1.0, k * x);
                state.cavity[l] = c;
                state.ensemble[l] = ratio * c;
            }
            Ok((state, a, None))
        }
    }
}

pub(crate) fn scale_state(state: &LatticeState, factor: f64) -> LatticeState {
    LatticeState {
        time: state.time,
        cavity: state.cavity.iter().map(|z| z * factor).collect(),
        ensemble: state.ensemble.iter().map(|z| z * factor).collect(),
    }
}

/// Sech fit of one sample in the ring-centered frame, with the center mapped
/// back to ring coordinates.
pub(crate) fn ring_fit(state: &LatticeState, carrier_k: f64, spacing: f64) -> Result<SechFit, LabError> {
    let (rot, shift) = recentered(state)?;
    let mut fit = fit_sech(&rot, carrier_k, spacing)?;
    let m = state.sites() as f64;
    fit.center = (fit.center - shift as f64).rem_euclid(m);
    Ok(fit)
}

/// RMS width of one sample in the ring-centered frame.
pub(crate) fn ring_width(state: &LatticeState) -> Result<f64, LabError> {
    let (rot, _) = recentered(state)?;
    Ok(packet_width(&rot)?)
}

/// Unwrap a periodic center series into a continuous one.
pub(crate) fn unwrap_centers(centers: &[f64], sites: usize) -> Vec<f64> {
    let m = sites as f64;
    let mut out = Vec::with_capacity(centers.len());
    let mut offset = 0.0;
    for (i, &c) in centers.iter().enumerate() {
        if i == 0 {
            out.push(c);
            continue;
        }
        let prev = out[i - 1] - offset;
        let mut delta = c - prev;
        if delta > m / 2.0 {
            delta -= m;
        } else if delta < -m / 2.0 {
            delta += m;
        }
        offset = c - (prev + delta);
        out.push(prev + delta);
    }
    out
}

/// Peak |cavity| over a trajectory sample.
pub(crate) fn peak_amplitude(state: &LatticeState) -> f64 {
    state.cavity.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn max_diag_drift(traj: &Trajectory) -> (f64, f64) {
    (traj.energy_drift(), traj.norm_drift())
}
