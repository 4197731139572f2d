//! Closed-form dispersion and envelope-equation quantities, plus the
//! numerical estimators (spectral peaks, packet moments, sech fits) used to
//! compare simulation against theory.
//!
//! Conventions: a mode `exp(i(k l d − ω t))` has frequency `ω`;
//! [`measure_spectrum`] reports peaks in the same sign convention, so a pure
//! rotating field `exp(−iωt)` produces a single peak at `+ω`.  Packet centers
//! and widths are reported in units of the cavity spacing `d`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;

use num_complex::Complex64;
use num_traits::Float;

use crate::dynamics::Trajectory;
use crate::model::{LatticeState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Upper branch `ω₊` (photon-like at large `Ω√N`).
    Optical,
    /// Lower branch `ω₋`.
    Acoustic,
}

#[derive(Debug, Clone, Copy)]
pub struct DispersionPoint {
    pub k: f64,
    pub branch: Branch,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// The optical carrier frequency vanishes; envelope coefficients diverge.
    SingularCarrier,
    /// All-zero field: packet moments and fits are undefined.
    EmptyField,
    /// Too few samples for a spectrum.
    ShortTrajectory { len: usize },
    /// Spectrum estimation needs uniformly sampled trajectories.
    NonuniformSampling,
    /// The envelope fit failed to converge to a finite optimum.
    FitDiverged,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::SingularCarrier => write!(f, "carrier frequency is zero"),
            AnalysisError::EmptyField => write!(f, "field is identically zero"),
            AnalysisError::ShortTrajectory { len } => {
                write!(f, "trajectory too short for spectrum ({len} samples)")
            }
            AnalysisError::NonuniformSampling => write!(f, "trajectory is not uniformly sampled"),
            AnalysisError::FitDiverged => write!(f, "envelope fit diverged"),
        }
    }
}

impl core::error::Error for AnalysisError {}

/// Long-wavelength dispersion
/// `ω±(k) = −J(1 − d²k²/2) ± √(J²(1 − d²k²/2)² + Ω²N)`.
pub fn dispersion_continuous(k: f64, params: &ModelParams, branch: Branch) -> DispersionPoint {
    let u = 1.0 - 0.5 * (params.spacing * k).powi(2);
    DispersionPoint {
        k,
        branch,
        omega: two_mode_root(params.hopping * u, params, branch),
    }
}

/// Exact lattice dispersion `ω̃±(k) = −J cos(kd) ± √(J² cos²(kd) + Ω²N)`,
/// periodic in `k` with period `2π/d`.
pub fn dispersion_discrete(k: f64, params: &ModelParams, branch: Branch) -> DispersionPoint {
    let c = (params.spacing * k).cos();
    DispersionPoint {
        k,
        branch,
        omega: two_mode_root(params.hopping * c, params, branch),
    }
}

/// Roots of `ω² + 2 h ω − Ω²N = 0` with `h = J cos(kd)` (or its continuum
/// expansion): `ω± = −h ± √(h² + Ω²N)`.
fn two_mode_root(h: f64, params: &ModelParams, branch: Branch) -> f64 {
    let g2 = params.collective_coupling().powi(2);
    let root = (h * h + g2).sqrt();
    match branch {
        Branch::Optical => -h + root,
        Branch::Acoustic => -h - root,
    }
}

/// Indirect band gap of the two branches over the Brillouin zone:
/// `min_k ω̃₊ − max_k ω̃₋ = 2√(J² + Ω²N) − 2J`, strictly positive whenever
/// `Ω√N > 0`.
pub fn band_gap(params: &ModelParams) -> f64 {
    let j = params.hopping;
    let g2 = params.collective_coupling().powi(2);
    2.0 * (j * j + g2).sqrt() - 2.0 * j
}

/// Group velocity of the optical branch,
/// `v_g₊ = 2 k J d² ω₊² / (ω₊² + Ω²N)`, which coincides with `dω₊/dk` of the
/// long-wavelength dispersion.
pub fn group_velocity(k: f64, params: &ModelParams) -> f64 {
    let omega = dispersion_continuous(k, params, Branch::Optical).omega;
    if omega == 0.0 {
        // Degenerate Ω = 0 case: the optical branch is flat at zero.
        return 0.0;
    }
    let g2 = params.collective_coupling().powi(2);
    let w2 = omega * omega;
    2.0 * k * params.hopping * params.spacing.powi(2) * w2 / (w2 + g2)
}

/// Centered finite-difference estimate of `dω₊/dk`, exposed as an independent
/// cross-check of [`group_velocity`].
pub fn group_velocity_fd(k: f64, params: &ModelParams, dk: f64) -> f64 {
    let hi = dispersion_continuous(k + dk, params, Branch::Optical).omega;
    let lo = dispersion_continuous(k - dk, params, Branch::Optical).omega;
    (hi - lo) / (2.0 * dk)
}

/// Coefficients of the cubic envelope equation
/// `i ∂_t ε + c₁ ∂_χχ ε + c₂ |ε|² ε = 0` for a carrier on the optical branch.
#[derive(Debug, Clone, Copy)]
pub struct NlsCoefficients {
    /// Dispersion coefficient (length² · frequency).
    pub c1: f64,
    /// Nonlinearity coefficient (frequency).
    pub c2: f64,
    /// Carrier wavenumber.
    pub k: f64,
    /// Optical-branch carrier frequency `ω₊(k)`.
    pub omega_plus: f64,
    /// Group velocity `v_g₊(k)`.
    pub group_velocity: f64,
}

/// Evaluate the envelope-equation coefficients
/// `c₁ = (J d² ω₊³ + Ω²N v_g₊²) / [ω₊ (ω₊² + Ω²N)]` and
/// `c₂ = 2 Ω⁴ N / [ω₊ (ω₊² + Ω²N)]`.
pub fn nls_coefficients(k: f64, params: &ModelParams) -> Result<NlsCoefficients, AnalysisError> {
    let omega = dispersion_continuous(k, params, Branch::Optical).omega;
    let scale = params.hopping.abs().max(params.collective_coupling()).max(1e-300);
    if omega.abs() <= 1e-12 * scale {
        return Err(AnalysisError::SingularCarrier);
    }
    let v = group_velocity(k, params);
    let g2 = params.collective_coupling().powi(2);
    let denom = omega * (omega * omega + g2);
    let c1 = (params.hopping * params.spacing.powi(2) * omega.powi(3) + g2 * v * v) / denom;
    let c2 = 2.0 * params.coupling.powi(4) * params.atoms as f64 / denom;
    Ok(NlsCoefficients {
        c1,
        c2,
        k,
        omega_plus: omega,
        group_velocity: v,
    })
}

/// Parameters of the bright-soliton solution of the envelope equation, in the
/// scaled variables `(χ, t)`.
#[derive(Debug, Clone, Copy)]
pub struct SolitonSpec {
    /// Inverse envelope scale `η > 0`.
    pub eta: f64,
    /// Envelope velocity offset `σ`.
    pub sigma: f64,
    /// Envelope translation `ν`.
    pub nu: f64,
    /// Global phase `φ₀`.
    pub phi0: f64,
    /// Multiple-scale bookkeeping parameter `μ ∈ (0, 1]`; the physical
    /// amplitude–width mapping is μ-independent.
    pub mu: f64,
    pub coeffs: NlsCoefficients,
}

impl SolitonSpec {
    /// Stationary fundamental soliton: `η = 1`, `σ = ν = φ₀ = 0`, `μ = 1`.
    pub fn fundamental(coeffs: NlsCoefficients) -> Self {
        SolitonSpec {
            eta: 1.0,
            sigma: 0.0,
            nu: 0.0,
            phi0: 0.0,
            mu: 1.0,
            coeffs,
        }
    }
}

/// Bright-soliton solution of the envelope equation,
///
/// ```text
/// ε(χ, t) = η √(2c₁/c₂) sech(η[χ − 2c₁σt] − ν)
///           · exp(i[σχ − c₁(σ² − η²)t + φ₀])
/// ```
///
/// valid for `c₁ c₂ > 0`.
pub fn soliton_envelope(chi: f64, t: f64, spec: &SolitonSpec) -> Complex64 {
    let c1 = spec.coeffs.c1;
    let c2 = spec.coeffs.c2;
    let amplitude = spec.eta * (2.0 * c1 / c2).sqrt();
    let arg = spec.eta * (chi - 2.0 * c1 * spec.sigma * t) - spec.nu;
    let phase = spec.sigma * chi - c1 * (spec.sigma * spec.sigma - spec.eta * spec.eta) * t + spec.phi0;
    amplitude / arg.cosh() * Complex64::from_polar(1.0, phase)
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumPeak {
    /// Angular frequency of the peak (sign convention: `exp(−iωt)` peaks at `ω`).
    pub omega: f64,
    /// Windowed power at the peak.
    pub power: f64,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Dominant peaks, strongest first.
    pub peaks: Vec<SpectrumPeak>,
    /// Rayleigh resolution `2π / (N_samples · Δt)` of the underlying record.
    pub resolution: f64,
}

const SPECTRUM_MIN_SAMPLES: usize = 16;
const SPECTRUM_PEAK_FLOOR: f64 = 1e-6;
const SPECTRUM_MAX_PEAKS: usize = 8;
const SPECTRUM_PAD_FACTOR: usize = 4;

/// Windowed discrete Fourier transform of the cavity amplitude at one site.
///
/// Applies a Hann window, zero-pads, and locates dominant peaks with
/// parabolic interpolation on the log power.  Requires a uniformly sampled
/// trajectory of at least 16 samples.
pub fn measure_spectrum(traj: &Trajectory, site: usize) -> Result<Spectrum, AnalysisError> {
    let n = traj.len();
    if n < SPECTRUM_MIN_SAMPLES {
        return Err(AnalysisError::ShortTrajectory { len: n });
    }
    let dt = traj.sample_interval().ok_or(AnalysisError::NonuniformSampling)?;
    let series: Vec<Complex64> = traj.states.iter().map(|s| s.cavity[site]).collect();
    Ok(spectrum_of_series(&series, dt))
}

/// Peak estimation on a raw uniformly sampled complex series.
pub fn spectrum_of_series(series: &[Complex64], dt: f64) -> Spectrum {
    let n = series.len();
    let mut buf: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = 0.5 * (1.0 - (TAU * i as f64 / (n - 1) as f64).cos());
            w * s
        })
        .collect();
    let padded = (SPECTRUM_PAD_FACTOR * n).next_power_of_two();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    fft_pow2(&mut buf, 1.0);

    let power: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
    let p_max = power.iter().cloned().fold(0.0, f64::max);
    let floor = p_max * SPECTRUM_PEAK_FLOOR;

    let mut peaks: Vec<SpectrumPeak> = Vec::new();
    for i in 0..padded {
        let prev = power[(i + padded - 1) % padded];
        let next = power[(i + 1) % padded];
        let p = power[i];
        if p >= floor && p > prev && p >= next && p > 0.0 {
            // parabolic interpolation on log power
            let (lm, l0, lp) = (prev.max(1e-300).ln(), p.ln(), next.max(1e-300).ln());
            let denom = lm - 2.0 * l0 + lp;
            let delta = if denom < 0.0 { 0.5 * (lm - lp) / denom } else { 0.0 };
            let mut bin = i as f64 + delta.clamp(-0.5, 0.5);
            if bin > padded as f64 / 2.0 {
                bin -= padded as f64;
            }
            peaks.push(SpectrumPeak {
                omega: TAU * bin / (padded as f64 * dt),
                power: p,
            });
        }
    }
    peaks.sort_by(|a, b| b.power.partial_cmp(&a.power).unwrap());
    peaks.truncate(SPECTRUM_MAX_PEAKS);
    Spectrum {
        peaks,
        resolution: TAU / (n as f64 * dt),
    }
}

/// In-place radix-2 FFT with kernel `exp(sign · i 2π m n / N)`.
fn fft_pow2(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let step = Complex64::from_polar(1.0, sign * TAU / len as f64);
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for off in 0..len / 2 {
                let u = buf[start + off];
                let v = buf[start + off + len / 2] * w;
                buf[start + off] = u + v;
                buf[start + off + len / 2] = u - v;
                w *= step;
            }
        }
        len <<= 1;
    }
}

fn intensity(state: &LatticeState) -> Result<Vec<f64>, AnalysisError> {
    let w: Vec<f64> = state.cavity.iter().map(|z| z.norm_sqr()).collect();
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(AnalysisError::EmptyField);
    }
    Ok(w)
}

/// Intensity-weighted packet center `Σ l |c_l|² / Σ |c_l|²`, in units of `d`.
pub fn packet_center(state: &LatticeState) -> Result<f64, AnalysisError> {
    let w = intensity(state)?;
    let total: f64 = w.iter().sum();
    Ok(w.iter().enumerate().map(|(l, wl)| l as f64 * wl).sum::<f64>() / total)
}

/// Root-mean-square packet width about [`packet_center`], in units of `d`.
pub fn packet_width(state: &LatticeState) -> Result<f64, AnalysisError> {
    let w = intensity(state)?;
    let total: f64 = w.iter().sum();
    let center = w.iter().enumerate().map(|(l, wl)| l as f64 * wl).sum::<f64>() / total;
    let var = w
        .iter()
        .enumerate()
        .map(|(l, wl)| (l as f64 - center).powi(2) * wl)
        .sum::<f64>()
        / total;
    Ok(var.sqrt())
}

/// Circular intensity centroid on the ring, in `[0, M)` units of `d`.
/// Well-defined for packets that may straddle the periodic wrap.
pub fn ring_center(state: &LatticeState) -> Result<f64, AnalysisError> {
    let w = intensity(state)?;
    let m = w.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, wl) in w.iter().enumerate() {
        acc += wl * Complex64::from_polar(1.0, TAU * l as f64 / m);
    }
    if acc.norm() == 0.0 {
        return Err(AnalysisError::EmptyField);
    }
    let mut angle = acc.arg();
    if angle < 0.0 {
        angle += TAU;
    }
    Ok(angle / TAU * m)
}

/// Copy of `state` cyclically rotated so the circular centroid sits at the
/// middle of the array; returns the applied shift (sites moved to the right).
/// Positions map as `p_rotated = (p + shift) mod M`.
pub fn recentered(state: &LatticeState) -> Result<(LatticeState, usize), AnalysisError> {
    let m = state.sites();
    let center = ring_center(state)?;
    let target = (m / 2) as f64;
    let raw = (target - center).round() % m as f64;
    let shift = (if raw < 0.0 { raw + m as f64 } else { raw }) as usize % m;
    let mut out = LatticeState::zero(m);
    out.time = state.time;
    for l in 0..m {
        let dest = (l + shift) % m;
        out.cavity[dest] = state.cavity[l];
        out.ensemble[dest] = state.ensemble[l];
    }
    Ok((out, shift))
}

/// Result of a least-squares sech-envelope fit `A sech((l − x₀)/w)` to the
/// cavity magnitudes.  `center` and `width` are in units of `d`; `fit_error`
/// is the residual 2-norm relative to the data 2-norm.
#[derive(Debug, Clone, Copy)]
pub struct SechFit {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub fit_error: f64,
}

/// Demodulate by the carrier and fit a sech envelope to the magnitudes by
/// damped Gauss–Newton iteration.
///
/// `carrier_k` is the carrier wavenumber and `spacing` the cavity spacing
/// (their product is the phase advance per site); the magnitudes fit is
/// insensitive to the carrier but the demodulated field is what the envelope
/// model describes.
pub fn fit_sech(state: &LatticeState, carrier_k: f64, spacing: f64) -> Result<SechFit, AnalysisError> {
    let data: Vec<f64> = state
        .cavity
        .iter()
        .enumerate()
        .map(|(l, z)| (z * Complex64::from_polar(1.0, -carrier_k * spacing * l as f64)).norm())
        .collect();
    let data_norm_sq: f64 = data.iter().map(|v| v * v).sum();
    if data_norm_sq <= 0.0 {
        return Err(AnalysisError::EmptyField);
    }

    // initial guesses from the peak and the intensity moments
    let (peak_idx, &peak) = data
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut amp = peak;
    let mut center = peak_idx as f64;
    let rms = packet_width(state)?;
    let mut width = (rms * 12f64.sqrt() / PI).max(0.75);

    let cost_of = |a: f64, x0: f64, w: f64| -> f64 {
        let mut cost = 0.0;
        for (l, &d) in data.iter().enumerate() {
            let r = a / ((l as f64 - x0) / w).cosh() - d;
            cost += r * r;
        }
        cost
    };

    let mut lambda = 1e-3;
    let mut cost = cost_of(amp, center, width);
    for _ in 0..80 {
        // accumulate normal equations J^T J and J^T r
        let mut jtj = [[0.0_f64; 3]; 3];
        let mut jtr = [0.0_f64; 3];
        for (l, &d) in data.iter().enumerate() {
            let u = (l as f64 - center) / width;
            let sech = 1.0 / u.cosh();
            let f = amp * sech;
            let r = f - d;
            let tanh = u.tanh();
            let grad = [sech, amp * sech * tanh / width, amp * sech * tanh * u / width];
            for a in 0..3 {
                jtr[a] += grad[a] * r;
                for b in 0..3 {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut lhs = jtj;
            for a in 0..3 {
                lhs[a][a] += lambda * jtj[a][a].max(1e-12);
            }
            let rhs = [-jtr[0], -jtr[1], -jtr[2]];
            let Some(step) = solve3(lhs, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial = (
                amp + step[0],
                center + step[1],
                (width + step[2]).max(0.05),
            );
            if !(trial.0.is_finite() && trial.1.is_finite() && trial.2.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let trial_cost = cost_of(trial.0, trial.1, trial.2);
            if trial_cost < cost {
                let rel_change = (cost - trial_cost) / cost.max(1e-300);
                amp = trial.0;
                center = trial.1;
                width = trial.2;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel_change < 1e-14 {
                    break;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    if !(amp.is_finite() && center.is_finite() && width.is_finite() && width > 0.0) {
        return Err(AnalysisError::FitDiverged);
    }
    Ok(SechFit {
        amplitude: amp,
        width,
        center,
        fit_error: (cost / data_norm_sq).sqrt(),
    })
}

/// Gaussian elimination with partial pivoting on a 3×3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
