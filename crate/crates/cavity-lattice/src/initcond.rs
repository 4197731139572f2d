//! Builders translating analytic objects (plane waves, Gaussian packets,
//! envelope solitons) into [`LatticeState`]s, including the branch-consistent
//! ensemble field.
//!
//! For a monochromatic carrier the linearized equations tie the ensemble
//! amplitude to the cavity amplitude through the eigenvector ratio
//! `e/c = Ω√N / ω̃_branch(k)`; every builder seeds the ensemble that way, so
//! the constructed states are (to leading order) single-branch excitations.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Float;

use crate::analysis::{dispersion_continuous, dispersion_discrete, AnalysisError, Branch, SolitonSpec};
use crate::dynamics::DEFAULT_HP_GUARD;
use crate::model::{LatticeState, ModelError, ModelParams};

/// Continuum-limit validity floor for envelope widths.
pub const MIN_SOLITON_WIDTH_SPACINGS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub enum InitError {
    /// The selected branch frequency vanishes at this wavenumber.
    SingularBranchFrequency { k: f64 },
    /// Plane waves need a positive amplitude.
    NonPositiveAmplitude(f64),
    /// Envelope narrower than the continuum-limit floor.
    WidthTooNarrow { width: f64, min: f64 },
    /// The constructed ensemble field would leave the Holstein–Primakoff
    /// validity region.
    HpGuardViolation { occupation: f64, guard: f64 },
    /// States to combine have different lengths or times.
    Incompatible,
    Model(ModelError),
    Analysis(AnalysisError),
}

impl fmt::Display for InitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitError::SingularBranchFrequency { k } => {
                write!(f, "branch frequency vanishes at k = {k}")
            }
            InitError::NonPositiveAmplitude(a) => write!(f, "amplitude {a} must be > 0"),
            InitError::WidthTooNarrow { width, min } => {
                write!(f, "envelope width {width} below continuum floor {min}")
            }
            InitError::HpGuardViolation { occupation, guard } => write!(
                f,
                "constructed state violates the Holstein-Primakoff guard: {occupation} > {guard}"
            ),
            InitError::Incompatible => write!(f, "states have incompatible shapes or times"),
            InitError::Model(e) => write!(f, "{e}"),
            InitError::Analysis(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for InitError {}

impl From<ModelError> for InitError {
    fn from(e: ModelError) -> Self {
        InitError::Model(e)
    }
}

impl From<AnalysisError> for InitError {
    fn from(e: AnalysisError) -> Self {
        InitError::Analysis(e)
    }
}

/// Linear eigenvector ratio `e/c = Ω√N / ω̃_branch(k)` of the lattice modes.
/// Zero when the coupling vanishes (pure photonic wave).
fn branch_ratio(k: f64, branch: Branch, params: &ModelParams) -> Result<f64, InitError> {
    let g = params.collective_coupling();
    if g == 0.0 {
        return Ok(0.0);
    }
    let omega = dispersion_discrete(k, params, branch).omega;
    if omega == 0.0 {
        return Err(InitError::SingularBranchFrequency { k });
    }
    Ok(g / omega)
}

/// Plane wave `c_l = A exp(i k l d)` with the ensemble seeded on the chosen
/// branch eigenvector; an eigenmode of the linearized dynamics.
pub fn plane_wave(
    k: f64,
    amplitude: f64,
    branch: Branch,
    params: &ModelParams,
) -> Result<LatticeState, InitError> {
    params.validate()?;
    if !(amplitude > 0.0) {
        return Err(InitError::NonPositiveAmplitude(amplitude));
    }
    let ratio = branch_ratio(k, branch, params)?;
    let mut state = LatticeState::zero(params.sites);
    for l in 0..params.sites {
        let c = amplitude * Complex64::from_polar(1.0, k * params.spacing * l as f64);
        state.cavity[l] = c;
        state.ensemble[l] = ratio * c;
    }
    Ok(state)
}

/// Bright-soliton launch state.
///
/// The physical envelope has amplitude `A = √(2c₁/c₂) / w`; the scale
/// parameters `η` and `μ` of the scaled solution cancel in physical units, so
/// `A·w = √(2c₁/c₂)` holds for every constructed state.  The cavity field is
///
/// ```text
/// c_l = A sech((l d − x_c)/w) · exp(i k l d) · exp(i[σ(l d − x_c) + φ₀])
/// ```
///
/// and the ensemble rides the optical-branch eigenvector at the continuum
/// carrier frequency `ω₊(k)`.  `center` and `width` are in length units.
pub fn soliton_state(
    spec: &SolitonSpec,
    params: &ModelParams,
    center: f64,
    width: f64,
) -> Result<LatticeState, InitError> {
    params.validate()?;
    let min_width = MIN_SOLITON_WIDTH_SPACINGS * params.spacing;
    if !(width >= min_width) {
        return Err(InitError::WidthTooNarrow { width, min: min_width });
    }
    let k = spec.coeffs.k;
    let omega = dispersion_continuous(k, params, Branch::Optical).omega;
    if omega == 0.0 {
        return Err(InitError::SingularBranchFrequency { k });
    }
    let ratio = params.collective_coupling() / omega;
    let amplitude = (2.0 * spec.coeffs.c1 / spec.coeffs.c2).sqrt() / width;

    let mut state = LatticeState::zero(params.sites);
    for l in 0..params.sites {
        let x = params.spacing * l as f64;
        let envelope = amplitude / ((x - center) / width).cosh();
        let phase = k * x + spec.sigma * (x - center) + spec.phi0;
        let c = envelope * Complex64::from_polar(1.0, phase);
        state.cavity[l] = c;
        state.ensemble[l] = ratio * c;
    }
    let occupation = state.max_hp_occupation(params.atoms);
    if occupation > DEFAULT_HP_GUARD {
        return Err(InitError::HpGuardViolation {
            occupation,
            guard: DEFAULT_HP_GUARD,
        });
    }
    Ok(state)
}

/// Gaussian packet `c_l = A exp(−(l d − x_c)²/2σ²) exp(i k l d)` with the
/// ensemble on the chosen branch; the control experiment for linear
/// spreading.  `center` and `width` (`σ`) are in length units.
pub fn gaussian_packet(
    k: f64,
    amplitude: f64,
    width: f64,
    center: f64,
    params: &ModelParams,
    branch: Branch,
) -> Result<LatticeState, InitError> {
    params.validate()?;
    let ratio = branch_ratio(k, branch, params)?;
    let mut state = LatticeState::zero(params.sites);
    for l in 0..params.sites {
        let x = params.spacing * l as f64;
        let u = (x - center) / width;
        let c = amplitude * (-0.5 * u * u).exp() * Complex64::from_polar(1.0, k * x);
        state.cavity[l] = c;
        state.ensemble[l] = ratio * c;
    }
    Ok(state)
}

/// Pointwise sum of two states (soliton pairs for collision runs).
pub fn superpose(a: &LatticeState, b: &LatticeState) -> Result<LatticeState, InitError> {
    if a.sites() != b.sites() || a.time != b.time {
        return Err(InitError::Incompatible);
    }
    let cavity: Vec<Complex64> = a.cavity.iter().zip(&b.cavity).map(|(x, y)| x + y).collect();
    let ensemble: Vec<Complex64> = a.ensemble.iter().zip(&b.ensemble).map(|(x, y)| x + y).collect();
    Ok(LatticeState {
        time: a.time,
        cavity,
        ensemble,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_sech, nls_coefficients};
    use crate::dynamics::{linearized_integrate, IntegratorConfig};
    use crate::model::total_norm;

    #[test]
    fn plane_wave_without_coupling_is_purely_photonic() {
        let params = ModelParams::new(16, 10, 1.0, 0.0).unwrap();
        let state = plane_wave(0.5, 0.3, Branch::Optical, &params).unwrap();
        assert!(state.ensemble.iter().all(|e| e.norm() == 0.0));
        assert!((state.cavity[3].norm() - 0.3).abs() <= 1e-14);
    }

    #[test]
    fn plane_wave_branch_ratio_reference_value() {
        // k = 0, J = 1, Ω = 1, N = 10: e/c = √10/(√11 − 1) = (√110 + √10)/10.
        let params = ModelParams::new(8, 10, 1.0, 1.0).unwrap();
        let state = plane_wave(0.0, 1.0, Branch::Optical, &params).unwrap();
        let ratio = (state.ensemble[0] / state.cavity[0]).re;
        let independent = (110f64.sqrt() + 10f64.sqrt()) / 10.0;
        assert!((ratio - independent).abs() <= 1e-12, "{ratio} vs {independent}");
        assert!((ratio - 1.36503662).abs() <= 1e-7);
    }

    #[test]
    fn plane_wave_rejects_bad_inputs() {
        let params = ModelParams::new(8, 10, 1.0, 1.0).unwrap();
        assert!(matches!(
            plane_wave(0.0, 0.0, Branch::Optical, &params),
            Err(InitError::NonPositiveAmplitude(_))
        ));
        // Ω = 0 decouples the ensemble entirely: the ratio vanishes for every
        // branch and wavenumber, even where the branch frequency is zero.
        let free = ModelParams::new(8, 10, 1.0, 0.0).unwrap();
        let state = plane_wave(core::f64::consts::FRAC_PI_2, 1.0, Branch::Acoustic, &free).unwrap();
        assert!(state.ensemble.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn plane_wave_is_linear_eigenmode() {
        // Commensurate wave on the ring keeps constant modulus under the
        // linearized dynamics.
        let m = 16;
        let params = ModelParams::new(m, 10, 1.0, 1.0).unwrap();
        let k = core::f64::consts::TAU * 2.0 / m as f64;
        let state = plane_wave(k, 0.2, Branch::Optical, &params).unwrap();
        let config = IntegratorConfig::rk4(2e-3, 10.0).with_stride(250);
        let traj = linearized_integrate(&state, &params, &config).unwrap();
        for s in &traj.states {
            for l in 0..m {
                assert!((s.cavity[l].norm() - 0.2).abs() <= 1e-6, "t = {}", s.time);
            }
        }
    }

    #[test]
    fn soliton_amplitude_width_product_is_pinned() {
        let params = ModelParams::new(128, 10, 1.0, 10.0).unwrap();
        let coeffs = nls_coefficients(0.3, &params).unwrap();
        let spec = SolitonSpec::fundamental(coeffs);
        for &w in &[6.0, 8.0, 14.0, 40.0] {
            let state = soliton_state(&spec, &params, 64.0, w).unwrap();
            let peak = state.cavity.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let product = peak * w;
            let want = (2.0 * coeffs.c1 / coeffs.c2).sqrt();
            // peak sits on-site only up to discretization; allow that error
            assert!((product - want).abs() <= 1e-2 * want, "w = {w}");
        }
        // amplitude tends to zero as the width grows
        let wide = soliton_state(&spec, &params, 64.0, 1e6).unwrap();
        assert!(wide.cavity.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-6);
    }

    #[test]
    fn soliton_fit_roundtrip() {
        let params = ModelParams::new(256, 10, 1.0, 10.0).unwrap();
        let coeffs = nls_coefficients(0.3, &params).unwrap();
        let spec = SolitonSpec::fundamental(coeffs);
        let state = soliton_state(&spec, &params, 128.0, 8.0).unwrap();
        let fit = fit_sech(&state, 0.3, 1.0).unwrap();
        let amplitude = (2.0 * coeffs.c1 / coeffs.c2).sqrt() / 8.0;
        assert!((fit.amplitude - amplitude).abs() <= 0.01 * amplitude);
        assert!((fit.width - 8.0).abs() <= 0.08);
        assert!((fit.center - 128.0).abs() <= 0.1);
    }

    #[test]
    fn soliton_guards() {
        let params = ModelParams::new(64, 10, 1.0, 10.0).unwrap();
        let coeffs = nls_coefficients(0.3, &params).unwrap();
        let spec = SolitonSpec::fundamental(coeffs);
        assert!(matches!(
            soliton_state(&spec, &params, 32.0, 3.0),
            Err(InitError::WidthTooNarrow { .. })
        ));
        // One atom per site makes |e|²/N large at soliton amplitude.
        let tiny = ModelParams::new(64, 1, 1.0, 10.0).unwrap();
        let coeffs = nls_coefficients(0.3, &tiny).unwrap();
        let spec = SolitonSpec::fundamental(coeffs);
        match soliton_state(&spec, &tiny, 32.0, 5.0) {
            Err(InitError::HpGuardViolation { .. }) | Ok(_) => {
                // whether the guard trips depends on the coefficient ratio;
                // make sure a clearly over-amplified spec does trip
                let mut hot = spec;
                hot.coeffs.c1 *= 400.0;
                assert!(matches!(
                    soliton_state(&hot, &tiny, 32.0, 5.0),
                    Err(InitError::HpGuardViolation { .. })
                ));
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn two_soliton_norm_is_additive_when_separated() {
        let params = ModelParams::new(256, 10, 1.0, 10.0).unwrap();
        let coeffs = nls_coefficients(0.3, &params).unwrap();
        let spec = SolitonSpec::fundamental(coeffs);
        let w = 8.0;
        let a = soliton_state(&spec, &params, 128.0 - 5.0 * w, w).unwrap();
        let b = soliton_state(&spec, &params, 128.0 + 5.0 * w, w).unwrap();
        let pair = superpose(&a, &b).unwrap();
        let sum = total_norm(&a) + total_norm(&b);
        let got = total_norm(&pair);
        assert!((got - sum).abs() <= 5e-3 * sum, "{got} vs {sum}");
    }

    #[test]
    fn gaussian_packet_moments() {
        let params = ModelParams::new(128, 10, 1.0, 10.0).unwrap();
        let state = gaussian_packet(0.3, 0.01, 9.0, 63.0, &params, Branch::Optical).unwrap();
        let center = crate::analysis::packet_center(&state).unwrap();
        assert!((center - 63.0).abs() <= 1e-6);
        let width = crate::analysis::packet_width(&state).unwrap();
        // |c|² has standard deviation σ/√2 for field std σ
        assert!((width - 9.0 / 2f64.sqrt()).abs() <= 0.05, "width {width}");
    }

    #[test]
    fn superpose_requires_matching_shapes() {
        let a = LatticeState::zero(8);
        let b = LatticeState::zero(9);
        assert!(matches!(superpose(&a, &b), Err(InitError::Incompatible)));
    }
}
