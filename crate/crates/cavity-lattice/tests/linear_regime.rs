//! Cross-module checks of the linear regime: measured plane-wave frequencies
//! against the lattice dispersion, Gaussian-packet spreading, and the
//! small-amplitude limit of the full nonlinear flow.

use core::f64::consts::TAU;

use cavity_lattice::analysis::{
    dispersion_discrete, measure_spectrum, packet_width, Branch,
};
use cavity_lattice::dynamics::{integrate, linearized_integrate, IntegratorConfig};
use cavity_lattice::initcond::{gaussian_packet, plane_wave};
use cavity_lattice::model::{LatticeState, ModelParams};
use cavity_lattice::Complex64;

fn ring_wavenumber(params: &ModelParams, mode: usize) -> f64 {
    TAU * mode as f64 / (params.sites as f64 * params.spacing)
}

#[test]
fn plane_wave_rotates_at_discrete_branch_frequency() {
    let params = ModelParams::new(16, 10, 1.0, 1.0).unwrap();
    let k = ring_wavenumber(&params, 2); // kd ≈ 0.785
    let state = plane_wave(k, 0.2, Branch::Optical, &params).unwrap();
    let config = IntegratorConfig::rk4(4e-3, 60.0).with_stride(100);
    let traj = linearized_integrate(&state, &params, &config).unwrap();

    // modulus stays constant on an eigenmode
    for s in &traj.states {
        for z in &s.cavity {
            assert!((z.norm() - 0.2).abs() <= 1e-6);
        }
    }

    let spectrum = measure_spectrum(&traj, 3).unwrap();
    let expected = dispersion_discrete(k, &params, Branch::Optical).omega;
    let measured = spectrum.peaks[0].omega;
    assert!(
        (measured - expected).abs() <= 1e-3 * expected.abs(),
        "measured {measured}, dispersion {expected}"
    );
}

#[test]
fn cavity_only_excitation_shows_both_branches() {
    let params = ModelParams::new(16, 10, 1.0, 1.0).unwrap();
    let k = ring_wavenumber(&params, 3);
    // seed only the cavity field: the state overlaps both eigenmodes
    let mut state = LatticeState::zero(params.sites);
    for l in 0..params.sites {
        state.cavity[l] = 0.1 * Complex64::from_polar(1.0, k * l as f64);
    }
    let config = IntegratorConfig::rk4(4e-3, 80.0).with_stride(100);
    let traj = linearized_integrate(&state, &params, &config).unwrap();
    let spectrum = measure_spectrum(&traj, 0).unwrap();

    let plus = dispersion_discrete(k, &params, Branch::Optical).omega;
    let minus = dispersion_discrete(k, &params, Branch::Acoustic).omega;
    let got_plus = spectrum
        .peaks
        .iter()
        .filter(|p| p.omega > 0.0)
        .max_by(|a, b| a.power.partial_cmp(&b.power).unwrap())
        .expect("optical peak");
    let got_minus = spectrum
        .peaks
        .iter()
        .filter(|p| p.omega < 0.0)
        .max_by(|a, b| a.power.partial_cmp(&b.power).unwrap())
        .expect("acoustic peak");
    assert!((got_plus.omega - plus).abs() <= 1e-3 * plus.abs());
    assert!((got_minus.omega - minus).abs() <= 1e-3 * minus.abs());
}

#[test]
fn gaussian_packet_spreads_monotonically_under_linear_flow() {
    let params = ModelParams::new(128, 10, 1.0, 1.0).unwrap();
    let state = gaussian_packet(0.3, 0.01, 6.0, 63.0, &params, Branch::Optical).unwrap();
    let config = IntegratorConfig::rk4(4e-3, 60.0).with_stride(500);
    let traj = linearized_integrate(&state, &params, &config).unwrap();

    let widths: Vec<f64> = traj
        .states
        .iter()
        .map(|s| packet_width(s).unwrap())
        .collect();
    for w in widths.windows(2) {
        assert!(w[1] >= w[0] - 1e-3, "width sequence not monotone: {w:?}");
    }
    assert!(
        widths.last().unwrap() / widths[0] > 1.2,
        "no visible spreading: {} -> {}",
        widths[0],
        widths.last().unwrap()
    );
}

#[test]
fn vanishing_amplitude_reproduces_linearized_dynamics() {
    let params = ModelParams::new(64, 10, 1.0, 1.0).unwrap();
    let amplitude = 1e-4;
    let state = gaussian_packet(0.4, amplitude, 5.0, 31.0, &params, Branch::Optical).unwrap();
    let config = IntegratorConfig::rk4(4e-3, 10.0).with_stride(usize::MAX);
    let nonlinear = integrate(&state, &params, &config).unwrap();
    let linear = linearized_integrate(&state, &params, &config).unwrap();
    let mut max_dev = 0.0_f64;
    for l in 0..params.sites {
        max_dev = max_dev.max((nonlinear.last().cavity[l] - linear.last().cavity[l]).norm());
        max_dev = max_dev.max((nonlinear.last().ensemble[l] - linear.last().ensemble[l]).norm());
    }
    assert!(
        max_dev <= 1e-6 * amplitude,
        "nonlinear correction too large: {max_dev:.3e}"
    );
}
