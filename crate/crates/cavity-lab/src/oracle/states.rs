//! Product initial states: truncated Glauber coherent states for the cavity
//! modes and atomic (spin-) coherent states for the ensembles.
//!
//! The ensemble tilt is chosen so that `⟨S⁻⟩ = √N β` holds exactly, matching
//! the Holstein–Primakoff correspondence of the semiclassical ensemble
//! amplitude `β` at leading order.

use num_complex::Complex64;

use super::basis::QuantumBasis;
use super::evolve::QuantumState;
use super::OracleError;

/// Largest admissible probability weight dropped by the photon cutoff.
pub const TRUNCATION_WEIGHT_BOUND: f64 = 1e-8;

/// Alarm level for evolved population at the photon cutoff.
pub const CUTOFF_POPULATION_ALARM: f64 = 1e-6;

/// Tensor product of per-site truncated coherent states (photons) and
/// spin-coherent states (ensembles).
///
/// `cavity_amps[j]` is the coherent amplitude `α_j`; `ensemble_amps[j]` is
/// the semiclassical ensemble amplitude `β_j` reproduced through
/// `⟨S⁻_j⟩ = √N β_j`.  Fails when the photon cutoff truncates more than
/// [`TRUNCATION_WEIGHT_BOUND`] of any site's coherent weight, or when the
/// requested tilt exceeds the spin length (`|β|√N > N/2`).
pub fn coherent_spin_coherent_state(
    basis: &QuantumBasis,
    cavity_amps: &[Complex64],
    ensemble_amps: &[Complex64],
) -> Result<QuantumState, OracleError> {
    if cavity_amps.len() != basis.sites() || ensemble_amps.len() != basis.sites() {
        return Err(OracleError::Shape {
            expected: basis.sites(),
            got: cavity_amps.len().min(ensemble_amps.len()),
        });
    }

    let mut site_vectors: Vec<Vec<Complex64>> = Vec::with_capacity(basis.sites());
    for site in 0..basis.sites() {
        let photon = truncated_coherent(cavity_amps[site], basis.photon_cutoff())?;
        let spin = spin_coherent(ensemble_amps[site], basis.atoms())?;
        let spins = basis.atoms() + 1;
        let mut local = vec![Complex64::new(0.0, 0.0); basis.site_dim()];
        for (n, pn) in photon.iter().enumerate() {
            for (mi, sm) in spin.iter().enumerate() {
                local[n * spins + mi] = pn * sm;
            }
        }
        site_vectors.push(local);
    }

    let mut amplitudes = vec![Complex64::new(1.0, 0.0); basis.dim()];
    for (g, amp) in amplitudes.iter_mut().enumerate() {
        for (site, local_vec) in site_vectors.iter().enumerate() {
            *amp *= local_vec[basis.site_local(g, site)];
        }
    }
    Ok(QuantumState { amplitudes, time: 0.0 })
}

/// Truncated, renormalized Glauber coherent state `|α⟩` on `0..=cutoff`.
fn truncated_coherent(alpha: Complex64, cutoff: usize) -> Result<Vec<Complex64>, OracleError> {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..=cutoff {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let dropped = (1.0 - kept).max(0.0);
    if dropped > TRUNCATION_WEIGHT_BOUND {
        return Err(OracleError::TruncationWeight {
            weight: dropped,
            bound: TRUNCATION_WEIGHT_BOUND,
        });
    }
    let scale = kept.sqrt();
    Ok(amps.into_iter().map(|z| z / scale).collect())
}

/// Spin-coherent state of the collective spin `S = N/2` whose lowering
/// expectation matches `⟨S⁻⟩ = √N β`: amplitudes
/// `c_mi = √C(N, mi) ζ^mi / (1 + |ζ|²)^{N/2}` with
/// `ζ/(1 + |ζ|²) = β/√N`.
fn spin_coherent(beta: Complex64, atoms: usize) -> Result<Vec<Complex64>, OracleError> {
    let n = atoms as f64;
    let target = beta.norm() / n.sqrt(); // = |ζ|/(1+|ζ|²), max 1/2 at ζ = 1
    if target > 0.5 {
        return Err(OracleError::TiltTooLarge {
            requested: beta.norm() * n.sqrt(),
            max: n / 2.0,
        });
    }
    let zeta = if target == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let q = (1.0 - (1.0 - 4.0 * target * target).sqrt()) / (2.0 * target);
        Complex64::from_polar(q, beta.arg())
    };

    let mut amps = Vec::with_capacity(atoms + 1);
    let mut c = Complex64::new((1.0 + zeta.norm_sqr()).powf(-n / 2.0), 0.0);
    amps.push(c);
    for mi in 1..=atoms {
        // √C(N, mi) = √C(N, mi−1) · √((N − mi + 1)/mi)
        c = c * zeta * ((n - mi as f64 + 1.0) / mi as f64).sqrt();
        amps.push(c);
    }
    // analytic normalization is exact; renormalize to absorb rounding
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(amps.into_iter().map(|z| z / norm).collect())
}

/// Probability weight at the photon cutoff level (any site), the validity
/// monitor for evolved states.
pub fn cutoff_population(basis: &QuantumBasis, state: &QuantumState) -> f64 {
    let cutoff = basis.photon_cutoff();
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(g, _)| (0..basis.sites()).any(|s| basis.site_numbers(*g, s).0 == cutoff))
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::super::evolve::expectation;
    use super::super::ops::{dicke_lowering, photon_annihilation};
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_inputs_give_global_ground_state() {
        let basis = QuantumBasis::new(2, 3, 2).unwrap();
        let zeros = vec![c(0.0, 0.0); 2];
        let psi = coherent_spin_coherent_state(&basis, &zeros, &zeros).unwrap();
        assert!((psi.amplitudes[0].norm() - 1.0).abs() <= 1e-14);
        assert!((psi.norm() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn coherent_amplitude_reproduced() {
        let basis = QuantumBasis::new(1, 2, 12).unwrap();
        let alpha = c(0.4, 0.2);
        let psi =
            coherent_spin_coherent_state(&basis, &[alpha], &[c(0.0, 0.0)]).unwrap();
        let a_op = photon_annihilation(&basis, 0);
        let got = expectation(&a_op, &psi);
        assert!((got - alpha).norm() <= 1e-8, "{got} vs {alpha}");
    }

    #[test]
    fn lowering_expectation_matches_requested_tilt() {
        let basis = QuantumBasis::new(1, 6, 1).unwrap();
        let beta = c(0.3, -0.4);
        let psi = coherent_spin_coherent_state(&basis, &[c(0.0, 0.0)], &[beta]).unwrap();
        let sm = dicke_lowering(&basis, 0);
        let got = expectation(&sm, &psi);
        let want = 6f64.sqrt() * beta;
        assert!((got - want).norm() <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn holstein_primakoff_correspondence_scales_as_inverse_atom_number() {
        // ⟨S⁻⟩ (exact, = √N β by construction) differs from the square-root
        // form √N A(x) β by a relative x/2 = |β|²/2N = O(1/N).
        let beta = c(0.5, 0.0);
        for atoms in [4usize, 8, 16] {
            let basis = QuantumBasis::new(1, atoms, 1).unwrap();
            let psi = coherent_spin_coherent_state(&basis, &[c(0.0, 0.0)], &[beta]).unwrap();
            let sm = dicke_lowering(&basis, 0);
            let got = expectation(&sm, &psi);
            let n = atoms as f64;
            let x = beta.norm_sqr() / n;
            let hp = n.sqrt() * (1.0 - x).sqrt() * beta;
            let rel = (got - hp).norm() / (n.sqrt() * beta.norm());
            assert!(rel <= x, "N = {atoms}: relative deviation {rel} vs x = {x}");
            assert!(rel >= 0.2 * x, "N = {atoms}: deviation unexpectedly small");
        }
    }

    #[test]
    fn truncation_weight_enforced() {
        let basis = QuantumBasis::new(1, 1, 3).unwrap();
        assert!(matches!(
            coherent_spin_coherent_state(&basis, &[c(2.0, 0.0)], &[c(0.0, 0.0)]),
            Err(OracleError::TruncationWeight { .. })
        ));
    }

    #[test]
    fn overlarge_tilt_rejected() {
        let basis = QuantumBasis::new(1, 4, 1).unwrap();
        assert!(matches!(
            coherent_spin_coherent_state(&basis, &[c(0.0, 0.0)], &[c(1.5, 0.0)]),
            Err(OracleError::TiltTooLarge { .. })
        ));
    }

    #[test]
    fn cutoff_population_counts_saturated_states() {
        let basis = QuantumBasis::new(1, 1, 1).unwrap();
        let mut psi = QuantumState::ground(&basis);
        psi.amplitudes.fill(c(0.0, 0.0));
        psi.amplitudes[2] = c(1.0, 0.0); // n = 1 = cutoff, mi = 0
        assert!((cutoff_population(&basis, &psi) - 1.0).abs() <= 1e-14);
        let ground = QuantumState::ground(&basis);
        assert_eq!(cutoff_population(&basis, &ground), 0.0);
    }
}
