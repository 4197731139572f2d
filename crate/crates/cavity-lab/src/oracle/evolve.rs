//! Schrödinger propagation `ψ(t) = exp(−iHt) ψ(0)`.
//!
//! The reference path is a dense Hermitian eigendecomposition, reused across
//! evaluation times; beyond [`DENSE_DIM_LIMIT`] a Lanczos (Krylov) stepper
//! with full reorthogonalization takes over.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::basis::QuantumBasis;
use super::ops::SparseOp;
use super::OracleError;

/// Largest dimension for which the dense eigendecomposition path is used.
pub const DENSE_DIM_LIMIT: usize = 2000;

const NORM_TOLERANCE: f64 = 1e-10;
const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-11;

/// Amplitude vector over the product basis.
#[derive(Debug, Clone)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl QuantumState {
    pub fn ground(basis: &QuantumBasis) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        QuantumState { amplitudes, time: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// Expectation value `⟨ψ|O|ψ⟩`.
pub fn expectation(op: &SparseOp, state: &QuantumState) -> Complex64 {
    assert_eq!(op.dim(), state.dim(), "operator and state dimensions differ");
    let applied = op.apply_vec(&state.amplitudes);
    state
        .amplitudes
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// Dense eigendecomposition of a Hermitian operator, cached for repeated
/// evaluation times.
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(h: &SparseOp) -> Self {
        let eig = h.to_dense().symmetric_eigen();
        Propagator {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    /// `exp(−iH·(t − ψ.time)) ψ`.
    pub fn at(&self, state: &QuantumState, t: f64) -> QuantumState {
        let span = t - state.time;
        let psi = DVector::from_column_slice(&state.amplitudes);
        let coeffs = self.eigenvectors.adjoint() * psi;
        let rotated = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(c, e)| c * Complex64::from_polar(1.0, -e * span)),
        );
        let out = &self.eigenvectors * rotated;
        QuantumState {
            amplitudes: out.iter().cloned().collect(),
            time: t,
        }
    }
}

/// Propagate by `t` using the path appropriate for the dimension and verify
/// norm preservation to 1e-10.
pub fn evolve_quantum(state: &QuantumState, h: &SparseOp, t: f64) -> Result<QuantumState, OracleError> {
    let norm0 = state.norm();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(OracleError::NormViolation { norm: norm0 });
    }
    let out = if state.dim() <= DENSE_DIM_LIMIT {
        Propagator::new(h).at(state, state.time + t)
    } else {
        evolve_krylov(state, h, t, KRYLOV_TOL)?
    };
    let norm = out.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(OracleError::NormViolation { norm });
    }
    Ok(out)
}

/// Lanczos short-step propagation with full reorthogonalization and an
/// adaptive substep controlled by the a-posteriori error estimate.
pub fn evolve_krylov(
    state: &QuantumState,
    h: &SparseOp,
    t: f64,
    tol: f64,
) -> Result<QuantumState, OracleError> {
    assert_eq!(h.dim(), state.dim(), "operator and state dimensions differ");
    let mut psi = state.amplitudes.clone();
    let mut remaining = t;
    let direction = if t < 0.0 { -1.0 } else { 1.0 };
    let mut sub = t.abs().min(estimate_substep(h));
    let mut guard = 0usize;

    while remaining.abs() > 1e-14 * t.abs().max(1.0) {
        let step = direction * sub.min(remaining.abs());
        match lanczos_apply(h, &psi, step, tol) {
            Some(next) => {
                psi = next;
                remaining -= step;
                sub *= 1.3;
            }
            None => {
                sub *= 0.5;
                if sub < 1e-12 {
                    return Err(OracleError::NormViolation { norm: f64::NAN });
                }
            }
        }
        guard += 1;
        if guard > 10_000_000 {
            return Err(OracleError::NormViolation { norm: f64::NAN });
        }
    }
    Ok(QuantumState {
        amplitudes: psi,
        time: state.time + t,
    })
}

fn estimate_substep(h: &SparseOp) -> f64 {
    // Gershgorin-style bound keeps the first Lanczos step well conditioned.
    let scale = h.max_abs().max(1e-12);
    1.0 / scale
}

/// One Krylov application `exp(−iH·step)ψ`; `None` when the error estimate
/// exceeds `tol` (caller halves the substep).
fn lanczos_apply(h: &SparseOp, psi: &[Complex64], step: f64, tol: f64) -> Option<Vec<Complex64>> {
    let dim = psi.len();
    let norm0 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return Some(psi.to_vec());
    }

    let m_max = KRYLOV_DIM.min(dim);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max);
    let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
    let mut betas: Vec<f64> = Vec::with_capacity(m_max);

    basis.push(psi.iter().map(|z| z / norm0).collect());
    let mut happy = false;

    for j in 0..m_max {
        let mut w = h.apply_vec(&basis[j]);
        let alpha = basis[j]
            .iter()
            .zip(&w)
            .map(|(v, x)| (v.conj() * x).re)
            .sum::<f64>();
        alphas.push(alpha);
        // full reorthogonalization (subspace is small)
        for v in &basis {
            let overlap: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= overlap * vi;
            }
        }
        let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if beta < 1e-12 {
            happy = true;
            break;
        }
        if j + 1 < m_max {
            betas.push(beta);
            basis.push(w.iter().map(|z| z / beta).collect());
        } else {
            betas.push(beta);
        }
    }

    let m = alphas.len();
    let mut tri = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tri[(i, i)] = alphas[i];
        if i + 1 < m {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let eig = tri.symmetric_eigen();
    // y = Q exp(−i step Λ) Qᵀ e₁
    let q_row0: Vec<f64> = (0..m).map(|c| eig.eigenvectors[(0, c)]).collect();
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[c] * step);
        let w = q_row0[c];
        for r in 0..m {
            y[r] += eig.eigenvectors[(r, c)] * phase * w;
        }
    }

    if !happy && m == m_max {
        let err = betas.last().copied().unwrap_or(0.0) * y[m - 1].norm() * step.abs();
        if err > tol {
            return None;
        }
    }

    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (j, v) in basis.iter().enumerate() {
        let coeff = y[j] * norm0;
        for (o, vi) in out.iter_mut().zip(v) {
            *o += coeff * vi;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::ops::{build_hamiltonian, photon_number, SparseOp};
    use cavity_lattice::model::ModelParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_time_is_identity() {
        let basis = QuantumBasis::new(1, 1, 1).unwrap();
        let params = ModelParams::new(1, 1, 0.0, 1.0).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let psi = QuantumState::ground(&basis);
        let out = evolve_quantum(&psi, &h, 0.0).unwrap();
        for (a, b) in psi.amplitudes.iter().zip(&out.amplitudes) {
            assert!((a - b).norm() <= 1e-14);
        }
    }

    #[test]
    fn diagonal_hamiltonian_rotates_phases() {
        let mut h = SparseOp::zeros(3);
        for (i, e) in [0.5, -1.0, 2.0].iter().enumerate() {
            h.add_entry(i, i, c(*e, 0.0));
        }
        let amp = 1.0 / 3f64.sqrt();
        let psi = QuantumState {
            amplitudes: vec![c(amp, 0.0); 3],
            time: 0.0,
        };
        let t = 0.7;
        let out = evolve_quantum(&psi, &h, t).unwrap();
        for (i, e) in [0.5, -1.0, 2.0].iter().enumerate() {
            let want = c(amp, 0.0) * Complex64::from_polar(1.0, -e * t);
            assert!((out.amplitudes[i] - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        // M = 1, N = 1, one photon, atom in the ground state:
        // P_photon(t) = cos²(Ωt).
        let omega = 1.3;
        let basis = QuantumBasis::new(1, 1, 1).unwrap();
        let params = ModelParams::new(1, 1, 0.0, omega).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let mut psi = QuantumState::ground(&basis);
        psi.amplitudes.fill(c(0.0, 0.0));
        // local index = n(N+1) + mi with n = 1, mi = 0
        psi.amplitudes[2] = c(1.0, 0.0);
        let n_op = photon_number(&basis, 0);
        for &t in &[0.0, 0.3, 0.9, 2.2] {
            let out = evolve_quantum(&psi, &h, t).unwrap();
            let p = expectation(&n_op, &out).re;
            let want = (omega * t).cos().powi(2);
            assert!((p - want).abs() <= 1e-9, "t = {t}: {p} vs {want}");
        }
    }

    #[test]
    fn energy_conserved_under_evolution() {
        let basis = QuantumBasis::new(2, 2, 2).unwrap();
        let params = ModelParams::new(2, 2, 0.4, 0.9).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let mut psi = QuantumState::ground(&basis);
        // spread over a few basis states
        psi.amplitudes[0] = c(0.6, 0.0);
        psi.amplitudes[4] = c(0.0, 0.64);
        psi.amplitudes[10] = c(0.48, 0.0);
        let n = psi.norm();
        for a in psi.amplitudes.iter_mut() {
            *a /= n;
        }
        let e0 = expectation(&h, &psi).re;
        let out = evolve_quantum(&psi, &h, 3.7).unwrap();
        let e1 = expectation(&h, &out).re;
        assert!((e1 - e0).abs() <= 1e-8 * e0.abs().max(1.0));
        assert!((out.norm() - 1.0).abs() <= 1e-10);
        // photon number stays non-negative
        assert!(expectation(&photon_number(&basis, 0), &out).re >= -1e-12);
    }

    #[test]
    fn krylov_matches_dense_path() {
        let basis = QuantumBasis::new(2, 2, 2).unwrap();
        let params = ModelParams::new(2, 2, 0.8, 1.2).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let mut psi = QuantumState::ground(&basis);
        psi.amplitudes[1] = c(0.3, -0.2);
        psi.amplitudes[7] = c(-0.1, 0.45);
        let n = psi.norm();
        for a in psi.amplitudes.iter_mut() {
            *a /= n;
        }
        let t = 2.9;
        let dense = Propagator::new(&h).at(&psi, t);
        let krylov = evolve_krylov(&psi, &h, t, 1e-12).unwrap();
        let mut dev = 0.0_f64;
        for (a, b) in dense.amplitudes.iter().zip(&krylov.amplitudes) {
            dev = dev.max((a - b).norm());
        }
        assert!(dev <= 1e-9, "krylov deviates from dense by {dev:.3e}");
    }

    #[test]
    fn non_normalized_states_rejected() {
        let basis = QuantumBasis::new(1, 1, 1).unwrap();
        let params = ModelParams::new(1, 1, 0.0, 1.0).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let psi = QuantumState {
            amplitudes: vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            time: 0.0,
        };
        assert!(matches!(
            evolve_quantum(&psi, &h, 1.0),
            Err(OracleError::NormViolation { .. })
        ));
    }
}
