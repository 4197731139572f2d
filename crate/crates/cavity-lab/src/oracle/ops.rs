//! Sparse operators on the product basis: photon ladder operators, collective
//! spin operators with exact spin-S matrix elements, and the array
//! Hamiltonian
//!
//! ```text
//! H = Σ_bonds −J (a_j a†_{j+1} + a†_j a_{j+1}) + Σ_j Ω (a†_j S⁻_j + a_j S⁺_j)
//! ```
//!
//! Photon creation past the cutoff simply drops the matrix element, which
//! keeps every conjugate pair exactly Hermitian.

use nalgebra::DMatrix;
use num_complex::Complex64;

use cavity_lattice::model::{Boundary, ModelParams};

use super::basis::QuantumBasis;
use super::OracleError;

/// Column-major sparse matrix on the quantum basis.
#[derive(Debug, Clone)]
pub struct SparseOp {
    dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        SparseOp {
            dim,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = SparseOp::zeros(dim);
        for c in 0..dim {
            op.cols[c].push((c, Complex64::new(1.0, 0.0)));
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry_count(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    /// Accumulate `value` at `(row, col)`, merging with an existing entry.
    pub fn add_entry(&mut self, row: usize, col: usize, value: Complex64) {
        if value == Complex64::new(0.0, 0.0) {
            return;
        }
        let column = &mut self.cols[col];
        if let Some(e) = column.iter_mut().find(|(r, _)| *r == row) {
            e.1 += value;
        } else {
            column.push((row, value));
        }
    }

    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (c, column) in self.cols.iter().enumerate() {
            let xc = x[c];
            if xc == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, v) in column {
                out[r] += v * xc;
            }
        }
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut out);
        out
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        for column in &mut self.cols {
            for e in column {
                e.1 *= s;
            }
        }
        self
    }

    pub fn add(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (c, column) in other.cols.iter().enumerate() {
            for &(r, v) in column {
                out.add_entry(r, c, v);
            }
        }
        out
    }

    pub fn sub(&self, other: &SparseOp) -> SparseOp {
        self.add(&other.clone().scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim);
        let mut out = SparseOp::zeros(self.dim);
        for (c, column) in other.cols.iter().enumerate() {
            for &(mid, v1) in column {
                for &(r, v2) in &self.cols[mid] {
                    out.add_entry(r, c, v2 * v1);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> SparseOp {
        let mut out = SparseOp::zeros(self.dim);
        for (c, column) in self.cols.iter().enumerate() {
            for &(r, v) in column {
                out.add_entry(c, r, v.conj());
            }
        }
        out
    }

    pub fn commutator(&self, other: &SparseOp) -> SparseOp {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.cols
            .iter()
            .flatten()
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation `|A[r,c] − conj(A[c,r])|` from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (c, column) in self.cols.iter().enumerate() {
            for &(r, v) in column {
                m[(r, c)] += v;
            }
        }
        m
    }
}

/// Exact spin-S ladder matrix element `⟨S, m±1|S±|S, m⟩ = √(S(S+1) − m(m±1))`
/// for the collective spin `S = N/2`.  Annihilating past the edge gives 0;
/// a projection outside `|m| ≤ S` is an error.
pub fn dicke_ladder_element(atoms: usize, m: f64, raise: bool) -> Result<f64, OracleError> {
    let spin = atoms as f64 / 2.0;
    if m.abs() > spin + 1e-9 {
        return Err(OracleError::LadderRange { m, spin });
    }
    let target = if raise { m + 1.0 } else { m - 1.0 };
    if target.abs() > spin + 1e-9 {
        return Ok(0.0);
    }
    Ok((spin * (spin + 1.0) - m * target).sqrt())
}

/// Lift a site-local operator (triplet list on the site dimension) to the
/// full product space.
fn lift_site_op(basis: &QuantumBasis, site: usize, local: &[(usize, usize, f64)]) -> SparseOp {
    let mut op = SparseOp::zeros(basis.dim());
    for g in 0..basis.dim() {
        let sl = basis.site_local(g, site);
        for &(r, c, v) in local {
            if c == sl {
                let row = basis.replace_site_local(g, site, r);
                op.add_entry(row, g, Complex64::new(v, 0.0));
            }
        }
    }
    op
}

fn local_photon_annihilation(basis: &QuantumBasis) -> Vec<(usize, usize, f64)> {
    let spins = basis.atoms() + 1;
    let mut t = Vec::new();
    for n in 1..=basis.photon_cutoff() {
        for mi in 0..spins {
            t.push(((n - 1) * spins + mi, n * spins + mi, (n as f64).sqrt()));
        }
    }
    t
}

fn local_dicke_lowering(basis: &QuantumBasis) -> Vec<(usize, usize, f64)> {
    let atoms = basis.atoms();
    let spins = atoms + 1;
    let spin = atoms as f64 / 2.0;
    let mut t = Vec::new();
    for n in 0..=basis.photon_cutoff() {
        for mi in 1..spins {
            let m = mi as f64 - spin;
            let coeff = dicke_ladder_element(atoms, m, false).expect("in-range projection");
            t.push((n * spins + (mi - 1), n * spins + mi, coeff));
        }
    }
    t
}

fn transpose_triplets(t: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    t.iter().map(|&(r, c, v)| (c, r, v)).collect()
}

/// Photon annihilation operator at `site`.
pub fn photon_annihilation(basis: &QuantumBasis, site: usize) -> SparseOp {
    lift_site_op(basis, site, &local_photon_annihilation(basis))
}

/// Photon creation operator at `site` (truncated at the cutoff).
pub fn photon_creation(basis: &QuantumBasis, site: usize) -> SparseOp {
    lift_site_op(basis, site, &transpose_triplets(&local_photon_annihilation(basis)))
}

/// Photon number operator at `site`.
pub fn photon_number(basis: &QuantumBasis, site: usize) -> SparseOp {
    let spins = basis.atoms() + 1;
    let mut t = Vec::new();
    for n in 0..=basis.photon_cutoff() {
        for mi in 0..spins {
            t.push((n * spins + mi, n * spins + mi, n as f64));
        }
    }
    lift_site_op(basis, site, &t)
}

/// Collective lowering operator `S⁻` at `site`.
pub fn dicke_lowering(basis: &QuantumBasis, site: usize) -> SparseOp {
    lift_site_op(basis, site, &local_dicke_lowering(basis))
}

/// Collective raising operator `S⁺` at `site`.
pub fn dicke_raising(basis: &QuantumBasis, site: usize) -> SparseOp {
    lift_site_op(basis, site, &transpose_triplets(&local_dicke_lowering(basis)))
}

/// Collective projection operator `Sᶻ` at `site`.
pub fn dicke_z(basis: &QuantumBasis, site: usize) -> SparseOp {
    let atoms = basis.atoms();
    let spins = atoms + 1;
    let spin = atoms as f64 / 2.0;
    let mut t = Vec::new();
    for n in 0..=basis.photon_cutoff() {
        for mi in 0..spins {
            t.push((n * spins + mi, n * spins + mi, mi as f64 - spin));
        }
    }
    lift_site_op(basis, site, &t)
}

/// Total excitation `Σ_j (a†_j a_j + Sᶻ_j + N/2)`; commutes with the
/// Hamiltonian, the quantum counterpart of the semiclassical norm.
pub fn total_excitation(basis: &QuantumBasis) -> SparseOp {
    let mut op = SparseOp::zeros(basis.dim());
    let half_n = basis.atoms() as f64 / 2.0;
    for site in 0..basis.sites() {
        op = op.add(&photon_number(basis, site));
        op = op.add(&dicke_z(basis, site));
    }
    let shift =
        SparseOp::identity(basis.dim()).scaled(Complex64::new(basis.sites() as f64 * half_n, 0.0));
    op.add(&shift)
}

/// Assemble the array Hamiltonian on the product basis with the model's
/// boundary rule.  The result is exactly Hermitian by construction.
pub fn build_hamiltonian(params: &ModelParams, basis: &QuantumBasis) -> Result<SparseOp, OracleError> {
    if params.sites != basis.sites() || params.atoms != basis.atoms() {
        return Err(OracleError::BasisMismatch);
    }
    let dim = basis.dim();
    let mut h = SparseOp::zeros(dim);

    let m = params.sites;
    if m > 1 && params.hopping != 0.0 {
        let bonds = match params.boundary {
            Boundary::Periodic => m,
            Boundary::Open => m - 1,
        };
        for j in 0..bonds {
            let r = (j + 1) % m;
            let term = photon_annihilation(basis, j).matmul(&photon_creation(basis, r));
            let pair = term.add(&term.adjoint()).scaled(Complex64::new(-params.hopping, 0.0));
            h = h.add(&pair);
        }
    }

    if params.coupling != 0.0 {
        for j in 0..m {
            let term = photon_creation(basis, j).matmul(&dicke_lowering(basis, j));
            let pair = term.add(&term.adjoint()).scaled(Complex64::new(params.coupling, 0.0));
            h = h.add(&pair);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cavity_lattice::model::ModelParams;

    #[test]
    fn ladder_elements_match_spin_algebra() {
        // N = 1 (S = 1/2): raising from the bottom has unit coefficient.
        assert_eq!(dicke_ladder_element(1, -0.5, true).unwrap(), 1.0);
        // top state annihilated by S⁺
        assert_eq!(dicke_ladder_element(4, 2.0, true).unwrap(), 0.0);
        // N = 4, m = 0: S⁺ coefficient √6
        let got = dicke_ladder_element(4, 0.0, true).unwrap();
        assert!((got - 6f64.sqrt()).abs() <= 1e-15);
        assert!(matches!(
            dicke_ladder_element(2, 3.0, true),
            Err(OracleError::LadderRange { .. })
        ));
    }

    #[test]
    fn zero_rates_give_zero_hamiltonian() {
        let params = ModelParams::new(2, 2, 0.0, 0.0).unwrap();
        let basis = QuantumBasis::new(2, 2, 2).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn hamiltonian_is_exactly_hermitian() {
        let params = ModelParams::new(2, 3, 0.7, 1.3).unwrap();
        let basis = QuantumBasis::new(2, 3, 3).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn su2_commutators_hold_exactly() {
        let basis = QuantumBasis::new(2, 4, 2).unwrap();
        for site in 0..2 {
            let plus = dicke_raising(&basis, site);
            let minus = dicke_lowering(&basis, site);
            let z = dicke_z(&basis, site);
            // [S⁺, S⁻] = 2 Sᶻ
            let lhs = plus.commutator(&minus);
            let rhs = z.clone().scaled(Complex64::new(2.0, 0.0));
            assert!(lhs.sub(&rhs).max_abs() <= 1e-12, "site {site}");
            // [Sᶻ, S±] = ±S±
            assert!(z.commutator(&plus).sub(&plus).max_abs() <= 1e-12);
            assert!(z.commutator(&minus).sub(&minus.clone().scaled(Complex64::new(-1.0, 0.0))).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn total_excitation_commutes_with_hamiltonian() {
        let params = ModelParams::new(2, 2, 0.9, 1.1).unwrap();
        let basis = QuantumBasis::new(2, 2, 3).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let n_tot = total_excitation(&basis);
        assert!(h.commutator(&n_tot).max_abs() <= 1e-12);
    }

    #[test]
    fn jaynes_cummings_single_excitation_eigenvalues() {
        // M = 1, N = 1, cutoff 1: the single-excitation block diagonalizes to
        // ±Ω; the two uncoupled states sit at 0.
        let params = ModelParams::new(1, 1, 0.0, 2.5).unwrap();
        let basis = QuantumBasis::new(1, 1, 1).unwrap();
        let h = build_hamiltonian(&params, &basis).unwrap();
        let eig = h.to_dense().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [-2.5, 0.0, 0.0, 2.5];
        for (got, want) in vals.iter().zip(want) {
            assert!((got - want).abs() <= 1e-12, "{vals:?}");
        }
    }

    #[test]
    fn adjoint_and_matmul_agree_with_dense() {
        let basis = QuantumBasis::new(1, 2, 2).unwrap();
        let a = photon_annihilation(&basis, 0);
        let sp = dicke_raising(&basis, 0);
        let sparse = a.matmul(&sp).adjoint().to_dense();
        let dense = (a.to_dense() * sp.to_dense()).adjoint();
        assert!((sparse - dense).norm() <= 1e-14);
    }
}
