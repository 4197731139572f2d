//! Mean-field validation: exact quantum evolution of a small instance against
//! the semiclassical lattice equations from a matched initial state
//! (coherent cavities, spin-coherent ensembles).

use std::path::Path;

use serde::Serialize;

use cavity_lattice::dynamics::integrate;
use cavity_lattice::model::LatticeState;
use cavity_lattice::Complex64;

use crate::config::ExperimentConfig;
use crate::oracle::{
    build_hamiltonian, coherent_spin_coherent_state, cutoff_population, evolve_krylov,
    expectation, photon_annihilation, Propagator, QuantumBasis, QuantumState,
    CUTOFF_POPULATION_ALARM, DENSE_DIM_LIMIT,
};
use crate::output::{csv_float, csv_int, write_json, RunMeta, TableWriter};
use crate::LabError;

#[derive(Debug, Clone, Serialize)]
pub struct OracleCompareSummary {
    pub meta: RunMeta,
    pub dim: usize,
    pub window: f64,
    /// Largest |⟨a_j(t)⟩ − α_j(t)| over sites and the window.
    pub max_dev: f64,
    /// Acceptance bound `0.1 · max|α|`.
    pub bound: f64,
    pub within_bound: bool,
    pub max_cavity_amp: f64,
    /// Final population at the photon cutoff (validity monitor).
    pub cutoff_population: f64,
}

#[derive(Debug, Clone)]
pub struct OracleCompareReport {
    /// `(t, site, exact ⟨a⟩, mean-field α)` per sample.
    pub samples: Vec<(f64, usize, Complex64, Complex64)>,
    pub summary: OracleCompareSummary,
}

pub fn run_oracle_compare(cfg: &ExperimentConfig) -> Result<OracleCompareReport, LabError> {
    let params = cfg.model_params()?;
    let o = &cfg.oracle;
    if o.excited_site >= params.sites {
        return Err(LabError::Config(format!(
            "oracle.excited_site {} outside the array",
            o.excited_site
        )));
    }
    let basis = QuantumBasis::new(params.sites, params.atoms, o.photon_cutoff)?;

    // matched initial data
    let mut cavity_amps = vec![Complex64::new(0.0, 0.0); params.sites];
    cavity_amps[o.excited_site] = Complex64::new(o.cavity_amplitude, 0.0);
    let ensemble_amps = vec![Complex64::new(o.ensemble_tilt, 0.0); params.sites];
    let psi0 = coherent_spin_coherent_state(&basis, &cavity_amps, &ensemble_amps)?;

    let mut state0 = LatticeState::zero(params.sites);
    state0.cavity.clone_from_slice(&cavity_amps);
    state0.ensemble.clone_from_slice(&ensemble_amps);

    // mean-field trajectory sampled on a uniform grid
    let span = cfg.integrator.t_end;
    let dt_target = cfg
        .integrator
        .dt
        .unwrap_or_else(|| super::rk4_step_for(&params, 0.25, span, cfg.integrator.conservation_alarm));
    let (dt, stride) = super::plan_steps(span, dt_target, o.samples.max(2));
    let config = cfg.integrator_config(dt, stride);
    let traj = integrate(&state0, &params, &config)?;

    // exact evolution at the same sample times
    let hamiltonian = build_hamiltonian(&params, &basis)?;
    let a_ops: Vec<_> = (0..params.sites)
        .map(|j| photon_annihilation(&basis, j))
        .collect();

    let dense = basis.dim() <= DENSE_DIM_LIMIT;
    let propagator = dense.then(|| Propagator::new(&hamiltonian));

    let mut samples = Vec::new();
    let mut max_dev = 0.0_f64;
    let mut max_amp = 0.0_f64;
    let mut psi_walk = psi0.clone();
    let mut final_state: Option<QuantumState> = None;
    for state in &traj.states {
        let t = state.time;
        let psi_t = match &propagator {
            Some(p) => p.at(&psi0, t),
            None => {
                let stepped = evolve_krylov(&psi_walk, &hamiltonian, t - psi_walk.time, 1e-10)?;
                psi_walk = stepped.clone();
                stepped
            }
        };
        for (j, a_op) in a_ops.iter().enumerate() {
            let exact = expectation(a_op, &psi_t);
            let mf = state.cavity[j];
            max_dev = max_dev.max((exact - mf).norm());
            max_amp = max_amp.max(mf.norm());
            samples.push((t, j, exact, mf));
        }
        final_state = Some(psi_t);
    }

    let cutoff_pop = cutoff_population(&basis, final_state.as_ref().expect("samples exist"));
    if cutoff_pop > CUTOFF_POPULATION_ALARM {
        return Err(LabError::Oracle(crate::oracle::OracleError::CutoffPopulation {
            population: cutoff_pop,
            alarm: CUTOFF_POPULATION_ALARM,
        }));
    }

    let bound = 0.1 * max_amp;
    let summary = OracleCompareSummary {
        meta: RunMeta::new("oracle-compare", cfg.hash()),
        dim: basis.dim(),
        window: span,
        max_dev,
        bound,
        within_bound: max_dev <= bound,
        max_cavity_amp: max_amp,
        cutoff_population: cutoff_pop,
    };
    Ok(OracleCompareReport { samples, summary })
}

impl OracleCompareReport {
    pub fn write_files(&self, dir: &Path) -> Result<(), LabError> {
        let meta = self.summary.meta.csv_meta();
        let columns = [
            "t",
            "site",
            "re_a_exact",
            "im_a_exact",
            "re_alpha_meanfield",
            "im_alpha_meanfield",
            "abs_dev",
        ];
        let mut table = TableWriter::create(
            &dir.join("oracle_compare.csv"),
            "exact vs mean-field cavity amplitudes",
            &meta,
            &columns,
        )?;
        for (t, site, exact, mf) in &self.samples {
            table.row(&[
                csv_float(*t),
                csv_int(*site as i64),
                csv_float(exact.re),
                csv_float(exact.im),
                csv_float(mf.re),
                csv_float(mf.im),
                csv_float((exact - mf).norm()),
            ])?;
        }
        table.finish()?;
        write_json(&dir.join("oracle_summary.json"), &self.summary)?;
        Ok(())
    }
}
