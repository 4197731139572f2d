//! Conservative time integration of the lattice equations of motion with
//! energy/norm and Holstein–Primakoff validity monitoring.
//!
//! The default stepper is classic fixed-step fourth-order Runge–Kutta; an
//! embedded Dormand–Prince 5(4) pair is available for oracle-grade reference
//! runs.  The system is not stiff in the regimes of interest, so conservation
//! monitoring substitutes for a symplectic scheme: energy and total norm are
//! checked against the initial values at every sample and the run aborts when
//! the relative drift crosses the configured alarm.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Float;

use crate::model::{self, HpSeries, LatticeState, ModelError, ModelParams};

/// Default bound on `max_l |e_l|²/N` beyond which the truncated
/// Holstein–Primakoff expansion is no longer trusted (mesoscopic validity:
/// at most half the ensemble excited).
pub const DEFAULT_HP_GUARD: f64 = 0.5;

/// Default relative drift of energy or total norm that aborts a run.
pub const DEFAULT_CONSERVATION_ALARM: f64 = 1e-6;

/// Stability cap on `dt · ω_max` for the fixed-step integrator.
pub const RK4_STABILITY_CAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

/// Errors raised during integration.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsError {
    /// `max_l |e_l|²/N` crossed the guard: the expansion left its valid regime.
    HpViolation { time: f64, occupation: f64, guard: f64 },
    /// Energy or norm drifted beyond the alarm: the step size is too large.
    ConservationDrift {
        time: f64,
        energy_drift: f64,
        norm_drift: f64,
        alarm: f64,
    },
    /// A field value became NaN or infinite.
    NonFinite { time: f64 },
    /// The adaptive stepper was forced below the representable step size.
    StepUnderflow { time: f64 },
    InvalidConfig(&'static str),
    Model(ModelError),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::HpViolation { time, occupation, guard } => write!(
                f,
                "Holstein-Primakoff guard violated at t = {time}: max |e|^2/N = {occupation} > {guard}"
            ),
            DynamicsError::ConservationDrift { time, energy_drift, norm_drift, alarm } => write!(
                f,
                "conservation drift at t = {time}: energy {energy_drift:.3e}, norm {norm_drift:.3e} (alarm {alarm:.1e})"
            ),
            DynamicsError::NonFinite { time } => write!(f, "non-finite field value at t = {time}"),
            DynamicsError::StepUnderflow { time } => write!(f, "adaptive step underflow at t = {time}"),
            DynamicsError::InvalidConfig(msg) => write!(f, "invalid integrator config: {msg}"),
            DynamicsError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DynamicsError {}

impl From<ModelError> for DynamicsError {
    fn from(e: ModelError) -> Self {
        DynamicsError::Model(e)
    }
}

/// Integration settings.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for [`Method::Rk4Fixed`]; initial step for the adaptive pair.
    pub dt: f64,
    /// Local relative/absolute tolerance for [`Method::Rk45Adaptive`].
    pub tol: f64,
    /// Integration span (duration past the initial state's time).
    pub t_end: f64,
    /// Record one sample every this many accepted steps.
    pub sample_stride: usize,
    /// Bound on `max_l |e_l|²/N`.
    pub hp_guard: f64,
    /// Relative energy/norm drift that aborts the run.
    pub conservation_alarm: f64,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            dt,
            tol: 0.0,
            t_end,
            sample_stride: 1,
            hp_guard: DEFAULT_HP_GUARD,
            conservation_alarm: DEFAULT_CONSERVATION_ALARM,
        }
    }

    pub fn rk45(tol: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive,
            dt: t_end * 1e-3,
            tol,
            t_end,
            sample_stride: 1,
            hp_guard: DEFAULT_HP_GUARD,
            conservation_alarm: DEFAULT_CONSERVATION_ALARM,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn with_hp_guard(mut self, guard: f64) -> Self {
        self.hp_guard = guard;
        self
    }

    pub fn with_alarm(mut self, alarm: f64) -> Self {
        self.conservation_alarm = alarm;
        self
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        match self.method {
            Method::Rk4Fixed if !(self.dt > 0.0) => {
                return Err(DynamicsError::InvalidConfig("rk4 requires dt > 0"))
            }
            Method::Rk45Adaptive if !(self.tol > 0.0) => {
                return Err(DynamicsError::InvalidConfig("rk45 requires tol > 0"))
            }
            _ => {}
        }
        if !(self.t_end > 0.0) {
            return Err(DynamicsError::InvalidConfig("t_end must be > 0"));
        }
        if self.sample_stride == 0 {
            return Err(DynamicsError::InvalidConfig("sample_stride must be >= 1"));
        }
        if !(self.hp_guard > 0.0 && self.hp_guard <= 2.0) {
            return Err(DynamicsError::InvalidConfig("hp_guard must be in (0, 2]"));
        }
        if !(self.conservation_alarm > 0.0) {
            return Err(DynamicsError::InvalidConfig("conservation_alarm must be > 0"));
        }
        Ok(())
    }
}

/// Diagnostics evaluated at one recorded sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleDiagnostics {
    pub time: f64,
    pub energy: f64,
    pub norm: f64,
    pub hp_occupation: f64,
}

/// A sampled trajectory together with per-sample diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub states: Vec<LatticeState>,
    pub diagnostics: Vec<SampleDiagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &LatticeState {
        &self.states[0]
    }

    pub fn last(&self) -> &LatticeState {
        self.states.last().expect("trajectory has samples")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.time)
    }

    /// Sample spacing when uniform (within 1e-9 relative), `None` otherwise.
    pub fn sample_interval(&self) -> Option<f64> {
        if self.states.len() < 2 {
            return None;
        }
        let dt = self.states[1].time - self.states[0].time;
        if !(dt > 0.0) {
            return None;
        }
        for w in self.states.windows(2) {
            let step = w[1].time - w[0].time;
            if (step - dt).abs() > 1e-9 * dt {
                return None;
            }
        }
        Some(dt)
    }

    /// Largest relative energy deviation from the initial sample.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        let scale = e0.abs().max(1.0);
        self.diagnostics
            .iter()
            .map(|d| (d.energy - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest relative total-norm deviation from the initial sample.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.diagnostics[0].norm;
        let scale = n0.max(1.0);
        self.diagnostics
            .iter()
            .map(|d| (d.norm - n0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Frequency scale of the fastest mode reachable from states bounded by
/// `max_occupation = max_l |e_l|²/N`: `2|J| + Ω√N · max |A|`.
pub fn omega_max(params: &ModelParams, max_occupation: f64) -> f64 {
    let series = params.hp_series();
    // All coefficients past the leading 1 are negative, so |A| on
    // [0, max_occupation] is largest at one of the interval ends.
    let a_max = series.eval(0.0).abs().max(series.eval(max_occupation).abs());
    2.0 * params.hopping.abs() + params.collective_coupling() * a_max
}

/// Largest fixed step satisfying the `dt · ω_max ≤ 0.05` stability cap.
pub fn stable_step(params: &ModelParams, max_occupation: f64) -> f64 {
    RK4_STABILITY_CAP / omega_max(params, max_occupation)
}

/// Integrate the full nonlinear equations of motion.
pub fn integrate(
    state0: &LatticeState,
    params: &ModelParams,
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    Engine::new(params, params.hp_series(), true, config)?.run(state0)
}

/// Integrate with the nonlinearity disabled (`A ≡ 1`, `A' ≡ 0`); used for
/// dispersion measurements and linear-spreading contrast runs.  The
/// Holstein–Primakoff guard does not apply.
pub fn linearized_integrate(
    state0: &LatticeState,
    params: &ModelParams,
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    Engine::new(params, HpSeries::identity(), false, config)?.run(state0)
}

struct Engine<'a> {
    params: &'a ModelParams,
    series: HpSeries,
    enforce_hp: bool,
    config: &'a IntegratorConfig,
}

struct Fields {
    cavity: Vec<Complex64>,
    ensemble: Vec<Complex64>,
}

impl Fields {
    fn zeros(m: usize) -> Self {
        Fields {
            cavity: vec![Complex64::new(0.0, 0.0); m],
            ensemble: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    fn assign_combination(&mut self, base: &Fields, terms: &[(f64, &Fields)]) {
        for i in 0..self.cavity.len() {
            let mut c = base.cavity[i];
            let mut e = base.ensemble[i];
            for (w, f) in terms {
                c += *w * f.cavity[i];
                e += *w * f.ensemble[i];
            }
            self.cavity[i] = c;
            self.ensemble[i] = e;
        }
    }
}

impl<'a> Engine<'a> {
    fn new(
        params: &'a ModelParams,
        series: HpSeries,
        enforce_hp: bool,
        config: &'a IntegratorConfig,
    ) -> Result<Self, DynamicsError> {
        params.validate()?;
        config.validate()?;
        Ok(Engine { params, series, enforce_hp, config })
    }

    fn rhs(&self, y: &Fields, dy: &mut Fields) {
        model::eom_rhs_into(
            &y.cavity,
            &y.ensemble,
            self.params,
            &self.series,
            &mut dy.cavity,
            &mut dy.ensemble,
        );
    }

    fn run(&self, state0: &LatticeState) -> Result<Trajectory, DynamicsError> {
        state0.check_shape(self.params)?;
        
        let t0 = state0.time;
        let target = t0 + self.config.t_end;

        let mut y = Fields {
            cavity: state0.cavity.clone(),
            ensemble: state0.ensemble.clone(),
        };
        let mut traj = Trajectory {
            params: self.params.clone(),
            states: Vec::new(),
            diagnostics: Vec::new(),
        };

        let e0 = model::energy_with(&y.cavity, &y.ensemble, self.params, &self.series);
        let n0 = model::total_norm(state0);
        self.record(&mut traj, &y, t0, e0, n0)?;

        match self.config.method {
            Method::Rk4Fixed => self.run_rk4(&mut traj, &mut y, t0, target, e0, n0)?,
            Method::Rk45Adaptive => self.run_rk45(&mut traj, &mut y, t0, target, e0, n0)?,
        }
        Ok(traj)
    }

    fn record(
        &self,
        traj: &mut Trajectory,
        y: &Fields,
        time: f64,
        e0: f64,
        n0: f64,
    ) -> Result<(), DynamicsError> {
        let state = LatticeState {
            time,
            cavity: y.cavity.clone(),
            ensemble: y.ensemble.clone(),
        };
        if !state.is_finite() {
            return Err(DynamicsError::NonFinite { time });
        }
        let energy = model::energy_with(&y.cavity, &y.ensemble, self.params, &self.series);
        let norm = model::total_norm(&state);
        let hp_occupation = state.max_hp_occupation(self.params.atoms);
        if self.enforce_hp && hp_occupation > self.config.hp_guard {
            return Err(DynamicsError::HpViolation {
                time,
                occupation: hp_occupation,
                guard: self.config.hp_guard,
            });
        }
        let energy_drift = (energy - e0).abs() / e0.abs().max(1.0);
        let norm_drift = (norm - n0).abs() / n0.max(1.0);
        if energy_drift > self.config.conservation_alarm || norm_drift > self.config.conservation_alarm {
            return Err(DynamicsError::ConservationDrift {
                time,
                energy_drift,
                norm_drift,
                alarm: self.config.conservation_alarm,
            });
        }
        traj.diagnostics.push(SampleDiagnostics {
            time,
            energy,
            norm,
            hp_occupation,
        });
        traj.states.push(state);
        Ok(())
    }

    fn run_rk4(
        &self,
        traj: &mut Trajectory,
        y: &mut Fields,
        t0: f64,
        target: f64,
        e0: f64,
        n0: f64,
    ) -> Result<(), DynamicsError> {
        let m = self.params.sites;
        let span = target - t0;
        // epsilon guard so a dt of exactly span/n reproduces n steps
        let n_steps = ((span / self.config.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = span / n_steps as f64;

        let mut k1 = Fields::zeros(m);
        let mut k2 = Fields::zeros(m);
        let mut k3 = Fields::zeros(m);
        let mut k4 = Fields::zeros(m);
        let mut stage = Fields::zeros(m);

        for step in 1..=n_steps {
            self.rhs(y, &mut k1);
            stage.assign_combination(y, &[(0.5 * dt, &k1)]);
            self.rhs(&stage, &mut k2);
            stage.assign_combination(y, &[(0.5 * dt, &k2)]);
            self.rhs(&stage, &mut k3);
            stage.assign_combination(y, &[(dt, &k3)]);
            self.rhs(&stage, &mut k4);
            for i in 0..m {
                y.cavity[i] += dt / 6.0
                    * (k1.cavity[i] + 2.0 * k2.cavity[i] + 2.0 * k3.cavity[i] + k4.cavity[i]);
                y.ensemble[i] += dt / 6.0
                    * (k1.ensemble[i] + 2.0 * k2.ensemble[i] + 2.0 * k3.ensemble[i] + k4.ensemble[i]);
            }
            let t = if step == n_steps { target } else { t0 + dt * step as f64 };
            if step % self.config.sample_stride == 0 || step == n_steps {
                self.record(traj, y, t, e0, n0)?;
            }
        }
        Ok(())
    }

    fn run_rk45(
        &self,
        traj: &mut Trajectory,
        y: &mut Fields,
        t0: f64,
        target: f64,
        e0: f64,
        n0: f64,
    ) -> Result<(), DynamicsError> {
        // Dormand-Prince 5(4) tableau.
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];

        let m = self.params.sites;
        let tol = self.config.tol;
        let mut t = t0;
        let mut dt = self.config.dt.abs().min(target - t0);
        if !(dt > 0.0) {
            dt = (target - t0) * 1e-3;
        }
        let min_dt = (target - t0).abs() * 1e-15;

        let mut k: Vec<Fields> = (0..7).map(|_| Fields::zeros(m)).collect();
        let mut stage = Fields::zeros(m);
        let mut proposal = Fields::zeros(m);
        let mut accepted: usize = 0;
        let mut last_recorded = t0;

        while t < target {
            dt = dt.min(target - t);
            self.rhs(y, &mut k[0]);
            for s in 0..6 {
                let mut terms: Vec<(f64, &Fields)> = Vec::with_capacity(s + 1);
                // split borrows: k[..=s] read, stage written
                let (done, _rest) = k.split_at(s + 1);
                for (j, kj) in done.iter().enumerate() {
                    let w = A[s][j] * dt;
                    if w != 0.0 {
                        terms.push((w, kj));
                    }
                }
                stage.assign_combination(y, &terms);
                if s < 5 {
                    let (_done, rest) = k.split_at_mut(s + 1);
                    self.rhs(&stage, &mut rest[0]);
                } else {
                    // stage 6 evaluation is the 5th-order proposal itself
                    proposal.cavity.copy_from_slice(&stage.cavity);
                    proposal.ensemble.copy_from_slice(&stage.ensemble);
                    self.rhs(&proposal, &mut k[6]);
                }
            }

            // scaled RMS error over all complex components
            let mut err_sq = 0.0;
            for i in 0..m {
                for which in 0..2 {
                    let (y0, y1, ks): (Complex64, Complex64, [Complex64; 7]) = if which == 0 {
                        (
                            y.cavity[i],
                            proposal.cavity[i],
                            [
                                k[0].cavity[i],
                                k[1].cavity[i],
                                k[2].cavity[i],
                                k[3].cavity[i],
                                k[4].cavity[i],
                                k[5].cavity[i],
                                k[6].cavity[i],
                            ],
                        )
                    } else {
                        (
                            y.ensemble[i],
                            proposal.ensemble[i],
                            [
                                k[0].ensemble[i],
                                k[1].ensemble[i],
                                k[2].ensemble[i],
                                k[3].ensemble[i],
                                k[4].ensemble[i],
                                k[5].ensemble[i],
                                k[6].ensemble[i],
                            ],
                        )
                    };
                    let mut diff = Complex64::new(0.0, 0.0);
                    for (j, kj) in ks.iter().enumerate() {
                        diff += (B5[j] - B4[j]) * kj;
                    }
                    let scale = tol + tol * y0.norm().max(y1.norm());
                    let e = (dt * diff).norm() / scale;
                    err_sq += e * e;
                }
            }
            let err = (err_sq / (2 * m) as f64).sqrt();

            if err <= 1.0 {
                t += dt;
                core::mem::swap(&mut y.cavity, &mut proposal.cavity);
                core::mem::swap(&mut y.ensemble, &mut proposal.ensemble);
                accepted += 1;
                let at_end = t >= target - min_dt;
                if accepted % self.config.sample_stride == 0 || at_end {
                    let t_rec = if at_end { target } else { t };
                    self.record(traj, y, t_rec, e0, n0)?;
                    last_recorded = t_rec;
                }
                if at_end {
                    break;
                }
            }

            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            dt *= factor;
            if dt < min_dt {
                return Err(DynamicsError::StepUnderflow { time: t });
            }
        }
        if last_recorded < target {
            self.record(traj, y, target, e0, n0)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_state_stays_zero() {
        let params = ModelParams::new(4, 10, 1.0, 1.0).unwrap();
        let config = IntegratorConfig::rk4(1e-2, 1.0).with_stride(10);
        let traj = integrate(&LatticeState::zero(4), &params, &config).unwrap();
        assert!(traj.len() >= 2);
        for d in &traj.diagnostics {
            assert_eq!(d.energy, 0.0);
            assert_eq!(d.norm, 0.0);
        }
        assert!(traj.last().cavity.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn config_validation() {
        let params = ModelParams::new(2, 10, 1.0, 1.0).unwrap();
        let state = LatticeState::zero(2);
        assert!(integrate(&state, &params, &IntegratorConfig::rk4(0.0, 1.0)).is_err());
        assert!(integrate(&state, &params, &IntegratorConfig::rk4(1e-3, -1.0)).is_err());
        assert!(integrate(&state, &params, &IntegratorConfig::rk4(1e-3, 1.0).with_stride(0)).is_err());
        assert!(integrate(&state, &params, &IntegratorConfig::rk45(0.0, 1.0)).is_err());
    }

    #[test]
    fn samples_are_strictly_increasing_and_end_at_t_end() {
        let params = ModelParams::new(3, 10, 1.0, 0.5).unwrap();
        let mut state = LatticeState::zero(3);
        state.cavity[0] = c(0.1, 0.0);
        let config = IntegratorConfig::rk4(1e-3, 0.7).with_stride(100);
        let traj = integrate(&state, &params, &config).unwrap();
        let times: Vec<f64> = traj.times().collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!((times.last().unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(traj.diagnostics.len(), traj.states.len());
    }

    #[test]
    fn hp_guard_violation_detected() {
        let params = ModelParams::new(2, 4, 1.0, 1.0).unwrap();
        let mut state = LatticeState::zero(2);
        state.ensemble[0] = c(1.9, 0.0); // |e|^2/N = 0.9 > 0.5
        let config = IntegratorConfig::rk4(1e-3, 0.1);
        match integrate(&state, &params, &config) {
            Err(DynamicsError::HpViolation { occupation, .. }) => {
                assert!(occupation > 0.5);
            }
            other => panic!("expected HP violation, got {other:?}"),
        }
        // The linearized path ignores the guard.
        assert!(linearized_integrate(&state, &params, &config).is_ok());
    }

    #[test]
    fn conservation_alarm_trips_on_coarse_step() {
        let params = ModelParams::new(4, 10, 1.0, 3.0).unwrap();
        let mut state = LatticeState::zero(4);
        state.cavity[0] = c(0.5, 0.0);
        state.ensemble[1] = c(0.4, 0.1);
        // dt * omega_max ~ 1.9: wildly unstable for rk4.
        let config = IntegratorConfig::rk4(0.18, 50.0).with_alarm(1e-8);
        match integrate(&state, &params, &config) {
            Err(DynamicsError::ConservationDrift { .. }) | Err(DynamicsError::NonFinite { .. }) => {}
            other => panic!("expected conservation/NaN abort, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_abort() {
        let params = ModelParams::new(2, 10, 1.0, 8.0).unwrap();
        let mut state = LatticeState::zero(2);
        state.cavity[0] = c(f64::NAN, 0.0);
        let config = IntegratorConfig::rk4(1e-3, 0.1);
        match integrate(&state, &params, &config) {
            Err(DynamicsError::NonFinite { .. }) => {}
            other => panic!("expected non-finite abort, got {other:?}"),
        }
    }

    /// Exact solution of the linear hopping ring via the discrete Fourier
    /// transform: starting from a single excited site `m0`,
    /// `c_l(t) = (1/M) Σ_q exp(i 2π q (l−m0)/M) exp(i 2J cos(2π q/M) t)`.
    fn hopping_ring_exact(m_sites: usize, m0: usize, hopping: f64, t: f64) -> Vec<Complex64> {
        use core::f64::consts::TAU;
        (0..m_sites)
            .map(|l| {
                let mut acc = c(0.0, 0.0);
                for q in 0..m_sites {
                    let kq = TAU * q as f64 / m_sites as f64;
                    let phase = kq * (l as f64 - m0 as f64) + 2.0 * hopping * kq.cos() * t;
                    acc += Complex64::from_polar(1.0, phase);
                }
                acc / m_sites as f64
            })
            .collect()
    }

    #[test]
    fn hopping_chain_matches_fourier_solution() {
        let m_sites = 16;
        let params = ModelParams::new(m_sites, 10, 1.0, 0.0).unwrap();
        let mut state = LatticeState::zero(m_sites);
        let m0 = 5;
        state.cavity[m0] = c(1.0, 0.0);
        let config = IntegratorConfig::rk4(1e-3, 5.0).with_stride(1000);
        let traj = integrate(&state, &params, &config).unwrap();
        let exact = hopping_ring_exact(m_sites, m0, 1.0, 5.0);
        let last = traj.last();
        for l in 0..m_sites {
            assert!(
                (last.cavity[l] - exact[l]).norm() <= 1e-6,
                "site {l}: {:?} vs {:?}",
                last.cavity[l],
                exact[l]
            );
        }
    }

    fn small_random_state(sites: usize) -> LatticeState {
        // fixed, mildly irregular amplitudes; no RNG needed
        let cav = (0..sites)
            .map(|l| c(0.1 * (l as f64 + 1.0).sin(), 0.07 * (1.3 * l as f64).cos()))
            .collect();
        let ens = (0..sites)
            .map(|l| c(0.05 * (0.7 * l as f64 + 0.2).cos(), 0.09 * (0.4 * l as f64).sin()))
            .collect();
        LatticeState::new(0.0, cav, ens).unwrap()
    }

    #[test]
    fn energy_and_norm_conserved_on_fine_steps() {
        let params = ModelParams::new(6, 10, 1.0, 1.0).unwrap().with_hp_order(2).unwrap();
        let state = small_random_state(6);
        let dt = 0.004 / omega_max(&params, 0.1);
        let config = IntegratorConfig::rk4(dt, 20.0).with_stride(2000).with_alarm(1e-9);
        let traj = integrate(&state, &params, &config).unwrap();
        assert!(traj.energy_drift() <= 1e-10, "energy drift {}", traj.energy_drift());
        assert!(traj.norm_drift() <= 1e-11, "norm drift {}", traj.norm_drift());
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        // The equations are invariant under t → −t with conjugated fields, so
        // evolving, conjugating, evolving again and conjugating once more must
        // recover the initial state.
        let params = ModelParams::new(5, 10, 1.0, 1.5).unwrap();
        let state = small_random_state(5);
        let dt = stable_step(&params, 0.1) * 0.2;
        let config = IntegratorConfig::rk4(dt, 3.0).with_stride(100000);
        let forward = integrate(&state, &params, &config).unwrap();
        let conjugated = LatticeState::new(
            0.0,
            forward.last().cavity.iter().map(|z| z.conj()).collect(),
            forward.last().ensemble.iter().map(|z| z.conj()).collect(),
        )
        .unwrap();
        let back = integrate(&conjugated, &params, &config).unwrap();
        for l in 0..5 {
            assert!((back.last().cavity[l].conj() - state.cavity[l]).norm() <= 1e-6);
            assert!((back.last().ensemble[l].conj() - state.ensemble[l]).norm() <= 1e-6);
        }
    }

    #[test]
    fn rk4_shows_fourth_order_convergence() {
        let params = ModelParams::new(4, 10, 1.0, 1.2).unwrap();
        let state = small_random_state(4);
        let t_end = 2.0;
        let reference = {
            let config = IntegratorConfig::rk45(1e-13, t_end).with_stride(usize::MAX);
            integrate(&state, &params, &config).unwrap()
        };
        let err_at = |dt: f64| {
            let config = IntegratorConfig::rk4(dt, t_end).with_stride(usize::MAX);
            let traj = integrate(&state, &params, &config).unwrap();
            let mut err = 0.0_f64;
            for l in 0..4 {
                err = err.max((traj.last().cavity[l] - reference.last().cavity[l]).norm());
                err = err.max((traj.last().ensemble[l] - reference.last().ensemble[l]).norm());
            }
            err
        };
        let e1 = err_at(0.02);
        let e2 = err_at(0.01);
        let order = (e1 / e2).log2();
        assert!((3.7..=4.3).contains(&order), "observed order {order} (e1={e1:.3e}, e2={e2:.3e})");
    }

    #[test]
    fn single_site_rk4_matches_adaptive_reference() {
        let params = ModelParams::new(1, 10, 0.0, 1.0).unwrap();
        let state = LatticeState::new(0.0, alloc::vec![c(0.2, 0.05)], alloc::vec![c(0.1, -0.03)]).unwrap();
        let t_end = 8.0;
        let fine = integrate(&state, &params, &IntegratorConfig::rk4(5e-4, t_end).with_stride(usize::MAX)).unwrap();
        let reference =
            integrate(&state, &params, &IntegratorConfig::rk45(1e-12, t_end).with_stride(usize::MAX)).unwrap();
        assert!((fine.last().cavity[0] - reference.last().cavity[0]).norm() <= 1e-8);
        assert!((fine.last().ensemble[0] - reference.last().ensemble[0]).norm() <= 1e-8);
    }

    #[test]
    fn open_boundary_keeps_edges_uncoupled() {
        let params = ModelParams::new(3, 10, 1.0, 0.0)
            .unwrap()
            .with_boundary(Boundary::Open);
        let mut state = LatticeState::zero(3);
        state.cavity[0] = c(1.0, 0.0);
        let d = model::eom_rhs(&state, &params);
        // No wrap bond: site 2 gets nothing from site 0 directly.
        assert_eq!(d.cavity[2].norm(), 0.0);
        assert!(d.cavity[1].norm() > 0.0);
    }

    #[test]
    fn uniform_sampling_detected() {
        let params = ModelParams::new(2, 10, 1.0, 0.3).unwrap();
        let mut state = LatticeState::zero(2);
        state.cavity[0] = c(0.1, 0.0);
        let traj = integrate(&state, &params, &IntegratorConfig::rk4(1e-3, 1.0).with_stride(100)).unwrap();
        let dt = traj.sample_interval().expect("uniform sampling");
        assert!((dt - 0.1).abs() <= 1e-9);
    }
}
