//! Physical parameterization of the cavity array, the truncated
//! Holstein–Primakoff series, the classical energy functional, and the
//! semiclassical equations of motion at arbitrary truncation order.
//!
//! Per site `l` the state carries a cavity amplitude and a collective
//! (Holstein–Primakoff) ensemble amplitude.  With `x = |ensemble|² / N` and
//! `A(x)` the truncated series of `√(1 − x)`, the conserved energy is
//!
//! ```text
//! E = Σ_l [ −J (c̄_l c_{l+1} + c.c.) + Ω√N (ē_l A(x_l) c_l + c.c.) ]
//! ```
//!
//! and the equations of motion are its complex-gradient flow, which keeps
//! every truncation order exactly conservative.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::Float;

/// Largest supported Holstein–Primakoff truncation order.  Factorials up to
/// `(2·12)!` stay exactly representable in `i128`.
pub const MAX_HP_ORDER: usize = 12;

/// Lattice boundary rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Ring: site `M-1` couples back to site `0`.
    Periodic,
    /// Chain: no wrap-around bond.
    Open,
}

/// Errors from parameter validation and series construction.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Site count must be at least 1 (a single site has no hopping bond).
    SiteCount(usize),
    /// Atom count per ensemble must be at least 1.
    AtomCount(usize),
    /// A rate that must be non-negative was negative.
    NegativeRate(&'static str, f64),
    /// Cavity spacing must be positive.
    Spacing(f64),
    /// Holstein–Primakoff order outside `1..=MAX_HP_ORDER`.
    HpOrder(usize),
    /// Series coefficient index too large for exact arithmetic.
    OrderOverflow(usize),
    /// Field arrays do not match the configured site count.
    ShapeMismatch { expected: usize, got: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::SiteCount(m) => write!(f, "site count {m} must be >= 1"),
            ModelError::AtomCount(n) => write!(f, "atom count {n} must be >= 1"),
            ModelError::NegativeRate(name, v) => write!(f, "{name} = {v} must be >= 0"),
            ModelError::Spacing(d) => write!(f, "cavity spacing {d} must be > 0"),
            ModelError::HpOrder(l) => {
                write!(f, "hp_order {l} outside 1..={MAX_HP_ORDER}")
            }
            ModelError::OrderOverflow(l) => {
                write!(f, "series coefficient {l} exceeds exact range (max {MAX_HP_ORDER})")
            }
            ModelError::ShapeMismatch { expected, got } => {
                write!(f, "field length {got} does not match site count {expected}")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// Physical constants of the array.
///
/// All rates are angular frequencies; the natural convention is `hopping = 1`
/// so that rates are measured in units of `J` and time in `1/J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of cavities `M`.
    pub sites: usize,
    /// Atoms per ensemble `N`.
    pub atoms: usize,
    /// Photon hopping rate `J` between neighboring cavities.
    pub hopping: f64,
    /// Atom–cavity coupling rate `Ω` (per atom; the collective rate is `Ω√N`).
    pub coupling: f64,
    /// Cavity spacing `d`.
    pub spacing: f64,
    /// Truncation order of the Holstein–Primakoff series.
    pub hp_order: usize,
    /// Boundary rule.
    pub boundary: Boundary,
}

impl ModelParams {
    /// Periodic array with unit spacing and first-order nonlinearity.
    pub fn new(sites: usize, atoms: usize, hopping: f64, coupling: f64) -> Result<Self, ModelError> {
        let params = ModelParams {
            sites,
            atoms,
            hopping,
            coupling,
            spacing: 1.0,
            hp_order: 1,
            boundary: Boundary::Periodic,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self, ModelError> {
        self.spacing = spacing;
        self.validate()?;
        Ok(self)
    }

    pub fn with_hp_order(mut self, order: usize) -> Result<Self, ModelError> {
        self.hp_order = order;
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.sites < 1 {
            return Err(ModelError::SiteCount(self.sites));
        }
        if self.atoms < 1 {
            return Err(ModelError::AtomCount(self.atoms));
        }
        if !(self.hopping >= 0.0) {
            return Err(ModelError::NegativeRate("hopping", self.hopping));
        }
        if !(self.coupling >= 0.0) {
            return Err(ModelError::NegativeRate("coupling", self.coupling));
        }
        if !(self.spacing > 0.0) {
            return Err(ModelError::Spacing(self.spacing));
        }
        if self.hp_order < 1 || self.hp_order > MAX_HP_ORDER {
            return Err(ModelError::HpOrder(self.hp_order));
        }
        Ok(())
    }

    /// Collective coupling rate `Ω√N`.
    pub fn collective_coupling(&self) -> f64 {
        self.coupling * (self.atoms as f64).sqrt()
    }

    /// The truncated series for this parameter set.
    pub fn hp_series(&self) -> HpSeries {
        HpSeries::new(self.hp_order).expect("validated hp_order")
    }
}

/// Exact coefficient `l` of the power series of `√(1 − x)`:
/// `(2l)! / [(1 − 2l) (2^l l!)²]`.
///
/// `l = 0` gives `1`, `l = 1` gives `−1/2`.  Fails with
/// [`ModelError::OrderOverflow`] above [`MAX_HP_ORDER`], where the factorials
/// leave the exact `i128` range.
pub fn hp_coefficient(l: usize) -> Result<Ratio<i128>, ModelError> {
    if l > MAX_HP_ORDER {
        return Err(ModelError::OrderOverflow(l));
    }
    let numerator = factorial(2 * l as i128);
    let sign_factor = 1 - 2 * l as i128;
    let pow_fact = (1_i128 << l) * factorial(l as i128);
    let denominator = sign_factor * pow_fact * pow_fact;
    Ok(Ratio::new(numerator, denominator))
}

fn factorial(n: i128) -> i128 {
    (1..=n).product::<i128>().max(1)
}

/// Truncated power series of the Holstein–Primakoff square root `√(1 − x)`,
/// with `x = |ensemble|² / N`.
///
/// Coefficients are stored as exact rationals and converted to floating point
/// once, at construction, for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct HpSeries {
    coefficients: Vec<Ratio<i128>>,
    values: Vec<f64>,
}

impl HpSeries {
    /// Series truncated after the `x^order` term (`order + 1` coefficients).
    pub fn new(order: usize) -> Result<Self, ModelError> {
        if order < 1 || order > MAX_HP_ORDER {
            return Err(ModelError::HpOrder(order));
        }
        let coefficients: Vec<Ratio<i128>> = (0..=order)
            .map(hp_coefficient)
            .collect::<Result<_, _>>()?;
        let values = coefficients
            .iter()
            .map(|c| *c.numer() as f64 / *c.denom() as f64)
            .collect();
        Ok(HpSeries { coefficients, values })
    }

    /// The constant series `A ≡ 1`, used for linearized dynamics.
    pub(crate) fn identity() -> Self {
        HpSeries {
            coefficients: vec![Ratio::new(1, 1)],
            values: vec![1.0],
        }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Ratio<i128>] {
        &self.coefficients
    }

    /// Series value `A(x)` by Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.values.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Series derivative `A'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (l, &c) in self.values.iter().enumerate().skip(1).rev() {
            acc = acc * x + l as f64 * c;
        }
        acc
    }
}

/// Complex field amplitudes of the array at one instant: one cavity amplitude
/// and one ensemble (Holstein–Primakoff) amplitude per site.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub time: f64,
    pub cavity: Vec<Complex64>,
    pub ensemble: Vec<Complex64>,
}

impl LatticeState {
    pub fn new(time: f64, cavity: Vec<Complex64>, ensemble: Vec<Complex64>) -> Result<Self, ModelError> {
        if cavity.len() != ensemble.len() {
            return Err(ModelError::ShapeMismatch {
                expected: cavity.len(),
                got: ensemble.len(),
            });
        }
        Ok(LatticeState { time, cavity, ensemble })
    }

    pub fn zero(sites: usize) -> Self {
        LatticeState {
            time: 0.0,
            cavity: vec![Complex64::new(0.0, 0.0); sites],
            ensemble: vec![Complex64::new(0.0, 0.0); sites],
        }
    }

    pub fn sites(&self) -> usize {
        self.cavity.len()
    }

    pub fn check_shape(&self, params: &ModelParams) -> Result<(), ModelError> {
        if self.cavity.len() != params.sites {
            return Err(ModelError::ShapeMismatch {
                expected: params.sites,
                got: self.cavity.len(),
            });
        }
        Ok(())
    }

    /// Largest per-site ensemble occupation fraction `max_l |e_l|² / N`, the
    /// Holstein–Primakoff validity indicator.
    pub fn max_hp_occupation(&self, atoms: usize) -> f64 {
        let inv_n = 1.0 / atoms as f64;
        self.ensemble
            .iter()
            .map(|e| e.norm_sqr() * inv_n)
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.cavity
            .iter()
            .chain(self.ensemble.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Time derivative of a [`LatticeState`]'s fields.
#[derive(Debug, Clone)]
pub struct FieldDerivative {
    pub cavity: Vec<Complex64>,
    pub ensemble: Vec<Complex64>,
}

/// Classical energy functional of the array.
///
/// Panics if the state shape does not match `params` (the only error mode).
pub fn energy(state: &LatticeState, params: &ModelParams) -> f64 {
    state.check_shape(params).expect("state shape matches params");
    energy_with(&state.cavity, &state.ensemble, params, &params.hp_series())
}

pub(crate) fn energy_with(
    cavity: &[Complex64],
    ensemble: &[Complex64],
    params: &ModelParams,
    series: &HpSeries,
) -> f64 {
    let m = cavity.len();
    let j = params.hopping;
    let g = params.collective_coupling();
    let inv_n = 1.0 / params.atoms as f64;

    let mut hop = 0.0;
    if m > 1 {
        let bonds = match params.boundary {
            Boundary::Periodic => m,
            Boundary::Open => m - 1,
        };
        for l in 0..bonds {
            let r = (l + 1) % m;
            hop += (cavity[l].conj() * cavity[r]).re;
        }
    }

    let mut coupling = 0.0;
    for l in 0..m {
        let x = ensemble[l].norm_sqr() * inv_n;
        coupling += series.eval(x) * (ensemble[l].conj() * cavity[l]).re;
    }

    -2.0 * j * hop + 2.0 * g * coupling
}

/// Sum of all field occupations `Σ_l (|c_l|² + |e_l|²)`, the conserved charge
/// of the global phase symmetry.
pub fn total_norm(state: &LatticeState) -> f64 {
    state
        .cavity
        .iter()
        .chain(state.ensemble.iter())
        .map(|z| z.norm_sqr())
        .sum()
}

/// Right-hand side of the semiclassical equations of motion,
///
/// ```text
/// dc_l/dt = −i [ −J (c_{l+1} + c_{l−1}) + Ω√N A(x_l) e_l ]
/// de_l/dt = −i Ω√N [ (A(x_l) + x_l A'(x_l)) c_l + (e_l²/N) A'(x_l) c̄_l ]
/// ```
///
/// the complex-gradient flow of [`energy`].  Missing neighbors (open ends, or
/// a single-site array) contribute zero.
///
/// Panics if the state shape does not match `params`.
pub fn eom_rhs(state: &LatticeState, params: &ModelParams) -> FieldDerivative {
    state.check_shape(params).expect("state shape matches params");
    let m = state.sites();
    let mut out = FieldDerivative {
        cavity: vec![Complex64::new(0.0, 0.0); m],
        ensemble: vec![Complex64::new(0.0, 0.0); m],
    };
    eom_rhs_into(
        &state.cavity,
        &state.ensemble,
        params,
        &params.hp_series(),
        &mut out.cavity,
        &mut out.ensemble,
    );
    out
}

pub(crate) fn eom_rhs_into(
    cavity: &[Complex64],
    ensemble: &[Complex64],
    params: &ModelParams,
    series: &HpSeries,
    d_cavity: &mut [Complex64],
    d_ensemble: &mut [Complex64],
) {
    let m = cavity.len();
    let j = params.hopping;
    let g = params.collective_coupling();
    let inv_n = 1.0 / params.atoms as f64;
    let minus_i = Complex64::new(0.0, -1.0);

    for l in 0..m {
        let mut neighbors = Complex64::new(0.0, 0.0);
        if m > 1 {
            match params.boundary {
                Boundary::Periodic => {
                    neighbors = cavity[(l + 1) % m] + cavity[(l + m - 1) % m];
                }
                Boundary::Open => {
                    if l + 1 < m {
                        neighbors += cavity[l + 1];
                    }
                    if l > 0 {
                        neighbors += cavity[l - 1];
                    }
                }
            }
        }

        let e = ensemble[l];
        let c = cavity[l];
        let x = e.norm_sqr() * inv_n;
        let a = series.eval(x);
        let ap = series.derivative(x);

        d_cavity[l] = minus_i * (-j * neighbors + g * a * e);
        d_ensemble[l] = minus_i * g * ((a + x * ap) * c + (e * e * inv_n) * ap * c.conj());
    }
}
