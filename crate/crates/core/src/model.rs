//! Parameters, the density-dependent mortality law, and state records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, Violations};

/// Input tolerance on `|S+I+R-1|` for user-supplied fraction states.
pub const SIMPLEX_INPUT_TOL: f64 = 1e-6;
/// Drift beyond which integrated fraction states are projected back.
pub const SIMPLEX_DRIFT_TOL: f64 = 1e-9;

/// Per-capita mortality as a strictly increasing function of population size.
///
/// Only the affine law `mu(N) = mu0 + k N` ships; other monotone laws slot in
/// as further variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum MortalityFn {
    Affine { mu0: f64, k: f64 },
}

impl MortalityFn {
    pub fn affine(mu0: f64, k: f64) -> Self {
        MortalityFn::Affine { mu0, k }
    }

    /// `mu(0)`.
    pub fn baseline(&self) -> f64 {
        match *self {
            MortalityFn::Affine { mu0, .. } => mu0,
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            MortalityFn::Affine { mu0, k } => mu0 + k * n,
        }
    }

    /// Population size at which mortality equals `y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match *self {
            MortalityFn::Affine { mu0, k } => {
                if !(y > mu0) {
                    return Err(Error::InverseOutOfRange { y, mu0 });
                }
                Ok((y - mu0) / k)
            }
        }
    }

    /// Carrying capacity of the disease-free population: the `N*` with `mu(N*) = b`.
    pub fn carrying_capacity(&self, b: f64) -> f64 {
        match *self {
            MortalityFn::Affine { mu0, k } => (b - mu0) / k,
        }
    }
}

/// Unvalidated parameter bundle, as read from a parameter file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub b: f64,
    pub beta: f64,
    pub nu: f64,
    pub delta: f64,
    pub p: f64,
    pub alpha: f64,
    pub mu0: f64,
    pub k: f64,
}

impl RawParams {
    /// The reference parameter set used throughout the docs and tests.
    pub fn reference() -> Self {
        RawParams {
            b: 1.0,
            beta: 3.0,
            nu: 1.0 / 3.0,
            delta: 1.0,
            p: 1.0 / 3.0,
            alpha: 1.0,
            mu0: 0.2,
            k: 0.1,
        }
    }

    pub fn validate(self) -> Result<ModelParams> {
        validate_params(self)
    }
}

/// Validated model constants. Construct through [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    b: f64,
    beta: f64,
    nu: f64,
    delta: f64,
    p: f64,
    alpha: f64,
    mortality: MortalityFn,
}

/// Checks every parameter hypothesis and reports all violations at once.
pub fn validate_params(raw: RawParams) -> Result<ModelParams> {
    let mut violations = Vec::new();
    let rates = [
        ("b", raw.b),
        ("beta", raw.beta),
        ("nu", raw.nu),
        ("delta", raw.delta),
        ("alpha", raw.alpha),
        ("mu0", raw.mu0),
        ("k", raw.k),
    ];
    for (name, value) in rates {
        if !(value.is_finite() && value > 0.0) {
            violations.push(Violation::NonPositiveRate(name));
        }
    }
    if !(raw.p > 0.0 && raw.p < 1.0) {
        violations.push(Violation::POutOfRange(raw.p));
    }
    if raw.b.is_finite() && raw.mu0.is_finite() && raw.b <= raw.mu0 {
        violations.push(Violation::BirthBelowBaselineMortality {
            b: raw.b,
            mu0: raw.mu0,
        });
    }
    if !violations.is_empty() {
        return Err(Error::InvalidParams(Violations(violations)));
    }
    Ok(ModelParams {
        b: raw.b,
        beta: raw.beta,
        nu: raw.nu,
        delta: raw.delta,
        p: raw.p,
        alpha: raw.alpha,
        mortality: MortalityFn::affine(raw.mu0, raw.k),
    })
}

impl ModelParams {
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn mortality(&self) -> MortalityFn {
        self.mortality
    }

    /// Disease-free carrying capacity `N*`.
    pub fn n_star(&self) -> f64 {
        self.mortality.carrying_capacity(self.b)
    }

    /// `gamma = (1-p) b + nu + delta`, the effective exit rate from the infectious class.
    pub fn gamma(&self) -> f64 {
        (1.0 - self.p) * self.b + self.nu + self.delta
    }

    /// `rho = (b + alpha) / delta`.
    pub fn rho(&self) -> f64 {
        (self.b + self.alpha) / self.delta
    }

    pub fn r0(&self) -> f64 {
        self.beta / self.gamma()
    }

    pub fn to_raw(&self) -> RawParams {
        let MortalityFn::Affine { mu0, k } = self.mortality;
        RawParams {
            b: self.b,
            beta: self.beta,
            nu: self.nu,
            delta: self.delta,
            p: self.p,
            alpha: self.alpha,
            mu0,
            k,
        }
    }
}

/// Compartment counts `(X, Y, Z)` with total population `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub n: f64,
}

impl FullState {
    /// Builds a state whose total is the sum of the compartments.
    pub fn from_counts(x: f64, y: f64, z: f64) -> Result<Self> {
        let s = FullState { x, y, z, n: x + y + z };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.x, self.y, self.z, self.n];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidState(format!(
                "counts must be finite and nonnegative, got {parts:?}"
            )));
        }
        let gap = (self.x + self.y + self.z - self.n).abs();
        if gap > 1e-9 * self.n.max(1.0) {
            return Err(Error::InvalidState(format!(
                "X+Y+Z differs from N by {gap:e}"
            )));
        }
        Ok(())
    }

    pub fn fractions(&self) -> Result<FractionState> {
        if !(self.n > 0.0) {
            return Err(Error::ZeroPopulation(self.n));
        }
        Ok(FractionState {
            s: self.x / self.n,
            i: self.y / self.n,
            r: self.z / self.n,
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.n]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        FullState { x: a[0], y: a[1], z: a[2], n: a[3] }
    }
}

/// Population fractions `(S, I, R)` on the unit simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl FractionState {
    pub const DISEASE_FREE: FractionState = FractionState { s: 1.0, i: 0.0, r: 0.0 };

    pub fn new(s: f64, i: f64, r: f64) -> Result<Self> {
        let st = FractionState { s, i, r };
        st.validate()?;
        Ok(st)
    }

    /// Accepts a state within [`SIMPLEX_INPUT_TOL`] of the simplex and rescales it onto it.
    pub fn normalized(s: f64, i: f64, r: f64) -> Result<Self> {
        FractionState { s, i, r }.validate()?;
        let total = s + i + r;
        Ok(FractionState { s: s / total, i: i / total, r: r / total })
    }

    pub fn simplex_gap(&self) -> f64 {
        (self.s + self.i + self.r - 1.0).abs()
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.s, self.i, self.r];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidState(format!(
                "fractions must be finite and nonnegative, got {parts:?}"
            )));
        }
        let gap = self.simplex_gap();
        if gap > SIMPLEX_INPUT_TOL {
            return Err(Error::SimplexViolation(gap));
        }
        Ok(())
    }

    pub fn reduced(&self) -> ReducedState {
        ReducedState { i: self.i, r: self.r }
    }
}

/// The `(I, R)` pair of the reduced planar system; `S = 1 - I - R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub i: f64,
    pub r: f64,
}

impl ReducedState {
    pub fn new(i: f64, r: f64) -> Result<Self> {
        let st = ReducedState { i, r };
        st.validate()?;
        Ok(st)
    }

    /// Membership in `{I >= 0, R >= 0, I + R <= 1}`.
    pub fn validate(&self) -> Result<()> {
        if !(self.i.is_finite() && self.r.is_finite()) || self.i < 0.0 || self.r < 0.0 {
            return Err(Error::InvalidState(format!(
                "reduced state must be finite and nonnegative, got (I={}, R={})",
                self.i, self.r
            )));
        }
        if self.i + self.r > 1.0 + SIMPLEX_INPUT_TOL {
            return Err(Error::InvalidState(format!(
                "I+R={} exceeds 1",
                self.i + self.r
            )));
        }
        Ok(())
    }

    pub fn susceptible(&self) -> f64 {
        1.0 - self.i - self.r
    }

    pub fn to_fraction(&self) -> FractionState {
        FractionState { s: self.susceptible(), i: self.i, r: self.r }
    }
}
