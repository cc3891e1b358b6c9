//! Right-hand sides of the three formulations of the model.
//!
//! * counts `(X, Y, Z, N)` with standard incidence `beta X Y / N`,
//! * fractions `(S, I, R)` optionally coupled with `N`,
//! * the planar reduction in `(I, R)` obtained from `S = 1 - I - R`.
//!
//! The checked entry points validate their input; the `*_rhs` kernels skip
//! validation and are what the integrator calls.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FractionState, FullState, ModelParams, ReducedState, SIMPLEX_INPUT_TOL};

/// Time derivative of a fraction state, with `dN/dt` when `N` is carried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionRates {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub n: Option<f64>,
}

/// `(X', Y', Z', N')` for the count formulation. Requires `N > 0`.
pub fn vf_full(s: &FullState, params: &ModelParams) -> Result<[f64; 4]> {
    if !(s.n > 0.0) {
        return Err(Error::ZeroPopulation(s.n));
    }
    s.validate()?;
    Ok(full_rhs(params, &s.to_array()))
}

/// `(S', I', R')` and, when `n` is given, `N' = (b - mu(N) - delta I) N`.
pub fn vf_fraction(s: &FractionState, n: Option<f64>, params: &ModelParams) -> Result<FractionRates> {
    let gap = s.simplex_gap();
    if !(gap <= SIMPLEX_INPUT_TOL) {
        return Err(Error::SimplexViolation(gap));
    }
    if let Some(n) = n {
        if !(n >= 0.0) {
            return Err(Error::InvalidState(format!("population must be nonnegative, got {n}")));
        }
    }
    let [ds, di, dr, dn] = fraction_rhs(params, &[s.s, s.i, s.r, n.unwrap_or(0.0)]);
    Ok(FractionRates { s: ds, i: di, r: dr, n: n.map(|_| dn) })
}

/// `(I', R')` for the planar reduction.
pub fn vf_reduced(s: &ReducedState, params: &ModelParams) -> Result<[f64; 2]> {
    s.validate()?;
    Ok(reduced_rhs(params, &[s.i, s.r]))
}

pub(crate) fn full_rhs(params: &ModelParams, y: &[f64; 4]) -> [f64; 4] {
    let [x, inf, z, n] = *y;
    let (b, p, beta, nu, delta, alpha) = (
        params.b(),
        params.p(),
        params.beta(),
        params.nu(),
        params.delta(),
        params.alpha(),
    );
    let mu = params.mortality().eval(n);
    let incidence = beta * x * inf / n;
    let dx = b * (n - p * inf) - mu * x - incidence + alpha * z;
    let dy = b * p * inf + incidence - (mu + nu + delta) * inf;
    let dz = nu * inf - (alpha + mu) * z;
    let dn = (b - mu) * n - delta * inf;
    [dx, dy, dz, dn]
}

pub(crate) fn fraction_rhs(params: &ModelParams, y: &[f64; 4]) -> [f64; 4] {
    let [s, i, r, n] = *y;
    let (b, p, beta, nu, delta, alpha) = (
        params.b(),
        params.p(),
        params.beta(),
        params.nu(),
        params.delta(),
        params.alpha(),
    );
    let gamma = params.gamma();
    let ds = b * (1.0 - s - p * i) - (beta - delta) * s * i + alpha * r;
    let di = (beta * s - gamma + delta * i) * i;
    let dr = nu * i - (b + alpha - delta * i) * r;
    let dn = (b - params.mortality().eval(n) - delta * i) * n;
    [ds, di, dr, dn]
}

pub(crate) fn reduced_rhs(params: &ModelParams, y: &[f64; 2]) -> [f64; 2] {
    let [i, r] = *y;
    let (beta, nu, delta) = (params.beta(), params.nu(), params.delta());
    let di = (beta * (1.0 - i - r) - params.gamma() + delta * i) * i;
    let dr = nu * i - delta * (params.rho() - i) * r;
    [di, dr]
}
