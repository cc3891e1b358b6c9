//! Threshold quantities, equilibria, stability regimes and population fate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub gamma: f64,
    pub r0: f64,
    pub rho: f64,
    /// Intercept of the `I' = 0` nullcline with `R = 0`; defined when `beta > delta`.
    pub i_u: Option<f64>,
}

pub fn derived_quantities(params: &ModelParams) -> DerivedQuantities {
    let gamma = params.gamma();
    let (beta, delta) = (params.beta(), params.delta());
    DerivedQuantities {
        gamma,
        r0: beta / gamma,
        rho: params.rho(),
        i_u: (beta > delta).then(|| (beta - gamma) / (beta - delta)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    #[serde(rename = "s_e")]
    pub s: f64,
    #[serde(rename = "i_e")]
    pub i: f64,
    #[serde(rename = "r_e")]
    pub r: f64,
    /// Absolute residuals of the two equilibrium equations of the reduced system.
    pub residuals: [f64; 2],
}

impl Equilibrium {
    pub fn disease_free() -> Self {
        Equilibrium {
            kind: EquilibriumKind::DiseaseFree,
            s: 1.0,
            i: 0.0,
            r: 0.0,
            residuals: [0.0, 0.0],
        }
    }
}

/// Residuals of `beta(1-I-R) - gamma + delta I = 0` and `nu I - delta(rho - I) R = 0`.
pub fn equilibrium_residuals(params: &ModelParams, i: f64, r: f64) -> [f64; 2] {
    let (beta, nu, delta) = (params.beta(), params.nu(), params.delta());
    [
        (beta * (1.0 - i - r) - params.gamma() + delta * i).abs(),
        (nu * i - delta * (params.rho() - i) * r).abs(),
    ]
}

/// Coefficients `(a, b, c)` of `P(I) = a I^2 + b I + c`, whose roots are the
/// infected fractions at which both reduced-system nullclines meet.
pub fn endemic_polynomial(params: &ModelParams) -> [f64; 3] {
    let (beta, nu, delta) = (params.beta(), params.nu(), params.delta());
    let (gamma, rho) = (params.gamma(), params.rho());
    [
        -delta * (beta - delta),
        delta * rho * (beta - delta) + (beta - gamma) * delta + beta * nu,
        -delta * rho * (beta - gamma),
    ]
}

pub fn eval_endemic_polynomial(params: &ModelParams, i: f64) -> f64 {
    let [a, b, c] = endemic_polynomial(params);
    (a * i + b) * i + c
}

/// The unique endemic equilibrium, or `None` when `R0 <= 1`.
///
/// The infected fraction is the root of `P` in `(0, rho)`. It is computed as
/// `c / q` with `q = -(b + sqrt(disc)) / 2`, which avoids the cancellation of
/// the textbook formula when `b^2 >> 4ac`.
pub fn endemic_equilibrium(params: &ModelParams) -> Option<Equilibrium> {
    if params.beta() <= params.gamma() {
        return None;
    }
    // gamma > delta always, so R0 > 1 forces beta > delta and a genuine quadratic.
    assert!(params.beta() > params.delta());
    let rho = params.rho();
    let [a, b, c] = endemic_polynomial(params);
    assert!(
        c < 0.0 && eval_endemic_polynomial(params, rho) > 0.0,
        "endemic polynomial does not bracket a root on (0, rho)"
    );
    let disc = b * b - 4.0 * a * c;
    let q = -0.5 * (b + b.signum() * disc.max(0.0).sqrt());
    let roots = [q / a, c / q];
    let i_e = roots
        .into_iter()
        .filter(|r| *r > 0.0 && *r < rho)
        .fold(f64::NAN, f64::min);
    assert!(i_e.is_finite(), "no root of the endemic polynomial in (0, rho)");

    let r_e = params.nu() * i_e / (params.delta() * (rho - i_e));
    let s_e = 1.0 - i_e - r_e;
    assert!(i_e < 1.0 && r_e > 0.0 && s_e > 0.0);
    Some(Equilibrium {
        kind: EquilibriumKind::Endemic,
        s: s_e,
        i: i_e,
        r: r_e,
        residuals: equilibrium_residuals(params, i_e, r_e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// The disease-free equilibrium attracts the whole simplex.
    DfeGas,
    /// The endemic equilibrium is globally stable, certified by `L_EE`.
    EndemicCertifiedGas,
    /// `R0 > 1`, `rho < 1`, `I_u > rho`: no global certificate is available.
    EndemicUncertified,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::DfeGas => "dfe-gas",
            Regime::EndemicCertifiedGas => "endemic-certified-gas",
            Regime::EndemicUncertified => "endemic-uncertified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateBasis {
    R0AtMostOne,
    RhoAtLeastOne,
    IuAtMostRho,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub r0: f64,
    pub regime: Regime,
    pub certificate_basis: CertificateBasis,
    pub endemic: Option<Equilibrium>,
}

pub fn classify_regime(params: &ModelParams) -> RegimeReport {
    let d = derived_quantities(params);
    let endemic = endemic_equilibrium(params);
    let (regime, certificate_basis) = match (endemic, d.i_u) {
        (None, _) => (Regime::DfeGas, CertificateBasis::R0AtMostOne),
        (Some(_), _) if d.rho >= 1.0 => (Regime::EndemicCertifiedGas, CertificateBasis::RhoAtLeastOne),
        (Some(_), Some(i_u)) => {
            let (beta, gamma, delta) = (params.beta(), d.gamma, params.delta());
            let margin = beta - gamma - d.rho * (beta - delta);
            if margin.abs() > 1e-12 * beta {
                // The three forms of the uncertified condition must agree away from the boundary.
                let threshold = gamma + d.rho * (gamma - delta) / (1.0 - d.rho);
                debug_assert_eq!(i_u > d.rho, margin > 0.0);
                debug_assert_eq!(margin > 0.0, beta > threshold);
            }
            if i_u <= d.rho {
                (Regime::EndemicCertifiedGas, CertificateBasis::IuAtMostRho)
            } else {
                (Regime::EndemicUncertified, CertificateBasis::None)
            }
        }
        (Some(_), None) => unreachable!("R0 > 1 implies beta > delta"),
    };
    RegimeReport {
        r0: d.r0,
        regime,
        certificate_basis,
        endemic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fate {
    Extinction,
    Regulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationFate {
    pub fate: Fate,
    pub n_e: Option<f64>,
    /// `b - delta I_e - mu(0)`; extinction iff nonpositive.
    pub threshold_gap: f64,
}

/// Long-run population size once the endemic state is reached.
pub fn population_fate(params: &ModelParams) -> Result<PopulationFate> {
    let eq = endemic_equilibrium(params).ok_or(Error::NoEndemicState)?;
    let mortality = params.mortality();
    let target = params.b() - params.delta() * eq.i;
    let threshold_gap = target - mortality.baseline();
    if threshold_gap <= 0.0 {
        return Ok(PopulationFate {
            fate: Fate::Extinction,
            n_e: None,
            threshold_gap,
        });
    }
    Ok(PopulationFate {
        fate: Fate::Regulation,
        n_e: Some(mortality.inverse(target)?),
        threshold_gap,
    })
}

/// Signed residual `LHS - RHS` of the parameter identity under which the
/// total population of the constant-mortality count model stays constant.
pub fn check_constant_population_condition(params: &ModelParams, mu: f64) -> f64 {
    let (b, beta, nu, delta, p, alpha) = (
        params.b(),
        params.beta(),
        params.nu(),
        params.delta(),
        params.p(),
        params.alpha(),
    );
    let lhs = beta * (b - mu) * (alpha + mu + nu);
    let rhs = delta * (alpha + mu) * ((p * b + beta) - (mu + nu + delta));
    lhs - rhs
}
