//! Lyapunov functions for both equilibria, their orbital derivatives, and
//! grid-based certificate checks.
//!
//! For the endemic state the certificate is the Volterra-type function
//!
//! ```text
//! L_EE(I, R) = I - I_e - I_e ln(I / I_e) + beta / (2 (nu + delta R_e)) (R - R_e)^2
//! ```
//!
//! whose derivative along the reduced system is
//!
//! ```text
//! L_EE' = -(beta - delta)(I - I_e)^2 - beta delta (rho - I) / (nu + delta R_e) (R - R_e)^2,
//! ```
//!
//! nonpositive wherever `I <= rho`.

use serde::Serialize;

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::field::{fraction_rhs, reduced_rhs};
use crate::model::{FractionState, ModelParams, ReducedState};

/// Radius of the equilibrium-centred ball exempt from the strict-decrease check.
pub const EXCLUSION_RADIUS: f64 = 1e-6;
pub const DEFAULT_RESOLUTION: usize = 200;
pub const MAX_REPORTED_VIOLATIONS: usize = 100;

/// `L_DFE = I`.
pub fn l_dfe(s: &FractionState) -> f64 {
    s.i
}

/// `I' = (gamma (R0 - 1) - beta R - (beta - delta) I) I`.
pub fn l_dfe_orbital(s: &FractionState, params: &ModelParams) -> f64 {
    let (beta, delta, gamma) = (params.beta(), params.delta(), params.gamma());
    (gamma * (params.r0() - 1.0) - beta * s.r - (beta - delta) * s.i) * s.i
}

fn r_weight(eq: &Equilibrium, params: &ModelParams) -> f64 {
    params.beta() / (params.nu() + params.delta() * eq.r)
}

pub fn l_ee(s: &ReducedState, eq: &Equilibrium, params: &ModelParams) -> Result<f64> {
    if !(s.i > 0.0) {
        return Err(Error::DomainError(s.i));
    }
    let l1 = s.i - eq.i - eq.i * (s.i / eq.i).ln();
    let l2 = 0.5 * r_weight(eq, params) * (s.r - eq.r).powi(2);
    Ok(l1 + l2)
}

/// `(dL/dI, dL/dR)`.
pub fn l_ee_gradient(s: &ReducedState, eq: &Equilibrium, params: &ModelParams) -> Result<[f64; 2]> {
    if !(s.i > 0.0) {
        return Err(Error::DomainError(s.i));
    }
    Ok([1.0 - eq.i / s.i, r_weight(eq, params) * (s.r - eq.r)])
}

pub fn l_ee_orbital(s: &ReducedState, eq: &Equilibrium, params: &ModelParams) -> Result<f64> {
    if !(s.i > 0.0) {
        return Err(Error::DomainError(s.i));
    }
    Ok(orbital_unchecked(s.i, s.r, eq, params))
}

fn orbital_unchecked(i: f64, r: f64, eq: &Equilibrium, params: &ModelParams) -> f64 {
    let (beta, delta) = (params.beta(), params.delta());
    -(beta - delta) * (i - eq.i).powi(2)
        - r_weight(eq, params) * delta * (params.rho() - i) * (r - eq.r).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `{I > 0, R >= 0, I + R <= 1}`.
    FullSimplex,
    /// The part of the full simplex with `I < rho`.
    Omega,
}

impl Region {
    pub fn describe(&self, rho: f64) -> String {
        match self {
            Region::FullSimplex => "I > 0, R >= 0, I + R <= 1".to_string(),
            Region::Omega => format!("I > 0, R >= 0, I + R <= 1, I < rho = {rho}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub i: f64,
    pub r: f64,
    pub l: f64,
    pub orbital: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub region: Region,
    pub region_description: String,
    pub resolution: usize,
    pub points_evaluated: usize,
    /// Minimum of `L` over points outside the exclusion ball (`L = 0` at the equilibrium).
    pub min_l: f64,
    /// Maximum orbital derivative over points outside the exclusion ball.
    pub max_orbital: f64,
    pub exclusion_radius: f64,
    pub passed: bool,
    pub violation_count: usize,
    /// Up to [`MAX_REPORTED_VIOLATIONS`] violating points, sorted by `(I, R)`.
    pub violations: Vec<GridPoint>,
}

/// Cell-centred grid over `region`: `I` spans `(0, i_max)` and `R` spans `(0, 1)`
/// in `resolution` cells each, keeping points in the region.
fn grid_points(region: Region, rho: f64, resolution: usize) -> Vec<(f64, f64)> {
    let i_max = match region {
        Region::FullSimplex => 1.0,
        Region::Omega => rho.min(1.0),
    };
    let n = resolution as f64;
    let mut pts = Vec::with_capacity(resolution * resolution / 2 + resolution);
    for a in 0..resolution {
        let i = (a as f64 + 0.5) * i_max / n;
        for c in 0..resolution {
            let r = (c as f64 + 0.5) / n;
            if i + r <= 1.0 && (region == Region::FullSimplex || i < rho) {
                pts.push((i, r));
            }
        }
    }
    pts
}

#[cfg(feature = "parallel")]
fn evaluate_all<T: Send>(pts: &[(f64, f64)], f: impl Fn(f64, f64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    pts.par_iter().map(|&(i, r)| f(i, r)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_all<T>(pts: &[(f64, f64)], f: impl Fn(f64, f64) -> T) -> Vec<T> {
    pts.iter().map(|&(i, r)| f(i, r)).collect()
}

/// Samples `L_EE` and its orbital derivative on a grid and checks the
/// Lyapunov sign conditions.
pub fn certify(
    params: &ModelParams,
    eq: &Equilibrium,
    region: Region,
    resolution: usize,
) -> Result<CertificateReport> {
    if params.r0() <= 1.0 {
        return Err(Error::NoEndemicState);
    }
    if resolution == 0 {
        return Err(Error::RegionEmpty);
    }
    let rho = params.rho();
    let pts = grid_points(region, rho, resolution);
    if pts.is_empty() {
        return Err(Error::RegionEmpty);
    }
    let evaluated: Vec<(GridPoint, bool)> = evaluate_all(&pts, |i, r| {
        let l = l_ee(&ReducedState { i, r }, eq, params).expect("grid excludes I = 0");
        let orbital = orbital_unchecked(i, r, eq, params);
        let far = (i - eq.i).hypot(r - eq.r) > EXCLUSION_RADIUS;
        (GridPoint { i, r, l, orbital }, far)
    });

    let mut min_l = f64::INFINITY;
    let mut max_orbital = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (pt, far) in &evaluated {
        let ok = if *far {
            min_l = min_l.min(pt.l);
            max_orbital = max_orbital.max(pt.orbital);
            pt.l > 0.0 && pt.orbital < 0.0
        } else {
            pt.l >= 0.0 && pt.orbital <= 0.0
        };
        if !ok {
            violations.push(*pt);
        }
    }
    // Grid order is already lexicographic in (I, R); keep it explicit.
    violations.sort_by(|a, b| a.i.total_cmp(&b.i).then(a.r.total_cmp(&b.r)));
    let violation_count = violations.len();
    violations.truncate(MAX_REPORTED_VIOLATIONS);

    Ok(CertificateReport {
        region,
        region_description: region.describe(rho),
        resolution,
        points_evaluated: evaluated.len(),
        min_l,
        max_orbital,
        exclusion_radius: EXCLUSION_RADIUS,
        passed: violation_count == 0,
        violation_count,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DfeCertificateReport {
    pub resolution: usize,
    pub points_evaluated: usize,
    pub max_orbital: f64,
    pub passed: bool,
    pub violation_count: usize,
    pub violations: Vec<FractionState>,
}

/// Checks `L_DFE' <= 0` on a simplex grid. Meaningful when `R0 <= 1`.
pub fn certify_dfe(params: &ModelParams, resolution: usize) -> Result<DfeCertificateReport> {
    if resolution == 0 {
        return Err(Error::RegionEmpty);
    }
    let n = resolution as f64;
    let mut pts = Vec::new();
    for a in 0..=resolution {
        for c in 0..=(resolution - a) {
            pts.push((a as f64 / n, c as f64 / n));
        }
    }
    let values = evaluate_all(&pts, |i, r| {
        let s = FractionState { s: (1.0 - i - r).max(0.0), i, r };
        (s, l_dfe_orbital(&s, params))
    });
    let max_orbital = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let mut violations: Vec<FractionState> = values
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(s, _)| *s)
        .collect();
    let violation_count = violations.len();
    violations.truncate(MAX_REPORTED_VIOLATIONS);
    Ok(DfeCertificateReport {
        resolution,
        points_evaluated: values.len(),
        max_orbital,
        passed: violation_count == 0,
        violation_count,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxSample {
    pub r: f64,
    /// `I'` on the line `I = rho`.
    pub di: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaReport {
    pub rho: f64,
    pub i_u: f64,
    /// `I_u <= rho`, equivalently `beta - gamma - rho (beta - delta) <= 0`.
    pub predicate: bool,
    /// `rho >= 1`: the constraint `I < rho` does not cut the simplex.
    pub trivially_invariant: bool,
    pub boundary_samples: Vec<FluxSample>,
    pub max_boundary_flux: Option<f64>,
    /// `beta - gamma - rho (beta - delta)`: bound on `I'` over `rho <= I <= I_u`.
    pub attractivity_bound: f64,
}

pub const OMEGA_BOUNDARY_SAMPLES: usize = 100;

/// Samples the flux of the reduced field across `{I = rho}` to check that
/// `Omega = {I < rho}` is forward invariant.
pub fn omega_invariance_check(params: &ModelParams) -> Result<OmegaReport> {
    if params.r0() <= 1.0 {
        return Err(Error::NoEndemicState);
    }
    let (beta, gamma, delta, rho) = (params.beta(), params.gamma(), params.delta(), params.rho());
    let i_u = (beta - gamma) / (beta - delta);
    let attractivity_bound = beta - gamma - rho * (beta - delta);
    if rho >= 1.0 {
        return Ok(OmegaReport {
            rho,
            i_u,
            predicate: i_u <= rho,
            trivially_invariant: true,
            boundary_samples: Vec::new(),
            max_boundary_flux: None,
            attractivity_bound,
        });
    }
    let r_max = 1.0 - rho;
    let boundary_samples: Vec<FluxSample> = (0..OMEGA_BOUNDARY_SAMPLES)
        .map(|k| {
            let r = r_max * k as f64 / (OMEGA_BOUNDARY_SAMPLES - 1) as f64;
            FluxSample { r, di: reduced_rhs(params, &[rho, r])[0] }
        })
        .collect();
    let max_boundary_flux = boundary_samples.iter().map(|s| s.di).fold(f64::NEG_INFINITY, f64::max);
    Ok(OmegaReport {
        rho,
        i_u,
        predicate: attractivity_bound <= 0.0,
        trivially_invariant: false,
        boundary_samples,
        max_boundary_flux: Some(max_boundary_flux),
        attractivity_bound,
    })
}

/// `I'` as given by the fraction system; used to cross-check [`l_dfe_orbital`].
pub fn fraction_infection_rate(s: &FractionState, params: &ModelParams) -> f64 {
    fraction_rhs(params, &[s.s, s.i, s.r, 0.0])[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::endemic_equilibrium;
    use crate::model::RawParams;

    fn params(beta: f64) -> ModelParams {
        RawParams { b: 1.0, p: 0.5, nu: 0.5, delta: 4.0, beta, alpha: 1.0, mu0: 0.2, k: 0.1 }
            .validate()
            .unwrap()
    }

    fn reference() -> ModelParams {
        RawParams::reference().validate().unwrap()
    }

    #[test]
    fn l_dfe_on_infection_free_axis() {
        let p = reference();
        let s = FractionState { s: 0.6, i: 0.0, r: 0.4 };
        assert_eq!(l_dfe(&s), 0.0);
        assert_eq!(l_dfe_orbital(&s, &p), 0.0);
    }

    #[test]
    fn l_dfe_orbital_below_threshold() {
        let p = RawParams { beta: 1.5, ..RawParams::reference() }.validate().unwrap();
        let s = FractionState { s: 0.7, i: 0.2, r: 0.1 };
        let rewritten = l_dfe_orbital(&s, &p);
        let direct = (p.beta() * s.s - p.gamma() + p.delta() * s.i) * s.i;
        assert!((rewritten + 0.15).abs() < 1e-15);
        assert!((direct + 0.15).abs() < 1e-15);
        assert!((fraction_infection_rate(&s, &p) - rewritten).abs() < 1e-15);
    }

    #[test]
    fn l_ee_vanishes_at_equilibrium() {
        let p = reference();
        let eq = endemic_equilibrium(&p).unwrap();
        let at = ReducedState { i: eq.i, r: eq.r };
        assert_eq!(l_ee(&at, &eq, &p).unwrap(), 0.0);
        assert_eq!(l_ee_orbital(&at, &eq, &p).unwrap(), 0.0);
    }

    #[test]
    fn l_ee_reference_point() {
        let p = reference();
        let eq = endemic_equilibrium(&p).unwrap();
        let s = ReducedState { i: 0.5, r: 0.1 };
        // Frozen from independent evaluation of each term.
        assert!((l_ee(&s, &eq, &p).unwrap() - 0.016832878745558767).abs() < 1e-12);
        assert!((l_ee_orbital(&s, &eq, &p).unwrap() + 0.03282409199059691).abs() < 1e-12);
    }

    #[test]
    fn l_ee_domain() {
        let p = reference();
        let eq = endemic_equilibrium(&p).unwrap();
        let s = ReducedState { i: 0.0, r: 0.1 };
        assert_eq!(l_ee(&s, &eq, &p).unwrap_err(), Error::DomainError(0.0));
        assert!(l_ee_orbital(&s, &eq, &p).is_err());
        assert!(l_ee_gradient(&s, &eq, &p).is_err());
    }

    #[test]
    fn certificate_reference_full_simplex() {
        let p = reference();
        let eq = endemic_equilibrium(&p).unwrap();
        let rep = certify(&p, &eq, Region::FullSimplex, 200).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.points_evaluated > 19_000);
        assert!(rep.min_l > 0.0 && rep.max_orbital < 0.0);
    }

    #[test]
    fn certificate_boundary_set_omega() {
        let p = params(6.0);
        let eq = endemic_equilibrium(&p).unwrap();
        let rep = certify(&p, &eq, Region::Omega, 200).unwrap();
        assert!(rep.passed);
        assert!(rep.region_description.contains("rho = 0.5"));
    }

    #[test]
    fn certificate_fails_for_strong_transmission() {
        // With beta = 40 the term delta (rho - I) turns positive far enough above rho.
        let p = params(40.0);
        let eq = endemic_equilibrium(&p).unwrap();
        let rep = certify(&p, &eq, Region::FullSimplex, 200).unwrap();
        assert!(!rep.passed);
        assert!(rep.violation_count > 0);
        assert!(rep.violations.len() <= MAX_REPORTED_VIOLATIONS);
        assert!(rep.violations.iter().all(|v| v.i > p.rho() && v.orbital > 0.0));
        assert!(rep
            .violations
            .windows(2)
            .all(|w| (w[0].i, w[0].r) <= (w[1].i, w[1].r)));
        // Restricted to Omega the same function still decreases.
        assert!(certify(&p, &eq, Region::Omega, 200).unwrap().passed);
    }

    #[test]
    fn certify_requires_endemic_regime() {
        let p = RawParams { beta: 1.5, ..RawParams::reference() }.validate().unwrap();
        let eq = Equilibrium::disease_free();
        assert_eq!(
            certify(&p, &eq, Region::FullSimplex, 10).unwrap_err(),
            Error::NoEndemicState
        );
    }

    #[test]
    fn dfe_certificate() {
        let p = RawParams { beta: 1.5, ..RawParams::reference() }.validate().unwrap();
        assert!(certify_dfe(&p, 100).unwrap().passed);
        let rep = certify_dfe(&reference(), 100).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn omega_boundary_set() {
        let rep = omega_invariance_check(&params(6.0)).unwrap();
        assert!(rep.predicate);
        assert!(!rep.trivially_invariant);
        assert_eq!(rep.attractivity_bound, 0.0);
        assert_eq!(rep.boundary_samples.len(), OMEGA_BOUNDARY_SAMPLES);
        assert!(rep.boundary_samples.iter().all(|s| s.di <= 0.0));
    }

    #[test]
    fn omega_uncertified_set() {
        let rep = omega_invariance_check(&params(20.0)).unwrap();
        assert!(!rep.predicate);
        assert!(rep.boundary_samples.iter().any(|s| s.di > 0.0));
        assert!(rep.max_boundary_flux.unwrap() > 0.0);
    }

    #[test]
    fn omega_trivial_when_rho_at_least_one() {
        let rep = omega_invariance_check(&reference()).unwrap();
        assert!(rep.trivially_invariant);
        assert!(rep.boundary_samples.is_empty());
    }
}
