//! One-dimensional parameter sweeps.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::equilibria::{classify_regime, derived_quantities, population_fate, Fate, Regime};
use crate::error::{Error, Result};
use crate::integrator::{detect_convergence, integrate, InitialState, IntegrationSpec};
use crate::model::{ModelParams, RawParams, ReducedState};

/// Interior starting point of the convergence probe.
pub const PROBE_START: ReducedState = ReducedState { i: 0.3, r: 0.3 };
pub const PROBE_T_END: f64 = 500.0;
pub const PROBE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    B,
    Beta,
    Nu,
    Delta,
    P,
    Alpha,
    Mu0,
    K,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::B,
        SweepParam::Beta,
        SweepParam::Nu,
        SweepParam::Delta,
        SweepParam::P,
        SweepParam::Alpha,
        SweepParam::Mu0,
        SweepParam::K,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::B => "b",
            SweepParam::Beta => "beta",
            SweepParam::Nu => "nu",
            SweepParam::Delta => "delta",
            SweepParam::P => "p",
            SweepParam::Alpha => "alpha",
            SweepParam::Mu0 => "mu0",
            SweepParam::K => "k",
        }
    }

    pub fn apply(&self, base: RawParams, value: f64) -> RawParams {
        let mut raw = base;
        match self {
            SweepParam::B => raw.b = value,
            SweepParam::Beta => raw.beta = value,
            SweepParam::Nu => raw.nu = value,
            SweepParam::Delta => raw.delta = value,
            SweepParam::P => raw.p = value,
            SweepParam::Alpha => raw.alpha = value,
            SweepParam::Mu0 => raw.mu0 = value,
            SweepParam::K => raw.k = value,
        }
        raw
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown parameter `{s}` (expected one of b, beta, nu, delta, p, alpha, mu0, k)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepTasks {
    pub equilibria: bool,
    pub regime: bool,
    pub fate: bool,
    pub probe: bool,
}

impl Default for SweepTasks {
    fn default() -> Self {
        SweepTasks { equilibria: true, regime: true, fate: true, probe: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RawParams,
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub tasks: SweepTasks,
}

impl SweepSpec {
    pub fn new(base: RawParams, param: SweepParam, lo: f64, hi: f64, points: usize) -> Self {
        SweepSpec { base, param, lo, hi, points, tasks: SweepTasks::default() }
    }

    /// Grid values `lo + (hi - lo) k / (points - 1)`; a single point sits at `lo`.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / last)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidSpec("sweep needs at least one point".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidSpec("sweep range must be finite".into()));
        }
        if self.points > 1 && !(self.lo < self.hi) {
            return Err(Error::InvalidSpec(format!(
                "sweep range must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attractor {
    DiseaseFree,
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub target: Attractor,
    /// Time after which the reduced-system run stays within [`PROBE_EPS`] of the target.
    pub converged_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub gamma: Option<f64>,
    pub r0: Option<f64>,
    pub rho: Option<f64>,
    pub i_u: Option<f64>,
    pub i_e: Option<f64>,
    pub r_e: Option<f64>,
    pub regime: Option<Regime>,
    pub fate: Option<Fate>,
    pub n_e: Option<f64>,
    pub probe: Option<ProbeOutcome>,
    /// Reason the point was skipped; all other fields are empty when set.
    pub skipped: Option<String>,
}

impl SweepRow {
    fn skipped(value: f64, reason: String) -> Self {
        SweepRow {
            value,
            gamma: None,
            r0: None,
            rho: None,
            i_u: None,
            i_e: None,
            r_e: None,
            regime: None,
            fate: None,
            n_e: None,
            probe: None,
            skipped: Some(reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub base: RawParams,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let values = spec.values();
    let rows = evaluate_rows(spec, &values);
    if rows.iter().all(|r| r.skipped.is_some()) {
        return Err(Error::AllPointsInvalid);
    }
    Ok(SweepResult { param: spec.param, base: spec.base, rows })
}

#[cfg(feature = "parallel")]
fn evaluate_rows(spec: &SweepSpec, values: &[f64]) -> Vec<SweepRow> {
    use rayon::prelude::*;
    values.par_iter().map(|&v| sweep_point(spec, v)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_rows(spec: &SweepSpec, values: &[f64]) -> Vec<SweepRow> {
    values.iter().map(|&v| sweep_point(spec, v)).collect()
}

fn sweep_point(spec: &SweepSpec, value: f64) -> SweepRow {
    let params = match spec.param.apply(spec.base, value).validate() {
        Ok(p) => p,
        Err(e) => return SweepRow::skipped(value, e.to_string()),
    };
    let d = derived_quantities(&params);
    let report = classify_regime(&params);
    let endemic = report.endemic;
    let tasks = spec.tasks;
    let fate = if tasks.fate { population_fate(&params).ok() } else { None };
    let probe = if tasks.probe {
        match probe(&params, endemic.map(|e| [e.i, e.r])) {
            Ok(p) => Some(p),
            Err(e) => return SweepRow::skipped(value, format!("probe failed: {e}")),
        }
    } else {
        None
    };
    SweepRow {
        value,
        gamma: Some(d.gamma),
        r0: Some(d.r0),
        rho: Some(d.rho),
        i_u: d.i_u,
        i_e: endemic.filter(|_| tasks.equilibria).map(|e| e.i),
        r_e: endemic.filter(|_| tasks.equilibria).map(|e| e.r),
        regime: tasks.regime.then_some(report.regime),
        fate: fate.map(|f| f.fate),
        n_e: fate.and_then(|f| f.n_e),
        probe,
        skipped: None,
    }
}

/// Integrates the reduced system from [`PROBE_START`] and checks convergence
/// to the attractor predicted by the regime.
pub fn probe(params: &ModelParams, endemic: Option<[f64; 2]>) -> Result<ProbeOutcome> {
    let (target, point) = match endemic {
        Some(e) => (Attractor::Endemic, e),
        None => (Attractor::DiseaseFree, [0.0, 0.0]),
    };
    let spec = IntegrationSpec::new(InitialState::Reduced(PROBE_START), PROBE_T_END);
    let traj = integrate(&spec, params)?;
    Ok(ProbeOutcome {
        target,
        converged_at: detect_convergence(&traj, &point, PROBE_EPS),
    })
}
