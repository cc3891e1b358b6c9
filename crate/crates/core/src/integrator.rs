//! Trajectory simulation of the model in any of its three formulations.

use serde::Serialize;

use crate::dopri::{DenseStep, Dopri5, StepControl};
use crate::error::{Error, Result};
use crate::field::{fraction_rhs, full_rhs, reduced_rhs};
use crate::model::{FractionState, FullState, ModelParams, ReducedState, SIMPLEX_DRIFT_TOL};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
/// Full-system runs stop once `N < EXTINCTION_FRACTION * N*`.
pub const EXTINCTION_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Full,
    FractionWithN,
    Reduced,
}

impl System {
    pub fn component_names(&self) -> &'static [&'static str] {
        match self {
            System::Full => &["X", "Y", "Z", "N"],
            System::FractionWithN => &["S", "I", "R", "N"],
            System::Reduced => &["I", "R"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Full(FullState),
    FractionWithN { state: FractionState, n: f64 },
    Reduced(ReducedState),
}

impl InitialState {
    pub fn system(&self) -> System {
        match self {
            InitialState::Full(_) => System::Full,
            InitialState::FractionWithN { .. } => System::FractionWithN,
            InitialState::Reduced(_) => System::Reduced,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialState::Full(s) => {
                s.validate()?;
                if !(s.n > 0.0) {
                    return Err(Error::ZeroPopulation(s.n));
                }
                Ok(())
            }
            InitialState::FractionWithN { state, n } => {
                state.validate()?;
                if !(*n > 0.0 && n.is_finite()) {
                    return Err(Error::ZeroPopulation(*n));
                }
                Ok(())
            }
            InitialState::Reduced(s) => s.validate(),
        }
    }
}

/// Which times end up in the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Every accepted step.
    Steps,
    /// Multiples of `dt` (and `t_end`), evaluated from the dense output.
    Uniform(f64),
}

/// Stop as soon as the max-norm distance to `target` drops below `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStop {
    pub target: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSpec {
    pub initial: InitialState,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub sampling: Sampling,
    pub stop_on_convergence: Option<ConvergenceStop>,
}

impl IntegrationSpec {
    pub fn new(initial: InitialState, t_end: f64) -> Self {
        IntegrationSpec {
            initial,
            t_end,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            max_steps: DEFAULT_MAX_STEPS,
            sampling: Sampling::Steps,
            stop_on_convergence: None,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn stop_when_within(mut self, target: Vec<f64>, eps: f64) -> Self {
        self.stop_on_convergence = Some(ConvergenceStop { target, eps });
        self
    }

    pub fn system(&self) -> System {
        self.initial.system()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(1e-12..=1e-3).contains(&self.rtol) {
            return bad(format!("rtol must lie in [1e-12, 1e-3], got {:e}", self.rtol));
        }
        if !(1e-14..=1e-6).contains(&self.atol) {
            return bad(format!("atol must lie in [1e-14, 1e-6], got {:e}", self.atol));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if let Sampling::Uniform(dt) = self.sampling {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("sampling interval must be positive, got {dt}"));
            }
        }
        if let Some(stop) = &self.stop_on_convergence {
            if stop.target.len() != self.system().component_names().len() {
                return bad("convergence target has the wrong dimension".into());
            }
        }
        self.initial.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    ReachedTEnd,
    Converged { time: f64 },
    ExtinctionThreshold { time: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TrajectoryStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Simplex re-projections applied to fraction states.
    pub projections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub system: System,
    pub samples: Vec<Sample>,
    pub stats: TrajectoryStats,
    pub termination: Termination,
}

impl Trajectory {
    pub fn component_names(&self) -> &'static [&'static str] {
        self.system.component_names()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds its initial sample")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// Earliest sample time after which the trajectory stays within `eps`
/// (max-norm) of `target` until its end.
pub fn detect_convergence(traj: &Trajectory, target: &[f64], eps: f64) -> Option<f64> {
    assert_eq!(
        target.len(),
        traj.component_names().len(),
        "target dimension does not match the trajectory"
    );
    let mut first = None;
    for sample in traj.samples.iter().rev() {
        if max_distance(&sample.state, target) < eps {
            first = Some(sample.t);
        } else {
            break;
        }
    }
    first
}

fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn integrate(spec: &IntegrationSpec, params: &ModelParams) -> Result<Trajectory> {
    spec.validate()?;
    let p = *params;
    match spec.initial {
        InitialState::Full(s) => {
            let threshold = EXTINCTION_FRACTION * p.n_star();
            run(spec, s.to_array(), move |_, y| full_rhs(&p, y), |_| false, Some(threshold))
        }
        InitialState::FractionWithN { state, n } => run(
            spec,
            [state.s, state.i, state.r, n],
            move |_, y| fraction_rhs(&p, y),
            project_simplex,
            None,
        ),
        InitialState::Reduced(s) => run(spec, [s.i, s.r], move |_, y| reduced_rhs(&p, y), |_| false, None),
    }
}

fn project_simplex(y: &mut [f64; 4]) -> bool {
    let total = y[0] + y[1] + y[2];
    if (total - 1.0).abs() > SIMPLEX_DRIFT_TOL {
        for v in &mut y[..3] {
            *v /= total;
        }
        true
    } else {
        false
    }
}

fn run<const N: usize>(
    spec: &IntegrationSpec,
    y0: [f64; N],
    rhs: impl FnMut(f64, &[f64; N]) -> [f64; N],
    mut project: impl FnMut(&mut [f64; N]) -> bool,
    extinction: Option<f64>,
) -> Result<Trajectory> {
    let control = StepControl {
        rtol: spec.rtol,
        atol: spec.atol,
        max_steps: spec.max_steps,
        h_max: None,
    };
    let t_end = spec.t_end;
    let mut solver = Dopri5::new(rhs, 0.0, y0, t_end, control);
    let mut samples = vec![Sample { t: 0.0, state: y0.to_vec() }];
    let mut next_uniform = 1usize;
    let mut projections = 0;
    let mut termination = Termination::ReachedTEnd;

    while solver.t() < t_end {
        let dense = solver.step(t_end)?;
        let mut y = *solver.y();
        if project(&mut y) {
            projections += 1;
            solver.reset_state(y);
        }

        if let Some(threshold) = extinction {
            if y[N - 1] < threshold {
                let time = locate_crossing(&dense, N - 1, threshold);
                push_uniform(&mut samples, &mut next_uniform, spec.sampling, &dense, time, false);
                samples.push(Sample { t: time, state: dense.eval(time).to_vec() });
                termination = Termination::ExtinctionThreshold { time };
                break;
            }
        }

        let t = solver.t();
        match spec.sampling {
            Sampling::Steps => samples.push(Sample { t, state: y.to_vec() }),
            Sampling::Uniform(_) => {
                push_uniform(&mut samples, &mut next_uniform, spec.sampling, &dense, t, t >= t_end);
            }
        }

        if let Some(stop) = &spec.stop_on_convergence {
            if max_distance(&y, &stop.target) < stop.eps {
                if samples.last().map(|s| s.t) != Some(t) {
                    samples.push(Sample { t, state: y.to_vec() });
                }
                termination = Termination::Converged { time: t };
                break;
            }
        }
    }

    let s = solver.stats();
    Ok(Trajectory {
        system: spec.system(),
        samples,
        stats: TrajectoryStats {
            accepted: s.accepted,
            rejected: s.rejected,
            evaluations: s.evaluations,
            projections,
        },
        termination,
    })
}

/// Appends the grid points `k dt` lying in `(dense.t0, upto]` (or `upto` itself when `include_end`).
fn push_uniform<const N: usize>(
    samples: &mut Vec<Sample>,
    next: &mut usize,
    sampling: Sampling,
    dense: &DenseStep<N>,
    upto: f64,
    include_end: bool,
) {
    let Sampling::Uniform(dt) = sampling else {
        return;
    };
    loop {
        let t = *next as f64 * dt;
        if t > upto || t > dense.t1() {
            break;
        }
        samples.push(Sample { t, state: dense.eval(t).to_vec() });
        *next += 1;
    }
    if include_end && samples.last().map(|s| s.t) != Some(upto) {
        samples.push(Sample { t: upto, state: dense.eval(upto).to_vec() });
    }
}

/// Bisection on the dense output for the time component `idx` falls to `level`.
fn locate_crossing<const N: usize>(dense: &DenseStep<N>, idx: usize, level: f64) -> f64 {
    let (mut lo, mut hi) = (dense.t0, dense.t1());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if dense.eval(mid)[idx] < level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
