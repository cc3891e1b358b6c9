//! Analysis toolkit for an SIRS epidemic model with vertical transmission,
//! waning immunity, disease-induced deaths and density-dependent mortality
//! `mu(N)`.
//!
//! * [`model`]: parameters, the mortality law and state records
//! * [`field`]: vector fields for counts, fractions and the planar reduction
//! * [`equilibria`]: `R0`, equilibria, stability regime and population fate
//! * [`integrator`]: adaptive Dormand–Prince trajectories
//! * [`lyapunov`]: Lyapunov functions and grid certificates
//! * [`sweep`]: one-parameter sweeps

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dopri;
pub mod equilibria;
pub mod error;
pub mod field;
pub mod integrator;
pub mod lyapunov;
pub mod model;
pub mod sweep;

pub use equilibria::{
    check_constant_population_condition, classify_regime, derived_quantities, endemic_equilibrium,
    population_fate, CertificateBasis, DerivedQuantities, Equilibrium, EquilibriumKind, Fate,
    PopulationFate, Regime, RegimeReport,
};
pub use error::{Error, Result, Violation};
pub use field::{vf_fraction, vf_full, vf_reduced, FractionRates};
pub use integrator::{
    detect_convergence, integrate, InitialState, IntegrationSpec, Sampling, System, Termination,
    Trajectory,
};
pub use lyapunov::{certify, l_dfe, l_dfe_orbital, l_ee, l_ee_orbital, omega_invariance_check, Region};
pub use model::{
    validate_params, FractionState, FullState, ModelParams, MortalityFn, RawParams, ReducedState,
};
pub use sweep::{run_sweep, SweepParam, SweepResult, SweepSpec};
