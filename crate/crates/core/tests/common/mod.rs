#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sirsvp_core::{classify_regime, ModelParams, RawParams, Regime};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn reference() -> ModelParams {
    RawParams::reference().validate().unwrap()
}

pub fn boundary_set() -> ModelParams {
    epi(1.0, 0.5, 0.5, 4.0, 6.0, 1.0)
}

pub fn uncertified_set() -> ModelParams {
    epi(1.0, 0.5, 0.5, 4.0, 20.0, 1.0)
}

pub fn epi(b: f64, p: f64, nu: f64, delta: f64, beta: f64, alpha: f64) -> ModelParams {
    RawParams { b, p, nu, delta, beta, alpha, mu0: 0.2, k: 0.1 }.validate().unwrap()
}

/// Random valid parameters with `beta = r0 * gamma` for a prescribed `r0`.
pub fn params_with_r0(rng: &mut impl Rng, r0: f64) -> ModelParams {
    let b = rng.gen_range(0.5..2.0);
    let p = rng.gen_range(0.05..0.95);
    let nu = rng.gen_range(0.1..2.0);
    let delta = rng.gen_range(0.1..3.0);
    let alpha = rng.gen_range(0.1..2.0);
    let mu0 = rng.gen_range(0.05..0.9) * b;
    let k = rng.gen_range(0.01..1.0);
    let gamma = (1.0 - p) * b + nu + delta;
    RawParams { b, beta: r0 * gamma, nu, delta, p, alpha, mu0, k }
        .validate()
        .unwrap()
}

pub fn endemic_params(rng: &mut impl Rng) -> ModelParams {
    let r0 = rng.gen_range(1.05..6.0);
    params_with_r0(rng, r0)
}

/// Random parameters whose endemic state is certified globally stable.
pub fn certified_params(rng: &mut impl Rng) -> ModelParams {
    loop {
        let p = endemic_params(rng);
        if classify_regime(&p).regime == Regime::EndemicCertifiedGas {
            return p;
        }
    }
}

/// Uniform point on the open simplex.
pub fn simplex_point(rng: &mut impl Rng) -> (f64, f64, f64) {
    loop {
        let a: f64 = rng.gen_range(0.0..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (s, i, r) = (lo, hi - lo, 1.0 - hi);
        if s > 1e-6 && i > 1e-6 && r > 1e-6 {
            return (s, i, r);
        }
    }
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) < 0.0, "no sign change on [{lo}, {hi}]");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `P(I)` rebuilt by eliminating `R` between the two nullclines:
/// `P(I) = -delta (rho - I) [beta (1 - I - R(I)) - gamma + delta I]` with
/// `R(I) = nu I / (delta (rho - I))`.
pub fn endemic_poly_oracle(params: &ModelParams, i: f64) -> f64 {
    let (beta, nu, delta, b, p, alpha) = (
        params.beta(),
        params.nu(),
        params.delta(),
        params.b(),
        params.p(),
        params.alpha(),
    );
    let gamma = (1.0 - p) * b + nu + delta;
    let rho = (b + alpha) / delta;
    let w = delta * (rho - i);
    -(w * (beta * (1.0 - i) - gamma + delta * i) - beta * nu * i)
}
