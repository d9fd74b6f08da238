//! Monte Carlo oracle for the closed-form model: GBM exchange-rate paths,
//! Poisson opportunity arrivals, CPMM swap mechanics, and empirical
//! estimators of expected bridging profit and inventory cost.
//!
//! Randomness is pinned to ChaCha8 seeded per path through SplitMix64, so
//! every estimator is bit-reproducible for a given seed regardless of
//! thread count: paths are simulated independently, collected in path-index
//! order, and reduced sequentially.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{self, ModelError, ModelParams};

/// Arrival times beyond `TAU_CAP_MULTIPLE / lambda` are truncated; the
/// discarded mass is below `e^-50`.
pub const TAU_CAP_MULTIPLE: f64 = 50.0;

/// Substeps per unit of the natural time scale `min(1/lambda, delta, 1)`
/// when discretizing inventory paths.
pub const INVENTORY_SUBSTEPS: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// SplitMix64 step, used to derive independent per-path seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for path `index` of a run with base `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

/// A sampled geometric Brownian motion path.
#[derive(Debug, Clone)]
pub struct GbmPath {
    pub q0: f64,
    /// Strictly increasing timestamps in model time units, starting at 0.
    pub times: Vec<f64>,
    /// Rates `Q_t > 0`, aligned with `times`.
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Samples a GBM path on `[0, horizon]` with fixed `step` (plus a final
/// partial step landing exactly on the horizon), using the exact
/// distributional update `Q_{t+h} = Q_t exp((mu - sigma^2/2) h + sigma sqrt(h) Z)`.
pub fn gbm_sample(
    q0: f64,
    mu: f64,
    sigma: f64,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<GbmPath, SimError> {
    if !(q0 > 0.0 && q0.is_finite()) {
        return Err(SimError::Domain(format!("q0 must be > 0, got {q0}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::Domain(format!("step must be > 0, got {step}")));
    }
    if !(horizon >= step) {
        return Err(SimError::Domain(format!(
            "horizon must be >= step, got horizon={horizon} step={step}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(SimError::Domain(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = path_rng(seed, 0);
    let n_full = (horizon / step).floor() as usize;
    let mut times = Vec::with_capacity(n_full + 2);
    let mut values = Vec::with_capacity(n_full + 2);
    times.push(0.0);
    values.push(q0);
    let mut t = 0.0;
    let mut q = q0;
    let drift = mu - 0.5 * sigma * sigma;
    while t < horizon {
        let h = step.min(horizon - t);
        let z: f64 = StandardNormal.sample(&mut rng);
        q *= (drift * h + sigma * h.sqrt() * z).exp();
        t += h;
        times.push(t);
        values.push(q);
    }
    Ok(GbmPath {
        q0,
        times,
        values,
        seed,
    })
}

/// Draws one unit-rate exponential via inverse CDF. `rng.random::<f64>()`
/// is uniform on [0, 1); mapping through `1 - u` keeps ln's argument in
/// (0, 1].
fn sample_unit_exp<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// Samples one Poisson inter-arrival time `tau ~ Exp(lambda)`.
pub fn poisson_arrival(lambda: f64, seed: u64) -> Result<f64, SimError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SimError::Domain(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let mut rng = path_rng(seed, 0);
    Ok(sample_unit_exp(&mut rng) / lambda)
}

/// Constant-product pool. Swaps preserve `reserve_a * reserve_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmmPool {
    pub reserve_a: f64,
    pub reserve_b: f64,
}

impl CpmmPool {
    pub fn new(reserve_a: f64, reserve_b: f64) -> Result<Self, SimError> {
        if !(reserve_a > 0.0 && reserve_b > 0.0) {
            return Err(SimError::Domain(format!(
                "reserves must be > 0, got ({reserve_a}, {reserve_b})"
            )));
        }
        Ok(Self {
            reserve_a,
            reserve_b,
        })
    }

    /// Marginal price of token B in token A, `R^A / R^B`.
    pub fn price_b_in_a(&self) -> f64 {
        self.reserve_a / self.reserve_b
    }

    /// Output of selling `amount_in` token A without mutating the pool:
    /// `R^B x / (R^A + x)`.
    pub fn quote_a_for_b(&self, amount_in: f64) -> f64 {
        self.reserve_b * amount_in / (self.reserve_a + amount_in)
    }

    /// Sells `amount_in` token A for token B, updating reserves.
    pub fn swap_a_for_b(&mut self, amount_in: f64) -> Result<f64, SimError> {
        if !(amount_in >= 0.0 && amount_in.is_finite()) {
            return Err(SimError::Domain(format!(
                "amount_in must be >= 0, got {amount_in}"
            )));
        }
        let out = self.quote_a_for_b(amount_in);
        self.reserve_a += amount_in;
        self.reserve_b -= out;
        Ok(out)
    }

    /// Sells `amount_in` token B for token A, updating reserves.
    pub fn swap_b_for_a(&mut self, amount_in: f64) -> Result<f64, SimError> {
        if !(amount_in >= 0.0 && amount_in.is_finite()) {
            return Err(SimError::Domain(format!(
                "amount_in must be >= 0, got {amount_in}"
            )));
        }
        let out = self.reserve_a * amount_in / (self.reserve_b + amount_in);
        self.reserve_b += amount_in;
        self.reserve_a -= out;
        Ok(out)
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

fn mean_and_std_err(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<crate::numeric::KahanSum>().value() / n;
    if values.len() < 2 {
        return Estimate { mean, std_err: 0.0 };
    }
    let ss = values
        .iter()
        .map(|v| {
            let d = v - mean;
            d * d
        })
        .collect::<crate::numeric::KahanSum>()
        .value();
    Estimate {
        mean,
        std_err: (ss / (n - 1.0)).sqrt() / n.sqrt(),
    }
}

/// Ratio-of-means estimate with a delta-method standard error.
fn ratio_estimate(pairs: &[(f64, f64)]) -> Estimate {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).collect::<crate::numeric::KahanSum>().value() / n;
    let my = pairs.iter().map(|p| p.1).collect::<crate::numeric::KahanSum>().value() / n;
    let r = mx / my;
    if pairs.len() < 2 {
        return Estimate {
            mean: r,
            std_err: 0.0,
        };
    }
    let (mut sxx, mut sxy, mut syy) = (
        crate::numeric::KahanSum::new(),
        crate::numeric::KahanSum::new(),
        crate::numeric::KahanSum::new(),
    );
    for &(x, y) in pairs {
        let dx = x - mx;
        let dy = y - my;
        sxx.add(dx * dx);
        sxy.add(dx * dy);
        syy.add(dy * dy);
    }
    let var =
        (sxx.value() - 2.0 * r * sxy.value() + r * r * syy.value()) / ((n - 1.0) * n * my * my);
    Estimate {
        mean: r,
        std_err: var.max(0.0).sqrt(),
    }
}

/// Estimates the expected profit of the bridging arbitrage by simulating the
/// realized sale price `Q_{tau+delta}` for the delta-adjusted trade.
///
/// With `delta = 0` or `sigma = 0` every path's profit equals the closed
/// form `(sqrt(p) e^{mu delta/2} - 1)^2 R^A` exactly.
pub fn estimate_bridge_profit(
    params: &ModelParams,
    n_paths: u64,
    seed: u64,
) -> Result<Estimate, SimError> {
    if n_paths == 0 {
        return Err(SimError::Domain("n_paths must be >= 1".into()));
    }
    let sell_a = model::bridge_trade_size(params)?;
    let pool = CpmmPool::new(params.reserve_a, params.reserve_b)?;
    let bought_b = pool.quote_a_for_b(sell_a);
    let q_tau = params.p * pool.price_b_in_a();
    let drift = (params.mu - 0.5 * params.sigma * params.sigma) * params.delta;
    let vol = params.sigma * params.delta.sqrt();
    let profits: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let z: f64 = StandardNormal.sample(&mut rng);
            let growth = (drift + vol * z).exp();
            growth * q_tau * bought_b - sell_a
        })
        .collect();
    Ok(mean_and_std_err(&profits))
}

/// Discretization step for inventory-cost paths:
/// `min(1/lambda, delta, 1) / INVENTORY_SUBSTEPS` (delta only when positive).
fn inventory_step(params: &ModelParams) -> f64 {
    let mut scale = (1.0 / params.lambda).min(1.0);
    if params.delta > 0.0 {
        scale = scale.min(params.delta);
    }
    scale / INVENTORY_SUBSTEPS
}

/// Simulates one inventory path: draws `tau ~ Exp(lambda)` (capped), walks
/// the GBM with step `h`, and accumulates `-(Q_{t+h} - Q_t) * I_t` for
/// `I_t = coeff * (Q0/Q_t)^k * R0^B`, plus the quadratic trading-cost term
/// scaled by `quad_coeff * R_t^B / Q_t`. Returns the path cost and the
/// terminal inventory value `Q_tau I_tau`.
fn inventory_path(
    params: &ModelParams,
    coeff: f64,
    quad_coeff: f64,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let lambda = params.lambda;
    let tau = (sample_unit_exp(rng) / lambda).min(TAU_CAP_MULTIPLE / lambda);
    let drift = params.mu - 0.5 * params.sigma * params.sigma;
    let mut q = params.q0;
    let mut t = 0.0;
    let mut cost = 0.0;
    let mut quad = 0.0;
    while t < tau {
        let dt = h.min(tau - t);
        let inv = coeff * (params.q0 / q).powf(params.k) * params.reserve_b;
        if quad_coeff != 0.0 {
            quad += quad_coeff * ((params.q0 / q).powf(params.k) * params.reserve_b / q) * dt;
        }
        let z: f64 = StandardNormal.sample(rng);
        let q_next = q * (drift * dt + params.sigma * dt.sqrt() * z).exp();
        cost -= (q_next - q) * inv;
        q = q_next;
        t += dt;
    }
    let inv_final = coeff * (params.q0 / q).powf(params.k) * params.reserve_b;
    (cost + quad, q * inv_final)
}

/// Estimates the inventory cost per unit traded, `C(I) / E[Q_tau I_tau]`,
/// with `I_t = (1 - sqrt(1/p)) R_t^B`. Converges to `-mu/lambda` for every
/// `k`.
pub fn estimate_inventory_cost(
    params: &ModelParams,
    n_paths: u64,
    seed: u64,
) -> Result<Estimate, SimError> {
    if n_paths == 0 {
        return Err(SimError::Domain("n_paths must be >= 1".into()));
    }
    params.validate()?;
    if params.p <= 1.0 {
        return Err(ModelError::Domain(format!("p must be > 1, got {}", params.p)).into());
    }
    let coeff = 1.0 - (1.0 / params.p).sqrt();
    let h = inventory_step(params);
    let pairs: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            inventory_path(params, coeff, 0.0, h, &mut rng)
        })
        .collect();
    Ok(ratio_estimate(&pairs))
}

/// Estimates the bounded-liquidity inventory cost per unit traded: the
/// linear depreciation cost plus the quadratic trading cost of rebalancing
/// through a `phi`-times-deeper CPMM.
///
/// Matches the closed form of
/// [`model::inventory_cost_bounded_liquidity`], which is normalized per
/// unit of reserve-proportional inventory (`I_t = R_t^B`); like the linear
/// per-unit cost, the result does not depend on `p`.
pub fn estimate_bounded_inventory_cost(
    params: &ModelParams,
    n_paths: u64,
    seed: u64,
) -> Result<Estimate, SimError> {
    if n_paths == 0 {
        return Err(SimError::Domain("n_paths must be >= 1".into()));
    }
    params.validate()?;
    let quad_coeff = params.k * params.k * params.sigma * params.sigma / params.phi;
    let h = inventory_step(params);
    let pairs: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            inventory_path(params, 1.0, quad_coeff, h, &mut rng)
        })
        .collect();
    Ok(ratio_estimate(&pairs))
}
