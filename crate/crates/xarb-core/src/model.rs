//! Closed-form profit-cost model for cross-chain arbitrage.
//!
//! One market is a constant-product AMM with reserves `reserve_a` /
//! `reserve_b`; the other is a deep market whose exchange rate follows a
//! geometric Brownian motion with drift `mu` and volatility `sigma`.
//! Arbitrage opportunities of relative size `p` arrive as a Poisson
//! process with rate `lambda`; bridging funds between the markets takes
//! `delta` time units. All quantities are dimensionless or denominated
//! in token A, and every function here is pure.

use thiserror::Error;

/// Absolute tolerance for bisection-based threshold solvers.
pub const BISECT_TOL: f64 = 1e-10;
/// Iteration cap for bisection-based threshold solvers.
pub const BISECT_MAX_ITER: u32 = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A parameter is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The bridging-adjusted trade size would be negative: by the time the
    /// bridged funds arrive, the expected price gap has closed.
    #[error("opportunity vanished: sqrt(p)*exp(mu*delta/2) < 1")]
    OpportunityVanished,
    /// The inventory-cost denominator `lambda + (1-k)(k*sigma^2/2 - mu)`
    /// (or its bounded-liquidity analogue) is not strictly positive.
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),
    /// The bridging cost is zero, so no finite arrival-rate threshold exists.
    #[error("threshold undefined: bridging cost is zero")]
    ThresholdUndefined,
    /// `M = (sqrt(p)-1)^2 + (mu/lambda)(1 - 1/sqrt(p))` is not positive, so
    /// no finite bridging-time threshold exists.
    #[error("no finite threshold: M = {0} <= 0")]
    NoFiniteThreshold(f64),
    /// The drift-threshold hypothesis `1/lambda > delta * p` fails.
    #[error("hypothesis violated: 1/lambda <= delta * p")]
    HypothesisViolated,
}

/// Parameter set for the model. See module docs for the symbol meanings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Relative price `Q/P` between the two markets at an opportunity, > 0.
    pub p: f64,
    /// Percentage drift of the token-B price per unit time.
    pub mu: f64,
    /// Percentage volatility per sqrt(unit time), >= 0.
    pub sigma: f64,
    /// Opportunity arrival rate, events per unit time, > 0.
    pub lambda: f64,
    /// Bridging time in the same time unit, >= 0.
    pub delta: f64,
    /// Token-A reserve of the first market's CPMM, > 0.
    pub reserve_a: f64,
    /// Token-B reserve of the first market's CPMM, > 0.
    pub reserve_b: f64,
    /// Reserve-evolution exponent in `[0, 1]`; 0 keeps pool value constant,
    /// 1/2 keeps the constant product with no liquidity inflows.
    pub k: f64,
    /// Liquidity multiple of the second market's CPMM (bounded-liquidity
    /// variant), > 0.
    pub phi: f64,
    /// Initial exchange rate of the second market, > 0.
    pub q0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            p: 2.0,
            mu: -0.0625,
            sigma: 0.2,
            lambda: 1.0,
            delta: 1.0,
            reserve_a: 1e7,
            reserve_b: 1e7,
            k: 0.0,
            phi: 10.0,
            q0: 1.0,
        }
    }
}

impl ModelParams {
    /// Validates the static invariants (positivity and ranges). Operations
    /// that additionally require `p >= 1` or `p > 1` check that themselves.
    pub fn validate(&self) -> Result<(), ModelError> {
        fn pos(name: &str, v: f64) -> Result<(), ModelError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::Domain(format!("{name} must be > 0, got {v}")))
            }
        }
        pos("p", self.p)?;
        pos("lambda", self.lambda)?;
        pos("reserve_a", self.reserve_a)?;
        pos("reserve_b", self.reserve_b)?;
        pos("phi", self.phi)?;
        pos("q0", self.q0)?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ModelError::Domain(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(ModelError::Domain(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.k) {
            return Err(ModelError::Domain(format!(
                "k must be in [0, 1], got {}",
                self.k
            )));
        }
        if !self.mu.is_finite() {
            return Err(ModelError::Domain("mu must be finite".into()));
        }
        Ok(())
    }
}

fn require_p_at_least_one(p: f64) -> Result<(), ModelError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("p must be >= 1, got {p}")))
    }
}

fn require_p_above_one(p: f64) -> Result<(), ModelError> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("p must be > 1, got {p}")))
    }
}

/// Profit of the frictionless arbitrage, `(sqrt(p) - 1)^2 * reserve_a`,
/// in token A. `p = 1` is a valid degenerate input yielding zero.
pub fn frictionless_profit(p: f64, reserve_a: f64) -> Result<f64, ModelError> {
    require_p_at_least_one(p)?;
    if !(reserve_a > 0.0 && reserve_a.is_finite()) {
        return Err(ModelError::Domain(format!(
            "reserve_a must be > 0, got {reserve_a}"
        )));
    }
    let s = p.sqrt() - 1.0;
    Ok(s * s * reserve_a)
}

/// Frictionless optimal trade: sell `(sqrt(p)-1) R^A` of token A, receive
/// `(1 - sqrt(1/p)) R^B` of token B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeSizes {
    /// Token A sold into the CPMM.
    pub sell_a: f64,
    /// Token B received from the CPMM.
    pub buy_b: f64,
    /// Bridging-adjusted sell size `(sqrt(p) e^{mu delta/2} - 1) R^A`;
    /// `None` when the opportunity vanishes during bridging.
    pub bridge_sell_a: Option<f64>,
}

/// Optimal trade sizes at an opportunity of size `p`, both the frictionless
/// pair and (as a companion field) the bridging-adjusted sell size.
pub fn optimal_trade_sizes(params: &ModelParams) -> Result<TradeSizes, ModelError> {
    params.validate()?;
    require_p_at_least_one(params.p)?;
    let sqrt_p = params.p.sqrt();
    let sell_a = (sqrt_p - 1.0) * params.reserve_a;
    let buy_b = (1.0 - (1.0 / params.p).sqrt()) * params.reserve_b;
    let bridge_sell_a = match bridge_trade_size(params) {
        Ok(v) => Some(v),
        Err(ModelError::OpportunityVanished) => None,
        Err(e) => return Err(e),
    };
    Ok(TradeSizes {
        sell_a,
        buy_b,
        bridge_sell_a,
    })
}

/// Bridging-adjusted sell size `(sqrt(p) e^{mu delta/2} - 1) R^A`.
///
/// Returns [`ModelError::OpportunityVanished`] when
/// `sqrt(p) e^{mu delta/2} < 1`: a negative trade is economically
/// meaningless, the arbitrageur simply stands aside.
pub fn bridge_trade_size(params: &ModelParams) -> Result<f64, ModelError> {
    params.validate()?;
    require_p_at_least_one(params.p)?;
    let factor = params.p.sqrt() * (params.mu * params.delta / 2.0).exp();
    if factor < 1.0 {
        return Err(ModelError::OpportunityVanished);
    }
    Ok((factor - 1.0) * params.reserve_a)
}

/// Expected profit of the bridging arbitrage,
/// `(sqrt(p) e^{mu delta/2} - 1)^2 * reserve_a`, in token A.
pub fn bridge_expected_profit(params: &ModelParams) -> Result<f64, ModelError> {
    params.validate()?;
    require_p_at_least_one(params.p)?;
    let factor = params.p.sqrt() * (params.mu * params.delta / 2.0).exp();
    if factor < 1.0 {
        return Err(ModelError::OpportunityVanished);
    }
    let adj = factor - 1.0;
    Ok(adj * adj * params.reserve_a)
}

/// Cost of non-instantaneous bridging per unit of AMM liquidity:
/// `C^BR = (sqrt(p)-1)^2 - (sqrt(p) e^{mu delta/2} - 1)^2`.
///
/// Zero when `delta = 0` or `mu = 0`; strictly positive for `mu < 0`,
/// `delta > 0`, `p > 1`.
pub fn bridging_cost(p: f64, mu: f64, delta: f64) -> Result<f64, ModelError> {
    require_p_at_least_one(p)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(ModelError::Domain(format!(
            "delta must be >= 0, got {delta}"
        )));
    }
    let sqrt_p = p.sqrt();
    let frictionless = sqrt_p - 1.0;
    let adjusted = sqrt_p * (mu * delta / 2.0).exp() - 1.0;
    Ok(frictionless * frictionless - adjusted * adjusted)
}

/// Expected inventory cost per unit traded, `-mu / lambda`.
pub fn inventory_cost_per_unit(mu: f64, lambda: f64) -> Result<f64, ModelError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::Domain(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    Ok(-mu / lambda)
}

/// Total expected inventory cost and the expected inventory value at the
/// opportunity time, both in token A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InventoryCost {
    /// `C(I) = -mu (1 - sqrt(1/p)) R_0^A / (lambda + (1-k)(k sigma^2/2 - mu))`.
    pub cost: f64,
    /// `E_0[Q_tau I_tau] = lambda (1 - sqrt(1/p)) R_0^A / (same denominator)`.
    pub expected_inventory_value: f64,
}

/// Closed-form total inventory cost under the reserve family
/// `R_t^B = (Q_0/Q_t)^k R_0^B`. The ratio `cost / expected_inventory_value`
/// equals `-mu/lambda` for every admissible parameter set.
pub fn inventory_cost_total(params: &ModelParams) -> Result<InventoryCost, ModelError> {
    params.validate()?;
    require_p_above_one(params.p)?;
    let denom =
        params.lambda + (1.0 - params.k) * (0.5 * params.k * params.sigma * params.sigma - params.mu);
    if denom <= 0.0 {
        return Err(ModelError::DegenerateDenominator(format!(
            "lambda + (1-k)(k sigma^2/2 - mu) = {denom}"
        )));
    }
    let scale = (1.0 - (1.0 / params.p).sqrt()) * params.reserve_a / denom;
    Ok(InventoryCost {
        cost: -params.mu * scale,
        expected_inventory_value: params.lambda * scale,
    })
}

/// Inventory cost per unit traded when the second market is a CPMM with
/// `phi`-times the first market's reserves, approximated by quadratic
/// trading cost:
///
/// ```text
/// (1-k)/(1+k) * (lambda/(1-k) - mu + k sigma^2/2) k^2 sigma^2
/// ----------------------------------------------------------- - mu/lambda
///  phi lambda Q0^2 (lambda/(k+1) + mu - sigma^2 (k+2)/2)
/// ```
///
/// The `(1-k)(lambda/(1-k) - ...)` product is expanded internally so `k = 1`
/// is well defined. At `k = 0` the quadratic term vanishes and the result is
/// exactly `-mu/lambda` for any `phi`, `sigma`, `q0`.
pub fn inventory_cost_bounded_liquidity(params: &ModelParams) -> Result<f64, ModelError> {
    params.validate()?;
    require_p_above_one(params.p)?;
    let k = params.k;
    let sig2 = params.sigma * params.sigma;
    let linear_denom = params.lambda + (1.0 - k) * (0.5 * k * sig2 - params.mu);
    if linear_denom <= 0.0 {
        return Err(ModelError::DegenerateDenominator(format!(
            "lambda + (1-k)(k sigma^2/2 - mu) = {linear_denom}"
        )));
    }
    let quad_denom = params.lambda / (k + 1.0) + params.mu - 0.5 * sig2 * (k + 2.0);
    if quad_denom <= 0.0 {
        return Err(ModelError::DegenerateDenominator(format!(
            "lambda/(k+1) + mu - sigma^2 (k+2)/2 = {quad_denom}"
        )));
    }
    // (1-k) * (lambda/(1-k) - mu + k sigma^2/2), expanded.
    let numer = (params.lambda - (1.0 - k) * params.mu + 0.5 * k * (1.0 - k) * sig2) * k * k * sig2;
    let quad =
        numer / ((1.0 + k) * params.phi * params.lambda * params.q0 * params.q0 * quad_denom);
    Ok(quad - params.mu / params.lambda)
}

/// The arbitrageur's strategy choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    /// Hold token-B inventory on the second market.
    Inventory,
    /// Bridge funds at each opportunity.
    Bridge,
}

/// Outcome of the inventory-versus-bridge comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyDecision {
    pub choice: StrategyChoice,
    /// `C^BR - (-mu/lambda)(1 - sqrt(1/p))`: positive favors inventory.
    pub margin: f64,
    /// True when both sides are exactly equal (the theorem's inequality is
    /// strict, so ties resolve to Bridge).
    pub boundary: bool,
}

/// Per-trade inventory cost minus bridging cost,
/// `(-mu/lambda)(1 - sqrt(1/p)) - C^BR`. Positive means bridging is cheaper.
pub fn inventory_minus_bridge_cost(
    p: f64,
    mu: f64,
    lambda: f64,
    delta: f64,
) -> Result<f64, ModelError> {
    let per_unit = inventory_cost_per_unit(mu, lambda)?;
    let cbr = bridging_cost(p, mu, delta)?;
    Ok(per_unit * (1.0 - (1.0 / p).sqrt()) - cbr)
}

/// Chooses inventory iff `(-mu/lambda)(1 - sqrt(1/p)) < C^BR` strictly.
pub fn decide_strategy(params: &ModelParams) -> Result<StrategyDecision, ModelError> {
    params.validate()?;
    require_p_above_one(params.p)?;
    let margin = -inventory_minus_bridge_cost(params.p, params.mu, params.lambda, params.delta)?;
    Ok(StrategyDecision {
        choice: if margin > 0.0 {
            StrategyChoice::Inventory
        } else {
            StrategyChoice::Bridge
        },
        margin,
        boundary: margin == 0.0,
    })
}

/// Minimum arrival rate for inventory to beat bridging:
/// `lambda* = (-mu / C^BR)(1 - sqrt(1/p))`.
pub fn lambda_threshold(p: f64, mu: f64, delta: f64) -> Result<f64, ModelError> {
    require_p_above_one(p)?;
    if !(mu < 0.0) {
        return Err(ModelError::Domain(format!("mu must be < 0, got {mu}")));
    }
    let cbr = bridging_cost(p, mu, delta)?;
    if cbr <= 0.0 {
        return Err(ModelError::ThresholdUndefined);
    }
    Ok((-mu / cbr) * (1.0 - (1.0 / p).sqrt()))
}

/// Maximum bridging time for bridging to beat inventory:
/// `delta* = -(2/mu) ln(sqrt(p) / (1 + sqrt(M)))` with
/// `M = (sqrt(p)-1)^2 + (mu/lambda)(1 - 1/sqrt(p))`.
pub fn delta_threshold(p: f64, mu: f64, lambda: f64) -> Result<f64, ModelError> {
    require_p_above_one(p)?;
    if !(mu < 0.0) {
        return Err(ModelError::Domain(format!("mu must be < 0, got {mu}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::Domain(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let sqrt_p = p.sqrt();
    let m = (sqrt_p - 1.0) * (sqrt_p - 1.0) + (mu / lambda) * (1.0 - 1.0 / sqrt_p);
    if m <= 0.0 {
        return Err(ModelError::NoFiniteThreshold(m));
    }
    Ok(-(2.0 / mu) * (sqrt_p / (1.0 + m.sqrt())).ln())
}

/// Drift threshold located by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuThreshold {
    /// The root of `(-mu/lambda)(1 - sqrt(1/p)) - C^BR(mu)` on `[-lambda, 0]`.
    pub mu_hat: f64,
    /// True when the cost difference has one sign on the open interval and
    /// the root sits at an endpoint of `[-lambda, 0]`.
    pub at_endpoint: bool,
}

/// Finds the drift threshold `mu_hat` under the hypothesis
/// `1/lambda > delta * p`, below which the arbitrageur bridges and above
/// which it holds inventory.
///
/// The cost difference is strictly decreasing in `mu` under the hypothesis,
/// so bisection to [`BISECT_TOL`] is exact enough for any downstream use.
/// When the function never changes sign inside `(-lambda, 0)` the root is an
/// endpoint and `at_endpoint` is set.
pub fn mu_threshold(p: f64, lambda: f64, delta: f64) -> Result<MuThreshold, ModelError> {
    require_p_above_one(p)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::Domain(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(ModelError::Domain(format!(
            "delta must be >= 0, got {delta}"
        )));
    }
    if 1.0 / lambda <= delta * p {
        return Err(ModelError::HypothesisViolated);
    }
    let f = |mu: f64| inventory_minus_bridge_cost(p, mu, lambda, delta).expect("domain checked");
    let f_lo = f(-lambda);
    let f_hi = f(0.0);
    if f_lo <= 0.0 {
        // Decreasing with a non-positive maximum: negative throughout, the
        // boundary is the left endpoint.
        return Ok(MuThreshold {
            mu_hat: -lambda,
            at_endpoint: true,
        });
    }
    if f_hi > 0.0 {
        // Positive throughout (cannot happen for the exact function, which
        // is zero at mu = 0; kept for robustness to rounding).
        return Ok(MuThreshold {
            mu_hat: 0.0,
            at_endpoint: true,
        });
    }
    // f(lo) > 0 >= f(hi): bisect for the sign change.
    let mut lo = -lambda;
    let mut hi = 0.0;
    for _ in 0..BISECT_MAX_ITER {
        if hi - lo <= BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu_hat = 0.5 * (lo + hi);
    // The exact function vanishes at mu = 0, so a root within tolerance of
    // zero is the endpoint root: the sign never changes in the interior.
    let at_endpoint = mu_hat.abs() <= 2.0 * BISECT_TOL || (mu_hat + lambda).abs() <= 2.0 * BISECT_TOL;
    Ok(MuThreshold { mu_hat, at_endpoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn frictionless_profit_examples() {
        assert_eq!(frictionless_profit(1.0, 1e7).unwrap(), 0.0);
        assert_relative_eq!(
            frictionless_profit(2.0, 1e7).unwrap(),
            1_715_728.7525381,
            max_relative = 1e-12
        );
        assert_relative_eq!(frictionless_profit(4.0, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert!(matches!(
            frictionless_profit(0.5, 1e7),
            Err(ModelError::Domain(_))
        ));
        assert!(matches!(
            frictionless_profit(2.0, 0.0),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn frictionless_profit_increasing_in_p() {
        let mut last = 0.0;
        for i in 1..=50 {
            let p = 1.0 + i as f64 * 0.05;
            let v = frictionless_profit(p, 1e7).unwrap();
            assert!(v > last, "profit not increasing at p={p}");
            last = v;
        }
    }

    #[test]
    fn optimal_trade_sizes_examples() {
        let mut pr = params();
        pr.p = 1.0;
        let t = optimal_trade_sizes(&pr).unwrap();
        assert_eq!(t.sell_a, 0.0);
        assert_eq!(t.buy_b, 0.0);

        pr = params();
        let t = optimal_trade_sizes(&pr).unwrap();
        assert_relative_eq!(t.sell_a, 4_142_135.6237309515, max_relative = 1e-12);
        assert_relative_eq!(
            t.bridge_sell_a.unwrap(),
            3_707_027.85299188,
            max_relative = 1e-12
        );
        // The spec-level rounded expectation.
        assert_relative_eq!(t.bridge_sell_a.unwrap(), 3.707034e6, max_relative = 1e-5);
    }

    #[test]
    fn bridge_trade_vanishes_when_gap_closes() {
        let mut pr = params();
        pr.p = 1.01;
        pr.mu = -0.5;
        pr.delta = 10.0;
        assert!(matches!(
            bridge_trade_size(&pr),
            Err(ModelError::OpportunityVanished)
        ));
        assert_eq!(optimal_trade_sizes(&pr).unwrap().bridge_sell_a, None);
    }

    #[test]
    fn bridging_cost_examples() {
        assert_eq!(bridging_cost(2.0, -0.0625, 0.0).unwrap(), 0.0);
        assert_eq!(bridging_cost(2.0, 0.0, 5.0).unwrap(), 0.0);
        assert_relative_eq!(
            bridging_cost(2.0, -0.0625, 1.0).unwrap(),
            0.03415232022523412,
            max_relative = 1e-12
        );
        assert!(matches!(bridging_cost(0.9, 0.0, 1.0), Err(ModelError::Domain(_))));
    }

    #[test]
    fn bridging_cost_frictionless_consistency() {
        // With delta = 0 the bridge profit equals the frictionless profit
        // exactly, so the cost is exactly zero.
        for p in [1.0, 1.5, 2.0, 3.0, 10.0] {
            assert_eq!(bridging_cost(p, -0.3, 0.0).unwrap(), 0.0);
            let mut pr = params();
            pr.p = p;
            pr.delta = 0.0;
            assert_eq!(
                bridge_expected_profit(&pr).unwrap(),
                frictionless_profit(p, pr.reserve_a).unwrap()
            );
        }
    }

    #[test]
    fn bridging_cost_nonnegative_and_increasing_in_delta() {
        // Grid kept inside the region where the adjusted trade is
        // worthwhile (sqrt(p) e^{mu delta/2} >= 1).
        for &p in &[1.2f64, 2.0, 3.0] {
            for &mu in &[-0.01, -0.0625, -0.2] {
                let mut last = -1.0;
                for i in 0..=20 {
                    let delta = i as f64 * 0.1;
                    if p.sqrt() * (mu * delta / 2.0).exp() < 1.0 {
                        break;
                    }
                    let c = bridging_cost(p, mu, delta).unwrap();
                    assert!(c >= 0.0);
                    assert!(c > last, "C^BR not increasing at p={p} mu={mu} delta={delta}");
                    last = c;
                }
            }
        }
    }

    #[test]
    fn inventory_cost_per_unit_examples() {
        assert_eq!(inventory_cost_per_unit(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(inventory_cost_per_unit(-0.0625, 1.0).unwrap(), 0.0625);
        assert_eq!(inventory_cost_per_unit(-0.0625, 2.0).unwrap(), 0.03125);
        assert!(matches!(
            inventory_cost_per_unit(-0.1, 0.0),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn inventory_cost_total_examples() {
        let mut pr = params();
        pr.mu = 0.0;
        pr.sigma = 0.0;
        pr.reserve_a = 1.0;
        assert_eq!(inventory_cost_total(&pr).unwrap().cost, 0.0);

        pr = params();
        pr.sigma = 0.0;
        pr.reserve_a = 1.0;
        let ic = inventory_cost_total(&pr).unwrap();
        assert_relative_eq!(ic.cost, 0.017229012871379554, max_relative = 1e-12);
        assert_relative_eq!(
            ic.cost / ic.expected_inventory_value,
            0.0625,
            max_relative = 1e-15
        );
    }

    #[test]
    fn inventory_cost_ratio_identity_on_grid() {
        // cost / expected_inventory_value == -mu/lambda, algebraically.
        for &k in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            for &sigma in &[0.0, 0.1, 0.3, 0.6, 1.0] {
                for &lambda in &[0.2, 0.5, 1.0, 2.0, 8.0] {
                    for &mu in &[-0.5, -0.1, -0.01, 0.0, 0.05] {
                        for &p in &[1.1, 1.5, 2.0, 4.0, 9.0] {
                            let pr = ModelParams {
                                p,
                                mu,
                                sigma,
                                lambda,
                                k,
                                ..params()
                            };
                            let denom = lambda + (1.0 - k) * (0.5 * k * sigma * sigma - mu);
                            if denom <= 0.0 {
                                assert!(matches!(
                                    inventory_cost_total(&pr),
                                    Err(ModelError::DegenerateDenominator(_))
                                ));
                                continue;
                            }
                            let ic = inventory_cost_total(&pr).unwrap();
                            let ratio = ic.cost / ic.expected_inventory_value;
                            assert_abs_diff_eq!(ratio, -mu / lambda, epsilon = 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bounded_liquidity_reduces_to_per_unit_cost_at_k_zero() {
        for &phi in &[0.5, 1.0, 10.0, 100.0] {
            for &sigma in &[0.0, 0.1, 0.5] {
                for &q0 in &[0.5, 1.0, 3.0] {
                    let pr = ModelParams {
                        k: 0.0,
                        phi,
                        sigma,
                        q0,
                        ..params()
                    };
                    assert_eq!(inventory_cost_bounded_liquidity(&pr).unwrap(), 0.0625);
                }
            }
        }
        let pr = ModelParams {
            k: 0.0,
            mu: 0.0,
            ..params()
        };
        assert_eq!(inventory_cost_bounded_liquidity(&pr).unwrap(), 0.0);
    }

    #[test]
    fn bounded_liquidity_general_value() {
        let pr = ModelParams {
            k: 0.5,
            sigma: 0.2,
            lambda: 1.0,
            phi: 10.0,
            q0: 1.0,
            ..params()
        };
        assert_relative_eq!(
            inventory_cost_bounded_liquidity(&pr).unwrap(),
            0.06374661654135338,
            max_relative = 1e-12
        );
    }

    #[test]
    fn decide_strategy_examples() {
        let pr = params();
        let d = decide_strategy(&pr).unwrap();
        assert_eq!(d.choice, StrategyChoice::Inventory);
        assert!(!d.boundary);
        assert_relative_eq!(
            d.margin,
            0.03415232022523412 - 0.018305826175840777,
            max_relative = 1e-12
        );

        let pr = ModelParams {
            lambda: 0.4,
            ..params()
        };
        let d = decide_strategy(&pr).unwrap();
        assert_eq!(d.choice, StrategyChoice::Bridge);

        let pr = ModelParams { mu: 0.0, ..params() };
        let d = decide_strategy(&pr).unwrap();
        assert_eq!(d.margin, 0.0);
        assert!(d.boundary);
        assert_eq!(d.choice, StrategyChoice::Bridge);
    }

    #[test]
    fn lambda_threshold_examples() {
        assert_relative_eq!(
            lambda_threshold(2.0, -0.0625, 1.0).unwrap(),
            0.5360053447354114,
            max_relative = 1e-12
        );
        // As mu -> 0- the threshold tends to 1/(p*delta), the same boundary
        // as the drift-threshold hypothesis.
        assert_relative_eq!(
            lambda_threshold(2.0, -1e-9, 1.0).unwrap(),
            0.5,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            lambda_threshold(2.0, -0.0625, 0.5182739785902207).unwrap(),
            1.0,
            max_relative = 1e-9
        );
        assert!(matches!(
            lambda_threshold(2.0, -0.0625, 0.0),
            Err(ModelError::ThresholdUndefined)
        ));
    }

    #[test]
    fn delta_threshold_examples() {
        assert_relative_eq!(
            delta_threshold(2.0, -0.0625, 1.0).unwrap(),
            0.5182739785902207,
            max_relative = 1e-12
        );
        // lambda -> infinity: M -> (sqrt(p)-1)^2 and delta* -> 0.
        assert!(delta_threshold(2.0, -0.0625, 1e12).unwrap() < 1e-6);
    }

    #[test]
    fn threshold_round_trip() {
        for (p, mu, lambda) in [(2.0, -0.0625, 1.0), (1.5, -0.2, 0.9), (3.0, -0.05, 2.0)] {
            let dstar = delta_threshold(p, mu, lambda).unwrap();
            let lstar = lambda_threshold(p, mu, dstar).unwrap();
            assert_relative_eq!(lstar, lambda, max_relative = 1e-9);
        }
    }

    #[test]
    fn decision_flips_once_along_lambda() {
        let dstar = delta_threshold(2.0, -0.0625, 1.0).unwrap();
        let mut flips = 0;
        let mut last = None;
        for i in 1..=400 {
            let lambda = i as f64 * 0.01;
            let pr = ModelParams {
                lambda,
                delta: dstar,
                ..params()
            };
            let choice = decide_strategy(&pr).unwrap().choice;
            if let Some(prev) = last {
                if prev != choice {
                    flips += 1;
                }
            }
            last = Some(choice);
        }
        assert_eq!(flips, 1);
    }

    #[test]
    fn mu_threshold_endpoint_root() {
        // Hypothesis holds (1/0.4 = 2.5 > 2 = delta*p); the cost difference
        // is strictly decreasing and vanishes at mu = 0, so the root is the
        // right endpoint.
        let t = mu_threshold(2.0, 0.4, 1.0).unwrap();
        assert!(t.at_endpoint);
        assert!(t.mu_hat.abs() < 1e-9);
        let residual = inventory_minus_bridge_cost(2.0, t.mu_hat, 0.4, 1.0).unwrap();
        assert!(residual.abs() < 1e-9);
        // Sign change straddles the root.
        assert!(inventory_minus_bridge_cost(2.0, -1e-6, 0.4, 1.0).unwrap() > 0.0);
        assert!(inventory_minus_bridge_cost(2.0, 1e-6, 0.4, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn mu_threshold_hypothesis_violated() {
        assert!(matches!(
            mu_threshold(2.0, 1.0, 1.0),
            Err(ModelError::HypothesisViolated)
        ));
    }

    #[test]
    fn cost_difference_decreasing_in_mu_under_hypothesis() {
        let (p, lambda, delta) = (2.0, 0.4, 1.0);
        assert!(1.0 / lambda > delta * p);
        let mut last = f64::INFINITY;
        for i in 0..=100 {
            let mu = -lambda + i as f64 * (lambda / 100.0);
            let v = inventory_minus_bridge_cost(p, mu, lambda, delta).unwrap();
            assert!(v < last, "not strictly decreasing at mu={mu}");
            last = v;
        }
    }

    #[test]
    fn params_validation() {
        let mut pr = params();
        pr.sigma = -0.1;
        assert!(pr.validate().is_err());
        pr = params();
        pr.k = 1.5;
        assert!(pr.validate().is_err());
        pr = params();
        pr.lambda = 0.0;
        assert!(pr.validate().is_err());
        assert!(params().validate().is_ok());
    }
}
