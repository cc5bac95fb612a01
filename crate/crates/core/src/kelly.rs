//! Kelly-optimal allocation for one risky asset believed to follow a
//! geometric Brownian motion, plus the self-financing bookkeeping that goes
//! with it.
//!
//! Rebalancing here is instantaneous and costless. Price impact lives in
//! [`crate::impact`].

use crate::error::{finite, positive, Error, Result};

/// Relative tolerance for the value identity `theta*S + phi*B == V`.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Slow market variables as believed by the Kelly investor.
///
/// The drift is derived (`mu = r + sigma*lambda`) and never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    lambda: f64,
    sigma: f64,
    r: f64,
}

impl MarketParams {
    pub fn new(lambda: f64, sigma: f64, r: f64) -> Result<Self> {
        Ok(Self {
            lambda: finite("lambda", lambda)?,
            sigma: positive("sigma", sigma)?,
            r: finite("r", r)?,
        })
    }

    /// Market price of risk.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn mu(&self) -> f64 {
        self.r + self.sigma * self.lambda
    }

    /// Kelly leverage ratio `lambda / sigma`.
    pub fn optimal_leverage(&self) -> f64 {
        self.lambda / self.sigma
    }

    /// Same ratio through the drift route, `(mu - r) / sigma^2`.
    pub fn leverage_from_drift(&self) -> f64 {
        (self.mu() - self.r) / (self.sigma * self.sigma)
    }
}

/// Holdings and prices at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioState {
    /// Shares of the risky asset.
    pub theta: f64,
    /// Units of the money-market account.
    pub phi: f64,
    /// Risky asset price.
    pub price: f64,
    /// Money-market unit value.
    pub bond: f64,
    /// Portfolio value.
    pub value: f64,
}

impl PortfolioState {
    /// Builds a state from holdings; the value follows from the identity.
    pub fn new(theta: f64, phi: f64, price: f64, bond: f64) -> Result<Self> {
        let state = Self {
            theta: finite("theta", theta)?,
            phi: finite("phi", phi)?,
            price: positive("price", price)?,
            bond: positive("bond", bond)?,
            value: theta * price + phi * bond,
        };
        Ok(state)
    }

    /// A portfolio of value `value` holding fraction `leverage` of it in the
    /// risky asset.
    pub fn allocated(value: f64, price: f64, bond: f64, leverage: f64) -> Result<Self> {
        finite("value", value)?;
        finite("leverage", leverage)?;
        positive("price", price)?;
        positive("bond", bond)?;
        Ok(Self {
            theta: leverage * value / price,
            phi: (1.0 - leverage) * value / bond,
            price,
            bond,
            value,
        })
    }

    /// Relative violation of `theta*S + phi*B == V`.
    pub fn identity_error(&self) -> f64 {
        let held = self.theta * self.price + self.phi * self.bond;
        let scale = self
            .value
            .abs()
            .max((self.theta * self.price).abs())
            .max(f64::MIN_POSITIVE);
        (held - self.value).abs() / scale
    }

    pub fn satisfies_identity(&self) -> bool {
        self.identity_error() <= IDENTITY_TOL
    }

    /// Fraction of value held in the risky asset.
    pub fn leverage(&self) -> f64 {
        self.theta * self.price / self.value
    }

    fn check_prices(&self) -> Result<()> {
        if !(self.price > 0.0) {
            return Err(Error::DegenerateState("risky price must be positive"));
        }
        if !(self.bond > 0.0) {
            return Err(Error::DegenerateState(
                "money-market value must be positive",
            ));
        }
        Ok(())
    }
}

/// Kelly leverage ratio `lambda / sigma`. May be negative or exceed one.
pub fn optimal_leverage(params: &MarketParams) -> Result<f64> {
    finite("leverage", params.optimal_leverage())
}

/// Kelly holdings `(theta*, phi*)` for the value carried by `state`.
pub fn optimal_allocation(params: &MarketParams, state: &PortfolioState) -> Result<(f64, f64)> {
    state.check_prices()?;
    let leverage = optimal_leverage(params)?;
    Ok((
        leverage * state.value / state.price,
        (1.0 - leverage) * state.value / state.bond,
    ))
}

/// Drift of `log V` when a fraction `leverage` sits in the risky asset:
/// `r + lambda*sigma*L - sigma^2 L^2 / 2`.
pub fn log_growth_drift(params: &MarketParams, leverage: f64) -> f64 {
    let s = params.sigma;
    params.r + params.lambda * s * leverage - 0.5 * s * s * leverage * leverage
}

/// Optimal fraction for an even-money bet won with probability `p`.
pub fn kelly_fraction_binary(p: f64, q: f64) -> Result<f64> {
    finite("p", p)?;
    finite("q", q)?;
    let sum = p + q;
    if (sum - 1.0).abs() > 1e-12 || !(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidProbability { sum });
    }
    if p <= q {
        return Err(Error::NoEdge { p, q });
    }
    Ok(p - q)
}

/// Moves the price by `ds_over_s`, accrues interest for `dt`, marks the old
/// holdings to market and rebalances to the Kelly allocation.
///
/// The new value is `theta*S' + phi*B'`, so the step is self-financing by
/// construction. For an optimally allocated input this equals
/// `V * (1 + L*dS/S + (1-L)*r*dt)`.
pub fn self_financing_step(
    params: &MarketParams,
    state: &PortfolioState,
    ds_over_s: f64,
    dt: f64,
) -> Result<PortfolioState> {
    state.check_prices()?;
    finite("ds_over_s", ds_over_s)?;
    finite("dt", dt)?;
    let price = state.price * (1.0 + ds_over_s);
    if !(price > 0.0) || !price.is_finite() {
        return Err(Error::DynamicsBreakdown { price });
    }
    let bond = state.bond * (1.0 + params.r * dt);
    if !(bond > 0.0) {
        return Err(Error::DegenerateState(
            "money-market value must stay positive",
        ));
    }
    let value = state.theta * price + state.phi * bond;
    let leverage = optimal_leverage(params)?;
    Ok(PortfolioState {
        theta: leverage * value / price,
        phi: (1.0 - leverage) * value / bond,
        price,
        bond,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn leverage_examples() {
        let p = MarketParams::new(0.2, 0.4, 0.0).unwrap();
        assert_eq!(optimal_leverage(&p).unwrap(), 0.5);
        for &s in &[0.05, 0.3, 1.7] {
            let p = MarketParams::new(s, s, 0.02).unwrap();
            assert_eq!(optimal_leverage(&p).unwrap(), 1.0);
        }
        let p = MarketParams::new(0.3, 0.15, 0.01).unwrap();
        assert!(close(p.optimal_leverage(), 2.0, 1e-15));
        assert!(close(p.leverage_from_drift(), 2.0, 1e-12));
        assert!(close(p.mu() - p.r(), p.sigma() * p.lambda(), 1e-15));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MarketParams::new(f64::NAN, 0.2, 0.0).is_err());
        assert!(MarketParams::new(0.1, 0.0, 0.0).is_err());
        assert!(MarketParams::new(0.1, -0.2, 0.0).is_err());
        assert!(MarketParams::new(0.1, 0.2, f64::INFINITY).is_err());
    }

    #[test]
    fn allocation_examples() {
        let half = MarketParams::new(0.2, 0.4, 0.0).unwrap();
        let state = PortfolioState::allocated(100.0, 50.0, 1.0, 0.0).unwrap();
        let (theta, phi) = optimal_allocation(&half, &state).unwrap();
        assert_eq!((theta, phi), (1.0, 50.0));

        let one = MarketParams::new(0.3, 0.3, 0.0).unwrap();
        let (_, phi) = optimal_allocation(&one, &state).unwrap();
        assert_eq!(phi, 0.0);

        let two = MarketParams::new(0.4, 0.2, 0.0).unwrap();
        let state = PortfolioState::allocated(100.0, 25.0, 1.0, 0.3).unwrap();
        let (theta, phi) = optimal_allocation(&two, &state).unwrap();
        assert!(close(theta, 8.0, 1e-15));
        assert!(close(phi, -100.0, 1e-15));
        assert!(close(theta * 25.0 + phi, 100.0, 1e-12));
        assert!(close(theta * 25.0 / 100.0, 2.0, 1e-12));
    }

    #[test]
    fn degenerate_state_rejected() {
        let p = MarketParams::new(0.2, 0.4, 0.0).unwrap();
        let mut state = PortfolioState::allocated(100.0, 50.0, 1.0, 0.5).unwrap();
        state.price = 0.0;
        assert!(matches!(
            optimal_allocation(&p, &state),
            Err(Error::DegenerateState(_))
        ));
        let mut state = PortfolioState::allocated(100.0, 50.0, 1.0, 0.5).unwrap();
        state.bond = 0.0;
        assert!(matches!(
            optimal_allocation(&p, &state),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn drift_examples() {
        let p = MarketParams::new(0.2, 0.4, 0.0).unwrap();
        let at = log_growth_drift(&p, 0.5);
        assert!(close(at, 0.02, 1e-15));
        let eps = 1e-4;
        assert!(log_growth_drift(&p, 0.5 + eps) < at);
        assert!(log_growth_drift(&p, 0.5 - eps) < at);

        let p = MarketParams::new(0.25, 0.3, 0.03).unwrap();
        assert_eq!(log_growth_drift(&p, 0.0), 0.03);
        let best = log_growth_drift(&p, p.optimal_leverage());
        assert!(close(best, 0.03 + 0.25 * 0.25 / 2.0, 1e-15));
    }

    #[test]
    fn binary_kelly() {
        assert!(close(kelly_fraction_binary(0.6, 0.4).unwrap(), 0.2, 1e-15));
        let eps = 0.013;
        assert!(close(
            kelly_fraction_binary(0.5 + eps, 0.5 - eps).unwrap(),
            2.0 * eps,
            1e-14
        ));
        assert!(matches!(
            kelly_fraction_binary(0.4, 0.6),
            Err(Error::NoEdge { .. })
        ));
        assert!(matches!(
            kelly_fraction_binary(0.5, 0.5),
            Err(Error::NoEdge { .. })
        ));
        assert!(matches!(
            kelly_fraction_binary(0.6, 0.5),
            Err(Error::InvalidProbability { .. })
        ));
    }

    #[test]
    fn binary_kelly_maximizes_expected_log() {
        let (p, q): (f64, f64) = (0.6, 0.4);
        let step = 1e-5;
        let mut best = (0.0, f64::NEG_INFINITY);
        let mut f: f64 = step;
        while f < 1.0 {
            let g = p * (1.0 + f).ln() + q * (1.0 - f).ln();
            if g > best.1 {
                best = (f, g);
            }
            f += step;
        }
        let kelly = kelly_fraction_binary(p, q).unwrap();
        assert!((best.0 - kelly).abs() <= step);
    }

    #[test]
    fn self_financing_examples() {
        let full = MarketParams::new(0.3, 0.3, 0.0).unwrap();
        let s = PortfolioState::allocated(100.0, 10.0, 1.0, 1.0).unwrap();
        let next = self_financing_step(&full, &s, 0.01, 1.0).unwrap();
        assert!(close(next.value / s.value, 1.01, 1e-14));

        let cash = MarketParams::new(0.0, 0.3, 0.05).unwrap();
        let s = PortfolioState::allocated(100.0, 10.0, 1.0, 0.0).unwrap();
        let next = self_financing_step(&cash, &s, 0.2, 1.0).unwrap();
        assert!(close(next.value / s.value, 1.05, 1e-14));

        let two = MarketParams::new(0.4, 0.2, 0.0).unwrap();
        let s = PortfolioState::allocated(100.0, 100.0, 1.0, 2.0).unwrap();
        assert_eq!(s.theta, 2.0);
        let next = self_financing_step(&two, &s, 0.01, 1.0).unwrap();
        assert!(close(next.value, 102.0, 1e-14));
        assert!(close(next.theta, 2.0 * 102.0 / 101.0, 1e-14));
        let (theta, phi) = optimal_allocation(&two, &next).unwrap();
        assert!(close(theta, next.theta, 1e-15) && close(phi, next.phi, 1e-15));
        assert!(next.satisfies_identity());
    }

    #[test]
    fn step_matches_closed_form_value_update() {
        let p = MarketParams::new(0.5, 0.25, 0.04).unwrap();
        let lev = p.optimal_leverage();
        let s = PortfolioState::allocated(10.0, 3.0, 1.2, lev).unwrap();
        let (x, dt) = (-0.013, 0.1);
        let next = self_financing_step(&p, &s, x, dt).unwrap();
        let expected = s.value * (1.0 + lev * x + (1.0 - lev) * 0.04 * dt);
        assert!(close(next.value, expected, 1e-13));
    }

    #[test]
    fn price_breakdown() {
        let p = MarketParams::new(0.4, 0.2, 0.0).unwrap();
        let s = PortfolioState::allocated(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!(matches!(
            self_financing_step(&p, &s, -1.0, 1.0),
            Err(Error::DynamicsBreakdown { .. })
        ));
        assert!(matches!(
            self_financing_step(&p, &s, -1.5, 1.0),
            Err(Error::DynamicsBreakdown { .. })
        ));
    }

    #[test]
    fn zero_move_is_a_fixed_point() {
        let p = MarketParams::new(0.7, 0.35, 0.0).unwrap();
        let s = PortfolioState::new(1.0, 1.0, 3.0, 1.0).unwrap();
        let (theta, phi) = optimal_allocation(&p, &s).unwrap();
        let s = PortfolioState::new(theta, phi, 3.0, 1.0).unwrap();
        let next = self_financing_step(&p, &s, 0.0, 1.0).unwrap();
        assert!(close(next.theta, s.theta, 1e-15));
        assert!(close(next.phi, s.phi, 1e-15));
        assert!(close(next.value, s.value, 1e-15));
    }
}
