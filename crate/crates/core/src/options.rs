//! Black-Scholes calls whose replicating portfolio is the Kelly portfolio.
//!
//! A call is replicated by `N(d1)` shares and `-K e^{-r tau} N(d2)` in bonds.
//! It reproduces the Kelly portfolio when
//!
//! ```text
//! N(d1) = L C / S
//! N(d2) = -(1 - L) C e^{r tau} / K
//! ```
//!
//! with `L = lambda / sigma`. Because `C = S N(d1) - K e^{-r tau} N(d2)`, the
//! second residual equals `S e^{r tau} / K` times the first, so the matches
//! form a one-parameter family in `(K, tau)`. The search therefore fixes a
//! strike and solves for maturity.

use crate::error::{finite, positive, Error, Result};
use crate::normal;
use crate::roots;

/// Largest `sigma sqrt(tau)` the at-the-money solver will report.
pub const ATM_CAP: f64 = 50.0;
/// Residual bound for an accepted general match.
pub const MATCH_TOL: f64 = 1e-9;
pub const TAU_RANGE: (f64, f64) = (1e-3, 50.0);
pub const MONEYNESS_RANGE: (f64, f64) = (0.01, 100.0);

const TAU_SCAN_POINTS: usize = 241;
/// Strikes per decade on each side of the money in the unpinned search.
const STRIKES_PER_DECADE: i32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallSpec {
    pub spot: f64,
    pub strike: f64,
    pub sigma: f64,
    pub r: f64,
    /// Time to maturity.
    pub tau: f64,
}

impl CallSpec {
    pub fn new(spot: f64, strike: f64, sigma: f64, r: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            spot: positive("spot", spot)?,
            strike: positive("strike", strike)?,
            sigma: positive("sigma", sigma)?,
            r: finite("r", r)?,
            tau: positive("tau", tau)?,
        })
    }

    pub fn d1(&self) -> f64 {
        let vol = self.sigma * self.tau.sqrt();
        ((self.spot / self.strike).ln() + (self.r + 0.5 * self.sigma * self.sigma) * self.tau) / vol
    }

    pub fn d2(&self) -> f64 {
        self.d1() - self.sigma * self.tau.sqrt()
    }

    fn with_spot(&self, spot: f64) -> Self {
        Self { spot, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallValue {
    pub price: f64,
    pub n_d1: f64,
    pub n_d2: f64,
}

pub fn call_price(spec: &CallSpec) -> CallValue {
    let n_d1 = normal::cdf(spec.d1());
    let n_d2 = normal::cdf(spec.d2());
    CallValue {
        price: spec.spot * n_d1 - spec.strike * (-spec.r * spec.tau).exp() * n_d2,
        n_d1,
        n_d2,
    }
}

/// Central-difference delta with step `1e-4 * S`.
pub fn delta_check(spec: &CallSpec) -> f64 {
    let h = 1e-4 * spec.spot;
    let up = call_price(&spec.with_spot(spec.spot + h)).price;
    let down = call_price(&spec.with_spot(spec.spot - h)).price;
    (up - down) / (2.0 * h)
}

/// `N(d1)` demanded of an at-the-money, zero-rate match: `1 / (2 - sigma/lambda)`.
pub fn atm_target(lambda: f64, sigma: f64) -> f64 {
    1.0 / (2.0 - sigma / lambda)
}

/// `N(y/2) - target` for `y = sigma sqrt(tau)`.
pub fn atm_residual(lambda: f64, sigma: f64, sigma_root_tau: f64) -> f64 {
    normal::cdf(0.5 * sigma_root_tau) - atm_target(lambda, sigma)
}

/// Total volatility `sigma sqrt(tau)` of the at-the-money, zero-rate call
/// that replicates the Kelly portfolio. Requires `lambda > sigma > 0`.
///
/// Solved in the upper-tail form `N(-y/2) = (lambda - sigma) / (2 lambda - sigma)`,
/// which keeps full precision as `lambda / sigma -> 1`.
pub fn atm_match(lambda: f64, sigma: f64) -> Result<f64> {
    atm_match_capped(lambda, sigma, ATM_CAP)
}

/// [`atm_match`] with an explicit cap on `sigma sqrt(tau)`.
pub fn atm_match_capped(lambda: f64, sigma: f64, cap: f64) -> Result<f64> {
    positive("sigma", sigma)?;
    finite("lambda", lambda)?;
    positive("cap", cap)?;
    if lambda <= sigma {
        return Err(Error::NoSolution(
            "an at-the-money match needs lambda > sigma",
        ));
    }
    let tail = (lambda - sigma) / (2.0 * lambda - sigma);
    let f = |y: f64| tail - normal::cdf(-0.5 * y);
    if f(cap) < 0.0 {
        return Err(Error::Unbounded { cap });
    }
    roots::safeguarded_newton(f, |y| 0.5 * normal::pdf(0.5 * y), 0.0, cap).ok_or(Error::NoSolution(
        "no bracket for the at-the-money equation",
    ))
}

/// Maps a solution `(sigma*, tau*)` to `(sigma*/alpha, tau* alpha^2)`, which
/// leaves `sigma sqrt(tau)` and hence the matching equation unchanged.
pub fn scaling_family(sigma_star: f64, tau_star: f64, alpha: f64) -> Result<(f64, f64)> {
    positive("alpha", alpha)?;
    Ok((sigma_star / alpha, tau_star * alpha * alpha))
}

/// Market data for a general match. `strike = None` lets the search pick the
/// strike closest to the money that admits a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchProblem {
    pub spot: f64,
    pub sigma: f64,
    pub r: f64,
    pub lambda: f64,
    pub strike: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchSolution {
    pub strike: f64,
    pub tau: f64,
    pub n_d1: f64,
    pub n_d2: f64,
    pub residual_d1: f64,
    pub residual_d2: f64,
}

impl MatchProblem {
    fn validate(&self) -> Result<()> {
        positive("spot", self.spot)?;
        positive("sigma", self.sigma)?;
        finite("r", self.r)?;
        finite("lambda", self.lambda)?;
        if let Some(k) = self.strike {
            positive("strike", k)?;
        }
        Ok(())
    }

    fn leverage(&self) -> f64 {
        self.lambda / self.sigma
    }

    /// Both matching residuals for a candidate `(K, tau)`.
    pub fn residuals(&self, strike: f64, tau: f64) -> (f64, f64, CallValue) {
        let value = call_price(&CallSpec {
            spot: self.spot,
            strike,
            sigma: self.sigma,
            r: self.r,
            tau,
        });
        let l = self.leverage();
        let first = value.n_d1 - l * value.price / self.spot;
        let second = value.n_d2 + (1.0 - l) * value.price * (self.r * tau).exp() / strike;
        (first, second, value)
    }

    /// `L (K/S) (e^{-r tau} - 1) >= -1`, implied by `N(d1) >= N(d2)`.
    pub fn satisfies_constraint(&self, strike: f64, tau: f64) -> bool {
        self.leverage() * (strike / self.spot) * ((-self.r * tau).exp() - 1.0) >= -1.0
    }

    /// Maturity matching a fixed strike, searched in log tau.
    fn solve_for_strike(&self, strike: f64) -> Option<MatchSolution> {
        let f = |v: f64| self.residuals(strike, v.exp()).0;
        let (lo, hi) = (TAU_RANGE.0.ln(), TAU_RANGE.1.ln());
        let grid: Vec<f64> = (0..TAU_SCAN_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (TAU_SCAN_POINTS - 1) as f64)
            .collect();
        let (a, b) = roots::first_bracket(f, &grid)?;
        let v = if a == b {
            a
        } else {
            let df = |v: f64| {
                let h = 1e-6;
                (f(v + h) - f(v - h)) / (2.0 * h)
            };
            roots::safeguarded_newton(f, df, a, b)?
        };
        let tau = v.exp();
        let (residual_d1, residual_d2, value) = self.residuals(strike, tau);
        // Far out of the money every term underflows to zero; that is not a match.
        let accepted = value.price > 0.0
            && value.n_d2 > 0.0
            && residual_d1.abs() < MATCH_TOL
            && residual_d2.abs() < MATCH_TOL
            && self.satisfies_constraint(strike, tau);
        accepted.then_some(MatchSolution {
            strike,
            tau,
            n_d1: value.n_d1,
            n_d2: value.n_d2,
            residual_d1,
            residual_d2,
        })
    }

    /// Candidate strikes: the pinned one, or a log grid over
    /// [`MONEYNESS_RANGE`] ordered by distance from the money.
    fn candidate_strikes(&self) -> Vec<f64> {
        if let Some(k) = self.strike {
            return vec![k];
        }
        let decades = MONEYNESS_RANGE.1.log10().round() as i32;
        let n = decades * STRIKES_PER_DECADE;
        let mut offsets: Vec<i32> = (-n..=n).collect();
        offsets.sort_by_key(|j| (j.abs(), *j));
        offsets
            .into_iter()
            .map(|j| self.spot * 10f64.powf(j as f64 / STRIKES_PER_DECADE as f64))
            .collect()
    }
}

/// First accepted `(K, tau)` solving both matching equations, or `None`.
pub fn general_match(problem: &MatchProblem) -> Result<Option<MatchSolution>> {
    problem.validate()?;
    Ok(problem
        .candidate_strikes()
        .into_iter()
        .find_map(|k| problem.solve_for_strike(k)))
}

/// Every accepted solution across the candidate strikes.
pub fn match_family(problem: &MatchProblem) -> Result<Vec<MatchSolution>> {
    problem.validate()?;
    Ok(problem
        .candidate_strikes()
        .into_iter()
        .filter_map(|k| problem.solve_for_strike(k))
        .collect())
}
