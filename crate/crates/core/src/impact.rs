//! The rebalance/impact feedback loop.
//!
//! A relative price change `x` makes the Kelly investor trade
//! `A (L - 1) x` shares to restore leverage `L`. Those shares move the price
//! through the power law `|dtheta| = kappa |x'|^gamma`, producing the next
//! change `x'`. Composing the two gives the one-dimensional map
//!
//! ```text
//! x' = sign((L - 1) x) * (A |L - 1| |x| / kappa)^(1 / gamma)
//! ```
//!
//! In frozen mode `A` is a fixed positive constant. In full mode
//! `A = L V / S` is read from the portfolio, which is advanced with the
//! self-financing rule at every step.

use std::io;

use crate::error::{finite, positive, Error, Result};
use crate::fmt::sig;
use crate::kelly::{self, MarketParams, PortfolioState};

/// `|x|` above which a trajectory is declared run-away.
pub const BLOWUP: f64 = 1e12;
/// `|x|` below which a trajectory is declared settled at the origin.
pub const UNDERFLOW: f64 = 1e-15;

/// Power-law impact `|dtheta| = kappa |x|^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactLaw {
    gamma: f64,
    kappa: f64,
}

impl ImpactLaw {
    pub fn new(gamma: f64, kappa: f64) -> Result<Self> {
        Ok(Self {
            gamma: positive("gamma", gamma)?,
            kappa: positive("kappa", kappa)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Relative price change caused by trading `dtheta` shares; odd in
    /// `dtheta`.
    pub fn price_change(&self, dtheta: f64) -> f64 {
        if dtheta == 0.0 {
            return 0.0;
        }
        dtheta.signum() * (dtheta.abs() / self.kappa).powf(1.0 / self.gamma)
    }
}

/// Free-function form of [`ImpactLaw::price_change`].
pub fn impact_price_change(law: &ImpactLaw, dtheta: f64) -> f64 {
    law.price_change(dtheta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RebalanceScale {
    /// Fixed prefactor `A0 > 0`.
    Frozen(f64),
    /// `A = L V / S` recomputed from the portfolio; `dt` is the time between
    /// rebalances used for money-market accrual.
    Full { market: MarketParams, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackMap {
    leverage: f64,
    impact: ImpactLaw,
    scale: RebalanceScale,
}

/// Result of one application of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub dtheta: f64,
    pub next_x: f64,
    /// Portfolio after the move; unchanged in frozen mode.
    pub next_state: PortfolioState,
    /// `next_x` left the finite range or exceeded [`BLOWUP`].
    pub blowup: bool,
}

impl FeedbackMap {
    pub fn frozen(leverage: f64, impact: ImpactLaw, a0: f64) -> Result<Self> {
        Ok(Self {
            leverage: finite("leverage", leverage)?,
            impact,
            scale: RebalanceScale::Frozen(positive("A0", a0)?),
        })
    }

    /// Frozen map whose prefactor is read once from `state`.
    pub fn frozen_at(leverage: f64, impact: ImpactLaw, state: &PortfolioState) -> Result<Self> {
        Self::frozen(leverage, impact, leverage * state.value / state.price)
    }

    /// Full mode; the leverage is the Kelly ratio of `market`.
    pub fn full(market: MarketParams, impact: ImpactLaw, dt: f64) -> Result<Self> {
        Ok(Self {
            leverage: kelly::optimal_leverage(&market)?,
            impact,
            scale: RebalanceScale::Full {
                market,
                dt: finite("dt", dt)?,
            },
        })
    }

    pub fn leverage(&self) -> f64 {
        self.leverage
    }

    pub fn impact(&self) -> &ImpactLaw {
        &self.impact
    }

    pub fn scale(&self) -> &RebalanceScale {
        &self.scale
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self.scale, RebalanceScale::Frozen(_))
    }

    /// The prefactor `A` in effect for `state`.
    pub fn rebalance_prefactor(&self, state: &PortfolioState) -> f64 {
        match self.scale {
            RebalanceScale::Frozen(a0) => a0,
            RebalanceScale::Full { .. } => self.leverage * state.value / state.price,
        }
    }

    /// Frozen-mode slope `A |L - 1| / kappa` of the rebalance line in impact
    /// units.
    pub fn slope(&self) -> Result<f64> {
        match self.scale {
            RebalanceScale::Frozen(a0) => Ok(a0 * (self.leverage - 1.0).abs() / self.impact.kappa),
            RebalanceScale::Full { .. } => Err(Error::WrongMode("frozen")),
        }
    }

    /// Shares traded to restore the leverage after a relative move `x`.
    pub fn rebalance_share_change(&self, x: f64, state: &PortfolioState) -> f64 {
        self.rebalance_prefactor(state) * (self.leverage - 1.0) * x
    }

    /// The pure one-dimensional map; frozen mode only.
    pub fn g(&self, x: f64) -> Result<f64> {
        match self.scale {
            RebalanceScale::Frozen(a0) => {
                Ok(self.impact.price_change(a0 * (self.leverage - 1.0) * x))
            }
            RebalanceScale::Full { .. } => Err(Error::WrongMode("frozen")),
        }
    }

    /// One rebalance followed by its price impact. In full mode the
    /// portfolio is advanced by the move `x`.
    pub fn step(&self, x: f64, state: &PortfolioState) -> Result<Transition> {
        finite("x", x)?;
        let dtheta = self.rebalance_share_change(x, state);
        let next_x = self.impact.price_change(dtheta);
        let next_state = match self.scale {
            RebalanceScale::Frozen(_) => *state,
            RebalanceScale::Full { market, dt } => {
                kelly::self_financing_step(&market, state, x, dt)?
            }
        };
        Ok(Transition {
            dtheta,
            next_x,
            next_state,
            blowup: !next_x.is_finite() || next_x.abs() > BLOWUP,
        })
    }

    /// Nonzero magnitude `x*` with `|g(x*)| = x*`.
    ///
    /// With slope `c = A |L - 1| / kappa` the magnitude map is
    /// `|x| -> (c |x|)^(1/gamma)`, whose nonzero fixed point is
    /// `x* = c^(-1/(1 - gamma))`. For `L > 1` this is a fixed point of `g`;
    /// for `L < 1` the orbit is the two-cycle `{x*, -x*}`. For `gamma < 1` the
    /// point repels (smaller magnitudes decay, larger ones explode); for
    /// `gamma > 1` it attracts every nonzero start. Returns `None` when
    /// `L == 1` or when `x*` is not representable.
    pub fn unstable_fixed_point(&self) -> Result<Option<f64>> {
        let c = self.slope()?;
        let gamma = self.impact.gamma;
        if gamma == 1.0 {
            return Err(Error::DegenerateExponent(
                "gamma = 1 makes the map linear; no isolated nonzero fixed point",
            ));
        }
        if c == 0.0 {
            return Ok(None);
        }
        let x = c.powf(-1.0 / (1.0 - gamma));
        Ok((x.is_finite() && x > 0.0).then_some(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    /// `x` is exactly zero.
    FixedPoint,
    Underflow,
    Blowup,
    MaxSteps,
}

impl HaltReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltReason::FixedPoint => "fixed_point",
            HaltReason::Underflow => "underflow",
            HaltReason::Blowup => "blowup",
            HaltReason::MaxSteps => "max_steps",
        }
    }
}

/// One row of a trajectory: the portfolio at the start of the step, the
/// relative move `x` applied during it and the trade that move triggers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub x: f64,
    pub theta_change: f64,
    pub state: PortfolioState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub halt: HaltReason,
    /// Portfolio after the last recorded move.
    pub final_state: PortfolioState,
}

impl Trajectory {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// Writes `step,x,dtheta,S,V,halt_reason`; the halt reason appears only
    /// on the last row.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["step", "x", "dtheta", "S", "V", "halt_reason"])?;
        let last = self.points.len().saturating_sub(1);
        for (i, p) in self.points.iter().enumerate() {
            let halt = if i == last { self.halt.as_str() } else { "" };
            out.write_record([
                p.step.to_string(),
                sig(p.x),
                sig(p.theta_change),
                sig(p.state.price),
                sig(p.state.value),
                halt.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn halt_for(x: f64) -> Option<HaltReason> {
    if x == 0.0 {
        Some(HaltReason::FixedPoint)
    } else if !x.is_finite() || x.abs() > BLOWUP {
        Some(HaltReason::Blowup)
    } else if x.abs() < UNDERFLOW {
        Some(HaltReason::Underflow)
    } else {
        None
    }
}

/// Iterates the map from `x0` for at most `n_steps` rows.
///
/// A row whose `x` is zero, below [`UNDERFLOW`] or above [`BLOWUP`] in
/// magnitude is recorded and ends the run with the matching reason.
pub fn simulate(
    map: &FeedbackMap,
    x0: f64,
    n_steps: usize,
    initial_state: &PortfolioState,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: 0.0,
            reason: "at least one step is required",
        });
    }
    finite("x0", x0)?;

    let mut points = Vec::with_capacity(n_steps.min(1 << 16));
    let mut x = x0;
    let mut state = *initial_state;
    let mut halt = HaltReason::MaxSteps;
    for step in 0..n_steps {
        let stop = halt_for(x);
        // A blown-up x is recorded but not pushed through the map again.
        let t = if stop == Some(HaltReason::Blowup) {
            None
        } else {
            Some(map.step(x, &state)?)
        };
        points.push(TrajectoryPoint {
            step,
            x,
            theta_change: t.map_or_else(|| map.rebalance_share_change(x, &state), |t| t.dtheta),
            state,
        });
        if let Some(t) = t {
            state = t.next_state;
            x = t.next_x;
        }
        if let Some(reason) = stop {
            halt = reason;
            break;
        }
    }
    Ok(Trajectory {
        points,
        halt,
        final_state: state,
    })
}
