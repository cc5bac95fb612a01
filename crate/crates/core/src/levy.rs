//! Kelly leverage for geometric Lévy models.
//!
//! A model is described by its Lévy exponent `psi`, with
//! `E[exp(s X_t)] = exp(psi(s) t)`, and a risk premium `R(lambda, sigma)`.
//! Expanding the expected log of a short-horizon portfolio to first order in
//! `t` gives a concave quadratic in the invested fraction whose maximiser is
//! `R / (psi(2 sigma) - 2 psi(sigma))`.

use std::fmt;
use std::sync::Arc;

use crate::error::{finite, positive, Error, Result};

/// Smallest accepted value of `psi(2s) - 2 psi(s)`.
pub const MIN_CURVATURE: f64 = 1e-14;

type Exponent = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Premium = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct LevyModel {
    name: String,
    psi: Exponent,
    risk_premium: Premium,
}

impl fmt::Debug for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyModel")
            .field("name", &self.name)
            .finish()
    }
}

impl LevyModel {
    /// Registers a custom model. Rejected unless `psi(0) == 0`.
    pub fn new<P, R>(name: impl Into<String>, psi: P, risk_premium: R) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        R: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let at_zero = psi(0.0);
        if !(at_zero.abs() <= 1e-15) {
            return Err(Error::InvalidParameter {
                name: "psi(0)",
                value: at_zero,
                reason: "Levy exponent must vanish at zero",
            });
        }
        Ok(Self {
            name: name.into(),
            psi: Arc::new(psi),
            risk_premium: Arc::new(risk_premium),
        })
    }

    /// `psi(s) = s^2 / 2`.
    pub fn brownian() -> Self {
        Self::new("brownian", |s| 0.5 * s * s, default_premium).expect("psi(0) = 0")
    }

    /// Compensated Poisson jumps of unit size at intensity `m`:
    /// `psi(s) = m (e^s - 1 - s)`.
    pub fn poisson_jump(m: f64) -> Result<Self> {
        positive("m", m)?;
        Self::new("poisson", move |s| m * (s.exp_m1() - s), default_premium)
    }

    /// Brownian part plus compensated Poisson jumps.
    pub fn jump_diffusion(m: f64) -> Result<Self> {
        positive("m", m)?;
        Self::new(
            "jump-diffusion",
            move |s| 0.5 * s * s + m * (s.exp_m1() - s),
            default_premium,
        )
    }

    /// Looks up a built-in model. `m` is the jump intensity where relevant.
    pub fn by_name(name: &str, m: f64) -> Result<Self> {
        match name {
            "brownian" | "gbm" => Ok(Self::brownian()),
            "poisson" | "poisson-jump" => Self::poisson_jump(m),
            "jump-diffusion" => Self::jump_diffusion(m),
            _ => Err(Error::InvalidParameter {
                name: "model",
                value: f64::NAN,
                reason: "unknown model (expected brownian, poisson or jump-diffusion)",
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn psi(&self, s: f64) -> f64 {
        (self.psi)(s)
    }

    pub fn risk_premium(&self, lambda: f64, sigma: f64) -> f64 {
        (self.risk_premium)(lambda, sigma)
    }

    /// `psi(2 sigma) - 2 psi(sigma)`, the variance rate of the invested part.
    pub fn curvature(&self, sigma: f64) -> f64 {
        self.psi(2.0 * sigma) - 2.0 * self.psi(sigma)
    }
}

fn default_premium(lambda: f64, sigma: f64) -> f64 {
    lambda * sigma
}

/// Short-time Kelly leverage `R(lambda, sigma) / (psi(2 sigma) - 2 psi(sigma))`.
pub fn glm_optimal_leverage(model: &LevyModel, lambda: f64, sigma: f64) -> Result<f64> {
    finite("lambda", lambda)?;
    finite("sigma", sigma)?;
    let denom = model.curvature(sigma);
    if !(denom > MIN_CURVATURE) {
        return Err(Error::DegenerateExponent(
            "psi(2 sigma) - 2 psi(sigma) must be positive",
        ));
    }
    finite("leverage", model.risk_premium(lambda, sigma) / denom)
}

/// Expected log wealth to first order in `t` when `invested` of a unit
/// portfolio sits in the risky asset and the rest earns `r`.
pub fn glm_log_utility_expansion(
    model: &LevyModel,
    lambda: f64,
    sigma: f64,
    invested: f64,
    t: f64,
    r: f64,
) -> f64 {
    let premium = model.risk_premium(lambda, sigma);
    invested * premium * t + r * t - 0.5 * invested * invested * model.curvature(sigma) * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    Lambda,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    /// Estimates at step sizes `h` and `h/2` agree to the requested tolerance.
    Converged,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub value: f64,
    pub confidence: Confidence,
}

/// Relative agreement required between the two Richardson estimates.
pub const SENSITIVITY_TOL: f64 = 1e-6;

/// Partial derivative of [`glm_optimal_leverage`] by central differences
/// with one Richardson extrapolation, evaluated at steps `h` and `h/2`.
pub fn glm_leverage_sensitivity(
    model: &LevyModel,
    lambda: f64,
    sigma: f64,
    wrt: Wrt,
) -> Result<Sensitivity> {
    let base = match wrt {
        Wrt::Lambda => lambda,
        Wrt::Sigma => sigma,
    };
    // For sigma the stencil must stay on the same side of zero.
    let h = match wrt {
        Wrt::Lambda => 1e-3 * base.abs().max(1e-2),
        Wrt::Sigma => 1e-3 * base.abs().max(1e-6),
    };
    let eval = |v: f64| match wrt {
        Wrt::Lambda => glm_optimal_leverage(model, v, sigma),
        Wrt::Sigma => glm_optimal_leverage(model, lambda, v),
    };
    let central =
        |step: f64| -> Result<f64> { Ok((eval(base + step)? - eval(base - step)?) / (2.0 * step)) };
    let richardson = |step: f64| -> Result<f64> {
        let coarse = central(step)?;
        let fine = central(0.5 * step)?;
        Ok((4.0 * fine - coarse) / 3.0)
    };

    let first = richardson(h)?;
    let second = richardson(0.5 * h)?;
    let scale = first.abs().max(second.abs()).max(1e-8);
    let confidence = if (first - second).abs() <= SENSITIVITY_TOL * scale {
        Confidence::Converged
    } else {
        Confidence::Reduced
    };
    Ok(Sensitivity {
        value: second,
        confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argmax_on_grid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .map(|a| (a, f(a)))
            .fold(
                (lo, f64::NEG_INFINITY),
                |b, c| if c.1 > b.1 { c } else { b },
            )
            .0
    }

    #[test]
    fn brownian_reduces_to_lambda_over_sigma() {
        let lev = glm_optimal_leverage(&LevyModel::brownian(), 0.2, 0.4).unwrap();
        assert!((lev - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_premium_gives_zero_leverage() {
        let jd = LevyModel::jump_diffusion(1.0).unwrap();
        assert_eq!(glm_optimal_leverage(&jd, 0.0, 0.4).unwrap(), 0.0);
        let custom = LevyModel::new("shifted", |s| s * s, |l, s| (l - 0.1) * s).unwrap();
        assert_eq!(glm_optimal_leverage(&custom, 0.1, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn jump_diffusion_matches_grid_argmax() {
        let jd = LevyModel::jump_diffusion(1.0).unwrap();
        let (l, s) = (0.2, 0.4);
        let closed = glm_optimal_leverage(&jd, l, s).unwrap();
        let premium = l * s;
        let curv = jd.curvature(s);
        let best = argmax_on_grid(|a| premium * a - 0.5 * a * a * curv, -2.0, 2.0, 1e-4);
        assert!((best - closed).abs() <= 1e-4, "{best} vs {closed}");
        // curvature = s^2 + m (e^s - 1)^2 for this model
        let by_hand = s * s + (s.exp() - 1.0).powi(2);
        assert!((curv - by_hand).abs() < 1e-14);
    }

    #[test]
    fn expansion_examples() {
        let bm = LevyModel::brownian();
        let (l, s, r, t) = (0.2, 0.4, 0.03, 1e-3);
        assert_eq!(glm_log_utility_expansion(&bm, l, s, 0.0, t, r), r * t);
        let at_opt = glm_log_utility_expansion(&bm, l, s, l / s, t, r);
        assert!((at_opt - (r + l * l / 2.0) * t).abs() < 1e-16);

        let params = crate::kelly::MarketParams::new(l, s, r).unwrap();
        let drift = crate::kelly::log_growth_drift(&params, l / s);
        assert!((at_opt / t - drift).abs() < 1e-13);

        for model in [
            LevyModel::brownian(),
            LevyModel::poisson_jump(0.7).unwrap(),
            LevyModel::jump_diffusion(1.0).unwrap(),
        ] {
            let closed = glm_optimal_leverage(&model, l, s).unwrap();
            let best = argmax_on_grid(
                |a| glm_log_utility_expansion(&model, l, s, a, t, r),
                -3.0,
                3.0,
                1e-4,
            );
            assert!(
                (best - closed).abs() <= 1e-4,
                "{}: {best} vs {closed}",
                model.name()
            );
        }
    }

    #[test]
    fn psi_must_vanish_at_zero() {
        assert!(LevyModel::new("bad", |s| s * s + 1.0, default_premium).is_err());
        assert!(LevyModel::poisson_jump(0.0).is_err());
        assert!(LevyModel::by_name("cauchy", 1.0).is_err());
        for name in ["brownian", "poisson", "jump-diffusion"] {
            let m = LevyModel::by_name(name, 2.0).unwrap();
            assert_eq!(m.psi(0.0), 0.0);
        }
    }

    #[test]
    fn degenerate_denominator() {
        let flat = LevyModel::new("flat", |_| 0.0, default_premium).unwrap();
        assert!(matches!(
            glm_optimal_leverage(&flat, 0.2, 0.4),
            Err(Error::DegenerateExponent(_))
        ));
        assert!(glm_optimal_leverage(&LevyModel::brownian(), 0.2, 0.0).is_err());
    }

    #[test]
    fn brownian_sensitivities() {
        let bm = LevyModel::brownian();
        let dl = glm_leverage_sensitivity(&bm, 0.2, 0.4, Wrt::Lambda).unwrap();
        assert!((dl.value - 2.5).abs() < 1e-9);
        assert_eq!(dl.confidence, Confidence::Converged);
        let ds = glm_leverage_sensitivity(&bm, 0.2, 0.4, Wrt::Sigma).unwrap();
        assert!((ds.value + 1.25).abs() < 1e-8);
        assert_eq!(ds.confidence, Confidence::Converged);
    }

    #[test]
    fn jump_diffusion_sensitivities_match_chain_rule() {
        let m = 1.0;
        let jd = LevyModel::jump_diffusion(m).unwrap();
        let (l, s): (f64, f64) = (0.2, 0.4);
        let d = s * s + m * (s.exp() - 1.0).powi(2);
        let d_prime = 2.0 * s + 2.0 * m * (s.exp() - 1.0) * s.exp();
        let wrt_lambda = s / d;
        let wrt_sigma = l / d - l * s * d_prime / (d * d);

        let got = glm_leverage_sensitivity(&jd, l, s, Wrt::Lambda).unwrap();
        assert!((got.value - wrt_lambda).abs() < 1e-8 * wrt_lambda.abs());
        let got = glm_leverage_sensitivity(&jd, l, s, Wrt::Sigma).unwrap();
        assert!((got.value - wrt_sigma).abs() < 1e-7 * wrt_sigma.abs());
        assert_eq!(got.confidence, Confidence::Converged);
    }

    #[test]
    fn degenerate_stencil_is_an_error() {
        let bm = LevyModel::brownian();
        // sigma so small that the stencil curvature drops below the floor
        assert!(glm_leverage_sensitivity(&bm, 0.2, 1e-8, Wrt::Sigma).is_err());
    }
}
