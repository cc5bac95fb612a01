//! Phase-conditioned advice for a trend follower and detection of the phase
//! from an observed sequence of relative price changes.

use std::fmt;

use crate::phase::PhaseLabel;

/// Default minimum window for [`detect_phase`].
pub const DEFAULT_MIN_LEN: usize = 4;
/// Slack on consecutive magnitude ratios.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    ReduceExposureOrContrarian,
    SellGamma,
    NoDirectionalEdge,
    None,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::ReduceExposureOrContrarian => "REDUCE_EXPOSURE_OR_CONTRARIAN",
            Action::SellGamma => "SELL_GAMMA",
            Action::NoDirectionalEdge => "NO_DIRECTIONAL_EDGE",
            Action::None => "NONE",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyAdvice {
    pub phase: PhaseLabel,
    pub action: Action,
    pub rationale: &'static str,
}

pub fn advise(phase: PhaseLabel) -> StrategyAdvice {
    let (action, rationale) = match phase {
        PhaseLabel::MonotoneExplosion => (
            Action::ReduceExposureOrContrarian,
            "self-reinforcing run-up; cut the rule-based position or lean against the coming reversal",
        ),
        PhaseLabel::MonotoneDecay => (
            Action::SellGamma,
            "moves shrink toward equilibrium without reversal; realised volatility should fall",
        ),
        PhaseLabel::OscillatingDecay => (
            Action::NoDirectionalEdge,
            "alternating moves that shrink; no persistent direction to trade",
        ),
        PhaseLabel::OscillatingExplosion | PhaseLabel::Degenerate => {
            (Action::None, "no recommendation for this regime")
        }
    };
    StrategyAdvice {
        phase,
        action,
        rationale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Phase(PhaseLabel),
    Inconclusive,
}

impl Detection {
    pub fn label(&self) -> &'static str {
        match self {
            Detection::Phase(p) => p.as_str(),
            Detection::Inconclusive => "inconclusive",
        }
    }

    pub fn action(&self) -> Action {
        match self {
            Detection::Phase(p) => advise(*p).action,
            Detection::Inconclusive => Action::None,
        }
    }
}

/// Pattern-matches a noise-free return sequence.
///
/// All signs equal and magnitudes strictly growing is III, strictly
/// shrinking is II; strictly alternating signs with shrinking magnitudes is
/// I, with growing magnitudes IV. Anything else, a zero entry, or fewer than
/// `min_len` values is inconclusive.
pub fn detect_phase(returns: &[f64], min_len: usize) -> Detection {
    if returns.len() < min_len.max(2) || returns.iter().any(|x| *x == 0.0 || x.is_nan()) {
        return Detection::Inconclusive;
    }
    let pairs = returns.windows(2);
    let monotone = pairs.clone().all(|w| (w[0] > 0.0) == (w[1] > 0.0));
    let alternating = pairs.clone().all(|w| (w[0] > 0.0) != (w[1] > 0.0));
    let growing = pairs
        .clone()
        .all(|w| w[1].abs() > w[0].abs() * (1.0 + RATIO_SLACK));
    let shrinking = pairs
        .clone()
        .all(|w| w[1].abs() < w[0].abs() * (1.0 - RATIO_SLACK));

    let phase = match (monotone, alternating, growing, shrinking) {
        (true, _, true, _) => PhaseLabel::MonotoneExplosion,
        (true, _, _, true) => PhaseLabel::MonotoneDecay,
        (_, true, _, true) => PhaseLabel::OscillatingDecay,
        (_, true, true, _) => PhaseLabel::OscillatingExplosion,
        _ => return Detection::Inconclusive,
    };
    Detection::Phase(phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impact::{simulate, FeedbackMap, ImpactLaw};
    use crate::kelly::PortfolioState;

    #[test]
    fn advice_table() {
        assert_eq!(
            advise(PhaseLabel::MonotoneExplosion).action,
            Action::ReduceExposureOrContrarian
        );
        assert_eq!(advise(PhaseLabel::MonotoneDecay).action, Action::SellGamma);
        assert_eq!(
            advise(PhaseLabel::OscillatingDecay).action,
            Action::NoDirectionalEdge
        );
        assert_eq!(
            advise(PhaseLabel::OscillatingExplosion).action,
            Action::None
        );
        assert_eq!(advise(PhaseLabel::Degenerate).action, Action::None);
        for p in PhaseLabel::ALL {
            assert_eq!(advise(p), advise(p));
            assert_eq!(advise(p).phase, p);
        }
    }

    fn frozen_run(leverage: f64, x0: f64, steps: usize) -> Vec<f64> {
        let m = FeedbackMap::frozen(leverage, ImpactLaw::new(0.5, 1.0).unwrap(), 1.0).unwrap();
        let s = PortfolioState::allocated(1.0, 1.0, 1.0, leverage).unwrap();
        simulate(&m, x0, steps, &s).unwrap().xs()
    }

    #[test]
    fn detects_library_trajectories() {
        let decay = frozen_run(2.0, 0.5, 100);
        assert_eq!(
            detect_phase(&decay, DEFAULT_MIN_LEN),
            Detection::Phase(PhaseLabel::MonotoneDecay)
        );
        let blowup = frozen_run(2.0, 2.0, 100);
        let truncated = &blowup[..blowup.len() - 1];
        assert_eq!(
            detect_phase(truncated, DEFAULT_MIN_LEN),
            Detection::Phase(PhaseLabel::MonotoneExplosion)
        );
        let osc = frozen_run(0.5, 0.5, 100);
        assert_eq!(
            detect_phase(&osc, DEFAULT_MIN_LEN),
            Detection::Phase(PhaseLabel::OscillatingDecay)
        );
    }

    #[test]
    fn rule_boundaries() {
        assert_eq!(
            detect_phase(&[0.01, -0.02, 0.01, -0.02], DEFAULT_MIN_LEN),
            Detection::Inconclusive
        );
        assert_eq!(
            detect_phase(&[0.01, -0.02, 0.04, -0.08], DEFAULT_MIN_LEN),
            Detection::Phase(PhaseLabel::OscillatingExplosion)
        );
        assert_eq!(
            detect_phase(&[0.1, 0.05], DEFAULT_MIN_LEN),
            Detection::Inconclusive
        );
        assert_eq!(
            detect_phase(&[0.1, 0.05, 0.0, 0.01], DEFAULT_MIN_LEN),
            Detection::Inconclusive
        );
        // equal magnitudes are neither growing nor shrinking
        assert_eq!(
            detect_phase(&[0.1, 0.1, 0.1, 0.1], DEFAULT_MIN_LEN),
            Detection::Inconclusive
        );
        assert_eq!(
            detect_phase(&[0.5, 0.25, 0.0625, 0.004], 8),
            Detection::Inconclusive
        );
    }

    #[test]
    fn inconclusive_maps_to_no_action() {
        assert_eq!(Detection::Inconclusive.action(), Action::None);
        assert_eq!(Detection::Inconclusive.label(), "inconclusive");
        assert_eq!(
            Detection::Phase(PhaseLabel::MonotoneDecay).action(),
            Action::SellGamma
        );
    }
}
