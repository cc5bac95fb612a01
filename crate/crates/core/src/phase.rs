//! Phase classification of the feedback map and parameter sweeps over
//! `(leverage, gamma)`.

use std::fmt::{self, Write as _};
use std::io;

use rayon::prelude::*;

use crate::error::{finite, Error, Result};
use crate::fmt::sig;
use crate::impact::{simulate, FeedbackMap, HaltReason, ImpactLaw};
use crate::kelly::PortfolioState;

/// Step budget for the simulation path of [`classify`].
pub const SIMULATION_STEPS: usize = 10_000;

/// Relative distance from `x*` inside which the analytic rule abstains.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseLabel {
    /// I: sign alternates, magnitude shrinks.
    OscillatingDecay,
    /// II: sign fixed, magnitude shrinks.
    MonotoneDecay,
    /// III: sign fixed, magnitude grows.
    MonotoneExplosion,
    /// IV: sign alternates, magnitude grows.
    OscillatingExplosion,
    /// No feedback (`L == 1`) or a marginal linear map.
    Degenerate,
}

impl PhaseLabel {
    pub const ALL: [PhaseLabel; 5] = [
        PhaseLabel::OscillatingDecay,
        PhaseLabel::MonotoneDecay,
        PhaseLabel::MonotoneExplosion,
        PhaseLabel::OscillatingExplosion,
        PhaseLabel::Degenerate,
    ];

    fn from_pattern(monotone: bool, decays: bool) -> Self {
        match (monotone, decays) {
            (false, true) => PhaseLabel::OscillatingDecay,
            (true, true) => PhaseLabel::MonotoneDecay,
            (true, false) => PhaseLabel::MonotoneExplosion,
            (false, false) => PhaseLabel::OscillatingExplosion,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::OscillatingDecay => "I",
            PhaseLabel::MonotoneDecay => "II",
            PhaseLabel::MonotoneExplosion => "III",
            PhaseLabel::OscillatingExplosion => "IV",
            PhaseLabel::Degenerate => "DEGENERATE",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            PhaseLabel::OscillatingDecay => "oscillating decay",
            PhaseLabel::MonotoneDecay => "monotone decay",
            PhaseLabel::MonotoneExplosion => "monotone explosion",
            PhaseLabel::OscillatingExplosion => "oscillating explosion",
            PhaseLabel::Degenerate => "degenerate",
        }
    }

    fn color(&self) -> &'static str {
        match self {
            PhaseLabel::OscillatingDecay => "#4e79a7",
            PhaseLabel::MonotoneDecay => "#59a14f",
            PhaseLabel::MonotoneExplosion => "#e15759",
            PhaseLabel::OscillatingExplosion => "#f28e2b",
            PhaseLabel::Degenerate => "#bab0ac",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PhaseLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PhaseLabel::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase label `{s}`"))
    }
}

fn check_start(x0: f64) -> Result<f64> {
    finite("x0", x0)?;
    if x0 == 0.0 {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: x0,
            reason: "classification needs a nonzero initial change",
        });
    }
    Ok(x0)
}

/// Closed-form classification of a frozen map.
///
/// Returns `Ok(None)` when no rule applies: full mode, or `|x0|` within
/// [`BOUNDARY_TOL`] (relative) of `x*`.
pub fn classify_analytic(map: &FeedbackMap, x0: f64) -> Result<Option<PhaseLabel>> {
    check_start(x0)?;
    if !map.is_frozen() {
        return Ok(None);
    }
    let leverage = map.leverage();
    if leverage == 1.0 {
        return Ok(Some(PhaseLabel::Degenerate));
    }
    let monotone = leverage > 1.0;
    let c = map.slope()?;
    let gamma = map.impact().gamma();

    if gamma == 1.0 {
        return Ok(Some(if c == 1.0 {
            PhaseLabel::Degenerate
        } else {
            PhaseLabel::from_pattern(monotone, c < 1.0)
        }));
    }

    // Compare |x0| with x* = c^(-1/(1-gamma)) in log space so extreme slopes
    // do not overflow.
    let log_fixed = -c.ln() / (1.0 - gamma);
    let gap = x0.abs().ln() - log_fixed;
    if gap.abs() <= BOUNDARY_TOL {
        return Ok(None);
    }
    let below = gap < 0.0;
    // gamma < 1: x* repels, so starts below it decay.
    // gamma > 1: x* attracts, so starts below it grow towards it.
    let decays = if gamma < 1.0 { below } else { !below };
    Ok(Some(PhaseLabel::from_pattern(monotone, decays)))
}

/// Classification by iterating the map for up to `max_steps` rows.
///
/// Signs of consecutive nonzero changes decide monotone versus oscillating;
/// the halt reason (or the first and last magnitudes when the budget runs
/// out) decides decay versus growth.
pub fn classify_by_simulation(
    map: &FeedbackMap,
    x0: f64,
    state: &PortfolioState,
    max_steps: usize,
) -> Result<PhaseLabel> {
    check_start(x0)?;
    let traj = simulate(map, x0, max_steps.max(2), state)?;
    let xs = traj.xs();

    let mut same = 0usize;
    let mut flipped = 0usize;
    for w in xs.windows(2) {
        if w[0] == 0.0 || w[1] == 0.0 {
            continue;
        }
        if (w[0] > 0.0) == (w[1] > 0.0) {
            same += 1;
        } else {
            flipped += 1;
        }
    }
    let monotone = match (same, flipped) {
        (s, 0) if s > 0 => true,
        (0, f) if f > 0 => false,
        _ => return Ok(PhaseLabel::Degenerate),
    };

    let first = xs[0].abs();
    let last = xs[xs.len() - 1].abs();
    let decays = match traj.halt {
        HaltReason::Underflow | HaltReason::FixedPoint => true,
        HaltReason::Blowup => false,
        HaltReason::MaxSteps if last < first => true,
        HaltReason::MaxSteps if last > first => false,
        HaltReason::MaxSteps => return Ok(PhaseLabel::Degenerate),
    };
    Ok(PhaseLabel::from_pattern(monotone, decays))
}

/// Nominal portfolio used when a frozen map needs a state to carry.
pub fn reference_state(map: &FeedbackMap) -> PortfolioState {
    PortfolioState::allocated(1.0, 1.0, 1.0, map.leverage()).expect("unit state is valid")
}

/// Classifies `x0` under `map`, preferring the closed form and falling back
/// to a [`SIMULATION_STEPS`]-step run. Full-mode maps start from
/// [`reference_state`]; use [`classify_from`] to choose the portfolio.
pub fn classify(map: &FeedbackMap, x0: f64) -> Result<PhaseLabel> {
    classify_from(map, x0, &reference_state(map))
}

pub fn classify_from(map: &FeedbackMap, x0: f64, state: &PortfolioState) -> Result<PhaseLabel> {
    match classify_analytic(map, x0)? {
        Some(label) => Ok(label),
        None => classify_by_simulation(map, x0, state, SIMULATION_STEPS),
    }
}

/// Labels on a `(gamma, leverage)` grid, stored row-major with gamma as the
/// outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub lambda_axis: Vec<f64>,
    pub gamma_axis: Vec<f64>,
    pub x0: f64,
    pub a: f64,
    pub kappa: f64,
    pub labels: Vec<PhaseLabel>,
}

/// Inclusive evenly spaced axis.
pub fn axis(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = (
        finite("range start", range.0)?,
        finite("range end", range.1)?,
    );
    if lo > hi {
        return Err(Error::InvalidParameter {
            name: "range",
            value: lo,
            reason: "start exceeds end",
        });
    }
    match n {
        0 => Err(Error::InvalidParameter {
            name: "resolution",
            value: 0.0,
            reason: "must be at least 1",
        }),
        1 if lo != hi => Err(Error::InvalidParameter {
            name: "resolution",
            value: 1.0,
            reason: "a single node needs a degenerate range",
        }),
        1 => Ok(vec![lo]),
        _ => Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()),
    }
}

/// Classifies every node of a `(leverage, gamma)` grid with frozen maps of
/// prefactor `a` and impact coefficient `kappa`. Cells are evaluated in
/// parallel and collected in index order, so output does not depend on
/// scheduling.
pub fn sweep(
    lambda_range: (f64, f64),
    gamma_range: (f64, f64),
    x0: f64,
    a: f64,
    kappa: f64,
    resolution: (usize, usize),
) -> Result<PhaseGrid> {
    check_start(x0)?;
    let lambda_axis = axis(lambda_range, resolution.0)?;
    let gamma_axis = axis(gamma_range, resolution.1)?;
    let nl = lambda_axis.len();
    let labels = (0..nl * gamma_axis.len())
        .into_par_iter()
        .map(|idx| {
            let gamma = gamma_axis[idx / nl];
            let leverage = lambda_axis[idx % nl];
            let map = FeedbackMap::frozen(leverage, ImpactLaw::new(gamma, kappa)?, a)?;
            classify(&map, x0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseGrid {
        lambda_axis,
        gamma_axis,
        x0,
        a,
        kappa,
        labels,
    })
}

impl PhaseGrid {
    pub fn label(&self, gamma_idx: usize, lambda_idx: usize) -> PhaseLabel {
        self.labels[gamma_idx * self.lambda_axis.len() + lambda_idx]
    }

    /// Connected regions (4-neighbourhood) as `(label, cell count)`, in
    /// order of first appearance.
    pub fn regions(&self) -> Vec<(PhaseLabel, usize)> {
        let (nl, ng) = (self.lambda_axis.len(), self.gamma_axis.len());
        let mut seen = vec![false; self.labels.len()];
        let mut out = Vec::new();
        for start in 0..self.labels.len() {
            if seen[start] {
                continue;
            }
            let label = self.labels[start];
            let mut stack = vec![start];
            seen[start] = true;
            let mut size = 0;
            while let Some(idx) = stack.pop() {
                size += 1;
                let (g, l) = (idx / nl, idx % nl);
                let mut neighbours = Vec::with_capacity(4);
                if l > 0 {
                    neighbours.push(idx - 1);
                }
                if l + 1 < nl {
                    neighbours.push(idx + 1);
                }
                if g > 0 {
                    neighbours.push(idx - nl);
                }
                if g + 1 < ng {
                    neighbours.push(idx + nl);
                }
                for n in neighbours {
                    if !seen[n] && self.labels[n] == label {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
            out.push((label, size));
        }
        out
    }

    /// `lambda,gamma,phase`, gamma outer and leverage inner.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["lambda", "gamma", "phase"])?;
        for (g, gamma) in self.gamma_axis.iter().enumerate() {
            for (l, leverage) in self.lambda_axis.iter().enumerate() {
                out.write_record([sig(*leverage), sig(*gamma), self.label(g, l).to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Heatmap with leverage on the horizontal axis and gamma increasing
    /// upwards.
    pub fn to_svg(&self) -> String {
        const CELL: usize = 12;
        const LEFT: usize = 80;
        const TOP: usize = 30;
        const BOTTOM: usize = 60;
        const LEGEND: usize = 190;

        let (nl, ng) = (self.lambda_axis.len(), self.gamma_axis.len());
        let plot_w = nl * CELL;
        let plot_h = ng * CELL;
        let width = LEFT + plot_w + LEGEND;
        let height = TOP + plot_h + BOTTOM;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
        );
        let _ = writeln!(s, r#"<g id="cells" shape-rendering="crispEdges">"#);
        for g in 0..ng {
            let y = TOP + (ng - 1 - g) * CELL;
            for l in 0..nl {
                let x = LEFT + l * CELL;
                let label = self.label(g, l);
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" data-phase="{label}"/>"#,
                    label.color()
                );
            }
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        // axis extremes
        let bottom = TOP + plot_h;
        let (lmin, lmax) = (self.lambda_axis[0], self.lambda_axis[nl - 1]);
        let (gmin, gmax) = (self.gamma_axis[0], self.gamma_axis[ng - 1]);
        let _ = writeln!(
            s,
            r#"<text x="{LEFT}" y="{}" text-anchor="start">{}</text>"#,
            bottom + 16,
            sig(lmin)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT + plot_w,
            bottom + 16,
            sig(lmax)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{bottom}" text-anchor="end">{}</text>"#,
            LEFT - 6,
            sig(gmin)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 6,
            TOP + 10,
            sig(gmax)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">leverage ratio Λ</text>"#,
            LEFT + plot_w / 2,
            bottom + 40
        );
        let mid_y = TOP + plot_h / 2;
        let _ = writeln!(
            s,
            r#"<text x="20" y="{mid_y}" text-anchor="middle" transform="rotate(-90 20 {mid_y})">impact exponent γ</text>"#
        );

        let lx = LEFT + plot_w + 20;
        let _ = writeln!(s, r#"<g id="legend">"#);
        for (i, label) in PhaseLabel::ALL.iter().enumerate() {
            let y = TOP + i * 22;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{y}" width="14" height="14" fill="{}" stroke="black"/>"#,
                label.color()
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{} {}</text>"#,
                lx + 20,
                y + 11,
                label.as_str(),
                label.description()
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<text x="{lx}" y="{}">x0 = {}, A = {}, κ = {}</text>"#,
            TOP + PhaseLabel::ALL.len() * 22 + 16,
            sig(self.x0),
            sig(self.a),
            sig(self.kappa)
        );
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg<W: io::Write>(&self, mut writer: W) -> io::Result<()> {
        writer.write_all(self.to_svg().as_bytes())
    }
}
