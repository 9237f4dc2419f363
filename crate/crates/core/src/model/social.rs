use serde::{Deserialize, Serialize};

use super::{BeliefPmf, EffortCost, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefKind {
    Competitive,
    InequalityAverse,
}

/// Relative-earnings preferences `f(x) = λ1·x` for `x <= 0`, `λ2·x` for
/// `x > 0`, with `δ` scaling their weight when information arrives ex post.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocialPrefs {
    pub lambda1: f64,
    pub lambda2: f64,
    pub delta: f64,
    pub kind: PrefKind,
}

impl SocialPrefs {
    pub fn competitive(lambda1: f64, lambda2: f64, delta: f64) -> Result<Self> {
        let s = Self { lambda1, lambda2, delta, kind: PrefKind::Competitive };
        s.validate()?;
        Ok(s)
    }

    pub fn inequality_averse(lambda1: f64, lambda2: f64, delta: f64) -> Result<Self> {
        let s = Self { lambda1, lambda2, delta, kind: PrefKind::InequalityAverse };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (l1, l2) = (self.lambda1, self.lambda2);
        if !(l1.is_finite() && l2.is_finite() && self.delta.is_finite()) {
            return Err(Error::InvalidParams("social parameters must be finite".into()));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParams(format!("delta must be >= 0, got {}", self.delta)));
        }
        let ok = match self.kind {
            PrefKind::Competitive => l1 >= l2 && l2 > 0.0,
            PrefKind::InequalityAverse => l1 > 0.0 && l2 > -1.0 && l2 < 0.0 && l1 >= l2.abs(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("lambda1={l1}, lambda2={l2} violate the {:?} restrictions", self.kind)))
        }
    }

    /// The piecewise-linear comparison term.
    pub fn comparison(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.lambda1 * x
        } else {
            self.lambda2 * x
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SocialScenario<'a> {
    /// Peer average observed before choosing effort.
    ExAnte(f64),
    /// Peer average revealed after the task; effort is chosen under beliefs.
    ExPost(&'a BeliefPmf),
}

/// Ex ante optimum: effort clamped to `[w(1+λ2)/c, w(1+λ1)/c]` around `ē`.
pub fn social_exante_effort(p: &EffortCost, s: &SocialPrefs, e_bar: f64) -> f64 {
    let lower = p.wage * (1.0 + s.lambda2) / p.cost;
    let upper = p.wage * (1.0 + s.lambda1) / p.cost;
    if e_bar < lower {
        lower
    } else if e_bar > upper {
        upper
    } else {
        e_bar
    }
}

/// Indirect utility after observing `ē` ex ante.
pub fn social_exante_utility(p: &EffortCost, s: &SocialPrefs, e_bar: f64) -> f64 {
    let e = social_exante_effort(p, s, e_bar);
    p.net_earnings(e) + s.comparison(p.wage * (e - e_bar))
}

fn expost_objective(p: &EffortCost, s: &SocialPrefs, beliefs: &BeliefPmf, e: f64) -> f64 {
    let social: f64 = beliefs.iter().map(|(e_bar, prob)| prob * s.comparison(p.wage * (e - e_bar))).sum();
    p.net_earnings(e) + s.delta * social
}

/// Maximizes the ex post objective exactly. Between consecutive support
/// points the objective is a concave quadratic, so the optimum is either a
/// support point, zero, or the stationary point of one of those pieces.
pub(crate) fn solve_expost(p: &EffortCost, s: &SocialPrefs, beliefs: &BeliefPmf) -> (f64, f64) {
    let (w, c) = (p.wage, p.cost);
    let mut candidates = vec![0.0];
    candidates.extend_from_slice(beliefs.support());
    // `below` is the mass of peer averages strictly under the piece.
    let mut below = 0.0;
    let mut lo = 0.0;
    let support = beliefs.support();
    for j in 0..=support.len() {
        let hi = support.get(j).copied().unwrap_or(f64::INFINITY);
        let slope = s.lambda2 * below + s.lambda1 * (1.0 - below);
        let e = w * (1.0 + s.delta * slope) / c;
        if e > lo && e < hi {
            candidates.push(e);
        }
        if j < support.len() {
            below += beliefs.probs()[j];
            lo = hi;
        }
    }
    candidates.sort_by(f64::total_cmp);
    let mut best = (0.0, f64::NEG_INFINITY);
    for e in candidates {
        let v = expost_objective(p, s, beliefs, e);
        if v > best.1 {
            best = (e, v);
        }
    }
    best
}

pub fn social_effort(p: &EffortCost, s: &SocialPrefs, scenario: SocialScenario<'_>) -> Result<f64> {
    match scenario {
        SocialScenario::ExAnte(e_bar) => {
            if !(e_bar.is_finite() && e_bar >= 0.0) {
                return Err(Error::InvalidParams(format!("peer average must be >= 0, got {e_bar}")));
            }
            Ok(social_exante_effort(p, s, e_bar))
        }
        SocialScenario::ExPost(beliefs) => {
            if beliefs.is_empty() {
                return Err(Error::InvalidBeliefs("empty support".into()));
            }
            Ok(solve_expost(p, s, beliefs).0)
        }
    }
}

/// Willingness to pay, in utility units, relative to no information.
pub fn social_wtp(p: &EffortCost, s: &SocialPrefs, beliefs: &BeliefPmf, scenario: Scenario) -> Result<f64> {
    if beliefs.is_empty() {
        return Err(Error::InvalidBeliefs("empty support".into()));
    }
    let v_info = match scenario {
        Scenario::ExAnte => beliefs.expect(|e_bar| social_exante_utility(p, s, e_bar)),
        Scenario::ExPost => solve_expost(p, s, beliefs).1,
    };
    Ok(v_info - p.baseline_utility())
}
