//! The four worker models and the machinery that checks them.
//!
//! Every model shares the same primitives: a linear piece rate `w` per unit
//! of effort and a quadratic effort cost `(c/2)e²`, so the no-information
//! benchmark is always `e = w/c` with indirect utility `w²/(2c)`. Utility is
//! measured in cents.

mod learning;
mod oracle;
mod social;
mod stress;
pub mod verify;

pub use learning::{
    learning_effort, learning_posterior, learning_value_of_search, learning_wtp, LearningParams, LearningScenario,
};
pub use oracle::{oracle_maximize, Conditioning, OracleResult, UtilitySpec};
pub use social::{
    social_effort, social_exante_effort, social_exante_utility, social_wtp, PrefKind, SocialPrefs, SocialScenario,
};
pub use stress::{stress_effort, stress_wtp, StressParams};
pub use verify::{verify_predictions, GridConfig, HypothesisCheck, TheoryReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timing of peer information relative to the Period-2 effort choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    ExAnte,
    ExPost,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::ExAnte, Scenario::ExPost];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::ExAnte => "exante",
            Scenario::ExPost => "expost",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Scenario::ExAnte => 0,
            Scenario::ExPost => 1,
        }
    }
}

/// Piece rate and effort-cost curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortCost {
    /// Cents per unit of effort.
    pub wage: f64,
    /// Curvature of the quadratic cost `(c/2)e²`.
    pub cost: f64,
}

impl EffortCost {
    pub fn new(wage: f64, cost: f64) -> Result<Self> {
        let p = Self { wage, cost };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wage.is_finite() && self.wage > 0.0) {
            return Err(Error::InvalidParams(format!("wage must be > 0, got {}", self.wage)));
        }
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(Error::InvalidParams(format!("cost must be > 0, got {}", self.cost)));
        }
        if !(self.wage / self.cost).is_finite() {
            return Err(Error::InvalidParams("baseline effort w/c is not finite".into()));
        }
        Ok(())
    }

    /// Consumption utility net of effort cost, `we − (c/2)e²`.
    pub fn net_earnings(&self, effort: f64) -> f64 {
        self.wage * effort - 0.5 * self.cost * effort * effort
    }

    /// `w²/(2c)`, the indirect utility without information.
    pub fn baseline_utility(&self) -> f64 {
        self.wage * self.wage / (2.0 * self.cost)
    }
}

/// Optimal effort without peer information: `w/c`.
pub fn effort_no_info(p: &EffortCost) -> f64 {
    p.wage / p.cost
}

/// Finite probability mass function over peer-average values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct BeliefPmf {
    support: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for BeliefPmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        BeliefPmf::new(raw.support, raw.probs)
    }
}

impl BeliefPmf {
    /// Builds a pmf; the support must be strictly increasing and
    /// nonnegative, and the probabilities must sum to one within 1e-9.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidBeliefs("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidBeliefs(format!(
                "support has {} points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if support.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidBeliefs("support values must be finite and >= 0".into()));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBeliefs("support must be strictly increasing".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidBeliefs("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidBeliefs(format!("probabilities sum to {total}")));
        }
        Ok(Self { support, probs })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    /// Equal weight on each (sorted, deduplicated by the caller) value.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidBeliefs("empty support".into()));
        }
        Self::new(values, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, p)| p * f(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.iter().filter(|(s, _)| *s <= x).map(|(_, p)| p).sum()
    }
}
