//! Strategy search: peer output `ȳ` shifts beliefs about how productive an
//! alternative strategy would be, and a worker pays a fixed cost `K` to try
//! one.
//!
//! The posterior over productivity is a Gaussian kernel centred at
//! `loc_a + loc_b·ȳ`, discretized on a uniform grid over `[alpha_lo,
//! alpha_hi]`. With `loc_b > 0` a higher `ȳ` moves the location up, and the
//! kernel's log-concavity makes the grid posterior first-order
//! stochastically increasing in `ȳ`.

use serde::{Deserialize, Serialize};

use super::{BeliefPmf, EffortCost, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    /// Productivity of the current strategy.
    pub alpha_s: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Fixed search cost `K`, in utility units.
    pub search_cost: f64,
    pub grid_m: usize,
    pub kernel_sigma: f64,
    pub loc_a: f64,
    pub loc_b: f64,
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.alpha_s, self.alpha_lo, self.alpha_hi, self.search_cost, self.kernel_sigma, self.loc_a, self.loc_b]
                .iter()
                .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("learning parameters must be finite".into()));
        }
        if self.alpha_s <= 0.0 {
            return Err(Error::InvalidParams("alpha_s must be > 0".into()));
        }
        if !(self.alpha_lo < self.alpha_hi && self.alpha_lo <= self.alpha_s && self.alpha_s <= self.alpha_hi) {
            return Err(Error::InvalidParams(format!(
                "need alpha_lo <= alpha_s <= alpha_hi with alpha_lo < alpha_hi, got {} / {} / {}",
                self.alpha_lo, self.alpha_s, self.alpha_hi
            )));
        }
        if self.search_cost < 0.0 {
            return Err(Error::InvalidParams("search cost must be >= 0".into()));
        }
        if self.grid_m < 2 {
            return Err(Error::InvalidParams("grid_m must be >= 2".into()));
        }
        if self.kernel_sigma <= 0.0 {
            return Err(Error::InvalidParams("kernel_sigma must be > 0".into()));
        }
        if self.loc_b <= 0.0 {
            return Err(Error::InvalidParams("loc_b must be > 0".into()));
        }
        Ok(())
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        let m = self.grid_m;
        let step = (self.alpha_hi - self.alpha_lo) / (m - 1) as f64;
        (0..m).map(|j| if j == m - 1 { self.alpha_hi } else { self.alpha_lo + j as f64 * step }).collect()
    }

    pub fn baseline_effort(&self, p: &EffortCost) -> f64 {
        p.wage * self.alpha_s / p.cost
    }

    /// Indirect utility when working with productivity `alpha`.
    pub fn strategy_value(p: &EffortCost, alpha: f64) -> f64 {
        p.wage * p.wage * alpha * alpha / (2.0 * p.cost)
    }

    pub fn baseline_utility(&self, p: &EffortCost) -> f64 {
        Self::strategy_value(p, self.alpha_s)
    }
}

/// Posterior over productivity after observing peer output `y_bar`.
pub fn learning_posterior(l: &LearningParams, y_bar: f64) -> BeliefPmf {
    let grid = l.alpha_grid();
    let mu = l.loc_a + l.loc_b * y_bar;
    let two_var = 2.0 * l.kernel_sigma * l.kernel_sigma;
    let logw: Vec<f64> = grid.iter().map(|a| -(a - mu).powi(2) / two_var).collect();
    // Shift by the max log-weight so far-away locations do not underflow.
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|lw| (lw - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let probs = w.iter().map(|x| x / total).collect();
    BeliefPmf::new(grid, probs).expect("alpha grid and normalized kernel weights form a valid pmf")
}

/// Expected utility of paying `K` to search after observing `y_bar`.
pub fn learning_value_of_search(p: &EffortCost, l: &LearningParams, y_bar: f64) -> f64 {
    let post = learning_posterior(l, y_bar);
    let mut better = 0.0;
    let mut retained_mass = 0.0;
    for (alpha, prob) in post.iter() {
        if alpha > l.alpha_s {
            better += prob * LearningParams::strategy_value(p, alpha);
        } else {
            retained_mass += prob;
        }
    }
    better + retained_mass * l.baseline_utility(p) - l.search_cost
}

pub fn learning_wtp(p: &EffortCost, l: &LearningParams, beliefs_y: &BeliefPmf, scenario: Scenario) -> f64 {
    match scenario {
        Scenario::ExPost => 0.0,
        Scenario::ExAnte => {
            let v_no = l.baseline_utility(p);
            beliefs_y.expect(|y| (learning_value_of_search(p, l, y) - v_no).max(0.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningScenario {
    /// Peer output observed before the task; `draw` in `[0,1)` picks the
    /// realized strategy by inverse CDF if the worker searches.
    ExAnte {
        y_bar: f64,
        draw: f64,
    },
    ExPost,
    NoInfo,
}

/// Returns `(effort, productivity in use)`.
pub fn learning_effort(p: &EffortCost, l: &LearningParams, scenario: LearningScenario) -> Result<(f64, f64)> {
    let baseline = (l.baseline_effort(p), l.alpha_s);
    match scenario {
        LearningScenario::NoInfo | LearningScenario::ExPost => Ok(baseline),
        LearningScenario::ExAnte { y_bar, draw } => {
            if !(0.0..1.0).contains(&draw) {
                return Err(Error::OutOfRange { what: "draw", value: draw.to_string() });
            }
            if learning_value_of_search(p, l, y_bar) < l.baseline_utility(p) {
                return Ok(baseline);
            }
            let post = learning_posterior(l, y_bar);
            let mut cum = 0.0;
            let mut found = *post.support().last().expect("posterior grid has >= 2 points");
            for (alpha, prob) in post.iter() {
                cum += prob;
                if cum > draw {
                    found = alpha;
                    break;
                }
            }
            let adopted = found.max(l.alpha_s);
            Ok((p.wage * adopted / p.cost, adopted))
        }
    }
}
