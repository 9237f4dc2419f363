use serde::{Deserialize, Serialize};

use super::{effort_no_info, BeliefPmf, EffortCost, Scenario};
use crate::error::{Error, Result};

/// Linear stress cost `Θ(ē) = θ·ē`, scaled by `δ` when information is
/// only anticipated (ex post).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressParams {
    pub theta: f64,
    pub delta: f64,
}

impl StressParams {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        let s = Self { theta, delta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::InvalidParams(format!("theta must be >= 0, got {}", self.theta)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParams(format!("delta must be in [0,1], got {}", self.delta)));
        }
        Ok(())
    }

    pub fn stress(&self, e_bar: f64) -> f64 {
        self.theta * e_bar
    }
}

/// Stress is a lump-sum cost, so effort is `w/c` in every scenario.
pub fn stress_effort(p: &EffortCost, _st: &StressParams) -> f64 {
    effort_no_info(p)
}

pub fn stress_wtp(p: &EffortCost, st: &StressParams, beliefs: &BeliefPmf, scenario: Scenario) -> f64 {
    let e = stress_effort(p, st);
    let expected_stress = beliefs.expect(|e_bar| st.stress(e_bar));
    let v_info = match scenario {
        Scenario::ExAnte => p.net_earnings(e) - expected_stress,
        Scenario::ExPost => p.net_earnings(e) - st.delta * expected_stress,
    };
    v_info - p.baseline_utility()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wtp_is_minus_expected_stress() {
        let p = EffortCost::new(1.0, 0.1).unwrap();
        let b = BeliefPmf::uniform(vec![10.0, 20.0, 30.0]).unwrap();
        let st = StressParams::new(0.01, 0.5).unwrap();
        assert!((stress_wtp(&p, &st, &b, Scenario::ExAnte) + 0.2).abs() < 1e-12);
        let ep = stress_wtp(&p, &st, &b, Scenario::ExPost);
        assert!((ep + 0.1).abs() < 1e-12);
        assert!(ep >= stress_wtp(&p, &st, &b, Scenario::ExAnte));
    }

    #[test]
    fn zero_theta_is_free() {
        let p = EffortCost::new(1.0, 0.1).unwrap();
        let b = BeliefPmf::uniform(vec![10.0, 20.0, 30.0]).unwrap();
        let st = StressParams::new(0.0, 0.5).unwrap();
        assert_eq!(stress_wtp(&p, &st, &b, Scenario::ExAnte), 0.0);
        assert_eq!(stress_wtp(&p, &st, &b, Scenario::ExPost), 0.0);
    }

    #[test]
    fn effort_unchanged() {
        let p = EffortCost::new(1.0, 0.04).unwrap();
        let st = StressParams::new(0.3, 1.0).unwrap();
        assert_eq!(stress_effort(&p, &st), 25.0);
    }

    #[test]
    fn validation() {
        assert!(StressParams::new(-0.1, 0.5).is_err());
        assert!(StressParams::new(0.1, 1.5).is_err());
    }
}
