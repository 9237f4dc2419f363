//! Brute-force grid maximization used to cross-check the closed forms.
//!
//! Objectives here are written straight from the model definitions and do
//! not reuse the solvers they are meant to check.

use super::{BeliefPmf, EffortCost, LearningParams, Scenario, SocialPrefs, StressParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Conditioning {
    /// A known peer average.
    Point(f64),
    /// Beliefs over the peer average.
    Beliefs(BeliefPmf),
}

impl Conditioning {
    fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Conditioning::Point(x) => f(*x),
            Conditioning::Beliefs(b) => b.expect(f),
        }
    }
}

/// Description of a utility-of-effort function.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec {
    Constant(f64),
    Standard(EffortCost),
    Social {
        cost: EffortCost,
        prefs: SocialPrefs,
        scenario: Scenario,
        given: Conditioning,
    },
    Stress {
        cost: EffortCost,
        stress: StressParams,
        scenario: Scenario,
        given: Conditioning,
    },
    /// Standard utility with output `alpha·e` paid at the piece rate.
    Learning {
        cost: EffortCost,
        alpha: f64,
    },
}

impl UtilitySpec {
    pub fn learning_baseline(cost: EffortCost, l: &LearningParams) -> Self {
        UtilitySpec::Learning { cost, alpha: l.alpha_s }
    }

    pub fn evaluate(&self, e: f64) -> f64 {
        match self {
            UtilitySpec::Constant(v) => *v,
            UtilitySpec::Standard(p) => p.wage * e - p.cost / 2.0 * e * e,
            UtilitySpec::Social { cost: p, prefs, scenario, given } => {
                let weight = match scenario {
                    Scenario::ExAnte => 1.0,
                    Scenario::ExPost => prefs.delta,
                };
                let social = given.expect(|e_bar| {
                    let gap = p.wage * (e - e_bar);
                    if e <= e_bar {
                        prefs.lambda1 * gap
                    } else {
                        prefs.lambda2 * gap
                    }
                });
                p.wage * e - p.cost / 2.0 * e * e + weight * social
            }
            UtilitySpec::Stress { cost: p, stress, scenario, given } => {
                let weight = match scenario {
                    Scenario::ExAnte => 1.0,
                    Scenario::ExPost => stress.delta,
                };
                p.wage * e - p.cost / 2.0 * e * e - weight * given.expect(|e_bar| stress.theta * e_bar)
            }
            UtilitySpec::Learning { cost: p, alpha } => p.wage * alpha * e - p.cost / 2.0 * e * e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub argmax: f64,
    pub max_value: f64,
}

/// Evaluates `u` on `{lo, lo+step, …}` up to `hi` and returns the best grid
/// point, taking the smallest abscissa on ties.
pub fn oracle_maximize(u: &UtilitySpec, lo: f64, hi: f64, step: f64) -> Result<OracleResult> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParams(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParams(format!("step must be > 0, got {step}")));
    }
    let span = (hi - lo) / step;
    if span > 1e8 {
        return Err(Error::InvalidParams(format!("grid has {span:.0} intervals, limit is 1e8")));
    }
    let n = (span + 1e-9).floor() as u64;
    let mut best = OracleResult { argmax: lo, max_value: f64::NEG_INFINITY };
    for i in 0..=n {
        let e = lo + i as f64 * step;
        let v = u.evaluate(e);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("utility is {v} at e = {e}")));
        }
        if v > best.max_value {
            best = OracleResult { argmax: e, max_value: v };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PrefKind;

    #[test]
    fn standard_model_peak() {
        let u = UtilitySpec::Standard(EffortCost::new(1.0, 0.1).unwrap());
        let r = oracle_maximize(&u, 0.0, 30.0, 1e-3).unwrap();
        assert!((r.argmax - 10.0).abs() <= 1e-3);
        assert!((r.max_value - 5.0).abs() < 1e-9);
    }

    #[test]
    fn competitive_kink() {
        let u = UtilitySpec::Social {
            cost: EffortCost::new(1.0, 0.1).unwrap(),
            prefs: SocialPrefs { lambda1: 0.5, lambda2: 0.2, delta: 1.0, kind: PrefKind::Competitive },
            scenario: Scenario::ExAnte,
            given: Conditioning::Point(13.0),
        };
        let r = oracle_maximize(&u, 0.0, 30.0, 1e-3).unwrap();
        assert!((r.argmax - 13.0).abs() <= 1e-3);
    }

    #[test]
    fn ties_go_to_lo() {
        let r = oracle_maximize(&UtilitySpec::Constant(0.0), 2.0, 5.0, 0.5).unwrap();
        assert_eq!(r.argmax, 2.0);
        assert_eq!(r.max_value, 0.0);
    }

    #[test]
    fn rejects_bad_grids_and_nonfinite() {
        let u = UtilitySpec::Constant(0.0);
        assert!(oracle_maximize(&u, 1.0, 1.0, 0.1).is_err());
        assert!(oracle_maximize(&u, 0.0, 1.0, 0.0).is_err());
        assert!(oracle_maximize(&u, 0.0, 1e9, 1.0).is_err());
        assert!(matches!(oracle_maximize(&UtilitySpec::Constant(f64::NAN), 0.0, 1.0, 0.5), Err(Error::Numeric(_))));
    }
}
