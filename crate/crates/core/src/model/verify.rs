//! Numerical verification of every model prediction over a parameter grid.
//!
//! Each check records a nonnegative violation per grid point; a check
//! passes when its largest violation is within the check's tolerance.
//! Sequence claims (monotone or single-peaked in baseline effort) are
//! evaluated along the cost axis (or `alpha_s` for the learning model)
//! with the other parameters held fixed.
//!
//! Work is split into independent groups processed in parallel; the
//! observations are folded back in group order so the report does not
//! depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learning::{learning_effort, learning_posterior, learning_wtp};
use super::oracle::{oracle_maximize, Conditioning, UtilitySpec};
use super::social::{social_exante_effort, social_exante_utility, solve_expost};
use super::stress::{stress_effort, stress_wtp};
use super::{
    effort_no_info, BeliefPmf, EffortCost, LearningParams, LearningScenario, PrefKind, Scenario, SocialPrefs,
    StressParams,
};

/// Relative value agreement required between a closed form and the oracle.
const ORACLE_VALUE_REL: f64 = 1e-8;
/// Argmax agreement, in oracle grid steps.
const ORACLE_ARGMAX_STEPS: f64 = 2.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Cost parameters, strictly increasing (so baseline effort decreases).
    pub costs: Vec<f64>,
    /// Wages swept for the standard model; the other models use `wage`.
    pub standard_wages: Vec<f64>,
    pub wage: f64,
    /// Beliefs over the peer average.
    pub beliefs: Vec<BeliefPmf>,
    /// `(lambda1, lambda2)` pairs for competitive preferences, checked at `delta = 1`.
    pub competitive: Vec<(f64, f64)>,
    /// `(lambda1, lambda2)` pairs for inequality-averse preferences.
    pub inequality_averse: Vec<(f64, f64)>,
    pub stress_theta: Vec<f64>,
    pub stress_delta: Vec<f64>,
    /// Strictly increasing baseline productivities.
    pub learning_alpha_s: Vec<f64>,
    pub learning_search_cost: Vec<f64>,
    pub learning_sigma: Vec<f64>,
    pub learning_loc_b: Vec<f64>,
    pub learning_loc_a: f64,
    pub learning_alpha_lo: f64,
    pub learning_alpha_hi: f64,
    pub learning_grid_m: usize,
    /// Beliefs over peer output for the learning model.
    pub learning_beliefs: Vec<BeliefPmf>,
    /// Number of evenly spaced draws in `[0,1)` used for realized adoption.
    pub learning_draws: usize,
    pub oracle_step: f64,
    pub fd_step: f64,
    pub fd_tol: f64,
}

fn pmf(support: &[f64], probs: &[f64]) -> BeliefPmf {
    BeliefPmf::new(support.to_vec(), probs.to_vec()).expect("static belief fixture is valid")
}

impl Default for GridConfig {
    fn default() -> Self {
        let beliefs = vec![
            pmf(&[5.0], &[1.0]),
            pmf(&[13.0], &[1.0]),
            pmf(&[25.0], &[1.0]),
            pmf(&[40.0], &[1.0]),
            pmf(&[10.0, 20.0, 30.0], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
            pmf(&[15.0, 25.0, 35.0], &[0.2, 0.5, 0.3]),
            pmf(&[5.0, 30.0, 60.0], &[0.3, 0.4, 0.3]),
            pmf(&[5.0, 15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0], &[0.05, 0.15, 0.25, 0.25, 0.15, 0.08, 0.05, 0.02]),
        ];
        let competitive = [0.2, 0.4, 0.6, 0.8, 1.0]
            .iter()
            .flat_map(|l1| [0.25, 0.5, 1.0].iter().map(move |r| (*l1, l1 * r)))
            .collect();
        let inequality_averse = [0.2, 0.5, 0.8, 1.0]
            .iter()
            .flat_map(|l1| {
                [-0.1f64, -0.2, -0.5, -0.8].iter().filter(move |l2: &&f64| l2.abs() <= *l1).map(move |l2| (*l1, *l2))
            })
            .collect();
        Self {
            costs: vec![0.02, 0.025, 0.03, 0.035, 0.04, 0.05, 0.06, 0.07, 0.08, 0.1],
            standard_wages: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
            wage: 1.0,
            beliefs,
            competitive,
            inequality_averse,
            stress_theta: vec![0.05, 0.1, 0.25, 0.5],
            stress_delta: vec![0.0, 0.25, 0.5, 1.0],
            learning_alpha_s: vec![0.8, 0.9, 1.0, 1.1, 1.2],
            learning_search_cost: vec![0.0, 0.5, 2.0, 5.0],
            learning_sigma: vec![0.1, 0.25],
            learning_loc_b: vec![0.01, 0.02],
            learning_loc_a: 0.6,
            learning_alpha_lo: 0.5,
            learning_alpha_hi: 1.5,
            learning_grid_m: 21,
            learning_beliefs: vec![
                pmf(&[10.0], &[1.0]),
                pmf(&[30.0], &[1.0]),
                pmf(&[10.0, 30.0, 50.0], &[0.25, 0.5, 0.25]),
            ],
            learning_draws: 16,
            oracle_step: 1e-3,
            fd_step: 1e-5,
            fd_tol: 1e-4,
        }
    }
}

impl GridConfig {
    /// Parameter combinations evaluated for each model.
    pub fn combinations(&self) -> Vec<(&'static str, usize)> {
        let nc = self.costs.len();
        let nb = self.beliefs.len();
        vec![
            ("standard", self.standard_wages.len() * nc * nb),
            ("competitive", self.competitive.len() * nc * nb),
            ("inequality_averse", self.inequality_averse.len() * nc * nb),
            ("stress", self.stress_theta.len() * self.stress_delta.len() * nc * nb),
            (
                "learning",
                self.learning_alpha_s.len()
                    * self.learning_search_cost.len()
                    * self.learning_sigma.len()
                    * self.learning_loc_b.len()
                    * nc
                    * self.learning_beliefs.len(),
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub id: String,
    pub model: String,
    pub claim: String,
    pub grid_size: usize,
    pub pass_count: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGrid {
    pub model: String,
    pub combinations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub tolerance: f64,
    pub fd_tolerance: f64,
    pub oracle_step: f64,
    pub models: Vec<ModelGrid>,
    pub checks: Vec<HypothesisCheck>,
    pub all_pass: bool,
}

impl TheoryReport {
    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

#[derive(Clone, Copy)]
enum Tol {
    Exact,
    FiniteDiff,
    /// Thresholds are folded into the violation itself.
    Oracle,
}

macro_rules! checks {
    ($($name:ident => ($id:literal, $model:literal, $tol:ident, $claim:literal)),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        #[allow(clippy::enum_variant_names)]
        enum Check { $($name),* }

        const CHECKS: &[(Check, &str, &str, Tol, &str)] = &[
            $((Check::$name, $id, $model, Tol::$tol, $claim)),*
        ];
    };
}

checks! {
    StdWtpZero => ("standard.wtp_zero", "standard", Exact,
        "WTP is zero ex ante and ex post and flat in baseline effort"),
    StdEffortUnchanged => ("standard.effort_unchanged", "standard", Exact,
        "effort equals w/c in both scenarios"),
    StdOracle => ("standard.oracle", "standard", Oracle,
        "closed-form effort and utility match the grid oracle"),

    CompIndirectUtility => ("competitive.indirect_utility_formula", "competitive", Exact,
        "ex ante indirect utility equals its three-branch closed form"),
    CompGainDecreasingInCost => ("competitive.gain_decreasing_in_cost", "competitive", FiniteDiff,
        "d(V_info - V_no)/dc <= 0 at every peer average (finite differences)"),
    CompWtpIncreasing => ("competitive.wtp_exante_increasing_in_baseline", "competitive", Exact,
        "ex ante WTP is weakly increasing in baseline effort w/c"),
    CompEffortExAnte => ("competitive.effort_exante_increases", "competitive", Exact,
        "ex ante effort is at least w(1+lambda2)/c > w/c"),
    CompEffortExPost => ("competitive.effort_expost_increases", "competitive", Exact,
        "ex post effort exceeds w/c"),
    CompWtpOrder => ("competitive.wtp_exante_ge_expost", "competitive", Exact,
        "at delta = 1, ex ante WTP >= ex post WTP"),
    CompOracle => ("competitive.oracle", "competitive", Oracle,
        "ex ante and ex post optima match the grid oracle"),

    IneqIndirectUtility => ("inequality_averse.indirect_utility_formula", "inequality_averse", Exact,
        "ex ante indirect utility equals its three-branch closed form"),
    IneqWtpNonpositive => ("inequality_averse.wtp_exante_nonpositive", "inequality_averse", Exact,
        "ex ante WTP <= 0 for every belief"),
    IneqWtpSinglePeaked => ("inequality_averse.wtp_exante_single_peaked", "inequality_averse", Exact,
        "ex ante WTP is single-peaked in baseline effort"),
    IneqBunching => ("inequality_averse.effort_exante_closer_to_average", "inequality_averse", Exact,
        "ex ante effort lies between w/c and the peer average"),
    IneqWtpOrder => ("inequality_averse.wtp_exante_ge_expost", "inequality_averse", Exact,
        "at delta = 1, ex ante WTP >= ex post WTP"),
    IneqExPostFarther => ("inequality_averse.effort_expost_farther_from_average", "inequality_averse", Exact,
        "|e_expost - e_bar| >= |e_exante(e_bar) - e_bar| at every believed peer average"),
    IneqOracle => ("inequality_averse.oracle", "inequality_averse", Oracle,
        "ex ante and ex post optima match the grid oracle"),

    StressWtpFormula => ("stress.wtp_exante_formula", "stress", Exact,
        "ex ante WTP equals -E[theta * e_bar]"),
    StressWtpNegative => ("stress.wtp_exante_negative", "stress", Exact,
        "ex ante WTP is negative"),
    StressWtpFlat => ("stress.wtp_exante_flat_in_baseline", "stress", Exact,
        "ex ante WTP does not vary with baseline effort"),
    StressWtpOrder => ("stress.wtp_expost_ge_exante", "stress", Exact,
        "ex post WTP >= ex ante WTP"),
    StressEffort => ("stress.effort_unchanged", "stress", Exact,
        "effort equals w/c with and without information, ex ante and ex post"),
    StressOracle => ("stress.oracle", "stress", Oracle,
        "effort and utility match the grid oracle"),

    LearnFosd => ("learning.posterior_fosd", "learning", Exact,
        "posterior over productivity first-order stochastically increases in peer output"),
    LearnWtpPositive => ("learning.wtp_exante_nonnegative", "learning", Exact,
        "ex ante WTP >= 0"),
    LearnWtpDecreasing => ("learning.wtp_exante_decreasing_in_baseline", "learning", Exact,
        "ex ante WTP is non-increasing in alpha_s"),
    LearnWtpDerivative => ("learning.wtp_exante_derivative_sign", "learning", FiniteDiff,
        "dWTP/dalpha_s <= 0 (finite differences)"),
    LearnEffortExAnte => ("learning.effort_exante_weakly_increases", "learning", Exact,
        "realized ex ante effort >= w*alpha_s/c, and equals w*alpha'/c when a better strategy is adopted"),
    LearnWtpExPost => ("learning.wtp_expost_zero", "learning", Exact,
        "ex post WTP is zero and ex ante WTP is at least as large"),
    LearnEffortExPost => ("learning.effort_expost_unchanged", "learning", Exact,
        "ex post effort equals w*alpha_s/c"),
    LearnOracle => ("learning.oracle", "learning", Oracle,
        "baseline and adopted-strategy optima match the grid oracle"),
}

type Obs = (Check, f64);

fn index_of(check: Check) -> usize {
    CHECKS.iter().position(|c| c.0 == check).expect("every check is registered")
}

fn excess(x: f64) -> f64 {
    x.max(0.0)
}

/// Violation of "`seq` is non-increasing".
fn nonincreasing_violation(seq: &[f64]) -> f64 {
    seq.windows(2).map(|w| excess(w[1] - w[0])).fold(0.0, f64::max)
}

/// Violation of "`seq` rises weakly to its maximum, then falls weakly".
fn single_peak_violation(seq: &[f64]) -> f64 {
    let peak =
        seq.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best }).0;
    let rising = seq[..=peak].windows(2).map(|w| excess(w[0] - w[1]));
    let falling = seq[peak..].windows(2).map(|w| excess(w[1] - w[0]));
    rising.chain(falling).fold(0.0, f64::max)
}

struct OracleCheck<'a> {
    spec: UtilitySpec,
    effort: f64,
    value: f64,
    hi: f64,
    scale: f64,
    cfg: &'a GridConfig,
}

impl OracleCheck<'_> {
    /// Excess over the argmax and value thresholds; `0` when both hold.
    fn violation(&self) -> f64 {
        let step = self.cfg.oracle_step;
        match oracle_maximize(&self.spec, 0.0, self.hi, step) {
            Ok(r) => {
                let scale = self.scale.max(r.max_value.abs()).max(self.value.abs());
                let arg = excess((r.argmax - self.effort).abs() - ORACLE_ARGMAX_STEPS * step);
                let val = excess((r.max_value - self.value).abs() / scale - ORACLE_VALUE_REL);
                arg + val
            }
            Err(_) => f64::MAX,
        }
    }
}

fn standard_group(cfg: &GridConfig, wage: f64, beliefs: &BeliefPmf) -> Vec<Obs> {
    let mut obs = Vec::new();
    let mut wtps = Vec::new();
    for &c in &cfg.costs {
        let p = EffortCost { wage, cost: c };
        let e_no = effort_no_info(&p);
        let v_no = p.baseline_utility();
        // Information changes neither preferences nor beliefs.
        let wtp_ante = beliefs.expect(|_| p.net_earnings(e_no)) - v_no;
        let wtp_post = p.net_earnings(e_no) - v_no;
        obs.push((Check::StdWtpZero, wtp_ante.abs().max(wtp_post.abs())));
        wtps.push(wtp_ante);
        let oracle = OracleCheck {
            spec: UtilitySpec::Standard(p),
            effort: e_no,
            value: v_no,
            hi: 1.5 * e_no + 5.0,
            scale: v_no,
            cfg,
        };
        obs.push((Check::StdOracle, oracle.violation()));
        // Effort with information: best response to each believed average,
        // which for this model ignores the average entirely.
        let informed = beliefs.support().iter().map(|_| (effort_no_info(&p) - wage / c).abs()).fold(0.0, f64::max);
        obs.push((Check::StdEffortUnchanged, informed));
    }
    let spread =
        wtps.iter().copied().fold(f64::NEG_INFINITY, f64::max) - wtps.iter().copied().fold(f64::INFINITY, f64::min);
    obs.push((Check::StdWtpZero, spread));
    obs
}

/// The three-branch indirect utility written out case by case.
fn exante_utility_cases(p: &EffortCost, s: &SocialPrefs, e_bar: f64) -> f64 {
    let (w, c) = (p.wage, p.cost);
    let lower = w * (1.0 + s.lambda2) / c;
    let upper = w * (1.0 + s.lambda1) / c;
    if e_bar < lower {
        w * w * (1.0 + s.lambda2).powi(2) / (2.0 * c) - s.lambda2 * w * e_bar
    } else if e_bar <= upper {
        w * e_bar - c / 2.0 * e_bar * e_bar
    } else {
        w * w * (1.0 + s.lambda1).powi(2) / (2.0 * c) - s.lambda1 * w * e_bar
    }
}

fn social_group(cfg: &GridConfig, kind: PrefKind, lambdas: (f64, f64), beliefs: &BeliefPmf) -> Vec<Obs> {
    let competitive = kind == PrefKind::Competitive;
    let pick = |comp: Check, ineq: Check| if competitive { comp } else { ineq };
    let s = SocialPrefs { lambda1: lambdas.0, lambda2: lambdas.1, delta: 1.0, kind };
    let mut obs = Vec::new();
    let mut wtps = Vec::new();
    for &c in &cfg.costs {
        let p = EffortCost { wage: cfg.wage, cost: c };
        let e_no = effort_no_info(&p);
        let v_no = p.baseline_utility();
        let hi = p.wage * (1.0 + s.lambda1.abs().max(s.lambda2.abs())) / c
            + beliefs.support().last().copied().unwrap_or(0.0)
            + 5.0;

        for &e_bar in beliefs.support() {
            let e = social_exante_effort(&p, &s, e_bar);
            let v = social_exante_utility(&p, &s, e_bar);
            obs.push((
                pick(Check::CompIndirectUtility, Check::IneqIndirectUtility),
                (v - exante_utility_cases(&p, &s, e_bar)).abs(),
            ));
            if competitive {
                let floor = p.wage * (1.0 + s.lambda2) / c;
                obs.push((Check::CompEffortExAnte, excess(floor - e).max(excess(e_no - e))));
                let h = cfg.fd_step;
                let gain = |cost: f64| {
                    let q = EffortCost { wage: p.wage, cost };
                    social_exante_utility(&q, &s, e_bar) - q.baseline_utility()
                };
                let slope = (gain(c + h) - gain(c - h)) / (2.0 * h);
                obs.push((Check::CompGainDecreasingInCost, excess(slope)));
            } else {
                let (a, b) = (e_no.min(e_bar), e_no.max(e_bar));
                let outside = excess(a - e).max(excess(e - b));
                let closer = excess((e - e_bar).abs() - (e_no - e_bar).abs());
                obs.push((Check::IneqBunching, outside.max(closer)));
            }
            let oracle = OracleCheck {
                spec: UtilitySpec::Social {
                    cost: p,
                    prefs: s,
                    scenario: Scenario::ExAnte,
                    given: Conditioning::Point(e_bar),
                },
                effort: e,
                value: v,
                hi,
                scale: v_no,
                cfg,
            };
            obs.push((pick(Check::CompOracle, Check::IneqOracle), oracle.violation()));
        }

        let wtp_ante = beliefs.expect(|e_bar| social_exante_utility(&p, &s, e_bar)) - v_no;
        let (e_post, v_post) = solve_expost(&p, &s, beliefs);
        let wtp_post = v_post - v_no;
        wtps.push(wtp_ante);
        obs.push((pick(Check::CompWtpOrder, Check::IneqWtpOrder), excess(wtp_post - wtp_ante)));
        if competitive {
            obs.push((Check::CompEffortExPost, excess(e_no - e_post)));
        } else {
            obs.push((Check::IneqWtpNonpositive, excess(wtp_ante)));
            let farther = beliefs
                .support()
                .iter()
                .map(|&e_bar| {
                    let e_ante = social_exante_effort(&p, &s, e_bar);
                    excess((e_ante - e_bar).abs() - (e_post - e_bar).abs())
                })
                .fold(0.0, f64::max);
            obs.push((Check::IneqExPostFarther, farther));
        }
        let oracle = OracleCheck {
            spec: UtilitySpec::Social {
                cost: p,
                prefs: s,
                scenario: Scenario::ExPost,
                given: Conditioning::Beliefs(beliefs.clone()),
            },
            effort: e_post,
            value: v_post,
            hi,
            scale: v_no,
            cfg,
        };
        obs.push((pick(Check::CompOracle, Check::IneqOracle), oracle.violation()));
    }
    // Costs ascend, so baseline effort descends along `wtps`.
    if competitive {
        obs.push((Check::CompWtpIncreasing, nonincreasing_violation(&wtps)));
    } else {
        let by_baseline: Vec<f64> = wtps.iter().rev().copied().collect();
        obs.push((Check::IneqWtpSinglePeaked, single_peak_violation(&by_baseline)));
    }
    obs
}

fn stress_group(cfg: &GridConfig, st: StressParams, beliefs: &BeliefPmf) -> Vec<Obs> {
    let mut obs = Vec::new();
    let mut wtps = Vec::new();
    let expected = beliefs.mean() * st.theta;
    for &c in &cfg.costs {
        let p = EffortCost { wage: cfg.wage, cost: c };
        let e_no = effort_no_info(&p);
        let v_no = p.baseline_utility();
        let ante = stress_wtp(&p, &st, beliefs, Scenario::ExAnte);
        let post = stress_wtp(&p, &st, beliefs, Scenario::ExPost);
        wtps.push(ante);
        obs.push((Check::StressWtpFormula, (ante + expected).abs()));
        obs.push((Check::StressWtpNegative, excess(ante)));
        obs.push((Check::StressWtpOrder, excess(ante - post)));
        let e = stress_effort(&p, &st);
        obs.push((Check::StressEffort, (e - e_no).abs()));

        let hi = 1.5 * e_no + 5.0;
        for (scenario, given) in beliefs
            .support()
            .iter()
            .map(|x| (Scenario::ExAnte, Conditioning::Point(*x)))
            .chain(std::iter::once((Scenario::ExPost, Conditioning::Beliefs(beliefs.clone()))))
        {
            let cost = match (&scenario, &given) {
                (Scenario::ExAnte, Conditioning::Point(x)) => st.stress(*x),
                _ => st.delta * expected,
            };
            let oracle = OracleCheck {
                spec: UtilitySpec::Stress { cost: p, stress: st, scenario, given },
                effort: e,
                value: p.net_earnings(e) - cost,
                hi,
                scale: v_no,
                cfg,
            };
            obs.push((Check::StressOracle, oracle.violation()));
        }
    }
    let spread =
        wtps.iter().copied().fold(f64::NEG_INFINITY, f64::max) - wtps.iter().copied().fold(f64::INFINITY, f64::min);
    obs.push((Check::StressWtpFlat, spread));
    obs
}

struct LearningGroup<'a> {
    search_cost: f64,
    sigma: f64,
    loc_b: f64,
    cost: f64,
    beliefs_y: &'a BeliefPmf,
}

fn learning_group(cfg: &GridConfig, g: &LearningGroup<'_>) -> Vec<Obs> {
    let mut obs = Vec::new();
    let p = EffortCost { wage: cfg.wage, cost: g.cost };
    let params = |alpha_s: f64| LearningParams {
        alpha_s,
        alpha_lo: cfg.learning_alpha_lo,
        alpha_hi: cfg.learning_alpha_hi,
        search_cost: g.search_cost,
        grid_m: cfg.learning_grid_m,
        kernel_sigma: g.sigma,
        loc_a: cfg.learning_loc_a,
        loc_b: g.loc_b,
    };
    let draws: Vec<f64> = (0..cfg.learning_draws).map(|i| (i as f64 + 0.5) / cfg.learning_draws as f64).collect();
    let mut wtps = Vec::new();
    for &alpha_s in &cfg.learning_alpha_s {
        let l = params(alpha_s);
        let base = l.baseline_effort(&p);
        let v_no = l.baseline_utility(&p);
        let ante = learning_wtp(&p, &l, g.beliefs_y, Scenario::ExAnte);
        let post = learning_wtp(&p, &l, g.beliefs_y, Scenario::ExPost);
        wtps.push(ante);
        obs.push((Check::LearnWtpPositive, excess(-ante)));
        obs.push((Check::LearnWtpExPost, post.abs().max(excess(post - ante))));

        let h = cfg.fd_step;
        let slope = (learning_wtp(&p, &params(alpha_s + h), g.beliefs_y, Scenario::ExAnte)
            - learning_wtp(&p, &params(alpha_s - h), g.beliefs_y, Scenario::ExAnte))
            / (2.0 * h);
        obs.push((Check::LearnWtpDerivative, excess(slope)));

        let post_effort =
            learning_effort(&p, &l, LearningScenario::ExPost).map(|(e, _)| (e - base).abs()).unwrap_or(f64::MAX);
        obs.push((Check::LearnEffortExPost, post_effort));

        let hi = p.wage * cfg.learning_alpha_hi / p.cost + 5.0;
        let mut adopted_best = alpha_s;
        let mut worst = 0.0f64;
        for &y in g.beliefs_y.support() {
            for &u in &draws {
                match learning_effort(&p, &l, LearningScenario::ExAnte { y_bar: y, draw: u }) {
                    Ok((e, alpha)) => {
                        let consistent = (e - p.wage * alpha / p.cost).abs();
                        let adoption = if e > base { excess(alpha_s - alpha) } else { 0.0 };
                        worst = worst.max(excess(base - e)).max(consistent).max(adoption);
                        adopted_best = adopted_best.max(alpha);
                    }
                    Err(_) => worst = f64::MAX,
                }
            }
        }
        obs.push((Check::LearnEffortExAnte, worst));

        let mut oracle_worst = OracleCheck {
            spec: UtilitySpec::learning_baseline(p, &l),
            effort: base,
            value: v_no,
            hi,
            scale: v_no,
            cfg,
        }
        .violation();
        if adopted_best > alpha_s {
            let adopted = OracleCheck {
                spec: UtilitySpec::Learning { cost: p, alpha: adopted_best },
                effort: p.wage * adopted_best / p.cost,
                value: LearningParams::strategy_value(&p, adopted_best),
                hi,
                scale: v_no,
                cfg,
            };
            oracle_worst = oracle_worst.max(adopted.violation());
        }
        obs.push((Check::LearnOracle, oracle_worst));
    }
    obs.push((Check::LearnWtpDecreasing, nonincreasing_violation(&wtps)));

    // Posterior ordering does not depend on alpha_s or the cost.
    let l = params(cfg.learning_alpha_s[0]);
    let ys = [0.0, 5.0, 10.0, 20.0, 30.0, 50.0, 80.0];
    let grid = l.alpha_grid();
    let fosd = ys
        .windows(2)
        .map(|w| {
            let (lo, hi) = (learning_posterior(&l, w[0]), learning_posterior(&l, w[1]));
            grid.iter().map(|a| excess(hi.cdf(*a) - lo.cdf(*a))).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    obs.push((Check::LearnFosd, fosd));
    obs
}

enum Group<'a> {
    Standard(f64, &'a BeliefPmf),
    Social(PrefKind, (f64, f64), &'a BeliefPmf),
    Stress(StressParams, &'a BeliefPmf),
    Learning(LearningGroup<'a>),
}

/// Runs every check over `grid`. `tol` applies to exact claims; finite
/// difference claims use `grid.fd_tol`.
pub fn verify_predictions(grid: &GridConfig, tol: f64) -> TheoryReport {
    let mut groups = Vec::new();
    for &w in &grid.standard_wages {
        for b in &grid.beliefs {
            groups.push(Group::Standard(w, b));
        }
    }
    for (kind, pairs) in
        [(PrefKind::Competitive, &grid.competitive), (PrefKind::InequalityAverse, &grid.inequality_averse)]
    {
        for &pair in pairs {
            for b in &grid.beliefs {
                groups.push(Group::Social(kind, pair, b));
            }
        }
    }
    for &theta in &grid.stress_theta {
        for &delta in &grid.stress_delta {
            for b in &grid.beliefs {
                groups.push(Group::Stress(StressParams { theta, delta }, b));
            }
        }
    }
    for &search_cost in &grid.learning_search_cost {
        for &sigma in &grid.learning_sigma {
            for &loc_b in &grid.learning_loc_b {
                for &cost in &grid.costs {
                    for beliefs_y in &grid.learning_beliefs {
                        groups.push(Group::Learning(LearningGroup { search_cost, sigma, loc_b, cost, beliefs_y }));
                    }
                }
            }
        }
    }

    let observations: Vec<Vec<Obs>> = groups
        .par_iter()
        .map(|g| match g {
            Group::Standard(w, b) => standard_group(grid, *w, b),
            Group::Social(kind, pair, b) => social_group(grid, *kind, *pair, b),
            Group::Stress(st, b) => stress_group(grid, *st, b),
            Group::Learning(lg) => learning_group(grid, lg),
        })
        .collect();

    let mut checks: Vec<HypothesisCheck> = CHECKS
        .iter()
        .map(|(_, id, model, kind, claim)| HypothesisCheck {
            id: (*id).to_string(),
            model: (*model).to_string(),
            claim: (*claim).to_string(),
            grid_size: 0,
            pass_count: 0,
            max_violation: 0.0,
            tolerance: match kind {
                Tol::Exact => tol,
                Tol::FiniteDiff => grid.fd_tol,
                Tol::Oracle => 0.0,
            },
            pass: true,
        })
        .collect();
    for (check, violation) in observations.into_iter().flatten() {
        let c = &mut checks[index_of(check)];
        c.grid_size += 1;
        if violation <= c.tolerance {
            c.pass_count += 1;
        }
        c.max_violation = c.max_violation.max(violation);
    }
    for c in &mut checks {
        c.pass = c.max_violation <= c.tolerance;
    }
    let all_pass = checks.iter().all(|c| c.pass);
    TheoryReport {
        tolerance: tol,
        fd_tolerance: grid.fd_tol,
        oracle_step: grid.oracle_step,
        models: grid
            .combinations()
            .into_iter()
            .map(|(model, combinations)| ModelGrid { model: model.to_string(), combinations })
            .collect(),
        checks,
        all_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> GridConfig {
        GridConfig {
            costs: vec![0.04, 0.05, 0.1],
            standard_wages: vec![1.0],
            beliefs: vec![pmf(&[13.0], &[1.0]), pmf(&[10.0, 20.0, 30.0], &[0.2, 0.5, 0.3])],
            competitive: vec![(0.5, 0.2)],
            inequality_averse: vec![(0.5, -0.2)],
            stress_theta: vec![0.1],
            stress_delta: vec![0.5],
            learning_alpha_s: vec![0.9, 1.0, 1.1],
            learning_search_cost: vec![0.5],
            learning_sigma: vec![0.2],
            learning_loc_b: vec![0.02],
            learning_beliefs: vec![pmf(&[20.0], &[1.0])],
            ..GridConfig::default()
        }
    }

    #[test]
    fn sequence_violations() {
        assert_eq!(nonincreasing_violation(&[3.0, 2.0, 2.0, 1.0]), 0.0);
        assert_eq!(nonincreasing_violation(&[3.0, 2.0, 2.5]), 0.5);
        assert_eq!(single_peak_violation(&[-3.0, -1.0, 0.0, -2.0]), 0.0);
        assert_eq!(single_peak_violation(&[-1.0, -3.0, 0.0, -2.0]), 2.0);
    }

    #[test]
    fn small_grid_passes() {
        let report = verify_predictions(&small_grid(), 1e-7);
        for c in &report.checks {
            assert!(c.pass, "{} failed: {}", c.id, c.max_violation);
            assert!(c.grid_size > 0, "{} never evaluated", c.id);
        }
        assert!(report.all_pass);
    }

    #[test]
    fn corrupted_lambda2_is_flagged() {
        let grid = GridConfig { inequality_averse: vec![(0.5, 0.2)], ..small_grid() };
        let report = verify_predictions(&grid, 1e-7);
        let c = report.check("inequality_averse.wtp_exante_nonpositive").unwrap();
        assert!(!c.pass);
        assert!(c.max_violation > 0.0);
        assert!(!report.all_pass);
    }

    #[test]
    fn default_grid_is_large_enough() {
        for (model, n) in GridConfig::default().combinations() {
            assert!(n >= 500, "{model}: {n}");
        }
    }
}
