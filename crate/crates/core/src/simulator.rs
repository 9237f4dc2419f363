//! Synthetic populations, the two-period experiment, and
//! difference-in-means treatment effects.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentSpec, InfoCondition, ModelTag, WorkerModel};
use crate::classifier::{classify, ClassifierConfig, WorkerType};
use crate::elicitation::{
    assign_arm, bdm_resolve, build_wtp_schedule, realized_bin, BdmOutcome, BinOffsets, PerformanceBin, TreatmentArm,
    WtpSchedule, BONUS_CENTS,
};
use crate::error::{Error, Result};
use crate::model::{BeliefPmf, EffortCost, LearningParams, PrefKind, Scenario, SocialPrefs, StressParams};
use crate::rng::{substream, Stream};

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{what}: need lo <= hi, got [{}, {}]", self.lo, self.hi)))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }
}

impl From<[f64; 2]> for Range {
    fn from(v: [f64; 2]) -> Self {
        Self { lo: v[0], hi: v[1] }
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lo, r.hi]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mixture {
    pub standard: f64,
    pub stress: f64,
    pub competitive: f64,
    pub inequality_averse: f64,
    pub learning: f64,
}

impl Default for Mixture {
    fn default() -> Self {
        Self { standard: 0.32, stress: 0.15, competitive: 0.23, inequality_averse: 0.0, learning: 0.30 }
    }
}

impl Mixture {
    fn weights(&self) -> [(ModelTag, f64); 5] {
        [
            (ModelTag::Standard, self.standard),
            (ModelTag::Stress, self.stress),
            (ModelTag::Competitive, self.competitive),
            (ModelTag::InequalityAverse, self.inequality_averse),
            (ModelTag::Learning, self.learning),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParams("mixture weights must be finite and >= 0".into()));
        }
        let total: f64 = w.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(())
    }

    fn pick(&self, u: f64) -> ModelTag {
        let mut acc = 0.0;
        let w = self.weights();
        for (tag, p) in w {
            acc += p;
            if u < acc {
                return tag;
            }
        }
        w.iter().rev().find(|(_, p)| *p > 0.0).expect("weights sum to 1").0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandardDist {
    pub cost: Range,
    pub curiosity: Range,
}

impl Default for StandardDist {
    fn default() -> Self {
        Self { cost: Range::new(0.035, 0.045), curiosity: Range::fixed(0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StressDist {
    pub cost: Range,
    pub theta: Range,
    pub delta: Range,
    pub curiosity: Range,
}

impl Default for StressDist {
    fn default() -> Self {
        Self {
            cost: Range::new(0.035, 0.045),
            theta: Range::new(0.1, 0.5),
            delta: Range::new(0.0, 0.05),
            curiosity: Range::fixed(0.0),
        }
    }
}

/// Social preferences with `lambda2 = lambda2_ratio * lambda1` (competitive)
/// or `lambda2 = -lambda2_ratio * lambda1` (inequality averse).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialDist {
    pub cost: Range,
    pub lambda1: Range,
    pub lambda2_ratio: Range,
    pub delta: Range,
    pub curiosity: Range,
}

impl Default for SocialDist {
    fn default() -> Self {
        Self {
            cost: Range::new(0.035, 0.045),
            lambda1: Range::new(0.2, 0.6),
            lambda2_ratio: Range::new(0.25, 0.75),
            delta: Range::new(0.3, 0.7),
            curiosity: Range::fixed(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningDist {
    pub cost: Range,
    pub alpha_s: Range,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub search_cost: Range,
    pub grid_m: usize,
    pub kernel_sigma: Range,
    pub loc_a: Range,
    pub loc_b: Range,
    pub curiosity: Range,
}

impl Default for LearningDist {
    fn default() -> Self {
        Self {
            cost: Range::new(0.035, 0.045),
            alpha_s: Range::new(0.95, 1.05),
            alpha_lo: 0.5,
            alpha_hi: 1.5,
            search_cost: Range::new(0.5, 2.0),
            grid_m: 21,
            kernel_sigma: Range::new(0.08, 0.12),
            loc_a: Range::new(0.75, 0.85),
            loc_b: Range::new(0.009, 0.011),
            curiosity: Range::new(0.0, 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefMode {
    /// Point mass at the true peer average.
    Point,
    /// `diffuse_weights` over the midpoints of eight ten-row belief bins.
    Diffuse,
}

/// Midpoints of the belief bins 0-10, 11-20, ..., 61-70 and 70+.
pub const DIFFUSE_SUPPORT: [f64; 8] = [5.0, 15.5, 25.5, 35.5, 45.5, 55.5, 65.5, 75.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub n: usize,
    pub seed: u64,
    /// True peer average, in rows.
    pub e_bar_true: f64,
    pub wage: Range,
    /// Effort noise standard deviation, in rows, applied in both periods.
    pub effort_noise: f64,
    /// Rows added to every Period-2 effort.
    pub period_drift: f64,
    pub beliefs: BeliefMode,
    pub diffuse_weights: [f64; 8],
    pub offsets: BinOffsets,
    pub classifier: ClassifierConfig,
    pub mixture: Mixture,
    pub standard: StandardDist,
    pub stress: StressDist,
    pub competitive: SocialDist,
    pub inequality_averse: SocialDist,
    pub learning: LearningDist,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 20240501,
            e_bar_true: 27.0,
            wage: Range::fixed(1.0),
            effort_noise: 2.0,
            period_drift: 0.0,
            beliefs: BeliefMode::Point,
            diffuse_weights: [0.05, 0.1, 0.25, 0.25, 0.15, 0.1, 0.05, 0.05],
            offsets: BinOffsets::default(),
            classifier: ClassifierConfig::default(),
            mixture: Mixture::default(),
            standard: StandardDist::default(),
            stress: StressDist::default(),
            competitive: SocialDist::default(),
            inequality_averse: SocialDist::default(),
            learning: LearningDist::default(),
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("population size must be >= 1".into()));
        }
        if !(self.e_bar_true.is_finite() && self.e_bar_true >= 0.0) {
            return Err(Error::InvalidParams(format!("e_bar_true must be >= 0, got {}", self.e_bar_true)));
        }
        if !(self.effort_noise.is_finite() && self.effort_noise >= 0.0) {
            return Err(Error::InvalidParams("effort_noise must be >= 0".into()));
        }
        if !self.period_drift.is_finite() {
            return Err(Error::InvalidParams("period_drift must be finite".into()));
        }
        self.classifier.validate()?;
        self.mixture.validate()?;
        if self.beliefs == BeliefMode::Diffuse {
            self.diffuse_beliefs()?;
        }
        let ranges = [
            ("wage", self.wage),
            ("standard.cost", self.standard.cost),
            ("standard.curiosity", self.standard.curiosity),
            ("stress.cost", self.stress.cost),
            ("stress.theta", self.stress.theta),
            ("stress.delta", self.stress.delta),
            ("stress.curiosity", self.stress.curiosity),
            ("competitive.cost", self.competitive.cost),
            ("competitive.lambda1", self.competitive.lambda1),
            ("competitive.lambda2_ratio", self.competitive.lambda2_ratio),
            ("competitive.delta", self.competitive.delta),
            ("competitive.curiosity", self.competitive.curiosity),
            ("inequality_averse.cost", self.inequality_averse.cost),
            ("inequality_averse.lambda1", self.inequality_averse.lambda1),
            ("inequality_averse.lambda2_ratio", self.inequality_averse.lambda2_ratio),
            ("inequality_averse.delta", self.inequality_averse.delta),
            ("inequality_averse.curiosity", self.inequality_averse.curiosity),
            ("learning.cost", self.learning.cost),
            ("learning.alpha_s", self.learning.alpha_s),
            ("learning.search_cost", self.learning.search_cost),
            ("learning.kernel_sigma", self.learning.kernel_sigma),
            ("learning.loc_a", self.learning.loc_a),
            ("learning.loc_b", self.learning.loc_b),
            ("learning.curiosity", self.learning.curiosity),
        ];
        for (what, r) in ranges {
            r.validate(what)?;
        }
        // Every corner of every range must give a valid agent.
        for (tag, p) in self.mixture.weights() {
            if p > 0.0 {
                for corner in [0.0, 1.0] {
                    let mut rng = CornerRng(corner);
                    sample_agent(self, tag, "check".into(), &mut rng).validate()?;
                }
            }
        }
        Ok(())
    }

    /// Beliefs agents hold about the peer average when it arrives ex post.
    pub fn diffuse_beliefs(&self) -> Result<BeliefPmf> {
        BeliefPmf::new(DIFFUSE_SUPPORT.to_vec(), self.diffuse_weights.to_vec())
    }

    fn expost_beliefs(&self) -> Result<BeliefPmf> {
        match self.beliefs {
            BeliefMode::Point => BeliefPmf::point_mass(self.e_bar_true),
            BeliefMode::Diffuse => self.diffuse_beliefs(),
        }
    }
}

/// Deterministic stand-in RNG that always returns the same unit draw, used
/// to probe range endpoints.
struct CornerRng(f64);

impl rand::RngCore for CornerRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        // `random::<f64>()` uses the top 53 bits.
        if self.0 >= 1.0 {
            u64::MAX
        } else {
            0
        }
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        let v = self.next_u64().to_le_bytes()[0];
        dst.iter_mut().for_each(|b| *b = v);
    }
}

fn sample_agent(cfg: &PopulationConfig, tag: ModelTag, worker_id: String, rng: &mut impl Rng) -> AgentSpec {
    let wage = cfg.wage.sample(rng);
    let cost_of = |r: Range, rng: &mut _| EffortCost { wage, cost: r.sample(rng) };
    let social = |d: &SocialDist, kind: PrefKind, rng: &mut _| {
        let cost = cost_of(d.cost, rng);
        let lambda1 = d.lambda1.sample(rng);
        let ratio = d.lambda2_ratio.sample(rng);
        let lambda2 = match kind {
            PrefKind::Competitive => ratio * lambda1,
            PrefKind::InequalityAverse => -ratio * lambda1,
        };
        let prefs = SocialPrefs { lambda1, lambda2, delta: d.delta.sample(rng), kind };
        (WorkerModel::Social { cost, prefs }, d.curiosity.sample(rng))
    };
    let (model, curiosity) = match tag {
        ModelTag::Standard => {
            (WorkerModel::Standard { cost: cost_of(cfg.standard.cost, rng) }, cfg.standard.curiosity.sample(rng))
        }
        ModelTag::Stress => {
            let d = &cfg.stress;
            let cost = cost_of(d.cost, rng);
            let stress = StressParams { theta: d.theta.sample(rng), delta: d.delta.sample(rng) };
            (WorkerModel::Stress { cost, stress }, d.curiosity.sample(rng))
        }
        ModelTag::Competitive => social(&cfg.competitive, PrefKind::Competitive, rng),
        ModelTag::InequalityAverse => social(&cfg.inequality_averse, PrefKind::InequalityAverse, rng),
        ModelTag::Learning => {
            let d = &cfg.learning;
            let cost = cost_of(d.cost, rng);
            let learning = LearningParams {
                alpha_s: d.alpha_s.sample(rng),
                alpha_lo: d.alpha_lo,
                alpha_hi: d.alpha_hi,
                search_cost: d.search_cost.sample(rng),
                grid_m: d.grid_m,
                kernel_sigma: d.kernel_sigma.sample(rng),
                loc_a: d.loc_a.sample(rng),
                loc_b: d.loc_b.sample(rng),
            };
            (WorkerModel::Learning { cost, learning }, d.curiosity.sample(rng))
        }
    };
    AgentSpec { worker_id, model, curiosity, effort_noise: cfg.effort_noise }
}

/// How a ChooseYourInfo worker's stated choice was settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BdmRecord {
    /// Scenario whose choice was implemented.
    pub scenario: Scenario,
    pub coin_direct: bool,
    pub draw_cents: u8,
    pub outcome: BdmOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub worker_id: String,
    /// Generating model; absent for ingested data.
    pub model: Option<ModelTag>,
    #[serde(skip)]
    pub agent: Option<AgentSpec>,
    pub e1: u32,
    pub e2: Option<u32>,
    pub arm: Option<TreatmentArm>,
    pub schedule: WtpSchedule,
    pub bin: PerformanceBin,
    pub worker_type: WorkerType,
    pub cluster: Option<usize>,
    pub bdm: Option<BdmRecord>,
}

fn noisy_rows(mean: f64, sigma: f64, rng: &mut impl Rng) -> Result<u32> {
    let noise = if sigma > 0.0 {
        Normal::new(0.0, sigma).map_err(|e| Error::InvalidParams(format!("effort noise: {e}")))?.sample(rng)
    } else {
        0.0
    };
    let rows = (mean + noise).round().max(0.0);
    if rows > f64::from(u32::MAX) {
        return Err(Error::Numeric(format!("effort {rows} does not fit in rows")));
    }
    Ok(rows as u32)
}

/// Samples agents, their Period-1 effort, truthful schedules, realized bins
/// and classified types.
pub fn simulate_population(cfg: &PopulationConfig) -> Result<Vec<WorkerRecord>> {
    cfg.validate()?;
    let width = cfg.n.to_string().len().max(4);
    (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, Stream::Population, i as u64);
            let tag = cfg.mixture.pick(rng.random());
            let agent = sample_agent(cfg, tag, format!("w{:0width$}", i + 1), &mut rng);
            let mut noise = substream(cfg.seed, Stream::Noise, 2 * i as u64);
            let e1 = noisy_rows(agent.baseline_effort(), agent.effort_noise, &mut noise)?;
            let schedule = build_wtp_schedule(&agent, &cfg.offsets)?;
            Ok(WorkerRecord {
                worker_id: agent.worker_id.clone(),
                model: Some(tag),
                e1,
                e2: None,
                arm: None,
                bin: realized_bin(e1, cfg.e_bar_true),
                worker_type: classify(&schedule, &cfg.classifier),
                schedule,
                cluster: None,
                bdm: None,
                agent: Some(agent),
            })
        })
        .collect()
}

/// Assigns arms and simulates Period 2. Workers who decline information in
/// ChooseYourInfo work as in Control.
pub fn run_experiment(records: &mut [WorkerRecord], cfg: &PopulationConfig) -> Result<()> {
    cfg.validate()?;
    let beliefs = cfg.expost_beliefs()?;
    records.par_iter_mut().enumerate().try_for_each(|(i, r)| {
        let agent = r
            .agent
            .as_ref()
            .ok_or_else(|| Error::InvalidParams(format!("worker {} has no agent specification", r.worker_id)))?;
        let arm = assign_arm(substream(cfg.seed, Stream::Assignment, i as u64).random())?;
        let learning_draw: f64 = substream(cfg.seed, Stream::Learning, i as u64).random();
        let exante = InfoCondition::ExAnte { e_bar: cfg.e_bar_true, draw: learning_draw };
        let expost = InfoCondition::ExPost { beliefs: &beliefs };
        let (info, bdm) = match arm {
            TreatmentArm::Control => (InfoCondition::None, None),
            TreatmentArm::ExAnteInfo => (exante, None),
            TreatmentArm::ExPostInfo => (expost, None),
            TreatmentArm::ChooseYourInfo => {
                let mut rng = substream(cfg.seed, Stream::Bdm, i as u64);
                let scenario = if rng.random::<bool>() { Scenario::ExAnte } else { Scenario::ExPost };
                let coin_direct: bool = rng.random();
                let draw = rng.random_range(0..=BONUS_CENTS);
                let entry = r.schedule.entry(scenario, r.bin);
                let outcome = bdm_resolve(entry.prefer_info, i32::from(entry.wtp_cents), coin_direct, draw)?;
                let info = match (outcome.receives_info, scenario) {
                    (false, _) => InfoCondition::None,
                    (true, Scenario::ExAnte) => exante,
                    (true, Scenario::ExPost) => expost,
                };
                let record = BdmRecord { scenario, coin_direct, draw_cents: draw as u8, outcome };
                (info, Some(record))
            }
        };
        let effort = agent.effort(info)? + cfg.period_drift;
        let mut noise = substream(cfg.seed, Stream::Noise, 2 * i as u64 + 1);
        r.e2 = Some(noisy_rows(effort, agent.effort_noise, &mut noise)?);
        r.arm = Some(arm);
        r.bdm = bdm;
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    All,
    ByType,
    ByModel,
    ByCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    /// Difference in mean `e2 - e1` against Control.
    pub mean: f64,
    /// Pooled two-sample standard error; absent with fewer than three workers.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub group: String,
    pub n_control: usize,
    pub n_exante: usize,
    pub n_expost: usize,
    /// Excluded from estimation but counted so sizes add up.
    pub n_choose: usize,
    /// Workers without Period-2 data.
    pub n_untreated: usize,
    pub control_mean: Option<f64>,
    pub exante: Option<Effect>,
    pub expost: Option<Effect>,
}

impl EffectRow {
    pub fn size(&self) -> usize {
        self.n_control + self.n_exante + self.n_expost + self.n_choose + self.n_untreated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectTable {
    pub grouping: Grouping,
    pub rows: Vec<EffectRow>,
}

impl EffectTable {
    pub fn row(&self, group: &str) -> Option<&EffectRow> {
        self.rows.iter().find(|r| r.group == group)
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss)
}

fn effect(treated: &[f64], control: &[f64]) -> Option<Effect> {
    if treated.is_empty() || control.is_empty() {
        return None;
    }
    let (mt, sst) = mean_var(treated);
    let (mc, ssc) = mean_var(control);
    let (nt, nc) = (treated.len() as f64, control.len() as f64);
    let df = nt + nc - 2.0;
    let se = (df > 0.0).then(|| ((sst + ssc) / df * (1.0 / nt + 1.0 / nc)).sqrt());
    Some(Effect { mean: mt - mc, se })
}

fn group_key(r: &WorkerRecord, grouping: Grouping) -> String {
    match grouping {
        Grouping::All => "all".into(),
        Grouping::ByType => format!("type{}", r.worker_type.number()),
        Grouping::ByModel => r.model.map_or("unknown", ModelTag::as_str).into(),
        Grouping::ByCluster => r.cluster.map_or_else(|| "none".into(), |c| format!("cluster{c}")),
    }
}

/// Mean change in effort of each information arm relative to Control, by
/// subgroup. ChooseYourInfo workers are not used.
pub fn estimate_effects(records: &[WorkerRecord], grouping: Grouping) -> EffectTable {
    let mut groups: BTreeMap<String, Vec<&WorkerRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(group_key(r, grouping)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|(group, members)| {
            let mut by_arm: [Vec<f64>; 4] = Default::default();
            let mut untreated = 0;
            for r in &members {
                match (r.arm, r.e2) {
                    (Some(arm), Some(e2)) => by_arm[arm as usize].push(f64::from(e2) - f64::from(r.e1)),
                    _ => untreated += 1,
                }
            }
            let [control, exante, expost, choose] = &by_arm;
            EffectRow {
                group,
                n_control: control.len(),
                n_exante: exante.len(),
                n_expost: expost.len(),
                n_choose: choose.len(),
                n_untreated: untreated,
                control_mean: (!control.is_empty()).then(|| mean_var(control).0),
                exante: effect(exante, control),
                expost: effect(expost, control),
            }
        })
        .collect();
    EffectTable { grouping, rows }
}
