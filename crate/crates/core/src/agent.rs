use serde::{Deserialize, Serialize};

use crate::classifier::WorkerType;
use crate::error::{Error, Result};
use crate::model::{
    effort_no_info, learning_effort, learning_wtp, social_effort, social_wtp, stress_effort, stress_wtp, BeliefPmf,
    EffortCost, LearningParams, LearningScenario, PrefKind, Scenario, SocialPrefs, SocialScenario, StressParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum WorkerModel {
    Standard { cost: EffortCost },
    Social { cost: EffortCost, prefs: SocialPrefs },
    Stress { cost: EffortCost, stress: StressParams },
    Learning { cost: EffortCost, learning: LearningParams },
}

/// Coarse model label used in output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Standard,
    Competitive,
    InequalityAverse,
    Stress,
    Learning,
}

impl ModelTag {
    pub const ALL: [ModelTag; 5] =
        [ModelTag::Standard, ModelTag::Competitive, ModelTag::InequalityAverse, ModelTag::Stress, ModelTag::Learning];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::Standard => "standard",
            ModelTag::Competitive => "competitive",
            ModelTag::InequalityAverse => "inequality_averse",
            ModelTag::Stress => "stress",
            ModelTag::Learning => "learning",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Type a noiseless agent of this model is classified as. Inequality
    /// aversion produces non-positive profiles and pools with stress.
    pub fn expected_type(self) -> WorkerType {
        match self {
            ModelTag::Standard => WorkerType::Indifferent,
            ModelTag::Stress | ModelTag::InequalityAverse => WorkerType::StressAvoidant,
            ModelTag::Competitive => WorkerType::Competitive,
            ModelTag::Learning => WorkerType::LearningResidual,
        }
    }
}

/// Period-2 information condition faced by an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfoCondition<'a> {
    None,
    /// Peer average observed before working. `draw` resolves strategy search.
    ExAnte {
        e_bar: f64,
        draw: f64,
    },
    /// Peer average revealed afterwards; effort is chosen under `beliefs`.
    ExPost {
        beliefs: &'a BeliefPmf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub worker_id: String,
    pub model: WorkerModel,
    /// Cents added to every signed WTP.
    #[serde(default)]
    pub curiosity: f64,
    /// Standard deviation of additive effort noise, in rows.
    #[serde(default)]
    pub effort_noise: f64,
}

impl AgentSpec {
    pub fn new(worker_id: impl Into<String>, model: WorkerModel) -> Self {
        Self { worker_id: worker_id.into(), model, curiosity: 0.0, effort_noise: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.cost().validate()?;
        match &self.model {
            WorkerModel::Standard { .. } => {}
            WorkerModel::Social { prefs, .. } => prefs.validate()?,
            WorkerModel::Stress { stress, .. } => stress.validate()?,
            WorkerModel::Learning { learning, .. } => learning.validate()?,
        }
        if !(self.curiosity.is_finite() && self.curiosity >= 0.0) {
            return Err(Error::InvalidParams(format!("curiosity must be >= 0, got {}", self.curiosity)));
        }
        if !(self.effort_noise.is_finite() && self.effort_noise >= 0.0) {
            return Err(Error::InvalidParams(format!("effort noise must be >= 0, got {}", self.effort_noise)));
        }
        Ok(())
    }

    pub fn cost(&self) -> EffortCost {
        match self.model {
            WorkerModel::Standard { cost }
            | WorkerModel::Social { cost, .. }
            | WorkerModel::Stress { cost, .. }
            | WorkerModel::Learning { cost, .. } => cost,
        }
    }

    pub fn tag(&self) -> ModelTag {
        match &self.model {
            WorkerModel::Standard { .. } => ModelTag::Standard,
            WorkerModel::Social { prefs, .. } => match prefs.kind {
                PrefKind::Competitive => ModelTag::Competitive,
                PrefKind::InequalityAverse => ModelTag::InequalityAverse,
            },
            WorkerModel::Stress { .. } => ModelTag::Stress,
            WorkerModel::Learning { .. } => ModelTag::Learning,
        }
    }

    /// Effort without peer information.
    pub fn baseline_effort(&self) -> f64 {
        match &self.model {
            WorkerModel::Learning { cost, learning } => learning.baseline_effort(cost),
            _ => effort_no_info(&self.cost()),
        }
    }

    /// Model WTP for information in utility units (cents), before curiosity.
    /// For the learning model the beliefs are over peer output.
    pub fn wtp(&self, beliefs: &BeliefPmf, scenario: Scenario) -> Result<f64> {
        match &self.model {
            WorkerModel::Standard { .. } => Ok(0.0),
            WorkerModel::Social { cost, prefs } => social_wtp(cost, prefs, beliefs, scenario),
            WorkerModel::Stress { cost, stress } => Ok(stress_wtp(cost, stress, beliefs, scenario)),
            WorkerModel::Learning { cost, learning } => Ok(learning_wtp(cost, learning, beliefs, scenario)),
        }
    }

    /// Optimal (continuous) effort under `info`.
    pub fn effort(&self, info: InfoCondition<'_>) -> Result<f64> {
        match (&self.model, info) {
            (_, InfoCondition::None) => Ok(self.baseline_effort()),
            (WorkerModel::Standard { cost }, _) => Ok(effort_no_info(cost)),
            (WorkerModel::Stress { cost, stress }, _) => Ok(stress_effort(cost, stress)),
            (WorkerModel::Social { cost, prefs }, InfoCondition::ExAnte { e_bar, .. }) => {
                social_effort(cost, prefs, SocialScenario::ExAnte(e_bar))
            }
            (WorkerModel::Social { cost, prefs }, InfoCondition::ExPost { beliefs }) => {
                social_effort(cost, prefs, SocialScenario::ExPost(beliefs))
            }
            (WorkerModel::Learning { cost, learning }, InfoCondition::ExAnte { e_bar, draw }) => {
                learning_effort(cost, learning, LearningScenario::ExAnte { y_bar: e_bar, draw }).map(|r| r.0)
            }
            (WorkerModel::Learning { cost, learning }, InfoCondition::ExPost { .. }) => {
                learning_effort(cost, learning, LearningScenario::ExPost).map(|r| r.0)
            }
        }
    }
}
