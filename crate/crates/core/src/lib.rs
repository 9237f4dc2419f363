//! Worker models of preferences over peer information, contingent WTP
//! elicitation, type classification, embedding clustering, experiment
//! simulation and welfare accounting.

pub mod agent;
pub mod classifier;
pub mod clustering;
pub mod elicitation;
pub mod error;
pub mod io;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod welfare;

pub use agent::{AgentSpec, InfoCondition, ModelTag, WorkerModel};
pub use classifier::{classify, classify_triple, type_shares, ClassifierConfig, WorkerType};
pub use clustering::{kmeans, select_k, silhouette, ClusterResult, EmbeddingMatrix, KSelection};
pub use elicitation::{
    assign_arm, bdm_resolve, build_wtp_schedule, realized_bin, BdmOutcome, BinOffsets, PerformanceBin, TreatmentArm,
    WtpEntry, WtpSchedule,
};
pub use error::{Error, ParseErrors, Result, RowError};
pub use model::{BeliefPmf, EffortCost, Scenario};
pub use simulator::{
    estimate_effects, run_experiment, simulate_population, EffectTable, Grouping, PopulationConfig, WorkerRecord,
};
pub use welfare::{compare_policies, evaluate_policy, realized_payoff, welfare_gain, Policy, PolicyOutcome};
