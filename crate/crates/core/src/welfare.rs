//! Worker payoffs from information policies, valued with each worker's
//! elicited WTP at their realized bin. Receiving no information is worth 0.

use serde::{Deserialize, Serialize};

use crate::classifier::WorkerType;
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::simulator::WorkerRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    UniformExAnte,
    UniformExPost,
    /// Timing per type, indexed by `WorkerType::index`; `None` withholds.
    Targeted([Option<Scenario>; 4]),
}

impl Policy {
    /// Ex post for stress-avoidant workers, ex ante for everyone else.
    pub fn targeted_default() -> Self {
        Policy::Targeted([
            Some(Scenario::ExAnte),
            Some(Scenario::ExPost),
            Some(Scenario::ExAnte),
            Some(Scenario::ExAnte),
        ])
    }

    /// Each type gets whichever of ex ante, ex post or nothing has the
    /// highest mean payoff for that type in `records` (earlier option on ties).
    pub fn per_type_optimal(records: &[WorkerRecord]) -> Self {
        let mut map = [Some(Scenario::ExAnte); 4];
        for t in WorkerType::ALL {
            let members: Vec<&WorkerRecord> = records.iter().filter(|r| r.worker_type == t).collect();
            if members.is_empty() {
                continue;
            }
            let total = |a: Option<Scenario>| members.iter().map(|r| realized_payoff(r, a)).sum::<f64>();
            let mut best = (Some(Scenario::ExAnte), total(Some(Scenario::ExAnte)));
            for option in [Some(Scenario::ExPost), None] {
                let v = total(option);
                if v > best.1 {
                    best = (option, v);
                }
            }
            map[t.index()] = best.0;
        }
        Policy::Targeted(map)
    }

    pub fn assignment(&self, t: WorkerType) -> Option<Scenario> {
        match self {
            Policy::UniformExAnte => Some(Scenario::ExAnte),
            Policy::UniformExPost => Some(Scenario::ExPost),
            Policy::Targeted(map) => map[t.index()],
        }
    }

    pub fn name(&self) -> String {
        match self {
            Policy::UniformExAnte => "uniform_exante".into(),
            Policy::UniformExPost => "uniform_expost".into(),
            Policy::Targeted(map) => {
                let parts: Vec<String> = WorkerType::ALL
                    .iter()
                    .map(|t| format!("{}:{}", t.number(), map[t.index()].map_or("none", Scenario::as_str)))
                    .collect();
                format!("targeted[{}]", parts.join(","))
            }
        }
    }
}

/// Signed WTP at the worker's realized bin for the assigned scenario.
pub fn realized_payoff(record: &WorkerRecord, assigned: Option<Scenario>) -> f64 {
    assigned.map_or(0.0, |s| f64::from(record.schedule.signed(s, record.bin)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub policy: String,
    pub mean: f64,
    /// Mean payoff per type, absent for types with no workers.
    pub per_type: [Option<f64>; 4],
    pub n_per_type: [usize; 4],
}

pub fn evaluate_policy(records: &[WorkerRecord], policy: &Policy) -> Result<PolicyOutcome> {
    if records.is_empty() {
        return Err(Error::Empty("worker records"));
    }
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for r in records {
        let t = r.worker_type.index();
        sums[t] += realized_payoff(r, policy.assignment(r.worker_type));
        counts[t] += 1;
    }
    let n = records.len() as f64;
    Ok(PolicyOutcome {
        policy: policy.name(),
        mean: sums.iter().sum::<f64>() / n,
        per_type: std::array::from_fn(|t| (counts[t] > 0).then(|| sums[t] / counts[t] as f64)),
        n_per_type: counts,
    })
}

/// Percent change in mean payoff relative to `baseline`.
pub fn welfare_gain(target: &PolicyOutcome, baseline: &PolicyOutcome) -> Result<f64> {
    if !(baseline.mean > 0.0) {
        return Err(Error::UndefinedGain(baseline.mean));
    }
    Ok(100.0 * (target.mean - baseline.mean) / baseline.mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    #[serde(flatten)]
    pub outcome: PolicyOutcome,
    pub gain_vs_uniform_exante: Option<f64>,
    pub gain_vs_uniform_expost: Option<f64>,
}

/// Uniform ex ante, uniform ex post, the default targeted rule and the
/// per-type optimum, each with its gain over both uniform policies.
pub fn compare_policies(records: &[WorkerRecord]) -> Result<Vec<PolicyRow>> {
    let policies =
        [Policy::UniformExAnte, Policy::UniformExPost, Policy::targeted_default(), Policy::per_type_optimal(records)];
    let outcomes = policies.iter().map(|p| evaluate_policy(records, p)).collect::<Result<Vec<_>>>()?;
    let (ante, post) = (outcomes[0].clone(), outcomes[1].clone());
    Ok(outcomes
        .into_iter()
        .map(|o| PolicyRow {
            gain_vs_uniform_exante: welfare_gain(&o, &ante).ok(),
            gain_vs_uniform_expost: welfare_gain(&o, &post).ok(),
            outcome: o,
        })
        .collect())
}
