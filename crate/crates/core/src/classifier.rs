//! Rule-based worker types from ex ante WTP at three probe bins.

use serde::{Deserialize, Serialize};

use crate::elicitation::{PerformanceBin, WtpSchedule};
use crate::error::{Error, Result};
use crate::model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorkerType {
    Indifferent,
    StressAvoidant,
    Competitive,
    LearningResidual,
}

impl WorkerType {
    pub const ALL: [WorkerType; 4] =
        [WorkerType::Indifferent, WorkerType::StressAvoidant, WorkerType::Competitive, WorkerType::LearningResidual];

    /// 1-based number used in files.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub probes: [PerformanceBin; 3],
    /// Amounts with `|x| <= epsilon` cents count as zero.
    pub epsilon: u8,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { probes: [PerformanceBin::Below20Plus, PerformanceBin::Within1, PerformanceBin::Above20Plus], epsilon: 0 }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.probes.windows(2).all(|w| w[0] < w[1]) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("probe bins must be strictly increasing, got {:?}", self.probes)))
        }
    }
}

/// Types a profile `(low, mid, high)`. Rules apply in order: all zero;
/// all non-positive with some negative; weakly increasing with a strict
/// step and a positive value; anything else.
pub fn classify_triple(triple: [i32; 3], epsilon: u8) -> WorkerType {
    let eps = i32::from(epsilon);
    let [a, b, c] = triple.map(|x| if x.abs() <= eps { 0 } else { x });
    let (lo, hi) = (a.min(b).min(c), a.max(b).max(c));
    if lo == 0 && hi == 0 {
        WorkerType::Indifferent
    } else if hi <= 0 {
        WorkerType::StressAvoidant
    } else if a <= b && b <= c && a < c {
        WorkerType::Competitive
    } else {
        WorkerType::LearningResidual
    }
}

pub fn classify(schedule: &WtpSchedule, cfg: &ClassifierConfig) -> WorkerType {
    let triple = cfg.probes.map(|bin| schedule.signed(Scenario::ExAnte, bin));
    classify_triple(triple, cfg.epsilon)
}

/// Share of each type, indexed by `WorkerType::index`.
pub fn type_shares(types: &[WorkerType]) -> Result<[f64; 4]> {
    if types.is_empty() {
        return Err(Error::Empty("worker types"));
    }
    let mut counts = [0usize; 4];
    for t in types {
        counts[t.index()] += 1;
    }
    let n = types.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}
