//! Contingent WTP elicitation over nine relative-performance bins, the BDM
//! price rule, and treatment assignment.

use serde::{Deserialize, Serialize};

use crate::agent::AgentSpec;
use crate::error::{Error, Result};
use crate::model::{BeliefPmf, Scenario};

/// Bonus at stake in the elicitation, in cents.
pub const BONUS_CENTS: i32 = 50;

/// Own Period-1 performance relative to the peer average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerformanceBin {
    Below20Plus,
    Below11to20,
    Below6to10,
    Below2to5,
    Within1,
    Above2to5,
    Above6to10,
    Above11to20,
    Above20Plus,
}

impl PerformanceBin {
    pub const ALL: [PerformanceBin; 9] = [
        PerformanceBin::Below20Plus,
        PerformanceBin::Below11to20,
        PerformanceBin::Below6to10,
        PerformanceBin::Below2to5,
        PerformanceBin::Within1,
        PerformanceBin::Above2to5,
        PerformanceBin::Above6to10,
        PerformanceBin::Above11to20,
        PerformanceBin::Above20Plus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 1-based number used in files.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn mirror(self) -> Self {
        Self::ALL[8 - self.index()]
    }
}

/// Representative row offset of each bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct BinOffsets([f64; 9]);

impl Default for BinOffsets {
    fn default() -> Self {
        Self([-25.0, -15.5, -8.0, -3.5, 0.0, 3.5, 8.0, 15.5, 25.0])
    }
}

impl BinOffsets {
    /// Offsets must be finite, strictly increasing and antisymmetric.
    pub fn new(offsets: [f64; 9]) -> Result<Self> {
        if offsets.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("bin offsets must be finite".into()));
        }
        if offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("bin offsets must be strictly increasing".into()));
        }
        if (0..9).any(|i| offsets[i] != -offsets[8 - i]) {
            return Err(Error::InvalidParams("bin offsets must be antisymmetric".into()));
        }
        Ok(Self(offsets))
    }

    pub fn get(&self, bin: PerformanceBin) -> f64 {
        self.0[bin.index()]
    }
}

impl TryFrom<[f64; 9]> for BinOffsets {
    type Error = Error;

    fn try_from(v: [f64; 9]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BinOffsets> for [f64; 9] {
    fn from(b: BinOffsets) -> Self {
        b.0
    }
}

/// Bin of the rounded difference between own effort and the peer average.
/// A difference of exactly 20 falls in the 11 to 20 bin.
pub fn realized_bin(e1: u32, e_bar_true: f64) -> PerformanceBin {
    let d = i64::from(e1) - e_bar_true.round() as i64;
    let side = match d.unsigned_abs() {
        0..=1 => return PerformanceBin::Within1,
        2..=5 => 3,
        6..=10 => 2,
        11..=20 => 1,
        _ => 0,
    };
    if d < 0 {
        PerformanceBin::ALL[side]
    } else {
        PerformanceBin::ALL[8 - side]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WtpEntry {
    pub prefer_info: bool,
    pub wtp_cents: u8,
}

impl WtpEntry {
    pub fn new(prefer_info: bool, wtp_cents: u8) -> Result<Self> {
        if i32::from(wtp_cents) > BONUS_CENTS {
            return Err(Error::OutOfRange { what: "wtp_cents", value: wtp_cents.to_string() });
        }
        Ok(Self { prefer_info, wtp_cents })
    }

    /// Splits a signed amount; zero is recorded as preferring information.
    pub fn from_signed(signed: i32) -> Result<Self> {
        if signed.abs() > BONUS_CENTS {
            return Err(Error::OutOfRange { what: "signed wtp", value: signed.to_string() });
        }
        Ok(Self { prefer_info: signed >= 0, wtp_cents: signed.unsigned_abs() as u8 })
    }

    pub fn signed(self) -> i32 {
        let c = i32::from(self.wtp_cents);
        if self.prefer_info {
            c
        } else {
            -c
        }
    }
}

/// One entry per scenario and bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WtpSchedule {
    entries: [[WtpEntry; 9]; 2],
}

impl WtpSchedule {
    pub fn new(entries: [[WtpEntry; 9]; 2]) -> Result<Self> {
        for e in entries.iter().flatten() {
            WtpEntry::new(e.prefer_info, e.wtp_cents)?;
        }
        Ok(Self { entries })
    }

    pub fn from_signed(signed: [[i32; 9]; 2]) -> Result<Self> {
        let mut entries = [[WtpEntry::default(); 9]; 2];
        for (row, src) in entries.iter_mut().zip(signed) {
            for (e, s) in row.iter_mut().zip(src) {
                *e = WtpEntry::from_signed(s)?;
            }
        }
        Ok(Self { entries })
    }

    pub fn entry(&self, scenario: Scenario, bin: PerformanceBin) -> WtpEntry {
        self.entries[scenario.index()][bin.index()]
    }

    pub fn signed(&self, scenario: Scenario, bin: PerformanceBin) -> i32 {
        self.entry(scenario, bin).signed()
    }

    /// Signed values for one scenario in bin order.
    pub fn profile(&self, scenario: Scenario) -> [i32; 9] {
        PerformanceBin::ALL.map(|b| self.signed(scenario, b))
    }
}

impl Default for WtpEntry {
    fn default() -> Self {
        Self { prefer_info: true, wtp_cents: 0 }
    }
}

/// Converts a valuation in cents to a signed integer amount: truncated
/// toward zero and clamped to the bonus.
pub fn to_signed_cents(value: f64) -> i32 {
    if value.is_nan() {
        return 0;
    }
    value.trunc().clamp(-f64::from(BONUS_CENTS), f64::from(BONUS_CENTS)) as i32
}

/// The agent's truthful schedule. In each bin the agent holds a point-mass
/// belief at the peer average implied by its own baseline effort and the
/// bin offset, floored at zero.
pub fn build_wtp_schedule(agent: &AgentSpec, offsets: &BinOffsets) -> Result<WtpSchedule> {
    agent.validate()?;
    let base = agent.baseline_effort();
    let mut signed = [[0i32; 9]; 2];
    for bin in PerformanceBin::ALL {
        let implied = (base - offsets.get(bin)).max(0.0);
        let belief = BeliefPmf::point_mass(implied)?;
        for scenario in Scenario::ALL {
            let wtp = agent.wtp(&belief, scenario)?;
            signed[scenario.index()][bin.index()] = to_signed_cents(wtp + agent.curiosity);
        }
    }
    WtpSchedule::from_signed(signed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BdmOutcome {
    pub implemented: bool,
    pub payment_cents: u8,
    pub final_bonus_cents: u8,
    pub receives_info: bool,
}

/// Resolves a stated choice. With `coin_direct` the choice is enacted for
/// free; otherwise it is enacted at price `draw_cents` when that does not
/// exceed the stated amount, and reversed at no cost when it does.
pub fn bdm_resolve(prefer_info: bool, wtp_cents: i32, coin_direct: bool, draw_cents: i32) -> Result<BdmOutcome> {
    for (what, v) in [("wtp_cents", wtp_cents), ("draw_cents", draw_cents)] {
        if !(0..=BONUS_CENTS).contains(&v) {
            return Err(Error::OutOfRange { what, value: v.to_string() });
        }
    }
    let (implemented, payment) = if coin_direct {
        (true, 0)
    } else if draw_cents <= wtp_cents {
        (true, draw_cents)
    } else {
        (false, 0)
    };
    Ok(BdmOutcome {
        implemented,
        payment_cents: payment as u8,
        final_bonus_cents: (BONUS_CENTS - payment) as u8,
        receives_info: if implemented { prefer_info } else { !prefer_info },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentArm {
    Control,
    ExAnteInfo,
    ExPostInfo,
    ChooseYourInfo,
}

impl TreatmentArm {
    pub const ALL: [TreatmentArm; 4] =
        [TreatmentArm::Control, TreatmentArm::ExAnteInfo, TreatmentArm::ExPostInfo, TreatmentArm::ChooseYourInfo];

    pub fn as_str(self) -> &'static str {
        match self {
            TreatmentArm::Control => "control",
            TreatmentArm::ExAnteInfo => "exante",
            TreatmentArm::ExPostInfo => "expost",
            TreatmentArm::ChooseYourInfo => "choose",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

/// Maps a uniform draw to an arm with probabilities 0.3, 0.3, 0.3, 0.1.
pub fn assign_arm(u: f64) -> Result<TreatmentArm> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::OutOfRange { what: "arm draw", value: u.to_string() });
    }
    Ok(if u < 0.3 {
        TreatmentArm::Control
    } else if u < 0.6 {
        TreatmentArm::ExAnteInfo
    } else if u < 0.9 {
        TreatmentArm::ExPostInfo
    } else {
        TreatmentArm::ChooseYourInfo
    })
}
