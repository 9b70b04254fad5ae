//! Condorcet attack plans and the ordering-reversal adversary.
//!
//! A plan assigns each part of a node partition two ordered sequences of
//! adversarial transactions: one sent before the pause, one after it.
//! Honest traffic arriving during the pause is what ends up trapped.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LocalOrdering, NodeId, Partition};

/// One adversarial transaction of a plan. `clone == 0` marks an uncloned
/// transaction; clones are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttackTx {
    pub group: String,
    pub clone: u32,
}

impl AttackTx {
    pub fn new(group: impl Into<String>) -> Self {
        AttackTx { group: group.into(), clone: 0 }
    }

    pub fn cloned(group: impl Into<String>, clone: u32) -> Self {
        AttackTx { group: group.into(), clone }
    }
}

impl fmt::Display for AttackTx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.clone {
            0 => f.write_str(&self.group),
            c => write!(f, "{}{}", self.group, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    TwoTx,
    FourTx,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::TwoTx => "two_tx",
            AttackKind::FourTx => "four_tx",
        }
    }

    pub fn plan(self, n: usize, pause: f64) -> Result<AttackPlan> {
        match self {
            AttackKind::TwoTx => two_tx_plan(n, pause),
            AttackKind::FourTx => four_tx_plan(n, pause),
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_tx" => Ok(AttackKind::TwoTx),
            "four_tx" => Ok(AttackKind::FourTx),
            other => Err(Error::InvalidConfig(format!("unknown attack kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    pub partition: Partition,
    /// Per part, sent in order at the start of the attack.
    pub init: Vec<Vec<AttackTx>>,
    /// Per part, sent in order once the pause has elapsed.
    pub finalize: Vec<Vec<AttackTx>>,
    /// Pause length in mean generation intervals.
    pub pause: f64,
    pub clones: u32,
}

impl AttackPlan {
    pub fn validate(&self) -> Result<()> {
        let k = self.partition.len();
        if self.init.len() != k || self.finalize.len() != k {
            return Err(Error::InvalidPlan(format!(
                "{k} parts but {} init and {} finalize sequences",
                self.init.len(),
                self.finalize.len()
            )));
        }
        if !(self.pause.is_finite() && self.pause > 0.0) {
            return Err(Error::InvalidPlan(format!("pause must be positive, got {}", self.pause)));
        }
        if self.clones == 0 {
            return Err(Error::InvalidPlan("clone count must be at least 1".into()));
        }
        for (part, (init, fin)) in self.init.iter().zip(&self.finalize).enumerate() {
            let mut seen = BTreeSet::new();
            for tx in init.iter().chain(fin) {
                if !seen.insert(tx) {
                    return Err(Error::InvalidPlan(format!("`{tx}` sent twice to part {part}")));
                }
            }
        }
        Ok(())
    }

    /// Every adversarial transaction the plan sends, sorted.
    pub fn transactions(&self) -> Vec<AttackTx> {
        let set: BTreeSet<&AttackTx> = self.init.iter().chain(&self.finalize).flatten().collect();
        set.into_iter().cloned().collect()
    }

    /// Time from the start of the attack to the last initialization send.
    pub fn init_span(&self, gap: f64) -> f64 {
        let longest = self.init.iter().map(Vec::len).max().unwrap_or(0);
        gap * longest.saturating_sub(1) as f64
    }
}

fn seq(names: &[&str]) -> Vec<AttackTx> {
    names.iter().map(|&s| AttackTx::new(s)).collect()
}

/// Two transactions `A`, `B` over three parts:
/// `P1: A B | -`, `P2: B | A`, `P3: - | A B`.
pub fn two_tx_plan(n: usize, pause: f64) -> Result<AttackPlan> {
    if n < 3 {
        return Err(Error::CommitteeTooSmall { needed: 3, got: n });
    }
    let plan = AttackPlan {
        partition: Partition::near_equal(n, 3)?,
        init: vec![seq(&["A", "B"]), seq(&["B"]), vec![]],
        finalize: vec![vec![], seq(&["A"]), seq(&["A", "B"])],
        pause,
        clones: 1,
    };
    plan.validate()?;
    Ok(plan)
}

/// Four transactions over four parts, each part seeing a rotation of
/// `A B | C D`.
pub fn four_tx_plan(n: usize, pause: f64) -> Result<AttackPlan> {
    if n < 4 {
        return Err(Error::CommitteeTooSmall { needed: 4, got: n });
    }
    let plan = AttackPlan {
        partition: Partition::near_equal(n, 4)?,
        init: vec![seq(&["A", "B"]), seq(&["B", "C"]), seq(&["C", "D"]), seq(&["D", "A"])],
        finalize: vec![seq(&["C", "D"]), seq(&["D", "A"]), seq(&["A", "B"]), seq(&["B", "C"])],
        pause,
        clones: 1,
    };
    plan.validate()?;
    Ok(plan)
}

/// Replaces every transaction by `k` consecutive clones of itself.
pub fn clone_plan(plan: &AttackPlan, k: u32) -> Result<AttackPlan> {
    if k == 0 {
        return Err(Error::InvalidPlan("clone count must be at least 1".into()));
    }
    if k == 1 {
        return Ok(plan.clone());
    }
    let expand = |seqs: &[Vec<AttackTx>]| -> Vec<Vec<AttackTx>> {
        seqs.iter()
            .map(|s| {
                s.iter()
                    .flat_map(|tx| {
                        let base = tx.clone.max(1) - 1;
                        (1..=k).map(move |i| AttackTx::cloned(tx.group.clone(), base * k + i))
                    })
                    .collect()
            })
            .collect()
    };
    Ok(AttackPlan {
        partition: plan.partition.clone(),
        init: expand(&plan.init),
        finalize: expand(&plan.finalize),
        pause: plan.pause,
        clones: plan.clones * k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Init,
    Finalize,
}

/// One adversarial send to every node of a part.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub time: f64,
    pub part: usize,
    pub tx: AttackTx,
    pub phase: Phase,
    /// Position within its burst.
    pub position: usize,
}

/// Expands a plan into timed sends. Each part's initialization burst starts
/// at `start` and its finalization burst at `start + pause`; consecutive
/// sends within a burst are `gap` apart.
pub fn schedule(plan: &AttackPlan, start: f64, gap: f64) -> Result<Vec<Transmission>> {
    plan.validate()?;
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::InvalidPlan(format!("gap must be positive, got {gap}")));
    }
    if !(start.is_finite() && start >= 0.0) {
        return Err(Error::InvalidPlan(format!("start must be non-negative, got {start}")));
    }
    let mut out = Vec::new();
    for (phase, offset, seqs) in [(Phase::Init, 0.0, &plan.init), (Phase::Finalize, plan.pause, &plan.finalize)] {
        for (part, burst) in seqs.iter().enumerate() {
            for (position, tx) in burst.iter().enumerate() {
                out.push(Transmission {
                    time: start + offset + gap * position as f64,
                    part,
                    tx: tx.clone(),
                    phase,
                    position,
                });
            }
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.part.cmp(&b.part)));
    Ok(out)
}

/// Non-injective adversary: the listed nodes report their orderings
/// back to front.
pub fn reverse_orderings(orderings: &[LocalOrdering], adversarial: &BTreeSet<NodeId>) -> Vec<LocalOrdering> {
    orderings
        .iter()
        .map(|o| {
            let mut o = o.clone();
            if adversarial.contains(&o.node) {
                o.sequence.reverse();
            }
            o
        })
        .collect()
}

/// Largest coalition tolerated in the non-injective experiment: a quarter
/// of the committee minus one.
pub fn non_injective_fault_count(n: usize) -> usize {
    (n / 4).saturating_sub(1)
}

/// The first `f` nodes, used as the reversing coalition.
pub fn reversing_nodes(n: usize) -> BTreeSet<NodeId> {
    (0..non_injective_fault_count(n)).map(NodeId).collect()
}
