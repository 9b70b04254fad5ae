//! Evaluation quantities computed from simulation results.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::batchorder::{order_tournament, BatchScheme};
use crate::depgraph::{build_tournament, condorcet_cycles, WeightedTournament};
use crate::error::{Error, Result};
use crate::model::TxId;
use crate::netsim::SimResult;

pub const METRICS_CSV_HEADER: &str =
    "trial,seed,n,r,r_internal,p,tau,scheme,cycles,txs_in_cycles,trapped,success_any,success_all,accuracy";

/// Fraction of pairs of `truth` that `final_order` keeps in the same relative
/// order. Ids of `final_order` outside `truth` are ignored.
pub fn pair_accuracy(final_order: &[TxId], truth: &[TxId]) -> Result<f64> {
    let pos: HashMap<&TxId, usize> = final_order.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let ranks = truth
        .iter()
        .map(|id| pos.get(id).copied().ok_or_else(|| Error::UnknownTransaction(id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let m = ranks.len();
    if m < 2 {
        return Ok(1.0);
    }
    let mut correct = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            if ranks[i] < ranks[j] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / (m * (m - 1) / 2) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CycleStats {
    pub count: usize,
    pub sizes: Vec<usize>,
    pub txs_in_cycles: usize,
}

pub fn cycle_stats(t: &WeightedTournament) -> CycleStats {
    let sizes: Vec<usize> = condorcet_cycles(t).iter().map(Vec::len).collect();
    CycleStats { count: sizes.len(), txs_in_cycles: sizes.iter().sum(), sizes }
}

fn cycle_members(t: &WeightedTournament) -> BTreeSet<TxId> {
    condorcet_cycles(t).into_iter().flatten().collect()
}

/// Honest ids inside a cycle of `with_attack` but in no cycle of `projected`.
pub fn trapped_between(with_attack: &WeightedTournament, projected: &WeightedTournament, result: &SimResult) -> Vec<TxId> {
    let natural = cycle_members(projected);
    cycle_members(with_attack)
        .into_iter()
        .filter(|id| result.registry.is_honest(id) && !natural.contains(id))
        .collect()
}

pub fn trapped_honest(result: &SimResult) -> Result<usize> {
    let with_attack = build_tournament(result.leader_orderings())?;
    let projected = build_tournament(&result.honest_projection())?;
    Ok(trapped_between(&with_attack, &projected, result).len())
}

fn success_from(trapped: &[TxId], result: &SimResult) -> (bool, bool) {
    let trapped: BTreeSet<&TxId> = trapped.iter().collect();
    let all = result.pause_window_honest().iter().all(|id| trapped.contains(id));
    (!trapped.is_empty(), all)
}

/// `(any, all)`: at least one honest transaction trapped, and every honest
/// transaction submitted inside the pause window trapped.
pub fn success(result: &SimResult) -> Result<(bool, bool)> {
    let with_attack = build_tournament(result.leader_orderings())?;
    let projected = build_tournament(&result.honest_projection())?;
    Ok(success_from(&trapped_between(&with_attack, &projected, result), result))
}

/// Metrics of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub cycles: CycleStats,
    /// Present only for runs with an attack.
    pub trapped_honest: Option<usize>,
    pub success: Option<(bool, bool)>,
    /// Pair accuracy per scheme over the honest transactions that sit in a
    /// cycle; `None` when fewer than two do.
    pub accuracy: Vec<(BatchScheme, Option<f64>)>,
}

pub fn evaluate(result: &SimResult, schemes: &[BatchScheme]) -> Result<TrialMetrics> {
    let t = build_tournament(result.leader_orderings())?;
    let cycles = cycle_stats(&t);
    let (trapped_honest, success) = if result.plan.is_some() {
        let projected = build_tournament(&result.honest_projection())?;
        let trapped = trapped_between(&t, &projected, result);
        (Some(trapped.len()), Some(success_from(&trapped, result)))
    } else {
        (None, None)
    };
    let in_cycles = cycle_members(&t);
    let truth: Vec<TxId> = result.ground_truth.iter().filter(|id| in_cycles.contains(*id)).cloned().collect();
    let mut accuracy = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let value = if truth.len() < 2 {
            None
        } else {
            let order = order_tournament(&t, scheme, Some(&result.registry))?;
            Some(pair_accuracy(&order, &truth)?)
        };
        accuracy.push((scheme.clone(), value));
    }
    Ok(TrialMetrics { cycles, trapped_honest, success, accuracy })
}

/// One CSV row. `scheme` names the batch scheme, or the experiment series
/// for presets that compare configurations rather than schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub r: f64,
    pub r_internal: f64,
    pub p: f64,
    pub tau: Option<f64>,
    pub scheme: String,
    pub cycles: usize,
    pub txs_in_cycles: usize,
    pub trapped: Option<usize>,
    pub success_any: Option<bool>,
    pub success_all: Option<bool>,
    pub accuracy: Option<f64>,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    /// Rows for one trial: one per scheme, or a single row labelled
    /// `label` when no scheme was evaluated.
    pub fn from_trial(trial: usize, result: &SimResult, metrics: &TrialMetrics, label: Option<&str>) -> Vec<MetricsRow> {
        let cfg = &result.config;
        let base = MetricsRow {
            trial,
            seed: cfg.seed,
            n: cfg.n,
            r: cfg.r,
            r_internal: cfg.r_internal,
            p: cfg.reorder_p,
            tau: cfg.attack.as_ref().map(|a| a.pause),
            scheme: label.unwrap_or("-").to_string(),
            cycles: metrics.cycles.count,
            txs_in_cycles: metrics.cycles.txs_in_cycles,
            trapped: metrics.trapped_honest,
            success_any: metrics.success.map(|s| s.0),
            success_all: metrics.success.map(|s| s.1),
            accuracy: None,
        };
        if metrics.accuracy.is_empty() || label.is_some() {
            let accuracy = metrics.accuracy.first().and_then(|a| a.1);
            return vec![MetricsRow { accuracy, ..base }];
        }
        metrics
            .accuracy
            .iter()
            .map(|(scheme, acc)| MetricsRow { scheme: scheme.to_string(), accuracy: *acc, ..base.clone() })
            .collect()
    }

    pub fn to_record(&self) -> String {
        let flag = |b: Option<bool>| opt(b.map(u8::from));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.seed,
            self.n,
            self.r,
            self.r_internal,
            self.p,
            opt(self.tau),
            self.scheme,
            self.cycles,
            self.txs_in_cycles,
            opt(self.trapped),
            flag(self.success_any),
            flag(self.success_all),
            opt(self.accuracy),
        )
    }
}

pub fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_record());
    }
    out
}
