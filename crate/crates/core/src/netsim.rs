//! Seeded discrete-event simulation of transaction dissemination.
//!
//! An honest sending process emits transactions at exponentially spaced
//! instances (mean one) and every copy reaches every node after an
//! independent exponential delay of mean `r`. An optional attack injects
//! bursts per its plan; bursts are FIFO per node except that consecutive
//! burst members swap with probability `reorder_p`. With `broadcast` on,
//! every node that receives a transaction from a client forwards it once to
//! all peers over an internal network with exponential delay of mean
//! `r_internal`.
//!
//! All randomness comes from ChaCha8 streams keyed by `(seed, purpose)`, so
//! a run is a pure function of its configuration.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{clone_plan, schedule, AttackKind, AttackPlan, AttackTx};
use crate::error::{Error, Result};
use crate::model::{ground_truth_order, LocalOrdering, NodeId, Registry, Transaction, TxId};

/// Burst members delivered back to back are kept this far apart so FIFO
/// order survives the `(time, id)` tie-break.
const FIFO_EPSILON: f64 = 1e-9;

/// Conflict key carried by every adversarial transaction.
pub const ADVERSARY_KEY: &str = "adv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub pause: f64,
    pub clones: u32,
    /// Spacing between consecutive sends of one burst.
    pub gap: f64,
    /// Attack start time.
    pub start: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig { kind: AttackKind::TwoTx, pause: 10.0, clones: 1, gap: 0.01, start: 0.0 }
    }
}

impl AttackConfig {
    pub fn plan(&self, n: usize) -> Result<AttackPlan> {
        clone_plan(&self.kind.plan(n, self.pause)?, self.clones)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    /// External network ratio: mean client-to-node delay.
    pub r: f64,
    /// Internal network ratio: mean node-to-node delay.
    pub r_internal: f64,
    pub honest_count: usize,
    /// Submission time of the first honest transaction.
    pub honest_start: f64,
    pub reorder_p: f64,
    pub broadcast: bool,
    pub seed: u64,
    /// Honest transactions draw one conflict key from `k0..k{key_pool}`.
    pub key_pool: usize,
    /// How many orderings the leader aggregates (the first ones); all by default.
    pub orderings_used: Option<usize>,
    /// The first `reversing` nodes report their orderings reversed.
    pub reversing: usize,
    pub attack: Option<AttackConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 21,
            r: 0.1,
            r_internal: 0.1,
            honest_count: 100,
            honest_start: 0.0,
            reorder_p: 0.0,
            broadcast: false,
            seed: 0,
            key_pool: 1,
            orderings_used: None,
            reversing: 0,
            attack: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.n < 3 {
            return bad(format!("n must be at least 3, got {}", self.n));
        }
        if !positive(self.r) {
            return bad(format!("r must be positive and finite, got {}", self.r));
        }
        if self.broadcast && !positive(self.r_internal) {
            return bad(format!("r_internal must be positive and finite, got {}", self.r_internal));
        }
        if !(0.0..=0.5).contains(&self.reorder_p) {
            return bad(format!("reorder_p must lie in [0, 0.5], got {}", self.reorder_p));
        }
        if !(self.honest_start.is_finite() && self.honest_start >= 0.0) {
            return bad(format!("honest_start must be non-negative, got {}", self.honest_start));
        }
        if self.key_pool == 0 {
            return bad("key_pool must be at least 1".into());
        }
        if let Some(k) = self.orderings_used {
            if k == 0 || k > self.n {
                return bad(format!("orderings_used must lie in [1, {}], got {k}", self.n));
            }
        }
        if self.reversing >= self.n {
            return bad(format!("reversing must be below n = {}, got {}", self.n, self.reversing));
        }
        if let Some(a) = &self.attack {
            if !(a.start.is_finite() && a.start >= 0.0) {
                return bad(format!("attack start must be non-negative, got {}", a.start));
            }
            if !positive(a.gap) {
                return bad(format!("attack gap must be positive, got {}", a.gap));
            }
            a.plan(self.n).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Via {
    Direct,
    Gossip,
}

impl Via {
    pub fn as_str(self) -> &'static str {
        match self {
            Via::Direct => "direct",
            Via::Gossip => "gossip",
        }
    }
}

/// First receipt of a transaction at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub node: NodeId,
    pub tx: TxId,
    pub time: f64,
    pub via: Via,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config: SimConfig,
    pub registry: Registry,
    pub orderings: Vec<LocalOrdering>,
    /// Honest ids by submission time.
    pub ground_truth: Vec<TxId>,
    pub delivery_log: Vec<Delivery>,
    pub plan: Option<AttackPlan>,
    /// Open interval between the last initialization send and the first
    /// finalization send.
    pub pause_window: Option<(f64, f64)>,
}

impl SimResult {
    /// The orderings the leader aggregates.
    pub fn leader_orderings(&self) -> &[LocalOrdering] {
        let k = self.config.orderings_used.unwrap_or(self.orderings.len());
        &self.orderings[..k]
    }

    /// Leader orderings with every adversarial transaction removed.
    pub fn honest_projection(&self) -> Vec<LocalOrdering> {
        self.leader_orderings()
            .iter()
            .map(|o| o.project(|id| self.registry.is_honest(id)))
            .collect()
    }

    /// Honest transactions submitted strictly inside the pause window.
    pub fn pause_window_honest(&self) -> Vec<TxId> {
        let Some((lo, hi)) = self.pause_window else {
            return Vec::new();
        };
        self.ground_truth
            .iter()
            .filter(|id| {
                let t = self.registry.get(id).expect("ground truth ids are registered").submit_time;
                t > lo && t < hi
            })
            .cloned()
            .collect()
    }

    pub fn delivery_log_csv(&self) -> String {
        let mut out = String::from("node,tx,time,via\n");
        for d in &self.delivery_log {
            let _ = writeln!(out, "{},{},{},{}", d.node, d.tx, d.time, d.via.as_str());
        }
        out
    }

    pub fn orderings_csv(&self) -> String {
        let mut out = String::from("node,position,tx\n");
        for o in &self.orderings {
            for (i, id) in o.sequence.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", o.node, i, id);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Ids = 1,
    Generation = 2,
    External = 3,
    Reorder = 4,
    Internal = 5,
    Keys = 6,
}

fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Inverse-CDF exponential sample with the given mean.
fn exp_sample(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (1.0 - u).ln()
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    /// Rank of the transaction id, so ties resolve by id.
    tx: usize,
    node: usize,
    via: Via,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.tx.cmp(&other.tx))
            .then(self.node.cmp(&other.node))
            .then(self.via.cmp(&other.via))
    }
}

fn fresh_id(rng: &mut ChaCha8Rng, taken: &mut std::collections::HashSet<String>) -> TxId {
    loop {
        let id = format!("{:016x}", rng.random::<u64>());
        if taken.insert(id.clone()) {
            return TxId::new(id);
        }
    }
}

pub fn run(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let n = config.n;
    let mut ids_rng = stream(config.seed, Stream::Ids);
    let mut gen_rng = stream(config.seed, Stream::Generation);
    let mut keys_rng = stream(config.seed, Stream::Keys);
    let mut ext_rng = stream(config.seed, Stream::External);
    let mut reorder_rng = stream(config.seed, Stream::Reorder);
    let mut int_rng = stream(config.seed, Stream::Internal);
    let mut taken = std::collections::HashSet::new();

    let mut txs: Vec<Transaction> = Vec::new();
    let mut t = config.honest_start;
    for i in 0..config.honest_count {
        if i > 0 {
            t += exp_sample(&mut gen_rng, 1.0);
        }
        let key = format!("k{}", keys_rng.random_range(0..config.key_pool));
        txs.push(Transaction::honest(fresh_id(&mut ids_rng, &mut taken), t).with_keys([key]));
    }

    let mut plan = None;
    let mut sends = Vec::new();
    let mut pause_window = None;
    let mut attack_ids: BTreeMap<AttackTx, TxId> = BTreeMap::new();
    if let Some(attack) = &config.attack {
        let p = attack.plan(n)?;
        sends = schedule(&p, attack.start, attack.gap)?;
        pause_window = Some((attack.start + p.init_span(attack.gap), attack.start + p.pause));
        for atx in p.transactions() {
            let first = sends
                .iter()
                .filter(|s| s.tx == atx)
                .map(|s| s.time)
                .fold(f64::INFINITY, f64::min);
            let id = fresh_id(&mut ids_rng, &mut taken);
            txs.push(Transaction::adversarial(id.clone(), first, atx.group.clone()).with_keys([ADVERSARY_KEY]));
            attack_ids.insert(atx, id);
        }
        plan = Some(p);
    }

    let registry = Registry::from_transactions(txs.iter().cloned())?;
    // Rank of each id in lexicographic order, used for event tie-breaks.
    let rank: BTreeMap<&TxId, usize> = registry.iter().enumerate().map(|(i, t)| (&t.id, i)).collect();
    let by_rank: Vec<&TxId> = registry.iter().map(|t| &t.id).collect();
    let m = registry.len();

    let mut queue: BinaryHeap<Reverse<Event>> = BinaryHeap::with_capacity(m * n);
    for tx in txs.iter().filter(|t| t.is_honest()) {
        let r = rank[&tx.id];
        for node in 0..n {
            let time = tx.submit_time + exp_sample(&mut ext_rng, config.r);
            queue.push(Reverse(Event { time, tx: r, node, via: Via::Direct }));
        }
    }

    if let Some(p) = &plan {
        for node in 0..n {
            let part = p.partition.part_of(NodeId(node)).expect("partition covers every node");
            // Channel from the adversary to this node, in send order.
            let channel: Vec<_> = sends.iter().filter(|s| s.part == part).collect();
            let mut arrivals: Vec<f64> = Vec::with_capacity(channel.len());
            for s in &channel {
                let mut a = s.time + exp_sample(&mut ext_rng, config.r);
                if let Some(&prev) = arrivals.last() {
                    a = a.max(prev + FIFO_EPSILON);
                }
                arrivals.push(a);
            }
            let mut order: Vec<usize> = (0..channel.len()).collect();
            for i in 1..channel.len() {
                let same_burst = channel[i].phase == channel[i - 1].phase;
                if same_burst && config.reorder_p > 0.0 && reorder_rng.random_bool(config.reorder_p) {
                    order.swap(i - 1, i);
                }
            }
            for (slot, &which) in order.iter().enumerate() {
                let tx = rank[&attack_ids[&channel[which].tx]];
                queue.push(Reverse(Event { time: arrivals[slot], tx, node, via: Via::Direct }));
            }
        }
    }

    let mut received = vec![false; n * m];
    let mut sequences: Vec<Vec<TxId>> = vec![Vec::with_capacity(m); n];
    let mut delivery_log = Vec::with_capacity(n * m);
    while let Some(Reverse(ev)) = queue.pop() {
        let slot = &mut received[ev.node * m + ev.tx];
        if *slot {
            continue;
        }
        *slot = true;
        let id = by_rank[ev.tx];
        sequences[ev.node].push(id.clone());
        delivery_log.push(Delivery { node: NodeId(ev.node), tx: id.clone(), time: ev.time, via: ev.via });
        if config.broadcast && ev.via == Via::Direct {
            for peer in (0..n).filter(|&p| p != ev.node) {
                if !received[peer * m + ev.tx] {
                    let time = ev.time + exp_sample(&mut int_rng, config.r_internal);
                    queue.push(Reverse(Event { time, tx: ev.tx, node: peer, via: Via::Gossip }));
                }
            }
        }
    }

    let orderings = sequences
        .into_iter()
        .enumerate()
        .map(|(i, mut seq)| {
            debug_assert_eq!(seq.len(), m);
            if i < config.reversing {
                seq.reverse();
            }
            LocalOrdering::new(NodeId(i), seq)
        })
        .collect::<Result<Vec<_>>>()?;
    let honest = registry.honest_ids();
    let ground_truth = ground_truth_order(&registry, Some(&honest))?;
    Ok(SimResult {
        config: config.clone(),
        registry,
        orderings,
        ground_truth,
        delivery_log,
        plan,
        pause_window,
    })
}

/// Runs once and also returns the leader orderings with adversarial
/// transactions deleted.
pub fn attack_run_pair(config: &SimConfig) -> Result<(SimResult, Vec<LocalOrdering>)> {
    let result = run(config)?;
    let projected = result.honest_projection();
    Ok((result, projected))
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use crate::model::Origin;

    /// Honest ids become t1, t2, ... by submission; adversarial ones keep
    /// their group name.
    pub fn label_map(result: &SimResult) -> BTreeMap<TxId, String> {
        let mut names = BTreeMap::new();
        for (i, id) in result.ground_truth.iter().enumerate() {
            names.insert(id.clone(), format!("t{}", i + 1));
        }
        for tx in result.registry.iter().filter(|t| t.origin == Origin::Adversarial) {
            names.insert(tx.id.clone(), tx.clone_group.clone().unwrap());
        }
        names
    }
}
