//! Domain types shared by the ordering algorithms and the simulator.
//!
//! Transaction ids are opaque tokens. Their only structure is a total
//! lexicographic order, which every deterministic tie-break in the crate
//! falls back on.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque transaction identifier, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxId(String);

impl TxId {
    pub fn new(id: impl Into<String>) -> Self {
        TxId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TxId {
    fn from(s: &str) -> Self {
        TxId(s.to_owned())
    }
}

impl From<String> for TxId {
    fn from(s: String) -> Self {
        TxId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Honest,
    Adversarial,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Honest => "honest",
            Origin::Adversarial => "adversarial",
        }
    }
}

impl std::str::FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "honest" => Ok(Origin::Honest),
            "adversarial" => Ok(Origin::Adversarial),
            other => Err(Error::Parse(format!("unknown origin `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub id: TxId,
    pub origin: Origin,
    /// Transmission instant, in units of the mean generation interval.
    pub submit_time: f64,
    /// Conflict keys. Two transactions are dependent iff their key sets meet.
    pub keys: BTreeSet<String>,
    /// Logical attack transaction this one is a clone of, if any.
    pub clone_group: Option<String>,
}

impl Transaction {
    pub fn honest(id: impl Into<TxId>, submit_time: f64) -> Self {
        Transaction {
            id: id.into(),
            origin: Origin::Honest,
            submit_time,
            keys: BTreeSet::new(),
            clone_group: None,
        }
    }

    pub fn adversarial(id: impl Into<TxId>, submit_time: f64, group: impl Into<String>) -> Self {
        Transaction {
            id: id.into(),
            origin: Origin::Adversarial,
            submit_time,
            keys: BTreeSet::new(),
            clone_group: Some(group.into()),
        }
    }

    pub fn with_keys<I, S>(mut self, keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keys = keys.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_honest(&self) -> bool {
        self.origin == Origin::Honest
    }

    fn validate(&self) -> Result<()> {
        if !self.submit_time.is_finite() || self.submit_time < 0.0 {
            return Err(Error::InvalidTransaction(format!(
                "`{}` has submit time {}",
                self.id, self.submit_time
            )));
        }
        let bad = |s: &str| s.is_empty() || s.contains([',', ';', '\n']);
        if self.id.as_str().is_empty() || self.id.as_str().contains([',', '\n']) {
            return Err(Error::InvalidTransaction(format!("bad id `{}`", self.id)));
        }
        if self.keys.iter().any(|k| bad(k)) {
            return Err(Error::InvalidTransaction(format!("bad key on `{}`", self.id)));
        }
        if self.clone_group.as_deref().is_some_and(|g| g.contains([',', '\n'])) {
            return Err(Error::InvalidTransaction(format!("bad clone group on `{}`", self.id)));
        }
        Ok(())
    }

    /// One CSV line: `id,origin,submit_time,keys,clone_group`.
    pub fn to_record(&self) -> String {
        let keys: Vec<&str> = self.keys.iter().map(String::as_str).collect();
        format!(
            "{},{},{},{},{}",
            self.id,
            self.origin.as_str(),
            self.submit_time,
            keys.join(";"),
            self.clone_group.as_deref().unwrap_or("")
        )
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        let [id, origin, time, keys, group] = fields[..] else {
            return Err(Error::Parse(format!("expected 5 fields in `{line}`")));
        };
        let submit_time: f64 = time
            .parse()
            .map_err(|_| Error::Parse(format!("bad submit time `{time}`")))?;
        let tx = Transaction {
            id: TxId::new(id),
            origin: origin.parse()?,
            submit_time,
            keys: keys.split(';').filter(|k| !k.is_empty()).map(str::to_owned).collect(),
            clone_group: (!group.is_empty()).then(|| group.to_owned()),
        };
        tx.validate()?;
        Ok(tx)
    }
}

pub const TRANSACTION_CSV_HEADER: &str = "id,origin,submit_time,keys,clone_group";

/// Index of a committee member, in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The sequence in which one node received transactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalOrdering {
    pub node: NodeId,
    pub sequence: Vec<TxId>,
}

impl LocalOrdering {
    pub fn new(node: NodeId, sequence: Vec<TxId>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sequence.len());
        for id in &sequence {
            if !seen.insert(id) {
                return Err(Error::DuplicateTransaction(id.clone()));
            }
        }
        Ok(LocalOrdering { node, sequence })
    }

    /// Builds orderings for nodes `0..` from plain string slices.
    pub fn from_lists<S: AsRef<str>>(lists: &[Vec<S>]) -> Result<Vec<Self>> {
        lists
            .iter()
            .enumerate()
            .map(|(i, seq)| {
                LocalOrdering::new(NodeId(i), seq.iter().map(|s| TxId::new(s.as_ref())).collect())
            })
            .collect()
    }

    /// Keeps only the ids accepted by `keep`, preserving relative order.
    pub fn project(&self, mut keep: impl FnMut(&TxId) -> bool) -> LocalOrdering {
        LocalOrdering {
            node: self.node,
            sequence: self.sequence.iter().filter(|id| keep(id)).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<Vec<NodeId>>,
}

impl Partition {
    pub fn new(n: usize, parts: Vec<Vec<NodeId>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for part in &parts {
            if part.is_empty() {
                return Err(Error::InvalidPartition("empty part".into()));
            }
            for node in part {
                match seen.get_mut(node.0) {
                    None => {
                        return Err(Error::InvalidPartition(format!("node {node} out of range")))
                    }
                    Some(true) => {
                        return Err(Error::InvalidPartition(format!("node {node} in two parts")))
                    }
                    Some(slot) => *slot = true,
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("node {missing} uncovered")));
        }
        Ok(Partition { parts })
    }

    /// Contiguous split of `0..n` into `k` parts whose sizes differ by at
    /// most one; the larger parts come first.
    pub fn near_equal(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n < k {
            return Err(Error::InvalidPartition(format!("cannot split {n} nodes into {k} parts")));
        }
        let (base, extra) = (n / k, n % k);
        let mut next = 0;
        let parts = (0..k)
            .map(|i| {
                let size = base + usize::from(i < extra);
                let part = (next..next + size).map(NodeId).collect();
                next += size;
                part
            })
            .collect();
        Partition::new(n, parts)
    }

    pub fn parts(&self) -> &[Vec<NodeId>] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }

    pub fn part_of(&self, node: NodeId) -> Option<usize> {
        self.parts.iter().position(|p| p.contains(&node))
    }
}

/// All transactions of one run, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    txs: BTreeMap<TxId, Transaction>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_transactions(txs: impl IntoIterator<Item = Transaction>) -> Result<Self> {
        let mut reg = Registry::new();
        for tx in txs {
            reg.insert(tx)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, tx: Transaction) -> Result<()> {
        tx.validate()?;
        if self.txs.contains_key(&tx.id) {
            return Err(Error::DuplicateTransaction(tx.id));
        }
        self.txs.insert(tx.id.clone(), tx);
        Ok(())
    }

    pub fn get(&self, id: &TxId) -> Option<&Transaction> {
        self.txs.get(id)
    }

    pub fn contains(&self, id: &TxId) -> bool {
        self.txs.contains_key(id)
    }

    pub fn is_honest(&self, id: &TxId) -> bool {
        self.get(id).is_some_and(Transaction::is_honest)
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    /// Transactions in id order.
    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.txs.values()
    }

    pub fn honest_ids(&self) -> Vec<TxId> {
        self.iter().filter(|t| t.is_honest()).map(|t| t.id.clone()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRANSACTION_CSV_HEADER);
        out.push('\n');
        for tx in self.iter() {
            out.push_str(&tx.to_record());
            out.push('\n');
        }
        out
    }
}

/// Ids sorted by submission time, ties broken by id. With `subset`, only
/// those ids are ordered.
pub fn ground_truth_order(registry: &Registry, subset: Option<&[TxId]>) -> Result<Vec<TxId>> {
    let mut txs: Vec<&Transaction> = match subset {
        Some(ids) => ids
            .iter()
            .map(|id| registry.get(id).ok_or_else(|| Error::UnknownTransaction(id.clone())))
            .collect::<Result<_>>()?,
        None => registry.iter().collect(),
    };
    txs.sort_by(|a, b| a.submit_time.total_cmp(&b.submit_time).then_with(|| a.id.cmp(&b.id)));
    txs.dedup_by(|a, b| a.id == b.id);
    Ok(txs.into_iter().map(|t| t.id.clone()).collect())
}
