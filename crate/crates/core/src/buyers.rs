//! Buyer decision models.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{parse_decimal, Discount, Price, Transcript};
use crate::sellers::SellerTransducer;

pub trait BuyerStrategy {
    fn label(&self) -> String;

    /// Accept or reject `price` in round `t` given this round's value.
    fn decide(&mut self, t: u32, price: Price, value: f64, history: &Transcript) -> Result<bool>;
}

/// Accepts exactly when the price does not exceed the value.
#[derive(Debug, Clone, Copy, Default)]
pub struct TruthfulBuyer;

impl BuyerStrategy for TruthfulBuyer {
    fn label(&self) -> String {
        "truthful".into()
    }

    fn decide(&mut self, _t: u32, price: Price, value: f64, _history: &Transcript) -> Result<bool> {
        Ok(price.get() <= value)
    }
}

/// Behaves like a truthful buyer whose value is `theta`, whatever the true value.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdBuyer {
    theta: Price,
}

impl ThresholdBuyer {
    pub fn new(theta: Price) -> Self {
        ThresholdBuyer { theta }
    }

    pub fn theta(&self) -> Price {
        self.theta
    }
}

impl BuyerStrategy for ThresholdBuyer {
    fn label(&self) -> String {
        format!("threshold:{}", self.theta)
    }

    fn decide(&mut self, _t: u32, price: Price, _value: f64, _history: &Transcript) -> Result<bool> {
        Ok(price <= self.theta)
    }
}

/// Number of candidate thresholds searched by `threshold:opt`.
pub const THETA_GRID_POINTS: u32 = 50;

/// Candidate thresholds `j / 50` for `j = 1..=50`.
pub fn theta_grid() -> Vec<Price> {
    (1..=THETA_GRID_POINTS)
        .map(|j| Price::new(j as f64 / THETA_GRID_POINTS as f64).expect("in (0, 1]"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMeta {
    pub seller: String,
    pub value: f64,
    pub gamma: Discount,
    pub horizon: u32,
}

/// Best-response policy: accept/reject per (round, post-draw seller state key).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub meta: PolicyMeta,
    entries: BTreeMap<(u32, Vec<u8>), bool>,
}

const POLICY_MAGIC: &str = "# stratprice policy v1";

impl PolicyTable {
    pub fn new(meta: PolicyMeta) -> Self {
        PolicyTable {
            meta,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, t: u32, key: Vec<u8>, accept: bool) {
        self.entries.insert((t, key), accept);
    }

    pub fn get(&self, t: u32, key: &[u8]) -> Option<bool> {
        self.entries.get(&(t, key.to_vec())).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &[u8], bool)> {
        self.entries.iter().map(|((t, k), a)| (*t, k.as_slice(), *a))
    }

    /// Line-oriented export: a `#` header, then `t<TAB>key_hex<TAB>accept|reject`
    /// sorted by round and key.
    pub fn export(&self) -> String {
        let mut out = String::new();
        out.push_str(POLICY_MAGIC);
        out.push('\n');
        out.push_str(&format!("# seller\t{}\n", self.meta.seller));
        out.push_str(&format!("# value\t{}\n", self.meta.value));
        out.push_str(&format!("# gamma\t{}\n", self.meta.gamma));
        out.push_str(&format!("# horizon\t{}\n", self.meta.horizon));
        out.push_str(&format!("# entries\t{}\n", self.entries.len()));
        for ((t, key), accept) in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                t,
                to_hex(key),
                if *accept { "accept" } else { "reject" }
            ));
        }
        out
    }

    pub fn import(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(POLICY_MAGIC) {
            return Err(Error::parse("policy header", "missing magic line"));
        }
        let mut header = BTreeMap::new();
        let mut table: Option<PolicyTable> = None;
        let mut expected = 0usize;
        for line in lines {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(line, "expected `# key<TAB>value`"))?;
                header.insert(k.to_string(), v.to_string());
                continue;
            }
            let table = match &mut table {
                Some(t) => t,
                None => {
                    let field = |k: &str| {
                        header
                            .get(k)
                            .cloned()
                            .ok_or_else(|| Error::parse(k, "missing policy header field"))
                    };
                    expected = field("entries")?.parse().map_err(|_| Error::parse("entries", "not an integer"))?;
                    table.insert(PolicyTable::new(PolicyMeta {
                        seller: field("seller")?,
                        value: field("value")?.parse().map_err(|_| Error::parse("value", "not a number"))?,
                        gamma: Discount::new(
                            field("gamma")?.parse().map_err(|_| Error::parse("gamma", "not a number"))?,
                        )?,
                        horizon: field("horizon")?.parse().map_err(|_| Error::parse("horizon", "not an integer"))?,
                    }))
                }
            };
            let mut cols = line.split('\t');
            let (Some(t), Some(key), Some(action), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(line, "expected three tab-separated columns"));
            };
            let t = t.parse().map_err(|_| Error::parse(t, "round is not an integer"))?;
            let accept = match action {
                "accept" => true,
                "reject" => false,
                other => return Err(Error::parse(other, "expected accept|reject")),
            };
            table.insert(t, from_hex(key)?, accept);
        }
        let table = table.ok_or_else(|| Error::parse("policy", "no entries"))?;
        if table.len() != expected {
            return Err(Error::parse("entries", format!("header says {expected}, found {}", table.len())));
        }
        Ok(table)
    }
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn from_hex(s: &str) -> Result<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return Err(Error::parse(s, "odd-length hex"));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| Error::parse(s, "invalid hex")))
        .collect()
}

/// Replays a policy table while tracking the seller's state in lockstep.
#[derive(Debug, Clone)]
pub struct PolicyBuyer<S> {
    policy: Arc<PolicyTable>,
    tracker: S,
}

impl<S: SellerTransducer> PolicyBuyer<S> {
    /// `seller` must be the episode seller in its initial state.
    pub fn new(policy: Arc<PolicyTable>, seller: S) -> Result<Self> {
        if policy.meta.horizon != seller.horizon() || policy.meta.seller != seller.label() {
            return Err(Error::PolicyMismatch(format!(
                "policy for `{}` (T={}) used against `{}` (T={})",
                policy.meta.seller,
                policy.meta.horizon,
                seller.label(),
                seller.horizon()
            )));
        }
        Ok(PolicyBuyer { policy, tracker: seller })
    }
}

impl<S: SellerTransducer> BuyerStrategy for PolicyBuyer<S> {
    fn label(&self) -> String {
        "bestresponse".into()
    }

    fn decide(&mut self, t: u32, price: Price, _value: f64, _history: &Transcript) -> Result<bool> {
        let branch = self
            .tracker
            .enumerate_offers(t)?
            .into_iter()
            .find(|b| b.price == price)
            .ok_or_else(|| Error::PolicyMismatch(format!("round {t}: seller cannot offer {price}")))?;
        let key = branch.next.state_key();
        let accept = self
            .policy
            .get(t, &key)
            .ok_or_else(|| Error::PolicyMismatch(format!("round {t}: unseen seller state {}", to_hex(&key))))?;
        self.tracker = branch.next;
        self.tracker.update(t, price, accept);
        Ok(accept)
    }
}

/// Parsed buyer specification.
#[derive(Debug, Clone, PartialEq)]
pub enum BuyerSpec {
    Truthful,
    Threshold(Price),
    /// Threshold chosen from [`theta_grid`] to maximize the buyer's surplus.
    ThresholdOpt,
    /// Exact best response (fixed values only).
    BestResponse,
}

pub const BUYER_GRAMMAR: &str = "\
  truthful                       accept iff price <= value
  threshold:<theta>              accept iff price <= theta, whatever the value
  threshold:opt                  theta from {1/50,...,1} maximizing realized surplus
  bestresponse                   exact optimal policy from the solver (fixed values)";

impl BuyerSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "truthful" => Ok(BuyerSpec::Truthful),
            "bestresponse" => Ok(BuyerSpec::BestResponse),
            "threshold:opt" => Ok(BuyerSpec::ThresholdOpt),
            s => match s.strip_prefix("threshold:") {
                Some(theta) => Ok(BuyerSpec::Threshold(
                    Price::new(parse_decimal(theta)?).map_err(|e| Error::parse(theta, e.to_string()))?,
                )),
                None => Err(Error::parse(s, "unknown buyer spec")),
            },
        }
    }
}

impl fmt::Display for BuyerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuyerSpec::Truthful => write!(f, "truthful"),
            BuyerSpec::Threshold(p) => write!(f, "threshold:{p}"),
            BuyerSpec::ThresholdOpt => write!(f, "threshold:opt"),
            BuyerSpec::BestResponse => write!(f, "bestresponse"),
        }
    }
}
