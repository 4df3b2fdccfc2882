//! Game model: prices, discounting, buyer values, transcripts and the
//! revenue / surplus / regret arithmetic built on them.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability vectors summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Revenue rates closer than this count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// A posted price, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Price(f64);

impl Price {
    pub const ZERO: Price = Price(0.0);
    pub const ONE: Price = Price(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Price(value))
        } else {
            Err(Error::invalid(format!("price {value} outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Price {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Price::new(v)
    }
}

impl From<Price> for f64 {
    fn from(p: Price) -> f64 {
        p.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The buyer's per-round discount factor, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Discount(f64);

impl Discount {
    pub const NONE: Discount = Discount(1.0);

    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma <= 1.0 {
            Ok(Discount(gamma))
        } else {
            Err(Error::invalid(format!("discount factor {gamma} outside (0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `gamma^(t-1)`, the weight of round `t` (1-based).
    pub fn weight(self, t: u32) -> f64 {
        self.0.powi(t as i32 - 1)
    }
}

impl TryFrom<f64> for Discount {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Discount::new(v)
    }
}

impl From<Discount> for f64 {
    fn from(d: Discount) -> f64 {
        d.0
    }
}

impl fmt::Display for Discount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Buyer valuation: a fixed value, or i.i.d. draws from a finite support.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueModel {
    Fixed(f64),
    FiniteSupport { values: Vec<f64>, probs: Vec<f64> },
}

impl ValueModel {
    pub fn fixed(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("value {v} outside [0, 1]")));
        }
        Ok(ValueModel::Fixed(v))
    }

    pub fn finite_support(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::invalid(
                "finite support needs equally many values and probabilities (at least one)",
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("support values must lie in [0, 1]"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("support values must be strictly ascending"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ValueModel::FiniteSupport { values, probs })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len().max(1) as f64;
        let probs = vec![1.0 / n; values.len()];
        Self::finite_support(values, probs)
    }

    /// The value if this model never varies (fixed, or a single support point).
    pub fn as_fixed(&self) -> Option<f64> {
        match self {
            ValueModel::Fixed(v) => Some(*v),
            ValueModel::FiniteSupport { values, probs } => {
                let live: Vec<f64> = values
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(v, _)| *v)
                    .collect();
                (live.len() == 1).then(|| live[0])
            }
        }
    }

    /// Parses `fixed:<v>`, `uniform:<v1>,<v2>,...` or `dist:<v1>@<p1>,<v2>@<p2>,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let num = |tok: &str| parse_decimal(tok);
        let model = match kind {
            "fixed" => ValueModel::fixed(num(rest)?),
            "uniform" => ValueModel::uniform(rest.split(',').map(num).collect::<Result<_>>()?),
            "dist" => {
                let mut values = Vec::new();
                let mut probs = Vec::new();
                for pair in rest.split(',') {
                    let (v, p) = pair
                        .split_once('@')
                        .ok_or_else(|| Error::parse(pair, "expected <value>@<prob>"))?;
                    values.push(num(v)?);
                    probs.push(num(p)?);
                }
                ValueModel::finite_support(values, probs)
            }
            _ => return Err(Error::parse(kind, "unknown value model (fixed|uniform|dist)")),
        };
        model.map_err(|e| Error::parse(spec, e.to_string()))
    }

    /// Draws one value. Fixed models do not touch the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ValueModel::Fixed(v) => *v,
            ValueModel::FiniteSupport { values, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                // u landed in the rounding gap above the cumulative sum
                *values
                    .iter()
                    .zip(probs)
                    .rev()
                    .find(|(_, p)| **p > 0.0)
                    .map(|(v, _)| v)
                    .unwrap_or(&values[values.len() - 1])
            }
        }
    }
}

impl fmt::Display for ValueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueModel::Fixed(v) => write!(f, "fixed:{v}"),
            ValueModel::FiniteSupport { values, probs } => {
                write!(f, "dist:")?;
                for (i, (v, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}@{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses a plain decimal number (digits, optional sign and point; no exponent).
pub fn parse_decimal(tok: &str) -> Result<f64> {
    let t = tok.trim();
    let body = t.strip_prefix('-').unwrap_or(t);
    let ok = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.chars().filter(|c| *c == '.').count() <= 1
        && body.chars().any(|c| c.is_ascii_digit());
    if !ok {
        return Err(Error::parse(tok, "expected a decimal number"));
    }
    t.parse::<f64>().map_err(|e| Error::parse(tok, e.to_string()))
}

/// One round of play.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u32,
    pub price: Price,
    pub accepted: bool,
    /// The buyer's value in effect this round.
    pub value: f64,
}

/// The ordered play history of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    horizon: u32,
    records: Vec<RoundRecord>,
}

impl Transcript {
    pub fn new(horizon: u32) -> Self {
        Transcript {
            horizon,
            records: Vec::with_capacity(horizon as usize),
        }
    }

    /// Builds a transcript from `(price, accepted)` pairs with a constant value.
    pub fn from_pairs(pairs: &[(f64, bool)], value: f64) -> Result<Self> {
        let mut tr = Transcript::new(pairs.len() as u32);
        for (price, accepted) in pairs {
            tr.push(Price::new(*price)?, *accepted, value)?;
        }
        Ok(tr)
    }

    pub fn push(&mut self, price: Price, accepted: bool, value: f64) -> Result<()> {
        let t = self.records.len() as u32 + 1;
        if t > self.horizon {
            return Err(Error::PastHorizon {
                t,
                horizon: self.horizon,
            });
        }
        self.records.push(RoundRecord {
            t,
            price,
            accepted,
            value,
        });
        Ok(())
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.price.get()).collect()
    }

    pub fn decisions(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.accepted).collect()
    }

    /// CSV rendering `t,price,accepted,value` with a trailing newline per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,price,accepted,value\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.t,
                crate::experiments::fmt_float(r.price.get()),
                u8::from(r.accepted),
                crate::experiments::fmt_float(r.value)
            ));
        }
        out
    }
}

/// Metrics and provenance of one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub revenue: f64,
    pub surplus: f64,
    pub benchmark_rate: f64,
    pub regret: f64,
    pub horizon: u32,
    pub gamma: Discount,
    pub seed: u64,
    pub seller: String,
    pub buyer: String,
}

/// `T_gamma = sum_{t=1..T} gamma^(t-1)`.
pub fn discounted_horizon(gamma: Discount, horizon: u32) -> Result<f64> {
    if horizon < 1 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let g = gamma.get();
    if g == 1.0 {
        Ok(horizon as f64)
    } else {
        Ok((1.0 - g.powi(horizon as i32)) / (1.0 - g))
    }
}

/// Undiscounted seller revenue: the sum of accepted prices.
pub fn seller_revenue(tr: &Transcript) -> f64 {
    tr.records()
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.price.get())
        .sum()
}

/// Discounted buyer surplus `sum_t gamma^(t-1) a_t (v_t - p_t)`.
pub fn buyer_surplus(tr: &Transcript, gamma: Discount) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for r in tr.records() {
        if r.accepted {
            total += weight * (r.value - r.price.get());
        }
        weight *= gamma.get();
    }
    total
}

/// Monopoly price against a truthful buyer and the per-round revenue it earns.
///
/// Finite supports are searched over the support points only; rates within
/// [`TIE_TOL`] are ties and go to the lower price.
pub fn benchmark_rate(vm: &ValueModel) -> (Price, f64) {
    match vm {
        ValueModel::Fixed(v) => (Price(*v), *v),
        ValueModel::FiniteSupport { values, probs } => {
            // Pr(value >= values[i]), accumulated from the top
            let mut tails = vec![0.0; values.len()];
            let mut acc = 0.0;
            for i in (0..values.len()).rev() {
                acc += probs[i];
                tails[i] = acc;
            }
            let mut best = (Price(values[0]), f64::NEG_INFINITY);
            for (v, tail) in values.iter().zip(&tails) {
                let rate = v * tail;
                if rate > best.1 + TIE_TOL {
                    best = (Price(*v), rate);
                }
            }
            best
        }
    }
}

/// Benchmark computed from realized values instead of the model: the best
/// single posted price in hindsight, divided by the number of rounds.
pub fn realized_benchmark_rate(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mut best = 0.0_f64;
    for &p in values {
        let hits = values.iter().filter(|v| **v >= p).count() as f64;
        best = best.max(p * hits / n);
    }
    best
}

/// `T * benchmark_rate(vm) - revenue`.
pub fn strategic_regret(revenue: f64, vm: &ValueModel, horizon: u32) -> f64 {
    horizon as f64 * benchmark_rate(vm).1 - revenue
}
