//! Seller pricing algorithms as explicit state transducers.
//!
//! A transducer value *is* its state: cloning snapshots it, [`state_key`]
//! canonically identifies it, and [`enumerate_offers`] lists every way the
//! next offer can be drawn together with the post-draw state. Randomized
//! sellers draw from a caller-owned generator in [`offer`].
//!
//! [`state_key`]: SellerTransducer::state_key
//! [`enumerate_offers`]: SellerTransducer::enumerate_offers
//! [`offer`]: SellerTransducer::offer

use std::fmt;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::model::{parse_decimal, Price};

mod binsearch;
mod exp3;
mod fixed;
mod monotone;
mod phased;
mod ucb;

pub use binsearch::BinarySearchSeller;
pub use exp3::Exp3Seller;
pub use fixed::FixedPriceSeller;
pub use monotone::MonotoneSeller;
pub use phased::{PhasePlan, PhasedParams, PhasedSeller, Segment};
pub use ucb::UcbSeller;

/// One way the next offer can be drawn.
#[derive(Debug, Clone)]
pub struct Branch<S> {
    pub prob: f64,
    pub price: Price,
    /// Seller state after the draw, before the buyer responds.
    pub next: S,
}

impl<S> Branch<S> {
    fn map<T>(self, f: impl FnOnce(S) -> T) -> Branch<T> {
        Branch {
            prob: self.prob,
            price: self.price,
            next: f(self.next),
        }
    }
}

pub trait SellerTransducer: Clone + fmt::Debug + Send + Sync {
    /// Canonical spec string of this seller.
    fn label(&self) -> String;

    fn horizon(&self) -> u32;

    /// True when offers never depend on seller randomness.
    fn is_deterministic(&self) -> bool;

    /// Exact distribution of the round-`t` offer. Probabilities sum to one.
    fn enumerate_offers(&self, t: u32) -> Result<Vec<Branch<Self>>>;

    /// Applies the buyer's response to the offer made in round `t`.
    fn update(&mut self, t: u32, price: Price, accepted: bool);

    /// Canonical byte encoding; equal keys mean behaviorally identical states.
    fn state_key(&self) -> Vec<u8>;

    /// Draws the round-`t` offer and moves to the post-draw state.
    ///
    /// Single-branch distributions do not consume randomness.
    fn offer(&mut self, t: u32, rng: &mut dyn RngCore) -> Result<Price> {
        let mut branches = self.enumerate_offers(t)?;
        let pick = if branches.len() == 1 {
            0
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = branches.len() - 1;
            for (i, b) in branches.iter().enumerate() {
                acc += b.prob;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        };
        let chosen = branches.swap_remove(pick);
        *self = chosen.next;
        Ok(chosen.price)
    }
}

pub(crate) fn check_round(t: u32, horizon: u32) -> Result<()> {
    if t == 0 || t > horizon {
        Err(Error::PastHorizon { t, horizon })
    } else {
        Ok(())
    }
}

/// Little-endian builder for state keys.
#[derive(Default)]
pub(crate) struct KeyWriter(Vec<u8>);

impl KeyWriter {
    pub fn new(tag: u8) -> Self {
        KeyWriter(vec![tag])
    }
    pub fn u8(mut self, v: u8) -> Self {
        self.0.push(v);
        self
    }
    pub fn u32(mut self, v: u32) -> Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    pub fn f64(mut self, v: f64) -> Self {
        self.0.extend_from_slice(&v.to_bits().to_le_bytes());
        self
    }
    pub fn opt_u32(self, v: Option<u32>) -> Self {
        match v {
            Some(x) => self.u8(1).u32(x),
            None => self.u8(0),
        }
    }
    pub fn finish(self) -> Vec<u8> {
        self.0
    }
}

/// The price set `{1/K, 2/K, ..., 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceGrid {
    k: u32,
}

impl PriceGrid {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("price grid needs K >= 1"));
        }
        Ok(PriceGrid { k })
    }

    pub fn size(&self) -> u32 {
        self.k
    }

    /// Grid point `i` (0-based), i.e. `(i + 1) / K`.
    pub fn price(&self, i: usize) -> Price {
        let p = if i + 1 == self.k as usize {
            1.0
        } else {
            (i as f64 + 1.0) / self.k as f64
        };
        Price::new(p).expect("grid point in (0, 1]")
    }

    pub fn points(&self) -> Vec<Price> {
        (0..self.k as usize).map(|i| self.price(i)).collect()
    }

    /// Index of `price` on the grid, if it is a grid point.
    pub fn index_of(&self, price: Price) -> Option<usize> {
        (0..self.k as usize).find(|&i| self.price(i) == price)
    }
}

/// Parsed seller specification, independent of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum SellerSpec {
    Fixed(Price),
    BinarySearch,
    /// `None` selects the tuned rate `1 - 1/sqrt(T)`.
    Monotone { beta: Option<f64> },
    Phased(PhasedParams),
    Ucb { k: u32 },
    Exp3 { k: u32, eta: f64 },
}

/// Grammar accepted by [`SellerSpec::parse`], for help text.
pub const SELLER_GRAMMAR: &str = "\
  fixed:<p>                      post p in [0,1] every round
  binsearch                      bisect [lo,hi] from (0,1): accept -> lo=mid, reject -> hi=mid
  monotone                       start at 1, multiply by beta after each rejection,
                                 lock at the first accepted price; beta = 1 - 1/sqrt(T)
  monotone:<beta>                same with explicit beta in [0,1) (also monotone:beta=<b>)
  phased                         doubling explore/exploit phases with defaults
  phased:K=<k>,alpha=<a>,L=<l>   grid size K, exploration exponent alpha in (0,1),
                                 first phase length L >= K (any subset, any order)
  ucb:<K>                        UCB1 over the grid {1/K,...,1}
  exp3:<K>,<eta>                 EXP3 over the grid with mixing rate eta in (0,1]";

impl SellerSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, args) = match spec.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        let int = |tok: &str| -> Result<u32> {
            tok.trim()
                .parse::<u32>()
                .map_err(|_| Error::parse(tok, "expected a positive integer"))
        };
        let parsed = match (kind, args) {
            ("fixed", Some(p)) => {
                SellerSpec::Fixed(Price::new(parse_decimal(p)?).map_err(|e| Error::parse(p, e.to_string()))?)
            }
            ("binsearch", None) => SellerSpec::BinarySearch,
            ("monotone", None) => SellerSpec::Monotone { beta: None },
            ("monotone", Some(a)) => {
                let b = a.strip_prefix("beta=").unwrap_or(a);
                let beta = parse_decimal(b)?;
                monotone::check_beta(beta).map_err(|e| Error::parse(a, e.to_string()))?;
                SellerSpec::Monotone { beta: Some(beta) }
            }
            ("phased", None) => SellerSpec::Phased(PhasedParams::default()),
            ("phased", Some(a)) => {
                let mut params = PhasedParams::default();
                for kv in a.split(',') {
                    let (key, val) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::parse(kv, "expected key=value"))?;
                    match key.trim() {
                        "K" => params.k = Some(int(val)?),
                        "alpha" => params.alpha = parse_decimal(val)?,
                        "L" => params.first_phase = Some(int(val)?),
                        other => return Err(Error::parse(other, "unknown phased parameter (K|alpha|L)")),
                    }
                }
                params.validate().map_err(|e| Error::parse(a, e.to_string()))?;
                SellerSpec::Phased(params)
            }
            ("ucb", Some(k)) => SellerSpec::Ucb { k: int(k)? },
            ("exp3", Some(a)) => {
                let (k, eta) = a
                    .split_once(',')
                    .ok_or_else(|| Error::parse(a, "expected exp3:<K>,<eta>"))?;
                let eta = parse_decimal(eta)?;
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(Error::parse(a, "eta must lie in (0, 1]"));
                }
                SellerSpec::Exp3 { k: int(k)?, eta }
            }
            _ => return Err(Error::parse(spec, "unknown seller spec")),
        };
        if let SellerSpec::Ucb { k: 0 } | SellerSpec::Exp3 { k: 0, .. } = parsed {
            return Err(Error::parse(spec, "grid size K must be at least 1"));
        }
        Ok(parsed)
    }

    /// Instantiates the seller for a game of `horizon` rounds.
    pub fn build(&self, horizon: u32) -> Result<Seller> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Ok(match self {
            SellerSpec::Fixed(p) => Seller::Fixed(FixedPriceSeller::new(*p, horizon)),
            SellerSpec::BinarySearch => Seller::BinarySearch(BinarySearchSeller::new(horizon)),
            SellerSpec::Monotone { beta } => Seller::Monotone(match beta {
                Some(b) => MonotoneSeller::new(*b, horizon)?,
                None => MonotoneSeller::tuned(horizon),
            }),
            SellerSpec::Phased(params) => Seller::Phased(PhasedSeller::new(params.clone(), horizon)?),
            SellerSpec::Ucb { k } => Seller::Ucb(UcbSeller::new(PriceGrid::new(*k)?, horizon)),
            SellerSpec::Exp3 { k, eta } => Seller::Exp3(Exp3Seller::new(PriceGrid::new(*k)?, *eta, horizon)?),
        })
    }
}

impl fmt::Display for SellerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SellerSpec::Fixed(p) => write!(f, "fixed:{p}"),
            SellerSpec::BinarySearch => write!(f, "binsearch"),
            SellerSpec::Monotone { beta: None } => write!(f, "monotone"),
            SellerSpec::Monotone { beta: Some(b) } => write!(f, "monotone:{b}"),
            SellerSpec::Phased(p) => write!(f, "phased{}", p.spec_suffix()),
            SellerSpec::Ucb { k } => write!(f, "ucb:{k}"),
            SellerSpec::Exp3 { k, eta } => write!(f, "exp3:{k},{eta}"),
        }
    }
}

impl std::str::FromStr for SellerSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SellerSpec::parse(s)
    }
}

/// Any of the sellers in this crate.
#[derive(Debug, Clone)]
pub enum Seller {
    Fixed(FixedPriceSeller),
    BinarySearch(BinarySearchSeller),
    Monotone(MonotoneSeller),
    Phased(PhasedSeller),
    Ucb(UcbSeller),
    Exp3(Exp3Seller),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            Seller::Fixed($s) => $body,
            Seller::BinarySearch($s) => $body,
            Seller::Monotone($s) => $body,
            Seller::Phased($s) => $body,
            Seller::Ucb($s) => $body,
            Seller::Exp3($s) => $body,
        }
    };
}

macro_rules! dispatch_branches {
    ($self:expr, $t:expr, $($variant:ident),*) => {
        match $self {
            $(Seller::$variant(s) => s
                .enumerate_offers($t)
                .map(|bs| bs.into_iter().map(|b| b.map(Seller::$variant)).collect()),)*
        }
    };
}

impl SellerTransducer for Seller {
    fn label(&self) -> String {
        dispatch!(self, s => s.label())
    }

    fn horizon(&self) -> u32 {
        dispatch!(self, s => s.horizon())
    }

    fn is_deterministic(&self) -> bool {
        dispatch!(self, s => s.is_deterministic())
    }

    fn enumerate_offers(&self, t: u32) -> Result<Vec<Branch<Self>>> {
        dispatch_branches!(self, t, Fixed, BinarySearch, Monotone, Phased, Ucb, Exp3)
    }

    fn update(&mut self, t: u32, price: Price, accepted: bool) {
        dispatch!(self, s => s.update(t, price, accepted))
    }

    fn state_key(&self) -> Vec<u8> {
        dispatch!(self, s => s.state_key())
    }

    fn offer(&mut self, t: u32, rng: &mut dyn RngCore) -> Result<Price> {
        dispatch!(self, s => s.offer(t, rng))
    }
}
