use super::{check_round, Branch, KeyWriter, SellerTransducer};
use crate::error::{Error, Result};
use crate::model::Price;

/// The Monotone seller.
///
/// Starts at price 1. While the buyer has never accepted, every rejection
/// multiplies the price by `beta`; the first accepted price is then posted
/// for all remaining rounds. Offered prices therefore never increase.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSeller {
    beta: f64,
    horizon: u32,
    price: f64,
    rejections: u32,
    locked: bool,
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("monotone rate beta={beta} outside [0, 1)")))
    }
}

impl MonotoneSeller {
    pub fn new(beta: f64, horizon: u32) -> Result<Self> {
        check_beta(beta)?;
        Ok(MonotoneSeller {
            beta,
            horizon,
            price: 1.0,
            rejections: 0,
            locked: false,
        })
    }

    /// Rate tuned for horizon `T`: `beta = 1 - 1/sqrt(T)`.
    pub fn tuned_beta(horizon: u32) -> f64 {
        1.0 - 1.0 / (horizon.max(1) as f64).sqrt()
    }

    pub fn tuned(horizon: u32) -> Self {
        Self::new(Self::tuned_beta(horizon), horizon).expect("tuned beta lies in [0, 1)")
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_locked(&self) -> bool {
        self.locked
    }
}

impl SellerTransducer for MonotoneSeller {
    fn label(&self) -> String {
        format!("monotone:{}", self.beta)
    }

    fn horizon(&self) -> u32 {
        self.horizon
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn enumerate_offers(&self, t: u32) -> Result<Vec<Branch<Self>>> {
        check_round(t, self.horizon)?;
        Ok(vec![Branch {
            prob: 1.0,
            price: Price::new(self.price).expect("beta^k stays in [0, 1]"),
            next: self.clone(),
        }])
    }

    fn update(&mut self, _t: u32, _price: Price, accepted: bool) {
        if self.locked {
            return;
        }
        if accepted {
            self.locked = true;
        } else {
            self.price *= self.beta;
            self.rejections += 1;
        }
    }

    fn state_key(&self) -> Vec<u8> {
        // price is beta multiplied `rejections` times, so it is implied
        KeyWriter::new(b'M')
            .f64(self.beta)
            .u32(self.rejections)
            .u8(u8::from(self.locked))
            .finish()
    }
}
