use super::{check_round, Branch, KeyWriter, SellerTransducer};
use crate::error::Result;
use crate::model::Price;

/// Posts the same price every round.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPriceSeller {
    price: Price,
    horizon: u32,
}

impl FixedPriceSeller {
    pub fn new(price: Price, horizon: u32) -> Self {
        FixedPriceSeller { price, horizon }
    }
}

impl SellerTransducer for FixedPriceSeller {
    fn label(&self) -> String {
        format!("fixed:{}", self.price)
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
            price: self.price,
            next: self.clone(),
        }])
    }

    fn update(&mut self, _t: u32, _price: Price, _accepted: bool) {}

    fn state_key(&self) -> Vec<u8> {
        KeyWriter::new(b'F').f64(self.price.get()).finish()
    }
}
