use super::{check_round, Branch, KeyWriter, SellerTransducer};
use crate::error::Result;
use crate::model::Price;

/// Bisects `[lo, hi]`, starting from `(0, 1)`: offers the midpoint, moves
/// `lo` up on acceptance and `hi` down on rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySearchSeller {
    lo: f64,
    hi: f64,
    horizon: u32,
}

impl BinarySearchSeller {
    pub fn new(horizon: u32) -> Self {
        BinarySearchSeller {
            lo: 0.0,
            hi: 1.0,
            horizon,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn mid(&self) -> Price {
        Price::new((self.lo + self.hi) / 2.0).expect("midpoint of [0,1] interval")
    }
}

impl SellerTransducer for BinarySearchSeller {
    fn label(&self) -> String {
        "binsearch".into()
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
            price: self.mid(),
            next: self.clone(),
        }])
    }

    fn update(&mut self, _t: u32, price: Price, accepted: bool) {
        if accepted {
            self.lo = price.get();
        } else {
            self.hi = price.get();
        }
    }

    fn state_key(&self) -> Vec<u8> {
        KeyWriter::new(b'B').f64(self.lo).f64(self.hi).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(responses: impl Fn(f64) -> bool, rounds: u32) -> Vec<f64> {
        let mut s = BinarySearchSeller::new(rounds);
        let mut rng = crate::seed::stream_rng(1, 0);
        (1..=rounds)
            .map(|t| {
                let p = s.offer(t, &mut rng).unwrap();
                s.update(t, p, responses(p.get()));
                p.get()
            })
            .collect()
    }

    #[test]
    fn truthful_trace() {
        let prices = trace(|p| p <= 0.7, 3);
        assert_eq!(prices, vec![0.5, 0.75, 0.625]);
        let revenue: f64 = prices.iter().filter(|p| **p <= 0.7).sum();
        assert_eq!(revenue, 1.125);
    }

    #[test]
    fn halving_toward_the_ends() {
        assert_eq!(trace(|_| false, 3), vec![0.5, 0.25, 0.125]);
        assert_eq!(trace(|_| true, 3), vec![0.5, 0.75, 0.875]);
    }
}
