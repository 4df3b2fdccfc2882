use super::{check_round, Branch, KeyWriter, PriceGrid, SellerTransducer};
use crate::error::{Error, Result};
use crate::model::Price;

/// EXP3 with uniform mixing over the grid.
///
/// Arm `i` is drawn with probability `(1 - eta) w_i / sum(w) + eta / K`;
/// after reward `r = a_t p_t` on arm `i` drawn with probability `q_i`,
/// `w_i <- w_i * exp(eta * (r / q_i) / K)`. Weights are kept as logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3Seller {
    grid: PriceGrid,
    eta: f64,
    horizon: u32,
    log_weights: Vec<f64>,
    pending: Option<(u32, f64)>,
}

impl Exp3Seller {
    pub fn new(grid: PriceGrid, eta: f64, horizon: u32) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta={eta} outside (0, 1]")));
        }
        Ok(Exp3Seller {
            grid,
            eta,
            horizon,
            log_weights: vec![0.0; grid.size() as usize],
            pending: None,
        })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.log_weights.len() as f64;
        let top = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.iter()
            .map(|wi| (1.0 - self.eta) * wi / total + self.eta / k)
            .collect()
    }
}

impl SellerTransducer for Exp3Seller {
    fn label(&self) -> String {
        format!("exp3:{},{}", self.grid.size(), self.eta)
    }

    fn horizon(&self) -> u32 {
        self.horizon
    }

    fn is_deterministic(&self) -> bool {
        self.log_weights.len() == 1
    }

    fn enumerate_offers(&self, t: u32) -> Result<Vec<Branch<Self>>> {
        check_round(t, self.horizon)?;
        Ok(self
            .probabilities()
            .into_iter()
            .enumerate()
            .map(|(i, q)| {
                let mut next = self.clone();
                next.pending = Some((i as u32, q));
                Branch {
                    prob: q,
                    price: self.grid.price(i),
                    next,
                }
            })
            .collect())
    }

    fn update(&mut self, _t: u32, price: Price, accepted: bool) {
        let Some((arm, q)) = self.pending.take() else {
            return;
        };
        let reward = if accepted { price.get() } else { 0.0 };
        let k = self.log_weights.len() as f64;
        self.log_weights[arm as usize] += self.eta * (reward / q) / k;
    }

    fn state_key(&self) -> Vec<u8> {
        let mut w = KeyWriter::new(b'E').u32(self.grid.size()).f64(self.eta);
        for &l in &self.log_weights {
            w = w.f64(l);
        }
        match self.pending {
            Some((arm, q)) => w.u8(1).u32(arm).f64(q).finish(),
            None => w.u8(0).finish(),
        }
    }
}
