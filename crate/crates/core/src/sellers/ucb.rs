use super::{check_round, Branch, KeyWriter, PriceGrid, SellerTransducer};
use crate::error::Result;
use crate::model::Price;

/// UCB1 with one arm per grid price and reward `a_t * p_t`.
///
/// Untried arms are played first in ascending price order; afterwards the
/// arm maximizing `mean + sqrt(2 ln t / n)` is played, ties to the lower
/// price.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbSeller {
    grid: PriceGrid,
    horizon: u32,
    pulls: Vec<u32>,
    // Rewards are p_i per acceptance, so counting acceptances is exact.
    accepts: Vec<u32>,
    pending: Option<u32>,
}

impl UcbSeller {
    pub fn new(grid: PriceGrid, horizon: u32) -> Self {
        let k = grid.size() as usize;
        UcbSeller {
            grid,
            horizon,
            pulls: vec![0; k],
            accepts: vec![0; k],
            pending: None,
        }
    }

    pub fn grid(&self) -> PriceGrid {
        self.grid
    }

    pub fn mean_reward(&self, arm: usize) -> f64 {
        self.grid.price(arm).get() * self.accepts[arm] as f64 / self.pulls[arm] as f64
    }

    pub fn index(&self, arm: usize, t: u32) -> f64 {
        self.mean_reward(arm) + (2.0 * (t as f64).ln() / self.pulls[arm] as f64).sqrt()
    }

    pub fn choose(&self, t: u32) -> usize {
        if let Some(untried) = self.pulls.iter().position(|&n| n == 0) {
            return untried;
        }
        let mut best = 0;
        let mut best_index = self.index(0, t);
        for arm in 1..self.pulls.len() {
            let idx = self.index(arm, t);
            if idx > best_index {
                best = arm;
                best_index = idx;
            }
        }
        best
    }
}

impl SellerTransducer for UcbSeller {
    fn label(&self) -> String {
        format!("ucb:{}", self.grid.size())
    }

    fn horizon(&self) -> u32 {
        self.horizon
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn enumerate_offers(&self, t: u32) -> Result<Vec<Branch<Self>>> {
        check_round(t, self.horizon)?;
        let arm = self.choose(t);
        let mut next = self.clone();
        next.pending = Some(arm as u32);
        Ok(vec![Branch {
            prob: 1.0,
            price: self.grid.price(arm),
            next,
        }])
    }

    fn update(&mut self, _t: u32, price: Price, accepted: bool) {
        let arm = match self.pending.take() {
            Some(a) => a as usize,
            None => match self.grid.index_of(price) {
                Some(a) => a,
                None => return,
            },
        };
        self.pulls[arm] += 1;
        if accepted {
            self.accepts[arm] += 1;
        }
    }

    fn state_key(&self) -> Vec<u8> {
        let mut w = KeyWriter::new(b'U').u32(self.grid.size());
        for (&n, &a) in self.pulls.iter().zip(&self.accepts) {
            w = w.u32(n).u32(a);
        }
        w.opt_u32(self.pending).finish()
    }
}
