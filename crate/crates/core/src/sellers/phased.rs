//! The Phased explore/exploit seller.
//!
//! Rounds are split into phases of doubling length `L_i = L * 2^(i-1)`,
//! the last one truncated at `T`. Phase `i` opens with an exploration block
//! in which every grid price is offered `S_i = max(1, floor(L_i^alpha / K))`
//! times in uniformly random order. The rest of the phase posts the grid
//! price with the highest empirical revenue `p * accepts(p) / S_i`, counted
//! over that phase's exploration only (ties go to the lower price).

use std::sync::Arc;

use super::{check_round, Branch, KeyWriter, PriceGrid, SellerTransducer};
use crate::error::{Error, Result};
use crate::model::Price;

pub const DEFAULT_ALPHA: f64 = 0.5;

/// User-facing knobs; unset fields are derived from the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedParams {
    /// Grid size; default `ceil(T^(1/4))`.
    pub k: Option<u32>,
    /// Exploration exponent in `(0, 1)`.
    pub alpha: f64,
    /// First phase length; default `max(K, 2)`.
    pub first_phase: Option<u32>,
}

impl Default for PhasedParams {
    fn default() -> Self {
        PhasedParams {
            k: None,
            alpha: DEFAULT_ALPHA,
            first_phase: None,
        }
    }
}

impl PhasedParams {
    pub fn new(k: u32, alpha: f64, first_phase: u32) -> Self {
        PhasedParams {
            k: Some(k),
            alpha,
            first_phase: Some(first_phase),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha={} outside (0, 1)", self.alpha)));
        }
        if self.k == Some(0) {
            return Err(Error::invalid("grid size K must be at least 1"));
        }
        if self.first_phase == Some(0) {
            return Err(Error::invalid("first phase length L must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn spec_suffix(&self) -> String {
        let mut parts = Vec::new();
        if let Some(k) = self.k {
            parts.push(format!("K={k}"));
        }
        if self.alpha != DEFAULT_ALPHA {
            parts.push(format!("alpha={}", self.alpha));
        }
        if let Some(l) = self.first_phase {
            parts.push(format!("L={l}"));
        }
        if parts.is_empty() {
            String::new()
        } else {
            format!(":{}", parts.join(","))
        }
    }
}

/// Whether a round explores or exploits, and in which phase (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Explore { phase: usize },
    Exploit { phase: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase {
    /// First round of the phase (1-based).
    pub start: u32,
    /// Rounds in the phase after truncation at `T`.
    pub len: u32,
    /// Exploration samples per grid price.
    pub samples: u32,
    /// Exploration rounds actually played (may be cut by truncation).
    pub explore_len: u32,
}

impl Phase {
    pub fn end(&self) -> u32 {
        self.start + self.len - 1
    }
}

/// The fully resolved schedule for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    grid: PriceGrid,
    alpha: f64,
    first_phase: u32,
    horizon: u32,
    phases: Vec<Phase>,
}

impl PhasePlan {
    pub fn new(params: &PhasedParams, horizon: u32) -> Result<Self> {
        params.validate()?;
        let k = params.k.unwrap_or_else(|| fourth_root_ceil(horizon));
        let grid = PriceGrid::new(k)?;
        let first_phase = params.first_phase.unwrap_or(k.max(2));
        if k > first_phase {
            return Err(Error::invalid(format!(
                "grid of K={k} prices does not fit the first phase of L={first_phase} rounds"
            )));
        }
        let mut phases = Vec::new();
        let mut start = 1u32;
        let mut full_len = first_phase as u64;
        while start <= horizon {
            let samples = (((full_len as f64).powf(params.alpha) / k as f64).floor() as u32).max(1);
            let len = full_len.min((horizon - start + 1) as u64) as u32;
            phases.push(Phase {
                start,
                len,
                samples,
                explore_len: (samples * k).min(len),
            });
            start += len;
            full_len *= 2;
        }
        Ok(PhasePlan {
            grid,
            alpha: params.alpha,
            first_phase,
            horizon,
            phases,
        })
    }

    pub fn grid(&self) -> PriceGrid {
        self.grid
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn phase_of(&self, t: u32) -> usize {
        self.phases.partition_point(|p| p.end() < t)
    }

    pub fn segment(&self, t: u32) -> Segment {
        let phase = self.phase_of(t);
        let p = &self.phases[phase];
        if t - p.start < p.explore_len {
            Segment::Explore { phase }
        } else {
            Segment::Exploit { phase }
        }
    }
}

/// Smallest `k >= 1` with `k^4 >= n`.
fn fourth_root_ceil(n: u32) -> u32 {
    let mut k = 1u64;
    while k.pow(4) < n as u64 {
        k += 1;
    }
    k as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasedSeller {
    plan: Arc<PhasePlan>,
    phase: usize,
    /// Exploration offers still owed per grid index in this phase.
    remaining: Vec<u32>,
    /// Exploration acceptances per grid index in this phase.
    accepts: Vec<u32>,
    /// Grid index of the drawn offer and whether it was an exploration draw.
    pending: Option<(u32, bool)>,
}

impl PhasedSeller {
    pub fn new(params: PhasedParams, horizon: u32) -> Result<Self> {
        let plan = Arc::new(PhasePlan::new(&params, horizon)?);
        let k = plan.grid.size() as usize;
        let samples = plan.phases[0].samples;
        Ok(PhasedSeller {
            plan,
            phase: 0,
            remaining: vec![samples; k],
            accepts: vec![0; k],
            pending: None,
        })
    }

    pub fn plan(&self) -> &PhasePlan {
        &self.plan
    }

    /// Grid index maximizing `(i + 1) * accepts[i]`, which orders the same
    /// way as `p_i * accepts[i] / S`; ties go to the lower index.
    pub fn exploit_index(&self) -> usize {
        let mut best = 0;
        let mut best_score = 0u64;
        for (i, &a) in self.accepts.iter().enumerate() {
            let score = (i as u64 + 1) * a as u64;
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }
}

impl SellerTransducer for PhasedSeller {
    fn label(&self) -> String {
        format!(
            "phased:K={},alpha={},L={}",
            self.plan.grid.size(),
            self.plan.alpha,
            self.plan.first_phase
        )
    }

    fn horizon(&self) -> u32 {
        self.plan.horizon
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn enumerate_offers(&self, t: u32) -> Result<Vec<Branch<Self>>> {
        check_round(t, self.plan.horizon)?;
        debug_assert_eq!(self.plan.phase_of(t), self.phase);
        match self.plan.segment(t) {
            Segment::Explore { .. } => {
                let total: u32 = self.remaining.iter().sum();
                Ok(self
                    .remaining
                    .iter()
                    .enumerate()
                    .filter(|(_, &r)| r > 0)
                    .map(|(i, &r)| {
                        let mut next = self.clone();
                        next.remaining[i] -= 1;
                        next.pending = Some((i as u32, true));
                        Branch {
                            prob: r as f64 / total as f64,
                            price: self.plan.grid.price(i),
                            next,
                        }
                    })
                    .collect())
            }
            Segment::Exploit { .. } => {
                let i = self.exploit_index();
                let mut next = self.clone();
                next.pending = Some((i as u32, false));
                Ok(vec![Branch {
                    prob: 1.0,
                    price: self.plan.grid.price(i),
                    next,
                }])
            }
        }
    }

    fn update(&mut self, t: u32, _price: Price, accepted: bool) {
        if let Some((i, true)) = self.pending.take() {
            if accepted {
                self.accepts[i as usize] += 1;
            }
        }
        if t == self.plan.phases[self.phase].end() && self.phase + 1 < self.plan.phases.len() {
            self.phase += 1;
            let samples = self.plan.phases[self.phase].samples;
            self.remaining.iter_mut().for_each(|r| *r = samples);
            self.accepts.iter_mut().for_each(|a| *a = 0);
        }
    }

    fn state_key(&self) -> Vec<u8> {
        let mut w = KeyWriter::new(b'P')
            .u32(self.plan.grid.size())
            .f64(self.plan.alpha)
            .u32(self.plan.first_phase)
            .u32(self.phase as u32);
        for (&r, &a) in self.remaining.iter().zip(&self.accepts) {
            w = w.u32(r).u32(a);
        }
        match self.pending {
            Some((i, explore)) => w.u8(1).u32(i).u8(u8::from(explore)).finish(),
            None => w.u8(0).finish(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_doubles_and_truncates() {
        let plan = PhasePlan::new(&PhasedParams::new(2, 0.5, 4), 20).unwrap();
        let ph = plan.phases();
        assert_eq!(ph.len(), 3);
        assert_eq!((ph[0].start, ph[0].len, ph[0].samples, ph[0].explore_len), (1, 4, 1, 2));
        assert_eq!((ph[1].start, ph[1].len, ph[1].samples, ph[1].explore_len), (5, 8, 1, 2));
        // L_3 = 16: floor(4 / 2) = 2 samples per price, truncated to 8 rounds
        assert_eq!((ph[2].start, ph[2].len, ph[2].samples, ph[2].explore_len), (13, 8, 2, 4));
        assert_eq!(plan.segment(1), Segment::Explore { phase: 0 });
        assert_eq!(plan.segment(3), Segment::Exploit { phase: 0 });
        assert_eq!(plan.segment(13), Segment::Explore { phase: 2 });
        assert_eq!(plan.segment(20), Segment::Exploit { phase: 2 });
    }

    #[test]
    fn grid_must_fit_first_phase() {
        assert!(PhasedSeller::new(PhasedParams::new(5, 0.5, 4), 10).is_err());
        assert!(PhasedSeller::new(PhasedParams::new(2, 1.0, 4), 10).is_err());
    }

    #[test]
    fn defaults_scale_with_horizon() {
        let s = PhasedSeller::new(PhasedParams::default(), 10_000).unwrap();
        assert_eq!(s.plan().grid().size(), 10);
        assert_eq!(s.plan().phases()[0].len, 10);
    }

    #[test]
    fn exploration_distribution_tracks_remaining_counts() {
        let s = PhasedSeller::new(PhasedParams::new(2, 0.5, 4), 8).unwrap();
        let b = s.enumerate_offers(1).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].prob, 0.5);
        let after = &b[1].next;
        let b2 = after.enumerate_offers(2).unwrap();
        assert_eq!(b2.len(), 1);
        assert_eq!(b2[0].price.get(), 0.5);
    }

    #[test]
    fn exploit_ties_go_low() {
        let mut s = PhasedSeller::new(PhasedParams::new(2, 0.5, 4), 8).unwrap();
        assert_eq!(s.exploit_index(), 0);
        // 0.5 * 2 == 1.0 * 1
        s.accepts = vec![2, 1];
        assert_eq!(s.exploit_index(), 0);
        s.accepts = vec![1, 1];
        assert_eq!(s.exploit_index(), 1);
    }
}
