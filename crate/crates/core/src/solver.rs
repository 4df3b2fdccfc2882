//! Exact best response of a fixed-value buyer against a known seller.
//!
//! Backward induction over the seller's offer tree:
//!
//! ```text
//! V(t, s) = sum_{(q, p, s') in offers(s, t)} q * max_a [ gamma^(t-1) a (v - p) + V(t+1, update(s', t, p, a)) ]
//! V(T+1, .) = 0
//! ```
//!
//! memoized on `(t, state_key(s))`. Accept wins whenever its value is within
//! [`ACCEPT_EPS`] of rejecting.

use std::collections::HashMap;

use crate::buyers::{PolicyMeta, PolicyTable};
use crate::error::{Error, Result};
use crate::model::{Discount, Price};
use crate::sellers::SellerTransducer;

pub const DEFAULT_SOLVER_CAP: u32 = 20;
pub const BRUTE_FORCE_CAP: u32 = 12;
pub const ACCEPT_EPS: f64 = 1e-12;
pub const SOLVER_CAP_ENV: &str = "STRATPRICE_SOLVER_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    /// Largest horizon the memoized solver accepts.
    pub cap: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            cap: DEFAULT_SOLVER_CAP,
        }
    }
}

impl SolverOptions {
    /// Default options, with the cap overridden by `STRATPRICE_SOLVER_CAP` if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(SOLVER_CAP_ENV) {
            Ok(raw) => {
                let cap = raw
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(raw.clone(), format!("{SOLVER_CAP_ENV} must be a positive integer")))?;
                Ok(SolverOptions { cap })
            }
            Err(_) => Ok(SolverOptions::default()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub policy: PolicyTable,
    pub optimal_surplus: f64,
    pub truthful_surplus: f64,
    pub truthful_revenue: f64,
    pub expected_revenue_under_policy: f64,
    pub regret_under_policy: f64,
    /// Distinct `(t, state)` nodes expanded by the memoized recursion.
    pub node_count: u64,
}

#[derive(Clone, Copy)]
struct Node {
    surplus: f64,
    revenue: f64,
}

struct Solver {
    value: f64,
    gamma: Discount,
    horizon: u32,
    memo: HashMap<(u32, Vec<u8>), Node>,
    policy: PolicyTable,
    nodes: u64,
}

impl Solver {
    fn solve<S: SellerTransducer>(&mut self, t: u32, seller: &S) -> Result<Node> {
        if t > self.horizon {
            return Ok(Node {
                surplus: 0.0,
                revenue: 0.0,
            });
        }
        let memo_key = (t, seller.state_key());
        if let Some(n) = self.memo.get(&memo_key) {
            return Ok(*n);
        }
        self.nodes += 1;
        let weight = self.gamma.weight(t);
        let mut out = Node {
            surplus: 0.0,
            revenue: 0.0,
        };
        for branch in seller.enumerate_offers(t)? {
            let p = branch.price.get();
            let decision_key = branch.next.state_key();
            let (accept, reject) = successors(&branch.next, t, branch.price);
            let a = self.solve(t + 1, &accept)?;
            let r = self.solve(t + 1, &reject)?;
            let accept_value = weight * (self.value - p) + a.surplus;
            let take = accept_value + ACCEPT_EPS >= r.surplus;
            self.policy.insert(t, decision_key, take);
            if take {
                out.surplus += branch.prob * accept_value;
                out.revenue += branch.prob * (p + a.revenue);
            } else {
                out.surplus += branch.prob * r.surplus;
                out.revenue += branch.prob * r.revenue;
            }
        }
        self.memo.insert(memo_key, out);
        Ok(out)
    }
}

fn successors<S: SellerTransducer>(post_draw: &S, t: u32, price: Price) -> (S, S) {
    let mut accept = post_draw.clone();
    accept.update(t, price, true);
    let mut reject = post_draw.clone();
    reject.update(t, price, false);
    (accept, reject)
}

/// Expected surplus and revenue of truthful play, enumerating seller randomness.
fn truthful_play<S: SellerTransducer>(
    seller: &S,
    t: u32,
    value: f64,
    gamma: Discount,
    memo: &mut HashMap<(u32, Vec<u8>), Node>,
) -> Result<Node> {
    if t > seller.horizon() {
        return Ok(Node {
            surplus: 0.0,
            revenue: 0.0,
        });
    }
    let key = (t, seller.state_key());
    if let Some(n) = memo.get(&key) {
        return Ok(*n);
    }
    let mut out = Node {
        surplus: 0.0,
        revenue: 0.0,
    };
    for branch in seller.enumerate_offers(t)? {
        let p = branch.price.get();
        let accept = p <= value;
        let mut next = branch.next;
        next.update(t, branch.price, accept);
        let rest = truthful_play(&next, t + 1, value, gamma, memo)?;
        out.surplus += branch.prob * (if accept { gamma.weight(t) * (value - p) } else { 0.0 } + rest.surplus);
        out.revenue += branch.prob * (if accept { p } else { 0.0 } + rest.revenue);
    }
    memo.insert(key, out);
    Ok(out)
}

fn check_value(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(format!("value {value} outside [0, 1]")))
    }
}

/// Optimal policy of a buyer with fixed value `value` against `seller`
/// (in its initial state) over the seller's horizon.
pub fn solve_best_response<S: SellerTransducer>(
    seller: &S,
    value: f64,
    gamma: Discount,
    options: &SolverOptions,
) -> Result<SolveReport> {
    check_value(value)?;
    let horizon = seller.horizon();
    if horizon > options.cap {
        return Err(Error::ResourceLimit {
            horizon,
            cap: options.cap,
        });
    }
    let mut solver = Solver {
        value,
        gamma,
        horizon,
        memo: HashMap::new(),
        policy: PolicyTable::new(PolicyMeta {
            seller: seller.label(),
            value,
            gamma,
            horizon,
        }),
        nodes: 0,
    };
    let root = solver.solve(1, seller)?;
    let truthful = truthful_play(seller, 1, value, gamma, &mut HashMap::new())?;
    Ok(SolveReport {
        policy: solver.policy,
        optimal_surplus: root.surplus,
        truthful_surplus: truthful.surplus,
        truthful_revenue: truthful.revenue,
        expected_revenue_under_policy: root.revenue,
        regret_under_policy: horizon as f64 * value - root.revenue,
        node_count: solver.nodes,
    })
}

/// `T v` minus the seller's expected revenue against the optimal buyer.
pub fn regret_under_best_response<S: SellerTransducer>(
    seller: &S,
    value: f64,
    gamma: Discount,
    options: &SolverOptions,
) -> Result<f64> {
    Ok(solve_best_response(seller, value, gamma, options)?.regret_under_policy)
}

/// On-path `(price, accepted)` sequence of a policy against a deterministic seller.
pub fn policy_path<S: SellerTransducer>(policy: &PolicyTable, seller: &S) -> Result<Vec<(Price, bool)>> {
    let mut state = seller.clone();
    let mut path = Vec::new();
    for t in 1..=seller.horizon() {
        let mut branches = state.enumerate_offers(t)?;
        if branches.len() != 1 {
            return Err(Error::invalid("policy_path needs a deterministic seller"));
        }
        let b = branches.swap_remove(0);
        let accept = policy
            .get(t, &b.next.state_key())
            .ok_or_else(|| Error::PolicyMismatch(format!("round {t} missing from policy")))?;
        state = b.next;
        state.update(t, b.price, accept);
        path.push((b.price, accept));
    }
    Ok(path)
}

/// Exact expected discounted surplus of a fixed response sequence
/// (`responses[t-1]` answers round `t` whatever the offer).
pub fn sequence_surplus<S: SellerTransducer>(seller: &S, value: f64, gamma: Discount, responses: &[bool]) -> Result<f64> {
    fn go<S: SellerTransducer>(s: &S, t: u32, value: f64, gamma: Discount, responses: &[bool]) -> Result<f64> {
        if t > s.horizon() {
            return Ok(0.0);
        }
        let accept = responses[t as usize - 1];
        let mut total = 0.0;
        for branch in s.enumerate_offers(t)? {
            let now = if accept { gamma.weight(t) * (value - branch.price.get()) } else { 0.0 };
            let mut next = branch.next;
            next.update(t, branch.price, accept);
            total += branch.prob * (now + go(&next, t + 1, value, gamma, responses)?);
        }
        Ok(total)
    }
    if responses.len() < seller.horizon() as usize {
        return Err(Error::invalid("response sequence shorter than the horizon"));
    }
    go(seller, 1, value, gamma, responses)
}

/// Optimal surplus by walking the full tree of snapshots: no memo table and
/// no state keys. Returns the value and the number of nodes visited.
pub fn brute_force_with_count<S: SellerTransducer>(seller: &S, value: f64, gamma: Discount) -> Result<(f64, u64)> {
    check_value(value)?;
    let horizon = seller.horizon();
    if horizon > BRUTE_FORCE_CAP {
        return Err(Error::ResourceLimit {
            horizon,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut nodes = 0;
    let v = walk(seller, 1, value, gamma, &mut nodes)?;
    Ok((v, nodes))
}

pub fn brute_force_best_response<S: SellerTransducer>(seller: &S, value: f64, gamma: Discount) -> Result<f64> {
    brute_force_with_count(seller, value, gamma).map(|(v, _)| v)
}

fn walk<S: SellerTransducer>(seller: &S, t: u32, value: f64, gamma: Discount, nodes: &mut u64) -> Result<f64> {
    if t > seller.horizon() {
        return Ok(0.0);
    }
    *nodes += 1;
    let mut total = 0.0;
    for branch in seller.enumerate_offers(t)? {
        let mut accept = branch.next.clone();
        accept.update(t, branch.price, true);
        let mut reject = branch.next;
        reject.update(t, branch.price, false);
        let a = gamma.weight(t) * (value - branch.price.get()) + walk(&accept, t + 1, value, gamma, nodes)?;
        let r = walk(&reject, t + 1, value, gamma, nodes)?;
        total += branch.prob * if a + ACCEPT_EPS >= r { a } else { r };
    }
    Ok(total)
}
