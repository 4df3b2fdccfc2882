//! Executable checks run by `stratprice verify`.
//!
//! Each check recomputes its expectation by an independent route (direct
//! summation, enumeration, unmemoized tree walk) and reports PASS/FAIL with
//! a short detail line.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buyers::BuyerSpec;
use crate::error::{Error, Result};
use crate::experiments::{run_episode, EpisodeOptions};
use crate::model::{
    benchmark_rate, buyer_surplus, discounted_horizon, seller_revenue, strategic_regret, Discount, Price,
    Transcript, ValueModel,
};
use crate::sellers::{MonotoneSeller, PhasedParams, PhasedSeller, Segment, Seller, SellerSpec, SellerTransducer};
use crate::solver::{
    brute_force_best_response, policy_path, sequence_surplus, solve_best_response, SolverOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Core,
    Sellers,
    Solver,
    Bounds,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Suite::Core),
            "sellers" => Ok(Suite::Sellers),
            "solver" => Ok(Suite::Solver),
            "bounds" => Ok(Suite::Bounds),
            "all" => Ok(Suite::All),
            _ => Err(Error::parse(s, "expected core|sellers|solver|bounds|all")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub fn run(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Core => core_checks(),
        Suite::Sellers => seller_checks(),
        Suite::Solver => solver_checks(),
        Suite::Bounds => bounds_checks(),
        Suite::All => [core_checks(), seller_checks(), solver_checks(), bounds_checks()].concat(),
    }
}

fn gamma(g: f64) -> Discount {
    Discount::new(g).expect("literal discount in (0, 1]")
}

fn failure(name: &str, err: Error) -> Check {
    Check::new(name, false, format!("error: {err}"))
}

// ---------------------------------------------------------------- core

pub fn core_checks() -> Vec<Check> {
    vec![
        check_discounted_horizon(),
        check_revenue_against_oracle(seller_revenue),
        check_surplus_against_oracle(),
        check_benchmark_against_enumeration(),
        check_regret_zero_at_benchmark(),
    ]
}

pub fn check_discounted_horizon() -> Check {
    let mut grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    grid.push(1.0);
    let mut worst = 0.0_f64;
    for &g in &grid {
        let d = gamma(g);
        let mut direct = 0.0;
        let mut w = 1.0;
        for t in 1..=1000u32 {
            direct += w;
            w *= g;
            let closed = discounted_horizon(d, t).expect("t >= 1");
            worst = worst.max((closed - direct).abs());
        }
    }
    Check::new(
        "discounted horizon closed form = direct sum",
        worst <= 1e-9,
        format!("max abs error {worst:e} over 20 gammas x T=1..1000"),
    )
}

fn random_transcript(rng: &mut ChaCha8Rng, len: u32) -> Transcript {
    let mut tr = Transcript::new(len);
    for _ in 0..len {
        let price = Price::new(rng.gen_range(0..=100) as f64 / 100.0).expect("in range");
        let value = rng.gen_range(0..=100) as f64 / 100.0;
        tr.push(price, rng.gen_bool(0.5), value).expect("within horizon");
    }
    tr
}

/// Compares `revenue` with an independent integer-cent recomputation on
/// random transcripts. A tampered revenue function fails this check.
pub fn check_revenue_against_oracle(revenue: impl Fn(&Transcript) -> f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let len = rng.gen_range(0..40);
        let tr = random_transcript(&mut rng, len);
        let cents: i64 = tr
            .records()
            .iter()
            .filter(|r| r.accepted)
            .map(|r| (r.price.get() * 100.0).round() as i64)
            .sum();
        worst = worst.max((revenue(&tr) - cents as f64 / 100.0).abs());
    }
    Check::new(
        "seller revenue = sum of accepted prices",
        worst <= 1e-9,
        format!("max abs error {worst:e} over 500 random transcripts"),
    )
}

pub fn check_surplus_against_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let len = rng.gen_range(1..40);
        let tr = random_transcript(&mut rng, len);
        let g = rng.gen_range(1..=20) as f64 / 20.0;
        let direct: f64 = tr
            .records()
            .iter()
            .map(|r| {
                if r.accepted {
                    g.powi(r.t as i32 - 1) * (r.value - r.price.get())
                } else {
                    0.0
                }
            })
            .sum();
        worst = worst.max((buyer_surplus(&tr, gamma(g)) - direct).abs());
    }
    Check::new(
        "buyer surplus = sum gamma^(t-1) a_t (v_t - p_t)",
        worst <= 1e-9,
        format!("max abs error {worst:e} over 500 random transcripts"),
    )
}

pub fn check_benchmark_against_enumeration() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut bad = 0;
    for _ in 0..300 {
        let n = rng.gen_range(1..6);
        let mut values: Vec<f64> = Vec::new();
        while values.len() < n {
            let v = rng.gen_range(0..=20) as f64 / 20.0;
            if !values.contains(&v) {
                values.push(v);
            }
        }
        values.sort_by(f64::total_cmp);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1..10) as f64).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let vm = match ValueModel::finite_support(values.clone(), probs.clone()) {
            Ok(vm) => vm,
            Err(_) => continue,
        };
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for &p in &values {
            let pr: f64 = values.iter().zip(&probs).filter(|(v, _)| **v >= p).map(|(_, q)| q).sum();
            if p * pr > best.1 + 1e-12 {
                best = (p, p * pr);
            }
        }
        let (p, rate) = benchmark_rate(&vm);
        if (rate - best.1).abs() > 1e-9 || (p.get() - best.0).abs() > 1e-12 {
            bad += 1;
        }
    }
    let fixed_ok = (0..=100).all(|i| {
        let v = i as f64 / 100.0;
        benchmark_rate(&ValueModel::Fixed(v)).1 == v
    });
    Check::new(
        "benchmark rate = brute-force monopoly price",
        bad == 0 && fixed_ok,
        format!("{bad} mismatches over 300 random supports; fixed values exact: {fixed_ok}"),
    )
}

pub fn check_regret_zero_at_benchmark() -> Check {
    let models = [
        ValueModel::Fixed(0.3),
        ValueModel::Fixed(1.0),
        ValueModel::uniform(vec![0.2, 0.4, 0.6, 0.8, 1.0]).expect("valid"),
        ValueModel::finite_support(vec![0.1, 0.9], vec![0.7, 0.3]).expect("valid"),
    ];
    let worst = models
        .iter()
        .flat_map(|vm| [1u32, 7, 1000].map(|t| strategic_regret(t as f64 * benchmark_rate(vm).1, vm, t).abs()))
        .fold(0.0, f64::max);
    Check::new(
        "regret vanishes at benchmark revenue",
        worst <= 1e-9,
        format!("max |regret| {worst:e}"),
    )
}

// ---------------------------------------------------------------- sellers

pub fn seller_checks() -> Vec<Check> {
    vec![
        check_offer_distributions(),
        check_state_keys(),
        check_offer_sampling(),
        check_monotone_non_decreasing(),
        check_monotone_non_increasing(),
        check_phased_structure(),
        check_ucb_revenue(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SellerKind {
    Fixed,
    BinarySearch,
    Monotone,
    Phased,
    Ucb,
    Exp3,
}

pub const ALL_KINDS: [SellerKind; 6] = [
    SellerKind::Fixed,
    SellerKind::BinarySearch,
    SellerKind::Monotone,
    SellerKind::Phased,
    SellerKind::Ucb,
    SellerKind::Exp3,
];

/// A random small configuration of `kind` with horizon at most `max_t`.
pub fn random_seller(kind: SellerKind, rng: &mut ChaCha8Rng, max_t: u32) -> Seller {
    let t = rng.gen_range(1..=max_t);
    let spec = match kind {
        SellerKind::Fixed => SellerSpec::Fixed(Price::new(rng.gen_range(0..=100) as f64 / 100.0).expect("in range")),
        SellerKind::BinarySearch => SellerSpec::BinarySearch,
        SellerKind::Monotone => SellerSpec::Monotone {
            beta: if rng.gen_bool(0.2) { None } else { Some(rng.gen_range(0..100) as f64 / 100.0) },
        },
        SellerKind::Phased => {
            let k = rng.gen_range(1..=3);
            SellerSpec::Phased(PhasedParams::new(k, rng.gen_range(2..=9) as f64 / 10.0, rng.gen_range(k..=k + 3)))
        }
        SellerKind::Ucb => SellerSpec::Ucb { k: rng.gen_range(1..=4) },
        SellerKind::Exp3 => SellerSpec::Exp3 {
            k: rng.gen_range(1..=3),
            eta: rng.gen_range(1..=20) as f64 / 20.0,
        },
    };
    spec.build(t).expect("random configurations are valid")
}

pub fn check_offer_distributions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
    let mut states = 0u64;
    let mut bad = Vec::new();
    for kind in ALL_KINDS {
        for _ in 0..200 {
            let mut s = random_seller(kind, &mut rng, 30);
            for t in 1..=s.horizon() {
                let branches = match s.enumerate_offers(t) {
                    Ok(b) => b,
                    Err(e) => {
                        bad.push(format!("{}: {e}", s.label()));
                        break;
                    }
                };
                states += 1;
                let total: f64 = branches.iter().map(|b| b.prob).sum();
                if (total - 1.0).abs() > 1e-12 || branches.iter().any(|b| !(0.0..=1.0).contains(&b.price.get())) {
                    bad.push(format!("{} t={t}: probabilities sum to {total}", s.label()));
                }
                let i = rng.gen_range(0..branches.len());
                let b = branches.into_iter().nth(i).expect("index in range");
                s = b.next;
                s.update(t, b.price, rng.gen_bool(0.5));
            }
        }
    }
    Check::new(
        "offer distributions are normalized and priced in [0,1]",
        bad.is_empty(),
        format!("{states} visited states, {} violations {}", bad.len(), bad.first().cloned().unwrap_or_default()),
    )
}

type Signature = Vec<(u64, u64, Vec<u8>, Vec<u8>, Vec<u8>)>;

fn signature<S: SellerTransducer>(s: &S, t: u32) -> Result<Signature> {
    s.enumerate_offers(t)?
        .into_iter()
        .map(|b| {
            let mut acc = b.next.clone();
            acc.update(t, b.price, true);
            let mut rej = b.next.clone();
            rej.update(t, b.price, false);
            Ok((b.prob.to_bits(), b.price.get().to_bits(), b.next.state_key(), acc.state_key(), rej.state_key()))
        })
        .collect()
}

/// Equal keys must mean identical offers and identical successor keys.
pub fn check_state_keys() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0011);
    let mut collisions = 0u64;
    let mut bad = 0u64;
    for kind in ALL_KINDS {
        for _ in 0..20 {
            let initial = random_seller(kind, &mut rng, 10);
            let mut seen: HashMap<(u32, Vec<u8>), Signature> = HashMap::new();
            for _ in 0..200 {
                let mut s = initial.clone();
                for t in 1..=s.horizon() {
                    let sig = signature(&s, t).expect("enumerable");
                    match seen.get(&(t, s.state_key())) {
                        Some(prev) => {
                            collisions += 1;
                            if *prev != sig {
                                bad += 1;
                            }
                        }
                        None => {
                            seen.insert((t, s.state_key()), sig);
                        }
                    }
                    let branches = s.enumerate_offers(t).expect("enumerable");
                    let i = rng.gen_range(0..branches.len());
                    let b = branches.into_iter().nth(i).expect("index in range");
                    s = b.next;
                    s.update(t, b.price, rng.gen_bool(0.5));
                }
            }
        }
    }
    Check::new(
        "state keys identify behavior",
        bad == 0,
        format!("{collisions} revisited states, {bad} inconsistent"),
    )
}

/// Empirical offer frequencies from `offer` vs `enumerate_offers`, 3 sigma.
pub fn check_offer_sampling() -> Check {
    let sellers = [
        SellerSpec::Phased(PhasedParams::new(3, 0.5, 6)).build(20).expect("valid"),
        SellerSpec::Exp3 { k: 4, eta: 0.3 }.build(20).expect("valid"),
        {
            // an EXP3 state with skewed weights
            let mut s = SellerSpec::Exp3 { k: 3, eta: 0.2 }.build(20).expect("valid");
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for t in 1..=5 {
                let p = s.offer(t, &mut rng).expect("within horizon");
                s.update(t, p, p.get() <= 0.7);
            }
            s
        },
    ];
    let n = 100_000u32;
    let mut worst_z = 0.0_f64;
    for (i, s) in sellers.iter().enumerate() {
        let t = if i == 2 { 6 } else { 1 };
        let branches = s.enumerate_offers(t).expect("enumerable");
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0012 + i as u64);
        let mut counts = vec![0u32; branches.len()];
        for _ in 0..n {
            let mut c = s.clone();
            let p = c.offer(t, &mut rng).expect("within horizon");
            let j = branches.iter().position(|b| b.price == p).expect("offered price is enumerated");
            counts[j] += 1;
        }
        for (b, c) in branches.iter().zip(&counts) {
            let sigma = (b.prob * (1.0 - b.prob) / n as f64).sqrt();
            if sigma > 0.0 {
                worst_z = worst_z.max((*c as f64 / n as f64 - b.prob).abs() / sigma);
            }
        }
    }
    Check::new(
        "offer draws follow enumerate_offers",
        worst_z <= 3.0,
        format!("largest deviation {worst_z:.2} sigma over 10^5 draws"),
    )
}

/// Price sequences of Monotone under random responses.
pub fn monotone_episodes(episodes: u32, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..episodes)
        .map(|_| {
            let horizon = rng.gen_range(1..=60);
            let mut s = if rng.gen_bool(0.3) {
                MonotoneSeller::tuned(horizon)
            } else {
                MonotoneSeller::new(rng.gen_range(0.0..1.0), horizon).expect("beta in [0,1)")
            };
            let p_accept = rng.gen_range(0.0..1.0);
            (1..=horizon)
                .map(|t| {
                    let p = s.offer(t, &mut rng).expect("within horizon");
                    s.update(t, p, rng.gen_bool(p_accept));
                    p.get()
                })
                .collect()
        })
        .collect()
}

/// Offered Monotone prices never go up.
pub fn check_monotone_non_increasing() -> Check {
    let runs = monotone_episodes(1000, 0x5eed_0020);
    let violations: usize = runs.iter().map(|ps| ps.windows(2).filter(|w| w[1] > w[0]).count()).sum();
    Check::new(
        "monotone: prices non-increasing in t",
        violations == 0,
        format!("{violations} violations over 1000 randomized-response episodes"),
    )
}

/// The non-decreasing form of the monotone price invariant.
pub fn check_monotone_non_decreasing() -> Check {
    let runs = monotone_episodes(1000, 0x5eed_0020);
    let violations: usize = runs.iter().map(|ps| ps.windows(2).filter(|w| w[1] < w[0]).count()).sum();
    Check::new(
        "monotone: prices non-decreasing in t",
        violations == 0,
        format!(
            "{violations} violations over 1000 randomized-response episodes \
             (the Monotone seller lowers its price after each rejection before the first acceptance)"
        ),
    )
}

/// Recomputes every exploit price from the transcript's exploration records.
pub fn phased_violations(seller: &PhasedSeller, tr: &Transcript) -> Vec<String> {
    let plan = seller.plan();
    let grid = plan.grid().points();
    let mut out = Vec::new();
    for r in tr.records() {
        if !grid.contains(&r.price) {
            out.push(format!("t={}: price {} off grid", r.t, r.price));
        }
    }
    for (i, phase) in plan.phases().iter().enumerate() {
        let rounds: Vec<_> = tr
            .records()
            .iter()
            .filter(|r| r.t >= phase.start && r.t <= phase.end())
            .collect();
        let explore: Vec<_> = rounds
            .iter()
            .filter(|r| plan.segment(r.t) == Segment::Explore { phase: i })
            .collect();
        if explore.len() as u32 == phase.samples * grid.len() as u32 {
            for p in &grid {
                let n = explore.iter().filter(|r| r.price == *p).count() as u32;
                if n != phase.samples {
                    out.push(format!("phase {i}: price {p} explored {n} times, expected {}", phase.samples));
                }
            }
        }
        let mut best = (grid[0], f64::NEG_INFINITY);
        for p in &grid {
            let accepted = explore.iter().filter(|r| r.price == *p && r.accepted).count();
            let estimate = p.get() * accepted as f64 / phase.samples as f64;
            if estimate > best.1 + 1e-12 {
                best = (*p, estimate);
            }
        }
        for r in rounds.iter().filter(|r| plan.segment(r.t) == Segment::Exploit { phase: i }) {
            if r.price != best.0 {
                out.push(format!("t={}: exploit price {} but empirical argmax {}", r.t, r.price, best.0));
            }
        }
    }
    out
}

/// One seeded Phased episode against a coin-flip or truthful buyer.
pub fn random_phased_episode(rng: &mut ChaCha8Rng) -> (PhasedSeller, Transcript) {
    let k = rng.gen_range(1..=5);
    let params = PhasedParams::new(k, rng.gen_range(2..=9) as f64 / 10.0, rng.gen_range(k..=k + 6));
    let horizon = rng.gen_range(1..=200);
    let initial = PhasedSeller::new(params, horizon).expect("valid parameters");
    let mut s = initial.clone();
    let value = rng.gen_range(0..=20) as f64 / 20.0;
    let coin = rng.gen_bool(0.5);
    let mut tr = Transcript::new(horizon);
    for t in 1..=horizon {
        let p = s.offer(t, rng).expect("within horizon");
        let a = if coin { rng.gen_bool(0.5) } else { p.get() <= value };
        s.update(t, p, a);
        tr.push(p, a, value).expect("within horizon");
    }
    (initial, tr)
}

pub fn check_phased_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0030);
    let mut violations = Vec::new();
    for _ in 0..1000 {
        let (seller, tr) = random_phased_episode(&mut rng);
        violations.extend(phased_violations(&seller, &tr));
    }
    Check::new(
        "phased: grid membership and exploit = empirical argmax",
        violations.is_empty(),
        format!(
            "{} violations over 1000 seeded episodes {}",
            violations.len(),
            violations.first().cloned().unwrap_or_default()
        ),
    )
}

pub fn check_ucb_revenue() -> Check {
    let horizon = 100_000;
    match run_episode(
        &SellerSpec::Ucb { k: 10 },
        &BuyerSpec::Truthful,
        &ValueModel::Fixed(0.63),
        Discount::NONE,
        horizon,
        0,
        &EpisodeOptions::default(),
    ) {
        Ok((_, r)) => {
            let avg = r.revenue / horizon as f64;
            Check::new(
                "ucb K=10 vs truthful v=0.63 earns >= 0.57 per round",
                avg >= 0.57,
                format!("average revenue {avg:.5} over T=100000"),
            )
        }
        Err(e) => failure("ucb revenue", e),
    }
}

// ---------------------------------------------------------------- solver

pub fn solver_checks() -> Vec<Check> {
    vec![check_manipulation_witness(), check_solver_oracle(), check_dominance()]
}

pub fn check_manipulation_witness() -> Check {
    let name = "binsearch v=0.7 gamma=1 T=3 witness";
    let seller = SellerSpec::BinarySearch.build(3).expect("valid");
    let report = match solve_best_response(&seller, 0.7, Discount::NONE, &SolverOptions::default()) {
        Ok(r) => r,
        Err(e) => return failure(name, e),
    };
    let path = policy_path(&report.policy, &seller).unwrap_or_default();
    let decisions: Vec<bool> = path.iter().map(|x| x.1).collect();
    let oracle = brute_force_best_response(&seller, 0.7, Discount::NONE).unwrap_or(f64::NAN);
    let ok = (report.optimal_surplus - 0.775).abs() <= 1e-12
        && (report.truthful_surplus - 0.275).abs() <= 1e-12
        && (report.expected_revenue_under_policy - 0.625).abs() <= 1e-12
        && (oracle - 0.775).abs() <= 1e-12
        && decisions == [false, true, true];
    Check::new(
        name,
        ok,
        format!(
            "optimal {:.12} truthful {:.12} revenue {:.12} decisions {:?}",
            report.optimal_surplus, report.truthful_surplus, report.expected_revenue_under_policy, decisions
        ),
    )
}

fn random_value_and_gamma(rng: &mut ChaCha8Rng) -> (f64, Discount) {
    let v = rng.gen_range(0..=100) as f64 / 100.0;
    let g = rng.gen_range(1..=20) as f64 / 20.0;
    (v, gamma(g))
}

/// Horizon limit per kind keeping the unmemoized walk cheap.
pub fn oracle_horizon(kind: SellerKind) -> u32 {
    match kind {
        SellerKind::Exp3 => 6,
        SellerKind::Phased => 8,
        _ => 10,
    }
}

pub fn check_solver_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0040);
    let mut worst = 0.0_f64;
    let mut configs = 0;
    for kind in ALL_KINDS {
        for _ in 0..100 {
            let s = random_seller(kind, &mut rng, oracle_horizon(kind));
            let (v, g) = random_value_and_gamma(&mut rng);
            let memo = solve_best_response(&s, v, g, &SolverOptions::default());
            let tree = brute_force_best_response(&s, v, g);
            match (memo, tree) {
                (Ok(m), Ok(b)) => worst = worst.max((m.optimal_surplus - b).abs()),
                (Err(e), _) | (_, Err(e)) => return failure("solver = brute force", e),
            }
            configs += 1;
        }
    }
    Check::new(
        "solver = brute force oracle",
        worst <= 1e-9,
        format!("max abs difference {worst:e} over {configs} configurations"),
    )
}

pub fn check_dominance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0050);
    let mut bad = Vec::new();
    let mut myopic_bad = 0;
    for kind in ALL_KINDS {
        for _ in 0..10 {
            let s = random_seller(kind, &mut rng, oracle_horizon(kind));
            let (v, g) = random_value_and_gamma(&mut rng);
            let r = match solve_best_response(&s, v, g, &SolverOptions::default()) {
                Ok(r) => r,
                Err(e) => return failure("dominance", e),
            };
            if r.optimal_surplus < r.truthful_surplus - 1e-12 {
                bad.push(format!("{} below truthful", s.label()));
            }
            for _ in 0..200 {
                let seq: Vec<bool> = (0..s.horizon()).map(|_| rng.gen_bool(0.5)).collect();
                let alt = sequence_surplus(&s, v, g, &seq).expect("enumerable");
                if r.optimal_surplus < alt - 1e-12 {
                    bad.push(format!("{} below a fixed response sequence", s.label()));
                }
            }
            if kind == SellerKind::Fixed {
                let path = policy_path(&r.policy, &s).expect("deterministic");
                if path.iter().any(|(p, a)| *a != (p.get() <= v))
                    || r.policy.entries().any(|(_, _, a)| a != (path[0].0.get() <= v))
                {
                    myopic_bad += 1;
                }
            }
        }
    }
    Check::new(
        "best response dominates truthful and random play; myopic vs fixed prices",
        bad.is_empty() && myopic_bad == 0,
        format!("{} dominance violations, {myopic_bad} myopic mismatches", bad.len()),
    )
}

// ---------------------------------------------------------------- bounds

pub const BOUNDS_GAMMAS: [f64; 4] = [0.25, 0.5, 0.9, 1.0];
pub const LINEAR_HORIZONS: [u32; 3] = [1000, 2000, 4000];
pub const EXACT_HORIZONS: [u32; 3] = [8, 10, 12];
pub const BOUNDS_VALUE: f64 = 0.5;

/// Phased configuration for exact solves at T <= 12. The horizon-derived
/// default grid there is {0.5, 1}, which leaves a v = 0.5 buyer nothing to
/// gain by misreporting.
pub fn small_phased() -> SellerSpec {
    SellerSpec::Phased(PhasedParams {
        k: Some(4),
        first_phase: Some(4),
        ..PhasedParams::default()
    })
}

pub fn bounds_checks() -> Vec<Check> {
    vec![
        check_linear_regret(&SellerSpec::Monotone { beta: None }),
        check_linear_regret(&SellerSpec::Phased(PhasedParams::default())),
        check_exact_growth(&SellerSpec::Monotone { beta: None }),
        check_exact_growth(&small_phased()),
        check_discount_monotonicity(),
        regret_table(),
    ]
}

/// Regret per round of `threshold:opt` at v = 0.5.
pub fn threshold_regret_rate(seller: &SellerSpec, g: Discount, horizon: u32) -> Result<f64> {
    let (_, r) = run_episode(
        seller,
        &BuyerSpec::ThresholdOpt,
        &ValueModel::Fixed(BOUNDS_VALUE),
        g,
        horizon,
        0,
        &EpisodeOptions::default(),
    )?;
    Ok(r.regret / horizon as f64)
}

pub fn check_linear_regret(seller: &SellerSpec) -> Check {
    let name = format!("{seller}: linear regret without discounting (threshold:opt)");
    let mut rates = Vec::new();
    for t in LINEAR_HORIZONS {
        match threshold_regret_rate(seller, Discount::NONE, t) {
            Ok(r) => rates.push(r),
            Err(e) => return failure(&name, e),
        }
    }
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Check::new(
        name,
        lo >= 0.05 && (hi - lo) / lo < 0.10,
        format!("regret/T at T=1000,2000,4000: {:.4} {:.4} {:.4}", rates[0], rates[1], rates[2]),
    )
}

pub fn exact_regret(seller: &SellerSpec, g: Discount, horizon: u32) -> Result<f64> {
    let s = seller.build(horizon)?;
    Ok(solve_best_response(&s, BOUNDS_VALUE, g, &SolverOptions::default())?.regret_under_policy)
}

pub fn check_exact_growth(seller: &SellerSpec) -> Check {
    let name = format!("{seller}: best-response regret grows linearly at gamma=1");
    let mut regrets = Vec::new();
    for t in EXACT_HORIZONS {
        match exact_regret(seller, Discount::NONE, t) {
            Ok(r) => regrets.push(r),
            Err(e) => return failure(&name, e),
        }
    }
    let ratio = regrets[2] / regrets[0];
    Check::new(
        name,
        ratio >= 0.8 * 12.0 / 8.0,
        format!(
            "regret at T=8,10,12: {:.6} {:.6} {:.6}; ratio(12/8) {:.4} (need >= 1.2)",
            regrets[0], regrets[1], regrets[2], ratio
        ),
    )
}

/// Exact best-response regret of tuned Monotone at T=12 for each gamma.
pub fn discount_table() -> Result<Vec<(f64, f64)>> {
    BOUNDS_GAMMAS
        .iter()
        .map(|&g| Ok((g, exact_regret(&SellerSpec::Monotone { beta: None }, gamma(g), 12)?)))
        .collect()
}

pub fn check_discount_monotonicity() -> Check {
    let name = "monotone T=12: regret(gamma=1) >= regret(gamma=0.25)";
    match discount_table() {
        Ok(table) => {
            let lines: Vec<String> = table.iter().map(|(g, r)| format!("gamma={g}: {r:.9}")).collect();
            Check::new(name, table[3].1 >= table[0].1, lines.join(", "))
        }
        Err(e) => failure(name, e),
    }
}

/// Informational table; passes whenever it can be computed.
pub fn regret_table() -> Check {
    let mut lines = vec![format!("{:<28} {:>6} {:>12} {:>16}", "seller", "gamma", "regret/T", "exact regret")];
    lines.push(format!("{:<28} {:>6} {:>12} {:>16}", "", "", "(T=1000)", "(T=12)"));
    for seller in [
        SellerSpec::Monotone { beta: None },
        SellerSpec::Phased(PhasedParams::default()),
        small_phased(),
    ] {
        for g in BOUNDS_GAMMAS {
            let rate = threshold_regret_rate(&seller, gamma(g), 1000);
            let exact = exact_regret(&seller, gamma(g), 12);
            match (rate, exact) {
                (Ok(rate), Ok(exact)) => {
                    lines.push(format!("{:<28} {:>6} {:>12.6} {:>16.9}", seller.to_string(), g, rate, exact))
                }
                (Err(e), _) | (_, Err(e)) => return failure("regret table", e),
            }
        }
    }
    Check::new("regret table across gamma", true, format!("\n{}", lines.join("\n")))
}
