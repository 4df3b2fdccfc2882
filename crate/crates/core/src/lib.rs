//! Repeated posted-price auctions between a revenue-maximizing seller and a
//! buyer who discounts future surplus.
//!
//! - [`model`]: prices, discounting, value models, transcripts, regret.
//! - [`sellers`]: seller algorithms as state transducers.
//! - [`buyers`]: truthful, threshold and policy-replay buyers.
//! - [`solver`]: exact best response by memoized backward induction.
//! - [`experiments`]: episodes, sweeps, CSV and SVG output.
//! - [`verify`]: executable checks behind `stratprice verify`.

pub mod buyers;
pub mod error;
pub mod experiments;
pub mod model;
pub mod seed;
pub mod sellers;
pub mod solver;
pub mod verify;

pub use buyers::{BuyerSpec, BuyerStrategy, PolicyBuyer, PolicyTable, ThresholdBuyer, TruthfulBuyer};
pub use error::{Error, Result};
pub use experiments::{run_episode, run_sweep, summarize, EpisodeOptions, ExperimentConfig, SweepRow};
pub use model::{
    benchmark_rate, buyer_surplus, discounted_horizon, seller_revenue, strategic_regret, Discount, EpisodeResult,
    Price, RoundRecord, Transcript, ValueModel,
};
pub use sellers::{PriceGrid, Seller, SellerSpec, SellerTransducer};
pub use solver::{brute_force_best_response, regret_under_best_response, solve_best_response, SolveReport, SolverOptions};
