//! Desk-scale laboratory for bi-level power arbitrage between a day-ahead
//! market and a quarter-hour balancing market.
//!
//! - `market_data`: table loading/validation, lagging, windowing, synthetic
//!   generation, and the logistic shortage/surplus predictor.
//! - `env`: one-hour episodes with paid-as-bid clearing, electrolyzer
//!   feasibility, hydrogen settlement, and the reward variants.
//! - `policies`: benchmark policies P1-P5 and baseline P&L simulation.
//! - `rl`: from-scratch networks with exact gradients and the dual DDPG
//!   agents.
//! - `walkforward`: sliding train/test folds and fold reports.
//! - `report`: P&L curves, histograms, traces, summaries, SVG renders.

pub mod env;
pub mod manifest;
pub mod market_data;
pub mod policies;
pub mod report;
pub mod rl;
pub mod walkforward;
