//! Synthetic market generation.
//!
//! Produces schema-compatible quarter-hour tables: hourly day-ahead prices
//! repeated across quarters, per-quarter balancing clearing prices, an
//! autocorrelated regulation-state process, and a handful of fundamental
//! series. Everything is a pure function of the seed.

use std::f64::consts::PI;

use chrono::{DateTime, TimeZone, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::table::{MarketTable, RegulationState, Resolution};
use super::DataError;

/// One component of the day-ahead price mixture.
#[derive(Debug, Clone, Copy)]
pub struct PriceRegime {
    pub weight: f64,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub days: usize,
    pub seed: u64,
    /// First day of the generated period (UTC midnight).
    pub start_year: i32,
    pub start_day_of_year: u32,
    /// Marginal probability of the Shortage state.
    pub shortage_base_prob: f64,
    /// Marginal probability of the Balanced state.
    pub balanced_prob: f64,
    /// Probability of repeating the previous quarter's state instead of
    /// drawing fresh; the marginal distribution is unchanged.
    pub state_persistence: f64,
    /// Day-ahead hourly price mixture.
    pub price_regimes: Vec<PriceRegime>,
    /// Bid clearing sits `bid_depth` below the DA price on average.
    pub bid_depth_mean: f64,
    pub bid_depth_std: f64,
    /// Ask clearing sits `ask_depth` above the DA price on average.
    pub ask_depth_mean: f64,
    pub ask_depth_std: f64,
    /// Extra clearing depth applied on the executing side of the state
    /// (deeper discounts in surplus, higher premia in shortage).
    pub state_extra_depth: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            days: 30,
            seed: 0,
            start_year: 2015,
            start_day_of_year: 1,
            shortage_base_prob: 0.4,
            balanced_prob: 0.05,
            state_persistence: 0.7,
            price_regimes: vec![
                PriceRegime { weight: 0.8, mean: 45.0, stddev: 12.0 },
                PriceRegime { weight: 0.2, mean: 110.0, stddev: 35.0 },
            ],
            bid_depth_mean: 40.0,
            bid_depth_std: 30.0,
            ask_depth_mean: 40.0,
            ask_depth_std: 30.0,
            state_extra_depth: 40.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), DataError> {
        let bad = |reason: &str| Err(DataError::InvalidConfig { reason: reason.to_string() });
        if self.days < 1 {
            return bad("days must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.shortage_base_prob) {
            return bad("shortage_base_prob must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.balanced_prob) {
            return bad("balanced_prob must lie in [0, 1]");
        }
        if self.shortage_base_prob + self.balanced_prob > 1.0 + 1e-12 {
            return bad("shortage_base_prob + balanced_prob must not exceed 1");
        }
        if !(0.0..1.0).contains(&self.state_persistence) {
            return bad("state_persistence must lie in [0, 1)");
        }
        if self.price_regimes.is_empty() {
            return bad("at least one price regime is required");
        }
        for r in &self.price_regimes {
            if r.weight <= 0.0 || !r.weight.is_finite() {
                return bad("regime weights must be positive");
            }
            if r.stddev < 0.0 || !r.stddev.is_finite() || !r.mean.is_finite() {
                return bad("regime mean/stddev must be finite, stddev >= 0");
            }
        }
        for v in [
            self.bid_depth_mean,
            self.bid_depth_std,
            self.ask_depth_mean,
            self.ask_depth_std,
            self.state_extra_depth,
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad("clearing depth parameters must be finite and non-negative");
            }
        }
        Ok(())
    }

    pub fn start(&self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(self.start_year, 1, 1, 0, 0, 0).unwrap()
            + chrono::Duration::days(self.start_day_of_year as i64 - 1)
    }
}

fn draw_state(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> RegulationState {
    let u: f64 = rng.random();
    if u < cfg.shortage_base_prob {
        RegulationState::Shortage
    } else if u < cfg.shortage_base_prob + cfg.balanced_prob {
        RegulationState::Balanced
    } else {
        RegulationState::Surplus
    }
}

fn draw_da_price(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> f64 {
    let total: f64 = cfg.price_regimes.iter().map(|r| r.weight).sum();
    let mut u: f64 = rng.random::<f64>() * total;
    let mut regime = cfg.price_regimes[0];
    for r in &cfg.price_regimes {
        if u < r.weight {
            regime = *r;
            break;
        }
        u -= r.weight;
    }
    if regime.stddev == 0.0 {
        return regime.mean;
    }
    let normal = Normal::new(regime.mean, regime.stddev).unwrap();
    normal.sample(rng)
}

/// Generate a quarter-hour market table, deterministic in the seed.
pub fn generate_synthetic_market(cfg: &SynthConfig) -> Result<MarketTable, DataError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let quarters = cfg.days * 96;
    let start = cfg.start();

    let mut timestamps = Vec::with_capacity(quarters);
    let mut da_price = Vec::with_capacity(quarters);
    let mut bid = Vec::with_capacity(quarters);
    let mut ask = Vec::with_capacity(quarters);
    let mut states = Vec::with_capacity(quarters);
    let mut load = Vec::with_capacity(quarters);
    let mut solar = Vec::with_capacity(quarters);
    let mut wind = Vec::with_capacity(quarters);
    let mut ntc = Vec::with_capacity(quarters);
    let mut residual = Vec::with_capacity(quarters);

    let depth = Normal::new(0.0, 1.0).unwrap();
    let mut hour_price = 0.0;
    let mut prev_state: Option<RegulationState> = None;
    let mut wind_level: f64 = 2500.0;

    for q in 0..quarters {
        let t = start + chrono::Duration::minutes(15 * q as i64);
        timestamps.push(t);

        if q % 4 == 0 {
            hour_price = draw_da_price(&mut rng, cfg);
        }
        da_price.push(hour_price);

        let state = match prev_state {
            Some(s) if rng.random::<f64>() < cfg.state_persistence => s,
            _ => draw_state(&mut rng, cfg),
        };
        prev_state = Some(state);
        states.push(state);

        let bid_extra = if state == RegulationState::Surplus { cfg.state_extra_depth } else { 0.0 };
        let ask_extra = if state == RegulationState::Shortage { cfg.state_extra_depth } else { 0.0 };
        let bid_depth =
            (cfg.bid_depth_mean + bid_extra + cfg.bid_depth_std * depth.sample(&mut rng)).abs();
        let ask_depth =
            (cfg.ask_depth_mean + ask_extra + cfg.ask_depth_std * depth.sample(&mut rng)).abs();
        bid.push(Some(hour_price - bid_depth));
        ask.push(Some(hour_price + ask_depth));

        // Fundamentals: smooth daily shapes plus noise.
        let day_frac = (q % 96) as f64 / 96.0;
        let l = 10_000.0 + 2_000.0 * (2.0 * PI * (day_frac - 0.25)).sin()
            + 300.0 * depth.sample(&mut rng);
        let s = (4_000.0 * (PI * (day_frac - 0.25) * 2.0).sin()).max(0.0)
            * if (0.25..0.75).contains(&day_frac) { 1.0 } else { 0.0 }
            + 50.0 * depth.sample(&mut rng).abs();
        wind_level = (wind_level + 150.0 * depth.sample(&mut rng)).clamp(0.0, 6_000.0);
        let n = 2_000.0 + 100.0 * depth.sample(&mut rng);
        load.push(l);
        solar.push(s);
        wind.push(wind_level);
        ntc.push(n);
        residual.push(l - s - wind_level);
    }

    MarketTable::new(
        Resolution::QuarterHourly,
        timestamps,
        da_price,
        bid,
        ask,
        states,
        vec![
            ("load".into(), load),
            ("solar".into(), solar),
            ("wind".into(), wind),
            ("ntc".into(), ntc),
            ("residual_load".into(), residual),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_identical_tables() {
        let cfg = SynthConfig { days: 3, seed: 42, ..Default::default() };
        let a = generate_synthetic_market(&cfg).unwrap();
        let b = generate_synthetic_market(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_differs() {
        let a = generate_synthetic_market(&SynthConfig { days: 2, seed: 1, ..Default::default() })
            .unwrap();
        let b = generate_synthetic_market(&SynthConfig { days: 2, seed: 2, ..Default::default() })
            .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn degenerate_shortage_probability() {
        let cfg = SynthConfig {
            days: 2,
            seed: 7,
            shortage_base_prob: 1.0,
            balanced_prob: 0.0,
            ..Default::default()
        };
        let t = generate_synthetic_market(&cfg).unwrap();
        assert!(t.regulation_state().iter().all(|s| *s == RegulationState::Shortage));
    }

    #[test]
    fn shortage_frequency_matches_base_prob() {
        let cfg = SynthConfig {
            days: 365,
            seed: 9,
            shortage_base_prob: 0.4,
            ..Default::default()
        };
        let t = generate_synthetic_market(&cfg).unwrap();
        let count = t
            .regulation_state()
            .iter()
            .filter(|s| **s == RegulationState::Shortage)
            .count();
        let freq = count as f64 / t.len() as f64;
        assert!((freq - 0.4).abs() <= 0.02, "empirical shortage frequency {freq}");
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SynthConfig { days: 0, ..Default::default() };
        assert!(matches!(
            generate_synthetic_market(&cfg),
            Err(DataError::InvalidConfig { .. })
        ));
        let cfg = SynthConfig { shortage_base_prob: 0.9, balanced_prob: 0.2, ..Default::default() };
        assert!(generate_synthetic_market(&cfg).is_err());
    }

    #[test]
    fn da_price_constant_within_hour() {
        let t = generate_synthetic_market(&SynthConfig { days: 1, seed: 3, ..Default::default() })
            .unwrap();
        for h in 0..24 {
            let p = t.da_price()[h * 4];
            for q in 1..4 {
                assert_eq!(t.da_price()[h * 4 + q], p);
            }
        }
    }

    #[test]
    fn spread_never_inverted() {
        let t = generate_synthetic_market(&SynthConfig { days: 5, seed: 5, ..Default::default() })
            .unwrap();
        for i in 0..t.len() {
            assert!(t.bm_bid_clearing()[i].unwrap() <= t.bm_ask_clearing()[i].unwrap());
        }
    }
}
