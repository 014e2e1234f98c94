//! One-hour episode machinery over a quarter-hour market table.
//!
//! An episode is one DA step followed by four balancing steps. The
//! environment holds two tables: the raw table supplying per-quarter price
//! contexts, and a feature table (typically lag-built) supplying agent
//! observations. Episodes are replayed against immutable tables, so
//! distinct episodes can run concurrently.

use chrono::{DateTime, Timelike, Utc};

use crate::market_data::{
    assemble_observation, MarketTable, ObservationSpec, Resolution, Standardizer,
};

use super::clearing::{clear_orders, feasible_volume_bounds};
use super::reward::{quarter_reward, RewardMode};
use super::types::{
    BmOrderSpec, DaAction, EpisodeState, Execution, Phase, PriceContext, RewardBreakdown,
    DA_MAX_MWH, DA_MIN_MWH, HYDROGEN_PRICE,
};
use super::EnvError;

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub hydrogen_price: f64,
    /// Charge the full hourly DA cost in every quarter instead of its
    /// quarter share.
    pub literal_eq1: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { hydrogen_price: HYDROGEN_PRICE, literal_eq1: false }
    }
}

/// Outcome of one balancing step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub breakdown: RewardBreakdown,
    pub execution: Execution,
    /// Learning reward under the active mode (shaped when applicable).
    pub reward: f64,
    /// Observation for the next quarter, absent once the hour is done.
    pub next_observation: Option<Vec<f64>>,
    pub done: bool,
}

#[derive(Debug)]
pub struct MarketEnv {
    raw: MarketTable,
    features: MarketTable,
    da_spec: ObservationSpec,
    bm_spec: ObservationSpec,
    da_standardizer: Option<Standardizer>,
    bm_standardizer: Option<Standardizer>,
    cfg: EnvConfig,
}

/// Fixed affine scalings for the values appended to balancing observations:
/// the DA decision, its settlement price, and the quarter cursor.
fn bm_extras(s_da: f64, p_da: f64, quarter: usize) -> [f64; 3] {
    [(s_da - 110.0) / 90.0, p_da / 100.0, quarter as f64 / 3.0]
}

/// Number of appended balancing-observation entries.
pub const BM_EXTRA_DIM: usize = 3;

impl MarketEnv {
    pub fn new(
        raw: MarketTable,
        features: MarketTable,
        da_spec: ObservationSpec,
        bm_spec: ObservationSpec,
        cfg: EnvConfig,
    ) -> Result<Self, EnvError> {
        if raw.resolution() != Resolution::QuarterHourly {
            return Err(EnvError::RawTableNotQuarterHourly);
        }
        if raw.start().minute() != 0 {
            return Err(EnvError::RawTableNotHourAligned);
        }
        if features.resolution() != Resolution::QuarterHourly {
            return Err(EnvError::FeatureTableNotQuarterHourly);
        }
        if !cfg.hydrogen_price.is_finite() {
            return Err(EnvError::InvalidConfig { reason: "hydrogen price must be finite".into() });
        }
        Ok(Self { raw, features, da_spec, bm_spec, da_standardizer: None, bm_standardizer: None, cfg })
    }

    /// Attach frozen feature statistics (fitted on a training window).
    pub fn with_standardizers(
        mut self,
        da: Option<Standardizer>,
        bm: Option<Standardizer>,
    ) -> Self {
        self.da_standardizer = da;
        self.bm_standardizer = bm;
        self
    }

    pub fn raw(&self) -> &MarketTable {
        &self.raw
    }

    pub fn features(&self) -> &MarketTable {
        &self.features
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn da_spec(&self) -> &ObservationSpec {
        &self.da_spec
    }

    pub fn bm_spec(&self) -> &ObservationSpec {
        &self.bm_spec
    }

    /// Observation dimensions as (day-ahead, balancing); recorded in run
    /// manifests.
    pub fn observation_dims(&self) -> (usize, usize) {
        (self.da_spec.dimension(), self.bm_spec.dimension() + BM_EXTRA_DIM)
    }

    /// Number of complete hours in the raw table.
    pub fn num_hours(&self) -> usize {
        self.raw.len() / 4
    }

    pub fn hour_timestamp(&self, hour_index: usize) -> Result<DateTime<Utc>, EnvError> {
        if hour_index * 4 >= self.raw.len() {
            return Err(EnvError::HourOutOfRange { hour_index });
        }
        Ok(self.raw.timestamps()[hour_index * 4])
    }

    /// Hours that can actually be played: a complete hour of raw data plus
    /// enough feature history for both observation windows.
    pub fn valid_hours(&self) -> Vec<usize> {
        (0..self.num_hours()).filter(|h| self.hour_is_valid(*h)).collect()
    }

    /// Valid hours whose start falls inside `[start, end)`.
    pub fn valid_hours_in(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> Vec<usize> {
        (0..self.num_hours())
            .filter(|h| {
                let t = self.raw.timestamps()[h * 4];
                t >= start && t < end && self.hour_is_valid(*h)
            })
            .collect()
    }

    fn hour_is_valid(&self, hour_index: usize) -> bool {
        let t0 = self.raw.timestamps()[hour_index * 4];
        if assemble_observation(&self.features, t0, &self.da_spec).is_err() {
            return false;
        }
        (0..4).all(|q| {
            let t = self.raw.timestamps()[hour_index * 4 + q];
            assemble_observation(&self.features, t, &self.bm_spec).is_ok()
        })
    }

    pub fn price_context(&self, hour_index: usize, quarter: usize) -> Result<PriceContext, EnvError> {
        let row = hour_index * 4 + quarter;
        if quarter > 3 || row >= self.raw.len() {
            return Err(EnvError::HourOutOfRange { hour_index });
        }
        Ok(PriceContext {
            p_da: self.raw.da_price()[row],
            p_h: self.cfg.hydrogen_price,
            bm_bid_clearing: self.raw.bm_bid_clearing()[row],
            bm_ask_clearing: self.raw.bm_ask_clearing()[row],
            regulation_state: self.raw.regulation_state()[row],
        })
    }

    fn da_observation(&self, hour_index: usize) -> Result<Vec<f64>, EnvError> {
        let t = self.raw.timestamps()[hour_index * 4];
        let mut obs = assemble_observation(&self.features, t, &self.da_spec)?;
        if let Some(s) = &self.da_standardizer {
            s.apply_windowed(&mut obs);
        }
        Ok(obs)
    }

    fn bm_observation(&self, state: &EpisodeState, quarter: usize) -> Result<Vec<f64>, EnvError> {
        let row = state.hour_index * 4 + quarter;
        let t = self.raw.timestamps()[row];
        let mut obs = assemble_observation(&self.features, t, &self.bm_spec)?;
        if let Some(s) = &self.bm_standardizer {
            s.apply_windowed(&mut obs);
        }
        let p_da = self.raw.da_price()[row];
        obs.extend_from_slice(&bm_extras(state.s_da, p_da, quarter));
        Ok(obs)
    }

    /// Start an episode at an hour: fresh state at quarter zero plus the
    /// day-ahead observation. Resets at the same hour are identical.
    pub fn reset(&self, hour_index: usize) -> Result<(EpisodeState, Vec<f64>), EnvError> {
        if hour_index * 4 >= self.raw.len() {
            return Err(EnvError::HourOutOfRange { hour_index });
        }
        if hour_index * 4 + 4 > self.raw.len() {
            return Err(EnvError::IncompleteHour { hour_index });
        }
        let obs = self.da_observation(hour_index)?;
        Ok((EpisodeState::new(hour_index), obs))
    }

    /// Record the DA decision and emit the first balancing observation.
    /// Out-of-bounds positions are clipped and counted, not fatal.
    pub fn step_day_ahead(
        &self,
        state: &mut EpisodeState,
        s_da: f64,
    ) -> Result<Vec<f64>, EnvError> {
        if state.phase != Phase::AwaitingDayAhead {
            return Err(EnvError::DoubleDaStep);
        }
        let (action, clipped) = DaAction::clipped(s_da)?;
        if clipped {
            state.clip_events += 1;
        }
        state.s_da = action.s_da;
        state.e_da = action.s_da / 4.0;
        state.phase = Phase::Balancing { quarter: 0 };
        self.bm_observation(state, 0)
    }

    /// Clear one balancing quarter and advance. `baselines` are the
    /// same-interval benchmark quarter P&Ls required by the shaping modes
    /// (ignored otherwise). Reported cumulative P&L always accumulates the
    /// unshaped quarter value.
    pub fn step_balancing(
        &self,
        state: &mut EpisodeState,
        order: &BmOrderSpec,
        mode: RewardMode,
        baselines: &[f64],
    ) -> Result<StepOutcome, EnvError> {
        let quarter = match state.phase {
            Phase::Balancing { quarter } => quarter,
            Phase::AwaitingDayAhead => return Err(EnvError::DaStepMissing),
            Phase::Done => return Err(EnvError::EpisodeDone),
        };
        let ctx = self.price_context(state.hour_index, quarter)?;
        let bounds = feasible_volume_bounds(state);
        let execution = clear_orders(order, bounds, &ctx)?;
        let shaping_term = if mode.uses_shaping() {
            if baselines.is_empty() {
                return Err(EnvError::EmptyBaselines);
            }
            baselines.iter().sum::<f64>() / baselines.len() as f64
        } else {
            0.0
        };
        let breakdown = quarter_reward(
            &execution,
            state.e_da,
            state.s_da,
            &ctx,
            self.cfg.literal_eq1,
            shaping_term,
        )?;
        state.quarter_rewards.push(breakdown.unshaped());
        state.shaped_rewards.push(breakdown.total);
        state.cumulative_pnl += breakdown.unshaped();

        let done = quarter == 3;
        let next_observation = if done {
            state.phase = Phase::Done;
            None
        } else {
            state.phase = Phase::Balancing { quarter: quarter + 1 };
            Some(self.bm_observation(state, quarter + 1)?)
        };
        Ok(StepOutcome { breakdown, execution, reward: breakdown.total, next_observation, done })
    }

    /// Clip a balancing quote into bounds, counting clip events.
    pub fn clip_bm_prices(
        &self,
        state: &mut EpisodeState,
        p_bid: f64,
        p_ask: f64,
    ) -> Result<super::types::BmAction, EnvError> {
        let (action, clipped) = super::types::BmAction::clipped(p_bid, p_ask)?;
        if clipped {
            state.clip_events += 1;
        }
        Ok(action)
    }
}

/// Clamp helper for day-ahead grids and tests.
pub fn da_bounds() -> (f64, f64) {
    (DA_MIN_MWH, DA_MAX_MWH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::types::BmAction;
    use crate::market_data::{
        build_lagged_features, generate_synthetic_market, LagSpec, SynthConfig,
    };
    use crate::market_data::{MarketLevel, ObservationSpec};

    fn make_env(days: usize, seed: u64) -> MarketEnv {
        let raw = generate_synthetic_market(&SynthConfig { days, seed, ..Default::default() })
            .unwrap();
        let features = build_lagged_features(
            &raw,
            &LagSpec::new()
                .with("da_price", 0)
                .with("bm_bid_clearing", 96)
                .with("bm_ask_clearing", 96)
                .with("regulation_state", 1),
        )
        .unwrap();
        let da_spec = ObservationSpec::new(
            MarketLevel::DayAhead,
            vec!["da_price".into(), "bm_ask_clearing_lag96".into()],
            1,
        );
        let bm_spec = ObservationSpec::new(
            MarketLevel::Balancing,
            vec!["da_price".into(), "regulation_state_lag1".into()],
            0,
        );
        MarketEnv::new(raw, features, da_spec, bm_spec, EnvConfig::default()).unwrap()
    }

    #[test]
    fn reset_is_deterministic() {
        let env = make_env(4, 2);
        let hours = env.valid_hours();
        assert!(!hours.is_empty());
        let h = hours[0];
        let (s1, o1) = env.reset(h).unwrap();
        let (s2, o2) = env.reset(h).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(s1.cumulative_pnl, 0.0);
        assert_eq!(s1.phase, Phase::AwaitingDayAhead);
        assert_eq!(s2.quarter_rewards.len(), 0);
    }

    #[test]
    fn hour_out_of_range_and_incomplete() {
        let env = make_env(2, 3);
        assert!(matches!(env.reset(10_000), Err(EnvError::HourOutOfRange { .. })));
        // Build a table with a trailing partial hour.
        let raw = env.raw().slice(0, env.raw().len() - 1).unwrap();
        let features = env.features().clone();
        let env2 = MarketEnv::new(
            raw,
            features,
            env.da_spec().clone(),
            env.bm_spec().clone(),
            EnvConfig::default(),
        )
        .unwrap();
        let last_hour = (env2.raw().len() - 1) / 4;
        assert!(matches!(env2.reset(last_hour), Err(EnvError::IncompleteHour { .. })));
    }

    #[test]
    fn double_da_step_rejected() {
        let env = make_env(3, 4);
        let h = env.valid_hours()[0];
        let (mut state, _) = env.reset(h).unwrap();
        env.step_day_ahead(&mut state, 110.0).unwrap();
        assert_eq!(state.e_da, 27.5);
        assert!(matches!(env.step_day_ahead(&mut state, 100.0), Err(EnvError::DoubleDaStep)));
    }

    #[test]
    fn da_clipping_logged() {
        let env = make_env(3, 5);
        let h = env.valid_hours()[0];
        let (mut state, _) = env.reset(h).unwrap();
        env.step_day_ahead(&mut state, 210.0).unwrap();
        assert_eq!(state.s_da, 200.0);
        assert_eq!(state.clip_events, 1);
    }

    #[test]
    fn bm_before_da_rejected() {
        let env = make_env(3, 6);
        let h = env.valid_hours()[0];
        let (mut state, _) = env.reset(h).unwrap();
        let order = BmOrderSpec::Single(BmAction::new(0.0, 0.0).unwrap());
        assert!(matches!(
            env.step_balancing(&mut state, &order, RewardMode::Raw, &[]),
            Err(EnvError::DaStepMissing)
        ));
    }

    #[test]
    fn episode_runs_exactly_four_quarters() {
        let env = make_env(3, 7);
        let h = env.valid_hours()[0];
        let (mut state, _) = env.reset(h).unwrap();
        env.step_day_ahead(&mut state, 100.0).unwrap();
        let order = BmOrderSpec::Single(BmAction::new(-150.0, 190.0).unwrap());
        for q in 0..4 {
            let out = env.step_balancing(&mut state, &order, RewardMode::Raw, &[]).unwrap();
            assert_eq!(out.done, q == 3);
            assert_eq!(out.next_observation.is_none(), q == 3);
        }
        assert_eq!(state.quarter_rewards.len(), 4);
        assert!(matches!(
            env.step_balancing(&mut state, &order, RewardMode::Raw, &[]),
            Err(EnvError::EpisodeDone)
        ));
    }

    #[test]
    fn shaping_never_touches_reported_pnl() {
        let env = make_env(3, 8);
        let h = env.valid_hours()[0];
        let order = BmOrderSpec::Single(BmAction::new(-120.0, 150.0).unwrap());

        let run = |mode: RewardMode, baselines: &[f64]| -> (f64, Vec<f64>) {
            let (mut state, _) = env.reset(h).unwrap();
            env.step_day_ahead(&mut state, 140.0).unwrap();
            for _ in 0..4 {
                env.step_balancing(&mut state, &order, mode, baselines).unwrap();
            }
            (state.cumulative_pnl, state.shaped_rewards)
        };
        let (raw_pnl, _) = run(RewardMode::Raw, &[]);
        let (shaped_pnl, shaped_rewards) = run(RewardMode::Imitation, &[500.0, 300.0, 100.0]);
        assert_eq!(raw_pnl.to_bits(), shaped_pnl.to_bits());
        // Learning rewards do move by the mean baseline.
        let (_, raw_rewards) = run(RewardMode::Raw, &[]);
        for (s, r) in shaped_rewards.iter().zip(&raw_rewards) {
            assert!((s - (r - 300.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn imitation_mode_requires_baselines() {
        let env = make_env(3, 9);
        let h = env.valid_hours()[0];
        let (mut state, _) = env.reset(h).unwrap();
        env.step_day_ahead(&mut state, 100.0).unwrap();
        let order = BmOrderSpec::Single(BmAction::new(0.0, 0.0).unwrap());
        assert!(matches!(
            env.step_balancing(&mut state, &order, RewardMode::Imitation, &[]),
            Err(EnvError::EmptyBaselines)
        ));
    }
}
