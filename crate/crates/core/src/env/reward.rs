//! Quarter and hourly reward accounting, plus baseline shaping.

use super::types::{Execution, PriceContext, RewardBreakdown};
use super::EnvError;

/// Learning-reward variant for balancing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardMode {
    /// Plain quarter P&L, single-price orders.
    #[default]
    Raw,
    /// Quarter P&L minus the mean quarterly P&L of the simple baselines.
    Imitation,
    /// Plain quarter P&L with ladder orders.
    Tranched,
    /// Ladder orders shaped against the portfolio baselines.
    TranchedImitation,
}

impl RewardMode {
    pub fn uses_ladders(self) -> bool {
        matches!(self, RewardMode::Tranched | RewardMode::TranchedImitation)
    }

    pub fn uses_shaping(self) -> bool {
        matches!(self, RewardMode::Imitation | RewardMode::TranchedImitation)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Some(RewardMode::Raw),
            "imitation" => Some(RewardMode::Imitation),
            "tranched" => Some(RewardMode::Tranched),
            "tranched-imitation" | "tranched_imitation" => Some(RewardMode::TranchedImitation),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Raw => "raw",
            RewardMode::Imitation => "imitation",
            RewardMode::Tranched => "tranched",
            RewardMode::TranchedImitation => "tranched-imitation",
        }
    }
}

/// Quarter P&L for an execution: hydrogen settles the post-trade position,
/// the DA cost is charged on the per-quarter energy, and balancing fills
/// settle at their own quoted prices.
///
/// With `literal_full_da` the whole hourly position is settled and charged
/// in every quarter instead of its quarter share.
pub fn quarter_reward(
    exec: &Execution,
    e_da: f64,
    s_da: f64,
    ctx: &PriceContext,
    literal_full_da: bool,
    shaping_term: f64,
) -> Result<RewardBreakdown, EnvError> {
    let da_energy = if literal_full_da { s_da } else { e_da };
    super::clearing::check_post_trade_feasibility(e_da, exec.s_bm)?;
    let hydrogen_revenue = (exec.s_bm + da_energy) * ctx.p_h;
    let da_cost = da_energy * ctx.p_da;
    let bm_cashflow = exec.cashflow();
    let total = hydrogen_revenue - da_cost - bm_cashflow - shaping_term;
    Ok(RewardBreakdown { hydrogen_revenue, da_cost, bm_cashflow, shaping_term, total })
}

/// The day-ahead agent's hourly reward: the sum of the four quarter values.
pub fn hourly_reward(quarter_rewards: &[f64]) -> Result<f64, EnvError> {
    if quarter_rewards.len() != 4 {
        return Err(EnvError::WrongArity { expected: 4, actual: quarter_rewards.len() });
    }
    Ok(quarter_rewards.iter().sum())
}

/// Imitation shaping: raw reward minus the mean of the baseline P&Ls
/// computed on the same interval.
pub fn shape_reward(raw: f64, baselines: &[f64]) -> Result<f64, EnvError> {
    if baselines.is_empty() {
        return Err(EnvError::EmptyBaselines);
    }
    Ok(raw - baselines.iter().sum::<f64>() / baselines.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::types::Fill;
    use crate::market_data::RegulationState;

    fn ctx(p_da: f64) -> PriceContext {
        PriceContext {
            p_da,
            p_h: 75.0,
            bm_bid_clearing: None,
            bm_ask_clearing: None,
            regulation_state: RegulationState::Balanced,
        }
    }

    #[test]
    fn conversion_at_cost_is_zero() {
        let r = quarter_reward(&Execution::none(), 25.0, 100.0, &ctx(75.0), false, 0.0).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn shortage_fill_hand_value() {
        let exec = Execution { s_bm: -20.0, fills: vec![Fill { price: 100.0, volume: -20.0 }] };
        let r = quarter_reward(&exec, 25.0, 100.0, &ctx(50.0), false, 0.0).unwrap();
        // (-20+25)*75 - 25*50 + 20*100 = 1125
        assert_eq!(r.total, 1125.0);
        assert_eq!(r.hydrogen_revenue, 375.0);
        assert_eq!(r.da_cost, 1250.0);
        assert_eq!(r.bm_cashflow, -2000.0);
    }

    #[test]
    fn ladder_fill_hand_value() {
        let exec = Execution {
            s_bm: -15.0,
            fills: vec![
                Fill { price: 95.0, volume: -5.0 },
                Fill { price: 115.0, volume: -10.0 },
            ],
        };
        let r = quarter_reward(&exec, 25.0, 100.0, &ctx(60.0), false, 0.0).unwrap();
        // 10*75 - 25*60 + (475 + 1150) = 875
        assert_eq!(r.total, 875.0);
    }

    #[test]
    fn literal_mode_charges_full_position() {
        let r = quarter_reward(&Execution::none(), 25.0, 100.0, &ctx(50.0), true, 0.0).unwrap();
        // (0+100)*75 - 100*50 = 2500
        assert_eq!(r.total, 2500.0);
    }

    #[test]
    fn breakdown_identity_holds() {
        let exec = Execution { s_bm: 10.0, fills: vec![Fill { price: -40.0, volume: 10.0 }] };
        let r = quarter_reward(&exec, 30.0, 120.0, &ctx(55.0), false, 17.0).unwrap();
        let recomputed = r.hydrogen_revenue - r.da_cost - r.bm_cashflow - r.shaping_term;
        assert!((r.total - recomputed).abs() < 1e-12);
        assert_eq!(r.shaping_term, 17.0);
    }

    #[test]
    fn hourly_sum_and_arity() {
        assert_eq!(hourly_reward(&[0.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(hourly_reward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 10.0);
        assert!(matches!(
            hourly_reward(&[1.0, 2.0]),
            Err(EnvError::WrongArity { expected: 4, actual: 2 })
        ));
    }

    #[test]
    fn no_trade_hour_equals_conversion_margin() {
        // Four quarters without fills: s_da * (p_h - p_da) exactly.
        let s_da = 100.0;
        let e_da = s_da / 4.0;
        let quarters: Vec<f64> = (0..4)
            .map(|_| {
                quarter_reward(&Execution::none(), e_da, s_da, &ctx(60.0), false, 0.0)
                    .unwrap()
                    .total
            })
            .collect();
        assert_eq!(hourly_reward(&quarters).unwrap(), 1500.0);
    }

    #[test]
    fn shaping_arithmetic() {
        assert_eq!(shape_reward(100.0, &[50.0, 60.0, 70.0]).unwrap(), 40.0);
        assert_eq!(shape_reward(100.0, &[80.0, 120.0]).unwrap(), 0.0);
        assert_eq!(shape_reward(42.0, &[42.0]).unwrap(), 0.0);
        assert!(matches!(shape_reward(1.0, &[]), Err(EnvError::EmptyBaselines)));
    }

    #[test]
    fn infeasible_post_trade_rejected() {
        let exec = Execution { s_bm: 30.0, fills: vec![Fill { price: 0.0, volume: 30.0 }] };
        assert!(matches!(
            quarter_reward(&exec, 25.0, 100.0, &ctx(50.0), false, 0.0),
            Err(EnvError::InfeasiblePostTradePosition { .. })
        ));
    }
}
