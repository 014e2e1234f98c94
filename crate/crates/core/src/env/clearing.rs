//! Paid-as-bid clearing against per-quarter clearing prices.
//!
//! Only the bid side is considered in surplus and only the ask side in
//! shortage; balanced quarters execute nothing. A bid level crosses when
//! its price is at or above the bid clearing price, an ask level when its
//! price is at or below the ask clearing price. Every fill settles at its
//! own quoted level price.

use crate::market_data::RegulationState;

use super::types::{
    BmOrderSpec, EpisodeState, Execution, Fill, LadderOrder, OrderSide, Phase, PriceContext,
    QUARTER_MAX_MWH, QUARTER_MIN_MWH,
};
use super::EnvError;

/// Feasible order volumes for the current quarter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeBounds {
    /// Headroom up to the electrolyzer maximum.
    pub max_bid_volume: f64,
    /// Sellable energy above the electrolyzer minimum.
    pub max_ask_volume: f64,
}

/// Buy/sell headroom left by the DA position: `50 - e_da` purchasable,
/// `e_da - 5` sellable, both clipped at zero.
pub fn feasible_volume_bounds(state: &EpisodeState) -> VolumeBounds {
    feasible_volume_bounds_for(state.e_da)
}

pub fn feasible_volume_bounds_for(e_da: f64) -> VolumeBounds {
    VolumeBounds {
        max_bid_volume: (QUARTER_MAX_MWH - e_da).max(0.0),
        max_ask_volume: (e_da - QUARTER_MIN_MWH).max(0.0),
    }
}

const VOLUME_EPS: f64 = 1e-9;

fn clear_ladder(order: &LadderOrder, ctx: &PriceContext) -> Execution {
    match (ctx.regulation_state, order.side) {
        (RegulationState::Surplus, OrderSide::Bid) => {
            let Some(clearing) = ctx.bm_bid_clearing else {
                return Execution::none();
            };
            let fills: Vec<Fill> = order
                .levels
                .iter()
                .filter(|(price, volume)| *price >= clearing && *volume > 0.0)
                .map(|(price, volume)| Fill { price: *price, volume: *volume })
                .collect();
            let s_bm = fills.iter().map(|f| f.volume).sum();
            Execution { s_bm, fills }
        }
        (RegulationState::Shortage, OrderSide::Ask) => {
            let Some(clearing) = ctx.bm_ask_clearing else {
                return Execution::none();
            };
            let fills: Vec<Fill> = order
                .levels
                .iter()
                .filter(|(price, volume)| *price <= clearing && *volume > 0.0)
                .map(|(price, volume)| Fill { price: *price, volume: -*volume })
                .collect();
            let s_bm = fills.iter().map(|f| f.volume).sum();
            Execution { s_bm, fills }
        }
        _ => Execution::none(),
    }
}

/// Clear an order specification: single-price quotes commit the full
/// feasible per-side volume or nothing; ladders fill all-or-nothing per
/// level. Volumes beyond the feasibility bounds are an error.
pub fn clear_orders(
    order: &BmOrderSpec,
    bounds: VolumeBounds,
    ctx: &PriceContext,
) -> Result<Execution, EnvError> {
    match order {
        BmOrderSpec::Single(action) => {
            let exec = match ctx.regulation_state {
                RegulationState::Surplus => {
                    match ctx.bm_bid_clearing {
                        Some(clearing)
                            if action.p_bid >= clearing && bounds.max_bid_volume > 0.0 =>
                        {
                            Execution {
                                s_bm: bounds.max_bid_volume,
                                fills: vec![Fill {
                                    price: action.p_bid,
                                    volume: bounds.max_bid_volume,
                                }],
                            }
                        }
                        _ => Execution::none(),
                    }
                }
                RegulationState::Shortage => {
                    match ctx.bm_ask_clearing {
                        Some(clearing)
                            if action.p_ask <= clearing && bounds.max_ask_volume > 0.0 =>
                        {
                            Execution {
                                s_bm: -bounds.max_ask_volume,
                                fills: vec![Fill {
                                    price: action.p_ask,
                                    volume: -bounds.max_ask_volume,
                                }],
                            }
                        }
                        _ => Execution::none(),
                    }
                }
                RegulationState::Balanced => Execution::none(),
            };
            Ok(exec)
        }
        BmOrderSpec::Ladders { bid, ask } => {
            if bid.side != OrderSide::Bid || ask.side != OrderSide::Ask {
                return Err(EnvError::InvalidLadder { reason: "ladder sides swapped".into() });
            }
            if bid.total_volume() > bounds.max_bid_volume + VOLUME_EPS {
                return Err(EnvError::VolumeExceedsFeasibility {
                    volume: bid.total_volume(),
                    bound: bounds.max_bid_volume,
                });
            }
            if ask.total_volume() > bounds.max_ask_volume + VOLUME_EPS {
                return Err(EnvError::VolumeExceedsFeasibility {
                    volume: ask.total_volume(),
                    bound: bounds.max_ask_volume,
                });
            }
            Ok(match ctx.regulation_state {
                RegulationState::Surplus => clear_ladder(bid, ctx),
                RegulationState::Shortage => clear_ladder(ask, ctx),
                RegulationState::Balanced => Execution::none(),
            })
        }
    }
}

/// Post-trade quarter consumption must stay within the electrolyzer range.
pub fn check_post_trade_feasibility(e_da: f64, s_bm: f64) -> Result<(), EnvError> {
    let net = e_da + s_bm;
    if net < QUARTER_MIN_MWH - 1e-6 || net > QUARTER_MAX_MWH + 1e-6 {
        return Err(EnvError::InfeasiblePostTradePosition { net });
    }
    Ok(())
}

#[allow(unused)]
fn phase_quarter(state: &EpisodeState) -> Option<usize> {
    match state.phase {
        Phase::Balancing { quarter } => Some(quarter),
        _ => None,
    }
}
