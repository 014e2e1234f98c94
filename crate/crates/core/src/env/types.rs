//! Action, order, execution, and reward types for the bi-level game.

use crate::market_data::RegulationState;

use super::EnvError;

/// Day-ahead position bounds in MWh for the hour.
pub const DA_MIN_MWH: f64 = 20.0;
pub const DA_MAX_MWH: f64 = 200.0;

/// Balancing price bounds in EUR/MWh.
pub const BM_PRICE_MIN: f64 = -200.0;
pub const BM_PRICE_MAX: f64 = 200.0;

/// Per-quarter electrolyzer energy limits in MWh (20-200 MW over 15 min).
pub const QUARTER_MIN_MWH: f64 = 5.0;
pub const QUARTER_MAX_MWH: f64 = 50.0;

/// Hydrogen settlement price in EUR/MWh unless overridden in config.
pub const HYDROGEN_PRICE: f64 = 75.0;

/// Fixed ladder grids: eleven ask levels from 75 to 275 and eleven bid
/// levels from -125 to 75, spaced 20 EUR/MWh apart.
pub const LADDER_STEP: f64 = 20.0;
pub const ASK_LEVELS: [f64; 11] =
    [75.0, 95.0, 115.0, 135.0, 155.0, 175.0, 195.0, 215.0, 235.0, 255.0, 275.0];
pub const BID_LEVELS: [f64; 11] =
    [-125.0, -105.0, -85.0, -65.0, -45.0, -25.0, -5.0, 15.0, 35.0, 55.0, 75.0];

/// Day-ahead action: energy bought for the hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaAction {
    pub s_da: f64,
}

impl DaAction {
    pub fn new(s_da: f64) -> Result<Self, EnvError> {
        if !s_da.is_finite() {
            return Err(EnvError::NonFiniteAction);
        }
        if !(DA_MIN_MWH..=DA_MAX_MWH).contains(&s_da) {
            return Err(EnvError::OutOfBoundsAction { value: s_da, low: DA_MIN_MWH, high: DA_MAX_MWH });
        }
        Ok(Self { s_da })
    }

    /// Clamp into bounds, reporting whether clipping occurred.
    pub fn clipped(s_da: f64) -> Result<(Self, bool), EnvError> {
        if !s_da.is_finite() {
            return Err(EnvError::NonFiniteAction);
        }
        let c = s_da.clamp(DA_MIN_MWH, DA_MAX_MWH);
        Ok((Self { s_da: c }, c != s_da))
    }
}

/// Balancing action: one bid and one ask quote in EUR/MWh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmAction {
    pub p_bid: f64,
    pub p_ask: f64,
}

impl BmAction {
    pub fn new(p_bid: f64, p_ask: f64) -> Result<Self, EnvError> {
        if !p_bid.is_finite() || !p_ask.is_finite() {
            return Err(EnvError::NonFiniteAction);
        }
        for p in [p_bid, p_ask] {
            if !(BM_PRICE_MIN..=BM_PRICE_MAX).contains(&p) {
                return Err(EnvError::OutOfBoundsAction {
                    value: p,
                    low: BM_PRICE_MIN,
                    high: BM_PRICE_MAX,
                });
            }
        }
        Ok(Self { p_bid, p_ask })
    }

    pub fn clipped(p_bid: f64, p_ask: f64) -> Result<(Self, bool), EnvError> {
        if !p_bid.is_finite() || !p_ask.is_finite() {
            return Err(EnvError::NonFiniteAction);
        }
        let b = p_bid.clamp(BM_PRICE_MIN, BM_PRICE_MAX);
        let a = p_ask.clamp(BM_PRICE_MIN, BM_PRICE_MAX);
        Ok((Self { p_bid: b, p_ask: a }, b != p_bid || a != p_ask))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSide {
    Bid,
    Ask,
}

/// Price-level order on one side of the book. Levels must come from the
/// side's fixed grid, strictly increasing, volumes non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOrder {
    pub side: OrderSide,
    pub levels: Vec<(f64, f64)>,
}

impl LadderOrder {
    pub fn new(side: OrderSide, levels: Vec<(f64, f64)>) -> Result<Self, EnvError> {
        let grid: &[f64] = match side {
            OrderSide::Bid => &BID_LEVELS,
            OrderSide::Ask => &ASK_LEVELS,
        };
        let mut prev = f64::NEG_INFINITY;
        for (price, volume) in &levels {
            if !price.is_finite() || !volume.is_finite() || *volume < 0.0 {
                return Err(EnvError::InvalidLadder {
                    reason: format!("bad level ({price}, {volume})"),
                });
            }
            if !grid.iter().any(|g| (g - price).abs() < 1e-9) {
                return Err(EnvError::InvalidLadder {
                    reason: format!("price {price} not on the level grid"),
                });
            }
            if *price <= prev {
                return Err(EnvError::InvalidLadder {
                    reason: "level prices must be strictly increasing".to_string(),
                });
            }
            prev = *price;
        }
        Ok(Self { side, levels })
    }

    pub fn total_volume(&self) -> f64 {
        self.levels.iter().map(|(_, v)| v).sum()
    }

    /// Equally weighted ladder: `total_volume / 11` at every grid level on
    /// the quote's side of the reservation price. For bids the reservation
    /// is the highest acceptable buy price; for asks the lowest acceptable
    /// sale price. A reservation covering the whole grid reproduces the
    /// fixed equally weighted portfolio.
    pub fn equal_split(side: OrderSide, total_volume: f64, reservation: f64) -> Result<Self, EnvError> {
        if !total_volume.is_finite() || total_volume < 0.0 {
            return Err(EnvError::InvalidLadder {
                reason: format!("total volume {total_volume} must be non-negative"),
            });
        }
        let grid: &[f64] = match side {
            OrderSide::Bid => &BID_LEVELS,
            OrderSide::Ask => &ASK_LEVELS,
        };
        let per_level = total_volume / grid.len() as f64;
        let levels = grid
            .iter()
            .filter(|p| match side {
                OrderSide::Bid => **p <= reservation + 1e-9,
                OrderSide::Ask => **p >= reservation - 1e-9,
            })
            .map(|p| (*p, per_level))
            .collect();
        Self::new(side, levels)
    }

    /// Full equally weighted ladder across all eleven levels.
    pub fn full_equal_split(side: OrderSide, total_volume: f64) -> Result<Self, EnvError> {
        let reservation = match side {
            OrderSide::Bid => BID_LEVELS[BID_LEVELS.len() - 1],
            OrderSide::Ask => ASK_LEVELS[0],
        };
        Self::equal_split(side, total_volume, reservation)
    }
}

/// What a balancing step submits to the auction: either a single-price
/// quote (full feasible volume per side) or an explicit ladder pair.
#[derive(Debug, Clone, PartialEq)]
pub enum BmOrderSpec {
    Single(BmAction),
    Ladders { bid: LadderOrder, ask: LadderOrder },
}

impl BmOrderSpec {
    /// An order that never trades: empty ladders on both sides.
    pub fn no_order() -> Self {
        BmOrderSpec::Ladders {
            bid: LadderOrder { side: OrderSide::Bid, levels: Vec::new() },
            ask: LadderOrder { side: OrderSide::Ask, levels: Vec::new() },
        }
    }

    /// Quoted bid/ask summary prices for traces and histograms: the single
    /// quote itself, or a ladder's reservation edge (best-priced included
    /// level).
    pub fn quote_prices(&self) -> (Option<f64>, Option<f64>) {
        match self {
            BmOrderSpec::Single(a) => (Some(a.p_bid), Some(a.p_ask)),
            BmOrderSpec::Ladders { bid, ask } => (
                bid.levels.last().map(|(p, _)| *p),
                ask.levels.first().map(|(p, _)| *p),
            ),
        }
    }
}

/// One fill at a quoted level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fill {
    pub price: f64,
    /// Signed MWh: positive bought, negative sold.
    pub volume: f64,
}

/// Paid-as-bid execution result for one quarter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Execution {
    /// Net signed position: positive bought via bids, negative sold via asks.
    pub s_bm: f64,
    /// Fills at their own quoted prices.
    pub fills: Vec<Fill>,
}

impl Execution {
    pub fn none() -> Self {
        Self::default()
    }

    /// Cash paid out for the fills: positive when buying at positive
    /// prices. Enters the reward with a minus sign.
    pub fn cashflow(&self) -> f64 {
        self.fills.iter().map(|f| f.price * f.volume).sum()
    }
}

/// Prices and regulation state for one quarter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceContext {
    pub p_da: f64,
    pub p_h: f64,
    pub bm_bid_clearing: Option<f64>,
    pub bm_ask_clearing: Option<f64>,
    pub regulation_state: RegulationState,
}

/// Reward decomposition for one quarter.
/// total = hydrogen_revenue - da_cost - bm_cashflow - shaping_term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub hydrogen_revenue: f64,
    pub da_cost: f64,
    pub bm_cashflow: f64,
    pub shaping_term: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Quarter P&L without the learning-only shaping term.
    pub fn unshaped(&self) -> f64 {
        self.hydrogen_revenue - self.da_cost - self.bm_cashflow
    }
}

/// Where an episode stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    AwaitingDayAhead,
    Balancing { quarter: usize },
    Done,
}

/// One hour of play: the DA position, quarter cursor, and running P&L.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub hour_index: usize,
    pub phase: Phase,
    pub s_da: f64,
    /// Per-quarter DA energy, `s_da / 4`.
    pub e_da: f64,
    /// Running unshaped P&L in EUR.
    pub cumulative_pnl: f64,
    /// Unshaped reward of each completed quarter.
    pub quarter_rewards: Vec<f64>,
    /// Learning rewards (shaped when a shaping mode is active).
    pub shaped_rewards: Vec<f64>,
    /// Number of actions that had to be clipped into bounds.
    pub clip_events: usize,
}

impl EpisodeState {
    pub fn new(hour_index: usize) -> Self {
        Self {
            hour_index,
            phase: Phase::AwaitingDayAhead,
            s_da: 0.0,
            e_da: 0.0,
            cumulative_pnl: 0.0,
            quarter_rewards: Vec::with_capacity(4),
            shaped_rewards: Vec::with_capacity(4),
            clip_events: 0,
        }
    }
}
