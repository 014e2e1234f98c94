//! Bi-level market environment: paid-as-bid clearing, electrolyzer
//! feasibility, hydrogen settlement, and the reward variants.

mod clearing;
mod episode;
mod reward;
mod types;

use thiserror::Error;

pub use clearing::{
    check_post_trade_feasibility, clear_orders, feasible_volume_bounds,
    feasible_volume_bounds_for, VolumeBounds,
};
pub use episode::{da_bounds, EnvConfig, MarketEnv, StepOutcome, BM_EXTRA_DIM};
pub use reward::{hourly_reward, quarter_reward, shape_reward, RewardMode};
pub use types::{
    BmAction, BmOrderSpec, DaAction, EpisodeState, Execution, Fill, LadderOrder, OrderSide,
    Phase, PriceContext, RewardBreakdown, ASK_LEVELS, BID_LEVELS, BM_PRICE_MAX, BM_PRICE_MIN,
    DA_MAX_MWH, DA_MIN_MWH, HYDROGEN_PRICE, LADDER_STEP, QUARTER_MAX_MWH, QUARTER_MIN_MWH,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action is not finite")]
    NonFiniteAction,
    #[error("action {value} outside [{low}, {high}]")]
    OutOfBoundsAction { value: f64, low: f64, high: f64 },
    #[error("invalid ladder: {reason}")]
    InvalidLadder { reason: String },
    #[error("order volume {volume} exceeds feasible bound {bound}")]
    VolumeExceedsFeasibility { volume: f64, bound: f64 },
    #[error("post-trade consumption {net} MWh outside the electrolyzer range")]
    InfeasiblePostTradePosition { net: f64 },
    #[error("expected {expected} quarter rewards, got {actual}")]
    WrongArity { expected: usize, actual: usize },
    #[error("shaping requires at least one baseline")]
    EmptyBaselines,
    #[error("day-ahead step already taken")]
    DoubleDaStep,
    #[error("day-ahead step not yet taken")]
    DaStepMissing,
    #[error("episode already finished")]
    EpisodeDone,
    #[error("hour {hour_index} is not covered by the table")]
    HourOutOfRange { hour_index: usize },
    #[error("hour {hour_index} has fewer than 4 quarter records")]
    IncompleteHour { hour_index: usize },
    #[error("raw table must be quarter-hourly")]
    RawTableNotQuarterHourly,
    #[error("raw table must start on an hour boundary")]
    RawTableNotHourAligned,
    #[error("feature table must be quarter-hourly")]
    FeatureTableNotQuarterHourly,
    #[error("invalid environment config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Data(#[from] crate::market_data::DataError),
}
