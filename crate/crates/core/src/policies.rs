//! Benchmark policies P1-P5: deterministic action generators used both as
//! standalone baselines and as the shaping baselines for taught agents.

use chrono::{DateTime, Utc};

use crate::env::{
    clear_orders, feasible_volume_bounds_for, quarter_reward, BmAction, BmOrderSpec, DaAction,
    EnvError, LadderOrder, MarketEnv, OrderSide, PriceContext, RewardMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 5] =
        [BenchmarkId::P1, BenchmarkId::P2, BenchmarkId::P3, BenchmarkId::P4, BenchmarkId::P5];

    /// The simple baselines behind imitation shaping.
    pub const SIMPLE: [BenchmarkId; 3] = [BenchmarkId::P1, BenchmarkId::P2, BenchmarkId::P3];

    /// The portfolio baselines behind tranched-imitation shaping.
    pub const PORTFOLIO: [BenchmarkId; 2] = [BenchmarkId::P4, BenchmarkId::P5];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::P1 => "P1",
            BenchmarkId::P2 => "P2",
            BenchmarkId::P3 => "P3",
            BenchmarkId::P4 => "P4",
            BenchmarkId::P5 => "P5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P1" => Some(BenchmarkId::P1),
            "P2" => Some(BenchmarkId::P2),
            "P3" => Some(BenchmarkId::P3),
            "P4" => Some(BenchmarkId::P4),
            "P5" => Some(BenchmarkId::P5),
            _ => None,
        }
    }
}

/// Which decision is being requested from a policy.
#[derive(Debug, Clone, Copy)]
pub enum PolicyPhase {
    DayAhead {
        /// Live DA-agent position for P4 in integrated training.
        da_hint: Option<f64>,
    },
    Balancing {
        /// The policy's own per-quarter DA energy.
        e_da: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyDecision {
    DayAhead(DaAction),
    /// `None` means the policy places no balancing order this quarter.
    Balancing(Option<BmOrderSpec>),
}

/// Fallback DA position for P4 when no live agent supplies one.
pub const P4_FALLBACK_DA_MWH: f64 = 150.0;

fn conditional_max_da(ctx: &PriceContext) -> DaAction {
    if ctx.p_h > ctx.p_da {
        DaAction { s_da: 200.0 }
    } else {
        DaAction { s_da: 20.0 }
    }
}

fn full_ladders(e_da: f64) -> Result<BmOrderSpec, EnvError> {
    let bounds = feasible_volume_bounds_for(e_da);
    Ok(BmOrderSpec::Ladders {
        bid: LadderOrder::full_equal_split(OrderSide::Bid, bounds.max_bid_volume)?,
        ask: LadderOrder::full_equal_split(OrderSide::Ask, bounds.max_ask_volume)?,
    })
}

/// Table-driven benchmark decision: a total function over the enum.
pub fn benchmark_action(
    id: BenchmarkId,
    phase: PolicyPhase,
    ctx: &PriceContext,
) -> Result<PolicyDecision, EnvError> {
    match phase {
        PolicyPhase::DayAhead { da_hint } => {
            let action = match id {
                BenchmarkId::P1 => DaAction { s_da: 150.0 },
                BenchmarkId::P2 => DaAction { s_da: 200.0 },
                BenchmarkId::P3 | BenchmarkId::P5 => conditional_max_da(ctx),
                BenchmarkId::P4 => DaAction {
                    s_da: da_hint
                        .unwrap_or(P4_FALLBACK_DA_MWH)
                        .clamp(crate::env::DA_MIN_MWH, crate::env::DA_MAX_MWH),
                },
            };
            Ok(PolicyDecision::DayAhead(action))
        }
        PolicyPhase::Balancing { e_da } => {
            let order = match id {
                BenchmarkId::P1 => {
                    Some(BmOrderSpec::Single(BmAction { p_bid: -100.0, p_ask: 100.0 }))
                }
                BenchmarkId::P2 | BenchmarkId::P3 => None,
                BenchmarkId::P4 | BenchmarkId::P5 => Some(full_ladders(e_da)?),
            };
            Ok(PolicyDecision::Balancing(order))
        }
    }
}

fn da_position(id: BenchmarkId, ctx: &PriceContext, da_hint: Option<f64>) -> Result<f64, EnvError> {
    match benchmark_action(id, PolicyPhase::DayAhead { da_hint }, ctx)? {
        PolicyDecision::DayAhead(a) => Ok(a.s_da),
        PolicyDecision::Balancing(_) => unreachable!("day-ahead phase returns a DA action"),
    }
}

fn bm_order(id: BenchmarkId, e_da: f64, ctx: &PriceContext) -> Result<Option<BmOrderSpec>, EnvError> {
    match benchmark_action(id, PolicyPhase::Balancing { e_da }, ctx)? {
        PolicyDecision::Balancing(o) => Ok(o),
        PolicyDecision::DayAhead(_) => unreachable!("balancing phase returns an order"),
    }
}

/// Per-policy quarterly P&L on one price context, computed by fresh
/// simulation each call. These are the F-values of the shaping modes.
pub fn baseline_quarter_pnls(
    ids: &[BenchmarkId],
    ctx: &PriceContext,
    da_hint: Option<f64>,
    literal_full_da: bool,
) -> Result<Vec<f64>, EnvError> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let s_da = da_position(*id, ctx, da_hint)?;
        let e_da = s_da / 4.0;
        let bounds = feasible_volume_bounds_for(e_da);
        let execution = match bm_order(*id, e_da, ctx)? {
            Some(order) => clear_orders(&order, bounds, ctx)?,
            None => crate::env::Execution::none(),
        };
        let breakdown = quarter_reward(&execution, e_da, s_da, ctx, literal_full_da, 0.0)?;
        out.push(breakdown.total);
    }
    Ok(out)
}

/// Hourly and cumulative P&L of one strategy over a test period, aligned
/// on hour timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PnlSeries {
    pub hourly: Vec<(DateTime<Utc>, f64)>,
    pub cumulative: Vec<f64>,
}

impl PnlSeries {
    pub fn push(&mut self, t: DateTime<Utc>, pnl: f64) {
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.hourly.push((t, pnl));
        self.cumulative.push(prev + pnl);
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.hourly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hourly.is_empty()
    }
}

/// Deterministic replay of one benchmark through the environment with raw
/// rewards over the given hours.
pub fn run_benchmark(
    id: BenchmarkId,
    env: &MarketEnv,
    hours: &[usize],
) -> Result<PnlSeries, EnvError> {
    let mut series = PnlSeries::default();
    for &hour in hours {
        let (mut state, _) = env.reset(hour)?;
        let ctx0 = env.price_context(hour, 0)?;
        let s_da = da_position(id, &ctx0, None)?;
        env.step_day_ahead(&mut state, s_da)?;
        for quarter in 0..4 {
            let ctx = env.price_context(hour, quarter)?;
            let order = bm_order(id, state.e_da, &ctx)?
                .unwrap_or_else(BmOrderSpec::no_order);
            env.step_balancing(&mut state, &order, RewardMode::Raw, &[])?;
        }
        series.push(env.hour_timestamp(hour)?, state.cumulative_pnl);
    }
    Ok(series)
}
