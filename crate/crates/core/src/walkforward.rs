//! Walk-forward folds over calendar years: per-fold fitting on the train
//! window only, out-of-sample evaluation, and aggregation.

use chrono::{DateTime, TimeZone, Utc};
use rayon::prelude::*;
use thiserror::Error;

use crate::env::{EnvConfig, EnvError, MarketEnv};
use crate::manifest::sha256_hex;
use crate::market_data::{
    build_lagged_features, fit_state_predictor, predict_state_prob, DataError, FitConfig,
    LagSpec, MarketLevel, MarketTable, ObservationSpec, Standardizer, StatePredictor,
};
use crate::policies::{run_benchmark, BenchmarkId, PnlSeries};
use crate::rl::{
    derive_seed, evaluate_agents, train_dual_agents, agent_to_text_pair, EvalRecord, RlError,
    TrainConfig,
};

#[derive(Debug, Error)]
pub enum WalkForwardError {
    #[error("need at least {needed} contiguous years, have {available}")]
    InsufficientYears { needed: usize, available: usize },
    #[error("years must be contiguous and ascending")]
    NonContiguousYears,
    #[error("fold {fold}: train years {train:?} overlap test year {test}")]
    OverlappingFold { fold: usize, train: Vec<i32>, test: i32 },
    #[error("market does not cover {period} for fold {fold}")]
    CoverageGap { fold: usize, period: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Rl(#[from] RlError),
}

/// One train-years -> test-year pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub id: usize,
    pub train_years: Vec<i32>,
    pub test_year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkForwardPlan {
    pub folds: Vec<Fold>,
}

/// Maximal sliding plan: train on `train_len` consecutive years, test on
/// the following `test_len` (fold per shift of `test_len`).
pub fn build_plan(
    available_years: &[i32],
    train_len: usize,
    test_len: usize,
) -> Result<WalkForwardPlan, WalkForwardError> {
    if available_years.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(WalkForwardError::NonContiguousYears);
    }
    let needed = train_len + test_len;
    if available_years.len() < needed || train_len == 0 || test_len == 0 {
        return Err(WalkForwardError::InsufficientYears {
            needed,
            available: available_years.len(),
        });
    }
    let mut folds = Vec::new();
    let mut start = 0usize;
    while start + needed <= available_years.len() {
        let train_years = available_years[start..start + train_len].to_vec();
        let test_year = available_years[start + train_len];
        folds.push(Fold { id: folds.len(), train_years, test_year });
        start += test_len;
    }
    Ok(WalkForwardPlan { folds })
}

impl WalkForwardPlan {
    /// Append an explicit (possibly non-contiguous) train/test pairing.
    pub fn with_explicit_pair(mut self, train_years: Vec<i32>, test_year: i32) -> Self {
        let id = self.folds.len();
        self.folds.push(Fold { id, train_years, test_year });
        self
    }

    pub fn validate(&self) -> Result<(), WalkForwardError> {
        for fold in &self.folds {
            if fold.train_years.contains(&fold.test_year) {
                return Err(WalkForwardError::OverlappingFold {
                    fold: fold.id,
                    train: fold.train_years.clone(),
                    test: fold.test_year,
                });
            }
        }
        Ok(())
    }
}

fn year_start(year: i32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap()
}

/// Feature engineering and fitting configuration shared by every fold.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub lag: LagSpec,
    pub da_features: Vec<String>,
    pub bm_features: Vec<String>,
    pub da_lookback_days: usize,
    pub bm_lookback_days: usize,
    pub predictor_features: Vec<String>,
    pub predictor_fit: FitConfig,
    /// Append the predictor's shortage probability as feature
    /// `p_shortage_hat` before standardization.
    pub append_predictor_prob: bool,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub benchmarks: Vec<BenchmarkId>,
}

pub const PREDICTOR_PROB_FEATURE: &str = "p_shortage_hat";

/// Per-fold results. All series cover exactly the fold's test hours.
#[derive(Debug)]
pub struct FoldReport {
    pub fold: Fold,
    pub seed: u64,
    pub agent_pnl: PnlSeries,
    pub benchmark_pnls: Vec<(BenchmarkId, PnlSeries)>,
    pub predictor_accuracy: Option<f64>,
    /// SHA-256 over every fitted artifact (predictor, standardizers,
    /// agent checkpoints), computed before any test data is touched.
    pub artifact_checksum: String,
    pub observation_dims: (usize, usize),
    pub eval: EvalRecord,
}

#[derive(Debug, Default)]
pub struct WalkForwardReport {
    pub folds: Vec<FoldReport>,
    /// Sum of out-of-sample P&L across folds.
    pub total_agent_pnl: f64,
    pub mean_predictor_accuracy: Option<f64>,
}

fn standardizer_text(s: &Standardizer) -> String {
    let mut out = String::new();
    for ((n, m), sd) in s.names.iter().zip(&s.mean).zip(&s.std) {
        out.push_str(&format!("{n} {m} {sd}\n"));
    }
    out
}

fn predictor_text(p: &StatePredictor) -> String {
    let mut out = format!("bias {}\n", p.bias);
    for (j, name) in p.feature_names.iter().enumerate() {
        out.push_str(&format!(
            "{} {} {} {}\n",
            name, p.weights[j], p.standardizer.mean[j], p.standardizer.std[j]
        ));
    }
    out
}

fn run_fold(
    market: &MarketTable,
    fold: &Fold,
    cfg: &PipelineConfig,
) -> Result<FoldReport, WalkForwardError> {
    let train_start = year_start(*fold.train_years.iter().min().unwrap());
    let train_end = year_start(*fold.train_years.iter().max().unwrap() + 1);
    let test_start = year_start(fold.test_year);
    let test_end = year_start(fold.test_year + 1);
    for (period, start, end) in
        [("train", train_start, train_end), ("test", test_start, test_end)]
    {
        if market.start() > start || market.end() < end {
            return Err(WalkForwardError::CoverageGap {
                fold: fold.id,
                period: format!("{period} window {start}..{end}"),
            });
        }
    }

    // Backward-looking feature construction over the whole market; train
    // rows never read raw data beyond the train window.
    let mut features = build_lagged_features(market, &cfg.lag)?;

    // Fit the state predictor on train rows only.
    let (train_lo, train_hi) = features.row_range(train_start, train_end);
    let train_slice = features.slice(train_lo, train_hi)?;
    let predictor =
        fit_state_predictor(&train_slice, &cfg.predictor_features, &cfg.predictor_fit)?;

    if cfg.append_predictor_prob {
        let mut probs = Vec::with_capacity(features.len());
        for row in 0..features.len() {
            let x: Result<Vec<f64>, DataError> = cfg
                .predictor_features
                .iter()
                .map(|n| features.feature_value(n, row))
                .collect();
            probs.push(predict_state_prob(&predictor, &x?)?);
        }
        features = features.with_column(PREDICTOR_PROB_FEATURE, probs)?;
    }

    let da_std = Standardizer::fit(&features, &cfg.da_features, train_lo, train_hi)?;
    let bm_std = Standardizer::fit(&features, &cfg.bm_features, train_lo, train_hi)?;

    let env = MarketEnv::new(
        market.clone(),
        features.clone(),
        ObservationSpec::new(MarketLevel::DayAhead, cfg.da_features.clone(), cfg.da_lookback_days),
        ObservationSpec::new(MarketLevel::Balancing, cfg.bm_features.clone(), cfg.bm_lookback_days),
        cfg.env.clone(),
    )?
    .with_standardizers(Some(da_std.clone()), Some(bm_std.clone()));

    let train_hours = env.valid_hours_in(train_start, train_end);
    let test_hours = env.valid_hours_in(test_start, test_end);
    if train_hours.is_empty() || test_hours.is_empty() {
        return Err(WalkForwardError::CoverageGap {
            fold: fold.id,
            period: "no playable hours after look-back trimming".into(),
        });
    }

    let seed = derive_seed(cfg.train.seed, 1000 + fold.id as u64);
    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
    let mut output = train_dual_agents(&env, &train_hours, &train_cfg)?;

    // Checksum every fitted artifact before test data is touched.
    let artifact_checksum = sha256_hex(&format!(
        "{}{}{}{}",
        predictor_text(&predictor),
        standardizer_text(&da_std),
        standardizer_text(&bm_std),
        agent_to_text_pair(&output.agents),
    ));

    let eval = evaluate_agents(
        &env,
        &test_hours,
        &mut output.agents,
        cfg.train.reward_mode.uses_ladders(),
    )?;
    let mut benchmark_pnls = Vec::with_capacity(cfg.benchmarks.len());
    for id in &cfg.benchmarks {
        benchmark_pnls.push((*id, run_benchmark(*id, &env, &test_hours)?));
    }
    let (test_lo, test_hi) = features.row_range(test_start, test_end);
    let predictor_accuracy = if test_lo < test_hi {
        predictor.accuracy(&features.slice(test_lo, test_hi)?)?
    } else {
        None
    };

    Ok(FoldReport {
        fold: fold.clone(),
        seed,
        agent_pnl: eval.pnl.clone(),
        benchmark_pnls,
        predictor_accuracy,
        artifact_checksum,
        observation_dims: env.observation_dims(),
        eval,
    })
}

/// Run every fold (in parallel; folds are independent) and aggregate.
pub fn run_walk_forward(
    market: &MarketTable,
    plan: &WalkForwardPlan,
    cfg: &PipelineConfig,
) -> Result<WalkForwardReport, WalkForwardError> {
    plan.validate()?;
    let mut folds: Vec<FoldReport> = plan
        .folds
        .par_iter()
        .map(|fold| run_fold(market, fold, cfg))
        .collect::<Result<_, _>>()?;
    folds.sort_by_key(|f| f.fold.id);
    let total_agent_pnl = folds.iter().map(|f| f.agent_pnl.total()).sum();
    let accuracies: Vec<f64> = folds.iter().filter_map(|f| f.predictor_accuracy).collect();
    let mean_predictor_accuracy = if accuracies.is_empty() {
        None
    } else {
        Some(accuracies.iter().sum::<f64>() / accuracies.len() as f64)
    };
    Ok(WalkForwardReport { folds, total_agent_pnl, mean_predictor_accuracy })
}
