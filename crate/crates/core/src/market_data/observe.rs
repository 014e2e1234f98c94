//! Observation assembly: lagged feature windows flattened into the vectors
//! agents consume, plus per-feature standardization.

use chrono::{DateTime, Utc};

use super::table::MarketTable;
use super::DataError;

/// Market level an observation is built for. The level fixes the window
/// step: day-ahead windows advance hourly, balancing windows quarter-hourly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketLevel {
    DayAhead,
    Balancing,
}

impl MarketLevel {
    fn step_minutes(self) -> i64 {
        match self {
            MarketLevel::DayAhead => 60,
            MarketLevel::Balancing => 15,
        }
    }

    fn steps_per_day(self) -> usize {
        match self {
            MarketLevel::DayAhead => 24,
            MarketLevel::Balancing => 96,
        }
    }
}

/// Feature list and look-back horizon for one agent level.
#[derive(Debug, Clone)]
pub struct ObservationSpec {
    pub level: MarketLevel,
    pub features: Vec<String>,
    pub lookback_days: usize,
}

impl ObservationSpec {
    pub fn new(level: MarketLevel, features: Vec<String>, lookback_days: usize) -> Self {
        Self { level, features, lookback_days }
    }

    /// Number of window steps: the look-back horizon at the level's own
    /// step, ending at (and including) the query row. A zero look-back is
    /// the current step alone.
    pub fn window_steps(&self) -> usize {
        (self.lookback_days * self.level.steps_per_day()).max(1)
    }

    /// Flattened dimension, recorded in run manifests.
    pub fn dimension(&self) -> usize {
        self.features.len() * self.window_steps()
    }
}

/// Flatten the spec's feature window ending at `t`.
///
/// Rows are sampled at the level step (a day-ahead window on a quarter-hour
/// table strides every 4th row). Layout is time-major, oldest step first;
/// within a step, features appear in spec order.
pub fn assemble_observation(
    table: &MarketTable,
    t: DateTime<Utc>,
    spec: &ObservationSpec,
) -> Result<Vec<f64>, DataError> {
    let table_step = table.resolution().step().num_minutes();
    let level_step = spec.level.step_minutes();
    if level_step < table_step || level_step % table_step != 0 {
        return Err(DataError::LevelFinerThanTable);
    }
    let stride = (level_step / table_step) as usize;
    let steps = spec.window_steps();
    let idx = table
        .index_of(t)
        .ok_or(DataError::TimestampNotCovered { at: t })?;
    let span = (steps - 1) * stride;
    if idx < span {
        return Err(DataError::InsufficientHistory { at: t, needed: span, available: idx });
    }
    let mut out = Vec::with_capacity(spec.dimension());
    for s in 0..steps {
        let row = idx - span + s * stride;
        for name in &spec.features {
            out.push(table.feature_value(name, row)?);
        }
    }
    Ok(out)
}

/// Per-feature affine transform fitted on a training window and frozen for
/// test use. Features with (near-)zero spread pass through unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fit mean/stddev for each named feature over table rows `[lo, hi)`.
    pub fn fit(table: &MarketTable, names: &[String], lo: usize, hi: usize) -> Result<Self, DataError> {
        let n = (hi - lo) as f64;
        let mut mean = Vec::with_capacity(names.len());
        let mut std = Vec::with_capacity(names.len());
        for name in names {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for row in lo..hi {
                let v = table.feature_value(name, row)?;
                sum += v;
                sumsq += v * v;
            }
            let m = sum / n;
            let var = (sumsq / n - m * m).max(0.0);
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 1e-12 { s } else { 1.0 });
        }
        Ok(Self { names: names.to_vec(), mean, std })
    }

    /// Standardize one window-flattened observation in place. The window
    /// repeats the feature block every `names.len()` entries.
    pub fn apply_windowed(&self, obs: &mut [f64]) {
        let k = self.names.len();
        if k == 0 {
            return;
        }
        for (i, v) in obs.iter_mut().enumerate() {
            let f = i % k;
            *v = (*v - self.mean[f]) / self.std[f];
        }
    }

    /// Standardize a plain feature vector (one value per feature).
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, DataError> {
        if x.len() != self.names.len() {
            return Err(DataError::DimensionMismatch {
                expected: self.names.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{RegulationState, Resolution};
    use chrono::TimeZone;

    fn hourly_table(n: usize) -> MarketTable {
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        MarketTable::new(
            Resolution::Hourly,
            (0..n).map(|i| start + chrono::Duration::hours(i as i64)).collect(),
            (0..n).map(|i| i as f64).collect(),
            vec![None; n],
            vec![None; n],
            vec![RegulationState::Balanced; n],
            vec![("a".into(), (0..n).map(|i| i as f64 * 2.0).collect())],
        )
        .unwrap()
    }

    #[test]
    fn three_day_hourly_window_dimension() {
        let spec = ObservationSpec::new(
            MarketLevel::DayAhead,
            vec!["da_price".into(), "a".into()],
            3,
        );
        assert_eq!(spec.window_steps(), 72);
        assert_eq!(spec.dimension(), 144);
        let t = hourly_table(100);
        let obs = assemble_observation(&t, t.timestamps()[80], &spec).unwrap();
        assert_eq!(obs.len(), 144);
        // Oldest step first: hour 80-71=9; features in spec order.
        assert_eq!(obs[0], 9.0);
        assert_eq!(obs[1], 18.0);
        assert_eq!(obs[142], 80.0);
        assert_eq!(obs[143], 160.0);
    }

    #[test]
    fn zero_lookback_is_current_step_only() {
        let spec = ObservationSpec::new(
            MarketLevel::DayAhead,
            vec!["da_price".into(), "a".into(), "a".into(), "a".into(), "a".into()],
            0,
        );
        assert_eq!(spec.dimension(), 5);
        let t = hourly_table(4);
        let obs = assemble_observation(&t, t.timestamps()[0], &spec).unwrap();
        assert_eq!(obs, vec![0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn determinism_bitwise() {
        let t = hourly_table(200);
        let spec =
            ObservationSpec::new(MarketLevel::DayAhead, vec!["da_price".into()], 3);
        let a = assemble_observation(&t, t.timestamps()[100], &spec).unwrap();
        let b = assemble_observation(&t, t.timestamps()[100], &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn insufficient_history_rejected() {
        let t = hourly_table(50);
        let spec =
            ObservationSpec::new(MarketLevel::DayAhead, vec!["da_price".into()], 3);
        let err = assemble_observation(&t, t.timestamps()[10], &spec).unwrap_err();
        assert!(matches!(err, DataError::InsufficientHistory { .. }));
    }

    #[test]
    fn day_ahead_window_strides_on_quarter_table() {
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let n = 400;
        let table = MarketTable::new(
            Resolution::QuarterHourly,
            (0..n).map(|i| start + chrono::Duration::minutes(15 * i as i64)).collect(),
            (0..n).map(|i| i as f64).collect(),
            vec![None; n],
            vec![None; n],
            vec![RegulationState::Balanced; n],
            vec![],
        )
        .unwrap();
        let spec = ObservationSpec {
            level: MarketLevel::DayAhead,
            features: vec!["da_price".into()],
            lookback_days: 0,
        };
        // One step at the hourly stride is just the current row.
        let obs = assemble_observation(&table, table.timestamps()[399], &spec).unwrap();
        assert_eq!(obs, vec![399.0]);
        let spec2 = ObservationSpec { lookback_days: 1, ..spec };
        let obs2 = assemble_observation(&table, table.timestamps()[399], &spec2).unwrap();
        assert_eq!(obs2.len(), 24);
        assert_eq!(obs2[23], 399.0);
        assert_eq!(obs2[22], 395.0); // one hour = 4 quarter rows back
    }

    #[test]
    fn standardizer_freezes_training_stats() {
        let t = hourly_table(100);
        let s = Standardizer::fit(&t, &["a".to_string()], 0, 50).unwrap();
        let z = s.apply(&[s.mean[0]]).unwrap();
        assert!(z[0].abs() < 1e-12);
        let mut window = vec![0.0, 2.0, 4.0];
        s.apply_windowed(&mut window);
        assert!((window[1] - (2.0 - s.mean[0]) / s.std[0]).abs() < 1e-12);
    }
}
