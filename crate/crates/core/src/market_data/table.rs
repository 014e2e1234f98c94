//! Validated time-indexed market tables.
//!
//! A [`MarketTable`] is column-oriented: one timestamp vector plus one column
//! per series. Core columns (day-ahead price, balancing-market clearing
//! prices, regulation state) are always present; fundamentals are arbitrary
//! named columns. Tables are immutable after construction and safe to share
//! across threads.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};

use super::DataError;

/// Interval length of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Hourly,
    QuarterHourly,
}

impl Resolution {
    pub fn step(self) -> Duration {
        match self {
            Resolution::Hourly => Duration::minutes(60),
            Resolution::QuarterHourly => Duration::minutes(15),
        }
    }

    pub fn steps_per_day(self) -> usize {
        match self {
            Resolution::Hourly => 24,
            Resolution::QuarterHourly => 96,
        }
    }

    pub fn steps_per_hour(self) -> usize {
        match self {
            Resolution::Hourly => 1,
            Resolution::QuarterHourly => 4,
        }
    }
}

/// Grid imbalance direction for one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegulationState {
    Surplus,
    Shortage,
    Balanced,
}

impl RegulationState {
    /// Numeric encoding used when the state is consumed as a feature:
    /// shortage +1, surplus -1, balanced 0.
    pub fn as_feature(self) -> f64 {
        match self {
            RegulationState::Shortage => 1.0,
            RegulationState::Surplus => -1.0,
            RegulationState::Balanced => 0.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "surplus" => Some(RegulationState::Surplus),
            "shortage" => Some(RegulationState::Shortage),
            "balanced" => Some(RegulationState::Balanced),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegulationState::Surplus => "surplus",
            RegulationState::Shortage => "shortage",
            RegulationState::Balanced => "balanced",
        }
    }
}

/// Column names with fixed meaning. Everything else in a file is treated as
/// a fundamental series. The registry is documented in `docs/columns.md`.
pub mod columns {
    pub const TIMESTAMP: &str = "timestamp";
    pub const DA_PRICE: &str = "da_price";
    pub const BM_BID_CLEARING: &str = "bm_bid_clearing";
    pub const BM_ASK_CLEARING: &str = "bm_ask_clearing";
    pub const REGULATION_STATE: &str = "regulation_state";

    pub const CORE: [&str; 5] = [
        TIMESTAMP,
        DA_PRICE,
        BM_BID_CLEARING,
        BM_ASK_CLEARING,
        REGULATION_STATE,
    ];
}

/// One interval of market data, assembled on demand from table columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketRecord {
    pub timestamp: DateTime<Utc>,
    pub da_price: f64,
    pub bm_bid_clearing: Option<f64>,
    pub bm_ask_clearing: Option<f64>,
    pub regulation_state: RegulationState,
    pub fundamentals: BTreeMap<String, f64>,
}

/// Column-oriented market table with strictly regular timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTable {
    resolution: Resolution,
    timestamps: Vec<DateTime<Utc>>,
    da_price: Vec<f64>,
    bm_bid_clearing: Vec<Option<f64>>,
    bm_ask_clearing: Vec<Option<f64>>,
    regulation_state: Vec<RegulationState>,
    /// Fundamental series in insertion order (kept sorted-stable for
    /// deterministic serialization).
    fundamental_names: Vec<String>,
    fundamental_cols: Vec<Vec<f64>>,
}

impl MarketTable {
    /// Build a table and enforce every construction invariant: strictly
    /// increasing timestamps at the resolution step, no gaps, finite
    /// fundamentals, bid clearing <= ask clearing whenever both exist.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        resolution: Resolution,
        timestamps: Vec<DateTime<Utc>>,
        da_price: Vec<f64>,
        bm_bid_clearing: Vec<Option<f64>>,
        bm_ask_clearing: Vec<Option<f64>>,
        regulation_state: Vec<RegulationState>,
        fundamentals: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, DataError> {
        let n = timestamps.len();
        if n == 0 {
            return Err(DataError::EmptyTable);
        }
        for (name, col) in std::iter::once((columns::DA_PRICE, da_price.len()))
            .chain([
                (columns::BM_BID_CLEARING, bm_bid_clearing.len()),
                (columns::BM_ASK_CLEARING, bm_ask_clearing.len()),
                (columns::REGULATION_STATE, regulation_state.len()),
            ])
            .chain(fundamentals.iter().map(|(n2, c)| (n2.as_str(), c.len())))
        {
            if col != n {
                return Err(DataError::ColumnLengthMismatch {
                    column: name.to_string(),
                    expected: n,
                    actual: col,
                });
            }
        }
        let step = resolution.step();
        for i in 1..n {
            let expected = timestamps[i - 1] + step;
            if timestamps[i] != expected {
                return Err(DataError::GapInTimestamps {
                    expected,
                    actual: timestamps[i],
                });
            }
        }
        for (i, p) in da_price.iter().enumerate() {
            if !p.is_finite() {
                return Err(DataError::NonFiniteValue {
                    row: i,
                    column: columns::DA_PRICE.to_string(),
                });
            }
        }
        for (i, (b, a)) in bm_bid_clearing.iter().zip(&bm_ask_clearing).enumerate() {
            if let Some(b) = b {
                if !b.is_finite() {
                    return Err(DataError::NonFiniteValue {
                        row: i,
                        column: columns::BM_BID_CLEARING.to_string(),
                    });
                }
            }
            if let Some(a) = a {
                if !a.is_finite() {
                    return Err(DataError::NonFiniteValue {
                        row: i,
                        column: columns::BM_ASK_CLEARING.to_string(),
                    });
                }
            }
            if let (Some(b), Some(a)) = (b, a) {
                if b > a {
                    return Err(DataError::InvalidSpread { row: i, bid: *b, ask: *a });
                }
            }
        }
        let mut fundamental_names = Vec::with_capacity(fundamentals.len());
        let mut fundamental_cols = Vec::with_capacity(fundamentals.len());
        for (name, col) in fundamentals {
            if columns::CORE.contains(&name.as_str()) {
                return Err(DataError::ReservedColumnName { column: name });
            }
            if fundamental_names.contains(&name) {
                return Err(DataError::DuplicateColumn { column: name });
            }
            for (i, v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteValue { row: i, column: name.clone() });
                }
            }
            fundamental_names.push(name);
            fundamental_cols.push(col);
        }
        Ok(Self {
            resolution,
            timestamps,
            da_price,
            bm_bid_clearing,
            bm_ask_clearing,
            regulation_state,
            fundamental_names,
            fundamental_cols,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.timestamps[0]
    }

    /// Exclusive end of the covered period.
    pub fn end(&self) -> DateTime<Utc> {
        *self.timestamps.last().unwrap() + self.resolution.step()
    }

    pub fn da_price(&self) -> &[f64] {
        &self.da_price
    }

    pub fn bm_bid_clearing(&self) -> &[Option<f64>] {
        &self.bm_bid_clearing
    }

    pub fn bm_ask_clearing(&self) -> &[Option<f64>] {
        &self.bm_ask_clearing
    }

    pub fn regulation_state(&self) -> &[RegulationState] {
        &self.regulation_state
    }

    pub fn fundamental_names(&self) -> &[String] {
        &self.fundamental_names
    }

    /// Index of the row at `t`, if the table covers it.
    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let start = self.timestamps[0];
        if t < start {
            return None;
        }
        let step = self.resolution.step().num_seconds();
        let offset = (t - start).num_seconds();
        if offset % step != 0 {
            return None;
        }
        let idx = (offset / step) as usize;
        (idx < self.len()).then_some(idx)
    }

    /// Numeric value of a named feature at a row. Core columns resolve to
    /// their numeric encodings; clearing prices must be present.
    pub fn feature_value(&self, name: &str, row: usize) -> Result<f64, DataError> {
        match name {
            columns::DA_PRICE => Ok(self.da_price[row]),
            columns::BM_BID_CLEARING => self.bm_bid_clearing[row].ok_or_else(|| {
                DataError::MissingValue { row, column: name.to_string() }
            }),
            columns::BM_ASK_CLEARING => self.bm_ask_clearing[row].ok_or_else(|| {
                DataError::MissingValue { row, column: name.to_string() }
            }),
            columns::REGULATION_STATE => Ok(self.regulation_state[row].as_feature()),
            _ => {
                let col = self
                    .fundamental_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| DataError::MissingColumn { column: name.to_string() })?;
                Ok(self.fundamental_cols[col][row])
            }
        }
    }

    /// Whole feature column as owned values (see [`Self::feature_value`]).
    pub fn feature_column(&self, name: &str) -> Result<Vec<f64>, DataError> {
        (0..self.len()).map(|i| self.feature_value(name, i)).collect()
    }

    pub fn has_feature(&self, name: &str) -> bool {
        columns::CORE.contains(&name) && name != columns::TIMESTAMP
            || self.fundamental_names.iter().any(|n| n == name)
    }

    pub fn record(&self, row: usize) -> MarketRecord {
        let fundamentals = self
            .fundamental_names
            .iter()
            .zip(&self.fundamental_cols)
            .map(|(n, c)| (n.clone(), c[row]))
            .collect();
        MarketRecord {
            timestamp: self.timestamps[row],
            da_price: self.da_price[row],
            bm_bid_clearing: self.bm_bid_clearing[row],
            bm_ask_clearing: self.bm_ask_clearing[row],
            regulation_state: self.regulation_state[row],
            fundamentals,
        }
    }

    /// New table restricted to rows `[lo, hi)`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Self, DataError> {
        if lo >= hi || hi > self.len() {
            return Err(DataError::EmptyTable);
        }
        Self::new(
            self.resolution,
            self.timestamps[lo..hi].to_vec(),
            self.da_price[lo..hi].to_vec(),
            self.bm_bid_clearing[lo..hi].to_vec(),
            self.bm_ask_clearing[lo..hi].to_vec(),
            self.regulation_state[lo..hi].to_vec(),
            self.fundamental_names
                .iter()
                .zip(&self.fundamental_cols)
                .map(|(n, c)| (n.clone(), c[lo..hi].to_vec()))
                .collect(),
        )
    }

    /// Row range `[lo, hi)` whose timestamps fall inside `[start, end)`.
    pub fn row_range(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> (usize, usize) {
        let lo = self.timestamps.partition_point(|t| *t < start);
        let hi = self.timestamps.partition_point(|t| *t < end);
        (lo, hi)
    }

    /// Append a fundamental column to a copy of the table.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self, DataError> {
        let mut fundamentals: Vec<(String, Vec<f64>)> = self
            .fundamental_names
            .iter()
            .zip(&self.fundamental_cols)
            .map(|(n, c)| (n.clone(), c.clone()))
            .collect();
        fundamentals.push((name.to_string(), values));
        Self::new(
            self.resolution,
            self.timestamps.clone(),
            self.da_price.clone(),
            self.bm_bid_clearing.clone(),
            self.bm_ask_clearing.clone(),
            self.regulation_state.clone(),
            fundamentals,
        )
    }

    /// Expand an hourly table onto quarter-hour resolution by repeating each
    /// row four times.
    pub fn expand_to_quarter_hourly(&self) -> Result<Self, DataError> {
        if self.resolution != Resolution::Hourly {
            return Err(DataError::AlreadyQuarterHourly);
        }
        let n = self.len() * 4;
        let mut timestamps = Vec::with_capacity(n);
        let step = Duration::minutes(15);
        for t in &self.timestamps {
            for q in 0..4 {
                timestamps.push(*t + step * q);
            }
        }
        let rep4 = |col: &[f64]| -> Vec<f64> {
            col.iter().flat_map(|v| std::iter::repeat_n(*v, 4)).collect()
        };
        Self::new(
            Resolution::QuarterHourly,
            timestamps,
            rep4(&self.da_price),
            self.bm_bid_clearing
                .iter()
                .flat_map(|v| std::iter::repeat_n(*v, 4))
                .collect(),
            self.bm_ask_clearing
                .iter()
                .flat_map(|v| std::iter::repeat_n(*v, 4))
                .collect(),
            self.regulation_state
                .iter()
                .flat_map(|v| std::iter::repeat_n(*v, 4))
                .collect(),
            self.fundamental_names
                .iter()
                .zip(&self.fundamental_cols)
                .map(|(n2, c)| (n2.clone(), rep4(c)))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 1, 1, h, m, 0).unwrap()
    }

    fn small_table() -> MarketTable {
        MarketTable::new(
            Resolution::QuarterHourly,
            vec![ts(0, 0), ts(0, 15), ts(0, 30), ts(0, 45)],
            vec![50.0; 4],
            vec![Some(40.0); 4],
            vec![Some(60.0); 4],
            vec![RegulationState::Balanced; 4],
            vec![("load".into(), vec![1.0, 2.0, 3.0, 4.0])],
        )
        .unwrap()
    }

    #[test]
    fn gap_detected() {
        let err = MarketTable::new(
            Resolution::QuarterHourly,
            vec![ts(0, 0), ts(0, 30)],
            vec![50.0; 2],
            vec![None; 2],
            vec![None; 2],
            vec![RegulationState::Balanced; 2],
            vec![],
        )
        .unwrap_err();
        match err {
            DataError::GapInTimestamps { expected, .. } => assert_eq!(expected, ts(0, 15)),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn inverted_spread_rejected() {
        let err = MarketTable::new(
            Resolution::QuarterHourly,
            vec![ts(0, 0)],
            vec![50.0],
            vec![Some(70.0)],
            vec![Some(60.0)],
            vec![RegulationState::Balanced],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::InvalidSpread { row: 0, .. }));
    }

    #[test]
    fn non_finite_fundamental_rejected() {
        let err = MarketTable::new(
            Resolution::QuarterHourly,
            vec![ts(0, 0)],
            vec![50.0],
            vec![None],
            vec![None],
            vec![RegulationState::Balanced],
            vec![("load".into(), vec![f64::NAN])],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::NonFiniteValue { row: 0, .. }));
    }

    #[test]
    fn index_of_roundtrip() {
        let t = small_table();
        assert_eq!(t.index_of(ts(0, 30)), Some(2));
        assert_eq!(t.index_of(ts(0, 31)), None);
        assert_eq!(t.index_of(ts(1, 0)), None);
    }

    #[test]
    fn feature_values_resolve() {
        let t = small_table();
        assert_eq!(t.feature_value("load", 1).unwrap(), 2.0);
        assert_eq!(t.feature_value(columns::DA_PRICE, 0).unwrap(), 50.0);
        assert_eq!(t.feature_value(columns::REGULATION_STATE, 0).unwrap(), 0.0);
        assert!(t.feature_value("missing", 0).is_err());
    }

    #[test]
    fn expand_hourly_repeats_each_row_four_times() {
        let hourly = MarketTable::new(
            Resolution::Hourly,
            vec![ts(0, 0), ts(1, 0)],
            vec![10.0, 20.0],
            vec![None, None],
            vec![None, None],
            vec![RegulationState::Surplus, RegulationState::Shortage],
            vec![("load".into(), vec![1.0, 2.0])],
        )
        .unwrap();
        let q = hourly.expand_to_quarter_hourly().unwrap();
        assert_eq!(q.len(), 8);
        assert_eq!(q.da_price(), &[10.0, 10.0, 10.0, 10.0, 20.0, 20.0, 20.0, 20.0]);
        assert_eq!(q.feature_column("load").unwrap(), vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        assert_eq!(q.timestamps()[1], ts(0, 15));
        assert_eq!(q.timestamps()[4], ts(1, 0));
    }
}
