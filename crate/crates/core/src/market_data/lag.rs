//! Lagged-feature construction.

use super::table::MarketTable;
use super::DataError;

/// Which features to lag and by how many table steps.
#[derive(Debug, Clone, Default)]
pub struct LagSpec {
    entries: Vec<(String, usize)>,
}

impl LagSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, lag_steps: usize) -> Self {
        self.entries.push((name.to_string(), lag_steps));
        self
    }

    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn max_lag(&self) -> usize {
        self.entries.iter().map(|(_, k)| *k).max().unwrap_or(0)
    }

    fn validate(&self, table: &MarketTable) -> Result<(), DataError> {
        for (i, (name, lag)) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|(n, k)| n == name && k == lag) {
                return Err(DataError::DuplicateLagEntry { name: name.clone(), lag: *lag });
            }
            if !table.has_feature(name) {
                return Err(DataError::MissingColumn { column: name.clone() });
            }
            if *lag >= table.len() {
                return Err(DataError::LagExceedsHistory { lag: *lag, rows: table.len() });
            }
        }
        Ok(())
    }
}

/// Column name of a lagged feature: lag 0 keeps the original name.
pub fn lagged_name(name: &str, lag: usize) -> String {
    if lag == 0 {
        name.to_string()
    } else {
        format!("{name}_lag{lag}")
    }
}

/// Produce a table whose fundamental columns are the requested lagged
/// features. Output row t carries, for each (name, k), the value of `name`
/// at input row t-k; the first max-lag rows are dropped, so the output has
/// `input length - max lag` rows. Core price/state columns stay aligned to
/// the surviving timestamps.
pub fn build_lagged_features(table: &MarketTable, spec: &LagSpec) -> Result<MarketTable, DataError> {
    spec.validate(table)?;
    let max_lag = spec.max_lag();
    let n_out = table.len() - max_lag;

    let mut fundamentals: Vec<(String, Vec<f64>)> = Vec::with_capacity(spec.entries().len());
    for (name, lag) in spec.entries() {
        // Core columns at lag 0 already survive into the output table.
        if *lag == 0 && super::table::columns::CORE.contains(&name.as_str()) {
            continue;
        }
        let source = table.feature_column(name)?;
        let col: Vec<f64> = (0..n_out).map(|t| source[t + max_lag - lag]).collect();
        fundamentals.push((lagged_name(name, *lag), col));
    }

    MarketTable::new(
        table.resolution(),
        table.timestamps()[max_lag..].to_vec(),
        table.da_price()[max_lag..].to_vec(),
        table.bm_bid_clearing()[max_lag..].to_vec(),
        table.bm_ask_clearing()[max_lag..].to_vec(),
        table.regulation_state()[max_lag..].to_vec(),
        fundamentals,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{RegulationState, Resolution};
    use chrono::{TimeZone, Utc};

    fn table_with_x(n: usize) -> MarketTable {
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        MarketTable::new(
            Resolution::Hourly,
            (0..n).map(|i| start + chrono::Duration::hours(i as i64)).collect(),
            vec![0.0; n],
            vec![None; n],
            vec![None; n],
            vec![RegulationState::Balanced; n],
            vec![("x".into(), (1..=n).map(|i| i as f64).collect())],
        )
        .unwrap()
    }

    #[test]
    fn zero_lag_is_identity_on_overlap() {
        let t = table_with_x(10);
        let lagged = build_lagged_features(&t, &LagSpec::new().with("x", 0)).unwrap();
        assert_eq!(lagged.len(), 10);
        assert_eq!(lagged.feature_column("x").unwrap(), t.feature_column("x").unwrap());
    }

    #[test]
    fn lag_24_shifts_by_a_day() {
        let t = table_with_x(48);
        let lagged = build_lagged_features(&t, &LagSpec::new().with("x", 24)).unwrap();
        assert_eq!(lagged.len(), 24);
        // Output row for hour 25 (index 0 after dropping 24 rows) sees x = 1.
        assert_eq!(lagged.feature_value("x_lag24", 0).unwrap(), 1.0);
        assert_eq!(lagged.timestamps()[0], t.timestamps()[24]);
    }

    #[test]
    fn two_lags_produce_two_columns() {
        let t = table_with_x(30);
        let lagged =
            build_lagged_features(&t, &LagSpec::new().with("x", 1).with("x", 24)).unwrap();
        assert_eq!(lagged.len(), 6);
        // Hand-enumerated: output row r corresponds to input row r+24.
        let l1 = lagged.feature_column("x_lag1").unwrap();
        let l24 = lagged.feature_column("x_lag24").unwrap();
        for r in 0..6 {
            assert_eq!(l1[r], (r + 24) as f64); // x at row r+23 is r+24
            assert_eq!(l24[r], (r + 1) as f64);
        }
    }

    #[test]
    fn duplicate_entry_rejected() {
        let t = table_with_x(10);
        let err = build_lagged_features(&t, &LagSpec::new().with("x", 1).with("x", 1)).unwrap_err();
        assert!(matches!(err, DataError::DuplicateLagEntry { .. }));
    }

    #[test]
    fn lag_exceeding_history_rejected() {
        let t = table_with_x(10);
        let err = build_lagged_features(&t, &LagSpec::new().with("x", 10)).unwrap_err();
        assert!(matches!(err, DataError::LagExceedsHistory { lag: 10, rows: 10 }));
    }

    #[test]
    fn lag_composition_equals_single_lag() {
        let t = table_with_x(40);
        let once = build_lagged_features(&t, &LagSpec::new().with("x", 7)).unwrap();
        let twice =
            build_lagged_features(&once, &LagSpec::new().with("x_lag7", 5)).unwrap();
        let direct = build_lagged_features(&t, &LagSpec::new().with("x", 12)).unwrap();
        assert_eq!(
            twice.feature_column("x_lag7_lag5").unwrap(),
            direct.feature_column("x_lag12").unwrap()
        );
        assert_eq!(twice.timestamps(), direct.timestamps());
    }
}
