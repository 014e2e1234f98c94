//! Delimited-text loading and saving of market tables.
//!
//! File format: comma-separated, header row, ISO-8601 UTC timestamps in the
//! `timestamp` column, one row per interval. Clearing-price cells may be
//! empty. The column registry lives in `docs/columns.md`.

use std::path::Path;

use chrono::{DateTime, Utc};

use super::table::{columns, MarketTable, RegulationState, Resolution};
use super::DataError;

/// Load and validate a market table.
///
/// `schema` is the expected column list (order-insensitive, `timestamp`
/// implied); a missing column is an error, as is any timestamp gap or
/// non-finite value. When `expand_hourly` is set an hourly file is
/// forward-filled onto quarter-hour resolution (each row repeated four
/// times); otherwise the file resolution is kept.
pub fn load_market_table(
    path: &Path,
    schema: &[&str],
    resolution: Resolution,
    expand_hourly: bool,
) -> Result<MarketTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => DataError::Csv(e),
        })?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();

    for required in std::iter::once(&columns::TIMESTAMP).chain(schema.iter()) {
        if !headers.iter().any(|h| h == required) {
            return Err(DataError::MissingColumn { column: required.to_string() });
        }
    }

    let col_idx = |name: &str| headers.iter().position(|h| h == name);
    let ts_idx = col_idx(columns::TIMESTAMP).unwrap();
    let da_idx = col_idx(columns::DA_PRICE);
    let bid_idx = col_idx(columns::BM_BID_CLEARING);
    let ask_idx = col_idx(columns::BM_ASK_CLEARING);
    let state_idx = col_idx(columns::REGULATION_STATE);
    let fundamental_headers: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !columns::CORE.contains(&h.as_str()))
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let mut timestamps: Vec<DateTime<Utc>> = Vec::new();
    let mut da_price = Vec::new();
    let mut bid = Vec::new();
    let mut ask = Vec::new();
    let mut state = Vec::new();
    let mut fundamentals: Vec<(String, Vec<f64>)> = fundamental_headers
        .iter()
        .map(|(_, h)| (h.clone(), Vec::new()))
        .collect();

    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let line_no = line + 2; // header is line 1
        let raw_ts = record.get(ts_idx).unwrap_or("");
        let ts = DateTime::parse_from_rfc3339(raw_ts)
            .map(|t| t.with_timezone(&Utc))
            .or_else(|_| {
                chrono::NaiveDateTime::parse_from_str(raw_ts, "%Y-%m-%dT%H:%M:%S")
                    .map(|t| t.and_utc())
            })
            .map_err(|e| DataError::ParseError {
                line: line_no,
                column: columns::TIMESTAMP.to_string(),
                value: raw_ts.to_string(),
                reason: e.to_string(),
            })?;
        timestamps.push(ts);

        let parse_f64 = |idx: usize, name: &str| -> Result<f64, DataError> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|e| DataError::ParseError {
                line: line_no,
                column: name.to_string(),
                value: raw.to_string(),
                reason: e.to_string(),
            })
        };
        let parse_opt = |idx: Option<usize>, name: &str| -> Result<Option<f64>, DataError> {
            match idx {
                None => Ok(None),
                Some(i) => {
                    let raw = record.get(i).unwrap_or("");
                    if raw.is_empty() {
                        Ok(None)
                    } else {
                        parse_f64(i, name).map(Some)
                    }
                }
            }
        };

        da_price.push(match da_idx {
            Some(i) => parse_f64(i, columns::DA_PRICE)?,
            None => 0.0,
        });
        bid.push(parse_opt(bid_idx, columns::BM_BID_CLEARING)?);
        ask.push(parse_opt(ask_idx, columns::BM_ASK_CLEARING)?);
        state.push(match state_idx {
            Some(i) => {
                let raw = record.get(i).unwrap_or("");
                RegulationState::parse(raw).ok_or_else(|| DataError::ParseError {
                    line: line_no,
                    column: columns::REGULATION_STATE.to_string(),
                    value: raw.to_string(),
                    reason: "expected surplus/shortage/balanced".to_string(),
                })?
            }
            None => RegulationState::Balanced,
        });
        for ((idx, name), (_, col)) in fundamental_headers.iter().zip(fundamentals.iter_mut()) {
            col.push(parse_f64(*idx, name)?);
        }
    }

    let table = MarketTable::new(resolution, timestamps, da_price, bid, ask, state, fundamentals)?;
    if expand_hourly && resolution == Resolution::Hourly {
        table.expand_to_quarter_hourly()
    } else {
        Ok(table)
    }
}

/// Write a table in the load format. Floats use the shortest decimal form
/// that round-trips exactly.
pub fn save_market_table(table: &MarketTable, path: &Path) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut header: Vec<String> = vec![
        columns::TIMESTAMP.into(),
        columns::DA_PRICE.into(),
        columns::BM_BID_CLEARING.into(),
        columns::BM_ASK_CLEARING.into(),
        columns::REGULATION_STATE.into(),
    ];
    header.extend(table.fundamental_names().iter().cloned());
    writer.write_record(&header)?;

    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for i in 0..table.len() {
        let rec = table.record(i);
        let mut row: Vec<String> = vec![
            rec.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            rec.da_price.to_string(),
            fmt_opt(rec.bm_bid_clearing),
            fmt_opt(rec.bm_ask_clearing),
            rec.regulation_state.name().to_string(),
        ];
        for name in table.fundamental_names() {
            row.push(rec.fundamentals[name].to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn well_formed_quarter_day_loads() {
        let dir = tempdir();
        let mut body = String::from("timestamp,da_price,bm_bid_clearing,bm_ask_clearing,regulation_state,load\n");
        let start = chrono::Utc::now().date_naive().and_hms_opt(0, 0, 0).unwrap().and_utc();
        for q in 0..96 {
            let t = start + chrono::Duration::minutes(15 * q);
            body.push_str(&format!(
                "{},50,40,60,balanced,100\n",
                t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            ));
        }
        let path = write_file(dir.path(), "day.csv", &body);
        let table = load_market_table(
            &path,
            &["da_price", "load"],
            Resolution::QuarterHourly,
            false,
        )
        .unwrap();
        assert_eq!(table.len(), 96);
    }

    #[test]
    fn missing_row_names_the_gap() {
        let dir = tempdir();
        let body = "timestamp,da_price,regulation_state\n\
                    2020-01-01T03:00:00Z,50,balanced\n\
                    2020-01-01T03:30:00Z,50,balanced\n";
        let path = write_file(dir.path(), "gap.csv", body);
        let err =
            load_market_table(&path, &["da_price"], Resolution::QuarterHourly, false).unwrap_err();
        match err {
            DataError::GapInTimestamps { expected, .. } => {
                assert_eq!(expected.to_rfc3339_opts(chrono::SecondsFormat::Secs, true), "2020-01-01T03:15:00Z");
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn missing_column_is_an_error() {
        let dir = tempdir();
        let body = "timestamp,da_price\n2020-01-01T00:00:00Z,50\n";
        let path = write_file(dir.path(), "cols.csv", body);
        let err =
            load_market_table(&path, &["da_price", "load"], Resolution::QuarterHourly, false)
                .unwrap_err();
        assert!(matches!(err, DataError::MissingColumn { column } if column == "load"));
    }

    #[test]
    fn hourly_file_expands_under_flag() {
        let dir = tempdir();
        let body = "timestamp,da_price,regulation_state\n\
                    2020-01-01T00:00:00Z,30,surplus\n\
                    2020-01-01T01:00:00Z,70,shortage\n";
        let path = write_file(dir.path(), "hourly.csv", body);
        let table =
            load_market_table(&path, &["da_price"], Resolution::Hourly, true).unwrap();
        assert_eq!(table.resolution(), Resolution::QuarterHourly);
        assert_eq!(table.len(), 8);
        assert_eq!(table.da_price(), &[30.0, 30.0, 30.0, 30.0, 70.0, 70.0, 70.0, 70.0]);
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let dir = tempdir();
        let table = crate::market_data::generate_synthetic_market(
            &crate::market_data::SynthConfig { days: 2, seed: 11, ..Default::default() },
        )
        .unwrap();
        let path = dir.path().join("rt.csv");
        save_market_table(&table, &path).unwrap();
        let schema: Vec<&str> = table.fundamental_names().iter().map(|s| s.as_str()).collect();
        let loaded =
            load_market_table(&path, &schema, Resolution::QuarterHourly, false).unwrap();
        assert_eq!(table, loaded);
    }

    fn tempdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }
}
