//! Load and irradiance time series: CSV ingestion, validation, daily
//! aggregation, and round-trippable output.
//!
//! Input CSVs carry exactly two columns, `timestamp` plus one value column
//! (`load_kw` or `irradiance_kwh_m2`). Timestamps are ISO-8601 in UTC and
//! must be strictly increasing with uniform spacing; values must be
//! nonnegative. Power is kW, energy kWh, irradiance kWh/m^2 throughout.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveTime, TimeZone, Utc};

use crate::error::SeriesError;

/// Relative tolerance on timestamp spacing.
const SPACING_TOLERANCE: f64 = 1e-6;

/// A validated, uniformly spaced series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub timestamps: Vec<DateTime<Utc>>,
    pub values: Vec<f64>,
    /// Spacing derived from the timestamps, hours.
    pub dt_hours: f64,
}

impl TimeSeries {
    /// Builds a series from parallel vectors, enforcing ordering, uniform
    /// spacing, and nonnegative values. `origin` names the source in errors.
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        values: Vec<f64>,
        origin: &str,
    ) -> Result<Self, SeriesError> {
        if timestamps.is_empty() {
            return Err(SeriesError::Empty {
                path: origin.to_string(),
            });
        }
        if timestamps.len() < 2 {
            return Err(SeriesError::TooShort {
                path: origin.to_string(),
            });
        }
        assert_eq!(timestamps.len(), values.len());
        let dt_hours = (timestamps[1] - timestamps[0]).num_milliseconds() as f64 / 3_600_000.0;
        for (row, pair) in timestamps.windows(2).enumerate() {
            let gap = (pair[1] - pair[0]).num_milliseconds() as f64 / 3_600_000.0;
            if gap <= 0.0 {
                return Err(SeriesError::NonMonotonicTimestamps {
                    path: origin.to_string(),
                    row: row + 2,
                });
            }
            if (gap - dt_hours).abs() > SPACING_TOLERANCE * dt_hours.max(1.0) {
                return Err(SeriesError::NonUniformSpacing {
                    path: origin.to_string(),
                    row: row + 2,
                    expected_hours: dt_hours,
                    found_hours: gap,
                });
            }
        }
        for (row, &value) in values.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(SeriesError::NegativeValue {
                    path: origin.to_string(),
                    row: row + 1,
                    value,
                });
            }
        }
        Ok(Self {
            timestamps,
            values,
            dt_hours,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Collapses sub-daily samples to one daily mean per calendar date,
    /// stamped at noon. The result spans the dates present in the input.
    pub fn daily_mean(&self, origin: &str) -> Result<TimeSeries, SeriesError> {
        let mut buckets: BTreeMap<chrono::NaiveDate, (f64, usize)> = BTreeMap::new();
        for (ts, &value) in self.timestamps.iter().zip(&self.values) {
            let entry = buckets.entry(ts.date_naive()).or_insert((0.0, 0));
            entry.0 += value;
            entry.1 += 1;
        }
        let noon = NaiveTime::from_hms_opt(12, 0, 0).unwrap();
        let mut timestamps = Vec::with_capacity(buckets.len());
        let mut values = Vec::with_capacity(buckets.len());
        for (date, (sum, count)) in buckets {
            timestamps.push(Utc.from_utc_datetime(&date.and_time(noon)));
            values.push(sum / count as f64);
        }
        TimeSeries::new(timestamps, values, origin)
    }

    /// Writes the series as a two-column CSV with the given value header.
    pub fn write_csv(&self, path: &Path, value_column: &str) -> Result<(), SeriesError> {
        let mut out = String::with_capacity(32 * self.len());
        out.push_str("timestamp,");
        out.push_str(value_column);
        out.push('\n');
        for (ts, value) in self.timestamps.iter().zip(&self.values) {
            out.push_str(&ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
            out.push(',');
            out.push_str(&format!("{value}"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| SeriesError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Month (1-12) of each entry, for seasonal aggregation.
    pub fn months(&self) -> Vec<u32> {
        self.timestamps.iter().map(|ts| ts.month()).collect()
    }
}

/// Parses a load series (`timestamp,load_kw`).
pub fn parse_load_csv(path: &Path) -> Result<TimeSeries, SeriesError> {
    parse_two_column_csv(path, "load_kw")
}

/// Parses an irradiance series (`timestamp,irradiance_kwh_m2`).
pub fn parse_irradiance_csv(path: &Path) -> Result<TimeSeries, SeriesError> {
    parse_two_column_csv(path, "irradiance_kwh_m2")
}

fn parse_two_column_csv(path: &Path, value_column: &str) -> Result<TimeSeries, SeriesError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| SeriesError::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());

    let headers = reader
        .headers()
        .map_err(|source| SeriesError::Csv {
            path: display.clone(),
            source,
        })?
        .clone();
    let expected = format!("timestamp,{value_column}");
    let found = headers.iter().collect::<Vec<_>>().join(",");
    if found != expected {
        return Err(SeriesError::BadHeader {
            path: display,
            expected,
            found,
        });
    }

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, after the header
        let record = record.map_err(|source| SeriesError::Csv {
            path: display.clone(),
            source,
        })?;
        let ts_text = record.get(0).unwrap_or_default();
        let ts = DateTime::parse_from_rfc3339(ts_text)
            .map(|dt| dt.with_timezone(&Utc))
            .map_err(|_| SeriesError::BadTimestamp {
                path: display.clone(),
                row,
                text: ts_text.to_string(),
            })?;
        let value_text = record.get(1).unwrap_or_default();
        let value: f64 = value_text.parse().map_err(|_| SeriesError::BadValue {
            path: display.clone(),
            row,
            text: value_text.to_string(),
        })?;
        timestamps.push(ts);
        values.push(value);
    }
    if timestamps.is_empty() {
        return Err(SeriesError::Empty { path: display });
    }
    TimeSeries::new(timestamps, values, &display)
}
