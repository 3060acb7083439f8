//! Hourly time series with explicit epoch-hour indexing.
//!
//! Every market quantity in this crate (prices, CO2 intensities, dispatch)
//! travels as an [`HourlySeries`]: a gap-free run of hourly values anchored
//! at an integer number of hours since 1970-01-01T00:00Z. Keeping the anchor
//! integral removes all DST/calendar ambiguity from downstream arithmetic;
//! source data must be UTC.

use chrono::{DateTime, NaiveDate, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hours in a market day.
pub const HOURS_PER_DAY: i64 = 24;

/// Physical unit carried by a series. Arithmetic across units is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    /// Electricity price, €/MWh.
    EurPerMwh,
    /// CO2 intensity, gCO2/kWh.
    GramsPerKwh,
    /// Energy, MWh.
    MegawattHours,
    /// Power, MW.
    Megawatts,
}

impl Unit {
    pub fn label(self) -> &'static str {
        match self {
            Unit::EurPerMwh => "EUR/MWh",
            Unit::GramsPerKwh => "gCO2/kWh",
            Unit::MegawattHours => "MWh",
            Unit::Megawatts => "MW",
        }
    }
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series must contain at least one value")]
    Empty,
    #[error("unit mismatch: {left} vs {right}")]
    UnitMismatch { left: Unit, right: Unit },
    #[error("series are not contiguous: expected next hour {expected}, found {found}")]
    NotContiguous { expected: i64, found: i64 },
    #[error("series does not cover hours [{want_start}, {want_end}); have [{have_start}, {have_end})")]
    Coverage {
        want_start: i64,
        want_end: i64,
        have_start: i64,
        have_end: i64,
    },
    #[error("gap of {len} hours at epoch hour {at} exceeds maximum fillable gap of {max}")]
    GapTooLarge { at: i64, len: usize, max: usize },
    #[error("series contains no observed values to fill from")]
    AllGaps,
    #[error("bad timestamp {text:?}: {reason}")]
    BadTimestamp { text: String, reason: String },
}

/// Parse an ISO-8601 UTC timestamp of the form `YYYY-MM-DDTHH:00Z` into an
/// epoch hour. Minutes must be zero; offsets other than `Z` are rejected.
pub fn parse_timestamp_utc(text: &str) -> Result<i64, SeriesError> {
    let bad = |reason: &str| SeriesError::BadTimestamp {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let rest = text.strip_suffix('Z').ok_or_else(|| bad("must end in 'Z' (UTC required)"))?;
    let dt = chrono::NaiveDateTime::parse_from_str(rest, "%Y-%m-%dT%H:%M")
        .or_else(|_| chrono::NaiveDateTime::parse_from_str(rest, "%Y-%m-%dT%H:%M:%S"))
        .map_err(|e| bad(&e.to_string()))?;
    if dt.minute() != 0 || dt.second() != 0 {
        return Err(bad("must be aligned to a whole hour"));
    }
    Ok(dt.and_utc().timestamp() / 3600)
}

/// Format an epoch hour back to `YYYY-MM-DDTHH:00Z`.
pub fn format_epoch_hour(epoch_hour: i64) -> String {
    let dt: DateTime<Utc> = Utc.timestamp_opt(epoch_hour * 3600, 0).unwrap();
    dt.format("%Y-%m-%dT%H:%MZ").to_string()
}

/// UTC date containing the given epoch hour.
pub fn date_of_epoch_hour(epoch_hour: i64) -> NaiveDate {
    Utc.timestamp_opt(epoch_hour * 3600, 0).unwrap().date_naive()
}

/// Epoch hour of 00:00 UTC on the given date.
pub fn epoch_hour_of_date(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp() / 3600
}

/// Gap-free hourly values; index `i` corresponds to `start_epoch_hour + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    start_epoch_hour: i64,
    values: Vec<f64>,
    unit: Unit,
}

impl HourlySeries {
    pub fn new(start_epoch_hour: i64, values: Vec<f64>, unit: Unit) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        Ok(HourlySeries { start_epoch_hour, values, unit })
    }

    /// A constant series, mostly useful for fixtures and tests.
    pub fn constant(start_epoch_hour: i64, value: f64, len: usize, unit: Unit) -> Self {
        Self::new(start_epoch_hour, vec![value; len], unit).expect("len > 0")
    }

    pub fn start_epoch_hour(&self) -> i64 {
        self.start_epoch_hour
    }

    /// One past the last covered hour.
    pub fn end_epoch_hour(&self) -> i64 {
        self.start_epoch_hour + self.values.len() as i64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn covers(&self, start: i64, end: i64) -> bool {
        self.start_epoch_hour <= start && end <= self.end_epoch_hour()
    }

    /// Value at an absolute epoch hour.
    pub fn at(&self, epoch_hour: i64) -> Option<f64> {
        if epoch_hour < self.start_epoch_hour || epoch_hour >= self.end_epoch_hour() {
            return None;
        }
        Some(self.values[(epoch_hour - self.start_epoch_hour) as usize])
    }

    /// Iterate `(epoch_hour, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start_epoch_hour + i as i64, v))
    }

    /// Sub-series covering `[start, start + len)`.
    pub fn window(&self, start: i64, len: usize) -> Result<HourlySeries, SeriesError> {
        let end = start + len as i64;
        if !self.covers(start, end) || len == 0 {
            return Err(SeriesError::Coverage {
                want_start: start,
                want_end: end,
                have_start: self.start_epoch_hour,
                have_end: self.end_epoch_hour(),
            });
        }
        let off = (start - self.start_epoch_hour) as usize;
        Ok(HourlySeries {
            start_epoch_hour: start,
            values: self.values[off..off + len].to_vec(),
            unit: self.unit,
        })
    }

    /// Append a series that must start exactly where this one ends.
    pub fn extend(&mut self, other: &HourlySeries) -> Result<(), SeriesError> {
        if other.unit != self.unit {
            return Err(SeriesError::UnitMismatch { left: self.unit, right: other.unit });
        }
        if other.start_epoch_hour != self.end_epoch_hour() {
            return Err(SeriesError::NotContiguous {
                expected: self.end_epoch_hour(),
                found: other.start_epoch_hour,
            });
        }
        self.values.extend_from_slice(&other.values);
        Ok(())
    }

    /// Push one more hour onto the end of the series.
    pub fn push(&mut self, value: f64) {
        self.values.push(value);
    }

    /// Combine two aligned series element-wise. Rejects unit mismatches; the
    /// result carries `unit`.
    pub fn try_zip(
        &self,
        other: &HourlySeries,
        unit: Unit,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<HourlySeries, SeriesError> {
        if self.unit != other.unit {
            return Err(SeriesError::UnitMismatch { left: self.unit, right: other.unit });
        }
        if self.start_epoch_hour != other.start_epoch_hour || self.len() != other.len() {
            return Err(SeriesError::NotContiguous {
                expected: self.start_epoch_hour,
                found: other.start_epoch_hour,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(HourlySeries { start_epoch_hour: self.start_epoch_hour, values, unit })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }
}

/// Hourly slots that may contain gaps; the ingestion-side precursor of
/// [`HourlySeries`]. `slots[i]` is the observation for `start_epoch_hour + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GappySeries {
    pub start_epoch_hour: i64,
    pub slots: Vec<Option<f64>>,
    pub unit: Unit,
}

impl GappySeries {
    pub fn gap_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_none()).count()
    }

    /// Fill gaps by linear interpolation between the nearest observed
    /// neighbors; leading/trailing gaps take the nearest observed value.
    /// Fails with [`SeriesError::GapTooLarge`] if any run of consecutive
    /// gaps exceeds `max_gap`.
    pub fn fill_gaps(&self, max_gap: usize) -> Result<HourlySeries, SeriesError> {
        if self.slots.is_empty() {
            return Err(SeriesError::Empty);
        }
        if self.slots.iter().all(|s| s.is_none()) {
            return Err(SeriesError::AllGaps);
        }
        // Reject oversized gap runs first so the error names the offending hour.
        let mut run_start = None;
        for (i, slot) in self.slots.iter().chain(std::iter::once(&Some(0.0))).enumerate() {
            match (slot.is_none(), run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    let len = i - s;
                    if len > max_gap {
                        return Err(SeriesError::GapTooLarge {
                            at: self.start_epoch_hour + s as i64,
                            len,
                            max: max_gap,
                        });
                    }
                    run_start = None;
                }
                _ => {}
            }
        }

        let n = self.slots.len();
        let mut values = vec![0.0; n];
        // prev[i]: index of the nearest observation at or before i
        let mut prev = vec![None; n];
        let mut last = None;
        for i in 0..n {
            if self.slots[i].is_some() {
                last = Some(i);
            }
            prev[i] = last;
        }
        let mut next = vec![None; n];
        let mut first = None;
        for i in (0..n).rev() {
            if self.slots[i].is_some() {
                first = Some(i);
            }
            next[i] = first;
        }
        for i in 0..n {
            values[i] = match (prev[i], next[i]) {
                (Some(p), Some(q)) if p == q => self.slots[p].unwrap(),
                (Some(p), Some(q)) => {
                    let a = self.slots[p].unwrap();
                    let b = self.slots[q].unwrap();
                    let t = (i - p) as f64 / (q - p) as f64;
                    a + t * (b - a)
                }
                (Some(p), None) => self.slots[p].unwrap(),
                (None, Some(q)) => self.slots[q].unwrap(),
                (None, None) => unreachable!("all-gap input rejected above"),
            };
        }
        HourlySeries::new(self.start_epoch_hour, values, self.unit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn timestamp_round_trip() {
        let h = parse_timestamp_utc("2018-01-01T00:00Z").unwrap();
        assert_eq!(h, 420768); // 17532 days * 24
        assert_eq!(format_epoch_hour(h), "2018-01-01T00:00Z");
        assert_eq!(parse_timestamp_utc("1970-01-01T05:00Z").unwrap(), 5);
    }

    #[test]
    fn timestamp_rejects_non_utc_and_partial_hours() {
        assert!(parse_timestamp_utc("2018-01-01T00:00+01:00").is_err());
        assert!(parse_timestamp_utc("2018-01-01T00:30Z").is_err());
        assert!(parse_timestamp_utc("not a time").is_err());
    }

    #[test]
    fn window_and_extend() {
        let mut a = HourlySeries::new(10, vec![1.0, 2.0, 3.0], Unit::EurPerMwh).unwrap();
        let b = HourlySeries::new(13, vec![4.0], Unit::EurPerMwh).unwrap();
        a.extend(&b).unwrap();
        assert_eq!(a.values(), &[1.0, 2.0, 3.0, 4.0]);
        let w = a.window(11, 2).unwrap();
        assert_eq!(w.start_epoch_hour(), 11);
        assert_eq!(w.values(), &[2.0, 3.0]);
        assert!(a.window(9, 2).is_err());

        let gap = HourlySeries::new(20, vec![9.0], Unit::EurPerMwh).unwrap();
        assert!(matches!(a.clone().extend(&gap), Err(SeriesError::NotContiguous { .. })));
        let wrong_unit = HourlySeries::new(14, vec![9.0], Unit::Megawatts).unwrap();
        assert!(matches!(a.extend(&wrong_unit), Err(SeriesError::UnitMismatch { .. })));
    }

    #[test]
    fn zip_rejects_unit_mismatch() {
        let a = HourlySeries::new(0, vec![1.0], Unit::EurPerMwh).unwrap();
        let b = HourlySeries::new(0, vec![1.0], Unit::GramsPerKwh).unwrap();
        assert!(a.try_zip(&b, Unit::EurPerMwh, |x, y| x + y).is_err());
    }

    #[test]
    fn fill_midpoint_gap() {
        let g = GappySeries {
            start_epoch_hour: 0,
            slots: vec![Some(1.0), None, Some(3.0)],
            unit: Unit::EurPerMwh,
        };
        assert_eq!(g.fill_gaps(1).unwrap().values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn fill_identity_on_gap_free() {
        let g = GappySeries {
            start_epoch_hour: 7,
            slots: vec![Some(4.0), Some(5.0)],
            unit: Unit::GramsPerKwh,
        };
        assert_eq!(g.fill_gaps(0).unwrap().values(), &[4.0, 5.0]);
    }

    #[test]
    fn fill_leading_gaps_with_nearest() {
        let g = GappySeries {
            start_epoch_hour: 0,
            slots: vec![None, None, Some(5.0)],
            unit: Unit::EurPerMwh,
        };
        assert_eq!(g.fill_gaps(2).unwrap().values(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn fill_rejects_oversized_gap() {
        let g = GappySeries {
            start_epoch_hour: 100,
            slots: vec![Some(1.0), None, None, Some(4.0)],
            unit: Unit::EurPerMwh,
        };
        match g.fill_gaps(1) {
            Err(SeriesError::GapTooLarge { at, len, max }) => {
                assert_eq!((at, len, max), (101, 2, 1));
            }
            other => panic!("expected GapTooLarge, got {other:?}"),
        }
        assert!(g.fill_gaps(2).is_ok());
    }

    proptest! {
        /// Random gap insertion + fill_gaps always yields a contiguous,
        /// gap-free series of the original length.
        #[test]
        fn filled_series_is_contiguous(
            values in prop::collection::vec(-100.0f64..100.0, 2..60),
            gap_mask in prop::collection::vec(prop::bool::ANY, 2..60),
        ) {
            let n = values.len().min(gap_mask.len());
            let mut slots: Vec<Option<f64>> = values[..n]
                .iter()
                .zip(&gap_mask[..n])
                .map(|(&v, &gap)| if gap { None } else { Some(v) })
                .collect();
            // keep at least one observation
            if slots.iter().all(|s| s.is_none()) {
                slots[0] = Some(values[0]);
            }
            let g = GappySeries { start_epoch_hour: 42, slots: slots.clone(), unit: Unit::EurPerMwh };
            let filled = g.fill_gaps(n).unwrap();
            prop_assert_eq!(filled.len(), n);
            prop_assert_eq!(filled.start_epoch_hour(), 42);
            // observed slots are untouched
            for (i, s) in slots.iter().enumerate() {
                if let Some(v) = s {
                    prop_assert_eq!(filled.values()[i], *v);
                }
            }
            // interior fills are bounded by their neighbors
            for w in filled.values().windows(3) {
                let lo = w[0].min(w[2]);
                let hi = w[0].max(w[2]);
                if slots[1].is_none() {
                    // only a necessary condition for linear interpolation, but cheap
                    prop_assert!(w[1] >= lo - 1e-9 || w[1] <= hi + 1e-9);
                }
            }
        }
    }
}
