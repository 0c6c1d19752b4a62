//! Simulated and measured pupil time series and their comparison.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One simulated frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time_ms: f64,
    pub luminance_blondels: f64,
    pub flux_lumens: f64,
    pub diameter_raw_mm: f64,
    pub diameter_final_mm: f64,
}

impl TraceRow {
    fn is_finite(&self) -> bool {
        self.time_ms.is_finite()
            && self.luminance_blondels.is_finite()
            && self.flux_lumens.is_finite()
            && self.diameter_raw_mm.is_finite()
            && self.diameter_final_mm.is_finite()
    }
}

/// Output of [`simulate`](crate::plr::simulate): strictly increasing times,
/// finite columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn new(rows: Vec<TraceRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if !row.is_finite() {
                return Err(Error::Usage(format!(
                    "trace row {i} has a non-finite column"
                )));
            }
            if i > 0 && !(row.time_ms > rows[i - 1].time_ms) {
                return Err(Error::Usage(format!(
                    "trace row {i}: time {} ms does not follow {} ms",
                    row.time_ms,
                    rows[i - 1].time_ms
                )));
            }
        }
        Ok(Self { rows })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<TraceRow>) -> Self {
        debug_assert!(Self::new(rows.clone()).is_ok());
        Self { rows }
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<TraceRow> {
        self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredRow {
    pub time_ms: f64,
    pub diameter_mm: f64,
}

/// Acquisition details of a measured series. Not part of the CSV layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementMetadata {
    pub iris_px_diameter: f64,
    pub frame_rate_hz: f64,
}

/// Pupil diameters measured from video frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasuredSeries {
    rows: Vec<MeasuredRow>,
    metadata: Option<MeasurementMetadata>,
}

impl MeasuredSeries {
    /// Rows need strictly increasing times and diameters in `(0, 12)` mm.
    pub fn new(rows: Vec<MeasuredRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if !(row.diameter_mm > 0.0 && row.diameter_mm < 12.0) {
                return Err(Error::Usage(format!(
                    "measured row {i}: diameter {} mm is outside (0, 12)",
                    row.diameter_mm
                )));
            }
            if !row.time_ms.is_finite() || (i > 0 && !(row.time_ms > rows[i - 1].time_ms)) {
                return Err(Error::Usage(format!(
                    "measured row {i}: time {} ms is not after the previous row",
                    row.time_ms
                )));
            }
        }
        Ok(Self {
            rows,
            metadata: None,
        })
    }

    pub fn with_metadata(mut self, metadata: MeasurementMetadata) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn metadata(&self) -> Option<&MeasurementMetadata> {
        self.metadata.as_ref()
    }

    pub fn rows(&self) -> &[MeasuredRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Mean absolute difference (mm) between measured diameters and the
/// simulated final diameter at the nearest simulated frame.
///
/// Only measurements inside the simulated time span are compared.
pub fn trace_error(sim: &SimTrace, measured: &MeasuredSeries) -> Result<f64> {
    let rows = sim.rows();
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f.time_ms, l.time_ms),
        _ => return Err(Error::Usage("simulated trace is empty".into())),
    };

    let mut total = 0.0;
    let mut count = 0usize;
    for m in measured.rows() {
        if m.time_ms < first || m.time_ms > last {
            continue;
        }
        let idx = rows.partition_point(|r| r.time_ms < m.time_ms);
        let nearest = match (idx.checked_sub(1).map(|i| &rows[i]), rows.get(idx)) {
            (Some(a), Some(b)) => {
                if m.time_ms - a.time_ms <= b.time_ms - m.time_ms {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("trace is non-empty"),
        };
        total += (nearest.diameter_final_mm - m.diameter_mm).abs();
        count += 1;
    }
    if count == 0 {
        return Err(Error::Usage(format!(
            "measured series does not overlap the simulated span [{first}, {last}] ms"
        )));
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(values: &[(f64, f64)]) -> SimTrace {
        SimTrace::new(
            values
                .iter()
                .map(|&(t, d)| TraceRow {
                    time_ms: t,
                    luminance_blondels: 1.0,
                    flux_lumens: 1e-6,
                    diameter_raw_mm: d,
                    diameter_final_mm: d,
                })
                .collect(),
        )
        .unwrap()
    }

    fn meas(values: &[(f64, f64)]) -> MeasuredSeries {
        MeasuredSeries::new(
            values
                .iter()
                .map(|&(t, d)| MeasuredRow {
                    time_ms: t,
                    diameter_mm: d,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_and_offset() {
        let pts: Vec<_> = (0..50)
            .map(|i| (i as f64 * 33.3, 4.0 + 0.01 * i as f64))
            .collect();
        assert_eq!(trace_error(&sim(&pts), &meas(&pts)).unwrap(), 0.0);
        let shifted: Vec<_> = pts.iter().map(|&(t, d)| (t, d + 0.5)).collect();
        assert!((trace_error(&sim(&pts), &meas(&shifted)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nearest_neighbour_alignment() {
        let s = sim(&[(0.0, 4.0), (10.0, 5.0), (20.0, 6.0)]);
        let m = meas(&[(4.0, 4.0), (16.0, 6.0)]);
        assert_eq!(trace_error(&s, &m).unwrap(), 0.0);
    }

    #[test]
    fn no_overlap_is_usage_error() {
        let s = sim(&[(0.0, 4.0), (10.0, 5.0)]);
        let m = meas(&[(20.0, 4.0)]);
        assert!(matches!(trace_error(&s, &m), Err(Error::Usage(_))));
    }

    #[test]
    fn validation() {
        assert!(MeasuredSeries::new(alloc::vec![MeasuredRow {
            time_ms: 0.0,
            diameter_mm: 12.0
        }])
        .is_err());
        assert!(SimTrace::new(alloc::vec![
            TraceRow {
                time_ms: 1.0,
                luminance_blondels: 1.0,
                flux_lumens: 1.0,
                diameter_raw_mm: 4.0,
                diameter_final_mm: 4.0
            },
            TraceRow {
                time_ms: 1.0,
                luminance_blondels: 1.0,
                flux_lumens: 1.0,
                diameter_raw_mm: 4.0,
                diameter_final_mm: 4.0
            },
        ])
        .is_err());
    }
}
