use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::photometry::Luminance;

/// One constant-luminance segment, active from `start_ms` until the next
/// segment starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub start_ms: f64,
    pub luminance_blondels: f64,
}

impl ScheduleEntry {
    pub fn new(start_ms: f64, luminance_blondels: f64) -> Self {
        Self {
            start_ms,
            luminance_blondels,
        }
    }
}

/// Piecewise-constant luminance stimulus.
///
/// A non-empty schedule starts at `t = 0`, has strictly increasing start
/// times and every luminance in `[1e-5, 1e5]` B. The empty schedule is
/// representable (a header-only file) but cannot be simulated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LightSchedule {
    entries: Vec<ScheduleEntry>,
}

impl LightSchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if i == 0 && e.start_ms != 0.0 {
                return Err(Error::Usage(format!(
                    "schedule must start at t = 0 ms, first entry starts at {}",
                    e.start_ms
                )));
            }
            if i > 0 && !(e.start_ms > entries[i - 1].start_ms) {
                return Err(Error::Usage(format!(
                    "schedule start times must be strictly increasing (entry {i}: {} after {})",
                    e.start_ms,
                    entries[i - 1].start_ms
                )));
            }
            if !e.start_ms.is_finite() {
                return Err(Error::Usage(format!(
                    "entry {i} has a non-finite start time"
                )));
            }
            if !super::in_luminance_range(e.luminance_blondels) {
                return Err(Error::Usage(format!(
                    "entry {i} luminance {} B is outside [1e-5, 1e5]",
                    e.luminance_blondels
                )));
            }
        }
        Ok(Self { entries })
    }

    /// A single luminance held from `t = 0` on.
    pub fn constant(luminance: Luminance) -> Result<Self> {
        Self::new(alloc::vec![ScheduleEntry::new(0.0, luminance.blondels())])
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Luminance (B) in effect at `time_ms`. Times before zero see the first
    /// segment. Returns `None` for an empty schedule.
    pub fn luminance_at(&self, time_ms: f64) -> Option<f64> {
        let idx = self.entries.partition_point(|e| e.start_ms <= time_ms);
        let idx = idx.saturating_sub(1);
        self.entries.get(idx).map(|e| e.luminance_blondels)
    }
}
