use alloc::collections::VecDeque;
use alloc::format;

use crate::error::{Error, Result};

use super::FLUX_THRESHOLD;

/// Time-indexed retinal flux used for the delayed lookup `phi(t - tau)`.
///
/// Lookups hold the most recent sample at or before the requested time and
/// clamp to the oldest sample for earlier times.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxHistory {
    samples: VecDeque<(f64, f64)>,
    threshold: f64,
}

impl FluxHistory {
    pub fn new() -> Self {
        Self::with_threshold(FLUX_THRESHOLD).expect("default threshold is positive")
    }

    pub fn with_threshold(threshold_lumens: f64) -> Result<Self> {
        if !(threshold_lumens > 0.0) {
            return Err(Error::Usage(format!(
                "flux threshold must be positive, got {threshold_lumens}"
            )));
        }
        Ok(Self {
            samples: VecDeque::new(),
            threshold: threshold_lumens,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, time_ms: f64, flux_lumens: f64) -> Result<()> {
        if !(flux_lumens > 0.0) || !flux_lumens.is_finite() {
            return Err(Error::Numeric(format!(
                "flux samples must be positive and finite, got {flux_lumens}"
            )));
        }
        if let Some(&(last, _)) = self.samples.back() {
            if !(time_ms > last) {
                return Err(Error::Numeric(format!(
                    "flux sample at {time_ms} ms does not follow {last} ms"
                )));
            }
        }
        self.samples.push_back((time_ms, flux_lumens));
        Ok(())
    }

    /// Flux at `time_ms`, or `None` when the history is empty.
    pub fn at(&self, time_ms: f64) -> Option<f64> {
        let idx = self.samples.partition_point(|&(t, _)| t <= time_ms);
        let idx = idx.saturating_sub(1);
        self.samples.get(idx).map(|&(_, f)| f)
    }

    /// Drops samples that can no longer be reached by a lookup at or after
    /// `earliest_ms`, keeping the one that covers `earliest_ms` itself.
    pub fn discard_before(&mut self, earliest_ms: f64) {
        while self.samples.len() >= 2 && self.samples[1].0 <= earliest_ms {
            self.samples.pop_front();
        }
    }
}

impl Default for FluxHistory {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_previous_sample() {
        let mut h = FluxHistory::new();
        assert_eq!(h.at(0.0), None);
        h.push(0.0, 1.0).unwrap();
        h.push(10.0, 2.0).unwrap();
        h.push(20.0, 3.0).unwrap();
        assert_eq!(h.at(-100.0), Some(1.0));
        assert_eq!(h.at(0.0), Some(1.0));
        assert_eq!(h.at(9.99), Some(1.0));
        assert_eq!(h.at(10.0), Some(2.0));
        assert_eq!(h.at(25.0), Some(3.0));
    }

    #[test]
    fn rejects_out_of_order_and_non_positive() {
        let mut h = FluxHistory::new();
        h.push(5.0, 1.0).unwrap();
        assert!(h.push(5.0, 1.0).is_err());
        assert!(h.push(4.0, 1.0).is_err());
        assert!(h.push(6.0, 0.0).is_err());
        assert!(FluxHistory::with_threshold(0.0).is_err());
    }

    #[test]
    fn discard_keeps_covering_sample() {
        let mut h = FluxHistory::new();
        for i in 0..10 {
            h.push(i as f64 * 10.0, 1.0 + i as f64).unwrap();
        }
        h.discard_before(45.0);
        assert_eq!(h.at(45.0), Some(5.0));
        assert_eq!(h.len(), 6);
        h.discard_before(1e9);
        assert_eq!(h.len(), 1);
        assert_eq!(h.at(0.0), Some(10.0));
    }
}
