use crate::error::{domain, Result};

use super::check_r_index;

/// Per-individual reflex parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectProfile {
    r_index: f64,
    velocity_constant: f64,
    stimulus_frequency_hz: f64,
}

impl SubjectProfile {
    /// Constriction/dilation velocity constant `S` used when none is given.
    pub const DEFAULT_VELOCITY_CONSTANT: f64 = 600.0;
    /// Stimulus frequency `R` (Hz) used when none is given.
    pub const DEFAULT_STIMULUS_FREQUENCY_HZ: f64 = 0.4;

    pub fn new(r_index: f64, velocity_constant: f64, stimulus_frequency_hz: f64) -> Result<Self> {
        check_r_index(r_index)?;
        if !(velocity_constant > 0.0) || !velocity_constant.is_finite() {
            return Err(domain("velocity constant S", velocity_constant, "(0, inf)"));
        }
        if !(stimulus_frequency_hz >= 0.0) || !stimulus_frequency_hz.is_finite() {
            return Err(domain(
                "stimulus frequency R (Hz)",
                stimulus_frequency_hz,
                "[0, inf)",
            ));
        }
        Ok(Self {
            r_index,
            velocity_constant,
            stimulus_frequency_hz,
        })
    }

    /// Profile with the default `S` and `R`.
    pub fn with_r_index(r_index: f64) -> Result<Self> {
        Self::new(
            r_index,
            Self::DEFAULT_VELOCITY_CONSTANT,
            Self::DEFAULT_STIMULUS_FREQUENCY_HZ,
        )
    }

    pub fn r_index(&self) -> f64 {
        self.r_index
    }

    pub fn velocity_constant(&self) -> f64 {
        self.velocity_constant
    }

    pub fn stimulus_frequency_hz(&self) -> f64 {
        self.stimulus_frequency_hz
    }
}
