use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of sinusoids summed by [`HippusGenerator`].
pub const HIPPUS_COMPONENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    frequency_hz: f64,
    phase: f64,
    amplitude: f64,
}

/// Band-limited luminance noise that drives hippus.
///
/// A fixed bank of sinusoids drawn from the seed: frequencies uniform in the
/// band, phases uniform in `[0, 2π)`, amplitudes scaled so they sum to
/// `10^log_amplitude_bound` blondels. The output is a pure function of
/// `(seed, t)` and never exceeds that sum in magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct HippusGenerator {
    seed: u64,
    band_low_hz: f64,
    band_high_hz: f64,
    log_amplitude_bound: f64,
    components: [Component; HIPPUS_COMPONENTS],
}

impl HippusGenerator {
    pub const BAND_LOW_HZ: f64 = 0.05;
    pub const BAND_HIGH_HZ: f64 = 0.3;
    /// log10 of the largest perturbation, in blondels.
    pub const LOG_AMPLITUDE_BOUND: f64 = 0.3;

    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = libm::pow(10.0, Self::LOG_AMPLITUDE_BOUND);

        let mut components = [Component {
            frequency_hz: 0.0,
            phase: 0.0,
            amplitude: 0.0,
        }; HIPPUS_COMPONENTS];
        for c in components.iter_mut() {
            c.frequency_hz = rng.random_range(Self::BAND_LOW_HZ..=Self::BAND_HIGH_HZ);
            c.phase = rng.random_range(0.0..TAU);
            c.amplitude = rng.random_range(0.5..=1.0);
        }
        let total: f64 = components.iter().map(|c| c.amplitude).sum();
        for c in components.iter_mut() {
            c.amplitude *= bound / total;
        }

        Self {
            seed,
            band_low_hz: Self::BAND_LOW_HZ,
            band_high_hz: Self::BAND_HIGH_HZ,
            log_amplitude_bound: Self::LOG_AMPLITUDE_BOUND,
            components,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn band_hz(&self) -> (f64, f64) {
        (self.band_low_hz, self.band_high_hz)
    }

    /// Largest possible `|perturbation|`, in blondels.
    pub fn amplitude_bound(&self) -> f64 {
        libm::pow(10.0, self.log_amplitude_bound)
    }

    /// Frequencies of the sinusoid bank, in Hz.
    pub fn frequencies_hz(&self) -> [f64; HIPPUS_COMPONENTS] {
        self.components.map(|c| c.frequency_hz)
    }

    /// Luminance offset (B) at `time_ms`.
    pub fn perturbation(&self, time_ms: f64) -> f64 {
        let t = time_ms * 1e-3;
        let sum: f64 = self
            .components
            .iter()
            .map(|c| c.amplitude * libm::sin(TAU * c.frequency_hz * t + c.phase))
            .sum();
        let bound = self.amplitude_bound();
        sum.clamp(-bound, bound)
    }
}
