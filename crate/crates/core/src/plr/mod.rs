//! Pupil light reflex model.
//!
//! The static part relates a background luminance to a pupil diameter by
//! balancing the muscular activity `M(D) = atanh((D - 4.9) / 3)` against the
//! logarithm of the retinal flux:
//!
//! ```text
//! 2.3026 M(D) = 5.2 - 0.45 ln(phi / phi_threshold)
//! ```
//!
//! The dynamic part ([`simulate`]) reintroduces time in the same balance and
//! feeds it the flux seen `tau` milliseconds earlier, with `tau` given by the
//! latency formula. Individual differences are layered on top through the
//! isocurve envelope and the index `r_I`.

mod hippus;
mod history;
mod profile;
mod schedule;
mod simulator;

use alloc::format;

pub use hippus::{HippusGenerator, HIPPUS_COMPONENTS};
pub use history::FluxHistory;
pub use profile::SubjectProfile;
pub use schedule::{LightSchedule, ScheduleEntry};
pub use simulator::{simulate, PupilSimulator, PupilState};

use crate::error::{domain, Error, Result};
use crate::photometry::{self, Luminance, LuminanceFootLambert};
use crate::poly::Polynomial;
use crate::solve::bisect;

/// Lower end of the pupil diameter range (mm), excluded.
pub const DIAMETER_MIN: f64 = 1.9;
/// Upper end of the pupil diameter range (mm), excluded.
pub const DIAMETER_MAX: f64 = 7.9;

/// Dimmest luminance the model is calibrated for (B).
pub const LUMINANCE_MIN: f64 = 1e-5;
/// Brightest luminance the model is calibrated for (B).
pub const LUMINANCE_MAX: f64 = 1e5;

/// Retinal flux below which the pupil does not respond (lm).
pub const FLUX_THRESHOLD: f64 = 4.8118e-10;

/// Scale on the muscular activity term.
#[allow(clippy::approx_constant)]
pub const MUSCLE_SCALE: f64 = 2.3026;
/// Gain on the log-flux term.
pub const FLUX_GAIN: f64 = 0.45;
/// Constant offset of the balance.
pub const BALANCE_OFFSET: f64 = 5.2;

/// Bracket width at which the equilibrium bisection stops (mm).
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;

const MID_DIAMETER: f64 = 4.9;
const HALF_RANGE: f64 = 3.0;

/// Upper isocurve `C_tD`, the largest diameters of the envelope.
pub const TOP_ISOCURVE: Polynomial<6> =
    Polynomial::new([-0.013, 0.322, -3.096, 13.655, -25.347, 18.179]);

/// Lower isocurve `C_bD`, the smallest diameters of the envelope.
pub const BOTTOM_ISOCURVE: Polynomial<6> =
    Polynomial::new([-5.442, 1.387, -1.343, 6.219, -1.317, 1.219]);

/// Envelope widths below this are treated as degenerate by
/// [`estimate_r_index`].
pub const ENVELOPE_EPSILON: f64 = 1e-9;

/// Relative slack on the luminance range so `10^-5` computed through `pow`
/// is still accepted.
const RANGE_SLACK: f64 = 1e-12;

pub(crate) fn in_luminance_range(blondels: f64) -> bool {
    (LUMINANCE_MIN * (1.0 - RANGE_SLACK)..=LUMINANCE_MAX * (1.0 + RANGE_SLACK)).contains(&blondels)
}

fn check_luminance_range(luminance: Luminance) -> Result<f64> {
    let l = luminance.blondels();
    if in_luminance_range(l) {
        Ok(l)
    } else {
        Err(domain("luminance (B)", l, "[1e-5, 1e5]"))
    }
}

fn check_diameter(diameter_mm: f64) -> Result<f64> {
    if diameter_mm > DIAMETER_MIN && diameter_mm < DIAMETER_MAX {
        Ok(diameter_mm)
    } else {
        Err(domain("pupil diameter (mm)", diameter_mm, "(1.9, 7.9)"))
    }
}

/// Moon and Spencer's average pupil diameter (mm) for a background luminance.
pub fn moon_spencer_diameter(luminance: Luminance) -> Result<f64> {
    let l = check_luminance_range(luminance)?;
    Ok(MID_DIAMETER - HALF_RANGE * libm::tanh(0.4 * (libm::log10(l) - 0.5)))
}

/// Luminance at which [`moon_spencer_diameter`] yields `diameter_mm`.
pub fn invert_moon_spencer(diameter_mm: f64) -> Result<Luminance> {
    let d = check_diameter(diameter_mm)?;
    let log10_l = 0.5 + libm::atanh((MID_DIAMETER - d) / HALF_RANGE) / 0.4;
    Luminance::from_log10(log10_l)
}

/// Pupillary latency in milliseconds for a stimulus of the given luminance
/// and flicker frequency `frequency_hz`.
pub fn latency(luminance: LuminanceFootLambert, frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz >= 0.0) || !frequency_hz.is_finite() {
        return Err(domain("stimulus frequency (Hz)", frequency_hz, "[0, inf)"));
    }
    let ln_l = libm::log(luminance.foot_lamberts());
    Ok(253.0 - 14.0 * ln_l + 70.0 * frequency_hz - 29.0 * frequency_hz * ln_l)
}

/// Muscular activity `M(D) = atanh((D - 4.9) / 3)`.
pub fn muscular_activity(diameter_mm: f64) -> Result<f64> {
    let d = check_diameter(diameter_mm)?;
    Ok(libm::atanh((d - MID_DIAMETER) / HALF_RANGE))
}

/// Analytic `dM/dD = 3 / (9 - (D - 4.9)^2)`.
pub fn muscular_activity_slope(diameter_mm: f64) -> Result<f64> {
    let d = check_diameter(diameter_mm)?;
    let x = d - MID_DIAMETER;
    Ok(HALF_RANGE / (HALF_RANGE * HALF_RANGE - x * x))
}

/// Right-hand side of the balance, `5.2 - 0.45 ln(phi / phi_threshold)`.
#[inline]
pub fn light_drive(flux_lumens: f64) -> f64 {
    BALANCE_OFFSET - FLUX_GAIN * libm::log(flux_lumens / FLUX_THRESHOLD)
}

/// Rate of change of the raw diameter for the given delayed flux.
///
/// This is the balance with the time term restored:
/// `dD/dt = (drive(phi) - 2.3026 M(D)) / (2.3026 dM/dD)`. The result is in
/// mm per unit of model time; the simulator scales model time per frame.
pub fn pupil_velocity(delayed_flux_lumens: f64, diameter_mm: f64) -> Result<f64> {
    if !(delayed_flux_lumens > 0.0) {
        return Err(domain("retinal flux (lm)", delayed_flux_lumens, "(0, inf)"));
    }
    let m = muscular_activity(diameter_mm)?;
    let slope = muscular_activity_slope(diameter_mm)?;
    Ok((light_drive(delayed_flux_lumens) - MUSCLE_SCALE * m) / (MUSCLE_SCALE * slope))
}

/// Raw pupil diameter at equilibrium under a constant luminance.
///
/// The muscular side increases with `D` and the light side decreases with
/// `D` (more flux through a larger pupil), so there is exactly one root in
/// `(1.9, 7.9)`. It is found by bisection.
pub fn equilibrium_raw_diameter(luminance: Luminance) -> Result<f64> {
    check_luminance_range(luminance)?;
    let illuminance = photometry::blondels_to_illuminance(luminance).lm_per_mm2();
    let balance = |d: f64| {
        let flux = illuminance * photometry::pupil_area(d);
        MUSCLE_SCALE * libm::atanh((d - MID_DIAMETER) / HALF_RANGE) - light_drive(flux)
    };
    // atanh diverges at both ends, so the bracket always straddles the root.
    let span = DIAMETER_MAX - DIAMETER_MIN;
    let lo = DIAMETER_MIN + span * 1e-12;
    let hi = DIAMETER_MAX - span * 1e-12;
    bisect(balance, lo, hi, EQUILIBRIUM_TOLERANCE, 200)
}

/// Upper envelope `C_tD(D)`.
pub fn isocurve_top(diameter_mm: f64) -> Result<f64> {
    Ok(TOP_ISOCURVE.eval(check_diameter(diameter_mm)?))
}

/// Lower envelope `C_bD(D)`.
pub fn isocurve_bottom(diameter_mm: f64) -> Result<f64> {
    Ok(BOTTOM_ISOCURVE.eval(check_diameter(diameter_mm)?))
}

/// Final diameter of an individual with index `r_index`:
/// `C_bD(D) + (C_tD(D) - C_bD(D)) r_I`.
pub fn apply_individuality(raw_diameter_mm: f64, r_index: f64) -> Result<f64> {
    check_r_index(r_index)?;
    let bottom = isocurve_bottom(raw_diameter_mm)?;
    let top = isocurve_top(raw_diameter_mm)?;
    if r_index == 1.0 {
        // bottom + (top - bottom) loses digits of top when |bottom| >> |top|
        return Ok(top);
    }
    Ok(bottom + (top - bottom) * r_index)
}

pub(crate) fn check_r_index(r_index: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&r_index) {
        Ok(r_index)
    } else {
        Err(domain("variability index r_I", r_index, "[0, 1]"))
    }
}

/// Recovers `r_I` from observed equilibrium diameters.
///
/// Each `(luminance, observed_diameter_mm)` pair is placed inside the
/// envelope at the model's equilibrium diameter for that luminance; the
/// per-sample indices are clamped to `[0, 1]` and averaged.
pub fn estimate_r_index(samples: &[(Luminance, f64)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Usage(
            "estimate_r_index needs at least one sample".into(),
        ));
    }
    let mut sum = 0.0;
    for &(luminance, observed) in samples {
        if !observed.is_finite() {
            return Err(domain("observed diameter (mm)", observed, "finite"));
        }
        let raw = equilibrium_raw_diameter(luminance)?;
        let bottom = BOTTOM_ISOCURVE.eval(raw);
        let top = TOP_ISOCURVE.eval(raw);
        let width = top - bottom;
        if width.abs() <= ENVELOPE_EPSILON {
            return Err(Error::Numeric(format!(
                "degenerate isocurve envelope at D = {raw} (width {width})"
            )));
        }
        sum += ((observed - bottom) / width).clamp(0.0, 1.0);
    }
    Ok(sum / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lum(b: f64) -> Luminance {
        Luminance::new(b).unwrap()
    }

    fn fl(v: f64) -> LuminanceFootLambert {
        LuminanceFootLambert::new(v).unwrap()
    }

    #[test]
    fn moon_spencer_reference_points() {
        let mid = moon_spencer_diameter(Luminance::from_log10(0.5).unwrap()).unwrap();
        assert!((mid - 4.9).abs() < 1e-12);
        assert!((moon_spencer_diameter(lum(1e-5)).unwrap() - 7.8272).abs() < 1e-4);
        assert!((moon_spencer_diameter(lum(1e5)).unwrap() - 2.0596).abs() < 1e-4);
    }

    #[test]
    fn moon_spencer_rejects_out_of_range() {
        assert!(moon_spencer_diameter(lum(2e5)).is_err());
        assert!(moon_spencer_diameter(lum(1e-6)).is_err());
    }

    #[test]
    fn inverse_moon_spencer() {
        let l = invert_moon_spencer(4.9).unwrap().blondels();
        assert!((l - libm::sqrt(10.0)).abs() < 1e-12);
        let dark = invert_moon_spencer(7.8272).unwrap().blondels();
        assert!((dark - 1e-5).abs() / 1e-5 < 0.01);
        for &d in &[3.0, 5.0, 7.0] {
            let back = moon_spencer_diameter(invert_moon_spencer(d).unwrap()).unwrap();
            assert!((back - d).abs() < 1e-9);
        }
        assert!(invert_moon_spencer(1.9).is_err());
        assert!(invert_moon_spencer(7.9).is_err());
    }

    #[test]
    fn latency_values() {
        assert_eq!(latency(fl(1.0), 0.0).unwrap(), 253.0);
        assert!((latency(fl(1.0), 0.4).unwrap() - 281.0).abs() < 1e-12);
        // 253 - 14 ln 10 + 28 - 11.6 ln 10
        assert!((latency(fl(10.0), 0.4).unwrap() - 222.06).abs() < 0.01);
        assert!(latency(fl(1.0), -0.1).is_err());
    }

    #[test]
    fn muscular_activity_values() {
        assert_eq!(muscular_activity(4.9).unwrap(), 0.0);
        assert!((muscular_activity(6.4).unwrap() - 0.549306).abs() < 1e-6);
        assert!(muscular_activity(7.9).is_err());
        assert!(muscular_activity(8.5).is_err());
        assert!(muscular_activity(1.9).is_err());
        assert!(muscular_activity(7.8999).unwrap().is_finite());
    }

    #[test]
    fn slope_matches_central_differences() {
        let h = 1e-6;
        for &d in &[3.0, 4.9, 7.0] {
            let fd =
                (muscular_activity(d + h).unwrap() - muscular_activity(d - h).unwrap()) / (2.0 * h);
            let analytic = muscular_activity_slope(d).unwrap();
            assert!((analytic - fd).abs() / analytic < 1e-6, "D = {d}");
        }
    }

    #[test]
    fn equilibrium_reference_points() {
        let dark = equilibrium_raw_diameter(lum(1e-5)).unwrap();
        assert!((dark - 7.8272).abs() / 7.8272 < 0.02);
        let mid = equilibrium_raw_diameter(Luminance::from_log10(0.5).unwrap()).unwrap();
        assert!((mid - 4.9).abs() / 4.9 < 0.02);
        let bright = equilibrium_raw_diameter(lum(1e5)).unwrap();
        assert!((bright - 2.0596).abs() / 2.0596 < 0.02);
    }

    #[test]
    fn equilibrium_balances() {
        for &b in &[1e-5, 0.3, 12.0, 1e5] {
            let d = equilibrium_raw_diameter(lum(b)).unwrap();
            let flux = b * 1e-6 * photometry::pupil_area(d);
            let residual = MUSCLE_SCALE * muscular_activity(d).unwrap() - light_drive(flux);
            assert!(residual.abs() < 1e-6, "L = {b}, residual {residual}");
            assert!(pupil_velocity(flux, d).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn equilibrium_rejects_out_of_range() {
        assert!(matches!(
            equilibrium_raw_diameter(lum(1e6)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn equilibrium_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let l = Luminance::from_log10(-5.0 + 10.0 * i as f64 / 99.0).unwrap();
            let d = equilibrium_raw_diameter(l).unwrap();
            assert!(d < prev, "not decreasing at step {i}");
            prev = d;
        }
    }

    #[test]
    fn isocurve_coefficients() {
        assert!((TOP_ISOCURVE.eval(1.0) - 3.700).abs() < 1e-3);
        // Frozen from a 40-digit Horner evaluation.
        assert!((isocurve_top(4.9).unwrap() - 6.49875583).abs() < 1e-9);
        assert!((isocurve_bottom(4.9).unwrap() - -14586.64386888).abs() < 1e-9);
        assert_ne!(TOP_ISOCURVE.reversed().eval(4.9), TOP_ISOCURVE.eval(4.9));
        assert_ne!(
            BOTTOM_ISOCURVE.reversed().eval(4.9),
            BOTTOM_ISOCURVE.eval(4.9)
        );
        assert!(isocurve_top(1.0).is_err());
        assert!(isocurve_bottom(8.0).is_err());
    }

    #[test]
    fn individuality_endpoints() {
        let d = 5.3;
        let bottom = isocurve_bottom(d).unwrap();
        let top = isocurve_top(d).unwrap();
        assert_eq!(apply_individuality(d, 0.0).unwrap(), bottom);
        assert_eq!(apply_individuality(d, 1.0).unwrap(), top);
        let mid = apply_individuality(d, 0.5).unwrap();
        assert!((mid - 0.5 * (bottom + top)).abs() < 1e-9);
        assert!(apply_individuality(d, 1.01).is_err());
        assert!(apply_individuality(d, -0.01).is_err());
    }

    #[test]
    fn r_index_of_envelope_bottom_is_zero() {
        for &b in &[1e-3, 12.589, 4.0e3] {
            let raw = equilibrium_raw_diameter(lum(b)).unwrap();
            let observed = isocurve_bottom(raw).unwrap();
            assert_eq!(estimate_r_index(&[(lum(b), observed)]).unwrap(), 0.0);
        }
    }

    #[test]
    fn r_index_round_trip() {
        let on = Luminance::from_log10(1.1).unwrap();
        let off = Luminance::from_log10(-0.5).unwrap();
        for &r in &[0.03, 0.4, 0.92] {
            let samples: alloc::vec::Vec<_> = [on, off]
                .iter()
                .map(|&l| {
                    let raw = equilibrium_raw_diameter(l).unwrap();
                    (l, apply_individuality(raw, r).unwrap())
                })
                .collect();
            let est = estimate_r_index(&samples).unwrap();
            assert!((est - r).abs() < 1e-6, "r* = {r}, estimate {est}");
        }
    }

    #[test]
    fn r_index_clamps_outliers() {
        let l = lum(12.589);
        let raw = equilibrium_raw_diameter(l).unwrap();
        let above = isocurve_top(raw).unwrap() + 1.0;
        assert_eq!(estimate_r_index(&[(l, above)]).unwrap(), 1.0);
        assert!(estimate_r_index(&[(l, f64::NAN)]).is_err());
    }

    #[test]
    fn r_index_requires_samples() {
        assert!(matches!(estimate_r_index(&[]), Err(Error::Usage(_))));
    }

    proptest! {
        #[test]
        fn individuality_monotone_in_index(d in 1.91f64..7.89, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if TOP_ISOCURVE.eval(d) > BOTTOM_ISOCURVE.eval(d) {
                prop_assert!(apply_individuality(d, lo).unwrap() <= apply_individuality(d, hi).unwrap());
            }
        }

        #[test]
        fn moon_spencer_inverse_round_trip(d in 2.06f64..7.82) {
            let back = moon_spencer_diameter(invert_moon_spencer(d).unwrap()).unwrap();
            prop_assert!((back - d).abs() < 1e-9);
        }
    }
}
