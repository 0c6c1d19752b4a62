//! Photometric quantities and the unit conversions used by the PLR model.
//!
//! Luminance is carried in blondels (apostilbs, `1/π cd/m²`). Under the
//! Lambertian-screen assumption one blondel of screen luminance delivers
//! `1e-6 lm/mm²` at the eye. The latency formula takes foot-Lamberts.

use core::f64::consts::PI;

use crate::error::{domain, Result};

/// Illuminance at the eye, in lm/mm², produced by one blondel.
pub const LM_PER_MM2_PER_BLONDEL: f64 = 1e-6;

/// 1 fL = 3.426 cd/m² and 1 B = (1/π) cd/m², so 1 fL = 10.764 B.
pub const BLONDELS_PER_FOOT_LAMBERT: f64 = 10.764;

/// 1 lux = 1 lm/m² = 1e-6 lm/mm².
pub const LM_PER_MM2_PER_LUX: f64 = 1e-6;

/// Luminance in blondels. Always strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Luminance(f64);

impl Luminance {
    pub fn new(blondels: f64) -> Result<Self> {
        if blondels > 0.0 && blondels.is_finite() {
            Ok(Self(blondels))
        } else {
            Err(domain("luminance (B)", blondels, "(0, inf)"))
        }
    }

    /// `10^exponent` blondels.
    pub fn from_log10(exponent: f64) -> Result<Self> {
        Self::new(libm::pow(10.0, exponent))
    }

    pub fn blondels(self) -> f64 {
        self.0
    }
}

/// Luminance in foot-Lamberts. Always strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LuminanceFootLambert(f64);

impl LuminanceFootLambert {
    pub fn new(foot_lamberts: f64) -> Result<Self> {
        if foot_lamberts > 0.0 && foot_lamberts.is_finite() {
            Ok(Self(foot_lamberts))
        } else {
            Err(domain("luminance (fL)", foot_lamberts, "(0, inf)"))
        }
    }

    pub fn foot_lamberts(self) -> f64 {
        self.0
    }
}

/// Illuminance in lumens per square millimetre.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Illuminance(f64);

impl Illuminance {
    pub fn new(lm_per_mm2: f64) -> Result<Self> {
        if lm_per_mm2 >= 0.0 && lm_per_mm2.is_finite() {
            Ok(Self(lm_per_mm2))
        } else {
            Err(domain("illuminance (lm/mm^2)", lm_per_mm2, "[0, inf)"))
        }
    }

    pub fn lm_per_mm2(self) -> f64 {
        self.0
    }
}

/// Luminous flux in lumens.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LuminousFlux(f64);

impl LuminousFlux {
    pub fn new(lumens: f64) -> Result<Self> {
        if lumens >= 0.0 && lumens.is_finite() {
            Ok(Self(lumens))
        } else {
            Err(domain("luminous flux (lm)", lumens, "[0, inf)"))
        }
    }

    pub fn lumens(self) -> f64 {
        self.0
    }
}

pub fn blondels_to_illuminance(luminance: Luminance) -> Illuminance {
    Illuminance(luminance.0 * LM_PER_MM2_PER_BLONDEL)
}

/// Inverse of [`blondels_to_illuminance`].
pub fn illuminance_to_blondels(illuminance: Illuminance) -> Result<Luminance> {
    Luminance::new(illuminance.0 / LM_PER_MM2_PER_BLONDEL)
}

/// Flux through a circular pupil of diameter `pupil_diameter_mm`.
pub fn retinal_flux(illuminance: Illuminance, pupil_diameter_mm: f64) -> Result<LuminousFlux> {
    if !(pupil_diameter_mm >= 0.0) || !pupil_diameter_mm.is_finite() {
        return Err(domain("pupil diameter (mm)", pupil_diameter_mm, "[0, inf)"));
    }
    LuminousFlux::new(illuminance.0 * pupil_area(pupil_diameter_mm))
}

/// Area in mm² of a disc of the given diameter.
#[inline]
pub fn pupil_area(diameter_mm: f64) -> f64 {
    let radius = 0.5 * diameter_mm;
    PI * radius * radius
}

pub fn blondels_to_foot_lamberts(luminance: Luminance) -> LuminanceFootLambert {
    LuminanceFootLambert(luminance.0 / BLONDELS_PER_FOOT_LAMBERT)
}

pub fn foot_lamberts_to_blondels(luminance: LuminanceFootLambert) -> Luminance {
    Luminance(luminance.0 * BLONDELS_PER_FOOT_LAMBERT)
}

pub fn lux_to_illuminance(lux: f64) -> Result<Illuminance> {
    if !(lux >= 0.0) || !lux.is_finite() {
        return Err(domain("illuminance (lux)", lux, "[0, inf)"));
    }
    Ok(Illuminance(lux * LM_PER_MM2_PER_LUX))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn blondel_to_illuminance_values() {
        let one = blondels_to_illuminance(Luminance::new(1.0).unwrap());
        assert_eq!(one.lm_per_mm2(), 1e-6);
        let hi = blondels_to_illuminance(Luminance::new(1e5).unwrap());
        assert!(rel(hi.lm_per_mm2(), 0.1) < 1e-15);
        let lo = blondels_to_illuminance(Luminance::new(1e-5).unwrap());
        assert!(rel(lo.lm_per_mm2(), 1e-11) < 1e-15);
    }

    #[test]
    fn non_positive_luminance_rejected() {
        assert!(matches!(Luminance::new(0.0), Err(Error::Domain { .. })));
        assert!(Luminance::new(-3.0).is_err());
        assert!(Luminance::new(f64::NAN).is_err());
        assert!(LuminanceFootLambert::new(0.0).is_err());
    }

    #[test]
    fn retinal_flux_at_threshold() {
        let flux = retinal_flux(Illuminance::new(1e-11).unwrap(), 7.8272).unwrap();
        assert!((flux.lumens() - 4.8118e-10).abs() < 1e-13);
    }

    #[test]
    fn retinal_flux_edges() {
        let i = Illuminance::new(123.0).unwrap();
        assert_eq!(retinal_flux(i, 0.0).unwrap().lumens(), 0.0);
        let unit = retinal_flux(Illuminance::new(1.0).unwrap(), 2.0).unwrap();
        assert!(rel(unit.lumens(), PI) < 1e-15);
        assert!(matches!(retinal_flux(i, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn foot_lambert_values() {
        let one = blondels_to_foot_lamberts(Luminance::new(10.764).unwrap());
        assert!(rel(one.foot_lamberts(), 1.0) < 1e-15);
        let hi = blondels_to_foot_lamberts(Luminance::new(1e5).unwrap());
        assert!((hi.foot_lamberts() - 9290.2).abs() < 0.05);
        let back = foot_lamberts_to_blondels(LuminanceFootLambert::new(1.0).unwrap());
        let again = blondels_to_foot_lamberts(back);
        assert!(rel(again.foot_lamberts(), 1.0) < 1e-12);
    }

    #[test]
    fn lux_values() {
        assert!(rel(lux_to_illuminance(350.0).unwrap().lm_per_mm2(), 3.5e-4) < 1e-15);
        assert_eq!(lux_to_illuminance(0.0).unwrap().lm_per_mm2(), 0.0);
        assert!(rel(lux_to_illuminance(140.0).unwrap().lm_per_mm2(), 1.4e-4) < 1e-15);
        assert!(lux_to_illuminance(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn conversions_are_linear(x in 1e-5f64..1e5, a in 1e-3f64..1e3) {
            let lx = Luminance::new(x).unwrap();
            let lax = Luminance::new(a * x).unwrap();
            prop_assert!(rel(blondels_to_illuminance(lax).lm_per_mm2(),
                             a * blondels_to_illuminance(lx).lm_per_mm2()) < 1e-15);
            prop_assert!(rel(blondels_to_foot_lamberts(lax).foot_lamberts(),
                             a * blondels_to_foot_lamberts(lx).foot_lamberts()) < 1e-15);
            prop_assert!(rel(lux_to_illuminance(a * x).unwrap().lm_per_mm2(),
                             a * lux_to_illuminance(x).unwrap().lm_per_mm2()) < 1e-15);
        }

        #[test]
        fn flux_scaling_composes(x in 1e-5f64..1e5, d in 0.5f64..9.0) {
            let composed = retinal_flux(blondels_to_illuminance(Luminance::new(x).unwrap()), d)
                .unwrap()
                .lumens();
            let direct = x * LM_PER_MM2_PER_BLONDEL * PI * (d / 2.0) * (d / 2.0);
            prop_assert!(rel(composed, direct) < 1e-14);
        }

        #[test]
        fn foot_lambert_round_trip(x in 1e-5f64..1e5) {
            let l = Luminance::new(x).unwrap();
            let back = foot_lamberts_to_blondels(blondels_to_foot_lamberts(l));
            prop_assert!(rel(back.blondels(), x) < 1e-12);
        }
    }
}
