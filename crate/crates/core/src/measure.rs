//! Pupil diameter from the dark-pixel area of a frame.

use core::f64::consts::PI;

use alloc::format;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Typical human iris diameter (mm), used to convert pixels to millimetres.
pub const TYPICAL_IRIS_DIAMETER_MM: f64 = 12.0;

/// Axis-aligned region of interest in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn full(image: &GrayImage) -> Self {
        Self::new(0, 0, image.width(), image.height())
    }
}

/// Number of pixels strictly darker than `threshold` inside `roi`.
pub fn dark_pixel_count(frame: &GrayImage, roi: Roi, threshold: u8) -> Result<usize> {
    let fits = roi.width > 0
        && roi.height > 0
        && roi
            .x
            .checked_add(roi.width)
            .is_some_and(|r| r <= frame.width())
        && roi
            .y
            .checked_add(roi.height)
            .is_some_and(|b| b <= frame.height());
    if !fits {
        return Err(Error::Usage(format!(
            "roi {}x{}+{}+{} does not fit in a {}x{} frame",
            roi.width,
            roi.height,
            roi.x,
            roi.y,
            frame.width(),
            frame.height()
        )));
    }
    let mut count = 0;
    for y in roi.y..roi.y + roi.height {
        for x in roi.x..roi.x + roi.width {
            if frame.get(x, y) < threshold {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Pupil diameter (mm) treating the dark pixels in `roi` as a disc.
///
/// The disc diameter in pixels is `2 sqrt(area / π)`; it is scaled by
/// `12 mm / iris_px_diameter`.
pub fn measure_pupil(
    frame: &GrayImage,
    roi: Roi,
    dark_threshold: u8,
    iris_px_diameter: f64,
) -> Result<f64> {
    if !(iris_px_diameter > 0.0) || !iris_px_diameter.is_finite() {
        return Err(Error::Usage(format!(
            "iris pixel diameter must be positive, got {iris_px_diameter}"
        )));
    }
    let area = dark_pixel_count(frame, roi, dark_threshold)?;
    if area == 0 {
        return Err(Error::NoPupil);
    }
    let diameter_px = 2.0 * libm::sqrt(area as f64 / PI);
    Ok(diameter_px * TYPICAL_IRIS_DIAMETER_MM / iris_px_diameter)
}
