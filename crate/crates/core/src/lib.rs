//! Physiologically-based pupil light reflex (PLR) model and image-based iris
//! pattern deformation.
//!
//! The crate is `no_std` and needs `alloc`. File formats, the CLI and the
//! validation harness live in the companion `pupil` crate.
//!
//! The main entry points are:
//!
//! - [`photometry`]: blondel, foot-Lambert, lux and retinal flux conversions.
//! - [`plr`]: the static equilibrium solver, the delay-differential
//!   integrator ([`plr::simulate`]), individual variability and hippus.
//! - [`iris`]: the radial-ratio deformation model and the textured ring mesh.
//! - [`measure`] and [`trace`]: pixel-area pupil measurement and trace
//!   comparison.

#![no_std]
#![deny(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod image;
pub mod iris;
pub mod measure;
pub mod photometry;
pub mod plr;
pub mod poly;
pub mod solve;
pub mod trace;

pub use error::{Error, Result};
pub use photometry::{Illuminance, Luminance, LuminanceFootLambert, LuminousFlux};
pub use plr::{
    simulate, HippusGenerator, LightSchedule, PupilSimulator, PupilState, SubjectProfile,
};
pub use trace::{MeasuredSeries, SimTrace, TraceRow};
