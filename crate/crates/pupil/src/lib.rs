//! File formats, built-in validation and the command-line front end for
//! [`pupil_core`].

pub mod cli;
pub mod io;
pub mod validate;

pub use pupil_core as core;
