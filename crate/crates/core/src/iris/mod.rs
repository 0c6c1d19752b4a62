//! Iris pattern deformation.
//!
//! Every iris point keeps its radial ratio `ρ` between the pupil border and
//! the iris border while the pupil changes size. The textured ring mesh in
//! [`mesh`] realizes this: only the inner ring moves, texture coordinates
//! never change, and the rasterizer in [`raster`] turns it into frames.

pub mod geometry;
pub mod mesh;
pub mod raster;

pub use geometry::{map_point, radial_ratio, IrisGeometry, Point2};
pub use mesh::{build_mesh, deform_mesh, IrisMesh, IrisTexture, MeshVertex, SPOKES};
pub use raster::render_frame;
