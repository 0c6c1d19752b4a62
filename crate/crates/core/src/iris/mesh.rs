use core::f64::consts::TAU;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::image::RgbImage;
use crate::plr::{DIAMETER_MAX, DIAMETER_MIN};

use super::geometry::{IrisGeometry, Point2};

/// Radial lines in the ring mesh, one every 5 degrees.
pub const SPOKES: usize = 72;

/// Photograph of an iris and the circles visible in it.
///
/// Texture space puts the millimetre origin at the image centre, with
/// `mm_per_px` millimetres per pixel. Both reference circles must lie inside
/// the image so every texture coordinate falls in `[0, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisTexture {
    image: RgbImage,
    reference: IrisGeometry,
    mm_per_px: f64,
}

impl IrisTexture {
    pub fn new(image: RgbImage, reference: IrisGeometry, mm_per_px: f64) -> Result<Self> {
        if image.width() == 0 || image.height() == 0 {
            return Err(Error::Usage("texture image is empty".into()));
        }
        if !(mm_per_px > 0.0) || !mm_per_px.is_finite() {
            return Err(domain("texture scale (mm/px)", mm_per_px, "(0, inf)"));
        }
        let tex = Self {
            image,
            reference,
            mm_per_px,
        };
        let c = reference.iris_center();
        let r = reference.iris_radius();
        for corner in [Point2::new(c.x - r, c.y - r), Point2::new(c.x + r, c.y + r)] {
            let [u, v] = tex.uv(corner);
            if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
                return Err(Error::Usage(format!(
                    "reference iris circle does not fit in the {}x{} texture at {mm_per_px} mm/px",
                    tex.image.width(),
                    tex.image.height()
                )));
            }
        }
        Ok(tex)
    }

    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn reference(&self) -> &IrisGeometry {
        &self.reference
    }

    pub fn mm_per_px(&self) -> f64 {
        self.mm_per_px
    }

    /// Normalized texture coordinate of a point given in texture millimetres.
    pub fn uv(&self, p: Point2) -> [f64; 2] {
        let w = self.image.width() as f64;
        let h = self.image.height() as f64;
        [
            (p.x / self.mm_per_px + 0.5 * w) / w,
            (p.y / self.mm_per_px + 0.5 * h) / h,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshVertex {
    /// Position in millimetres.
    pub position: Point2,
    pub uv: [f64; 2],
}

/// Ring of `2 * SPOKES` vertices joined into a closed strip of
/// `2 * SPOKES` triangles.
///
/// Vertex `2i` is on the pupil border and vertex `2i + 1` on the iris
/// border, both on spoke `i` at angle `i * 5°` from the pupil centre.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisMesh {
    vertices: Vec<MeshVertex>,
    triangles: Vec<[usize; 3]>,
}

fn spoke_direction(i: usize) -> Point2 {
    Point2::unit(i as f64 * TAU / SPOKES as f64)
}

fn inner_vertex(pupil_center: Point2, diameter: f64, spoke: usize) -> Point2 {
    pupil_center + spoke_direction(spoke) * (0.5 * diameter)
}

impl IrisMesh {
    pub fn vertices(&self) -> &[MeshVertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn inner_vertices(&self) -> impl Iterator<Item = &MeshVertex> {
        self.vertices.iter().step_by(2)
    }

    pub fn outer_vertices(&self) -> impl Iterator<Item = &MeshVertex> {
        self.vertices.iter().skip(1).step_by(2)
    }

    /// Signed area (mm²) of each triangle, positive for counter-clockwise.
    pub fn signed_areas(&self) -> impl Iterator<Item = f64> + '_ {
        self.triangles.iter().map(move |&[a, b, c]| {
            let (pa, pb, pc) = (
                self.vertices[a].position,
                self.vertices[b].position,
                self.vertices[c].position,
            );
            0.5 * (pb - pa).cross(pc - pa)
        })
    }

    pub fn area(&self) -> f64 {
        self.signed_areas().sum::<f64>().abs()
    }
}

/// Builds the ring mesh for `geometry`, taking texture coordinates from the
/// photographed circles in `texture`.
pub fn build_mesh(geometry: &IrisGeometry, texture: &IrisTexture) -> Result<IrisMesh> {
    let reference = texture.reference();
    let mut vertices = Vec::with_capacity(2 * SPOKES);
    for i in 0..SPOKES {
        let u = spoke_direction(i);
        vertices.push(MeshVertex {
            position: inner_vertex(geometry.pupil_center(), geometry.pupil_diameter(), i),
            uv: texture.uv(reference.pupil_border_point(u)),
        });
        vertices.push(MeshVertex {
            position: geometry.iris_border_point(u),
            uv: texture.uv(reference.iris_border_point(u)),
        });
    }

    let mut triangles = Vec::with_capacity(2 * SPOKES);
    for i in 0..SPOKES {
        let j = (i + 1) % SPOKES;
        let (inner_i, outer_i) = (2 * i, 2 * i + 1);
        let (inner_j, outer_j) = (2 * j, 2 * j + 1);
        triangles.push([inner_i, outer_i, outer_j]);
        triangles.push([inner_i, outer_j, inner_j]);
    }
    Ok(IrisMesh {
        vertices,
        triangles,
    })
}

/// Moves the inner ring to a pupil of `new_diameter` mm around the pupil
/// centre of `geometry`. Outer vertices and all texture coordinates are
/// copied unchanged.
pub fn deform_mesh(
    mesh: &IrisMesh,
    geometry: &IrisGeometry,
    new_diameter: f64,
) -> Result<IrisMesh> {
    if !(new_diameter > DIAMETER_MIN && new_diameter < DIAMETER_MAX) {
        return Err(domain("pupil diameter (mm)", new_diameter, "(1.9, 7.9)"));
    }
    let target = geometry.with_pupil_diameter(new_diameter)?;
    let mut out = mesh.clone();
    for (spoke, v) in out.vertices.iter_mut().step_by(2).enumerate() {
        v.position = inner_vertex(target.pupil_center(), new_diameter, spoke);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn texture(reference: IrisGeometry) -> IrisTexture {
        IrisTexture::new(
            RgbImage::new(256, 256, [128, 64, 32]),
            reference,
            14.0 / 256.0,
        )
        .unwrap()
    }

    #[test]
    fn mesh_counts() {
        let g = IrisGeometry::concentric(4.0).unwrap();
        let m = build_mesh(&g, &texture(IrisGeometry::concentric(3.0).unwrap())).unwrap();
        assert_eq!(m.vertices().len(), 144);
        assert_eq!(m.triangles().len(), 144);
        for i in 0..m.vertices().len() {
            for j in i + 1..m.vertices().len() {
                assert_ne!(m.vertices()[i].position, m.vertices()[j].position);
            }
        }
    }

    #[test]
    fn concentric_areas() {
        let g = IrisGeometry::concentric(4.0).unwrap();
        let m = build_mesh(&g, &texture(g)).unwrap();
        assert!(m.signed_areas().all(|a| a > 0.0));
        let annulus = PI * (36.0 - 4.0);
        assert!((m.area() - annulus).abs() / annulus < 0.01);
    }

    #[test]
    fn uv_in_unit_square_and_on_reference_circles() {
        let reference = IrisGeometry::new(Point2::ORIGIN, 6.0, Point2::new(0.4, 0.2), 3.0).unwrap();
        let tex = texture(reference);
        let g = IrisGeometry::concentric(5.0).unwrap();
        let m = build_mesh(&g, &tex).unwrap();
        for v in m.vertices() {
            assert!((0.0..=1.0).contains(&v.uv[0]) && (0.0..=1.0).contains(&v.uv[1]));
        }
        let first_inner = m.vertices()[0].uv;
        let expected = tex.uv(Point2::new(0.4 + 1.5, 0.2));
        assert!((first_inner[0] - expected[0]).abs() < 1e-15);
        assert!((first_inner[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn texture_must_contain_reference() {
        let reference = IrisGeometry::concentric(3.0).unwrap();
        assert!(IrisTexture::new(RgbImage::new(100, 100, [0; 3]), reference, 0.1).is_err());
        assert!(IrisTexture::new(RgbImage::new(120, 120, [0; 3]), reference, 0.1).is_ok());
        assert!(IrisTexture::new(RgbImage::new(0, 0, [0; 3]), reference, 0.1).is_err());
    }

    #[test]
    fn deform_identity_and_outer_ring_fixed() {
        let g = IrisGeometry::new(Point2::ORIGIN, 6.0, Point2::new(-0.8, 0.5), 3.2).unwrap();
        let m = build_mesh(&g, &texture(IrisGeometry::concentric(3.0).unwrap())).unwrap();
        assert_eq!(deform_mesh(&m, &g, 3.2).unwrap(), m);
        let d = deform_mesh(&m, &g, 6.9).unwrap();
        for (a, b) in m.outer_vertices().zip(d.outer_vertices()) {
            assert_eq!(a.position.x.to_bits(), b.position.x.to_bits());
            assert_eq!(a.position.y.to_bits(), b.position.y.to_bits());
        }
        for (a, b) in m.vertices().iter().zip(d.vertices()) {
            assert_eq!(a.uv[0].to_bits(), b.uv[0].to_bits());
            assert_eq!(a.uv[1].to_bits(), b.uv[1].to_bits());
        }
        let g2 = g.with_pupil_diameter(6.9).unwrap();
        for v in d.inner_vertices() {
            assert!(g2.radial_ratio(v.position).unwrap().abs() < 1e-12);
        }
        for v in d.outer_vertices() {
            assert!((g2.radial_ratio(v.position).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deform_idempotent_and_range_checked() {
        let g = IrisGeometry::concentric(4.0).unwrap();
        let m = build_mesh(&g, &texture(g)).unwrap();
        let once = deform_mesh(&m, &g, 2.5).unwrap();
        assert_eq!(deform_mesh(&once, &g, 2.5).unwrap(), once);
        assert!(deform_mesh(&m, &g, 7.9).is_err());
        assert!(deform_mesh(&m, &g, 1.0).is_err());
    }
}
