use alloc::format;

use crate::error::{domain, Error, Result};
use crate::image::RgbImage;

use super::geometry::Point2;
use super::mesh::{IrisMesh, IrisTexture};

/// Barycentric slack so pixels on shared edges are not dropped.
const EDGE_EPSILON: f64 = 1e-9;

/// Bilinear lookup with clamp-to-edge addressing. Texel centres sit at
/// `(i + 0.5) / width`.
pub fn sample_bilinear(image: &RgbImage, u: f64, v: f64) -> [f64; 3] {
    let w = image.width();
    let h = image.height();
    let x = u * w as f64 - 0.5;
    let y = v * h as f64 - 0.5;
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let fx = x - x0;
    let fy = y - y0;
    let clamp = |i: f64, n: usize| -> usize { i.clamp(0.0, (n - 1) as f64) as usize };
    let (xa, xb) = (clamp(x0, w), clamp(x0 + 1.0, w));
    let (ya, yb) = (clamp(y0, h), clamp(y0 + 1.0, h));
    let (p00, p10, p01, p11) = (
        image.get(xa, ya),
        image.get(xb, ya),
        image.get(xa, yb),
        image.get(xb, yb),
    );
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Pixel coordinates of a millimetre point in a `width` x `height` frame
/// whose centre is the millimetre origin.
pub fn mm_to_px(p: Point2, width: usize, height: usize, mm_per_px: f64) -> [f64; 2] {
    [
        p.x / mm_per_px + 0.5 * width as f64,
        p.y / mm_per_px + 0.5 * height as f64,
    ]
}

/// Millimetre position of the centre of pixel `(x, y)`.
pub fn px_to_mm(x: usize, y: usize, width: usize, height: usize, mm_per_px: f64) -> Point2 {
    Point2::new(
        (x as f64 + 0.5 - 0.5 * width as f64) * mm_per_px,
        (y as f64 + 0.5 - 0.5 * height as f64) * mm_per_px,
    )
}

/// Rasterizes the textured ring mesh. Everything the mesh does not cover,
/// the pupil included, stays black.
pub fn render_frame(
    mesh: &IrisMesh,
    texture: &IrisTexture,
    width: usize,
    height: usize,
    mm_per_px: f64,
) -> Result<RgbImage> {
    if width == 0 || height == 0 {
        return Err(Error::Usage(format!(
            "cannot render a {width}x{height} frame"
        )));
    }
    if !(mm_per_px > 0.0) || !mm_per_px.is_finite() {
        return Err(domain("frame scale (mm/px)", mm_per_px, "(0, inf)"));
    }
    let mut frame = RgbImage::new(width, height, [0, 0, 0]);
    let vertices = mesh.vertices();

    for &[a, b, c] in mesh.triangles() {
        let pa = mm_to_px(vertices[a].position, width, height, mm_per_px);
        let pb = mm_to_px(vertices[b].position, width, height, mm_per_px);
        let pc = mm_to_px(vertices[c].position, width, height, mm_per_px);
        let area = edge(pa, pb, pc);
        if area.abs() < 1e-12 {
            continue;
        }

        let min_x = libm::floor(pa[0].min(pb[0]).min(pc[0]) - 0.5).max(0.0);
        let max_x = libm::ceil(pa[0].max(pb[0]).max(pc[0]) - 0.5).min(width as f64 - 1.0);
        let min_y = libm::floor(pa[1].min(pb[1]).min(pc[1]) - 0.5).max(0.0);
        let max_y = libm::ceil(pa[1].max(pb[1]).max(pc[1]) - 0.5).min(height as f64 - 1.0);
        if min_x > max_x || min_y > max_y {
            continue;
        }

        let (ua, ub, uc) = (vertices[a].uv, vertices[b].uv, vertices[c].uv);
        for y in min_y as usize..=max_y as usize {
            for x in min_x as usize..=max_x as usize {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let wa = edge(pb, pc, p) / area;
                let wb = edge(pc, pa, p) / area;
                let wc = edge(pa, pb, p) / area;
                if wa < -EDGE_EPSILON || wb < -EDGE_EPSILON || wc < -EDGE_EPSILON {
                    continue;
                }
                let u = wa * ua[0] + wb * ub[0] + wc * uc[0];
                let v = wa * ua[1] + wb * ub[1] + wc * uc[1];
                let rgb = sample_bilinear(texture.image(), u, v);
                frame.set(x, y, rgb.map(|c| libm::round(c).clamp(0.0, 255.0) as u8));
            }
        }
    }
    Ok(frame)
}
