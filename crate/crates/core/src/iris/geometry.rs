use core::ops::{Add, Mul, Sub};

use crate::error::{domain, Error, Result};
use crate::plr::{DIAMETER_MAX, DIAMETER_MIN};

/// A point or vector in the iris plane, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn unit(angle: f64) -> Self {
        Self::new(libm::cos(angle), libm::sin(angle))
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Self {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Largest pupil-centre offset as a fraction of the iris radius.
pub const MAX_PUPIL_OFFSET_FRACTION: f64 = 0.2;

/// Default iris radius (mm) for a ~12 mm iris.
pub const DEFAULT_IRIS_RADIUS_MM: f64 = 6.0;

/// Relative tolerance when deciding whether a point lies on a ring border.
const BORDER_TOLERANCE: f64 = 1e-9;

/// Pupil and iris circles.
///
/// The pupil centre may sit off the iris centre by up to 20% of the iris
/// radius; the pupil circle must lie strictly inside the iris circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrisGeometry {
    iris_center: Point2,
    iris_radius: f64,
    pupil_center: Point2,
    pupil_diameter: f64,
}

impl IrisGeometry {
    pub fn new(
        iris_center: Point2,
        iris_radius: f64,
        pupil_center: Point2,
        pupil_diameter: f64,
    ) -> Result<Self> {
        if !(iris_radius > 0.0) || !iris_radius.is_finite() {
            return Err(domain("iris radius (mm)", iris_radius, "(0, inf)"));
        }
        if !(pupil_diameter > DIAMETER_MIN && pupil_diameter < DIAMETER_MAX) {
            return Err(domain("pupil diameter (mm)", pupil_diameter, "(1.9, 7.9)"));
        }
        let offset = (pupil_center - iris_center).norm();
        if !(offset <= MAX_PUPIL_OFFSET_FRACTION * iris_radius) {
            return Err(domain(
                "pupil centre offset (mm)",
                offset,
                "[0, 0.2 * iris radius]",
            ));
        }
        if !(offset + 0.5 * pupil_diameter < iris_radius) {
            return Err(Error::Usage(alloc::format!(
                "pupil circle (offset {offset} mm, diameter {pupil_diameter} mm) is not inside \
                 the iris circle of radius {iris_radius} mm"
            )));
        }
        Ok(Self {
            iris_center,
            iris_radius,
            pupil_center,
            pupil_diameter,
        })
    }

    /// Iris of the default radius with both circles centred on the origin.
    pub fn concentric(pupil_diameter: f64) -> Result<Self> {
        Self::new(
            Point2::ORIGIN,
            DEFAULT_IRIS_RADIUS_MM,
            Point2::ORIGIN,
            pupil_diameter,
        )
    }

    pub fn iris_center(&self) -> Point2 {
        self.iris_center
    }

    pub fn iris_radius(&self) -> f64 {
        self.iris_radius
    }

    pub fn pupil_center(&self) -> Point2 {
        self.pupil_center
    }

    pub fn pupil_diameter(&self) -> f64 {
        self.pupil_diameter
    }

    pub fn pupil_radius(&self) -> f64 {
        0.5 * self.pupil_diameter
    }

    /// Same circles with a different pupil diameter.
    pub fn with_pupil_diameter(&self, pupil_diameter: f64) -> Result<Self> {
        Self::new(
            self.iris_center,
            self.iris_radius,
            self.pupil_center,
            pupil_diameter,
        )
    }

    /// Distance from the pupil centre to the iris border along `direction`
    /// (a unit vector).
    pub fn iris_distance(&self, direction: Point2) -> f64 {
        // |w + s u|^2 = R^2 with w = pupil_center - iris_center, s > 0.
        let w = self.pupil_center - self.iris_center;
        let b = direction.dot(w);
        let c = w.dot(w) - self.iris_radius * self.iris_radius;
        -b + libm::sqrt(b * b - c)
    }

    /// Point on the iris border along `direction` from the pupil centre.
    pub fn iris_border_point(&self, direction: Point2) -> Point2 {
        self.pupil_center + direction * self.iris_distance(direction)
    }

    /// Point on the pupil border along `direction` from the pupil centre.
    pub fn pupil_border_point(&self, direction: Point2) -> Point2 {
        self.pupil_center + direction * self.pupil_radius()
    }

    /// Unit direction from the pupil centre to `p` and the distance to it.
    fn ray_to(&self, p: Point2) -> Result<(Point2, f64)> {
        let d = p - self.pupil_center;
        let dist = d.norm();
        if !(dist > BORDER_TOLERANCE * self.iris_radius) {
            return Err(domain(
                "distance from pupil centre (mm)",
                dist,
                "(0, inf): the radial line is undefined at the pupil centre",
            ));
        }
        Ok((d * (1.0 / dist), dist))
    }

    /// Radial ratio `ρ = |p - c| / |E - c|`, where `c` and `E` are the pupil
    /// and iris border points on the ray from the pupil centre through `p`.
    ///
    /// `ρ` is 0 on the pupil border and 1 on the iris border.
    pub fn radial_ratio(&self, p: Point2) -> Result<f64> {
        let (u, dist) = self.ray_to(p)?;
        let inner = self.pupil_radius();
        let outer = self.iris_distance(u);
        let slack = BORDER_TOLERANCE * self.iris_radius;
        if dist < inner - slack || dist > outer + slack {
            return Err(domain(
                "point distance from pupil centre (mm)",
                dist,
                "between the pupil border and the iris border",
            ));
        }
        Ok(((dist - inner) / (outer - inner)).clamp(0.0, 1.0))
    }
}

pub fn radial_ratio(p: Point2, geometry: &IrisGeometry) -> Result<f64> {
    geometry.radial_ratio(p)
}

/// Moves `p` along its radial line so that its radial ratio under `to`
/// equals its radial ratio under `from`.
///
/// Both geometries must share the iris circle and the pupil centre; only
/// the pupil diameter may differ.
pub fn map_point(p: Point2, from: &IrisGeometry, to: &IrisGeometry) -> Result<Point2> {
    let same = |a: Point2, b: Point2| (a - b).norm() <= BORDER_TOLERANCE * from.iris_radius;
    if !same(from.iris_center, to.iris_center)
        || !same(from.pupil_center, to.pupil_center)
        || (from.iris_radius - to.iris_radius).abs() > BORDER_TOLERANCE * from.iris_radius
    {
        return Err(Error::Usage(
            "map_point needs geometries with the same iris circle and pupil centre".into(),
        ));
    }
    let rho = from.radial_ratio(p)?;
    let (u, _) = from.ray_to(p)?;
    let inner = to.pupil_radius();
    let outer = to.iris_distance(u);
    Ok(to.pupil_center + u * (inner + rho * (outer - inner)))
}
