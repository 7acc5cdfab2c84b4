//! Exact 3D primitives shared by every other module: points, unit directions,
//! planes, oriented rectangles, and the angle/intersection utilities the
//! distortion metrics are built from.
//!
//! Conventions are fixed project-wide: lengths in millimeters, reported angles
//! in degrees. The coordinate frame has its origin at the cyclopean point
//! midway between the two eye centers of rotation at the reference pose;
//! +x is rightward, +y upward, +z forward toward the display.

use thiserror::Error;

/// Point in 3D space, coordinates in millimeters.
pub type Point3 = nalgebra::Point3<f64>;
/// Free vector in millimeters.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Rigid motion (rotation + translation).
pub type RigidTransform = nalgebra::Isometry3<f64>;

/// Tolerance for unit-norm and orthogonality invariants.
pub const UNIT_TOL: f64 = 1e-12;
/// A ray is considered parallel to a plane below this |dir . normal|.
pub const PARALLEL_TOL: f64 = 1e-9;
/// A point is considered to lie on a plane within this distance (mm).
pub const ON_PLANE_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("ray is parallel to the plane")]
    ParallelRay,
    #[error("intersection lies behind the ray origin")]
    BehindOrigin,
    #[error("point is {0} mm off the plane")]
    OffPlane(f64),
    #[error("cannot normalize a near-zero vector (norm {0})")]
    ZeroVector(f64),
    #[error("rectangle axes are not orthonormal")]
    NonOrthonormal,
    #[error("rectangle extents must be positive, got {0} x {1}")]
    NonPositiveExtent(f64, f64),
}

/// Unit direction. The constructor normalizes and guarantees unit norm
/// within `UNIT_TOL`, so downstream code never re-checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dir3(Vec3);

impl Dir3 {
    pub fn new(v: Vec3) -> Result<Self, GeometryError> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(GeometryError::ZeroVector(n));
        }
        Ok(Dir3(v / n))
    }

    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        Self::new(Vec3::new(x, y, z))
    }

    /// Unit direction from one point toward another.
    pub fn between(from: Point3, to: Point3) -> Result<Self, GeometryError> {
        Self::new(to - from)
    }

    pub fn plus_z() -> Self {
        Dir3(Vec3::z())
    }

    pub fn plus_y() -> Self {
        Dir3(Vec3::y())
    }

    pub fn plus_x() -> Self {
        Dir3(Vec3::x())
    }

    /// Gaze-style direction from azimuth (positive rightward) and elevation
    /// (positive upward), both in degrees; (0, 0) is straight ahead (+z).
    pub fn from_azimuth_elevation_deg(azimuth_deg: f64, elevation_deg: f64) -> Self {
        let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
        Dir3(Vec3::new(
            el.cos() * az.sin(),
            el.sin(),
            el.cos() * az.cos(),
        ))
    }

    pub fn as_vec(&self) -> Vec3 {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn dot(&self, other: Dir3) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn cross(&self, other: Dir3) -> Vec3 {
        self.0.cross(&other.0)
    }

    pub fn reversed(&self) -> Dir3 {
        Dir3(-self.0)
    }

    pub fn rotated(&self, rotation: &nalgebra::Rotation3<f64>) -> Dir3 {
        Dir3(rotation * self.0)
    }

    /// Angle to `other` in degrees, in [0, 180].
    pub fn angle_to_deg(&self, other: Dir3) -> f64 {
        angle_between_deg(*self, other)
    }
}

impl std::ops::Mul<f64> for Dir3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.0 * s
    }
}

/// Angle between two unit directions in degrees.
///
/// Uses 2*atan2(|a-b|, |a+b|), which stays accurate for nearly identical
/// directions where acos(dot) loses everything to cancellation. Angular
/// differences well below 1e-7 degrees survive.
pub fn angle_between_deg(a: Dir3, b: Dir3) -> f64 {
    let (a, b) = (a.as_vec(), b.as_vec());
    (2.0 * (a - b).norm().atan2((a + b).norm())).to_degrees()
}

/// Infinite plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Point3,
    pub normal: Dir3,
}

impl Plane {
    pub fn new(point: Point3, normal: Dir3) -> Self {
        Plane { point, normal }
    }

    /// Signed distance along the normal.
    pub fn signed_distance(&self, p: Point3) -> f64 {
        (p - self.point).dot(&self.normal.as_vec())
    }

    /// Orthogonal projection of `p` onto the plane.
    pub fn project(&self, p: Point3) -> Point3 {
        p - self.signed_distance(p) * self.normal.as_vec()
    }
}

/// First intersection of the forward ray `origin + t*dir` (t > 0) with a plane.
pub fn intersect_ray_plane(
    origin: Point3,
    dir: Dir3,
    plane: &Plane,
) -> Result<Point3, GeometryError> {
    let denom = dir.as_vec().dot(&plane.normal.as_vec());
    if denom.abs() <= PARALLEL_TOL {
        return Err(GeometryError::ParallelRay);
    }
    let t = (plane.point - origin).dot(&plane.normal.as_vec()) / denom;
    if t <= 0.0 {
        return Err(GeometryError::BehindOrigin);
    }
    Ok(origin + dir.as_vec() * t)
}

/// Oriented finite rectangle: the display window all projection geometry
/// anchors to. `normal` is stored explicitly so it can face the observer
/// regardless of the (right, up) handedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect3 {
    pub center: Point3,
    pub right: Dir3,
    pub up: Dir3,
    pub normal: Dir3,
    pub half_width: f64,
    pub half_height: f64,
}

impl Rect3 {
    pub fn new(
        center: Point3,
        right: Dir3,
        up: Dir3,
        normal: Dir3,
        half_width: f64,
        half_height: f64,
    ) -> Result<Self, GeometryError> {
        if half_width <= 0.0 || half_height <= 0.0 {
            return Err(GeometryError::NonPositiveExtent(half_width, half_height));
        }
        let ortho = right.dot(up).abs().max(right.dot(normal).abs()).max(up.dot(normal).abs());
        if ortho > UNIT_TOL {
            return Err(GeometryError::NonOrthonormal);
        }
        Ok(Rect3 { center, right, up, normal, half_width, half_height })
    }

    /// Rectangle whose normal faces `observer`.
    pub fn facing(
        center: Point3,
        right: Dir3,
        up: Dir3,
        half_width: f64,
        half_height: f64,
        observer: Point3,
    ) -> Result<Self, GeometryError> {
        let n = Dir3::new(right.cross(up))?;
        let n = if n.as_vec().dot(&(observer - center)) >= 0.0 { n } else { n.reversed() };
        Self::new(center, right, up, n, half_width, half_height)
    }

    pub fn plane(&self) -> Plane {
        Plane::new(self.center, self.normal)
    }

    /// Point at normalized in-plane coordinates (u, v); (0,0) is the center,
    /// (1,1) the top-right corner.
    pub fn point_at(&self, u: f64, v: f64) -> Point3 {
        self.center + self.right * (u * self.half_width) + self.up * (v * self.half_height)
    }

    pub fn transformed(&self, iso: &RigidTransform) -> Rect3 {
        Rect3 {
            center: iso * self.center,
            right: Dir3(iso.rotation * self.right.as_vec()),
            up: Dir3(iso.rotation * self.up.as_vec()),
            normal: Dir3(iso.rotation * self.normal.as_vec()),
            half_width: self.half_width,
            half_height: self.half_height,
        }
    }
}

/// Normalized window coordinates of an on-plane point. Points outside the
/// rectangle are flagged, not rejected: direction errors are still
/// meaningful beyond the physical screen edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCoords {
    pub u: f64,
    pub v: f64,
    pub in_bounds: bool,
}

pub fn window_coords(p: Point3, window: &Rect3) -> Result<WindowCoords, GeometryError> {
    let off = window.plane().signed_distance(p).abs();
    if off > ON_PLANE_TOL {
        return Err(GeometryError::OffPlane(off));
    }
    let d = p - window.center;
    let u = d.dot(&window.right.as_vec()) / window.half_width;
    let v = d.dot(&window.up.as_vec()) / window.half_height;
    Ok(WindowCoords { u, v, in_bounds: u.abs() <= 1.0 && v.abs() <= 1.0 })
}

/// A scene element: either an ordinary point or an ideal point at optical
/// infinity (e.g. the horizon), which has a direction but no position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenePoint {
    Finite(Point3),
    Ideal(Dir3),
}

impl ScenePoint {
    pub fn finite(x: f64, y: f64, z: f64) -> Self {
        ScenePoint::Finite(Point3::new(x, y, z))
    }

    pub fn transformed(&self, iso: &RigidTransform) -> ScenePoint {
        match self {
            ScenePoint::Finite(p) => ScenePoint::Finite(iso * p),
            ScenePoint::Ideal(d) => ScenePoint::Ideal(Dir3(iso.rotation * d.as_vec())),
        }
    }

    /// True direction of this scene element as seen from `eye`.
    pub fn direction_from(&self, eye: Point3) -> Result<Dir3, GeometryError> {
        match self {
            ScenePoint::Finite(p) => Dir3::between(eye, *p),
            ScenePoint::Ideal(d) => Ok(*d),
        }
    }
}
