//! Rendering policies and the window-anchored asymmetric frustum.
//!
//! Content is placed on the optical window by projecting scene points through
//! a render nodal point. Which nodal the policy uses is the whole story:
//!
//! * `Static` renders from the reference nodal, frozen at a configured
//!   reference gaze, no matter where the eye actually looks.
//! * `PreShifted` renders from the reference nodal translated by the in-plane
//!   component of the actual-minus-reference nodal displacement, per eye.
//!   This follows the displayed image with the eye: distant content shifts by
//!   the full nodal drop while window-plane content stays put.
//! * `GazeContingent` renders from the actual current nodal against the fixed
//!   window, which is what the asymmetric frustum below realizes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    intersect_ray_plane, window_coords, Dir3, GeometryError, Plane, Point3, Rect3, ScenePoint,
    WindowCoords,
};
use crate::ocular::{Eye, EyeState};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("projection ray is parallel to the window plane")]
    ParallelRay,
    #[error("scene point projects behind the render nodal")]
    PointBehindEye,
    #[error("scene point is within 1 mm of the render nodal")]
    SourceAtNodal,
    #[error("render nodal is on (or behind) the window plane, distance {0} mm")]
    EyeOnWindowPlane(f64),
    #[error("near plane {near} mm must be in (0, {max}] mm")]
    InvalidNear { near: f64, max: f64 },
}

/// Which nodal position anchors the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderPolicy {
    Static,
    PreShifted,
    GazeContingent,
}

impl RenderPolicy {
    pub const ALL: [RenderPolicy; 3] =
        [RenderPolicy::Static, RenderPolicy::PreShifted, RenderPolicy::GazeContingent];

    pub fn as_str(&self) -> &'static str {
        match self {
            RenderPolicy::Static => "static",
            RenderPolicy::PreShifted => "pre_shifted",
            RenderPolicy::GazeContingent => "gaze_contingent",
        }
    }
}

impl std::fmt::Display for RenderPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RenderPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(RenderPolicy::Static),
            "pre_shifted" | "preshifted" => Ok(RenderPolicy::PreShifted),
            "gaze_contingent" | "gazecontingent" => Ok(RenderPolicy::GazeContingent),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

/// Optical window per eye; a shared window (projection wall) is the same
/// rectangle on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeWindows {
    pub left: Rect3,
    pub right: Rect3,
}

impl EyeWindows {
    pub fn shared(window: Rect3) -> Self {
        EyeWindows { left: window, right: window }
    }

    pub fn per_eye(left: Rect3, right: Rect3) -> Self {
        EyeWindows { left, right }
    }

    pub fn get(&self, eye: Eye) -> &Rect3 {
        match eye {
            Eye::Left => &self.left,
            Eye::Right => &self.right,
        }
    }
}

/// The nodal point the policy projects from, for one eye.
pub fn render_nodal(
    policy: RenderPolicy,
    actual: &EyeState,
    reference: &EyeState,
    window: &Rect3,
) -> Point3 {
    match policy {
        RenderPolicy::Static => reference.nodal_point(),
        RenderPolicy::GazeContingent => actual.nodal_point(),
        RenderPolicy::PreShifted => {
            let delta = actual.nodal_point() - reference.nodal_point();
            let n = window.normal.as_vec();
            let in_plane = delta - delta.dot(&n) * n;
            reference.nodal_point() + in_plane
        }
    }
}

/// Where a scene point lands on the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderedPoint {
    pub window_point: Point3,
    pub uv: WindowCoords,
    pub in_bounds: bool,
    pub source: ScenePoint,
}

/// Project one scene point through `render_nodal` onto the window plane.
/// Out-of-bounds points are flagged, never dropped.
pub fn render_point(
    p: &ScenePoint,
    render_nodal: Point3,
    window: &Rect3,
) -> Result<RenderedPoint, RenderError> {
    let plane = window.plane();
    let window_point = match p {
        ScenePoint::Finite(p) => {
            if (p - render_nodal).norm() < 1.0 {
                return Err(RenderError::SourceAtNodal);
            }
            // Points on the window plane are fixed points of the projection;
            // project them orthogonally so no lever-arm rounding creeps in.
            let off = plane.signed_distance(*p);
            if off.abs() < 1e-9 {
                plane.project(*p)
            } else {
                let dir = Dir3::between(render_nodal, *p).map_err(|_| RenderError::SourceAtNodal)?;
                intersect_ray_plane(render_nodal, dir, &plane).map_err(map_ray_error)?
            }
        }
        ScenePoint::Ideal(d) => {
            intersect_ray_plane(render_nodal, *d, &plane).map_err(map_ray_error)?
        }
    };
    let uv = window_coords(window_point, window)
        .expect("intersection lies on the window plane by construction");
    Ok(RenderedPoint { window_point, uv, in_bounds: uv.in_bounds, source: *p })
}

fn map_ray_error(e: GeometryError) -> RenderError {
    match e {
        GeometryError::ParallelRay => RenderError::ParallelRay,
        GeometryError::BehindOrigin => RenderError::PointBehindEye,
        _ => RenderError::ParallelRay,
    }
}

/// Per-eye images of a scene under a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayImage {
    pub left: Vec<RenderedPoint>,
    pub right: Vec<RenderedPoint>,
}

impl DisplayImage {
    pub fn eye(&self, eye: Eye) -> &[RenderedPoint] {
        match eye {
            Eye::Left => &self.left,
            Eye::Right => &self.right,
        }
    }
}

/// Render a whole scene for both eyes. `reference_rig` fixes the pose the
/// Static image was computed for; the camera is head-tracked under every
/// policy, so only untracked eye rotation differs between policies.
pub fn display_image(
    scene: &[ScenePoint],
    rig: &crate::ocular::BinocularRig,
    windows: &EyeWindows,
    policy: RenderPolicy,
    reference_rig: &crate::ocular::BinocularRig,
) -> Result<DisplayImage, RenderError> {
    let render_eye = |eye: Eye| -> Result<Vec<RenderedPoint>, RenderError> {
        let window = windows.get(eye);
        let nodal = render_nodal(policy, rig.eye(eye), reference_rig.eye(eye), window);
        scene.iter().map(|p| render_point(p, nodal, window)).collect()
    };
    Ok(DisplayImage { left: render_eye(Eye::Left)?, right: render_eye(Eye::Right)? })
}

/// Off-axis perspective frustum anchored to a window, in millimeters at the
/// near plane. With `near` equal to the nodal-to-window distance the four
/// edge offsets read directly as window-edge offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct FrustumParams {
    pub camera_position: Point3,
    pub near_mm: f64,
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
    pub window: Rect3,
}

/// Build the asymmetric frustum for a camera at `render_nodal` looking
/// through `window`. The camera orientation never enters: the frustum is a
/// function of nodal position and window alone.
pub fn off_axis_frustum(
    render_nodal: Point3,
    window: &Rect3,
    near_mm: f64,
) -> Result<FrustumParams, RenderError> {
    let e = (render_nodal - window.center).dot(&window.normal.as_vec());
    if e < 1e-6 {
        return Err(RenderError::EyeOnWindowPlane(e));
    }
    if !(near_mm > 0.0 && near_mm <= e) {
        return Err(RenderError::InvalidNear { near: near_mm, max: e });
    }
    // In-plane offset of the window center from the nodal's foot point.
    let cx = (window.center - render_nodal).dot(&window.right.as_vec());
    let cy = (window.center - render_nodal).dot(&window.up.as_vec());
    let scale = near_mm / e;
    Ok(FrustumParams {
        camera_position: render_nodal,
        near_mm,
        left: (cx - window.half_width) * scale,
        right: (cx + window.half_width) * scale,
        bottom: (cy - window.half_height) * scale,
        top: (cy + window.half_height) * scale,
        window: *window,
    })
}

impl FrustumParams {
    /// Convenience: near plane at the window itself.
    pub fn at_window(render_nodal: Point3, window: &Rect3) -> Result<Self, RenderError> {
        let e = (render_nodal - window.center).dot(&window.normal.as_vec());
        off_axis_frustum(render_nodal, window, e)
    }

    /// Map a scene point to normalized device coordinates through this
    /// frustum. Agrees with `window_coords(render_point(..))` for points in
    /// front of the camera.
    pub fn project_ndc(&self, p: Point3) -> Result<(f64, f64), RenderError> {
        let rel = p - self.camera_position;
        let x = rel.dot(&self.window.right.as_vec());
        let y = rel.dot(&self.window.up.as_vec());
        // Depth toward the window is negative along the observer-facing normal.
        let z = rel.dot(&self.window.normal.as_vec());
        if z >= 0.0 {
            return Err(RenderError::PointBehindEye);
        }
        let x_near = self.near_mm * x / -z;
        let y_near = self.near_mm * y / -z;
        Ok((
            2.0 * (x_near - self.left) / (self.right - self.left) - 1.0,
            2.0 * (y_near - self.bottom) / (self.top - self.bottom) - 1.0,
        ))
    }
}

/// Measure how much a hypothetical "camera orientation" could move the image
/// on the window: the projection is computed inside the rotated camera frame
/// and compared, probe point by probe point, against the canonical
/// `render_point`. Returns the maximum in-plane deviation in millimeters.
/// The contract is <= 1e-12 mm: the image depends only on nodal position and
/// window, never on camera orientation.
pub fn orientation_invariance_check(
    render_nodal: Point3,
    window: &Rect3,
    orientation: &nalgebra::Rotation3<f64>,
    probes: &[ScenePoint],
) -> Result<f64, RenderError> {
    let inv = orientation.inverse();
    // Window expressed in the rotated camera frame.
    let cam_center = Point3::from(inv * (window.center - render_nodal));
    let cam_window = Rect3::new(
        cam_center,
        window.right.rotated(&inv),
        window.up.rotated(&inv),
        window.normal.rotated(&inv),
        window.half_width,
        window.half_height,
    )
    .expect("rotation preserves orthonormality");

    let mut max_dev: f64 = 0.0;
    for probe in probes {
        let canonical = render_point(probe, render_nodal, window)?;
        let cam_probe = match probe {
            ScenePoint::Finite(p) => ScenePoint::Finite(Point3::from(inv * (p - render_nodal))),
            ScenePoint::Ideal(d) => ScenePoint::Ideal(d.rotated(&inv)),
        };
        let rotated = render_point(&cam_probe, Point3::origin(), &cam_window)?;
        let du = (rotated.uv.u - canonical.uv.u) * window.half_width;
        let dv = (rotated.uv.v - canonical.uv.v) * window.half_height;
        max_dev = max_dev.max(du.hypot(dv));
    }
    Ok(max_dev)
}

/// Deterministic probe scene for invariance checks: rays through a grid of
/// window points sampled in front of, on, and beyond the window, plus two
/// ideal points.
pub fn default_probe_scene(window: &Rect3, render_nodal: Point3) -> Vec<ScenePoint> {
    let mut probes = Vec::new();
    for &depth in &[0.4, 1.0, 2.5] {
        for iu in -2..=2 {
            for iv in -1..=1 {
                let on_window = window.point_at(iu as f64 * 0.6, iv as f64 * 0.6);
                probes.push(ScenePoint::Finite(render_nodal + (on_window - render_nodal) * depth));
            }
        }
    }
    probes.push(ScenePoint::Ideal(window.normal.reversed()));
    probes.push(ScenePoint::Ideal(
        Dir3::new(window.normal.reversed().as_vec() + window.up.as_vec() * 0.2)
            .expect("nonzero"),
    ));
    probes
}

/// Plane helper shared by metric code: the world-space plane of a window.
pub fn window_plane(window: &Rect3) -> Plane {
    window.plane()
}
