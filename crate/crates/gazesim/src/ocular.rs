//! Rotating-eye model: centers of rotation, gaze, nodal points, binocular
//! fixation, vergence, and the counter-rotation that holds fixation during
//! head movement.
//!
//! The eye rotates about its center of rotation C, but light is taken to pass
//! undeviated through the nodal point N sitting `nodal_offset_mm` in front of
//! C along the gaze. N therefore translates whenever the eye rotates, which is
//! the root of every distortion quantified in [`crate::metrics`].

use thiserror::Error;

use crate::geometry::{
    angle_between_deg, Dir3, Point3, RigidTransform, ScenePoint, Vec3,
};

#[derive(Debug, Error, PartialEq)]
pub enum OcularError {
    #[error("fixation target is behind the eyes (head-frame z = {0})")]
    TargetBehindEyes(f64),
    #[error("fixation target is within 1 mm of an eye center")]
    TargetAtEyeCenter,
    #[error("nodal offset {0} mm is outside the plausible (0, 15) mm range")]
    InvalidNodalOffset(f64),
    #[error("vergence {0} deg is negative (divergent visual axes)")]
    NegativeVergence(f64),
    #[error("vergence {0} deg is outside [0, 180)")]
    VergenceOutOfRange(f64),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// One eye: center of rotation C, gaze direction, and the C-to-N distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeState {
    pub center_of_rotation: Point3,
    pub gaze: Dir3,
    pub nodal_offset_mm: f64,
}

impl EyeState {
    pub fn new(
        center_of_rotation: Point3,
        gaze: Dir3,
        nodal_offset_mm: f64,
    ) -> Result<Self, OcularError> {
        // Physiological plausibility guard; 0 is allowed as the degenerate
        // "pinhole at the rotation center" case.
        if !(0.0..15.0).contains(&nodal_offset_mm) {
            return Err(OcularError::InvalidNodalOffset(nodal_offset_mm));
        }
        Ok(EyeState { center_of_rotation, gaze, nodal_offset_mm })
    }

    /// N = C + offset * gaze. Lies on the visual axis by construction.
    pub fn nodal_point(&self) -> Point3 {
        self.center_of_rotation + self.gaze * self.nodal_offset_mm
    }

    pub fn with_gaze(&self, gaze: Dir3) -> EyeState {
        EyeState { gaze, ..*self }
    }

    fn translated(&self, t: Vec3) -> EyeState {
        EyeState { center_of_rotation: self.center_of_rotation + t, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub const BOTH: [Eye; 2] = [Eye::Left, Eye::Right];

    pub fn prefix(&self) -> &'static str {
        match self {
            Eye::Left => "left",
            Eye::Right => "right",
        }
    }
}

/// Two eyes plus the head pose that carries them. Eye states are stored in
/// world space; `head_pose` maps head-frame geometry (e.g. a head-mounted
/// window) into the world.
#[derive(Debug, Clone, PartialEq)]
pub struct BinocularRig {
    pub left: EyeState,
    pub right: EyeState,
    pub ipd_mm: f64,
    pub head_pose: RigidTransform,
}

impl BinocularRig {
    /// Rig at the reference pose: C_left = (-ipd/2, 0, 0),
    /// C_right = (+ipd/2, 0, 0), both gazes straight ahead.
    pub fn reference(ipd_mm: f64, nodal_offset_mm: f64) -> Result<Self, OcularError> {
        Self::reference_with_gaze(ipd_mm, nodal_offset_mm, Dir3::plus_z())
    }

    pub fn reference_with_gaze(
        ipd_mm: f64,
        nodal_offset_mm: f64,
        gaze: Dir3,
    ) -> Result<Self, OcularError> {
        let half = ipd_mm / 2.0;
        Ok(BinocularRig {
            left: EyeState::new(Point3::new(-half, 0.0, 0.0), gaze, nodal_offset_mm)?,
            right: EyeState::new(Point3::new(half, 0.0, 0.0), gaze, nodal_offset_mm)?,
            ipd_mm,
            head_pose: RigidTransform::identity(),
        })
    }

    pub fn eye(&self, eye: Eye) -> &EyeState {
        match eye {
            Eye::Left => &self.left,
            Eye::Right => &self.right,
        }
    }

    /// Rotate both eyes so each visual axis passes through `target`.
    ///
    /// Because N lies on the line through C along the gaze, aiming the gaze
    /// with gaze = normalize(target - C) puts C, N and the target on one line;
    /// no separate alignment step is needed.
    pub fn fixate(&self, target: &ScenePoint) -> Result<FixationResult, OcularError> {
        let rig = match target {
            ScenePoint::Ideal(d) => BinocularRig {
                left: self.left.with_gaze(*d),
                right: self.right.with_gaze(*d),
                ..self.clone()
            },
            ScenePoint::Finite(p) => {
                let head_local = self.head_pose.inverse() * p;
                if head_local.z <= 0.0 {
                    return Err(OcularError::TargetBehindEyes(head_local.z));
                }
                let gaze_for = |eye: &EyeState| -> Result<Dir3, OcularError> {
                    if (p - eye.center_of_rotation).norm() < 1.0 {
                        return Err(OcularError::TargetAtEyeCenter);
                    }
                    Ok(Dir3::between(eye.center_of_rotation, *p)?)
                };
                BinocularRig {
                    left: self.left.with_gaze(gaze_for(&self.left)?),
                    right: self.right.with_gaze(gaze_for(&self.right)?),
                    ..self.clone()
                }
            }
        };
        let vergence_deg = angle_between_deg(rig.left.gaze, rig.right.gaze);
        let skew_mm = match target {
            // Parallel axes are treated as meeting at infinity.
            ScenePoint::Ideal(_) => 0.0,
            ScenePoint::Finite(_) => visual_axis_skew(&rig),
        };
        Ok(FixationResult { rig, vergence_deg, skew_mm })
    }

    /// Translate the head while the eyes counter-rotate to keep fixating the
    /// same world-space target (vestibulo-ocular reflex).
    pub fn counter_rotate(
        &self,
        head_translation: Vec3,
        fixation: &ScenePoint,
    ) -> Result<BinocularRig, OcularError> {
        let moved = BinocularRig {
            left: self.left.translated(head_translation),
            right: self.right.translated(head_translation),
            ipd_mm: self.ipd_mm,
            head_pose: RigidTransform::from(nalgebra::Translation3::from(head_translation))
                * self.head_pose,
        };
        Ok(moved.fixate(fixation)?.rig)
    }
}

/// Result of a binocular fixation.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationResult {
    pub rig: BinocularRig,
    pub vergence_deg: f64,
    /// Distance between the two visual axes at closest approach, so tests
    /// can bound the residual for asymmetric targets.
    pub skew_mm: f64,
}

fn visual_axis_skew(rig: &BinocularRig) -> f64 {
    match closest_approach(
        rig.left.center_of_rotation,
        rig.left.gaze,
        rig.right.center_of_rotation,
        rig.right.gaze,
    ) {
        Some((p_left, p_right, _, _)) => (p_left - p_right).norm(),
        None => 0.0,
    }
}

/// Closest points of two lines `a + t*da`, `b + u*db`; None when parallel.
fn closest_approach(
    a: Point3,
    da: Dir3,
    b: Point3,
    db: Dir3,
) -> Option<(Point3, Point3, f64, f64)> {
    let w = b - a;
    let bb = da.dot(db);
    let denom = 1.0 - bb * bb;
    if denom < 1e-14 {
        return None;
    }
    let wa = w.dot(&da.as_vec());
    let wb = w.dot(&db.as_vec());
    let t = (wa - bb * wb) / denom;
    let u = (bb * wa - wb) / denom;
    Some((a + da * t, b + db * u, t, u))
}

/// Symmetric-fixation distance specified by a vergence angle, measured from
/// the baseline midpoint: d = (ipd/2) / tan(vergence/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VergenceDistance {
    Finite(f64),
    Infinite,
}

impl VergenceDistance {
    pub fn as_mm(&self) -> f64 {
        match self {
            VergenceDistance::Finite(d) => *d,
            VergenceDistance::Infinite => f64::INFINITY,
        }
    }
}

pub fn distance_from_vergence(
    vergence_deg: f64,
    ipd_mm: f64,
) -> Result<VergenceDistance, OcularError> {
    if vergence_deg < 0.0 {
        return Err(OcularError::NegativeVergence(vergence_deg));
    }
    if vergence_deg >= 180.0 {
        return Err(OcularError::VergenceOutOfRange(vergence_deg));
    }
    if vergence_deg == 0.0 {
        return Ok(VergenceDistance::Infinite);
    }
    let half = (vergence_deg / 2.0).to_radians();
    Ok(VergenceDistance::Finite(ipd_mm / 2.0 / half.tan()))
}

/// Where a pair of viewing directions, anchored at the rig's actual nodal
/// points, is seen to intersect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    Point { point: Point3, skew_mm: f64 },
    /// No forward convergence: the rays are parallel or cross behind the
    /// nodal points. Maps to the "impossible configuration" flag in m4.
    Divergent,
}

/// Triangulate the perceived location of whatever the two eyes are looking
/// at: midpoint of the common perpendicular of the two nodal rays.
pub fn perceived_point(rig: &BinocularRig, dir_left: Dir3, dir_right: Dir3) -> Convergence {
    let n_left = rig.left.nodal_point();
    let n_right = rig.right.nodal_point();
    match closest_approach(n_left, dir_left, n_right, dir_right) {
        Some((p_left, p_right, t, u)) if t > 0.0 && u > 0.0 => Convergence::Point {
            point: Point3::from((p_left.coords + p_right.coords) / 2.0),
            skew_mm: (p_left - p_right).norm(),
        },
        _ => Convergence::Divergent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nodal_point_straight_ahead() {
        let eye = EyeState::new(Point3::origin(), Dir3::plus_z(), 6.0).unwrap();
        assert_relative_eq!(eye.nodal_point(), Point3::new(0.0, 0.0, 6.0));
    }

    #[test]
    fn nodal_point_converged_eye() {
        // C = (32,0,0) gazing at (0,0,200): N = (32 - 6 sin th, 0, 6 cos th)
        // with th = atan(32/200). Oracle is direct trig.
        let gaze = Dir3::between(Point3::new(32.0, 0.0, 0.0), Point3::new(0.0, 0.0, 200.0)).unwrap();
        let eye = EyeState::new(Point3::new(32.0, 0.0, 0.0), gaze, 6.0).unwrap();
        let th = (32.0f64 / 200.0).atan();
        let expected = Point3::new(32.0 - 6.0 * th.sin(), 0.0, 6.0 * th.cos());
        assert_relative_eq!(eye.nodal_point(), expected, epsilon = 1e-12);
        assert_relative_eq!(eye.nodal_point().x, 31.05206, epsilon = 1e-5);
        assert_relative_eq!(eye.nodal_point().z, 5.92464, epsilon = 1e-5);
    }

    #[test]
    fn zero_offset_degenerates_to_center() {
        let gaze = Dir3::from_components(0.3, -0.2, 1.0).unwrap();
        let eye = EyeState::new(Point3::new(5.0, 1.0, 2.0), gaze, 0.0).unwrap();
        assert_eq!(eye.nodal_point(), eye.center_of_rotation);
    }

    #[test]
    fn nodal_offset_guard() {
        let r = EyeState::new(Point3::origin(), Dir3::plus_z(), 15.0);
        assert!(matches!(r, Err(OcularError::InvalidNodalOffset(_))));
        let r = EyeState::new(Point3::origin(), Dir3::plus_z(), -1.0);
        assert!(matches!(r, Err(OcularError::InvalidNodalOffset(_))));
    }

    #[test]
    fn fixate_symmetric_near_target() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let fx = rig.fixate(&ScenePoint::finite(0.0, 0.0, 200.0)).unwrap();
        let expected = 2.0 * (32.0f64 / 200.0).atan().to_degrees();
        assert_relative_eq!(fx.vergence_deg, expected, epsilon = 1e-12);
        assert_relative_eq!(fx.vergence_deg, 18.180554, epsilon = 1e-6);
        assert!(fx.skew_mm < 1e-9);

        // Visual axes pass through the target.
        for eye in [&fx.rig.left, &fx.rig.right] {
            let to_target = Dir3::between(eye.center_of_rotation, Point3::new(0.0, 0.0, 200.0)).unwrap();
            assert!(angle_between_deg(eye.gaze, to_target) < 1e-12);
        }

        // Inter-nodal distance shrinks by 2 * 6 sin(atan(32/200)).
        let internodal = (fx.rig.left.nodal_point() - fx.rig.right.nodal_point()).norm();
        let s = 6.0 * (32.0f64 / 200.0).atan().sin();
        assert_relative_eq!(internodal, 64.0 - 2.0 * s, epsilon = 1e-9);
        assert_relative_eq!(internodal, 62.104114, epsilon = 1e-6);
    }

    #[test]
    fn fixate_infinity() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let fx = rig.fixate(&ScenePoint::Ideal(Dir3::plus_z())).unwrap();
        assert_eq!(fx.vergence_deg, 0.0);
        assert_eq!(fx.rig.left.gaze, Dir3::plus_z());
        assert_eq!(fx.rig.right.gaze, Dir3::plus_z());
    }

    #[test]
    fn fixate_rejects_bad_targets() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let r = rig.fixate(&ScenePoint::finite(0.0, 0.0, -100.0));
        assert!(matches!(r, Err(OcularError::TargetBehindEyes(_))));
        let r = rig.fixate(&ScenePoint::finite(32.0, 0.0, 0.5));
        assert!(matches!(r, Err(OcularError::TargetAtEyeCenter)));
    }

    #[test]
    fn distance_from_vergence_inverts_fixation() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let fx = rig.fixate(&ScenePoint::finite(0.0, 0.0, 200.0)).unwrap();
        match distance_from_vergence(fx.vergence_deg, 64.0).unwrap() {
            VergenceDistance::Finite(d) => assert_relative_eq!(d, 200.0, epsilon = 1e-9),
            VergenceDistance::Infinite => panic!("expected finite"),
        }
        assert_eq!(
            distance_from_vergence(0.0, 64.0).unwrap(),
            VergenceDistance::Infinite
        );
        // 2*atan(32/3000) = 1.222264 deg specifies 3000 mm.
        let v = 2.0 * (32.0f64 / 3000.0).atan().to_degrees();
        assert_relative_eq!(v, 1.222264, epsilon = 1e-6);
        match distance_from_vergence(v, 64.0).unwrap() {
            VergenceDistance::Finite(d) => assert_relative_eq!(d, 3000.0, epsilon = 1e-9),
            VergenceDistance::Infinite => panic!("expected finite"),
        }
        assert!(matches!(
            distance_from_vergence(-0.1, 64.0),
            Err(OcularError::NegativeVergence(_))
        ));
    }

    #[test]
    fn perceived_point_triangulates() {
        // Nodals at (+-31, 0, 0) aiming at (0, 0, 193.75): the construction
        // behind the 1 mm rounded nodal-shift depth displacement.
        let mut rig = BinocularRig::reference(62.0, 6.0).unwrap();
        rig.left.nodal_offset_mm = 0.0;
        rig.right.nodal_offset_mm = 0.0;
        let target = Point3::new(0.0, 0.0, 193.75);
        let dl = Dir3::between(rig.left.nodal_point(), target).unwrap();
        let dr = Dir3::between(rig.right.nodal_point(), target).unwrap();
        match perceived_point(&rig, dl, dr) {
            Convergence::Point { point, skew_mm } => {
                assert_relative_eq!(point, target, epsilon = 1e-9);
                assert!(skew_mm < 1e-9);
            }
            Convergence::Divergent => panic!("expected convergence"),
        }
    }

    #[test]
    fn perceived_point_consistent_with_fixation() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let target = Point3::new(0.0, 0.0, 200.0);
        let rig = rig.fixate(&ScenePoint::Finite(target)).unwrap().rig;
        let dl = Dir3::between(rig.left.nodal_point(), target).unwrap();
        let dr = Dir3::between(rig.right.nodal_point(), target).unwrap();
        match perceived_point(&rig, dl, dr) {
            Convergence::Point { point, skew_mm } => {
                assert_relative_eq!(point, target, epsilon = 1e-9);
                assert!(skew_mm < 1e-9);
            }
            Convergence::Divergent => panic!("expected convergence"),
        }
    }

    #[test]
    fn perceived_point_divergent_rays() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let dl = Dir3::from_components(-0.1, 0.0, 1.0).unwrap();
        let dr = Dir3::from_components(0.1, 0.0, 1.0).unwrap();
        assert_eq!(perceived_point(&rig, dl, dr), Convergence::Divergent);
    }

    #[test]
    fn counter_rotate_holds_fixation() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let target = ScenePoint::finite(0.0, 0.0, 200.0);
        let rig = rig.fixate(&target).unwrap().rig;

        let same = rig.counter_rotate(Vec3::zeros(), &target).unwrap();
        assert_eq!(same, rig);

        let moved = rig.counter_rotate(Vec3::new(10.0, 0.0, 0.0), &target).unwrap();
        for eye in [&moved.left, &moved.right] {
            let axis_to_target =
                Dir3::between(eye.center_of_rotation, Point3::new(0.0, 0.0, 200.0)).unwrap();
            assert!(angle_between_deg(eye.gaze, axis_to_target).to_radians() * 200.0 < 1e-9);
        }
        assert_relative_eq!(moved.left.center_of_rotation.x, -22.0, epsilon = 1e-12);
    }

    #[test]
    fn counter_rotate_infinity_fixation_immune_to_translation() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let horizon = ScenePoint::Ideal(Dir3::plus_z());
        let rig = rig.fixate(&horizon).unwrap().rig;
        let moved = rig.counter_rotate(Vec3::new(10.0, 0.0, 0.0), &horizon).unwrap();
        assert_eq!(moved.left.gaze, Dir3::plus_z());
        assert_eq!(moved.right.gaze, Dir3::plus_z());
    }

    #[test]
    fn nodal_displacement_law_random() {
        // After symmetric fixation at distance d the per-eye inward nodal
        // shift is offset * sin(atan((ipd/2)/d)), exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = rng.gen_range(120.0..8000.0);
            let ipd = rng.gen_range(50.0..75.0);
            let offset = rng.gen_range(3.0..9.0);
            let rig = BinocularRig::reference(ipd, offset).unwrap();
            let fixed = rig.fixate(&ScenePoint::finite(0.0, 0.0, d)).unwrap().rig;
            let s = offset * ((ipd / 2.0) / d).atan().sin();
            let shift = (ipd / 2.0) - fixed.right.nodal_point().x;
            assert_relative_eq!(shift, s, epsilon = 1e-12);
            let internodal = (fixed.left.nodal_point() - fixed.right.nodal_point()).norm();
            assert_relative_eq!(ipd - internodal, 2.0 * s, epsilon = 1e-9);
        }
    }

    #[test]
    fn vergence_roundtrip_over_distances() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let mut d = 100.0;
        while d <= 10_000.0 {
            let fx = rig.fixate(&ScenePoint::finite(0.0, 0.0, d)).unwrap();
            match distance_from_vergence(fx.vergence_deg, 64.0).unwrap() {
                VergenceDistance::Finite(back) => {
                    assert_relative_eq!(back, d, max_relative = 1e-6);
                }
                VergenceDistance::Infinite => panic!("finite target"),
            }
            d *= 1.7;
        }
    }

    #[test]
    fn mirror_symmetry_swaps_eyes() {
        let rig = BinocularRig::reference(64.0, 6.0).unwrap();
        let target = Point3::new(37.0, -12.0, 410.0);
        let mirrored = Point3::new(-37.0, -12.0, 410.0);
        let a = rig.fixate(&ScenePoint::Finite(target)).unwrap().rig;
        let b = rig.fixate(&ScenePoint::Finite(mirrored)).unwrap().rig;
        assert_relative_eq!(a.left.gaze.x(), -b.right.gaze.x(), epsilon = 1e-15);
        assert_relative_eq!(a.left.gaze.y(), b.right.gaze.y(), epsilon = 1e-15);
        assert_relative_eq!(a.left.gaze.z(), b.right.gaze.z(), epsilon = 1e-15);
        assert_relative_eq!(a.right.gaze.x(), -b.left.gaze.x(), epsilon = 1e-15);
    }

    #[test]
    fn eye_image_depends_only_on_center_and_gaze() {
        // Two eyes with equal C and gaze are indistinguishable: there is no
        // torsion parameter anywhere in the state.
        let gaze = Dir3::from_components(0.1, -0.2, 1.0).unwrap();
        let a = EyeState::new(Point3::new(1.0, 2.0, 3.0), gaze, 6.0).unwrap();
        let b = EyeState::new(Point3::new(1.0, 2.0, 3.0), gaze, 6.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nodal_point(), b.nodal_point());
    }
}
