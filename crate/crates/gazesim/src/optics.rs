//! Physical display surfaces and the paraxial thin-lens magnifier that turns
//! them into the optical window every projection and metric operates on.
//!
//! Only paraxial imaging is modeled: the lens plane passes through the eye
//! reference point, the optical axis is the window normal through the window
//! center, and the eye is assumed on-axis at the reference pose. Lens
//! aberrations (pincushion, off-axis) belong to pre-warping and are out of
//! scope here.

use thiserror::Error;

use crate::geometry::{Point3, Rect3};

#[derive(Debug, Error, PartialEq)]
pub enum OpticsError {
    #[error("object distance {d_o} mm >= focal length {f} mm: real-image regime unsupported")]
    NotAMagnifier { d_o: f64, f: f64 },
    #[error("object distance is within 1e-6 mm of the focal length")]
    DegenerateLens,
    #[error("target optical distance {target} mm must exceed object distance {d_o} mm")]
    InvalidTarget { d_o: f64, target: f64 },
    #[error("display must sit in front of the eye reference (distance {0} mm)")]
    DisplayBehindEye(f64),
}

/// A physical screen, per eye or shared.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalDisplay {
    pub window: Rect3,
    pub name: String,
}

/// Positive lens in the magnifier regime; the principal plane coincides with
/// the lens plane and the optical axis is the window normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinLens {
    pub focal_mm: f64,
}

/// The virtual image of a display: same orientation, extents scaled by the
/// magnification, recentered on the optical axis at the image distance.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalDisplay {
    pub window: Rect3,
    pub magnification: f64,
    pub optical_distance_mm: f64,
}

/// Image a display through an optional magnifier as seen from `eye_reference`.
///
/// With a lens: |d_i| = f*d_o/(f - d_o) and m = |d_i|/d_o, where d_o is the
/// perpendicular eye-to-display distance (the lens plane passes through the
/// eye reference). Without a lens this is the identity with m = 1.
pub fn optical_image(
    display: &PhysicalDisplay,
    lens: Option<&ThinLens>,
    eye_reference: Point3,
) -> Result<OpticalDisplay, OpticsError> {
    let w = &display.window;
    // Perpendicular distance from the eye reference to the display plane;
    // the window normal faces the observer.
    let d_o = (eye_reference - w.center).dot(&w.normal.as_vec());
    if d_o <= 0.0 {
        return Err(OpticsError::DisplayBehindEye(d_o));
    }
    let Some(lens) = lens else {
        return Ok(OpticalDisplay {
            window: *w,
            magnification: 1.0,
            optical_distance_mm: d_o,
        });
    };
    let f = lens.focal_mm;
    if (f - d_o).abs() < 1e-6 {
        return Err(OpticsError::DegenerateLens);
    }
    if d_o >= f {
        return Err(OpticsError::NotAMagnifier { d_o, f });
    }
    let d_i = f * d_o / (f - d_o);
    let m = d_i / d_o;
    // Foot of the optical axis on the lens plane, then push the center out
    // to the image distance along the axis.
    let foot = w.center + w.normal * d_o;
    let center = foot + (w.center - foot) * m;
    let window = Rect3::new(center, w.right, w.up, w.normal, w.half_width * m, w.half_height * m)
        .expect("scaling a valid window keeps it valid");
    Ok(OpticalDisplay { window, magnification: m, optical_distance_mm: d_i })
}

/// Focal length that images an object at `d_o` out to `d_i_target`:
/// f = d_o*d_i/(d_i - d_o). Inverse solve for scenario authoring.
pub fn focal_for_optical_distance(d_o: f64, d_i_target: f64) -> Result<f64, OpticsError> {
    if d_i_target <= d_o || d_o <= 0.0 {
        return Err(OpticsError::InvalidTarget { d_o, target: d_i_target });
    }
    Ok(d_o * d_i_target / (d_i_target - d_o))
}
