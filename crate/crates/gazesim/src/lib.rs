//! Deterministic geometry engine for gaze-contingent distortion analysis in
//! stereoscopic near-eye and projection displays.
//!
//! The library models a head-tracked binocular observer whose eyes rotate
//! about their centers of rotation while light passes through nodal points a
//! few millimeters further forward. Content is placed on a display window
//! (physical, or the virtual image of a screen behind a magnifier) under one
//! of three rendering policies, and fourteen metrics (`m1`..`m14`) quantify
//! how the displayed geometry differs from ground truth: direction and
//! vergence errors of fixated content, peripheral and binocular distortions,
//! pre-shift residuals, nodal-parallax deficits, head-movement residuals, and
//! tracked-motion errors. A gaze-contingent policy that re-anchors the camera
//! to the actual nodal point against the fixed window zeroes all of them.
//!
//! All lengths are millimeters, all reported angles degrees. Everything is
//! pure and deterministic: the same scenario always produces byte-identical
//! canonical reports.

pub mod geometry;
pub mod ocular;
pub mod optics;
pub mod rendering;
