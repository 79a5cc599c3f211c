use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rotations further than this from orthonormal are rejected.
pub const ORTHONORMAL_REJECT_TOL: f64 = 1e-3;
/// Rotations closer than this are kept verbatim; anything between the two
/// tolerances is projected onto the nearest rotation.
pub const ORTHONORMAL_KEEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Extrinsics: maps world points into the camera frame.
    CameraFromWorld,
    /// Camera pose in the world: columns of the rotation are the camera axes,
    /// the translation is the camera centre.
    WorldFromCamera,
}

impl Frame {
    pub fn flipped(self) -> Frame {
        match self {
            Frame::CameraFromWorld => Frame::WorldFromCamera,
            Frame::WorldFromCamera => Frame::CameraFromWorld,
        }
    }
}

/// Rigid transform with a proper rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    frame: Frame,
}

/// Largest absolute entry of `RᵀR - I`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

/// Nearest rotation in the Frobenius sense (polar factor via SVD).
fn project_to_rotation(r: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut rot = u * v_t;
    if rot.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        rot = u * v_t;
    }
    Some(rot)
}

impl Pose {
    /// Validates `rotation`, re-orthonormalising it when it is within
    /// [`ORTHONORMAL_REJECT_TOL`] of a rotation.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>, frame: Frame) -> Result<Pose> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid(None, "pose contains non-finite values"));
        }
        let err = orthonormality_error(&rotation);
        if err > ORTHONORMAL_REJECT_TOL {
            return Err(Error::invalid(None, format!("rotation is not orthonormal (max |RᵀR - I| = {err:.3e})")));
        }
        if rotation.determinant() <= 0.0 {
            return Err(Error::invalid(None, "rotation has negative determinant (reflection)"));
        }
        let rotation = if err > ORTHONORMAL_KEEP_TOL {
            project_to_rotation(&rotation).ok_or_else(|| Error::invalid(None, "rotation projection failed"))?
        } else {
            rotation
        };
        Ok(Pose { rotation, translation, frame })
    }

    pub fn identity(frame: Frame) -> Pose {
        Pose { rotation: Matrix3::identity(), translation: Vector3::zeros(), frame }
    }

    /// Builds a pose from row-major rotation entries and a translation.
    pub fn from_rows(r: [f64; 9], t: [f64; 3], frame: Frame) -> Result<Pose> {
        Pose::new(Matrix3::from_row_slice(&r), Vector3::from(t), frame)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Row-major rotation entries.
    pub fn rotation_rows(&self) -> [f64; 9] {
        let r = &self.rotation;
        [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]]
    }

    /// `[Rᵀ | -Rᵀ t]` with the frame tag flipped.
    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation), frame: self.frame.flipped() }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Composition `self ∘ other` (apply `other` first). The frame tag of
    /// `self` is kept.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
            frame: self.frame,
        }
    }
}

/// Ego camera poses sampled at integer seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrack {
    timestamps: Vec<u32>,
    poses: Vec<Pose>,
}

impl PoseTrack {
    pub fn new(timestamps: Vec<u32>, poses: Vec<Pose>) -> Result<PoseTrack> {
        if timestamps.len() != poses.len() {
            return Err(Error::invalid(None, format!("{} timestamps for {} poses", timestamps.len(), poses.len())));
        }
        if timestamps.is_empty() {
            return Err(Error::invalid(None, "pose track is empty"));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(None, format!("timestamps not strictly increasing ({} then {})", w[0], w[1])));
        }
        Ok(PoseTrack { timestamps, poses })
    }

    pub fn timestamps(&self) -> &[u32] {
        &self.timestamps
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Pose recorded exactly at second `t`. No interpolation.
    pub fn at(&self, t: u32) -> Option<&Pose> {
        self.timestamps.binary_search(&t).ok().map(|i| &self.poses[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Pose)> {
        self.timestamps.iter().copied().zip(self.poses.iter())
    }
}
