//! Euler angles in the active z-y-z convention.
//!
//! The rotation matrix is `R = Rz(alpha) * Ry(beta) * Rz(gamma)`, with
//!
//! ```text
//! Rz(t) = | cos t  -sin t  0 |     Ry(t) = |  cos t  0  sin t |
//!         | sin t   cos t  0 |             |    0    1    0   |
//!         |   0       0    1 |             | -sin t  0  cos t |
//! ```
//!
//! Angles are stored in degrees. The canonical ranges are
//! `alpha, gamma ∈ [-180, 180)` and `beta ∈ [0, 180]`.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

/// Below this value of `sin(beta)` the z-y-z parameterization is treated as
/// gimbal-locked and `gamma` is folded into `alpha`.
const GIMBAL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for EulerAngles {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Wraps an angle in degrees into `[-180, 180)`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let wrapped = (angle + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

pub fn rot_z(radians: f64) -> Matrix3<f64> {
    let (s, c) = radians.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_y(radians: f64) -> Matrix3<f64> {
    let (s, c) = radians.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Derivative of [`rot_z`] with respect to its angle (radians).
pub(crate) fn rot_z_deriv(radians: f64) -> Matrix3<f64> {
    let (s, c) = radians.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

pub(crate) fn rot_y_deriv(radians: f64) -> Matrix3<f64> {
    let (s, c) = radians.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

impl EulerAngles {
    pub const IDENTITY: EulerAngles = EulerAngles {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        rot_z(self.alpha.to_radians()) * rot_y(self.beta.to_radians()) * rot_z(self.gamma.to_radians())
    }

    /// Extracts canonical z-y-z angles from a proper rotation matrix.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let cos_beta = m[(2, 2)].clamp(-1.0, 1.0);
        let sin_beta = (m[(0, 2)].powi(2) + m[(1, 2)].powi(2)).sqrt();
        let beta = sin_beta.atan2(cos_beta);
        let (alpha, gamma) = if sin_beta > GIMBAL_EPS {
            (m[(1, 2)].atan2(m[(0, 2)]), m[(2, 1)].atan2(-m[(2, 0)]))
        } else if cos_beta > 0.0 {
            // Rz(alpha + gamma)
            (m[(1, 0)].atan2(m[(0, 0)]), 0.0)
        } else {
            // Rz(alpha) * Ry(pi) * Rz(gamma) = Rz(alpha - gamma) * Ry(pi)
            ((-m[(0, 1)]).atan2(-m[(0, 0)]), 0.0)
        };
        Self {
            alpha: wrap_degrees(alpha.to_degrees()),
            beta: beta.to_degrees(),
            gamma: wrap_degrees(gamma.to_degrees()),
        }
    }

    /// Equivalent angles in the canonical ranges.
    pub fn canonical(&self) -> Self {
        Self::from_matrix(&self.matrix())
    }

    pub fn inverse(&self) -> Self {
        Self::from_matrix(&self.matrix().transpose())
    }

    /// Rotation of `degrees` about `axis` expressed as Euler angles.
    pub fn from_axis_angle(axis: &Vector3<f64>, degrees: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), degrees.to_radians());
        Self::from_matrix(rot.matrix())
    }

    /// Angle in degrees of the rotation taking `self` to `other`.
    pub fn angular_distance(&self, other: &EulerAngles) -> f64 {
        rotation_angle(&(self.matrix().transpose() * other.matrix()))
    }
}

/// Rotation angle in degrees of a proper rotation matrix.
pub fn rotation_angle(m: &Matrix3<f64>) -> f64 {
    ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}
