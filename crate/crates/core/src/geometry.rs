//! Global/local coordinate frames of the reflecting surface.
//!
//! The surface lies in the local x'-y' plane with its reference element at the
//! local origin. Its orientation is three Euler angles composed as
//! `Q = Rz(gz) * Ry(gy) * Rx(gx)`, and a global point maps into the local frame
//! through `Q^T (p - p_R)`. The reflecting face points along local `-z'`.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outward normal of the reflecting face in the local frame.
pub const LOCAL_NORMAL: [f64; 3] = [0.0, 0.0, -1.0];

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed shortest angular difference `to - from`, in `(-pi, pi]`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Horizontal movable region of the UAV at a fixed altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Fixed altitude `H` of the reference element.
    pub altitude: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, altitude: f64) -> Result<Self> {
        let r = Region {
            x_min,
            x_max,
            y_min,
            y_max,
            altitude,
        };
        r.validate()?;
        Ok(r)
    }

    /// A region collapsed onto a single location.
    pub fn point(x: f64, y: f64, altitude: f64) -> Result<Self> {
        Self::new(x, x, y, y, altitude)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.altitude]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min > self.x_max || self.y_min > self.y_max || self.altitude <= 0.0 {
            return Err(Error::InvalidRegion(*self));
        }
        Ok(())
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
            self.altitude,
        )
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        p.x >= self.x_min
            && p.x <= self.x_max
            && p.y >= self.y_min
            && p.y <= self.y_max
            && p.z == self.altitude
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.x_min <= other.x_min
            && self.x_max >= other.x_max
            && self.y_min <= other.y_min
            && self.y_max >= other.y_max
            && self.altitude == other.altitude
    }

    /// Clamps `x`, `y` into the region and pins `z` to the altitude.
    pub fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
            self.altitude,
        )
    }
}

/// Location of the reference element plus Euler orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6D {
    pub location: Vector3<f64>,
    gamma: Vector3<f64>,
}

impl Pose6D {
    /// Builds a pose; Euler angles are wrapped into `[0, 2pi)`.
    pub fn new(location: Vector3<f64>, gamma: Vector3<f64>) -> Self {
        Pose6D {
            location,
            gamma: gamma.map(wrap_angle),
        }
    }

    pub fn from_array(g: [f64; 6]) -> Self {
        Self::new(
            Vector3::new(g[0], g[1], g[2]),
            Vector3::new(g[3], g[4], g[5]),
        )
    }

    pub fn to_array(&self) -> [f64; 6] {
        let p = &self.location;
        let g = &self.gamma;
        [p.x, p.y, p.z, g.x, g.y, g.z]
    }

    pub fn gamma(&self) -> Vector3<f64> {
        self.gamma
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_matrix(&self.gamma)
    }
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Z-Y-X Euler rotation `Rz(gz) * Ry(gy) * Rx(gx)`.
pub fn rotation_matrix(gamma: &Vector3<f64>) -> Matrix3<f64> {
    rot_z(gamma.z) * rot_y(gamma.y) * rot_x(gamma.x)
}

pub fn to_local(p: &Vector3<f64>, pose: &Pose6D) -> Vector3<f64> {
    pose.rotation().transpose() * (p - pose.location)
}

pub fn to_global(lp: &Vector3<f64>, pose: &Pose6D) -> Vector3<f64> {
    pose.rotation() * lp + pose.location
}

/// Elevation/azimuth of the link `from -> to`, measured in the surface frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpaAngles {
    /// Angle from local `+z'`, in `[0, pi]`.
    pub elevation: f64,
    /// Four-quadrant azimuth in the local x'-y' plane, in `(-pi, pi]`.
    pub azimuth: f64,
}

/// Local-frame angles of the direction from `p_from` to `p_to`.
///
/// One endpoint is expected to be the surface itself; only the difference
/// vector is rotated, so the result does not depend on `pose.location`.
pub fn upa_angles(pose: &Pose6D, p_from: &Vector3<f64>, p_to: &Vector3<f64>) -> Result<UpaAngles> {
    let diff = p_to - p_from;
    let d = diff.norm();
    if d == 0.0 || !d.is_finite() {
        return Err(Error::CoincidentNodes);
    }
    let local = pose.rotation().transpose() * diff;
    Ok(UpaAngles {
        elevation: (local.z / d).clamp(-1.0, 1.0).acos(),
        azimuth: local.y.atan2(local.x),
    })
}

/// Global direction of the reflecting face's outward normal, `Q * [0, 0, -1]`.
pub fn normal_vector(pose: &Pose6D) -> Vector3<f64> {
    pose.rotation() * Vector3::from(LOCAL_NORMAL)
}

/// Angle between the outward normal and the surface-to-`node` direction.
pub fn incidence_angle(pose: &Pose6D, node: &Vector3<f64>) -> Result<f64> {
    let diff = node - pose.location;
    let d = diff.norm();
    if d == 0.0 || !d.is_finite() {
        return Err(Error::CoincidentNodes);
    }
    Ok((normal_vector(pose).dot(&diff) / d).clamp(-1.0, 1.0).acos())
}

/// True iff every node lies in the closed reflection half-space.
pub fn halfspace_feasible(pose: &Pose6D, nodes: &[Vector3<f64>]) -> bool {
    let n = normal_vector(pose);
    nodes.iter().all(|p| n.dot(&(p - pose.location)) >= 0.0)
}

/// Per-node violations `max(0, -n . u_X)` with `u_X` the unit surface-to-node
/// direction. All zero iff [`halfspace_feasible`] holds (for non-coincident nodes).
pub fn halfspace_violations(pose: &Pose6D, nodes: &[Vector3<f64>]) -> Vec<f64> {
    let n = normal_vector(pose);
    nodes
        .iter()
        .map(|p| {
            let diff = p - pose.location;
            let d = diff.norm();
            if d == 0.0 {
                0.0
            } else {
                (-n.dot(&diff) / d).max(0.0)
            }
        })
        .collect()
}
