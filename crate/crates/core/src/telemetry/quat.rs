use std::f64::consts::PI;
use std::ops::Mul;

use super::TelemetryError;

/// Euler decomposition failures beyond this norm error are rejected.
const EULER_NORM_TOLERANCE: f64 = 1e-3;
/// `|sin(pitch)|` above this is treated as gimbal lock.
const GIMBAL_THRESHOLD: f64 = 1.0 - 1e-12;

/// Quaternion in `(w, x, y, z)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(q: [f64; 4]) -> Self {
        Self::new(q[0], q[1], q[2], q[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation of `angle` radians about the unit `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Self::new(c, axis[0] * s, axis[1] * s, axis[2] * s)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, other: Quat) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.w * k, self.x * k, self.y * k, self.z * k)
    }

    pub fn normalized(self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn neg(self) -> Self {
        self.scale(-1.0)
    }

    /// Spherical linear interpolation along the shortest arc.
    pub fn slerp(self, other: Quat, t: f64) -> Quat {
        let mut end = other;
        let mut cos = self.dot(other);
        if cos < 0.0 {
            end = end.neg();
            cos = -cos;
        }
        if cos > 0.9995 {
            let lerp = Quat::new(
                self.w + (end.w - self.w) * t,
                self.x + (end.x - self.x) * t,
                self.y + (end.y - self.y) * t,
                self.z + (end.z - self.z) * t,
            );
            return lerp.normalized();
        }
        let theta = cos.min(1.0).acos();
        let sin = theta.sin();
        let a = ((1.0 - t) * theta).sin() / sin;
        let b = (t * theta).sin() / sin;
        Quat::new(
            a * self.w + b * end.w,
            a * self.x + b * end.x,
            a * self.y + b * end.y,
            a * self.z + b * end.z,
        )
        .normalized()
    }
}

impl Mul for Quat {
    type Output = Quat;

    fn mul(self, r: Quat) -> Quat {
        Quat::new(
            self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        )
    }
}

/// Intrinsic Y-X'-Z'' angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Euler {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

fn wrap_angle(a: f64) -> f64 {
    // atan2 may return -pi; the canonical range is (-pi, pi]
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Decompose `q` into yaw (about y), then pitch (about the new x), then roll
/// (about the new z).
///
/// At gimbal lock (`|pitch| = pi/2`) roll is pinned to zero and yaw carries the
/// remaining rotation.
pub fn euler_from_quat(q: Quat) -> Result<Euler, TelemetryError> {
    let norm = q.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > EULER_NORM_TOLERANCE {
        return Err(TelemetryError::NotUnit(norm));
    }
    let Quat { w, x, y, z } = q.scale(1.0 / norm);

    let r12 = 2.0 * (y * z - w * x);
    let sin_pitch = (-r12).clamp(-1.0, 1.0);
    if sin_pitch.abs() >= GIMBAL_THRESHOLD {
        let r00 = 1.0 - 2.0 * (y * y + z * z);
        let r20 = 2.0 * (x * z - w * y);
        return Ok(Euler {
            yaw: wrap_angle((-r20).atan2(r00)),
            pitch: PI / 2.0 * sin_pitch.signum(),
            roll: 0.0,
        });
    }
    let r02 = 2.0 * (x * z + w * y);
    let r22 = 1.0 - 2.0 * (x * x + y * y);
    let r10 = 2.0 * (x * y + w * z);
    let r11 = 1.0 - 2.0 * (x * x + z * z);
    Ok(Euler {
        yaw: wrap_angle(r02.atan2(r22)),
        pitch: sin_pitch.asin(),
        roll: wrap_angle(r10.atan2(r11)),
    })
}

/// Compose yaw, pitch and roll back into a quaternion (inverse of
/// [`euler_from_quat`] up to sign).
pub fn quat_from_euler(yaw: f64, pitch: f64, roll: f64) -> Quat {
    Quat::from_axis_angle([0.0, 1.0, 0.0], yaw)
        * Quat::from_axis_angle([1.0, 0.0, 0.0], pitch)
        * Quat::from_axis_angle([0.0, 0.0, 1.0], roll)
}
