//! Shared geometric primitives: vectors, axis-aligned boxes, poses.

use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Clamp a vector to a maximum Euclidean norm.
pub fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max && n > 0.0 {
        v * (max / n)
    } else {
        v
    }
}

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    /// Box spanning `[0, extents]` on each axis.
    pub fn from_extents(extents: [f64; 3]) -> Self {
        Self {
            min: [0.0; 3],
            max: extents,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] < other.max[i] && other.min[i] < self.max[i])
    }

    pub fn size(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn center(&self) -> Vec3 {
        vec3(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }

    pub fn clamp_point(&self, p: Vec3) -> Vec3 {
        vec3(
            p.x.clamp(self.min[0], self.max[0]),
            p.y.clamp(self.min[1], self.max[1]),
            p.z.clamp(self.min[2], self.max[2]),
        )
    }

    /// Squared distance from a point to this box (0 if inside).
    pub fn dist_sq(&self, p: Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let d = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }

    /// Parametric interval `[t0, t1]` where the ray `origin + t*dir` is inside
    /// the box, or `None` if the ray misses it entirely.
    pub fn ray_interval(&self, origin: Vec3, dir: Vec3) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i].abs() < 1e-300 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
            } else {
                let inv = 1.0 / dir[i];
                let mut a = (self.min[i] - origin[i]) * inv;
                let mut b = (self.max[i] - origin[i]) * inv;
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some((t0, t1))
    }
}

/// Position plus camera-relevant orientation (yaw about +z, pitch about body y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw,
            pitch: 0.0,
        }
    }

    pub fn with_pitch(position: Vec3, yaw: f64, pitch: f64) -> Self {
        Self {
            position,
            yaw,
            pitch,
        }
    }

    /// Body-frame direction (x forward, y left, z up) to world frame.
    pub fn dir_to_world(&self, d: Vec3) -> Vec3 {
        // pitch rotates about body y (positive pitch looks up), then yaw about z
        let (sp, cp) = self.pitch.sin_cos();
        let pitched = vec3(d.x * cp - d.z * sp, d.y, d.x * sp + d.z * cp);
        let (sy, cy) = self.yaw.sin_cos();
        vec3(
            pitched.x * cy - pitched.y * sy,
            pitched.x * sy + pitched.y * cy,
            pitched.z,
        )
    }

    /// World-frame direction into the body frame (inverse of `dir_to_world`).
    pub fn dir_to_body(&self, d: Vec3) -> Vec3 {
        let (sy, cy) = self.yaw.sin_cos();
        let unyawed = vec3(d.x * cy + d.y * sy, -d.x * sy + d.y * cy, d.z);
        let (sp, cp) = self.pitch.sin_cos();
        vec3(
            unyawed.x * cp + unyawed.z * sp,
            unyawed.y,
            -unyawed.x * sp + unyawed.z * cp,
        )
    }
}
