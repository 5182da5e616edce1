//! Small 3-D geometry kit: vectors, axis-aligned boxes, cone and ray tests.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction; the zero vector maps to +X.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec3::X
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    /// Rotation about +Z by `yaw` radians.
    pub fn rotate_z(self, yaw: f64) -> Vec3 {
        let (s, c) = yaw.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Angle between two non-zero vectors, in `[0, π]`.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return std::f64::consts::PI;
    }
    // atan2 keeps precision near 0 and π where acos does not.
    a.cross(b).norm().atan2(a.dot(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite()
            && self.max.is_finite()
            && self.min.x <= self.max.x
            && self.min.y <= self.max.y
            && self.min.z <= self.max.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Whether the segment `from → to` passes through the box (slab test).
    /// A segment that starts inside the box is not considered blocked.
    pub fn blocks_segment(&self, from: Vec3, to: Vec3) -> bool {
        if self.contains(from) {
            return false;
        }
        let d = to - from;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (o, dir, lo, hi) in [
            (from.x, d.x, self.min.x, self.max.x),
            (from.y, d.y, self.min.y, self.max.y),
            (from.z, d.z, self.min.z, self.max.z),
        ] {
            if dir.abs() < 1e-15 {
                if o < lo || o > hi {
                    return false;
                }
            } else {
                let inv = 1.0 / dir;
                let (mut a, mut b) = ((lo - o) * inv, (hi - o) * inv);
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// A viewing cone anchored at an eye position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cone {
    pub apex: Vec3,
    pub axis: Vec3,
    pub half_angle: f64,
    pub range: f64,
}

impl Cone {
    /// Angular offset of `p` from the axis, or `None` when outside the cone.
    pub fn offset_of(&self, p: Vec3) -> Option<f64> {
        let d = p - self.apex;
        let dist = d.norm();
        if dist == 0.0 || dist > self.range {
            return None;
        }
        let a = angle_between(self.axis, d);
        (a <= self.half_angle).then_some(a)
    }
}

pub fn line_of_sight(from: Vec3, to: Vec3, occluders: &[Aabb]) -> bool {
    !occluders.iter().any(|b| b.blocks_segment(from, to))
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn angles() {
        assert_eq!(angle_between(Vec3::X, Vec3::X), 0.0);
        assert!((angle_between(Vec3::X, Vec3::Y) - FRAC_PI_2).abs() < 1e-15);
        assert!((angle_between(Vec3::X, -Vec3::X) - PI).abs() < 1e-15);
    }

    #[test]
    fn slab_test() {
        let b = Aabb::new(Vec3::new(1.0, -1.0, -1.0), Vec3::new(2.0, 1.0, 1.0));
        assert!(b.blocks_segment(Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0)));
        assert!(!b.blocks_segment(Vec3::ZERO, Vec3::new(0.5, 0.0, 0.0)));
        assert!(!b.blocks_segment(Vec3::ZERO, Vec3::new(3.0, 5.0, 0.0)));
        // endpoint inside the box counts as hidden
        assert!(b.blocks_segment(Vec3::ZERO, Vec3::new(1.5, 0.0, 0.0)));
    }

    #[test]
    fn cone_membership() {
        let c = Cone {
            apex: Vec3::ZERO,
            axis: Vec3::X,
            half_angle: 15f64.to_radians(),
            range: 4.0,
        };
        assert_eq!(c.offset_of(Vec3::new(2.0, 0.0, 0.0)), Some(0.0));
        assert!(c.offset_of(Vec3::new(5.0, 0.0, 0.0)).is_none());
        assert!(c.offset_of(Vec3::new(1.0, 1.0, 0.0)).is_none());
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig(1.234567891234, 9), 1.23456789);
        assert_eq!(round_sig(-0.000123456789123, 9), -0.000123456789);
    }
}
