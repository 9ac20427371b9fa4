//! Small fixed-size linear algebra: points/vectors, 3×3 rotations, rigid
//! transforms and axis-aligned boxes.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// A point or vector in millimetres. Serialized as `[x, y, z]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound = "T: Scalar")]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Scalar> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    #[inline]
    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    #[inline]
    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    /// Builds a vector from `f64` components.
    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn try_normalize(self, min_norm: T) -> Option<Self> {
        let n = self.norm();
        if n > min_norm && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    /// Unit vector; the zero vector stays zero.
    pub fn normalize(self) -> Self {
        self.try_normalize(T::zero()).unwrap_or_else(Self::zero)
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn lerp(self, o: Self, f: T) -> Self {
        self + (o - self) * f
    }

    /// Component normal to `axis` (assumed unit).
    pub fn reject_from(self, axis: Self) -> Self {
        self - axis * self.dot(axis)
    }

    pub fn min_by_component(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_by_component(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs_component(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Rotation of `self` about the unit `axis` by `angle` radians (Rodrigues).
    pub fn rotate_about(self, axis: Self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (T::one() - c))
    }

    pub fn cast<U: Scalar>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

/// Spherical interpolation between two unit vectors; falls back to a
/// normalized lerp when they are (anti)parallel.
pub fn slerp<T: Scalar>(a: Vec3<T>, b: Vec3<T>, f: T) -> Vec3<T> {
    let cos = a.dot(b).max(-T::one()).min(T::one());
    let angle = cos.acos();
    let sin = angle.sin();
    if sin.abs() < T::lit(1e-9) {
        return a.lerp(b, f).try_normalize(T::zero()).unwrap_or(a);
    }
    let wa = ((T::one() - f) * angle).sin() / sin;
    let wb = (f * angle).sin() / sin;
    (a * wa + b * wb).normalize()
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mat3<T> {
    pub rows: [Vec3<T>; 3],
}

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        Self::from_rows(Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z())
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Self { rows: [r0, r1, r2] }
    }

    pub fn from_columns(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self::from_rows(
            Vec3::new(c0.x, c1.x, c2.x),
            Vec3::new(c0.y, c1.y, c2.y),
            Vec3::new(c0.z, c1.z, c2.z),
        )
    }

    pub fn column(&self, i: usize) -> Vec3<T> {
        Vec3::new(self.rows[0][i], self.rows[1][i], self.rows[2][i])
    }

    /// Rotation by `angle` radians about the unit `axis`.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        Self::from_columns(
            Vec3::unit_x().rotate_about(axis, angle),
            Vec3::unit_y().rotate_about(axis, angle),
            Vec3::unit_z().rotate_about(axis, angle),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_columns(self.rows[0], self.rows[1], self.rows[2])
    }

    pub fn determinant(&self) -> T {
        let [a, b, c] = self.rows;
        a.dot(b.cross(c))
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        Self::from_columns(
            self.mul_vec(o.column(0)),
            self.mul_vec(o.column(1)),
            self.mul_vec(o.column(2)),
        )
    }

    /// Largest entry-wise deviation of `MᵀM` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let p = self.transpose().mul_mat(self);
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((p.rows[i][j] - target).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("rotation is not orthonormal with determinant +1 (deviation {deviation:e})")]
    NotARotation { deviation: f64 },
}

/// Proper rigid motion `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RigidTransform<T> {
    rotation: Mat3<T>,
    translation: Vec3<T>,
}

impl<T: Scalar> RigidTransform<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zero(),
        }
    }

    /// Validates that `rotation` is orthonormal with determinant +1 within 1e-9.
    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Result<Self, TransformError> {
        let tol = T::lit(1e-9);
        let ortho = rotation.orthonormality_error();
        let det = (rotation.determinant() - T::one()).abs();
        if ortho > tol || det > tol {
            return Err(TransformError::NotARotation {
                deviation: ortho.max(det).as_f64(),
            });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn translation(translation: Vec3<T>) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Rotation about the unit `axis` through the origin.
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        Self {
            rotation: Mat3::from_axis_angle(axis, angle),
            translation: Vec3::zero(),
        }
    }

    /// The frame whose columns are the orthonormal `x`, `y`, `z` axes, placed at `origin`.
    pub(crate) fn from_frame(x: Vec3<T>, y: Vec3<T>, z: Vec3<T>, origin: Vec3<T>) -> Self {
        Self {
            rotation: Mat3::from_columns(x, y, z),
            translation: origin,
        }
    }

    pub fn rotation_matrix(&self) -> &Mat3<T> {
        &self.rotation
    }

    pub fn translation_vector(&self) -> Vec3<T> {
        self.translation
    }

    pub fn apply_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    pub fn apply_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(v)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn then_after(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.apply_point(other.translation),
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -rt.mul_vec(self.translation),
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn empty() -> Self {
        let inf = T::infinity();
        Self {
            min: Vec3::new(inf, inf, inf),
            max: Vec3::new(-inf, -inf, -inf),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Vec3<T>>>(points: I) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min_by_component(p);
        self.max = self.max.max_by_component(p);
    }

    pub fn union(&self, o: &Self) -> Self {
        Self {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    pub fn padded(&self, pad: T) -> Self {
        let p = Vec3::new(pad, pad, pad);
        Self {
            min: self.min - p,
            max: self.max + p,
        }
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn diagonal(&self) -> T {
        self.extent().norm()
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: Vec3<T>) -> T {
        let d = |lo: T, hi: T, v: T| {
            if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                T::zero()
            }
        };
        let dx = d(self.min.x, self.max.x, p.x);
        let dy = d(self.min.y, self.max.y, p.y);
        let dz = d(self.min.z, self.max.z, p.z);
        dx * dx + dy * dy + dz * dz
    }

    /// Slab test. Returns the entry parameter (clamped at zero) if the ray
    /// `origin + t·dir` meets the box for some `t ≤ t_max`.
    pub fn ray_entry(&self, origin: Vec3<T>, inv_dir: Vec3<T>, t_max: T) -> Option<T> {
        let mut t0 = T::zero();
        let mut t1 = t_max;
        for axis in 0..3 {
            let inv = inv_dir[axis];
            let o = origin[axis];
            let (lo, hi) = (self.min[axis], self.max[axis]);
            if inv.is_infinite() {
                // Axis-parallel ray: inside the slab or never.
                if o < lo || o > hi {
                    return None;
                }
                continue;
            }
            let mut near = (lo - o) * inv;
            let mut far = (hi - o) * inv;
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}
