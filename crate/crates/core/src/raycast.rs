//! Möller–Trumbore ray/triangle intersection and mesh first-hit queries.
//!
//! The kernel never forms the triangle's plane equation: it solves
//! `O + tD = (1 − u − v)·V0 + u·V1 + v·V2` directly for `(t, u, v)` by
//! Cramer's rule on the edge vectors. Backface culling is off, so a ray hits
//! a triangle from either side.

use serde::{Deserialize, Serialize};

use crate::index::SpatialIndex;
use crate::math::Vec3;
use crate::scalar::Scalar;

/// Half-line `origin + t·direction`, `t ≥ 0`, with unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray<T> {
    origin: Vec3<T>,
    direction: Vec3<T>,
}

impl<T: Scalar> Ray<T> {
    /// Normalizes `direction`; `None` if it is zero or not finite.
    pub fn new(origin: Vec3<T>, direction: Vec3<T>) -> Option<Self> {
        let direction = direction.try_normalize(T::zero())?;
        origin.is_finite().then_some(Self { origin, direction })
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn direction(&self) -> Vec3<T> {
        self.direction
    }

    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.direction * t
    }

    pub(crate) fn inv_direction(&self) -> Vec3<T> {
        let d = self.direction;
        Vec3::new(T::one() / d.x, T::one() / d.y, T::one() / d.z)
    }
}

/// Intersection parameters against a single triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleHit<T> {
    /// Distance along the ray (mm).
    pub t: T,
    pub u: T,
    pub v: T,
}

/// Intersection with a mesh face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit<T> {
    pub face: usize,
    pub t: T,
    pub u: T,
    pub v: T,
}

impl<T: Scalar> Hit<T> {
    pub fn point(&self, ray: &Ray<T>) -> Vec3<T> {
        ray.at(self.t)
    }
}

/// Möller–Trumbore. Returns the hit iff `t > εt` and the barycentrics lie in
/// the triangle up to `εb`; near-parallel rays (`|det| < εd`) miss.
#[inline]
pub fn intersect_ray_triangle<T: Scalar>(
    ray: &Ray<T>,
    v0: Vec3<T>,
    v1: Vec3<T>,
    v2: Vec3<T>,
) -> Option<TriangleHit<T>> {
    let eps_b = T::bary_eps();
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let pvec = ray.direction.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < T::det_eps() {
        return None;
    }
    let inv_det = T::one() / det;
    let tvec = ray.origin - v0;
    let u = tvec.dot(pvec) * inv_det;
    if u < -eps_b || u > T::one() + eps_b {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = ray.direction.dot(qvec) * inv_det;
    if v < -eps_b || u + v > T::one() + eps_b {
        return None;
    }
    let t = e2.dot(qvec) * inv_det;
    (t > T::hit_t_min()).then_some(TriangleHit { t, u, v })
}

/// Nearest intersection of `ray` with the indexed mesh. Ties within 1e-9 in
/// `t` go to the smallest face id.
pub fn first_hit<T: Scalar>(index: &SpatialIndex<T>, ray: &Ray<T>) -> Option<Hit<T>> {
    index.first_hit(ray, T::infinity())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn unit_tri() -> [Vec3<f64>; 3] {
        [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)]
    }

    #[test]
    fn axis_aligned_hit() {
        let ray = Ray::new(v(0.25, 0.25, 1.0), v(0.0, 0.0, -1.0)).unwrap();
        let [a, b, c] = unit_tri();
        let h = intersect_ray_triangle(&ray, a, b, c).unwrap();
        assert_eq!((h.t, h.u, h.v), (1.0, 0.25, 0.25));
    }

    #[test]
    fn outside_barycentric_range_misses() {
        let ray = Ray::new(v(2.0, 2.0, 1.0), v(0.0, 0.0, -1.0)).unwrap();
        let [a, b, c] = unit_tri();
        assert!(intersect_ray_triangle(&ray, a, b, c).is_none());
    }

    #[test]
    fn backfaces_are_hit() {
        let ray = Ray::new(v(0.25, 0.25, -1.0), v(0.0, 0.0, 1.0)).unwrap();
        let [a, b, c] = unit_tri();
        assert_eq!(intersect_ray_triangle(&ray, a, b, c).unwrap().t, 1.0);
    }

    #[test]
    fn parallel_and_behind_miss() {
        let [a, b, c] = unit_tri();
        let parallel = Ray::new(v(0.25, 0.25, 1.0), v(1.0, 0.0, 0.0)).unwrap();
        assert!(intersect_ray_triangle(&parallel, a, b, c).is_none());
        let away = Ray::new(v(0.25, 0.25, 1.0), v(0.0, 0.0, 1.0)).unwrap();
        assert!(intersect_ray_triangle(&away, a, b, c).is_none());
        // Origin on the triangle: t = 0 is below the self-intersection floor.
        let on = Ray::new(v(0.25, 0.25, 0.0), v(0.0, 0.0, -1.0)).unwrap();
        assert!(intersect_ray_triangle(&on, a, b, c).is_none());
    }

    #[test]
    fn edge_hits_count() {
        let [a, b, c] = unit_tri();
        let ray = Ray::new(v(0.5, 0.5, 1.0), v(0.0, 0.0, -1.0)).unwrap();
        let h = intersect_ray_triangle(&ray, a, b, c).unwrap();
        assert!((h.u + h.v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_direction_is_rejected() {
        assert!(Ray::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn f32_kernel() {
        let ray = Ray::new(Vec3::<f32>::from_f64(0.25, 0.25, 1.0), Vec3::from_f64(0.0, 0.0, -1.0)).unwrap();
        let h = intersect_ray_triangle(&ray, Vec3::zero(), Vec3::unit_x(), Vec3::unit_y()).unwrap();
        assert_eq!((h.t, h.u, h.v), (1.0f32, 0.25, 0.25));
    }
}
