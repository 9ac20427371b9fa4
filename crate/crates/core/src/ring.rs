//! Ring-element solids in canonical pose.
//!
//! A ring is an annular prism (outer radius, screw hole, thickness) centred
//! at the origin with its axis on `+z`, truncated by one (end ring) or two
//! (middle ring) planes `x = ±f`. The truncation distance `f` is chosen so the
//! flat is exactly `bar_width` wide; the bar's attachment rectangle on each
//! flat is tagged by its four corner vertices.

use thiserror::Error;

use crate::catalog::{RingKind, RingSpec};
use crate::math::Vec3;
use crate::mesh::{MeshError, TriangleMesh};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RingError {
    #[error("ring geometry infeasible: {0}")]
    GeometryInfeasible(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Which canonical flat a tag set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flat {
    /// Plane `x = +f`, outward normal `+x`.
    PosX,
    /// Plane `x = −f`, outward normal `−x`.
    NegX,
}

impl Flat {
    pub fn outward<T: Scalar>(self) -> Vec3<T> {
        match self {
            Flat::PosX => Vec3::unit_x(),
            Flat::NegX => -Vec3::unit_x(),
        }
    }
}

/// Attachment rectangle on one flat.
///
/// Corners are ordered bottom-left, bottom-right, top-right, top-left as seen
/// travelling along canonical `+x` with `+z` up (left is `+y`).
#[derive(Clone, Debug, PartialEq)]
pub struct FlatTags<T> {
    pub flat: Flat,
    pub vertex_ids: [u32; 4],
    pub corners: [Vec3<T>; 4],
}

#[derive(Clone, Debug)]
pub struct RingMesh<T> {
    pub mesh: TriangleMesh<T>,
    pub kind: RingKind,
    pub flats: Vec<FlatTags<T>>,
    /// Distance from the ring centre to each flat plane.
    pub flat_distance: T,
}

impl<T: Scalar> RingMesh<T> {
    pub fn tags(&self, flat: Flat) -> Option<&FlatTags<T>> {
        self.flats.iter().find(|t| t.flat == flat)
    }
}

/// Builds the canonical ring solid for `spec` with attachment rectangles of
/// `bar_width × bar_thickness`.
pub fn ring_mesh<T: Scalar>(spec: &RingSpec<T>, bar_width: T, bar_thickness: T) -> Result<RingMesh<T>, RingError> {
    spec.validate().map_err(RingError::GeometryInfeasible)?;
    let two = T::lit(2.0);
    let half_w = bar_width / two;
    let (r_out, r_hole) = (spec.outer_radius, spec.hole_radius);
    if !(bar_width > T::zero() && bar_thickness > T::zero()) {
        return Err(RingError::GeometryInfeasible("bar cross-section must be positive".into()));
    }
    if bar_thickness > spec.thickness {
        return Err(RingError::GeometryInfeasible(format!(
            "bar thickness {bar_thickness} exceeds ring thickness {}",
            spec.thickness
        )));
    }
    if !(half_w < r_out) {
        return Err(RingError::GeometryInfeasible(format!(
            "bar width {bar_width} does not fit a ring of radius {r_out}"
        )));
    }
    let f = (r_out * r_out - half_w * half_w).sqrt();
    if !(f > r_hole) {
        return Err(RingError::GeometryInfeasible(format!(
            "flat plane at {f} mm cuts the {r_hole} mm hole"
        )));
    }

    let has_neg = spec.kind == RingKind::Middle;
    let pi = T::PI();
    let tau = pi * two;
    let alpha = half_w.atan2(f);

    // Boundary angles in [0, 2π): uniform samples plus the flat corners.
    let mut angles: Vec<T> = (0..spec.segments)
        .map(|j| tau * T::lit(j as f64) / T::lit(spec.segments as f64))
        .collect();
    let mut corners = vec![alpha, tau - alpha];
    if has_neg {
        corners.extend([pi - alpha, pi + alpha]);
    }
    let near = T::lit(1e-6);
    angles.retain(|a| corners.iter().all(|c| (*a - *c).abs() > near));
    angles.extend(corners.iter().copied());
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let outer_at = |theta: T| -> (T, T) {
        let (s, c) = theta.sin_cos();
        // Exact corner coordinates, so the tag rectangle is exactly bar_width wide.
        for (k, &corner) in corners.iter().enumerate() {
            if theta == corner {
                let x = if k < 2 { f } else { -f };
                let y = if s >= T::zero() { half_w } else { -half_w };
                return (x, y);
            }
        }
        let on_pos_flat = c > T::zero() && r_out * c > f;
        let on_neg_flat = has_neg && c < T::zero() && -r_out * c > f;
        if on_pos_flat || on_neg_flat {
            let rho = f / c.abs();
            (rho * c, rho * s)
        } else {
            (r_out * c, r_out * s)
        }
    };

    let half_t = spec.thickness / two;
    let half_bt = bar_thickness / two;
    let mut levels = vec![-half_t, -half_bt, half_bt, half_t];
    levels.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-12));

    let n = angles.len();
    let boundary: Vec<(T, T)> = angles.iter().map(|&a| outer_at(a)).collect();
    let mut vertices = Vec::with_capacity(2 * n * levels.len());
    for &z in &levels {
        for &(x, y) in &boundary {
            vertices.push(Vec3::new(x, y, z));
        }
        for &a in &angles {
            let (s, c) = a.sin_cos();
            vertices.push(Vec3::new(r_hole * c, r_hole * s, z));
        }
    }
    let outer = |level: usize, j: usize| (level * 2 * n + j % n) as u32;
    let hole = |level: usize, j: usize| (level * 2 * n + n + j % n) as u32;

    let mut faces = Vec::with_capacity(4 * n * (levels.len() + 1));
    let top = levels.len() - 1;
    for j in 0..n {
        // Caps.
        faces.push([hole(top, j), outer(top, j), outer(top, j + 1)]);
        faces.push([hole(top, j), outer(top, j + 1), hole(top, j + 1)]);
        faces.push([hole(0, j), outer(0, j + 1), outer(0, j)]);
        faces.push([hole(0, j), hole(0, j + 1), outer(0, j + 1)]);
        // Outer and hole walls, one band per level gap.
        for l in 0..top {
            let (a, b, c, d) = (outer(l, j), outer(l, j + 1), outer(l + 1, j + 1), outer(l + 1, j));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
            let (a, b, c, d) = (hole(l, j), hole(l + 1, j), hole(l + 1, j + 1), hole(l, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }

    let base = levels.iter().position(|z| (*z + half_bt).abs() < T::lit(1e-12)).unwrap();
    let upper = levels.iter().position(|z| (*z - half_bt).abs() < T::lit(1e-12)).unwrap();
    let angle_index = |target: T| angles.iter().position(|a| *a == target).unwrap();
    let tag = |flat: Flat, left: usize, right: usize| {
        let ids = [outer(base, left), outer(base, right), outer(upper, right), outer(upper, left)];
        FlatTags {
            flat,
            vertex_ids: ids,
            corners: ids.map(|i| vertices[i as usize]),
        }
    };
    let mut flats = vec![tag(Flat::PosX, angle_index(alpha), angle_index(tau - alpha))];
    if has_neg {
        flats.push(tag(Flat::NegX, angle_index(pi - alpha), angle_index(pi + alpha)));
    }

    let mesh = TriangleMesh::new(vertices, faces)?;
    Ok(RingMesh {
        mesh,
        kind: spec.kind,
        flats,
        flat_distance: f,
    })
}

/// Closed-form volume of the truncated annulus.
pub fn analytic_ring_volume(outer_radius: f64, hole_radius: f64, thickness: f64, bar_width: f64, flats: usize) -> f64 {
    let r = outer_radius;
    let f = (r * r - bar_width * bar_width / 4.0).sqrt();
    let segment = r * r * (f / r).acos() - f * (r * r - f * f).sqrt();
    let area = std::f64::consts::PI * (r * r - hole_radius * hole_radius) - flats as f64 * segment;
    area * thickness
}

/// Signed volume enclosed by a closed, consistently wound mesh.
pub fn enclosed_volume<T: Scalar>(mesh: &TriangleMesh<T>) -> T {
    mesh.triangles().map(|[a, b, c]| a.dot(b.cross(c))).sum::<T>() / T::lit(6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::defaults;
    use std::collections::HashMap;

    fn spec(kind: RingKind) -> RingSpec<f64> {
        RingSpec {
            kind,
            outer_radius: defaults::OUTER_RADIUS,
            hole_radius: defaults::HOLE_RADIUS,
            thickness: defaults::THICKNESS,
            segments: 32,
        }
    }

    /// Each undirected edge must bound exactly two faces, traversed in
    /// opposite directions.
    fn assert_closed(mesh: &TriangleMesh<f64>) {
        let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
        for f in mesh.faces() {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            assert_eq!(count, 1, "edge {a}->{b} used {count} times in one direction");
            assert_eq!(directed.get(&(b, a)), Some(&1), "edge {a}-{b} is a boundary edge");
        }
    }

    fn rect_dims(c: &[Vec3<f64>; 4]) -> (f64, f64) {
        (c[0].distance(c[1]), c[1].distance(c[2]))
    }

    #[test]
    fn end_ring_has_one_tagged_flat() {
        let r = ring_mesh(&spec(RingKind::End), 2.0, 1.0).unwrap();
        assert_eq!(r.flats.len(), 1);
        assert_eq!(r.flats[0].flat, Flat::PosX);
        assert_closed(&r.mesh);
        let (w, h) = rect_dims(&r.flats[0].corners);
        assert!((w - 2.0).abs() < 1e-9 && (h - 1.0).abs() < 1e-9);
        // Tip opposite the flat sits exactly at the outer radius.
        let min_x = r.mesh.vertices().iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
        assert!((min_x + 2.5).abs() < 1e-12);
    }

    #[test]
    fn middle_ring_has_two_parallel_flats() {
        let r = ring_mesh(&spec(RingKind::Middle), 2.0, 1.0).unwrap();
        assert_eq!(r.flats.len(), 2);
        assert_closed(&r.mesh);
        let pos = r.tags(Flat::PosX).unwrap();
        let neg = r.tags(Flat::NegX).unwrap();
        for k in 0..4 {
            // Mirror images across x = 0 with identical y and z.
            assert!((pos.corners[k].x + neg.corners[k].x).abs() < 1e-12);
            assert!((pos.corners[k].y - neg.corners[k].y).abs() < 1e-12);
            assert!((pos.corners[k].z - neg.corners[k].z).abs() < 1e-12);
        }
        assert!(pos.corners[0].y > 0.0 && pos.corners[0].z < 0.0, "first corner is bottom-left");
    }

    #[test]
    fn thinner_bars_get_interior_tags() {
        let r = ring_mesh(&spec(RingKind::Middle), 1.5, 0.6).unwrap();
        assert_closed(&r.mesh);
        for t in &r.flats {
            let (w, h) = rect_dims(&t.corners);
            assert!((w - 1.5).abs() < 1e-9 && (h - 0.6).abs() < 1e-9);
            assert!(t.corners.iter().all(|c| (c.x.abs() - r.flat_distance).abs() < 1e-12));
        }
    }

    #[test]
    fn volume_matches_closed_form() {
        for (kind, flats) in [(RingKind::End, 1), (RingKind::Middle, 2)] {
            let r = ring_mesh(&spec(kind), 2.0, 1.0).unwrap();
            let v = enclosed_volume(&r.mesh);
            let exact = analytic_ring_volume(2.5, 1.0, 1.0, 2.0, flats);
            assert!(v > 0.0);
            assert!((v - exact).abs() / exact < 0.02, "{v} vs {exact}");
        }
    }

    #[test]
    fn vertex_count_is_deterministic_in_segments() {
        let a = ring_mesh(&spec(RingKind::End), 2.0, 1.0).unwrap();
        let b = ring_mesh(&spec(RingKind::End), 2.0, 1.0).unwrap();
        assert_eq!(a.mesh, b.mesh);
        let mut finer = spec(RingKind::End);
        finer.segments = 64;
        let c = ring_mesh(&finer, 2.0, 1.0).unwrap();
        assert!(c.mesh.vertices().len() > a.mesh.vertices().len());
    }

    #[test]
    fn infeasible_flats() {
        let mut s = spec(RingKind::Middle);
        s.hole_radius = 2.4;
        assert!(matches!(ring_mesh(&s, 2.0, 1.0), Err(RingError::GeometryInfeasible(_))));
        assert!(matches!(ring_mesh(&spec(RingKind::End), 5.0, 1.0), Err(RingError::GeometryInfeasible(_))));
        assert!(matches!(ring_mesh(&spec(RingKind::End), 2.0, 1.5), Err(RingError::GeometryInfeasible(_))));
    }
}
