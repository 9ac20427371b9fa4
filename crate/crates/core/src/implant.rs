//! Ring placement along a baseline and bridge lofting between rings.
//!
//! Rings are numbered from the positive end of the baseline toward the
//! negative end. Every ring's canonical `+x` flat faces its successor, except
//! the last ring, whose single flat faces its predecessor. All corner
//! quadruples leaving this module are ordered bottom-left, bottom-right,
//! top-right, top-left in the *travel frame*: forward runs from ring `i` to
//! ring `i + 1`, up is the local normal, and left is `up × forward`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{Baseline, BaselinePoint};
use crate::catalog::{PlateModel, RingSpec};
use crate::math::{slerp, RigidTransform, Vec3};
use crate::mesh::{MeshError, TriangleMesh};
use crate::ring::{ring_mesh, Flat, RingError, RingMesh};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImplantError {
    #[error("baseline too short: {required:.3} mm of arc required, {available:.3} mm available")]
    BaselineTooShort { required: f64, available: f64 },
    #[error("ring {ring}: direction is parallel to the normal")]
    DegenerateDirection { ring: usize },
    #[error("ring {ring} has no flat facing that neighbour")]
    NoSuchSide { ring: usize },
    #[error("bridge rectangle {index} is flipped against its predecessor")]
    FlippedFrame { index: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Which neighbour a flat or a direction refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    TowardNext,
    TowardPrev,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RingPlacement<T> {
    pub ring_index: usize,
    /// Surface point under the ring, lifted by half the bar thickness.
    pub center: Vec3<T>,
    #[serde(rename = "N")]
    pub normal: Vec3<T>,
    /// Canonical `+x` target; faces `faces`.
    #[serde(rename = "D")]
    pub direction: Vec3<T>,
    pub faces: Side,
    /// Signed arc position from the centre marker (mm).
    pub arc_mm: T,
    pub pose: RigidTransform<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeSection<T> {
    pub start_corners: [Vec3<T>; 4],
    pub end_corners: [Vec3<T>; 4],
    pub waypoints: Vec<[Vec3<T>; 4]>,
    pub mesh: TriangleMesh<T>,
}

impl<T: Scalar> BridgeSection<T> {
    pub fn rectangle_count(&self) -> usize {
        self.waypoints.len() + 2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Implant<T> {
    pub model_id: String,
    pub baseline: Baseline<T>,
    pub placements: Vec<RingPlacement<T>>,
    pub mesh: TriangleMesh<T>,
}

/// Source of canonical ring meshes.
pub trait RingProvider<T: Scalar> {
    fn ring(&self, spec: &RingSpec<T>, bar_width: T, bar_thickness: T) -> Result<RingMesh<T>, RingError>;
}

/// Builds every ring from its spec.
#[derive(Clone, Copy, Debug, Default)]
pub struct CanonicalRings;

impl<T: Scalar> RingProvider<T> for CanonicalRings {
    fn ring(&self, spec: &RingSpec<T>, bar_width: T, bar_thickness: T) -> Result<RingMesh<T>, RingError> {
        ring_mesh(spec, bar_width, bar_thickness)
    }
}

/// Baseline as an arc-length parametrised polyline, `s = 0` at the centre marker.
struct Polyline<'a, T> {
    points: &'a [BaselinePoint<T>],
    s: Vec<T>,
}

impl<'a, T: Scalar> Polyline<'a, T> {
    fn new(baseline: &'a Baseline<T>) -> Self {
        let points = &baseline.points[..];
        let mut s = Vec::with_capacity(points.len());
        let mut acc = T::zero();
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += points[i - 1].position.distance(p.position);
            }
            s.push(acc);
        }
        let origin = s[baseline.center_index()];
        s.iter_mut().for_each(|v| *v -= origin);
        Self { points, s }
    }

    fn min(&self) -> T {
        self.s[0]
    }

    fn max(&self) -> T {
        *self.s.last().unwrap()
    }

    /// Segment and fraction containing arc position `s` (clamped).
    fn locate(&self, s: T) -> (usize, T) {
        if self.points.len() == 1 {
            return (0, T::zero());
        }
        let s = s.max(self.min()).min(self.max());
        let i = self.s.partition_point(|&v| v <= s).saturating_sub(1).min(self.points.len() - 2);
        let len = self.s[i + 1] - self.s[i];
        let f = if len > T::zero() { (s - self.s[i]) / len } else { T::zero() };
        (i, f.max(T::zero()).min(T::one()))
    }

    fn position(&self, s: T) -> Vec3<T> {
        let (i, f) = self.locate(s);
        match self.points.get(i + 1) {
            Some(b) => self.points[i].position.lerp(b.position, f),
            None => self.points[i].position,
        }
    }

    fn normal(&self, s: T) -> Vec3<T> {
        let (i, f) = self.locate(s);
        match self.points.get(i + 1) {
            Some(b) => slerp(self.points[i].normal, b.normal, f),
            None => self.points[i].normal,
        }
    }
}

/// Rigid pose taking the canonical ring frame to (`center`, `normal`, in-plane `direction`).
pub fn ring_pose<T: Scalar>(center: Vec3<T>, normal: Vec3<T>, direction: Vec3<T>) -> Option<RigidTransform<T>> {
    let z = normal.normalize();
    let x = direction.reject_from(z).try_normalize(T::lit(1e-9))?;
    let y = z.cross(x);
    Some(RigidTransform::from_frame(x, y, z, center))
}

fn too_short<T: Scalar>(model: &PlateModel<T>, line: &Polyline<T>) -> ImplantError {
    ImplantError::BaselineTooShort {
        required: model.center_span().as_f64(),
        available: (line.max() - line.min()).as_f64(),
    }
}

pub fn place_rings<T: Scalar>(baseline: &Baseline<T>, model: &PlateModel<T>) -> Result<Vec<RingPlacement<T>>, ImplantError> {
    model.validate().map_err(|e| ImplantError::InvalidModel(e.to_string()))?;
    if baseline.points.is_empty() {
        return Err(ImplantError::BaselineTooShort {
            required: model.center_span().as_f64(),
            available: 0.0,
        });
    }
    let line = Polyline::new(baseline);
    let two = T::lit(2.0);
    let mut arcs = vec![model.overall_length / two - model.rings[0].outer_radius];
    for &bar in &model.bar_lengths {
        arcs.push(*arcs.last().unwrap() - bar);
    }
    let tol = T::lit(1e-9);
    if arcs[0] > line.max() + tol || *arcs.last().unwrap() < line.min() - tol {
        return Err(too_short(model, &line));
    }

    let last = arcs.len() - 1;
    let half_step = baseline.step / two;
    let lift = model.bar_thickness / two;
    let mut placements = Vec::with_capacity(arcs.len());
    for (i, &s) in arcs.iter().enumerate() {
        let surface = line.position(s);
        let normal = line.normal(s).normalize();
        // Local tangent toward the negative end, by central difference.
        let ahead = line.position(s - half_step);
        let behind = line.position(s + half_step);
        let forward = ahead - behind;
        let (direction, faces) = if i == last {
            (-forward, Side::TowardPrev)
        } else {
            (forward, Side::TowardNext)
        };
        let center = surface + normal * lift;
        let pose = ring_pose(center, normal, direction).ok_or(ImplantError::DegenerateDirection { ring: i })?;
        placements.push(RingPlacement {
            ring_index: i,
            center,
            normal,
            direction: pose.apply_vector(Vec3::unit_x()),
            faces,
            arc_mm: s,
            pose,
        });
    }
    Ok(placements)
}

/// Canonical ring mesh moved onto its placement. `D` is used only through its
/// component perpendicular to `N`.
pub fn pose_ring<T: Scalar>(ring: &RingMesh<T>, placement: &RingPlacement<T>) -> Result<TriangleMesh<T>, ImplantError> {
    let pose = ring_pose(placement.center, placement.normal, placement.direction).ok_or(
        ImplantError::DegenerateDirection {
            ring: placement.ring_index,
        },
    )?;
    Ok(ring.mesh.transformed(&pose))
}

/// Posed corners of the flat facing `side`, in travel-frame order.
pub fn attachment_corners<T: Scalar>(
    placement: &RingPlacement<T>,
    ring: &RingMesh<T>,
    side: Side,
) -> Result<[Vec3<T>; 4], ImplantError> {
    let flat = if side == placement.faces { Flat::PosX } else { Flat::NegX };
    let tags = ring.tags(flat).ok_or(ImplantError::NoSuchSide {
        ring: placement.ring_index,
    })?;
    let corners = tags.corners.map(|c| placement.pose.apply_point(c));
    // Canonical left is N × D; when D faces backward it is the travel right.
    Ok(if placement.faces == Side::TowardPrev {
        [corners[1], corners[0], corners[3], corners[2]]
    } else {
        corners
    })
}

fn rectangle<T: Scalar>(surface: Vec3<T>, normal: Vec3<T>, forward: Vec3<T>, half_w: T, half_t: T) -> Option<[Vec3<T>; 4]> {
    let n = normal.normalize();
    let t = forward.reject_from(n).try_normalize(T::lit(1e-12))?;
    let left = n.cross(t) * half_w;
    let c = surface + n * half_t;
    let up = n * half_t;
    Some([c + left - up, c - left - up, c - left + up, c + left + up])
}

fn rect_center<T: Scalar>(r: &[Vec3<T>; 4]) -> Vec3<T> {
    (r[0] + r[1] + r[2] + r[3]) / T::lit(4.0)
}

fn rect_up<T: Scalar>(r: &[Vec3<T>; 4]) -> Vec3<T> {
    ((r[3] - r[0]) + (r[2] - r[1])).normalize()
}

/// Lofts a bar from `start` through one rectangle per `between` point to `end`.
pub fn build_bridge<T: Scalar>(
    start: [Vec3<T>; 4],
    end: [Vec3<T>; 4],
    between: &[BaselinePoint<T>],
    bar_width: T,
    bar_thickness: T,
) -> Result<BridgeSection<T>, ImplantError> {
    let two = T::lit(2.0);
    let (half_w, half_t) = (bar_width / two, bar_thickness / two);
    let mut centers = vec![rect_center(&start)];
    centers.extend(between.iter().map(|p| p.position));
    centers.push(rect_center(&end));

    let mut waypoints = Vec::with_capacity(between.len());
    for (j, p) in between.iter().enumerate() {
        let forward = centers[j + 2] - centers[j];
        let rect = rectangle(p.position, p.normal, forward, half_w, half_t).ok_or(ImplantError::FlippedFrame { index: j + 1 })?;
        waypoints.push(rect);
    }

    let mut rects = Vec::with_capacity(waypoints.len() + 2);
    rects.push(start);
    rects.extend(waypoints.iter().copied());
    rects.push(end);
    for (j, w) in rects.windows(2).enumerate() {
        if rect_up(&w[0]).dot(rect_up(&w[1])) < -T::lit(1e-9) {
            return Err(ImplantError::FlippedFrame { index: j + 1 });
        }
    }

    let vertices: Vec<Vec3<T>> = rects.iter().flatten().copied().collect();
    let mut faces = Vec::with_capacity(8 * (rects.len() - 1));
    for r in 0..rects.len() - 1 {
        let near = 4 * r as u32;
        let far = near + 4;
        for a in 0..4u32 {
            let b = (a + 1) % 4;
            let (n1, n2, n3, n4) = (near + a, near + b, far + b, far + a);
            // T1 = {N1, N2, N3} and T2 = {N1, N3, N4}, wound to face outward.
            faces.push([n1, n3, n2]);
            faces.push([n1, n4, n3]);
        }
    }
    Ok(BridgeSection {
        start_corners: start,
        end_corners: end,
        waypoints,
        mesh: TriangleMesh::new(vertices, faces)?,
    })
}

/// Baseline points whose arc position lies strictly between `lo` and `hi`.
fn points_between<'a, T: Scalar>(line: &Polyline<'a, T>, lo: T, hi: T) -> Vec<BaselinePoint<T>> {
    let margin = T::lit(1e-6);
    // Walk from high arc toward low arc, matching bridge travel.
    line.points
        .iter()
        .zip(&line.s)
        .rev()
        .filter(|(_, &s)| s > lo + margin && s < hi - margin)
        .map(|(p, _)| *p)
        .collect()
}

pub fn generate_implant<T: Scalar>(
    baseline: &Baseline<T>,
    model: &PlateModel<T>,
    rings: &dyn RingProvider<T>,
) -> Result<Implant<T>, ImplantError> {
    generate_implant_parts(baseline, model, rings).map(|(implant, _)| implant)
}

/// As [`generate_implant`], also returning the individual bridge sections.
pub fn generate_implant_parts<T: Scalar>(
    baseline: &Baseline<T>,
    model: &PlateModel<T>,
    rings: &dyn RingProvider<T>,
) -> Result<(Implant<T>, Vec<BridgeSection<T>>), ImplantError> {
    let placements = place_rings(baseline, model)?;
    let meshes = model
        .rings
        .iter()
        .map(|spec| rings.ring(spec, model.bar_width, model.bar_thickness))
        .collect::<Result<Vec<_>, _>>()?;
    let line = Polyline::new(baseline);

    let mut parts = Vec::with_capacity(2 * placements.len());
    let mut bridges = Vec::with_capacity(placements.len() - 1);
    for (i, placement) in placements.iter().enumerate() {
        parts.push(pose_ring(&meshes[i], placement)?);
        if let Some(next) = placements.get(i + 1) {
            let start = attachment_corners(placement, &meshes[i], Side::TowardNext)?;
            let end = attachment_corners(next, &meshes[i + 1], Side::TowardPrev)?;
            let hi = placement.arc_mm - meshes[i].flat_distance;
            let lo = next.arc_mm + meshes[i + 1].flat_distance;
            let between = points_between(&line, lo, hi);
            let bridge = build_bridge(start, end, &between, model.bar_width, model.bar_thickness).map_err(|e| match e {
                ImplantError::FlippedFrame { index } => ImplantError::FlippedFrame {
                    index: bridge_offset(&bridges) + index,
                },
                other => other,
            })?;
            parts.push(bridge.mesh.clone());
            bridges.push(bridge);
        }
    }
    let mesh = TriangleMesh::merge(parts.iter())?;
    Ok((
        Implant {
            model_id: model.id.clone(),
            baseline: baseline.clone(),
            placements,
            mesh,
        },
        bridges,
    ))
}

/// Rectangles already emitted by earlier bridges, so flip indices are global.
fn bridge_offset<T: Scalar>(bridges: &[BridgeSection<T>]) -> usize {
    bridges.iter().map(|b| b.rectangle_count()).sum()
}
