//! Surface-following centreline from a seed point and a wheel angle.
//!
//! A row of parallel rays is lifted above the tangent plane at the anchor and
//! cast back onto the surface along `−N`. Where the row runs off a fold that
//! no downward ray can reach (a vertical wall, a sharp convex edge), the
//! remaining markers are found by a compass walk: a circle of radius `step`
//! around the last marker, inside the plane spanned by `N` and `D`, is swept
//! from above the travel direction to below it and the first surface crossing
//! becomes the next marker.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::PlateModel;
use crate::index::SpatialIndex;
use crate::math::{RigidTransform, Vec3};
use crate::mesh::TriangleMesh;
use crate::raycast::Ray;
use crate::scalar::Scalar;

pub const DEFAULT_STEP_MM: f64 = 0.5;
/// Cascade lift above the anchor, as a fraction of the bounding-box diagonal.
pub const CASCADE_HEIGHT_FRACTION: f64 = 0.05;
/// On-surface tolerance, as a fraction of the bounding-box diagonal.
pub const SURFACE_EPS_FRACTION: f64 = 1e-6;

/// Compass sweep: from +SWEEP_DEG above the travel direction to −SWEEP_DEG below.
const SWEEP_DEG: f64 = 100.0;
const SWEEP_INCREMENT_DEG: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("the centre ray missed the surface at the anchor")]
    SeedMiss,
    #[error("marker {index} out of range (baseline has {len} markers)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no tangent direction could be formed at the anchor")]
    DegenerateFrame,
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("invalid step {step} mm for a {length} mm plate")]
    InvalidStep { step: f64, length: f64 },
}

/// Global direction projected onto the tangent plane to get the wheel-zero
/// direction, with a fallback for normals parallel to it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentReference<T> {
    pub primary: Vec3<T>,
    pub fallback: Vec3<T>,
}

impl<T: Scalar> Default for TangentReference<T> {
    fn default() -> Self {
        Self {
            primary: Vec3::unit_x(),
            fallback: Vec3::unit_y(),
        }
    }
}

impl<T: Scalar> TangentReference<T> {
    pub fn transformed(&self, t: &RigidTransform<T>) -> Self {
        Self {
            primary: t.apply_vector(self.primary),
            fallback: t.apply_vector(self.fallback),
        }
    }

    fn tangent_at(&self, n: Vec3<T>) -> Option<Vec3<T>> {
        let min = T::lit(1e-6);
        self.primary
            .reject_from(n)
            .try_normalize(min)
            .or_else(|| self.fallback.reject_from(n).try_normalize(min))
    }
}

/// Anchor, oriented normal and cascade direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SeedFrame<T> {
    pub anchor: Vec3<T>,
    #[serde(rename = "N")]
    pub normal: Vec3<T>,
    #[serde(rename = "D")]
    pub direction: Vec3<T>,
    /// Carried at the top level of the baseline document.
    #[serde(skip)]
    pub wheel_angle: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BaselinePoint<T> {
    #[serde(rename = "p")]
    pub position: Vec3<T>,
    #[serde(rename = "n")]
    pub normal: Vec3<T>,
    /// Cascade slot, negative on the left.
    pub k: i64,
    /// Found by the compass walk rather than a cascade ray.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pivot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", from = "BaselineDoc<T>", into = "BaselineDoc<T>")]
pub struct Baseline<T> {
    pub model_id: String,
    pub step: T,
    pub seed: SeedFrame<T>,
    pub cascade_height: T,
    pub points: Vec<BaselinePoint<T>>,
    /// (left, right): that side stopped before reaching its full slot count.
    pub truncated: (bool, bool),
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct BaselineDoc<T> {
    model_id: String,
    step_mm: T,
    wheel_angle_rad: T,
    cascade_height_mm: T,
    seed: SeedFrame<T>,
    points: Vec<BaselinePoint<T>>,
    truncated: [bool; 2],
}

impl<T: Scalar> From<BaselineDoc<T>> for Baseline<T> {
    fn from(d: BaselineDoc<T>) -> Self {
        let mut seed = d.seed;
        seed.wheel_angle = d.wheel_angle_rad;
        Self {
            model_id: d.model_id,
            step: d.step_mm,
            seed,
            cascade_height: d.cascade_height_mm,
            points: d.points,
            truncated: (d.truncated[0], d.truncated[1]),
        }
    }
}

impl<T: Scalar> From<Baseline<T>> for BaselineDoc<T> {
    fn from(b: Baseline<T>) -> Self {
        Self {
            model_id: b.model_id,
            step_mm: b.step,
            wheel_angle_rad: b.seed.wheel_angle,
            cascade_height_mm: b.cascade_height,
            seed: b.seed,
            points: b.points,
            truncated: [b.truncated.0, b.truncated.1],
        }
    }
}

impl<T: Scalar> Baseline<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of the `k = 0` marker within `points`.
    pub fn center_index(&self) -> usize {
        self.points.iter().position(|p| p.k == 0).unwrap_or(0)
    }

    /// Origin of the cascade ray for slot `k`.
    pub fn ray_origin(&self, k: i64) -> Vec3<T> {
        cascade_origin(&self.seed, self.cascade_height, self.step, k)
    }

    pub fn arc_length(&self) -> T {
        self.points
            .windows(2)
            .map(|w| w[0].position.distance(w[1].position))
            .sum()
    }

    pub fn chord_length(&self) -> T {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => a.position.distance(b.position),
            _ => T::zero(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("baseline serializes")
    }
}

fn cascade_origin<T: Scalar>(seed: &SeedFrame<T>, h: T, step: T, k: i64) -> Vec3<T> {
    seed.anchor + seed.normal * h + seed.direction * (step * T::lit(k as f64))
}

fn surface_eps<T: Scalar>(index: &SpatialIndex<T>) -> T {
    index.bounds().diagonal() * T::lit(SURFACE_EPS_FRACTION)
}

/// Orients a face normal: toward `toward` when it is off the surface,
/// else along `hint`, else to the side with fewer crossings.
fn orient_normal<T: Scalar>(
    index: &SpatialIndex<T>,
    n: Vec3<T>,
    at: Vec3<T>,
    toward: Vec3<T>,
    hint: Option<Vec3<T>>,
) -> Vec3<T> {
    let offset = toward - at;
    if offset.norm() > surface_eps(index) {
        return if offset.dot(n) < T::zero() { -n } else { n };
    }
    if let Some(h) = hint {
        let d = h.dot(n);
        if d.abs() > T::lit(1e-9) {
            return if d < T::zero() { -n } else { n };
        }
    }
    let count = |d: Vec3<T>| Ray::new(at, d).map_or(0, |r| index.count_hits(&r));
    if count(-n) < count(n) {
        -n
    } else {
        n
    }
}

/// Seed frame with the default `+x` / `+y` tangent reference.
pub fn make_seed_frame<T: Scalar>(
    index: &SpatialIndex<T>,
    mesh: &TriangleMesh<T>,
    click: Vec3<T>,
    wheel_angle: T,
) -> Result<SeedFrame<T>, BaselineError> {
    make_seed_frame_with(index, mesh, click, wheel_angle, &TangentReference::default())
}

pub fn make_seed_frame_with<T: Scalar>(
    index: &SpatialIndex<T>,
    mesh: &TriangleMesh<T>,
    click: Vec3<T>,
    wheel_angle: T,
    reference: &TangentReference<T>,
) -> Result<SeedFrame<T>, BaselineError> {
    if mesh.face_count() == 0 || index.face_count() == 0 {
        return Err(BaselineError::EmptyMesh);
    }
    let near = index.nearest_triangle(click);
    let n = orient_normal(index, index.face_normal(near.face), near.point, click, None);
    let t0 = reference.tangent_at(n).ok_or(BaselineError::DegenerateFrame)?;
    let (s, c) = wheel_angle.sin_cos();
    let d = (t0 * c + n.cross(t0) * s).normalize();
    Ok(SeedFrame {
        anchor: near.point,
        normal: n,
        direction: d,
        wheel_angle,
    })
}

/// Slots per side for a plate of `length` at marker spacing `step`.
pub fn slots_per_side<T: Scalar>(length: T, step: T) -> i64 {
    // The small bias keeps exact multiples from rounding up one slot.
    (length / (T::lit(2.0) * step) - T::lit(1e-9)).ceil().to_i64().unwrap_or(0).max(0)
}

pub fn compute_baseline<T: Scalar>(
    index: &SpatialIndex<T>,
    frame: &SeedFrame<T>,
    model: &PlateModel<T>,
    step: T,
) -> Result<Baseline<T>, BaselineError> {
    let length = model.overall_length;
    if !(step > T::zero() && step.is_finite() && length >= step) {
        return Err(BaselineError::InvalidStep {
            step: step.as_f64(),
            length: length.as_f64(),
        });
    }
    if index.face_count() == 0 {
        return Err(BaselineError::EmptyMesh);
    }
    let h = index.bounds().diagonal() * T::lit(CASCADE_HEIGHT_FRACTION);
    let k_max = slots_per_side(length, step);
    let n0 = frame.normal;

    let cast = |k: i64| -> Option<BaselinePoint<T>> {
        let ray = Ray::new(cascade_origin(frame, h, step, k), -n0)?;
        let hit = index.first_hit(&ray, T::infinity())?;
        let n = index.face_normal(hit.face);
        Some(BaselinePoint {
            position: hit.point(&ray),
            normal: if n.dot(n0) < T::zero() { -n } else { n },
            k,
            pivot: false,
        })
    };

    let center = cast(0).ok_or(BaselineError::SeedMiss)?;
    let mut sides = [(Vec::new(), false), (Vec::new(), false)];
    for (slot, sign) in [(0usize, -1i64), (1, 1)] {
        let (points, truncated) = &mut sides[slot];
        let mut k = 1;
        while k <= k_max {
            match cast(sign * k) {
                Some(p) => points.push(p),
                None => break,
            }
            k += 1;
        }
        if k <= k_max {
            let walked = compass_walk(index, frame, step, &center, points, sign, k, k_max);
            *truncated = walked.len() as i64 <= k_max - k;
            points.extend(walked);
        }
    }

    let [(left, tl), (right, tr)] = sides;
    let mut points: Vec<_> = left.into_iter().rev().collect();
    points.push(center);
    points.extend(right);
    Ok(Baseline {
        model_id: model.id.clone(),
        step,
        seed: *frame,
        cascade_height: h,
        points,
        truncated: (tl, tr),
    })
}

/// Continues one side from its last marker once the cascade has missed,
/// filling slots `first_k..=k_max` (signed by `sign`) until the sweep finds
/// nothing.
#[allow(clippy::too_many_arguments)]
fn compass_walk<T: Scalar>(
    index: &SpatialIndex<T>,
    frame: &SeedFrame<T>,
    step: T,
    center: &BaselinePoint<T>,
    side: &[BaselinePoint<T>],
    sign: i64,
    first_k: i64,
    k_max: i64,
) -> Vec<BaselinePoint<T>> {
    let m = frame.normal.cross(frame.direction).normalize();
    let in_plane = |v: Vec3<T>| v.reject_from(m).try_normalize(T::lit(1e-12));
    let s = T::lit(sign as f64);

    let (mut last, prev) = match side {
        [.., a, b] => (*b, a.position),
        [b] => (*b, center.position),
        [] => (*center, center.position - frame.direction * s),
    };
    let mut u = in_plane(last.position - prev).unwrap_or(frame.direction * s);
    let mut w = up_axis(m, u, last.normal, frame.normal);

    let count = (2.0 * SWEEP_DEG / SWEEP_INCREMENT_DEG).round() as usize;
    let angle = |i: usize| T::lit((SWEEP_DEG - SWEEP_INCREMENT_DEG * i as f64).to_radians());
    let reach = T::one() + T::lit(1e-6);

    let mut found = Vec::new();
    for k in first_k..=k_max {
        let p = last.position;
        let sample = |i: usize| {
            let (sn, cs) = angle(i).sin_cos();
            p + (u * cs + w * sn) * step
        };
        let mut next = None;
        let mut q = sample(0);
        for i in 1..=count {
            let q_next = sample(i);
            let chord = q_next - q;
            if let Some(ray) = Ray::new(q, chord) {
                if let Some(hit) = index.first_hit(&ray, chord.norm() * reach) {
                    let n = index.face_normal(hit.face);
                    next = Some(BaselinePoint {
                        position: hit.point(&ray),
                        normal: if n.dot(chord) > T::zero() { -n } else { n },
                        k: sign * k,
                        pivot: true,
                    });
                    break;
                }
            }
            q = q_next;
        }
        let Some(point) = next else { break };
        u = in_plane(point.position - p).unwrap_or(u);
        w = up_axis(m, u, point.normal, w);
        found.push(point);
        last = point;
    }
    found
}

/// Unit vector in the cascade plane perpendicular to `u`, on the side of
/// `normal`, or of `previous` when `normal` is edge-on.
fn up_axis<T: Scalar>(m: Vec3<T>, u: Vec3<T>, normal: Vec3<T>, previous: Vec3<T>) -> Vec3<T> {
    let w = m.cross(u).normalize();
    let d = w.dot(normal);
    let reference = if d.abs() > T::lit(1e-6) { d } else { w.dot(previous) };
    if reference < T::zero() {
        -w
    } else {
        w
    }
}

/// Moves one marker to the surface point closest to `new_position`.
pub fn adjust_marker<T: Scalar>(
    baseline: &Baseline<T>,
    index: &SpatialIndex<T>,
    marker_index: usize,
    new_position: Vec3<T>,
) -> Result<Baseline<T>, BaselineError> {
    let old = *baseline.points.get(marker_index).ok_or(BaselineError::IndexOutOfRange {
        index: marker_index,
        len: baseline.points.len(),
    })?;
    let near = index.nearest_triangle(new_position);
    let normal = orient_normal(
        index,
        index.face_normal(near.face),
        near.point,
        new_position,
        Some(old.normal),
    );
    let mut out = baseline.clone();
    out.points[marker_index] = BaselinePoint {
        position: near.point,
        normal,
        ..old
    };
    Ok(out)
}
