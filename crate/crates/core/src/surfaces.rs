//! Analytic test surfaces meshed at a chosen resolution.
//!
//! These back the unit tests, the acceptance suite and the CLI/service
//! examples: planes, wedges, sine waves and spheres have closed-form
//! distance functions, so any baseline or implant built on them can be
//! checked against ground truth.

use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::scalar::Scalar;

/// Axis-aligned unit cube centred at the origin, 12 faces, outward winding.
pub fn unit_cube<T: Scalar>() -> TriangleMesh<T> {
    let h = 0.5;
    let corners: Vec<Vec3<T>> = (0..8)
        .map(|i| {
            let s = |bit: usize| if i & bit != 0 { h } else { -h };
            Vec3::from_f64(s(1), s(2), s(4))
        })
        .collect();
    // Each face as a quad with outward counter-clockwise winding.
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(corners, faces).expect("cube is valid")
}

/// Sweeps a polyline profile in the xz-plane along y ∈ [−half_width, half_width].
///
/// For a profile running toward +x the faces point toward +z; in general the
/// face normal is the profile tangent rotated by +90° in the xz-plane.
pub fn extrude_profile<T: Scalar>(
    profile: &[(f64, f64)],
    half_width: f64,
    y_cells: usize,
) -> TriangleMesh<T> {
    assert!(profile.len() >= 2 && y_cells >= 1);
    let ny = y_cells + 1;
    let mut vertices = Vec::with_capacity(profile.len() * ny);
    for &(x, z) in profile {
        for j in 0..ny {
            let y = -half_width + 2.0 * half_width * j as f64 / y_cells as f64;
            vertices.push(Vec3::from_f64(x, y, z));
        }
    }
    let mut faces = Vec::new();
    for i in 0..profile.len() - 1 {
        for j in 0..y_cells {
            let a = (i * ny + j) as u32;
            let b = ((i + 1) * ny + j) as u32;
            let c = b + 1;
            let d = a + 1;
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("extruded profile is valid")
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

/// Plane `z = 0` on the square `[−half_width, half_width]²`.
pub fn plane<T: Scalar>(half_width: f64, cells: usize) -> TriangleMesh<T> {
    let profile: Vec<_> = linspace(-half_width, half_width, cells).map(|x| (x, 0.0)).collect();
    extrude_profile(&profile, half_width, cells)
}

/// Two perpendicular half-planes meeting along the y-axis.
///
/// The floor is `z = 0, x ∈ [0, leg]` with normal `+z`. A concave wedge adds
/// the wall `x = 0, z ∈ [0, leg]` (normal `+x`, facing the opening); a convex
/// one adds `x = 0, z ∈ [−leg, 0]` (normal `−x`).
pub fn right_angle_wedge<T: Scalar>(leg: f64, half_width: f64, cells: usize, convex: bool) -> TriangleMesh<T> {
    let wall: Vec<(f64, f64)> = if convex {
        linspace(-leg, 0.0, cells).map(|z| (0.0, z)).collect()
    } else {
        linspace(leg, 0.0, cells).map(|z| (0.0, z)).collect()
    };
    let floor = linspace(0.0, leg, cells).skip(1).map(|x| (x, 0.0));
    let profile: Vec<_> = wall.into_iter().chain(floor).collect();
    extrude_profile(&profile, half_width, cells)
}

/// Signed distance to a right-angle wedge surface built by [`right_angle_wedge`]
/// (positive on the side the normals face). Exact for points whose closest
/// feature lies within the legs.
pub fn wedge_distance(p: Vec3<f64>, convex: bool) -> f64 {
    let (x, z) = (p.x, p.z);
    if convex {
        // Outside region is x < 0 or z > 0.
        if x >= 0.0 && z <= 0.0 {
            -x.min(-z)
        } else if x < 0.0 && z > 0.0 {
            (x * x + z * z).sqrt()
        } else if x < 0.0 {
            -x
        } else {
            z
        }
    } else if x >= 0.0 && z >= 0.0 {
        x.min(z)
    } else if x < 0.0 && z < 0.0 {
        -(x * x + z * z).sqrt()
    } else {
        // One coordinate negative: behind a single face.
        x.min(z)
    }
}

/// Height field `z = amplitude · sin(2πx / wavelength)` over `[−half_width, half_width]²`.
pub fn sine_wave<T: Scalar>(
    half_width: f64,
    amplitude: f64,
    wavelength: f64,
    x_cells: usize,
    y_cells: usize,
) -> TriangleMesh<T> {
    let k = std::f64::consts::TAU / wavelength;
    let profile: Vec<_> = linspace(-half_width, half_width, x_cells)
        .map(|x| (x, amplitude * (k * x).sin()))
        .collect();
    extrude_profile(&profile, half_width, y_cells)
}

/// UV sphere with outward winding. Face count is `2 · slices · (stacks − 1)`.
pub fn uv_sphere<T: Scalar>(radius: f64, slices: usize, stacks: usize) -> TriangleMesh<T> {
    assert!(slices >= 3 && stacks >= 2);
    use std::f64::consts::{PI, TAU};
    let mut vertices = vec![Vec3::from_f64(0.0, 0.0, radius)];
    for i in 1..stacks {
        let polar = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let az = TAU * j as f64 / slices as f64;
            vertices.push(Vec3::from_f64(
                radius * polar.sin() * az.cos(),
                radius * polar.sin() * az.sin(),
                radius * polar.cos(),
            ));
        }
    }
    vertices.push(Vec3::from_f64(0.0, 0.0, -radius));
    let south = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * slices + (j % slices)) as u32;
    let mut faces = Vec::new();
    for j in 0..slices {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for j in 0..slices {
        faces.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriangleMesh::new(vertices, faces).expect("sphere is valid")
}
