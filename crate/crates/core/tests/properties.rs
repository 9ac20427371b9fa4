use std::collections::HashMap;

use proptest::prelude::*;

use plateforge::baseline::{compute_baseline, make_seed_frame, slots_per_side};
use plateforge::catalog::{catalog, RingKind, RingSpec};
use plateforge::index::build_index;
use plateforge::math::{Mat3, RigidTransform, Vec3};
use plateforge::mesh::TriangleMesh;
use plateforge::raycast::{intersect_ray_triangle, Ray};
use plateforge::ring::{enclosed_volume, ring_mesh};
use plateforge::stl::{load_stl, save_stl, StlFormat};
use plateforge::surfaces::plane;

type V = Vec3<f64>;

fn vec3(range: f64) -> impl Strategy<Value = V> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = V> {
    vec3(1.0).prop_filter_map("degenerate", |p| (p.norm() > 1e-2).then(|| p.normalize()))
}

fn soup(n: usize) -> impl Strategy<Value = TriangleMesh<f64>> {
    prop::collection::vec((vec3(50.0), vec3(50.0), vec3(50.0)), 1..n).prop_filter_map("all degenerate", |tris| {
        let tris: Vec<[V; 3]> = tris.into_iter().map(|(a, b, c)| [a, b, c]).collect();
        TriangleMesh::from_soup(&tris).ok().map(|(m, _)| m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stl_round_trip_is_f32_exact(mesh in soup(40), ascii in any::<bool>()) {
        let fmt = if ascii { StlFormat::Ascii } else { StlFormat::Binary };
        let bytes = save_stl(&mesh, fmt);
        let back = load_stl::<f64>(&bytes).unwrap();
        prop_assert_eq!(back.mesh.face_count() + back.dropped_degenerate, mesh.face_count());
        if back.dropped_degenerate == 0 {
            for (f, g) in mesh.triangles().zip(back.mesh.triangles()) {
                for (p, q) in f.iter().zip(&g) {
                    prop_assert!((*p - *q).max_abs_component() <= 1e-5);
                }
            }
            // A second round trip is a fixed point.
            let again = load_stl::<f64>(&save_stl(&back.mesh, fmt)).unwrap().mesh;
            prop_assert_eq!(again.vertices(), back.mesh.vertices());
            prop_assert_eq!(again.faces(), back.mesh.faces());
        }
    }

    #[test]
    fn index_first_hit_matches_scan(mesh in soup(60), origin in vec3(80.0), dir in unit()) {
        let index = build_index(&mesh).unwrap();
        let ray = Ray::new(origin, dir).unwrap();
        let mut best: Option<(usize, f64)> = None;
        for f in 0..mesh.face_count() {
            let [a, b, c] = mesh.triangle(f);
            if let Some(h) = intersect_ray_triangle(&ray, a, b, c) {
                if best.is_none_or(|(_, t)| h.t < t - 1e-9) {
                    best = Some((f, h.t));
                }
            }
        }
        let got = index.first_hit(&ray, f64::INFINITY);
        prop_assert_eq!(got.is_some(), best.is_some());
        if let (Some(h), Some((f, t))) = (got, best) {
            prop_assert!((h.t - t).abs() <= 1e-9);
            let [a, b, c] = mesh.triangle(f);
            let ht = intersect_ray_triangle(&ray, a, b, c).unwrap().t;
            prop_assert!((ht - h.t).abs() <= 1e-9);
        }
        prop_assert_eq!(index.count_hits(&ray), (0..mesh.face_count())
            .filter(|&f| { let [a, b, c] = mesh.triangle(f); intersect_ray_triangle(&ray, a, b, c).is_some() })
            .count());
    }

    #[test]
    fn tilted_plane_baseline_is_straight(axis in unit(), angle in -3.0f64..3.0, wheel in -7.0f64..7.0,
                                         shift in vec3(30.0), step in 0.3f64..1.0) {
        let t = RigidTransform::new(Mat3::from_axis_angle(axis, angle), shift).unwrap();
        let mesh = plane::<f64>(25.0, 10).transformed(&t);
        let index = build_index(&mesh).unwrap();
        let n = t.apply_vector(Vec3::new(0.0, 0.0, 1.0));
        let click = t.apply_point(Vec3::new(0.7, -1.1, 4.0));
        let model = catalog::<f64>().remove(2);
        let frame = make_seed_frame(&index, &mesh, click, wheel).unwrap();
        let b = compute_baseline(&index, &frame, &model, step).unwrap();
        let k = slots_per_side(model.overall_length, step);
        let eps = 1e-6 * mesh.bounding_box().diagonal();
        prop_assert_eq!(b.len() as i64, 2 * k + 1);
        prop_assert_eq!(b.truncated, (false, false));
        for (i, p) in b.points.iter().enumerate() {
            prop_assert!((p.position - shift).dot(n).abs() <= eps);
            let expected = frame.anchor + frame.direction * (step * (i as f64 - k as f64));
            prop_assert!(p.position.distance(expected) <= 1e-9);
        }
        prop_assert!(2.0 * k as f64 * step >= model.overall_length - 1e-9);
    }

    #[test]
    fn ring_meshes_are_closed(outer in 1.5f64..3.0, hole_frac in 0.2f64..0.7, thick in 0.6f64..1.4,
                              kind in prop::sample::select(vec![RingKind::End, RingKind::Middle])) {
        let spec = RingSpec { kind, outer_radius: outer, hole_radius: outer * hole_frac, thickness: thick, segments: 48 };
        let ring = ring_mesh(&spec, outer * 0.9, thick * 0.6).unwrap();
        let mut edges: HashMap<(u32, u32), i32> = HashMap::new();
        for f in ring.mesh.faces() {
            for i in 0..3 {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
                *edges.entry((b, a)).or_default() -= 1;
            }
        }
        prop_assert!(edges.values().all(|&c| c == 0), "mesh has boundary or inconsistent winding");
        prop_assert!(enclosed_volume(&ring.mesh) > 0.0);
    }
}
