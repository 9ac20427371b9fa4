//! Bounding-volume hierarchy over a triangle mesh.
//!
//! The tree is built once by median splits along the longest centroid axis
//! and never mutated. Both query types return exactly what an exhaustive scan
//! over all faces would: the extremal value, with ties inside [`Scalar::TIE_EPS`]
//! resolved to the smallest face id. Pruning keeps every subtree whose bound
//! could still fall within the tie window, so the tie set is never truncated.

use crate::distance::closest_point_on_triangle;
use crate::math::{Aabb, Vec3};
use crate::mesh::{MeshError, TriangleMesh};
use crate::raycast::{intersect_ray_triangle, Hit, Ray};
use crate::scalar::Scalar;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first primitive slot. Interior: index of the right child (left is `self + 1`).
    offset: u32,
    /// Primitive count; zero marks an interior node.
    count: u32,
}

/// Closest surface point to a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest<T> {
    pub face: usize,
    pub point: Vec3<T>,
    pub distance: T,
}

/// Immutable acceleration structure. Owns a copy of the triangle geometry.
#[derive(Clone, Debug)]
pub struct SpatialIndex<T> {
    nodes: Vec<Node<T>>,
    /// Triangles in leaf order.
    slots: Vec<[Vec3<T>; 3]>,
    /// Original face id of each slot.
    slot_face: Vec<u32>,
    /// Slot of each original face.
    face_slot: Vec<u32>,
    normals: Vec<Vec3<T>>,
    bounds: Aabb<T>,
    pad: T,
}

impl<T: Scalar> SpatialIndex<T> {
    pub fn build(mesh: &TriangleMesh<T>) -> Result<Self, MeshError> {
        if mesh.face_count() == 0 {
            return Err(MeshError::EmptyMesh);
        }
        let bounds = mesh.bounding_box();
        let scale = bounds.min.max_abs_component().max(bounds.max.max_abs_component()) + T::one();
        let pad = scale * T::epsilon() * T::lit(64.0);

        let tris: Vec<[Vec3<T>; 3]> = mesh.triangles().collect();
        let centroids: Vec<Vec3<T>> = tris.iter().map(|[a, b, c]| (*a + *b + *c) / T::lit(3.0)).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, &tris, &centroids, pad);

        let slots = order.iter().map(|&f| tris[f as usize]).collect();
        let mut face_slot = vec![0u32; order.len()];
        for (slot, &f) in order.iter().enumerate() {
            face_slot[f as usize] = slot as u32;
        }
        Ok(Self {
            nodes,
            slots,
            slot_face: order,
            face_slot,
            normals: mesh.face_normals().to_vec(),
            bounds,
            pad,
        })
    }

    pub fn face_count(&self) -> usize {
        self.slots.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.bounds
    }

    pub fn triangle(&self, face: usize) -> [Vec3<T>; 3] {
        self.slots[self.face_slot[face] as usize]
    }

    pub fn face_normal(&self, face: usize) -> Vec3<T> {
        self.normals[face]
    }

    /// Nearest hit with `t ≤ t_max`.
    pub fn first_hit(&self, ray: &Ray<T>, t_max: T) -> Option<Hit<T>> {
        let tie = T::tie_eps();
        let inv = ray.inv_direction();
        let mut best = t_max;
        // Every hit within `tie` of the running minimum; filtered at the end.
        let mut window: Vec<Hit<T>> = Vec::new();
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let Some(entry) = node.bounds.ray_entry(ray.origin(), inv, best + tie) else {
                continue;
            };
            if entry > best + tie {
                continue;
            }
            if node.count > 0 {
                let first = node.offset as usize;
                for slot in first..first + node.count as usize {
                    let [a, b, c] = self.slots[slot];
                    let Some(h) = intersect_ray_triangle(ray, a, b, c) else {
                        continue;
                    };
                    if h.t > t_max || h.t > best + tie {
                        continue;
                    }
                    best = best.min(h.t);
                    window.push(Hit {
                        face: self.slot_face[slot] as usize,
                        t: h.t,
                        u: h.u,
                        v: h.v,
                    });
                }
                window.retain(|h| h.t <= best + tie);
            } else {
                stack.push(node.offset);
                stack.push(ni + 1);
            }
        }
        window
            .into_iter()
            .filter(|h| h.t <= best + tie)
            .min_by_key(|h| h.face)
    }

    /// Number of faces the ray crosses at `t > εt`, counting every face.
    pub fn count_hits(&self, ray: &Ray<T>) -> usize {
        let inv = ray.inv_direction();
        let mut stack = vec![0u32];
        let mut count = 0;
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.ray_entry(ray.origin(), inv, T::infinity()).is_none() {
                continue;
            }
            if node.count > 0 {
                let first = node.offset as usize;
                count += self.slots[first..first + node.count as usize]
                    .iter()
                    .filter(|[a, b, c]| intersect_ray_triangle(ray, *a, *b, *c).is_some())
                    .count();
            } else {
                stack.push(node.offset);
                stack.push(ni + 1);
            }
        }
        count
    }

    /// Closest point on the mesh to `p`. Ties within 1e-9 mm go to the smallest face id.
    pub fn nearest_triangle(&self, p: Vec3<T>) -> Nearest<T> {
        let tie = T::tie_eps();
        let mut best = T::infinity();
        let mut window: Vec<Nearest<T>> = Vec::new();
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let lower = node.bounds.distance_squared(p).sqrt();
            if lower > best + tie + self.pad {
                continue;
            }
            if node.count > 0 {
                let first = node.offset as usize;
                for slot in first..first + node.count as usize {
                    let [a, b, c] = self.slots[slot];
                    let q = closest_point_on_triangle(p, a, b, c);
                    let d = q.distance(p);
                    if d > best + tie {
                        continue;
                    }
                    best = best.min(d);
                    window.push(Nearest {
                        face: self.slot_face[slot] as usize,
                        point: q,
                        distance: d,
                    });
                }
                window.retain(|n| n.distance <= best + tie);
            } else {
                // Visit the nearer child first so `best` tightens early.
                let left = ni + 1;
                let right = node.offset;
                let dl = self.nodes[left as usize].bounds.distance_squared(p);
                let dr = self.nodes[right as usize].bounds.distance_squared(p);
                if dl <= dr {
                    stack.push(right);
                    stack.push(left);
                } else {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        window
            .into_iter()
            .filter(|n| n.distance <= best + tie)
            .min_by_key(|n| n.face)
            .expect("index is non-empty")
    }
}

fn build_node<T: Scalar>(
    nodes: &mut Vec<Node<T>>,
    order: &mut [u32],
    first: usize,
    tris: &[[Vec3<T>; 3]],
    centroids: &[Vec3<T>],
    pad: T,
) -> u32 {
    let bounds = Aabb::from_points(order.iter().flat_map(|&f| tris[f as usize])).padded(pad);
    let me = nodes.len() as u32;
    nodes.push(Node {
        bounds,
        offset: first as u32,
        count: order.len() as u32,
    });
    if order.len() <= LEAF_SIZE {
        return me;
    }
    let cb = Aabb::from_points(order.iter().map(|&f| centroids[f as usize]));
    let axis = cb.longest_axis();
    if !(cb.extent()[axis] > T::zero()) {
        return me;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .partial_cmp(&centroids[b as usize][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    build_node(nodes, lo, first, tris, centroids, pad);
    let right = build_node(nodes, hi, first + mid, tris, centroids, pad);
    let node = &mut nodes[me as usize];
    node.offset = right;
    node.count = 0;
    me
}

/// Builds the index for `mesh`.
pub fn build_index<T: Scalar>(mesh: &TriangleMesh<T>) -> Result<SpatialIndex<T>, MeshError> {
    SpatialIndex::build(mesh)
}

/// Closest point on the indexed mesh to `p`.
pub fn nearest_triangle<T: Scalar>(index: &SpatialIndex<T>, p: Vec3<T>) -> Nearest<T> {
    index.nearest_triangle(p)
}
