//! Indexed triangle soup with cached unit face normals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Aabb, RigidTransform, Vec3};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no valid faces")]
    EmptyMesh,
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("face {face} repeats a vertex index")]
    RepeatedIndex { face: usize },
    #[error("face {face} has area {area:e} mm², below the degeneracy floor")]
    DegenerateFace { face: usize, area: f64 },
    #[error("vertex {vertex} is not finite")]
    NonFiniteVertex { vertex: usize },
}

/// Twice the area vector of the triangle, `(b − a) × (c − a)`.
#[inline]
pub fn triangle_cross<T: Scalar>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Vec3<T> {
    (b - a).cross(c - a)
}

#[inline]
pub fn triangle_area<T: Scalar>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    triangle_cross(a, b, c).norm() * T::lit(0.5)
}

/// Triangle mesh in millimetres. Vertices are not welded; faces may form a
/// soup. Invariants are checked on construction and never change afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawMesh<T>", into = "RawMesh<T>")]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[u32; 3]>,
    normals: Vec<Vec3<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[u32; 3]>,
}

impl<T: Scalar> TryFrom<RawMesh<T>> for TriangleMesh<T> {
    type Error = MeshError;
    fn try_from(raw: RawMesh<T>) -> Result<Self, MeshError> {
        TriangleMesh::new(raw.vertices, raw.faces)
    }
}

impl<T: Scalar> From<TriangleMesh<T>> for RawMesh<T> {
    fn from(m: TriangleMesh<T>) -> Self {
        RawMesh {
            vertices: m.vertices,
            faces: m.faces,
        }
    }
}

impl<T: Scalar> TriangleMesh<T> {
    /// Validates and builds a mesh. Fails on any degenerate face; use
    /// [`TriangleMesh::from_soup`] to drop them instead.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        if let Some(vertex) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFiniteVertex { vertex });
        }
        let mut normals = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            check_indices(fi, f, vertices.len())?;
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            let cross = triangle_cross(a, b, c);
            let area = cross.norm() * T::lit(0.5);
            if !(area >= T::area_eps()) {
                return Err(MeshError::DegenerateFace {
                    face: fi,
                    area: area.as_f64(),
                });
            }
            normals.push(cross.normalize());
        }
        Ok(Self {
            vertices,
            faces,
            normals,
        })
    }

    /// Builds a mesh from a triangle list (three vertices per face), dropping
    /// faces whose area is below the degeneracy floor. Returns the mesh and
    /// the number of faces dropped.
    pub fn from_soup(triangles: &[[Vec3<T>; 3]]) -> Result<(Self, usize), MeshError> {
        let mut vertices = Vec::with_capacity(triangles.len() * 3);
        let mut faces = Vec::with_capacity(triangles.len());
        let mut dropped = 0;
        for tri in triangles {
            let finite = tri.iter().all(|v| v.is_finite());
            if !finite || !(triangle_area(tri[0], tri[1], tri[2]) >= T::area_eps()) {
                dropped += 1;
                continue;
            }
            let base = vertices.len() as u32;
            vertices.extend_from_slice(tri);
            faces.push([base, base + 1, base + 2]);
        }
        Ok((Self::new(vertices, faces)?, dropped))
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Vec3<T>; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    pub fn triangles(&self) -> impl ExactSizeIterator<Item = [Vec3<T>; 3]> + '_ {
        (0..self.faces.len()).map(|f| self.triangle(f))
    }

    pub fn face_area(&self, face: usize) -> T {
        let [a, b, c] = self.triangle(face);
        triangle_area(a, b, c)
    }

    pub fn min_face_area(&self) -> T {
        (0..self.face_count())
            .map(|f| self.face_area(f))
            .fold(T::infinity(), T::min)
    }

    pub fn bounding_box(&self) -> Aabb<T> {
        Aabb::from_points(self.faces.iter().flatten().map(|&i| self.vertices[i as usize]))
    }

    /// Applies a rigid motion; connectivity is unchanged and normals are recomputed.
    pub fn transformed(&self, t: &RigidTransform<T>) -> Self {
        let vertices: Vec<_> = self.vertices.iter().map(|&v| t.apply_point(v)).collect();
        let normals = self
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| vertices[i as usize]);
                triangle_cross(a, b, c).normalize()
            })
            .collect();
        Self {
            vertices,
            faces: self.faces.clone(),
            normals,
        }
    }

    /// Concatenates meshes into one soup. Face order follows the input order.
    pub fn merge<'a, I>(meshes: I) -> Result<Self, MeshError>
    where
        I: IntoIterator<Item = &'a TriangleMesh<T>>,
    {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        let mut normals = Vec::new();
        for m in meshes {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            faces.extend(m.faces.iter().map(|f| f.map(|i| i + base)));
            normals.extend_from_slice(&m.normals);
        }
        if faces.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        Ok(Self {
            vertices,
            faces,
            normals,
        })
    }
}

/// Applies `t` to every vertex of `mesh`.
pub fn apply_transform<T: Scalar>(mesh: &TriangleMesh<T>, t: &RigidTransform<T>) -> TriangleMesh<T> {
    mesh.transformed(t)
}

fn check_indices(face: usize, f: &[u32; 3], vertex_count: usize) -> Result<(), MeshError> {
    for &index in f {
        if index as usize >= vertex_count {
            return Err(MeshError::IndexOutOfRange {
                face,
                index,
                vertex_count,
            });
        }
    }
    if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
        return Err(MeshError::RepeatedIndex { face });
    }
    Ok(())
}
