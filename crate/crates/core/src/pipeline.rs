//! Seed → baseline → implant, shared by the command line and the service.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::baseline::{compute_baseline, make_seed_frame, Baseline, BaselineError, SeedFrame};
use crate::catalog::{Catalog, CatalogError};
use crate::implant::{generate_implant, CanonicalRings, Implant, ImplantError};
use crate::index::SpatialIndex;
use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Implant(#[from] ImplantError),
}

/// Loaded anatomy plus its index.
#[derive(Clone, Debug)]
pub struct Anatomy<T> {
    pub mesh: TriangleMesh<T>,
    pub index: SpatialIndex<T>,
}

impl<T: Scalar> Anatomy<T> {
    pub fn new(mesh: TriangleMesh<T>) -> Result<Self, crate::mesh::MeshError> {
        let index = SpatialIndex::build(&mesh)?;
        Ok(Self { mesh, index })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanRequest<T> {
    pub click: Vec3<T>,
    pub wheel_angle: T,
    pub model_id: String,
    pub step: T,
}

#[derive(Clone, Debug)]
pub struct Plan<T> {
    pub frame: SeedFrame<T>,
    pub baseline: Baseline<T>,
    pub implant: Implant<T>,
    pub elapsed_ms: f64,
}

/// Summary printed by `plan --report`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanReport {
    pub point_count: usize,
    pub truncated: [bool; 2],
    pub ring_count: usize,
    pub triangle_count: usize,
    pub span_mm: f64,
    pub elapsed_ms: f64,
}

impl<T: Scalar> Plan<T> {
    pub fn report(&self) -> PlanReport {
        PlanReport {
            point_count: self.baseline.len(),
            truncated: [self.baseline.truncated.0, self.baseline.truncated.1],
            ring_count: self.implant.placements.len(),
            triangle_count: self.implant.mesh.face_count(),
            span_mm: self.baseline.arc_length().as_f64(),
            elapsed_ms: self.elapsed_ms,
        }
    }
}

/// Frame and baseline only.
pub fn seed<T: Scalar>(
    anatomy: &Anatomy<T>,
    catalog: &Catalog<T>,
    req: &PlanRequest<T>,
) -> Result<(SeedFrame<T>, Baseline<T>), PlanError> {
    let model = catalog.find(&req.model_id)?;
    let frame = make_seed_frame(&anatomy.index, &anatomy.mesh, req.click, req.wheel_angle)?;
    let baseline = compute_baseline(&anatomy.index, &frame, model, req.step)?;
    Ok((frame, baseline))
}

pub fn plan<T: Scalar>(anatomy: &Anatomy<T>, catalog: &Catalog<T>, req: &PlanRequest<T>) -> Result<Plan<T>, PlanError> {
    let start = Instant::now();
    let (frame, baseline) = seed(anatomy, catalog, req)?;
    let implant = generate_implant(&baseline, catalog.find(&req.model_id)?, &CanonicalRings)?;
    Ok(Plan {
        frame,
        baseline,
        implant,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
