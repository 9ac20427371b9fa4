//! Surface-conforming miniplate planning.
//!
//! Every geometric type is generic over [`scalar::Scalar`] (`f64` or `f32`);
//! the aliases below fix it to `f64`, which is what the planner uses.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod catalog;
pub mod distance;
pub mod implant;
pub mod index;
pub mod math;
pub mod mesh;
pub mod pipeline;
pub mod raycast;
pub mod ring;
pub mod scalar;
pub mod session;
pub mod stl;
pub mod surfaces;

pub use scalar::Scalar;

pub type Vec3 = math::Vec3<f64>;
pub type RigidTransform = math::RigidTransform<f64>;
pub type Mesh = mesh::TriangleMesh<f64>;
pub type Index = index::SpatialIndex<f64>;
pub type Ray = raycast::Ray<f64>;
pub type Hit = raycast::Hit<f64>;
pub type SeedFrame = baseline::SeedFrame<f64>;
pub type BaselinePoint = baseline::BaselinePoint<f64>;
pub type Baseline = baseline::Baseline<f64>;
pub type RingSpec = catalog::RingSpec<f64>;
pub type PlateModel = catalog::PlateModel<f64>;
pub type Catalog = catalog::Catalog<f64>;
pub type RingMesh = ring::RingMesh<f64>;
pub type RingPlacement = implant::RingPlacement<f64>;
pub type BridgeSection = implant::BridgeSection<f64>;
pub type Implant = implant::Implant<f64>;
pub type Session = session::Session<f64>;
pub type Anatomy = pipeline::Anatomy<f64>;
pub type PlanRequest = pipeline::PlanRequest<f64>;
pub type Plan = pipeline::Plan<f64>;
