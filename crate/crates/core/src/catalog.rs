//! Miniplate models: ring specifications, bar gaps and overall lengths.
//!
//! Three models of the Modus 2.0 series are built in. Only their overall
//! lengths and ring counts are published; ring and bar dimensions are
//! placeholders in the same size class and can be overridden with a catalog
//! file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub const CATALOG_VERSION: u32 = 1;

/// Default ring tessellation (segments per full circle).
pub const DEFAULT_SEGMENTS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("malformed catalog: {0}")]
    Malformed(String),
    #[error("model {model_id}: {reason}")]
    InvariantViolation { model_id: String, reason: String },
    #[error("unknown model `{requested}`; catalog has: {}", available.join(", "))]
    UnknownModel {
        requested: String,
        available: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingKind {
    /// One flat attachment side.
    End,
    /// Two opposite flat attachment sides.
    Middle,
}

impl RingKind {
    pub fn flat_sides(self) -> usize {
        match self {
            RingKind::End => 1,
            RingKind::Middle => 2,
        }
    }
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RingSpec<T> {
    pub kind: RingKind,
    #[serde(rename = "outer_radius_mm")]
    pub outer_radius: T,
    #[serde(rename = "hole_radius_mm")]
    pub hole_radius: T,
    #[serde(rename = "thickness_mm")]
    pub thickness: T,
    #[serde(default = "default_segments")]
    pub segments: usize,
}

impl<T: Scalar> RingSpec<T> {
    pub fn flat_sides(&self) -> usize {
        self.kind.flat_sides()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.hole_radius > T::zero() && self.hole_radius < self.outer_radius) {
            return Err(format!(
                "ring hole radius {} must be positive and below outer radius {}",
                self.hole_radius, self.outer_radius
            ));
        }
        if !(self.thickness > T::zero()) {
            return Err(format!("ring thickness {} must be positive", self.thickness));
        }
        if self.segments < 8 {
            return Err(format!("ring tessellation {} is below 8 segments", self.segments));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlateModel<T> {
    pub id: String,
    /// Outer edge to outer edge (mm).
    #[serde(rename = "overall_length_mm")]
    pub overall_length: T,
    pub rings: Vec<RingSpec<T>>,
    /// Centre-to-centre gaps between consecutive rings (mm).
    #[serde(rename = "bar_lengths_mm")]
    pub bar_lengths: Vec<T>,
    #[serde(rename = "bar_width_mm")]
    pub bar_width: T,
    #[serde(rename = "bar_thickness_mm")]
    pub bar_thickness: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<T: Scalar> PlateModel<T> {
    pub fn ring_count(&self) -> usize {
        self.rings.len()
    }

    /// Distance from the first to the last ring centre.
    pub fn center_span(&self) -> T {
        self.bar_lengths.iter().copied().sum()
    }

    /// Checks the structural invariants; the error names the offending model.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let fail = |reason: String| CatalogError::InvariantViolation {
            model_id: self.id.clone(),
            reason,
        };
        if self.rings.len() < 2 {
            return Err(fail(format!("needs at least two rings, has {}", self.rings.len())));
        }
        if self.bar_lengths.len() + 1 != self.rings.len() {
            return Err(fail(format!(
                "{} rings need {} bar lengths, found {}",
                self.rings.len(),
                self.rings.len() - 1,
                self.bar_lengths.len()
            )));
        }
        let last = self.rings.len() - 1;
        for (i, ring) in self.rings.iter().enumerate() {
            let expected = if i == 0 || i == last { RingKind::End } else { RingKind::Middle };
            if ring.kind != expected {
                return Err(fail(format!("ring {i} must be {expected:?}, is {:?}", ring.kind)));
            }
            ring.validate().map_err(|r| fail(format!("ring {i}: {r}")))?;
            if self.bar_thickness > ring.thickness {
                return Err(fail(format!(
                    "bar thickness {} exceeds ring {i} thickness {}",
                    self.bar_thickness, ring.thickness
                )));
            }
        }
        if let Some(b) = self.bar_lengths.iter().find(|b| !(**b > T::zero())) {
            return Err(fail(format!("bar length {b} must be positive")));
        }
        if !(self.bar_width > T::zero() && self.bar_thickness > T::zero()) {
            return Err(fail("bar cross-section must be positive".into()));
        }
        let tips = self.rings[0].outer_radius + self.rings[last].outer_radius;
        let implied = self.center_span() + tips;
        if (implied - self.overall_length).abs() > T::lit(1e-9) {
            return Err(fail(format!(
                "overall length {} differs from bars + end radii = {implied}",
                self.overall_length
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Catalog<T> {
    pub catalog_version: u32,
    pub models: Vec<PlateModel<T>>,
}

impl<T: Scalar> Catalog<T> {
    pub fn find(&self, id: &str) -> Result<&PlateModel<T>, CatalogError> {
        self.models.iter().find(|m| m.id == id).ok_or_else(|| CatalogError::UnknownModel {
            requested: id.to_string(),
            available: self.ids(),
        })
    }

    pub fn ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.id.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }
}

impl<T: Scalar> Default for Catalog<T> {
    fn default() -> Self {
        Self {
            catalog_version: CATALOG_VERSION,
            models: builtin_models(),
        }
    }
}

/// Placeholder ring and bar dimensions (mm).
pub mod defaults {
    pub const OUTER_RADIUS: f64 = 2.5;
    pub const HOLE_RADIUS: f64 = 1.0;
    pub const THICKNESS: f64 = 1.0;
    pub const BAR_WIDTH: f64 = 2.0;
    pub const BAR_THICKNESS: f64 = 1.0;
}

fn ring<T: Scalar>(kind: RingKind) -> RingSpec<T> {
    RingSpec {
        kind,
        outer_radius: T::lit(defaults::OUTER_RADIUS),
        hole_radius: T::lit(defaults::HOLE_RADIUS),
        thickness: T::lit(defaults::THICKNESS),
        segments: DEFAULT_SEGMENTS,
    }
}

fn straight_plate<T: Scalar>(id: &str, overall: f64, bars: &[f64], note: Option<&str>) -> PlateModel<T> {
    let mut rings = vec![ring(RingKind::End)];
    rings.extend((1..bars.len()).map(|_| ring(RingKind::Middle)));
    rings.push(ring(RingKind::End));
    PlateModel {
        id: id.to_string(),
        overall_length: T::lit(overall),
        rings,
        bar_lengths: bars.iter().map(|&b| T::lit(b)).collect(),
        bar_width: T::lit(defaults::BAR_WIDTH),
        bar_thickness: T::lit(defaults::BAR_THICKNESS),
        note: note.map(str::to_string),
    }
}

fn builtin_models<T: Scalar>() -> Vec<PlateModel<T>> {
    vec![
        straight_plate("M-4138", 23.0, &[6.0, 6.0, 6.0], None),
        straight_plate(
            "M-4320",
            29.0,
            &[6.0, 12.0, 6.0],
            Some("published as M-4138 with an extended 9 mm bar; the centre gap here grows by the 6 mm overall-length difference"),
        ),
        straight_plate("M-4322", 35.0, &[6.0, 6.0, 6.0, 6.0, 6.0], None),
    ]
}

/// The built-in catalog.
pub fn catalog<T: Scalar>() -> Vec<PlateModel<T>> {
    builtin_models()
}

/// Parses and validates a catalog file.
pub fn load_catalog<T: Scalar>(bytes: &[u8]) -> Result<Catalog<T>, CatalogError> {
    let parsed: Catalog<T> = serde_json::from_slice(bytes).map_err(|e| CatalogError::Malformed(e.to_string()))?;
    if parsed.catalog_version != CATALOG_VERSION {
        return Err(CatalogError::Malformed(format!(
            "unsupported catalog_version {} (expected {CATALOG_VERSION})",
            parsed.catalog_version
        )));
    }
    for m in &parsed.models {
        m.validate()?;
    }
    Ok(parsed)
}
