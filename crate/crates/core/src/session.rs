//! Planning session: saved implants plus the one being worked on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::implant::Implant;
use crate::mesh::TriangleMesh;
use crate::scalar::Scalar;
use crate::stl::{save_stl, StlFormat};

pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("no current implant to save")]
    NothingToSave,
    #[error("session has no implants to export")]
    EmptySession,
    #[error("malformed session: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Session<T> {
    pub session_version: u32,
    pub mesh_ref: String,
    saved: Vec<Implant<T>>,
    pub current: Option<Implant<T>>,
}

/// Result of [`Session::export_all`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Export {
    /// All implants as one facet soup.
    pub combined: Vec<u8>,
    /// One file per implant, saved first, current last.
    pub files: Vec<(String, Vec<u8>)>,
}

impl<T: Scalar> Session<T> {
    pub fn new(mesh_ref: impl Into<String>) -> Self {
        Self {
            session_version: SESSION_VERSION,
            mesh_ref: mesh_ref.into(),
            saved: Vec::new(),
            current: None,
        }
    }

    pub fn saved(&self) -> &[Implant<T>] {
        &self.saved
    }

    /// Replaces the in-progress implant.
    pub fn set_current(&mut self, implant: Implant<T>) {
        self.current = Some(implant);
    }

    pub fn save_current(&mut self) -> Result<(), SessionError> {
        let implant = self.current.take().ok_or(SessionError::NothingToSave)?;
        self.saved.push(implant);
        Ok(())
    }

    /// Saved implants followed by the current one.
    pub fn all_implants(&self) -> impl Iterator<Item = &Implant<T>> {
        self.saved.iter().chain(self.current.as_ref())
    }

    pub fn export_all(&self, format: StlFormat) -> Result<Export, SessionError> {
        let implants: Vec<_> = self.all_implants().collect();
        if implants.is_empty() {
            return Err(SessionError::EmptySession);
        }
        let merged = TriangleMesh::merge(implants.iter().map(|i| &i.mesh)).map_err(|e| SessionError::Malformed(e.to_string()))?;
        let files = implants
            .iter()
            .enumerate()
            .map(|(k, i)| (export_file_name(k + 1, &i.model_id), save_stl(&i.mesh, format)))
            .collect();
        Ok(Export {
            combined: save_stl(&merged, format),
            files,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("session serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let s: Self = serde_json::from_str(text).map_err(|e| SessionError::Malformed(e.to_string()))?;
        if s.session_version != SESSION_VERSION {
            return Err(SessionError::Malformed(format!(
                "unsupported session_version {} (expected {SESSION_VERSION})",
                s.session_version
            )));
        }
        Ok(s)
    }
}

/// Per-implant export name; `k` counts from 1.
pub fn export_file_name(k: usize, model_id: &str) -> String {
    format!("implant_{k}_{model_id}.stl")
}
