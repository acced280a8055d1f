use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshParts};

pub const ARCHIVE_VERSION: &str = "meshnet/1";

#[derive(Serialize, Deserialize)]
struct Archive {
    version: String,
    mesh: MeshParts,
}

/// Pretty JSON with sorted keys and ascending ids; identical meshes give
/// identical text.
pub fn mesh_to_string(mesh: &Mesh) -> Result<String> {
    let archive = Archive {
        version: ARCHIVE_VERSION.to_string(),
        mesh: mesh.to_parts(),
    };
    // going through `Value` sorts every object's keys
    let value = serde_json::to_value(&archive).map_err(|e| Error::CorruptArchive(e.to_string()))?;
    let mut text =
        serde_json::to_string_pretty(&value).map_err(|e| Error::CorruptArchive(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn mesh_from_str(text: &str) -> Result<Mesh> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::CorruptArchive(e.to_string()))?;
    match value.get("version").and_then(serde_json::Value::as_str) {
        Some(ARCHIVE_VERSION) => {}
        Some(other) => return Err(Error::ArchiveVersionMismatch(other.to_string())),
        None => return Err(Error::CorruptArchive("missing version".into())),
    }
    let archive: Archive =
        serde_json::from_value(value).map_err(|e| Error::CorruptArchive(e.to_string()))?;
    Mesh::from_parts(archive.mesh)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh_to_string(mesh)?)?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    mesh_from_str(&fs::read_to_string(path)?)
}
