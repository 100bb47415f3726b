//! Built-in corpus of example systems and mappings, and file loading.
//!
//! The corpus JSON files are embedded at build time. Setting `ACX_CORPUS`
//! to a directory makes `{dir}/{id}.json` take precedence over the
//! embedded copy, and makes any other file in it addressable by id.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;

use crate::error::Error;
use crate::mapping::{load_mapping, MappingDef, RawMapping};
use crate::system::SystemDef;

pub const CORPUS_ENV: &str = "ACX_CORPUS";

const SYSTEMS: [(&str, &str, &str); 3] = [
    ("acl", include_str!("../corpus/acl.json"), "access control list"),
    ("rbac", include_str!("../corpus/rbac.json"), "role-based access control with a role per user"),
    ("acl-transfer", include_str!("../corpus/acl-transfer.json"), "access control list with transfer"),
];

const MAPPINGS: [(&str, &str); 4] = [
    ("acl-to-rbac", include_str!("../corpus/acl-to-rbac.json")),
    ("identity-acl", include_str!("../corpus/identity-acl.json")),
    ("acl-transfer-clean", include_str!("../corpus/acl-transfer-clean.json")),
    ("acl-transfer-contaminating", include_str!("../corpus/acl-transfer-contaminating.json")),
];

/// A corpus system with its provenance note.
#[derive(Clone, Debug)]
pub struct CatalogSystem {
    pub id: String,
    pub system: SystemDef,
    pub description: String,
    pub citation: String,
}

pub fn system_ids() -> Vec<&'static str> {
    SYSTEMS.iter().map(|(id, ..)| *id).collect()
}

pub fn mapping_ids() -> Vec<&'static str> {
    MAPPINGS.iter().map(|(id, _)| *id).collect()
}

pub fn corpus_dir() -> Option<PathBuf> {
    std::env::var_os(CORPUS_ENV).map(PathBuf::from)
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// JSON text of a corpus document, preferring the override directory.
fn corpus_text(id: &str, embedded: Option<&'static str>) -> Result<String, Error> {
    if let Some(dir) = corpus_dir() {
        let p = dir.join(format!("{id}.json"));
        if p.is_file() {
            return read(&p);
        }
    }
    embedded.map(str::to_string).ok_or_else(|| Error::UnknownId(id.to_string()))
}

pub fn builtin_system(id: &str) -> Result<SystemDef, Error> {
    let embedded = SYSTEMS.iter().find(|(i, ..)| *i == id).map(|(_, text, _)| *text);
    SystemDef::from_json_str(&corpus_text(id, embedded)?, id)
}

pub fn builtin_mapping(id: &str) -> Result<MappingDef, Error> {
    let embedded = MAPPINGS.iter().find(|(i, _)| *i == id).map(|(_, text)| *text);
    let raw: RawMapping = serde_json::from_str(&corpus_text(id, embedded)?)?;
    let mut m = resolve_mapping(&raw, None)?;
    m.set_name(id);
    Ok(m)
}

pub fn catalog_systems() -> Vec<CatalogSystem> {
    SYSTEMS
        .iter()
        .map(|(id, _, note)| {
            let system = builtin_system(id).expect("corpus systems are valid");
            CatalogSystem {
                id: id.to_string(),
                description: system.description().unwrap_or(note).to_string(),
                citation: format!("worked example: {note}"),
                system,
            }
        })
        .collect()
}

/// Loads a system named by a mapping: a sibling file `{dir}/{name}` or
/// `{dir}/{name}.json` if present, else a corpus id.
fn resolve_system(name: &str, dir: Option<&Path>) -> Result<SystemDef, Error> {
    if let Some(dir) = dir {
        for candidate in [dir.join(name), dir.join(format!("{name}.json"))] {
            if candidate.is_file() {
                return load_system_file(&candidate);
            }
        }
    }
    let id = name.strip_suffix(".json").unwrap_or(name);
    builtin_system(id)
}

pub fn resolve_mapping(raw: &RawMapping, dir: Option<&Path>) -> Result<MappingDef, Error> {
    let src = Arc::new(resolve_system(&raw.source, dir)?);
    let tgt = if raw.target == raw.source { src.clone() } else { Arc::new(resolve_system(&raw.target, dir)?) };
    Ok(load_mapping(raw, src, tgt)?)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads a file, falling back to the corpus document with the same stem
/// when the path does not exist.
fn read_or_corpus(path: &Path) -> Result<(String, Option<PathBuf>), Error> {
    if path.is_file() {
        return Ok((read(path)?, path.parent().map(Path::to_path_buf)));
    }
    let id = stem(path);
    let embedded = SYSTEMS
        .iter()
        .map(|(i, t, _)| (*i, *t))
        .chain(MAPPINGS.iter().copied())
        .find(|(i, _)| *i == id)
        .map(|(_, t)| t);
    match corpus_text(&id, embedded) {
        Ok(text) => Ok((text, None)),
        Err(Error::UnknownId(_)) => Err(Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or corpus id"),
        }),
        Err(e) => Err(e),
    }
}

pub fn load_system_file(path: &Path) -> Result<SystemDef, Error> {
    let (text, _) = read_or_corpus(path)?;
    SystemDef::from_json_str(&text, &stem(path))
}

pub fn load_mapping_file(path: &Path) -> Result<MappingDef, Error> {
    let (text, dir) = read_or_corpus(path)?;
    let raw: RawMapping = serde_json::from_str(&text)?;
    let mut m = resolve_mapping(&raw, dir.as_deref())?;
    m.set_name(&stem(path));
    Ok(m)
}

/// A loaded input file.
#[derive(Clone, Debug)]
pub enum Document {
    System(SystemDef),
    Mapping(MappingDef),
}

/// Loads a system or mapping file; mappings are recognised by their
/// `source` and `target` fields.
pub fn load_document(path: &Path) -> Result<Document, Error> {
    let (text, _) = read_or_corpus(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let is_mapping = v.get("source").is_some() && v.get("target").is_some();
    if is_mapping {
        load_mapping_file(path).map(Document::Mapping)
    } else {
        load_system_file(path).map(Document::System)
    }
}
