//! Self-describing JSON documents for problems and reference solutions.

use std::fs;
use std::io::Write;
use std::path::Path;

use dspdc_core::{GeneratedProblem, ReferenceSolution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, CliError, Result};

pub const PROBLEM_FORMAT: &str = "dspdc/problem";
pub const REFERENCE_FORMAT: &str = "dspdc/reference";
pub const FORMAT_VERSION: u32 = 1;

/// Dimensions repeated at the top of a problem file for readers that skip
/// the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub n: usize,
    pub p: usize,
    pub dual_dim: usize,
    pub primal_dim: usize,
}

impl Dimensions {
    pub fn of(g: &GeneratedProblem) -> Self {
        let p = &g.problem;
        Dimensions {
            n: p.n(),
            p: p.p(),
            dual_dim: p.dual_dim(),
            primal_dim: p.primal_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub format: String,
    pub version: u32,
    pub dimensions: Dimensions,
    pub problem: GeneratedProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDocument {
    pub format: String,
    pub version: u32,
    /// Cache key of the problem the reference belongs to.
    pub key: String,
    pub provenance: dspdc_core::Provenance,
    pub reference: ReferenceSolution,
}

fn check_header(format: &str, version: u32, want: &str) -> Result<()> {
    if format != want || version != FORMAT_VERSION {
        return Err(CliError::Config(format!(
            "expected a {want} v{FORMAT_VERSION} document, found {format} v{version}"
        )));
    }
    Ok(())
}

pub fn problem_document(g: &GeneratedProblem) -> ProblemDocument {
    ProblemDocument {
        format: PROBLEM_FORMAT.into(),
        version: FORMAT_VERSION,
        dimensions: Dimensions::of(g),
        problem: g.clone(),
    }
}

pub fn parse_problem(text: &str) -> Result<GeneratedProblem> {
    let doc: ProblemDocument = serde_json::from_str(text).map_err(json_err("problem document"))?;
    check_header(&doc.format, doc.version, PROBLEM_FORMAT)?;
    if doc.dimensions != Dimensions::of(&doc.problem) {
        return Err(CliError::Config("problem dimensions do not match the header".into()));
    }
    Ok(doc.problem)
}

pub fn read_problem(path: &Path) -> Result<GeneratedProblem> {
    parse_problem(&fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn write_problem(path: &Path, g: &GeneratedProblem) -> Result<()> {
    write_json_atomic(path, &problem_document(g))
}

pub fn read_reference(path: &Path) -> Result<ReferenceDocument> {
    let doc: ReferenceDocument = read_json(path)?;
    check_header(&doc.format, doc.version, REFERENCE_FORMAT)?;
    Ok(doc)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path.display().to_string()))
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path.display().to_string()))?;
    write_atomic(path, text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(tmp.path()))?;
    tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}
