//! JSON file formats for systems, spectrum systems and intertwiner matrices.
//!
//! Complex numbers are `[re, im]` pairs. A block of `M_n` is a flat,
//! row-major list of `n²` pairs and an algebra element is a list of blocks.
//! Point, block and map indices are 1-based on disk.

use std::path::Path;
use std::sync::Arc;

use mvdyn_core::algebra::{
    AlgebraElement, AlgebraError, BlockAlgebra, MultivariableSystem, RepRef, Representation, StarIsomorphism,
};
use mvdyn_core::intertwiner::IntertwinerMatrix;
use mvdyn_core::linalg::{CMat, C64};
use mvdyn_core::matrix::AlgebraMatrix;
use mvdyn_core::spectrum::SpectrumDynamicalSystem;
use mvdyn_core::tol::Tolerances;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

pub type Pair = [f64; 2];
pub type BlockJson = Vec<Pair>;
pub type ElementJson = Vec<BlockJson>;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at `{field}` (line {line}, column {column}): {message}")]
    Schema {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version {0}; this build reads version {SCHEMA_VERSION}")]
    Version(u32),
    #[error("invariant violation at `{field}`: {message}")]
    Invariant { field: String, message: String },
    #[error("unrecognised document: {0}")]
    UnknownDocument(String),
}

pub(crate) fn invariant(field: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Invariant {
        field: field.into(),
        message: message.into(),
    }
}

/// Names the tolerance behind an algebra error.
pub(crate) fn algebra_invariant(field: impl Into<String>, e: AlgebraError) -> FormatError {
    let message = match &e {
        AlgebraError::NotUnitary { .. } => format!("τ_unit violation: {e}"),
        AlgebraError::NotAHomomorphism { .. } => format!("τ_hom violation: {e}"),
        _ => e.to_string(),
    };
    invariant(field, message)
}

fn one() -> u32 {
    SCHEMA_VERSION
}

fn check_version(v: u32) -> Result<(), FormatError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(FormatError::Version(v))
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Deserializes with the failing field path and source position attached.
pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let out: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        FormatError::Schema {
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| FormatError::Schema {
        field: ".".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(out)
}

/// Canonical text: keys sorted, objects indented, arrays without objects
/// kept on one line, floats in shortest round-trip form, trailing newline.
pub fn to_canonical<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable document");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

fn has_object(v: &Value) -> bool {
    match v {
        Value::Object(_) => true,
        Value::Array(items) => items.iter().any(has_object),
        _ => false,
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', 2 * n));
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(k).expect("string key"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push('}');
        }
        Value::Array(items) if has_object(v) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push(']');
        }
        _ => out.push_str(&serde_json::to_string(v).expect("plain value")),
    }
}

pub fn block_to_json(m: &CMat) -> BlockJson {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    out
}

pub fn block_from_json(b: &[Pair], n: usize, field: &str) -> Result<CMat, FormatError> {
    if b.len() != n * n {
        return Err(invariant(
            field,
            format!("expected {} entries for a {n}x{n} block, found {}", n * n, b.len()),
        ));
    }
    Ok(CMat::from_fn(n, n, |r, c| C64::new(b[r * n + c][0], b[r * n + c][1])))
}

pub fn element_to_json(e: &AlgebraElement) -> ElementJson {
    e.blocks().iter().map(block_to_json).collect()
}

pub fn element_from_json(e: &[BlockJson], alg: &BlockAlgebra, field: &str) -> Result<AlgebraElement, FormatError> {
    if e.len() != alg.num_blocks() {
        return Err(invariant(
            field,
            format!("expected {} blocks, found {}", alg.num_blocks(), e.len()),
        ));
    }
    let blocks = e
        .iter()
        .zip(alg.block_sizes())
        .enumerate()
        .map(|(k, (b, &n))| block_from_json(b, n, &format!("{field}[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    AlgebraElement::new(alg, blocks).map_err(|e| algebra_invariant(field, e))
}

pub fn algebra_from_json(blocks: &[usize], field: &str) -> Result<BlockAlgebra, FormatError> {
    BlockAlgebra::new(blocks.to_vec()).map_err(|e| algebra_invariant(field, e))
}

/// 1-based permutation of `0..len` on disk.
pub fn perm_to_json(p: &[usize]) -> Vec<usize> {
    p.iter().map(|&x| x + 1).collect()
}

pub fn perm_from_json(p: &[usize], len: usize, field: &str) -> Result<Vec<usize>, FormatError> {
    let mut seen = vec![false; len];
    if p.len() != len {
        return Err(invariant(field, format!("expected {len} entries, found {}", p.len())));
    }
    p.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x == 0 || x > len || std::mem::replace(&mut seen[x - 1], true) {
                Err(invariant(
                    format!("{field}[{i}]"),
                    format!("{x} is not a fresh index in 1..={len}"),
                ))
            } else {
                Ok(x - 1)
            }
        })
        .collect()
}

/// `φ(b)_k = u_k b_{σ(k)} u_k*`, with `perm[k] = σ(k)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MorphismJson {
    pub perm: Vec<usize>,
    pub unitaries: Vec<BlockJson>,
}

impl MorphismJson {
    pub fn from_morphism(phi: &StarIsomorphism) -> Self {
        MorphismJson {
            perm: perm_to_json(phi.perm()),
            unitaries: phi.unitaries().iter().map(block_to_json).collect(),
        }
    }

    pub fn to_morphism(
        &self,
        source: &BlockAlgebra,
        target: &BlockAlgebra,
        tol: &Tolerances,
        field: &str,
    ) -> Result<StarIsomorphism, FormatError> {
        let m = target.num_blocks();
        let perm = perm_from_json(&self.perm, m, &format!("{field}.perm"))?;
        if self.unitaries.len() != m {
            return Err(invariant(
                format!("{field}.unitaries"),
                format!("expected {m} unitaries, found {}", self.unitaries.len()),
            ));
        }
        let unitaries = self
            .unitaries
            .iter()
            .zip(target.block_sizes())
            .enumerate()
            .map(|(k, (u, &n))| block_from_json(u, n, &format!("{field}.unitaries[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        StarIsomorphism::new(source.clone(), target.clone(), perm, unitaries, tol)
            .map_err(|e| algebra_invariant(field, e))
    }
}

/// A morphism between possibly different algebras.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IsomorphismJson {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub perm: Vec<usize>,
    pub unitaries: Vec<BlockJson>,
}

impl IsomorphismJson {
    pub fn from_morphism(phi: &StarIsomorphism) -> Self {
        let m = MorphismJson::from_morphism(phi);
        IsomorphismJson {
            source: phi.source().block_sizes().to_vec(),
            target: phi.target().block_sizes().to_vec(),
            perm: m.perm,
            unitaries: m.unitaries,
        }
    }

    pub fn to_morphism(&self, tol: &Tolerances, field: &str) -> Result<StarIsomorphism, FormatError> {
        let source = algebra_from_json(&self.source, &format!("{field}.source"))?;
        let target = algebra_from_json(&self.target, &format!("{field}.target"))?;
        MorphismJson {
            perm: self.perm.clone(),
            unitaries: self.unitaries.clone(),
        }
        .to_morphism(&source, &target, tol, field)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default = "one")]
    pub version: u32,
    pub blocks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
    pub maps: Vec<MorphismJson>,
}

impl SystemFile {
    pub fn from_system(sys: &MultivariableSystem) -> Self {
        SystemFile {
            version: SCHEMA_VERSION,
            blocks: sys.algebra().block_sizes().to_vec(),
            arity: Some(sys.arity()),
            maps: sys.maps().iter().map(MorphismJson::from_morphism).collect(),
        }
    }

    /// Rebuilds the system; every unitary is re-checked against `τ_unit`.
    pub fn to_system(&self, tol: &Tolerances) -> Result<MultivariableSystem, FormatError> {
        check_version(self.version)?;
        let alg = algebra_from_json(&self.blocks, "blocks")?;
        if let Some(n) = self.arity {
            if n != self.maps.len() {
                return Err(invariant("arity", format!("declared {n} maps, found {}", self.maps.len())));
            }
        }
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_morphism(&alg, &alg, tol, &format!("maps[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        MultivariableSystem::new(alg, maps).map_err(|e| algebra_invariant("maps", e))
    }
}

pub fn parse_system_str(text: &str, tol: &Tolerances) -> Result<MultivariableSystem, FormatError> {
    from_str::<SystemFile>(text)?.to_system(tol)
}

pub fn parse_system(path: &Path, tol: &Tolerances) -> Result<MultivariableSystem, FormatError> {
    parse_system_str(&read_text(path)?, tol)
}

pub fn emit_system(sys: &MultivariableSystem) -> String {
    to_canonical(&SystemFile::from_system(sys))
}

/// `emit ∘ parse`.
pub fn canonicalize_system(text: &str, tol: &Tolerances) -> Result<String, FormatError> {
    Ok(emit_system(&parse_system_str(text, tol)?))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumFile {
    #[serde(default = "one")]
    pub version: u32,
    pub labels: Vec<usize>,
    pub maps: Vec<Vec<usize>>,
}

impl SpectrumFile {
    pub fn from_spectrum(s: &SpectrumDynamicalSystem) -> Self {
        SpectrumFile {
            version: SCHEMA_VERSION,
            labels: s.labels().to_vec(),
            maps: s.maps().iter().map(|m| perm_to_json(m)).collect(),
        }
    }

    pub fn to_spectrum(&self) -> Result<SpectrumDynamicalSystem, FormatError> {
        check_version(self.version)?;
        let m = self.labels.len();
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, p)| perm_from_json(p, m, &format!("maps[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        SpectrumDynamicalSystem::new(self.labels.clone(), maps).map_err(|e| invariant("maps", e.to_string()))
    }
}

/// A representation given by the images of the matrix units of its source,
/// ordered by block, then row, then column.
pub type RepresentationJson = Vec<ElementJson>;

fn rep_to_json(r: &Representation) -> RepresentationJson {
    r.images().iter().map(element_to_json).collect()
}

fn rep_from_json(
    r: &RepresentationJson,
    source: &BlockAlgebra,
    target: &BlockAlgebra,
    tol: &Tolerances,
    field: &str,
) -> Result<RepRef, FormatError> {
    let images = r
        .iter()
        .enumerate()
        .map(|(g, e)| element_from_json(e, target, &format!("{field}[{g}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Representation::new_checked(source.clone(), target.clone(), images, tol)
        .map(Arc::new)
        .map_err(|e| algebra_invariant(field, e))
}

/// `[c_ij]` over `target`, with row family `φ_i` and column family `ψ_j`
/// from `source`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntertwinerFile {
    #[serde(default = "one")]
    pub version: u32,
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub row_reps: Vec<RepresentationJson>,
    pub col_reps: Vec<RepresentationJson>,
    pub entries: Vec<Vec<ElementJson>>,
}

impl IntertwinerFile {
    pub fn from_matrix(m: &IntertwinerMatrix) -> Self {
        let alg = m.matrix().algebra();
        let source = m
            .row_reps()
            .iter()
            .chain(m.col_reps())
            .next()
            .map(|r| r.source().block_sizes().to_vec())
            .unwrap_or_else(|| alg.block_sizes().to_vec());
        IntertwinerFile {
            version: SCHEMA_VERSION,
            source,
            target: alg.block_sizes().to_vec(),
            row_reps: m.row_reps().iter().map(|r| rep_to_json(r)).collect(),
            col_reps: m.col_reps().iter().map(|r| rep_to_json(r)).collect(),
            entries: (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| element_to_json(m.entry(i, j))).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self, tol: &Tolerances) -> Result<IntertwinerMatrix, FormatError> {
        check_version(self.version)?;
        let source = algebra_from_json(&self.source, "source")?;
        let target = algebra_from_json(&self.target, "target")?;
        let rows = self
            .row_reps
            .iter()
            .enumerate()
            .map(|(i, r)| rep_from_json(r, &source, &target, tol, &format!("row_reps[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let cols = self
            .col_reps
            .iter()
            .enumerate()
            .map(|(j, r)| rep_from_json(r, &source, &target, tol, &format!("col_reps[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let m = matrix_from_json(&self.entries, &target, "entries")?;
        if m.rows() != rows.len() || m.cols() != cols.len() {
            return Err(invariant(
                "entries",
                format!(
                    "{}x{} entries for {} row and {} column representations",
                    m.rows(),
                    m.cols(),
                    rows.len(),
                    cols.len()
                ),
            ));
        }
        IntertwinerMatrix::new(m, rows, cols).map_err(|e| invariant("entries", e.to_string()))
    }
}

pub fn matrix_to_json(m: &AlgebraMatrix) -> Vec<Vec<ElementJson>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| element_to_json(m.get(i, j))).collect())
        .collect()
}

pub fn matrix_from_json(
    rows: &[Vec<ElementJson>],
    alg: &BlockAlgebra,
    field: &str,
) -> Result<AlgebraMatrix, FormatError> {
    let n = rows.first().map_or(0, Vec::len);
    let mut entries = Vec::with_capacity(rows.len() * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(invariant(
                format!("{field}[{i}]"),
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        for (j, e) in row.iter().enumerate() {
            entries.push(element_from_json(e, alg, &format!("{field}[{i}][{j}]"))?);
        }
    }
    AlgebraMatrix::new(alg.clone(), rows.len(), n, entries).map_err(|e| algebra_invariant(field, e))
}

/// Which schema a JSON document follows, judged by its keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocumentKind {
    System,
    Spectrum,
    Intertwiner,
    Certificate,
}

pub fn document_kind(text: &str) -> Result<DocumentKind, FormatError> {
    let v: Value = from_str(text)?;
    let Value::Object(map) = v else {
        return Err(FormatError::UnknownDocument("top level is not an object".into()));
    };
    if map.contains_key("kind") {
        Ok(DocumentKind::Certificate)
    } else if map.contains_key("labels") {
        Ok(DocumentKind::Spectrum)
    } else if map.contains_key("entries") {
        Ok(DocumentKind::Intertwiner)
    } else if map.contains_key("blocks") {
        Ok(DocumentKind::System)
    } else {
        Err(FormatError::UnknownDocument(
            "expected one of the keys `kind`, `labels`, `entries`, `blocks`".into(),
        ))
    }
}

/// A spectrum system read from either a spectrum file or a system file.
pub fn parse_spectrum_or_system(text: &str, tol: &Tolerances) -> Result<SpectrumDynamicalSystem, FormatError> {
    match document_kind(text)? {
        DocumentKind::Spectrum => from_str::<SpectrumFile>(text)?.to_spectrum(),
        DocumentKind::System => Ok(SpectrumDynamicalSystem::from_system(&parse_system_str(text, tol)?)),
        other => Err(FormatError::UnknownDocument(format!(
            "expected a spectrum or system file, found {other:?}"
        ))),
    }
}
