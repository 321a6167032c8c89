//! Certificate files: a kind tag, the certificate payload, the residuals
//! measured when it was issued, and content hashes of the inputs it refers
//! to. Loading a certificate always re-verifies it against fresh inputs.

use std::collections::BTreeMap;

use mvdyn_core::algebra::{AlgebraElement, MultivariableSystem};
use mvdyn_core::deciders::{
    certify_unitary_equivalence, verify_outer_conjugacy, OuterConjugacyCertificate, OuterConjugacyReport,
    UnitaryEquivalenceCertificate, UnitaryEquivalenceReport,
};
use mvdyn_core::elimination::{verify_elimination_certificate, EliminationCertificate, ReplayReport, RowOp};
use mvdyn_core::hash::{hash_intertwiner_matrix, hash_system};
use mvdyn_core::intertwiner::IntertwinerMatrix;
use mvdyn_core::spectrum::{verify_piecewise_certificate, PiecewiseCertificate, SpectrumDynamicalSystem};
use mvdyn_core::tol::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::format::{
    element_from_json, element_to_json, from_str, invariant, matrix_from_json, matrix_to_json, perm_from_json,
    perm_to_json, ElementJson, FormatError, IsomorphismJson, SCHEMA_VERSION,
};

pub fn tool_version() -> String {
    format!("mvdyn {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Elimination,
    Outer,
    UnitaryEquivalence,
    Piecewise,
}

impl CertificateKind {
    /// Keys of `input_hashes`, in the order inputs are given on the command line.
    pub fn input_names(self) -> &'static [&'static str] {
        match self {
            CertificateKind::Elimination => &["matrix"],
            CertificateKind::Outer | CertificateKind::UnitaryEquivalence => &["a", "b"],
            CertificateKind::Piecewise => &["s", "t"],
        }
    }
}

fn one() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    #[serde(default = "one")]
    pub version: u32,
    pub kind: CertificateKind,
    pub tool_version: String,
    pub input_hashes: BTreeMap<String, String>,
    pub payload: Value,
    pub residuals: Value,
}

/// `row_target += multiplier · row_source`, rows 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowOpJson {
    target: usize,
    source: usize,
    multiplier: ElementJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EliminationPayload {
    rows: usize,
    cols: usize,
    col_perm: Vec<usize>,
    forward_ops: usize,
    row_ops: Vec<RowOpJson>,
    diagonal: Vec<ElementJson>,
    step_residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OuterPayload {
    gamma: IsomorphismJson,
    perm: Vec<usize>,
    unitaries: Vec<ElementJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitaryEquivalencePayload {
    gamma: IsomorphismJson,
    matrix: Vec<Vec<ElementJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecewisePayload {
    phi: Vec<usize>,
    assignment: Vec<Vec<usize>>,
}

pub fn replay_residuals(r: &ReplayReport) -> Value {
    json!({
        "replay_error": r.replay_error,
        "off_diagonal": r.off_diagonal,
        "diagonal_residual": r.diagonal_residual,
        "scale": r.scale,
    })
}

pub fn outer_residuals(r: &OuterConjugacyReport) -> Value {
    json!({ "unitarity": r.unitarity, "conjugation": r.conjugation })
}

pub fn unitary_equivalence_residuals(r: &UnitaryEquivalenceReport) -> Value {
    json!({
        "left_unitarity": r.left_unitarity,
        "right_unitarity": r.right_unitarity,
        "intertwining": r.intertwining,
    })
}

fn hashes(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable payload")
}

fn payload<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, FormatError> {
    from_str(&v.to_string()).map_err(|e| match e {
        FormatError::Schema { field, message, .. } => invariant(format!("payload.{field}"), message),
        other => other,
    })
}

/// The inputs a certificate is checked against.
pub enum Inputs<'a> {
    Matrix(&'a IntertwinerMatrix),
    Systems(&'a MultivariableSystem, &'a MultivariableSystem),
    Spectra(&'a SpectrumDynamicalSystem, &'a SpectrumDynamicalSystem),
}

impl Inputs<'_> {
    fn hashes(&self) -> Vec<String> {
        match self {
            Inputs::Matrix(m) => vec![hash_intertwiner_matrix(m)],
            Inputs::Systems(a, b) => vec![hash_system(a), hash_system(b)],
            Inputs::Spectra(s, t) => vec![s.content_hash(), t.content_hash()],
        }
    }
}

/// Outcome of re-verifying a certificate file.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub passes: bool,
    pub residuals: Value,
    /// Why the certificate was rejected, if it was.
    pub reason: Option<String>,
}

impl Verification {
    fn rejected(reason: String) -> Self {
        Verification {
            passes: false,
            residuals: Value::Null,
            reason: Some(reason),
        }
    }

    fn measured(passes: bool, residuals: Value) -> Self {
        Verification {
            passes,
            residuals,
            reason: (!passes).then(|| "residuals exceed the certificate tolerance".to_string()),
        }
    }
}

impl CertificateFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let c: CertificateFile = from_str(text)?;
        if c.version != SCHEMA_VERSION {
            return Err(FormatError::Version(c.version));
        }
        Ok(c)
    }

    pub fn elimination(cert: &EliminationCertificate, report: &ReplayReport) -> Self {
        let p = EliminationPayload {
            rows: cert.rows,
            cols: cert.cols,
            col_perm: perm_to_json(&cert.col_perm),
            forward_ops: cert.forward_ops,
            row_ops: cert
                .row_ops
                .iter()
                .map(|op| RowOpJson {
                    target: op.target + 1,
                    source: op.source + 1,
                    multiplier: element_to_json(&op.multiplier),
                })
                .collect(),
            diagonal: cert.diagonal.iter().map(element_to_json).collect(),
            step_residuals: cert.step_residuals.clone(),
        };
        CertificateFile {
            version: SCHEMA_VERSION,
            kind: CertificateKind::Elimination,
            tool_version: tool_version(),
            input_hashes: hashes(&[("matrix", cert.input_hash.clone())]),
            payload: to_value(&p),
            residuals: replay_residuals(report),
        }
    }

    pub fn outer(cert: &OuterConjugacyCertificate, a: &MultivariableSystem, b: &MultivariableSystem) -> Self {
        let p = OuterPayload {
            gamma: IsomorphismJson::from_morphism(&cert.gamma),
            perm: perm_to_json(&cert.perm),
            unitaries: cert.unitaries.iter().map(element_to_json).collect(),
        };
        CertificateFile {
            version: SCHEMA_VERSION,
            kind: CertificateKind::Outer,
            tool_version: tool_version(),
            input_hashes: hashes(&[("a", hash_system(a)), ("b", hash_system(b))]),
            payload: to_value(&p),
            residuals: outer_residuals(&cert.report),
        }
    }

    pub fn unitary_equivalence(
        cert: &UnitaryEquivalenceCertificate,
        a: &MultivariableSystem,
        b: &MultivariableSystem,
    ) -> Self {
        let p = UnitaryEquivalencePayload {
            gamma: IsomorphismJson::from_morphism(&cert.gamma),
            matrix: matrix_to_json(&cert.matrix),
        };
        CertificateFile {
            version: SCHEMA_VERSION,
            kind: CertificateKind::UnitaryEquivalence,
            tool_version: tool_version(),
            input_hashes: hashes(&[("a", hash_system(a)), ("b", hash_system(b))]),
            payload: to_value(&p),
            residuals: unitary_equivalence_residuals(&cert.report),
        }
    }

    pub fn piecewise(
        cert: &PiecewiseCertificate,
        s: &SpectrumDynamicalSystem,
        t: &SpectrumDynamicalSystem,
    ) -> Self {
        let p = PiecewisePayload {
            phi: perm_to_json(&cert.phi),
            assignment: cert.assignment.iter().map(|g| perm_to_json(g)).collect(),
        };
        CertificateFile {
            version: SCHEMA_VERSION,
            kind: CertificateKind::Piecewise,
            tool_version: tool_version(),
            input_hashes: hashes(&[("s", s.content_hash()), ("t", t.content_hash())]),
            payload: to_value(&p),
            residuals: json!({ "verified": verify_piecewise_certificate(cert, s, t) }),
        }
    }

    pub fn to_elimination(&self, m: &IntertwinerMatrix) -> Result<EliminationCertificate, FormatError> {
        let p: EliminationPayload = payload(&self.payload)?;
        let alg = m.matrix().algebra();
        let mut row_ops = Vec::with_capacity(p.row_ops.len());
        for (k, op) in p.row_ops.iter().enumerate() {
            let field = format!("payload.row_ops[{k}]");
            if op.target == 0 || op.source == 0 || op.target > p.rows || op.source > p.rows {
                return Err(invariant(field, "row index out of range"));
            }
            row_ops.push(RowOp {
                target: op.target - 1,
                source: op.source - 1,
                multiplier: element_from_json(&op.multiplier, alg, &format!("{field}.multiplier"))?,
            });
        }
        let diagonal = p
            .diagonal
            .iter()
            .enumerate()
            .map(|(i, e)| element_from_json(e, alg, &format!("payload.diagonal[{i}]")))
            .collect::<Result<Vec<AlgebraElement>, _>>()?;
        Ok(EliminationCertificate {
            input_hash: self.input_hashes.get("matrix").cloned().unwrap_or_default(),
            rows: p.rows,
            cols: p.cols,
            col_perm: perm_from_json(&p.col_perm, p.cols, "payload.col_perm")?,
            row_ops,
            forward_ops: p.forward_ops,
            diagonal,
            step_residuals: p.step_residuals,
        })
    }

    pub fn to_outer(
        &self,
        a: &MultivariableSystem,
        b: &MultivariableSystem,
        tol: &Tolerances,
    ) -> Result<OuterConjugacyCertificate, FormatError> {
        let p: OuterPayload = payload(&self.payload)?;
        let gamma = p.gamma.to_morphism(tol, "payload.gamma")?;
        let unitaries = p
            .unitaries
            .iter()
            .enumerate()
            .map(|(i, e)| element_from_json(e, b.algebra(), &format!("payload.unitaries[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let perm = perm_from_json(&p.perm, a.arity(), "payload.perm")?;
        let mut cert = OuterConjugacyCertificate {
            gamma,
            perm,
            unitaries,
            report: OuterConjugacyReport {
                unitarity: f64::INFINITY,
                conjugation: f64::INFINITY,
            },
        };
        cert.report = verify_outer_conjugacy(&cert, a, b);
        Ok(cert)
    }

    pub fn to_unitary_equivalence(
        &self,
        a: &MultivariableSystem,
        b: &MultivariableSystem,
        tol: &Tolerances,
    ) -> Result<UnitaryEquivalenceCertificate, FormatError> {
        let p: UnitaryEquivalencePayload = payload(&self.payload)?;
        let gamma = p.gamma.to_morphism(tol, "payload.gamma")?;
        let matrix = matrix_from_json(&p.matrix, b.algebra(), "payload.matrix")?;
        let mut cert = UnitaryEquivalenceCertificate {
            gamma,
            matrix,
            report: UnitaryEquivalenceReport {
                left_unitarity: f64::INFINITY,
                right_unitarity: f64::INFINITY,
                intertwining: f64::INFINITY,
            },
        };
        cert.report = certify_unitary_equivalence(&cert, a, b);
        Ok(cert)
    }

    pub fn to_piecewise(&self, s: &SpectrumDynamicalSystem) -> Result<PiecewiseCertificate, FormatError> {
        let p: PiecewisePayload = payload(&self.payload)?;
        let phi = perm_from_json(&p.phi, s.points(), "payload.phi")?;
        let assignment = p
            .assignment
            .iter()
            .enumerate()
            .map(|(x, g)| perm_from_json(g, s.arity(), &format!("payload.assignment[{x}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PiecewiseCertificate { phi, assignment })
    }

    /// Checks the recorded input hashes, then recomputes every residual from
    /// the payload. A stale hash rejects the certificate without further work.
    pub fn verify(&self, inputs: &Inputs<'_>, tol: &Tolerances) -> Result<Verification, FormatError> {
        let expected = match (self.kind, inputs) {
            (CertificateKind::Elimination, Inputs::Matrix(_))
            | (CertificateKind::Outer | CertificateKind::UnitaryEquivalence, Inputs::Systems(..))
            | (CertificateKind::Piecewise, Inputs::Spectra(..)) => self.kind.input_names(),
            _ => {
                return Err(FormatError::UnknownDocument(format!(
                    "inputs do not match a {} certificate",
                    serde_json::to_string(&self.kind).expect("kind")
                )))
            }
        };
        for (name, hash) in expected.iter().zip(inputs.hashes()) {
            match self.input_hashes.get(*name) {
                Some(h) if *h == hash => {}
                Some(_) => return Ok(Verification::rejected(format!("input hash mismatch for `{name}`"))),
                None => return Ok(Verification::rejected(format!("missing input hash for `{name}`"))),
            }
        }
        Ok(match inputs {
            Inputs::Matrix(m) => {
                let cert = self.to_elimination(m)?;
                match verify_elimination_certificate(&cert, m) {
                    Ok(r) => Verification::measured(r.passes(), replay_residuals(&r)),
                    Err(e) => Verification::rejected(e.to_string()),
                }
            }
            Inputs::Systems(a, b) if self.kind == CertificateKind::Outer => {
                let r = self.to_outer(a, b, tol)?.report;
                Verification::measured(r.passes(), outer_residuals(&r))
            }
            Inputs::Systems(a, b) => {
                let r = self.to_unitary_equivalence(a, b, tol)?.report;
                Verification::measured(r.passes(), unitary_equivalence_residuals(&r))
            }
            Inputs::Spectra(s, t) => {
                let ok = verify_piecewise_certificate(&self.to_piecewise(t)?, s, t);
                Verification::measured(ok, json!({ "verified": ok }))
            }
        })
    }
}
