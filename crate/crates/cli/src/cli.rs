//! Command-line surface.
//!
//! Exit codes: 0 decided yes or verified, 1 decided no or certificate
//! rejected, 2 error or indeterminate, 64 usage error. Reports go to stdout
//! as canonical JSON; diagnostics go to stderr.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mvdyn_core::algebra::MultivariableSystem;
use mvdyn_core::deciders::{
    decide_outer_conjugacy, decide_unitary_equivalence_commutative, outer_to_unitary_equivalence, DeciderError,
    NotConjugate, OuterConjugacy, UnitaryEquivalence, UnitaryEquivalenceCertificate, DEFAULT_MAX_POINTS,
};
use mvdyn_core::elimination::{gaussian_eliminate, verify_elimination_certificate, EliminationOutcome};
use mvdyn_core::fock::{validate_fock, FockError, FockValidation, DEFAULT_MAX_DIM};
use mvdyn_core::intertwiner::IntertwinerMatrix;
use mvdyn_core::spectrum::{
    decide_piecewise_conjugacy, verify_piecewise_certificate, NotPiecewise, PiecewiseOutcome, SpectrumDynamicalSystem,
};
use mvdyn_core::tol::Tolerances;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::cert::{
    outer_residuals, replay_residuals, tool_version, unitary_equivalence_residuals, CertificateFile, CertificateKind,
    Inputs,
};
use crate::format::{
    document_kind, from_str, parse_spectrum_or_system, parse_system_str, perm_to_json, read_text, to_canonical,
    write_text, DocumentKind, FormatError, IntertwinerFile, SpectrumFile,
};
use crate::gen::{generate, write_all, GenKind, GenRequest};

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "mvdyn",
    version,
    about = "Decide and certify isomorphism of multivariable dynamical systems over finite-dimensional C*-algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(x) if x > 0 => Ok(x),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

#[derive(Args, Debug, Clone)]
struct TolArg {
    /// Zero threshold τ_0 used for rank and zero-versus-invertible decisions
    #[arg(long, value_parser = positive_f64)]
    tol: Option<f64>,
}

impl TolArg {
    fn tolerances(&self) -> Tolerances {
        let t = Tolerances::default();
        self.tol.map_or(t, |z| t.with_zero(z))
    }
}

#[derive(Args, Debug, Clone)]
struct BatchArgs {
    /// Worker threads; reports keep input order
    #[arg(long, default_value_t = 1, value_parser = positive_usize)]
    jobs: usize,
    /// Certificate destination: a file for one instance, a directory for several
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Re-verify a certificate against its inputs, or validate an input file
    Verify {
        file: PathBuf,
        /// Inputs named by the certificate, in the order of its `input_hashes` keys
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        tol: TolArg,
    },
    /// Certified elimination of intertwiner matrices
    Eliminate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        tol: TolArg,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Outer conjugacy of systems over a full matrix algebra; files come in pairs A B
    DecideOuter {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        tol: TolArg,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Unitary equivalence of systems over C^m; files come in pairs A B
    DecideUeCommutative {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: usize,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Piecewise conjugacy of spectrum systems (spectrum or system files); pairs S T
    DecidePiecewise {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: usize,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Turn an outer or unitary-equivalence certificate into a verified unitary-equivalence certificate
    Certify {
        a: PathBuf,
        b: PathBuf,
        cert: PathBuf,
        #[command(flatten)]
        tol: TolArg,
        /// Where to write the unitary-equivalence certificate
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated Fock-space checks for a certified pair, at every level up to --max-level
    FockValidate {
        a: PathBuf,
        b: PathBuf,
        cert: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = positive_usize)]
        max_level: usize,
        #[command(flatten)]
        tol: TolArg,
        #[arg(long, default_value_t = 1, value_parser = positive_usize)]
        jobs: usize,
    },
    /// Write seeded random instances
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Block sizes of the algebra, comma separated
        #[arg(long, value_delimiter = ',', default_value = "2")]
        blocks: Vec<usize>,
        /// Number of maps, or matrix size for intertwiner instances
        #[arg(long, default_value_t = 2)]
        arity: usize,
        /// Number of points for commutative systems
        #[arg(long, default_value_t = 3)]
        points: usize,
        /// Number of copies of M_d in the source of intertwiner instances
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Yes,
    No,
    Error,
}

impl Status {
    fn code(self) -> i32 {
        match self {
            Status::Yes => EXIT_YES,
            Status::No => EXIT_NO,
            Status::Error => EXIT_ERROR,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Status::Yes => "yes",
            Status::No => "no",
            Status::Error => "error",
        }
    }
}

struct Instance {
    status: Status,
    report: Map<String, Value>,
    certificate: Option<CertificateFile>,
}

impl Instance {
    fn new(status: Status, inputs: &[&Path]) -> Self {
        let mut report = Map::new();
        report.insert(
            "inputs".into(),
            inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().into(),
        );
        Instance {
            status,
            report,
            certificate: None,
        }
    }

    fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.report.insert(key.into(), v.into());
        self
    }

    fn certified(mut self, c: CertificateFile) -> Self {
        self.certificate = Some(c);
        self
    }

    fn error(inputs: &[&Path], e: impl Display) -> Self {
        eprintln!("error: {e}");
        Instance::new(Status::Error, inputs).with("error", e.to_string())
    }

    fn finish(mut self) -> Value {
        self.report.insert("result".into(), self.status.as_str().into());
        Value::Object(self.report)
    }
}

enum CliError {
    Usage(String),
    Fatal(String),
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Fatal(e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_YES };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Fatal(m)) => {
            eprintln!("error: {m}");
            EXIT_ERROR
        }
    }
}

fn emit(report: &Value) {
    print!("{}", to_canonical(report));
}

fn pairs(files: &[PathBuf]) -> Result<Vec<(&Path, &Path)>, CliError> {
    if !files.len().is_multiple_of(2) {
        return Err(CliError::Usage(format!(
            "expected input files in pairs, got {}",
            files.len()
        )));
    }
    Ok(files.chunks(2).map(|p| (p[0].as_path(), p[1].as_path())).collect())
}

fn run_batch<T: Sync>(items: &[T], jobs: usize, f: impl Fn(&T) -> Instance + Sync + Send) -> Result<Vec<Instance>, CliError> {
    if jobs <= 1 || items.len() <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Fatal(e.to_string()))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Writes or inlines certificates, then prints the batch report.
fn finish_batch(command: &str, instances: Vec<Instance>, out: Option<&Path>) -> Result<i32, CliError> {
    let single = instances.len() == 1;
    if let (Some(dir), false) = (out, single) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Fatal(format!("{}: {e}", dir.display())))?;
    }
    let worst = instances.iter().map(|i| i.status).max().unwrap_or(Status::Yes);
    let mut reports = Vec::with_capacity(instances.len());
    for (k, mut inst) in instances.into_iter().enumerate() {
        if let Some(c) = inst.certificate.take() {
            let v = match out {
                Some(path) => {
                    let target = if single {
                        path.to_path_buf()
                    } else {
                        path.join(format!("{:03}-{}.json", k + 1, kind_name(c.kind)))
                    };
                    write_text(&target, &to_canonical(&c))?;
                    Value::from(target.display().to_string())
                }
                None => serde_json::to_value(&c).expect("serializable certificate"),
            };
            inst.report.insert("certificate".into(), v);
        }
        reports.push(inst.finish());
    }
    emit(&json!({
        "command": command,
        "result": worst.as_str(),
        "instances": reports,
        "tool_version": tool_version(),
    }));
    Ok(worst.code())
}

fn kind_name(k: CertificateKind) -> &'static str {
    match k {
        CertificateKind::Elimination => "elimination",
        CertificateKind::Outer => "outer",
        CertificateKind::UnitaryEquivalence => "unitary-equivalence",
        CertificateKind::Piecewise => "piecewise",
    }
}

fn load_system(path: &Path, tol: &Tolerances) -> Result<MultivariableSystem, String> {
    read_text(path)
        .and_then(|t| parse_system_str(&t, tol))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_intertwiner(path: &Path, tol: &Tolerances) -> Result<IntertwinerMatrix, String> {
    read_text(path)
        .and_then(|t| from_str::<IntertwinerFile>(&t))
        .and_then(|f| f.to_matrix(tol))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_spectrum(path: &Path, tol: &Tolerances) -> Result<SpectrumDynamicalSystem, String> {
    read_text(path)
        .and_then(|t| parse_spectrum_or_system(&t, tol))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_certificate(path: &Path) -> Result<CertificateFile, String> {
    read_text(path)
        .and_then(|t| CertificateFile::parse(&t))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Verify { file, inputs, tol } => verify(&file, &inputs, &tol.tolerances()),
        Command::Eliminate { files, tol, batch } => {
            let tol = tol.tolerances();
            let results = run_batch(&files, batch.jobs, |p| eliminate_one(p, &tol))?;
            finish_batch("eliminate", results, batch.out.as_deref())
        }
        Command::DecideOuter { files, tol, batch } => {
            let tol = tol.tolerances();
            let results = run_batch(&pairs(&files)?, batch.jobs, |&(a, b)| outer_one(a, b, &tol))?;
            finish_batch("decide-outer", results, batch.out.as_deref())
        }
        Command::DecideUeCommutative {
            files,
            max_points,
            batch,
        } => {
            let tol = Tolerances::default();
            let results = run_batch(&pairs(&files)?, batch.jobs, |&(a, b)| {
                ue_commutative_one(a, b, max_points, &tol)
            })?;
            finish_batch("decide-ue-commutative", results, batch.out.as_deref())
        }
        Command::DecidePiecewise {
            files,
            max_points,
            batch,
        } => {
            let tol = Tolerances::default();
            let results = run_batch(&pairs(&files)?, batch.jobs, |&(s, t)| piecewise_one(s, t, max_points, &tol))?;
            finish_batch("decide-piecewise", results, batch.out.as_deref())
        }
        Command::Certify { a, b, cert, tol, out } => {
            let inst = certify_one(&a, &b, &cert, &tol.tolerances());
            finish_batch("certify", vec![inst], out.as_deref())
        }
        Command::FockValidate {
            a,
            b,
            cert,
            max_level,
            tol,
            jobs,
        } => fock_validate(&a, &b, &cert, max_level, &tol.tolerances(), jobs),
        Command::Gen {
            kind,
            seed,
            blocks,
            arity,
            points,
            copies,
            count,
            out,
        } => {
            let req = GenRequest {
                kind,
                seed,
                blocks,
                arity,
                points,
                copies,
                count,
            };
            let files = generate(&req).map_err(CliError::Usage)?;
            write_all(&out, &files)?;
            let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
            emit(&json!({
                "command": "gen",
                "result": "yes",
                "seed": seed,
                "out": out.display().to_string(),
                "files": names,
                "tool_version": tool_version(),
            }));
            Ok(EXIT_YES)
        }
    }
}

fn verify(file: &Path, inputs: &[PathBuf], tol: &Tolerances) -> Result<i32, CliError> {
    let mut paths: Vec<&Path> = vec![file];
    paths.extend(inputs.iter().map(PathBuf::as_path));
    let text = match read_text(file) {
        Ok(t) => t,
        Err(e) => return finish_batch("verify", vec![Instance::error(&paths, e)], None),
    };
    let kind = match document_kind(&text) {
        Ok(k) => k,
        Err(e) => return finish_batch("verify", vec![Instance::error(&paths, e)], None),
    };
    if kind != DocumentKind::Certificate && !inputs.is_empty() {
        return Err(CliError::Usage("only certificates take input files".into()));
    }
    let inst = match kind {
        DocumentKind::Certificate => verify_certificate(&text, &paths, tol)?,
        DocumentKind::System => match parse_system_str(&text, tol) {
            Ok(s) => Instance::new(Status::Yes, &paths)
                .with("document", "system")
                .with("blocks", s.algebra().block_sizes().to_vec())
                .with("arity", s.arity()),
            Err(e) => Instance::error(&paths, e),
        },
        DocumentKind::Spectrum => match from_str::<SpectrumFile>(&text).and_then(|f| f.to_spectrum()) {
            Ok(s) => Instance::new(Status::Yes, &paths)
                .with("document", "spectrum")
                .with("points", s.points())
                .with("arity", s.arity()),
            Err(e) => Instance::error(&paths, e),
        },
        DocumentKind::Intertwiner => match load_intertwiner(file, tol) {
            Ok(m) => {
                let status = if m.is_valid(tol) { Status::Yes } else { Status::No };
                Instance::new(status, &paths)
                    .with("document", "intertwiner")
                    .with("rows", m.rows())
                    .with("cols", m.cols())
                    .with("residual", m.residual())
            }
            Err(e) => Instance::error(&paths, e),
        },
    };
    finish_batch("verify", vec![inst], None)
}

fn verify_certificate(text: &str, paths: &[&Path], tol: &Tolerances) -> Result<Instance, CliError> {
    let c = match CertificateFile::parse(text) {
        Ok(c) => c,
        Err(e) => return Ok(Instance::error(paths, e)),
    };
    let names = c.kind.input_names();
    if paths.len() - 1 != names.len() {
        return Err(CliError::Usage(format!(
            "a {} certificate is checked against {} input file(s): {}",
            kind_name(c.kind),
            names.len(),
            names.join(", ")
        )));
    }
    let inputs = &paths[1..];
    let checked = match c.kind {
        CertificateKind::Elimination => load_intertwiner(inputs[0], tol)
            .and_then(|m| c.verify(&Inputs::Matrix(&m), tol).map_err(|e| e.to_string())),
        CertificateKind::Outer | CertificateKind::UnitaryEquivalence => load_system(inputs[0], tol)
            .and_then(|a| Ok((a, load_system(inputs[1], tol)?)))
            .and_then(|(a, b)| c.verify(&Inputs::Systems(&a, &b), tol).map_err(|e| e.to_string())),
        CertificateKind::Piecewise => load_spectrum(inputs[0], tol)
            .and_then(|s| Ok((s, load_spectrum(inputs[1], tol)?)))
            .and_then(|(s, t)| c.verify(&Inputs::Spectra(&s, &t), tol).map_err(|e| e.to_string())),
    };
    Ok(match checked {
        Ok(v) => {
            let status = if v.passes { Status::Yes } else { Status::No };
            let mut inst = Instance::new(status, paths)
                .with("document", "certificate")
                .with("kind", kind_name(c.kind))
                .with("residuals", v.residuals);
            if let Some(r) = v.reason {
                inst = inst.with("reason", r);
            }
            inst
        }
        Err(e) => Instance::error(paths, e),
    })
}

fn eliminate_one(path: &Path, tol: &Tolerances) -> Instance {
    let inputs = [path];
    let m = match load_intertwiner(path, tol) {
        Ok(m) => m,
        Err(e) => return Instance::error(&inputs, e),
    };
    match gaussian_eliminate(&m, tol) {
        Ok(EliminationOutcome::Certified(c)) => match verify_elimination_certificate(&c, &m) {
            Ok(r) if r.passes() => Instance::new(Status::Yes, &inputs)
                .with("rows", m.rows())
                .with("cols", m.cols())
                .with("residuals", replay_residuals(&r))
                .certified(CertificateFile::elimination(&c, &r)),
            Ok(r) => Instance::error(&inputs, "elimination certificate failed its replay")
                .with("residuals", replay_residuals(&r)),
            Err(e) => Instance::error(&inputs, e),
        },
        Ok(EliminationOutcome::Contradiction(c)) => Instance::new(Status::No, &inputs)
            .with("rows", m.rows())
            .with("cols", m.cols())
            .with(
                "contradiction",
                json!({
                    "zero_row": c.zero_row + 1,
                    "step": c.step,
                    "col_perm": perm_to_json(&c.col_perm),
                }),
            ),
        Err(e) => Instance::error(&inputs, e),
    }
}

fn reason(kind: &str, fields: Value) -> Value {
    let mut v = fields;
    if let Value::Object(m) = &mut v {
        m.insert("kind".into(), kind.into());
    }
    v
}

fn outer_one(pa: &Path, pb: &Path, tol: &Tolerances) -> Instance {
    let inputs = [pa, pb];
    let (a, b) = match load_system(pa, tol).and_then(|a| Ok((a, load_system(pb, tol)?))) {
        Ok(x) => x,
        Err(e) => return Instance::error(&inputs, e),
    };
    match decide_outer_conjugacy(&a, &b, tol) {
        Ok(OuterConjugacy::Conjugate(c)) if c.report.passes() => Instance::new(Status::Yes, &inputs)
            .with("residuals", outer_residuals(&c.report))
            .certified(CertificateFile::outer(&c, &a, &b)),
        Ok(OuterConjugacy::Conjugate(c)) => Instance::error(&inputs, "outer-conjugacy certificate failed verification")
            .with("residuals", outer_residuals(&c.report)),
        Ok(OuterConjugacy::NotConjugate(NotConjugate::ArityMismatch { a, b })) => {
            Instance::new(Status::No, &inputs).with("reason", reason("ArityMismatch", json!({ "a": a, "b": b })))
        }
        Ok(OuterConjugacy::NotConjugate(NotConjugate::NoMatching(h))) => Instance::new(Status::No, &inputs).with(
            "reason",
            reason(
                "NoMatching",
                json!({ "rows": perm_to_json(&h.rows), "neighbours": perm_to_json(&h.neighbours) }),
            ),
        ),
        Err(DeciderError::AlgebraMismatch { a, b }) => {
            Instance::new(Status::No, &inputs).with("reason", reason("AlgebraMismatch", json!({ "a": a, "b": b })))
        }
        Err(e) => Instance::error(&inputs, e),
    }
}

fn ue_commutative_one(pa: &Path, pb: &Path, max_points: usize, tol: &Tolerances) -> Instance {
    let inputs = [pa, pb];
    let (a, b) = match load_system(pa, tol).and_then(|a| Ok((a, load_system(pb, tol)?))) {
        Ok(x) => x,
        Err(e) => return Instance::error(&inputs, e),
    };
    match decide_unitary_equivalence_commutative(&a, &b, max_points) {
        Ok(UnitaryEquivalence::Equivalent(c)) if c.report.passes() => Instance::new(Status::Yes, &inputs)
            .with("residuals", unitary_equivalence_residuals(&c.report))
            .certified(CertificateFile::unitary_equivalence(&c, &a, &b)),
        Ok(UnitaryEquivalence::Equivalent(c)) => {
            Instance::error(&inputs, "unitary-equivalence certificate failed verification")
                .with("residuals", unitary_equivalence_residuals(&c.report))
        }
        Ok(UnitaryEquivalence::NotEquivalent { bijections_tried }) => Instance::new(Status::No, &inputs).with(
            "reason",
            reason("NotEquivalent", json!({ "bijections_tried": bijections_tried })),
        ),
        Err(DeciderError::ArityMismatch { a, b }) => {
            Instance::new(Status::No, &inputs).with("reason", reason("ArityMismatch", json!({ "a": a, "b": b })))
        }
        Err(DeciderError::SpectrumSizeMismatch { a, b }) => Instance::new(Status::No, &inputs)
            .with("reason", reason("SpectrumSizeMismatch", json!({ "a": a, "b": b }))),
        Err(e) => Instance::error(&inputs, e),
    }
}

fn piecewise_one(ps: &Path, pt: &Path, max_points: usize, tol: &Tolerances) -> Instance {
    let inputs = [ps, pt];
    let (s, t) = match load_spectrum(ps, tol).and_then(|s| Ok((s, load_spectrum(pt, tol)?))) {
        Ok(x) => x,
        Err(e) => return Instance::error(&inputs, e),
    };
    match decide_piecewise_conjugacy(&s, &t, max_points) {
        Ok(PiecewiseOutcome::Conjugate(c)) if verify_piecewise_certificate(&c, &s, &t) => {
            Instance::new(Status::Yes, &inputs).certified(CertificateFile::piecewise(&c, &s, &t))
        }
        Ok(PiecewiseOutcome::Conjugate(_)) => Instance::error(&inputs, "piecewise certificate failed verification"),
        Ok(PiecewiseOutcome::NotConjugate(n)) => {
            let r = match n {
                NotPiecewise::ArityMismatch { s, t } => reason("ArityMismatch", json!({ "s": s, "t": t })),
                NotPiecewise::LabelMismatch => reason("LabelMismatch", json!({})),
                NotPiecewise::Exhausted { bijections_tried } => {
                    reason("Exhausted", json!({ "bijections_tried": bijections_tried }))
                }
            };
            Instance::new(Status::No, &inputs).with("reason", r)
        }
        Err(e) => Instance::error(&inputs, e),
    }
}

/// A verified unitary-equivalence certificate from an outer or
/// unitary-equivalence certificate file, or the reason it was rejected.
fn unitary_certificate(
    c: &CertificateFile,
    a: &MultivariableSystem,
    b: &MultivariableSystem,
    tol: &Tolerances,
) -> Result<Result<UnitaryEquivalenceCertificate, String>, String> {
    let v = c.verify(&Inputs::Systems(a, b), tol).map_err(|e| e.to_string())?;
    if !v.passes {
        return Ok(Err(v.reason.unwrap_or_default()));
    }
    let ue = match c.kind {
        CertificateKind::Outer => {
            let outer = c.to_outer(a, b, tol).map_err(|e| e.to_string())?;
            outer_to_unitary_equivalence(&outer, a, b)
        }
        CertificateKind::UnitaryEquivalence => c.to_unitary_equivalence(a, b, tol).map_err(|e| e.to_string())?,
        _ => unreachable!("verify accepts systems only for outer and unitary-equivalence certificates"),
    };
    Ok(Ok(ue))
}

fn load_certified_pair(
    pa: &Path,
    pb: &Path,
    pc: &Path,
    tol: &Tolerances,
) -> Result<(MultivariableSystem, MultivariableSystem, Result<UnitaryEquivalenceCertificate, String>), String> {
    let a = load_system(pa, tol)?;
    let b = load_system(pb, tol)?;
    let c = load_certificate(pc)?;
    if !matches!(c.kind, CertificateKind::Outer | CertificateKind::UnitaryEquivalence) {
        return Err(format!(
            "{}: expected an outer or unitary-equivalence certificate, found {}",
            pc.display(),
            kind_name(c.kind)
        ));
    }
    let ue = unitary_certificate(&c, &a, &b, tol).map_err(|e| format!("{}: {e}", pc.display()))?;
    Ok((a, b, ue))
}

fn certify_one(pa: &Path, pb: &Path, pc: &Path, tol: &Tolerances) -> Instance {
    let inputs = [pa, pb, pc];
    let (a, b, ue) = match load_certified_pair(pa, pb, pc, tol) {
        Ok(x) => x,
        Err(e) => return Instance::error(&inputs, e),
    };
    let ue = match ue {
        Ok(ue) => ue,
        Err(r) => return Instance::new(Status::No, &inputs).with("reason", r),
    };
    let (sa, sb) = (SpectrumDynamicalSystem::from_system(&a), SpectrumDynamicalSystem::from_system(&b));
    let spectrum = match decide_piecewise_conjugacy(&sa, &sb, DEFAULT_MAX_POINTS) {
        Ok(o) => Value::from(o.is_conjugate()),
        Err(_) => Value::Null,
    };
    let inst = Instance::new(
        if ue.report.passes() { Status::Yes } else { Status::No },
        &inputs,
    )
    .with("residuals", unitary_equivalence_residuals(&ue.report))
    .with("spectrum_piecewise_conjugate", spectrum);
    if ue.report.passes() {
        inst.certified(CertificateFile::unitary_equivalence(&ue, &a, &b))
    } else {
        inst.with("reason", "derived unitary-equivalence certificate exceeds the certificate tolerance")
    }
}

fn fock_report(v: &FockValidation) -> Value {
    json!({
        "level": v.level,
        "dim_a": v.dim_a,
        "dim_b": v.dim_b,
        "covariance": v.covariance,
        "generator_relations": v.generator_relations,
        "expectation_idempotence": v.expectation_idempotence,
        "fourier_idempotence": v.fourier_idempotence,
        "fourier_annihilation": v.fourier_annihilation,
        "transported_covariance": v.transported_covariance,
        "recovery_error": v.recovery_error,
        "recovered_intertwining": v.recovered_intertwining,
        "recovered_right_invertible": v.recovered_right_invertible,
        "degree_zero_norm": v.degree_zero_norm,
        "remainder_norm": v.remainder_norm,
        "passes": v.passes(),
    })
}

fn fock_validate(
    pa: &Path,
    pb: &Path,
    pc: &Path,
    max_level: usize,
    tol: &Tolerances,
    jobs: usize,
) -> Result<i32, CliError> {
    let inputs = [pa, pb, pc];
    let (a, b, ue) = match load_certified_pair(pa, pb, pc, tol) {
        Ok(x) => x,
        Err(e) => return finish_batch("fock-validate", vec![Instance::error(&inputs, e)], None),
    };
    let ue = match ue {
        Ok(ue) => ue,
        Err(r) => {
            let inst = Instance::new(Status::No, &inputs).with("reason", r);
            return finish_batch("fock-validate", vec![inst], None);
        }
    };
    let levels: Vec<usize> = (1..=max_level).collect();
    let results = run_batch(&levels, jobs, |&level| {
        let inst = Instance::new(Status::Yes, &inputs).with("level", level);
        match validate_fock(&ue, &a, &b, level, DEFAULT_MAX_DIM) {
            Ok(v) => Instance {
                status: if v.passes() { Status::Yes } else { Status::No },
                ..inst
            }
            .with("checks", fock_report(&v)),
            Err(e @ (FockError::UnverifiedCertificate | FockError::CovarianceViolated { .. })) => Instance {
                status: Status::No,
                ..inst
            }
            .with("reason", e.to_string()),
            Err(e) => Instance::error(&inputs, e).with("level", level),
        }
    })?;
    finish_batch("fock-validate", results, None)
}
