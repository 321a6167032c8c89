//! Seeded random instances written as input files.

use std::path::Path;

use clap::ValueEnum;
use mvdyn_core::algebra::BlockAlgebra;
use mvdyn_core::random;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cert::CertificateFile;
use crate::format::{emit_system, to_canonical, write_text, FormatError, IntertwinerFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Random automorphic system on the algebra given by --blocks.
    System,
    /// Random system on --points one-dimensional blocks.
    Commutative,
    /// A system and a copy twisted by inner automorphisms and a permutation.
    OuterPair,
    /// Two unitarily equivalent systems and a certificate.
    UePair,
    /// Square invertible intertwiner matrix over M_d, d the single block size.
    Intertwiner,
    /// An invertible instance padded with an extra row.
    Padded,
}

#[derive(Clone, Debug)]
pub struct GenRequest {
    pub kind: GenKind,
    pub seed: u64,
    pub blocks: Vec<usize>,
    pub arity: usize,
    pub points: usize,
    pub copies: usize,
    pub count: usize,
}

/// Generated files as `(name, contents)`, in generation order.
pub fn generate(req: &GenRequest) -> Result<Vec<(String, String)>, String> {
    if req.arity == 0 || req.count == 0 || req.points == 0 || req.copies == 0 {
        return Err("--arity, --count, --points and --copies must be positive".into());
    }
    let alg = BlockAlgebra::new(req.blocks.clone()).map_err(|e| format!("--blocks: {e}"))?;
    let d = match (req.kind, req.blocks.as_slice()) {
        (GenKind::Intertwiner | GenKind::Padded, [d]) => *d,
        (GenKind::Intertwiner | GenKind::Padded, _) => {
            return Err("intertwiner instances need a single block size in --blocks".into())
        }
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut files = Vec::new();
    for k in 1..=req.count {
        match req.kind {
            GenKind::System => {
                let sys = random::random_system(&mut rng, &alg, req.arity);
                files.push((format!("system-{k:03}.json"), emit_system(&sys)));
            }
            GenKind::Commutative => {
                let sys = random::random_commutative_system(&mut rng, req.points, req.arity);
                files.push((format!("commutative-{k:03}.json"), emit_system(&sys)));
            }
            GenKind::OuterPair => {
                let a = random::random_system(&mut rng, &alg, req.arity);
                let b = random::random_outer_twist(&mut rng, &a);
                files.push((format!("outer-{k:03}-a.json"), emit_system(&a)));
                files.push((format!("outer-{k:03}-b.json"), emit_system(&b)));
            }
            GenKind::UePair => {
                let distinct = rng.random_range(1..=req.arity);
                let pair = random::random_equivalent_pair(&mut rng, &alg, req.arity, distinct);
                let cert = CertificateFile::unitary_equivalence(&pair.certificate, &pair.a, &pair.b);
                files.push((format!("ue-{k:03}-a.json"), emit_system(&pair.a)));
                files.push((format!("ue-{k:03}-b.json"), emit_system(&pair.b)));
                files.push((format!("ue-{k:03}-cert.json"), to_canonical(&cert)));
            }
            GenKind::Intertwiner => {
                let m = random::random_invertible_instance(&mut rng, req.arity, d, req.copies);
                files.push((format!("intertwiner-{k:03}.json"), to_canonical(&IntertwinerFile::from_matrix(&m))));
            }
            GenKind::Padded => {
                let m = random::random_padded_instance(&mut rng, req.arity, d, req.copies);
                files.push((format!("padded-{k:03}.json"), to_canonical(&IntertwinerFile::from_matrix(&m))));
            }
        }
    }
    Ok(files)
}

pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), FormatError> {
    std::fs::create_dir_all(dir).map_err(|e| FormatError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    for (name, text) in files {
        write_text(&dir.join(name), text)?;
    }
    Ok(())
}
