use mvdyn::cert::{CertificateFile, Inputs};
use mvdyn::format::{
    canonicalize_system, emit_system, from_str, parse_system_str, to_canonical, IntertwinerFile, SpectrumFile,
};
use mvdyn_core::algebra::BlockAlgebra;
use mvdyn_core::hash::{hash_intertwiner_matrix, hash_system};
use mvdyn_core::random;
use mvdyn_core::spectrum::SpectrumDynamicalSystem;
use mvdyn_core::tol::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPES: [&[usize]; 5] = [&[1], &[2], &[3], &[2, 1, 2], &[1, 1, 1]];

#[test]
fn canonicalize_after_parse_after_emit_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let tol = Tolerances::default();
    for k in 0..20 {
        let alg = BlockAlgebra::new(SHAPES[k % SHAPES.len()].to_vec()).unwrap();
        let arity = rng.random_range(1..=3);
        let sys = random::random_system(&mut rng, &alg, arity);
        let text = emit_system(&sys);
        let parsed = parse_system_str(&text, &tol).unwrap();
        assert_eq!(parsed, sys, "file {k} does not parse back to the same system");
        assert_eq!(hash_system(&parsed), hash_system(&sys));
        assert_eq!(canonicalize_system(&text, &tol).unwrap(), text, "file {k}");
    }
}

#[test]
fn intertwiner_files_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let tol = Tolerances::default();
    for (n, d, p) in [(1, 1, 1), (2, 2, 2), (3, 3, 1), (3, 2, 3)] {
        let m = random::random_invertible_instance(&mut rng, n, d, p);
        let text = to_canonical(&IntertwinerFile::from_matrix(&m));
        let back = from_str::<IntertwinerFile>(&text).unwrap().to_matrix(&tol).unwrap();
        assert_eq!(back.matrix(), m.matrix());
        assert_eq!(hash_intertwiner_matrix(&back), hash_intertwiner_matrix(&m));
        assert_eq!(to_canonical(&IntertwinerFile::from_matrix(&back)), text);
    }
}

#[test]
fn spectrum_files_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let sys = random::random_system(&mut rng, &BlockAlgebra::new(vec![1, 2, 1, 2]).unwrap(), 2);
        let s = SpectrumDynamicalSystem::from_system(&sys);
        let text = to_canonical(&SpectrumFile::from_spectrum(&s));
        let back = from_str::<SpectrumFile>(&text).unwrap().to_spectrum().unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn certificate_files_round_trip_and_reverify() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let tol = Tolerances::default();
    let alg = BlockAlgebra::new(vec![2, 1, 1]).unwrap();
    let pair = random::random_equivalent_pair(&mut rng, &alg, 3, 2);
    let file = CertificateFile::unitary_equivalence(&pair.certificate, &pair.a, &pair.b);
    let text = to_canonical(&file);
    let back = CertificateFile::parse(&text).unwrap();
    assert_eq!(to_canonical(&back), text);

    let a = parse_system_str(&emit_system(&pair.a), &tol).unwrap();
    let b = parse_system_str(&emit_system(&pair.b), &tol).unwrap();
    let v = back.verify(&Inputs::Systems(&a, &b), &tol).unwrap();
    assert!(v.passes, "{v:?}");
    let v = back.verify(&Inputs::Systems(&b, &a), &tol).unwrap();
    assert!(!v.passes);
}

#[test]
fn unknown_fields_and_versions_are_rejected() {
    let tol = Tolerances::default();
    let extra = r#"{"blocks":[1],"maps":[{"perm":[1],"unitaries":[[[1,0]]]}],"colour":"red"}"#;
    assert!(parse_system_str(extra, &tol).unwrap_err().to_string().contains("colour"));
    let future = r#"{"version":2,"blocks":[1],"maps":[{"perm":[1],"unitaries":[[[1,0]]]}]}"#;
    assert!(parse_system_str(future, &tol).unwrap_err().to_string().contains("version 2"));
    let arity = r#"{"blocks":[1],"arity":2,"maps":[{"perm":[1],"unitaries":[[[1,0]]]}]}"#;
    assert!(parse_system_str(arity, &tol).unwrap_err().to_string().contains("arity"));
}
