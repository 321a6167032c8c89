//! Acceptance suite: one line per criterion, each with its tolerances and
//! runtime limit pinned.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use mvdyn_core::algebra::{AlgebraElement, BlockAlgebra, MultivariableSystem, StarIsomorphism};
use mvdyn_core::deciders::{
    certify_unitary_equivalence, decide_outer_conjugacy, decide_unitary_equivalence_commutative,
    outer_to_unitary_equivalence, polar_unitary, verify_outer_conjugacy, DeciderError, OuterConjugacy,
    OuterConjugacyCertificate, UnitaryEquivalence,
};
use mvdyn_core::elimination::{
    gaussian_eliminate, right_invertible_test, verify_elimination_certificate, EliminationOutcome,
};
use mvdyn_core::fock::{build_fock, extract_associated_matrix, plant_images, validate_fock, DEFAULT_MAX_DIM};
use mvdyn_core::intertwiner::{key_dichotomy, Dichotomy};
use mvdyn_core::linalg::{CMat, C64};
use mvdyn_core::matrix::AlgebraMatrix;
use mvdyn_core::random;
use mvdyn_core::spectrum::{
    decide_piecewise_conjugacy, verify_piecewise_certificate, PiecewiseOutcome, SpectrumDynamicalSystem,
};
use mvdyn_core::tol::Tolerances;

struct Outcome {
    failures: Vec<String>,
    summary: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            summary: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 5 {
            self.failures.push(what());
        } else if !ok {
            self.failures.push(String::new());
        }
    }
}

fn assembled(m: &AlgebraMatrix) -> CMat {
    // single-block algebras only
    m.block_matrix(0)
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let tol = Tolerances::default();
    let mut rng = common::rng(1);
    let (mut zeros, mut invertibles) = (0, 0);
    for t in 0..500 {
        let d = 1 + t % 3;
        let p = rng.random_range(1..=3);
        let force_zero = rng.random_bool(0.2);
        let s = random::random_intertwiner(&mut rng, d, p, force_zero);
        let c = &s.c.blocks()[0];
        let nonzero = c.iter().any(|z| z.norm() > 0.0);
        let is_member = common::intertwining_defect(c, &s.phi, &s.psi) <= 1e-10 * c.norm().max(1.0);
        let expect_invertible = nonzero && is_member && common::intertwiner_nullity(&s.phi, &s.psi) > 0;
        match key_dichotomy(&s.c, &s.phi, &s.psi, &tol) {
            Ok(Dichotomy::Zero { .. }) => {
                zeros += 1;
                out.check(!expect_invertible, || format!("instance {t}: nonzero intertwiner classified Zero"));
            }
            Ok(Dichotomy::Invertible(_)) => {
                invertibles += 1;
                out.check(expect_invertible, || format!("instance {t}: classified Invertible, oracle disagrees"));
                let nrm2 = s.c.norm().powi(2);
                for g in [c * c.adjoint(), c.adjoint() * c] {
                    let lambda = g.trace() / C64::new(d as f64, 0.0);
                    let defect = (&g - CMat::identity(d, d) * lambda).norm();
                    out.check(defect <= 1e-10 * nrm2, || format!("instance {t}: cc*/c*c not scalar ({defect:.2e})"));
                }
            }
            Err(e) => out.check(false, || format!("instance {t}: error {e}")),
        }
    }
    out.summary = format!("500 intertwiners, {zeros} zero, {invertibles} invertible");
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let tol = Tolerances::default();
    let mut rng = common::rng(2);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let n = rng.random_range(1..=4);
        let d = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let m = random::random_invertible_instance(&mut rng, n, d, p);
        let full = assembled(m.matrix());
        out.check(common::rank(&full, 1e-10) == n * d, || format!("instance {t}: oracle says singular"));
        match gaussian_eliminate(&m, &tol) {
            Ok(EliminationOutcome::Certified(cert)) => {
                let report = verify_elimination_certificate(&cert, &m);
                out.check(matches!(report, Ok(r) if r.replay_error <= 1e-9 && r.off_diagonal <= 1e-9), || {
                    format!("instance {t}: replay failed {report:?}")
                });
                let scale = m.scale().max(1.0);
                for (i, diag) in cert.diagonal.iter().enumerate() {
                    let phi = &m.row_reps()[i];
                    let psi = &m.col_reps()[cert.col_perm[i]];
                    let r = common::intertwining_defect(&diag.blocks()[0], phi, psi) / scale;
                    worst = worst.max(r);
                    out.check(r <= 1e-9, || format!("instance {t}: diagonal {i} residual {r:.2e}"));
                }
            }
            other => out.check(false, || format!("instance {t}: {other:?}")),
        }
    }
    out.summary = format!("200 certificates, worst diagonal residual {worst:.1e}");
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let tol = Tolerances::default();
    let mut rng = common::rng(3);
    for t in 0..100 {
        let n = rng.random_range(1..=3);
        let d = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let m = random::random_padded_instance(&mut rng, n, d, p);
        out.check(common::rank(&assembled(m.matrix()), 1e-10) == n * d, || {
            format!("instance {t}: padded matrix is not of full column rank")
        });
        out.check(!right_invertible_test(m.matrix(), &tol).is_right_invertible(), || {
            format!("instance {t}: {}x{} matrix reported right invertible", n + 1, n)
        });
        match gaussian_eliminate(&m, &tol) {
            Ok(EliminationOutcome::Contradiction(c)) => {
                out.check(c.zero_row == n, || format!("instance {t}: zero row {} (expected {n})", c.zero_row))
            }
            other => out.check(false, || format!("instance {t}: expected a contradiction, got {other:?}")),
        }
    }
    out.summary = "100 instances with m = n + 1".to_string();
    out
}

fn outer_pool() -> Vec<MultivariableSystem> {
    let mut rng = common::rng(4);
    let mut pool: Vec<MultivariableSystem> = Vec::new();
    for t in 0..50 {
        let d = if t < 25 { 2 } else { 3 };
        let alg = BlockAlgebra::full_matrix(d).unwrap();
        let same_class: Vec<usize> = (0..pool.len()).filter(|&k| pool[k].algebra() == &alg).collect();
        if !same_class.is_empty() && rng.random_bool(0.5) {
            let base = &pool[*same_class.choose(&mut rng).unwrap()];
            pool.push(random::random_outer_twist(&mut rng, base));
        } else {
            let n = rng.random_range(1..=3);
            pool.push(random::random_system(&mut rng, &alg, n));
        }
    }
    pool
}

/// `β_i(e) = w_i α_{π(i)}(e) w_i*` rechecked with dense products.
fn direct_outer_residual(cert: &OuterConjugacyCertificate, a: &MultivariableSystem, b: &MultivariableSystem) -> f64 {
    let mut worst = 0.0f64;
    for (i, beta) in b.maps().iter().enumerate() {
        let alpha = &a.maps()[cert.perm[i]];
        let w = &cert.unitaries[i].blocks()[0];
        // over M_d each map is Ad(u) for its single unitary
        let (ub, ua) = (&beta.unitaries()[0], &alpha.unitaries()[0]);
        for e in a.algebra().matrix_units() {
            let e = &e.blocks()[0];
            let lhs = ub * e * ub.adjoint();
            let rhs = w * ua * e * ua.adjoint() * w.adjoint();
            worst = worst.max((lhs - rhs).norm());
        }
        worst = worst.max((w * w.adjoint() - CMat::identity(w.nrows(), w.nrows())).norm());
    }
    worst
}

fn criteria_4_and_5() -> (Outcome, Outcome) {
    let mut c4 = Outcome::new();
    let mut c5 = Outcome::new();
    let tol = Tolerances::default();
    let pool = outer_pool();
    let (mut positives, mut negatives) = (0, 0);
    for (x, a) in pool.iter().enumerate() {
        for (y, b) in pool.iter().enumerate() {
            let oracle = common::outer_conjugate_oracle(a, b);
            let decided = match decide_outer_conjugacy(a, b, &tol) {
                Ok(OuterConjugacy::Conjugate(cert)) => {
                    let report = verify_outer_conjugacy(&cert, a, b);
                    let direct = direct_outer_residual(&cert, a, b);
                    c4.check(report.passes() && direct <= 1e-8, || {
                        format!("pair ({x},{y}): certificate residual {report:?}, direct {direct:.2e}")
                    });

                    let ue = outer_to_unitary_equivalence(&cert, a, b);
                    c5.check(certify_unitary_equivalence(&ue, a, b).passes(), || {
                        format!("pair ({x},{y}): derived unitary equivalence fails")
                    });
                    let (sa, sb) = (SpectrumDynamicalSystem::from_system(a), SpectrumDynamicalSystem::from_system(b));
                    match decide_piecewise_conjugacy(&sa, &sb, 8) {
                        Ok(PiecewiseOutcome::Conjugate(pc)) => c5.check(verify_piecewise_certificate(&pc, &sa, &sb), || {
                            format!("pair ({x},{y}): piecewise certificate fails")
                        }),
                        other => c5.check(false, || format!("pair ({x},{y}): piecewise {other:?}")),
                    }
                    true
                }
                Ok(OuterConjugacy::NotConjugate(_)) | Err(DeciderError::AlgebraMismatch { .. }) => false,
                Err(e) => {
                    c4.check(false, || format!("pair ({x},{y}): error {e}"));
                    continue;
                }
            };
            if decided {
                positives += 1;
            } else {
                negatives += 1;
            }
            c4.check(decided == oracle, || format!("pair ({x},{y}): decider {decided}, oracle {oracle}"));
        }
    }
    c4.summary = format!("{} pairs, {positives} conjugate, {negatives} not", pool.len() * pool.len());
    c5.summary = format!("{positives} positive outer results carried through");
    (c4, c5)
}

fn commutative_pair(rng: &mut impl Rng) -> (MultivariableSystem, MultivariableSystem) {
    let m = rng.random_range(1..=4);
    let n = rng.random_range(1..=3);
    let a = random::random_commutative_system(rng, m, n);
    let b = match rng.random_range(0..4) {
        // relabel points and reorder maps
        0 | 1 => {
            let alg = a.algebra().clone();
            let mut g: Vec<usize> = (0..m).collect();
            g.shuffle(rng);
            let gamma = StarIsomorphism::block_permutation(&alg, g).unwrap();
            let conj = mvdyn_core::deciders::transported_maps(&gamma, &a).unwrap();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            MultivariableSystem::new(alg, order.iter().map(|&j| conj[j].clone()).collect()).unwrap()
        }
        2 => random::random_commutative_system(rng, m, n),
        _ => {
            let (m2, n2) = (rng.random_range(1..=4), rng.random_range(1..=3));
            random::random_commutative_system(rng, m2, n2)
        }
    };
    (a, b)
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = common::rng(6);
    let (mut yes, mut no) = (0, 0);
    for t in 0..2000 {
        let (a, b) = commutative_pair(&mut rng);
        let ue = match decide_unitary_equivalence_commutative(&a, &b, 8) {
            Ok(UnitaryEquivalence::Equivalent(cert)) => {
                out.check(certify_unitary_equivalence(&cert, &a, &b).passes(), || format!("pair {t}: bad certificate"));
                true
            }
            Ok(UnitaryEquivalence::NotEquivalent { .. })
            | Err(DeciderError::ArityMismatch { .. })
            | Err(DeciderError::SpectrumSizeMismatch { .. }) => false,
            Err(e) => {
                out.check(false, || format!("pair {t}: error {e}"));
                continue;
            }
        };
        let (sa, sb) = (SpectrumDynamicalSystem::from_system(&a), SpectrumDynamicalSystem::from_system(&b));
        let pw = match decide_piecewise_conjugacy(&sa, &sb, 8) {
            Ok(PiecewiseOutcome::Conjugate(c)) => {
                out.check(verify_piecewise_certificate(&c, &sa, &sb), || format!("pair {t}: bad piecewise certificate"));
                true
            }
            Ok(PiecewiseOutcome::NotConjugate(_)) => false,
            Err(e) => {
                out.check(false, || format!("pair {t}: error {e}"));
                continue;
            }
        };
        if ue {
            yes += 1;
        } else {
            no += 1;
        }
        out.check(ue == pw, || format!("pair {t}: unitary equivalence {ue}, piecewise {pw}"));
    }
    out.summary = format!("2000 pairs, {yes} equivalent, {no} not");
    out
}

fn fock_algebra(t: usize) -> BlockAlgebra {
    let shapes: [&[usize]; 6] = [&[1], &[2], &[1, 1, 1], &[2, 1], &[2, 2], &[3]];
    BlockAlgebra::new(shapes[t % shapes.len()].to_vec()).unwrap()
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = common::rng(7);
    let mut max_dim = 0;
    for t in 0..50 {
        let alg = fock_algebra(t);
        let n = rng.random_range(1..=3);
        let level = rng.random_range(1..=3);
        let distinct = rng.random_range(1..=n);
        let pair = random::random_equivalent_pair(&mut rng, &alg, n, distinct);
        match validate_fock(&pair.certificate, &pair.a, &pair.b, level, DEFAULT_MAX_DIM) {
            Ok(v) => {
                max_dim = max_dim.max(v.dim_a.max(v.dim_b));
                out.check(v.passes(), || format!("system {t}: {v:?}"));
            }
            Err(e) => out.check(false, || format!("system {t}: {e}")),
        }

        // plant arbitrary coefficients and read them back
        let fb = build_fock(&pair.b, level, DEFAULT_MAX_DIM).unwrap();
        let planted = AlgebraMatrix::from_fn(&alg, n, n, |_, _| random::random_element(&mut rng, &alg));
        let images = plant_images(&planted, &fb).unwrap();
        let am = extract_associated_matrix(&images, &fb).unwrap();
        let err = am
            .entries
            .sub(&planted)
            .entries()
            .iter()
            .map(AlgebraElement::norm)
            .fold(0.0, f64::max);
        out.check(err <= 1e-10, || format!("system {t}: plant-and-recover error {err:.2e}"));
    }
    out.summary = format!("50 systems, largest Fock dimension {max_dim}");
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let tol = Tolerances::default();
    let mut rng = common::rng(8);
    let (mut worst_u, mut worst_i) = (0.0f64, 0.0f64);
    for t in 0..100 {
        let n = rng.random_range(1..=4);
        let d = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let m = random::random_invertible_instance(&mut rng, n, d, p);
        match polar_unitary(&m, &tol) {
            Ok(w) => {
                let u = w.matrix().unitarity_defect();
                let mut r = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let c = &w.entry(i, j).blocks()[0];
                        r = r.max(common::intertwining_defect(c, &m.row_reps()[i], &m.col_reps()[j]));
                    }
                }
                worst_u = worst_u.max(u);
                worst_i = worst_i.max(r);
                out.check(u <= 1e-9 && r <= 1e-8, || format!("instance {t}: unitarity {u:.2e}, intertwining {r:.2e}"));
            }
            Err(e) => out.check(false, || format!("instance {t}: {e}")),
        }
    }
    out.summary = format!("100 polar factors, unitarity {worst_u:.1e}, intertwining {worst_i:.1e}");
    out
}

fn report(number: usize, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    finish(number, limit, elapsed, out)
}

fn finish(number: usize, limit: Duration, elapsed: Duration, mut out: Outcome) -> bool {
    out.check(elapsed < limit, || format!("runtime {elapsed:.2?} exceeds {limit:?}"));
    let ok = out.failures.is_empty();
    println!(
        "criterion {number}: {} ({}; {:.2?})",
        if ok { "PASS" } else { "FAIL" },
        out.summary,
        elapsed
    );
    for f in out.failures.iter().filter(|f| !f.is_empty()) {
        println!("    {f}");
    }
    if out.failures.len() > 5 {
        println!("    ... {} failures in total", out.failures.len());
    }
    ok
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, secs(5), criterion_1);
    ok &= report(2, secs(30), criterion_2);
    ok &= report(3, secs(10), criterion_3);
    let start = Instant::now();
    let (c4, c5) = criteria_4_and_5();
    let elapsed = start.elapsed();
    ok &= finish(4, secs(60), elapsed, c4);
    ok &= finish(5, Duration::MAX, elapsed, c5);
    ok &= report(6, secs(60), criterion_6);
    ok &= report(7, secs(120), criterion_7);
    ok &= report(8, secs(10), criterion_8);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
