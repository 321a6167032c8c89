//! Decision procedures for outer conjugacy and unitary equivalence of the
//! associated correspondences, each positive answer carrying a certificate
//! that can be re-verified independently of the search that produced it.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{AlgebraElement, AlgebraError, MultivariableSystem, RepRef, StarIsomorphism};
use crate::intertwiner::{
    intertwiner_space, key_dichotomy, Dichotomy, IntertwinerError, IntertwinerMatrix,
};
use crate::linalg::{self, CMat, ONE};
use crate::matching::{next_permutation, BipartiteGraph, HallViolation};
use crate::matrix::AlgebraMatrix;
use crate::tol::{Tolerances, CERTIFICATE_TOL};

/// Default bound on the number of spectrum points for brute-force searches.
pub const DEFAULT_MAX_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeciderError {
    #[error("both algebras must have trivial center (a single block)")]
    TrivialCenterRequired,
    #[error("algebras M_{a} and M_{b} are not isomorphic")]
    AlgebraMismatch { a: usize, b: usize },
    #[error("systems have {a} and {b} maps")]
    ArityMismatch { a: usize, b: usize },
    #[error("spectra have {a} and {b} points")]
    SpectrumSizeMismatch { a: usize, b: usize },
    #[error("both algebras must be commutative (all blocks of size one)")]
    NotCommutative,
    #[error("{points} points exceed the search bound of {max}")]
    SearchBudgetExceeded { points: usize, max: usize },
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not invertible (smallest singular value {sigma_min:.3e})")]
    NotInvertible { sigma_min: f64 },
    #[error(transparent)]
    Intertwiner(#[from] IntertwinerError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `β_i = Ad(w_i) ∘ γ ∘ α_{π(i)} ∘ γ⁻¹` for every `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterConjugacyCertificate {
    pub gamma: StarIsomorphism,
    pub perm: Vec<usize>,
    pub unitaries: Vec<AlgebraElement>,
    pub report: OuterConjugacyReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterConjugacyReport {
    pub unitarity: f64,
    pub conjugation: f64,
}

impl OuterConjugacyReport {
    pub fn passes(&self) -> bool {
        self.unitarity <= CERTIFICATE_TOL && self.conjugation <= CERTIFICATE_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NotConjugate {
    ArityMismatch { a: usize, b: usize },
    /// Row `i` is `β_i`, column `j` is `γ α_j γ⁻¹`.
    NoMatching(HallViolation),
}

#[derive(Clone, Debug, PartialEq)]
pub enum OuterConjugacy {
    Conjugate(OuterConjugacyCertificate),
    NotConjugate(NotConjugate),
}

/// A *-isomorphism `γ: A → B` and a unitary `[u_ij] ∈ M_{n_β, n_α}(B)`
/// intertwining `{β_i}` and `{γ α_j γ⁻¹}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryEquivalenceCertificate {
    pub gamma: StarIsomorphism,
    pub matrix: AlgebraMatrix,
    pub report: UnitaryEquivalenceReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryEquivalenceReport {
    /// `‖U U* − I‖`.
    pub left_unitarity: f64,
    /// `‖U* U − I‖`.
    pub right_unitarity: f64,
    pub intertwining: f64,
}

impl UnitaryEquivalenceReport {
    pub fn passes(&self) -> bool {
        self.left_unitarity <= CERTIFICATE_TOL
            && self.right_unitarity <= CERTIFICATE_TOL
            && self.intertwining <= CERTIFICATE_TOL
    }

    fn failed() -> Self {
        UnitaryEquivalenceReport {
            left_unitarity: f64::INFINITY,
            right_unitarity: f64::INFINITY,
            intertwining: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum UnitaryEquivalence {
    Equivalent(UnitaryEquivalenceCertificate),
    NotEquivalent { bijections_tried: usize },
}

/// `γ α_j γ⁻¹` for every map of `a`.
pub fn transported_maps(
    gamma: &StarIsomorphism,
    a: &MultivariableSystem,
) -> Result<Vec<StarIsomorphism>, AlgebraError> {
    let inv = gamma.inverse();
    a.maps()
        .iter()
        .map(|alpha| gamma.compose(alpha)?.compose(&inv))
        .collect()
}

/// Unitary factor of the polar decomposition of a square invertible
/// intertwiner matrix, computed block by block over the target algebra.
/// The result intertwines the same families.
pub fn polar_unitary(m: &IntertwinerMatrix, tol: &Tolerances) -> Result<IntertwinerMatrix, DeciderError> {
    if m.rows() != m.cols() {
        return Err(DeciderError::NotSquare);
    }
    let mat = m.matrix();
    let alg = mat.algebra();
    let mut factors = Vec::with_capacity(alg.num_blocks());
    let mut sigma_min = f64::INFINITY;
    let mut sigma_max = 0.0f64;
    for k in 0..alg.num_blocks() {
        let (w, smin, smax) = linalg::polar_unitary_factor(&mat.block_matrix(k));
        sigma_min = sigma_min.min(smin);
        sigma_max = sigma_max.max(smax);
        factors.push(w);
    }
    if !(sigma_min > tol.zero * sigma_max) {
        return Err(DeciderError::NotInvertible { sigma_min });
    }
    let w = AlgebraMatrix::from_block_matrices(alg, m.rows(), m.cols(), &factors);
    Ok(IntertwinerMatrix::new(
        w,
        m.row_reps().to_vec(),
        m.col_reps().to_vec(),
    )?)
}

/// Outer conjugacy of automorphic systems over full matrix algebras.
///
/// `γ` is the canonical identification `M_d = M_d`; any other choice differs
/// by an inner automorphism that the `w_i` absorb.
pub fn decide_outer_conjugacy(
    a: &MultivariableSystem,
    b: &MultivariableSystem,
    tol: &Tolerances,
) -> Result<OuterConjugacy, DeciderError> {
    if !a.algebra().center_is_trivial() || !b.algebra().center_is_trivial() {
        return Err(DeciderError::TrivialCenterRequired);
    }
    let (da, db) = (a.algebra().block_sizes()[0], b.algebra().block_sizes()[0]);
    if da != db {
        return Err(DeciderError::AlgebraMismatch { a: da, b: db });
    }
    let n = a.arity();
    if n != b.arity() {
        return Ok(OuterConjugacy::NotConjugate(NotConjugate::ArityMismatch {
            a: n,
            b: b.arity(),
        }));
    }
    let gamma = StarIsomorphism::identity(b.algebra());
    let cols: Vec<_> = transported_maps(&gamma, a)?
        .iter()
        .map(|m| m.as_representation())
        .collect();
    let rows: Vec<_> = b.maps().iter().map(|m| m.as_representation()).collect();

    let mut candidates: Vec<Vec<Option<AlgebraElement>>> = vec![vec![None; n]; n];
    for (i, beta) in rows.iter().enumerate() {
        for (j, conj) in cols.iter().enumerate() {
            candidates[i][j] = intertwiner_space(beta, conj, tol)?.into_iter().next();
        }
    }
    let graph = BipartiteGraph::from_fn(n, |i, j| candidates[i][j].is_some());
    let perm = match graph.perfect_matching() {
        Ok(p) => p,
        Err(hall) => return Ok(OuterConjugacy::NotConjugate(NotConjugate::NoMatching(hall))),
    };
    let mut unitaries = Vec::with_capacity(n);
    for (i, &j) in perm.iter().enumerate() {
        let c = candidates[i][j].as_ref().expect("matched pairs have intertwiners");
        match key_dichotomy(c, &rows[i], &cols[j], tol)? {
            Dichotomy::Invertible(inv) => unitaries.push(inv.unitary),
            // a normalised basis vector cannot be zero
            Dichotomy::Zero { norm } => return Err(DeciderError::NotInvertible { sigma_min: norm }),
        }
    }
    let mut cert = OuterConjugacyCertificate {
        gamma,
        perm,
        unitaries,
        report: OuterConjugacyReport {
            unitarity: 0.0,
            conjugation: 0.0,
        },
    };
    cert.report = verify_outer_conjugacy(&cert, a, b);
    Ok(OuterConjugacy::Conjugate(cert))
}

/// Recomputes `‖w_i w_i* − 1‖` and
/// `‖β_i(e) − w_i γα_{π(i)}γ⁻¹(e) w_i*‖` over the matrix units `e` of `B`.
pub fn verify_outer_conjugacy(
    cert: &OuterConjugacyCertificate,
    a: &MultivariableSystem,
    b: &MultivariableSystem,
) -> OuterConjugacyReport {
    let bad = OuterConjugacyReport {
        unitarity: f64::INFINITY,
        conjugation: f64::INFINITY,
    };
    let n = b.arity();
    if cert.perm.len() != n
        || cert.unitaries.len() != n
        || a.arity() != n
        || cert.perm.iter().any(|&p| p >= n)
        || cert.gamma.source() != a.algebra()
        || cert.gamma.target() != b.algebra()
        || cert.unitaries.iter().any(|w| !w.belongs_to(b.algebra()))
    {
        return bad;
    }
    let Ok(conj) = transported_maps(&cert.gamma, a) else {
        return bad;
    };
    let unitarity = cert
        .unitaries
        .iter()
        .flat_map(|w| w.blocks().iter().map(linalg::unitarity_defect))
        .fold(0.0, f64::max);
    let units = b.algebra().matrix_units();
    let mut conjugation = 0.0f64;
    for (i, (beta, w)) in b.maps().iter().zip(&cert.unitaries).enumerate() {
        let alpha = &conj[cert.perm[i]];
        for e in &units {
            let lhs = beta.apply_unchecked(e);
            let rhs = &(w * &alpha.apply_unchecked(e)) * &w.adjoint();
            conjugation = conjugation.max((&lhs - &rhs).norm());
        }
    }
    OuterConjugacyReport {
        unitarity,
        conjugation,
    }
}

fn reps_of(maps: &[StarIsomorphism]) -> Vec<RepRef> {
    maps.iter().map(|m| Arc::new(m.as_representation())).collect()
}

/// Recomputes both unitarity defects and the intertwining residual of a
/// unitary-equivalence certificate. Works for any block algebras; shape
/// mismatches report infinite residuals.
pub fn certify_unitary_equivalence(
    cert: &UnitaryEquivalenceCertificate,
    a: &MultivariableSystem,
    b: &MultivariableSystem,
) -> UnitaryEquivalenceReport {
    let u = &cert.matrix;
    if cert.gamma.source() != a.algebra()
        || cert.gamma.target() != b.algebra()
        || u.algebra() != b.algebra()
        || u.rows() != b.arity()
        || u.cols() != a.arity()
    {
        return UnitaryEquivalenceReport::failed();
    }
    let Ok(conj) = transported_maps(&cert.gamma, a) else {
        return UnitaryEquivalenceReport::failed();
    };
    let left = u
        .mul(&u.adjoint())
        .sub(&AlgebraMatrix::identity(u.algebra(), u.rows()))
        .norm();
    let right = u
        .adjoint()
        .mul(u)
        .sub(&AlgebraMatrix::identity(u.algebra(), u.cols()))
        .norm();
    let intertwining = match IntertwinerMatrix::new(u.clone(), reps_of(b.maps()), reps_of(&conj)) {
        Ok(m) => m.residual(),
        Err(_) => f64::INFINITY,
    };
    UnitaryEquivalenceReport {
        left_unitarity: left,
        right_unitarity: right,
        intertwining,
    }
}

/// The diagonal-up-to-permutation unitary `u_{i,π(i)} = w_i` of an
/// outer-conjugacy certificate.
pub fn outer_to_unitary_equivalence(
    cert: &OuterConjugacyCertificate,
    a: &MultivariableSystem,
    b: &MultivariableSystem,
) -> UnitaryEquivalenceCertificate {
    let alg = cert.gamma.target().clone();
    let n = cert.perm.len();
    let matrix = AlgebraMatrix::from_fn(&alg, n, n, |i, j| {
        if cert.perm[i] == j {
            cert.unitaries[i].clone()
        } else {
            AlgebraElement::zero(&alg)
        }
    });
    let mut out = UnitaryEquivalenceCertificate {
        gamma: cert.gamma.clone(),
        matrix,
        report: UnitaryEquivalenceReport::failed(),
    };
    out.report = certify_unitary_equivalence(&out, a, b);
    out
}

/// Unitary equivalence over commutative algebras `C^m`.
///
/// Searches point bijections `γ̂` in lexicographic order; for each point `x`
/// the admissible pattern `P_x(i, j) = [β̂_i(x) = (γα_jγ⁻¹)^(x)]` must carry a
/// unitary, which happens exactly when it carries a permutation matrix.
pub fn decide_unitary_equivalence_commutative(
    a: &MultivariableSystem,
    b: &MultivariableSystem,
    max_points: usize,
) -> Result<UnitaryEquivalence, DeciderError> {
    if !a.algebra().is_commutative() || !b.algebra().is_commutative() {
        return Err(DeciderError::NotCommutative);
    }
    if a.arity() != b.arity() {
        return Err(DeciderError::ArityMismatch {
            a: a.arity(),
            b: b.arity(),
        });
    }
    let (ma, mb) = (a.algebra().num_blocks(), b.algebra().num_blocks());
    if ma != mb {
        return Err(DeciderError::SpectrumSizeMismatch { a: ma, b: mb });
    }
    if ma > max_points {
        return Err(DeciderError::SearchBudgetExceeded {
            points: ma,
            max: max_points,
        });
    }
    let (m, n) = (ma, a.arity());
    let sigma_a: Vec<&[usize]> = a.maps().iter().map(|x| x.perm()).collect();
    let sigma_b: Vec<&[usize]> = b.maps().iter().map(|x| x.perm()).collect();

    let mut g: Vec<usize> = (0..m).collect();
    let mut tried = 0usize;
    loop {
        tried += 1;
        let g_inv = crate::algebra::invert_permutation(&g);
        let mut per_point = Vec::with_capacity(m);
        for x in 0..m {
            let graph = BipartiteGraph::from_fn(n, |i, j| sigma_b[i][x] == g_inv[sigma_a[j][g[x]]]);
            match graph.perfect_matching() {
                Ok(p) => per_point.push(p),
                Err(_) => break,
            }
        }
        if per_point.len() == m {
            let tol = Tolerances::default();
            let ones = vec![CMat::from_element(1, 1, ONE); m];
            let gamma = StarIsomorphism::new(a.algebra().clone(), b.algebra().clone(), g, ones, &tol)?;
            let alg = b.algebra();
            let matrix = AlgebraMatrix::from_fn(alg, n, n, |i, j| {
                let coords: Vec<_> = (0..m)
                    .map(|x| if per_point[x][i] == j { ONE } else { linalg::ZERO })
                    .collect();
                AlgebraElement::from_coordinates(alg, &coords).expect("one coordinate per point")
            });
            let mut cert = UnitaryEquivalenceCertificate {
                gamma,
                matrix,
                report: UnitaryEquivalenceReport::failed(),
            };
            cert.report = certify_unitary_equivalence(&cert, a, b);
            return Ok(UnitaryEquivalence::Equivalent(cert));
        }
        if !next_permutation(&mut g) {
            return Ok(UnitaryEquivalence::NotEquivalent {
                bijections_tried: tried,
            });
        }
    }
}

/// Identity certificate for a system compared with itself.
pub fn identity_certificate(a: &MultivariableSystem) -> UnitaryEquivalenceCertificate {
    let mut cert = UnitaryEquivalenceCertificate {
        gamma: StarIsomorphism::identity(a.algebra()),
        matrix: AlgebraMatrix::identity(a.algebra(), a.arity()),
        report: UnitaryEquivalenceReport::failed(),
    };
    cert.report = certify_unitary_equivalence(&cert, a, a);
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use crate::linalg::C64;

    fn commutative_system(m: usize, perms: &[&[usize]]) -> MultivariableSystem {
        let alg = BlockAlgebra::commutative(m).unwrap();
        let maps = perms
            .iter()
            .map(|p| StarIsomorphism::block_permutation(&alg, p.to_vec()).unwrap())
            .collect();
        MultivariableSystem::new(alg, maps).unwrap()
    }

    #[test]
    fn swap_and_identity_exchange_roles() {
        let a = commutative_system(2, &[&[1, 0], &[0, 1]]);
        let b = commutative_system(2, &[&[0, 1], &[1, 0]]);
        let UnitaryEquivalence::Equivalent(cert) = decide_unitary_equivalence_commutative(&a, &b, 8).unwrap() else {
            panic!("expected equivalence");
        };
        assert!(cert.report.passes());
        // the per-point matching is the transposition at both points
        for x in 0..2 {
            assert_eq!(cert.matrix.get(0, 1).block(x)[(0, 0)], ONE);
            assert_eq!(cert.matrix.get(1, 0).block(x)[(0, 0)], ONE);
        }
    }

    #[test]
    fn swap_is_not_equivalent_to_identity() {
        let a = commutative_system(2, &[&[1, 0]]);
        let b = commutative_system(2, &[&[0, 1]]);
        assert_eq!(
            decide_unitary_equivalence_commutative(&a, &b, 8).unwrap(),
            UnitaryEquivalence::NotEquivalent { bijections_tried: 2 }
        );
    }

    #[test]
    fn commutative_preconditions() {
        let a = commutative_system(2, &[&[1, 0]]);
        let b = commutative_system(2, &[&[1, 0], &[0, 1]]);
        let c = commutative_system(3, &[&[0, 1, 2]]);
        assert!(matches!(
            decide_unitary_equivalence_commutative(&a, &b, 8),
            Err(DeciderError::ArityMismatch { .. })
        ));
        assert!(matches!(
            decide_unitary_equivalence_commutative(&a, &c, 8),
            Err(DeciderError::SpectrumSizeMismatch { .. })
        ));
        assert!(matches!(
            decide_unitary_equivalence_commutative(&c, &c, 2),
            Err(DeciderError::SearchBudgetExceeded { .. })
        ));
    }

    #[test]
    fn identical_systems_have_identity_certificate() {
        let a = commutative_system(3, &[&[1, 2, 0], &[0, 2, 1]]);
        let cert = identity_certificate(&a);
        assert_eq!(cert.report.left_unitarity, 0.0);
        assert_eq!(cert.report.intertwining, 0.0);
    }

    #[test]
    fn outer_conjugacy_on_full_matrix_algebra() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let a = MultivariableSystem::new(m2.clone(), vec![StarIsomorphism::identity(&m2)]).unwrap();
        let OuterConjugacy::Conjugate(cert) = decide_outer_conjugacy(&a, &a, &Tolerances::default()).unwrap() else {
            panic!();
        };
        assert!(cert.report.passes());
        let w = cert.unitaries[0].block(0);
        // w is a phase times the identity
        let (lambda, defect) = linalg::scalar_part(w);
        assert!(defect < 1e-12 && (lambda.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outer_conjugacy_requires_trivial_center() {
        let a2 = BlockAlgebra::new(vec![2, 2]).unwrap();
        let s = MultivariableSystem::new(a2.clone(), vec![StarIsomorphism::identity(&a2)]).unwrap();
        assert_eq!(
            decide_outer_conjugacy(&s, &s, &Tolerances::default()),
            Err(DeciderError::TrivialCenterRequired)
        );
    }

    #[test]
    fn corrupted_certificate_fails() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let a = MultivariableSystem::new(
            m2.clone(),
            vec![StarIsomorphism::identity(&m2), StarIsomorphism::identity(&m2)],
        )
        .unwrap();
        let mut cert = identity_certificate(&a);
        cert.matrix.set(0, 0, AlgebraElement::zero(&m2));
        let report = certify_unitary_equivalence(&cert, &a, &a);
        assert!(report.left_unitarity >= 0.5);
        assert!(!report.passes());
    }

    #[test]
    fn polar_of_positive_scalar_is_one() {
        let c1 = BlockAlgebra::full_matrix(1).unwrap();
        let id: RepRef = Arc::new(StarIsomorphism::identity(&c1).as_representation());
        let m = IntertwinerMatrix::new(
            AlgebraMatrix::from_fn(&c1, 1, 1, |_, _| AlgebraElement::scalar(&c1, C64::new(2.0, 0.0))),
            vec![id.clone()],
            vec![id],
        )
        .unwrap();
        let w = polar_unitary(&m, &Tolerances::default()).unwrap();
        assert!((w.entry(0, 0).block(0)[(0, 0)] - ONE).norm() < 1e-14);
    }
}
