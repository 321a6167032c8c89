//! Intertwiner spaces and the zero-or-invertible dichotomy.
//!
//! `c` intertwines `φ` and `ψ` when `φ(b) c = c ψ(b)` for every `b`; it is
//! enough to check the matrix units of the source algebra. Over a target
//! with trivial center such a `c` is either zero or a nonzero multiple of a
//! unitary, which [`key_dichotomy`] decides and certifies.

use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{AlgebraElement, AlgebraError, RepRef, Representation};
use crate::linalg::{self, CMat, C64};
use crate::matrix::AlgebraMatrix;
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntertwinerError {
    #[error("representations have different source algebras")]
    SourceMismatch,
    #[error("representations have different target algebras")]
    TargetMismatch,
    #[error("the target algebra must have trivial center (a single block)")]
    TrivialCenterRequired,
    #[error("the {0} representation is not onto its target")]
    NotSurjective(&'static str),
    #[error("not an intertwiner: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotAnIntertwiner { residual: f64, tolerance: f64 },
    #[error("norm {norm:.3e} is too close to the zero threshold {threshold:.3e} to classify")]
    Borderline { norm: f64, threshold: f64 },
    #[error("c c* or c* c is not scalar (defect {defect:.3e})")]
    NotScalar { defect: f64 },
    #[error("{rows} row and {cols} column representations do not fit a {m}x{n} matrix")]
    FamilySize {
        rows: usize,
        cols: usize,
        m: usize,
        n: usize,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// An invertible intertwiner `c = √λ · u` with `u` unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertibleIntertwiner {
    /// `c c* = c* c = λ I`.
    pub lambda: f64,
    pub inverse: AlgebraElement,
    pub unitary: AlgebraElement,
}

impl InvertibleIntertwiner {
    /// Every singular value of `c` equals `√λ`.
    pub fn smallest_singular_value(&self) -> f64 {
        libm::sqrt(self.lambda)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dichotomy {
    Zero { norm: f64 },
    Invertible(InvertibleIntertwiner),
}

impl Dichotomy {
    pub fn is_zero(&self) -> bool {
        matches!(self, Dichotomy::Zero { .. })
    }
}

fn check_pair(phi: &Representation, psi: &Representation) -> Result<(), IntertwinerError> {
    if phi.source() != psi.source() {
        return Err(IntertwinerError::SourceMismatch);
    }
    if phi.target() != psi.target() {
        return Err(IntertwinerError::TargetMismatch);
    }
    Ok(())
}

/// `max_g ‖φ(g) c − c ψ(g)‖` over the matrix units `g` of the source.
pub fn intertwining_residual(c: &AlgebraElement, phi: &Representation, psi: &Representation) -> f64 {
    phi.images()
        .iter()
        .zip(psi.images())
        .map(|(pg, qg)| (&(pg * c) - &(c * qg)).norm())
        .fold(0.0, f64::max)
}

/// Orthonormal (Hilbert-Schmidt) basis of `{c : φ(b) c = c ψ(b) ∀ b}`.
///
/// The target may have several blocks; the space splits blockwise and each
/// block's part is the nullspace of the stacked map
/// `vec(c) ↦ (I ⊗ φ(g) − ψ(g)ᵀ ⊗ I) vec(c)` over the generators `g`.
pub fn intertwiner_space(
    phi: &Representation,
    psi: &Representation,
    tol: &Tolerances,
) -> Result<Vec<AlgebraElement>, IntertwinerError> {
    check_pair(phi, psi)?;
    let target = phi.target();
    let gens = phi.images().len();
    let mut basis = Vec::new();
    for (t, &d) in target.block_sizes().iter().enumerate() {
        let dd = d * d;
        let id = linalg::identity(d);
        let mut stacked = CMat::zeros(gens * dd, dd);
        let mut scale = 0.0f64;
        for (g, (pg, qg)) in phi.images().iter().zip(psi.images()).enumerate() {
            let k = id.kronecker(pg.block(t)) - qg.block(t).transpose().kronecker(&id);
            stacked.view_mut((g * dd, 0), (dd, dd)).copy_from(&k);
            scale = scale.max(linalg::op_norm(pg.block(t)) + linalg::op_norm(qg.block(t)));
        }
        // near-equal representations make the whole stack tiny, so the
        // threshold is tied to the size of the inputs rather than the stack
        for v in linalg::nullspace(&stacked, tol.zero, scale) {
            let block = CMat::from_column_slice(d, d, v.as_slice());
            basis.push(AlgebraElement::from_block(target, t, block)?);
        }
    }
    Ok(basis)
}

/// Decides whether an intertwiner over a trivial-center target is zero or
/// invertible, with `‖c‖` measured in absolute units.
pub fn key_dichotomy(
    c: &AlgebraElement,
    phi: &Representation,
    psi: &Representation,
    tol: &Tolerances,
) -> Result<Dichotomy, IntertwinerError> {
    key_dichotomy_scaled(c, phi, psi, 1.0, tol)
}

/// [`key_dichotomy`] with the zero threshold taken relative to `scale`.
pub fn key_dichotomy_scaled(
    c: &AlgebraElement,
    phi: &Representation,
    psi: &Representation,
    scale: f64,
    tol: &Tolerances,
) -> Result<Dichotomy, IntertwinerError> {
    check_pair(phi, psi)?;
    if !phi.target().center_is_trivial() {
        return Err(IntertwinerError::TrivialCenterRequired);
    }
    if !c.belongs_to(phi.target()) {
        return Err(AlgebraError::AlgebraMismatch.into());
    }
    if !phi.is_surjective(tol) {
        return Err(IntertwinerError::NotSurjective("row"));
    }
    if !psi.is_surjective(tol) {
        return Err(IntertwinerError::NotSurjective("column"));
    }
    classify(c, phi, psi, scale, tol)
}

/// The dichotomy without the surjectivity precondition check.
pub(crate) fn classify(
    c: &AlgebraElement,
    phi: &Representation,
    psi: &Representation,
    scale: f64,
    tol: &Tolerances,
) -> Result<Dichotomy, IntertwinerError> {
    let norm = c.norm();
    let residual = intertwining_residual(c, phi, psi);
    let allowed = tol.hom * norm.max(scale);
    if residual > allowed {
        return Err(IntertwinerError::NotAnIntertwiner {
            residual,
            tolerance: allowed,
        });
    }
    let threshold = tol.zero * scale;
    if norm <= threshold {
        return Ok(Dichotomy::Zero { norm });
    }
    if norm < 10.0 * threshold {
        return Err(IntertwinerError::Borderline { norm, threshold });
    }
    let block = c.block(0);
    let (lambda_left, defect_left) = linalg::scalar_part(&(block * block.adjoint()));
    let (_, defect_right) = linalg::scalar_part(&(block.adjoint() * block));
    let defect = defect_left.max(defect_right);
    if defect > tol.zero * norm * norm {
        return Err(IntertwinerError::NotScalar { defect });
    }
    let lambda = lambda_left.re;
    let inverse = c.adjoint().scale(C64::new(1.0 / lambda, 0.0));
    let unitary = c.scale(C64::new(1.0 / libm::sqrt(lambda), 0.0));
    Ok(Dichotomy::Invertible(InvertibleIntertwiner {
        lambda,
        inverse,
        unitary,
    }))
}

/// A matrix over the common target algebra of two representation families,
/// together with its intertwining residual.
#[derive(Clone, Debug, PartialEq)]
pub struct IntertwinerMatrix {
    matrix: AlgebraMatrix,
    row_reps: Vec<RepRef>,
    col_reps: Vec<RepRef>,
    residual: f64,
}

impl IntertwinerMatrix {
    pub fn new(
        matrix: AlgebraMatrix,
        row_reps: Vec<RepRef>,
        col_reps: Vec<RepRef>,
    ) -> Result<Self, IntertwinerError> {
        if row_reps.len() != matrix.rows() || col_reps.len() != matrix.cols() {
            return Err(IntertwinerError::FamilySize {
                rows: row_reps.len(),
                cols: col_reps.len(),
                m: matrix.rows(),
                n: matrix.cols(),
            });
        }
        if let Some(first) = row_reps.iter().chain(&col_reps).next() {
            for r in row_reps.iter().chain(&col_reps) {
                check_pair(first, r)?;
            }
            if first.target() != matrix.algebra() {
                return Err(IntertwinerError::TargetMismatch);
            }
        }
        let residual = matrix_residual(&matrix, &row_reps, &col_reps);
        Ok(IntertwinerMatrix {
            matrix,
            row_reps,
            col_reps,
            residual,
        })
    }

    pub fn matrix(&self) -> &AlgebraMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> AlgebraMatrix {
        self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn entry(&self, i: usize, j: usize) -> &AlgebraElement {
        self.matrix.get(i, j)
    }

    pub fn row_reps(&self) -> &[RepRef] {
        &self.row_reps
    }

    pub fn col_reps(&self) -> &[RepRef] {
        &self.col_reps
    }

    /// Intertwining residual recorded at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Largest entry norm; the reference scale for relative thresholds.
    pub fn scale(&self) -> f64 {
        self.matrix.max_entry_norm()
    }

    pub fn is_valid(&self, tol: &Tolerances) -> bool {
        self.residual <= tol.hom * self.scale()
    }
}

fn matrix_residual(matrix: &AlgebraMatrix, rows: &[RepRef], cols: &[RepRef]) -> f64 {
    let mut worst = 0.0f64;
    for (i, phi) in rows.iter().enumerate() {
        for (j, psi) in cols.iter().enumerate() {
            worst = worst.max(intertwining_residual(matrix.get(i, j), phi, psi));
        }
    }
    worst
}

/// Recomputes `max_{i,j,g} ‖φ_i(g) c_ij − c_ij ψ_j(g)‖`.
pub fn verify_intertwining(m: &IntertwinerMatrix) -> f64 {
    matrix_residual(&m.matrix, &m.row_reps, &m.col_reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{BlockAlgebra, StarIsomorphism};
    use crate::linalg::{ONE, ZERO};
    use alloc::sync::Arc;
    use alloc::vec;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn schur_for_defining_representation() {
        for d in 1..=3 {
            let md = BlockAlgebra::full_matrix(d).unwrap();
            let id = StarIsomorphism::identity(&md).as_representation();
            let basis = intertwiner_space(&id, &id, &tol()).unwrap();
            assert_eq!(basis.len(), 1);
            let b = basis[0].block(0);
            let (lambda, defect) = linalg::scalar_part(b);
            assert!(defect < 1e-12);
            assert!((lambda.norm() - 1.0 / (d as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_characters_have_no_intertwiners() {
        let c2 = BlockAlgebra::commutative(2).unwrap();
        let r1 = Representation::block_projection(&c2, 0);
        let r2 = Representation::block_projection(&c2, 1);
        assert!(intertwiner_space(&r1, &r2, &tol()).unwrap().is_empty());
        assert_eq!(intertwiner_space(&r1, &r1, &tol()).unwrap().len(), 1);
    }

    #[test]
    fn dichotomy_trivial_cases() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let id = StarIsomorphism::identity(&m2).as_representation();
        let zero = AlgebraElement::zero(&m2);
        assert!(key_dichotomy(&zero, &id, &id, &tol()).unwrap().is_zero());
        let one = AlgebraElement::identity(&m2);
        match key_dichotomy(&one, &id, &id, &tol()).unwrap() {
            Dichotomy::Invertible(inv) => {
                assert_eq!(inv.inverse, one);
                assert_eq!(inv.unitary, one);
                assert!((inv.lambda - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dichotomy_rejects_non_intertwiner_and_borderline() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let id = StarIsomorphism::identity(&m2).as_representation();
        let e12 = AlgebraElement::matrix_unit(&m2, 0, 0, 1);
        assert!(matches!(
            key_dichotomy(&e12, &id, &id, &tol()),
            Err(IntertwinerError::NotAnIntertwiner { .. })
        ));
        let small = AlgebraElement::scalar(&m2, C64::new(3e-8, 0.0));
        assert!(matches!(
            key_dichotomy(&small, &id, &id, &tol()),
            Err(IntertwinerError::Borderline { .. })
        ));
    }

    #[test]
    fn dichotomy_requires_trivial_center_and_surjectivity() {
        let c2 = BlockAlgebra::commutative(2).unwrap();
        let id = StarIsomorphism::identity(&c2).as_representation();
        assert_eq!(
            key_dichotomy(&AlgebraElement::zero(&c2), &id, &id, &tol()),
            Err(IntertwinerError::TrivialCenterRequired)
        );
        // C -> M_2, λ ↦ λ I is not onto
        let c1 = BlockAlgebra::full_matrix(1).unwrap();
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let scalar =
            Representation::new(c1, m2.clone(), vec![AlgebraElement::identity(&m2)]).unwrap();
        assert!(matches!(
            key_dichotomy(&AlgebraElement::zero(&m2), &scalar, &scalar, &tol()),
            Err(IntertwinerError::NotSurjective(_))
        ));
    }

    #[test]
    fn adjoint_swaps_roles() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let u = AlgebraElement::new(
            &m2,
            vec![CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])],
        )
        .unwrap();
        let phi = StarIsomorphism::inner(&u, &tol()).unwrap().as_representation();
        let psi = StarIsomorphism::identity(&m2).as_representation();
        let c = u.scale(C64::new(2.0, 0.0));
        let r1 = intertwining_residual(&c, &phi, &psi);
        let r2 = intertwining_residual(&c.adjoint(), &psi, &phi);
        assert!(r1 < 1e-14 && (r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_residual() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let id: RepRef = Arc::new(StarIsomorphism::identity(&m2).as_representation());
        let m = IntertwinerMatrix::new(
            AlgebraMatrix::zeros(&m2, 2, 3),
            vec![id.clone(); 2],
            vec![id; 3],
        )
        .unwrap();
        assert_eq!(verify_intertwining(&m), 0.0);
        assert!(m.is_valid(&tol()));
    }
}
