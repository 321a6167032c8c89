//! Intertwining-preserving Gaussian elimination with replayable certificates,
//! and right-invertibility over block algebras.
//!
//! Over a target with trivial center every entry of an intertwiner matrix is
//! zero or invertible, so elementary row operations `row_h += −c_hk c_kk⁻¹ ·
//! row_k` and column permutations keep the matrix an intertwiner (with the
//! column family permuted). [`gaussian_eliminate`] drives a right-invertible
//! `m × n` intertwiner to an invertible diagonal, or reports the row that
//! became zero.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{AlgebraElement, RepRef};
use crate::hash::hash_intertwiner_matrix;
use crate::intertwiner::{classify, intertwining_residual, Dichotomy, IntertwinerError, IntertwinerMatrix};
use crate::linalg::{self, CMat, C64};
use crate::matrix::AlgebraMatrix;
use crate::tol::{Tolerances, CERTIFICATE_TOL};

/// Relative agreement required between a replayed and a recorded diagonal.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EliminationError {
    #[error("elimination needs a target algebra with trivial center")]
    TrivialCenterRequired,
    #[error("matrix has {rows} rows but {cols} columns; at least as many rows are required")]
    TooFewRows { rows: usize, cols: usize },
    #[error("permutation of length {found} does not fit {expected} columns")]
    PermutationSize { expected: usize, found: usize },
    #[error("row indices ({h}, {k}) are out of range or equal")]
    BadRows { h: usize, k: usize },
    #[error("pivot ({row}, {col}) is not invertible")]
    NonInvertiblePivot { row: usize, col: usize },
    #[error("every candidate pivot in row {row} is too close to zero to classify")]
    NumericallyIndeterminate { row: usize },
    #[error("input is not an intertwiner (residual {residual:.3e})")]
    NotAnIntertwiner { residual: f64 },
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not right invertible")]
    NotRightInvertible,
    #[error("computed inverse fails the two-sided check (defect {defect:.3e})")]
    InverseCheckFailed { defect: f64 },
    #[error("certificate was issued for a different input")]
    HashMismatch,
    #[error("certificate is malformed: {0}")]
    MalformedCertificate(&'static str),
    #[error(transparent)]
    Intertwiner(#[from] IntertwinerError),
}

/// `row_target += multiplier · row_source`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowOp {
    pub target: usize,
    pub source: usize,
    pub multiplier: AlgebraElement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EliminationCertificate {
    pub input_hash: String,
    pub rows: usize,
    pub cols: usize,
    /// Column `j` of the reduced matrix is column `col_perm[j]` of the input.
    pub col_perm: Vec<usize>,
    /// Forward (below-diagonal) operations first, then the diagonalising pass.
    pub row_ops: Vec<RowOp>,
    pub forward_ops: usize,
    pub diagonal: Vec<AlgebraElement>,
    /// Intertwining residual after each pivot step and after the final pass.
    pub step_residuals: Vec<f64>,
}

/// A row that vanished during elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionContradiction {
    pub zero_row: usize,
    pub step: usize,
    pub col_perm: Vec<usize>,
    pub state: AlgebraMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EliminationOutcome {
    Certified(EliminationCertificate),
    Contradiction(DimensionContradiction),
}

/// Result of replaying a certificate against its input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayReport {
    /// `max_i ‖replayed_ii − diagonal_i‖ / scale`.
    pub replay_error: f64,
    /// Largest off-diagonal entry after replay, relative to scale.
    pub off_diagonal: f64,
    /// Largest residual of `diagonal_i` against `φ_i`, `ψ_{π(i)}`.
    pub diagonal_residual: f64,
    pub scale: f64,
}

impl ReplayReport {
    pub fn passes(&self) -> bool {
        self.replay_error <= REPLAY_TOL
            && self.off_diagonal <= REPLAY_TOL
            && self.diagonal_residual <= REPLAY_TOL * self.scale.max(1.0)
    }
}

/// `M · F_π` with the column family permuted to `ψ_{π(j)}`.
pub fn column_permute(
    m: &IntertwinerMatrix,
    perm: &[usize],
) -> Result<IntertwinerMatrix, EliminationError> {
    let n = m.cols();
    let mut seen = alloc::vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || core::mem::replace(&mut seen[p], true)) {
        return Err(EliminationError::PermutationSize {
            expected: n,
            found: perm.len(),
        });
    }
    let cols = perm.iter().map(|&p| m.col_reps()[p].clone()).collect();
    Ok(IntertwinerMatrix::new(
        m.matrix().permute_columns(perm),
        m.row_reps().to_vec(),
        cols,
    )?)
}

fn apply_row_op(w: &mut AlgebraMatrix, op: &RowOp) {
    for j in 0..w.cols() {
        let updated = w.get(op.target, j) + &(&op.multiplier * w.get(op.source, j));
        w.set(op.target, j, updated);
    }
}

fn pivot_inverse(
    w: &AlgebraMatrix,
    rows: &[RepRef],
    cols: &[RepRef],
    k: usize,
    scale: f64,
    tol: &Tolerances,
) -> Result<AlgebraElement, EliminationError> {
    match classify(w.get(k, k), &rows[k], &cols[k], scale, tol) {
        Ok(Dichotomy::Invertible(inv)) => Ok(inv.inverse),
        Ok(Dichotomy::Zero { .. }) | Err(IntertwinerError::Borderline { .. }) => {
            Err(EliminationError::NonInvertiblePivot { row: k, col: k })
        }
        Err(e) => Err(e.into()),
    }
}

/// `E_hk · M`: adds `−c_hk c_kk⁻¹` times row `k` to row `h`.
pub fn row_eliminate(
    m: &IntertwinerMatrix,
    h: usize,
    k: usize,
    tol: &Tolerances,
) -> Result<(IntertwinerMatrix, RowOp), EliminationError> {
    if h == k || h >= m.rows() || k >= m.rows() || k >= m.cols() {
        return Err(EliminationError::BadRows { h, k });
    }
    if !m.matrix().algebra().center_is_trivial() {
        return Err(EliminationError::TrivialCenterRequired);
    }
    let inverse = pivot_inverse(m.matrix(), m.row_reps(), m.col_reps(), k, m.scale(), tol)?;
    let multiplier = (m.entry(h, k) * &inverse).scale(C64::new(-1.0, 0.0));
    let op = RowOp {
        target: h,
        source: k,
        multiplier,
    };
    let mut w = m.matrix().clone();
    apply_row_op(&mut w, &op);
    let out = IntertwinerMatrix::new(w, m.row_reps().to_vec(), m.col_reps().to_vec())?;
    Ok((out, op))
}

fn residual_of(w: &AlgebraMatrix, rows: &[RepRef], cols: &[RepRef]) -> f64 {
    let mut worst = 0.0f64;
    for (i, phi) in rows.iter().enumerate() {
        for (j, psi) in cols.iter().enumerate() {
            worst = worst.max(intertwining_residual(w.get(i, j), phi, psi));
        }
    }
    worst
}

fn check_surjective(reps: &[RepRef], tol: &Tolerances, which: &'static str) -> Result<(), EliminationError> {
    let mut checked: Vec<&RepRef> = Vec::new();
    for r in reps {
        if checked.iter().any(|c| alloc::sync::Arc::ptr_eq(c, r)) {
            continue;
        }
        if !r.is_surjective(tol) {
            return Err(IntertwinerError::NotSurjective(which).into());
        }
        checked.push(r);
    }
    Ok(())
}

/// Structured Gaussian elimination over a trivial-center target.
///
/// Pivots are chosen per row among entries that classify as invertible,
/// preferring the best conditioned one; the first column index wins ties.
pub fn gaussian_eliminate(
    m: &IntertwinerMatrix,
    tol: &Tolerances,
) -> Result<EliminationOutcome, EliminationError> {
    let (rows, cols) = (m.rows(), m.cols());
    if !m.matrix().algebra().center_is_trivial() {
        return Err(EliminationError::TrivialCenterRequired);
    }
    if rows < cols {
        return Err(EliminationError::TooFewRows { rows, cols });
    }
    if !m.is_valid(tol) {
        return Err(EliminationError::NotAnIntertwiner {
            residual: m.residual(),
        });
    }
    check_surjective(m.row_reps(), tol, "row")?;
    check_surjective(m.col_reps(), tol, "column")?;

    let scale = m.scale();
    let row_reps = m.row_reps();
    let mut col_reps: Vec<RepRef> = m.col_reps().to_vec();
    let mut w = m.matrix().clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut ops = Vec::new();
    let mut step_residuals = Vec::new();

    for k in 0..cols {
        let mut best: Option<(usize, f64, AlgebraElement)> = None;
        let mut borderline = false;
        for j in k..cols {
            match classify(w.get(k, j), &row_reps[k], &col_reps[j], scale, tol) {
                Ok(Dichotomy::Zero { .. }) => {}
                Ok(Dichotomy::Invertible(inv)) => {
                    let smin = inv.smallest_singular_value();
                    if best.as_ref().is_none_or(|(_, s, _)| smin > *s) {
                        best = Some((j, smin, inv.inverse));
                    }
                }
                Err(IntertwinerError::Borderline { .. }) => borderline = true,
                Err(e) => return Err(e.into()),
            }
        }
        let Some((j, _, inverse)) = best else {
            if borderline {
                return Err(EliminationError::NumericallyIndeterminate { row: k });
            }
            return Ok(EliminationOutcome::Contradiction(DimensionContradiction {
                zero_row: k,
                step: k,
                col_perm: perm,
                state: w,
            }));
        };
        if j != k {
            let mut swap: Vec<usize> = (0..cols).collect();
            swap.swap(k, j);
            w = w.permute_columns(&swap);
            col_reps.swap(k, j);
            perm.swap(k, j);
        }
        for i in k + 1..rows {
            let below = w.get(i, k);
            if below.blocks().iter().all(|b| b.iter().all(|z| *z == linalg::ZERO)) {
                continue;
            }
            let op = RowOp {
                target: i,
                source: k,
                multiplier: (below * &inverse).scale(C64::new(-1.0, 0.0)),
            };
            apply_row_op(&mut w, &op);
            ops.push(op);
        }
        step_residuals.push(residual_of(&w, row_reps, &col_reps));
    }

    if rows > cols {
        // every column has been cleared below its pivot
        return Ok(EliminationOutcome::Contradiction(DimensionContradiction {
            zero_row: cols,
            step: cols,
            col_perm: perm,
            state: w,
        }));
    }

    let forward_ops = ops.len();
    for k in (0..cols).rev() {
        let inverse = pivot_inverse(&w, row_reps, &col_reps, k, scale, tol)?;
        for h in 0..k {
            let above = w.get(h, k);
            if above.blocks().iter().all(|b| b.iter().all(|z| *z == linalg::ZERO)) {
                continue;
            }
            let op = RowOp {
                target: h,
                source: k,
                multiplier: (above * &inverse).scale(C64::new(-1.0, 0.0)),
            };
            apply_row_op(&mut w, &op);
            ops.push(op);
        }
    }
    step_residuals.push(residual_of(&w, row_reps, &col_reps));

    let diagonal: Vec<AlgebraElement> = (0..cols).map(|i| w.get(i, i).clone()).collect();
    for (i, d) in diagonal.iter().enumerate() {
        match classify(d, &row_reps[i], &col_reps[i], scale, tol)? {
            Dichotomy::Invertible(_) => {}
            Dichotomy::Zero { .. } => {
                return Err(EliminationError::NonInvertiblePivot { row: i, col: i })
            }
        }
    }

    Ok(EliminationOutcome::Certified(EliminationCertificate {
        input_hash: hash_intertwiner_matrix(m),
        rows,
        cols,
        col_perm: perm,
        row_ops: ops,
        forward_ops,
        diagonal,
        step_residuals,
    }))
}

/// Replays a certificate on a fresh copy of `m`.
pub fn verify_elimination_certificate(
    cert: &EliminationCertificate,
    m: &IntertwinerMatrix,
) -> Result<ReplayReport, EliminationError> {
    if cert.input_hash != hash_intertwiner_matrix(m) {
        return Err(EliminationError::HashMismatch);
    }
    if cert.rows != m.rows() || cert.cols != m.cols() || cert.diagonal.len() != cert.cols {
        return Err(EliminationError::MalformedCertificate("shape"));
    }
    if cert
        .row_ops
        .iter()
        .any(|op| op.target >= cert.rows || op.source >= cert.rows || !op.multiplier.belongs_to(m.matrix().algebra()))
    {
        return Err(EliminationError::MalformedCertificate("row operation"));
    }
    if cert.diagonal.iter().any(|d| !d.belongs_to(m.matrix().algebra())) {
        return Err(EliminationError::MalformedCertificate("diagonal"));
    }
    let permuted = column_permute(m, &cert.col_perm)?;
    let mut w = permuted.matrix().clone();
    for op in &cert.row_ops {
        apply_row_op(&mut w, op);
    }
    let scale = m.scale().max(f64::MIN_POSITIVE);
    let mut replay_error = 0.0f64;
    let mut off_diagonal = 0.0f64;
    for i in 0..cert.rows {
        for j in 0..cert.cols {
            if i == j {
                replay_error = replay_error.max((w.get(i, i) - &cert.diagonal[i]).norm() / scale);
            } else {
                off_diagonal = off_diagonal.max(w.get(i, j).norm() / scale);
            }
        }
    }
    let diagonal_residual = cert
        .diagonal
        .iter()
        .enumerate()
        .map(|(i, d)| intertwining_residual(d, &permuted.row_reps()[i], &permuted.col_reps()[i]))
        .fold(0.0, f64::max);
    Ok(ReplayReport {
        replay_error,
        off_diagonal,
        diagonal_residual,
        scale: m.scale(),
    })
}

/// Why a matrix failed the right-invertibility test.
#[derive(Clone, Debug, PartialEq)]
pub enum RankDeficiency {
    /// Block `k` has more rows than columns.
    TooManyRows { block: usize, rows: usize, cols: usize },
    RankDeficient { block: usize, sigma_min: f64, threshold: f64 },
    /// The pseudo-inverse witness failed `‖[b][d] − I‖ ≤ 1e−8`.
    WitnessRejected { defect: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum RightInverseTest {
    RightInvertible { witness: AlgebraMatrix, defect: f64 },
    NotRightInvertible(RankDeficiency),
}

impl RightInverseTest {
    pub fn is_right_invertible(&self) -> bool {
        matches!(self, RightInverseTest::RightInvertible { .. })
    }
}

/// Decides right invertibility of an `m × n` matrix over `⊕ M_{n_k}` block by
/// block, returning a verified right inverse assembled from per-block
/// pseudo-inverses.
pub fn right_invertible_test(b: &AlgebraMatrix, tol: &Tolerances) -> RightInverseTest {
    let alg = b.algebra();
    let (m, n) = (b.rows(), b.cols());
    let blocks: Vec<CMat> = (0..alg.num_blocks()).map(|k| b.block_matrix(k)).collect();
    let scale = blocks.iter().map(linalg::op_norm).fold(0.0, f64::max);
    let mut witness_blocks = Vec::with_capacity(blocks.len());
    for (k, bk) in blocks.iter().enumerate() {
        if bk.nrows() > bk.ncols() {
            return RightInverseTest::NotRightInvertible(RankDeficiency::TooManyRows {
                block: k,
                rows: bk.nrows(),
                cols: bk.ncols(),
            });
        }
        let sv = linalg::singular_values(bk);
        let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let threshold = tol.zero * scale;
        if !(sigma_min > threshold) {
            return RightInverseTest::NotRightInvertible(RankDeficiency::RankDeficient {
                block: k,
                sigma_min,
                threshold,
            });
        }
        witness_blocks.push(linalg::pseudo_inverse(bk, 0.0));
    }
    let witness = AlgebraMatrix::from_block_matrices(alg, n, m, &witness_blocks);
    let defect = b.mul(&witness).identity_defect();
    if !(defect <= CERTIFICATE_TOL) {
        return RightInverseTest::NotRightInvertible(RankDeficiency::WitnessRejected { defect });
    }
    RightInverseTest::RightInvertible { witness, defect }
}

/// The two-sided inverse of a square right-invertible matrix.
pub fn two_sided_inverse(b: &AlgebraMatrix, tol: &Tolerances) -> Result<AlgebraMatrix, EliminationError> {
    if !b.is_square() {
        return Err(EliminationError::NotSquare);
    }
    let RightInverseTest::RightInvertible { witness, .. } = right_invertible_test(b, tol) else {
        return Err(EliminationError::NotRightInvertible);
    };
    let defect = b
        .mul(&witness)
        .identity_defect()
        .max(witness.mul(b).identity_defect());
    if defect > CERTIFICATE_TOL {
        return Err(EliminationError::InverseCheckFailed { defect });
    }
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{BlockAlgebra, Representation, StarIsomorphism};
    use alloc::sync::Arc;
    use alloc::vec;

    fn scalar_matrix(rows: usize, cols: usize, vals: &[f64]) -> IntertwinerMatrix {
        let c1 = BlockAlgebra::full_matrix(1).unwrap();
        let id: RepRef = Arc::new(Representation::block_projection(&c1, 0));
        let mat = AlgebraMatrix::from_fn(&c1, rows, cols, |i, j| {
            AlgebraElement::scalar(&c1, C64::new(vals[i * cols + j], 0.0))
        });
        IntertwinerMatrix::new(mat, vec![id.clone(); rows], vec![id; cols]).unwrap()
    }

    #[test]
    fn identity_permutation_is_noop() {
        let m = scalar_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(column_permute(&m, &[0, 1]).unwrap(), m);
        let swapped = column_permute(&scalar_matrix(1, 2, &[5.0, 7.0]), &[1, 0]).unwrap();
        assert_eq!(swapped.entry(0, 0).block(0)[(0, 0)].re, 7.0);
        assert!(column_permute(&m, &[0, 0]).is_err());
    }

    #[test]
    fn scalar_row_elimination() {
        let m = scalar_matrix(2, 1, &[2.0, 3.0]);
        let (out, op) = row_eliminate(&m, 1, 0, &Tolerances::default()).unwrap();
        assert_eq!(out.entry(1, 0).norm(), 0.0);
        assert_eq!(op.multiplier.block(0)[(0, 0)].re, -1.5);
    }

    #[test]
    fn zero_entry_gives_zero_multiplier() {
        let m = scalar_matrix(2, 2, &[2.0, 1.0, 0.0, 5.0]);
        let (out, op) = row_eliminate(&m, 1, 0, &Tolerances::default()).unwrap();
        assert_eq!(out, m);
        assert_eq!(op.multiplier.norm(), 0.0);
    }

    #[test]
    fn zero_pivot_rejected() {
        let m = scalar_matrix(2, 2, &[0.0, 1.0, 1.0, 5.0]);
        assert_eq!(
            row_eliminate(&m, 1, 0, &Tolerances::default()),
            Err(EliminationError::NonInvertiblePivot { row: 0, col: 0 })
        );
    }

    #[test]
    fn identity_needs_no_operations() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let id: RepRef = Arc::new(StarIsomorphism::identity(&m2).as_representation());
        let m = IntertwinerMatrix::new(AlgebraMatrix::identity(&m2, 3), vec![id.clone(); 3], vec![id; 3]).unwrap();
        let EliminationOutcome::Certified(cert) = gaussian_eliminate(&m, &Tolerances::default()).unwrap() else {
            panic!("identity must certify");
        };
        assert_eq!(cert.col_perm, vec![0, 1, 2]);
        assert!(cert.row_ops.is_empty());
        assert!(cert.diagonal.iter().all(|d| *d == AlgebraElement::identity(&m2)));
        assert!(verify_elimination_certificate(&cert, &m).unwrap().passes());
    }

    #[test]
    fn tall_matrix_reports_zero_row() {
        let m = scalar_matrix(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let EliminationOutcome::Contradiction(dc) = gaussian_eliminate(&m, &Tolerances::default()).unwrap() else {
            panic!("3x2 cannot certify");
        };
        assert_eq!(dc.zero_row, 2);
        for j in 0..2 {
            assert!(dc.state.get(2, j).norm() <= 1e-8 * 6.0);
        }
    }

    #[test]
    fn singular_square_reports_contradiction() {
        let m = scalar_matrix(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            gaussian_eliminate(&m, &Tolerances::default()).unwrap(),
            EliminationOutcome::Contradiction(DimensionContradiction { zero_row: 1, .. })
        ));
    }

    #[test]
    fn tampered_certificate_fails_replay() {
        let m = scalar_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let EliminationOutcome::Certified(mut cert) = gaussian_eliminate(&m, &Tolerances::default()).unwrap() else {
            panic!();
        };
        cert.diagonal[0] = cert.diagonal[0].scale(C64::new(2.0, 0.0));
        assert!(!verify_elimination_certificate(&cert, &m).unwrap().passes());
        let other = scalar_matrix(2, 2, &[1.0, 2.0, 3.0, 5.0]);
        assert_eq!(
            verify_elimination_certificate(&cert, &other),
            Err(EliminationError::HashMismatch)
        );
    }

    #[test]
    fn right_invertibility_examples() {
        let c1 = BlockAlgebra::full_matrix(1).unwrap();
        let id3 = AlgebraMatrix::identity(&c1, 3);
        match right_invertible_test(&id3, &Tolerances::default()) {
            RightInverseTest::RightInvertible { witness, .. } => assert!(witness.sub(&id3).norm() < 1e-14),
            _ => panic!(),
        }
        let row = scalar_matrix(1, 2, &[1.0, 0.0]).into_matrix();
        match right_invertible_test(&row, &Tolerances::default()) {
            RightInverseTest::RightInvertible { witness, .. } => {
                assert!((witness.get(0, 0).block(0)[(0, 0)].re - 1.0).abs() < 1e-14);
                assert!(witness.get(1, 0).norm() < 1e-14);
            }
            _ => panic!(),
        }
        let col = scalar_matrix(2, 1, &[1.0, 1.0]).into_matrix();
        assert!(!right_invertible_test(&col, &Tolerances::default()).is_right_invertible());
    }

    #[test]
    fn unipotent_inverse() {
        let m = scalar_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]).into_matrix();
        let inv = two_sided_inverse(&m, &Tolerances::default()).unwrap();
        let expect = [1.0, -1.0, 0.0, 1.0];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv.get(i, j).block(0)[(0, 0)].re - expect[i * 2 + j]).abs() < 1e-12);
            }
        }
        let wide = scalar_matrix(1, 2, &[1.0, 0.0]).into_matrix();
        assert_eq!(two_sided_inverse(&wide, &Tolerances::default()), Err(EliminationError::NotSquare));
    }
}
