//! Truncated Fock realization of the tensor algebra of `(A, α)`.
//!
//! The space is `⊕_{|w| ≤ L} A`, one copy of `A` per word over `{0..n}`,
//! each with the Hilbert–Schmidt inner product in the matrix-unit basis.
//! `π(a)` acts on the `w` summand by left multiplication with `α_w(a)`,
//! where `α_{iw} = α_w ∘ α_i`, and `s_i` moves the `w` summand onto the `iw`
//! summand, annihilating words of length `L`. With these conventions the
//! covariance relation `π(a) s_i = s_i π(α_i(a))` holds exactly.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::algebra::{AlgebraElement, BlockAlgebra, MultivariableSystem, StarIsomorphism};
use crate::deciders::{certify_unitary_equivalence, UnitaryEquivalenceCertificate};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::matrix::AlgebraMatrix;

/// Default cap on the total dimension of the truncated space.
pub const DEFAULT_MAX_DIM: usize = 20_000;

/// Tolerance on the transported covariance relation.
pub const TRANSPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("truncation level must be at least 1")]
    LevelZero,
    #[error("total dimension {dim} exceeds the budget of {max}")]
    DimensionBudgetExceeded { dim: usize, max: usize },
    #[error("degree {degree} is outside [-{level}, {level}]")]
    DegreeOutOfRange { degree: i64, level: usize },
    #[error("element does not belong to the algebra of the system")]
    AlgebraMismatch,
    #[error("operators act on different spaces")]
    ShapeMismatch,
    #[error("certificate does not verify against the systems")]
    UnverifiedCertificate,
    #[error("transported covariance residual {residual:.3e} exceeds {tol:.1e}")]
    CovarianceViolated { residual: f64, tol: f64 },
}

/// Block-sparse operator on `⊕_w A`: block `(r, c)` maps summand `c` to
/// summand `r` in matrix-unit coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    words: usize,
    block: usize,
    blocks: BTreeMap<(usize, usize), CMat>,
}

impl FockOperator {
    pub fn zero(words: usize, block: usize) -> Self {
        FockOperator {
            words,
            block,
            blocks: BTreeMap::new(),
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn block_dim(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        self.words * self.block
    }

    pub fn block(&self, r: usize, c: usize) -> Option<&CMat> {
        self.blocks.get(&(r, c))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &CMat)> {
        self.blocks.iter()
    }

    /// Adds `m` to block `(r, c)`.
    pub fn add_block(&mut self, r: usize, c: usize, m: CMat) {
        assert!(r < self.words && c < self.words, "block index out of range");
        assert!(m.nrows() == self.block && m.ncols() == self.block, "block shape");
        self.blocks
            .entry((r, c))
            .and_modify(|b| *b += &m)
            .or_insert(m);
    }

    fn same_space(&self, other: &FockOperator) -> bool {
        self.words == other.words && self.block == other.block
    }

    fn combine(&self, other: &FockOperator, sign: f64) -> FockOperator {
        assert!(self.same_space(other), "operators act on different spaces");
        let mut out = self.clone();
        for (&(r, c), m) in &other.blocks {
            out.add_block(r, c, m * C64::new(sign, 0.0));
        }
        out
    }

    pub fn add(&self, other: &FockOperator) -> FockOperator {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &FockOperator) -> FockOperator {
        self.combine(other, -1.0)
    }

    pub fn mul(&self, other: &FockOperator) -> FockOperator {
        assert!(self.same_space(other), "operators act on different spaces");
        let mut by_row: BTreeMap<usize, Vec<(usize, &CMat)>> = BTreeMap::new();
        for (&(k, c), m) in &other.blocks {
            by_row.entry(k).or_default().push((c, m));
        }
        let mut out = FockOperator::zero(self.words, self.block);
        for (&(r, k), a) in &self.blocks {
            if let Some(row) = by_row.get(&k) {
                for &(c, b) in row {
                    out.add_block(r, c, a * b);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            words: self.words,
            block: self.block,
            blocks: self
                .blocks
                .iter()
                .map(|(&(r, c), m)| ((c, r), m.adjoint()))
                .collect(),
        }
    }

    pub fn scale(&self, z: C64) -> FockOperator {
        FockOperator {
            words: self.words,
            block: self.block,
            blocks: self.blocks.iter().map(|(&k, m)| (k, m * z)).collect(),
        }
    }

    /// Keeps only the blocks whose column word satisfies `keep`, i.e. the
    /// product with a diagonal projection on the right.
    pub fn restrict_columns(&self, keep: impl Fn(usize) -> bool) -> FockOperator {
        FockOperator {
            words: self.words,
            block: self.block,
            blocks: self
                .blocks
                .iter()
                .filter(|((_, c), _)| keep(*c))
                .map(|(&k, m)| (k, m.clone()))
                .collect(),
        }
    }

    /// Frobenius norm, an upper bound for the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.blocks.values().map(|m| m.norm_squared()).sum())
    }

    pub fn to_dense(&self) -> CMat {
        let d = self.block;
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (&(r, c), m) in &self.blocks {
            out.view_mut((r * d, c * d), (d, d)).copy_from(m);
        }
        out
    }

    /// Operator norm through a dense SVD; meant for small spaces.
    pub fn op_norm(&self) -> f64 {
        if self.blocks.is_empty() {
            return 0.0;
        }
        linalg::op_norm(&self.to_dense())
    }
}

/// `⊕_k x_k ⊗ I_{n_k}`: left multiplication by `x` in row-major coordinates.
fn left_multiplication(x: &AlgebraElement) -> CMat {
    let dim: usize = x.blocks().iter().map(|b| b.len()).sum();
    let mut out = CMat::zeros(dim, dim);
    let mut off = 0;
    for b in x.blocks() {
        let n = b.nrows();
        out.view_mut((off, off), (n * n, n * n))
            .copy_from(&b.kronecker(&linalg::identity(n)));
        off += n * n;
    }
    out
}

/// Truncated Fock space of `(A, α)` at level `L`.
#[derive(Clone, Debug)]
pub struct FockRep {
    system: MultivariableSystem,
    level: usize,
    offsets: Vec<usize>,
    word_maps: Vec<StarIsomorphism>,
}

impl FockRep {
    pub fn system(&self) -> &MultivariableSystem {
        &self.system
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.system.algebra()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn arity(&self) -> usize {
        self.system.arity()
    }

    pub fn num_words(&self) -> usize {
        self.offsets[self.level + 1]
    }

    pub fn block_dim(&self) -> usize {
        self.system.algebra().dimension()
    }

    pub fn dim(&self) -> usize {
        self.num_words() * self.block_dim()
    }

    /// Index of the first word of length `l`.
    pub fn level_offset(&self, l: usize) -> usize {
        self.offsets[l]
    }

    pub fn word_length(&self, idx: usize) -> usize {
        self.offsets.partition_point(|&o| o <= idx) - 1
    }

    /// Letters `w_1 … w_l`, most significant first.
    pub fn word(&self, idx: usize) -> Vec<usize> {
        let l = self.word_length(idx);
        let n = self.arity();
        let mut rest = idx - self.offsets[l];
        let mut out = vec![0; l];
        for slot in out.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        out
    }

    pub fn word_index(&self, word: &[usize]) -> usize {
        let n = self.arity();
        self.offsets[word.len()] + word.iter().fold(0, |acc, &x| acc * n + x)
    }

    /// Index of `i w`, or `None` at the top level.
    pub fn prepend(&self, i: usize, idx: usize) -> Option<usize> {
        let l = self.word_length(idx);
        (l < self.level).then(|| {
            self.offsets[l + 1] + i * self.arity().pow(l as u32) + (idx - self.offsets[l])
        })
    }

    /// `α_w`.
    pub fn word_map(&self, idx: usize) -> &StarIsomorphism {
        &self.word_maps[idx]
    }

    fn zero_op(&self) -> FockOperator {
        FockOperator::zero(self.num_words(), self.block_dim())
    }

    fn diagonal(&self, keep: impl Fn(usize) -> bool) -> FockOperator {
        let mut op = self.zero_op();
        for w in (0..self.num_words()).filter(|&w| keep(w)) {
            op.add_block(w, w, linalg::identity(self.block_dim()));
        }
        op
    }

    pub fn identity(&self) -> FockOperator {
        self.diagonal(|_| true)
    }

    /// `P_{≤L−1}`.
    pub fn below_top(&self) -> FockOperator {
        let top = self.offsets[self.level];
        self.diagonal(|w| w < top)
    }

    /// Projection onto the words of length `l`.
    pub fn level_projection(&self, l: usize) -> FockOperator {
        let (lo, hi) = (self.offsets[l], self.offsets[l + 1]);
        self.diagonal(|w| (lo..hi).contains(&w))
    }

    pub fn pi(&self, a: &AlgebraElement) -> Result<FockOperator, FockError> {
        if !a.belongs_to(self.algebra()) {
            return Err(FockError::AlgebraMismatch);
        }
        let mut op = self.zero_op();
        for (w, alpha) in self.word_maps.iter().enumerate() {
            op.add_block(w, w, left_multiplication(&alpha.apply_unchecked(a)));
        }
        Ok(op)
    }

    /// `s_i`.
    pub fn generator(&self, i: usize) -> FockOperator {
        assert!(i < self.arity(), "generator index out of range");
        let mut op = self.zero_op();
        for w in 0..self.offsets[self.level] {
            let iw = self.prepend(i, w).expect("below the top level");
            op.add_block(iw, w, linalg::identity(self.block_dim()));
        }
        op
    }

    /// `s_i s_i*`, the projection onto words beginning with `i`.
    pub fn range_projection(&self, i: usize) -> FockOperator {
        let s = self.generator(i);
        s.mul(&s.adjoint())
    }

    /// `E_d(T) = (2L+1)⁻¹ Σ_k ω^{−dk} U^k T U^{−k}` with `U = ω^{|w|}` on the
    /// `w` summand; the average is taken blockwise.
    pub fn gauge_expectation(&self, t: &FockOperator, degree: i64) -> Result<FockOperator, FockError> {
        let l = self.level as i64;
        if degree.abs() > l {
            return Err(FockError::DegreeOutOfRange {
                degree,
                level: self.level,
            });
        }
        if t.words != self.num_words() || t.block != self.block_dim() {
            return Err(FockError::ShapeMismatch);
        }
        let roots = 2 * l + 1;
        let coefficient = |shift: i64| -> C64 {
            let mut acc = ZERO;
            for k in 0..roots {
                let theta = 2.0 * PI * ((k * shift).rem_euclid(roots) as f64) / roots as f64;
                acc += C64::new(libm::cos(theta), libm::sin(theta));
            }
            acc / roots as f64
        };
        let mut cache: BTreeMap<i64, C64> = BTreeMap::new();
        let mut out = self.zero_op();
        for (&(r, c), m) in &t.blocks {
            let shift = self.word_length(r) as i64 - self.word_length(c) as i64 - degree;
            let z = *cache.entry(shift).or_insert_with(|| coefficient(shift));
            out.blocks.insert((r, c), m * z);
        }
        Ok(out)
    }

    /// `F_i(T) = s_i s_i* E_1(T)`.
    pub fn fourier_coefficient(&self, t: &FockOperator, i: usize) -> Result<FockOperator, FockError> {
        Ok(self.range_projection(i).mul(&self.gauge_expectation(t, 1)?))
    }

    /// `max ‖π(a) s_i − s_i π(α_i(a))‖` over generators `i` and matrix units `a`.
    pub fn covariance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, alpha) in self.system.maps().iter().enumerate() {
            let s = self.generator(i);
            for a in self.algebra().matrix_units() {
                let lhs = self.pi(&a).expect("own algebra").mul(&s);
                let rhs = s.mul(&self.pi(&alpha.apply_unchecked(&a)).expect("own algebra"));
                worst = worst.max(lhs.sub(&rhs).frobenius_norm() / a.norm());
            }
        }
        worst
    }

    /// `max ‖s_i* s_j − δ_ij P_{≤L−1}‖`.
    pub fn generator_relation_residual(&self) -> f64 {
        let p = self.below_top();
        let gens: Vec<_> = (0..self.arity()).map(|i| self.generator(i)).collect();
        let mut worst = 0.0f64;
        for (i, si) in gens.iter().enumerate() {
            for (j, sj) in gens.iter().enumerate() {
                let prod = si.adjoint().mul(sj);
                let r = if i == j { prod.sub(&p) } else { prod };
                worst = worst.max(r.frobenius_norm());
            }
        }
        worst
    }

    /// Reads `b` off an operator that acts on the level-0 summand as left
    /// multiplication by `b`.
    fn read_level_zero(&self, op: &FockOperator, row: usize) -> AlgebraElement {
        let alg = self.algebra();
        match op.block(row, 0) {
            None => AlgebraElement::zero(alg),
            Some(m) => {
                let one = CMat::from_column_slice(
                    self.block_dim(),
                    1,
                    &AlgebraElement::identity(alg).coordinates(),
                );
                let v = m * one;
                AlgebraElement::from_coordinates(alg, v.as_slice()).expect("coordinate count matches")
            }
        }
    }
}

pub fn build_fock(system: &MultivariableSystem, level: usize, max_dim: usize) -> Result<FockRep, FockError> {
    if level == 0 {
        return Err(FockError::LevelZero);
    }
    let n = system.arity();
    let block = system.algebra().dimension();
    let mut offsets = vec![0usize];
    let mut count = 1usize;
    for _ in 0..=level {
        let next = offsets.last().copied().unwrap_or(0).saturating_add(count);
        offsets.push(next);
        count = count.saturating_mul(n);
    }
    let dim = offsets[level + 1].saturating_mul(block);
    if dim > max_dim {
        return Err(FockError::DimensionBudgetExceeded { dim, max: max_dim });
    }
    let mut word_maps = Vec::with_capacity(offsets[level + 1]);
    word_maps.push(StarIsomorphism::identity(system.algebra()));
    for l in 0..level {
        // level l+1 words `i w` in index order: i major, then w
        for i in 0..n {
            for w in offsets[l]..offsets[l + 1] {
                let m = word_maps[w]
                    .compose(&system.maps()[i])
                    .expect("automorphisms of one algebra compose");
                word_maps.push(m);
            }
        }
    }
    Ok(FockRep {
        system: system.clone(),
        level,
        offsets,
        word_maps,
    })
}

/// Images `γ(s_j) = Σ_i t_i π_B(u_ij)` of the generators of `(A, α)` on the
/// Fock space of `(B, β)`, with the transported covariance residual.
#[derive(Clone, Debug)]
pub struct IsoImages {
    pub images: Vec<FockOperator>,
    /// `max ‖(γ(a)γ(s_j) − γ(s_j)γ(α_j(a))) P_{≤L−1}‖` over matrix units `a`.
    pub covariance_residual: f64,
}

pub fn induced_iso_images(
    cert: &UnitaryEquivalenceCertificate,
    fa: &FockRep,
    fb: &FockRep,
) -> Result<IsoImages, FockError> {
    if fa.arity() != fb.arity() || !certify_unitary_equivalence(cert, fa.system(), fb.system()).passes() {
        return Err(FockError::UnverifiedCertificate);
    }
    let n = fa.arity();
    let gens: Vec<_> = (0..n).map(|i| fb.generator(i)).collect();
    let mut images = Vec::with_capacity(n);
    for j in 0..n {
        let mut g = fb.zero_op();
        for (i, t) in gens.iter().enumerate() {
            g = g.add(&t.mul(&fb.pi(cert.matrix.get(i, j))?));
        }
        images.push(g);
    }
    let top = fb.level_offset(fb.level());
    let mut residual = 0.0f64;
    for a in fa.algebra().matrix_units() {
        let ga = fb.pi(&cert.gamma.apply_unchecked(&a))?;
        for (j, alpha) in fa.system().maps().iter().enumerate() {
            let gaj = fb.pi(&cert.gamma.apply_unchecked(&alpha.apply_unchecked(&a)))?;
            let diff = ga.mul(&images[j]).sub(&images[j].mul(&gaj));
            residual = residual.max(diff.restrict_columns(|c| c < top).frobenius_norm());
        }
    }
    if !(residual <= TRANSPORT_TOL) {
        return Err(FockError::CovarianceViolated {
            residual,
            tol: TRANSPORT_TOL,
        });
    }
    Ok(IsoImages {
        images,
        covariance_residual: residual,
    })
}

/// Degree-one coefficients `b_ij` of the images `γ(s_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssociatedMatrix {
    pub entries: AlgebraMatrix,
    /// `b_0j`.
    pub degree_zero: Vec<AlgebraElement>,
    /// `max_j ‖γ(s_j) − E_0(γ(s_j)) − Σ_i F_i(γ(s_j))‖` on the level-0 domain.
    pub remainder_norm: f64,
}

impl AssociatedMatrix {
    pub fn degree_zero_norm(&self) -> f64 {
        self.degree_zero.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }
}

/// `b_ij` is read from `t_i* F_i(γ(s_j))` on the level-0 summand, where
/// `π_B` is left multiplication and hence faithful.
pub fn extract_associated_matrix(images: &[FockOperator], fb: &FockRep) -> Result<AssociatedMatrix, FockError> {
    let n = fb.arity();
    let alg = fb.algebra().clone();
    if images.iter().any(|g| g.words != fb.num_words() || g.block != fb.block_dim()) {
        return Err(FockError::ShapeMismatch);
    }
    let adj: Vec<_> = (0..n).map(|i| fb.generator(i).adjoint()).collect();
    let mut entries = AlgebraMatrix::zeros(&alg, n, images.len());
    let mut degree_zero = Vec::with_capacity(images.len());
    let mut remainder_norm = 0.0f64;
    for (j, g) in images.iter().enumerate() {
        let e0 = fb.gauge_expectation(g, 0)?;
        degree_zero.push(fb.read_level_zero(&e0, 0));
        let mut rest = g.sub(&e0);
        for (i, ti_adj) in adj.iter().enumerate() {
            let f = fb.fourier_coefficient(g, i)?;
            entries.set(i, j, fb.read_level_zero(&ti_adj.mul(&f), 0));
            rest = rest.sub(&f);
        }
        remainder_norm = remainder_norm.max(rest.restrict_columns(|c| c == 0).frobenius_norm());
    }
    Ok(AssociatedMatrix {
        entries,
        degree_zero,
        remainder_norm,
    })
}

/// `Σ_i t_i π(u_ij)` for a planted matrix `[u_ij]` over the algebra of `fb`.
pub fn plant_images(u: &AlgebraMatrix, fb: &FockRep) -> Result<Vec<FockOperator>, FockError> {
    if u.algebra() != fb.algebra() || u.rows() != fb.arity() {
        return Err(FockError::AlgebraMismatch);
    }
    let gens: Vec<_> = (0..fb.arity()).map(|i| fb.generator(i)).collect();
    (0..u.cols())
        .map(|j| {
            let mut g = fb.zero_op();
            for (i, t) in gens.iter().enumerate() {
                g = g.add(&t.mul(&fb.pi(u.get(i, j))?));
            }
            Ok(g)
        })
        .collect()
}

/// Every Fock-level check for a pair of systems and a unitary-equivalence
/// certificate between them.
#[derive(Clone, Debug, PartialEq)]
pub struct FockValidation {
    pub level: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    /// `‖π(a)s_i − s_iπ(α_i(a))‖` over both spaces.
    pub covariance: f64,
    /// `‖s_i*s_j − δ_ij P_{≤L−1}‖` over both spaces.
    pub generator_relations: f64,
    /// `‖E_0∘E_0 − E_0‖` on a mixed-degree probe.
    pub expectation_idempotence: f64,
    /// `‖F_i∘F_i − F_i‖`.
    pub fourier_idempotence: f64,
    /// `‖F_i∘F_j‖` for `i ≠ j` and `‖E_0∘F_i‖`.
    pub fourier_annihilation: f64,
    pub transported_covariance: f64,
    /// `max ‖b_ij − u_ij‖`.
    pub recovery_error: f64,
    /// Intertwining residual of `[b_ij]` against `{β_i}`, `{γα_jγ⁻¹}`.
    pub recovered_intertwining: f64,
    pub recovered_right_invertible: bool,
    pub degree_zero_norm: f64,
    pub remainder_norm: f64,
}

impl FockValidation {
    pub fn passes(&self) -> bool {
        self.covariance <= 1e-12
            && self.generator_relations <= 1e-12
            && self.expectation_idempotence <= 1e-12
            && self.fourier_idempotence <= 1e-12
            && self.fourier_annihilation <= 1e-12
            && self.transported_covariance <= TRANSPORT_TOL
            && self.recovery_error <= 1e-10
            && self.recovered_intertwining <= 1e-9
            && self.recovered_right_invertible
    }
}

/// `Σ_j (γ(s_j) + γ(s_j)*) + Σ_e π(e)`: one probe touching degrees −1, 0, 1.
fn probe(images: &[FockOperator], fb: &FockRep) -> Result<FockOperator, FockError> {
    let mut t = fb.zero_op();
    for g in images {
        t = t.add(g).add(&g.adjoint());
    }
    for (k, e) in fb.algebra().matrix_units().iter().enumerate() {
        t = t.add(&fb.pi(e)?.scale(C64::new(1.0, k as f64)));
    }
    Ok(t)
}

pub fn validate_fock(
    cert: &UnitaryEquivalenceCertificate,
    a: &MultivariableSystem,
    b: &MultivariableSystem,
    level: usize,
    max_dim: usize,
) -> Result<FockValidation, FockError> {
    let fa = build_fock(a, level, max_dim)?;
    let fb = build_fock(b, level, max_dim)?;
    let iso = induced_iso_images(cert, &fa, &fb)?;
    let n = fb.arity();

    let t = probe(&iso.images, &fb)?;
    let e0 = fb.gauge_expectation(&t, 0)?;
    let expectation_idempotence = fb.gauge_expectation(&e0, 0)?.sub(&e0).frobenius_norm();
    let fs: Vec<_> = (0..n).map(|i| fb.fourier_coefficient(&t, i)).collect::<Result<_, _>>()?;
    let mut fourier_idempotence = 0.0f64;
    let mut fourier_annihilation = 0.0f64;
    for (i, fi) in fs.iter().enumerate() {
        for j in 0..n {
            let fji = fb.fourier_coefficient(fi, j)?;
            if i == j {
                fourier_idempotence = fourier_idempotence.max(fji.sub(fi).frobenius_norm());
            } else {
                fourier_annihilation = fourier_annihilation.max(fji.frobenius_norm());
            }
        }
        fourier_annihilation = fourier_annihilation.max(fb.gauge_expectation(fi, 0)?.frobenius_norm());
    }

    let am = extract_associated_matrix(&iso.images, &fb)?;
    let recovery_error = am.entries.sub(&cert.matrix).entries().iter().map(|e| e.norm()).fold(0.0, f64::max);
    let conj = crate::deciders::transported_maps(&cert.gamma, a).map_err(|_| FockError::AlgebraMismatch)?;
    let reps = |maps: &[StarIsomorphism]| -> Vec<crate::algebra::RepRef> {
        maps.iter().map(|m| alloc::sync::Arc::new(m.as_representation())).collect()
    };
    let recovered_intertwining = crate::intertwiner::IntertwinerMatrix::new(am.entries.clone(), reps(b.maps()), reps(&conj))
        .map(|m| m.residual())
        .unwrap_or(f64::INFINITY);
    let recovered_right_invertible =
        crate::elimination::right_invertible_test(&am.entries, &crate::tol::Tolerances::default()).is_right_invertible();

    Ok(FockValidation {
        level,
        dim_a: fa.dim(),
        dim_b: fb.dim(),
        covariance: fa.covariance_residual().max(fb.covariance_residual()),
        generator_relations: fa.generator_relation_residual().max(fb.generator_relation_residual()),
        expectation_idempotence,
        fourier_idempotence,
        fourier_annihilation,
        transported_covariance: iso.covariance_residual,
        recovery_error,
        recovered_intertwining,
        recovered_right_invertible,
        degree_zero_norm: am.degree_zero_norm(),
        remainder_norm: am.remainder_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn sys(alg: &BlockAlgebra, maps: Vec<StarIsomorphism>) -> MultivariableSystem {
        MultivariableSystem::new(alg.clone(), maps).unwrap()
    }

    #[test]
    fn classical_truncated_shift() {
        let c = BlockAlgebra::full_matrix(1).unwrap();
        let f = build_fock(&sys(&c, vec![StarIsomorphism::identity(&c)]), 2, DEFAULT_MAX_DIM).unwrap();
        assert_eq!(f.dim(), 3);
        let s = f.generator(0).to_dense();
        let mut shift = CMat::zeros(3, 3);
        shift[(1, 0)] = ONE;
        shift[(2, 1)] = ONE;
        assert_eq!(s, shift);
        let a = AlgebraElement::scalar(&c, C64::new(2.5, -1.0));
        assert_eq!(f.pi(&a).unwrap().to_dense(), linalg::identity(3) * C64::new(2.5, -1.0));
    }

    #[test]
    fn dimension_formula_and_budget() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let s = sys(&m2, vec![StarIsomorphism::identity(&m2); 2]);
        assert_eq!(build_fock(&s, 1, DEFAULT_MAX_DIM).unwrap().dim(), 12);
        assert_eq!(
            build_fock(&s, 1, 11).unwrap_err(),
            FockError::DimensionBudgetExceeded { dim: 12, max: 11 }
        );
        assert_eq!(build_fock(&s, 0, 100).unwrap_err(), FockError::LevelZero);
    }

    #[test]
    fn words_round_trip() {
        let c = BlockAlgebra::full_matrix(1).unwrap();
        let f = build_fock(&sys(&c, vec![StarIsomorphism::identity(&c); 3]), 3, DEFAULT_MAX_DIM).unwrap();
        for idx in 0..f.num_words() {
            let w = f.word(idx);
            assert_eq!(f.word_index(&w), idx);
            if w.len() < 3 {
                let mut iw = vec![2];
                iw.extend(&w);
                assert_eq!(f.prepend(2, idx), Some(f.word_index(&iw)));
            }
        }
    }

    #[test]
    fn swap_system_covariance_and_relations() {
        let alg = BlockAlgebra::new(vec![2, 1, 2]).unwrap();
        let swap = StarIsomorphism::block_permutation(&alg, vec![2, 1, 0]).unwrap();
        let f = build_fock(&sys(&alg, vec![swap, StarIsomorphism::identity(&alg)]), 2, DEFAULT_MAX_DIM).unwrap();
        assert!(f.covariance_residual() <= 1e-12);
        assert!(f.generator_relation_residual() <= 1e-12);
    }

    #[test]
    fn expectations_pick_degrees() {
        let c = BlockAlgebra::full_matrix(1).unwrap();
        let f = build_fock(&sys(&c, vec![StarIsomorphism::identity(&c); 2]), 2, DEFAULT_MAX_DIM).unwrap();
        let s0 = f.generator(0);
        let s1 = f.generator(1);
        let t = f.identity().add(&s0).add(&s1.adjoint());
        assert!(f.gauge_expectation(&t, 0).unwrap().sub(&f.identity()).frobenius_norm() < 1e-12);
        assert!(f.fourier_coefficient(&t, 0).unwrap().sub(&s0).frobenius_norm() < 1e-12);
        assert!(f.fourier_coefficient(&t, 1).unwrap().frobenius_norm() < 1e-12);
        assert!(f.gauge_expectation(&t, 3).is_err());
    }

    #[test]
    fn generators_extract_to_identity_matrix() {
        let m2 = BlockAlgebra::full_matrix(2).unwrap();
        let f = build_fock(&sys(&m2, vec![StarIsomorphism::identity(&m2); 2]), 2, DEFAULT_MAX_DIM).unwrap();
        let images: Vec<_> = (0..2).map(|i| f.generator(i)).collect();
        let am = extract_associated_matrix(&images, &f).unwrap();
        assert!(am.entries.sub(&AlgebraMatrix::identity(&m2, 2)).norm() < 1e-12);
        assert!(am.remainder_norm < 1e-12);
        assert!(am.degree_zero_norm() < 1e-12);
    }

    #[test]
    fn identity_certificate_validates() {
        let alg = BlockAlgebra::new(vec![2, 1]).unwrap();
        let u = AlgebraElement::new(
            &alg,
            vec![CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]), CMat::from_element(1, 1, ONE)],
        )
        .unwrap();
        let ad = StarIsomorphism::inner(&u, &crate::tol::Tolerances::default()).unwrap();
        let s = sys(&alg, vec![ad, StarIsomorphism::identity(&alg)]);
        let cert = crate::deciders::identity_certificate(&s);
        let v = validate_fock(&cert, &s, &s, 2, DEFAULT_MAX_DIM).unwrap();
        assert!(v.passes(), "{v:?}");
        assert_eq!(v.recovery_error, 0.0);
    }
}
