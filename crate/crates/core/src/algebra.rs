//! Finite direct sums of full matrix algebras, their elements, and
//! *-isomorphisms between them.
//!
//! An algebra `M_{n_1} ⊕ … ⊕ M_{n_m}` is stored as its list of block sizes and
//! an element as its list of diagonal blocks; assembled block-diagonal
//! matrices only appear in [`AlgebraElement::assemble`], which the tests use
//! as an independent route.
//!
//! Automorphism action: a [`StarIsomorphism`] with block permutation `σ`
//! (target block → source block) and unitaries `u_k` acts as
//! `φ(b)_k = u_k · b_{σ(k)} · u_k*`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use thiserror::Error;

use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("an algebra needs at least one block")]
    NoBlocks,
    #[error("block {0} has size zero")]
    EmptyBlock(usize),
    #[error("malformed element: expected {expected} blocks matching the algebra, got {found}")]
    MalformedElement { expected: usize, found: usize },
    #[error("malformed element: block {block} should be {size}x{size}")]
    BlockShape { block: usize, size: usize },
    #[error("element does not belong to the expected algebra")]
    AlgebraMismatch,
    #[error("block map is not a bijection")]
    NotABijection,
    #[error("block map sends a block of size {source_size} onto a block of size {target_size}")]
    SizeNotPreserved {
        source_size: usize,
        target_size: usize,
    },
    #[error("unitary for block {block} has defect {defect:.3e} (tolerance {tol:.1e})")]
    NotUnitary { block: usize, defect: f64, tol: f64 },
    #[error("map {index} of the system does not act on the system algebra")]
    NotAnAutomorphism { index: usize },
    #[error("a multivariable system needs at least one map")]
    EmptySystem,
    #[error("representation has {found} images, expected {expected}")]
    ImageCount { expected: usize, found: usize },
    #[error("representation is not a unital *-homomorphism (defect {defect:.3e})")]
    NotAHomomorphism { defect: f64 },
    #[error("coordinate vector has length {found}, expected {expected}")]
    CoordinateLength { expected: usize, found: usize },
}

/// `M_{n_1} ⊕ … ⊕ M_{n_m}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockAlgebra {
    block_sizes: Vec<usize>,
}

impl BlockAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self, AlgebraError> {
        if block_sizes.is_empty() {
            return Err(AlgebraError::NoBlocks);
        }
        if let Some(k) = block_sizes.iter().position(|&n| n == 0) {
            return Err(AlgebraError::EmptyBlock(k));
        }
        Ok(BlockAlgebra { block_sizes })
    }

    /// `M_n`.
    pub fn full_matrix(n: usize) -> Result<Self, AlgebraError> {
        Self::new(vec![n])
    }

    /// `C^m`, functions on `m` points.
    pub fn commutative(points: usize) -> Result<Self, AlgebraError> {
        Self::new(vec![1; points])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Complex dimension `Σ n_k²`.
    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().map(|n| n * n).sum()
    }

    /// Size of the assembled block-diagonal matrices, `Σ n_k`.
    pub fn matrix_size(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn center_is_trivial(&self) -> bool {
        self.block_sizes.len() == 1
    }

    pub fn is_commutative(&self) -> bool {
        self.block_sizes.iter().all(|&n| n == 1)
    }

    /// Offset of block `k` in the coordinate vector.
    pub fn coordinate_offset(&self, k: usize) -> usize {
        self.block_sizes[..k].iter().map(|n| n * n).sum()
    }

    /// `(block, row, col)` of every matrix unit, in coordinate order.
    pub fn unit_positions(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.dimension());
        for (k, &n) in self.block_sizes.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    out.push((k, r, c));
                }
            }
        }
        out
    }

    /// The `Σ n_k²` matrix units `e^{(k)}_{rc}`, in coordinate order.
    pub fn matrix_units(&self) -> Vec<AlgebraElement> {
        self.unit_positions()
            .into_iter()
            .map(|(k, r, c)| AlgebraElement::matrix_unit(self, k, r, c))
            .collect()
    }
}

/// An element of a [`BlockAlgebra`], stored block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn new(algebra: &BlockAlgebra, blocks: Vec<CMat>) -> Result<Self, AlgebraError> {
        if blocks.len() != algebra.num_blocks() {
            return Err(AlgebraError::MalformedElement {
                expected: algebra.num_blocks(),
                found: blocks.len(),
            });
        }
        for (k, (b, &n)) in blocks.iter().zip(algebra.block_sizes()).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(AlgebraError::BlockShape { block: k, size: n });
            }
        }
        Ok(AlgebraElement { blocks })
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        AlgebraElement {
            blocks: algebra.block_sizes().iter().map(|&n| CMat::zeros(n, n)).collect(),
        }
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        Self::scalar(algebra, ONE)
    }

    pub fn scalar(algebra: &BlockAlgebra, z: C64) -> Self {
        AlgebraElement {
            blocks: algebra
                .block_sizes()
                .iter()
                .map(|&n| CMat::identity(n, n) * z)
                .collect(),
        }
    }

    pub fn matrix_unit(algebra: &BlockAlgebra, k: usize, r: usize, c: usize) -> Self {
        let mut e = Self::zero(algebra);
        e.blocks[k][(r, c)] = ONE;
        e
    }

    /// Element supported on a single block.
    pub fn from_block(algebra: &BlockAlgebra, k: usize, block: CMat) -> Result<Self, AlgebraError> {
        let n = algebra.block_sizes()[k];
        if block.nrows() != n || block.ncols() != n {
            return Err(AlgebraError::BlockShape { block: k, size: n });
        }
        let mut e = Self::zero(algebra);
        e.blocks[k] = block;
        Ok(e)
    }

    pub fn from_coordinates(algebra: &BlockAlgebra, coords: &[C64]) -> Result<Self, AlgebraError> {
        if coords.len() != algebra.dimension() {
            return Err(AlgebraError::CoordinateLength {
                expected: algebra.dimension(),
                found: coords.len(),
            });
        }
        let mut offset = 0;
        let blocks = algebra
            .block_sizes()
            .iter()
            .map(|&n| {
                let b = CMat::from_row_slice(n, n, &coords[offset..offset + n * n]);
                offset += n * n;
                b
            })
            .collect();
        Ok(AlgebraElement { blocks })
    }

    /// Entries of every block, row-major, concatenated.
    pub fn coordinates(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    out.push(b[(r, c)]);
                }
            }
        }
        out
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// The algebra this element lives in, recovered from its block shapes.
    pub fn algebra(&self) -> BlockAlgebra {
        BlockAlgebra {
            block_sizes: self.block_sizes(),
        }
    }

    pub fn belongs_to(&self, algebra: &BlockAlgebra) -> bool {
        self.blocks.len() == algebra.num_blocks()
            && self
                .blocks
                .iter()
                .zip(algebra.block_sizes())
                .all(|(b, &n)| b.nrows() == n && b.ncols() == n)
    }

    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        AlgebraElement {
            blocks: self.blocks.iter().map(|b| b * z).collect(),
        }
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// Hilbert-Schmidt norm of the coordinate vector.
    pub fn hs_norm(&self) -> f64 {
        libm::sqrt(self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| linalg::unitarity_defect(b) <= tol)
    }

    /// The block-diagonal matrix of size `Σ n_k`.
    pub fn assemble(&self) -> CMat {
        let size: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut out = CMat::zeros(size, size);
        let mut off = 0;
        for b in &self.blocks {
            let n = b.nrows();
            out.view_mut((off, off), (n, n)).copy_from(b);
            off += n;
        }
        out
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        debug_assert_eq!(self.block_sizes(), rhs.block_sizes());
        AlgebraElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        debug_assert_eq!(self.block_sizes(), rhs.block_sizes());
        AlgebraElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        debug_assert_eq!(self.block_sizes(), rhs.block_sizes());
        AlgebraElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect(),
        }
    }
}

fn is_bijection(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Inverse of a permutation given as an image list.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// A unital *-isomorphism between block algebras.
///
/// `perm[k]` is the source block feeding target block `k`; `unitaries[k]`
/// has the size of target block `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarIsomorphism {
    source: BlockAlgebra,
    target: BlockAlgebra,
    perm: Vec<usize>,
    unitaries: Vec<CMat>,
}

impl StarIsomorphism {
    pub fn new(
        source: BlockAlgebra,
        target: BlockAlgebra,
        perm: Vec<usize>,
        unitaries: Vec<CMat>,
        tol: &Tolerances,
    ) -> Result<Self, AlgebraError> {
        if source.num_blocks() != target.num_blocks() || !is_bijection(&perm, target.num_blocks())
        {
            return Err(AlgebraError::NotABijection);
        }
        for (k, &s) in perm.iter().enumerate() {
            let (ts, ss) = (target.block_sizes()[k], source.block_sizes()[s]);
            if ts != ss {
                return Err(AlgebraError::SizeNotPreserved {
                    source_size: ss,
                    target_size: ts,
                });
            }
        }
        if unitaries.len() != target.num_blocks() {
            return Err(AlgebraError::MalformedElement {
                expected: target.num_blocks(),
                found: unitaries.len(),
            });
        }
        for (k, u) in unitaries.iter().enumerate() {
            let n = target.block_sizes()[k];
            if u.nrows() != n || u.ncols() != n {
                return Err(AlgebraError::BlockShape { block: k, size: n });
            }
            let defect = linalg::unitarity_defect(u);
            if defect > tol.unit {
                return Err(AlgebraError::NotUnitary {
                    block: k,
                    defect,
                    tol: tol.unit,
                });
            }
        }
        Ok(StarIsomorphism {
            source,
            target,
            perm,
            unitaries,
        })
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        StarIsomorphism {
            source: algebra.clone(),
            target: algebra.clone(),
            perm: (0..algebra.num_blocks()).collect(),
            unitaries: algebra
                .block_sizes()
                .iter()
                .map(|&n| CMat::identity(n, n))
                .collect(),
        }
    }

    /// `Ad(u)` for a unitary element `u`.
    pub fn inner(u: &AlgebraElement, tol: &Tolerances) -> Result<Self, AlgebraError> {
        let alg = u.algebra();
        Self::new(
            alg.clone(),
            alg.clone(),
            (0..alg.num_blocks()).collect(),
            u.blocks().to_vec(),
            tol,
        )
    }

    /// Pure block permutation with identity unitaries.
    pub fn block_permutation(algebra: &BlockAlgebra, perm: Vec<usize>) -> Result<Self, AlgebraError> {
        let unitaries = algebra
            .block_sizes()
            .iter()
            .map(|&n| CMat::identity(n, n))
            .collect();
        Self::new(
            algebra.clone(),
            algebra.clone(),
            perm,
            unitaries,
            &Tolerances::default(),
        )
    }

    pub fn source(&self) -> &BlockAlgebra {
        &self.source
    }

    pub fn target(&self) -> &BlockAlgebra {
        &self.target
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn unitaries(&self) -> &[CMat] {
        &self.unitaries
    }

    pub fn is_automorphism(&self) -> bool {
        self.source == self.target
    }

    /// Inner automorphisms of `⊕ M_{n_k}` are exactly those fixing every block.
    pub fn is_inner(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| k == p)
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement, AlgebraError> {
        if !a.belongs_to(&self.source) {
            return Err(AlgebraError::AlgebraMismatch);
        }
        Ok(self.apply_unchecked(a))
    }

    pub(crate) fn apply_unchecked(&self, a: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .perm
                .iter()
                .zip(&self.unitaries)
                .map(|(&s, u)| u * a.block(s) * u.adjoint())
                .collect(),
        }
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &StarIsomorphism) -> Result<StarIsomorphism, AlgebraError> {
        if inner.target != self.source {
            return Err(AlgebraError::AlgebraMismatch);
        }
        let perm: Vec<usize> = self.perm.iter().map(|&s| inner.perm[s]).collect();
        let unitaries = self
            .perm
            .iter()
            .zip(&self.unitaries)
            .map(|(&s, u)| u * &inner.unitaries[s])
            .collect();
        Ok(StarIsomorphism {
            source: inner.source.clone(),
            target: self.target.clone(),
            perm,
            unitaries,
        })
    }

    pub fn inverse(&self) -> StarIsomorphism {
        let inv = invert_permutation(&self.perm);
        let unitaries = inv.iter().map(|&k| self.unitaries[k].adjoint()).collect();
        StarIsomorphism {
            source: self.target.clone(),
            target: self.source.clone(),
            perm: inv,
            unitaries,
        }
    }

    /// Largest violation of multiplicativity, adjoint preservation and
    /// unitality over the matrix units.
    pub fn homomorphism_defect(&self) -> f64 {
        let units = self.source.matrix_units();
        let images: Vec<AlgebraElement> = units.iter().map(|e| self.apply_unchecked(e)).collect();
        let mut defect = 0.0f64;
        for (e, fe) in units.iter().zip(&images) {
            defect = defect.max((&self.apply_unchecked(&e.adjoint()) - &fe.adjoint()).norm());
            for (f, ff) in units.iter().zip(&images) {
                let lhs = self.apply_unchecked(&(e * f));
                defect = defect.max((&lhs - &(fe * ff)).norm());
            }
        }
        let one = self.apply_unchecked(&AlgebraElement::identity(&self.source));
        defect.max((&one - &AlgebraElement::identity(&self.target)).norm())
    }

    /// Largest difference from `other` on the matrix units.
    pub fn distance_on_units(&self, other: &StarIsomorphism) -> f64 {
        self.source
            .matrix_units()
            .iter()
            .map(|e| (&self.apply_unchecked(e) - &other.apply_unchecked(e)).norm())
            .fold(0.0, f64::max)
    }

    pub fn as_representation(&self) -> Representation {
        Representation {
            source: self.source.clone(),
            target: self.target.clone(),
            images: self
                .source
                .matrix_units()
                .iter()
                .map(|e| self.apply_unchecked(e))
                .collect(),
        }
    }
}

/// `(A, α)`: a block algebra with a nonempty tuple of automorphisms.
#[derive(Clone, Debug, PartialEq)]
pub struct MultivariableSystem {
    algebra: BlockAlgebra,
    maps: Vec<StarIsomorphism>,
}

impl MultivariableSystem {
    pub fn new(algebra: BlockAlgebra, maps: Vec<StarIsomorphism>) -> Result<Self, AlgebraError> {
        if maps.is_empty() {
            return Err(AlgebraError::EmptySystem);
        }
        if let Some(index) = maps
            .iter()
            .position(|m| m.source != algebra || m.target != algebra)
        {
            return Err(AlgebraError::NotAnAutomorphism { index });
        }
        Ok(MultivariableSystem { algebra, maps })
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn maps(&self) -> &[StarIsomorphism] {
        &self.maps
    }

    pub fn arity(&self) -> usize {
        self.maps.len()
    }
}

/// A linear map from a block algebra into another one, given by the images
/// of the matrix units.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    source: BlockAlgebra,
    target: BlockAlgebra,
    images: Vec<AlgebraElement>,
}

impl Representation {
    pub fn new(
        source: BlockAlgebra,
        target: BlockAlgebra,
        images: Vec<AlgebraElement>,
    ) -> Result<Self, AlgebraError> {
        if images.len() != source.dimension() {
            return Err(AlgebraError::ImageCount {
                expected: source.dimension(),
                found: images.len(),
            });
        }
        if images.iter().any(|e| !e.belongs_to(&target)) {
            return Err(AlgebraError::AlgebraMismatch);
        }
        Ok(Representation {
            source,
            target,
            images,
        })
    }

    /// Like [`Representation::new`] but also rejects maps that are not unital
    /// *-homomorphisms within `tol.hom`.
    pub fn new_checked(
        source: BlockAlgebra,
        target: BlockAlgebra,
        images: Vec<AlgebraElement>,
        tol: &Tolerances,
    ) -> Result<Self, AlgebraError> {
        let rep = Self::new(source, target, images)?;
        let defect = rep.homomorphism_defect();
        if defect > tol.hom {
            return Err(AlgebraError::NotAHomomorphism { defect });
        }
        Ok(rep)
    }

    /// Canonical irreducible `ρ_k(b) = b_k` onto `M_{n_k}`.
    pub fn block_projection(algebra: &BlockAlgebra, k: usize) -> Self {
        let n = algebra.block_sizes()[k];
        let target = BlockAlgebra { block_sizes: vec![n] };
        let images = algebra
            .unit_positions()
            .into_iter()
            .map(|(kk, r, c)| {
                if kk == k {
                    AlgebraElement::matrix_unit(&target, 0, r, c)
                } else {
                    AlgebraElement::zero(&target)
                }
            })
            .collect();
        Representation {
            source: algebra.clone(),
            target,
            images,
        }
    }

    pub fn source(&self) -> &BlockAlgebra {
        &self.source
    }

    pub fn target(&self) -> &BlockAlgebra {
        &self.target
    }

    pub fn images(&self) -> &[AlgebraElement] {
        &self.images
    }

    /// Image of the generator with coordinate index `idx`.
    pub fn image(&self, idx: usize) -> &AlgebraElement {
        &self.images[idx]
    }

    pub fn apply(&self, b: &AlgebraElement) -> Result<AlgebraElement, AlgebraError> {
        if !b.belongs_to(&self.source) {
            return Err(AlgebraError::AlgebraMismatch);
        }
        let mut out = AlgebraElement::zero(&self.target);
        for (z, img) in b.coordinates().into_iter().zip(&self.images) {
            if z != ZERO {
                for (o, i) in out.blocks.iter_mut().zip(&img.blocks) {
                    *o += i * z;
                }
            }
        }
        Ok(out)
    }

    /// `self ∘ φ`.
    pub fn precompose(&self, phi: &StarIsomorphism) -> Result<Representation, AlgebraError> {
        if phi.target != self.source {
            return Err(AlgebraError::AlgebraMismatch);
        }
        let images = phi
            .source
            .matrix_units()
            .iter()
            .map(|e| self.apply(&phi.apply_unchecked(e)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Representation {
            source: phi.source.clone(),
            target: self.target.clone(),
            images,
        })
    }

    /// `φ ∘ self`.
    pub fn postcompose(&self, phi: &StarIsomorphism) -> Result<Representation, AlgebraError> {
        if phi.source != self.target {
            return Err(AlgebraError::AlgebraMismatch);
        }
        Ok(Representation {
            source: self.source.clone(),
            target: phi.target.clone(),
            images: self.images.iter().map(|e| phi.apply_unchecked(e)).collect(),
        })
    }

    /// Largest violation of the matrix-unit relations
    /// `ρ(e_{ab}) ρ(e_{cd}) = δ_{bc} ρ(e_{ad})`, `ρ(e_{ab})* = ρ(e_{ba})` and
    /// `Σ ρ(e_{aa}) = 1`.
    pub fn homomorphism_defect(&self) -> f64 {
        let pos = self.source.unit_positions();
        let idx = |k: usize, r: usize, c: usize| {
            self.source.coordinate_offset(k) + r * self.source.block_sizes()[k] + c
        };
        let mut defect = 0.0f64;
        let mut unit_sum = AlgebraElement::zero(&self.target);
        for (i, &(k, r, c)) in pos.iter().enumerate() {
            let e = &self.images[i];
            defect = defect.max((&e.adjoint() - &self.images[idx(k, c, r)]).norm());
            if r == c {
                unit_sum = &unit_sum + e;
            }
            for (j, &(k2, r2, c2)) in pos.iter().enumerate() {
                let prod = e * &self.images[j];
                let expected = if k == k2 && c == r2 {
                    self.images[idx(k, r, c2)].clone()
                } else {
                    AlgebraElement::zero(&self.target)
                };
                defect = defect.max((&prod - &expected).norm());
            }
        }
        defect.max((&unit_sum - &AlgebraElement::identity(&self.target)).norm())
    }

    /// Whether the image spans the whole target algebra.
    pub fn is_surjective(&self, tol: &Tolerances) -> bool {
        let dim = self.target.dimension();
        let coords: Vec<Vec<C64>> = self.images.iter().map(|e| e.coordinates()).collect();
        let m = CMat::from_fn(dim, coords.len(), |r, c| coords[c][r]);
        linalg::rank(&m, tol.zero) == dim
    }
}

/// Shared handle to a representation; families of representations in
/// intertwiner matrices repeat the same maps many times.
pub type RepRef = Arc<Representation>;
