//! Rectangular matrices with entries in a block algebra, `M_{m,n}(B)`.
//!
//! `M_{m,n}(⊕ M_{n_k}) ≅ ⊕ M_{m n_k, n n_k}`: block `k` of a matrix over `B`
//! is the complex matrix obtained by placing block `k` of every entry in a
//! grid. Norms, ranks and inverses are computed through that isomorphism.

use alloc::vec::Vec;

use crate::algebra::{AlgebraElement, AlgebraError, BlockAlgebra};
use crate::linalg::{self, CMat};

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraMatrix {
    algebra: BlockAlgebra,
    rows: usize,
    cols: usize,
    entries: Vec<AlgebraElement>,
}

impl AlgebraMatrix {
    /// Row-major entries.
    pub fn new(
        algebra: BlockAlgebra,
        rows: usize,
        cols: usize,
        entries: Vec<AlgebraElement>,
    ) -> Result<Self, AlgebraError> {
        if entries.len() != rows * cols {
            return Err(AlgebraError::MalformedElement {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.belongs_to(&algebra)) {
            return Err(AlgebraError::AlgebraMismatch);
        }
        Ok(AlgebraMatrix {
            algebra,
            rows,
            cols,
            entries,
        })
    }

    pub fn from_fn(
        algebra: &BlockAlgebra,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> AlgebraElement,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                debug_assert!(e.belongs_to(algebra));
                entries.push(e);
            }
        }
        AlgebraMatrix {
            algebra: algebra.clone(),
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(algebra: &BlockAlgebra, rows: usize, cols: usize) -> Self {
        Self::from_fn(algebra, rows, cols, |_, _| AlgebraElement::zero(algebra))
    }

    pub fn identity(algebra: &BlockAlgebra, n: usize) -> Self {
        Self::from_fn(algebra, n, n, |i, j| {
            if i == j {
                AlgebraElement::identity(algebra)
            } else {
                AlgebraElement::zero(algebra)
            }
        })
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: AlgebraElement) {
        debug_assert!(value.belongs_to(&self.algebra));
        self.entries[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }

    /// Largest entry norm.
    pub fn max_entry_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> AlgebraMatrix {
        Self::from_fn(&self.algebra, self.cols, self.rows, |i, j| {
            self.get(j, i).adjoint()
        })
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn mul(&self, rhs: &AlgebraMatrix) -> AlgebraMatrix {
        assert_eq!(self.cols, rhs.rows, "incompatible matrix shapes");
        assert_eq!(self.algebra, rhs.algebra, "matrices over different algebras");
        Self::from_fn(&self.algebra, self.rows, rhs.cols, |i, j| {
            let mut acc = AlgebraElement::zero(&self.algebra);
            for k in 0..self.cols {
                acc = &acc + &(self.get(i, k) * rhs.get(k, j));
            }
            acc
        })
    }

    pub fn sub(&self, rhs: &AlgebraMatrix) -> AlgebraMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(&self.algebra, self.rows, self.cols, |i, j| {
            self.get(i, j) - rhs.get(i, j)
        })
    }

    /// `M · F_π`: column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> AlgebraMatrix {
        Self::from_fn(&self.algebra, self.rows, self.cols, |i, j| {
            self.get(i, perm[j]).clone()
        })
    }

    /// Complex matrix of block `k`: size `(rows·n_k) × (cols·n_k)`.
    pub fn block_matrix(&self, k: usize) -> CMat {
        let n = self.algebra.block_sizes()[k];
        let mut out = CMat::zeros(self.rows * n, self.cols * n);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.view_mut((i * n, j * n), (n, n))
                    .copy_from(self.get(i, j).block(k));
            }
        }
        out
    }

    /// Inverse of [`AlgebraMatrix::block_matrix`].
    pub fn from_block_matrices(
        algebra: &BlockAlgebra,
        rows: usize,
        cols: usize,
        blocks: &[CMat],
    ) -> AlgebraMatrix {
        Self::from_fn(algebra, rows, cols, |i, j| {
            let parts = algebra
                .block_sizes()
                .iter()
                .zip(blocks)
                .map(|(&n, b)| b.view((i * n, j * n), (n, n)).into_owned())
                .collect();
            AlgebraElement::new(algebra, parts).expect("block shapes follow the algebra")
        })
    }

    /// C*-norm in `M_{m,n}(B)`.
    pub fn norm(&self) -> f64 {
        (0..self.algebra.num_blocks())
            .map(|k| linalg::op_norm(&self.block_matrix(k)))
            .fold(0.0, f64::max)
    }

    /// `‖self − I‖` for square matrices.
    pub fn identity_defect(&self) -> f64 {
        assert!(self.is_square());
        self.sub(&Self::identity(&self.algebra, self.rows)).norm()
    }

    /// `max(‖M M* − I‖, ‖M* M − I‖)`.
    pub fn unitarity_defect(&self) -> f64 {
        let left = self.mul(&self.adjoint());
        let right = self.adjoint().mul(self);
        let dl = left.sub(&Self::identity(&self.algebra, self.rows)).norm();
        let dr = right.sub(&Self::identity(&self.algebra, self.cols)).norm();
        dl.max(dr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE};
    use alloc::vec;

    #[test]
    fn block_matrix_round_trip() {
        let alg = BlockAlgebra::new(vec![2, 1]).unwrap();
        let m = AlgebraMatrix::from_fn(&alg, 2, 3, |i, j| {
            AlgebraElement::scalar(&alg, C64::new((i + 2 * j) as f64, 1.0))
        });
        let blocks: Vec<CMat> = (0..2).map(|k| m.block_matrix(k)).collect();
        assert_eq!(blocks[0].shape(), (4, 6));
        assert_eq!(AlgebraMatrix::from_block_matrices(&alg, 2, 3, &blocks), m);
    }

    #[test]
    fn identity_is_unitary() {
        let alg = BlockAlgebra::new(vec![3, 1]).unwrap();
        let id = AlgebraMatrix::identity(&alg, 3);
        assert_eq!(id.unitarity_defect(), 0.0);
        assert_eq!(id.mul(&id), id);
        assert_eq!(id.get(1, 1), &AlgebraElement::scalar(&alg, ONE));
    }
}
