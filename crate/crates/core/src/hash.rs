//! Content hashes binding certificates to the exact numeric inputs they were
//! computed from.

use alloc::string::String;

use sha2::{Digest, Sha256};

use crate::algebra::{AlgebraElement, BlockAlgebra, MultivariableSystem, Representation, StarIsomorphism};
use crate::intertwiner::IntertwinerMatrix;
use crate::linalg::CMat;

/// SHA-256 over a tagged, length-prefixed encoding of numeric content.
pub struct ContentHasher {
    inner: Sha256,
}

impl ContentHasher {
    pub fn new(tag: &str) -> Self {
        let mut h = ContentHasher {
            inner: Sha256::new(),
        };
        h.bytes(tag.as_bytes());
        h
    }

    fn bytes(&mut self, b: &[u8]) {
        self.inner.update((b.len() as u64).to_le_bytes());
        self.inner.update(b);
    }

    pub fn usize(&mut self, x: usize) -> &mut Self {
        self.inner.update((x as u64).to_le_bytes());
        self
    }

    pub fn f64(&mut self, x: f64) -> &mut Self {
        // -0.0 and 0.0 hash alike
        let x = if x == 0.0 { 0.0 } else { x };
        self.inner.update(x.to_bits().to_le_bytes());
        self
    }

    pub fn matrix(&mut self, m: &CMat) -> &mut Self {
        self.usize(m.nrows()).usize(m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)].re).f64(m[(r, c)].im);
            }
        }
        self
    }

    pub fn algebra(&mut self, a: &BlockAlgebra) -> &mut Self {
        self.usize(a.num_blocks());
        for &n in a.block_sizes() {
            self.usize(n);
        }
        self
    }

    pub fn element(&mut self, e: &AlgebraElement) -> &mut Self {
        self.usize(e.blocks().len());
        for b in e.blocks() {
            self.matrix(b);
        }
        self
    }

    pub fn morphism(&mut self, phi: &StarIsomorphism) -> &mut Self {
        self.algebra(phi.source()).algebra(phi.target());
        for &p in phi.perm() {
            self.usize(p);
        }
        for u in phi.unitaries() {
            self.matrix(u);
        }
        self
    }

    pub fn representation(&mut self, rep: &Representation) -> &mut Self {
        self.algebra(rep.source()).algebra(rep.target());
        for img in rep.images() {
            self.element(img);
        }
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.inner.finalize())
    }
}

pub fn hash_system(system: &MultivariableSystem) -> String {
    let mut h = ContentHasher::new("system");
    h.algebra(system.algebra()).usize(system.arity());
    for m in system.maps() {
        h.morphism(m);
    }
    h.finish()
}

pub fn hash_intertwiner_matrix(m: &IntertwinerMatrix) -> String {
    let mut h = ContentHasher::new("intertwiner-matrix");
    h.algebra(m.matrix().algebra())
        .usize(m.rows())
        .usize(m.cols());
    for e in m.matrix().entries() {
        h.element(e);
    }
    for r in m.row_reps().iter().chain(m.col_reps()) {
        h.representation(r);
    }
    h.finish()
}
