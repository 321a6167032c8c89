//! Isomorphism invariants for multivariable dynamics over finite-dimensional
//! C*-algebras `⊕ M_{n_k}`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod deciders;
pub mod elimination;
pub mod fock;
pub mod hash;
pub mod intertwiner;
pub mod linalg;
pub mod matching;
pub mod matrix;
pub mod random;
pub mod spectrum;
pub mod tol;
