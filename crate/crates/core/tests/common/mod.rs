//! Brute-force oracles shared by the integration tests. None of them calls
//! into the library's numerical routines.
#![allow(dead_code)]

use mvdyn_core::algebra::{AlgebraElement, MultivariableSystem, Representation};
use mvdyn_core::linalg::{CMat, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rank by Gaussian elimination with complete pivoting; pivots below
/// `rel_tol · max(1, max|m_ij|)` count as zero.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = scale.max(1.0);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (mut best, mut bi, mut bj) = (0.0, r, c);
        for i in r..rows {
            for j in c..cols {
                if a[(i, j)].norm() > best {
                    best = a[(i, j)].norm();
                    bi = i;
                    bj = j;
                }
            }
        }
        if best <= rel_tol * scale {
            break;
        }
        a.swap_rows(r, bi);
        a.swap_columns(c, bj);
        let pivot = a[(r, c)];
        for i in r + 1..rows {
            let f = a[(i, c)] / pivot;
            if f != C64::new(0.0, 0.0) {
                for j in c..cols {
                    let v = a[(r, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        r += 1;
    }
    r
}

fn single_block(e: &AlgebraElement) -> &CMat {
    assert_eq!(e.blocks().len(), 1, "oracle expects a full matrix algebra target");
    &e.blocks()[0]
}

/// `dim {c : φ(e)c = cψ(e) for all matrix units e}` from the stacked
/// linear system on `vec(c)`.
pub fn intertwiner_nullity(phi: &Representation, psi: &Representation) -> usize {
    let d = phi.target().block_sizes()[0];
    let units = phi.images().len();
    let mut stack = CMat::zeros(units * d * d, d * d);
    for (g, (pe, qe)) in phi.images().iter().zip(psi.images()).enumerate() {
        let (p, q) = (single_block(pe), single_block(qe));
        for r in 0..d {
            for s in 0..d {
                let row = g * d * d + r * d + s;
                // (φ c − c ψ)_{rs} = Σ_t φ_rt c_ts − c_rt ψ_ts
                for t in 0..d {
                    stack[(row, t * d + s)] += p[(r, t)];
                    stack[(row, r * d + t)] -= q[(t, s)];
                }
            }
        }
    }
    d * d - rank(&stack, 1e-9)
}

/// `max_e ‖φ(e)c − cψ(e)‖_F` over matrix units.
pub fn intertwining_defect(c: &CMat, phi: &Representation, psi: &Representation) -> f64 {
    phi.images()
        .iter()
        .zip(psi.images())
        .map(|(p, q)| (single_block(p) * c - c * single_block(q)).norm())
        .fold(0.0, f64::max)
}

/// Largest singular value of the assembled block-diagonal matrix.
pub fn full_svd_norm(a: &AlgebraElement) -> f64 {
    let n: usize = a.blocks().iter().map(|b| b.nrows()).sum();
    let mut full = CMat::zeros(n, n);
    let mut off = 0;
    for b in a.blocks() {
        full.view_mut((off, off), b.shape()).copy_from(b);
        off += b.nrows();
    }
    full.singular_values().max()
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                go(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Outer conjugacy over full matrix algebras by trying every `π ∈ S_n`:
/// `β_i` and `α_{π(i)}` must admit a nonzero intertwiner for every `i`.
pub fn outer_conjugate_oracle(a: &MultivariableSystem, b: &MultivariableSystem) -> bool {
    if a.algebra() != b.algebra() || a.arity() != b.arity() {
        return false;
    }
    let n = a.arity();
    let ar: Vec<_> = a.maps().iter().map(|m| m.as_representation()).collect();
    let br: Vec<_> = b.maps().iter().map(|m| m.as_representation()).collect();
    let ok: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| intertwiner_nullity(&br[i], &ar[j]) > 0).collect())
        .collect();
    all_permutations(n)
        .iter()
        .any(|p| (0..n).all(|i| ok[i][p[i]]))
}
