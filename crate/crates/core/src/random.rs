//! Seeded random instances: Haar unitaries, automorphisms, systems,
//! intertwiner matrices and equivalent pairs of systems.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{
    AlgebraElement, BlockAlgebra, MultivariableSystem, RepRef, Representation, StarIsomorphism,
};
use crate::deciders::{certify_unitary_equivalence, UnitaryEquivalenceCertificate, UnitaryEquivalenceReport};
use crate::intertwiner::{intertwiner_space, IntertwinerMatrix};
use crate::linalg::{self, CMat, C64};
use crate::matrix::AlgebraMatrix;
use crate::tol::Tolerances;

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

pub fn random_element<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra) -> AlgebraElement {
    let blocks = alg.block_sizes().iter().map(|&n| gaussian_matrix(rng, n, n)).collect();
    AlgebraElement::new(alg, blocks).expect("shapes follow the algebra")
}

pub fn random_unitary_element<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra) -> AlgebraElement {
    let blocks = alg.block_sizes().iter().map(|&n| haar_unitary(rng, n)).collect();
    AlgebraElement::new(alg, blocks).expect("shapes follow the algebra")
}

/// Uniform among the block permutations preserving block sizes.
pub fn random_block_permutation<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra) -> Vec<usize> {
    let sizes = alg.block_sizes();
    let mut perm: Vec<usize> = (0..sizes.len()).collect();
    let mut distinct: Vec<usize> = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for s in distinct {
        let slots: Vec<usize> = (0..sizes.len()).filter(|&k| sizes[k] == s).collect();
        let mut images = slots.clone();
        images.shuffle(rng);
        for (slot, image) in slots.into_iter().zip(images) {
            perm[slot] = image;
        }
    }
    perm
}

pub fn random_automorphism<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra) -> StarIsomorphism {
    let perm = random_block_permutation(rng, alg);
    let unitaries = perm.iter().map(|&p| haar_unitary(rng, alg.block_sizes()[p])).collect();
    StarIsomorphism::new(alg.clone(), alg.clone(), perm, unitaries, &Tolerances::default())
        .expect("Haar unitaries are unitary")
}

pub fn random_inner_automorphism<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra) -> StarIsomorphism {
    StarIsomorphism::inner(&random_unitary_element(rng, alg), &Tolerances::default())
        .expect("Haar unitaries are unitary")
}

pub fn random_system<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra, arity: usize) -> MultivariableSystem {
    let maps = (0..arity).map(|_| random_automorphism(rng, alg)).collect();
    MultivariableSystem::new(alg.clone(), maps).expect("nonempty automorphic family")
}

/// Uniformly random permutations on `points` one-dimensional blocks.
pub fn random_commutative_system<R: Rng + ?Sized>(rng: &mut R, points: usize, arity: usize) -> MultivariableSystem {
    let alg = BlockAlgebra::commutative(points).expect("at least one point");
    random_system(rng, &alg, arity)
}

/// `Ad(u) ∘ ρ_k` for Haar `u`, from `M_d^{⊕p}` onto `M_d`.
pub fn random_irrep<R: Rng + ?Sized>(rng: &mut R, source: &BlockAlgebra, k: usize) -> Representation {
    let d = source.block_sizes()[k];
    let target = BlockAlgebra::full_matrix(d).expect("positive size");
    let ad = random_inner_automorphism(rng, &target);
    Representation::block_projection(source, k)
        .postcompose(&ad)
        .expect("target of the projection is M_d")
}

/// A random intertwiner between two random irreducibles of `M_d^{⊕p}`,
/// nonzero exactly when both factor through the same block (unless
/// `force_zero`).
pub struct IntertwinerSample {
    pub phi: Representation,
    pub psi: Representation,
    pub c: AlgebraElement,
}

pub fn random_intertwiner<R: Rng + ?Sized>(rng: &mut R, d: usize, p: usize, force_zero: bool) -> IntertwinerSample {
    let source = BlockAlgebra::new(vec![d; p]).expect("positive sizes");
    let (a, b) = (rng.random_range(0..p), rng.random_range(0..p));
    let phi = random_irrep(rng, &source, a);
    let psi = random_irrep(rng, &source, b);
    let target = phi.target().clone();
    let mut c = AlgebraElement::zero(&target);
    if !force_zero {
        for v in intertwiner_space(&phi, &psi, &Tolerances::default()).expect("same source and target") {
            c = &c + &v.scale(complex_gaussian(rng) * (1.0 + rng.random::<f64>()));
        }
    }
    IntertwinerSample { phi, psi, c }
}

fn intertwiner_entry<R: Rng + ?Sized>(rng: &mut R, phi: &Representation, psi: &Representation) -> AlgebraElement {
    intertwiner_space(phi, psi, &Tolerances::default())
        .expect("same source and target")
        .into_iter()
        .next()
        .unwrap_or_else(|| AlgebraElement::zero(phi.target()))
        .scale(complex_gaussian(rng))
}

fn well_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    loop {
        let g = gaussian_matrix(rng, n, n);
        let sv = linalg::singular_values(&g);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        if n == 0 || smin > 0.1 * smax {
            return g;
        }
    }
}

/// Square `n × n` intertwiner matrix over `M_d` whose rows and columns are
/// random irreducibles of `M_d^{⊕p}`, the column labels a permutation of
/// the row labels. Within each label class the coefficients form a
/// well-conditioned matrix, so the result is invertible.
pub fn random_invertible_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, p: usize) -> IntertwinerMatrix {
    let source = BlockAlgebra::new(vec![d; p]).expect("positive sizes");
    let target = BlockAlgebra::full_matrix(d).expect("positive size");
    let row_labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..p)).collect();
    let mut col_labels = row_labels.clone();
    col_labels.shuffle(rng);
    let rows: Vec<RepRef> = row_labels.iter().map(|&k| Arc::new(random_irrep(rng, &source, k))).collect();
    let cols: Vec<RepRef> = col_labels.iter().map(|&k| Arc::new(random_irrep(rng, &source, k))).collect();

    let mut m = AlgebraMatrix::zeros(&target, n, n);
    for k in 0..p {
        let ri: Vec<usize> = (0..n).filter(|&i| row_labels[i] == k).collect();
        let ci: Vec<usize> = (0..n).filter(|&j| col_labels[j] == k).collect();
        let coeff = well_conditioned(rng, ri.len());
        for (a, &i) in ri.iter().enumerate() {
            for (b, &j) in ci.iter().enumerate() {
                let basis = intertwiner_entry(rng, &rows[i], &cols[j]);
                let unit = basis.scale(C64::new(1.0 / basis.norm(), 0.0));
                m.set(i, j, unit.scale(coeff[(a, b)]));
            }
        }
    }
    IntertwinerMatrix::new(m, rows, cols).expect("consistent families")
}

/// An invertible `n × n` instance padded with one more intertwining row,
/// so `m = n + 1`.
pub fn random_padded_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, p: usize) -> IntertwinerMatrix {
    let square = random_invertible_instance(rng, n, d, p);
    let source = square.row_reps()[0].source().clone();
    let label = rng.random_range(0..p);
    let extra = Arc::new(random_irrep(rng, &source, label));
    let old = square.matrix();
    let cols = square.col_reps().to_vec();
    let mut m = AlgebraMatrix::zeros(old.algebra(), n + 1, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, old.get(i, j).clone());
        }
    }
    for (j, col) in cols.iter().enumerate() {
        m.set(n, j, intertwiner_entry(rng, &extra, col));
    }
    let mut rows = square.row_reps().to_vec();
    rows.push(extra);
    IntertwinerMatrix::new(m, rows, cols).expect("consistent families")
}

/// Random unitary `n × n` scalar matrix that is zero between different
/// groups.
fn grouped_unitary<R: Rng + ?Sized>(rng: &mut R, groups: &[usize]) -> CMat {
    let n = groups.len();
    let mut v = CMat::zeros(n, n);
    let mut seen: Vec<usize> = groups.to_vec();
    seen.sort_unstable();
    seen.dedup();
    for g in seen {
        let idx: Vec<usize> = (0..n).filter(|&i| groups[i] == g).collect();
        let u = haar_unitary(rng, idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                v[(i, j)] = u[(a, b)];
            }
        }
    }
    v
}

/// Two unitarily equivalent systems on `alg` with a certificate.
///
/// `α` has `distinct` different maps spread over `arity` slots. With
/// `c_j = γ α_j γ⁻¹`, the second system is `β_i = Ad(w_i) ∘ c_{ρ(i)}` and
/// `u_ij = V_{ρ(i) j} w_i` for a unitary `V` supported on equal maps.
pub struct EquivalentPair {
    pub a: MultivariableSystem,
    pub b: MultivariableSystem,
    pub certificate: UnitaryEquivalenceCertificate,
}

pub fn random_equivalent_pair<R: Rng + ?Sized>(
    rng: &mut R,
    alg: &BlockAlgebra,
    arity: usize,
    distinct: usize,
) -> EquivalentPair {
    let distinct = distinct.clamp(1, arity.max(1));
    let base: Vec<_> = (0..distinct).map(|_| random_automorphism(rng, alg)).collect();
    let mut groups: Vec<usize> = (0..arity).map(|j| if j < distinct { j } else { rng.random_range(0..distinct) }).collect();
    groups.shuffle(rng);
    let a = MultivariableSystem::new(alg.clone(), groups.iter().map(|&g| base[g].clone()).collect())
        .expect("nonempty automorphic family");

    let gamma = random_automorphism(rng, alg);
    let conj = crate::deciders::transported_maps(&gamma, &a).expect("same algebra");
    let mut rho: Vec<usize> = (0..arity).collect();
    rho.shuffle(rng);
    let twists: Vec<_> = (0..arity).map(|_| random_unitary_element(rng, alg)).collect();
    let tol = Tolerances::default();
    let maps = (0..arity)
        .map(|i| {
            StarIsomorphism::inner(&twists[i], &tol)
                .and_then(|ad| ad.compose(&conj[rho[i]]))
                .expect("unitary twist of an automorphism")
        })
        .collect();
    let b = MultivariableSystem::new(alg.clone(), maps).expect("nonempty automorphic family");
    let v = grouped_unitary(rng, &groups);
    let matrix = AlgebraMatrix::from_fn(alg, arity, arity, |i, j| twists[i].scale(v[(rho[i], j)]));
    let mut certificate = UnitaryEquivalenceCertificate {
        gamma,
        matrix,
        report: UnitaryEquivalenceReport {
            left_unitarity: f64::INFINITY,
            right_unitarity: f64::INFINITY,
            intertwining: f64::INFINITY,
        },
    };
    certificate.report = certify_unitary_equivalence(&certificate, &a, &b);
    EquivalentPair { a, b, certificate }
}

/// `b` obtained from `a` by a random outer twist: `β_i = Ad(w_i) ∘ α_{π(i)}`.
pub fn random_outer_twist<R: Rng + ?Sized>(rng: &mut R, a: &MultivariableSystem) -> MultivariableSystem {
    let mut perm: Vec<usize> = (0..a.arity()).collect();
    perm.shuffle(rng);
    let maps = perm
        .iter()
        .map(|&p| {
            random_inner_automorphism(rng, a.algebra())
                .compose(&a.maps()[p])
                .expect("same algebra")
        })
        .collect();
    MultivariableSystem::new(a.algebra().clone(), maps).expect("nonempty automorphic family")
}

/// Sparse operator with `count` random blocks, for testing expectations.
pub fn random_fock_operator<R: Rng + ?Sized>(
    rng: &mut R,
    fock: &crate::fock::FockRep,
    count: usize,
) -> crate::fock::FockOperator {
    let (w, d) = (fock.num_words(), fock.block_dim());
    let mut op = crate::fock::FockOperator::zero(w, d);
    for _ in 0..count {
        let (r, c) = (rng.random_range(0..w), rng.random_range(0..w));
        op.add_block(r, c, gaussian_matrix(rng, d, d));
    }
    op
}
