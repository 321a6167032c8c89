//! Small dense complex linear-algebra helpers shared by every module.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`; decompositions are
//! delegated to nalgebra (SVD, QR) and the helpers only add the rank and
//! nullspace conventions used throughout the crate.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

/// Complex scalar.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

fn svd(m: &CMat, u: bool, v: bool) -> SVD<C64, nalgebra::Dyn, nalgebra::Dyn> {
    m.clone().svd(u, v)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Singular values of `m` (unordered). Empty matrices have none.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    svd(m, false, false).singular_values.iter().copied().collect()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn hs_norm(m: &CMat) -> f64 {
    m.norm()
}

/// `‖u u* − I‖`, spectral norm.
pub fn unitarity_defect(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    op_norm(&(u * u.adjoint() - identity(u.nrows())))
}

/// Writes `m` as `λ I + r` with `λ = tr(m)/n`; returns `(λ, ‖r‖)`.
pub fn scalar_part(m: &CMat) -> (C64, f64) {
    let n = m.nrows();
    if n == 0 {
        return (ZERO, 0.0);
    }
    let lambda = m.trace() / C64::new(n as f64, 0.0);
    let rest = m - identity(n) * lambda;
    (lambda, op_norm(&rest))
}

/// Orthonormal basis of the nullspace of `m`.
///
/// A singular value counts as zero when it is at most `rel_tol` times the
/// larger of `floor` and the largest singular value. A zero matrix has the
/// whole domain as nullspace.
pub fn nullspace(m: &CMat, rel_tol: f64, floor: f64) -> Vec<DVector<C64>> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    // pad wide matrices so that the SVD exposes a full set of right vectors
    let work = if m.nrows() < cols {
        let mut padded = CMat::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = svd(&work, false, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return (0..cols)
            .map(|i| {
                let mut v = DVector::zeros(cols);
                v[i] = ONE;
                v
            })
            .collect();
    }
    let threshold = rel_tol * sigma_max.max(floor);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= threshold)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect()
}

/// Numerical rank, relative to the largest singular value.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * sigma_max).count()
}

/// Unitary factor of the polar decomposition, together with the extreme
/// singular values `(σ_min, σ_max)`.
///
/// Invertible square matrices go through the scaled Newton iteration
/// `X ← (ζX + ζ⁻¹X^{−*})/2`, which stays accurate when singular values
/// cluster; everything else falls back to `U V*` from the SVD.
pub fn polar_unitary_factor(m: &CMat) -> (CMat, f64, f64) {
    let sv = singular_values(m);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if m.is_square() && smin > 1e-12 * smax {
        if let Some(x) = newton_polar(m) {
            return (x, smin, smax);
        }
    }
    let svd = svd(m, true, true);
    let u = svd.u.expect("left singular vectors were requested");
    let v_t = svd.v_t.expect("right singular vectors were requested");
    (u * v_t, smin, smax)
}

fn newton_polar(m: &CMat) -> Option<CMat> {
    let mut x = m.clone();
    let mut scaled = true;
    for _ in 0..100 {
        let inv_adj = x.clone().try_inverse()?.adjoint();
        let z = if scaled { libm::sqrt(inv_adj.norm() / x.norm()) } else { 1.0 };
        let next = (&x * C64::new(z, 0.0) + inv_adj * C64::new(1.0 / z, 0.0)) * C64::new(0.5, 0.0);
        let delta = (&next - &x).norm();
        x = next;
        if delta <= 1e-14 * x.norm() {
            if !scaled {
                return Some(x);
            }
            // one unscaled step to finish
            scaled = false;
        }
    }
    None
}

/// Moore-Penrose pseudo-inverse via SVD, with singular values below
/// `rel_tol · σ_max` dropped.
pub fn pseudo_inverse(m: &CMat, rel_tol: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMat::zeros(m.ncols(), m.nrows());
    }
    let svd = svd(m, true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let u = svd.u.expect("left singular vectors were requested");
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > rel_tol * smax && *s > 0.0 {
            out += v_t.row(i).adjoint() * u.column(i).adjoint() * C64::new(1.0 / s, 0.0);
        }
    }
    // for full row rank, X ← X + X(I − MX) squares the residual and keeps
    // X in the range of M*, so it is still the pseudo-inverse
    if m.nrows() <= m.ncols() {
        for _ in 0..2 {
            let r = identity(m.nrows()) - m * &out;
            if !(r.norm() < 0.5) {
                break;
            }
            out += &out * r;
        }
    }
    out
}
