//! Induced dynamics on the spectrum of `⊕ M_{n_k}`: one point per block,
//! labelled by block size, with the discrete topology.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::algebra::{invert_permutation, MultivariableSystem, StarIsomorphism};
use crate::hash::ContentHasher;
use crate::matching::BipartiteGraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("a spectrum system needs at least one point and one map")]
    EmptySystem,
    #[error("map {map} is not a bijection of the {points} points")]
    NotABijection { map: usize, points: usize },
    #[error("map {map} sends point {point} to a point with a different label")]
    LabelNotPreserved { map: usize, point: usize },
    #[error("{points} points exceed the search bound of {max}")]
    SearchBudgetExceeded { points: usize, max: usize },
}

/// `(Â, α̂)`: labelled points and `n` label-preserving permutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumDynamicalSystem {
    labels: Vec<usize>,
    maps: Vec<Vec<usize>>,
}

fn is_permutation(p: &[usize], m: usize) -> bool {
    let mut seen = vec![false; m];
    p.len() == m && p.iter().all(|&x| x < m && !core::mem::replace(&mut seen[x], true))
}

impl SpectrumDynamicalSystem {
    pub fn new(labels: Vec<usize>, maps: Vec<Vec<usize>>) -> Result<Self, SpectrumError> {
        let m = labels.len();
        if m == 0 || maps.is_empty() {
            return Err(SpectrumError::EmptySystem);
        }
        for (i, sigma) in maps.iter().enumerate() {
            if !is_permutation(sigma, m) {
                return Err(SpectrumError::NotABijection { map: i, points: m });
            }
            if let Some(x) = (0..m).find(|&x| labels[sigma[x]] != labels[x]) {
                return Err(SpectrumError::LabelNotPreserved { map: i, point: x });
            }
        }
        Ok(SpectrumDynamicalSystem { labels, maps })
    }

    pub fn from_system(system: &MultivariableSystem) -> Self {
        SpectrumDynamicalSystem {
            labels: system.algebra().block_sizes().to_vec(),
            maps: system.maps().iter().map(induced_spectrum_map).collect(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn points(&self) -> usize {
        self.labels.len()
    }

    pub fn arity(&self) -> usize {
        self.maps.len()
    }

    pub fn content_hash(&self) -> String {
        let mut h = ContentHasher::new("spectrum-system");
        h.usize(self.points());
        for &l in &self.labels {
            h.usize(l);
        }
        h.usize(self.arity());
        for sigma in &self.maps {
            for &x in sigma {
                h.usize(x);
            }
        }
        h.finish()
    }
}

/// `k ↦ σ(k)`: `ρ_k ∘ α` is unitarily equivalent to `ρ_{σ(k)}`.
pub fn induced_spectrum_map(alpha: &StarIsomorphism) -> Vec<usize> {
    alpha.perm().to_vec()
}

/// `φ: S → T` on points and, for each point `x` of `T`, a permutation `g_x`
/// with `τ_i(x) = φ(σ_{g_x(i)}(φ⁻¹(x)))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseCertificate {
    pub phi: Vec<usize>,
    pub assignment: Vec<Vec<usize>>,
}

impl PiecewiseCertificate {
    pub fn identity(points: usize, arity: usize) -> Self {
        PiecewiseCertificate {
            phi: (0..points).collect(),
            assignment: vec![(0..arity).collect(); points],
        }
    }

    /// Certificate for `T → S` from one for `S → T`.
    pub fn inverse(&self) -> Self {
        let psi = invert_permutation(&self.phi);
        let assignment = (0..self.phi.len())
            .map(|x| invert_permutation(&self.assignment[self.phi[x]]))
            .collect();
        PiecewiseCertificate {
            phi: psi,
            assignment,
        }
    }

    /// `next ∘ self` for `self: S → T`, `next: T → U`.
    pub fn compose(&self, next: &PiecewiseCertificate) -> Self {
        let phi: Vec<usize> = self.phi.iter().map(|&y| next.phi[y]).collect();
        let next_inv = invert_permutation(&next.phi);
        let assignment = (0..phi.len())
            .map(|z| {
                let g = &self.assignment[next_inv[z]];
                next.assignment[z].iter().map(|&k| g[k]).collect()
            })
            .collect();
        PiecewiseCertificate { phi, assignment }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NotPiecewise {
    ArityMismatch { s: usize, t: usize },
    /// Point counts or label multisets differ, so no bijection exists.
    LabelMismatch,
    Exhausted { bijections_tried: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PiecewiseOutcome {
    Conjugate(PiecewiseCertificate),
    NotConjugate(NotPiecewise),
}

impl PiecewiseOutcome {
    pub fn is_conjugate(&self) -> bool {
        matches!(self, PiecewiseOutcome::Conjugate(_))
    }
}

fn assignment_for(s: &SpectrumDynamicalSystem, t: &SpectrumDynamicalSystem, phi: &[usize]) -> Option<Vec<Vec<usize>>> {
    let phi_inv = invert_permutation(phi);
    let n = s.arity();
    (0..t.points())
        .map(|x| {
            let src = phi_inv[x];
            BipartiteGraph::from_fn(n, |i, j| t.maps[i][x] == phi[s.maps[j][src]])
                .perfect_matching()
                .ok()
        })
        .collect()
}

/// Label-preserving bijections `φ` are enumerated in lexicographic order of
/// `(φ(0), φ(1), …)`; the first one admitting a matching at every point wins.
pub fn decide_piecewise_conjugacy(
    s: &SpectrumDynamicalSystem,
    t: &SpectrumDynamicalSystem,
    max_points: usize,
) -> Result<PiecewiseOutcome, SpectrumError> {
    if s.arity() != t.arity() {
        return Ok(PiecewiseOutcome::NotConjugate(NotPiecewise::ArityMismatch {
            s: s.arity(),
            t: t.arity(),
        }));
    }
    let m = s.points();
    if m.max(t.points()) > max_points {
        return Err(SpectrumError::SearchBudgetExceeded {
            points: m.max(t.points()),
            max: max_points,
        });
    }
    let mut ls = s.labels.clone();
    let mut lt = t.labels.clone();
    ls.sort_unstable();
    lt.sort_unstable();
    if ls != lt {
        return Ok(PiecewiseOutcome::NotConjugate(NotPiecewise::LabelMismatch));
    }

    let mut phi = vec![usize::MAX; m];
    let mut used = vec![false; m];
    let mut tried = 0usize;
    let found = search(s, t, 0, &mut phi, &mut used, &mut tried);
    Ok(match found {
        Some(cert) => PiecewiseOutcome::Conjugate(cert),
        None => PiecewiseOutcome::NotConjugate(NotPiecewise::Exhausted {
            bijections_tried: tried,
        }),
    })
}

fn search(
    s: &SpectrumDynamicalSystem,
    t: &SpectrumDynamicalSystem,
    x: usize,
    phi: &mut [usize],
    used: &mut [bool],
    tried: &mut usize,
) -> Option<PiecewiseCertificate> {
    let m = phi.len();
    if x == m {
        *tried += 1;
        return assignment_for(s, t, phi).map(|assignment| PiecewiseCertificate {
            phi: phi.to_vec(),
            assignment,
        });
    }
    for y in 0..m {
        if used[y] || t.labels[y] != s.labels[x] {
            continue;
        }
        used[y] = true;
        phi[x] = y;
        if let Some(c) = search(s, t, x + 1, phi, used, tried) {
            return Some(c);
        }
        used[y] = false;
    }
    None
}

/// Pointwise recheck of `τ_i(x) = φ(σ_{g_x(i)}(φ⁻¹(x)))`, together with the
/// shape, bijectivity and label conditions.
pub fn verify_piecewise_certificate(
    cert: &PiecewiseCertificate,
    s: &SpectrumDynamicalSystem,
    t: &SpectrumDynamicalSystem,
) -> bool {
    let (m, n) = (s.points(), s.arity());
    if t.points() != m || t.arity() != n || cert.assignment.len() != m || !is_permutation(&cert.phi, m) {
        return false;
    }
    if (0..m).any(|x| s.labels[x] != t.labels[cert.phi[x]]) {
        return false;
    }
    let phi_inv = invert_permutation(&cert.phi);
    cert.assignment.iter().enumerate().all(|(x, g)| {
        is_permutation(g, n)
            && (0..n).all(|i| t.maps[i][x] == cert.phi[s.maps[g[i]][phi_inv[x]]])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(labels: &[usize], maps: &[&[usize]]) -> SpectrumDynamicalSystem {
        SpectrumDynamicalSystem::new(labels.to_vec(), maps.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identical_systems_get_identity() {
        let s = sys(&[1, 1, 2], &[&[1, 0, 2], &[0, 1, 2]]);
        let PiecewiseOutcome::Conjugate(c) = decide_piecewise_conjugacy(&s, &s, 8).unwrap() else {
            panic!()
        };
        assert_eq!(c, PiecewiseCertificate::identity(3, 2));
        assert!(verify_piecewise_certificate(&c, &s, &s));
    }

    #[test]
    fn swapped_roles_need_transposition() {
        let s = sys(&[1, 1], &[&[1, 0], &[0, 1]]);
        let t = sys(&[1, 1], &[&[0, 1], &[1, 0]]);
        let PiecewiseOutcome::Conjugate(c) = decide_piecewise_conjugacy(&s, &t, 8).unwrap() else {
            panic!()
        };
        assert_eq!(c.phi, vec![0, 1]);
        assert_eq!(c.assignment, vec![vec![1, 0], vec![1, 0]]);
        let mut bad = c.clone();
        bad.assignment[0] = vec![0, 1];
        assert!(!verify_piecewise_certificate(&bad, &s, &t));
    }

    #[test]
    fn swap_versus_identity() {
        let s = sys(&[1, 1], &[&[1, 0]]);
        let t = sys(&[1, 1], &[&[0, 1]]);
        assert_eq!(
            decide_piecewise_conjugacy(&s, &t, 8).unwrap(),
            PiecewiseOutcome::NotConjugate(NotPiecewise::Exhausted { bijections_tried: 2 })
        );
    }

    #[test]
    fn arity_and_labels() {
        let s = sys(&[1, 2], &[&[0, 1]]);
        let t = sys(&[1, 2], &[&[0, 1], &[0, 1]]);
        let u = sys(&[1, 1], &[&[0, 1]]);
        assert_eq!(
            decide_piecewise_conjugacy(&s, &t, 8).unwrap(),
            PiecewiseOutcome::NotConjugate(NotPiecewise::ArityMismatch { s: 1, t: 2 })
        );
        assert_eq!(
            decide_piecewise_conjugacy(&s, &u, 8).unwrap(),
            PiecewiseOutcome::NotConjugate(NotPiecewise::LabelMismatch)
        );
        assert!(SpectrumDynamicalSystem::new(vec![1, 2], vec![vec![1, 0]]).is_err());
    }

    #[test]
    fn inverse_and_compose_are_certificates() {
        let s = sys(&[1, 1, 1], &[&[1, 2, 0], &[0, 2, 1]]);
        let t = sys(&[1, 1, 1], &[&[2, 1, 0], &[2, 0, 1]]);
        let PiecewiseOutcome::Conjugate(c) = decide_piecewise_conjugacy(&s, &t, 8).unwrap() else {
            panic!()
        };
        assert!(verify_piecewise_certificate(&c, &s, &t));
        let back = c.inverse();
        assert!(verify_piecewise_certificate(&back, &t, &s));
        let round = c.compose(&back);
        assert!(verify_piecewise_certificate(&round, &s, &s));
    }
}
