//! Finite periodic bilayer in real space and its momentum-basis block check.
//!
//! Sites are `|λ, j, l⟩` with layer λ ∈ {1, 2} and in-plane indices
//! j, l ∈ 1..=N. The dense index is `(λ−1)·N² + (j−1)·N + (l−1)`.
//!
//! Momentum-basis columns are ordered `2·(ix·N + iy) + s` where
//! `kx = 2π(ix+1)/N`, `ky = 2π(iy+1)/N` and `s = 0` for sublattice A,
//! `s = 1` for B. Sublattice A lives on layer `λ_A = [3 + (−1)^{j+l}]/2`.
//! With this (A, B) order each diagonal block reproduces `[[By, Bx], [Bx, −By]]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::{bloch_field, bloch_matrix, principal_sqrt, BlochMatrix};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Momentum};

/// Number of unit cells per direction; even and at least 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSize(usize);

impl LatticeSize {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidLatticeSize(n));
        }
        Ok(LatticeSize(n))
    }

    pub fn n(self) -> usize {
        self.0
    }

    pub fn dim(self) -> usize {
        2 * self.0 * self.0
    }

    /// Dense index of `|λ, j, l⟩`, all labels 1-based, j and l taken mod N.
    pub fn site(self, layer: usize, j: usize, l: usize) -> usize {
        let n = self.0;
        (layer - 1) * n * n + ((j - 1) % n) * n + ((l - 1) % n)
    }

    /// Momentum of block `b` (= `ix·N + iy`).
    pub fn block_momentum(self, b: usize) -> Momentum {
        let n = self.0;
        let step = 2.0 * PI / n as f64;
        Momentum::new(step * ((b / n) + 1) as f64, step * ((b % n) + 1) as f64)
    }
}

fn stagger(layer: usize, j: usize, l: usize) -> f64 {
    if (layer + j + l).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Layer carrying sublattice A at cell (j, l).
fn layer_a(j: usize, l: usize) -> usize {
    if (j + l).is_multiple_of(2) {
        2
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSpaceHamiltonian {
    pub size: LatticeSize,
    pub matrix: DMatrix<Complex64>,
}

pub fn build_realspace(params: &ModelParams, size: LatticeSize) -> RealSpaceHamiltonian {
    let n = size.n();
    let mut h = DMatrix::<Complex64>::zeros(size.dim(), size.dim());
    let mut hop = |a: usize, b: usize, v: f64| {
        h[(a, b)] += v;
        h[(b, a)] += v;
    };
    for layer in 1..=2 {
        for j in 1..=n {
            for l in 1..=n {
                let here = size.site(layer, j, l);
                let s = stagger(layer, j, l);
                hop(here, size.site(layer, j + 1, l), params.intra);
                hop(here, size.site(layer, j, l + 1), params.intra);
                hop(here, size.site(layer, j + 1, l + 1), params.diag * s);
                // l − 1 wraps to N when l = 1
                hop(here, size.site(layer, j + 1, l + n - 1), params.diag * s);
            }
        }
    }
    for j in 1..=n {
        for l in 1..=n {
            hop(size.site(1, j, l), size.site(2, j, l), params.inter);
        }
    }
    for layer in 1..=2 {
        for j in 1..=n {
            for l in 1..=n {
                let here = size.site(layer, j, l);
                h[(here, here)] += Complex64::new(0.0, params.gamma * stagger(layer, j, l));
            }
        }
    }
    RealSpaceHamiltonian { size, matrix: h }
}

impl RealSpaceHamiltonian {
    /// Copy with the hopping between sites `a` and `b` negated (both directions).
    pub fn with_flipped_hopping(&self, a: usize, b: usize) -> Self {
        let mut m = self.matrix.clone();
        m[(a, b)] = -m[(a, b)];
        m[(b, a)] = -m[(b, a)];
        RealSpaceHamiltonian {
            size: self.size,
            matrix: m,
        }
    }

    /// Nonzero entries as `(row, col, re, im)`.
    pub fn entries(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::new();
        for r in 0..self.matrix.nrows() {
            for c in 0..self.matrix.ncols() {
                let z = self.matrix[(r, c)];
                if z != Complex64::new(0.0, 0.0) {
                    out.push((r, c, z.re, z.im));
                }
            }
        }
        out
    }

    /// `H − H†`, which is nonzero only on the diagonal for this model.
    pub fn anti_hermitian_part(&self) -> DMatrix<Complex64> {
        &self.matrix - self.matrix.adjoint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumBasis {
    pub size: LatticeSize,
    pub matrix: DMatrix<Complex64>,
}

pub fn build_momentum_basis(size: LatticeSize) -> MomentumBasis {
    let n = size.n();
    let norm = 1.0 / n as f64;
    let mut u = DMatrix::<Complex64>::zeros(size.dim(), size.dim());
    for b in 0..n * n {
        let k = size.block_momentum(b);
        for j in 1..=n {
            for l in 1..=n {
                let phase = Complex64::from_polar(norm, k.kx * j as f64 + k.ky * l as f64);
                let la = layer_a(j, l);
                u[(size.site(la, j, l), 2 * b)] = phase;
                u[(size.site(3 - la, j, l), 2 * b + 1)] = phase;
            }
        }
    }
    MomentumBasis { size, matrix: u }
}

impl MomentumBasis {
    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - target).norm());
            }
        }
        worst
    }
}

/// Which pairing of the (A, B) basis vectors matched the Bloch blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisOrdering {
    AB,
    BA,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockReport {
    pub offblock: f64,
    pub blockdev: f64,
    pub ordering: BasisOrdering,
    /// Mismatch between the block eigenvalues and `±√(Bx² + By²)` on the grid.
    pub spectral_mismatch: f64,
}

impl BlockReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.offblock < tol && self.blockdev < tol && self.spectral_mismatch < tol
    }
}

fn block(m: &DMatrix<Complex64>, b: usize, ordering: BasisOrdering) -> BlochMatrix {
    let (i, o) = match ordering {
        BasisOrdering::AB => (2 * b, 2 * b + 1),
        BasisOrdering::BA => (2 * b + 1, 2 * b),
    };
    BlochMatrix([[m[(i, i)], m[(i, o)]], [m[(o, i)], m[(o, o)]]])
}

fn block_eigenvalues(h: &BlochMatrix) -> [Complex64; 2] {
    let [[p, q], [r, s]] = h.0;
    let mean = (p + s) / 2.0;
    let root = principal_sqrt(((p - s) / 2.0).powi(2) + q * r);
    [mean + root, mean - root]
}

/// Greedy nearest matching of two equally long multisets; worst pair distance.
fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .expect("equal lengths");
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}

/// Transforms `H` into the momentum basis and measures how far it is from
/// the block-diagonal form `⊕_k h(k)`.
pub fn block_check(h: &RealSpaceHamiltonian, u: &MomentumBasis, params: &ModelParams) -> Result<BlockReport> {
    if h.size != u.size {
        return Err(Error::DimensionMismatch {
            expected: u.size.dim(),
            found: h.size.dim(),
        });
    }
    let size = h.size;
    let m = u.matrix.adjoint() * &h.matrix * &u.matrix;

    let mut offblock = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r / 2 != c / 2 {
                offblock = offblock.max(m[(r, c)].norm());
            }
        }
    }

    let blocks = size.n() * size.n();
    let analytic: Vec<BlochMatrix> = (0..blocks)
        .map(|b| bloch_matrix(&bloch_field(params, size.block_momentum(b))))
        .collect();
    let deviation = |ordering| {
        (0..blocks)
            .map(|b| block(&m, b, ordering).max_abs_diff(&analytic[b]))
            .fold(0.0f64, f64::max)
    };
    let (ab, ba) = (deviation(BasisOrdering::AB), deviation(BasisOrdering::BA));
    let (ordering, blockdev) = if ab <= ba {
        (BasisOrdering::AB, ab)
    } else {
        (BasisOrdering::BA, ba)
    };

    let numeric: Vec<Complex64> = (0..blocks)
        .flat_map(|b| block_eigenvalues(&block(&m, b, ordering)))
        .collect();
    let expected: Vec<Complex64> = (0..blocks)
        .flat_map(|b| {
            let e = principal_sqrt(bloch_field(params, size.block_momentum(b)).energy_squared());
            [e, -e]
        })
        .collect();

    Ok(BlockReport {
        offblock,
        blockdev,
        ordering,
        spectral_mismatch: multiset_distance(&numeric, &expected),
    })
}

/// Eigenvalues of the full real-space matrix (complex Schur form) against
/// `±E(k)` over the lattice momenta; worst matched distance.
pub fn full_spectrum_mismatch(h: &RealSpaceHamiltonian, params: &ModelParams) -> Option<f64> {
    let numeric: Vec<Complex64> = h.matrix.clone().schur().eigenvalues()?.iter().copied().collect();
    let blocks = h.size.n() * h.size.n();
    let expected: Vec<Complex64> = (0..blocks)
        .flat_map(|b| {
            let e = principal_sqrt(bloch_field(params, h.size.block_momentum(b)).energy_squared());
            [e, -e]
        })
        .collect();
    Some(multiset_distance(&numeric, &expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(n: usize) -> LatticeSize {
        LatticeSize::new(n).unwrap()
    }

    #[test]
    fn rejects_odd_and_small() {
        assert_eq!(LatticeSize::new(2), Err(Error::InvalidLatticeSize(2)));
        assert_eq!(LatticeSize::new(5), Err(Error::InvalidLatticeSize(5)));
        assert!(LatticeSize::new(4).is_ok());
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        // bypasses validation on purpose: J = 0 is not a valid model
        let p = ModelParams {
            intra: 0.0,
            inter: 0.0,
            diag: 0.0,
            gamma: 0.0,
            tol_ep: 1e-9,
        };
        let h = build_realspace(&p, size(4));
        assert_eq!(h.matrix.nrows(), 32);
        assert!(h.entries().is_empty());
        let r = block_check(&h, &build_momentum_basis(size(4)), &p).unwrap();
        assert_eq!((r.offblock, r.blockdev), (0.0, 0.0));
    }

    #[test]
    fn nearest_neighbour_count() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let h = build_realspace(&p, size(4));
        assert_eq!(h.matrix.nrows(), 32);
        for r in 0..32 {
            let ones = (0..32).filter(|&c| h.matrix[(r, c)] == Complex64::from(1.0)).count();
            let nonzero = (0..32).filter(|&c| h.matrix[(r, c)].norm() > 0.0).count();
            assert_eq!((ones, nonzero), (4, 4), "row {r}");
            for c in 0..32 {
                assert_eq!(h.matrix[(r, c)], h.matrix[(c, r)]);
                // never hops between layers
                if (r < 16) != (c < 16) {
                    assert_eq!(h.matrix[(r, c)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn staggered_gain_loss_pattern() {
        let p = ModelParams {
            intra: 1.0,
            inter: 0.0,
            diag: 0.0,
            gamma: 0.5,
            tol_ep: 1e-9,
        };
        let mut h = build_realspace(&p, size(4));
        let s = size(4);
        for layer in 1..=2 {
            for j in 1..=4 {
                for l in 1..=4 {
                    let i = s.site(layer, j, l);
                    let sign = if (layer + j + l).is_multiple_of(2) { 1.0 } else { -1.0 };
                    assert_eq!(h.matrix[(i, i)], Complex64::new(0.0, 0.5 * sign));
                    h.matrix[(i, i)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        // what remains is the Hermitian J part only
        assert_eq!(h.matrix, h.matrix.adjoint());
    }

    #[test]
    fn zero_momentum_column() {
        let s = size(4);
        let u = build_momentum_basis(s);
        // block N² − 1 is kx = ky = 2π ≡ 0
        let col = 2 * (s.n() * s.n() - 1);
        for layer in 1..=2 {
            for j in 1..=4 {
                for l in 1..=4 {
                    let v = u.matrix[(s.site(layer, j, l), col)];
                    let expect = if layer_a(j, l) == layer { 0.25 } else { 0.0 };
                    assert!((v - Complex64::from(expect)).norm() < 1e-15);
                }
            }
        }
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn anti_hermitian_part_is_diagonal() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let h = build_realspace(&p, size(4));
        let d = h.anti_hermitian_part();
        for r in 0..d.nrows() {
            for c in 0..d.ncols() {
                if r == c {
                    assert!((d[(r, c)].im.abs() - 1.0).abs() < 1e-15);
                } else {
                    assert_eq!(d[(r, c)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn block_diagonal_for_n6() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let h = build_realspace(&p, size(6));
        let u = build_momentum_basis(size(6));
        let r = block_check(&h, &u, &p).unwrap();
        assert!(r.offblock < 1e-10 && r.blockdev < 1e-10, "{r:?}");
        assert_eq!(r.ordering, BasisOrdering::AB);
        assert!(r.spectral_mismatch < 1e-10);
    }

    #[test]
    fn flipped_bond_shows_off_block_at_n4() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let s = size(4);
        let h = build_realspace(&p, s).with_flipped_hopping(s.site(1, 1, 1), s.site(1, 2, 1));
        let r = block_check(&h, &build_momentum_basis(s), &p).unwrap();
        // a single flipped J bond contributes 2J/N² = 0.125
        assert!(r.offblock > 0.1, "{r:?}");
        assert!((r.offblock - 0.125).abs() < 1e-12);
    }

    #[test]
    fn full_spectrum_matches_bands() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let h = build_realspace(&p, size(6));
        let d = full_spectrum_mismatch(&h, &p).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let h = build_realspace(&p, size(4));
        let u = build_momentum_basis(size(6));
        assert!(matches!(block_check(&h, &u, &p), Err(Error::DimensionMismatch { .. })));
    }
}
