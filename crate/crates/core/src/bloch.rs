//! The Bloch Hamiltonian `h(k) = Bx·σx + By·σz` and its analytic eigensystem.
//!
//! `Bx = 2J(cos kx + cos ky) + T` is real and `By = 4t·cos kx·cos ky + iγ`
//! carries the whole non-Hermiticity in a constant imaginary part. The 2×2
//! problem is solved in closed form; no general eigensolver is involved.
//!
//! Expectation values use the Hermitian inner product with the *right*
//! eigenvector. With that convention the planar field `F = (⟨σx⟩, ⟨σz⟩)`
//! vanishes at exceptional points and reduces to `(Bx, By)/|B|` when γ = 0.
//! Whether a biorthogonal average is meant instead is not settled here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, Momentum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The two-component complex field `B(k) = (Bx, By)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochField {
    pub bx: f64,
    pub by_re: f64,
    pub by_im: f64,
}

impl BlochField {
    pub fn new(bx: f64, by: Complex64) -> Self {
        BlochField {
            bx,
            by_re: by.re,
            by_im: by.im,
        }
    }

    pub fn by(&self) -> Complex64 {
        Complex64::new(self.by_re, self.by_im)
    }

    /// `E² = Bx² + By²`, the discriminant of the 2×2 problem.
    pub fn energy_squared(&self) -> Complex64 {
        let by = self.by();
        Complex64::from(self.bx * self.bx) + by * by
    }

    pub fn is_finite(&self) -> bool {
        self.bx.is_finite() && self.by_re.is_finite() && self.by_im.is_finite()
    }
}

pub fn bloch_field(params: &ModelParams, k: Momentum) -> BlochField {
    let (cx, cy) = (k.kx.cos(), k.ky.cos());
    BlochField {
        bx: 2.0 * params.intra * (cx + cy) + params.inter,
        by_re: 4.0 * params.diag * cx * cy,
        by_im: params.gamma,
    }
}

/// Principal square root: non-negative real part, and non-negative
/// imaginary part when the real part vanishes.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        -s
    } else {
        s
    }
}

/// Upper band `E₊(k)` on the principal branch.
pub fn upper_band(params: &ModelParams, k: Momentum) -> Complex64 {
    principal_sqrt(bloch_field(params, k).energy_squared())
}

pub type Spinor = [Complex64; 2];

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMatrix(pub [[Complex64; 2]; 2]);

pub const SIGMA_X: BlochMatrix = BlochMatrix([[ZERO, ONE], [ONE, ZERO]]);
pub const SIGMA_Y: BlochMatrix = BlochMatrix([[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]]);
pub const SIGMA_Z: BlochMatrix = BlochMatrix([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]);

/// `h = Bx·σx + By·σz`, laid out as `[[By, Bx], [Bx, −By]]`.
pub fn bloch_matrix(field: &BlochField) -> BlochMatrix {
    let bx = Complex64::from(field.bx);
    let by = field.by();
    BlochMatrix([[by, bx], [bx, -by]])
}

impl BlochMatrix {
    pub fn at(params: &ModelParams, k: Momentum) -> Self {
        bloch_matrix(&bloch_field(params, k))
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul(&self, rhs: &BlochMatrix) -> BlochMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        BlochMatrix(out)
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &BlochMatrix) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(σy h σy + h)_ij|`; zero when h anticommutes with σy.
    pub fn chiral_residual(&self) -> f64 {
        let conj = SIGMA_Y.mul(self).mul(&SIGMA_Y);
        let neg = BlochMatrix(self.0.map(|row| row.map(|z| -z)));
        conj.max_abs_diff(&neg)
    }
}

/// Which of the two bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Plus,
    Minus,
}

impl Band {
    pub fn other(self) -> Band {
        match self {
            Band::Plus => Band::Minus,
            Band::Minus => Band::Plus,
        }
    }
}

/// Eigenvalues `±E` and right eigenvectors of a Bloch matrix.
///
/// `defective` marks a Jordan block (exceptional point). In that case both
/// eigenvectors are the single eigenvector `∝ (Bx, −By)`. `degenerate` marks
/// `h ≈ 0` (diabolic point): any basis diagonalizes it and the canonical one
/// is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub e_plus: Complex64,
    pub e_minus: Complex64,
    pub psi_plus: Spinor,
    pub psi_minus: Spinor,
    pub defective: bool,
    pub degenerate: bool,
}

impl EigenSystem {
    pub fn energy(&self, band: Band) -> Complex64 {
        match band {
            Band::Plus => self.e_plus,
            Band::Minus => self.e_minus,
        }
    }

    pub fn vector(&self, band: Band) -> &Spinor {
        match band {
            Band::Plus => &self.psi_plus,
            Band::Minus => &self.psi_minus,
        }
    }
}

fn norm(v: &Spinor) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn normalized(v: Spinor) -> Spinor {
    let n = norm(&v);
    [v[0] / n, v[1] / n]
}

/// Right eigenvector of `[[a, b], [b, −a]]` for eigenvalue `e`.
///
/// Both `(b, e − a)` and `(e + a, b)` solve the problem whenever
/// `e² = a² + b²`; the longer one is the better conditioned.
fn eigenvector(a: Complex64, b: Complex64, e: Complex64) -> Spinor {
    let v1 = [b, e - a];
    let v2 = [e + a, b];
    if norm(&v1) >= norm(&v2) {
        normalized(v1)
    } else {
        normalized(v2)
    }
}

/// Closed-form eigensystem of a traceless `[[By, Bx], [Bx, −By]]` matrix.
///
/// A point counts as defective when `|E₊|² < tol_ep` while `‖h‖ > tol_ep`;
/// the comparison is made on the discriminant because `|E|` near an
/// exceptional point only resolves to about √ε in double precision.
pub fn eigensystem(h: &BlochMatrix, tol_ep: f64) -> EigenSystem {
    let a = h.0[0][0];
    let b = h.0[0][1];
    let disc = a * a + b * b;
    let e = principal_sqrt(disc);
    let h_norm = h.frobenius_norm();

    if h_norm <= tol_ep {
        return EigenSystem {
            e_plus: e,
            e_minus: -e,
            psi_plus: [ONE, ZERO],
            psi_minus: [ZERO, ONE],
            defective: false,
            degenerate: true,
        };
    }
    if disc.norm() < tol_ep {
        let jordan = normalized([b, -a]);
        return EigenSystem {
            e_plus: e,
            e_minus: -e,
            psi_plus: jordan,
            psi_minus: jordan,
            defective: true,
            degenerate: false,
        };
    }
    EigenSystem {
        e_plus: e,
        e_minus: -e,
        psi_plus: eigenvector(a, b, e),
        psi_minus: eigenvector(a, b, -e),
        defective: false,
        degenerate: false,
    }
}

/// Pauli expectation values and band energy for one eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// `⟨σx⟩`
    pub fx: f64,
    /// `⟨σz⟩`
    pub fy: f64,
    /// `⟨σy⟩`
    pub sigma_y: f64,
    pub ex: f64,
    pub ey: f64,
}

impl Observables {
    pub fn f_norm_sqr(&self) -> f64 {
        self.fx * self.fx + self.fy * self.fy
    }
}

/// Expectation values `⟨ψ|σ|ψ⟩` for a unit spinor.
pub fn pauli_expectations(psi: &Spinor) -> (f64, f64, f64) {
    let [a, b] = *psi;
    let cross = a.conj() * b;
    (2.0 * cross.re, 2.0 * cross.im, a.norm_sqr() - b.norm_sqr())
}

pub fn observables(e: &EigenSystem, band: Band) -> Observables {
    let (sx, sy, sz) = pauli_expectations(e.vector(band));
    let energy = e.energy(band);
    Observables {
        fx: sx,
        fy: sz,
        sigma_y: sy,
        ex: energy.re,
        ey: energy.im,
    }
}
