//! Model parameters, crystal momenta and half-integer charges.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the exceptional-point test, in units of J.
pub const DEFAULT_TOL_EP: f64 = 1e-9;

/// Couplings below this magnitude are treated as exactly zero.
pub const ZERO_COUPLING: f64 = 1e-12;

/// Couplings of the bilayer lattice.
///
/// | field   | symbol | meaning                                  |
/// |---------|--------|------------------------------------------|
/// | `intra` | J      | intralayer nearest-neighbour hopping     |
/// | `inter` | T      | interlayer hopping                       |
/// | `diag`  | t      | staggered diagonal (next-nearest) hopping |
/// | `gamma` | γ      | balanced gain/loss rate                  |
///
/// J sets the energy unit and must be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub intra: f64,
    pub inter: f64,
    pub diag: f64,
    pub gamma: f64,
    pub tol_ep: f64,
}

impl ModelParams {
    pub fn new(intra: f64, inter: f64, diag: f64, gamma: f64) -> Result<Self> {
        let p = ModelParams {
            intra,
            inter,
            diag,
            gamma,
            tol_ep: DEFAULT_TOL_EP,
        };
        p.validate()?;
        Ok(p)
    }

    /// J = 1 convenience constructor, arguments ordered (γ, T, t) the way
    /// parameter points are usually quoted.
    pub fn unit(gamma: f64, inter: f64, diag: f64) -> Result<Self> {
        Self::new(1.0, inter, diag, gamma)
    }

    pub fn with_tol_ep(mut self, tol_ep: f64) -> Result<Self> {
        self.tol_ep = tol_ep;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.intra, self.inter, self.diag, self.gamma, self.tol_ep];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("all couplings must be finite".into()));
        }
        if self.intra == 0.0 {
            return Err(Error::InvalidParams("J must be nonzero".into()));
        }
        if self.tol_ep <= 0.0 {
            return Err(Error::InvalidParams("tol_ep must be positive".into()));
        }
        Ok(())
    }

    pub fn is_hermitian(&self) -> bool {
        self.gamma.abs() < ZERO_COUPLING
    }

    pub fn has_diag(&self) -> bool {
        self.diag.abs() >= ZERO_COUPLING
    }

    /// Level `c_s = (−T + s·γ) / (2J)` of branch `s = ±1`.
    pub fn branch_level(&self, s: i8) -> f64 {
        (-self.inter + f64::from(s) * self.gamma) / (2.0 * self.intra)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x - two_pi * ((x + PI) / two_pi).floor();
    if y <= -PI {
        y += two_pi;
    }
    if y > PI {
        y -= two_pi;
    }
    y
}

/// A crystal momentum on the Brillouin-zone torus, stored in (−π, π]².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub kx: f64,
    pub ky: f64,
}

impl Momentum {
    pub fn new(kx: f64, ky: f64) -> Self {
        Momentum {
            kx: wrap_angle(kx),
            ky: wrap_angle(ky),
        }
    }

    /// Shortest distance on the torus.
    pub fn torus_distance(&self, other: &Momentum) -> f64 {
        let dx = wrap_angle(self.kx - other.kx);
        let dy = wrap_angle(self.ky - other.ky);
        dx.hypot(dy)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Momentum {
        Momentum::new(self.kx + dx, self.ky + dy)
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.kx, self.ky)
    }
}

/// A multiple of 1/2, stored as its double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInteger(i32);

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger(0);
    pub const HALF: HalfInteger = HalfInteger(1);
    pub const ONE: HalfInteger = HalfInteger(2);

    pub fn from_twice(twice: i32) -> Self {
        HalfInteger(twice)
    }

    /// Nearest multiple of 1/2.
    pub fn nearest(x: f64) -> Self {
        HalfInteger((2.0 * x).round() as i32)
    }

    /// Exact conversion; `None` unless `x` is a multiple of 1/2.
    pub fn exact(x: f64) -> Option<Self> {
        let h = Self::nearest(x);
        (h.value() == x).then_some(h)
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn abs(self) -> Self {
        HalfInteger(self.0.abs())
    }

    pub fn is_half_odd(self) -> bool {
        self.0 % 2 != 0
    }
}

impl std::ops::Neg for HalfInteger {
    type Output = HalfInteger;
    fn neg(self) -> HalfInteger {
        HalfInteger(-self.0)
    }
}

impl std::ops::Add for HalfInteger {
    type Output = HalfInteger;
    fn add(self, rhs: HalfInteger) -> HalfInteger {
        HalfInteger(self.0 + rhs.0)
    }
}

impl std::iter::Sum for HalfInteger {
    fn sum<I: Iterator<Item = HalfInteger>>(iter: I) -> Self {
        iter.fold(HalfInteger::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInteger {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        HalfInteger::exact(x).ok_or_else(|| serde::de::Error::custom(format!("{x} is not a multiple of 1/2")))
    }
}
