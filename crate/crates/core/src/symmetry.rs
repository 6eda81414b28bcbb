//! Numerical checks of the momentum-space symmetry relations, the chiral
//! anticommutation with σy, and spectral reality at t = 0.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{bloch_field, bloch_matrix, principal_sqrt, BlochField};
use crate::model::{ModelParams, Momentum};

/// The eight point-group images `h(k) = h(R k)` and the chiral check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Inversion,
    MirrorX,
    MirrorY,
    Swap,
    AntiSwap,
    RotateCw,
    RotateCcw,
    Identity,
    Chiral,
}

impl Relation {
    pub const MOMENTUM: [Relation; 8] = [
        Relation::Inversion,
        Relation::MirrorX,
        Relation::MirrorY,
        Relation::Swap,
        Relation::AntiSwap,
        Relation::RotateCw,
        Relation::RotateCcw,
        Relation::Identity,
    ];

    /// Image of `k` under the relation; `None` for the chiral check.
    pub fn apply(self, k: Momentum) -> Option<Momentum> {
        let (x, y) = (k.kx, k.ky);
        let (a, b) = match self {
            Relation::Inversion => (-x, -y),
            Relation::MirrorX => (-x, y),
            Relation::MirrorY => (x, -y),
            Relation::Swap => (y, x),
            Relation::AntiSwap => (-y, -x),
            Relation::RotateCw => (y, -x),
            Relation::RotateCcw => (-y, x),
            Relation::Identity => (x, y),
            Relation::Chiral => return None,
        };
        Some(Momentum::new(a, b))
    }

    pub fn label(self) -> &'static str {
        match self {
            Relation::Inversion => "(-kx,-ky)",
            Relation::MirrorX => "(-kx,ky)",
            Relation::MirrorY => "(kx,-ky)",
            Relation::Swap => "(ky,kx)",
            Relation::AntiSwap => "(-ky,-kx)",
            Relation::RotateCw => "(ky,-kx)",
            Relation::RotateCcw => "(-ky,kx)",
            Relation::Identity => "(kx,ky)",
            Relation::Chiral => "chiral",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Sample points `k = −π + 2π(i + ½)/n` along each axis.
pub fn bz_grid(n: usize) -> Vec<Momentum> {
    let step = 2.0 * PI / n as f64;
    let axis: Vec<f64> = (0..n).map(|i| -PI + step * (i as f64 + 0.5)).collect();
    axis.iter()
        .flat_map(|&x| axis.iter().map(move |&y| Momentum::new(x, y)))
        .collect()
}

/// Maximum residual of every relation over an `n × n` grid.
pub fn symmetry_residuals(params: &ModelParams, grid_n: usize) -> Vec<(Relation, f64)> {
    symmetry_residuals_with(grid_n, |k| bloch_field(params, k))
}

/// Same as [`symmetry_residuals`] for an arbitrary field, so deliberately
/// broken models can be fed through the identical check.
pub fn symmetry_residuals_with<F>(grid_n: usize, field: F) -> Vec<(Relation, f64)>
where
    F: Fn(Momentum) -> BlochField + Sync,
{
    let grid = bz_grid(grid_n.max(1));
    let per_point: Vec<[f64; 9]> = grid
        .par_iter()
        .map(|&k| {
            let h = bloch_matrix(&field(k));
            let mut out = [0.0; 9];
            for (slot, rel) in out.iter_mut().zip(Relation::MOMENTUM) {
                let image = rel.apply(k).expect("momentum relation");
                *slot = h.max_abs_diff(&bloch_matrix(&field(image)));
            }
            out[8] = h.chiral_residual();
            out
        })
        .collect();

    let mut max = [0.0f64; 9];
    for row in &per_point {
        for (m, v) in max.iter_mut().zip(row) {
            *m = m.max(*v);
        }
    }
    Relation::MOMENTUM
        .iter()
        .copied()
        .chain(std::iter::once(Relation::Chiral))
        .zip(max)
        .collect()
}

/// True iff every grid eigenvalue is purely real or purely imaginary
/// (`min(|Re E₊|, |Im E₊|) < tol`).
pub fn spectral_reality(params: &ModelParams, grid_n: usize, tol: f64) -> bool {
    bz_grid(grid_n).par_iter().all(|&k| {
        let e = principal_sqrt(bloch_field(params, k).energy_squared());
        e.re.abs().min(e.im.abs()) < tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn all_relations_hold() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let rows = symmetry_residuals(&p, 64);
        assert_eq!(rows.len(), 9);
        for (rel, r) in rows {
            assert!(r < 1e-12, "{rel}: {r}");
        }
    }

    #[test]
    fn corrupted_diagonal_hopping_is_detected() {
        // flip the sign of the cos(kx + ky) half of 4t·cos kx·cos ky
        let p = ModelParams::unit(0.5, -1.5, 0.7).unwrap();
        let rows = symmetry_residuals_with(64, |k| {
            let good = bloch_field(&p, k);
            let by_re = 2.0 * p.diag * ((k.kx - k.ky).cos() - (k.kx + k.ky).cos());
            BlochField::new(good.bx, Complex64::new(by_re, p.gamma))
        });
        let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        assert!(worst > 0.1, "negative control missed: {worst}");
    }

    #[test]
    fn reality_at_t_zero() {
        let p = ModelParams::unit(0.5, 1.0, 0.0).unwrap();
        assert!(spectral_reality(&p, 64, 1e-12));
        let p = ModelParams::unit(0.0, 1.0, 0.0).unwrap();
        assert!(spectral_reality(&p, 64, 1e-12));
    }

    #[test]
    fn generic_spectrum_is_complex() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        let e = principal_sqrt(bloch_field(&p, Momentum::new(0.3, 0.7)).energy_squared());
        assert!(e.re.abs() > 1e-3 && e.im.abs() > 1e-3);
        assert!(!spectral_reality(&p, 64, 1e-9));
    }
}
