//! Exceptional rings of the t = 0 model, the level sets
//! `cos kx + cos ky = c_s`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Momentum};

/// Closed polyline of one branch. A single vertex means the ring has shrunk
/// to a point; no vertices means the level set is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpRing {
    pub branch: i8,
    pub level: f64,
    pub points: Vec<Momentum>,
}

impl EpRing {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|cos kx + cos ky − c|` over the vertices.
    pub fn level_residual(&self) -> f64 {
        self.points
            .iter()
            .map(|k| (k.kx.cos() + k.ky.cos() - self.level).abs())
            .fold(0.0, f64::max)
    }
}

/// `y ∈ [0, π]` with `cos y = target`, by bisection on the decreasing cosine.
fn solve_cos(target: f64) -> f64 {
    target.clamp(-1.0, 1.0).acos()
}

/// Traces the ring of branch `s = ±1` with about `samples` vertices.
///
/// Negative levels are traced around (π, π) using `cos(k + π) = −cos k`.
pub fn trace_ep_ring(params: &ModelParams, branch: i8, samples: usize) -> Result<EpRing> {
    params.validate()?;
    if params.has_diag() {
        return Err(Error::InvalidParams("rings exist only at t = 0".into()));
    }
    if branch != 1 && branch != -1 {
        return Err(Error::InvalidParams(format!("branch must be ±1, got {branch}")));
    }
    if samples < 4 {
        return Err(Error::InvalidParams("a ring needs at least 4 samples".into()));
    }
    let level = params.branch_level(branch);
    let mut ring = EpRing {
        branch,
        level,
        points: Vec::new(),
    };
    let (c, shift) = if level < 0.0 { (-level, PI) } else { (level, 0.0) };
    if (c - 2.0).abs() < crate::btp::LEVEL_SNAP {
        ring.points.push(Momentum::new(shift, shift));
        return Ok(ring);
    }
    if c > 2.0 {
        return Ok(ring);
    }

    // |kx| ≤ a keeps c − cos kx within [−1, 1]
    let a = solve_cos(c - 1.0);
    let m = samples / 2 + 1;
    let xs: Vec<f64> = (0..m).map(|i| -a + 2.0 * a * i as f64 / (m - 1) as f64).collect();
    // the arc ends sit on ky = 0 exactly; acos there loses half the digits
    let upper: Vec<(f64, f64)> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            (
                x,
                if i == 0 || i == m - 1 {
                    0.0
                } else {
                    solve_cos(c - x.cos())
                },
            )
        })
        .collect();
    for &(x, y) in &upper {
        ring.points.push(Momentum::new(x + shift, y + shift));
    }
    for &(x, y) in upper[1..m - 1].iter().rev() {
        ring.points.push(Momentum::new(x + shift, -y + shift));
    }
    Ok(ring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::bloch_field;

    fn p(gamma: f64, inter: f64) -> ModelParams {
        ModelParams::unit(gamma, inter, 0.0).unwrap()
    }

    #[test]
    fn ring_passes_through_expected_vertex() {
        let ring = trace_ep_ring(&p(1.0, 0.0), 1, 201).unwrap();
        assert!((ring.level - 0.5).abs() < 1e-15);
        let target = Momentum::new(0.0, 2.0 * PI / 3.0);
        let d = ring
            .points
            .iter()
            .map(|k| k.torus_distance(&target))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn vertices_satisfy_level_and_touch() {
        for (gamma, inter, s) in [(1.0, 0.0, 1), (1.0, 0.0, -1), (0.7, 1.3, -1), (0.3, -2.9, 1)] {
            let params = p(gamma, inter);
            let ring = trace_ep_ring(&params, s, 400).unwrap();
            assert!(!ring.is_empty());
            assert!(ring.level_residual() < 1e-8);
            for k in &ring.points {
                let e = bloch_field(&params, *k).energy_squared().norm().sqrt();
                assert!(e < 1e-6, "{k} {e}");
            }
        }
    }

    #[test]
    fn ring_is_closed_and_ordered() {
        let ring = trace_ep_ring(&p(1.0, 0.0), 1, 200).unwrap();
        let n = ring.points.len();
        let longest = (0..n)
            .map(|i| ring.points[i].torus_distance(&ring.points[(i + 1) % n]))
            .fold(0.0, f64::max);
        assert!(longest < 0.5, "{longest}");
    }

    #[test]
    fn shrinks_to_corner() {
        let ring = trace_ep_ring(&p(1.0, 3.0), -1, 100).unwrap();
        assert_eq!(ring.points, vec![Momentum::new(PI, PI)]);
    }

    #[test]
    fn empty_level_set() {
        assert!(trace_ep_ring(&p(1.0, 6.0), -1, 100).unwrap().is_empty());
    }

    #[test]
    fn refuses_nonzero_t() {
        let params = ModelParams::unit(1.0, 0.0, 0.5).unwrap();
        assert!(trace_ep_ring(&params, 1, 100).is_err());
    }
}
