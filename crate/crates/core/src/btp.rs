//! Band-touching points: closed-form locations, an independent numerical
//! locator, classification and the minimum band gap.
//!
//! For t ≠ 0 every touching point sits on a line `kx = ±π/2` or `ky = ±π/2`,
//! at `|k_c| = arccos c_s` with `c_s = (−T + s·γ)/(2J)`, `s = ±1`. Levels
//! `c_s ∈ {−1, 0, 1}` are merger points and are detected symbolically so the
//! number of emitted points never depends on a distance tolerance.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bloch::bloch_field;
use crate::error::{Error, Result};
use crate::model::{HalfInteger, ModelParams, Momentum};
use crate::symmetry::bz_grid;

/// Levels within this distance of −1, 0, 1 (or ±2 at t = 0) are snapped.
pub const LEVEL_SNAP: f64 = 1e-9;

/// Points closer than this on the torus are the same point.
pub const DEDUP_DISTANCE: f64 = 1e-4;

const NEWTON_MAX_STEPS: usize = 50;

/// Which factor of `E² = (Bx + iBy)(Bx − iBy)` vanishes, i.e. the sign in
/// `(−T ± γ)/(2J)`. Both factors vanish together in the Hermitian case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchLabel {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "both")]
    Both,
}

impl BranchLabel {
    pub fn sign(self) -> i8 {
        match self {
            BranchLabel::Plus | BranchLabel::Both => 1,
            BranchLabel::Minus => -1,
        }
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchLabel::Plus => "+",
            BranchLabel::Minus => "-",
            BranchLabel::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BtpKind {
    DiracPoint,
    SemiDiracPoint,
    NormalEP,
    HybridEP,
    TrivialIsolatedEP,
}

impl fmt::Display for BtpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A located band-touching point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Btp {
    #[serde(flatten)]
    pub k: Momentum,
    pub branch: BranchLabel,
    pub kind: Option<BtpKind>,
    #[serde(rename = "wI")]
    pub w_i: Option<HalfInteger>,
    #[serde(rename = "wII")]
    pub w_ii: Option<HalfInteger>,
}

impl Btp {
    fn new(k: Momentum, branch: BranchLabel, kind: Option<BtpKind>) -> Self {
        Btp {
            k,
            branch,
            kind,
            w_i: None,
            w_ii: None,
        }
    }
}

/// Snaps `c` to the nearest of `targets` when within [`LEVEL_SNAP`].
fn snap(c: f64, targets: &[f64]) -> f64 {
    targets
        .iter()
        .copied()
        .find(|t| (c - t).abs() < LEVEL_SNAP)
        .unwrap_or(c)
}

/// True when a level sits on a merger (`c ∈ {−1, 0, 1}`).
pub fn is_merger_level(c: f64) -> bool {
    [-1.0, 0.0, 1.0].iter().any(|t| (c - t).abs() < LEVEL_SNAP)
}

/// Active branches with their levels: one shared level when γ = 0.
pub fn branch_levels(params: &ModelParams) -> Vec<(BranchLabel, f64)> {
    if params.is_hermitian() {
        vec![(BranchLabel::Both, params.branch_level(1))]
    } else {
        vec![
            (BranchLabel::Plus, params.branch_level(1)),
            (BranchLabel::Minus, params.branch_level(-1)),
        ]
    }
}

pub fn sort_canonical(btps: &mut [Btp]) {
    btps.sort_by(|a, b| a.k.kx.total_cmp(&b.k.kx).then(a.k.ky.total_cmp(&b.k.ky)));
}

fn push_unique(out: &mut Vec<Btp>, btp: Btp) {
    if out.iter().all(|o| o.k.torus_distance(&btp.k) >= DEDUP_DISTANCE) {
        out.push(btp);
    }
}

/// Points `(±k_c, ±π/2)` and `(±π/2, ±k_c)` for one level, merged at 0, π/2, π.
fn points_for_level(kc: f64) -> Vec<Momentum> {
    let xs: Vec<f64> = if kc == 0.0 || kc == PI { vec![kc] } else { vec![kc, -kc] };
    let mut pts = Vec::with_capacity(8);
    for &x in &xs {
        for y in [FRAC_PI_2, -FRAC_PI_2] {
            for m in [Momentum::new(x, y), Momentum::new(y, x)] {
                if !pts.contains(&m) {
                    pts.push(m);
                }
            }
        }
    }
    pts
}

/// Closed-form band-touching points.
///
/// For γ ≠ 0 and t = 0 the touching set is a ring; that is an error unless
/// some level reaches ±2, where the ring shrinks to the isolated point
/// (0, 0) or (π, π). Levels with `|c| > 2` everywhere mean a gapped system
/// and yield an empty list.
pub fn locate_btps(params: &ModelParams) -> Result<Vec<Btp>> {
    params.validate()?;
    let mut out = Vec::new();
    if !params.has_diag() {
        let mut ring = None;
        for (branch, level) in branch_levels(params) {
            let c = snap(level, &[-2.0, 2.0]);
            if c == 2.0 || c == -2.0 {
                let corner = if c > 0.0 { 0.0 } else { PI };
                let kind = if params.is_hermitian() {
                    BtpKind::SemiDiracPoint
                } else {
                    BtpKind::TrivialIsolatedEP
                };
                push_unique(&mut out, Btp::new(Momentum::new(corner, corner), branch, Some(kind)));
            } else if c.abs() < 2.0 && ring.is_none() {
                ring = Some((branch.sign(), level));
            }
        }
        if out.is_empty() {
            if let Some((branch, level)) = ring {
                return Err(Error::RingRegime { branch, level });
            }
        }
        sort_canonical(&mut out);
        return Ok(out);
    }

    for (branch, level) in branch_levels(params) {
        let c = snap(level, &[-1.0, 0.0, 1.0]);
        if c.abs() > 1.0 {
            continue;
        }
        let kc = if c == 1.0 {
            0.0
        } else if c == -1.0 {
            PI
        } else if c == 0.0 {
            FRAC_PI_2
        } else {
            c.acos()
        };
        let merged = is_merger_level(c);
        let kind = match (params.is_hermitian(), merged) {
            (true, true) => BtpKind::SemiDiracPoint,
            (true, false) => BtpKind::DiracPoint,
            (false, true) => BtpKind::HybridEP,
            (false, false) => BtpKind::NormalEP,
        };
        for k in points_for_level(kc) {
            push_unique(&mut out, Btp::new(k, branch, Some(kind)));
        }
    }
    sort_canonical(&mut out);
    Ok(out)
}

/// Result of the grid-plus-Newton locator.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericBtps {
    pub btps: Vec<Btp>,
    pub warnings: Vec<String>,
}

/// Real and imaginary parts of the factor `Bx − s·γ + i·ByRe` of `E²`.
fn factor(params: &ModelParams, k: Momentum, s: f64) -> [f64; 2] {
    let f = bloch_field(params, k);
    [f.bx - s * params.gamma, f.by_re]
}

fn factor_jacobian(params: &ModelParams, k: Momentum) -> [[f64; 2]; 2] {
    let (sx, cx) = k.kx.sin_cos();
    let (sy, cy) = k.ky.sin_cos();
    let j2 = 2.0 * params.intra;
    let t4 = 4.0 * params.diag;
    [[-j2 * sx, -j2 * sy], [-t4 * sx * cy, -t4 * cx * sy]]
}

/// Newton step `−J⁺ f`, falling back to the rank-one pseudo-inverse when the
/// Jacobian is singular (merged points).
fn newton_step(jac: [[f64; 2]; 2], f: [f64; 2]) -> [f64; 2] {
    let [[a, b], [c, d]] = jac;
    let det = a * d - b * c;
    let scale = a * a + b * b + c * c + d * d;
    if scale == 0.0 {
        return [0.0, 0.0];
    }
    if det.abs() > 1e-14 * scale {
        [-(d * f[0] - b * f[1]) / det, -(-c * f[0] + a * f[1]) / det]
    } else {
        // J⁺ = Jᵀ / ‖J‖² for rank one
        [-(a * f[0] + c * f[1]) / scale, -(b * f[0] + d * f[1]) / scale]
    }
}

fn newton(params: &ModelParams, seed: Momentum, s: f64) -> Option<Momentum> {
    let mut k = seed;
    for _ in 0..NEWTON_MAX_STEPS {
        let f = factor(params, k, s);
        if f[0] == 0.0 && f[1] == 0.0 {
            break;
        }
        let mut step = newton_step(factor_jacobian(params, k), f);
        let len = step[0].hypot(step[1]);
        if len > 0.5 {
            step = [step[0] * 0.5 / len, step[1] * 0.5 / len];
        }
        k = k.offset(step[0], step[1]);
        if len < 1e-14 {
            break;
        }
    }
    Some(k)
}

/// Grid scan for local minima of `|E²|` followed by Newton refinement on the
/// two real factors of `E²`. Seeds that fail to reach `|E²| < tol` are
/// dropped with a warning; a gapped model gives an empty list.
pub fn refine_btps_numeric(params: &ModelParams, coarse_n: usize, tol: f64) -> NumericBtps {
    let n = coarse_n.max(4);
    let h = 2.0 * PI / n as f64;
    let at = |i: usize, j: usize| Momentum::new(-PI + h * i as f64, -PI + h * j as f64);
    let vals: Vec<f64> = (0..n * n)
        .map(|idx| bloch_field(params, at(idx / n, idx % n)).energy_squared().norm())
        .collect();
    let val = |i: usize, j: usize| vals[(i % n) * n + (j % n)];

    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = val(i, j);
            let is_min =
                (0..3).all(|di| (0..3).all(|dj| (di == 1 && dj == 1) || v <= val(i + n + di - 1, j + n + dj - 1)));
            if is_min {
                let k = at(i, j);
                seeds.push(k);
                for (dx, dy) in [(0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)] {
                    seeds.push(k.offset(dx * h, dy * h));
                }
            }
        }
    }

    let signs: &[f64] = if params.is_hermitian() { &[1.0] } else { &[1.0, -1.0] };
    let mut found = Vec::new();
    let mut warnings = Vec::new();
    for seed in &seeds {
        let mut any = false;
        for &s in signs {
            if let Some(k) = newton(params, *seed, s) {
                if bloch_field(params, k).energy_squared().norm() < tol {
                    let branch = if params.is_hermitian() {
                        BranchLabel::Both
                    } else if s > 0.0 {
                        BranchLabel::Plus
                    } else {
                        BranchLabel::Minus
                    };
                    push_unique(&mut found, Btp::new(k, branch, None));
                    any = true;
                }
            }
        }
        if !any {
            warnings.push(format!("Newton refinement did not converge from seed {seed}"));
        }
    }
    sort_canonical(&mut found);
    NumericBtps { btps: found, warnings }
}

/// Minimum of `|E₊|` over the zone: best of an `n × n` grid, refined by
/// Newton on the factors of `E²` and by a shrinking pattern search.
pub fn min_gap(params: &ModelParams, grid_n: usize) -> f64 {
    let gap2 = |k: Momentum| bloch_field(params, k).energy_squared().norm();
    let (mut best_k, mut best) = bz_grid(grid_n.max(4))
        .into_iter()
        .map(|k| (k, gap2(k)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");

    for s in [1.0, -1.0] {
        if let Some(k) = newton(params, best_k, s) {
            let v = gap2(k);
            if v < best {
                best = v;
                best_k = k;
            }
        }
    }

    let mut step = 2.0 * PI / grid_n.max(4) as f64;
    while step > 1e-13 {
        let mut moved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let k = best_k.offset(dx * step, dy * step);
            let v = gap2(k);
            if v < best {
                best = v;
                best_k = k;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best.sqrt()
}

/// Kind of a touching point from its `w_I` winding.
pub fn classify_btp(params: &ModelParams, w_i: f64) -> Result<BtpKind> {
    let w = HalfInteger::exact(w_i)
        .filter(|w| w.twice().abs() <= 2)
        .ok_or(Error::CorruptWinding(w_i))?;
    let inconsistent = || Error::InconsistentKind {
        w_i,
        gamma: params.gamma,
        diag: params.diag,
    };
    let magnitude = w.twice().abs();
    if params.is_hermitian() {
        return match magnitude {
            2 => Ok(BtpKind::DiracPoint),
            0 => Ok(BtpKind::SemiDiracPoint),
            _ => Err(inconsistent()),
        };
    }
    if !params.has_diag() {
        return match magnitude {
            0 => Ok(BtpKind::TrivialIsolatedEP),
            _ => Err(inconsistent()),
        };
    }
    match magnitude {
        1 => Ok(BtpKind::NormalEP),
        0 => Ok(BtpKind::HybridEP),
        _ => Err(inconsistent()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{eigensystem, BlochMatrix};

    fn p(gamma: f64, inter: f64, diag: f64) -> ModelParams {
        ModelParams::unit(gamma, inter, diag).unwrap()
    }

    fn has(btps: &[Btp], kx: f64, ky: f64) -> bool {
        let m = Momentum::new(kx, ky);
        btps.iter().any(|b| b.k.torus_distance(&m) < 1e-12)
    }

    #[test]
    fn type_iv_has_twelve_points() {
        let b = locate_btps(&p(0.5, -1.5, 0.5)).unwrap();
        assert_eq!(b.len(), 12);
        let hybrid = b.iter().filter(|x| x.kind == Some(BtpKind::HybridEP)).count();
        let normal = b.iter().filter(|x| x.kind == Some(BtpKind::NormalEP)).count();
        assert_eq!((hybrid, normal), (4, 8));
        for (x, y) in [(0.0, FRAC_PI_2), (0.0, -FRAC_PI_2), (FRAC_PI_2, 0.0), (-FRAC_PI_2, 0.0)] {
            assert!(has(&b, x, y));
        }
        assert!(has(&b, PI / 3.0, -FRAC_PI_2) && has(&b, -FRAC_PI_2, -PI / 3.0));
    }

    #[test]
    fn type_iii_has_sixteen_points() {
        let b = locate_btps(&p(0.5, -1.0, 0.5)).unwrap();
        assert_eq!(b.len(), 16);
        assert!(b.iter().all(|x| x.kind == Some(BtpKind::NormalEP)));
    }

    #[test]
    fn hermitian_merger_has_four_points() {
        let b = locate_btps(&p(0.0, 0.0, 0.5)).unwrap();
        assert_eq!(b.len(), 4);
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                assert!(has(&b, sx * FRAC_PI_2, sy * FRAC_PI_2));
            }
        }
        assert!(b.iter().all(|x| x.branch == BranchLabel::Both));
    }

    #[test]
    fn ring_regime_is_refused() {
        assert!(matches!(locate_btps(&p(1.0, 0.0, 0.0)), Err(Error::RingRegime { .. })));
    }

    #[test]
    fn trivial_isolated_point_at_corner() {
        let b = locate_btps(&p(1.0, 3.0, 0.0)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(has(&b, PI, PI));
        assert_eq!(b[0].kind, Some(BtpKind::TrivialIsolatedEP));
    }

    #[test]
    fn gapped_t_zero_is_empty() {
        assert!(locate_btps(&p(0.5, 5.0, 0.0)).unwrap().is_empty());
    }

    #[test]
    fn located_points_touch() {
        for params in [
            p(0.5, -1.5, 0.5),
            p(0.5, -1.0, 0.5),
            p(0.0, -1.0, 0.5),
            p(-1.0, -1.0, 0.3),
        ] {
            for b in locate_btps(&params).unwrap() {
                let e2 = bloch_field(&params, b.k).energy_squared().norm();
                assert!(e2 < 1e-14, "{params:?} {b:?} {e2}");
                let es = eigensystem(&BlochMatrix::at(&params, b.k), params.tol_ep);
                if params.is_hermitian() {
                    assert!(BlochMatrix::at(&params, b.k).frobenius_norm() < 1e-8);
                    assert!(!es.defective);
                } else {
                    assert!(BlochMatrix::at(&params, b.k).frobenius_norm() >= params.gamma.abs());
                    assert!(es.defective);
                }
                // on the lines kx = ±π/2 or ky = ±π/2
                let on_line = |x: f64| (x.abs() - FRAC_PI_2).abs() < 1e-12;
                assert!(on_line(b.k.kx) || on_line(b.k.ky));
            }
        }
    }

    #[test]
    fn numeric_matches_analytic_type_iv() {
        let params = p(0.5, -1.5, 0.5);
        let num = refine_btps_numeric(&params, 64, 1e-12);
        let ana = locate_btps(&params).unwrap();
        assert_eq!(num.btps.len(), ana.len());
        for a in &ana {
            let d = num
                .btps
                .iter()
                .map(|n| n.k.torus_distance(&a.k))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "{a:?} off by {d}");
        }
    }

    #[test]
    fn numeric_hermitian_merger() {
        let params = p(0.0, 0.0, 0.5);
        let num = refine_btps_numeric(&params, 64, 1e-12);
        assert_eq!(num.btps.len(), 4);
        for b in &num.btps {
            assert!((b.k.kx.abs() - FRAC_PI_2).abs() < 1e-6);
            assert!((b.k.ky.abs() - FRAC_PI_2).abs() < 1e-6);
        }
    }

    #[test]
    fn numeric_gapped_is_empty() {
        let num = refine_btps_numeric(&p(0.5, 5.0, 0.0), 64, 1e-12);
        assert!(num.btps.is_empty());
        assert!(!num.warnings.is_empty());
    }

    #[test]
    fn gap_values() {
        assert!(min_gap(&p(0.5, 5.0, 0.0), 64) > 0.8);
        // |E| resolves to ~√ε ≈ 1e-8 next to an exceptional point
        assert!(min_gap(&p(0.5, -1.5, 0.5), 64) < 1e-7);
        assert!(min_gap(&p(0.0, 0.0, 0.5), 64) < 1e-8);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify_btp(&p(0.5, -1.5, 0.5), -0.5), Ok(BtpKind::NormalEP));
        assert_eq!(classify_btp(&p(0.0, -1.0, 0.5), 1.0), Ok(BtpKind::DiracPoint));
        assert_eq!(classify_btp(&p(0.0, 0.0, 0.5), 0.0), Ok(BtpKind::SemiDiracPoint));
        assert_eq!(classify_btp(&p(0.5, -1.5, 0.5), 0.0), Ok(BtpKind::HybridEP));
        assert_eq!(classify_btp(&p(1.0, 3.0, 0.0), 0.0), Ok(BtpKind::TrivialIsolatedEP));
        assert_eq!(classify_btp(&p(0.5, -1.5, 0.5), 1.5), Err(Error::CorruptWinding(1.5)));
        assert_eq!(classify_btp(&p(0.5, -1.5, 0.5), 0.3), Err(Error::CorruptWinding(0.3)));
        assert!(matches!(
            classify_btp(&p(0.0, -1.0, 0.5), 0.5),
            Err(Error::InconsistentKind { .. })
        ));
    }

    #[test]
    fn dp_splits_into_flanking_eps() {
        let eps = 0.01;
        let params = p(eps, -1.0, 0.5);
        let b = locate_btps(&params).unwrap();
        let mut on_line: Vec<f64> = b
            .iter()
            .filter(|x| (x.k.ky - FRAC_PI_2).abs() < 1e-12 && x.k.kx > 0.0 && x.k.kx < FRAC_PI_2)
            .map(|x| x.k.kx)
            .collect();
        on_line.sort_by(f64::total_cmp);
        assert_eq!(on_line.len(), 2);
        let kc = (0.5f64).acos();
        assert!(on_line[0] < kc && kc < on_line[1]);
        let predicted = eps / kc.sin();
        assert!(((on_line[1] - on_line[0]) / predicted - 1.0).abs() < 0.01);
    }
}
