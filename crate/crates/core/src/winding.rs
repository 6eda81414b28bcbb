//! Winding numbers of the pseudospin field `F = (⟨σx⟩, ⟨σz⟩)` and of the
//! complex energy `E = (Re E, Im E)` around closed loops in the zone.
//!
//! One eigenbranch is followed continuously around the loop. Around an
//! exceptional point it comes back as the other branch, and because
//! `F(ψ₋) = −F(ψ₊)` and `E₋ = −E₊` the accumulated angle is then an odd
//! multiple of π.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{eigensystem, observables, Band, BlochMatrix, EigenSystem, Spinor};
use crate::btp::{classify_btp, Btp};
use crate::error::{Error, Result};
use crate::model::{wrap_angle, HalfInteger, ModelParams, Momentum};

pub const DEFAULT_SAMPLES: usize = 512;
pub const MIN_SAMPLES: usize = 256;
pub const MAX_SAMPLES: usize = 1 << 16;
pub const DEFAULT_RADIUS: f64 = 0.1;
pub const MIN_RADIUS: f64 = 1e-4;
pub const MAX_RESIDUAL: f64 = 0.05;
const DEFECT_MAGNITUDE: f64 = 1e-10;
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    /// `(⟨σx⟩, ⟨σz⟩)` of the tracked eigenstate
    F,
    /// `(Re E, Im E)` of the tracked eigenvalue
    E,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::F => "F",
            FieldKind::E => "E",
        })
    }
}

/// Counterclockwise circle `k(θ) = center + radius·(cos θ, sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub center: Momentum,
    pub radius: f64,
    pub samples: usize,
}

impl Loop {
    pub fn new(center: Momentum, radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "loop radius must be positive, got {radius}"
            )));
        }
        if samples < MIN_SAMPLES {
            return Err(Error::InvalidParams(format!(
                "a loop needs at least {MIN_SAMPLES} samples, got {samples}"
            )));
        }
        Ok(Loop {
            center,
            radius,
            samples,
        })
    }

    pub fn point(&self, theta: f64) -> Momentum {
        let (s, c) = theta.sin_cos();
        self.center.offset(self.radius * c, self.radius * s)
    }

    pub fn with_radius(self, radius: f64) -> Result<Self> {
        Loop::new(self.center, radius, self.samples)
    }

    /// True when `k` lies strictly inside the circle.
    pub fn encloses(&self, k: &Momentum) -> bool {
        self.center.torus_distance(k) < self.radius
    }
}

/// A probe this close to a listed point is taken to be that point.
pub const SAME_POINT: f64 = 1e-6;

/// Loop around `center` that stays clear of every other listed point:
/// radius `min(0.4·d, 0.1)` with `d` the distance to the nearest other one.
pub fn make_loop(center: Momentum, all_btps: &[Btp]) -> Result<Loop> {
    let mut dists: Vec<f64> = all_btps.iter().map(|b| b.k.torus_distance(&center)).collect();
    dists.sort_by(f64::total_cmp);
    // only the closest point can be the centre itself
    let others = match dists.first() {
        Some(&d) if d < SAME_POINT => &dists[1..],
        _ => &dists[..],
    };
    let nearest = others.first().copied().unwrap_or(f64::INFINITY);
    let radius = (0.4 * nearest).min(DEFAULT_RADIUS);
    if radius < MIN_RADIUS {
        return Err(Error::UnresolvedBtps { radius });
    }
    Loop::new(center, radius, DEFAULT_SAMPLES)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WindingResult {
    pub value: HalfInteger,
    /// Accumulated angle over 2π before snapping.
    pub raw_angle: f64,
    pub residual: f64,
    pub field_kind: FieldKind,
    /// The tracked branch came back as the other eigenstate.
    pub branch_swapped: bool,
    pub center: Momentum,
    pub radius: f64,
    /// Samples actually used after refinement.
    pub samples: usize,
}

fn planar(es: &EigenSystem, band: Band, kind: FieldKind) -> (f64, f64) {
    let o = observables(es, band);
    match kind {
        FieldKind::F => (o.fx, o.fy),
        FieldKind::E => (o.ex, o.ey),
    }
}

fn overlap(a: &Spinor, b: &Spinor) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm()
}

enum Walk {
    Done { total: f64, swapped: bool },
    TooCoarse,
}

fn walk(params: &ModelParams, lp: &Loop, samples: usize, kind: FieldKind, start: Band) -> Result<Walk> {
    let eval = |i: usize| {
        let k = lp.point(2.0 * PI * i as f64 / samples as f64);
        (k, eigensystem(&BlochMatrix::at(params, k), params.tol_ep))
    };
    let field_of = |k: Momentum, es: &EigenSystem, band: Band| -> Result<(f64, f64)> {
        let (x, y) = planar(es, band, kind);
        let magnitude = x.hypot(y);
        if es.defective || es.degenerate || magnitude < DEFECT_MAGNITUDE {
            return Err(Error::LoopThroughDefect {
                kx: k.kx,
                ky: k.ky,
                magnitude,
            });
        }
        Ok((x, y))
    };

    let (k0, es0) = eval(0);
    let e_start: Complex64 = es0.energy(start);
    let mut band = start;
    let mut vec = *es0.vector(band);
    let (x, y) = field_of(k0, &es0, band)?;
    let mut angle = y.atan2(x);
    let mut total = 0.0;
    let mut e_end = e_start;

    for i in 1..=samples {
        let (k, es) = eval(i);
        let o_same = overlap(&vec, es.vector(band));
        let o_other = overlap(&vec, es.vector(band.other()));
        if (o_same - o_other).abs() < TIE_TOLERANCE {
            return Err(Error::BranchTie { kx: k.kx, ky: k.ky });
        }
        if o_other > o_same {
            band = band.other();
        }
        vec = *es.vector(band);
        let (x, y) = field_of(k, &es, band)?;
        let next = y.atan2(x);
        let delta = wrap_angle(next - angle);
        if delta.abs() > PI / 2.0 {
            return Ok(Walk::TooCoarse);
        }
        total += delta;
        angle = next;
        e_end = es.energy(band);
    }
    let swapped = (e_end - e_start).norm() > (e_end + e_start).norm();
    Ok(Walk::Done { total, swapped })
}

/// Winding of `kind` around `lp`, following the upper band from θ = 0.
pub fn winding_number(params: &ModelParams, lp: &Loop, kind: FieldKind) -> Result<WindingResult> {
    winding_number_from(params, lp, kind, Band::Plus)
}

/// Winding of `kind` around `lp`, starting on the given band.
///
/// The sample count doubles until no angle step exceeds π/2, up to
/// [`MAX_SAMPLES`].
pub fn winding_number_from(params: &ModelParams, lp: &Loop, kind: FieldKind, start: Band) -> Result<WindingResult> {
    params.validate()?;
    let mut samples = lp.samples.max(MIN_SAMPLES);
    loop {
        match walk(params, lp, samples, kind, start)? {
            Walk::TooCoarse if samples < MAX_SAMPLES => samples *= 2,
            Walk::TooCoarse => return Err(Error::NotQuantized { raw: f64::NAN, samples }),
            Walk::Done { total, swapped } => {
                let raw = total / (2.0 * PI);
                let value = HalfInteger::nearest(raw);
                let residual = (raw - value.value()).abs();
                if residual >= MAX_RESIDUAL || swapped != value.is_half_odd() {
                    return Err(Error::NotQuantized { raw, samples });
                }
                return Ok(WindingResult {
                    value,
                    raw_angle: raw,
                    residual,
                    field_kind: kind,
                    branch_swapped: swapped,
                    center: lp.center,
                    radius: lp.radius,
                    samples,
                });
            }
        }
    }
}

/// `(w_I, w_II)` around one point, using the loop from [`make_loop`].
pub fn btp_windings(params: &ModelParams, center: Momentum, all_btps: &[Btp]) -> Result<(HalfInteger, HalfInteger)> {
    let lp = make_loop(center, all_btps)?;
    let w_i = winding_number(params, &lp, FieldKind::F)?.value;
    let w_ii = winding_number(params, &lp, FieldKind::E)?.value;
    Ok((w_i, w_ii))
}

/// Fills in `w_I`, `w_II` and the winding-based kind of every point.
pub fn annotate_btps(params: &ModelParams, btps: &[Btp]) -> Result<Vec<Btp>> {
    btps.par_iter()
        .map(|b| {
            let (w_i, w_ii) = btp_windings(params, b.k, btps)?;
            let kind = classify_btp(params, w_i.value())?;
            Ok(Btp {
                w_i: Some(w_i),
                w_ii: Some(w_ii),
                kind: Some(kind),
                ..*b
            })
        })
        .collect()
}

/// Big-loop windings against the sum over the enclosed points.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AdditivityReport {
    pub enclosed: Vec<Momentum>,
    pub big_w_i: HalfInteger,
    pub big_w_ii: HalfInteger,
    pub sum_w_i: HalfInteger,
    pub sum_w_ii: HalfInteger,
}

impl AdditivityReport {
    pub fn holds(&self) -> bool {
        self.big_w_i == self.sum_w_i && self.big_w_ii == self.sum_w_ii
    }
}

pub fn winding_additivity(params: &ModelParams, btps: &[Btp], big: &Loop) -> Result<AdditivityReport> {
    let enclosed: Vec<Momentum> = btps.iter().map(|b| b.k).filter(|k| big.encloses(k)).collect();
    let mut sum_w_i = HalfInteger::ZERO;
    let mut sum_w_ii = HalfInteger::ZERO;
    for k in &enclosed {
        let (w_i, w_ii) = btp_windings(params, *k, btps)?;
        sum_w_i = sum_w_i + w_i;
        sum_w_ii = sum_w_ii + w_ii;
    }
    Ok(AdditivityReport {
        enclosed,
        big_w_i: winding_number(params, big, FieldKind::F)?.value,
        big_w_ii: winding_number(params, big, FieldKind::E)?.value,
        sum_w_i,
        sum_w_ii,
    })
}

/// True iff both windings of `big` equal the sums over the enclosed points.
pub fn winding_additivity_check(params: &ModelParams, btps: &[Btp], big: &Loop) -> Result<bool> {
    winding_additivity(params, btps, big).map(|r| r.holds())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btp::{locate_btps, BtpKind};
    use std::f64::consts::FRAC_PI_2;

    fn p(gamma: f64, inter: f64, diag: f64) -> ModelParams {
        ModelParams::unit(gamma, inter, diag).unwrap()
    }

    fn w(params: &ModelParams, kx: f64, ky: f64, kind: FieldKind) -> WindingResult {
        let lp = Loop::new(Momentum::new(kx, ky), 0.1, DEFAULT_SAMPLES).unwrap();
        winding_number(params, &lp, kind).unwrap()
    }

    #[test]
    fn type_iv_triplet_along_lower_line() {
        let params = p(0.5, -1.5, 0.5);
        let xs = [-PI / 3.0, 0.0, PI / 3.0];
        let wi: Vec<f64> = xs
            .iter()
            .map(|&x| w(&params, x, -FRAC_PI_2, FieldKind::F).value.value())
            .collect();
        let wii: Vec<f64> = xs
            .iter()
            .map(|&x| w(&params, x, -FRAC_PI_2, FieldKind::E).value.value())
            .collect();
        assert_eq!(wi, vec![0.5, 0.0, -0.5]);
        assert_eq!(wii, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn swap_flag_tracks_half_odd_values() {
        let params = p(0.5, -1.5, 0.5);
        let r = w(&params, -PI / 3.0, -FRAC_PI_2, FieldKind::F);
        assert!(r.branch_swapped && r.residual < 1e-6);
        let r = w(&params, 0.0, -FRAC_PI_2, FieldKind::F);
        assert!(!r.branch_swapped);
    }

    #[test]
    fn empty_loop_winds_zero() {
        for params in [p(0.5, -1.5, 0.5), p(0.0, -1.0, 0.5), p(-0.7, 0.3, 0.9)] {
            for kind in [FieldKind::F, FieldKind::E] {
                assert_eq!(w(&params, 1.0, 1.0, kind).value, HalfInteger::ZERO);
            }
        }
    }

    #[test]
    fn dirac_points_wind_once() {
        let params = p(0.0, -1.0, 0.5);
        for b in locate_btps(&params).unwrap() {
            let (wi, wii) = btp_windings(&params, b.k, &locate_btps(&params).unwrap()).unwrap();
            assert_eq!(wi.abs(), HalfInteger::ONE, "{b:?}");
            assert_eq!(wii, HalfInteger::ZERO);
        }
    }

    #[test]
    fn start_branch_does_not_matter() {
        let params = p(0.5, -1.0, 0.5);
        let btps = locate_btps(&params).unwrap();
        for b in &btps {
            let lp = make_loop(b.k, &btps).unwrap();
            let a = winding_number_from(&params, &lp, FieldKind::F, Band::Plus).unwrap();
            let c = winding_number_from(&params, &lp, FieldKind::F, Band::Minus).unwrap();
            assert_eq!(a.value, c.value);
        }
    }

    #[test]
    fn loop_radius_rules() {
        let a = Momentum::new(PI / 3.0, -FRAC_PI_2);
        let btps = locate_btps(&p(0.5, -1.5, 0.5)).unwrap();
        assert!((make_loop(a, &btps).unwrap().radius - 0.1).abs() < 1e-15);
        assert_eq!(make_loop(a, &btps[..1]).unwrap().radius, 0.1);
        let mut close = btps[0];
        close.k = btps[0].k.offset(1e-5, 0.0);
        assert!(matches!(
            make_loop(btps[0].k, &[btps[0], close]),
            Err(Error::UnresolvedBtps { .. })
        ));
        // a rounded probe next to a point is that point
        let probe = btps[0].k.offset(2e-8, -3e-8);
        assert!((make_loop(probe, &btps).unwrap().radius - 0.1).abs() < 1e-15);
    }

    #[test]
    fn loop_through_ep_is_rejected() {
        let params = p(0.5, -1.5, 0.5);
        // circle of radius π/3 around the origin of the line passes through (π/3, −π/2)
        let lp = Loop::new(Momentum::new(0.0, -FRAC_PI_2), PI / 3.0, 512).unwrap();
        assert!(winding_number(&params, &lp, FieldKind::E).is_err());
    }

    #[test]
    fn annotate_assigns_kinds() {
        let params = p(0.5, -1.5, 0.5);
        let got = annotate_btps(&params, &locate_btps(&params).unwrap()).unwrap();
        let hybrids = got.iter().filter(|b| b.kind == Some(BtpKind::HybridEP)).count();
        assert_eq!(hybrids, 4);
        let total: HalfInteger = got.iter().map(|b| b.w_i.unwrap()).sum();
        assert_eq!(total, HalfInteger::ZERO);
    }

    #[test]
    fn split_pair_adds_to_parent_charge() {
        let parent = p(0.0, -1.0, 0.5);
        let kc = (0.5f64).acos();
        let dp = Momentum::new(kc, FRAC_PI_2);
        let lp = make_loop(dp, &locate_btps(&parent).unwrap()).unwrap();
        let w_dp = winding_number(&parent, &lp, FieldKind::F).unwrap().value;

        let params = p(0.01, -1.0, 0.5);
        let btps = locate_btps(&params).unwrap();
        let big = Loop::new(dp, 0.05, 1024).unwrap();
        let report = winding_additivity(&params, &btps, &big).unwrap();
        assert_eq!(report.enclosed.len(), 2);
        assert!(report.holds(), "{report:?}");
        assert_eq!(report.big_w_i, w_dp);
        assert_eq!(w_dp.abs(), HalfInteger::ONE);
    }
}
