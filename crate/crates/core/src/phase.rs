//! Winding configurations over the (γ, T) plane: per-point signatures,
//! the five distribution types, grid scans and boundary detection.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::btp::locate_btps;
use crate::error::{Error, Result};
use crate::format::{fmt_sig, hex, ser_sig};
use crate::model::{HalfInteger, ModelParams, Momentum, ZERO_COUPLING};
use crate::winding::annotate_btps;

/// Tolerance for flagging a parameter point as lying on a merger line.
pub const SIGNATURE_LINE_TOL: f64 = 1e-9;
/// Tolerance used by the scan to flag cells on a candidate line.
pub const SCAN_LINE_TOL: f64 = 1e-6;

/// Number of points with `|w_I|` = 0, 1/2 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct WindingCounts {
    #[serde(rename = "0")]
    pub zero: usize,
    #[serde(rename = "1/2")]
    pub half: usize,
    #[serde(rename = "1")]
    pub one: usize,
}

impl WindingCounts {
    pub fn total(&self) -> usize {
        self.zero + self.half + self.one
    }
}

impl fmt::Display for WindingCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.zero, self.half, self.one)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SignedCharge {
    #[serde(serialize_with = "ser_sig")]
    pub kx: f64,
    #[serde(serialize_with = "ser_sig")]
    pub ky: f64,
    pub w: HalfInteger,
}

/// Winding configuration at one parameter point. Points are listed in
/// canonical order (kx, then ky).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigurationSignature {
    #[serde(serialize_with = "ser_sig")]
    pub gamma: f64,
    #[serde(rename = "T", serialize_with = "ser_sig")]
    pub inter: f64,
    pub n_btps: usize,
    #[serde(rename = "countsWI")]
    pub counts_wi: WindingCounts,
    #[serde(rename = "signedWI")]
    pub signed_wi: Vec<SignedCharge>,
    #[serde(rename = "signedWII")]
    pub signed_wii: Vec<SignedCharge>,
    #[serde(rename = "boundaryFlag")]
    pub boundary: bool,
}

impl ConfigurationSignature {
    /// Position-free label used to compare neighbouring cells: point count,
    /// counts and the ordered `(w_I, w_II)` pattern.
    pub fn topology_key(&self) -> String {
        let pattern: Vec<String> = self
            .signed_wi
            .iter()
            .zip(&self.signed_wii)
            .map(|(a, b)| format!("({},{})", a.w, b.w))
            .collect();
        format!("{}|{}|{}", self.n_btps, self.counts_wi, pattern.join(""))
    }

    /// SHA-256 (first 16 hex digits) of the ordered `w_II` pattern.
    pub fn wii_hash(&self) -> String {
        let text: Vec<String> = self.signed_wii.iter().map(|c| c.w.to_string()).collect();
        let digest = Sha256::digest(text.join(",").as_bytes());
        hex(&digest)[..16].to_string()
    }

    pub fn total_w_i(&self) -> HalfInteger {
        self.signed_wi.iter().map(|c| c.w).sum()
    }
}

/// Candidate lines on which the configuration may change, as
/// `(label, a, b, c)` for `a·γ + b·T + c = 0`.
pub fn candidate_lines(intra: f64) -> [(&'static str, f64, f64, f64); 7] {
    let two_j = 2.0 * intra.abs();
    [
        ("gamma=0", 1.0, 0.0, 0.0),
        ("T=gamma", -1.0, 1.0, 0.0),
        ("T=-gamma", 1.0, 1.0, 0.0),
        ("T+gamma=2J", 1.0, 1.0, -two_j),
        ("T+gamma=-2J", 1.0, 1.0, two_j),
        ("T-gamma=2J", -1.0, 1.0, -two_j),
        ("T-gamma=-2J", -1.0, 1.0, two_j),
    ]
}

/// Nearest candidate line and its distance in the (γ, T) plane.
pub fn nearest_candidate_line(intra: f64, gamma: f64, inter: f64) -> (&'static str, f64) {
    candidate_lines(intra)
        .iter()
        .map(|&(label, a, b, c)| (label, (a * gamma + b * inter + c).abs() / a.hypot(b)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty")
}

pub fn on_candidate_line(intra: f64, gamma: f64, inter: f64, tol: f64) -> bool {
    nearest_candidate_line(intra, gamma, inter).1 < tol
}

/// Locates every point, computes both windings and aggregates them.
pub fn signature(params: &ModelParams) -> Result<ConfigurationSignature> {
    let btps = annotate_btps(params, &locate_btps(params)?)?;
    let mut counts = WindingCounts::default();
    for b in &btps {
        match b.w_i.map(|w| w.abs().twice()) {
            Some(0) => counts.zero += 1,
            Some(1) => counts.half += 1,
            Some(2) => counts.one += 1,
            _ => return Err(Error::CorruptWinding(b.w_i.map_or(f64::NAN, |w| w.value()))),
        }
    }
    let charge = |k: Momentum, w: Option<HalfInteger>| SignedCharge {
        kx: k.kx,
        ky: k.ky,
        w: w.unwrap_or_default(),
    };
    let boundary = params.gamma.abs() < ZERO_COUPLING
        || on_candidate_line(params.intra, params.gamma, params.inter, SIGNATURE_LINE_TOL);
    Ok(ConfigurationSignature {
        gamma: params.gamma,
        inter: params.inter,
        n_btps: btps.len(),
        counts_wi: counts,
        signed_wi: btps.iter().map(|b| charge(b.k, b.w_i)).collect(),
        signed_wii: btps.iter().map(|b| charge(b.k, b.w_ii)).collect(),
        boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Table1Type {
    I,
    II,
    III,
    IV,
    V,
}

impl fmt::Display for Table1Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One of the five distribution types, by exact match of the counts.
pub fn table1_type(counts: &WindingCounts) -> Option<Table1Type> {
    match (counts.zero, counts.half, counts.one) {
        (4, 0, 0) => Some(Table1Type::I),
        (0, 0, 8) => Some(Table1Type::II),
        (0, 16, 0) => Some(Table1Type::III),
        (4, 8, 0) => Some(Table1Type::IV),
        (8, 0, 0) => Some(Table1Type::V),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub gamma: f64,
    pub inter: f64,
    /// Cell sits on a candidate line (within [`SCAN_LINE_TOL`]).
    pub on_line: bool,
    pub signature: Option<ConfigurationSignature>,
    pub error: Option<String>,
}

impl PhaseCell {
    /// Key compared across neighbours; errors compare as their own class.
    pub fn key(&self) -> String {
        match (&self.signature, &self.error) {
            (Some(s), _) => s.topology_key(),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "missing".into(),
        }
    }

    pub fn table1_type(&self) -> Option<Table1Type> {
        self.signature.as_ref().and_then(|s| table1_type(&s.counts_wi))
    }

    /// `gamma,T,nBtps,counts0,countsHalf,countsOne,type,boundaryFlag,wIIHash`
    pub fn csv_row(&self) -> String {
        let (n, c, hash) = match &self.signature {
            Some(s) => (s.n_btps.to_string(), s.counts_wi, s.wii_hash()),
            None => ("".into(), WindingCounts::default(), "".into()),
        };
        let ty = self.table1_type().map_or("none".to_string(), |t| t.to_string());
        let ty = if self.error.is_some() { "error".to_string() } else { ty };
        let boundary = self.on_line || self.signature.as_ref().is_some_and(|s| s.boundary);
        format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_sig(self.gamma),
            fmt_sig(self.inter),
            n,
            c.zero,
            c.half,
            c.one,
            ty,
            boundary,
            hash
        )
    }
}

pub const CSV_HEADER: &str = "gamma,T,nBtps,counts0,countsHalf,countsOne,type,boundaryFlag,wIIHash";

/// Cells over an inclusive `n_gamma × n_t` grid; index `i·n_t + j` holds
/// `(gammas[i], inters[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub base: ModelParams,
    pub gammas: Vec<f64>,
    pub inters: Vec<f64>,
    pub cells: Vec<PhaseCell>,
}

impl PhaseGrid {
    pub fn cell(&self, i: usize, j: usize) -> &PhaseCell {
        &self.cells[i * self.inters.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&c.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Inclusive evenly spaced axis; a degenerate range gives one value.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo == hi || n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Signatures over a (γ, T) grid with J and t taken from `base`.
///
/// Cells on a candidate line are evaluated with the merged reading and
/// flagged through `on_line`; cell failures are stored in the cell.
pub fn scan_phase_diagram(
    gamma_range: (f64, f64),
    inter_range: (f64, f64),
    resolution: usize,
    base: &ModelParams,
) -> Result<PhaseGrid> {
    base.validate()?;
    if resolution < 8 && (gamma_range.0 != gamma_range.1 || inter_range.0 != inter_range.1) {
        return Err(Error::InvalidParams(format!(
            "resolution must be at least 8, got {resolution}"
        )));
    }
    let gammas = axis(gamma_range.0, gamma_range.1, resolution);
    let inters = axis(inter_range.0, inter_range.1, resolution);
    let nt = inters.len();
    let cells = (0..gammas.len() * nt)
        .into_par_iter()
        .map(|idx| {
            let (gamma, inter) = (gammas[idx / nt], inters[idx % nt]);
            let params = ModelParams { gamma, inter, ..*base };
            let (signature, error) = match signature(&params) {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            };
            PhaseCell {
                gamma,
                inter,
                on_line: on_candidate_line(base.intra, gamma, inter, SCAN_LINE_TOL),
                signature,
                error,
            }
        })
        .collect();
    Ok(PhaseGrid {
        base: *base,
        gammas,
        inters,
        cells,
    })
}

/// Edge between two adjacent cells whose keys differ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEdge {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub gamma: f64,
    pub inter: f64,
    pub nearest_line: &'static str,
    pub distance: f64,
}

/// Edges where the signature changes; each must lie within one cell width
/// of a candidate line, otherwise the first offending edge is an error.
pub fn detect_boundaries(grid: &PhaseGrid) -> Result<Vec<BoundaryEdge>> {
    let (ng, nt) = (grid.gammas.len(), grid.inters.len());
    let step = |v: &[f64]| if v.len() > 1 { (v[1] - v[0]).abs() } else { 0.0 };
    let width = step(&grid.gammas).max(step(&grid.inters));
    let mut edges = Vec::new();
    for i in 0..ng {
        for j in 0..nt {
            for (di, dj) in [(1, 0), (0, 1)] {
                let (i2, j2) = (i + di, j + dj);
                if i2 >= ng || j2 >= nt || grid.cell(i, j).key() == grid.cell(i2, j2).key() {
                    continue;
                }
                let gamma = 0.5 * (grid.gammas[i] + grid.gammas[i2]);
                let inter = 0.5 * (grid.inters[j] + grid.inters[j2]);
                let (label, distance) = nearest_candidate_line(grid.base.intra, gamma, inter);
                if distance > width + 1e-12 {
                    return Err(Error::UnexplainedBoundary { gamma, inter });
                }
                edges.push(BoundaryEdge {
                    from: (i, j),
                    to: (i2, j2),
                    gamma,
                    inter,
                    nearest_line: label,
                    distance,
                });
            }
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(gamma: f64, inter: f64) -> ConfigurationSignature {
        signature(&ModelParams::unit(gamma, inter, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn table_examples() {
        let c = sig(0.5, -1.5).counts_wi;
        assert_eq!((c.zero, c.half, c.one), (4, 8, 0));
        assert_eq!(table1_type(&c), Some(Table1Type::IV));
        let c = sig(0.5, -1.0).counts_wi;
        assert_eq!(table1_type(&c), Some(Table1Type::III));
        let c = sig(0.0, -1.0).counts_wi;
        assert_eq!((c.zero, c.half, c.one), (0, 0, 8));
        assert_eq!(table1_type(&c), Some(Table1Type::II));
        let c = sig(-1.0, -1.0).counts_wi;
        assert_eq!(table1_type(&c), Some(Table1Type::V));
        let c = sig(0.0, 0.0).counts_wi;
        assert_eq!(table1_type(&c), Some(Table1Type::I));
    }

    #[test]
    fn outside_regime_is_untyped() {
        let c = WindingCounts {
            zero: 0,
            half: 8,
            one: 0,
        };
        assert_eq!(table1_type(&c), None);
        let s = sig(0.5, 2.0);
        assert_eq!(s.n_btps, 8);
        assert_eq!(table1_type(&s.counts_wi), None);
    }

    #[test]
    fn boundary_flags() {
        assert!(sig(0.0, -1.0).boundary);
        assert!(sig(0.5, -1.5).boundary);
        assert!(!sig(0.5, -1.0).boundary);
    }

    #[test]
    fn gamma_flip() {
        let a = sig(0.5, -1.0);
        let b = sig(-0.5, -1.0);
        assert_eq!(a.counts_wi, b.counts_wi);
        for (x, y) in a.signed_wii.iter().zip(&b.signed_wii) {
            assert_eq!(x.w, -y.w);
        }
        for (x, y) in a.signed_wi.iter().zip(&b.signed_wi) {
            assert_eq!(x.w, y.w);
        }
    }

    #[test]
    fn total_charge_vanishes() {
        for (g, t) in [
            (0.5, -1.5),
            (0.5, -1.0),
            (0.0, -1.0),
            (-1.0, -1.0),
            (0.3, 1.9),
            (1.2, 0.4),
        ] {
            assert_eq!(sig(g, t).total_w_i(), HalfInteger::ZERO, "({g}, {t})");
        }
    }

    #[test]
    fn single_point_grid() {
        let base = ModelParams::unit(0.0, 0.0, 0.5).unwrap();
        let g = scan_phase_diagram((0.5, 0.5), (-1.5, -1.5), 41, &base).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].table1_type(), Some(Table1Type::IV));
    }

    #[test]
    fn uniform_grid_has_no_boundary() {
        let base = ModelParams::unit(0.0, 0.0, 0.5).unwrap();
        let g = scan_phase_diagram((0.4, 0.6), (-1.1, -0.9), 8, &base).unwrap();
        assert!(detect_boundaries(&g).unwrap().is_empty());
    }

    #[test]
    fn diagonal_straddle_has_boundary() {
        let base = ModelParams::unit(0.0, 0.0, 0.5).unwrap();
        let g = scan_phase_diagram((0.5, 0.9), (0.5, 0.9), 9, &base).unwrap();
        let edges = detect_boundaries(&g).unwrap();
        assert!(!edges.is_empty());
        assert!(edges.iter().all(|e| e.nearest_line == "T=gamma"));
    }

    #[test]
    fn csv_row_layout() {
        let base = ModelParams::unit(0.0, 0.0, 0.5).unwrap();
        let g = scan_phase_diagram((0.5, 0.5), (-1.0, -1.0), 8, &base).unwrap();
        let row = g.cells[0].csv_row();
        assert!(row.starts_with("0.5,-1,16,0,16,0,III,false,"), "{row}");
    }
}
