//! Static SVG figure of the pseudospin field: |F|² heat map, arrows and
//! touching-point markers.

use std::fmt::Write;

use bilayer_ep::bloch::{eigensystem, observables, Band, BlochMatrix};
use bilayer_ep::format::fmt_sig;
use bilayer_ep::symmetry::bz_grid;
use bilayer_ep::{ModelParams, Momentum};

const MARGIN: f64 = 60.0;
const PLOT: f64 = 600.0;

pub struct FieldSample {
    pub k: Momentum,
    pub fx: f64,
    pub fy: f64,
}

/// `F = (⟨σx⟩, ⟨σz⟩)` of the upper band at the `n × n` cell centres.
pub fn sample_field(params: &ModelParams, n: usize) -> Vec<FieldSample> {
    bz_grid(n)
        .into_iter()
        .map(|k| {
            let es = eigensystem(&BlochMatrix::at(params, k), params.tol_ep);
            let (fx, fy) = if es.degenerate {
                (0.0, 0.0)
            } else {
                let o = observables(&es, Band::Plus);
                (o.fx, o.fy)
            };
            FieldSample { k, fx, fy }
        })
        .collect()
}

pub fn field_csv(samples: &[FieldSample]) -> String {
    let mut s = String::from("kx,ky,Fx,Fy\n");
    for f in samples {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_sig(f.k.kx),
            fmt_sig(f.k.ky),
            fmt_sig(f.fx),
            fmt_sig(f.fy)
        );
    }
    s
}

/// Piecewise-linear viridis-like map on [0, 1].
fn color(v: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let v = v.clamp(0.0, 1.0);
    let i = STOPS.iter().rposition(|s| s.0 <= v).unwrap_or(0).min(STOPS.len() - 2);
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let t = (v - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|j| (a.1[j] + t * (b.1[j] - a.1[j])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn to_x(kx: f64) -> f64 {
    MARGIN + (kx + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * PLOT
}

fn to_y(ky: f64) -> f64 {
    MARGIN + (std::f64::consts::PI - ky) / (2.0 * std::f64::consts::PI) * PLOT
}

fn px(x: f64) -> String {
    format!("{x:.2}")
}

pub fn render(params: &ModelParams, heat: &[FieldSample], arrows: &[FieldSample], markers: &[Momentum]) -> String {
    let size = PLOT + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">|F|² with F = (⟨σx⟩, ⟨σz⟩); J={} T={} t={} γ={}</text>"#,
        size / 2.0,
        fmt_sig(params.intra),
        fmt_sig(params.inter),
        fmt_sig(params.diag),
        fmt_sig(params.gamma)
    );

    let n = (heat.len() as f64).sqrt().round() as usize;
    let cell = PLOT / n as f64;
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for f in heat {
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            px(to_x(f.k.kx) - cell / 2.0),
            px(to_y(f.k.ky) - cell / 2.0),
            px(cell + 0.5),
            px(cell + 0.5),
            color(f.fx * f.fx + f.fy * f.fy)
        );
    }
    let _ = writeln!(s, "</g>");

    let m = (arrows.len() as f64).sqrt().round() as usize;
    let step = PLOT / m as f64;
    let _ = writeln!(s, r#"<g stroke="white" stroke-width="1.2" fill="white">"#);
    for f in arrows {
        let len = 0.8 * step * f.fx.hypot(f.fy);
        if len < 0.5 {
            continue;
        }
        let (ux, uy) = (f.fx / f.fx.hypot(f.fy), -f.fy / f.fx.hypot(f.fy));
        let (cx, cy) = (to_x(f.k.kx), to_y(f.k.ky));
        let (x0, y0) = (cx - ux * len / 2.0, cy - uy * len / 2.0);
        let (x1, y1) = (cx + ux * len / 2.0, cy + uy * len / 2.0);
        let head = 0.3 * len;
        let (hx, hy) = (x1 - ux * head, y1 - uy * head);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/><polygon points="{},{} {},{} {},{}"/>"#,
            px(x0),
            px(y0),
            px(x1),
            px(y1),
            px(x1),
            px(y1),
            px(hx - uy * head * 0.5),
            px(hy + ux * head * 0.5),
            px(hx + uy * head * 0.5),
            px(hy - ux * head * 0.5)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g stroke="red" stroke-width="2" fill="none">"#);
    for k in markers {
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="5"/>"#, px(to_x(k.kx)), px(to_y(k.ky)));
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="14" text-anchor="middle">"#);
    for (label, v) in [("−π", -std::f64::consts::PI), ("0", 0.0), ("π", std::f64::consts::PI)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{label}</text>"#,
            px(to_x(v)),
            px(MARGIN + PLOT + 20.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{label}</text>"#,
            px(MARGIN - 20.0),
            px(to_y(v) + 5.0)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">kx</text>"#, px(size / 2.0), px(size - 12.0));
    let _ = writeln!(s, r#"<text x="18" y="{}">ky</text>"#, px(size / 2.0));
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(2.0), "#fde725");
    }

    #[test]
    fn field_is_unit_or_less() {
        let p = ModelParams::unit(0.5, -1.5, 0.5).unwrap();
        for f in sample_field(&p, 16) {
            assert!(f.fx.hypot(f.fy) <= 1.0 + 1e-12);
        }
    }
}
