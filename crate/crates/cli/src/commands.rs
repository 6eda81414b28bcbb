use serde_json::{json, Map, Value};

use bilayer_ep::btp::{locate_btps, min_gap, Btp};
use bilayer_ep::dispersion::{analyze_ray, log_spaced, Q_MAX, Q_MIN};
use bilayer_ep::format::fmt_sig;
use bilayer_ep::phase::{detect_boundaries, scan_phase_diagram, table1_type, WindingCounts};
use bilayer_ep::realspace::{block_check, build_momentum_basis, build_realspace, full_spectrum_mismatch, LatticeSize};
use bilayer_ep::ring::{trace_ep_ring, EpRing};
use bilayer_ep::symmetry::{spectral_reality, symmetry_residuals};
use bilayer_ep::winding::{annotate_btps, make_loop, winding_number, Loop, DEFAULT_RADIUS};
use bilayer_ep::{Error, ModelParams, Momentum};

use crate::args::{
    BtpsArgs, DispersionArgs, FieldExportArgs, Format, RealspaceArgs, RingArgs, ScanArgs, SymmetryArgs, WindingArgs,
};
use crate::output::{emit, json_document, params_json, to_value, CliError};
use crate::svg;

fn reject_svg(format: Format) -> Result<(), CliError> {
    if format == Format::Svg {
        return Err(CliError::BadInput(
            "svg output is only available for field-export".into(),
        ));
    }
    Ok(())
}

fn body(params: &ModelParams) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("params".into(), params_json(params));
    m
}

fn counts(btps: &[Btp]) -> WindingCounts {
    let mut c = WindingCounts::default();
    for b in btps {
        match b.w_i.map(|w| w.abs().twice()) {
            Some(0) => c.zero += 1,
            Some(1) => c.half += 1,
            _ => c.one += 1,
        }
    }
    c
}

fn rings_for(params: &ModelParams, branch: Option<i8>, samples: usize) -> Result<Vec<EpRing>, CliError> {
    let branches = match branch {
        Some(s) => vec![s],
        None if params.is_hermitian() => vec![1],
        None => vec![1, -1],
    };
    branches
        .into_iter()
        .map(|s| trace_ep_ring(params, s, samples).map_err(CliError::from))
        .collect()
}

fn ring_json(r: &EpRing) -> Value {
    json!({
        "branch": r.branch,
        "level": r.level,
        "levelResidual": r.level_residual(),
        "points": r.points.iter().map(|k| json!({"kx": k.kx, "ky": k.ky})).collect::<Vec<_>>(),
    })
}

pub fn btps(a: &BtpsArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Json);
    reject_svg(format)?;
    if a.ring && params.has_diag() {
        return Err(CliError::BadInput("--ring needs t = 0".into()));
    }
    let located = match locate_btps(&params) {
        Ok(b) => b,
        Err(Error::RingRegime { .. }) if a.ring => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let btps = annotate_btps(&params, &located)?;
    let rings: Vec<EpRing> = if a.ring {
        rings_for(&params, None, a.samples)?
            .into_iter()
            .filter(|r| r.points.len() > 1)
            .collect()
    } else {
        Vec::new()
    };

    let text = match format {
        Format::Csv => {
            let mut s = String::from("kx,ky,branch,kind,wI,wII\n");
            for b in &btps {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt_sig(b.k.kx),
                    fmt_sig(b.k.ky),
                    b.branch,
                    b.kind.map_or(String::new(), |k| k.to_string()),
                    b.w_i.map_or(String::new(), |w| w.value().to_string()),
                    b.w_ii.map_or(String::new(), |w| w.value().to_string()),
                ));
            }
            s
        }
        _ => {
            let c = counts(&btps);
            let mut m = body(&params);
            m.insert("count".into(), json!(btps.len()));
            m.insert("countsWI".into(), to_value(&c));
            m.insert("type".into(), json!(table1_type(&c).map(|t| t.to_string())));
            m.insert("btps".into(), to_value(&btps));
            if btps.is_empty() && rings.is_empty() {
                let gap = min_gap(&params, a.grid);
                m.insert("minGap".into(), json!(gap));
                m.insert("note".into(), json!(format!("gapped: min |E| = {}", fmt_sig(gap))));
            }
            if a.ring {
                m.insert("rings".into(), Value::Array(rings.iter().map(ring_json).collect()));
            }
            json_document("btps", m)
        }
    };
    emit(&text, a.output.out.as_deref())
}

pub fn winding(a: &WindingArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Json);
    reject_svg(format)?;
    let center = Momentum::new(a.kx, a.ky);
    let lp = match a.loop_radius {
        Some(r) => Loop::new(center, r, a.samples)?,
        None => {
            let radius = match locate_btps(&params) {
                Ok(btps) => make_loop(center, &btps)?.radius,
                Err(Error::RingRegime { .. }) => DEFAULT_RADIUS,
                Err(e) => return Err(e.into()),
            };
            Loop::new(center, radius, a.samples)?
        }
    };
    let r = winding_number(&params, &lp, a.field.into())?;
    let text = match format {
        Format::Csv => format!(
            "kx,ky,radius,samples,fieldKind,value,rawAngle,residual,branchSwapped\n{},{},{},{},{},{},{},{},{}\n",
            fmt_sig(r.center.kx),
            fmt_sig(r.center.ky),
            fmt_sig(r.radius),
            r.samples,
            r.field_kind,
            r.value.value(),
            fmt_sig(r.raw_angle),
            fmt_sig(r.residual),
            r.branch_swapped
        ),
        _ => {
            let mut m = body(&params);
            if let Value::Object(fields) = to_value(&r) {
                m.extend(fields);
            }
            json_document("winding", m)
        }
    };
    emit(&text, a.output.out.as_deref())
}

pub fn scan(a: &ScanArgs) -> Result<(), CliError> {
    let base = a.model.params()?;
    let format = a.output.format_or(Format::Json);
    reject_svg(format)?;
    let grid = scan_phase_diagram(a.gamma_range, a.inter_range, a.res, &base)?;
    let boundaries = detect_boundaries(&grid);
    let text = match format {
        Format::Csv => grid.to_csv(),
        _ => {
            let cells: Vec<Value> = grid
                .cells
                .iter()
                .map(|c| {
                    let s = c.signature.as_ref();
                    json!({
                        "gamma": c.gamma,
                        "T": c.inter,
                        "onLine": c.on_line,
                        "nBtps": s.map(|s| s.n_btps),
                        "countsWI": s.map(|s| to_value(&s.counts_wi)),
                        "type": c.table1_type().map(|t| t.to_string()),
                        "boundaryFlag": c.on_line || s.is_some_and(|s| s.boundary),
                        "wIIHash": s.map(|s| s.wii_hash()),
                        "error": c.error,
                    })
                })
                .collect();
            let mut m = body(&base);
            m.insert("gammas".into(), to_value(&grid.gammas));
            m.insert("Ts".into(), to_value(&grid.inters));
            m.insert("cells".into(), Value::Array(cells));
            if let Ok(edges) = &boundaries {
                m.insert("boundaryEdges".into(), json!(edges.len()));
            }
            json_document("scan", m)
        }
    };
    emit(&text, a.output.out.as_deref())?;
    boundaries.map_err(|e| CliError::CheckFailed(e.to_string()))?;
    Ok(())
}

fn default_directions() -> Vec<[f64; 2]> {
    vec![
        [1.0, 0.0],
        [0.0, 1.0],
        [-1.0, 0.0],
        [0.0, -1.0],
        [1.0, 1.0],
        [1.0, -1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
    ]
}

pub fn dispersion(a: &DispersionArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Json);
    reject_svg(format)?;
    let btps = annotate_btps(&params, &locate_btps(&params)?)?;
    let chosen: Vec<Btp> = match (a.kx, a.ky) {
        (Some(kx), Some(ky)) => {
            let probe = Momentum::new(kx, ky);
            let b = btps
                .iter()
                .find(|b| b.k.torus_distance(&probe) < 1e-6)
                .ok_or_else(|| CliError::BadInput(format!("no touching point at {probe}")))?;
            vec![*b]
        }
        _ => btps.clone(),
    };
    let qs = log_spaced(Q_MIN, Q_MAX, a.n_q);
    let dirs = a.dir.map_or_else(default_directions, |d| vec![d]);

    let mut rays = Vec::new();
    let mut csv = String::from("kx,ky,dx,dy,q,absE\n");
    let mut failures = 0;
    for b in &chosen {
        let kind = b.kind.expect("annotated");
        for d in &dirs {
            let (sample, report) = match analyze_ray(&params, kind, b.k, *d, &qs) {
                Ok(r) => r,
                Err(Error::UnsupportedCase(_)) if a.dir.is_none() => continue,
                Err(e) => return Err(e.into()),
            };
            if !report.passes() {
                failures += 1;
            }
            for (q, e) in sample.q.iter().zip(&sample.abs_e) {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt_sig(b.k.kx),
                    fmt_sig(b.k.ky),
                    fmt_sig(sample.direction[0]),
                    fmt_sig(sample.direction[1]),
                    fmt_sig(*q),
                    fmt_sig(*e)
                ));
            }
            let mut ray = json!({
                "kx": b.k.kx,
                "ky": b.k.ky,
                "kind": kind.to_string(),
                "direction": sample.direction,
                "pass": report.passes(),
            });
            if let (Value::Object(r), Value::Object(extra)) = (&mut ray, to_value(&report)) {
                r.extend(extra);
            }
            rays.push(ray);
        }
    }
    let text = match format {
        Format::Csv => csv,
        _ => {
            let mut m = body(&params);
            m.insert("rays".into(), Value::Array(rays));
            json_document("dispersion", m)
        }
    };
    emit(&text, a.output.out.as_deref())?;
    if failures > 0 {
        return Err(CliError::CheckFailed(format!(
            "{failures} rays disagree with the expansion"
        )));
    }
    Ok(())
}

pub fn symmetry(a: &SymmetryArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Json);
    reject_svg(format)?;
    let rows = symmetry_residuals(&params, a.grid);
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let text = match format {
        Format::Csv => {
            let mut s = String::from("relation,residual\n");
            for (rel, r) in &rows {
                s.push_str(&format!("{},{}\n", rel.label(), fmt_sig(*r)));
            }
            s
        }
        _ => {
            let mut m = body(&params);
            m.insert("grid".into(), json!(a.grid));
            m.insert(
                "rows".into(),
                Value::Array(
                    rows.iter()
                        .map(|(rel, r)| json!({"relation": rel.label(), "residual": r}))
                        .collect(),
                ),
            );
            m.insert("maxResidual".into(), json!(worst));
            if !params.has_diag() {
                m.insert(
                    "spectralReality".into(),
                    json!(spectral_reality(&params, a.grid, 1e-12)),
                );
            }
            json_document("symmetry", m)
        }
    };
    emit(&text, a.output.out.as_deref())?;
    if worst > params.tol_ep {
        return Err(CliError::CheckFailed(format!(
            "max residual {worst:e} exceeds {:e}",
            params.tol_ep
        )));
    }
    Ok(())
}

pub fn realspace(a: &RealspaceArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Json);
    reject_svg(format)?;
    let size = LatticeSize::new(a.n)?;
    let h = build_realspace(&params, size);
    let report = block_check(&h, &build_momentum_basis(size), &params)?;
    let full = full_spectrum_mismatch(&h, &params);
    let ok = report.passes(params.tol_ep) && full.is_some_and(|d| d < params.tol_ep);
    let text = match format {
        Format::Csv => {
            let mut s = String::from("row,col,re,im\n");
            for (r, c, re, im) in h.entries() {
                s.push_str(&format!("{r},{c},{},{}\n", fmt_sig(re), fmt_sig(im)));
            }
            s
        }
        _ => {
            let mut m = body(&params);
            m.insert("N".into(), json!(a.n));
            m.insert("dimension".into(), json!(size.dim()));
            if let Value::Object(fields) = to_value(&report) {
                m.extend(fields);
            }
            m.insert("fullSpectrumMismatch".into(), json!(full));
            m.insert("pass".into(), json!(ok));
            json_document("realspace", m)
        }
    };
    emit(&text, a.output.out.as_deref())?;
    if !ok {
        return Err(CliError::CheckFailed(format!("block check failed: {report:?}")));
    }
    Ok(())
}

pub fn ring(a: &RingArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Csv);
    reject_svg(format)?;
    let rings = rings_for(&params, a.branch, a.samples)?;
    let text = match format {
        Format::Csv => {
            let mut s = String::from("branch,index,kx,ky\n");
            for r in &rings {
                for (i, k) in r.points.iter().enumerate() {
                    s.push_str(&format!("{},{i},{},{}\n", r.branch, fmt_sig(k.kx), fmt_sig(k.ky)));
                }
            }
            s
        }
        _ => {
            let mut m = body(&params);
            m.insert("rings".into(), Value::Array(rings.iter().map(ring_json).collect()));
            json_document("ring", m)
        }
    };
    emit(&text, a.output.out.as_deref())
}

pub fn field_export(a: &FieldExportArgs) -> Result<(), CliError> {
    let params = a.model.params()?;
    let format = a.output.format_or(Format::Svg);
    if format == Format::Json {
        return Err(CliError::BadInput("field-export writes svg or csv".into()));
    }
    if a.grid < 2 || a.arrows < 2 {
        return Err(CliError::BadInput("--grid and --arrows must be at least 2".into()));
    }
    let markers: Vec<Momentum> = match locate_btps(&params) {
        Ok(b) => b.iter().map(|b| b.k).collect(),
        Err(Error::RingRegime { .. }) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let heat = svg::sample_field(&params, a.grid);
    let csv = svg::field_csv(&heat);
    match format {
        Format::Csv => emit(&csv, a.output.out.as_deref()),
        _ => {
            let arrows = svg::sample_field(&params, a.arrows);
            let image = svg::render(&params, &heat, &arrows, &markers);
            let csv_path = a
                .csv
                .clone()
                .or_else(|| a.output.out.as_ref().map(|p| p.with_extension("csv")));
            emit(&image, a.output.out.as_deref())?;
            match csv_path {
                Some(path) => emit(&csv, Some(&path)),
                None => Ok(()),
            }
        }
    }
}
