use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bilayer_ep::model::DEFAULT_TOL_EP;
use bilayer_ep::winding::{FieldKind, DEFAULT_SAMPLES};
use bilayer_ep::ModelParams;

use crate::output::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bilayer-ep",
    version,
    about = "Band touchings and winding numbers of a non-Hermitian bilayer square lattice"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate and classify band-touching points
    Btps(BtpsArgs),
    /// Winding number around a loop centred at a probe point
    Winding(WindingArgs),
    /// Scan the (gamma, T) plane
    Scan(ScanArgs),
    /// Fit |E| along rays leaving touching points
    Dispersion(DispersionArgs),
    /// Residuals of the momentum-space symmetry relations
    Symmetry(SymmetryArgs),
    /// Build the real-space Hamiltonian and check its block structure
    Realspace(RealspaceArgs),
    /// Trace the t = 0 rings
    Ring(RingArgs),
    /// Pseudospin field F over the zone as SVG and CSV
    FieldExport(FieldExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Field {
    F,
    E,
}

impl From<Field> for FieldKind {
    fn from(f: Field) -> Self {
        match f {
            Field::F => FieldKind::F,
            Field::E => FieldKind::E,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Intralayer hopping J
    #[arg(long = "J", default_value_t = 1.0, allow_negative_numbers = true)]
    pub intra: f64,
    /// Interlayer hopping T
    #[arg(long = "T", default_value_t = 0.0, allow_negative_numbers = true)]
    pub inter: f64,
    /// Diagonal hopping t
    #[arg(long = "t", default_value_t = 0.0, allow_negative_numbers = true)]
    pub diag: f64,
    /// Gain/loss rate gamma
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Tolerance for exceptional-point and check decisions
    #[arg(long, default_value_t = DEFAULT_TOL_EP)]
    pub tol: f64,
}

impl ModelArgs {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let p = ModelParams::new(self.intra, self.inter, self.diag, self.gamma)?;
        Ok(p.with_tol_ep(self.tol)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format; inferred from the --out extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    pub fn format_or(&self, fallback: Format) -> Format {
        self.format
            .or_else(|| {
                let ext = self.out.as_ref()?.extension()?.to_str()?.to_ascii_lowercase();
                match ext.as_str() {
                    "json" => Some(Format::Json),
                    "csv" => Some(Format::Csv),
                    "svg" => Some(Format::Svg),
                    _ => None,
                }
            })
            .unwrap_or(fallback)
    }
}

#[derive(Debug, Args)]
pub struct BtpsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Trace rings instead of refusing when t = 0
    #[arg(long)]
    pub ring: bool,
    /// Vertices per ring
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Grid used for the gap estimate
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct WindingArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Loop centre kx (radians; "pi" fractions such as -pi/3 accepted)
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub kx: f64,
    /// Loop centre ky
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub ky: f64,
    #[arg(long, value_enum, default_value = "f", ignore_case = true)]
    pub field: Field,
    /// Loop radius; chosen from the nearest touching point when omitted
    #[arg(long = "loop-radius")]
    pub loop_radius: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// gamma range as lo:hi
    #[arg(long = "gamma-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "-2:2")]
    pub gamma_range: (f64, f64),
    /// T range as lo:hi
    #[arg(long = "T-range", value_parser = parse_range, allow_hyphen_values = true, default_value = "-2:2")]
    pub inter_range: (f64, f64),
    /// Points per axis
    #[arg(long, default_value_t = 41)]
    pub res: usize,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Restrict to the touching point at (kx, ky)
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true, requires = "ky")]
    pub kx: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true, requires = "kx")]
    pub ky: Option<f64>,
    /// Ray direction as dx,dy; axes and diagonals when omitted
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub dir: Option<[f64; 2]>,
    /// Number of log-spaced offsets in [1e-4, 1e-2]
    #[arg(long = "n-q", default_value_t = 32)]
    pub n_q: usize,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct RealspaceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Linear lattice size (even, at least 4)
    #[arg(long = "N", default_value_t = 6)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct RingArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Branch sign +1 or -1; both when omitted
    #[arg(long, allow_negative_numbers = true)]
    pub branch: Option<i8>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct FieldExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Heat-map resolution per axis
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// Arrows per axis
    #[arg(long, default_value_t = 32)]
    pub arrows: usize,
    /// Raw (kx, ky, Fx, Fy) CSV; next to an SVG --out by default
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}

/// Radians, optionally written with `pi`: `pi`, `-pi/3`, `2pi/3`, `2*pi/3`, `0.5`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(['*', ' '], "");
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let bad = || format!("cannot read angle '{s}'");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let c = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(c * std::f64::consts::PI / den)
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(format!("range '{s}' must satisfy lo <= hi"));
    }
    Ok((lo, hi))
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected dx,dy, got '{s}'"))?;
    Ok([parse_angle(a)?, parse_angle(b)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi/3").unwrap(), -PI / 3.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("-1.25").unwrap(), -1.25);
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-2:2").unwrap(), (-2.0, 2.0));
        assert!(parse_range("2:-2").is_err());
        assert!(parse_range("2").is_err());
    }
}
