//! Deterministic number formatting for CSV and JSON output.

use serde::Serializer;

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest text that reads back as `x` rounded to 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    if !r.is_finite() {
        return r.to_string();
    }
    let a = r.abs();
    if !(1e-4..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        r.to_string()
    }
}

/// `serialize_with` helper writing a float rounded to 12 significant digits.
pub fn ser_sig<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

/// Lowercase hex of a byte slice.
pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_sig(PI), "3.14159265359");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(-1.5000000000000002), "-1.5");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.23456789e-9), "1.23456789e-9");
        assert_eq!(fmt_sig(2.0), "2");
    }

    #[test]
    fn hex_bytes() {
        assert_eq!(hex(&[0, 15, 255]), "000fff");
    }
}
