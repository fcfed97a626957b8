use std::io::Write;
use std::path::Path;

use crate::algorithms::{CurveRow, LearningCurve};
use crate::error::{Error, Result};

pub const CURVE_HEADER: &str = "episode,steps,return,entropy_augmented_return,q_error_sup";

/// Writes the curve as CSV: header line, one row per episode, LF endings,
/// reals with 17 significant digits, absent errors as empty fields.
pub fn write_curve_csv(curve: &LearningCurve, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for row in curve {
        let err = row.q_error_sup.map(fmt_real).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            row.episode,
            row.steps,
            fmt_real(row.ret),
            fmt_real(row.entropy_augmented_return),
            err
        )?;
    }
    Ok(())
}

pub fn emit_curve_csv(curve: &LearningCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_curve_csv(curve, &mut buf).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<LearningCurve> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve_csv(&text)
}

pub fn parse_curve_csv(text: &str) -> Result<LearningCurve> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(Error::invalid("curve", "missing or wrong header"));
    }
    let mut curve = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::invalid(
                "curve",
                format!("row {i} has {} fields", fields.len()),
            ));
        }
        let bad = |what: &str| Error::invalid("curve", format!("row {i}: bad {what}"));
        curve.push(CurveRow {
            episode: fields[0].parse().map_err(|_| bad("episode"))?,
            steps: fields[1].parse().map_err(|_| bad("steps"))?,
            ret: fields[2].parse().map_err(|_| bad("return"))?,
            entropy_augmented_return: fields[3]
                .parse()
                .map_err(|_| bad("entropy_augmented_return"))?,
            q_error_sup: match fields[4] {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("q_error_sup"))?),
            },
        });
    }
    Ok(curve)
}

// %.17g-style: fixed notation for moderate exponents, scientific otherwise.
fn fmt_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("exponent in scientific format");
    if (-5..17).contains(&exp) {
        format!("{x:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(episode: usize, steps: usize, ret: f64, aug: f64, err: Option<f64>) -> CurveRow {
        CurveRow {
            episode,
            steps,
            ret,
            entropy_augmented_return: aug,
            q_error_sup: err,
        }
    }

    fn emit(curve: &LearningCurve) -> String {
        let mut buf = Vec::new();
        write_curve_csv(curve, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_curve_is_header_only() {
        assert_eq!(emit(&Vec::new()), format!("{CURVE_HEADER}\n"));
    }

    #[test]
    fn one_row_format() {
        let text = emit(&vec![row(0, 3, -3.0, -3.5, Some(1.25))]);
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains('\r'));
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "0,3,-3.0000000000000000,-3.5000000000000000,1.2500000000000000"
        );
    }

    #[test]
    fn absent_error_is_empty_field() {
        let text = emit(&vec![row(0, 1, 1.0, 1.0, None)]);
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_real(0.1), "0.10000000000000001");
        assert_eq!(fmt_real(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_real(123456.0), "123456.00000000000");
        assert_eq!(fmt_real(1e20), "1.0000000000000000e20");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let curve = vec![
            row(0, 7, 0.1 + 0.2, -1.0 / 3.0, Some(f64::MIN_POSITIVE)),
            row(1, 2, -1e300, 2.5e-9, None),
            row(2, 1, 0.0, -0.0, Some(0.625)),
        ];
        let back = parse_curve_csv(&emit(&curve)).unwrap();
        assert_eq!(back.len(), curve.len());
        for (a, b) in curve.iter().zip(&back) {
            assert_eq!(a.ret.to_bits(), b.ret.to_bits());
            assert_eq!(
                a.entropy_augmented_return.to_bits(),
                b.entropy_augmented_return.to_bits()
            );
            assert_eq!(
                a.q_error_sup.map(f64::to_bits),
                b.q_error_sup.map(f64::to_bits)
            );
        }
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(parse_curve_csv("episode,steps\n").is_err());
        assert!(parse_curve_csv(&format!("{CURVE_HEADER}\n0,1,2\n")).is_err());
        assert!(parse_curve_csv(&format!("{CURVE_HEADER}\n0,x,1,1,\n")).is_err());
    }
}
