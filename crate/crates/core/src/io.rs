//! Dense numeric CSV with lossless 17-significant-digit formatting.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// `%.17g`-style formatting: enough digits to re-parse the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn matrix_to_csv<T: Real>(m: &Matrix<T>, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_f64(v.as_f64())).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a dense numeric CSV. A first line that does not parse as numbers
/// is taken as a header and returned separately.
pub fn matrix_from_csv(text: &str) -> Result<(Matrix<f64>, Option<Vec<String>>)> {
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if rows.is_empty() && header.is_none() => {
                header = Some(fields.iter().map(|s| s.to_string()).collect());
            }
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no numeric rows".into()));
    }
    let m =
        Matrix::from_rows(&rows).map_err(|_| Error::Parse("rows have differing lengths".into()))?;
    if let Some(h) = &header {
        if h.len() != m.ncols() {
            return Err(Error::Parse("header and data widths differ".into()));
        }
    }
    Ok((m, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            1e16,
            123456789.125,
            0.30000000000000004,
        ] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(-0.25), "-0.25");
    }

    #[test]
    fn csv_round_trip() {
        let m = Matrix::<f64>::from_rows(&[vec![1.0, 0.1], vec![1.0 / 7.0, -3e-9]]).unwrap();
        let (back, h) = matrix_from_csv(&matrix_to_csv(&m, None)).unwrap();
        assert_eq!(back, m);
        assert!(h.is_none());
        let text = matrix_to_csv(&m, Some(&["a".into(), "b".into()]));
        let (back, h) = matrix_from_csv(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(h.unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn malformed_rejected() {
        assert!(matrix_from_csv("1,2\n3,x\n").is_err());
        assert!(matrix_from_csv("1,2\n3\n").is_err());
        assert!(matrix_from_csv("").is_err());
    }
}
