//! Touchstone `.s2p` files.
//!
//! Written files are always `# HZ S RI R <z0>`. The reader also accepts MA
//! and DB data and the usual frequency units.

use std::fmt::Write as _;

use super::{Complex, Frequency, ReferenceImpedance, SMatrix, TwoPortError};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepData {
    pub z0: ReferenceImpedance,
    pub points: Vec<(Frequency, SMatrix)>,
}

/// Renders an RI-format two-port file. Column order follows the Touchstone
/// convention: S11 S21 S12 S22.
pub fn write_s2p(data: &SweepData, comments: &[&str]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "! {c}");
    }
    let _ = writeln!(out, "# HZ S RI R {}", data.z0.ohms());
    for (f, s) in &data.points {
        let _ = write!(out, "{:e}", f.hz());
        for z in [s.s11, s.s21, s.s12, s.s22] {
            let _ = write!(out, " {:e} {:e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy)]
enum Format {
    Ri,
    Ma,
    Db,
}

pub fn read_s2p(text: &str) -> Result<SweepData, TwoPortError> {
    let mut unit = 1e9;
    let mut format = Format::Ma;
    let mut z0 = ReferenceImpedance::default();
    let mut values: Vec<(usize, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(opts) = line.strip_prefix('#') {
            let toks: Vec<String> = opts.split_whitespace().map(str::to_ascii_uppercase).collect();
            let mut i = 0;
            while i < toks.len() {
                match toks[i].as_str() {
                    "HZ" => unit = 1.0,
                    "KHZ" => unit = 1e3,
                    "MHZ" => unit = 1e6,
                    "GHZ" => unit = 1e9,
                    "RI" => format = Format::Ri,
                    "MA" => format = Format::Ma,
                    "DB" => format = Format::Db,
                    "S" => {}
                    "R" => {
                        i += 1;
                        let v: f64 = toks.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| {
                            TwoPortError::Touchstone { line: lineno + 1, reason: "bad reference".into() }
                        })?;
                        z0 = ReferenceImpedance::new(v)?;
                    }
                    other => {
                        return Err(TwoPortError::Touchstone {
                            line: lineno + 1,
                            reason: format!("unsupported option `{other}`"),
                        })
                    }
                }
                i += 1;
            }
            continue;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| TwoPortError::Touchstone { line: lineno + 1, reason: format!("not a number: `{tok}`") })?;
            values.push((lineno + 1, v));
        }
    }

    if !values.len().is_multiple_of(9) {
        let line = values.last().map_or(0, |v| v.0);
        return Err(TwoPortError::Touchstone { line, reason: "incomplete data record".into() });
    }
    let mut points = Vec::with_capacity(values.len() / 9);
    for rec in values.chunks(9) {
        let f = Frequency::new(rec[0].1 * unit)?;
        let pair = |k: usize| -> Complex {
            let (x, y) = (rec[1 + 2 * k].1, rec[2 + 2 * k].1);
            match format {
                Format::Ri => Complex::new(x, y),
                Format::Ma => Complex::from_polar(x, y.to_radians()),
                Format::Db => Complex::from_polar(10f64.powf(x / 20.0), y.to_radians()),
            }
        };
        points.push((f, SMatrix { s11: pair(0), s21: pair(1), s12: pair(2), s22: pair(3) }));
    }
    Ok(SweepData { z0, points })
}
