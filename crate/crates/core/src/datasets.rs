//! Bundled lifetime data sets and the plain-text lifetime format.
//!
//! The format is whitespace- or newline-separated positive reals; lines whose
//! first non-blank character is `#` are comments.

use crate::error::{Error, Result};

/// Susquehanna River maximum flood levels, 20 four-year periods (1890-1969).
pub const FLOOD: &[f64] = &[
    0.654, 0.613, 0.315, 0.449, 0.297, 0.402, 0.379, 0.423, 0.379, 0.324, 0.269, 0.740, 0.418, 0.412, 0.494, 0.416,
    0.338, 0.392, 0.484, 0.265,
];

/// Guinea-pig survival times in days, regimen 6.6 (72 animals).
pub const GUINEA_PIG: &[f64] = &[
    12.0, 15.0, 22.0, 24.0, 24.0, 32.0, 32.0, 33.0, 34.0, 38.0, 38.0, 43.0, 44.0, 48.0, 52.0, 53.0, 54.0, 54.0, 55.0,
    56.0, 57.0, 58.0, 58.0, 59.0, 60.0, 60.0, 60.0, 60.0, 61.0, 62.0, 63.0, 65.0, 65.0, 67.0, 68.0, 70.0, 70.0, 72.0,
    73.0, 75.0, 76.0, 76.0, 81.0, 83.0, 84.0, 85.0, 87.0, 91.0, 95.0, 96.0, 98.0, 99.0, 109.0, 110.0, 121.0, 127.0,
    129.0, 131.0, 143.0, 146.0, 146.0, 175.0, 175.0, 211.0, 233.0, 258.0, 258.0, 263.0, 297.0, 341.0, 341.0, 376.0,
];

/// Fixture files with provenance headers, as shipped in `data/`.
pub const FLOOD_FIXTURE: &str = include_str!("../data/flood.txt");
pub const GUINEA_PIG_FIXTURE: &str = include_str!("../data/guinea_pig.txt");

/// Names accepted by [`bundled`].
pub const BUNDLED_NAMES: &[&str] = &["flood", "guinea-pig"];

/// Looks up a bundled data set by name (`flood`, `guinea-pig` or `guinea`).
pub fn bundled(name: &str) -> Option<&'static [f64]> {
    match name {
        "flood" => Some(FLOOD),
        "guinea-pig" | "guinea" => Some(GUINEA_PIG),
        _ => None,
    }
}

/// Parses the plain-text lifetime format.
pub fn parse_lifetimes(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for token in line.split_whitespace() {
            // The published listings end with a full stop.
            let token = token.trim_end_matches(['.', ','].as_slice());
            let value: f64 = token
                .parse()
                .map_err(|_| Error::Input(format!("line {}: cannot parse {token:?} as a number", lineno + 1)))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Input(format!("line {}: lifetimes must be positive, got {value}", lineno + 1)));
            }
            out.push(value);
        }
    }
    if out.is_empty() {
        return Err(Error::Input("no lifetimes found".into()));
    }
    Ok(out)
}
