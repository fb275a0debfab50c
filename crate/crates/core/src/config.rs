//! Tester constants and their flat `key=value` file format.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the default constants file.
pub const CONSTANTS_ENV: &str = "REPTEST_CONSTANTS";

/// The constants hidden inside the sample-size formula and the gap bound.
///
/// `m = c_m1 * sqrt(n)/(rho eps^2) * sqrt(ln(n/rho)) + c_m2/(rho^2 eps^2)`,
/// `m0 ~ c_m0 * ln(4/rho)`, and `R` is scaled by `c_gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c_gap: f64,
    pub c_m1: f64,
    pub c_m2: f64,
    pub c_m0: f64,
}

impl Default for Constants {
    /// Output of `calibrate` on the default pilot grid
    /// {(500, 0.3), (1000, 0.25), (2000, 0.2)}, rho = 0.2, 400 trials,
    /// seed 0x5EED, rounded to three significant digits.
    fn default() -> Self {
        Self {
            c_gap: 0.183,
            c_m1: 1.0,
            c_m2: 1.0,
            c_m0: 3.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.entries() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    fn entries(&self) -> [(&'static str, f64); 4] {
        [
            ("c_gap", self.c_gap),
            ("c_m1", self.c_m1),
            ("c_m2", self.c_m2),
            ("c_m0", self.c_m0),
        ]
    }

    /// `key=value` lines; values print in shortest round-trip form.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k}={v:?}").expect("write to string");
        }
        out
    }

    /// Parses `key=value` lines. Blank lines and `#` comments are skipped;
    /// keys that are absent keep their default.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let slot = match key.trim() {
                "c_gap" => &mut c.c_gap,
                "c_m1" => &mut c.c_m1,
                "c_m2" => &mut c.c_m2,
                "c_m0" => &mut c.c_m0,
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            };
            *slot = value;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path, header: &str) -> Result<()> {
        let mut text = String::new();
        for line in header.lines() {
            writeln!(text, "# {line}").expect("write to string");
        }
        text.push_str(&self.to_kv());
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Loads from the file named by [`CONSTANTS_ENV`] when set, otherwise
    /// returns the defaults.
    pub fn from_env_or_default() -> Result<Self> {
        match std::env::var_os(CONSTANTS_ENV) {
            Some(path) => Self::load(Path::new(&path)),
            None => Ok(Self::default()),
        }
    }
}
