//! Ingestion of nontrivial zeta-zero heights.

use std::path::Path;

use crate::error::{Error, Result};

/// Height of the first nontrivial zero (Odlyzko's tables).
pub const FIRST_ZERO: f64 = 14.134_725_141_734_693;

/// Strictly ascending imaginary parts `gamma_l` of zeros `1/2 + i gamma_l`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZetaZeroTable {
    zeros: Vec<f64>,
}

impl ZetaZeroTable {
    /// Validates ordering, positivity and the first height.
    pub fn new(zeros: Vec<f64>) -> Result<Self> {
        Self::validate(&zeros, |i| i + 1, Path::new("<memory>"))?;
        Ok(Self { zeros })
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    /// The first `t` zeros as a new table.
    pub fn truncated(&self, t: usize) -> Self {
        Self { zeros: self.zeros[..t.min(self.zeros.len())].to_vec() }
    }

    /// Parses a plain-text table: one positive decimal per line, ascending,
    /// `#` comment lines and blank lines ignored.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut zeros = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let value: f64 = line.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line: idx + 1,
                message: format!("not a decimal number: {line:?}"),
            })?;
            zeros.push(value);
            lines.push(idx + 1);
        }
        Self::validate(&zeros, |i| lines[i], path)?;
        Ok(Self { zeros })
    }

    fn validate(zeros: &[f64], line_of: impl Fn(usize) -> usize, path: &Path) -> Result<()> {
        let fail = |i: usize, message: String| Error::Parse { path: path.to_owned(), line: line_of(i), message };
        for (i, &z) in zeros.iter().enumerate() {
            if !(z > 0.0) || !z.is_finite() {
                return Err(fail(i, format!("zero height must be positive, got {z}")));
            }
            if i > 0 && z <= zeros[i - 1] {
                return Err(fail(i, format!("heights must ascend: {z} follows {}", zeros[i - 1])));
            }
        }
        if let Some(&first) = zeros.first() {
            if (first - FIRST_ZERO).abs() > 1e-3 {
                return Err(fail(0, format!("first height {first} is not the first zeta zero {FIRST_ZERO}")));
            }
        }
        Ok(())
    }
}

/// Reads a zero table from disk.
pub fn load_zeros(path: impl AsRef<Path>) -> Result<ZetaZeroTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ZetaZeroTable::parse(&text, path)
}
