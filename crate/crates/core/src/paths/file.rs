//! Matrix path files.
//!
//! ```text
//! dim <n> samples <m> interval <a> <b>
//! <re>,<im> <re>,<im> ...        (m blocks of n*n entries, row-major)
//! ```
//!
//! Tokens are whitespace-separated; line breaks carry no meaning. Samples are
//! taken at uniform parameters over `[a, b]` and joined piecewise-linearly.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::OperatorPath;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operator::HermitianOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct PathFile {
    pub dim: usize,
    pub start: f64,
    pub end: f64,
    pub samples: Vec<CMatrix>,
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some((start, &self.text[start..self.pos]))
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or(Error::Ingestion {
            offset: self.text.len(),
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let (offset, tok) = self.expect(kw)?;
        if tok == kw {
            Ok(())
        } else {
            Err(Error::Ingestion {
                offset,
                message: format!("expected `{kw}`, found `{tok}`"),
            })
        }
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<(usize, T)> {
        let (offset, tok) = self.expect(what)?;
        tok.parse().map(|v| (offset, v)).map_err(|_| Error::Ingestion {
            offset,
            message: format!("invalid {what} `{tok}`"),
        })
    }
}

fn parse_entry(offset: usize, tok: &str) -> Result<Complex64> {
    let bad = || Error::Ingestion {
        offset,
        message: format!("invalid complex entry `{tok}`, expected `re,im`"),
    };
    let (re, im) = tok.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Parses a matrix path file; errors carry the byte offset of the offending
/// token.
pub fn parse_path_file(text: &str) -> Result<PathFile> {
    let mut tokens = Tokens { text, pos: 0 };
    tokens.keyword("dim")?;
    let (off, dim): (usize, usize) = tokens.number("dimension")?;
    if dim == 0 {
        return Err(Error::Ingestion {
            offset: off,
            message: "dimension must be positive".into(),
        });
    }
    tokens.keyword("samples")?;
    let (off, count): (usize, usize) = tokens.number("sample count")?;
    if count == 0 {
        return Err(Error::Ingestion {
            offset: off,
            message: "sample count must be positive".into(),
        });
    }
    tokens.keyword("interval")?;
    let (_, start): (usize, f64) = tokens.number("interval start")?;
    let (off, end): (usize, f64) = tokens.number("interval end")?;
    if !(start.is_finite() && end.is_finite() && start < end) {
        return Err(Error::Ingestion {
            offset: off,
            message: format!("invalid interval [{start}, {end}]"),
        });
    }

    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let mut m = CMatrix::zeros(dim, dim);
        let mut block_offset = None;
        for i in 0..dim {
            for j in 0..dim {
                let (offset, tok) = tokens.expect(&format!("entry ({i},{j}) of sample {k}"))?;
                block_offset.get_or_insert(offset);
                m[(i, j)] = parse_entry(offset, tok)?;
            }
        }
        if let Err(e) = HermitianOperator::new(m.clone()) {
            return Err(Error::Ingestion {
                offset: block_offset.unwrap_or(0),
                message: format!("sample {k}: {e}"),
            });
        }
        samples.push(m);
    }
    if let Some((offset, tok)) = tokens.next() {
        return Err(Error::Ingestion {
            offset,
            message: format!("trailing token `{tok}` after {count} samples"),
        });
    }
    Ok(PathFile {
        dim,
        start,
        end,
        samples,
    })
}

impl PathFile {
    pub fn into_path(self) -> Result<OperatorPath> {
        let knots = self
            .samples
            .into_iter()
            .map(HermitianOperator::new)
            .collect::<Result<Vec<_>>>()?;
        OperatorPath::piecewise_linear(self.start, self.end, knots)
    }
}

/// Renders samples in the matrix path file format with 17 significant digits.
pub fn write_path_file(start: f64, end: f64, samples: &[CMatrix]) -> String {
    let dim = samples.first().map_or(0, |m| m.nrows());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "dim {dim} samples {} interval {start:.16e} {end:.16e}",
        samples.len()
    );
    for m in samples {
        for i in 0..dim {
            let row: Vec<String> = (0..dim)
                .map(|j| format!("{:.16e},{:.16e}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}
