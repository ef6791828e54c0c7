//! Small helpers shared by the text formats (datasets, regressor banks, trees).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

pub(crate) struct LineReader<R> {
    inner: std::io::Lines<R>,
    source: String,
    line: usize,
}

impl<R: BufRead> LineReader<R> {
    pub(crate) fn new(input: R, source: &str) -> Self {
        LineReader {
            inner: input.lines(),
            source: source.to_string(),
            line: 0,
        }
    }

    /// Next line with its 1-based number, or `None` at end of input.
    pub(crate) fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line += 1;
                Ok(Some((self.line, l)))
            }
            Some(Err(e)) => Err(Error::parse(&self.source, self.line + 1, e.to_string())),
        }
    }

    pub(crate) fn next_required(&mut self) -> Result<(usize, String)> {
        self.next_line()?
            .ok_or_else(|| Error::parse(&self.source, self.line + 1, "unexpected end of input"))
    }

    /// Fails if anything other than blank lines remains.
    pub(crate) fn expect_end(&mut self) -> Result<()> {
        while let Some((n, l)) = self.next_line()? {
            if !l.trim().is_empty() {
                return Err(Error::parse(&self.source, n, "trailing content"));
            }
        }
        Ok(())
    }
}

pub(crate) fn parse_f64(s: &str, source: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(source, line, format!("invalid number '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(source, line, format!("non-finite number '{s}'")));
    }
    Ok(v)
}

pub(crate) fn parse_usize(s: &str, source: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(source, line, format!("invalid integer '{s}'")))
}

/// Parses `index:value` tokens into a vector of dimension `dim`.
pub(crate) fn parse_pairs<'a>(
    tokens: impl Iterator<Item = &'a str>,
    dim: usize,
    source: &str,
    line: usize,
) -> Result<SparseVector> {
    let mut pairs = Vec::new();
    for tok in tokens {
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(source, line, format!("expected index:value, got '{tok}'")))?;
        let i = parse_usize(i, source, line)?;
        if i >= dim {
            return Err(Error::parse(
                source,
                line,
                format!("feature {i} out of range for dimension {dim}"),
            ));
        }
        pairs.push((i as u32, parse_f64(v, source, line)?));
    }
    SparseVector::from_pairs(dim, pairs).map_err(|e| Error::parse(source, line, e.to_string()))
}

pub(crate) fn read_sparse_pairs<'a>(
    tokens: impl Iterator<Item = &'a str>,
    dim: usize,
    nnz: usize,
    source: &str,
    line: usize,
) -> Result<SparseVector> {
    let v = parse_pairs(tokens, dim, source, line)?;
    if v.nnz() != nnz {
        return Err(Error::parse(
            source,
            line,
            format!("expected {nnz} entries, found {}", v.nnz()),
        ));
    }
    Ok(v)
}

/// Writes ` index:value` for every stored entry, values in shortest round-trip form.
pub(crate) fn write_sparse_pairs(out: &mut impl Write, v: &SparseVector) -> std::io::Result<()> {
    for (i, x) in v.iter() {
        write!(out, " {i}:{x:e}")?;
    }
    Ok(())
}
