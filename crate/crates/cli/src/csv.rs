//! Deterministic CSV output: a `#` comment block, one header line, then
//! data rows. Reals carry 17 significant digits.

use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Real(f64),
    Int(i64),
    Text(&'a str),
}

impl From<f64> for Cell<'_> {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell<'_> {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell<'_> {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl<'a> From<&'a str> for Cell<'a> {
    fn from(x: &'a str) -> Self {
        Cell::Text(x)
    }
}

pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    /// Writes `comments` (one `# ` line each, multi-line strings split)
    /// followed by the header.
    pub fn new(mut out: W, comments: &str, header: &[&str]) -> io::Result<Self> {
        for line in comments.lines() {
            if line.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out, columns: header.len() })
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) -> io::Result<()> {
        if cells.len() != self.columns {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("row has {} cells, header has {}", cells.len(), self.columns),
            ));
        }
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            match c {
                Cell::Real(x) => line.push_str(&format_real(*x)),
                Cell::Int(n) => line.push_str(&n.to_string()),
                Cell::Text(s) => line.push_str(s),
            }
        }
        writeln!(self.out, "{line}")
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(-7.0), "-7.0000000000000000e0");
        assert_eq!(format_real(f64::NAN), "NaN");
        let back: f64 = format_real(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn layout() {
        let mut w = CsvWriter::new(Vec::new(), "kappa = 1\n\nseed = 2", &["t", "n", "basin"]).unwrap();
        w.row(&[0.5.into(), 3usize.into(), "lower".into()]).unwrap();
        assert!(w.row(&[0.5.into()]).is_err());
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(text, "# kappa = 1\n#\n# seed = 2\nt,n,basin\n5.0000000000000000e-1,3,lower\n");
    }
}
