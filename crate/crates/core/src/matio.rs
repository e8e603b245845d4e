//! Plain-text interchange format for solutions and diagnostic dumps.
//!
//! A document is a sequence of named entries:
//!
//! ```text
//! clsdoa-text v1
//! scalar m 6
//! scalar lambda 2.5e-3
//! vector support_theta 2
//! 0.1 0.2
//! cmatrix S_hat 2 1
//! 1.0,0.5
//! -0.25,0.0
//! ```
//!
//! Complex entries are written as `re,im` pairs, one matrix row per line.
//! Floats are printed with 17 significant digits so round-trips are exact.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::C64;

const MAGIC: &str = "clsdoa-text v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Scalar(f64),
    Vector(Vec<f64>),
    CMatrix(Array2<C64>),
}

/// Ordered collection of named entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TextDoc {
    entries: Vec<(String, Entry)>,
}

impl TextDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_scalar(&mut self, name: &str, v: f64) -> &mut Self {
        self.entries.push((name.to_string(), Entry::Scalar(v)));
        self
    }

    pub fn push_vector(&mut self, name: &str, v: &[f64]) -> &mut Self {
        self.entries
            .push((name.to_string(), Entry::Vector(v.to_vec())));
        self
    }

    pub fn push_cmatrix(&mut self, name: &str, m: &Array2<C64>) -> &mut Self {
        self.entries
            .push((name.to_string(), Entry::CMatrix(m.clone())));
        self
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        match self.get(name)? {
            Entry::Scalar(v) => Ok(*v),
            _ => Err(Error::Parse(format!("entry {name} is not a scalar"))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        match self.get(name)? {
            Entry::Vector(v) => Ok(v),
            _ => Err(Error::Parse(format!("entry {name} is not a vector"))),
        }
    }

    pub fn cmatrix(&self, name: &str) -> Result<&Array2<C64>> {
        match self.get(name)? {
            Entry::CMatrix(m) => Ok(m),
            _ => Err(Error::Parse(format!("entry {name} is not a complex matrix"))),
        }
    }

    fn get(&self, name: &str) -> Result<&Entry> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::Parse(format!("missing entry {name}")))
    }

    pub fn to_string(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (name, entry) in &self.entries {
            match entry {
                Entry::Scalar(v) => {
                    out.push_str(&format!("scalar {name} {v:.17e}\n"));
                }
                Entry::Vector(v) => {
                    out.push_str(&format!("vector {name} {}\n", v.len()));
                    let line: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
                Entry::CMatrix(m) => {
                    out.push_str(&format!("cmatrix {name} {} {}\n", m.nrows(), m.ncols()));
                    for row in m.rows() {
                        let line: Vec<String> = row
                            .iter()
                            .map(|z| format!("{:.17e},{:.17e}", z.re, z.im))
                            .collect();
                        out.push_str(&line.join(" "));
                        out.push('\n');
                    }
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(first) if first.trim() == MAGIC => {}
            other => {
                return Err(Error::Parse(format!(
                    "bad header {:?}, expected {MAGIC:?}",
                    other
                )))
            }
        }
        let mut doc = TextDoc::new();
        while let Some(line) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "scalar" => {
                    if fields.len() != 3 {
                        return Err(Error::Parse(format!("bad scalar line {line:?}")));
                    }
                    let v: f64 = fields[2]
                        .parse()
                        .map_err(|e| Error::Parse(format!("{line:?}: {e}")))?;
                    doc.push_scalar(fields[1], v);
                }
                "vector" => {
                    if fields.len() != 3 {
                        return Err(Error::Parse(format!("bad vector line {line:?}")));
                    }
                    let len: usize = fields[2]
                        .parse()
                        .map_err(|e| Error::Parse(format!("{line:?}: {e}")))?;
                    let data_line = lines
                        .next()
                        .ok_or_else(|| Error::Parse("truncated vector".into()))?;
                    let v: Vec<f64> = data_line
                        .split_whitespace()
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Parse(format!("vector data: {e}")))?;
                    if v.len() != len {
                        return Err(Error::Parse(format!(
                            "vector {} declared {len} entries, found {}",
                            fields[1],
                            v.len()
                        )));
                    }
                    doc.push_vector(fields[1], &v);
                }
                "cmatrix" => {
                    if fields.len() != 4 {
                        return Err(Error::Parse(format!("bad cmatrix line {line:?}")));
                    }
                    let rows: usize = fields[2]
                        .parse()
                        .map_err(|e| Error::Parse(format!("{line:?}: {e}")))?;
                    let cols: usize = fields[3]
                        .parse()
                        .map_err(|e| Error::Parse(format!("{line:?}: {e}")))?;
                    let mut m = Array2::<C64>::zeros((rows, cols));
                    for i in 0..rows {
                        let data_line = lines
                            .next()
                            .ok_or_else(|| Error::Parse("truncated cmatrix".into()))?;
                        let entries: Vec<&str> = data_line.split_whitespace().collect();
                        if entries.len() != cols {
                            return Err(Error::Parse(format!(
                                "cmatrix {} row {i}: expected {cols} entries, found {}",
                                fields[1],
                                entries.len()
                            )));
                        }
                        for (j, ent) in entries.iter().enumerate() {
                            let (re, im) = ent
                                .split_once(',')
                                .ok_or_else(|| Error::Parse(format!("bad entry {ent:?}")))?;
                            let re: f64 = re
                                .parse()
                                .map_err(|e| Error::Parse(format!("{ent:?}: {e}")))?;
                            let im: f64 = im
                                .parse()
                                .map_err(|e| Error::Parse(format!("{ent:?}: {e}")))?;
                            m[[i, j]] = Complex64::new(re, im);
                        }
                    }
                    doc.push_cmatrix(fields[1], &m);
                }
                other => return Err(Error::Parse(format!("unknown entry kind {other:?}"))),
            }
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn roundtrip_preserves_everything() {
        let mut doc = TextDoc::new();
        doc.push_scalar("m", 6.0)
            .push_scalar("lambda", 2.5e-3)
            .push_vector("support_theta", &[0.1, -0.2, 3.0e-9])
            .push_cmatrix(
                "S_hat",
                &array![
                    [Complex64::new(1.0, 0.5)],
                    [Complex64::new(-0.25, 1e-17)]
                ],
            );
        let text = doc.to_string();
        let parsed = TextDoc::parse(&text).unwrap();
        assert_eq!(doc, parsed);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(TextDoc::parse("not the magic\n").is_err());
        assert!(TextDoc::parse("clsdoa-text v1\nscalar x\n").is_err());
        assert!(TextDoc::parse("clsdoa-text v1\nvector v 3\n1.0 2.0\n").is_err());
    }
}
