use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::bernstein::DegreeVector;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Snapshot pairs `(x_j, y_j)` with `y_j = φ(x_j)`, possibly noisy.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl DataSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Data("data set is empty".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Data(format!("{} inputs but {} outputs", x.len(), y.len())));
        }
        let m = x[0].len();
        if m == 0 {
            return Err(Error::Data("points have no coordinates".into()));
        }
        for (j, (a, b)) in x.iter().zip(&y).enumerate() {
            if a.len() != m || b.len() != m {
                return Err(Error::Data(format!("row {} has the wrong dimension", j + 1)));
            }
            if a.iter().chain(b).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {} has a non-finite value", j + 1)));
            }
        }
        let mut seen = HashSet::with_capacity(x.len());
        for (j, a) in x.iter().enumerate() {
            let key: Vec<u64> = a.iter().map(|v| (v + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::Data(format!("duplicate input point {a:?} at row {}", j + 1)));
            }
        }
        Ok(Self { x, y })
    }

    /// Pairs `(x, φ(x))` for every input.
    pub fn from_map(x: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let y = x.iter().map(|p| f(p)).collect();
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.y
    }

    /// Same inputs with replaced outputs.
    pub fn with_outputs(&self, y: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.x.clone(), y)
    }

    /// Smallest box holding every input and output.
    pub fn domain_box(&self) -> Result<BoxDomain> {
        let all: Vec<Vec<f64>> = self.x.iter().chain(&self.y).cloned().collect();
        let (lo, hi) = BoxDomain::bounding(&all).expect("non-empty");
        let hi = lo.iter().zip(hi).map(|(a, b)| if b > *a { b } else { a + 1.0 }).collect();
        BoxDomain::new(lo, hi)
    }

    pub fn check_degree(&self, degree: &DegreeVector) -> Result<()> {
        if degree.dim() != self.dim() {
            return Err(Error::Data(format!(
                "degree has {} axes but the data is {}-dimensional",
                degree.dim(),
                self.dim()
            )));
        }
        if degree.basis_size() != self.len() {
            return Err(Error::Data(format!(
                "degree {degree} needs {} pairs, data has {}",
                degree.basis_size(),
                self.len()
            )));
        }
        Ok(())
    }

    /// CSV with a header and columns `x1..xm, y1..ym`. Lines starting with
    /// `#` are skipped.
    pub fn from_reader(input: impl Read) -> Result<Self> {
        let mut header: Option<usize> = None;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (ln, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = t.split(',').map(str::trim).collect();
            let Some(cols) = header else {
                if cells.iter().any(|c| c.parse::<f64>().is_ok()) {
                    return Err(Error::Data("data file needs a header row".into()));
                }
                if cells.len() < 2 || !cells.len().is_multiple_of(2) {
                    return Err(Error::Data(format!(
                        "header has {} columns, expected 2m",
                        cells.len()
                    )));
                }
                header = Some(cells.len());
                continue;
            };
            if cells.len() != cols {
                return Err(Error::Data(format!(
                    "line {}: {} columns, expected {cols}",
                    ln + 1,
                    cells.len()
                )));
            }
            let v = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Data(format!("line {}: bad number `{c}`", ln + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            let m = cols / 2;
            x.push(v[..m].to_vec());
            y.push(v[m..].to_vec());
        }
        if header.is_none() {
            return Err(Error::Data("data file is empty".into()));
        }
        Self::new(x, y)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let m = self.dim();
        let names: Vec<String> = (1..=m)
            .map(|l| format!("x{l}"))
            .chain((1..=m).map(|l| format!("y{l}")))
            .collect();
        writeln!(out, "{}", names.join(","))?;
        for (a, b) in self.x.iter().zip(&self.y) {
            let row: Vec<String> = a.iter().chain(b).map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Reads a permutation file: one 1-based data row per line, in lattice
/// order. Returns 0-based indices. An optional non-numeric header is
/// skipped.
pub fn read_permutation(input: impl Read, n: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n);
    for (ln, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && ln == 0 => continue,
            Err(_) => return Err(Error::Data(format!("permutation line {}: bad index `{t}`", ln + 1))),
        }
    }
    validate_permutation(out.iter().map(|v| v.wrapping_sub(1)).collect(), n)
}

pub fn load_permutation(path: &Path, n: usize) -> Result<Vec<usize>> {
    read_permutation(std::fs::File::open(path)?, n)
}

pub fn write_permutation(perm: &[usize], mut out: impl Write) -> Result<()> {
    for p in perm {
        writeln!(out, "{}", p + 1)?;
    }
    Ok(())
}

pub(crate) fn validate_permutation(perm: Vec<usize>, n: usize) -> Result<Vec<usize>> {
    if perm.len() != n {
        return Err(Error::Data(format!("permutation has {} entries, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in &perm {
        if p >= n || seen[p] {
            return Err(Error::Data(format!("not a permutation of 1..{n}")));
        }
        seen[p] = true;
    }
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let d = DataSet::new(vec![vec![0.1, 0.2], vec![0.3, 0.4]], vec![vec![0.5, 0.6], vec![0.7, 1.0 / 3.0]]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = DataSet::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(DataSet::from_reader("0.1,0.2\n".as_bytes()).is_err());
        assert!(DataSet::from_reader("x1,y1\n0.1\n".as_bytes()).is_err());
        assert!(DataSet::from_reader("x1,y1\n0.1,0.2\n0.1,0.3\n".as_bytes()).is_err());
        assert!(DataSet::from_reader("x1,y1,z\n".as_bytes()).is_err());
    }

    #[test]
    fn degree_mismatch() {
        let d = DataSet::from_map(vec![vec![0.0], vec![0.5], vec![1.0]], |x| x.to_vec()).unwrap();
        assert!(d.check_degree(&DegreeVector::new(vec![2]).unwrap()).is_ok());
        assert!(d.check_degree(&DegreeVector::new(vec![3]).unwrap()).is_err());
    }

    #[test]
    fn permutation_files() {
        let p = read_permutation("pi\n2\n3\n1\n".as_bytes(), 3).unwrap();
        assert_eq!(p, vec![1, 2, 0]);
        assert!(read_permutation("1\n1\n2\n".as_bytes(), 3).is_err());
        assert!(read_permutation("0\n1\n2\n".as_bytes(), 3).is_err());
        let mut buf = Vec::new();
        write_permutation(&p, &mut buf).unwrap();
        assert_eq!(read_permutation(buf.as_slice(), 3).unwrap(), p);
    }
}
