//! JSON files for tables, witnesses and lattices.
//!
//! Matrices are written as arrays of rows whose entries are real numbers or
//! `[re, im]` pairs. On input a matrix may also be a word over
//! `I, X, Y, Z, H` such as `"HZ"` (the product in the order written). Table
//! files list matrices as printed in the tabular form, left to right.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, pauli, CVector, Mat, C64};
use crate::peps::{Edge, Lattice, Leg, Termination};
use crate::tabular::{Table, Witness};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Re(f64),
    Cx([f64; 2]),
}

impl Num {
    pub fn value(self) -> C64 {
        match self {
            Num::Re(x) => c(x, 0.0),
            Num::Cx([re, im]) => c(re, im),
        }
    }

    pub fn from_c64(z: C64) -> Self {
        if z.im == 0.0 {
            Num::Re(z.re)
        } else {
            Num::Cx([z.re, z.im])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatSpec {
    Word(String),
    Rows(Vec<Vec<Num>>),
}

impl MatSpec {
    pub fn to_mat(&self) -> Result<Mat> {
        match self {
            MatSpec::Word(w) => word(w),
            MatSpec::Rows(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Parse("matrix rows must form a square".into()));
                }
                Mat::from_vec(rows.iter().flatten().map(|n| n.value()).collect())
            }
        }
    }

    pub fn from_mat(m: &Mat) -> Self {
        let d = m.dim();
        MatSpec::Rows((0..d).map(|i| (0..d).map(|j| Num::from_c64(m[(i, j)])).collect()).collect())
    }
}

/// Product of named single-qubit operators, e.g. `"HZ"`.
pub fn word(w: &str) -> Result<Mat> {
    if w.is_empty() {
        return Err(Error::Parse("empty operator word".into()));
    }
    let mut m = Mat::identity(2);
    for ch in w.chars() {
        m = &m * &pauli(&ch.to_string())?;
    }
    Ok(m)
}

fn vector(v: &[Num]) -> CVector {
    CVector::from_vec(v.iter().map(|n| n.value()).collect())
}

fn nums(v: &CVector) -> Vec<Num> {
    v.as_slice().iter().map(|&z| Num::from_c64(z)).collect()
}

/// Either per-site columns or one column repeated `n` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Vec<MatSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<Vec<MatSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub left: Vec<Num>,
    pub right: Vec<Num>,
}

impl TableFile {
    pub fn to_table(&self) -> Result<Table> {
        let cols: Vec<Vec<MatSpec>> = match (&self.sites, &self.site, self.n) {
            (Some(s), None, None) => s.clone(),
            (None, Some(s), Some(n)) => vec![s.clone(); n],
            _ => return Err(Error::Parse("give either `sites`, or `site` together with `n`".into())),
        };
        let cols = cols.iter().map(|c| c.iter().map(MatSpec::to_mat).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        Table::new(cols, vector(&self.left), vector(&self.right))
    }

    pub fn from_table(t: &Table) -> Self {
        TableFile {
            sites: Some(t.cols().iter().map(|c| c.mats().iter().map(MatSpec::from_mat).collect()).collect()),
            site: None,
            n: None,
            left: nums(t.left()),
            right: nums(t.right()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub unitaries: Vec<MatSpec>,
    #[serde(default = "unit_phase")]
    pub phase: Num,
}

fn unit_phase() -> Num {
    Num::Re(1.0)
}

impl WitnessFile {
    pub fn to_witness(&self) -> Result<Witness> {
        let w = Witness { unitaries: self.unitaries.iter().map(MatSpec::to_mat).collect::<Result<Vec<_>>>()?, phase: self.phase.value() };
        w.check()?;
        Ok(w)
    }

    pub fn from_witness(w: &Witness) -> Self {
        WitnessFile { unitaries: w.unitaries.iter().map(MatSpec::from_mat).collect(), phase: Num::from_c64(w.phase) }
    }
}

/// A grid shorthand or an explicit node/edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Edge>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legs: Option<Vec<[Leg; 3]>>,
    #[serde(default)]
    pub termination: Termination,
}

impl LatticeFile {
    pub fn to_lattice(&self) -> Result<Lattice> {
        match (self.grid, self.nodes, &self.edges, &self.legs) {
            (Some([r, c]), None, None, None) => Lattice::grid(r, c),
            (None, Some(n), Some(e), None) => Lattice::new(n, e.clone()),
            (None, Some(n), Some(e), Some(l)) => Lattice::with_legs(n, e.clone(), l.clone()),
            _ => Err(Error::Parse("give either `grid` or `nodes` with `edges` (and optional `legs`)".into())),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn read_table(path: &Path) -> Result<Table> {
    read_json::<TableFile>(path)?.to_table()
}

pub fn read_witness(path: &Path) -> Result<Witness> {
    read_json::<WitnessFile>(path)?.to_witness()
}

pub fn read_lattice(path: &Path) -> Result<(Lattice, Termination)> {
    let f: LatticeFile = read_json(path)?;
    Ok((f.to_lattice()?, f.termination))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::op;

    #[test]
    fn words_and_rows() {
        assert_eq!(word("HZ").unwrap(), &op("H") * &op("Z"));
        assert!(word("Q").is_err());
        let m: MatSpec = serde_json::from_str("[[0, [0, -1]], [[0, 1], 0]]").unwrap();
        assert_eq!(m.to_mat().unwrap(), op("Y"));
        let bad: MatSpec = serde_json::from_str("[[1, 0]]").unwrap();
        assert!(bad.to_mat().is_err());
    }

    #[test]
    fn table_round_trip() {
        let f: TableFile = serde_json::from_str(r#"{"site": ["H", "HZ"], "n": 3, "left": [1, 0], "right": [1, 1]}"#).unwrap();
        let t = f.to_table().unwrap();
        assert_eq!(t.len(), 3);
        let back = TableFile::from_table(&t);
        let t2: TableFile = serde_json::from_str(&to_json(&back).unwrap()).unwrap();
        assert_eq!(t2.to_table().unwrap().expand().unwrap(), t.expand().unwrap());
        let both: TableFile = serde_json::from_str(r#"{"site": ["I"], "sites": [["I"]], "left": [1], "right": [1]}"#).unwrap();
        assert!(both.to_table().is_err());
    }

    #[test]
    fn lattice_files() {
        let g: LatticeFile = serde_json::from_str(r#"{"grid": [2, 3]}"#).unwrap();
        assert_eq!(g.to_lattice().unwrap().nodes, 6);
        assert_eq!(g.termination, Termination::Plus);
        let e: LatticeFile = serde_json::from_str(
            r#"{"nodes": 2, "edges": [{"a": 0, "b": 1, "dir": "down"}],
                "legs": [[{"edge": 0}, "dangling", "dangling"], ["dangling", {"edge": 0}, "dangling"]]}"#,
        )
        .unwrap();
        let l = e.to_lattice().unwrap();
        assert_eq!(l.neighbour(1, 1), Some(0));
    }

    #[test]
    fn witness_rejects_non_unitary() {
        let w: WitnessFile = serde_json::from_str(r#"{"unitaries": [[[2, 0], [0, 1]]]}"#).unwrap();
        assert!(w.to_witness().is_err());
    }
}
