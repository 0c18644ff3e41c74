//! Writes the sample input files under `data/`.
//!
//! `cargo run -p qreduce-core --example data_files -- data`

use std::path::PathBuf;

use qreduce::io::{to_json, LatticeFile, TableFile, WitnessFile};
use qreduce::linalg::CVector;
use qreduce::protocols::{aklt_table, canonicalize_aklt, AkltForm};
use qreduce::tabular::Witness;

fn main() -> qreduce::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let (l, r) = (CVector::from_real(&[1.0, 0.3]), CVector::from_real(&[0.2, 1.0]));
    let xyz = aklt_table(AkltForm::Pauli, 4)?.with_boundaries(l.clone(), r.clone())?;
    let ixz = aklt_table(AkltForm::Canonical, 4)?.with_boundaries(l, r)?;
    // the canonicalizing unitaries take (X,Y,Z) to (I,X,Z); their adjoints go back
    let w = canonicalize_aklt(xyz.clone())?.witness().expect("unitary canonicalization");
    let back = Witness { unitaries: w.unitaries.iter().map(|u| u.adjoint()).collect(), phase: w.phase.conj() };
    std::fs::write(dir.join("aklt_xyz_n4.json"), to_json(&TableFile::from_table(&xyz))?)?;
    std::fs::write(dir.join("aklt_ixz_n4.json"), to_json(&TableFile::from_table(&ixz))?)?;
    std::fs::write(dir.join("aklt_witness_n4.json"), to_json(&WitnessFile::from_witness(&back))?)?;
    let grid = |r, c| LatticeFile { grid: Some([r, c]), nodes: None, edges: None, legs: None, termination: Default::default() };
    std::fs::write(dir.join("grid2x2.json"), to_json(&grid(2, 2))?)?;
    std::fs::write(dir.join("grid2x3.json"), to_json(&grid(2, 3))?)?;
    Ok(())
}
