//! Brute-force checks of rewritten tables against the states they came
//! from.
//!
//! A protocol run turns an original table into a final one by local maps
//! (measurements, relabellings) and state-preserving rewrites. Applying the
//! recorded local maps to the expanded original state must give a vector
//! proportional to the expansion of the final table.

use crate::error::{Error, Result};
use crate::linalg::{fidelity, Mat, RectMat};
use crate::mps::{checked_size, Mps, StateVector, EXPAND_CAP};
use crate::tabular::{column_is_multiple, Table};

/// Applies one map per site, shrinking sites first to keep the
/// intermediate vectors small.
pub fn apply_local_maps(psi: &StateVector, maps: &[RectMat]) -> Result<StateVector> {
    if maps.len() != psi.dims().len() {
        return Err(Error::Shape(format!("{} maps for {} sites", maps.len(), psi.dims().len())));
    }
    let mut order: Vec<usize> = (0..maps.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = maps[a].rows() as f64 / maps[a].cols() as f64;
        let rb = maps[b].rows() as f64 / maps[b].cols() as f64;
        ra.total_cmp(&rb).then(a.cmp(&b))
    });
    let mut out = psi.clone();
    for k in order {
        out = out.apply_site_map(k, &maps[k])?;
    }
    Ok(out.squeeze())
}

/// Expansion of the original table with every recorded local map applied.
///
/// When the original state is small enough it is expanded first and the
/// maps act on the full vector. Otherwise the maps are folded into the
/// site tensors before expanding; the two routes agree by multilinearity.
pub fn mapped_original(original: &Table, maps: &[RectMat], cached: Option<&StateVector>) -> Result<StateVector> {
    if let Some(psi) = cached {
        return apply_local_maps(psi, maps);
    }
    let dims = original.phys_dims();
    if checked_size(&dims, EXPAND_CAP).is_ok() {
        return apply_local_maps(&original.expand()?, maps);
    }
    let m = original.to_mps()?;
    let sites = m
        .sites()
        .iter()
        .zip(maps)
        .map(|(s, map)| {
            // Site entries are transposed tabular entries; a linear map on
            // the physical index commutes with the transpose.
            s.mapped(map)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mps::new(sites, m.left().clone(), m.right().clone())?.expand()?.squeeze())
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Verdict {
    /// Fidelity between the final table and the mapped original state.
    pub fidelity_original: f64,
    /// Fidelity between the final table and the directly built target.
    pub fidelity_target: f64,
    /// Every surviving column is a multiple of the target tuple.
    pub form_ok: bool,
    pub pass: bool,
}

pub const VERIFY_TOL: f64 = 1e-9;

/// Checks a protocol result: the final table must describe the original
/// state after the recorded local maps, and must equal the target tuple on
/// every surviving column. `target` gives the tuple for each column.
pub fn verify_reduction(
    original: &Table,
    fin: &Table,
    target: &dyn Fn(usize) -> Vec<Mat>,
    cached: Option<&StateVector>,
) -> Result<Verdict> {
    let maps = fin.local_maps();
    let mapped = mapped_original(original, &maps, cached)?;
    let got = fin.expand()?;
    if mapped.dims() != got.dims() {
        return Err(Error::Shape(format!("mapped original {:?} vs final {:?}", mapped.dims(), got.dims())));
    }
    let fidelity_original = fidelity(mapped.amps(), got.amps());
    let cols: Vec<Vec<Mat>> = (0..fin.len()).map(target).collect();
    let form_ok = fin.cols().iter().zip(&cols).all(|(c, t)| column_is_multiple(c.mats(), t, 1e-9));
    let direct = Table::new(cols, fin.left().clone(), fin.right().clone())?;
    let fidelity_target = fidelity(direct.expand()?.amps(), got.amps());
    let zero = mapped.is_zero() || got.is_zero();
    let pass = !zero
        && fidelity_original >= 1.0 - VERIFY_TOL
        && fidelity_target >= 1.0 - VERIFY_TOL
        && form_ok;
    Ok(Verdict { fidelity_original, fidelity_target, form_ok, pass })
}
