//! Reduction protocols for one-dimensional resources.
//!
//! Every protocol works on a [`Table`] by measuring columns left to right
//! and rewriting the result. The table keeps the local map of every site,
//! so a finished run can be checked against the original state with
//! [`crate::oracle::verify_reduction`].

mod alternating;
mod cost;
mod fnw;
mod planner;
mod trace;
mod wire;

pub use alternating::{
    aklt_table, alternating_reduce, canonicalize_aklt, family_axes, family_table, general_family_reduce, AkltForm,
    FamilyAxes,
};
pub use cost::{cost_stats, exact_alternating_cost, CostReport, CostSeries, Protocol};
pub use fnw::{fnw_raw_site, fnw_reduce, fnw_table, fnw_theta_hat, fnw_transform, pauli_walk_cancel};
pub use planner::{plan_angles, PlanTarget};
pub use trace::{fmt_num, ReductionTrace, Step};
pub use wire::{filter_success_probability, implement_rotation, wire_filter_reduce, wire_table, WireForm, WireSpec};

use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::measurement::sample_index;
use crate::rng::Rng;
use crate::tabular::Table;

/// Default cap on Pauli-walk length before a run is marked incomplete.
pub const WALK_CAP: usize = 64;

/// Picks measurement outcomes from unnormalized weights.
pub trait OutcomeChooser {
    /// Returns the chosen index and its normalized probability.
    fn choose(&mut self, weights: &[f64]) -> Result<(usize, f64)>;
}

/// Born-rule sampling from a seeded stream.
pub struct Sampled<'a>(pub &'a mut Rng);

impl OutcomeChooser for Sampled<'_> {
    fn choose(&mut self, weights: &[f64]) -> Result<(usize, f64)> {
        let u: f64 = self.0.gen();
        sample_index(weights, u)
    }
}

/// A fixed list of outcomes, consumed in order. Used to replay a given
/// outcome pattern; an outcome of probability zero is an error.
pub struct Scripted(pub VecDeque<usize>);

impl Scripted {
    pub fn new(outcomes: &[usize]) -> Self {
        Scripted(outcomes.iter().copied().collect())
    }
}

impl OutcomeChooser for Scripted {
    fn choose(&mut self, weights: &[f64]) -> Result<(usize, f64)> {
        let k = self.0.pop_front().ok_or_else(|| Error::Precondition("outcome script exhausted".into()))?;
        let total: f64 = weights.iter().sum();
        let p = weights.get(k).copied().unwrap_or(0.0) / total;
        if !(p > crate::measurement::PROB_FLOOR) {
            return Err(Error::Precondition(format!("scripted outcome {k} has probability {p:e}")));
        }
        Ok((k, p))
    }
}

/// Boundary condition of an open chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// Explicit boundary vectors.
    Fixed { left: CVector, right: CVector },
    /// Uniform mixture over the boundary states: each run first draws a
    /// pair of basis vectors with the Born weight of the resulting state.
    Mixed,
}

/// The boundary actually used by one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryChoice {
    Fixed,
    Mixed { left: usize, right: usize },
}

/// Options shared by every protocol run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub boundary: Boundary,
    pub verify: bool,
    pub walk_cap: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { boundary: Boundary::Mixed, verify: true, walk_cap: WALK_CAP }
    }
}

impl RunOptions {
    pub fn unverified() -> Self {
        RunOptions { verify: false, ..Default::default() }
    }

    pub fn fixed(left: CVector, right: CVector) -> Self {
        RunOptions { boundary: Boundary::Fixed { left, right }, ..Default::default() }
    }
}

/// Applies the boundary condition to a freshly built table.
pub fn resolve_boundary(
    t: &Table,
    boundary: &Boundary,
    chooser: &mut dyn OutcomeChooser,
) -> Result<(Table, BoundaryChoice)> {
    match boundary {
        Boundary::Fixed { left, right } => Ok((t.with_boundaries(left.clone(), right.clone())?, BoundaryChoice::Fixed)),
        Boundary::Mixed => {
            let d = t.bond_dim();
            let mut weights = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    weights.push(t.with_boundaries(CVector::basis(i, d), CVector::basis(j, d))?.norm_sqr());
                }
            }
            let (k, _) = chooser.choose(&weights)?;
            let (i, j) = (k / d, k % d);
            Ok((t.with_boundaries(CVector::basis(i, d), CVector::basis(j, d))?, BoundaryChoice::Mixed { left: i, right: j }))
        }
    }
}

/// The table a run started from once its boundary was fixed.
pub fn boundary_table(t: &Table, choice: &BoundaryChoice, boundary: &Boundary) -> Result<Table> {
    match (choice, boundary) {
        (BoundaryChoice::Fixed, Boundary::Fixed { left, right }) => t.with_boundaries(left.clone(), right.clone()),
        (BoundaryChoice::Mixed { left, right }, _) => {
            let d = t.bond_dim();
            t.with_boundaries(CVector::basis(*left, d), CVector::basis(*right, d))
        }
        _ => Err(Error::InvalidParameter("boundary choice does not match the boundary condition".into())),
    }
}
