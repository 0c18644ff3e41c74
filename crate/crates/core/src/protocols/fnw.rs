//! The deformed AKLT family `(sin θ Z, cos θ|0><1|, cos θ|1><0|)` and the
//! Pauli walk that cancels failure outcomes on biased chains.

use std::f64::consts::FRAC_PI_2;

use super::alternating::{alternate, assemble, finish_pairs, measure, spin_mixing, OnFailure, Record};
use super::trace::ReductionTrace;
use super::{resolve_boundary, OutcomeChooser, RunOptions};
use crate::error::{Error, Result};
use crate::linalg::{op, r, rx, CVector, Mat};
use crate::measurement::MeasurementOp;
use crate::mps::Site;
use crate::oracle::verify_reduction;
use crate::tabular::{scalar_ratio, Side, Table};

/// `tan θ̂ = √2 tan θ`.
pub fn fnw_theta_hat(theta: f64) -> f64 {
    (std::f64::consts::SQRT_2 * theta.tan()).atan()
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("theta {theta} outside (0, pi/2)")));
    }
    Ok(())
}

/// `(sin θ Z, cos θ|0><1|, cos θ|1><0|)`.
pub fn fnw_raw_site(theta: f64) -> Vec<Mat> {
    let (s, c) = theta.sin_cos();
    vec![op("Z").scale(r(s)), Mat::ket_bra(0, 1, 2).scale(r(c)), Mat::ket_bra(1, 0, 2).scale(r(c))]
}

/// `n` raw columns with placeholder boundaries.
pub fn fnw_table(theta: f64, n: usize) -> Result<Table> {
    check_theta(theta)?;
    Table::uniform(&fnw_raw_site(theta), n, CVector::basis(0, 2), CVector::basis(0, 2))
}

fn canonical_entries(theta_hat: f64) -> Vec<Mat> {
    let (s, c) = theta_hat.sin_cos();
    vec![op("I").scale(r(s)), op("X").scale(r(c)), op("Z").scale(r(c))]
}

/// Rewrites raw columns into multiples of `(sin θ̂ I, cos θ̂ X, cos θ̂ Z)`.
fn transform_table(t: Table, theta: f64, rec: &mut Record) -> Result<Table> {
    let u = spin_mixing();
    let mut t = t;
    for k in 0..t.len() {
        t = t.physical_unitary(k, &u)?;
    }
    let z = op("Z");
    let t = t.pair_gauge(&z, &z)?.conjugate_all(&rx(FRAC_PI_2))?;
    let target = canonical_entries(fnw_theta_hat(theta));
    (0..t.len()).try_fold(t, |t, k| super::alternating::relabel(t, k, &target, rec))
}

/// The FNW site in the form `(sin θ̂ I, cos θ̂ X, cos θ̂ Z)` together with
/// `θ̂`. The rewrite is checked on four sites against the raw chain.
pub fn fnw_transform(theta: f64) -> Result<(Site, f64)> {
    check_theta(theta)?;
    let th = fnw_theta_hat(theta);
    let raw = fnw_table(theta, 4)?.with_boundaries(CVector::from_real(&[1.0, 0.37]), CVector::from_real(&[0.61, 1.0]))?;
    let fin = transform_table(raw.clone(), theta, &mut Record::default())?;
    let target = canonical_entries(th);
    let v = verify_reduction(&raw, &fin, &|_| target.clone(), None)?;
    if !v.pass {
        return Err(Error::Verification(format!("FNW rewrite failed: {v:?}")));
    }
    Ok((Site::new(target)?, th))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum WalkEnd {
    Cancelled,
    Exhausted,
    Cap,
}

/// Measures the columns after `col` in the computational basis and absorbs
/// them into the single-entry column `col` until it is a multiple of
/// `target`, the chain ends, or `cap` steps were taken.
pub(super) fn walk(
    mut t: Table,
    col: usize,
    target: &Mat,
    chooser: &mut dyn OutcomeChooser,
    cap: usize,
    rec: &mut Record,
) -> Result<(Table, usize, WalkEnd)> {
    if t.col(col).len() != 1 {
        return Err(Error::Precondition(format!("column {col} is not a single entry")));
    }
    let mut steps = 0;
    loop {
        if scalar_ratio(&t.col(col).mats()[0], target).is_some() {
            return Ok((t, steps, WalkEnd::Cancelled));
        }
        if col + 1 >= t.len() {
            return Ok((t, steps, WalkEnd::Exhausted));
        }
        if steps >= cap {
            return Ok((t, steps, WalkEnd::Cap));
        }
        let meas = MeasurementOp::computational(t.col(col + 1).len());
        let (next, _) = measure(t, col + 1, &meas, chooser, rec)?;
        t = next.absorb_single(col + 1, Side::Left)?;
        steps += 1;
    }
}

/// Cancels the pending single-entry column `col` against `target` by a
/// walk of computational-basis measurements on the following columns.
/// Returns the table, whose column `col` is then a multiple of `target`,
/// and the number of sites consumed.
pub fn pauli_walk_cancel(
    t: Table,
    col: usize,
    target: &Mat,
    chooser: &mut dyn OutcomeChooser,
    cap: usize,
) -> Result<(Table, usize)> {
    if cap == 0 {
        return Err(Error::InvalidParameter("walk cap must be at least 1".into()));
    }
    let (t, steps, end) = walk(t, col, target, chooser, cap, &mut Record::default())?;
    match end {
        WalkEnd::Cancelled => Ok((t, steps)),
        WalkEnd::Cap => Err(Error::CapExceeded { what: "pauli walk".into(), size: steps, cap }),
        WalkEnd::Exhausted => Err(Error::Precondition(format!("chain ended after {steps} walk steps"))),
    }
}

/// Alternating scheme on the FNW chain. Failures after a success are
/// cancelled by the Pauli walk; the surviving columns end as
/// `(sin θ̂ H, cos θ̂ HZ)`.
pub fn fnw_reduce(theta: f64, n: usize, opts: &RunOptions, chooser: &mut dyn OutcomeChooser) -> Result<ReductionTrace> {
    check_theta(theta)?;
    if n < 8 {
        return Err(Error::InvalidParameter(format!("chain length {n} < 8")));
    }
    let th = fnw_theta_hat(theta);
    let raw = fnw_table(theta, n)?;
    let (original, choice) = resolve_boundary(&raw, &opts.boundary, chooser)?;
    let mut rec = Record::default();
    let t = transform_table(original.clone(), theta, &mut rec)?;
    rec.byproducts.clear();
    let t = alternate(t, chooser, OnFailure::Walk { cap: opts.walk_cap }, &mut rec)?;
    let h = op("H");
    let (s, c) = th.sin_cos();
    let target = vec![h.scale(r(s)), (&h * &op("Z")).scale(r(c))];
    let fin = finish_pairs(t, &h, &Mat::identity(2), &target, &mut rec)?;
    let params = vec![("theta".into(), theta), ("theta_hat".into(), th), ("n".into(), n as f64)];
    assemble("fnw", params, original, choice, fin, target, rec, opts.verify)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{Sampled, Scripted};
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn theta_hat_formula() {
        assert!((fnw_theta_hat(FRAC_PI_4) - 2f64.sqrt().atan()).abs() < 1e-15);
        assert!((fnw_theta_hat(FRAC_PI_6) - (2f64.sqrt() / 3f64.sqrt()).atan()).abs() < 1e-15);
        assert!((fnw_theta_hat(FRAC_PI_2 - 1e-9) - FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn transform_verifies() {
        for th in [0.1, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 1.5] {
            let (site, hat) = fnw_transform(th).unwrap();
            assert!((hat - fnw_theta_hat(th)).abs() < 1e-15);
            assert_eq!(site.phys_dim(), 3);
        }
        assert!(fnw_transform(0.0).is_err());
        assert!(fnw_transform(FRAC_PI_2).is_err());
        assert!(fnw_transform(1.9).is_err());
    }

    #[test]
    fn walk_on_cluster_wire_two_steps() {
        // pending X, then two basis measurements on (H, HZ) columns
        let h = op("H");
        let hz = &h * &op("Z");
        let mut reached = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let cols = vec![vec![op("X")], vec![h.clone(), hz.clone()], vec![h.clone(), hz.clone()], vec![h.clone(), hz.clone()]];
                let t = Table::new(cols, CVector::from_real(&[1.0, 0.0]), CVector::from_real(&[1.0, 1.0])).unwrap();
                let mut rec = Record::default();
                let (_, steps, end) = walk(t, 0, &Mat::identity(2), &mut Scripted::new(&[a, b]), 2, &mut rec).unwrap();
                let p: f64 = rec.steps.iter().map(|s| s.prob).product();
                assert!((p - 0.25).abs() < 1e-12);
                if end == WalkEnd::Cancelled {
                    assert_eq!(steps, 2);
                    reached += p;
                }
            }
        }
        assert!((reached - 0.25).abs() < 1e-12);
    }

    #[test]
    fn walk_trivial_and_cap() {
        let t = Table::new(vec![vec![op("I").scale(r(0.3))], vec![op("I"), op("X")]], CVector::basis(0, 2), CVector::basis(0, 2)).unwrap();
        let (_, steps) = pauli_walk_cancel(t, 0, &Mat::identity(2), &mut Scripted::new(&[]), 1).unwrap();
        assert_eq!(steps, 0);
        let t = Table::new(vec![vec![op("Z")], vec![op("I"), op("X")], vec![op("I"), op("X")]], CVector::basis(0, 2), CVector::basis(0, 2)).unwrap();
        let r = pauli_walk_cancel(t, 0, &Mat::identity(2), &mut Scripted::new(&[0, 0]), 1);
        assert!(matches!(r, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn sampled_runs_verify_and_walk() {
        let mut walked = false;
        for seed in 0..12 {
            for th in [FRAC_PI_6, FRAC_PI_3] {
                let mut rng = crate::rng::trial(seed, "fnw", 0);
                let tr = fnw_reduce(th, 8, &RunOptions::default(), &mut Sampled(&mut rng)).unwrap();
                assert!(tr.passed(), "{}", tr.to_text());
                walked |= tr.walk_steps > 0;
            }
        }
        assert!(walked);
    }

    #[test]
    fn all_success_needs_no_walk() {
        let opts = RunOptions::fixed(CVector::from_real(&[1.0, 0.3]), CVector::from_real(&[0.2, 1.0]));
        let tr = fnw_reduce(FRAC_PI_4, 8, &opts, &mut Scripted::new(&[0; 8])).unwrap();
        assert_eq!(tr.walk_steps, 0);
        assert_eq!(tr.consumed, 0);
        assert!(tr.passed());
    }
}
