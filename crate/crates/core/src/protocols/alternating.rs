//! The alternating N1/N2 scheme on AKLT-type chains and on the family
//! `(I, A, B)` of π-rotations.

use std::f64::consts::FRAC_PI_2;

use super::fnw::{walk, WalkEnd};
use super::trace::{Byproduct, ReductionTrace, Step};
use super::{resolve_boundary, OutcomeChooser, RunOptions};
use crate::error::{Error, Result};
use crate::linalg::{c, op, r, rot_pi_xz, ry, CVector, Mat, ONE, ZERO};
use crate::measurement::MeasurementOp;
use crate::tabular::{column_is_multiple, monomial_match, symbol, Side, Table};

/// The three LU-equivalent matrix triples accepted for the AKLT chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AkltForm {
    /// `(Z, √2|0><1|, √2|1><0|)`
    Spin,
    /// `(X, Y, Z)`
    Pauli,
    /// `(I, X, Z)`
    Canonical,
}

impl AkltForm {
    pub fn entries(self) -> Vec<Mat> {
        match self {
            AkltForm::Spin => {
                let s = std::f64::consts::SQRT_2;
                vec![op("Z"), Mat::ket_bra(0, 1, 2).scale(r(s)), Mat::ket_bra(1, 0, 2).scale(r(s))]
            }
            AkltForm::Pauli => vec![op("X"), op("Y"), op("Z")],
            AkltForm::Canonical => vec![op("I"), op("X"), op("Z")],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spin" => Ok(AkltForm::Spin),
            "pauli" | "xyz" => Ok(AkltForm::Pauli),
            "canonical" | "ixz" => Ok(AkltForm::Canonical),
            _ => Err(Error::InvalidParameter(format!("unknown AKLT form {s:?}"))),
        }
    }
}

/// `n` AKLT columns with placeholder boundaries `|0>`, `<0|`.
pub fn aklt_table(form: AkltForm, n: usize) -> Result<Table> {
    Table::uniform(&form.entries(), n, CVector::basis(0, 2), CVector::basis(0, 2))
}

/// Mixes the last two levels so that `√2|0><1|, √2|1><0|` become `X, Y`.
pub(crate) fn spin_mixing() -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_rows(&[&[ONE, ZERO, ZERO], &[ZERO, r(h), r(h)], &[ZERO, c(0.0, -h), c(0.0, h)]]).expect("3x3")
}

/// Brings every column to a multiple of `(I, X, Z)` by recorded physical
/// unitaries and gauges.
pub fn canonicalize_aklt(t: Table) -> Result<Table> {
    let target = AkltForm::Canonical.entries();
    if t.cols().iter().any(|c| c.len() != 3) || t.bond_dim() != 2 {
        return Err(Error::Precondition("AKLT columns must have three 2x2 entries".into()));
    }
    if let Some(t) = match_all(&t, &target)? {
        return Ok(t);
    }
    let mut t = t;
    if t.cols().iter().all(|c| column_is_multiple(c.mats(), &AkltForm::Spin.entries(), 1e-9)) {
        let u = spin_mixing();
        for k in 0..t.len() {
            t = t.physical_unitary(k, &u)?;
        }
    }
    let y = op("Y");
    let t = t.pair_gauge(&y, &y)?;
    match_all(&t, &target)?.ok_or_else(|| Error::Precondition("columns are not LU-equivalent to (I, X, Z)".into()))
}

fn match_all(t: &Table, target: &[Mat]) -> Result<Option<Table>> {
    let mut us = Vec::with_capacity(t.len());
    for c in t.cols() {
        match monomial_match(c.mats(), target) {
            Some(u) => us.push(u),
            None => return Ok(None),
        }
    }
    let mut t = t.clone();
    for (k, u) in us.iter().enumerate() {
        t = t.physical_unitary(k, u)?;
    }
    Ok(Some(t))
}

/// The π-rotations of the family and the matrices derived from them.
#[derive(Clone, Debug)]
pub struct FamilyAxes {
    pub theta_a: f64,
    pub theta_b: f64,
    pub a: Mat,
    pub b: Mat,
    /// `C ∝ A + B`, the π-rotation about `n_a + n_b`.
    pub c: Mat,
    /// Gauge taking `B` to `Z`.
    pub v: Mat,
    /// `V C V†`, equal to `sin θ X + cos θ Z` with `θ = (θ_a − θ_b)/2`.
    pub c_prime: Mat,
}

impl FamilyAxes {
    /// Target tuple `(C', C'Z)`.
    pub fn target(&self) -> Vec<Mat> {
        vec![self.c_prime.clone(), &self.c_prime * &op("Z")]
    }
}

/// Builds `A`, `B`, `C` for axis angles `θ_a`, `θ_b` in the XZ plane and
/// checks `C² = I`, `AC = CB`.
pub fn family_axes(theta_a: f64, theta_b: f64) -> Result<FamilyAxes> {
    if !theta_a.is_finite() || !theta_b.is_finite() {
        return Err(Error::InvalidParameter("axis angles must be finite".into()));
    }
    let na = [theta_a.sin(), theta_a.cos()];
    let nb = [theta_b.sin(), theta_b.cos()];
    let sum = ((na[0] + nb[0]).powi(2) + (na[1] + nb[1]).powi(2)).sqrt();
    let diff = ((na[0] - nb[0]).powi(2) + (na[1] - nb[1]).powi(2)).sqrt();
    if sum < 1e-6 {
        return Err(Error::Precondition("antipodal axes: A + B vanishes".into()));
    }
    if diff < 1e-6 {
        return Err(Error::Precondition("degenerate axes: A = B".into()));
    }
    let a = rot_pi_xz(theta_a);
    let b = rot_pi_xz(theta_b);
    let cm = (&a + &b).scale(r(1.0 / sum));
    let id = Mat::identity(2);
    let dev = (&(&cm * &cm) - &id).norm_inf().max((&(&a * &cm) - &(&cm * &b)).norm_inf());
    if dev > 1e-9 {
        return Err(Error::Verification(format!("C^2 = I or AC = CB violated by {dev:e}")));
    }
    let v = ry(-theta_b);
    let c_prime = &(&v * &cm) * &v.adjoint();
    Ok(FamilyAxes { theta_a, theta_b, a, b, c: cm, v, c_prime })
}

/// `n` columns `(I, A, B)` with placeholder boundaries.
pub fn family_table(axes: &FamilyAxes, n: usize) -> Result<Table> {
    Table::uniform(&[Mat::identity(2), axes.a.clone(), axes.b.clone()], n, CVector::basis(0, 2), CVector::basis(0, 2))
}

/// What to do with a failure outcome that follows an earlier success.
pub(super) enum OnFailure {
    /// Absorb into the previous column and swap its two entries back.
    Swap,
    /// Cancel the single entry by a computational-basis walk first.
    Walk { cap: usize },
}

/// Records shared by the protocol loops.
#[derive(Default)]
pub(super) struct Record {
    pub steps: Vec<Step>,
    pub byproducts: Vec<Byproduct>,
    pub walk_steps: usize,
    pub retries: usize,
    pub incomplete: bool,
}

/// Measures one column and applies the chosen Kraus operator.
pub(super) fn measure(
    t: Table,
    col: usize,
    meas: &MeasurementOp,
    chooser: &mut dyn OutcomeChooser,
    rec: &mut Record,
) -> Result<(Table, usize)> {
    let w = t.outcome_weights(col, meas.kraus())?;
    let (k, p) = chooser.choose(&w)?;
    rec.steps.push(Step { site: t.col(col).site(), meas: meas.name.clone(), outcome: meas.names()[k].clone(), prob: p });
    let t = t.kraus(col, &meas.kraus()[k])?;
    Ok((t, k))
}

/// Runs N1/N2 alternately over a table whose columns are `(I, A, B)` up to
/// one common scale. On return the columns alternate `(I, A)`, `(I, B)`.
pub(super) fn alternate(
    mut t: Table,
    chooser: &mut dyn OutcomeChooser,
    mode: OnFailure,
    rec: &mut Record,
) -> Result<Table> {
    let n1 = MeasurementOp::n1();
    let n2 = MeasurementOp::n2();
    let swap = op("X");
    let mut col = 0;
    let mut use_n1 = true;
    let mut last_success: Option<usize> = None;
    while col < t.len() {
        let meas = if use_n1 { &n1 } else { &n2 };
        let (next, k) = measure(t, col, meas, chooser, rec)?;
        t = next;
        if k == 0 {
            last_success = Some(col);
            col += 1;
            use_n1 = !use_n1;
            continue;
        }
        let Some(prev) = last_success else {
            t = t.absorb_boundary(col)?;
            continue;
        };
        match mode {
            OnFailure::Swap => {
                t = t.absorb_single(col, Side::Left)?.physical_unitary(prev, &swap)?;
                rec.byproducts.push(Byproduct { site: t.col(prev).site(), op: "X".into() });
            }
            OnFailure::Walk { cap } => {
                let (next, used, end) = walk(t, col, &Mat::identity(2), chooser, cap, rec)?;
                t = next;
                rec.walk_steps += used;
                match end {
                    WalkEnd::Cancelled => t = t.absorb_single(col, Side::Left)?,
                    WalkEnd::Exhausted => t = t.absorb_boundary(col)?,
                    WalkEnd::Cap => {
                        // keep walking past the cap; the run is flagged
                        rec.incomplete = true;
                        let (next, used, end) = walk(t, col, &Mat::identity(2), chooser, usize::MAX, rec)?;
                        rec.walk_steps += used;
                        t = match end {
                            WalkEnd::Cancelled => next.absorb_single(col, Side::Left)?,
                            _ => next.absorb_boundary(col)?,
                        };
                    }
                }
            }
        }
    }
    Ok(t)
}

/// Gauges `C` on alternate bonds, conjugates with `V` and relabels every
/// column onto `target`.
pub(super) fn finish_pairs(t: Table, cm: &Mat, v: &Mat, target: &[Mat], rec: &mut Record) -> Result<Table> {
    let c_inv = cm.inverse()?;
    let mut t = t.pair_gauge(cm, &c_inv)?;
    if (v - &Mat::identity(2)).norm_inf() > 0.0 {
        t = t.conjugate_all(v)?;
    }
    for k in 0..t.len() {
        t = relabel(t, k, target, rec)?;
    }
    Ok(t)
}

/// `match_column` that records non-trivial relabellings.
pub(super) fn relabel(t: Table, col: usize, target: &[Mat], rec: &mut Record) -> Result<Table> {
    let u = monomial_match(t.col(col).mats(), target).ok_or_else(|| {
        Error::Verification(format!("column {col} ({}) does not match the target", t.col(col).mats().iter().map(symbol).collect::<Vec<_>>().join(",")))
    })?;
    if !crate::linalg::proportional(u.as_slice(), Mat::identity(u.dim()).as_slice(), 1e-12) {
        rec.byproducts.push(Byproduct { site: t.col(col).site(), op: symbol(&u) });
    }
    t.physical_unitary(col, &u)
}

fn new_trace(protocol: &str, params: Vec<(String, f64)>, n: usize, original: Table, target: Vec<Mat>) -> ReductionTrace {
    ReductionTrace {
        protocol: protocol.into(),
        params,
        seed: None,
        n,
        boundary: super::BoundaryChoice::Fixed,
        steps: Vec::new(),
        surviving: Vec::new(),
        consumed: 0,
        byproducts: Vec::new(),
        walk_steps: 0,
        retries: 0,
        incomplete: false,
        final_table: original.clone(),
        original,
        target,
        verdict: None,
    }
}

pub(super) fn assemble(
    protocol: &str,
    params: Vec<(String, f64)>,
    original: Table,
    boundary: super::BoundaryChoice,
    fin: Table,
    target: Vec<Mat>,
    rec: Record,
    verify: bool,
) -> Result<ReductionTrace> {
    let mut tr = new_trace(protocol, params, original.n_sites(), original, target);
    tr.boundary = boundary;
    tr.final_table = fin;
    tr.steps = rec.steps;
    tr.byproducts = rec.byproducts;
    tr.walk_steps = rec.walk_steps;
    tr.retries = rec.retries;
    tr.incomplete = rec.incomplete;
    tr.finish(verify)
}

/// Alternating scheme on an AKLT chain given in any accepted form. The
/// surviving columns end as `(H, HZ)`.
pub fn alternating_reduce(
    form: AkltForm,
    n: usize,
    opts: &RunOptions,
    chooser: &mut dyn OutcomeChooser,
) -> Result<ReductionTrace> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("chain length {n} < 4")));
    }
    let raw = aklt_table(form, n)?;
    let (original, choice) = resolve_boundary(&raw, &opts.boundary, chooser)?;
    let axes = family_axes(FRAC_PI_2, 0.0)?;
    let mut rec = Record::default();
    let t = canonicalize_aklt(original.clone())?;
    let t = alternate(t, chooser, OnFailure::Swap, &mut rec)?;
    let target = axes.target();
    let fin = finish_pairs(t, &axes.c, &axes.v, &target, &mut rec)?;
    assemble("aklt-alternating", vec![("n".into(), n as f64)], original, choice, fin, target, rec, opts.verify)
}

/// Alternating scheme on `(I, A, B)` with `A`, `B` the π-rotations about
/// XZ-plane axes at angles `θ_a`, `θ_b`. The surviving columns end as
/// `(C', C'Z)`.
pub fn general_family_reduce(
    theta_a: f64,
    theta_b: f64,
    n: usize,
    opts: &RunOptions,
    chooser: &mut dyn OutcomeChooser,
) -> Result<ReductionTrace> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("chain length {n} < 4")));
    }
    let axes = family_axes(theta_a, theta_b)?;
    let raw = family_table(&axes, n)?;
    let (original, choice) = resolve_boundary(&raw, &opts.boundary, chooser)?;
    let mut rec = Record::default();
    let t = alternate(original.clone(), chooser, OnFailure::Swap, &mut rec)?;
    let target = axes.target();
    let fin = finish_pairs(t, &axes.c, &axes.v, &target, &mut rec)?;
    let params = vec![("theta_a".into(), theta_a), ("theta_b".into(), theta_b), ("n".into(), n as f64)];
    assemble("family", params, original, choice, fin, target, rec, opts.verify)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVector;
    use crate::protocols::{Sampled, Scripted};
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    #[test]
    fn every_form_canonicalizes() {
        for form in [AkltForm::Spin, AkltForm::Pauli, AkltForm::Canonical] {
            for n in [3, 4] {
                let t = aklt_table(form, n).unwrap().with_boundaries(CVector::from_real(&[1.0, 0.4]), CVector::from_real(&[0.3, 1.0])).unwrap();
                let c = canonicalize_aklt(t.clone()).unwrap();
                for col in c.cols() {
                    assert!(column_is_multiple(col.mats(), &AkltForm::Canonical.entries(), 1e-12));
                }
                let v = crate::oracle::verify_reduction(&t, &c, &|_| AkltForm::Canonical.entries(), None).unwrap();
                assert!(v.pass, "{form:?} n={n}: {v:?}");
            }
        }
    }

    #[test]
    fn family_identities() {
        let ax = family_axes(FRAC_PI_2, 0.0).unwrap();
        assert!(crate::linalg::proportional(ax.c.as_slice(), op("H").as_slice(), 1e-12));
        assert!(crate::linalg::proportional(ax.c_prime.as_slice(), rot_pi_xz(FRAC_PI_4).as_slice(), 1e-12));
        let ax = family_axes(FRAC_PI_3, 0.2).unwrap();
        assert!((&ax.c_prime - &rot_pi_xz((FRAC_PI_3 - 0.2) / 2.0)).norm_inf() < 1e-12);
        assert!(matches!(family_axes(0.3, 0.3), Err(Error::Precondition(_))));
        assert!(matches!(family_axes(0.3, 0.3 + std::f64::consts::PI), Err(Error::Precondition(_))));
    }

    #[test]
    fn replayed_outcome_pattern() {
        // N1 s, N2 f, N2 s, N1 f, N1 s, N2 s
        let opts = RunOptions::fixed(CVector::from_real(&[1.0, 0.0]), CVector::from_real(&[1.0, 1.0]));
        let mut rec = Record::default();
        let raw = aklt_table(AkltForm::Canonical, 6).unwrap();
        let (t, _) = resolve_boundary(&raw, &opts.boundary, &mut Scripted::new(&[])).unwrap();
        let t = alternate(t, &mut Scripted::new(&[0, 1, 0, 1, 0, 0]), OnFailure::Swap, &mut rec).unwrap();
        assert_eq!(t.render(), "I I I I\nX Z X Z\n");
        let tr = alternating_reduce(AkltForm::Canonical, 6, &opts, &mut Scripted::new(&[0, 1, 0, 1, 0, 0])).unwrap();
        assert_eq!(tr.surviving, vec![0, 2, 4, 5]);
        assert_eq!(tr.consumed, 2);
        assert!(tr.passed());
        assert_eq!(tr.final_table.render(), "H  H  H  H\nHZ HZ HZ HZ\n");
    }

    #[test]
    fn all_success_keeps_every_site() {
        let tr = alternating_reduce(AkltForm::Pauli, 5, &RunOptions::fixed(CVector::from_real(&[1.0, 0.2]), CVector::from_real(&[0.5, 1.0])), &mut Scripted::new(&[0; 5])).unwrap();
        assert_eq!(tr.consumed, 0);
        assert!(tr.passed());
    }

    #[test]
    fn sampled_runs_verify() {
        for seed in 0..10 {
            let mut rng = crate::rng::trial(seed, "aklt", 0);
            let tr = alternating_reduce(AkltForm::Spin, 8, &RunOptions::default(), &mut Sampled(&mut rng)).unwrap();
            assert!(tr.passed(), "{}", tr.to_text());
            let mut rng = crate::rng::trial(seed, "family", 0);
            let tr = general_family_reduce(FRAC_PI_3, 0.0, 8, &RunOptions::default(), &mut Sampled(&mut rng)).unwrap();
            assert!(tr.passed(), "{}", tr.to_text());
        }
    }

    #[test]
    fn short_chains_rejected() {
        assert!(alternating_reduce(AkltForm::Canonical, 3, &RunOptions::default(), &mut Scripted::new(&[])).is_err());
    }
}
