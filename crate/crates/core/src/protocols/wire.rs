//! Quantum wires with `d = δ = 2`: the filtering reduction to `(H, HZ)`
//! and rotations of the correlation space by adaptive measurements.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use super::alternating::{assemble, measure, relabel, Record};
use super::planner::{meets, plan_angles, rotation_of, PlanTarget};
use super::trace::ReductionTrace;
use super::{resolve_boundary, OutcomeChooser, RunOptions};
use crate::error::{Error, Result};
use crate::linalg::{c, op, r, rot_pi_xz, s_phi, CVector, Mat, ONE, ZERO};
use crate::measurement::{chi_basis, MeasurementOp};
use crate::tabular::{column_is_multiple, Side, Table};

/// Longest plan the wire protocols look for.
pub const MAX_PLAN: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WireForm {
    /// `(W, W S(φ)) / √2`
    Byproduct,
    /// `(sin γ W', cos γ W'Z)`
    Biased,
}

/// A wire given by a π-rotation axis angle in the XZ plane and either `φ`
/// (byproduct form) or `γ` (biased form).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireSpec {
    pub form: WireForm,
    pub axis: f64,
    pub param: f64,
}

impl WireSpec {
    pub fn biased(axis: f64, gamma: f64) -> Self {
        WireSpec { form: WireForm::Biased, axis, param: gamma }
    }

    pub fn byproduct(axis: f64, phi: f64) -> Self {
        WireSpec { form: WireForm::Byproduct, axis, param: phi }
    }

    pub fn entries(&self) -> Vec<Mat> {
        let w = rot_pi_xz(self.axis);
        match self.form {
            WireForm::Byproduct => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                vec![w.scale(r(h)), (&w * &s_phi(self.param)).scale(r(h))]
            }
            WireForm::Biased => {
                let (s, co) = self.param.sin_cos();
                vec![w.scale(r(s)), (&w * &op("Z")).scale(r(co))]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.axis.is_finite() || !self.param.is_finite() {
            return Err(Error::InvalidParameter("wire parameters must be finite".into()));
        }
        match self.form {
            WireForm::Byproduct if !(self.param > 0.0 && self.param < TAU) => {
                Err(Error::InvalidParameter(format!("phi {} outside (0, 2pi)", self.param)))
            }
            WireForm::Biased if !(self.param > 0.0 && self.param < FRAC_PI_2) => {
                Err(Error::InvalidParameter(format!("gamma {} outside (0, pi/2)", self.param)))
            }
            _ => Ok(()),
        }
    }
}

/// `n` wire columns with placeholder boundaries.
pub fn wire_table(spec: &WireSpec, n: usize) -> Result<Table> {
    spec.validate()?;
    Table::uniform(&spec.entries(), n, CVector::basis(0, 2), CVector::basis(0, 2))
}

/// Rewrites every column into `(sin γ W', cos γ W'Z)` with `γ ≤ π/4` by
/// recorded physical unitaries. Returns the table, `γ` and `W'`.
fn to_biased(t: Table, spec: &WireSpec) -> Result<(Table, f64, Mat)> {
    let mut t = t;
    let (mut gamma, mut wp) = match spec.form {
        WireForm::Biased => (spec.param, rot_pi_xz(spec.axis)),
        WireForm::Byproduct => {
            // H mixes (W, WS(φ)) into W(I ± S(φ))/2; the phase fixes the i.
            let u = &Mat::diag(&[ONE, c(0.0, -1.0)]) * &op("H");
            for k in 0..t.len() {
                t = t.physical_unitary(k, &u)?;
            }
            (FRAC_PI_2 - spec.param / 4.0, &rot_pi_xz(spec.axis) * &s_phi(spec.param / 2.0))
        }
    };
    if gamma > FRAC_PI_4 {
        let x = op("X");
        for k in 0..t.len() {
            t = t.physical_unitary(k, &x)?;
        }
        gamma = FRAC_PI_2 - gamma;
        wp = &wp * &op("Z");
    }
    let (s, co) = gamma.sin_cos();
    let expect = [wp.scale(r(s)), (&wp * &op("Z")).scale(r(co))];
    if let Some(bad) = t.cols().iter().position(|col| !column_is_multiple(col.mats(), &expect, 1e-9)) {
        return Err(Error::Verification(format!("column {bad} is not in biased form after conversion")));
    }
    let zc = rotation_of(&wp);
    if (zc[0][2].powi(2) + zc[1][2].powi(2)).sqrt() < 1e-6 {
        return Err(Error::Precondition("W' keeps the Z axis: the wire cannot rotate its correlation space".into()));
    }
    Ok((t, gamma, wp))
}

/// `A` with `(A, AZ)` proportional to a two-entry column.
fn left_factor(col: &[Mat]) -> Mat {
    let a = &col[0];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    a.scale(r(1.0 / det.norm().sqrt()))
}

/// Measures column `col` of an unbiased `(A, AZ)` column in the χ basis
/// with `χ = a/2` and absorbs the result forwards.
fn consume(t: Table, col: usize, a: f64, chooser: &mut dyn OutcomeChooser, rec: &mut Record) -> Result<Table> {
    let [p0, p1] = chi_basis(a / 2.0);
    let bra = |v: &CVector| -> Vec<_> { v.as_slice().iter().map(|z| z.conj()).collect() };
    let (b0, b1) = (bra(&p0), bra(&p1));
    let k0 = Mat::from_rows(&[&b0, &[ZERO, ZERO]])?;
    let k1 = Mat::from_rows(&[&[ZERO, ZERO], &b1])?;
    let meas = MeasurementOp::new("chi", vec![k0, k1], vec!["0".into(), "1".into()])?;
    let (t, _) = measure(t, col, &meas, chooser, rec)?;
    forward(t, col)
}

fn forward(t: Table, col: usize) -> Result<Table> {
    if col + 1 < t.len() {
        t.absorb_single(col, Side::Right)
    } else {
        t.absorb_boundary(col)
    }
}

/// Filtering reduction of a wire to `(H, HZ)`.
///
/// Each column is filtered; outcome 1 leaves a single entry that is pushed
/// into the next column and the column is retried. After outcome 0 the
/// column is `(A, AZ)`. It becomes an output if `H†A` is diagonal or
/// anti-diagonal (the first output can always be fixed at the boundary);
/// otherwise it is measured in a rotated basis to steer the following
/// columns.
pub fn wire_filter_reduce(
    spec: &WireSpec,
    n: usize,
    opts: &RunOptions,
    chooser: &mut dyn OutcomeChooser,
) -> Result<ReductionTrace> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("chain length {n} < 4")));
    }
    let raw = wire_table(spec, n)?;
    let (original, choice) = resolve_boundary(&raw, &opts.boundary, chooser)?;
    let mut rec = Record::default();
    let (mut t, gamma, wp) = to_biased(original.clone(), spec)?;
    let filter = (gamma.tan() < 1.0 - 1e-12).then(|| MeasurementOp::filter(gamma)).transpose()?;
    let h = op("H");
    let target = vec![h.clone(), &h * &op("Z")];
    let mut col = 0;
    let mut outputs = 0usize;
    while col < t.len() {
        if let Some(f) = &filter {
            let (next, k) = measure(t, col, f, chooser, &mut rec)?;
            t = next;
            if k == 1 {
                rec.retries += 1;
                t = forward(t, col)?;
                continue;
            }
        }
        let a = left_factor(t.col(col).mats());
        let u = &h.adjoint() * &a;
        if outputs == 0 {
            let m = &a * &h;
            t = t.gauge_left_boundary(&m, &m.inverse()?)?;
        } else if meets(&u, PlanTarget::ZAxis, 1e-10) {
            let d_inv = u.inverse()?;
            t = if col + 1 < t.len() { t.gauge_move(col, &d_inv, &u)? } else { t.gauge_right_boundary(&d_inv, &u)? };
        } else {
            let plan = plan_angles(&u, &wp, &wp, PlanTarget::ZAxis, MAX_PLAN)
                .ok_or_else(|| Error::Precondition("no rotation plan within the length limit".into()))?;
            t = consume(t, col, plan[0], chooser, &mut rec)?;
            continue;
        }
        t = relabel(t, col, &target, &mut rec)?;
        outputs += 1;
        col += 1;
    }
    let params = vec![("axis".into(), spec.axis), ("param".into(), spec.param), ("gamma".into(), gamma), ("n".into(), n as f64)];
    let name = match spec.form {
        WireForm::Biased => "wire-filter",
        WireForm::Byproduct => "wire-filter-byproduct",
    };
    assemble(name, params, original, choice, t, target, rec, opts.verify)
}

/// Probability that the filter succeeds on column `site`, by expanding the
/// wire under the mixed boundary.
pub fn filter_success_probability(spec: &WireSpec, n: usize, site: usize) -> Result<f64> {
    let raw = wire_table(spec, n)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let t = raw.with_boundaries(CVector::basis(i, 2), CVector::basis(j, 2))?;
            let (t, gamma, _) = to_biased(t, spec)?;
            let psi = t.expand()?;
            den += psi.norm_sqr();
            num += match gamma.tan() < 1.0 - 1e-12 {
                true => psi.apply_site(site, &MeasurementOp::filter(gamma)?.kraus()[0])?.norm_sqr(),
                false => psi.norm_sqr(),
            };
        }
    }
    Ok(num / den)
}

/// Applies `U` (up to a Pauli byproduct) to the correlation space of a
/// `(W, WZ)` wire by measuring columns `from, from+1, …`, each result
/// pushed into the next column. On return column `from` is
/// `(P W, P W Z)` with `P ∝ Q·U`, `Q` a Pauli that can be gauged into the
/// column before; the number of columns consumed is returned.
pub fn implement_rotation(
    t: Table,
    w: &Mat,
    u: &Mat,
    from: usize,
    chooser: &mut dyn OutcomeChooser,
) -> Result<(Table, usize)> {
    if u.dim() != 2 || !u.is_unitary(1e-9) {
        return Err(Error::NotUnitary(u.unitarity_defect()));
    }
    let wz = w * &op("Z");
    if from >= t.len() {
        return Err(Error::InvalidParameter(format!("column {from} out of range")));
    }
    let mut t = t;
    let mut used = 0;
    let mut rec = Record::default();
    let ud = u.adjoint();
    let w_inv = w.inverse()?;
    loop {
        let col = t.col(from).mats();
        if col.len() != 2 {
            return Err(Error::Precondition(format!("column {from} is not a two-entry wire column")));
        }
        let p = &left_factor(col) * &w_inv;
        if !column_is_multiple(col, &[&p * w, &p * &wz], 1e-9) {
            return Err(Error::Precondition(format!("column {from} is not of (W, WZ) form")));
        }
        let v = &p * &ud;
        if meets(&v, PlanTarget::Pauli, 1e-10) {
            return Ok((t, used));
        }
        if from + 1 >= t.len() {
            return Err(Error::Precondition(format!("wire ran out of sites after {used}")));
        }
        let plan = plan_angles(&(&p * w), w, &ud, PlanTarget::Pauli, MAX_PLAN)
            .ok_or_else(|| Error::Precondition("no rotation plan within the length limit".into()))?;
        t = consume(t, from, plan[0], chooser, &mut rec)?;
        used += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{Sampled, Scripted};
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    #[test]
    fn unbiased_wire_has_no_retries() {
        let spec = WireSpec::biased(0.9, FRAC_PI_4);
        for seed in 0..5 {
            let mut rng = crate::rng::trial(seed, "w", 0);
            let tr = wire_filter_reduce(&spec, 6, &RunOptions::default(), &mut Sampled(&mut rng)).unwrap();
            assert_eq!(tr.retries, 0);
            assert!(tr.passed(), "{}", tr.to_text());
        }
    }

    #[test]
    fn hadamard_wire_is_a_fixed_point() {
        let spec = WireSpec::biased(FRAC_PI_4, FRAC_PI_4);
        let opts = RunOptions::fixed(CVector::from_real(&[1.0, 0.0]), CVector::from_real(&[1.0, 1.0]));
        let tr = wire_filter_reduce(&spec, 5, &opts, &mut Scripted::new(&[])).unwrap();
        assert_eq!(tr.consumed, 0);
        assert!(tr.passed());
        let a = tr.original.expand().unwrap();
        let b = tr.final_table.expand().unwrap();
        assert!(crate::linalg::slices_equal_up_to_phase(a.amps(), b.amps(), 1e-12));
    }

    #[test]
    fn biased_and_byproduct_wires_verify() {
        let specs = [
            WireSpec::biased(FRAC_PI_3, FRAC_PI_6),
            WireSpec::biased(0.4, 1.2),
            WireSpec::byproduct(FRAC_PI_3, 1.0),
            WireSpec::byproduct(0.7, 4.0),
        ];
        for spec in specs {
            for seed in 0..6 {
                let mut rng = crate::rng::trial(seed, "wire", 0);
                let tr = wire_filter_reduce(&spec, 8, &RunOptions::default(), &mut Sampled(&mut rng)).unwrap();
                assert!(tr.passed(), "{spec:?}\n{}", tr.to_text());
            }
        }
    }

    #[test]
    fn rejected_wires() {
        assert!(wire_table(&WireSpec::byproduct(0.3, 0.0), 4).is_err());
        assert!(wire_table(&WireSpec::byproduct(0.3, TAU), 4).is_err());
        assert!(wire_table(&WireSpec::biased(0.3, 0.0), 4).is_err());
        let tr = wire_filter_reduce(&WireSpec::biased(0.0, 0.5), 4, &RunOptions::default(), &mut Scripted::new(&[0]));
        assert!(matches!(tr, Err(Error::Precondition(_))));
    }

    #[test]
    fn filter_probability_is_two_sin_squared() {
        let spec = WireSpec::biased(FRAC_PI_3, FRAC_PI_6);
        for site in 0..6 {
            let p = filter_success_probability(&spec, 6, site).unwrap();
            assert!((p - 0.5).abs() < 1e-12, "{p}");
        }
    }

    fn wire(w: &Mat, n: usize) -> Table {
        Table::uniform(&[w.clone(), w * &op("Z")], n, CVector::from_real(&[1.0, 0.2]), CVector::from_real(&[0.4, 1.0])).unwrap()
    }

    #[test]
    fn identity_rotation_uses_no_sites() {
        let w = rot_pi_xz(FRAC_PI_3);
        let (_, used) = implement_rotation(wire(&w, 4), &w, &Mat::identity(2), 0, &mut Scripted::new(&[])).unwrap();
        assert_eq!(used, 0);
        let (_, used) = implement_rotation(wire(&w, 4), &w, &op("Z"), 0, &mut Scripted::new(&[])).unwrap();
        assert_eq!(used, 0);
    }

    #[test]
    fn rotation_to_hadamard_form() {
        let w = rot_pi_xz(FRAC_PI_3);
        let u = &op("H") * &w.adjoint();
        let mut done = 0;
        for seed in 0..40 {
            let t = wire(&w, 14);
            let mut rng = crate::rng::trial(seed, "rot", 0);
            let (out, used) = match implement_rotation(t.clone(), &w, &u, 0, &mut Sampled(&mut rng)) {
                Ok(x) => x,
                Err(Error::Precondition(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(used > 0);
            done += 1;
            // column 0 is (QH, QHZ) for a Pauli Q
            let e = out.col(0).mats();
            let found = ["I", "X", "Y", "Z"].iter().any(|q| {
                let qh = &op(q) * &op("H");
                column_is_multiple(e, &[qh.clone(), &qh * &op("Z")], 1e-9)
            });
            assert!(found);
            let maps = out.local_maps();
            let mapped = crate::oracle::apply_local_maps(&t.expand().unwrap(), &maps).unwrap();
            let f = crate::linalg::fidelity(mapped.amps(), out.expand().unwrap().amps());
            assert!(f > 1.0 - 1e-9);
        }
        assert!(done >= 10, "{done}");
    }
}
