//! Single-site measurements given by Kraus operators on the physical space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, r, CVector, Mat, C64, ONE, ZERO};

/// Tolerance for `Σ K†K = I`.
pub const KRAUS_TOL: f64 = 1e-9;

/// Outcomes whose probability falls below this are never sampled.
pub const PROB_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOp {
    pub name: String,
    kraus: Vec<Mat>,
    names: Vec<String>,
}

impl MeasurementOp {
    /// Checks completeness before accepting the operators.
    pub fn new(name: impl Into<String>, kraus: Vec<Mat>, names: Vec<String>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("measurement needs at least one Kraus operator".into()));
        }
        if kraus.len() != names.len() {
            return Err(Error::Shape(format!("{} Kraus operators but {} names", kraus.len(), names.len())));
        }
        let d = kraus[0].dim();
        if kraus.iter().any(|k| k.dim() != d) {
            return Err(Error::Shape("Kraus operators of different dimension".into()));
        }
        let mut sum = Mat::zeros(d);
        for k in &kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        let defect = (&sum - &Mat::identity(d)).norm_inf();
        if defect > KRAUS_TOL {
            return Err(Error::IncompleteKraus(defect));
        }
        Ok(MeasurementOp { name: name.into(), kraus, names })
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    pub fn kraus(&self) -> &[Mat] {
        &self.kraus
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    /// The trivial measurement with the single outcome `I`.
    pub fn identity(d: usize) -> Self {
        MeasurementOp { name: "id".into(), kraus: vec![Mat::identity(d)], names: vec!["id".into()] }
    }

    /// Projective measurement onto the computational basis.
    pub fn computational(d: usize) -> Self {
        let kraus = (0..d).map(|i| Mat::ket_bra(i, i, d)).collect();
        let names = (0..d).map(|i| i.to_string()).collect();
        MeasurementOp { name: "Zbasis".into(), kraus, names }
    }

    /// Projectors onto blocks of computational basis states. The blocks must
    /// partition `0..d`.
    pub fn blocks(name: &str, d: usize, blocks: &[&[usize]], names: &[&str]) -> Result<Self> {
        let kraus = blocks
            .iter()
            .map(|b| {
                let mut p = Mat::zeros(d);
                for &i in *b {
                    if i >= d {
                        return Err(Error::InvalidParameter(format!("level {i} out of range for d = {d}")));
                    }
                    p[(i, i)] = ONE;
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, kraus, names.iter().map(|s| s.to_string()).collect())
    }

    /// `{|0>,|1>}` versus `|2>`.
    pub fn n1() -> Self {
        Self::blocks("N1", 3, &[&[0, 1], &[2]], &["s", "f"]).expect("valid blocks")
    }

    /// `{|0>,|2>}` versus `|1>`.
    pub fn n2() -> Self {
        Self::blocks("N2", 3, &[&[0, 2], &[1]], &["s", "f"]).expect("valid blocks")
    }

    /// The filtering pair `M0 = |0><0| + tan γ |1><1|`,
    /// `M1 = √(1 − tan² γ) |1><1|`, for `γ ∈ (0, π/4]`.
    pub fn filter(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= std::f64::consts::FRAC_PI_4 + 1e-15) {
            return Err(Error::InvalidParameter(format!("filter angle {gamma} outside (0, pi/4]")));
        }
        let t = gamma.tan().min(1.0);
        let m0 = Mat::diag(&[ONE, r(t)]);
        let m1 = Mat::diag(&[ZERO, r((1.0 - t * t).max(0.0).sqrt())]);
        Self::new("filter", vec![m0, m1], vec!["0".into(), "1".into()])
    }

    /// Projective measurement in an orthonormal basis given as kets.
    pub fn basis(name: &str, kets: &[CVector]) -> Result<Self> {
        let kraus = kets.iter().map(|k| Mat::outer(k, k)).collect::<Result<Vec<_>>>()?;
        let names = (0..kets.len()).map(|i| i.to_string()).collect();
        Self::new(name, kraus, names)
    }
}

/// Equatorial-type qubit basis `φ0 = cos χ|0> + i sin χ|1>`,
/// `φ1 = sin χ|0> − i cos χ|1>`.
pub fn chi_basis(chi: f64) -> [CVector; 2] {
    let (s, co) = chi.sin_cos();
    [CVector::from_vec(vec![r(co), c(0.0, s)]), CVector::from_vec(vec![r(s), c(0.0, -co)])]
}

/// Samples an index from unnormalized weights, skipping entries below
/// [`PROB_FLOOR`] relative to the total. Returns the index and its
/// normalized probability.
pub fn sample_index(weights: &[f64], u: f64) -> Result<(usize, f64)> {
    let total: f64 = weights.iter().copied().filter(|w| w.is_finite() && *w > 0.0).sum();
    if !(total > 0.0) {
        return Err(Error::ProbabilityUnderflow);
    }
    let probs: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { w / total } else { 0.0 }).collect();
    let support: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] >= PROB_FLOOR).collect();
    if support.is_empty() {
        return Err(Error::ProbabilityUnderflow);
    }
    let mass: f64 = support.iter().map(|&i| probs[i]).sum();
    let target = u * mass;
    let mut acc = 0.0;
    for &i in &support {
        acc += probs[i];
        if target < acc {
            return Ok((i, probs[i]));
        }
    }
    let last = *support.last().expect("nonempty");
    Ok((last, probs[last]))
}

/// Coefficient-wise conjugate, i.e. the bra of a ket.
pub fn bra(v: &CVector) -> Vec<C64> {
    v.as_slice().iter().map(|z| z.conj()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn filter_is_complete_on_grid() {
        for i in 1..=50 {
            let g = FRAC_PI_4 * i as f64 / 50.0;
            let m = MeasurementOp::filter(g).unwrap();
            let k = m.kraus();
            let s = &(&k[0].adjoint() * &k[0]) + &(&k[1].adjoint() * &k[1]);
            assert!((&s - &Mat::identity(2)).norm_inf() < 1e-12);
        }
        assert!(MeasurementOp::filter(1.0).is_err());
        assert!(MeasurementOp::filter(0.0).is_err());
    }

    #[test]
    fn incomplete_set_rejected() {
        let k = vec![Mat::ket_bra(0, 0, 2)];
        assert!(matches!(MeasurementOp::new("x", k, vec!["0".into()]), Err(Error::IncompleteKraus(_))));
    }

    #[test]
    fn chi_basis_is_orthonormal() {
        for &chi in &[0.0, 0.3, 1.2, -2.0] {
            let [a, b] = chi_basis(chi);
            assert!((a.norm_sqr() - 1.0).abs() < 1e-15);
            assert!(a.inner(&b).norm() < 1e-15);
            MeasurementOp::basis("chi", &[a, b]).unwrap();
        }
    }

    #[test]
    fn sampling_skips_zero_weights() {
        assert_eq!(sample_index(&[0.0, 1.0], 0.0).unwrap().0, 1);
        assert_eq!(sample_index(&[1.0, 3.0], 0.3).unwrap(), (1, 0.75));
        assert!(sample_index(&[0.0, 0.0], 0.5).is_err());
    }
}
