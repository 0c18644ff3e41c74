//! Matrix product states in the convention
//!
//! ```text
//! |Ψ> = Σ_x <R| A_n[x_n] ⋯ A_1[x_1] |L> |x_1 ⋯ x_n>
//! ```
//!
//! `|L>` is a column vector acted on by site 1 first. `<R|` is stored as its
//! coefficient row, so `right = [1, 1]` means `<0| + <1|`; no conjugation is
//! ever applied to it. Full state vectors index outcomes with site 1 as the
//! most significant digit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Amplitudes, CVector, Mat, RectMat, C64, ZERO};
use crate::measurement::{sample_index, MeasurementOp, PROB_FLOOR};

/// Default cap on the number of amplitudes produced by [`Mps::expand`].
pub const EXPAND_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    mats: Vec<Mat>,
    labels: Vec<String>,
}

impl Site {
    pub fn new(mats: Vec<Mat>) -> Result<Self> {
        let labels = (0..mats.len()).map(|i| i.to_string()).collect();
        Self::with_labels(mats, labels)
    }

    pub fn with_labels(mats: Vec<Mat>, labels: Vec<String>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::Shape("a site needs at least one matrix".into()));
        }
        if labels.len() != mats.len() {
            return Err(Error::Shape("one label per matrix is required".into()));
        }
        let delta = mats[0].dim();
        if mats.iter().any(|m| m.dim() != delta) {
            return Err(Error::Shape("all matrices of a site must share the bond dimension".into()));
        }
        Ok(Site { mats, labels })
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn phys_dim(&self) -> usize {
        self.mats.len()
    }

    pub fn bond_dim(&self) -> usize {
        self.mats[0].dim()
    }

    /// `Σ_x A[x]† A[x]`.
    pub fn gram(&self) -> Mat {
        self.mats.iter().fold(Mat::zeros(self.bond_dim()), |acc, a| &acc + &(&a.adjoint() * a))
    }

    pub fn scale(&self, s: f64) -> Site {
        Site { mats: self.mats.iter().map(|m| m.scale(C64::new(s, 0.0))).collect(), labels: self.labels.clone() }
    }

    /// Entries `B_k = Σ_j K_kj A_j` for a map with `rows` outputs.
    pub fn mapped(&self, map: &RectMat) -> Result<Site> {
        if map.cols() != self.phys_dim() {
            return Err(Error::Shape(format!("map takes {} levels, site has {}", map.cols(), self.phys_dim())));
        }
        let mats = (0..map.rows())
            .map(|k| combine(map.row_slice(k), &self.mats))
            .collect::<Vec<_>>();
        Site::new(mats)
    }
}

/// `Σ_j c_j M_j`.
pub fn combine(coeffs: &[C64], mats: &[Mat]) -> Mat {
    let mut acc = Mat::zeros(mats[0].dim());
    for (cj, m) in coeffs.iter().zip(mats) {
        if *cj != ZERO {
            acc = &acc + &m.scale(*cj);
        }
    }
    acc
}

/// True iff `Σ_x A[x]† A[x] = I` within `tol`.
pub fn check_normalized(s: &Site, tol: f64) -> bool {
    (&s.gram() - &Mat::identity(s.bond_dim())).norm_inf() <= tol
}

/// Rescales a site whose Gram sum is `c·I` so that it becomes `I`.
pub fn normalize_site(s: &Site) -> Result<Site> {
    let g = s.gram();
    let d = s.bond_dim();
    let c = g.trace().re / d as f64;
    if !(c > 0.0) || (&g - &Mat::identity(d).scale(C64::new(c, 0.0))).norm_inf() > 1e-9 * c.max(1.0) {
        return Err(Error::Precondition("sum of A†A is not proportional to the identity".into()));
    }
    Ok(s.scale(1.0 / c.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mps {
    sites: Vec<Site>,
    left: CVector,
    right: CVector,
}

impl Mps {
    pub fn new(sites: Vec<Site>, left: CVector, right: CVector) -> Result<Self> {
        let delta = left.dim();
        if right.dim() != delta {
            return Err(Error::Shape(format!("boundary dimensions {} and {}", delta, right.dim())));
        }
        if let Some((i, s)) = sites.iter().enumerate().find(|(_, s)| s.bond_dim() != delta) {
            return Err(Error::Shape(format!("site {} has bond dimension {}, expected {}", i + 1, s.bond_dim(), delta)));
        }
        Ok(Mps { sites, left, right })
    }

    /// `n` copies of one site.
    pub fn uniform(site: &Site, n: usize, left: CVector, right: CVector) -> Result<Self> {
        Self::new(vec![site.clone(); n], left, right)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn left(&self) -> &CVector {
        &self.left
    }

    pub fn right(&self) -> &CVector {
        &self.right
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dim(&self) -> usize {
        self.left.dim()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(Site::phys_dim).collect()
    }

    pub fn with_boundaries(&self, left: CVector, right: CVector) -> Result<Self> {
        Self::new(self.sites.clone(), left, right)
    }

    pub fn replace_site(&self, i: usize, site: Site) -> Result<Self> {
        let mut sites = self.sites.clone();
        sites[i] = site;
        Self::new(sites, self.left.clone(), self.right.clone())
    }

    /// Full state vector with the default size cap.
    pub fn expand(&self) -> Result<StateVector> {
        self.expand_capped(EXPAND_CAP)
    }

    pub fn expand_capped(&self, cap: usize) -> Result<StateVector> {
        let dims = self.phys_dims();
        let size = checked_size(&dims, cap)?;
        let delta = self.bond_dim();
        // Vectors A_k[x_k]⋯A_1[x_1]|L> for all prefixes, site 1 most significant.
        let mut layer: Vec<C64> = self.left.as_slice().to_vec();
        for site in &self.sites {
            let d = site.phys_dim();
            let mut next = Vec::with_capacity(layer.len() * d);
            for v in layer.chunks_exact(delta) {
                for a in site.mats() {
                    for i in 0..delta {
                        let row = &a.as_slice()[i * delta..(i + 1) * delta];
                        next.push(row.iter().zip(v).map(|(x, y)| x * y).sum());
                    }
                }
            }
            layer = next;
        }
        let r = self.right.as_slice();
        let amps: Vec<C64> = layer.chunks_exact(delta).map(|v| v.iter().zip(r).map(|(x, y)| x * y).sum()).collect();
        debug_assert_eq!(amps.len(), size);
        Ok(StateVector::new(amps, dims))
    }

    /// `Σ_x A[x] ρ A[x]†` applied site by site from `|L><L|`; returns the
    /// density after site `upto` (exclusive).
    fn left_density(&self, upto: usize) -> Mat {
        let mut rho = Mat::outer(&self.left, &self.left).expect("same dim");
        for site in &self.sites[..upto] {
            rho = push_density(site.mats(), &rho);
        }
        rho
    }

    /// `Σ_ij R_i ρ_ij R̄_j` for the final density.
    fn close(&self, rho: &Mat) -> f64 {
        let r = self.right.as_slice();
        let d = rho.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += r[i] * rho[(i, j)] * r[j].conj();
            }
        }
        acc.re
    }

    /// `‖Ψ‖²` by transfer-matrix contraction.
    pub fn norm_sqr(&self) -> f64 {
        self.close(&self.left_density(self.len()))
    }

    /// Unnormalized weights `‖(K_m on site i) Ψ‖²` for every outcome, by
    /// transfer-matrix contraction.
    pub fn outcome_weights(&self, site_index: usize, meas: &MeasurementOp) -> Result<Vec<f64>> {
        self.check_site(site_index, meas)?;
        let rho = self.left_density(site_index);
        let mut weights = Vec::with_capacity(meas.len());
        for k in meas.kraus() {
            let image = self.sites[site_index].mapped(&RectMat::from_square(k))?;
            let mut r = push_density(image.mats(), &rho);
            for site in &self.sites[site_index + 1..] {
                r = push_density(site.mats(), &r);
            }
            weights.push(self.close(&r).max(0.0));
        }
        Ok(weights)
    }

    /// The same weights computed from the expanded state vector; used as an
    /// oracle.
    pub fn outcome_weights_expanded(&self, site_index: usize, meas: &MeasurementOp) -> Result<Vec<f64>> {
        self.check_site(site_index, meas)?;
        let psi = self.expand()?;
        meas.kraus()
            .iter()
            .map(|k| Ok(psi.apply_site(site_index, k)?.norm_sqr()))
            .collect()
    }

    fn check_site(&self, site_index: usize, meas: &MeasurementOp) -> Result<()> {
        if site_index >= self.len() {
            return Err(Error::InvalidParameter(format!("site {} out of range (n = {})", site_index, self.len())));
        }
        if meas.dim() != self.sites[site_index].phys_dim() {
            return Err(Error::Shape(format!(
                "measurement acts on d = {}, site has d = {}",
                meas.dim(),
                self.sites[site_index].phys_dim()
            )));
        }
        Ok(())
    }

    /// Posterior after outcome `m`: the site's matrices are replaced by the
    /// Kraus-image combinations `B_k = Σ_j K_kj A_j`.
    pub fn post_measurement(&self, site_index: usize, meas: &MeasurementOp, m: usize) -> Result<Mps> {
        self.check_site(site_index, meas)?;
        let k = meas.kraus().get(m).ok_or_else(|| Error::InvalidParameter(format!("no outcome {m}")))?;
        let image = self.sites[site_index].mapped(&RectMat::from_square(k))?;
        self.replace_site(site_index, image)
    }
}

fn push_density(mats: &[Mat], rho: &Mat) -> Mat {
    mats.iter().fold(Mat::zeros(rho.dim()), |acc, a| &acc + &(&(a * rho) * &a.adjoint()))
}

/// Samples an outcome of `meas` on one site with Born probabilities.
///
/// Returns the outcome index, the posterior MPS (unnormalized), and the
/// outcome probability.
pub fn born_measure<R: Rng + ?Sized>(
    m: &Mps,
    site_index: usize,
    meas: &MeasurementOp,
    rng: &mut R,
) -> Result<(usize, Mps, f64)> {
    let weights = m.outcome_weights(site_index, meas)?;
    let total: f64 = weights.iter().sum();
    if !(total > PROB_FLOOR * m.norm_sqr().max(f64::MIN_POSITIVE)) {
        return Err(Error::ProbabilityUnderflow);
    }
    let (k, p) = sample_index(&weights, rng.gen::<f64>())?;
    Ok((k, m.post_measurement(site_index, meas, k)?, p))
}

pub(crate) fn checked_size(dims: &[usize], cap: usize) -> Result<usize> {
    let mut size: usize = 1;
    for &d in dims {
        size = size.checked_mul(d).filter(|&s| s <= cap).ok_or_else(|| Error::CapExceeded {
            what: "state vector size".into(),
            size: dims.iter().fold(1usize, |a, &d| a.saturating_mul(d)),
            cap,
        })?;
    }
    Ok(size)
}

/// Amplitudes over outcome strings `x_1 ⋯ x_n`, site 1 most significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>, dims: Vec<usize>) -> Self {
        assert_eq!(amps.len(), dims.iter().product::<usize>(), "amplitude count does not match dims");
        StateVector { amps, dims }
    }

    /// The empty product: a single amplitude 1.
    pub fn scalar(z: C64) -> Self {
        StateVector { amps: vec![z], dims: Vec::new() }
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// True when every amplitude is exactly or numerically zero.
    pub fn is_zero(&self) -> bool {
        self.norm_sqr() <= 1e-300
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        StateVector { amps: self.amps.iter().map(|z| z / n).collect(), dims: self.dims.clone() }
    }

    /// Amplitude of a digit string.
    pub fn get(&self, digits: &[usize]) -> C64 {
        assert_eq!(digits.len(), self.dims.len());
        let mut idx = 0;
        for (x, d) in digits.iter().zip(&self.dims) {
            idx = idx * d + x;
        }
        self.amps[idx]
    }

    /// Applies a square operator on one site.
    pub fn apply_site(&self, site: usize, op: &Mat) -> Result<StateVector> {
        self.apply_site_map(site, &RectMat::from_square(op))
    }

    /// Applies a rectangular map `out × d` on one site, changing its
    /// dimension to `out`.
    pub fn apply_site_map(&self, site: usize, map: &RectMat) -> Result<StateVector> {
        if site >= self.dims.len() {
            return Err(Error::InvalidParameter(format!("site {site} out of range")));
        }
        let d = self.dims[site];
        if map.cols() != d {
            return Err(Error::Shape(format!("map acts on {} levels, site has {}", map.cols(), d)));
        }
        let out = map.rows();
        let inner: usize = self.dims[site + 1..].iter().product();
        let outer: usize = self.dims[..site].iter().product();
        let mut amps = vec![ZERO; outer * out * inner];
        for o in 0..outer {
            for j in 0..d {
                let src = &self.amps[(o * d + j) * inner..(o * d + j + 1) * inner];
                for k in 0..out {
                    let c = map[(k, j)];
                    if c == ZERO {
                        continue;
                    }
                    let dst = &mut amps[(o * out + k) * inner..(o * out + k + 1) * inner];
                    for (t, s) in dst.iter_mut().zip(src) {
                        *t += c * s;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[site] = out;
        Ok(StateVector { amps, dims })
    }

    /// Removes sites of dimension 1 from the shape (amplitudes unchanged).
    pub fn squeeze(&self) -> StateVector {
        StateVector { amps: self.amps.clone(), dims: self.dims.iter().copied().filter(|&d| d != 1).collect() }
    }
}

impl Amplitudes for StateVector {
    fn amplitudes(&self) -> &[C64] {
        &self.amps
    }
    fn shape(&self) -> Vec<usize> {
        self.dims.clone()
    }
}
