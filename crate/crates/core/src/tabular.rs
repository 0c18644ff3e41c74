//! Tabular form of an MPS and its rewrite rules.
//!
//! A table lists one column per site; column `k` holds the matrices
//! `T_k[x]` and the amplitude of `x_1 ⋯ x_n` is the left-to-right product
//!
//! ```text
//! l · T_1[x_1] T_2[x_2] ⋯ T_n[x_n] · r
//! ```
//!
//! with `l` a row vector and `r` a column vector. Reading a table in this
//! order is what makes "multiply M to the right of the left column" and
//! "absorb a single entry into the previous column" preserve the state.
//! [`Mps`] uses the opposite order, so `Table::to_mps` transposes every
//! entry: `A_k[x] = T_k[x]ᵀ`, `|L> = lᵀ`, `<R| = rᵀ`. This is the only place
//! the two conventions meet.
//!
//! Every column remembers which original site it came from and the local
//! map (a `d_now × d_orig` matrix) that the physical rewrites have applied
//! to it. Absorbed columns keep their `1 × d_orig` map in `retired`. The
//! oracle uses these maps to check a rewritten table against the original.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{op, proportional, CVector, Mat, RectMat, C64, ONE, PHASE_TOL};
use crate::mps::{combine, Mps, Site, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    mats: Vec<Mat>,
    labels: Vec<String>,
    site: usize,
    map: RectMat,
}

impl Column {
    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of the original site this column came from.
    pub fn site(&self) -> usize {
        self.site
    }

    /// Accumulated local map, `d_now × d_orig`.
    pub fn map(&self) -> &RectMat {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// One applied rewrite, with everything needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Rewrite {
    Gauge { col: usize, m: Mat, m_inv: Mat },
    GaugeLeftBoundary { m: Mat, m_inv: Mat },
    GaugeRightBoundary { m: Mat, m_inv: Mat },
    PhysicalUnitary { col: usize, u: Mat },
    Kraus { col: usize, k: Mat },
    ProjectDelete { col: usize, kept: Vec<usize> },
    Absorb { col: usize, into: Side },
    AbsorbBoundary { col: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    cols: Vec<Column>,
    left: CVector,
    right: CVector,
    retired: Vec<(usize, RectMat)>,
    log: Vec<Rewrite>,
    n_sites: usize,
}

fn check_inverse(m: &Mat, m_inv: &Mat) -> Result<()> {
    if m.dim() != m_inv.dim() {
        return Err(Error::Shape("M and M_inv differ in dimension".into()));
    }
    let dev = (&(m * m_inv) - &Mat::identity(m.dim())).norm_inf();
    if dev > PHASE_TOL {
        return Err(Error::NotInvertible(dev));
    }
    Ok(())
}

impl Table {
    /// Builds a table from explicit columns, each a list of matrices.
    pub fn new(columns: Vec<Vec<Mat>>, left: CVector, right: CVector) -> Result<Self> {
        let delta = left.dim();
        if right.dim() != delta {
            return Err(Error::Shape("boundary vectors differ in dimension".into()));
        }
        let mut cols = Vec::with_capacity(columns.len());
        for (k, mats) in columns.into_iter().enumerate() {
            if mats.is_empty() {
                return Err(Error::Shape(format!("column {k} is empty")));
            }
            if mats.iter().any(|m| m.dim() != delta) {
                return Err(Error::Shape(format!("column {k} has the wrong bond dimension")));
            }
            let d = mats.len();
            cols.push(Column { labels: (0..d).map(|i| i.to_string()).collect(), mats, site: k, map: RectMat::identity(d) });
        }
        let n_sites = cols.len();
        Ok(Table { cols, left, right, retired: Vec::new(), log: Vec::new(), n_sites })
    }

    /// `n` identical columns.
    pub fn uniform(entries: &[Mat], n: usize, left: CVector, right: CVector) -> Result<Self> {
        Self::new(vec![entries.to_vec(); n], left, right)
    }

    /// Reads an MPS into tabular order (entries transposed).
    pub fn from_mps(m: &Mps) -> Result<Self> {
        let cols = m.sites().iter().map(|s| s.mats().iter().map(Mat::transpose).collect()).collect();
        Self::new(cols, m.left().clone(), m.right().clone())
    }

    pub fn to_mps(&self) -> Result<Mps> {
        let sites = self
            .cols
            .iter()
            .map(|c| Site::with_labels(c.mats.iter().map(Mat::transpose).collect(), c.labels.clone()))
            .collect::<Result<Vec<_>>>()?;
        Mps::new(sites, self.left.clone(), self.right.clone())
    }

    pub fn expand(&self) -> Result<StateVector> {
        self.to_mps()?.expand()
    }

    /// The same columns between new boundary vectors. Only allowed before
    /// any rewrite, since the history would no longer describe the state.
    pub fn with_boundaries(&self, left: CVector, right: CVector) -> Result<Self> {
        if !self.log.is_empty() {
            return Err(Error::Precondition("boundaries can only be replaced on an unrewritten table".into()));
        }
        if left.dim() != self.left.dim() || right.dim() != self.right.dim() {
            return Err(Error::Shape("boundary vectors of the wrong dimension".into()));
        }
        Ok(Table { left, right, ..self.clone() })
    }

    pub fn cols(&self) -> &[Column] {
        &self.cols
    }

    pub fn col(&self, k: usize) -> &Column {
        &self.cols[k]
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn left(&self) -> &CVector {
        &self.left
    }

    pub fn right(&self) -> &CVector {
        &self.right
    }

    pub fn bond_dim(&self) -> usize {
        self.left.dim()
    }

    pub fn log(&self) -> &[Rewrite] {
        &self.log
    }

    pub fn retired(&self) -> &[(usize, RectMat)] {
        &self.retired
    }

    /// Number of sites in the table this one was rewritten from.
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Original indices of the remaining columns.
    pub fn surviving_sites(&self) -> Vec<usize> {
        self.cols.iter().map(|c| c.site).collect()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.cols.iter().map(Column::len).collect()
    }

    /// Unnormalized outcome weights `‖(K_m on column col) Ψ‖²`, by
    /// transfer-matrix contraction in tabular order.
    pub fn outcome_weights(&self, col: usize, kraus: &[Mat]) -> Result<Vec<f64>> {
        self.check_col(col)?;
        let d = self.cols[col].len();
        if let Some(k) = kraus.iter().find(|k| k.dim() != d) {
            return Err(Error::Shape(format!("Kraus operator of dim {} on column with d = {}", k.dim(), d)));
        }
        let (rho, sigma) = self.environments(col);
        let mats = &self.cols[col].mats;
        Ok(kraus
            .iter()
            .map(|k| {
                let mut acc = Mat::zeros(rho.dim());
                for row in 0..d {
                    let b = combine(&k.as_slice()[row * d..(row + 1) * d], mats);
                    acc = &acc + &(&(&b.adjoint() * &rho) * &b);
                }
                trace_product(&acc, &sigma).max(0.0)
            })
            .collect())
    }

    /// `‖Ψ‖²` by transfer-matrix contraction.
    pub fn norm_sqr(&self) -> f64 {
        if self.cols.is_empty() {
            let v: C64 = self.left.as_slice().iter().zip(self.right.as_slice()).map(|(a, b)| a * b).sum();
            return v.norm_sqr();
        }
        let (rho, sigma) = self.environments(0);
        let mut acc = Mat::zeros(rho.dim());
        for b in &self.cols[0].mats {
            acc = &acc + &(&(&b.adjoint() * &rho) * b);
        }
        trace_product(&acc, &sigma)
    }

    /// Left density `Σ T† ρ T` over columns before `col` starting from
    /// `l†l`, and right density `Σ T σ T†` over columns after `col`
    /// starting from `r r†`.
    fn environments(&self, col: usize) -> (Mat, Mat) {
        // rho_ij = conj(l_i) l_j
        let lc = CVector::from_vec(self.left.as_slice().iter().map(|z| z.conj()).collect());
        let mut rho = Mat::outer(&lc, &lc).expect("same dim");
        for c in &self.cols[..col] {
            let mut next = Mat::zeros(rho.dim());
            for t in &c.mats {
                next = &next + &(&(&t.adjoint() * &rho) * t);
            }
            rho = next;
        }
        let mut sigma = Mat::outer(&self.right, &self.right).expect("same dim");
        for c in self.cols[col + 1..].iter().rev() {
            let mut next = Mat::zeros(sigma.dim());
            for t in &c.mats {
                next = &next + &(&(t * &sigma) * &t.adjoint());
            }
            sigma = next;
        }
        (rho, sigma)
    }

    /// Local map of every original site, indexed by original site.
    pub fn local_maps(&self) -> Vec<RectMat> {
        let mut maps: Vec<Option<RectMat>> = vec![None; self.n_sites];
        for c in &self.cols {
            maps[c.site] = Some(c.map.clone());
        }
        for (s, m) in &self.retired {
            maps[*s] = Some(m.clone());
        }
        maps.into_iter().map(|m| m.expect("every site is either a column or retired")).collect()
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col >= self.cols.len() {
            return Err(Error::InvalidParameter(format!("column {} out of range ({} columns)", col, self.cols.len())));
        }
        Ok(())
    }

    /// `T_col ← T_col·M`, `T_{col+1} ← M⁻¹·T_{col+1}`.
    pub fn gauge_move(mut self, col: usize, m: &Mat, m_inv: &Mat) -> Result<Self> {
        self.check_col(col)?;
        if col + 1 >= self.cols.len() {
            return Err(Error::InvalidParameter(format!("column {col} has no right neighbour")));
        }
        check_inverse(m, m_inv)?;
        for a in &mut self.cols[col].mats {
            *a = &*a * m;
        }
        for a in &mut self.cols[col + 1].mats {
            *a = m_inv * &*a;
        }
        self.log.push(Rewrite::Gauge { col, m: m.clone(), m_inv: m_inv.clone() });
        Ok(self)
    }

    /// Gauge across the left boundary: `l ← l·M`, `T_0 ← M⁻¹·T_0`.
    pub fn gauge_left_boundary(mut self, m: &Mat, m_inv: &Mat) -> Result<Self> {
        if self.cols.is_empty() {
            return Err(Error::InvalidParameter("empty table".into()));
        }
        check_inverse(m, m_inv)?;
        self.left = m.apply_left(&self.left);
        for a in &mut self.cols[0].mats {
            *a = m_inv * &*a;
        }
        self.log.push(Rewrite::GaugeLeftBoundary { m: m.clone(), m_inv: m_inv.clone() });
        Ok(self)
    }

    /// Gauge across the right boundary: `T_last ← T_last·M`, `r ← M⁻¹·r`.
    pub fn gauge_right_boundary(mut self, m: &Mat, m_inv: &Mat) -> Result<Self> {
        if self.cols.is_empty() {
            return Err(Error::InvalidParameter("empty table".into()));
        }
        check_inverse(m, m_inv)?;
        let last = self.cols.len() - 1;
        for a in &mut self.cols[last].mats {
            *a = &*a * m;
        }
        self.right = m_inv.apply(&self.right);
        self.log.push(Rewrite::GaugeRightBoundary { m: m.clone(), m_inv: m_inv.clone() });
        Ok(self)
    }

    /// `B_k = Σ_j U_kj A_j` for a unitary `U`.
    pub fn physical_unitary(mut self, col: usize, u: &Mat) -> Result<Self> {
        self.check_col(col)?;
        if u.dim() != self.cols[col].len() {
            return Err(Error::Shape(format!("unitary of dim {} on column with d = {}", u.dim(), self.cols[col].len())));
        }
        let dev = u.unitarity_defect();
        if dev > PHASE_TOL {
            return Err(Error::NotUnitary(dev));
        }
        let c = &mut self.cols[col];
        c.mats = (0..u.dim()).map(|k| combine(&u.as_slice()[k * u.dim()..(k + 1) * u.dim()], &c.mats)).collect();
        c.map = RectMat::from_square(u).matmul(&c.map);
        self.log.push(Rewrite::PhysicalUnitary { col, u: u.clone() });
        Ok(self)
    }

    /// Applies one Kraus operator to a column; rows of `K` that vanish are
    /// dropped, so the column shrinks to the image of `K`.
    pub fn kraus(mut self, col: usize, k: &Mat) -> Result<Self> {
        self.check_col(col)?;
        let d = self.cols[col].len();
        if k.dim() != d {
            return Err(Error::Shape(format!("Kraus operator of dim {} on column with d = {}", k.dim(), d)));
        }
        let keep: Vec<usize> = (0..d).filter(|&i| (0..d).any(|j| k[(i, j)].norm() > 1e-15)).collect();
        if keep.is_empty() {
            return Err(Error::InvalidParameter("Kraus operator is zero".into()));
        }
        let c = &mut self.cols[col];
        let krect = RectMat::from_square(k).select_rows(&keep);
        c.mats = (0..keep.len()).map(|i| combine(krect.row_slice(i), &c.mats)).collect();
        c.labels = keep.iter().map(|&i| c.labels[i].clone()).collect();
        c.map = krect.matmul(&c.map);
        self.log.push(Rewrite::Kraus { col, k: k.clone() });
        Ok(self)
    }

    /// keeps only the listed entries of a column.
    pub fn project_delete(mut self, col: usize, kept: &[usize]) -> Result<Self> {
        self.check_col(col)?;
        if kept.is_empty() {
            return Err(Error::InvalidParameter("kept set is empty".into()));
        }
        let d = self.cols[col].len();
        if let Some(&bad) = kept.iter().find(|&&i| i >= d) {
            return Err(Error::InvalidParameter(format!("entry {bad} out of range for d = {d}")));
        }
        let c = &mut self.cols[col];
        c.mats = kept.iter().map(|&i| c.mats[i].clone()).collect();
        c.labels = kept.iter().map(|&i| c.labels[i].clone()).collect();
        c.map = c.map.select_rows(kept);
        self.log.push(Rewrite::ProjectDelete { col, kept: kept.to_vec() });
        Ok(self)
    }

    /// multiplies a single-entry column into a neighbour and
    /// removes it. `Left` gives `T_{col−1} ← T_{col−1}·S`, `Right` gives
    /// `T_{col+1} ← S·T_{col+1}`.
    pub fn absorb_single(mut self, col: usize, into: Side) -> Result<Self> {
        self.check_col(col)?;
        if self.cols[col].len() != 1 {
            return Err(Error::Precondition(format!("column {} has {} entries", col, self.cols[col].len())));
        }
        let target = match into {
            Side::Left if col > 0 => col - 1,
            Side::Right if col + 1 < self.cols.len() => col + 1,
            _ => return Err(Error::InvalidParameter(format!("column {col} has no neighbour on the {into:?}"))),
        };
        let removed = self.cols.remove(col);
        let s = &removed.mats[0];
        let tcol = if target > col { target - 1 } else { target };
        for a in &mut self.cols[tcol].mats {
            *a = match into {
                Side::Left => &*a * s,
                Side::Right => s * &*a,
            };
        }
        self.retired.push((removed.site, removed.map));
        self.log.push(Rewrite::Absorb { col, into });
        Ok(self)
    }

    /// Absorbs a single-entry first or last column into the boundary vector
    /// next to it.
    pub fn absorb_boundary(mut self, col: usize) -> Result<Self> {
        self.check_col(col)?;
        if self.cols[col].len() != 1 {
            return Err(Error::Precondition(format!("column {} has {} entries", col, self.cols[col].len())));
        }
        let last = self.cols.len() - 1;
        if col != 0 && col != last {
            return Err(Error::InvalidParameter(format!("column {col} does not touch a boundary")));
        }
        let removed = self.cols.remove(col);
        let s = &removed.mats[0];
        if col == 0 {
            self.left = s.apply_left(&self.left);
        } else {
            self.right = s.apply(&self.right);
        }
        self.retired.push((removed.site, removed.map));
        self.log.push(Rewrite::AbsorbBoundary { col });
        Ok(self)
    }

    pub fn apply(self, rw: &Rewrite) -> Result<Self> {
        match rw {
            Rewrite::Gauge { col, m, m_inv } => self.gauge_move(*col, m, m_inv),
            Rewrite::GaugeLeftBoundary { m, m_inv } => self.gauge_left_boundary(m, m_inv),
            Rewrite::GaugeRightBoundary { m, m_inv } => self.gauge_right_boundary(m, m_inv),
            Rewrite::PhysicalUnitary { col, u } => self.physical_unitary(*col, u),
            Rewrite::Kraus { col, k } => self.kraus(*col, k),
            Rewrite::ProjectDelete { col, kept } => self.project_delete(*col, kept),
            Rewrite::Absorb { col, into } => self.absorb_single(*col, *into),
            Rewrite::AbsorbBoundary { col } => self.absorb_boundary(*col),
        }
    }

    /// Applies `log` in order to `original`.
    pub fn replay(original: &Table, log: &[Rewrite]) -> Result<Table> {
        log.iter().try_fold(original.clone(), |t, rw| t.apply(rw))
    }

    /// `T → V T V†` on every entry, realised as gauge moves on every bond
    /// and both boundaries. The state is unchanged.
    pub fn conjugate_all(self, v: &Mat) -> Result<Self> {
        let vd = v.adjoint();
        let mut t = self.gauge_left_boundary(&vd, v)?;
        for col in 0..t.len().saturating_sub(1) {
            t = t.gauge_move(col, &vd, v)?;
        }
        t.gauge_right_boundary(&vd, v)
    }

    /// Gauges `P` onto bonds `(0,1)`, `(2,3)`, …; an unpaired last column is
    /// gauged against the right boundary.
    pub fn pair_gauge(self, p: &Mat, p_inv: &Mat) -> Result<Self> {
        self.pair_gauge_from(0, p, p_inv)
    }

    pub fn pair_gauge_from(self, start: usize, p: &Mat, p_inv: &Mat) -> Result<Self> {
        let mut t = self;
        let mut col = start;
        while col + 1 < t.len() {
            t = t.gauge_move(col, p, p_inv)?;
            col += 2;
        }
        if col + 1 == t.len() {
            t = t.gauge_right_boundary(p, p_inv)?;
        }
        Ok(t)
    }

    /// Rewrites a column into `κ·target` by a monomial physical unitary
    /// (permutation with phases), if one exists.
    pub fn match_column(self, col: usize, target: &[Mat]) -> Result<Self> {
        self.check_col(col)?;
        let u = monomial_match(self.cols[col].mats(), target)
            .ok_or_else(|| Error::Verification(format!("column {col} does not match the target up to relabelling")))?;
        self.physical_unitary(col, &u)
    }

    /// Per-site unitaries, when every local map so far is square and
    /// unitary (no measurement has been applied).
    pub fn witness(&self) -> Option<Witness> {
        if !self.retired.is_empty() {
            return None;
        }
        let mut unitaries = Vec::with_capacity(self.cols.len());
        for c in &self.cols {
            let m = c.map.to_square()?;
            if !m.is_unitary(PHASE_TOL) {
                return None;
            }
            unitaries.push(m);
        }
        Some(Witness { unitaries, phase: ONE })
    }

    /// Text layout: one column per site, one row per outcome, each cell the
    /// name of the matching operator up to a scalar or a short hash.
    pub fn render(&self) -> String {
        let rows = self.cols.iter().map(Column::len).max().unwrap_or(0);
        let cells: Vec<Vec<String>> = self.cols.iter().map(|c| c.mats.iter().map(symbol).collect()).collect();
        let width = cells.iter().flatten().map(|s| s.chars().count()).max().unwrap_or(1);
        let mut out = String::new();
        for i in 0..rows {
            let line: Vec<String> = cells
                .iter()
                .map(|c| format!("{:<width$}", c.get(i).map(String::as_str).unwrap_or(""), width = width))
                .collect();
            let _ = writeln!(out, "{}", line.join(" ").trim_end());
        }
        out
    }
}

const NAMED: &[&str] = &["I", "X", "Y", "Z", "H", "HZ", "ZH", "XH", "HX", "XZ"];

fn named(name: &str) -> Mat {
    name.chars().fold(Mat::identity(2), |acc, ch| &acc * &op(&ch.to_string()))
}

/// Operator name if `m` is a scalar multiple of a named 2×2 operator,
/// else `#` and a short hash of the rounded entries.
pub fn symbol(m: &Mat) -> String {
    if m.is_zero(1e-12) {
        return "0".into();
    }
    if m.dim() == 2 {
        for &n in NAMED {
            if proportional(m.as_slice(), named(n).as_slice(), 1e-9) {
                return n.into();
            }
        }
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for z in m.normalized().canonical_phase().as_slice() {
        for part in [z.re, z.im] {
            let q = (part * 1e6).round() as i64;
            for b in q.to_le_bytes() {
                h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
    }
    format!("#{:04x}", h & 0xffff)
}

fn trace_product(a: &Mat, b: &Mat) -> f64 {
    (a * b).trace().re
}

/// Finds a monomial unitary `U` (one unit-modulus entry per row and column)
/// with `Σ_j U_kj A_j = κ·target_k` for a common real `κ > 0`.
pub fn monomial_match(entries: &[Mat], target: &[Mat]) -> Option<Mat> {
    let d = entries.len();
    if target.len() != d {
        return None;
    }
    // candidate partner lists
    let mut partners: Vec<Vec<(usize, C64)>> = Vec::with_capacity(d);
    for t in target {
        let mut cands = Vec::new();
        for (j, a) in entries.iter().enumerate() {
            if let Some(c) = scalar_ratio(a, t) {
                cands.push((j, c));
            }
        }
        partners.push(cands);
    }
    let mut used = vec![false; d];
    let mut choice: Vec<(usize, C64)> = Vec::with_capacity(d);
    fn search(
        k: usize,
        partners: &[Vec<(usize, C64)>],
        used: &mut [bool],
        choice: &mut Vec<(usize, C64)>,
        kappa: &mut Option<f64>,
    ) -> bool {
        if k == partners.len() {
            return true;
        }
        for &(j, c) in &partners[k] {
            if used[j] {
                continue;
            }
            let mag = c.norm();
            if let Some(kp) = *kappa {
                if (mag - kp).abs() > 1e-9 * kp.max(1.0) {
                    continue;
                }
            }
            let saved = *kappa;
            if kappa.is_none() {
                *kappa = Some(mag);
            }
            used[j] = true;
            choice.push((j, c));
            if search(k + 1, partners, used, choice, kappa) {
                return true;
            }
            choice.pop();
            used[j] = false;
            *kappa = saved;
        }
        false
    }
    let mut kappa = None;
    if !search(0, &partners, &mut used, &mut choice, &mut kappa) {
        return None;
    }
    let mut u = Mat::zeros(d);
    for (k, &(j, c)) in choice.iter().enumerate() {
        // A_j = c·target_k, so U_kj = |c|/c gives B_k = |c|·target_k.
        u[(k, j)] = c.norm() / c;
    }
    Some(u)
}

/// `c` with `a = c·t`, if `a` is a multiple of `t`.
pub fn scalar_ratio(a: &Mat, t: &Mat) -> Option<C64> {
    let tn = t.norm_fro();
    let an = a.norm_fro();
    if tn == 0.0 || an == 0.0 {
        return None;
    }
    // c = <t, a> / <t, t>
    let num: C64 = t.as_slice().iter().zip(a.as_slice()).map(|(x, y)| x.conj() * y).sum();
    let c = num / (tn * tn);
    let resid = (a - &t.scale(c)).norm_inf();
    if resid <= 1e-9 * an.max(1.0) && c.norm() > 0.0 {
        Some(c)
    } else {
        None
    }
}

/// Per-site physical unitaries and a global phase certifying that two
/// tables describe locally equivalent states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub unitaries: Vec<Mat>,
    pub phase: C64,
}

impl Witness {
    pub fn identity(dims: &[usize]) -> Self {
        Witness { unitaries: dims.iter().map(|&d| Mat::identity(d)).collect(), phase: ONE }
    }

    pub fn check(&self) -> Result<()> {
        for u in &self.unitaries {
            let dev = u.unitarity_defect();
            if dev > PHASE_TOL {
                return Err(Error::NotUnitary(dev));
            }
        }
        Ok(())
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dims().len() != self.unitaries.len() {
            return Err(Error::Shape(format!("witness has {} sites, state has {}", self.unitaries.len(), psi.dims().len())));
        }
        let mut out = psi.clone();
        for (k, u) in self.unitaries.iter().enumerate() {
            out = out.apply_site(k, u)?;
        }
        Ok(StateVector::new(out.amps().iter().map(|z| z * self.phase).collect(), out.dims().to_vec()))
    }
}

/// Fidelity between `expand(t1)` and `w` applied to `expand(t2)`.
pub fn equivalence_fidelity(t1: &Table, t2: &Table, w: &Witness) -> Result<f64> {
    w.check()?;
    if t1.phys_dims() != t2.phys_dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", t1.phys_dims(), t2.phys_dims())));
    }
    let a = t1.expand()?;
    let b = w.apply(&t2.expand()?)?;
    Ok(crate::linalg::fidelity(a.amps(), b.amps()))
}

/// True iff `expand(t1) ∝ w·expand(t2)` up to phase and normalization.
pub fn equivalent(t1: &Table, t2: &Table, w: &Witness, tol: f64) -> Result<bool> {
    Ok(equivalence_fidelity(t1, t2, w)? >= 1.0 - tol)
}

/// True iff the column equals `κ·target` entrywise for one scalar `κ`.
pub fn column_is_multiple(entries: &[Mat], target: &[Mat], tol: f64) -> bool {
    if entries.len() != target.len() {
        return false;
    }
    let a: Vec<C64> = entries.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    let b: Vec<C64> = target.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    proportional(&a, &b, tol)
}
