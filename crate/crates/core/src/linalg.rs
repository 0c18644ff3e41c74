//! Small dense complex linear algebra.
//!
//! Everything here works at bond and physical dimensions of a handful of
//! levels, so matrices are plain row-major `Vec`s and products are the naive
//! triple loop. Named operators are built from closed forms rather than
//! numerical exponentials.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for every "equal up to global phase" decision.
pub const PHASE_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    dim: usize,
    data: Vec<C64>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Mat { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; fails unless the length is a
    /// positive perfect square and every entry is finite.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::Shape(format!("{} entries do not form a square matrix", data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Mat { dim, data })
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|row| row.len() != dim) {
            return Err(Error::Shape("rows must all have length equal to the row count".into()));
        }
        Self::from_vec(rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|row| row.iter().map(|&x| r(x)).collect()).collect();
        let refs: Vec<&[C64]> = rows.iter().map(|v| v.as_slice()).collect();
        Self::from_rows(&refs)
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|i><j|` in dimension `dim`.
    pub fn ket_bra(i: usize, j: usize, dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    /// `|a><b|` for arbitrary vectors.
    pub fn outer(a: &CVector, b: &CVector) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Shape("outer product of vectors of different length".into()));
        }
        let d = a.dim();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn scale(&self, z: C64) -> Self {
        Mat { dim: self.dim, data: self.data.iter().map(|&x| x * z).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn norm_inf(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm_inf() <= tol
    }

    /// `‖U†U − I‖∞`.
    pub fn unitarity_defect(&self) -> f64 {
        (&(&self.adjoint() * self) - &Mat::identity(self.dim)).norm_inf()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        let (a, b) = (self.dim, other.dim);
        let mut m = Mat::zeros(a * b);
        for i in 0..a {
            for j in 0..a {
                let x = self[(i, j)];
                if x == ZERO {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        m[(i * b + k, j * b + l)] = x * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.dim, v.dim(), "matrix-vector dimension mismatch");
        let d = self.dim;
        let mut out = vec![ZERO; d];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * d..(i + 1) * d];
            *o = row.iter().zip(v.as_slice()).map(|(a, b)| a * b).sum();
        }
        CVector::from_vec(out)
    }

    /// Row vector times matrix: returns the coefficients of `<v| M` where `v`
    /// already holds bra coefficients (no conjugation is applied).
    pub fn apply_left(&self, v: &CVector) -> CVector {
        assert_eq!(self.dim, v.dim(), "vector-matrix dimension mismatch");
        let d = self.dim;
        let mut out = vec![ZERO; d];
        for i in 0..d {
            let vi = v[i];
            if vi == ZERO {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * self[(i, j)];
            }
        }
        CVector::from_vec(out)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        let d = self.dim;
        let mut a = self.clone();
        let mut inv = Mat::identity(d);
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .expect("nonempty range");
            if a[(pivot, col)].norm() <= 1e-14 * scale {
                return Err(Error::NotInvertible(0.0));
            }
            if pivot != col {
                for j in 0..d {
                    a.data.swap(pivot * d + j, col * d + j);
                    inv.data.swap(pivot * d + j, col * d + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..d {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for row in 0..d {
                if row == col {
                    continue;
                }
                let f = a[(row, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..d {
                    let (av, iv) = (a[(col, j)], inv[(col, j)]);
                    a[(row, j)] -= f * av;
                    inv[(row, j)] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Same matrix divided by its "unitary scale" `‖M‖_F / √dim`.
    pub fn normalized(&self) -> Mat {
        let s = self.norm_fro() / (self.dim as f64).sqrt();
        if s == 0.0 {
            self.clone()
        } else {
            self.scale(r(1.0 / s))
        }
    }

    /// Multiplies by a unit phase so the first entry of non-negligible
    /// modulus is real and positive.
    pub fn canonical_phase(&self) -> Mat {
        match first_significant(&self.data) {
            Some(z) => self.scale(z.conj() / z.norm()),
            None => self.clone(),
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    m.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        m
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        &self * &rhs
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        Mat { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        Mat { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(r(-1.0))
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat({}x{})[", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, " ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Rectangular complex matrix, row-major. Used for local maps that change
/// the physical dimension of a site (projections, Kraus images).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct RectMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl RectMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RectMat { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_square(m: &Mat) -> Self {
        RectMat { rows: m.dim(), cols: m.dim(), data: m.as_slice().to_vec() }
    }

    /// A single row, e.g. the bra of a projective outcome.
    pub fn row(entries: &[C64]) -> Self {
        RectMat { rows: 1, cols: entries.len(), data: entries.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row_slice(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &i in keep {
            data.extend_from_slice(self.row_slice(i));
        }
        RectMat { rows: keep.len(), cols: self.cols, data }
    }

    pub fn matmul(&self, rhs: &RectMat) -> RectMat {
        assert_eq!(self.cols, rhs.rows, "rectangular product dimension mismatch");
        let mut m = RectMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    m.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn to_square(&self) -> Option<Mat> {
        if self.is_square() {
            Mat::from_vec(self.data.clone()).ok()
        } else {
            None
        }
    }
}

impl Index<(usize, usize)> for RectMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RectMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RectMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RectMat({}x{})", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "\n ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Complex column vector: boundary vectors and full state vectors.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CVector {
    data: Vec<C64>,
}

impl CVector {
    pub fn from_vec(data: Vec<C64>) -> Self {
        assert!(!data.is_empty(), "vector dimension must be positive");
        CVector { data }
    }

    pub fn from_real(xs: &[f64]) -> Self {
        Self::from_vec(xs.iter().map(|&x| r(x)).collect())
    }

    pub fn basis(i: usize, dim: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[i] = ONE;
        Self::from_vec(v)
    }

    /// `|+> = (|0> + |1>)/√2` padded to `dim`-level uniform superposition.
    pub fn uniform(dim: usize) -> Self {
        Self::from_vec(vec![r(1.0 / (dim as f64).sqrt()); dim])
    }

    pub fn plus() -> Self {
        Self::uniform(2)
    }

    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(&[s, -s])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_vec(self.data.iter().map(|&x| x * z).collect())
    }

    /// `<self|other>` with conjugation on `self`.
    pub fn inner(&self, other: &CVector) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    #[inline]
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVector[")?;
        for z in &self.data {
            write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
        }
        write!(f, " ]")
    }
}

fn first_significant(data: &[C64]) -> Option<C64> {
    let max = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    data.iter().copied().find(|z| z.norm() > 1e-6 * max)
}

/// Anything that can be compared entrywise up to a global phase.
pub trait Amplitudes {
    fn amplitudes(&self) -> &[C64];
    fn shape(&self) -> Vec<usize>;
}

impl Amplitudes for Mat {
    fn amplitudes(&self) -> &[C64] {
        &self.data
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.dim, self.dim]
    }
}

impl Amplitudes for CVector {
    fn amplitudes(&self) -> &[C64] {
        &self.data
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.dim()]
    }
}

/// True iff some unit complex `c` gives `‖a − c·b‖∞ ≤ tol`.
///
/// `c` is read off the largest-modulus entry of `b`.
pub fn equal_up_to_phase<T: Amplitudes + ?Sized>(a: &T, b: &T, tol: f64) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(slices_equal_up_to_phase(a.amplitudes(), b.amplitudes(), tol))
}

pub fn slices_equal_up_to_phase(a: &[C64], b: &[C64], tol: f64) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let (k, bk) = match b.iter().enumerate().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm())) {
        Some((k, bk)) if bk.norm() > 0.0 => (k, *bk),
        _ => return a.iter().all(|z| z.norm() <= tol),
    };
    let ak = a[k];
    let phase = if ak.norm() > 0.0 { (ak / bk) / (ak / bk).norm() } else { ONE };
    a.iter().zip(b).all(|(x, y)| (x - phase * y).norm() <= tol)
}

/// `a ∝ b` with a nonzero complex factor, compared after normalizing both to
/// unit Frobenius norm.
pub fn proportional(a: &[C64], b: &[C64], tol: f64) -> bool {
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return na == nb;
    }
    let a: Vec<C64> = a.iter().map(|z| z / na).collect();
    let b: Vec<C64> = b.iter().map(|z| z / nb).collect();
    slices_equal_up_to_phase(&a, &b, tol)
}

/// `|<a|b>|² / (‖a‖² ‖b‖²)`.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "fidelity of vectors with different length");
    let ab: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 1.0 } else { 0.0 };
    }
    ab.norm_sqr() / (na * nb)
}

/// Named 2×2 operators: `I`, `X`, `Y`, `Z`, `H`.
pub fn pauli(name: &str) -> Result<Mat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = match name {
        "I" => Mat::identity(2),
        "X" => Mat::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])?,
        "Y" => Mat::from_rows(&[&[ZERO, -I], &[I, ZERO]])?,
        "Z" => Mat::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])?,
        "H" => Mat::from_real(&[&[s, s], &[s, -s]])?,
        other => return Err(Error::UnknownOperator(other.to_string())),
    };
    Ok(m)
}

/// Shorthand for the infallible named operators.
pub fn op(name: &str) -> Mat {
    pauli(name).expect("built-in operator name")
}

/// `sin θ X + cos θ Z`: the π-rotation about the Bloch axis `(sin θ, 0, cos θ)`.
pub fn rot_pi_xz(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_real(&[&[c, s], &[s, -c]]).expect("2x2")
}

/// `S(φ) = exp(−iφZ/2) = diag(e^{−iφ/2}, e^{iφ/2})`.
pub fn s_phi(phi: f64) -> Mat {
    Mat::diag(&[C64::from_polar(1.0, -phi / 2.0), C64::from_polar(1.0, phi / 2.0)])
}

/// `exp(−iαY/2)`, which turns the Bloch z axis towards +x by `α`.
pub fn ry(alpha: f64) -> Mat {
    let (s, c) = (alpha / 2.0).sin_cos();
    Mat::from_real(&[&[c, -s], &[s, c]]).expect("2x2")
}

/// `exp(−iαX/2)`.
pub fn rx(alpha: f64) -> Mat {
    let (s, co) = (alpha / 2.0).sin_cos();
    Mat::from_rows(&[&[r(co), c(0.0, -s)], &[c(0.0, -s), r(co)]]).expect("2x2")
}

/// Controlled-Z on two qubits, `|0><0|⊗I + |1><1|⊗Z`.
pub fn cz() -> Mat {
    Mat::diag(&[ONE, ONE, ONE, r(-1.0)])
}

/// Solves the real linear system `a x = b` (row-major `n×n`) by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| m[p * n + col].abs().total_cmp(&m[q * n + col].abs()))?;
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(pivot * n + j, col * n + j);
            }
            x.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= f * m[col * n + j];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in col + 1..n {
            acc -= m[col * n + j] * x[j];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}
