//! Measurement angles that steer a wire's correlation space.
//!
//! Measuring a `(A, AZ)` column in the basis `cos χ|0> + i sin χ|1>`,
//! `sin χ|0> − i cos χ|1>` leaves `A·S(2χ)` or `A·S(2χ)·Z` on the
//! correlation space. A plan is a list of angles `a_1 … a_m` such that
//!
//! ```text
//! V = left · S(a_1) · W S(a_2) ⋯ W S(a_m) · tail
//! ```
//!
//! meets a target condition. Plans are found by Levenberg-Marquardt on the
//! rotation (SO(3)) image of `V` and replanned after every outcome.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Mutex, OnceLock};

use crate::linalg::{op, s_phi, solve_real, Mat};

/// Condition on `V` up to a scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlanTarget {
    /// `V` maps the Z axis to ±Z: diagonal or anti-diagonal.
    ZAxis,
    /// `V` is a Pauli operator.
    Pauli,
}

const SOLVED: f64 = 1e-12;
const STARTS: usize = 12;

/// `R_ij = ½ tr(σ_i V σ_j V†) / |det V|`.
pub fn rotation_of(v: &Mat) -> [[f64; 3]; 3] {
    let s = [op("X"), op("Y"), op("Z")];
    let scale = (v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)]).norm();
    let vd = v.adjoint();
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let m = &(&(&s[i] * v) * &s[j]) * &vd;
            out[i][j] = 0.5 * m.trace().re / scale;
        }
    }
    out
}

/// Residual vector that vanishes exactly when `v` meets `target`.
pub fn residual(v: &Mat, target: PlanTarget) -> Vec<f64> {
    let rm = rotation_of(v);
    match target {
        PlanTarget::ZAxis => vec![rm[0][2], rm[1][2]],
        PlanTarget::Pauli => vec![rm[0][1], rm[0][2], rm[1][0], rm[1][2], rm[2][0], rm[2][1]],
    }
}

pub fn meets(v: &Mat, target: PlanTarget, tol: f64) -> bool {
    residual(v, target).iter().map(|x| x * x).sum::<f64>().sqrt() <= tol
}

fn product(left: &Mat, w: &Mat, tail: &Mat, angles: &[f64]) -> Mat {
    let mut v = left.clone();
    for (i, &a) in angles.iter().enumerate() {
        if i > 0 {
            v = &v * w;
        }
        v = &v * &s_phi(a);
    }
    &v * tail
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Levenberg-Marquardt from one start; forward-difference Jacobian.
fn solve_from(left: &Mat, w: &Mat, tail: &Mat, target: PlanTarget, mut x: Vec<f64>) -> Option<Vec<f64>> {
    let m = x.len();
    let f = |x: &[f64]| residual(&product(left, w, tail, x), target);
    let mut r = f(&x);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let rn = norm(&r);
        if rn <= SOLVED {
            return Some(x);
        }
        let k = r.len();
        let h = 1e-7;
        let mut jac = vec![0.0; k * m];
        for j in 0..m {
            let mut xp = x.clone();
            xp[j] += h;
            let rp = f(&xp);
            for i in 0..k {
                jac[i * m + j] = (rp[i] - r[i]) / h;
            }
        }
        let mut jtj = vec![0.0; m * m];
        let mut jtr = vec![0.0; m];
        for a in 0..m {
            for b in 0..m {
                jtj[a * m + b] = (0..k).map(|i| jac[i * m + a] * jac[i * m + b]).sum();
            }
            jtr[a] = -(0..k).map(|i| jac[i * m + a] * r[i]).sum::<f64>();
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for d in 0..m {
                a[d * m + d] += lambda * (1.0 + jtj[d * m + d]);
            }
            let Some(step) = solve_real(&a, &jtr) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rn2 = f(&xn);
            if norm(&rn2) < rn {
                x = xn;
                r = rn2;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (norm(&r) <= SOLVED).then_some(x)
}

type Key = (Vec<i64>, PlanTarget, usize);

fn cache() -> &'static Mutex<HashMap<Key, Option<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Option<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn key(left: &Mat, w: &Mat, tail: &Mat, target: PlanTarget, max_m: usize) -> Key {
    let mut k = Vec::with_capacity(24);
    for m in [left.normalized().canonical_phase(), w.normalized().canonical_phase(), tail.normalized().canonical_phase()] {
        for z in m.as_slice() {
            k.push((z.re * 1e10).round() as i64);
            k.push((z.im * 1e10).round() as i64);
        }
    }
    (k, target, max_m)
}

/// Shortest plan of one to `max_m` angles, or `None`.
pub fn plan_angles(left: &Mat, w: &Mat, tail: &Mat, target: PlanTarget, max_m: usize) -> Option<Vec<f64>> {
    let k = key(left, w, tail, target, max_m);
    if let Some(hit) = cache().lock().expect("planner cache").get(&k).cloned() {
        match &hit {
            Some(angles) if meets(&product(left, w, tail, angles), target, SOLVED) => return hit,
            None => return None,
            _ => {}
        }
    }
    let plan = search(left, w, tail, target, max_m);
    cache().lock().expect("planner cache").insert(k, plan.clone());
    plan
}

fn search(left: &Mat, w: &Mat, tail: &Mat, target: PlanTarget, max_m: usize) -> Option<Vec<f64>> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for m in 1..=max_m {
        for s in 0..STARTS {
            let x0: Vec<f64> = (0..m)
                .map(|i| TAU * ((s as f64 + 1.0) * golden + i as f64 * std::f64::consts::SQRT_2).fract())
                .collect();
            if let Some(x) = solve_from(left, w, tail, target, x0) {
                return Some(x.into_iter().map(|a| a.rem_euclid(TAU)).collect());
            }
        }
    }
    None
}
