//! Random walks on finite byproduct groups and the synchronization of two
//! chains before they are coupled.
//!
//! A computational-basis measurement on a cluster wire leaves `H` or `HZ`
//! on the correlation space with probability 1/2 each, so the accumulated
//! byproduct performs a walk on `<H, Z>`. Two chains whose numbers of
//! unmeasured sites differ by `diff` are walked until their byproducts meet
//! a configuration that commutes with the CZ coupling.

use std::collections::VecDeque;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{op, rot_pi_xz, Mat, PHASE_TOL};
use crate::protocols::fmt_num;
use crate::rng;

/// Default closure cap.
pub const GROUP_CAP: usize = 256;

/// Finite group of unitaries modulo global phase. Element 0 is the
/// identity; `table[i][j]` is the index of `elements[i]·elements[j]`.
#[derive(Clone, Debug)]
pub struct ProjGroup {
    pub elements: Vec<Mat>,
    pub table: Vec<Vec<usize>>,
    pub generators: Vec<usize>,
}

impl ProjGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of `m` up to global phase.
    pub fn find(&self, m: &Mat) -> Option<usize> {
        lookup(&self.elements, &m.canonical_phase())
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.table[i].iter().position(|&k| k == 0).expect("closed group has inverses")
    }
}

fn lookup(elements: &[Mat], canon: &Mat) -> Option<usize> {
    elements.iter().position(|e| (e - canon).norm_inf() < PHASE_TOL)
}

/// Breadth-first closure of the generators under multiplication modulo
/// global phase.
pub fn close_group(generators: &[Mat], cap: usize) -> Result<ProjGroup> {
    let d = generators.first().map(Mat::dim).ok_or_else(|| Error::InvalidParameter("no generators".into()))?;
    for g in generators {
        if g.dim() != d {
            return Err(Error::Shape("generators of different dimension".into()));
        }
        if !g.is_unitary(PHASE_TOL) {
            return Err(Error::NotUnitary(g.unitarity_defect()));
        }
    }
    let gens: Vec<Mat> = generators.iter().map(Mat::canonical_phase).collect();
    let mut elements = vec![Mat::identity(d)];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in &gens {
            let p = (g * &elements[i]).canonical_phase();
            if lookup(&elements, &p).is_none() {
                if elements.len() == cap {
                    return Err(Error::CapExceeded { what: "group closure".into(), size: cap + 1, cap });
                }
                elements.push(p);
                queue.push_back(elements.len() - 1);
            }
        }
    }
    let table = (0..elements.len())
        .map(|i| {
            (0..elements.len())
                .map(|j| {
                    let p = (&elements[i] * &elements[j]).canonical_phase();
                    lookup(&elements, &p).ok_or_else(|| Error::Verification("closure is not closed".into()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let generators = gens.iter().map(|g| lookup(&elements, g).expect("generator in closure")).collect();
    Ok(ProjGroup { elements, table, generators })
}

/// Period of the walk `x → s·x` (`s` drawn from `steps`) on the component
/// of the identity: the gcd of all closed-walk lengths, computed from BFS
/// levels as `gcd(level(u) + 1 − level(v))` over the edges.
pub fn walk_period(g: &ProjGroup, steps: &[usize]) -> Result<usize> {
    if steps.is_empty() {
        return Err(Error::InvalidParameter("walk needs at least one step".into()));
    }
    if let Some(&s) = steps.iter().find(|&&s| s >= g.order()) {
        return Err(Error::InvalidParameter(format!("step {s} is not a group element")));
    }
    let mut level = vec![usize::MAX; g.order()];
    level[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    let mut period = 0usize;
    while let Some(u) = queue.pop_front() {
        for &s in steps {
            let v = g.table[s][u];
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                period = gcd(period, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    Ok(period)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of the walk driven by `steps` when `Z` is one of them.
pub fn z_generator_period(steps: &[Mat]) -> Result<usize> {
    let z = op("Z");
    if !steps.iter().any(|s| s.dim() == 2 && (&s.canonical_phase() - &z).norm_inf() < PHASE_TOL) {
        return Err(Error::Precondition("Z is not among the steps".into()));
    }
    let g = close_group(steps, GROUP_CAP)?;
    let idx: Vec<usize> = steps.iter().map(|s| g.find(s).expect("step in group")).collect();
    walk_period(&g, &idx)
}

/// Outcome of [`dihedral_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DihedralVerdict {
    /// Isomorphic to the dihedral group of this (projective) order.
    Dihedral { order: usize },
    NotDihedral { order: usize },
    /// Closure did not finish within the cap; says nothing about infinitude.
    NotFiniteAtCap { cap: usize },
}

/// Closes `<C, Z>` with `C = rot_pi_xz(θ)` and compares it with the
/// dihedral group `D_m`, `m` the order of `r = C·Z`, via
/// `r^k ↦ (CZ)^k`, `s·r^k ↦ Z·(CZ)^k`.
pub fn dihedral_check(theta: f64, cap: usize) -> Result<DihedralVerdict> {
    let (c, b) = (rot_pi_xz(theta), op("Z"));
    let g = match close_group(&[c.clone(), b.clone()], cap) {
        Ok(g) => g,
        Err(Error::CapExceeded { .. }) => return Ok(DihedralVerdict::NotFiniteAtCap { cap }),
        Err(e) => return Err(e),
    };
    let order = g.order();
    let (ci, bi) = (g.find(&c).expect("in group"), g.find(&b).expect("in group"));
    let rot = g.table[ci][bi];
    let mut m = 1;
    let mut x = rot;
    while x != 0 {
        x = g.table[rot][x];
        m += 1;
    }
    if 2 * m != order {
        return Ok(DihedralVerdict::NotDihedral { order });
    }
    // images of r^k and s·r^k
    let mut pow = vec![0usize; m];
    for k in 1..m {
        pow[k] = g.table[pow[k - 1]][rot];
    }
    let image = |refl: bool, k: usize| if refl { g.table[bi][pow[k]] } else { pow[k] };
    let elems: Vec<(bool, usize)> = [false, true].iter().flat_map(|&f| (0..m).map(move |k| (f, k))).collect();
    let mut seen: Vec<usize> = elems.iter().map(|&(f, k)| image(f, k)).collect();
    seen.sort();
    seen.dedup();
    if seen.len() != order {
        return Ok(DihedralVerdict::NotDihedral { order });
    }
    // D_m: r^a r^b = r^{a+b}, r^a s r^b = s r^{b−a}, s r^a r^b = s r^{a+b}, s r^a s r^b = r^{b−a}
    let mul = |(f1, a): (bool, usize), (f2, b): (bool, usize)| -> (bool, usize) {
        match (f1, f2) {
            (false, false) => (false, (a + b) % m),
            (false, true) => (true, (b + m - a) % m),
            (true, false) => (true, (a + b) % m),
            (true, true) => (false, (b + m - a) % m),
        }
    };
    for &x in &elems {
        for &y in &elems {
            if g.table[image(x.0, x.1)][image(y.0, y.1)] != image(mul(x, y).0, mul(x, y).1) {
                return Ok(DihedralVerdict::NotDihedral { order });
            }
        }
    }
    Ok(DihedralVerdict::Dihedral { order })
}

/// Walk on a group: each step left-multiplies by `steps[k]` with
/// probability `probs[k]`.
#[derive(Clone, Debug)]
pub struct WalkChain {
    pub group: ProjGroup,
    pub steps: Vec<usize>,
    pub probs: Vec<f64>,
}

impl WalkChain {
    pub fn new(group: ProjGroup, steps: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if steps.is_empty() || steps.len() != probs.len() {
            return Err(Error::Shape("one probability per step".into()));
        }
        if steps.iter().any(|&s| s >= group.order()) {
            return Err(Error::InvalidParameter("step outside the group".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("step probabilities must sum to 1".into()));
        }
        Ok(WalkChain { group, steps, probs })
    }

    /// `{H, HZ}` with probability 1/2 each on `<H, Z>`.
    pub fn cluster() -> Self {
        let (h, z) = (op("H"), op("Z"));
        let group = close_group(&[h.clone(), z.clone()], GROUP_CAP).expect("<H,Z> is finite");
        let steps = vec![group.find(&h).expect("H"), group.find(&(&h * &z)).expect("HZ")];
        WalkChain::new(group, steps, vec![0.5, 0.5]).expect("valid chain")
    }

    fn step(&self, x: usize, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.group.table[self.steps[k]][x];
            }
        }
        self.group.table[*self.steps.last().expect("nonempty")][x]
    }

    /// Distribution after `k` steps from the identity.
    fn distribution(&self, k: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.group.order()];
        p[0] = 1.0;
        for _ in 0..k {
            let mut q = vec![0.0; p.len()];
            for (x, &px) in p.iter().enumerate() {
                for (s, &ps) in self.steps.iter().zip(&self.probs) {
                    q[self.group.table[*s][x]] += px * ps;
                }
            }
            p = q;
        }
        p
    }
}

/// Joint configurations that end the wait: `(I, I)` for even `diff`, and
/// `(I, Z)` or `(Z, I)` for odd `diff`.
pub fn sync_targets(chain: &WalkChain, diff: usize) -> Vec<(usize, usize)> {
    if diff.is_multiple_of(2) {
        vec![(0, 0)]
    } else {
        let z = chain.group.find(&op("Z")).expect("Z in <H,Z>");
        vec![(0, z), (z, 0)]
    }
}

/// Exact hitting statistics on the product chain: probability of reaching
/// a target within `rounds` joint rounds, and the mean hitting round given
/// a hit. The first chain starts `diff` steps ahead.
pub fn exact_hitting(chain: &WalkChain, diff: usize, targets: &[(usize, usize)], rounds: usize) -> (f64, f64) {
    let n = chain.group.order();
    let a0 = chain.distribution(diff);
    let is_target = |i: usize, j: usize| targets.contains(&(i, j));
    let mut p = vec![0.0; n * n];
    for (i, &pa) in a0.iter().enumerate() {
        p[i * n] = pa;
    }
    let (mut hit, mut time) = (0.0, 0.0);
    for t in 0..=rounds {
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let pij = p[i * n + j];
                if pij == 0.0 {
                    continue;
                }
                if is_target(i, j) {
                    hit += pij;
                    time += pij * t as f64;
                    continue;
                }
                for (sa, pa) in chain.steps.iter().zip(&chain.probs) {
                    for (sb, pb) in chain.steps.iter().zip(&chain.probs) {
                        q[chain.group.table[*sa][i] * n + chain.group.table[*sb][j]] += pij * pa * pb;
                    }
                }
            }
        }
        p = q;
    }
    (hit, if hit > 0.0 { time / hit } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub diff: usize,
    pub trials: usize,
    pub cap: usize,
    pub target: String,
    pub hits: usize,
    pub frequency: f64,
    pub freq_stderr: f64,
    /// Mean joint rounds until the target, over trials that hit it.
    pub mean: f64,
    pub mean_stderr: f64,
    /// Trials in which both walks were at `I` at the same round.
    pub ii_hits: usize,
    pub exact_frequency: f64,
    pub exact_mean: f64,
}

impl SyncReport {
    pub const CSV_HEADER: &'static str =
        "diff,trials,cap,target,hits,frequency,freq_stderr,mean,mean_stderr,ii_hits,exact_frequency,exact_mean";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.diff,
            self.trials,
            self.cap,
            self.target,
            self.hits,
            fmt_num(self.frequency),
            fmt_num(self.freq_stderr),
            fmt_num(self.mean),
            fmt_num(self.mean_stderr),
            self.ii_hits,
            fmt_num(self.exact_frequency),
            fmt_num(self.exact_mean)
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

/// Simulates the two walks on the cluster chain. The first chain takes
/// `diff` steps alone, then both step together; `cap` bounds the steps of
/// the first chain.
pub fn sync_simulate(diff: usize, trials: usize, cap: usize, seed: u64) -> Result<SyncReport> {
    sync_simulate_with(&WalkChain::cluster(), diff, trials, cap, seed)
}

pub fn sync_simulate_with(chain: &WalkChain, diff: usize, trials: usize, cap: usize, seed: u64) -> Result<SyncReport> {
    if cap < diff {
        return Err(Error::InvalidParameter(format!("cap {cap} is below diff {diff}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let targets = sync_targets(chain, diff);
    let rounds = cap - diff;
    let tag = format!("sync/{diff}");
    // (round of first target hit, whether (I,I) occurred)
    let results: Vec<(Option<usize>, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::trial(seed, &tag, t);
            let mut a = 0usize;
            for _ in 0..diff {
                a = chain.step(a, rng.gen());
            }
            let mut b = 0usize;
            let mut hit = None;
            let mut ii = false;
            for round in 0..=rounds {
                ii |= a == 0 && b == 0;
                if hit.is_none() && targets.contains(&(a, b)) {
                    hit = Some(round);
                }
                if round == rounds || (hit.is_some() && ii) {
                    break;
                }
                a = chain.step(a, rng.gen());
                b = chain.step(b, rng.gen());
            }
            (hit, ii)
        })
        .collect();
    let times: Vec<f64> = results.iter().filter_map(|r| r.0.map(|t| t as f64)).collect();
    let hits = times.len();
    let f = hits as f64 / trials as f64;
    let mean = if hits > 0 { times.iter().sum::<f64>() / hits as f64 } else { 0.0 };
    let var = if hits > 1 { times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (hits - 1) as f64 } else { 0.0 };
    let (ef, em) = exact_hitting(chain, diff, &targets, rounds);
    let z = chain.group.find(&op("Z")).unwrap_or(usize::MAX);
    let name = |(i, j): (usize, usize)| {
        let s = |k: usize| if k == 0 { "I".to_string() } else if k == z { "Z".to_string() } else { format!("g{k}") };
        format!("({};{})", s(i), s(j))
    };
    Ok(SyncReport {
        diff,
        trials,
        cap,
        target: targets.iter().map(|&t| name(t)).collect::<Vec<_>>().join("|"),
        hits,
        frequency: f,
        freq_stderr: (f * (1.0 - f) / trials as f64).sqrt(),
        mean,
        mean_stderr: if hits > 0 { (var / hits as f64).sqrt() } else { 0.0 },
        ii_hits: results.iter().filter(|r| r.1).count(),
        exact_frequency: ef,
        exact_mean: em,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn is_group(g: &ProjGroup) {
        let n = g.order();
        for i in 0..n {
            let mut row = g.table[i].clone();
            let mut col: Vec<usize> = (0..n).map(|j| g.table[j][i]).collect();
            row.sort();
            col.sort();
            assert_eq!(row, (0..n).collect::<Vec<_>>());
            assert_eq!(col, (0..n).collect::<Vec<_>>());
            let inv = g.inverse(i);
            assert_eq!(g.table[inv][i], 0);
        }
    }

    #[test]
    fn closure_orders() {
        let z = close_group(&[op("Z")], GROUP_CAP).unwrap();
        assert_eq!(z.order(), 2);
        let hz = close_group(&[op("H"), op("Z")], GROUP_CAP).unwrap();
        assert_eq!(hz.order(), 8);
        is_group(&hz);
        let xz = close_group(&[op("X"), op("Z")], GROUP_CAP).unwrap();
        assert_eq!(xz.order(), 4);
        is_group(&xz);
        assert!(xz.find(&(&op("X") * &op("Z"))).is_some());
        assert!(matches!(close_group(&[rot_pi_xz(1.0), op("Z")], GROUP_CAP), Err(Error::CapExceeded { .. })));
        assert!(matches!(close_group(&[Mat::diag(&[crate::linalg::ONE, crate::linalg::r(2.0)])], 8), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn periods() {
        let c = WalkChain::cluster();
        assert_eq!(walk_period(&c.group, &c.steps).unwrap(), 2);
        let z = close_group(&[op("Z")], GROUP_CAP).unwrap();
        assert_eq!(walk_period(&z, &[0, 1]).unwrap(), 1);
        assert_eq!(walk_period(&z, &[1]).unwrap(), 2);
        assert!(walk_period(&z, &[]).is_err());
    }

    #[test]
    fn cluster_walk_is_bipartite() {
        // elements reached after k steps all have k mod 2 Hadamards
        let c = WalkChain::cluster();
        for k in 0..6 {
            let d = c.distribution(k);
            let odd = |e: &Mat| (e[(0, 0)].norm() - e[(0, 1)].norm()).abs() < 1e-9;
            for (i, &p) in d.iter().enumerate() {
                if p > 0.0 {
                    assert_eq!(odd(&c.group.elements[i]), k % 2 == 1);
                }
            }
        }
    }

    #[test]
    fn z_generated_walks_have_period_one_or_two() {
        for steps in [vec![op("Z")], vec![op("Z"), op("H")], vec![op("Z"), op("X")], vec![op("Z"), op("I")], vec![op("Z"), crate::linalg::s_phi(FRAC_PI_2)]] {
            let p = z_generator_period(&steps).unwrap();
            assert!(p == 1 || p == 2, "{p}");
        }
        assert!(z_generator_period(&[op("H")]).is_err());
    }

    #[test]
    fn dihedral_examples() {
        assert_eq!(dihedral_check(FRAC_PI_4, GROUP_CAP).unwrap(), DihedralVerdict::Dihedral { order: 8 });
        assert_eq!(dihedral_check(FRAC_PI_2, GROUP_CAP).unwrap(), DihedralVerdict::Dihedral { order: 4 });
        assert_eq!(dihedral_check(std::f64::consts::PI / 3.0, GROUP_CAP).unwrap(), DihedralVerdict::Dihedral { order: 6 });
        assert_eq!(dihedral_check(1.0, GROUP_CAP).unwrap(), DihedralVerdict::NotFiniteAtCap { cap: GROUP_CAP });
    }

    #[test]
    fn zero_diff_hits_at_round_zero() {
        let r = sync_simulate(0, 100, 10, 1).unwrap();
        assert_eq!(r.hits, 100);
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.exact_frequency, 1.0);
    }

    #[test]
    fn even_diff_matches_exact_chain() {
        for (diff, cap) in [(2, 6), (2, 200), (4, 12)] {
            let r = sync_simulate(diff, 4000, cap, 9).unwrap();
            let sigma = (r.exact_frequency * (1.0 - r.exact_frequency) / r.trials as f64).sqrt();
            assert!((r.frequency - r.exact_frequency).abs() <= 3.0 * sigma + 1e-12, "{r:?}");
        }
        let c = WalkChain::cluster();
        let (p, _) = exact_hitting(&c, 2, &[(0, 0)], 2000);
        assert!(p > 1.0 - 1e-12);
    }

    #[test]
    fn odd_diff_never_meets_at_identity() {
        let r = sync_simulate(3, 2000, 200, 5).unwrap();
        assert_eq!(r.ii_hits, 0);
        // (I,Z) has even Hadamard count on both sides, so it is unreachable too
        assert_eq!(r.hits, 0);
        assert_eq!(r.exact_frequency, 0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let a = sync_simulate(2, 500, 50, 3).unwrap().to_csv();
        let b = sync_simulate(2, 500, 50, 3).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(sync_simulate(5, 10, 4, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn subgroups_of_hz_are_groups(mask in 1u8..=255) {
                let hz = WalkChain::cluster().group;
                let gens: Vec<Mat> = (0..8).filter(|k| mask >> k & 1 == 1).map(|k| hz.elements[k].clone()).collect();
                let g = close_group(&gens, GROUP_CAP).unwrap();
                is_group(&g);
                prop_assert_eq!(8 % g.order(), 0);
                let p = walk_period(&g, &g.generators).unwrap();
                prop_assert!(p >= 1 && g.order() % p == 0);
            }

            #[test]
            fn rational_angles_are_dihedral(k in 1usize..12) {
                let v = dihedral_check(std::f64::consts::PI / k as f64, GROUP_CAP).unwrap();
                prop_assert!(matches!(v, DihedralVerdict::Dihedral { .. }), "{:?}", v);
            }
        }
    }
}
