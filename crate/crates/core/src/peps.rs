//! Small two-dimensional states: the triCluster PEPS and its reduction to
//! the cluster state, cluster (graph) states, and the coupling of two
//! cluster wires.
//!
//! Every bond of the triCluster state is `|H> ∝ |+>|0> + |->|1>`, whose
//! amplitudes `<ab|H> = (−1)^{ab}/√2` are symmetric, so bonds carry no
//! orientation. Each node projects its three bond halves with
//! `P = P0 + P1 + P2` onto six levels; level `k` corresponds to the leg
//! bits `LEVEL_BITS[k]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fidelity, op, r, CVector, Mat, RectMat, C64, ONE, ZERO};
use crate::mps::{checked_size, StateVector, EXPAND_CAP};
use crate::protocols::OutcomeChooser;
use crate::tabular::{column_is_multiple, Table};

/// Leg bits of the six levels: `P0` covers 000/111, `P1` 001/110, `P2`
/// 010/101.
pub const LEVEL_BITS: [[u8; 3]; 6] = [[0, 0, 0], [1, 1, 1], [0, 0, 1], [1, 1, 0], [0, 1, 0], [1, 0, 1]];

/// Largest triCluster expanded exactly (`6^8` amplitudes).
pub const MAX_TRICLUSTER_NODES: usize = 8;

/// Largest graph state built by [`graph_cluster_state`].
pub const MAX_GRAPH_NODES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Left,
    Up,
    Right,
    Down,
}

impl Dir {
    fn opposite(self) -> Dir {
        match self {
            Dir::Left => Dir::Right,
            Dir::Right => Dir::Left,
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }

    fn rank(self) -> usize {
        match self {
            Dir::Left => 0,
            Dir::Up => 1,
            Dir::Right => 2,
            Dir::Down => 3,
        }
    }
}

/// Bond between nodes `a` and `b`; `b` lies in direction `dir` from `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub dir: Dir,
}

/// One of the three legs of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Edge(usize),
    Dangling,
}

/// State that closes a dangling leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    #[default]
    Plus,
    Zero,
}

impl Termination {
    fn amp(self, bit: u8) -> f64 {
        match (self, bit) {
            (Termination::Plus, _) => std::f64::consts::FRAC_1_SQRT_2,
            (Termination::Zero, 0) => 1.0,
            (Termination::Zero, _) => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub nodes: usize,
    pub edges: Vec<Edge>,
    /// Three legs per node, in projector order.
    pub legs: Vec<[Leg; 3]>,
}

impl Lattice {
    /// Legs ordered left, up, right, down, then dangling.
    pub fn new(nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut per: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= nodes || e.b >= nodes || e.a == e.b {
                return Err(Error::InvalidParameter(format!("edge {i} ({}, {}) is invalid", e.a, e.b)));
            }
            per[e.a].push((e.dir.rank(), i));
            per[e.b].push((e.dir.opposite().rank(), i));
        }
        let mut legs = Vec::with_capacity(nodes);
        for (v, mut l) in per.into_iter().enumerate() {
            if l.len() > 3 {
                return Err(Error::Shape(format!("node {v} has degree {} > 3", l.len())));
            }
            l.sort();
            let mut slot = [Leg::Dangling; 3];
            for (k, &(_, e)) in l.iter().enumerate() {
                slot[k] = Leg::Edge(e);
            }
            legs.push(slot);
        }
        Ok(Lattice { nodes, edges, legs })
    }

    /// Explicit leg order per node; every edge must appear once at each
    /// endpoint.
    pub fn with_legs(nodes: usize, edges: Vec<Edge>, legs: Vec<[Leg; 3]>) -> Result<Self> {
        let base = Lattice::new(nodes, edges)?;
        if legs.len() != nodes {
            return Err(Error::Shape(format!("{} leg lists for {} nodes", legs.len(), nodes)));
        }
        for (v, l) in legs.iter().enumerate() {
            let mut want: Vec<usize> = base.legs[v].iter().filter_map(|x| if let Leg::Edge(e) = x { Some(*e) } else { None }).collect();
            let mut got: Vec<usize> = l.iter().filter_map(|x| if let Leg::Edge(e) = x { Some(*e) } else { None }).collect();
            want.sort();
            got.sort();
            if want != got {
                return Err(Error::InvalidParameter(format!("legs of node {v} do not list its edges")));
            }
        }
        Ok(Lattice { legs, ..base })
    }

    /// `rows × cols` grid, node `r·cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for rr in 0..rows {
            for cc in 0..cols {
                let v = rr * cols + cc;
                if cc + 1 < cols {
                    edges.push(Edge { a: v, b: v + 1, dir: Dir::Right });
                }
                if rr + 1 < rows {
                    edges.push(Edge { a: v, b: v + cols, dir: Dir::Down });
                }
            }
        }
        Lattice::new(rows * cols, edges)
    }

    pub fn graph_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }

    /// Position of edge `e` among the legs of node `v`.
    fn leg_of(&self, v: usize, e: usize) -> usize {
        self.legs[v].iter().position(|l| *l == Leg::Edge(e)).expect("edge is a leg of its endpoints")
    }

    /// Node across leg `leg` of node `v`, if the leg is a bond.
    pub fn neighbour(&self, v: usize, leg: usize) -> Option<usize> {
        match self.legs[v][leg] {
            Leg::Edge(e) => Some(if self.edges[e].a == v { self.edges[e].b } else { self.edges[e].a }),
            Leg::Dangling => None,
        }
    }
}

/// Contracts the bonds through the node projectors into the full state,
/// six levels per node.
pub fn build_tricluster(l: &Lattice, term: Termination) -> Result<StateVector> {
    if l.nodes > MAX_TRICLUSTER_NODES {
        return Err(Error::CapExceeded { what: "triCluster nodes".into(), size: l.nodes, cap: MAX_TRICLUSTER_NODES });
    }
    let dims = vec![6; l.nodes];
    let size = checked_size(&dims, 6usize.pow(MAX_TRICLUSTER_NODES as u32))?;
    let ends: Vec<(usize, usize, usize, usize)> =
        l.edges.iter().enumerate().map(|(i, e)| (e.a, l.leg_of(e.a, i), e.b, l.leg_of(e.b, i))).collect();
    let dangling: Vec<(usize, usize)> =
        (0..l.nodes).flat_map(|v| (0..3).filter(move |&k| l.legs[v][k] == Leg::Dangling).map(move |k| (v, k))).collect();
    let bond = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![ZERO; size];
    let mut levels = vec![0usize; l.nodes];
    for (idx, amp) in amps.iter_mut().enumerate() {
        let mut rest = idx;
        for v in (0..l.nodes).rev() {
            levels[v] = rest % 6;
            rest /= 6;
        }
        let mut a = 1.0;
        for &(u, lu, w, lw) in &ends {
            let s = LEVEL_BITS[levels[u]][lu] & LEVEL_BITS[levels[w]][lw];
            a *= if s == 1 { -bond } else { bond };
        }
        for &(v, k) in &dangling {
            a *= term.amp(LEVEL_BITS[levels[v]][k]);
            if a == 0.0 {
                break;
            }
        }
        *amp = r(a);
    }
    Ok(StateVector::new(amps, dims))
}

/// `|+>` on every node and CZ on every edge.
pub fn graph_cluster_state(nodes: usize, edges: &[(usize, usize)]) -> Result<StateVector> {
    if nodes > MAX_GRAPH_NODES {
        return Err(Error::CapExceeded { what: "graph nodes".into(), size: nodes, cap: MAX_GRAPH_NODES });
    }
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= nodes || b >= nodes || a == b) {
        return Err(Error::InvalidParameter(format!("edge ({a}, {b}) is invalid")));
    }
    let norm = (0.5f64).powf(nodes as f64 / 2.0);
    let amps = (0..1usize << nodes)
        .map(|x| {
            let bit = |v: usize| (x >> (nodes - 1 - v)) & 1;
            let parity = edges.iter().map(|&(a, b)| bit(a) & bit(b)).sum::<usize>() & 1;
            r(if parity == 1 { -norm } else { norm })
        })
        .collect();
    Ok(StateVector::new(amps, vec![2; nodes]))
}

/// Map that keeps levels `2j, 2j+1` of a node as a qubit.
fn outcome_map(j: usize) -> RectMat {
    let mut m = RectMat::zeros(2, 6);
    m[(0, 2 * j)] = ONE;
    m[(1, 2 * j + 1)] = ONE;
    m
}

/// `Q_j = P_j P_j†`, the projector onto levels `2j, 2j+1`.
pub fn q_projector(j: usize) -> Mat {
    let mut m = Mat::zeros(6);
    m[(2 * j, 2 * j)] = ONE;
    m[(2 * j + 1, 2 * j + 1)] = ONE;
    m
}

/// Nodes that carry a Z byproduct after the given outcomes. Outcome `j`
/// equals `P0` with an X on leg `3 − j`; that X moves across the bond as a
/// Z on the neighbour. X on a dangling `|+>` leg has no effect.
pub fn z_byproducts(l: &Lattice, outcomes: &[usize]) -> Vec<usize> {
    let mut z = vec![false; l.nodes];
    for (v, &j) in outcomes.iter().enumerate() {
        if j == 0 {
            continue;
        }
        if let Some(w) = l.neighbour(v, 3 - j) {
            z[w] ^= true;
        }
    }
    (0..l.nodes).filter(|&v| z[v]).collect()
}

/// Result of measuring every node of a triCluster state.
#[derive(Clone, Debug)]
pub struct TriclusterRun {
    pub outcomes: Vec<usize>,
    pub probs: Vec<f64>,
    pub z_nodes: Vec<usize>,
    /// Post-measurement qubit state with the Z byproducts undone.
    pub state: StateVector,
    /// Fidelity with the cluster state of the same lattice.
    pub fidelity: f64,
}

fn corrected(l: &Lattice, psi: StateVector, outcomes: &[usize]) -> Result<(StateVector, Vec<usize>, f64)> {
    let z_nodes = z_byproducts(l, outcomes);
    let mut psi = psi;
    for &v in &z_nodes {
        psi = psi.apply_site(v, &op("Z"))?;
    }
    let target = graph_cluster_state(l.nodes, &l.graph_edges())?;
    let f = fidelity(psi.amps(), target.amps());
    Ok((psi, z_nodes, f))
}

/// Post-measurement state for a fixed outcome per node, or `None` when the
/// outcomes have probability zero.
pub fn tricluster_assignment(l: &Lattice, psi: &StateVector, outcomes: &[usize]) -> Result<Option<TriclusterRun>> {
    if outcomes.len() != l.nodes || outcomes.iter().any(|&j| j > 2) {
        return Err(Error::InvalidParameter("one outcome in 0..3 per node".into()));
    }
    let total = psi.norm_sqr();
    let mut out = psi.clone();
    for (v, &j) in outcomes.iter().enumerate() {
        out = out.apply_site_map(v, &outcome_map(j))?;
    }
    let p = out.norm_sqr() / total;
    if p < 1e-14 {
        return Ok(None);
    }
    let (state, z_nodes, f) = corrected(l, out, outcomes)?;
    Ok(Some(TriclusterRun { outcomes: outcomes.to_vec(), probs: vec![p], z_nodes, state, fidelity: f }))
}

/// Measures `Q_j` on every node with Born probabilities, keeps the two
/// surviving levels as a qubit and undoes the Z byproducts.
pub fn tricluster_reduce(l: &Lattice, chooser: &mut dyn OutcomeChooser) -> Result<TriclusterRun> {
    let mut psi = build_tricluster(l, Termination::Plus)?;
    let qs: Vec<Mat> = (0..3).map(q_projector).collect();
    let mut outcomes = Vec::with_capacity(l.nodes);
    let mut probs = Vec::with_capacity(l.nodes);
    for v in 0..l.nodes {
        let weights = qs.iter().map(|q| psi.apply_site(v, q).map(|s| s.norm_sqr())).collect::<Result<Vec<_>>>()?;
        let (j, p) = chooser.choose(&weights)?;
        outcomes.push(j);
        probs.push(p);
        psi = psi.apply_site_map(v, &outcome_map(j))?;
    }
    let (state, z_nodes, f) = corrected(l, psi, &outcomes)?;
    Ok(TriclusterRun { outcomes, probs, z_nodes, state, fidelity: f })
}

/// Cluster wire `(|+><0|, |-><1|)` with the boundaries that make it the
/// path graph state.
pub fn cluster_wire(n: usize) -> Result<Table> {
    Table::uniform(&wire_entries(), n, CVector::from_real(&[1.0, 0.0]), CVector::from_real(&[1.0, 1.0]))
}

fn wire_entries() -> Vec<Mat> {
    let h = op("H");
    vec![&h * &Mat::ket_bra(0, 0, 2), &h * &Mat::ket_bra(1, 1, 2)]
}

fn check_wire(t: &Table, name: &str) -> Result<()> {
    if t.bond_dim() != 2 || t.cols().iter().any(|c| !column_is_multiple(c.mats(), &wire_entries(), 1e-9)) {
        return Err(Error::Precondition(format!("{name} wire is not of the form (|+><0|, |-><1|)")));
    }
    Ok(())
}

/// Graph of two paths of lengths `nt`, `nb` (bottom nodes offset by `nt`)
/// joined at the coupled positions.
pub fn coupled_graph(nt: usize, nb: usize, positions: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = (1..nt).map(|i| (i - 1, i)).collect();
    e.extend((1..nb).map(|i| (nt + i - 1, nt + i)));
    e.extend(positions.iter().map(|&(i, j)| (i, nt + j)));
    e
}

pub fn degrees(nodes: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut d = vec![0; nodes];
    for &(a, b) in edges {
        d[a] += 1;
        d[b] += 1;
    }
    d
}

/// Couples two cluster wires of equal length through the correlation
/// space: at every coupled column the joint entry is
/// `(T_top[a] ⊗ T_bot[b])·(−1)^{ab}/√2`, i.e. Hadamards and a CZ on the
/// joint correlation space. Positions must be aligned (`i == j`); wires
/// that are out of step need synchronizing first. The state lists the top
/// sites, then the bottom sites.
pub fn couple_wires(top: &Table, bottom: &Table, positions: &[(usize, usize)]) -> Result<StateVector> {
    check_wire(top, "top")?;
    check_wire(bottom, "bottom")?;
    if top.len() != bottom.len() {
        return Err(Error::Precondition(format!("wires of length {} and {} are not aligned", top.len(), bottom.len())));
    }
    let n = top.len();
    let mut coupled = vec![false; n];
    for &(i, j) in positions {
        if i != j || i >= n {
            return Err(Error::Precondition(format!("coupling ({i}, {j}) is misaligned")));
        }
        coupled[i] = true;
    }
    let g = std::f64::consts::FRAC_1_SQRT_2;
    let cols: Vec<Vec<Mat>> = (0..n)
        .map(|k| {
            let (ct, cb) = (top.col(k).mats(), bottom.col(k).mats());
            let mut entries = Vec::with_capacity(4);
            for (a, ta) in ct.iter().enumerate() {
                for (b, tb) in cb.iter().enumerate() {
                    let f = if !coupled[k] {
                        1.0
                    } else if a & b == 1 {
                        -g
                    } else {
                        g
                    };
                    entries.push(ta.kron(tb).scale(r(f)));
                }
            }
            entries
        })
        .collect();
    let left = kron_vec(top.left(), bottom.left());
    let right = kron_vec(top.right(), bottom.right());
    let ladder = Table::new(cols, left, right)?.expand()?;
    // digits are t0 b0 t1 b1 …; reorder to t0 … t_{n−1} b0 … b_{n−1}
    let mut perm = Vec::with_capacity(2 * n);
    perm.extend((0..n).map(|k| 2 * k));
    perm.extend((0..n).map(|k| 2 * k + 1));
    permute_qubits(&StateVector::new(ladder.amps().to_vec(), vec![2; 2 * n]), &perm)
}

/// The same coupling by direct contraction of the `B` and `C` tensors:
/// the vertical leg of `B[a]` is `|h_a>` and that of `C[b]` is `|b>`, and
/// contracting them gives `<b|h_a> = (−1)^{ab}/√2`. Positions need not be
/// aligned here.
pub fn couple_wires_direct(top: &Table, bottom: &Table, positions: &[(usize, usize)]) -> Result<StateVector> {
    check_wire(top, "top")?;
    check_wire(bottom, "bottom")?;
    let (nt, nb) = (top.len(), bottom.len());
    if let Some(&(i, j)) = positions.iter().find(|&&(i, j)| i >= nt || j >= nb) {
        return Err(Error::InvalidParameter(format!("coupling ({i}, {j}) out of range")));
    }
    let a = top.expand()?;
    let b = bottom.expand()?;
    checked_size(&vec![2; nt + nb], EXPAND_CAP)?;
    let g = std::f64::consts::FRAC_1_SQRT_2.powi(positions.len() as i32);
    let mut amps = Vec::with_capacity(a.len() * b.len());
    for (x, za) in a.amps().iter().enumerate() {
        for (y, zb) in b.amps().iter().enumerate() {
            let sign: usize = positions.iter().map(|&(i, j)| ((x >> (nt - 1 - i)) & 1) & ((y >> (nb - 1 - j)) & 1)).sum();
            let s = if sign & 1 == 1 { -g } else { g };
            amps.push(za * zb * s);
        }
    }
    Ok(StateVector::new(amps, vec![2; nt + nb]))
}

fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let v: Vec<C64> = a.as_slice().iter().flat_map(|x| b.as_slice().iter().map(move |y| x * y)).collect();
    CVector::from_vec(v)
}

/// Reorders qubits: qubit `k` of the result is qubit `perm[k]` of `psi`.
pub fn permute_qubits(psi: &StateVector, perm: &[usize]) -> Result<StateVector> {
    let n = perm.len();
    if psi.dims() != vec![2; n].as_slice() {
        return Err(Error::Shape("permute_qubits needs a qubit state of matching size".into()));
    }
    let mut amps = vec![ZERO; psi.len()];
    for (x, amp) in amps.iter_mut().enumerate() {
        let mut src = 0usize;
        for (k, &p) in perm.iter().enumerate() {
            let bit = (x >> (n - 1 - k)) & 1;
            src |= bit << (n - 1 - p);
        }
        *amp = psi.amps()[src];
    }
    Ok(StateVector::new(amps, vec![2; n]))
}
