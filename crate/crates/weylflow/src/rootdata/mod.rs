//! Exact root data for the supported affine types.
//!
//! Points of the ambient space are stored by their pairings with the simple
//! roots, `x ↦ (⟨x, β_1⟩, …, ⟨x, β_n⟩)`, so the fundamental coweights are the
//! standard basis vectors and the coweight lattice is `ℤ^n`.  Roots are stored
//! as integer coefficient vectors over the simple roots; the inner product on
//! root space is the Gram matrix of the simple roots.

mod sector;

pub use sector::{truncated_sector, Adjacent, CoweightVertex, Face, TruncatedSector, Vertex};

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

/// A point given by its pairings with the simple roots.
pub type Point = Vec<Rational>;

const COXETER_CAP: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootSystemKind {
    #[serde(rename = "A1~")]
    A1,
    #[serde(rename = "BC1~")]
    BC1,
    #[serde(rename = "A2~")]
    A2,
    #[serde(rename = "B2~")]
    B2,
    #[serde(rename = "G2~")]
    G2,
}

impl RootSystemKind {
    pub const ALL: [RootSystemKind; 5] = [Self::A1, Self::BC1, Self::A2, Self::B2, Self::G2];

    pub fn name(self) -> &'static str {
        match self {
            Self::A1 => "A1~",
            Self::BC1 => "BC1~",
            Self::A2 => "A2~",
            Self::B2 => "B2~",
            Self::G2 => "G2~",
        }
    }

    pub fn rank(self) -> usize {
        match self {
            Self::A1 | Self::BC1 => 1,
            Self::A2 | Self::B2 | Self::G2 => 2,
        }
    }

    /// Size of the index set `I = {0, …, rank}`.
    pub fn num_types(self) -> usize {
        self.rank() + 1
    }

    pub fn is_reduced(self) -> bool {
        self != Self::BC1
    }

    fn gram(self) -> Vec<Vec<i64>> {
        match self {
            Self::A1 | Self::BC1 => vec![vec![2]],
            Self::A2 => vec![vec![2, -1], vec![-1, 2]],
            // β1 long, β2 short
            Self::B2 => vec![vec![2, -1], vec![-1, 1]],
            // β1 short, β2 long
            Self::G2 => vec![vec![2, -3], vec![-3, 6]],
        }
    }
}

impl fmt::Display for RootSystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RootSystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnsupportedKind(s.to_string()))
    }
}

/// Integer coordinates in the basis of fundamental coweights.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coweight(pub Vec<i64>);

impl Coweight {
    pub fn zero(rank: usize) -> Self {
        Coweight(vec![0; rank])
    }

    pub fn fundamental(rank: usize, i: usize) -> Self {
        let mut a = vec![0; rank];
        a[i] = 1;
        Coweight(a)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// The ℓ¹ norm `|λ|`.
    pub fn norm(&self) -> usize {
        self.0.iter().map(|a| a.unsigned_abs() as usize).sum()
    }

    pub fn is_dominant(&self) -> bool {
        self.0.iter().all(|&a| a >= 0)
    }

    pub fn is_strongly_dominant(&self) -> bool {
        self.0.iter().all(|&a| a >= 1)
    }

    pub fn add(&self, other: &Coweight) -> Coweight {
        Coweight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Coweight {
        Coweight(self.0.iter().map(|a| -a).collect())
    }

    pub fn to_point(&self) -> Point {
        self.0.iter().map(|&a| Rational::from_integer(a)).collect()
    }
}

/// `|λ|` for a coweight given in the ϖ basis.
pub fn coweight_norm(lambda: &Coweight) -> usize {
    lambda.norm()
}

/// All dominant coweights of norm at most `n`, ordered by norm and then
/// lexicographically.
pub fn dominant_coweights(rank: usize, n: usize) -> Vec<Coweight> {
    let mut out = Vec::new();
    for total in 0..=n {
        compositions(rank, total, &mut Vec::new(), &mut out);
    }
    out
}

fn compositions(parts: usize, total: usize, prefix: &mut Vec<i64>, out: &mut Vec<Coweight>) {
    if parts == 1 {
        prefix.push(total as i64);
        out.push(Coweight(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first as i64);
        compositions(parts - 1, total - first, prefix, out);
        prefix.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeRotation {
    pub perm: Vec<usize>,
    pub rep: Coweight,
}

impl TypeRotation {
    pub fn apply(&self, t: usize) -> usize {
        self.perm[t]
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Thickness parameters `q_i`, one per type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSystem {
    pub q: Vec<u64>,
}

impl ParameterSystem {
    pub fn new(q: Vec<u64>) -> Self {
        ParameterSystem { q }
    }

    pub fn uniform(num_types: usize, q: u64) -> Self {
        ParameterSystem {
            q: vec![q; num_types],
        }
    }

    /// Check positivity, equality across odd Coxeter bonds and invariance under
    /// type rotations.
    pub fn check(&self, rs: &RootSystem) -> std::result::Result<(), String> {
        let nt = rs.num_types();
        if self.q.len() != nt {
            return Err(format!("expected {} parameters, got {}", nt, self.q.len()));
        }
        if let Some(i) = self.q.iter().position(|&q| q == 0) {
            return Err(format!("q_{i} = 0"));
        }
        for i in 0..nt {
            for j in 0..nt {
                if let Some(m) = rs.coxeter[i][j] {
                    if i != j && m % 2 == 1 && self.q[i] != self.q[j] {
                        return Err(format!("m_{i}{j} = {m} is odd but q_{i} != q_{j}"));
                    }
                }
            }
        }
        for rot in &rs.type_rotations {
            for i in 0..nt {
                if self.q[i] != self.q[rot.perm[i]] {
                    return Err(format!(
                        "q not invariant under type rotation {:?}",
                        rot.perm
                    ));
                }
            }
        }
        Ok(())
    }
}

/// An alcove given by its vertices, indexed by type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alcove {
    pub vertices: Vec<Point>,
}

impl Alcove {
    /// Sum of the vertices; identifies the alcove.
    pub fn key(&self) -> Point {
        let mut s = vec![Rational::zero(); self.vertices[0].len()];
        for v in &self.vertices {
            for (a, b) in s.iter_mut().zip(v) {
                *a += b;
            }
        }
        s
    }

    pub fn barycenter(&self) -> Point {
        let k = Rational::from_integer(self.vertices.len() as i64);
        self.key().into_iter().map(|a| a / k).collect()
    }

    pub fn translate(&self, by: &Point) -> Alcove {
        Alcove {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().zip(by).map(|(a, b)| a + b).collect())
                .collect(),
        }
    }
}

/// One minimal alcove walk together with its length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlcoveWalk {
    pub crossing_types: Vec<usize>,
}

impl AlcoveWalk {
    pub fn len(&self) -> usize {
        self.crossing_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crossing_types.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct RootSystem {
    pub kind: RootSystemKind,
    pub rank: usize,
    /// `⟨β_i, β_j⟩`.
    pub gram: Vec<Vec<Rational>>,
    /// Positive roots as coefficient vectors over the simple roots.
    pub positive_roots: Vec<Vec<i64>>,
    /// Coroot of each positive root, as a point.
    pub coroots: Vec<Point>,
    /// Coefficients `m_β` of the highest root.
    pub highest_root: Vec<i64>,
    /// `None` encodes `m_ij = ∞`.
    pub coxeter: Vec<Vec<Option<u32>>>,
    pub type_rotations: Vec<TypeRotation>,
    pub good_types: Vec<usize>,
    highest_index: usize,
}

pub fn build_root_system(kind: RootSystemKind) -> RootSystem {
    RootSystem::new(kind)
}

impl RootSystem {
    pub fn new(kind: RootSystemKind) -> Self {
        let rank = kind.rank();
        let gram: Vec<Vec<Rational>> = kind
            .gram()
            .into_iter()
            .map(|row| row.into_iter().map(Rational::from_integer).collect())
            .collect();
        let positive_roots = positive_roots(kind, &gram);
        let coroots = positive_roots.iter().map(|a| coroot(&gram, a)).collect();
        let highest_index = (0..positive_roots.len())
            .max_by_key(|&i| positive_roots[i].iter().sum::<i64>())
            .unwrap();
        let highest_root = positive_roots[highest_index].clone();
        let mut rs = RootSystem {
            kind,
            rank,
            gram,
            positive_roots,
            coroots,
            highest_root,
            coxeter: Vec::new(),
            type_rotations: Vec::new(),
            good_types: Vec::new(),
            highest_index,
        };
        rs.coxeter = rs.compute_coxeter();
        rs.type_rotations = rs.compute_type_rotations();
        rs.good_types = dominant_coweights(rank, 2)
            .iter()
            .map(|l| {
                rs.vertex_type(&l.to_point())
                    .expect("coweights are vertices")
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        rs
    }

    pub fn num_types(&self) -> usize {
        self.rank + 1
    }

    pub fn simple_root(&self, i: usize) -> Vec<i64> {
        let mut a = vec![0; self.rank];
        a[i] = 1;
        a
    }

    /// `⟨u, v⟩` for vectors given in the simple-root basis.
    pub fn inner(&self, u: &[Rational], v: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for i in 0..self.rank {
            for j in 0..self.rank {
                s += u[i] * self.gram[i][j] * v[j];
            }
        }
        s
    }

    /// Fundamental coweight ϖ_i expressed in the simple-root basis.
    pub fn fundamental_coweight(&self, i: usize) -> Vec<Rational> {
        invert(&self.gram)[i].clone()
    }

    /// `⟨x, α⟩` for a point and a root given by coefficients.
    pub fn pair(&self, x: &[Rational], root: &[i64]) -> Rational {
        x.iter()
            .zip(root)
            .map(|(c, &a)| c * Rational::from_integer(a))
            .fold(Rational::zero(), |s, t| s + t)
    }

    /// Affine reflection in the wall `⟨x, α⟩ = k` for the positive root with
    /// index `root`.
    pub fn reflect(&self, x: &[Rational], root: usize, k: i64) -> Point {
        let d = self.pair(x, &self.positive_roots[root]) - Rational::from_integer(k);
        x.iter()
            .zip(&self.coroots[root])
            .map(|(c, v)| c - d * v)
            .collect()
    }

    /// Simple affine reflection `s_i`; `s_0` is the reflection in `⟨x, α̌⟩ = 1`.
    pub fn simple_reflection(&self, i: usize, x: &[Rational]) -> Point {
        if i == 0 {
            self.reflect(x, self.highest_index, 1)
        } else {
            let idx = self
                .positive_roots
                .iter()
                .position(|r| *r == self.simple_root(i - 1))
                .unwrap();
            self.reflect(x, idx, 0)
        }
    }

    /// Vertex of the fundamental alcove of type `t`: `0` or `ϖ_t / m_t`.
    pub fn c0_vertex(&self, t: usize) -> Point {
        let mut p = vec![Rational::zero(); self.rank];
        if t > 0 {
            p[t - 1] = Rational::new(1, self.highest_root[t - 1]);
        }
        p
    }

    pub fn fundamental_alcove(&self) -> Alcove {
        Alcove {
            vertices: (0..self.num_types()).map(|t| self.c0_vertex(t)).collect(),
        }
    }

    /// Move `x` into the closed fundamental alcove by simple reflections.
    pub fn fold(&self, x: &[Rational]) -> Point {
        let mut x = x.to_vec();
        let one = Rational::one();
        loop {
            if let Some(j) = x.iter().position(|c| c.is_negative()) {
                x = self.simple_reflection(j + 1, &x);
            } else if self.pair(&x, &self.highest_root) > one {
                x = self.simple_reflection(0, &x);
            } else {
                return x;
            }
        }
    }

    /// Type of a vertex of the tessellation, `None` for non-vertices.
    pub fn vertex_type(&self, x: &[Rational]) -> Option<usize> {
        let f = self.fold(x);
        (0..self.num_types()).find(|&t| self.c0_vertex(t) == f)
    }

    /// The wall through all of `panel` that misses `off`.
    fn wall_through(&self, panel: &[&Point], off: &Point) -> Option<(usize, i64)> {
        'roots: for (r, root) in self.positive_roots.iter().enumerate() {
            let k = self.pair(panel[0], root);
            if !k.is_integer() || self.pair(off, root) == k {
                continue;
            }
            for p in &panel[1..] {
                if self.pair(p, root) != k {
                    continue 'roots;
                }
            }
            return Some((r, k.to_integer()));
        }
        None
    }

    /// The alcove sharing with `a` the panel opposite its type-`t` vertex.
    pub fn reflect_alcove(&self, a: &Alcove, t: usize) -> Alcove {
        let panel: Vec<&Point> = (0..a.vertices.len())
            .filter(|&s| s != t)
            .map(|s| &a.vertices[s])
            .collect();
        let (r, k) = self
            .wall_through(&panel, &a.vertices[t])
            .expect("every panel spans a wall");
        let mut b = a.clone();
        b.vertices[t] = self.reflect(&a.vertices[t], r, k);
        b
    }

    fn compute_coxeter(&self) -> Vec<Vec<Option<u32>>> {
        let nt = self.num_types();
        // an affine basis plus a generic point
        let mut samples: Vec<Point> = (0..nt).map(|t| self.c0_vertex(t)).collect();
        samples.push(
            (0..self.rank)
                .map(|j| Rational::new(1, 3 + 4 * j as i64))
                .collect(),
        );
        let mut m = vec![vec![None; nt]; nt];
        for i in 0..nt {
            for j in 0..nt {
                if i == j {
                    m[i][j] = Some(1);
                    continue;
                }
                let mut pts = samples.clone();
                for k in 1..=COXETER_CAP {
                    pts = pts
                        .iter()
                        .map(|p| self.simple_reflection(i, &self.simple_reflection(j, p)))
                        .collect();
                    if pts == samples {
                        m[i][j] = Some(k);
                        break;
                    }
                }
            }
        }
        m
    }

    /// `t ↦ type(v_t + λ)`.
    pub fn rotation_of(&self, lambda: &Coweight) -> Vec<usize> {
        let shift = lambda.to_point();
        (0..self.num_types())
            .map(|t| {
                let v: Point = self
                    .c0_vertex(t)
                    .iter()
                    .zip(&shift)
                    .map(|(a, b)| a + b)
                    .collect();
                self.vertex_type(&v)
                    .expect("translates of vertices are vertices")
            })
            .collect()
    }

    fn compute_type_rotations(&self) -> Vec<TypeRotation> {
        let id = TypeRotation {
            perm: (0..self.num_types()).collect(),
            rep: Coweight::zero(self.rank),
        };
        let mut group = vec![id];
        let mut queue = VecDeque::from([0usize]);
        while let Some(e) = queue.pop_front() {
            for i in 0..self.rank {
                let rep = group[e].rep.add(&Coweight::fundamental(self.rank, i));
                let perm = self.rotation_of(&rep);
                if !group.iter().any(|g| g.perm == perm) {
                    group.push(TypeRotation { perm, rep });
                    queue.push_back(group.len() - 1);
                }
            }
        }
        group
    }

    /// Index into `type_rotations` of the rotation induced by translation by λ.
    pub fn rotation_index(&self, lambda: &Coweight) -> usize {
        let perm = self.rotation_of(lambda);
        self.type_rotations
            .iter()
            .position(|g| g.perm == perm)
            .expect("rotation group is closed")
    }

    /// Index of `a ∘ b` in the rotation group.
    pub fn compose_rotations(&self, a: usize, b: usize) -> usize {
        let pa = &self.type_rotations[a].perm;
        let pb = &self.type_rotations[b].perm;
        let perm: Vec<usize> = pb.iter().map(|&t| pa[t]).collect();
        self.type_rotations
            .iter()
            .position(|g| g.perm == perm)
            .expect("rotation group is closed")
    }

    /// Breadth-first alcove search from `C_0` to `C_0 + λ` in the whole
    /// Coxeter complex; returns the type products of all minimal walks and one
    /// such walk.
    fn walks_to(&self, lambda: &Coweight, q: &[u64]) -> (BTreeSet<u64>, AlcoveWalk) {
        let c0 = self.fundamental_alcove();
        let target = c0.translate(&lambda.to_point()).key();
        let mut alcoves = vec![c0.clone()];
        let mut index: HashMap<Point, usize> = HashMap::from([(c0.key(), 0)]);
        let mut depth = vec![0usize];
        let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut frontier = vec![0usize];
        let mut found = index.get(&target).copied();
        while found.is_none() {
            let mut next = Vec::new();
            for &a in &frontier {
                for t in 0..self.num_types() {
                    let b = self.reflect_alcove(&alcoves[a], t);
                    let key = b.key();
                    match index.get(&key) {
                        Some(&j) => {
                            if depth[j] == depth[a] + 1 {
                                preds[j].push((a, t));
                            }
                        }
                        None => {
                            let j = alcoves.len();
                            index.insert(key.clone(), j);
                            alcoves.push(b);
                            depth.push(depth[a] + 1);
                            preds.push(vec![(a, t)]);
                            next.push(j);
                            if key == target {
                                found = Some(j);
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        let goal = found.unwrap();
        // products over all minimal walks, layer by layer
        let mut order: Vec<usize> = (0..alcoves.len()).collect();
        order.sort_by_key(|&a| depth[a]);
        let mut products: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); alcoves.len()];
        products[0].insert(1);
        for &a in &order[1..] {
            if depth[a] > depth[goal] {
                break;
            }
            let mut set = BTreeSet::new();
            for &(p, t) in &preds[a] {
                for &x in &products[p] {
                    set.insert(x * q[t]);
                }
            }
            products[a] = set;
        }
        let mut types = Vec::new();
        let mut cur = goal;
        while cur != 0 {
            let (p, t) = preds[cur][0];
            types.push(t);
            cur = p;
        }
        types.reverse();
        (
            products[goal].clone(),
            AlcoveWalk {
                crossing_types: types,
            },
        )
    }

    /// One minimal alcove walk from `C_0` to `C_0 + λ` (any λ).
    pub fn minimal_walk(&self, lambda: &Coweight) -> AlcoveWalk {
        self.walks_to(lambda, &vec![1; self.num_types()]).1
    }

    /// The set of type products `q_{i_1}⋯q_{i_d}` over every minimal walk to
    /// `C_0 + λ`; a singleton for a regular parameter system.
    pub fn walk_products(&self, q: &ParameterSystem, lambda: &Coweight) -> BTreeSet<u64> {
        self.walks_to(lambda, &q.q).0
    }

    /// `q_{t_μ}` for dominant μ.
    pub fn translation_parameter(&self, q: &ParameterSystem, mu: &Coweight) -> Result<u64> {
        if !mu.is_dominant() {
            return Err(Error::NotDominant(mu.0.clone()));
        }
        let (products, _) = self.walks_to(mu, &q.q);
        Ok(*products.iter().next().unwrap())
    }
}

fn positive_roots(kind: RootSystemKind, gram: &[Vec<Rational>]) -> Vec<Vec<i64>> {
    let rank = gram.len();
    let simple: Vec<Vec<i64>> = (0..rank)
        .map(|i| {
            let mut a = vec![0; rank];
            a[i] = 1;
            a
        })
        .collect();
    let mut roots: BTreeSet<Vec<i64>> = simple.iter().cloned().collect();
    let mut queue: VecDeque<Vec<i64>> = simple.iter().cloned().collect();
    while let Some(a) = queue.pop_front() {
        for i in 0..rank {
            // s_i(α) = α − ⟨α, β_i^∨⟩ β_i
            let ip: Rational = (0..rank)
                .map(|k| Rational::from_integer(a[k]) * gram[k][i])
                .sum();
            let c = (Rational::from_integer(2) * ip / gram[i][i]).to_integer();
            let mut b = a.clone();
            b[i] -= c;
            if roots.insert(b.clone()) {
                queue.push_back(b);
            }
        }
    }
    let mut pos: Vec<Vec<i64>> = roots
        .into_iter()
        .filter(|a| a.iter().all(|&c| c >= 0))
        .collect();
    if kind == RootSystemKind::BC1 {
        pos.push(vec![2]);
    }
    pos.sort_by_key(|a| (a.iter().sum::<i64>(), a.clone()));
    pos
}

fn coroot(gram: &[Vec<Rational>], a: &[i64]) -> Point {
    let rank = gram.len();
    let ip = |j: usize| -> Rational {
        (0..rank)
            .map(|k| Rational::from_integer(a[k]) * gram[k][j])
            .sum()
    };
    let norm: Rational = (0..rank)
        .map(|j| Rational::from_integer(a[j]) * ip(j))
        .sum();
    (0..rank)
        .map(|j| Rational::from_integer(2) * ip(j) / norm)
        .collect()
}

fn invert(m: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut inv: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("Gram matrix is invertible");
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for j in 0..n {
                    let (x, y) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * x;
                    inv[r][j] -= f * y;
                }
            }
        }
    }
    inv
}
