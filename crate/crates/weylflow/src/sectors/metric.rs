use rayon::prelude::*;
use serde::Serialize;

use super::{GermSpace, GermTable, SectorGerm};
use crate::error::{Error, Result};
use crate::rootdata::{dominant_coweights, Coweight};

/// Marker for an unresolved `k` in a [`KMatrix`].
pub const K_NONE: u8 = u8::MAX;

/// Agreement data of two germs of the same radius.  `None` stands for "at
/// least `radius + 1`".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceResult {
    pub radius: usize,
    pub k: Option<usize>,
    pub k_directional: Vec<Option<usize>>,
    /// Truncation vertices in the agreement component of `0`, ascending.
    pub region: Vec<usize>,
}

impl DistanceResult {
    pub fn is_resolved(&self) -> bool {
        self.k.is_some()
    }

    /// `θ^k`, or the bound `θ^n` when `k` is not resolved at this radius.
    pub fn d_theta(&self, theta: f64) -> f64 {
        theta.powi(self.k.unwrap_or(self.radius) as i32)
    }
}

/// 1-skeleton of a truncation prefix with the coweight vertices.
pub(crate) struct Skeleton {
    pub nv: usize,
    /// Face index of each vertex, then of each edge.
    faces: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
    /// `(vertex, norm)` of the dominant coweights of norm at most `radius`,
    /// by norm.
    coweights: Vec<(usize, usize)>,
    /// `rays[i][ℓ − 1]` is the vertex `ℓ ϖ_i`.
    rays: Vec<Vec<usize>>,
}

impl Skeleton {
    pub fn new(space: &GermSpace, n: usize) -> Self {
        let sector = &space.sector;
        let nv = sector.vertex_count(n);
        let nf = sector.face_count(n);
        let mut vertex_face = vec![usize::MAX; nv];
        let mut edges = Vec::new();
        for (f, face) in sector.faces[..nf].iter().enumerate() {
            match face.vertices.len() {
                1 => vertex_face[face.vertices[0]] = f,
                2 => edges.push((face.vertices[0], face.vertices[1], f)),
                _ => {}
            }
        }
        let mut adj = vec![Vec::new(); nv];
        for (e, &(u, v, _)) in edges.iter().enumerate() {
            adj[u].push((v, nv + e));
            adj[v].push((u, nv + e));
        }
        let mut faces = vertex_face;
        faces.extend(edges.iter().map(|e| e.2));
        let coweights: Vec<(usize, usize)> = sector
            .coweight_vertices
            .iter()
            .filter(|c| c.norm <= n)
            .map(|c| (c.vertex, c.norm))
            .collect();
        let rank = space.rs.rank;
        let rays = (0..rank)
            .map(|i| {
                (1..=n)
                    .map(|l| {
                        let mut a = vec![0i64; rank];
                        a[i] = l as i64;
                        let lam = Coweight(a);
                        sector
                            .coweight_vertices
                            .iter()
                            .find(|c| c.coweight == lam)
                            .unwrap()
                            .vertex
                    })
                    .collect()
            })
            .collect();
        Skeleton {
            nv,
            faces,
            adj,
            coweights,
            rays,
        }
    }

    pub fn width(&self) -> usize {
        self.faces.len()
    }

    /// Residue labels of the image of every vertex and edge.
    pub fn keys(&self, space: &GermSpace, sigma: usize, images: &[u32]) -> Vec<u32> {
        let full = space.full_mask();
        self.faces
            .iter()
            .map(|&f| {
                let face = &space.sector.faces[f];
                let mask = full & !space.rotate_mask(sigma, face.types);
                space.label(mask, images[face.alcove])
            })
            .collect()
    }

    /// Fills `inside` with the agreement component of vertex `0`.
    pub fn region(&self, a: &[u32], b: &[u32], inside: &mut Vec<bool>) {
        inside.clear();
        inside.resize(self.nv, false);
        if a[0] != b[0] {
            return;
        }
        inside[0] = true;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for &(w, e) in &self.adj[v] {
                if !inside[w] && a[e] == b[e] {
                    inside[w] = true;
                    stack.push(w);
                }
            }
        }
    }

    pub fn k_of(&self, inside: &[bool]) -> Option<usize> {
        self.coweights
            .iter()
            .find(|&&(v, _)| !inside[v])
            .map(|&(_, norm)| norm)
    }

    pub fn k_dir(&self, inside: &[bool], i: usize) -> Option<usize> {
        if !inside[0] {
            return Some(0);
        }
        self.rays[i].iter().position(|&v| !inside[v]).map(|l| l + 1)
    }

    pub fn contains(&self, inside: &[bool], space: &GermSpace, mu: &Coweight) -> bool {
        space
            .sector
            .coweight_vertices
            .iter()
            .find(|c| &c.coweight == mu)
            .is_some_and(|c| c.vertex < self.nv && inside[c.vertex])
    }
}

/// Face keys for every germ of a table.
pub(crate) struct KeyTable {
    pub skeleton: Skeleton,
    keys: Vec<u32>,
}

impl KeyTable {
    pub fn new(space: &GermSpace, table: &GermTable) -> Self {
        let skeleton = Skeleton::new(space, table.radius);
        let keys: Vec<u32> = (0..table.len())
            .into_par_iter()
            .flat_map_iter(|i| skeleton.keys(space, table.sigma(i), table.images(i)))
            .collect();
        KeyTable { skeleton, keys }
    }

    pub fn get(&self, i: usize) -> &[u32] {
        let w = self.skeleton.width();
        &self.keys[i * w..(i + 1) * w]
    }
}

/// Symmetric matrix of `k(g_i, g_j)` over a germ table, `K_NONE` when
/// unresolved.
#[derive(Clone, Debug)]
pub struct KMatrix {
    pub radius: usize,
    pub size: usize,
    data: Vec<u8>,
}

impl KMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        match self.data[i * self.size + j] {
            K_NONE => None,
            k => Some(k as usize),
        }
    }

    pub fn raw(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.size + j]
    }

    /// Classes of the relation `k ≥ t` (unresolved counts as infinite), as a
    /// dense label per germ; `None` when the relation is not transitive.
    pub fn classes(&self, t: usize) -> Option<Vec<usize>> {
        let n = self.size;
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for i in 0..n {
            if label[i] != usize::MAX {
                continue;
            }
            label[i] = next;
            for j in i + 1..n {
                if self.raw(i, j) as usize >= t {
                    if label[j] != usize::MAX {
                        return None;
                    }
                    label[j] = next;
                }
            }
            next += 1;
        }
        // every pair inside a class must be related
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); next];
        for (i, &l) in label.iter().enumerate() {
            members[l].push(i);
        }
        for m in &members {
            for (x, &i) in m.iter().enumerate() {
                for &j in &m[x + 1..] {
                    if (self.raw(i, j) as usize) < t {
                        return None;
                    }
                }
            }
        }
        Some(label)
    }
}

/// Violation counts of the metric properties over all germ pairs of one
/// radius.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MetricReport {
    pub radius: usize,
    pub germs: usize,
    pub pairs: u64,
    pub ultrametric: u64,
    pub max_formula: u64,
    pub monotonicity_checked: u64,
    pub monotonicity: u64,
    pub key_checked: u64,
    pub key_inequality: u64,
    pub directional_checked: u64,
    pub directional: u64,
    /// Distinct germs whose distance is not resolved at this radius.
    pub unresolved_distinct: u64,
}

impl MetricReport {
    pub fn violations(&self) -> u64 {
        self.ultrametric
            + self.max_formula
            + self.monotonicity
            + self.key_inequality
            + self.directional
    }

    fn merge(mut self, o: MetricReport) -> MetricReport {
        self.pairs += o.pairs;
        self.ultrametric += o.ultrametric;
        self.max_formula += o.max_formula;
        self.monotonicity_checked += o.monotonicity_checked;
        self.monotonicity += o.monotonicity;
        self.key_checked += o.key_checked;
        self.key_inequality += o.key_inequality;
        self.directional_checked += o.directional_checked;
        self.directional += o.directional;
        self.unresolved_distinct += o.unresolved_distinct;
        self
    }
}

/// Lower bound on a possibly unresolved `k` at radius `r`.
fn lower(k: Option<usize>, r: usize) -> usize {
    k.unwrap_or(r + 1)
}

impl GermSpace {
    pub fn distance(&self, g1: &SectorGerm, g2: &SectorGerm) -> Result<DistanceResult> {
        if g1.radius != g2.radius {
            return Err(Error::Dimension(format!(
                "germ radii {} and {} differ",
                g1.radius, g2.radius
            )));
        }
        self.check_radius(g1.radius)?;
        let sk = Skeleton::new(self, g1.radius);
        let rank = self.rs.rank;
        if g1.sigma != g2.sigma {
            return Ok(DistanceResult {
                radius: g1.radius,
                k: Some(0),
                k_directional: vec![Some(0); rank],
                region: vec![],
            });
        }
        let (a, b) = (
            sk.keys(self, g1.sigma, &g1.chambers),
            sk.keys(self, g2.sigma, &g2.chambers),
        );
        let mut inside = Vec::new();
        sk.region(&a, &b, &mut inside);
        Ok(DistanceResult {
            radius: g1.radius,
            k: sk.k_of(&inside),
            k_directional: (0..rank).map(|i| sk.k_dir(&inside, i)).collect(),
            region: (0..sk.nv).filter(|&v| inside[v]).collect(),
        })
    }

    pub fn directional_k(
        &self,
        g1: &SectorGerm,
        g2: &SectorGerm,
        i: usize,
    ) -> Result<Option<usize>> {
        if i >= self.rs.rank {
            return Err(Error::Dimension(format!("direction {i} out of range")));
        }
        Ok(self.distance(g1, g2)?.k_directional[i])
    }

    pub fn k_matrix(&self, table: &GermTable) -> KMatrix {
        let keys = KeyTable::new(self, table);
        let n = table.len();
        let rows: Vec<Vec<u8>> = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |inside, i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            return K_NONE;
                        }
                        if table.sigma(i) != table.sigma(j) {
                            return 0;
                        }
                        keys.skeleton.region(keys.get(i), keys.get(j), inside);
                        keys.skeleton.k_of(inside).map_or(K_NONE, |k| k as u8)
                    })
                    .collect()
            })
            .collect();
        KMatrix {
            radius: table.radius,
            size: n,
            data: rows.concat(),
        }
    }

    /// Check the ultrametric inequality, the max-over-directions formula, the
    /// behaviour under shifts and that only equal germs are unresolved, over
    /// every pair of germs of `tables[n - 1]`.  `tables[r - 1]` must hold the
    /// radius-`r` germs for all `r ≤ n`.
    pub fn check_metric(&self, tables: &[GermTable], n: usize) -> Result<MetricReport> {
        self.check_radius(n)?;
        let table = &tables[n - 1];
        let rank = self.rs.rank;
        let keys: Vec<KeyTable> = tables[..n].iter().map(|t| KeyTable::new(self, t)).collect();
        let here = &keys[n - 1];

        // shifts available at this radius, with the shifted germ positions
        let shifts: Vec<Coweight> = dominant_coweights(rank, n.saturating_sub(1))
            .into_iter()
            .filter(|m| m.norm() >= 1)
            .collect();
        let mut shifted: Vec<Vec<usize>> = Vec::with_capacity(shifts.len());
        for mu in &shifts {
            let at = self.shift_positions(mu, n)?;
            let small = &tables[n - mu.norm() - 1];
            let map = (0..table.len())
                .into_par_iter()
                .map(|i| {
                    let s = self.shifted_sigma(table.sigma(i), mu);
                    let img: Vec<u32> = at.iter().map(|&a| table.images(i)[a]).collect();
                    small
                        .find(s, &img)
                        .ok_or_else(|| Error::Invalid("shifted germ missing from table".into()))
                })
                .collect::<Result<Vec<usize>>>()?;
            shifted.push(map);
        }
        let fundamental: Vec<Option<usize>> = (0..rank)
            .map(|i| {
                shifts
                    .iter()
                    .position(|m| *m == Coweight::fundamental(rank, i))
            })
            .collect();

        let kmat = self.k_matrix(table);
        let size = table.len();
        let mut report = (0..size)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(inside, inside2), i| {
                    let mut r = MetricReport::default();
                    for j in i + 1..size {
                        r.pairs += 1;
                        let k = kmat.get(i, j);
                        if k.is_none() && table.images(i) != table.images(j) {
                            r.unresolved_distinct += 1;
                        }
                        if table.sigma(i) != table.sigma(j) {
                            continue;
                        }
                        here.skeleton.region(here.get(i), here.get(j), inside);
                        let kd: Vec<Option<usize>> =
                            (0..rank).map(|d| here.skeleton.k_dir(inside, d)).collect();
                        let min_dir = kd.iter().map(|x| lower(*x, n)).min().unwrap();
                        if lower(k, n) != min_dir {
                            r.max_formula += 1;
                        }
                        let Some(k) = k else { continue };
                        for (s, mu) in shifts.iter().enumerate() {
                            if !here.skeleton.contains(inside, self, mu) {
                                continue;
                            }
                            let m = n - mu.norm();
                            let small = &keys[m - 1];
                            let (a, b) = (shifted[s][i], shifted[s][j]);
                            small.skeleton.region(small.get(a), small.get(b), inside2);
                            let k2 = small.skeleton.k_of(inside2);
                            r.monotonicity_checked += 1;
                            if lower(k2, m) > k {
                                r.monotonicity += 1;
                            }
                            if mu.is_strongly_dominant() {
                                r.key_checked += 1;
                                if lower(k2, m) + 1 > k {
                                    r.key_inequality += 1;
                                }
                            }
                            if let Some(d) = fundamental.iter().position(|f| *f == Some(s)) {
                                r.directional_checked += 1;
                                let kd2: Vec<Option<usize>> = (0..rank)
                                    .map(|e| small.skeleton.k_dir(inside2, e))
                                    .collect();
                                for e in 0..rank {
                                    let bad = if e == d {
                                        match kd[e] {
                                            Some(x) => kd2[e] != Some(x - 1),
                                            None => kd2[e].is_some(),
                                        }
                                    } else {
                                        kd[e].is_some_and(|x| lower(kd2[e], m) > x)
                                    };
                                    if bad {
                                        r.directional += 1;
                                    }
                                }
                            }
                        }
                    }
                    r
                },
            )
            .reduce(MetricReport::default, MetricReport::merge);
        report.radius = n;
        report.germs = size;
        for t in 1..=n + 1 {
            if kmat.classes(t).is_none() {
                report.ultrametric += 1;
            }
        }
        Ok(report)
    }
}
