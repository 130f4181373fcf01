use std::collections::{HashMap, VecDeque};

use num_traits::Signed;

use super::{dominant_coweights, Alcove, Coweight, Point, RootSystem};
use crate::error::{Error, Result};
use crate::Rational;

/// Where the neighbour of an alcove across one of its panels lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjacent {
    Inside(usize),
    /// Inside the fundamental sector but beyond the truncation.
    Outside,
    /// Across a wall of the fundamental sector.
    Wall,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub coords: Point,
    pub ty: usize,
}

/// A simplex of the truncation; `alcove` is the first alcove containing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub vertices: Vec<usize>,
    /// Bit `t` is set when the face has a vertex of type `t`.
    pub types: u8,
    pub alcove: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoweightVertex {
    pub coweight: Coweight,
    pub norm: usize,
    pub vertex: usize,
}

/// Alcoves of the fundamental sector inside the halfspace hull of the
/// dominant coweights of norm at most `radius`.
///
/// Alcoves are stored in canonical order: by the smallest radius whose
/// truncation contains them, then gallery distance from `C_0`, then exact
/// barycenter.  Truncations of smaller radius are therefore prefixes, and the
/// same holds for `vertices` and `faces`.
#[derive(Clone, Debug)]
pub struct TruncatedSector {
    pub radius: usize,
    pub rank: usize,
    pub alcoves: Vec<Alcove>,
    pub entry_radius: Vec<usize>,
    pub depth: Vec<usize>,
    /// `alcove_vertices[a][t]` is the vertex of type `t` of alcove `a`.
    pub alcove_vertices: Vec<Vec<usize>>,
    pub vertices: Vec<Vertex>,
    pub adjacency: Vec<Vec<Adjacent>>,
    pub coweight_vertices: Vec<CoweightVertex>,
    pub faces: Vec<Face>,
    /// Alcoves containing each vertex, ascending.
    pub vertex_star: Vec<Vec<usize>>,
    index: HashMap<Point, usize>,
}

/// `(min, max)` of `⟨α, p⟩` over `points`, for each positive root.
fn hull_bounds(rs: &RootSystem, points: &[Point]) -> Vec<(Rational, Rational)> {
    rs.positive_roots
        .iter()
        .map(|root| {
            let vals: Vec<Rational> = points.iter().map(|p| rs.pair(p, root)).collect();
            (*vals.iter().min().unwrap(), *vals.iter().max().unwrap())
        })
        .collect()
}

fn within(rs: &RootSystem, bounds: &[(Rational, Rational)], a: &Alcove) -> bool {
    a.vertices.iter().all(|v| {
        rs.positive_roots
            .iter()
            .zip(bounds)
            .all(|(root, (lo, hi))| {
                let x = rs.pair(v, root);
                x >= *lo && x <= *hi
            })
    })
}

fn coweight_points(rs: &RootSystem, n: usize) -> Vec<Point> {
    dominant_coweights(rs.rank, n)
        .iter()
        .map(|l| l.to_point())
        .collect()
}

pub fn truncated_sector(rs: &RootSystem, n: usize) -> Result<TruncatedSector> {
    TruncatedSector::new(rs, n)
}

impl TruncatedSector {
    pub fn new(rs: &RootSystem, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::RadiusTooSmall { have: 0, need: 1 });
        }
        let bounds: Vec<Vec<(Rational, Rational)>> = (0..=n)
            .map(|k| hull_bounds(rs, &coweight_points(rs, k)))
            .collect();
        let nt = rs.num_types();

        // breadth-first search inside the hull
        let c0 = rs.fundamental_alcove();
        let mut found = vec![c0.clone()];
        let mut depth = vec![0usize];
        let mut seen: HashMap<Point, usize> = HashMap::from([(c0.key(), 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for t in 0..nt {
                let b = rs.reflect_alcove(&found[a], t);
                let key = b.key();
                if seen.contains_key(&key) || !within(rs, &bounds[n], &b) {
                    continue;
                }
                seen.insert(key, found.len());
                depth.push(depth[a] + 1);
                found.push(b);
                queue.push_back(found.len() - 1);
            }
        }
        let entry: Vec<usize> = found
            .iter()
            .map(|a| (1..=n).find(|&k| within(rs, &bounds[k], a)).unwrap())
            .collect();

        let mut order: Vec<usize> = (0..found.len()).collect();
        let bary: Vec<Point> = found.iter().map(|a| a.barycenter()).collect();
        order.sort_by(|&x, &y| (entry[x], depth[x], &bary[x]).cmp(&(entry[y], depth[y], &bary[y])));
        let alcoves: Vec<Alcove> = order.iter().map(|&i| found[i].clone()).collect();
        let entry_radius: Vec<usize> = order.iter().map(|&i| entry[i]).collect();
        let depth: Vec<usize> = order.iter().map(|&i| depth[i]).collect();
        let index: HashMap<Point, usize> = alcoves
            .iter()
            .enumerate()
            .map(|(i, a)| (a.key(), i))
            .collect();

        let mut vertices: Vec<Vertex> = Vec::new();
        let mut vindex: HashMap<Point, usize> = HashMap::new();
        let mut alcove_vertices = Vec::with_capacity(alcoves.len());
        for a in &alcoves {
            let mut ids = Vec::with_capacity(nt);
            for (t, v) in a.vertices.iter().enumerate() {
                let id = *vindex.entry(v.clone()).or_insert_with(|| {
                    vertices.push(Vertex {
                        coords: v.clone(),
                        ty: t,
                    });
                    vertices.len() - 1
                });
                ids.push(id);
            }
            alcove_vertices.push(ids);
        }
        let mut vertex_star = vec![Vec::new(); vertices.len()];
        for (a, ids) in alcove_vertices.iter().enumerate() {
            for &v in ids {
                vertex_star[v].push(a);
            }
        }

        let adjacency = alcoves
            .iter()
            .map(|a| {
                (0..nt)
                    .map(|t| {
                        let b = rs.reflect_alcove(a, t);
                        if let Some(&j) = index.get(&b.key()) {
                            Adjacent::Inside(j)
                        } else if b
                            .vertices
                            .iter()
                            .all(|v| v.iter().all(|c| !c.is_negative()))
                        {
                            Adjacent::Outside
                        } else {
                            Adjacent::Wall
                        }
                    })
                    .collect()
            })
            .collect();

        let coweight_vertices = dominant_coweights(rs.rank, n)
            .into_iter()
            .map(|l| {
                let vertex = *vindex
                    .get(&l.to_point())
                    .expect("dominant coweights are truncation vertices");
                CoweightVertex {
                    norm: l.norm(),
                    coweight: l,
                    vertex,
                }
            })
            .collect();

        let mut faces = Vec::new();
        let mut findex: HashMap<Vec<usize>, usize> = HashMap::new();
        for (a, ids) in alcove_vertices.iter().enumerate() {
            for mask in 1u8..(1u8 << nt) {
                let verts: Vec<usize> = (0..nt)
                    .filter(|t| mask & (1 << t) != 0)
                    .map(|t| ids[t])
                    .collect();
                let mut sorted = verts.clone();
                sorted.sort_unstable();
                if findex.contains_key(&sorted) {
                    continue;
                }
                findex.insert(sorted, faces.len());
                faces.push(Face {
                    vertices: verts,
                    types: mask,
                    alcove: a,
                });
            }
        }

        Ok(TruncatedSector {
            radius: n,
            rank: rs.rank,
            alcoves,
            entry_radius,
            depth,
            alcove_vertices,
            vertices,
            adjacency,
            coweight_vertices,
            faces,
            vertex_star,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.alcoves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alcoves.is_empty()
    }

    /// Canonical order of alcoves; storage order already is canonical.
    pub fn bfs_order(&self) -> Vec<usize> {
        (0..self.alcoves.len()).collect()
    }

    /// Number of alcoves of the radius-`k` truncation (a prefix).
    pub fn alcove_count(&self, k: usize) -> usize {
        self.entry_radius.iter().take_while(|&&r| r <= k).count()
    }

    /// Number of vertices of the radius-`k` truncation (a prefix).
    pub fn vertex_count(&self, k: usize) -> usize {
        let a = self.alcove_count(k);
        self.alcove_vertices[..a]
            .iter()
            .flatten()
            .max()
            .map_or(0, |&m| m + 1)
    }

    /// Number of faces of the radius-`k` truncation (a prefix).
    pub fn face_count(&self, k: usize) -> usize {
        let a = self.alcove_count(k);
        self.faces.iter().take_while(|f| f.alcove < a).count()
    }

    pub fn alcove_index(&self, a: &Alcove) -> Option<usize> {
        self.index.get(&a.key()).copied()
    }

    pub fn vertex_index(&self, p: &[Rational]) -> Option<usize> {
        self.vertices.iter().position(|v| v.coords == p)
    }

    /// Alcoves of this truncation inside the halfspace hull of `points`,
    /// ascending.
    pub fn hull_alcoves(&self, rs: &RootSystem, points: &[Point]) -> Vec<usize> {
        let bounds = hull_bounds(rs, points);
        (0..self.alcoves.len())
            .filter(|&a| within(rs, &bounds, &self.alcoves[a]))
            .collect()
    }

    /// `A ↦ A + μ` from the radius-`(n − |μ|)` prefix into this truncation.
    pub fn embed_shift(&self, mu: &Coweight) -> Result<Vec<usize>> {
        let m = mu.norm();
        if !mu.is_dominant() {
            return Err(Error::NotDominant(mu.0.clone()));
        }
        if m > self.radius {
            return Err(Error::RadiusTooSmall {
                have: self.radius,
                need: m,
            });
        }
        let shift = mu.to_point();
        let count = if m == self.radius {
            0
        } else {
            self.alcove_count(self.radius - m)
        };
        Ok((0..count)
            .map(|a| {
                self.alcove_index(&self.alcoves[a].translate(&shift))
                    .expect("shifted truncation stays inside")
            })
            .collect())
    }
}
