use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{validate, ChamberSystem};
use crate::error::{Error, Result};
use crate::rootdata::{ParameterSystem, RootSystemKind};

pub const GRAPH_FORMAT: &str = "graph/v1";
pub const PRESENTATION_FORMAT: &str = "triangle-presentation/v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub format: String,
    pub edges: Vec<[usize; 2]>,
}

impl GraphFile {
    pub fn new(edges: Vec<[usize; 2]>) -> Self {
        GraphFile {
            format: GRAPH_FORMAT.to_string(),
            edges,
        }
    }
}

struct Colored {
    /// Sorted vertex labels; positions are dense ids.
    labels: Vec<usize>,
    edges: Vec<[usize; 2]>,
    color: Vec<u8>,
    degree: Vec<usize>,
}

fn color_graph(edges: &[[usize; 2]]) -> Result<Colored> {
    if edges.is_empty() {
        return Err(Error::Graph("no edges".into()));
    }
    let labels: Vec<usize> = edges
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let id: HashMap<usize, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut dense: Vec<[usize; 2]> = Vec::with_capacity(edges.len());
    for &[u, v] in edges {
        if u == v {
            return Err(Error::Graph(format!("loop at vertex {u}")));
        }
        let (a, b) = (id[&u].min(id[&v]), id[&u].max(id[&v]));
        dense.push([a, b]);
    }
    dense.sort_unstable();
    if dense.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Graph("repeated edge".into()));
    }
    let n = labels.len();
    let mut adj = vec![Vec::new(); n];
    for &[a, b] in &dense {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut color = vec![u8::MAX; n];
    color[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if color[y] == u8::MAX {
                color[y] = 1 - color[x];
                queue.push_back(y);
            } else if color[y] == color[x] {
                return Err(Error::Graph(format!(
                    "not bipartite: odd cycle through {}",
                    labels[x]
                )));
            }
        }
    }
    if let Some(x) = color.iter().position(|&c| c == u8::MAX) {
        return Err(Error::Graph(format!(
            "disconnected: vertex {} unreachable",
            labels[x]
        )));
    }
    let degree = adj.iter().map(|a| a.len()).collect();
    Ok(Colored {
        labels,
        edges: dense,
        color,
        degree,
    })
}

fn build_from_coloring(g: &Colored, q0: u64, q1: u64) -> Result<ChamberSystem> {
    let n = g.edges.len();
    // stars[c] collects the edges at vertices of colour c
    let mut stars: [BTreeMap<usize, Vec<usize>>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut vertex_ids = vec![vec![0usize; n]; 2];
    for (e, &[a, b]) in g.edges.iter().enumerate() {
        for v in [a, b] {
            let c = g.color[v] as usize;
            stars[c].entry(v).or_default().push(e);
            // a colour-c vertex has type 1 − c
            vertex_ids[1 - c][e] = g.labels[v];
        }
    }
    let residues = vec![
        stars[0].values().cloned().collect(),
        stars[1].values().cloned().collect(),
    ];
    let kind = if q0 == q1 {
        RootSystemKind::A1
    } else {
        RootSystemKind::BC1
    };
    ChamberSystem::new(
        kind,
        ParameterSystem::new(vec![q0, q1]),
        n,
        residues,
        Some(vertex_ids),
    )
}

fn degrees_match(g: &Colored, q0: u64, q1: u64) -> bool {
    g.degree
        .iter()
        .zip(&g.color)
        .all(|(&d, &c)| d as u64 == if c == 0 { q0 + 1 } else { q1 + 1 })
}

/// `K_{a,b}` on vertices `0..a` and `a..a + b`.
pub fn complete_bipartite(a: usize, b: usize) -> GraphFile {
    let edges = (0..a)
        .flat_map(|u| (a..a + b).map(move |v| [u, v]))
        .collect();
    GraphFile::new(edges)
}

/// The `d`-dimensional cube graph on `0..2^d`.
pub fn hypercube(d: usize) -> GraphFile {
    let edges = (0..1usize << d)
        .flat_map(|u| {
            (0..d)
                .filter(move |&i| u & (1 << i) == 0)
                .map(move |i| [u, u | (1 << i)])
        })
        .collect();
    GraphFile::new(edges)
}

/// `K_n` with every edge subdivided once.  The original vertices keep labels
/// `0..n`; the midpoint of the `k`-th edge is `n + k`.
pub fn subdivided_complete(n: usize) -> GraphFile {
    let mut edges = Vec::new();
    let mut mid = n;
    for u in 0..n {
        for v in u + 1..n {
            edges.push([u, mid]);
            edges.push([mid, v]);
            mid += 1;
        }
    }
    GraphFile::new(edges)
}

/// Chambers are the edges, sorted; `residues[c]` are the edge stars of the
/// colour-`c` vertices, where colour-0 vertices have degree `q0 + 1`.
pub fn from_bipartite_graph(edges: &[[usize; 2]], q0: u64, q1: u64) -> Result<ChamberSystem> {
    if q0 == 0 || q1 == 0 {
        return Err(Error::Graph(format!(
            "degenerate parameters q0 = {q0}, q1 = {q1}; both must be at least 1"
        )));
    }
    let mut g = color_graph(edges)?;
    if !degrees_match(&g, q0, q1) {
        for c in g.color.iter_mut() {
            *c = 1 - *c;
        }
        if !degrees_match(&g, q0, q1) {
            return Err(Error::Graph(format!(
                "degrees do not match q0 + 1 = {}, q1 + 1 = {}",
                q0 + 1,
                q1 + 1
            )));
        }
    }
    build_from_coloring(&g, q0, q1)
}

/// As [`from_bipartite_graph`], reading the parameters off the degrees; the
/// colour class of the smallest vertex label becomes colour 0.
pub fn from_graph(edges: &[[usize; 2]]) -> Result<ChamberSystem> {
    let g = color_graph(edges)?;
    let deg = |c: u8| -> BTreeSet<usize> {
        (0..g.degree.len())
            .filter(|&v| g.color[v] == c)
            .map(|v| g.degree[v])
            .collect()
    };
    let (d0, d1) = (deg(0), deg(1));
    if d0.len() != 1 || d1.len() != 1 {
        return Err(Error::Graph("graph is not biregular".into()));
    }
    let q0 = *d0.iter().next().unwrap() as u64 - 1;
    let q1 = *d1.iter().next().unwrap() as u64 - 1;
    from_bipartite_graph(edges, q0, q1)
}

/// Triangle presentation over a projective plane whose points are
/// `0..points`.  The line `λ(x)` is the set of `y` occurring in a triple
/// `(x, y, z)`; `lambda[x]` is its label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrianglePresentation {
    #[serde(default = "presentation_format")]
    pub format: String,
    pub points: usize,
    pub lambda: Vec<usize>,
    pub triples: Vec<[usize; 3]>,
}

fn presentation_format() -> String {
    PRESENTATION_FORMAT.to_string()
}

impl TrianglePresentation {
    /// The presentation over the Fano plane `ℤ/7` with difference set
    /// `{1, 2, 4}`: triples `(x, x + a, x + a + b)` for `(a, b)` running over
    /// the rotations of `(1, 2, 4)`.
    pub fn fano() -> Self {
        let mut triples = Vec::new();
        for x in 0..7 {
            for (a, b) in [(1, 2), (2, 4), (4, 1)] {
                triples.push([x, (x + a) % 7, (x + a + b) % 7]);
            }
        }
        triples.sort_unstable();
        TrianglePresentation {
            format: presentation_format(),
            points: 7,
            lambda: (0..7).collect(),
            triples,
        }
    }

    /// Check the presentation axioms; returns the order `q` of the plane.
    pub fn check(&self) -> Result<u64> {
        let bad = |m: String| Err(Error::Presentation(m));
        if self.points == 0 || self.triples.is_empty() {
            return bad("empty presentation".into());
        }
        let p = self.points;
        if self.lambda.len() != p
            || self.lambda.iter().collect::<BTreeSet<_>>().len() != p
            || self.lambda.iter().any(|&l| l >= p)
        {
            return bad("lambda is not a permutation of the points".into());
        }
        let set: BTreeSet<[usize; 3]> = self.triples.iter().copied().collect();
        if set.len() != self.triples.len() {
            return bad("repeated triple".into());
        }
        if let Some(t) = self.triples.iter().find(|t| t.iter().any(|&x| x >= p)) {
            return bad(format!("triple {t:?} has a point out of range"));
        }
        for &[x, y, z] in &self.triples {
            if !set.contains(&[y, z, x]) {
                return bad(format!(
                    "not closed under rotation: ({x}, {y}, {z}) present, ({y}, {z}, {x}) missing"
                ));
            }
        }
        let mut third: HashMap<(usize, usize), usize> = HashMap::new();
        for &[x, y, z] in &self.triples {
            if third.insert((x, y), z).is_some() {
                return bad(format!("two triples start with ({x}, {y})"));
            }
        }
        let mut lines: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); p];
        for &[x, y, _] in &self.triples {
            lines[self.lambda[x]].insert(y);
        }
        let k = lines[0].len();
        if k < 2 || lines.iter().any(|l| l.len() != k) {
            return bad("lines do not all have the same size".into());
        }
        let q = (k - 1) as u64;
        if p as u64 != q * q + q + 1 {
            return bad(format!(
                "{p} points cannot form a projective plane of order {q}"
            ));
        }
        for a in 0..p {
            for b in a + 1..p {
                if lines[a].intersection(&lines[b]).count() != 1 {
                    return bad(format!(
                        "lines {a} and {b} do not meet in exactly one point"
                    ));
                }
            }
        }
        Ok(q)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)? + "\n")
    }
}

/// The type-preserving quotient with one vertex per type.  Chambers are the
/// triples in sorted order; the chamber `(x, y, z)` has panels labelled `x`
/// (cotype 2), `y` (cotype 0) and `z` (cotype 1).
pub fn from_triangle_presentation(tp: &TrianglePresentation) -> Result<ChamberSystem> {
    let q = tp.check()?;
    let mut triples = tp.triples.clone();
    triples.sort_unstable();
    let n = triples.len();
    let mut residues = Vec::new();
    for slot in [1usize, 2, 0] {
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (c, t) in triples.iter().enumerate() {
            blocks.entry(t[slot]).or_default().push(c);
        }
        residues.push(blocks.into_values().collect());
    }
    let vertex_ids = (0..3).map(|t| vec![t; n]).collect();
    let cs = ChamberSystem::new(
        RootSystemKind::A2,
        ParameterSystem::uniform(3, q),
        n,
        residues,
        Some(vertex_ids),
    )?;
    let report = validate(&cs);
    if !report.passed() {
        return Err(Error::Invalid(report.summary()));
    }
    Ok(cs)
}
