//! Finite labelled chamber systems given by their `i`-equivalence classes.

mod import;
mod validate;

pub use import::{
    complete_bipartite, from_bipartite_graph, from_graph, from_triangle_presentation, hypercube,
    subdivided_complete, GraphFile, TrianglePresentation,
};
pub use validate::{validate, Failure, ValidationReport};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rootdata::{ParameterSystem, RootSystemKind};

pub const FORMAT: &str = "chamber-system/v1";

/// A chamber system over `I = {0, …, rank}` with chambers `0..num_chambers`.
///
/// `residues[i]` partitions the chambers into `i`-equivalence classes.  The
/// vertex of type `t` of a chamber is its `(I ∖ {t})`-residue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChamberSystem {
    pub kind: RootSystemKind,
    pub q: ParameterSystem,
    pub num_chambers: usize,
    pub residues: Vec<Vec<Vec<usize>>>,
    /// `vertex_ids[t][c]`: identifier of the type-`t` vertex of chamber `c`.
    pub vertex_ids: Option<Vec<Vec<usize>>>,
    /// False when some block size differs from `q_i + 1`.
    pub block_size_ok: bool,
    block_of: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ChamberFile {
    format: String,
    root_system: RootSystemKind,
    q: BTreeMap<String, u64>,
    num_chambers: usize,
    residues: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertex_ids: Option<BTreeMap<String, Vec<usize>>>,
}

fn typed_map<T: Clone>(items: &[T]) -> BTreeMap<String, T> {
    items
        .iter()
        .enumerate()
        .map(|(i, x)| (i.to_string(), x.clone()))
        .collect()
}

fn untyped<T>(map: BTreeMap<String, T>, nt: usize, what: &str) -> Result<Vec<T>> {
    if map.len() != nt {
        return Err(Error::Malformed(format!(
            "{what}: expected {nt} types, got {}",
            map.len()
        )));
    }
    let mut out = Vec::with_capacity(nt);
    let mut map = map;
    for t in 0..nt {
        out.push(
            map.remove(&t.to_string())
                .ok_or_else(|| Error::Malformed(format!("{what}: missing type {t}")))?,
        );
    }
    Ok(out)
}

impl ChamberSystem {
    /// Build and canonicalise; fails unless every `residues[i]` partitions the
    /// chambers.
    pub fn new(
        kind: RootSystemKind,
        q: ParameterSystem,
        num_chambers: usize,
        residues: Vec<Vec<Vec<usize>>>,
        vertex_ids: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let nt = kind.num_types();
        if q.q.len() != nt {
            return Err(Error::Malformed(format!(
                "expected {nt} parameters, got {}",
                q.q.len()
            )));
        }
        if residues.len() != nt {
            return Err(Error::Malformed(format!(
                "expected {nt} residue partitions, got {}",
                residues.len()
            )));
        }
        if num_chambers == 0 {
            return Err(Error::Malformed("no chambers".into()));
        }
        let mut residues = residues;
        let mut block_of = vec![vec![usize::MAX; num_chambers]; nt];
        let mut block_size_ok = true;
        for (i, blocks) in residues.iter_mut().enumerate() {
            for b in blocks.iter_mut() {
                b.sort_unstable();
            }
            blocks.sort();
            for (k, b) in blocks.iter().enumerate() {
                if b.len() as u64 != q.q[i] + 1 {
                    block_size_ok = false;
                }
                for &c in b {
                    if c >= num_chambers {
                        return Err(Error::Malformed(format!(
                            "type {i}: chamber {c} out of range"
                        )));
                    }
                    if block_of[i][c] != usize::MAX {
                        return Err(Error::Malformed(format!(
                            "type {i}: chamber {c} lies in two blocks"
                        )));
                    }
                    block_of[i][c] = k;
                }
            }
            if let Some(c) = block_of[i].iter().position(|&b| b == usize::MAX) {
                return Err(Error::Malformed(format!(
                    "type {i}: chamber {c} is in no block"
                )));
            }
        }
        if let Some(ids) = &vertex_ids {
            if ids.len() != nt || ids.iter().any(|v| v.len() != num_chambers) {
                return Err(Error::Malformed(
                    "vertex_ids must list one id per chamber and type".into(),
                ));
            }
        }
        Ok(ChamberSystem {
            kind,
            q,
            num_chambers,
            residues,
            vertex_ids,
            block_size_ok,
            block_of,
        })
    }

    pub fn num_types(&self) -> usize {
        self.kind.num_types()
    }

    /// Index of the `i`-block containing `c`.
    pub fn block_of(&self, i: usize, c: usize) -> usize {
        self.block_of[i][c]
    }

    /// The chambers `i`-equivalent to `c`, including `c`.
    pub fn block(&self, i: usize, c: usize) -> &[usize] {
        &self.residues[i][self.block_of[i][c]]
    }

    /// The `J`-residue of `c`, ascending.
    pub fn residue(&self, c: usize, j: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.num_chambers];
        let mut stack = vec![c];
        seen[c] = true;
        while let Some(x) = stack.pop() {
            for &i in j {
                for &y in self.block(i, x) {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        (0..self.num_chambers).filter(|&x| seen[x]).collect()
    }

    /// Dense labels of the `J`-residues, `J` given as a bit mask over types.
    /// Labels are numbered by first occurrence.
    pub fn residue_labels(&self, mask: u8) -> Vec<u32> {
        let n = self.num_chambers;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for i in 0..self.num_types() {
            if mask & (1 << i) == 0 {
                continue;
            }
            for b in &self.residues[i] {
                for &c in &b[1..] {
                    let (ra, rb) = (find(&mut parent, b[0]), find(&mut parent, c));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let mut label = vec![u32::MAX; n];
        let mut next = 0u32;
        let mut out = vec![0u32; n];
        for c in 0..n {
            let r = find(&mut parent, c);
            if label[r] == u32::MAX {
                label[r] = next;
                next += 1;
            }
            out[c] = label[r];
        }
        out
    }

    /// Residue labels for every subset of types, indexed by bit mask.
    pub fn all_residue_labels(&self) -> Vec<Vec<u32>> {
        (0..(1u8 << self.num_types()))
            .map(|m| self.residue_labels(m))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ChamberFile {
            format: FORMAT.to_string(),
            root_system: self.kind,
            q: typed_map(&self.q.q),
            num_chambers: self.num_chambers,
            residues: typed_map(&self.residues),
            vertex_ids: self.vertex_ids.as_ref().map(|v| typed_map(v)),
        };
        Ok(serde_json::to_string(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChamberFile = serde_json::from_str(text)?;
        if file.format != FORMAT {
            return Err(Error::Malformed(format!(
                "expected format {FORMAT}, got {}",
                file.format
            )));
        }
        let nt = file.root_system.num_types();
        let q = untyped(file.q, nt, "q")?;
        let residues = untyped(file.residues, nt, "residues")?;
        let vertex_ids = file
            .vertex_ids
            .map(|m| untyped(m, nt, "vertex_ids"))
            .transpose()?;
        ChamberSystem::new(
            file.root_system,
            ParameterSystem::new(q),
            file.num_chambers,
            residues,
            vertex_ids,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Read a chamber system from any supported input format: a chamber-system
/// file, a bipartite graph or a triangle presentation.
pub fn load_any(path: impl AsRef<Path>) -> Result<ChamberSystem> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(FORMAT) => ChamberSystem::from_json(&text),
        Some(import::GRAPH_FORMAT) => {
            let g: GraphFile = serde_json::from_value(value)?;
            from_graph(&g.edges)
        }
        Some(import::PRESENTATION_FORMAT) => {
            let tp: TrianglePresentation = serde_json::from_value(value)?;
            from_triangle_presentation(&tp)
        }
        other => Err(Error::Malformed(format!("unknown format {other:?}"))),
    }
}
