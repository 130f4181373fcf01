use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use super::ChamberSystem;
use crate::rootdata::RootSystem;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub check: String,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub regular: bool,
    pub connected: bool,
    /// Keyed by `(i, j)` with `i < j`, for every pair with finite `m_ij`.
    pub rank2_ok: BTreeMap<(usize, usize), bool>,
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.regular
            && self.connected
            && self.rank2_ok.values().all(|&ok| ok)
            && self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            return "all checks passed".into();
        }
        self.failures
            .iter()
            .map(|f| format!("{}: {}", f.check, f.witness))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "regular    {}", self.regular)?;
        writeln!(f, "connected  {}", self.connected)?;
        for ((i, j), ok) in &self.rank2_ok {
            writeln!(f, "rank2 {{{i},{j}}} {ok}")?;
        }
        for fail in &self.failures {
            writeln!(f, "FAIL {}: {}", fail.check, fail.witness)?;
        }
        Ok(())
    }
}

/// Girth and diameter of a connected multigraph on `n` nodes; girth is `None`
/// for a forest.
pub(crate) fn girth_and_diameter(n: usize, edges: &[(usize, usize)]) -> (Option<usize>, usize) {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    let mut girth: Option<usize> = None;
    let mut diameter = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut via = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            diameter = diameter.max(dist[x]);
            for &(y, e) in &adj[x] {
                if e == via[x] {
                    continue;
                }
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    via[y] = e;
                    queue.push_back(y);
                } else {
                    let len = dist[x] + dist[y] + 1;
                    girth = Some(girth.map_or(len, |g| g.min(len)));
                }
            }
        }
    }
    (girth, diameter)
}

/// Check regularity, gallery connectivity and that every rank-2 residue with
/// finite `m_ij` is a generalized `m_ij`-gon.
pub fn validate(cs: &ChamberSystem) -> ValidationReport {
    let rs = RootSystem::new(cs.kind);
    let nt = cs.num_types();
    let mut failures = Vec::new();

    let mut regular = cs.block_size_ok;
    for i in 0..nt {
        if let Some(b) = cs.residues[i]
            .iter()
            .find(|b| b.len() as u64 != cs.q.q[i] + 1)
        {
            regular = false;
            failures.push(Failure {
                check: "regularity".into(),
                witness: format!(
                    "type {i} block {b:?} has size {}, expected {}",
                    b.len(),
                    cs.q.q[i] + 1
                ),
            });
        }
    }

    let all = cs.residue_labels(((1u16 << nt) - 1) as u8);
    let connected = all.iter().all(|&l| l == 0);
    if !connected {
        let c = all.iter().position(|&l| l != 0).unwrap();
        failures.push(Failure {
            check: "connectivity".into(),
            witness: format!("chamber {c} not reachable from chamber 0"),
        });
    }

    let mut rank2_ok = BTreeMap::new();
    for i in 0..nt {
        for j in i + 1..nt {
            let Some(m) = rs.coxeter[i][j] else { continue };
            let m = m as usize;
            let labels = cs.residue_labels((1 << i) | (1 << j));
            let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
            for (c, &l) in labels.iter().enumerate() {
                members[l as usize].push(c);
            }
            let mut ok = true;
            for chambers in &members {
                // incidence graph: i-blocks and j-blocks, one edge per chamber
                let mut node: BTreeMap<(usize, usize), usize> = BTreeMap::new();
                let mut edges = Vec::with_capacity(chambers.len());
                for &c in chambers {
                    let mut id = |t: usize| {
                        let k = (t, cs.block_of(t, c));
                        let next = node.len();
                        *node.entry(k).or_insert(next)
                    };
                    let (a, b) = (id(i), id(j));
                    edges.push((a, b));
                }
                let (girth, diameter) = girth_and_diameter(node.len(), &edges);
                if girth != Some(2 * m) || diameter != m {
                    ok = false;
                    failures.push(Failure {
                        check: format!("rank2 {{{i},{j}}}"),
                        witness: format!(
                            "residue of chamber {} has girth {} and diameter {diameter}, expected {} and {m}",
                            chambers[0],
                            girth.map_or("inf".to_string(), |g| g.to_string()),
                            2 * m
                        ),
                    });
                    break;
                }
            }
            rank2_ok.insert((i, j), ok);
        }
    }

    ValidationReport {
        regular,
        connected,
        rank2_ok,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_metrics() {
        // Heawood graph: incidence graph of the Fano plane
        let mut edges = Vec::new();
        for x in 0..7 {
            for d in [0, 1, 3] {
                edges.push((x, 7 + (x + d) % 7));
            }
        }
        assert_eq!(girth_and_diameter(14, &edges), (Some(6), 3));
        // K_{2,2} is a generalized 2-gon
        assert_eq!(
            girth_and_diameter(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]),
            (Some(4), 2)
        );
        // a double edge has girth 2
        assert_eq!(girth_and_diameter(2, &[(0, 1), (0, 1)]).0, Some(2));
        assert_eq!(girth_and_diameter(3, &[(0, 1), (1, 2)]), (None, 2));
    }
}
