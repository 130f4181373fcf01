//! Sector germs on a chamber system and the shift maps between them.
//!
//! A germ of radius `n` is a type-rotating, locally injective map from the
//! radius-`n` truncation of the fundamental sector into the chamber system.
//! It is stored as the index of its type rotation together with the chamber
//! images of the truncation alcoves in canonical order.

mod metric;

pub use metric::{DistanceResult, KMatrix, MetricReport, K_NONE};

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::chamber::ChamberSystem;
use crate::error::{Error, Result};
use crate::rootdata::{Adjacent, Coweight, RootSystem, TruncatedSector};

pub const GERMS_FORMAT: &str = "germs/v1";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorGerm {
    pub radius: usize,
    /// Index into the root system's `type_rotations`.
    pub sigma: usize,
    pub chambers: Vec<u32>,
}

impl SectorGerm {
    pub fn canonical_key(&self) -> (usize, &[u32]) {
        (self.sigma, &self.chambers)
    }
}

/// All germs of one radius, sorted by `(sigma, chambers)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GermTable {
    pub radius: usize,
    pub num_alcoves: usize,
    sigma: Vec<u8>,
    images: Vec<u32>,
}

#[derive(Serialize)]
struct GermRecord<'a> {
    sigma: usize,
    chambers: &'a [u32],
}

#[derive(Serialize)]
struct GermFile<'a> {
    format: &'static str,
    radius: usize,
    count: usize,
    germs: Vec<GermRecord<'a>>,
}

impl GermTable {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self, i: usize) -> usize {
        self.sigma[i] as usize
    }

    pub fn images(&self, i: usize) -> &[u32] {
        &self.images[i * self.num_alcoves..(i + 1) * self.num_alcoves]
    }

    pub fn germ(&self, i: usize) -> SectorGerm {
        SectorGerm {
            radius: self.radius,
            sigma: self.sigma(i),
            chambers: self.images(i).to_vec(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SectorGerm> + '_ {
        (0..self.len()).map(|i| self.germ(i))
    }

    fn cmp_at(&self, i: usize, sigma: usize, images: &[u32]) -> Ordering {
        (self.sigma(i), self.images(i)).cmp(&(sigma, images))
    }

    /// Position of the germ with the given key; `images` may be longer than
    /// the germs of this table, in which case its prefix is looked up.
    pub fn find(&self, sigma: usize, images: &[u32]) -> Option<usize> {
        if images.len() < self.num_alcoves {
            return None;
        }
        let key = &images[..self.num_alcoves];
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.cmp_at(mid, sigma, key) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn position(&self, g: &SectorGerm) -> Option<usize> {
        if g.radius != self.radius {
            return None;
        }
        self.find(g.sigma, &g.chambers)
    }

    /// Maps each germ here to its restriction in `coarse`, a table of smaller
    /// or equal radius.
    pub fn restriction_map(&self, coarse: &GermTable) -> Result<Vec<usize>> {
        if coarse.radius > self.radius {
            return Err(Error::RadiusTooSmall {
                have: self.radius,
                need: coarse.radius,
            });
        }
        (0..self.len())
            .map(|i| {
                coarse.find(self.sigma(i), self.images(i)).ok_or_else(|| {
                    Error::Invalid(format!(
                        "germ {i} of radius {} restricts outside the radius-{} table",
                        self.radius, coarse.radius
                    ))
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = GermFile {
            format: GERMS_FORMAT,
            radius: self.radius,
            count: self.len(),
            germs: (0..self.len())
                .map(|i| GermRecord {
                    sigma: self.sigma(i),
                    chambers: self.images(i),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)? + "\n")
    }
}

/// A chamber system together with its root data and a truncated sector large
/// enough for every radius used with it.
#[derive(Clone, Debug)]
pub struct GermSpace {
    pub cs: ChamberSystem,
    pub rs: RootSystem,
    pub sector: TruncatedSector,
    /// Residue labels indexed by type mask.
    labels: Vec<Vec<u32>>,
}

/// Constraints for placing the alcove at one position of an enumeration order.
struct Slot {
    /// Earlier positions adjacent across a panel, with the panel type.
    neighbours: Vec<(usize, usize)>,
    /// Earlier positions sharing a vertex.
    star: Vec<usize>,
}

impl GermSpace {
    pub fn new(cs: ChamberSystem, max_radius: usize) -> Result<Self> {
        let rs = RootSystem::new(cs.kind);
        let sector = TruncatedSector::new(&rs, max_radius)?;
        let labels = cs.all_residue_labels();
        Ok(GermSpace {
            cs,
            rs,
            sector,
            labels,
        })
    }

    pub fn max_radius(&self) -> usize {
        self.sector.radius
    }

    pub fn num_rotations(&self) -> usize {
        self.rs.type_rotations.len()
    }

    fn check_radius(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.sector.radius {
            return Err(Error::RadiusTooSmall {
                have: self.sector.radius,
                need: n.max(1),
            });
        }
        Ok(())
    }

    /// Residue label of chamber `c` for the type mask `mask`.
    pub fn label(&self, mask: u8, c: u32) -> u32 {
        self.labels[mask as usize][c as usize]
    }

    /// `σ` applied to a type mask.
    pub fn rotate_mask(&self, sigma: usize, mask: u8) -> u8 {
        let perm = &self.rs.type_rotations[sigma].perm;
        (0..perm.len())
            .filter(|&t| mask & (1 << t) != 0)
            .fold(0u8, |m, t| m | (1 << perm[t]))
    }

    pub fn full_mask(&self) -> u8 {
        ((1u16 << self.rs.num_types()) - 1) as u8
    }

    fn slots(&self, alcoves: &[usize]) -> Result<Vec<Slot>> {
        let mut pos = vec![usize::MAX; self.sector.len()];
        for (p, &a) in alcoves.iter().enumerate() {
            pos[a] = p;
        }
        let mut slots = Vec::with_capacity(alcoves.len());
        for (p, &a) in alcoves.iter().enumerate() {
            let neighbours: Vec<(usize, usize)> = self.sector.adjacency[a]
                .iter()
                .enumerate()
                .filter_map(|(t, adj)| match *adj {
                    Adjacent::Inside(b) if pos[b] < p => Some((pos[b], t)),
                    _ => None,
                })
                .collect();
            if p > 0 && neighbours.is_empty() {
                return Err(Error::Invalid(format!(
                    "alcove {a} has no earlier neighbour in the enumeration order"
                )));
            }
            let mut star: Vec<usize> = self.sector.alcove_vertices[a]
                .iter()
                .flat_map(|&v| self.sector.vertex_star[v].iter())
                .map(|&b| pos[b])
                .filter(|&q| q < p)
                .collect();
            star.sort_unstable();
            star.dedup();
            slots.push(Slot { neighbours, star });
        }
        Ok(slots)
    }

    /// All locally injective type-rotating maps on the given alcoves, which
    /// must start with `C_0` and have an earlier panel neighbour for every
    /// later alcove.  Returns `(sigmas, flat images)` sorted by key.
    pub fn enumerate_on(&self, alcoves: &[usize]) -> Result<(Vec<u8>, Vec<u32>)> {
        let slots = self.slots(alcoves)?;
        let width = alcoves.len();
        let seeds: Vec<(usize, u32)> = (0..self.num_rotations())
            .flat_map(|s| (0..self.cs.num_chambers as u32).map(move |c| (s, c)))
            .collect();
        let parts: Vec<(Vec<u8>, Vec<u32>)> = seeds
            .par_iter()
            .map(|&(s, c)| {
                let mut out = (Vec::new(), Vec::new());
                let mut img = vec![0u32; width];
                img[0] = c;
                self.extend(s, &slots, 1, &mut img, &mut out);
                out
            })
            .collect();
        let mut sigma = Vec::new();
        let mut images = Vec::new();
        for (s, i) in parts {
            sigma.extend(s);
            images.extend(i);
        }
        Ok((sigma, images))
    }

    fn extend(
        &self,
        s: usize,
        slots: &[Slot],
        p: usize,
        img: &mut [u32],
        out: &mut (Vec<u8>, Vec<u32>),
    ) {
        if p == slots.len() {
            out.0.push(s as u8);
            out.1.extend_from_slice(img);
            return;
        }
        let perm = &self.rs.type_rotations[s].perm;
        let slot = &slots[p];
        let (q0, t0) = slot.neighbours[0];
        let first = img[q0] as usize;
        for &cand in self.cs.block(perm[t0], first) {
            if cand == first {
                continue;
            }
            let fits = slot.neighbours[1..].iter().all(|&(q, t)| {
                let other = img[q] as usize;
                cand != other && self.cs.block_of(perm[t], cand) == self.cs.block_of(perm[t], other)
            }) && slot.star.iter().all(|&q| img[q] as usize != cand);
            if fits {
                img[p] = cand as u32;
                self.extend(s, slots, p + 1, img, out);
            }
        }
    }

    pub fn enumerate_germs(&self, n: usize) -> Result<GermTable> {
        self.check_radius(n)?;
        let count = self.sector.alcove_count(n);
        let alcoves: Vec<usize> = (0..count).collect();
        let (sigma, images) = self.enumerate_on(&alcoves)?;
        Ok(GermTable {
            radius: n,
            num_alcoves: count,
            sigma,
            images,
        })
    }

    pub fn restrict(&self, g: &SectorGerm, k: usize) -> Result<SectorGerm> {
        if k > g.radius {
            return Err(Error::RadiusTooSmall {
                have: g.radius,
                need: k,
            });
        }
        self.check_radius(k)?;
        let count = self.sector.alcove_count(k);
        Ok(SectorGerm {
            radius: k,
            sigma: g.sigma,
            chambers: g.chambers[..count].to_vec(),
        })
    }

    /// Index of the rotation of `σ ∘ t_μ`.
    pub fn shifted_sigma(&self, sigma: usize, mu: &Coweight) -> usize {
        self.rs.compose_rotations(sigma, self.rs.rotation_index(mu))
    }

    /// Positions inside the radius-`n` prefix of the alcoves `A + μ`, for `A`
    /// in the radius-`(n − |μ|)` truncation.
    pub fn shift_positions(&self, mu: &Coweight, n: usize) -> Result<Vec<usize>> {
        if !mu.is_dominant() {
            return Err(Error::NotDominant(mu.0.clone()));
        }
        let m = mu.norm();
        if m >= n {
            return Err(Error::RadiusTooSmall {
                have: n,
                need: m + 1,
            });
        }
        self.check_radius(n)?;
        let shift = mu.to_point();
        let count = self.sector.alcove_count(n - m);
        Ok((0..count)
            .map(|a| {
                self.sector
                    .alcove_index(&self.sector.alcoves[a].translate(&shift))
                    .expect("shifted truncation stays inside")
            })
            .collect())
    }

    /// `σ_μ(g) = g ∘ t_μ`, a germ of radius `n − |μ|`.
    pub fn shift(&self, g: &SectorGerm, mu: &Coweight) -> Result<SectorGerm> {
        let at = self.shift_positions(mu, g.radius)?;
        Ok(SectorGerm {
            radius: g.radius - mu.norm(),
            sigma: self.shifted_sigma(g.sigma, mu),
            chambers: at.iter().map(|&a| g.chambers[a]).collect(),
        })
    }

    /// Images of the truncation vertices, when the chamber system carries
    /// vertex identifiers.
    pub fn vertex_image(&self, g: &SectorGerm) -> Option<Vec<usize>> {
        let ids = self.cs.vertex_ids.as_ref()?;
        let perm = &self.rs.type_rotations[g.sigma].perm;
        let nv = self.sector.vertex_count(g.radius);
        Some(
            (0..nv)
                .map(|v| {
                    let a = self.sector.vertex_star[v][0];
                    ids[perm[self.sector.vertices[v].ty]][g.chambers[a] as usize]
                })
                .collect(),
        )
    }

    /// Number of radius-`(n+1)` germs over each radius-`n` germ.
    pub fn extension_counts(&self, fine: &GermTable, coarse: &GermTable) -> Result<Vec<usize>> {
        let map = fine.restriction_map(coarse)?;
        let mut counts = vec![0usize; coarse.len()];
        for i in map {
            counts[i] += 1;
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::{from_bipartite_graph, from_triangle_presentation, TrianglePresentation};

    fn k33() -> GermSpace {
        let mut e = Vec::new();
        for a in 0..3 {
            for b in 3..6 {
                e.push([a, b]);
            }
        }
        GermSpace::new(from_bipartite_graph(&e, 2, 2).unwrap(), 3).unwrap()
    }

    #[test]
    fn k33_counts() {
        let sp = k33();
        assert_eq!(sp.enumerate_germs(1).unwrap().len(), 18);
        assert_eq!(sp.enumerate_germs(2).unwrap().len(), 36);
        assert_eq!(sp.enumerate_germs(3).unwrap().len(), 72);
    }

    #[test]
    fn a2_radius_one() {
        let cs = from_triangle_presentation(&TrianglePresentation::fano()).unwrap();
        let sp = GermSpace::new(cs, 2).unwrap();
        assert_eq!(sp.enumerate_germs(1).unwrap().len(), 63);
        assert_eq!(sp.enumerate_germs(2).unwrap().len(), 504);
    }

    #[test]
    fn tables_are_sorted_and_searchable() {
        let sp = k33();
        let t = sp.enumerate_germs(3).unwrap();
        for i in 1..t.len() {
            assert!(t.germ(i - 1) < t.germ(i));
        }
        for (i, g) in t.iter().enumerate() {
            assert_eq!(t.position(&g), Some(i));
        }
    }

    #[test]
    fn restriction_commutes() {
        let sp = k33();
        let t3 = sp.enumerate_germs(3).unwrap();
        for g in t3.iter() {
            let direct = sp.restrict(&g, 1).unwrap();
            let stepwise = sp.restrict(&sp.restrict(&g, 2).unwrap(), 1).unwrap();
            assert_eq!(direct, stepwise);
            assert_eq!(sp.restrict(&g, 3).unwrap(), g);
        }
        assert!(sp.restrict(&t3.germ(0), 4).is_err());
    }

    #[test]
    fn rank_one_shift_drops_first_edge() {
        let sp = k33();
        let t2 = sp.enumerate_germs(2).unwrap();
        let mu = Coweight::fundamental(1, 0);
        for g in t2.iter() {
            let s = sp.shift(&g, &mu).unwrap();
            assert_eq!(s.chambers, vec![g.chambers[1]]);
            assert_ne!(s.sigma, g.sigma);
            assert_eq!(sp.shift(&g, &Coweight::zero(1)).unwrap(), g);
        }
        assert!(sp.shift(&t2.germ(0), &Coweight(vec![2])).is_err());
    }
}
