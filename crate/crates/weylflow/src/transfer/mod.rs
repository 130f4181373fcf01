//! Transfer operators `𝓛_μ` on the spaces `F_n` of functions of radius-`n`
//! germs, kept as exact integer counts over the common denominator `M_μ`.

mod lipschitz;

pub use lipschitz::{
    check_fn_invariance, check_lasota_yorke, iterated_constant, lipschitz_seminorm,
    lipschitz_seminorm_pairwise, pi_projection, BallClasses, FnInvarianceReport, LasotaYorkeReport,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{FromPrimitive, Num};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rootdata::{dominant_coweights, Coweight};
use crate::sectors::{GermSpace, GermTable};
use crate::Rational;

/// `𝓛_μ` on `F_n`: entry `(h, g)` is `rows[h][g] / m_mu`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub mu: Coweight,
    pub radius: usize,
    pub m_mu: u64,
    pub dim: usize,
    /// Sparse rows, ascending columns, positive counts.
    pub rows: Vec<Vec<(u32, u64)>>,
}

#[derive(Serialize)]
struct Header<'a> {
    mu: &'a [i64],
    radius: usize,
    #[serde(rename = "M_mu")]
    m_mu: u64,
    dim: usize,
}

#[derive(Serialize)]
struct MatrixFile<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    rows: Vec<Vec<(u32, String)>>,
}

fn ratio_string(r: Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl TransferMatrix {
    pub fn identity(mu: Coweight, radius: usize, dim: usize) -> Self {
        TransferMatrix {
            mu,
            radius,
            m_mu: 1,
            dim,
            rows: (0..dim as u32).map(|i| vec![(i, 1)]).collect(),
        }
    }

    pub fn count(&self, h: usize, g: usize) -> u64 {
        let row = &self.rows[h];
        row.binary_search_by_key(&(g as u32), |e| e.0)
            .map_or(0, |k| row[k].1)
    }

    pub fn entry(&self, h: usize, g: usize) -> Rational {
        Rational::new(self.count(h, g) as i64, self.m_mu as i64)
    }

    pub fn row_sum(&self, h: usize) -> u64 {
        self.rows[h].iter().map(|e| e.1).sum()
    }

    /// Checks every row sums to exactly `1`.
    pub fn check_row_sums(&self) -> Result<()> {
        for h in 0..self.dim {
            let sum = self.row_sum(h);
            if sum != self.m_mu {
                return Err(Error::RowSum {
                    row: h,
                    sum,
                    expected: self.m_mu,
                });
            }
        }
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `(𝓛φ)(h) = M_μ^{-1} Σ_g c(h, g) φ(g)`.
    pub fn apply<T>(&self, phi: &[T]) -> Result<Vec<T>>
    where
        T: Num + Clone + FromPrimitive,
    {
        if phi.len() != self.dim {
            return Err(Error::Dimension(format!(
                "function has {} values, F_{} has dimension {}",
                phi.len(),
                self.radius,
                self.dim
            )));
        }
        let m = T::from_u64(self.m_mu).expect("denominator fits the scalar type");
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let s = row.iter().fold(T::zero(), |acc, &(g, c)| {
                    acc + T::from_u64(c).unwrap() * phi[g as usize].clone()
                });
                s / m.clone()
            })
            .collect())
    }

    /// Row-major dense copy.
    pub fn to_dense<T>(&self) -> Vec<T>
    where
        T: Num + Clone + FromPrimitive,
    {
        let m = T::from_u64(self.m_mu).unwrap();
        let mut out = vec![T::zero(); self.dim * self.dim];
        for (h, row) in self.rows.iter().enumerate() {
            for &(g, c) in row {
                out[h * self.dim + g as usize] = T::from_u64(c).unwrap() / m.clone();
            }
        }
        out
    }

    /// Exact product `self · other`; counts multiply and so do denominators.
    pub fn product(&self, other: &TransferMatrix) -> Result<TransferMatrix> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!("{} vs {}", self.dim, other.dim)));
        }
        let rows = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc: BTreeMap<u32, u64> = BTreeMap::new();
                for &(k, a) in row {
                    for &(g, b) in &other.rows[k as usize] {
                        *acc.entry(g).or_insert(0) += a * b;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        Ok(TransferMatrix {
            mu: self.mu.add(&other.mu),
            radius: self.radius,
            m_mu: self.m_mu * other.m_mu,
            dim: self.dim,
            rows,
        })
    }

    /// Equality of the rational matrices, whatever the denominators.
    pub fn same_operator(&self, other: &TransferMatrix) -> bool {
        self.dim == other.dim
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(&(g, x), &(h, y))| {
                        g == h && x as u128 * other.m_mu as u128 == y as u128 * self.m_mu as u128
                    })
            })
    }

    fn header(&self) -> Header<'_> {
        Header {
            mu: &self.mu.0,
            radius: self.radius,
            m_mu: self.m_mu,
            dim: self.dim,
        }
    }

    /// A JSON header line followed by the dense matrix of `p/q` entries.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header())? + "\n";
        for h in 0..self.dim {
            let mut cols = self.rows[h].iter().peekable();
            for g in 0..self.dim {
                if g > 0 {
                    out.push(',');
                }
                match cols.peek() {
                    Some(&&(c, v)) if c as usize == g => {
                        out.push_str(&ratio_string(Rational::new(v as i64, self.m_mu as i64)));
                        cols.next();
                    }
                    _ => out.push('0'),
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// The header fields plus sparse rows of `[column, "p/q"]` pairs.
    pub fn to_json(&self) -> Result<String> {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(g, c)| (g, ratio_string(Rational::new(c as i64, self.m_mu as i64))))
                    .collect()
            })
            .collect();
        Ok(serde_json::to_string(&MatrixFile {
            header: self.header(),
            rows,
        })? + "\n")
    }
}

impl std::fmt::Display for TransferMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        write!(
            s,
            "L_{:?} on F_{} (dim {}, M = {}, nnz {})",
            self.mu.0,
            self.radius,
            self.dim,
            self.m_mu,
            self.nnz()
        )?;
        f.write_str(&s)
    }
}

/// Germ budget needed for `𝓛_μ` on `F_n`.
pub fn required_radius(mu: &Coweight, n: usize) -> usize {
    n + mu.norm()
}

/// Alcove positions used to count preimages: the radius-`(n + |μ|)` alcoves
/// in the hull of the radius-`n` truncation and its translate by `μ`.
pub fn preimage_region(space: &GermSpace, mu: &Coweight, n: usize) -> Vec<usize> {
    let rank = space.rs.rank;
    let base: Vec<Coweight> = dominant_coweights(rank, n);
    let mut points: Vec<_> = base.iter().map(|l| l.to_point()).collect();
    points.extend(base.iter().map(|l| l.add(mu).to_point()));
    let limit = space.sector.alcove_count(required_radius(mu, n));
    space
        .sector
        .hull_alcoves(&space.rs, &points)
        .into_iter()
        .filter(|&a| a < limit)
        .collect()
}

/// `𝓛_μ` on `F_n`, `table` holding the radius-`n` germs.
///
/// Each locally injective map `P` on the preimage region contributes one
/// count to the entry `(h, g)` with `g = P|trunc(n)` and `h = (P ∘ t_μ)|trunc(n)`.
/// Fails when a row does not sum to `M_μ = q_{t_μ}`.
pub fn transfer_matrix(
    space: &GermSpace,
    table: &GermTable,
    mu: &Coweight,
) -> Result<TransferMatrix> {
    if !mu.is_dominant() {
        return Err(Error::NotDominant(mu.0.clone()));
    }
    let n = table.radius;
    let need = required_radius(mu, n);
    if need > space.max_radius() {
        return Err(Error::RadiusTooSmall {
            have: space.max_radius(),
            need,
        });
    }
    if mu.norm() == 0 {
        return Ok(TransferMatrix::identity(mu.clone(), n, table.len()));
    }
    let m_mu = space.rs.translation_parameter(&space.cs.q, mu)?;
    let region = preimage_region(space, mu, n);
    let count_n = space.sector.alcove_count(n);
    debug_assert!(region[..count_n].iter().enumerate().all(|(i, &a)| i == a));
    let mut pos = vec![usize::MAX; space.sector.len()];
    for (p, &a) in region.iter().enumerate() {
        pos[a] = p;
    }
    let shift = mu.to_point();
    let shifted: Vec<usize> = (0..count_n)
        .map(|a| {
            let b = space
                .sector
                .alcove_index(&space.sector.alcoves[a].translate(&shift))
                .expect("translate lies in the sector");
            pos[b]
        })
        .collect();
    let (sigma, images) = space.enumerate_on(&region)?;
    let width = region.len();
    let mut pairs: Vec<(u32, u32)> = (0..sigma.len())
        .into_par_iter()
        .map(|k| {
            let img = &images[k * width..(k + 1) * width];
            let s = sigma[k] as usize;
            let g = table.find(s, &img[..count_n]).ok_or_else(|| {
                Error::Invalid("preimage restricts outside the germ table".into())
            })?;
            let h_img: Vec<u32> = shifted.iter().map(|&p| img[p]).collect();
            let h = table
                .find(space.shifted_sigma(s, mu), &h_img)
                .ok_or_else(|| {
                    Error::Invalid("shifted preimage missing from the germ table".into())
                })?;
            Ok((h as u32, g as u32))
        })
        .collect::<Result<_>>()?;
    pairs.par_sort_unstable();
    let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); table.len()];
    for (h, g) in pairs {
        let row = &mut rows[h as usize];
        match row.last_mut() {
            Some(last) if last.0 == g => last.1 += 1,
            _ => row.push((g, 1)),
        }
    }
    let l = TransferMatrix {
        mu: mu.clone(),
        radius: n,
        m_mu,
        dim: table.len(),
        rows,
    };
    l.check_row_sums()?;
    Ok(l)
}
