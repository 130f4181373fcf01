use std::collections::BTreeMap;

use num_traits::{Num, One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::TransferMatrix;
use crate::error::{Error, Result};
use crate::sectors::{GermTable, KMatrix};
use crate::Rational;

/// For each `t ≤ n`, the classes of the relation `k ≥ t` on radius-`n` germs.
/// Ultrametricity makes these partitions, nested in `t`.
#[derive(Clone, Debug)]
pub struct BallClasses {
    pub radius: usize,
    /// `labels[t][g]`, dense per level.
    pub labels: Vec<Vec<usize>>,
}

impl BallClasses {
    pub fn new(k: &KMatrix) -> Result<Self> {
        let labels = (0..=k.radius)
            .map(|t| {
                k.classes(t)
                    .ok_or_else(|| Error::Invalid(format!("relation k >= {t} is not transitive")))
            })
            .collect::<Result<_>>()?;
        Ok(BallClasses {
            radius: k.radius,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels[0].len()
    }
}

fn theta_pow<T: Num + Clone>(theta: &T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, _| acc * theta.clone())
}

/// `|φ|_θ = max |φ(g) − φ(h)| / θ^{k(g, h)}` over resolved pairs, using the
/// classes: the largest spread inside a `k ≥ t` class, divided by `θ^t`.
pub fn lipschitz_seminorm<T>(phi: &[T], theta: &T, classes: &BallClasses) -> T
where
    T: Signed + PartialOrd + Clone,
{
    let mut best = T::zero();
    for (t, labels) in classes.labels.iter().enumerate() {
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut lo: Vec<Option<T>> = vec![None; count];
        let mut hi: Vec<Option<T>> = vec![None; count];
        for (g, &c) in labels.iter().enumerate() {
            let v = &phi[g];
            if lo[c].as_ref().is_none_or(|x| v < x) {
                lo[c] = Some(v.clone());
            }
            if hi[c].as_ref().is_none_or(|x| v > x) {
                hi[c] = Some(v.clone());
            }
        }
        let scale = theta_pow(theta, t);
        for (a, b) in lo.into_iter().zip(hi) {
            if let (Some(a), Some(b)) = (a, b) {
                let val = (b - a) / scale.clone();
                if val > best {
                    best = val;
                }
            }
        }
    }
    best
}

/// The same seminorm by a scan over all pairs.
pub fn lipschitz_seminorm_pairwise<T>(phi: &[T], theta: &T, k: &KMatrix) -> T
where
    T: Signed + PartialOrd + Clone,
{
    let mut best = T::zero();
    for i in 0..k.size {
        for j in i + 1..k.size {
            if let Some(kk) = k.get(i, j) {
                let val = (phi[i].clone() - phi[j].clone()).abs() / theta_pow(theta, kk);
                if val > best {
                    best = val;
                }
            }
        }
    }
    best
}

/// `Π_n φ`: the value on each radius-`n` germ is `φ` at the first radius-`m`
/// germ restricting to it.
pub fn pi_projection<T: Clone>(phi: &[T], fine: &GermTable, coarse: &GermTable) -> Result<Vec<T>> {
    if coarse.radius >= fine.radius {
        return Err(Error::RadiusTooSmall {
            have: fine.radius,
            need: coarse.radius + 1,
        });
    }
    if phi.len() != fine.len() {
        return Err(Error::Dimension(format!(
            "function has {} values, expected {}",
            phi.len(),
            fine.len()
        )));
    }
    let map = fine.restriction_map(coarse)?;
    let mut first = vec![usize::MAX; coarse.len()];
    for (i, &c) in map.iter().enumerate() {
        if first[c] == usize::MAX {
            first[c] = i;
        }
    }
    first
        .iter()
        .map(|&i| {
            if i == usize::MAX {
                Err(Error::Invalid("restriction is not surjective".into()))
            } else {
                Ok(phi[i].clone())
            }
        })
        .collect()
}

/// `(2/θ) / (1 − θ)`, the constant for iterates of the key inequality.
pub fn iterated_constant(theta: Rational) -> Rational {
    Rational::from_integer(2) / theta / (Rational::one() - theta)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LasotaYorkeReport {
    pub mu: Vec<i64>,
    pub radius: usize,
    pub theta: String,
    pub constant: String,
    pub strongly_dominant: bool,
    pub checked: usize,
    /// `|𝓛φ|_θ ≤ θ|φ|_θ + (2/θ)‖φ‖_∞`, strongly dominant `μ` only.
    pub violations: usize,
    /// `|𝓛φ|_θ ≤ |φ|_θ + (2/θ)‖φ‖_∞`.
    pub nonexpansion_violations: usize,
    /// `|𝓛^ℓφ|_θ ≤ θ^ℓ|φ|_θ + (2/θ)/(1 − θ)‖φ‖_∞` for `ℓ ≤ iterations`.
    pub iterated_violations: usize,
    pub sup_norm_violations: usize,
    /// Smallest `rhs − lhs` of the main inequality over the basis.
    pub min_slack: Option<String>,
}

impl LasotaYorkeReport {
    pub fn passed(&self) -> bool {
        self.violations
            + self.nonexpansion_violations
            + self.iterated_violations
            + self.sup_norm_violations
            == 0
    }
}

fn sup_norm(phi: &[Rational]) -> Rational {
    phi.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Run the Lasota–Yorke inequalities for every indicator function of `F_n`.
pub fn check_lasota_yorke(
    l: &TransferMatrix,
    classes: &BallClasses,
    theta: Rational,
    iterations: usize,
) -> Result<LasotaYorkeReport> {
    if classes.dim() != l.dim {
        return Err(Error::Dimension(format!(
            "classes on {} germs, matrix of dimension {}",
            classes.dim(),
            l.dim
        )));
    }
    let c = Rational::from_integer(2) / theta;
    let c_iter = iterated_constant(theta);
    let strong = l.mu.is_strongly_dominant() && l.mu.norm() > 0;
    let results: Vec<(bool, bool, usize, bool, Rational)> = (0..l.dim)
        .into_par_iter()
        .map(|g| -> Result<_> {
            let mut phi = vec![Rational::zero(); l.dim];
            phi[g] = Rational::one();
            let norm = sup_norm(&phi);
            let semi = lipschitz_seminorm(&phi, &theta, classes);
            let mut psi = l.apply(&phi)?;
            let lhs = lipschitz_seminorm(&psi, &theta, classes);
            let sup_ok = sup_norm(&psi) <= norm;
            let slack = theta * semi + c * norm - lhs;
            let main_ok = !strong || slack >= Rational::zero();
            let nonexp_ok = lhs <= semi + c * norm;
            let mut iter_bad = 0;
            let mut theta_l = theta;
            for _ in 1..iterations {
                psi = l.apply(&psi)?;
                theta_l *= theta;
                if strong
                    && lipschitz_seminorm(&psi, &theta, classes) > theta_l * semi + c_iter * norm
                {
                    iter_bad += 1;
                }
            }
            Ok((main_ok, nonexp_ok, iter_bad, sup_ok, slack))
        })
        .collect::<Result<_>>()?;
    Ok(LasotaYorkeReport {
        mu: l.mu.0.clone(),
        radius: l.radius,
        theta: theta.to_string(),
        constant: c.to_string(),
        strongly_dominant: strong,
        checked: results.len(),
        violations: results.iter().filter(|r| !r.0).count(),
        nonexpansion_violations: results.iter().filter(|r| !r.1).count(),
        iterated_violations: results.iter().map(|r| r.2).sum(),
        sup_norm_violations: results.iter().filter(|r| !r.3).count(),
        min_slack: if strong {
            results.iter().map(|r| r.4).min().map(|s| s.to_string())
        } else {
            None
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FnInvarianceReport {
    pub mu: Vec<i64>,
    pub radius: usize,
    /// `𝓛` on `F_{n+1}`, compressed through restriction, equals `𝓛` on `F_n`.
    pub consistent: bool,
    pub mismatches: usize,
    /// Rows of `𝓛` on `F_n` agree across radius-`(n−1)` classes; checked for
    /// strongly dominant `μ` and `n ≥ 2`.
    pub column_constant: Option<bool>,
}

impl FnInvarianceReport {
    pub fn passed(&self) -> bool {
        self.consistent && self.column_constant != Some(false)
    }
}

/// Compare `l_next` on `F_{n+1}` with `l` on `F_n` through the restriction
/// map `up` (radius `n + 1` to `n`), and when `down` (radius `n` to `n − 1`)
/// is given and `μ` is strongly dominant, test that `𝓛_μ F_n ⊆ F_{n−1}`.
pub fn check_fn_invariance(
    l: &TransferMatrix,
    l_next: &TransferMatrix,
    up: &[usize],
    down: Option<&[usize]>,
) -> Result<FnInvarianceReport> {
    if l.mu != l_next.mu || l_next.radius != l.radius + 1 || up.len() != l_next.dim {
        return Err(Error::Dimension(
            "matrices and restriction map do not fit together".into(),
        ));
    }
    let mismatches = (0..l_next.dim)
        .into_par_iter()
        .filter(|&h| {
            let mut compressed: BTreeMap<u32, u64> = BTreeMap::new();
            for &(g, c) in &l_next.rows[h] {
                *compressed.entry(up[g as usize] as u32).or_insert(0) += c;
            }
            let coarse = &l.rows[up[h]];
            compressed.len() != coarse.len()
                || compressed.iter().zip(coarse).any(|((&g, &c), &(g2, c2))| {
                    g != g2 || c as u128 * l.m_mu as u128 != c2 as u128 * l_next.m_mu as u128
                })
        })
        .count();
    let column_constant = match down {
        Some(down) if l.mu.is_strongly_dominant() && l.radius >= 2 => {
            if down.len() != l.dim {
                return Err(Error::Dimension(
                    "restriction map has the wrong length".into(),
                ));
            }
            let mut rep: BTreeMap<usize, usize> = BTreeMap::new();
            let mut ok = true;
            for (h, &cls) in down.iter().enumerate() {
                let r = *rep.entry(cls).or_insert(h);
                if l.rows[r] != l.rows[h] {
                    ok = false;
                    break;
                }
            }
            Some(ok)
        }
        _ => None,
    };
    Ok(FnInvarianceReport {
        mu: l.mu.0.clone(),
        radius: l.radius,
        consistent: mismatches == 0,
        mismatches,
        column_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::{complete_bipartite, from_graph};
    use crate::rootdata::Coweight;
    use crate::sectors::GermSpace;
    use crate::transfer::transfer_matrix;

    #[test]
    fn k33_indicator_seminorm() {
        let sp = GermSpace::new(from_graph(&complete_bipartite(3, 3).edges).unwrap(), 3).unwrap();
        let t = sp.enumerate_germs(1).unwrap();
        let k = sp.k_matrix(&t);
        let classes = BallClasses::new(&k).unwrap();
        let half = Rational::new(1, 2);
        let mut phi = vec![Rational::zero(); t.len()];
        phi[0] = Rational::one();
        assert_eq!(
            lipschitz_seminorm(&phi, &half, &classes),
            Rational::from_integer(2)
        );
        assert_eq!(
            lipschitz_seminorm_pairwise(&phi, &half, &k),
            Rational::from_integer(2)
        );
        let constant = vec![Rational::from_integer(7); t.len()];
        assert_eq!(
            lipschitz_seminorm(&constant, &half, &classes),
            Rational::zero()
        );
    }

    #[test]
    fn k33_lasota_yorke_and_invariance() {
        let sp = GermSpace::new(from_graph(&complete_bipartite(3, 3).edges).unwrap(), 4).unwrap();
        let t: Vec<_> = (1..=3).map(|n| sp.enumerate_germs(n).unwrap()).collect();
        let mu = Coweight(vec![1]);
        let l2 = transfer_matrix(&sp, &t[1], &mu).unwrap();
        let classes = BallClasses::new(&sp.k_matrix(&t[1])).unwrap();
        let r = check_lasota_yorke(&l2, &classes, Rational::new(1, 2), 3).unwrap();
        assert_eq!(r.checked, 36);
        assert!(r.passed(), "{r:?}");

        let l1 = transfer_matrix(&sp, &t[0], &mu).unwrap();
        let l3 = transfer_matrix(&sp, &t[2], &mu).unwrap();
        let up = t[1].restriction_map(&t[0]).unwrap();
        let rep = check_fn_invariance(&l1, &l2, &up, None).unwrap();
        assert!(rep.consistent);
        let up = t[2].restriction_map(&t[1]).unwrap();
        let down = t[1].restriction_map(&t[0]).unwrap();
        let rep = check_fn_invariance(&l2, &l3, &up, Some(&down)).unwrap();
        assert_eq!(rep.column_constant, Some(true));
    }

    #[test]
    fn projection_is_idempotent() {
        let sp = GermSpace::new(from_graph(&complete_bipartite(3, 3).edges).unwrap(), 2).unwrap();
        let t1 = sp.enumerate_germs(1).unwrap();
        let t2 = sp.enumerate_germs(2).unwrap();
        let map = t2.restriction_map(&t1).unwrap();
        let phi: Vec<i64> = (0..t1.len() as i64).collect();
        let lifted: Vec<i64> = map.iter().map(|&c| phi[c]).collect();
        assert_eq!(pi_projection(&lifted, &t2, &t1).unwrap(), phi);
        assert!(pi_projection(&phi, &t1, &t1).is_err());
    }
}
