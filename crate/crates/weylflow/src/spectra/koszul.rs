//! Koszul-Taylor complexes of a commuting family shifted by a character.

use nalgebra::{ComplexField, DMatrix, RealField};
use num_complex::Complex;

use super::{c, CMatrix, Character, RankTolerance};
use crate::error::{Error, Result};

/// Subsets of `0..r` of size `p` in lexicographic order, as bitmasks.
pub fn wedge_basis(r: usize, p: usize) -> Vec<u32> {
    let mut out: Vec<u32> = (0u32..1 << r)
        .filter(|m| m.count_ones() as usize == p)
        .collect();
    out.sort_by_key(|&m| (0..r).filter(|&i| m >> i & 1 == 1).collect::<Vec<_>>());
    out
}

fn binomial(r: usize, p: usize) -> usize {
    wedge_basis(r, p).len()
}

/// Outcome of a numerical rank decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankDecision<T> {
    pub rank: usize,
    pub threshold: T,
    /// Singular values strictly inside `(threshold, band · threshold]` make the call ambiguous.
    pub ambiguous: bool,
    pub smallest_kept: Option<T>,
    pub largest_dropped: Option<T>,
}

/// Singular values of `m`, descending. Wide matrices are padded with zero rows.
pub(crate) fn singular_values<T: RealField + Copy>(m: &DMatrix<Complex<T>>) -> Result<Vec<T>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, T::default_epsilon(), 10_000)
        .ok_or(Error::NoConvergence(10_000))?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

pub(crate) fn decide_rank<T: RealField + Copy>(
    sv: &[T],
    dim: usize,
    tol: &RankTolerance,
) -> RankDecision<T> {
    let smax = sv.first().copied().unwrap_or_else(T::zero);
    let threshold = c::<T>(tol.relative) * smax * nalgebra::convert(dim.max(1) as f64);
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let band = threshold * c::<T>(tol.band);
    RankDecision {
        rank,
        threshold,
        ambiguous: smax > T::zero() && sv.iter().any(|&s| s > threshold && s <= band),
        smallest_kept: sv.get(rank.wrapping_sub(1)).copied().filter(|_| rank > 0),
        largest_dropped: sv.get(rank).copied(),
    }
}

/// Orthonormal basis of the numerical kernel, as columns.
pub(crate) fn kernel_basis<T: RealField + Copy>(
    m: &DMatrix<Complex<T>>,
    tol: &RankTolerance,
) -> Result<DMatrix<Complex<T>>> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let padded = if m.nrows() < n {
        m.clone()
            .resize_vertically(n, Complex::new(T::zero(), T::zero()))
    } else {
        m.clone()
    };
    let svd = padded
        .try_svd(false, true, T::default_epsilon(), 10_000)
        .ok_or(Error::NoConvergence(10_000))?;
    let sv: Vec<T> = svd.singular_values.iter().copied().collect();
    let mut sorted = sv.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let threshold = decide_rank(&sorted, m.nrows().max(n), tol).threshold;
    let vt = svd.v_t.expect("requested right singular vectors");
    let cols: Vec<_> = (0..sv.len())
        .filter(|&k| sv[k] <= threshold)
        .map(|k| vt.row(k).adjoint())
        .collect();
    Ok(if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    })
}

/// Orthonormal basis of the complement of the numerical column space. Taken from right
/// singular vectors of the adjoint, which come out more accurate than left ones.
pub(crate) fn cokernel_basis<T: RealField + Copy>(
    m: &DMatrix<Complex<T>>,
    tol: &RankTolerance,
) -> Result<DMatrix<Complex<T>>> {
    kernel_basis(&m.adjoint(), tol)
}

/// `A_i − χ_i`.
pub(crate) fn shifted<T: RealField + Copy>(
    family: &[CMatrix<T>],
    chi: &Character<T>,
) -> Vec<DMatrix<Complex<T>>> {
    family
        .iter()
        .zip(&chi.values)
        .map(|(a, &z)| a - DMatrix::from_diagonal_element(a.nrows(), a.ncols(), z))
        .collect()
}

/// Block matrix of `δ^p : Λ^p ⊗ V → Λ^{p+1} ⊗ V`, `e_S ⊗ x ↦ Σ_i e_i ∧ e_S ⊗ (A_i − χ_i)x`.
pub fn cochain_differential<T: RealField + Copy>(
    shift: &[DMatrix<Complex<T>>],
    p: usize,
) -> DMatrix<Complex<T>> {
    let r = shift.len();
    let d = shift.first().map_or(0, |m| m.nrows());
    let src = wedge_basis(r, p);
    let dst = wedge_basis(r, p + 1);
    let mut out = DMatrix::zeros(dst.len() * d, src.len() * d);
    for (col, &s) in src.iter().enumerate() {
        for (i, op) in shift.iter().enumerate() {
            if s >> i & 1 == 1 {
                continue;
            }
            let sign = if (s & ((1 << i) - 1)).count_ones() % 2 == 0 {
                T::one()
            } else {
                -T::one()
            };
            let row = dst.iter().position(|&m| m == s | 1 << i).unwrap();
            out.view_mut((row * d, col * d), (d, d))
                .copy_from(&op.map(|z| z.scale(sign)));
        }
    }
    out
}

/// Block matrix of `δ̃_p : Λ^p ⊗ V → Λ^{p−1} ⊗ V`, `e_S ⊗ x ↦ Σ_i e_i ⌟ e_S ⊗ (A_i − χ_i)x`.
pub fn chain_differential<T: RealField + Copy>(
    shift: &[DMatrix<Complex<T>>],
    p: usize,
) -> DMatrix<Complex<T>> {
    let r = shift.len();
    let d = shift.first().map_or(0, |m| m.nrows());
    let src = wedge_basis(r, p);
    let dst = if p == 0 {
        Vec::new()
    } else {
        wedge_basis(r, p - 1)
    };
    let mut out = DMatrix::zeros(dst.len() * d, src.len() * d);
    for (col, &s) in src.iter().enumerate() {
        for (i, op) in shift.iter().enumerate() {
            if s >> i & 1 == 0 {
                continue;
            }
            let sign = if (s & ((1 << i) - 1)).count_ones() % 2 == 0 {
                T::one()
            } else {
                -T::one()
            };
            let row = dst.iter().position(|&m| m == s & !(1 << i)).unwrap();
            out.view_mut((row * d, col * d), (d, d))
                .copy_from(&op.map(|z| z.scale(sign)));
        }
    }
    out
}

/// Both complexes for one character, with (co)homology dimensions.
#[derive(Clone, Debug)]
pub struct KoszulComplex<T: RealField + Copy> {
    pub generators: usize,
    pub dim: usize,
    pub chi: Character<T>,
    /// `δ^0 … δ^{r−1}`.
    pub cochain: Vec<DMatrix<Complex<T>>>,
    /// `δ̃_1 … δ̃_r`.
    pub chain: Vec<DMatrix<Complex<T>>>,
    pub cochain_ranks: Vec<RankDecision<T>>,
    pub chain_ranks: Vec<RankDecision<T>>,
    /// `dim H^p`, `p = 0..=r`. Signed so inconsistent rank calls show up as negatives.
    pub cohomology: Vec<i64>,
    /// `dim H_p`, `p = 0..=r`.
    pub homology: Vec<i64>,
    /// Largest `‖δ∘δ‖` over both complexes, relative to the operator scale.
    pub square_defect: T,
    pub tolerance: RankTolerance,
}

impl<T: RealField + Copy> KoszulComplex<T> {
    pub fn ambiguous(&self) -> bool {
        self.cochain_ranks
            .iter()
            .chain(&self.chain_ranks)
            .any(|d| d.ambiguous)
    }

    pub fn is_member(&self) -> bool {
        self.cohomology.iter().any(|&h| h != 0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cohomology
            .iter()
            .enumerate()
            .map(|(p, &h)| if p % 2 == 0 { h } else { -h })
            .sum()
    }

    pub fn duality_holds(&self) -> bool {
        let r = self.generators;
        (0..=r).all(|p| self.homology[p] == self.cohomology[r - p])
    }

    pub fn dims_nonnegative(&self) -> bool {
        self.cohomology
            .iter()
            .chain(&self.homology)
            .all(|&h| h >= 0)
    }
}

pub fn koszul_complexes<T: RealField + Copy>(
    family: &[CMatrix<T>],
    chi: &Character<T>,
    tol: &RankTolerance,
) -> Result<KoszulComplex<T>> {
    let r = family.len();
    if chi.values.len() != r {
        return Err(Error::Dimension(format!(
            "character has {} values for {} operators",
            chi.values.len(),
            r
        )));
    }
    let d = family.first().map_or(0, |m| m.nrows());
    let shift = shifted(family, chi);
    let scale = shift
        .iter()
        .map(|m| m.norm())
        .fold(T::one(), |a, b| if b > a { b } else { a });
    let cochain: Vec<_> = (0..r).map(|p| cochain_differential(&shift, p)).collect();
    let chain: Vec<_> = (1..=r).map(|p| chain_differential(&shift, p)).collect();
    let mut defect = T::zero();
    for w in cochain.windows(2) {
        defect = defect.max((&w[1] * &w[0]).norm() / (scale * scale));
    }
    for w in chain.windows(2) {
        defect = defect.max((&w[0] * &w[1]).norm() / (scale * scale));
    }
    let rank_of = |m: &DMatrix<Complex<T>>| -> Result<RankDecision<T>> {
        let sv = singular_values(m)?;
        Ok(decide_rank(&sv, m.nrows().max(m.ncols()), tol))
    };
    let cochain_ranks = cochain.iter().map(rank_of).collect::<Result<Vec<_>>>()?;
    let chain_ranks = chain.iter().map(rank_of).collect::<Result<Vec<_>>>()?;
    // rank of δ^p, with δ^{-1} = δ^r = 0
    let co = |p: isize| {
        if p < 0 || p as usize >= r {
            0
        } else {
            cochain_ranks[p as usize].rank as i64
        }
    };
    // rank of δ̃_p, with δ̃_0 = δ̃_{r+1} = 0
    let ch = |p: usize| {
        if p == 0 || p > r {
            0
        } else {
            chain_ranks[p - 1].rank as i64
        }
    };
    let cohomology = (0..=r)
        .map(|p| (binomial(r, p) * d) as i64 - co(p as isize) - co(p as isize - 1))
        .collect();
    let homology = (0..=r)
        .map(|p| (binomial(r, p) * d) as i64 - ch(p) - ch(p + 1))
        .collect();
    Ok(KoszulComplex {
        generators: r,
        dim: d,
        chi: chi.clone(),
        cochain,
        chain,
        cochain_ranks,
        chain_ranks,
        cohomology,
        homology,
        square_defect: defect,
        tolerance: *tol,
    })
}

/// `B_1(χ) … B_r(χ)` with `Σ (A_i − χ_i) B_i = A^ℓ − χ^ℓ`.
///
/// Telescopes as `Σ_i (Π_{j<i} χ_j^{ℓ_j}) (A_i^{ℓ_i} − χ_i^{ℓ_i}) (Π_{j>i} A_j^{ℓ_j})`, each middle
/// factor split by the geometric sum. Works over any ring, so rational inputs stay exact.
pub fn parametrix<S>(family: &[DMatrix<S>], exponents: &[u32], chi: &[S]) -> Vec<DMatrix<S>>
where
    S: nalgebra::Scalar
        + num_traits::Zero
        + num_traits::One
        + nalgebra::ClosedAddAssign
        + nalgebra::ClosedMulAssign,
{
    let r = family.len();
    let d = family.first().map_or(0, |m| m.nrows());
    let pow = |m: &DMatrix<S>, k: u32| (0..k).fold(DMatrix::<S>::identity(d, d), |acc, _| acc * m);
    let spow = |z: &S, k: u32| (0..k).fold(S::one(), |acc, _| acc * z.clone());
    (0..r)
        .map(|i| {
            let left = (0..i).fold(S::one(), |acc, j| acc * spow(&chi[j], exponents[j]));
            let l = exponents[i];
            let mut geometric = DMatrix::<S>::zeros(d, d);
            for k in 0..l {
                geometric += pow(&family[i], k) * spow(&chi[i], l - 1 - k);
            }
            let right = (i + 1..r).fold(DMatrix::<S>::identity(d, d), |acc, j| {
                acc * pow(&family[j], exponents[j])
            });
            geometric * right * left
        })
        .collect()
}

/// `A^ℓ = Π A_i^{ℓ_i}`.
pub fn monomial<S>(family: &[DMatrix<S>], exponents: &[u32]) -> DMatrix<S>
where
    S: nalgebra::Scalar
        + num_traits::Zero
        + num_traits::One
        + nalgebra::ClosedAddAssign
        + nalgebra::ClosedMulAssign,
{
    let d = family.first().map_or(0, |m| m.nrows());
    family
        .iter()
        .zip(exponents)
        .fold(DMatrix::identity(d, d), |acc, (m, &k)| {
            (0..k).fold(acc, |a, _| a * m)
        })
}

/// `‖Σ (A_i − χ_i) B_i − (A^ℓ − χ^ℓ)‖_F / max(1, ‖A^ℓ‖_F)`.
pub fn parametrix_residual<T: RealField + Copy>(
    family: &[CMatrix<T>],
    exponents: &[u32],
    chi: &Character<T>,
) -> T {
    let d = family.first().map_or(0, |m| m.nrows());
    let b = parametrix(family, exponents, &chi.values);
    let shift = shifted(family, chi);
    let lhs = shift
        .iter()
        .zip(&b)
        .fold(DMatrix::zeros(d, d), |acc, (s, bi)| acc + s * bi);
    let target = monomial(family, exponents);
    let rhs = &target - DMatrix::from_diagonal_element(d, d, chi.eval(exponents));
    (lhs - rhs).norm() / target.norm().max(T::one())
}

/// Per-degree outcome of the homotopy check.
#[derive(Clone, Debug)]
pub struct HomotopyReport<T> {
    /// `dim Ker δ^p` per degree.
    pub kernel_dims: Vec<usize>,
    /// Largest leftover `‖(1 − P_{Im δ^{p−1}})(1 ⊗ F) k‖` over the kernel basis, per degree.
    pub leftover: Vec<T>,
    pub tolerance: T,
}

impl<T: RealField + Copy> HomotopyReport<T> {
    pub fn passed(&self) -> bool {
        self.leftover.iter().all(|&x| x <= self.tolerance)
    }

    pub fn vacuous(&self) -> bool {
        self.kernel_dims.iter().all(|&k| k == 0)
    }
}

/// Checks `F = Σ (A_i − χ_i) B_i(χ)` acts as zero on Koszul cohomology.
pub fn homotopy_zero_check<T: RealField + Copy>(
    family: &[CMatrix<T>],
    chi: &Character<T>,
    exponents: &[u32],
    tol: &RankTolerance,
    tol_zero: f64,
) -> Result<HomotopyReport<T>> {
    let r = family.len();
    let d = family.first().map_or(0, |m| m.nrows());
    let shift = shifted(family, chi);
    let b = parametrix(family, exponents, &chi.values);
    let f = shift
        .iter()
        .zip(&b)
        .fold(DMatrix::zeros(d, d), |acc, (s, bi)| acc + s * bi);
    let tolerance = c::<T>(tol_zero) * f.norm().max(T::one());
    let mut kernel_dims = Vec::with_capacity(r + 1);
    let mut leftover = Vec::with_capacity(r + 1);
    for p in 0..=r {
        let size = binomial(r, p) * d;
        let kernel = if p < r {
            kernel_basis(&cochain_differential(&shift, p), tol)?
        } else {
            DMatrix::identity(size, size)
        };
        let complement = if p > 0 {
            cokernel_basis(&cochain_differential(&shift, p - 1), tol)?
        } else {
            DMatrix::identity(size, size)
        };
        kernel_dims.push(kernel.ncols());
        let mut worst = T::zero();
        for k in kernel.column_iter() {
            let mut w = k.into_owned();
            // 1 ⊗ F acts blockwise
            for block in 0..binomial(r, p) {
                let x = w.rows(block * d, d).into_owned();
                w.rows_mut(block * d, d).copy_from(&(&f * x));
            }
            worst = worst.max((complement.adjoint() * &w).norm());
        }
        leftover.push(worst);
    }
    Ok(HomotopyReport {
        kernel_dims,
        leftover,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn rmat(d: usize, v: &[i64]) -> DMatrix<Rational> {
        DMatrix::from_row_slice(
            d,
            d,
            &v.iter()
                .map(|&x| Rational::from_integer(x))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn wedge_basis_is_lexicographic() {
        assert_eq!(wedge_basis(3, 1), vec![0b001, 0b010, 0b100]);
        assert_eq!(wedge_basis(3, 2), vec![0b011, 0b101, 0b110]);
        assert_eq!(wedge_basis(2, 0), vec![0]);
    }

    #[test]
    fn parametrix_small_cases() {
        let a = rmat(2, &[1, 2, 3, 4]);
        let b = Rational::new(3, 2);
        let one = parametrix(std::slice::from_ref(&a), &[2], &[b]);
        assert_eq!(one[0], &a + DMatrix::from_diagonal_element(2, 2, b));
        let a2 = rmat(2, &[0, 1, 1, 0]);
        let b2 = Rational::new(-1, 3);
        let two = parametrix(&[a.clone(), a2.clone()], &[1, 1], &[b, b2]);
        assert_eq!(two[0], a2);
        assert_eq!(two[1], DMatrix::from_diagonal_element(2, 2, b));
    }

    #[test]
    fn parametrix_identity_is_exact_over_rationals() {
        let a1 = rmat(3, &[1, 2, 0, 0, 1, 1, 1, 0, 1]);
        // polynomial in a1, so the pair commutes
        let a2 = &a1 * &a1 - &a1 * Rational::from_integer(2);
        let fam = [a1, a2];
        let chi = [Rational::new(2, 3), Rational::new(-5, 7)];
        for ell in [[2u32, 1], [0, 3], [3, 2]] {
            let b = parametrix(&fam, &ell, &chi);
            let lhs = (0..2).fold(DMatrix::zeros(3, 3), |acc, i| {
                acc + (&fam[i] - DMatrix::from_diagonal_element(3, 3, chi[i])) * &b[i]
            });
            let chi_mu = chi[0].pow(ell[0] as i32) * chi[1].pow(ell[1] as i32);
            assert_eq!(
                lhs,
                monomial(&fam, &ell) - DMatrix::from_diagonal_element(3, 3, chi_mu)
            );
        }
    }

    #[test]
    fn differentials_square_to_zero() {
        let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]).map(|x| Complex::new(x, 0.0));
        let a2 = &a1 * &a1;
        let a3 = &a1 * Complex::new(0.5, 1.0);
        let fam = vec![a1, a2, a3];
        let chi = Character::new(vec![
            Complex::new(0.3, 0.1),
            Complex::new(-1.0, 0.0),
            Complex::new(2.0, 0.5),
        ]);
        let k = koszul_complexes(&fam, &chi, &RankTolerance::default()).unwrap();
        assert!(k.square_defect < 1e-14);
        assert_eq!(k.cohomology, vec![0, 0, 0, 0]);
        assert_eq!(k.euler_characteristic(), 0);
    }

    #[test]
    fn single_operator_eigenvalue() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]).map(|x| Complex::new(x, 0.0));
        let k = koszul_complexes(
            std::slice::from_ref(&a),
            &Character::new(vec![Complex::new(2.0, 0.0)]),
            &RankTolerance::default(),
        )
        .unwrap();
        assert_eq!(k.cohomology, vec![1, 1]);
        assert_eq!(k.homology, vec![1, 1]);
        let h = homotopy_zero_check(
            &[a],
            &Character::new(vec![Complex::new(2.0, 0.0)]),
            &[2],
            &RankTolerance::default(),
            1e-8,
        )
        .unwrap();
        assert!(h.passed(), "{h:?}");
        assert_eq!(h.kernel_dims, vec![1, 2]);
    }
}
