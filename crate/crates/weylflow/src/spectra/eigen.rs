//! Dense complex eigensolver.

use nalgebra::{ComplexField, DMatrix, DVector, Hessenberg, RealField};
use num_complex::Complex;

use crate::error::{Error, Result};

/// One eigenpair with its relative residual `‖Av − λv‖ / (‖A‖‖v‖)`.
#[derive(Clone, Debug)]
pub struct EigenPair<T: RealField + Copy> {
    pub value: Complex<T>,
    pub vector: DVector<Complex<T>>,
    pub residual: T,
}

fn c<T: RealField + Copy>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Frobenius norm, clamped below by one so relative tolerances stay meaningful near zero.
pub(crate) fn scale<T: RealField + Copy>(a: &DMatrix<Complex<T>>) -> T {
    let n = a.norm();
    if n > T::one() {
        n
    } else {
        T::one()
    }
}

/// Parlett-Reinsch balancing with powers of two, no permutations.
fn balance<T: RealField + Copy>(a: &mut DMatrix<Complex<T>>) {
    let n = a.nrows();
    let radix = c::<T>(2.0);
    let sqrdx = radix * radix;
    for _sweep in 0..100 {
        let mut done = true;
        for i in 0..n {
            let (mut col, mut row) = (T::zero(), T::zero());
            for j in (0..n).filter(|&j| j != i) {
                col += a[(j, i)].abs();
                row += a[(i, j)].abs();
            }
            if col == T::zero() || row == T::zero() {
                continue;
            }
            let total = col + row;
            let mut f = T::one();
            let g = row / radix;
            while col < g {
                f *= radix;
                col *= sqrdx;
            }
            let g = row * radix;
            while col > g {
                f /= radix;
                col /= sqrdx;
            }
            if (col + row) / f < c::<T>(0.95) * total {
                done = false;
                for j in 0..n {
                    a[(i, j)] = a[(i, j)].unscale(f);
                    a[(j, i)] = a[(j, i)].scale(f);
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Unitary rotation `[[c, s], [-s̄, c]]` with `c` real sending `(x, y)` to `(r, 0)`.
fn givens<T: RealField + Copy>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let ax = x.modulus();
    let ay = y.modulus();
    if ay == T::zero() {
        return (T::one(), Complex::new(T::zero(), T::zero()));
    }
    if ax == T::zero() {
        return (T::zero(), y.conj().unscale(ay));
    }
    let r = ax.hypot(ay);
    (ax / r, (x.unscale(ax) * y.conj()).unscale(r))
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift implicit QR.
fn hessenberg_qr<T: RealField + Copy>(mut h: DMatrix<Complex<T>>) -> Result<Vec<Complex<T>>> {
    let n = h.nrows();
    let eps = T::default_epsilon();
    let cap = 60 * n.max(1);
    let mut total = 0usize;
    let mut hi = n as isize - 1;
    let mut its = 0usize;
    while hi > 0 {
        let hi_u = hi as usize;
        let mut l = hi_u;
        while l > 0 {
            let s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            let s = if s == T::zero() { T::one() } else { s };
            if h[(l, l - 1)].abs() <= eps * s {
                h[(l, l - 1)] = Complex::new(T::zero(), T::zero());
                break;
            }
            l -= 1;
        }
        if l == hi_u {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > cap * n.max(1) {
            return Err(Error::NoConvergence(total));
        }
        let shift = if its % 11 == 10 {
            // exceptional shift
            h[(hi_u, hi_u)] + Complex::new(h[(hi_u, hi_u - 1)].abs() * c::<T>(0.75), T::zero())
        } else {
            let a = h[(hi_u - 1, hi_u - 1)];
            let b = h[(hi_u - 1, hi_u)];
            let cc = h[(hi_u, hi_u - 1)];
            let d = h[(hi_u, hi_u)];
            // Wilkinson: eigenvalue of the trailing block nearer to d
            let half = (a - d).unscale(c::<T>(2.0));
            let disc = (half * half + b * cc).sqrt();
            let root1 = (a + d).unscale(c::<T>(2.0)) + disc;
            let root2 = (a + d).unscale(c::<T>(2.0)) - disc;
            if (root1 - d).modulus() <= (root2 - d).modulus() {
                root1
            } else {
                root2
            }
        };
        for k in l..hi_u {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (cs, sn) = givens(x, y);
            let first = if k > l { k - 1 } else { l };
            for j in first..=hi_u {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = u.scale(cs) + sn * v;
                h[(k + 1, j)] = v.scale(cs) - sn.conj() * u;
            }
            let last = (k + 2).min(hi_u);
            for i in l..=last {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u.scale(cs) + sn.conj() * v;
                h[(i, k + 1)] = v.scale(cs) - sn * u;
            }
            if k > l {
                h[(k + 1, k - 1)] = Complex::new(T::zero(), T::zero());
            }
        }
    }
    Ok((0..n).map(|i| h[(i, i)]).collect())
}

/// Eigenvalues only, unsorted.
pub fn eigenvalues<T: RealField + Copy>(a: &DMatrix<Complex<T>>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "eigen needs a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Malformed("matrix has non-finite entries".into()));
    }
    let mut b = a.clone();
    balance(&mut b);
    let h = if b.nrows() > 2 {
        Hessenberg::new(b).h()
    } else {
        b
    };
    hessenberg_qr(h)
}

/// Deterministic pseudo-random start vector for inverse iteration.
fn start_vector<T: RealField + Copy>(n: usize, salt: usize) -> DVector<Complex<T>> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (salt as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    DVector::from_fn(n, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let re = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let im = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        Complex::new(c(re), c(im))
    })
}

/// Eigenvector for `lambda` by inverse iteration on `a` itself.
pub fn inverse_iteration<T: RealField + Copy>(
    a: &DMatrix<Complex<T>>,
    lambda: Complex<T>,
    salt: usize,
) -> DVector<Complex<T>> {
    let n = a.nrows();
    let norm = scale(a);
    let mut delta = norm * T::default_epsilon() * c::<T>(64.0);
    let mut v = start_vector::<T>(n, salt);
    v.unscale_mut(v.norm());
    for _ in 0..8 {
        let shifted = a - DMatrix::from_diagonal_element(n, n, lambda + Complex::new(delta, delta));
        let lu = shifted.lu();
        let mut x = v.clone();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(y)
                    if y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
                        && y.norm() > T::zero() =>
                {
                    x = y.unscale(y.norm());
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return x;
        }
        delta *= c::<T>(1e3);
    }
    v
}

/// Relative residual of a candidate pair.
pub fn residual<T: RealField + Copy>(
    a: &DMatrix<Complex<T>>,
    lambda: Complex<T>,
    v: &DVector<Complex<T>>,
) -> T {
    let r = a * v - v * lambda;
    r.norm() / (scale(a) * v.norm())
}

/// Sort key rounding the real part onto a grid, so values whose real parts differ by
/// rounding noise are ordered by imaginary part.
pub(crate) fn order_key<T: RealField + Copy>(z: &Complex<T>, grid: T) -> (i64, T) {
    let q = (z.re / grid).round();
    let q: f64 = nalgebra::try_convert(q).unwrap_or(0.0);
    (q as i64, z.im)
}

pub(crate) fn sort_values<T: RealField + Copy>(values: &mut [Complex<T>], grid: T) {
    values.sort_by(|a, b| {
        let (ka, ia) = order_key(a, grid);
        let (kb, ib) = order_key(b, grid);
        ka.cmp(&kb)
            .then(ia.partial_cmp(&ib).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// All `d` eigenpairs, ordered by real then imaginary part.
pub fn eigen<T: RealField + Copy>(a: &DMatrix<Complex<T>>) -> Result<Vec<EigenPair<T>>> {
    let mut values = eigenvalues(a)?;
    let grid = scale(a) * c::<T>(1e-9);
    sort_values(&mut values, grid);
    let mut out: Vec<EigenPair<T>> = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let vector = inverse_iteration(a, value, i);
        let residual = residual(a, value, &vector);
        out.push(EigenPair {
            value,
            vector,
            residual,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, data: &[f64]) -> DMatrix<Complex<f64>> {
        DMatrix::from_row_slice(rows, rows, data).map(|x| Complex::new(x, 0.0))
    }

    #[test]
    fn identity_is_all_ones() {
        let a = DMatrix::<Complex<f64>>::identity(5, 5);
        let pairs = eigen(&a).unwrap();
        assert_eq!(pairs.len(), 5);
        for p in pairs {
            assert!((p.value - Complex::new(1.0, 0.0)).norm() < 1e-14);
            assert!(p.residual < 1e-14);
        }
    }

    #[test]
    fn companion_quadratic() {
        // λ² + λ + 2
        let a = cm(2, &[0.0, 1.0, -2.0, -1.0]);
        let pairs = eigen(&a).unwrap();
        let s = 7f64.sqrt() / 2.0;
        assert!((pairs[0].value - Complex::new(-0.5, -s)).norm() < 1e-12);
        assert!((pairs[1].value - Complex::new(-0.5, s)).norm() < 1e-12);
        assert!(pairs.iter().all(|p| p.residual < 1e-12));
    }

    #[test]
    fn rotation_and_triangular() {
        let a = cm(2, &[0.0, -1.0, 1.0, 0.0]);
        let v = eigenvalues(&a).unwrap();
        assert!(v
            .iter()
            .any(|z| (z - Complex::new(0.0, 1.0)).norm() < 1e-12));
        assert!(v
            .iter()
            .any(|z| (z - Complex::new(0.0, -1.0)).norm() < 1e-12));
        let t = cm(3, &[1.0, 5.0, -2.0, 0.0, 3.0, 7.0, 0.0, 0.0, -4.0]);
        let pairs = eigen(&t).unwrap();
        let got: Vec<f64> = pairs.iter().map(|p| p.value.re).collect();
        assert!(
            (got[0] + 4.0).abs() < 1e-12
                && (got[1] - 1.0).abs() < 1e-12
                && (got[2] - 3.0).abs() < 1e-12
        );
    }

    #[test]
    fn cyclic_permutation_roots_of_unity() {
        let n = 7;
        let a = DMatrix::from_fn(n, n, |i, j| {
            Complex::new(if j == (i + 1) % n { 1.0 } else { 0.0 }, 0.0)
        });
        let pairs = eigen(&a).unwrap();
        for p in &pairs {
            assert!((p.value.norm() - 1.0).abs() < 1e-12);
            assert!(p.residual < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(eigen(&DMatrix::<Complex<f64>>::zeros(0, 0)).is_err());
        assert!(eigen(&cm(1, &[f64::NAN])).is_err());
    }
}
