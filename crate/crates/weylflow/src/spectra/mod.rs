//! Joint spectra of commuting transfer families and their Koszul-Taylor complexes.

mod eigen;
mod koszul;

use std::fmt::Write as _;

use nalgebra::{ComplexField, DMatrix, RealField};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use eigen::{eigen, eigenvalues, inverse_iteration, residual, EigenPair};
pub use koszul::{
    chain_differential, cochain_differential, homotopy_zero_check, koszul_complexes, monomial,
    parametrix, parametrix_residual, wedge_basis, HomotopyReport, KoszulComplex, RankDecision,
};

use crate::error::{Error, Result};
use crate::transfer::TransferMatrix;

pub const SPECTRUM_FORMAT: &str = "spectrum/v1";
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

pub type CMatrix<T = f64> = DMatrix<Complex<T>>;

pub(crate) fn c<T: RealField + Copy>(x: f64) -> T {
    nalgebra::convert(x)
}

fn to_f64<T: RealField + Copy>(x: T) -> f64 {
    nalgebra::try_convert(x).unwrap_or(f64::NAN)
}

/// Dense complex copy of an exact transfer matrix.
pub fn to_complex<T: RealField + Copy>(l: &TransferMatrix) -> CMatrix<T> {
    let m = l.m_mu as f64;
    let mut out = CMatrix::<T>::zeros(l.dim, l.dim);
    for (h, row) in l.rows.iter().enumerate() {
        for &(g, k) in row {
            out[(h, g as usize)] = Complex::new(c(k as f64 / m), T::zero());
        }
    }
    out
}

/// Checks exact pairwise commutation, then converts.
pub fn family_from_transfer<T: RealField + Copy>(
    ops: &[TransferMatrix],
) -> Result<Vec<CMatrix<T>>> {
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            if a.dim != b.dim {
                return Err(Error::Dimension(format!("{} vs {}", a.dim, b.dim)));
            }
            if !a.product(b)?.same_operator(&b.product(a)?) {
                return Err(Error::Commutation(format!(
                    "mu {:?} and {:?} on F_{}",
                    a.mu.0, b.mu.0, a.radius
                )));
            }
        }
    }
    Ok(ops.iter().map(to_complex).collect())
}

/// Values of a character on the generators; extended multiplicatively.
#[derive(Clone, Debug, PartialEq)]
pub struct Character<T: RealField + Copy = f64> {
    pub values: Vec<Complex<T>>,
}

impl<T: RealField + Copy> Character<T> {
    pub fn new(values: Vec<Complex<T>>) -> Self {
        Character { values }
    }

    pub fn trivial(r: usize) -> Self {
        Character {
            values: vec![Complex::new(T::one(), T::zero()); r],
        }
    }

    /// `χ(Σ ℓ_i h_i) = Π χ_i^{ℓ_i}`.
    pub fn eval(&self, exponents: &[u32]) -> Complex<T> {
        self.values
            .iter()
            .zip(exponents)
            .fold(Complex::new(T::one(), T::zero()), |acc, (z, &k)| {
                acc * z.powu(k)
            })
    }

    /// `max_k |χ(k)|` over the gate elements.
    pub fn gate_value(&self, gates: &[Vec<u32>]) -> T {
        gates
            .iter()
            .map(|k| self.eval(k).modulus())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Max-norm distance between value tuples.
    pub fn distance(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).modulus())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Singular values at most `relative · σ_max · dim` count as zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankTolerance {
    pub relative: f64,
    /// Width of the ambiguity band above the threshold, as a factor.
    pub band: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        RankTolerance {
            relative: 1e-9,
            band: 100.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumConfig {
    pub theta: f64,
    pub seed: u64,
    pub tol_res: f64,
    pub tol_merge: f64,
    pub rank: RankTolerance,
    /// Exponent vectors of the strongly dominant gate elements.
    pub gates: Vec<Vec<u32>>,
    pub samples: usize,
    /// Samples keep every value at least this far from the matching operator's spectrum.
    pub sample_margin: f64,
}

impl SpectrumConfig {
    /// Defaults for `r` generators; gates `Σϖ_i` and `2Σϖ_i`.
    pub fn new(r: usize) -> Self {
        SpectrumConfig {
            theta: 0.5,
            seed: DEFAULT_SEED,
            tol_res: 1e-8,
            tol_merge: 1e-6,
            rank: RankTolerance::default(),
            gates: vec![vec![1; r], vec![2; r]],
            samples: 20,
            sample_margin: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct JointEigenvalue<T: RealField + Copy = f64> {
    pub chi: Character<T>,
    /// Orthonormal basis of the joint eigenspace, as columns.
    pub vectors: CMatrix<T>,
    /// `max_i ‖(A_i − χ_i)v‖` over the basis.
    pub residual: T,
    pub rank: RankDecision<T>,
}

impl<T: RealField + Copy> JointEigenvalue<T> {
    pub fn mult(&self) -> usize {
        self.vectors.ncols()
    }
}

#[derive(Clone, Debug)]
pub struct JointSpectrum<T: RealField + Copy = f64> {
    pub joint: Vec<JointEigenvalue<T>>,
    pub per_operator: Vec<Vec<Complex<T>>>,
    /// Candidates whose stacked null space came out trivial.
    pub rejected: Vec<Character<T>>,
    pub combination: Vec<Complex<T>>,
}

impl<T: RealField + Copy> JointSpectrum<T> {
    /// Index of a joint eigenvalue within `tol` of `chi`.
    pub fn find(&self, chi: &Character<T>, tol: T) -> Option<usize> {
        self.joint.iter().position(|j| j.chi.distance(chi) < tol)
    }
}

fn check_family<T: RealField + Copy>(family: &[CMatrix<T>]) -> Result<usize> {
    let d = family
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| Error::Dimension("empty operator family".into()))?;
    if family.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::Dimension(
            "operators must share one square shape".into(),
        ));
    }
    Ok(d)
}

fn stacked<T: RealField + Copy>(family: &[CMatrix<T>], chi: &Character<T>) -> CMatrix<T> {
    koszul::cochain_differential(&koszul::shifted(family, chi), 0)
}

fn character_key<T: RealField + Copy>(chi: &Character<T>, grid: T) -> Vec<(i64, i64)> {
    chi.values
        .iter()
        .map(|z| {
            let (re, im) = eigen::order_key(z, grid);
            (re, to_f64(im / grid).round() as i64)
        })
        .collect()
}

/// Joint eigenvalues from a random combination, confirmed by stacked null spaces.
pub fn joint_spectrum<T: RealField + Copy>(
    family: &[CMatrix<T>],
    cfg: &SpectrumConfig,
) -> Result<JointSpectrum<T>> {
    let d = check_family(family)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let combination: Vec<Complex<T>> = family
        .iter()
        .map(|_| Complex::new(c(rng.gen_range(0.5..1.5)), c(rng.gen_range(-1.0..1.0))))
        .collect();
    let mix = family
        .iter()
        .zip(&combination)
        .fold(CMatrix::<T>::zeros(d, d), |acc, (a, &z)| acc + a * z);
    let values = eigenvalues(&mix)?;
    let tol_merge = c::<T>(cfg.tol_merge);
    let mut clusters: Vec<Vec<Character<T>>> = Vec::new();
    for (salt, &lambda) in values.iter().enumerate() {
        let v = inverse_iteration(&mix, lambda, salt);
        let vv = v.dotc(&v);
        let chi = Character::new(family.iter().map(|a| v.dotc(&(a * &v)) / vv).collect());
        match clusters
            .iter_mut()
            .find(|cl| cl[0].distance(&chi) < tol_merge)
        {
            Some(cl) => cl.push(chi),
            None => clusters.push(vec![chi]),
        }
    }
    let mut joint = Vec::new();
    let mut rejected = Vec::new();
    for cl in clusters {
        let n: T = nalgebra::convert(cl.len() as f64);
        let mean = Character::new(
            (0..family.len())
                .map(|i| {
                    cl.iter()
                        .fold(Complex::new(T::zero(), T::zero()), |acc, x| {
                            acc + x.values[i]
                        })
                        .unscale(n)
                })
                .collect(),
        );
        let s = stacked(family, &mean);
        let sv = koszul::singular_values(&s)?;
        let rank = koszul::decide_rank(&sv, s.nrows().max(s.ncols()), &cfg.rank);
        let vectors = koszul::kernel_basis(&s, &cfg.rank)?;
        if vectors.ncols() == 0 {
            rejected.push(mean);
            continue;
        }
        let residual = vectors
            .column_iter()
            .map(|v| {
                koszul::shifted(family, &mean)
                    .iter()
                    .map(|m| (m * v).norm())
                    .fold(T::zero(), |a, b| a.max(b))
            })
            .fold(T::zero(), |a, b| a.max(b));
        joint.push(JointEigenvalue {
            chi: mean,
            vectors,
            residual,
            rank,
        });
    }
    let grid = c::<T>(1e-9);
    joint.sort_by_key(|a| character_key(&a.chi, grid));
    let per_operator = family
        .iter()
        .map(|a| {
            let mut v = eigenvalues(a)?;
            eigen::sort_values(&mut v, eigen::scale(a) * grid);
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointSpectrum {
        joint,
        per_operator,
        rejected,
        combination,
    })
}

/// Where a tested character came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Joint,
    Sample,
    User,
}

#[derive(Clone, Debug)]
pub struct Verdict<T: RealField + Copy = f64> {
    pub chi: Character<T>,
    pub source: Source,
    pub gate_value: T,
    pub gated: bool,
    pub cohomology: Vec<i64>,
    pub homology: Vec<i64>,
    /// Some cohomology is nonzero.
    pub taylor: bool,
    /// Within merge tolerance of a computed joint eigenvalue.
    pub joint: bool,
    pub ambiguous: bool,
}

impl<T: RealField + Copy> Verdict<T> {
    /// Taylor membership agrees with joint-eigenvalue membership, or the gate does not apply.
    pub fn consistent(&self) -> bool {
        !self.gated || self.taylor == self.joint
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumReport<T: RealField + Copy = f64> {
    pub theta: f64,
    pub generators: Vec<Vec<i64>>,
    pub dim: usize,
    pub spectrum: JointSpectrum<T>,
    pub verdicts: Vec<Verdict<T>>,
    pub tol_res: f64,
}

impl<T: RealField + Copy> SpectrumReport<T> {
    pub fn consistent(&self) -> bool {
        self.verdicts.iter().all(Verdict::consistent)
    }

    pub fn residuals_ok(&self) -> bool {
        let tol = c::<T>(self.tol_res);
        self.spectrum.joint.iter().all(|j| j.residual <= tol)
    }

    pub fn ambiguous(&self) -> usize {
        self.verdicts.iter().filter(|v| v.ambiguous).count()
    }

    pub fn passed(&self) -> bool {
        self.consistent() && self.residuals_ok() && self.spectrum.rejected.is_empty()
    }

    fn verdicts_from(&self, source: Source) -> impl Iterator<Item = &Verdict<T>> {
        self.verdicts.iter().filter(move |v| v.source == source)
    }

    /// Spectrum JSON with 17 significant digits and no negative zeros.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{{\"format\":\"{SPECTRUM_FORMAT}\",\"theta\":{},\"generators\":[",
            json_float(self.theta)
        )
        .unwrap();
        s.push_str(
            &self
                .generators
                .iter()
                .map(|g| format!("[{}]", join(g.iter().map(|x| x.to_string()))))
                .collect::<Vec<_>>()
                .join(","),
        );
        write!(s, "],\"dimF1\":{},\"joint\":[", self.dim).unwrap();
        let joint: Vec<String> = self
            .spectrum
            .joint
            .iter()
            .zip(self.verdicts_from(Source::Joint))
            .map(|(j, v)| {
                format!(
                    "{{\"chi\":{},\"mult\":{},\"residual\":{},\"gated\":{},\"taylor\":{},\"cohomology\":[{}]}}",
                    chi_json(&j.chi),
                    j.mult(),
                    json_float(to_f64(j.residual)),
                    v.gated,
                    v.taylor,
                    join(v.cohomology.iter().map(|h| h.to_string()))
                )
            })
            .collect();
        s.push_str(&joint.join(","));
        s.push_str("],\"per_operator\":[");
        s.push_str(
            &self
                .spectrum
                .per_operator
                .iter()
                .map(|v| format!("[{}]", join(v.iter().map(complex_json))))
                .collect::<Vec<_>>()
                .join(","),
        );
        s.push_str("],\"offspectrum_samples\":[");
        s.push_str(&join(self.verdicts_from(Source::Sample).map(verdict_json)));
        s.push_str("],\"user\":[");
        s.push_str(&join(self.verdicts_from(Source::User).map(verdict_json)));
        write!(s, "],\"consistent\":{}}}", self.consistent()).unwrap();
        s
    }
}

fn join(it: impl Iterator<Item = String>) -> String {
    it.collect::<Vec<_>>().join(",")
}

/// JSON number with 17 significant digits; `null` for non-finite values, `-0` folded to `0`.
pub fn json_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn complex_json<T: RealField + Copy>(z: &Complex<T>) -> String {
    format!(
        "[{},{}]",
        json_float(to_f64(z.re)),
        json_float(to_f64(z.im))
    )
}

fn chi_json<T: RealField + Copy>(chi: &Character<T>) -> String {
    format!("[{}]", join(chi.values.iter().map(complex_json)))
}

fn verdict_json<T: RealField + Copy>(v: &Verdict<T>) -> String {
    format!(
        "{{\"chi\":{},\"gate\":{},\"gated\":{},\"taylor\":{},\"joint\":{},\"cohomology\":[{}]}}",
        chi_json(&v.chi),
        json_float(to_f64(v.gate_value)),
        v.gated,
        v.taylor,
        v.joint,
        join(v.cohomology.iter().map(|h| h.to_string()))
    )
}

/// Random characters with every value at least `margin` from the matching operator's spectrum.
pub fn offspectrum_samples<T: RealField + Copy>(
    per_operator: &[Vec<Complex<T>>],
    count: usize,
    margin: f64,
    seed: u64,
) -> Vec<Character<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = c::<T>(margin);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let values: Vec<Complex<T>> = per_operator
            .iter()
            .map(|spec| loop {
                let z = Complex::new(
                    c::<T>(rng.gen_range(-1.5..1.5)),
                    c::<T>(rng.gen_range(-1.5..1.5)),
                );
                if spec.iter().all(|w| (z - w).modulus() > margin) {
                    break z;
                }
            })
            .collect();
        out.push(Character::new(values));
    }
    out
}

/// Tests Taylor membership against joint-eigenvalue membership on gated characters.
///
/// The gate `max_k |χ(k)| > θ` is applied with the merge tolerance as margin, so values sitting
/// on the boundary up to rounding are left out.
pub fn taylor_report<T: RealField + Copy>(
    family: &[CMatrix<T>],
    generators: Vec<Vec<i64>>,
    cfg: &SpectrumConfig,
    user: &[Character<T>],
) -> Result<SpectrumReport<T>> {
    let d = check_family(family)?;
    if let Some(u) = user.iter().find(|u| u.values.len() != family.len()) {
        return Err(Error::Dimension(format!(
            "character has {} values for {} operators",
            u.values.len(),
            family.len()
        )));
    }
    let spectrum = joint_spectrum(family, cfg)?;
    let samples = offspectrum_samples(
        &spectrum.per_operator,
        cfg.samples,
        cfg.sample_margin,
        cfg.seed ^ 0x5A5A,
    );
    let tested: Vec<(Character<T>, Source)> = spectrum
        .joint
        .iter()
        .map(|j| (j.chi.clone(), Source::Joint))
        .chain(samples.into_iter().map(|x| (x, Source::Sample)))
        .chain(user.iter().cloned().map(|x| (x, Source::User)))
        .collect();
    let theta = c::<T>(cfg.theta);
    let tol_merge = c::<T>(cfg.tol_merge);
    let verdicts = tested
        .into_par_iter()
        .map(|(chi, source)| {
            let k = koszul_complexes(family, &chi, &cfg.rank)?;
            let gate_value = chi.gate_value(&cfg.gates);
            Ok(Verdict {
                gated: gate_value > theta + tol_merge,
                gate_value,
                taylor: k.is_member(),
                joint: spectrum.find(&chi, tol_merge).is_some(),
                ambiguous: k.ambiguous(),
                cohomology: k.cohomology,
                homology: k.homology,
                chi,
                source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumReport {
        theta: cfg.theta,
        generators,
        dim: d,
        spectrum,
        verdicts,
        tol_res: cfg.tol_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex::new(x, 0.0)),
        ))
    }

    #[test]
    fn diagonal_pair_joint_spectrum() {
        let fam = vec![diag(&[1.0, 1.0, -0.5, 0.25]), diag(&[1.0, 1.0, 0.5, 0.25])];
        let js = joint_spectrum(&fam, &SpectrumConfig::new(2)).unwrap();
        assert_eq!(js.joint.len(), 3);
        let one = js.find(&Character::trivial(2), 1e-9).unwrap();
        assert_eq!(js.joint[one].mult(), 2);
        assert!(js.rejected.is_empty());
    }

    #[test]
    fn report_json_shape() {
        let fam = vec![diag(&[1.0, -1.0, 0.0])];
        let mut cfg = SpectrumConfig::new(1);
        cfg.samples = 3;
        let rep = taylor_report(
            &fam,
            vec![vec![1]],
            &cfg,
            &[Character::new(vec![Complex::new(10.0, 0.0)])],
        )
        .unwrap();
        assert!(rep.passed());
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(v["format"], SPECTRUM_FORMAT);
        assert_eq!(v["joint"].as_array().unwrap().len(), 3);
        assert_eq!(v["offspectrum_samples"].as_array().unwrap().len(), 3);
        assert_eq!(v["user"][0]["taylor"], false);
        assert!(!rep.to_json().contains("-0.0000000000000000e0"));
    }

    #[test]
    fn character_is_multiplicative() {
        let chi = Character::new(vec![Complex::new(0.0, 1.0), Complex::new(2.0, 0.0)]);
        assert!((chi.eval(&[2, 3]) - Complex::new(-8.0, 0.0)).norm() < 1e-12);
        assert!((chi.gate_value(&[vec![1, 1], vec![2, 2]]) - 4.0).abs() < 1e-12);
    }
}
