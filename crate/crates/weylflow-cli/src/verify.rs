//! The `verify` suite and the graph-side Ihara oracle.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylflow::chamber::{validate, ChamberSystem};
use weylflow::rootdata::{dominant_coweights, Coweight};
use weylflow::sectors::{GermSpace, GermTable};
use weylflow::spectra::{
    homotopy_zero_check, joint_spectrum, koszul_complexes, parametrix_residual, taylor_report,
    CMatrix, Character, SpectrumConfig,
};
use weylflow::transfer::{check_fn_invariance, check_lasota_yorke, transfer_matrix, BallClasses};
use weylflow::Rational;

use crate::{f1_family, Failure};

/// Directed-edge view of a simple graph.
pub struct IharaOracle {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
}

impl IharaOracle {
    pub fn new(edges: &[[usize; 2]]) -> Self {
        let vertices = edges.iter().map(|&[a, b]| a.max(b) + 1).max().unwrap_or(0);
        let mut degree = vec![0; vertices];
        for &[a, b] in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        IharaOracle {
            vertices,
            edges: edges.iter().map(|&[a, b]| (a, b)).collect(),
            degree,
        }
    }

    /// `Some(q)` when every vertex has degree `q + 1`.
    pub fn regular_q(&self) -> Option<usize> {
        let d = *self.degree.first()?;
        (d > 0 && self.degree.iter().all(|&x| x == d)).then(|| d - 1)
    }

    /// Arc `2k` runs along edge `k` as written, arc `2k + 1` against it.
    fn arc(&self, a: usize) -> (usize, usize) {
        let (u, v) = self.edges[a / 2];
        if a.is_multiple_of(2) {
            (u, v)
        } else {
            (v, u)
        }
    }

    pub fn non_backtracking(&self) -> CMatrix {
        let m = 2 * self.edges.len();
        CMatrix::from_fn(m, m, |e, f| {
            let (_, head) = self.arc(e);
            let (tail, _) = self.arc(f);
            Complex::new(
                if head == tail && f != (e ^ 1) {
                    1.0
                } else {
                    0.0
                },
                0.0,
            )
        })
    }

    /// Largest relative gap in `det(I − uB) = (1 − u²)^{m−n} det(I − uA + u²(D − I))` over a few `u`.
    pub fn bass_residual(&self) -> f64 {
        let n = self.vertices;
        let m = self.edges.len();
        let b = self.non_backtracking();
        let mut worst: f64 = 0.0;
        for u in [
            Complex::new(0.1, 0.0),
            Complex::new(0.2, 0.15),
            Complex::new(-0.05, 0.3),
        ] {
            let lhs = (CMatrix::identity(2 * m, 2 * m) - &b * u).determinant();
            let vertex = CMatrix::from_fn(n, n, |i, j| {
                let adj = self
                    .edges
                    .iter()
                    .filter(|&&(a, c)| (a, c) == (i, j) || (c, a) == (i, j))
                    .count() as f64;
                let diag = if i == j {
                    1.0 + (self.degree[i] as f64 - 1.0) * u * u
                } else {
                    Complex::new(0.0, 0.0)
                };
                diag - u * adj
            });
            let rhs =
                (Complex::new(1.0, 0.0) - u * u).powi(m as i32 - n as i32) * vertex.determinant();
            worst =
                worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE));
        }
        worst
    }
}

pub struct Row {
    fixture: String,
    check: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Default)]
pub struct Table {
    rows: Vec<Row>,
}

impl Table {
    fn push(&mut self, fixture: &str, check: &'static str, passed: bool, detail: String) -> bool {
        self.rows.push(Row {
            fixture: fixture.to_string(),
            check,
            passed,
            detail,
        });
        passed
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w0 = self
            .rows
            .iter()
            .map(|r| r.fixture.len())
            .max()
            .unwrap_or(0)
            .max(7);
        let w1 = self
            .rows
            .iter()
            .map(|r| r.check.len())
            .max()
            .unwrap_or(0)
            .max(5);
        writeln!(
            f,
            "{:w0$}  {:w1$}  {:6}  detail",
            "fixture", "check", "result"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:w0$}  {:w1$}  {:6}  {}",
                r.fixture,
                r.check,
                if r.passed { "pass" } else { "FAIL" },
                r.detail
            )?;
        }
        Ok(())
    }
}

fn random_character(rng: &mut ChaCha8Rng, r: usize, radius: f64) -> Character {
    Character::new(
        (0..r)
            .map(|_| {
                Complex::new(
                    rng.gen_range(-radius..radius),
                    rng.gen_range(-radius..radius),
                )
            })
            .collect(),
    )
}

/// Runs every check on one input; returns whether all passed.
pub fn run_suite(
    name: &str,
    cs: ChamberSystem,
    radius: usize,
    cfg: &SpectrumConfig,
    table: &mut Table,
) -> Result<bool, Failure> {
    let mut ok = true;
    let report = validate(&cs);
    ok &= table.push(name, "validate", report.passed(), report.summary());
    if !report.passed() {
        return Ok(false);
    }
    let rank = cs.kind.rank();
    let space = GermSpace::new(cs.clone(), radius.max(5))?;
    let tables: Vec<GermTable> = (1..=radius.max(3))
        .map(|n| space.enumerate_germs(n))
        .collect::<Result<_, _>>()?;

    for n in 1..=radius {
        let m = space.check_metric(&tables, n)?;
        ok &= table.push(
            name,
            "metric",
            m.violations() == 0,
            format!(
                "radius {n}: {} germs, {} pairs, {} violations",
                m.germs,
                m.pairs,
                m.violations()
            ),
        );
    }

    let shifts: Vec<Coweight> = dominant_coweights(rank, 2)
        .into_iter()
        .filter(|m| m.norm() > 0)
        .collect();
    let mut bad_rows = 0;
    let mut matrices = 0;
    for n in 1..=2 {
        for mu in &shifts {
            let l = transfer_matrix(&space, &tables[n - 1], mu)?;
            bad_rows += (0..l.dim).filter(|&h| l.row_sum(h) != l.m_mu).count();
            matrices += 1;
        }
    }
    ok &= table.push(
        name,
        "row sums",
        bad_rows == 0,
        format!("{matrices} matrices, {bad_rows} bad rows"),
    );

    let gens: Vec<Coweight> = (0..rank).map(|i| Coweight::fundamental(rank, i)).collect();
    let mut pairs = 0;
    let mut broken = 0;
    for n in 1..=2 {
        for (i, a) in gens.iter().enumerate() {
            for b in &gens[i..] {
                let ab = a.add(b);
                if n + ab.norm() > 4 {
                    continue;
                }
                let la = transfer_matrix(&space, &tables[n - 1], a)?;
                let lb = transfer_matrix(&space, &tables[n - 1], b)?;
                let lab = transfer_matrix(&space, &tables[n - 1], &ab)?;
                pairs += 1;
                if !(la.product(&lb)?.same_operator(&lab) && lb.product(&la)?.same_operator(&lab)) {
                    broken += 1;
                }
            }
        }
    }
    ok &= table.push(
        name,
        "semigroup",
        broken == 0,
        format!("{pairs} generator pairs, {broken} inexact"),
    );

    let mut inv_checked = 0;
    let mut inv_failed = 0;
    for n in 1..=2 {
        let up = tables[n].restriction_map(&tables[n - 1])?;
        let down = if n >= 2 {
            Some(tables[n - 1].restriction_map(&tables[n - 2])?)
        } else {
            None
        };
        for mu in &shifts {
            let l = transfer_matrix(&space, &tables[n - 1], mu)?;
            let l_next = transfer_matrix(&space, &tables[n], mu)?;
            let r = check_fn_invariance(&l, &l_next, &up, down.as_deref())?;
            inv_checked += 1;
            if !r.passed()
                || (mu.is_strongly_dominant() && n >= 2 && r.column_constant != Some(true))
            {
                inv_failed += 1;
            }
        }
    }
    ok &= table.push(
        name,
        "F_n invariance",
        inv_failed == 0,
        format!("{inv_checked} cases, {inv_failed} failed"),
    );

    let classes = BallClasses::new(&space.k_matrix(&tables[1]))?;
    let mut ly_failed = 0;
    let mut ly_checked = 0;
    for mu in &shifts {
        let l = transfer_matrix(&space, &tables[1], mu)?;
        for theta in [Rational::new(1, 2), Rational::new(1, 4)] {
            let r = check_lasota_yorke(&l, &classes, theta, 3)?;
            ly_checked += r.checked;
            if !r.passed() {
                ly_failed += 1;
            }
        }
    }
    ok &= table.push(
        name,
        "Lasota-Yorke",
        ly_failed == 0,
        format!("{ly_checked} indicator checks on F_2, {ly_failed} failing cases"),
    );

    let (_, family) = f1_family(cs, &gens)?;
    let mut cfg = cfg.clone();
    cfg.gates = vec![vec![1; rank], vec![2; rank]];
    let js = joint_spectrum(&family, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut koszul_bad = Vec::new();
    for j in &js.joint {
        let k = koszul_complexes(&family, &j.chi, &cfg.rank)?;
        if k.cohomology[0] != j.mult() as i64 || !k.duality_holds() || k.square_defect > 1e-10 {
            koszul_bad.push(format!("{:?}", j.chi.values));
        }
    }
    for _ in 0..100 {
        let chi = random_character(&mut rng, rank, 1.5);
        let k = koszul_complexes(&family, &chi, &cfg.rank)?;
        let far = chi
            .values
            .iter()
            .zip(&js.per_operator)
            .any(|(z, values)| values.iter().all(|w| (z - w).norm() > 1e-3));
        if k.euler_characteristic() != 0
            || !k.dims_nonnegative()
            || !k.duality_holds()
            || k.square_defect > 1e-10
            || (far && k.is_member())
        {
            koszul_bad.push(format!("{:?}", chi.values));
        }
    }
    ok &= table.push(
        name,
        "Koszul",
        koszul_bad.is_empty(),
        format!(
            "{} joint eigenvalues + 100 random characters, {} bad",
            js.joint.len(),
            koszul_bad.len()
        ),
    );

    let exponents: Vec<Vec<u32>> = dominant_coweights(rank, 4)
        .into_iter()
        .filter(|m| m.norm() > 0)
        .map(|m| m.0.iter().map(|&x| x as u32).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let chi = random_character(&mut rng, rank, 1.0);
        for ell in &exponents {
            worst = worst.max(parametrix_residual(&family, ell, &chi));
        }
    }
    ok &= table.push(
        name,
        "parametrix",
        worst <= 1e-12,
        format!(
            "{} exponents x 20 characters, worst {worst:.1e}",
            exponents.len()
        ),
    );

    let mut homotopy_bad = 0;
    let ell = vec![1u32; rank];
    for j in &js.joint {
        if !homotopy_zero_check(&family, &j.chi, &ell, &cfg.rank, 1e-8)?.passed() {
            homotopy_bad += 1;
        }
    }
    ok &= table.push(
        name,
        "homotopy zero",
        homotopy_bad == 0,
        format!("{} characters, {homotopy_bad} failed", js.joint.len()),
    );

    let rep = taylor_report(
        &family,
        gens.iter().map(|g| g.0.clone()).collect(),
        &cfg,
        &[],
    )?;
    let gated = rep.verdicts.iter().filter(|v| v.gated).count();
    let members = rep.verdicts.iter().filter(|v| v.gated && v.taylor).count();
    ok &= table.push(
        name,
        "taylor = joint",
        rep.passed(),
        format!(
            "theta {}: {gated} gated characters, {members} Taylor members, {} ambiguous",
            cfg.theta,
            rep.ambiguous()
        ),
    );
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ihara_identity_on_k33() {
        let g = weylflow::chamber::complete_bipartite(3, 3);
        let o = IharaOracle::new(&g.edges);
        assert_eq!(o.regular_q(), Some(2));
        assert_eq!(o.non_backtracking().nrows(), 18);
        assert!(o.bass_residual() < 1e-10);
    }

    #[test]
    fn ihara_identity_on_biregular() {
        let g = weylflow::chamber::subdivided_complete(4);
        let o = IharaOracle::new(&g.edges);
        assert_eq!(o.regular_q(), None);
        assert!(o.bass_residual() < 1e-10);
    }
}
