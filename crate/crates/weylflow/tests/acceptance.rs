//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{f1_family, fixtures, generators, k33};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylflow::chamber::{from_triangle_presentation, validate, TrianglePresentation};
use weylflow::rootdata::{dominant_coweights, Coweight, RootSystemKind};
use weylflow::sectors::{GermSpace, GermTable};
use weylflow::spectra::{
    eigen, family_from_transfer, homotopy_zero_check, joint_spectrum, koszul_complexes,
    parametrix_residual, taylor_report, CMatrix, Character, RankTolerance, SpectrumConfig,
};
use weylflow::transfer::{check_fn_invariance, check_lasota_yorke, transfer_matrix, BallClasses};
use weylflow::Rational;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn tables(space: &GermSpace, n: usize) -> Vec<GermTable> {
    (1..=n).map(|r| space.enumerate_germs(r).unwrap()).collect()
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

fn matched(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = (0..b.len())
            .filter(|&k| !used[k])
            .map(|k| (k, (x - b[k]).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn rank_one_oracle() -> Check {
    let start = Instant::now();
    let space = GermSpace::new(k33(), 2).unwrap();
    let t = space.enumerate_germs(1).unwrap();
    let ids = space.cs.vertex_ids.clone().unwrap();
    let arcs: Vec<(usize, usize)> = t
        .iter()
        .map(|g| {
            let perm = &space.rs.type_rotations[g.sigma].perm;
            let c = g.chambers[0] as usize;
            (ids[perm[0]][c], ids[perm[1]][c])
        })
        .collect();
    let l = transfer_matrix(&space, &t, &Coweight(vec![1])).unwrap();
    for (h, &(h_tail, h_head)) in arcs.iter().enumerate() {
        for (g, &(g_tail, g_head)) in arcs.iter().enumerate() {
            // B[g][h] = 1 when arc h continues arc g without backtracking
            let b = g_head == h_tail && h_head != g_tail;
            ensure(
                l.entry(h, g) == Rational::new(b as i64, 2),
                format!("entry ({h}, {g}) differs"),
            )?;
        }
    }
    // det(I − uB) = (1 − u²)^{m−n} det(I − uA + qu²I), A with eigenvalues 3, −3, 0⁴
    let adjacency = DMatrix::from_fn(6, 6, |i, j| if (i < 3) != (j < 3) { 1.0 } else { 0.0 });
    let mut oracle = Vec::new();
    for lambda in adjacency.symmetric_eigen().eigenvalues.iter() {
        let disc = Complex::new(lambda * lambda - 8.0, 0.0).sqrt();
        oracle.push((lambda + disc) / 4.0);
        oracle.push((lambda - disc) / 4.0);
    }
    for _ in 0..3 {
        oracle.push(Complex::new(0.5, 0.0));
        oracle.push(Complex::new(-0.5, 0.0));
    }
    let a = family_from_transfer::<f64>(&[l]).unwrap().remove(0);
    let got: Vec<Complex<f64>> = eigen(&a).unwrap().iter().map(|p| p.value).collect();
    let dist = matched(&got, &oracle);
    ensure(dist < 1e-8, format!("eigenvalues off by {dist:.2e}"))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 1.0, format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "L = B^T/2 exactly, 18 eigenvalues within {dist:.1e}, {elapsed:.3} s"
    ))
}

fn trivial_joint_eigenvalue() -> Check {
    let mut parity = 0;
    for (name, cs) in fixtures() {
        let a1 = cs.kind == RootSystemKind::A1;
        let family = family_from_transfer::<f64>(&f1_family(cs)).unwrap();
        let d = family[0].nrows();
        let ones = DVector::from_element(d, Complex::new(1.0, 0.0));
        let res = family
            .iter()
            .map(|a| (a * &ones - &ones).norm() / ones.norm())
            .fold(0.0, f64::max);
        ensure(res <= 1e-10, format!("{name}: constant residual {res:.1e}"))?;
        let js = joint_spectrum(&family, &SpectrumConfig::new(family.len())).unwrap();
        let k = js
            .find(&Character::trivial(family.len()), 1e-6)
            .ok_or(format!("{name}: χ ≡ 1 not found"))?;
        ensure(
            js.joint[k].residual <= 1e-10,
            format!("{name}: eigenspace residual {:.1e}", js.joint[k].residual),
        )?;
        if a1 {
            js.find(&Character::new(vec![Complex::new(-1.0, 0.0)]), 1e-6)
                .ok_or(format!("{name}: χ(ϖ) = −1 not found"))?;
            parity += 1;
        }
    }
    Ok(format!(
        "χ ≡ 1 on 4 fixtures, χ(ϖ) = −1 on {parity} A1~ fixtures"
    ))
}

fn exact_identities() -> Check {
    let mut rows = 0;
    let mut pairs = 0;
    for (name, cs) in fixtures() {
        let space = GermSpace::new(cs, 4).unwrap();
        let rank = space.rs.rank;
        let ts = tables(&space, 3);
        for n in 1..=3 {
            for mu in dominant_coweights(rank, 4 - n) {
                let l = transfer_matrix(&space, &ts[n - 1], &mu).unwrap();
                l.check_row_sums().map_err(|e| format!("{name}: {e}"))?;
                rows += l.dim;
            }
        }
        let gens = generators(rank);
        for n in 1..=2 {
            for (i, a) in gens.iter().enumerate() {
                for b in &gens[i..] {
                    let ab = a.add(b);
                    if n + ab.norm() > 4 {
                        continue;
                    }
                    let la = transfer_matrix(&space, &ts[n - 1], a).unwrap();
                    let lb = transfer_matrix(&space, &ts[n - 1], b).unwrap();
                    let lab = transfer_matrix(&space, &ts[n - 1], &ab).unwrap();
                    ensure(
                        la.product(&lb).unwrap().same_operator(&lab)
                            && lb.product(&la).unwrap().same_operator(&lab),
                        format!("{name}: {:?} · {:?} on F_{n}", a.0, b.0),
                    )?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!(
        "{rows} rows sum to 1, {pairs} generator pairs compose exactly"
    ))
}

fn metric_suite() -> Check {
    let start = Instant::now();
    let mut pairs = 0;
    for (name, cs) in fixtures() {
        let space = GermSpace::new(cs, 3).unwrap();
        let ts = tables(&space, 3);
        for n in 1..=3 {
            let r = space.check_metric(&ts, n).unwrap();
            ensure(r.violations() == 0, format!("{name} radius {n}: {r:?}"))?;
            pairs += r.pairs;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 60.0, format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "{pairs} germ pairs, zero violations, {elapsed:.1} s"
    ))
}

fn lasota_yorke() -> Check {
    let mut checked = 0;
    for (name, cs) in fixtures() {
        let space = GermSpace::new(cs, 4).unwrap();
        let t = space.enumerate_germs(2).unwrap();
        let classes = BallClasses::new(&space.k_matrix(&t)).unwrap();
        for mu in dominant_coweights(space.rs.rank, 2)
            .into_iter()
            .filter(|m| m.norm() > 0 && m.is_strongly_dominant())
        {
            let l = transfer_matrix(&space, &t, &mu).unwrap();
            for theta in [Rational::new(1, 2), Rational::new(1, 4)] {
                let r = check_lasota_yorke(&l, &classes, theta, 1).unwrap();
                ensure(
                    r.violations == 0,
                    format!("{name} {:?} θ = {theta}: {} violations", mu.0, r.violations),
                )?;
                checked += r.checked;
            }
        }
    }
    Ok(format!(
        "{checked} indicator checks on F_2, zero violations"
    ))
}

fn fn_mapping() -> Check {
    let mut cases = 0;
    let mut constant = 0;
    for (name, cs) in fixtures() {
        let space = GermSpace::new(cs, 5).unwrap();
        let ts = tables(&space, 3);
        for mu in dominant_coweights(space.rs.rank, 2)
            .into_iter()
            .filter(|m| m.norm() > 0)
        {
            for n in 1..=2 {
                let l = transfer_matrix(&space, &ts[n - 1], &mu).unwrap();
                let next = transfer_matrix(&space, &ts[n], &mu).unwrap();
                let up = ts[n].restriction_map(&ts[n - 1]).unwrap();
                let down = if n >= 2 {
                    Some(ts[n - 1].restriction_map(&ts[n - 2]).unwrap())
                } else {
                    None
                };
                let r = check_fn_invariance(&l, &next, &up, down.as_deref()).unwrap();
                ensure(r.passed(), format!("{name} {:?} n = {n}: {r:?}", mu.0))?;
                cases += 1;
                if mu.is_strongly_dominant() && n >= 2 {
                    ensure(
                        r.column_constant == Some(true),
                        format!("{name} {:?}: columns not constant", mu.0),
                    )?;
                    constant += 1;
                }
            }
        }
    }
    Ok(format!(
        "{cases} consistency cases exact, {constant} column-constancy cases"
    ))
}

fn koszul_suite() -> Check {
    let tol = RankTolerance::default();
    let mut tested = 0;
    for (name, cs) in fixtures() {
        let family = family_from_transfer::<f64>(&f1_family(cs)).unwrap();
        let r = family.len();
        let js = joint_spectrum(&family, &SpectrumConfig::new(r)).unwrap();
        for j in &js.joint {
            let k = koszul_complexes(&family, &j.chi, &tol).unwrap();
            ensure(
                k.cohomology[0] == j.mult() as i64,
                format!("{name}: H^0 {} vs {}", k.cohomology[0], j.mult()),
            )?;
            ensure(
                k.duality_holds(),
                format!("{name}: duality at a joint eigenvalue"),
            )?;
            ensure(
                k.square_defect <= 1e-10,
                format!("{name}: δδ = {:.1e}", k.square_defect),
            )?;
            tested += 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let chi = random_character(&mut rng, r, 1.5);
            let k = koszul_complexes(&family, &chi, &tol).unwrap();
            ensure(
                k.square_defect <= 1e-10,
                format!("{name}: δδ = {:.1e}", k.square_defect),
            )?;
            ensure(
                k.euler_characteristic() == 0 && k.dims_nonnegative(),
                format!("{name}: Euler characteristic"),
            )?;
            ensure(
                k.duality_holds(),
                format!("{name}: duality {:?} vs {:?}", k.homology, k.cohomology),
            )?;
            let far = chi
                .values
                .iter()
                .zip(&js.per_operator)
                .any(|(z, values)| values.iter().all(|w| (z - w).norm() > 1e-3));
            ensure(
                !far || !k.is_member(),
                format!("{name}: cohomology off the spectrum"),
            )?;
            tested += 1;
        }
    }
    Ok(format!(
        "{tested} characters: δ∘δ = 0, Euler 0, duality, H^0 = joint eigenspace"
    ))
}

fn parametrix_and_homotopy() -> Check {
    let tol = RankTolerance::default();
    let mut worst: f64 = 0.0;
    let mut homotopies = 0;
    for (name, cs) in fixtures() {
        let family: Vec<CMatrix> = family_from_transfer(&f1_family(cs)).unwrap();
        let r = family.len();
        let exps: Vec<Vec<u32>> = dominant_coweights(r, 4)
            .into_iter()
            .filter(|m| m.norm() > 0)
            .map(|m| m.0.iter().map(|&x| x as u32).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let chi = random_character(&mut rng, r, 1.0);
            for ell in &exps {
                let res = parametrix_residual(&family, ell, &chi);
                ensure(res <= 1e-12, format!("{name} {ell:?}: residual {res:.1e}"))?;
                worst = worst.max(res);
            }
        }
        let js = joint_spectrum(&family, &SpectrumConfig::new(r)).unwrap();
        for j in &js.joint {
            let near = Character::new(
                j.chi
                    .values
                    .iter()
                    .map(|z| {
                        z + Complex::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3))
                    })
                    .collect(),
            );
            for chi in [&j.chi, &near] {
                for ell in exps.iter().filter(|e| e.iter().all(|&x| x > 0)) {
                    let h = homotopy_zero_check(&family, chi, ell, &tol, 1e-8).unwrap();
                    ensure(h.passed(), format!("{name} {ell:?}: {:?}", h.leftover))?;
                    homotopies += 1;
                }
            }
        }
    }
    Ok(format!(
        "telescoping residual ≤ {worst:.1e}, {homotopies} homotopy checks zero on cohomology"
    ))
}

fn main_theorem() -> Check {
    let mut gated = 0;
    for (name, cs) in fixtures() {
        let family: Vec<CMatrix> = family_from_transfer(&f1_family(cs)).unwrap();
        let r = family.len();
        for theta in [0.25, 0.5] {
            let mut cfg = SpectrumConfig::new(r);
            cfg.theta = theta;
            let rep = taylor_report(&family, vec![], &cfg, &[Character::trivial(r)]).unwrap();
            ensure(
                rep.consistent(),
                format!("{name} θ = {theta}: Taylor and joint sets differ"),
            )?;
            ensure(rep.passed(), format!("{name} θ = {theta}: report failed"))?;
            ensure(
                rep.ambiguous() == 0,
                format!("{name} θ = {theta}: ambiguous rank calls"),
            )?;
            gated += rep.verdicts.iter().filter(|v| v.gated).count();
        }
    }
    Ok(format!(
        "{gated} gated characters, Taylor members = joint eigenvalues"
    ))
}

fn a2_health() -> Check {
    let cs =
        from_triangle_presentation(&TrianglePresentation::fano()).map_err(|e| e.to_string())?;
    ensure(validate(&cs).passed(), "validate failed")?;
    let chambers = cs.num_chambers;
    let q = cs.q.q[0];
    let space = GermSpace::new(cs, 3).unwrap();
    let ts = tables(&space, 2);
    ensure(
        ts[0].len() == 3 * chambers,
        format!("dim F_1 = {}", ts[0].len()),
    )?;
    for (n, t) in ts.iter().enumerate() {
        let l1 = transfer_matrix(&space, t, &Coweight(vec![1, 0])).unwrap();
        let l2 = transfer_matrix(&space, t, &Coweight(vec![0, 1])).unwrap();
        ensure(
            l1.product(&l2)
                .unwrap()
                .same_operator(&l2.product(&l1).unwrap()),
            format!("no commutation on F_{}", n + 1),
        )?;
        // empirical preimage counts
        ensure(
            (0..l1.dim).all(|h| l1.row_sum(h) == q * q),
            format!("preimage count differs from q² on F_{}", n + 1),
        )?;
        ensure(l1.m_mu == q * q, format!("M = {}", l1.m_mu))?;
    }
    Ok(format!(
        "valid, dim F_1 = 3·{chambers}, commuting on F_1 and F_2, M_ϖ1 = {}",
        q * q
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("rank-1 oracle equivalence", rank_one_oracle),
        ("trivial joint eigenvalue", trivial_joint_eigenvalue),
        ("exact structural identities", exact_identities),
        ("metric suite", metric_suite),
        ("Lasota-Yorke", lasota_yorke),
        ("F_n mapping", fn_mapping),
        ("Koszul suite", koszul_suite),
        ("parametrix and homotopy", parametrix_and_homotopy),
        ("main theorem on F_1", main_theorem),
        ("A2~ fixture health", a2_health),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:2} {title}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:2} {title}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
