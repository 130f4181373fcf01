use std::time::Instant;

mod common;

use common::fixtures;
use weylflow::chamber::{
    from_graph, from_triangle_presentation, subdivided_complete, TrianglePresentation,
};
use weylflow::rootdata::Coweight;
use weylflow::sectors::{GermSpace, GermTable};

fn tables(sp: &GermSpace, n: usize) -> Vec<GermTable> {
    (1..=n).map(|r| sp.enumerate_germs(r).unwrap()).collect()
}

#[test]
fn germ_counts() {
    let bc1 = GermSpace::new(from_graph(&subdivided_complete(4).edges).unwrap(), 2).unwrap();
    assert_eq!(bc1.enumerate_germs(1).unwrap().len(), 24);
    assert_eq!(bc1.enumerate_germs(2).unwrap().len(), 48);
    let a2 = GermSpace::new(
        from_triangle_presentation(&TrianglePresentation::fano()).unwrap(),
        4,
    )
    .unwrap();
    let counts: Vec<usize> = (1..=4)
        .map(|n| a2.enumerate_germs(n).unwrap().len())
        .collect();
    assert_eq!(counts, vec![63, 504, 4032, 32256]);
}

#[test]
fn extension_regularity() {
    for (name, cs) in fixtures() {
        let sp = GermSpace::new(cs, 3).unwrap();
        let t = tables(&sp, 3);
        for n in 1..3 {
            let counts = sp.extension_counts(&t[n], &t[n - 1]).unwrap();
            assert!(
                counts.iter().all(|&c| c == counts[0] && c > 0),
                "{name} radius {n}"
            );
        }
    }
}

#[test]
fn metric_suite_all_fixtures() {
    for (name, cs) in fixtures() {
        let sp = GermSpace::new(cs, 3).unwrap();
        let t = tables(&sp, 3);
        for n in 1..=3 {
            let start = Instant::now();
            let r = sp.check_metric(&t, n).unwrap();
            println!("{name} n={n} {r:?} {:?}", start.elapsed());
            assert_eq!(r.violations(), 0, "{name}: {r:?}");
        }
    }
}

#[test]
fn a2_shift_matches_translation() {
    let sp = GermSpace::new(
        from_triangle_presentation(&TrianglePresentation::fano()).unwrap(),
        2,
    )
    .unwrap();
    let t2 = sp.enumerate_germs(2).unwrap();
    let t1 = sp.enumerate_germs(1).unwrap();
    let mu = Coweight(vec![1, 0]);
    let target = sp.sector.alcoves[0].translate(&mu.to_point());
    let at = sp.sector.alcove_index(&target).unwrap();
    for g in t2.iter() {
        let s = sp.shift(&g, &mu).unwrap();
        assert_eq!(s.chambers, vec![g.chambers[at]]);
        assert!(t1.position(&s).is_some());
    }
}

#[test]
fn a2_directional_witness() {
    let (_, cs) = fixtures().pop().unwrap();
    let space = GermSpace::new(cs, 3).unwrap();
    let table = space.enumerate_germs(3).unwrap();
    let base = table.germ(0);
    let witness = table
        .iter()
        .skip(1)
        .filter(|g| g.sigma == base.sigma)
        .map(|g| space.distance(&base, &g).unwrap())
        .find(|d| d.k_directional[1] == Some(1) && d.k_directional[0].is_none_or(|k| k > 1))
        .expect("a pair agreeing along the first ray only");
    // the smaller directional distance decides
    assert_eq!(witness.k, Some(1));
}
