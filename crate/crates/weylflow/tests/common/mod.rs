#![allow(dead_code)]

use weylflow::chamber::{
    complete_bipartite, from_graph, from_triangle_presentation, hypercube, subdivided_complete,
    ChamberSystem, TrianglePresentation,
};
use weylflow::rootdata::Coweight;
use weylflow::sectors::GermSpace;
use weylflow::transfer::{transfer_matrix, TransferMatrix};

pub fn k33() -> ChamberSystem {
    from_graph(&complete_bipartite(3, 3).edges).unwrap()
}

pub fn fixtures() -> Vec<(&'static str, ChamberSystem)> {
    vec![
        ("k33", k33()),
        ("q3", from_graph(&hypercube(3).edges).unwrap()),
        (
            "k4_subdivided",
            from_graph(&subdivided_complete(4).edges).unwrap(),
        ),
        (
            "a2_fano",
            from_triangle_presentation(&TrianglePresentation::fano()).unwrap(),
        ),
    ]
}

pub fn generators(rank: usize) -> Vec<Coweight> {
    (0..rank).map(|i| Coweight::fundamental(rank, i)).collect()
}

/// F_1 matrices of the generators `ϖ_1 … ϖ_r`.
pub fn f1_family(cs: ChamberSystem) -> Vec<TransferMatrix> {
    let space = GermSpace::new(cs, 2).unwrap();
    let table = space.enumerate_germs(1).unwrap();
    generators(space.rs.rank)
        .iter()
        .map(|mu| transfer_matrix(&space, &table, mu).unwrap())
        .collect()
}
