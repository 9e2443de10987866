//! Exhaustive engine check over small graphs.

use super::{all_graphs, betti_brute, naive_persistence, pair_index, vr_simplices, SmallGraph};
use mpph::homology::{
    build_vr_row, geodesic_distances, induced_distances, reduce, reduce_row_cohomology, DistanceMatrix,
    PersistenceDiagram,
};

fn oracle_distances(g: &SmallGraph, subset: Option<&[usize]>) -> Vec<Vec<u32>> {
    match subset {
        None => g.distances(),
        Some(s) => {
            let mut mask = 0;
            for (i, j) in g.edges() {
                if s.contains(&i) && s.contains(&j) {
                    mask |= 1 << pair_index(g.n, i, j);
                }
            }
            SmallGraph { n: g.n, mask }.distances()
        }
    }
}

fn engine_pairs(h0: &PersistenceDiagram, h1: &PersistenceDiagram) -> (Vec<(usize, u32, u32)>, Vec<(usize, u32)>) {
    let mut pairs: Vec<(usize, u32, u32)> = h0.pairs.iter().map(|&(b, d)| (0, b, d)).collect();
    pairs.extend(h1.pairs.iter().map(|&(b, d)| (1, b, d)));
    pairs.sort_unstable();
    let mut ess: Vec<(usize, u32)> = h0.essentials.iter().map(|&b| (0, b)).collect();
    ess.extend(h1.essentials.iter().map(|&b| (1, b)));
    ess.sort_unstable();
    (pairs, ess)
}

/// Checks one row against the oracles; returns the number of (ε, engine)
/// Betti comparisons made.
pub fn check_row(g: &SmallGraph, vertices: &[usize], dist: &DistanceMatrix, d: &[Vec<u32>], max_scale: u32) -> usize {
    let simplices = vr_simplices(vertices, d, max_scale);
    let complex = build_vr_row(vertices, dist, max_scale);
    assert_eq!(complex.simplices.len(), simplices.len(), "{g:?} {vertices:?}");
    let standard = reduce(&complex).unwrap();
    let cohomology = reduce_row_cohomology(vertices, dist, max_scale);
    assert_eq!(standard, cohomology, "{g:?} {vertices:?} cap {max_scale}");

    let (mut want_pairs, mut want_ess) = naive_persistence(&simplices);
    want_pairs.sort_unstable();
    want_ess.sort_unstable();
    assert_eq!(engine_pairs(&standard.0, &standard.1), (want_pairs, want_ess), "{g:?} {vertices:?}");

    let mut checks = 0;
    for eps in 0..=max_scale {
        let (b0, b1) = betti_brute(&simplices, eps);
        for (h0, h1) in [&standard, &cohomology] {
            assert_eq!(h0.betti_at(eps).unwrap(), b0, "{g:?} {vertices:?} eps {eps}");
            assert_eq!(h1.betti_at(eps).unwrap(), b1, "{g:?} {vertices:?} eps {eps}");
            checks += 1;
        }
    }
    checks
}

/// Every connected graph on up to seven vertices, several rows each, against
/// brute-force ranks and naive reduction. Returns `(graphs, Betti checks)`.
pub fn all_small_graphs() -> (usize, usize) {
    let mut graphs = 0;
    let mut checks = 0;
    for g in all_graphs(7).iter().flatten().filter(|g| g.is_connected()) {
        graphs += 1;
        let mol = g.molecule();
        let full = geodesic_distances(&mol).unwrap();
        let all: Vec<usize> = (0..g.n).collect();
        let d = oracle_distances(g, None);
        let diam = full.diameter();
        for cap in [diam, 1.min(diam)] {
            checks += check_row(g, &all, &full, &d, cap);
        }
        // Sublevel-style rows: a prefix and the even vertices, with whole-graph
        // and induced distances.
        let prefix: Vec<usize> = (0..g.n.div_ceil(2) + 1).filter(|&v| v < g.n).collect();
        let even: Vec<usize> = (0..g.n).step_by(2).collect();
        for subset in [prefix, even] {
            checks += check_row(g, &subset, &full, &d, diam);
            let induced = induced_distances(&mol, &subset);
            let di = oracle_distances(g, Some(&subset));
            checks += check_row(g, &subset, &induced, &di, diam);
        }
    }
    (graphs, checks)
}
