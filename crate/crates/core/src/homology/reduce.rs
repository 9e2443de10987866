use std::collections::HashMap;

use super::complex::{FilteredComplex, Simplex};
use super::diagram::PersistenceDiagram;
use super::distance::{DistanceMatrix, UNREACHABLE};
use super::HomologyError;

/// XOR of two sorted index lists.
fn symmetric_difference<T: Ord + Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Persistence over GF(2) by the column algorithm: triangle columns are
/// reduced first and the edges they pair off are cleared from the edge pass.
pub fn reduce(complex: &FilteredComplex) -> Result<(PersistenceDiagram, PersistenceDiagram), HomologyError> {
    let s = &complex.simplices;
    let k = complex.vertices.len();
    let max = complex.max_scale;
    let mut position: HashMap<[u32; 3], usize> = HashMap::with_capacity(s.len());
    for (i, simplex) in s.iter().enumerate() {
        position.insert(simplex.vertices, i);
    }
    let face = |simplex: &Simplex, at: usize, verts: [u32; 3]| -> Result<usize, HomologyError> {
        match position.get(&verts) {
            Some(&p) if p < at && s[p].scale <= simplex.scale => Ok(p),
            _ => Err(HomologyError::FaceClosure { simplex: at }),
        }
    };

    // pivot_owner[row] = reduced column whose lowest entry is `row`.
    let mut pivot_owner: Vec<Option<Vec<usize>>> = vec![None; s.len()];
    let mut cleared = vec![false; s.len()];
    let mut h1_pairs = Vec::new();
    for (t, simplex) in s.iter().enumerate().filter(|(_, x)| x.dim == 2) {
        let [a, b, c] = simplex.vertices;
        let nv = super::complex::NO_VERTEX;
        let mut col = vec![
            face(simplex, t, [a, b, nv])?,
            face(simplex, t, [a, c, nv])?,
            face(simplex, t, [b, c, nv])?,
        ];
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match &pivot_owner[low] {
                Some(other) => col = symmetric_difference(&col, other),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            cleared[low] = true;
            h1_pairs.push((s[low].scale, simplex.scale));
            pivot_owner[low] = Some(col);
        }
    }

    let mut vertex_killed = vec![false; k];
    let mut h0_pairs = Vec::new();
    let mut h1_essential = Vec::new();
    for (e, simplex) in s.iter().enumerate().filter(|(_, x)| x.dim == 1) {
        if cleared[e] {
            continue;
        }
        let [a, b, _] = simplex.vertices;
        let nv = super::complex::NO_VERTEX;
        let mut col = vec![face(simplex, e, [a, nv, nv])?, face(simplex, e, [b, nv, nv])?];
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match &pivot_owner[low] {
                Some(other) => col = symmetric_difference(&col, other),
                None => break,
            }
        }
        match col.last() {
            Some(&low) => {
                vertex_killed[s[low].vertices[0] as usize] = true;
                h0_pairs.push((0, simplex.scale));
                pivot_owner[low] = Some(col);
            }
            None => h1_essential.push(simplex.scale),
        }
    }
    let h0_essential = vec![0; vertex_killed.iter().filter(|&&x| !x).count()];
    Ok((
        PersistenceDiagram::from_parts(0, max, h0_pairs, h0_essential),
        PersistenceDiagram::from_parts(1, max, h1_pairs, h1_essential),
    ))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Zero-dimensional diagram by union-find over edges in filtration order.
pub fn h0_union_find(complex: &FilteredComplex) -> PersistenceDiagram {
    let k = complex.vertices.len();
    let mut uf = UnionFind::new(k);
    let mut pairs = Vec::new();
    for s in complex.simplices.iter().filter(|s| s.dim == 1) {
        if uf.union(s.vertices[0] as usize, s.vertices[1] as usize) {
            pairs.push((0, s.scale));
        }
    }
    let essentials = vec![0; k - pairs.len()];
    PersistenceDiagram::from_parts(0, complex.max_scale, pairs, essentials)
}

/// Same diagrams as [`reduce`] on `build_vr_row(vertices, dist, max_scale)`,
/// computed without materializing triangles: union-find in dimension 0,
/// then the coboundary columns of the surviving edges, latest first.
pub fn reduce_row_cohomology(
    vertices: &[usize],
    dist: &DistanceMatrix,
    max_scale: u32,
) -> (PersistenceDiagram, PersistenceDiagram) {
    let mut verts = vertices.to_vec();
    verts.sort_unstable();
    verts.dedup();
    let k = verts.len();
    assert!(k < 1 << 16, "row too large");
    let mut scale = vec![UNREACHABLE; k * k];
    let mut edges: Vec<(u32, u32, u32)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = dist.get(verts[i], verts[j]);
            if d != UNREACHABLE && d <= max_scale {
                scale[i * k + j] = d;
                scale[j * k + i] = d;
                edges.push((d, i as u32, j as u32));
            }
        }
    }
    edges.sort_unstable();

    let mut uf = UnionFind::new(k);
    let mut merging = vec![false; edges.len()];
    let mut h0_pairs = Vec::new();
    for (n, &(d, i, j)) in edges.iter().enumerate() {
        if uf.union(i as usize, j as usize) {
            merging[n] = true;
            h0_pairs.push((0, d));
        }
    }

    // Triangle key in filtration order: scale, then vertices ascending.
    let key = |sc: u32, mut v: [u32; 3]| -> u64 {
        v.sort_unstable();
        (u64::from(sc) << 48) | (u64::from(v[0]) << 32) | (u64::from(v[1]) << 16) | u64::from(v[2])
    };
    let mut reduced: Vec<Vec<u64>> = Vec::new();
    let mut pivot_of: HashMap<u64, usize> = HashMap::new();
    let mut h1_pairs = Vec::new();
    let mut h1_essential = Vec::new();
    for (n, &(d, i, j)) in edges.iter().enumerate().rev() {
        if merging[n] {
            continue;
        }
        let (iu, ju) = (i as usize, j as usize);
        let mut col: Vec<u64> = (0..k)
            .filter(|&l| l != iu && l != ju)
            .filter_map(|l| {
                let (a, b) = (scale[iu * k + l], scale[ju * k + l]);
                (a != UNREACHABLE && b != UNREACHABLE).then(|| key(d.max(a).max(b), [i, j, l as u32]))
            })
            .collect();
        col.sort_unstable();
        while let Some(&pivot) = col.first() {
            match pivot_of.get(&pivot) {
                Some(&other) => col = symmetric_difference(&col, &reduced[other]),
                None => break,
            }
        }
        match col.first() {
            Some(&pivot) => {
                h1_pairs.push((d, (pivot >> 48) as u32));
                pivot_of.insert(pivot, reduced.len());
                reduced.push(col);
            }
            None => h1_essential.push(d),
        }
    }
    let h0_essential = vec![0; k - h0_pairs.len()];
    (
        PersistenceDiagram::from_parts(0, max_scale, h0_pairs, h0_essential),
        PersistenceDiagram::from_parts(1, max_scale, h1_pairs, h1_essential),
    )
}
