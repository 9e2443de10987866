//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's homology, metric or ranking code.

#![allow(dead_code)]

pub mod sweep;

use std::path::PathBuf;

use mpph::molgraph::{parse_graph_json, Atom, Bond, BondOrder, Element, MolecularGraph, Strictness};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read_graph_lines(path: PathBuf, limit: usize) -> Vec<(String, MolecularGraph)> {
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .take(limit)
        .map(|line| {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let g = parse_graph_json(&v["graph"], Strictness::Lenient).unwrap();
            (v["id"].as_str().unwrap().to_string(), g)
        })
        .collect()
}

/// Charged explicit-hydrogen graphs from `tests/fixtures/graphs.jsonl`:
/// cytosine, then single-stereocentre molecules.
pub fn fixture_graphs() -> Vec<(String, MolecularGraph)> {
    read_graph_lines(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/graphs.jsonl"), usize::MAX)
}

/// First `limit` ESOL molecules from `data/esol/esol.jsonl`.
pub fn esol_graphs(limit: usize) -> Vec<(String, MolecularGraph)> {
    read_graph_lines(workspace_root().join("data/esol/esol.jsonl"), limit)
}

/// Undirected simple graph on `n <= 8` vertices as an edge bitmask over
/// pairs `(i, j)`, `i < j`, in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmallGraph {
    pub n: usize,
    pub mask: u32,
}

pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SmallGraph {
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.mask >> pair_index(self.n, i, j) & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn permuted(&self, perm: &[usize]) -> u32 {
        let mut m = 0;
        for (i, j) in self.edges() {
            m |= 1 << pair_index(self.n, perm[i], perm[j]);
        }
        m
    }

    /// Smallest mask over all relabelings.
    pub fn canonical(&self) -> SmallGraph {
        let mut perm: Vec<usize> = (0..self.n).collect();
        let mut best = self.mask;
        heap_permutations(&mut perm, self.n, &mut |p| best = best.min(self.permuted(p)));
        SmallGraph { n: self.n, mask: best }
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.n {
                if v != u && !seen[v] && self.has_edge(u, v) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Hop distances by Floyd–Warshall; `u32::MAX` when unreachable.
    pub fn distances(&self) -> Vec<Vec<u32>> {
        let inf = u32::MAX;
        let mut d = vec![vec![inf; self.n]; self.n];
        for i in 0..self.n {
            d[i][i] = 0;
        }
        for (i, j) in self.edges() {
            d[i][j] = 1;
            d[j][i] = 1;
        }
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    if d[i][k] != inf && d[k][j] != inf && d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    /// All-carbon molecule with these bonds. Valence is not checked.
    pub fn molecule(&self) -> MolecularGraph {
        MolecularGraph {
            name: format!("g{}_{}", self.n, self.mask),
            atoms: (0..self.n).map(|i| Atom::new(i, Element::C)).collect(),
            bonds: self.edges().into_iter().map(|(i, j)| Bond::new(i, j, BondOrder::Single)).collect(),
        }
    }
}

fn heap_permutations(a: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        f(a);
        return;
    }
    for i in 0..k {
        heap_permutations(a, k - 1, f);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

/// Every graph on `1..=max_n` vertices up to isomorphism, grouped by size.
/// Each size is grown from the previous one by adding a vertex joined to
/// every possible neighbour subset, then deduplicated by canonical form.
pub fn all_graphs(max_n: usize) -> Vec<Vec<SmallGraph>> {
    let mut levels = vec![vec![SmallGraph { n: 1, mask: 0 }]];
    for n in 2..=max_n {
        let mut next = std::collections::BTreeSet::new();
        for g in &levels[n - 2] {
            for nb in 0u32..(1 << (n - 1)) {
                let mut mask = 0;
                for (i, j) in g.edges() {
                    mask |= 1 << pair_index(n, i, j);
                }
                for v in 0..n - 1 {
                    if nb >> v & 1 == 1 {
                        mask |= 1 << pair_index(n, v, n - 1);
                    }
                }
                next.insert(SmallGraph { n, mask }.canonical());
            }
        }
        levels.push(next.into_iter().collect());
    }
    levels
}

/// Simplices of the clique complex on `vertices` at scale `eps`, using hop
/// distances `d`: `(scale, sorted vertex list)`.
pub fn vr_simplices(vertices: &[usize], d: &[Vec<u32>], max_scale: u32) -> Vec<(u32, Vec<usize>)> {
    let mut out: Vec<(u32, Vec<usize>)> = vertices.iter().map(|&v| (0, vec![v])).collect();
    let ok = |a: usize, b: usize| d[a][b] != u32::MAX && d[a][b] <= max_scale;
    for (x, &a) in vertices.iter().enumerate() {
        for (y, &b) in vertices.iter().enumerate().skip(x + 1) {
            if !ok(a, b) {
                continue;
            }
            out.push((d[a][b], vec![a, b]));
            for &c in &vertices[y + 1..] {
                if ok(a, c) && ok(b, c) {
                    out.push((d[a][b].max(d[a][c]).max(d[b][c]), vec![a, b, c]));
                }
            }
        }
    }
    out
}

/// Rank over GF(2) of a set of row bitsets.
pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let mut rank = 0;
    let width = rows.first().map_or(0, |r| r.len() * 64);
    for col in 0..width {
        let (w, b) = (col / 64, col % 64);
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] >> b & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][w] >> b & 1 == 1 {
                let pivot = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Boundary matrix rank from `k`-simplices to `(k-1)`-simplices.
fn boundary_rank(faces: &[Vec<usize>], cofaces: &[Vec<usize>]) -> usize {
    if faces.is_empty() || cofaces.is_empty() {
        return 0;
    }
    let words = faces.len().div_ceil(64);
    let rows = cofaces
        .iter()
        .map(|s| {
            let mut row = vec![0u64; words];
            for skip in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                let idx = faces.iter().position(|f| *f == face).expect("face present");
                row[idx / 64] ^= 1 << (idx % 64);
            }
            row
        })
        .collect();
    gf2_rank(rows)
}

/// `(β0, β1)` of the complex made of the simplices with scale `<= eps`.
pub fn betti_brute(simplices: &[(u32, Vec<usize>)], eps: u32) -> (usize, usize) {
    let of_dim = |k: usize| -> Vec<Vec<usize>> {
        simplices
            .iter()
            .filter(|(s, v)| *s <= eps && v.len() == k + 1)
            .map(|(_, v)| v.clone())
            .collect()
    };
    let (v, e, t) = (of_dim(0), of_dim(1), of_dim(2));
    let r1 = boundary_rank(&v, &e);
    let r2 = boundary_rank(&e, &t);
    (v.len() - r1, e.len() - r1 - r2)
}

/// `β2` of the 2-skeleton at `eps`: triangles minus the rank of their
/// boundary, there being no 3-simplices.
pub fn betti_brute_h2(simplices: &[(u32, Vec<usize>)], eps: u32) -> usize {
    let of_dim = |k: usize| -> Vec<Vec<usize>> {
        simplices
            .iter()
            .filter(|(s, v)| *s <= eps && v.len() == k + 1)
            .map(|(_, v)| v.clone())
            .collect()
    };
    let (e, t) = (of_dim(1), of_dim(2));
    t.len() - boundary_rank(&e, &t)
}

/// Persistence by plain left-to-right column reduction of the full
/// boundary matrix: `(dim, birth, death)` with zero-length pairs dropped,
/// and essential classes `(dim, birth)`.
pub fn naive_persistence(simplices: &[(u32, Vec<usize>)]) -> (Vec<(usize, u32, u32)>, Vec<(usize, u32)>) {
    let mut order: Vec<usize> = (0..simplices.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, va) = &simplices[a];
        let (sb, vb) = &simplices[b];
        (sa, va.len(), va).cmp(&(sb, vb.len(), vb))
    });
    let sorted: Vec<&(u32, Vec<usize>)> = order.iter().map(|&i| &simplices[i]).collect();
    let index_of = |v: &[usize]| sorted.iter().position(|(_, w)| w.as_slice() == v).expect("face present");
    let mut columns: Vec<Vec<usize>> = sorted
        .iter()
        .map(|(_, v)| {
            if v.len() == 1 {
                return Vec::new();
            }
            let mut col: Vec<usize> = (0..v.len())
                .map(|skip| {
                    let face: Vec<usize> = v.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x).collect();
                    index_of(&face)
                })
                .collect();
            col.sort_unstable();
            col
        })
        .collect();
    let mut low_owner: std::collections::HashMap<usize, usize> = Default::default();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match low_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    let mut sum: Vec<usize> = Vec::new();
                    let (mut a, mut b) = (0, 0);
                    while a < columns[j].len() || b < other.len() {
                        match (columns[j].get(a), other.get(b)) {
                            (Some(&x), Some(&y)) if x == y => {
                                a += 1;
                                b += 1;
                            }
                            (Some(&x), Some(&y)) if x < y => {
                                sum.push(x);
                                a += 1;
                            }
                            (Some(_), Some(&y)) => {
                                sum.push(y);
                                b += 1;
                            }
                            (Some(&x), None) => {
                                sum.push(x);
                                a += 1;
                            }
                            (None, Some(&y)) => {
                                sum.push(y);
                                b += 1;
                            }
                            (None, None) => unreachable!(),
                        }
                    }
                    columns[j] = sum;
                }
                None => {
                    low_owner.insert(low, j);
                    break;
                }
            }
        }
    }
    let mut pairs = Vec::new();
    let mut killed = vec![false; columns.len()];
    for (&low, &j) in &low_owner {
        killed[low] = true;
        killed[j] = true;
        let (b, d) = (sorted[low].0, sorted[j].0);
        if b < d {
            pairs.push((sorted[low].1.len() - 1, b, d));
        }
    }
    let essentials = (0..columns.len())
        .filter(|&j| !killed[j] && columns[j].is_empty() && sorted[j].1.len() <= 2)
        .map(|j| (sorted[j].1.len() - 1, sorted[j].0))
        .collect();
    pairs.sort_unstable();
    (pairs, essentials)
}

/// Exact cost of the best matching between two diagrams (points may go to
/// the diagonal) by trying every injection. Costs are `‖·‖∞^p`, returned
/// before taking the p-th root.
pub fn brute_matching_cost(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let diag = |x: &(f64, f64)| ((x.1 - x.0) / 2.0).powf(p);
    let pair = |x: &(f64, f64), y: &(f64, f64)| (x.0 - y.0).abs().max((x.1 - y.1).abs()).powf(p);
    fn go(
        i: usize,
        a: &[(f64, f64)],
        b: &[(f64, f64)],
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
        diag: &dyn Fn(&(f64, f64)) -> f64,
        pair: &dyn Fn(&(f64, f64), &(f64, f64)) -> f64,
    ) {
        if i == a.len() {
            let rest: f64 = b.iter().zip(used.iter()).filter(|(_, &u)| !u).map(|(y, _)| diag(y)).sum();
            *best = best.min(acc + rest);
            return;
        }
        go(i + 1, a, b, used, acc + diag(&a[i]), best, diag, pair);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, acc + pair(&a[i], &b[j]), best, diag, pair);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best, &diag, &pair);
    best
}

/// Counting definition of ROC-AUC: the fraction of (positive, negative)
/// pairs ranked correctly, ties counting one half.
pub fn mann_whitney_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                den += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

/// Area under precision/recall evaluated directly at every threshold
/// `q` in the score set plus one below all of them, positives `p > q`,
/// joined by trapezoids from `(recall 0, precision 1)`.
pub fn brute_prc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut qs: Vec<f64> = scores.to_vec();
    qs.push(f64::NEG_INFINITY);
    qs.sort_by(|a, b| b.total_cmp(a));
    qs.dedup();
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let mut pts = vec![(0.0, 1.0)];
    for q in qs {
        let tp = scores.iter().zip(labels).filter(|(&s, &y)| s > q && y).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(&s, &y)| s > q && !y).count() as f64;
        if tp + fp > 0.0 {
            pts.push((tp / pos, tp / (tp + fp)));
        }
    }
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// F1 from confusion counts at `p > 0.5`, zero without true positives.
pub fn brute_f1(probs: &[f64], labels: &[bool]) -> f64 {
    let tp = probs.iter().zip(labels).filter(|(&p, &y)| p > 0.5 && y).count() as f64;
    let fp = probs.iter().zip(labels).filter(|(&p, &y)| p > 0.5 && !y).count() as f64;
    let fn_ = probs.iter().zip(labels).filter(|(&p, &y)| p <= 0.5 && y).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}
