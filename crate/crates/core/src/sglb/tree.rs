use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

/// Binary regression tree stored as parallel arrays. Node 0 is the root; a
/// node with `left == 0` is a leaf. Samples with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub outputs: usize,
    pub feature: Vec<u32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// `outputs` values per node; zero for internal nodes.
    pub value: Vec<f64>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.left[node] == 0
    }

    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut node = 0;
        while !self.is_leaf(node) {
            node = if x[self.feature[node] as usize] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            } as usize;
        }
        node
    }

    pub fn predict(&self, x: &[f64]) -> &[f64] {
        let leaf = self.leaf_of(x);
        &self.value[leaf * self.outputs..(leaf + 1) * self.outputs]
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, n: usize) -> usize {
            if t.is_leaf(n) {
                0
            } else {
                1 + go(t, t.left[n] as usize).max(go(t, t.right[n] as usize))
            }
        }
        go(self, 0)
    }

    fn push(&mut self) -> usize {
        self.feature.push(0);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.extend(std::iter::repeat_n(0.0, self.outputs));
        self.feature.len() - 1
    }
}

/// Per-feature, per-bin `[count, sum_0, .., sum_{d-1}]`.
struct Histogram {
    data: Vec<f64>,
}

struct Layout<'a> {
    binned: &'a BinnedMatrix,
    offsets: Vec<usize>,
    stride: usize,
}

impl Layout<'_> {
    fn build(&self, samples: &[u32], targets: &[f64]) -> Histogram {
        let mut data = vec![0.0; *self.offsets.last().unwrap_or(&0)];
        let d = self.stride - 1;
        for (slot, &f) in self.binned.active.iter().enumerate() {
            let col = &self.binned.columns[f];
            let base = self.offsets[slot];
            for &i in samples {
                let at = base + col[i as usize] as usize * self.stride;
                data[at] += 1.0;
                let t = &targets[i as usize * d..(i as usize + 1) * d];
                for o in 0..d {
                    data[at + 1 + o] += t[o];
                }
            }
        }
        Histogram { data }
    }
}

fn score(sums: &[f64], count: f64) -> f64 {
    sums.iter().map(|s| s * s).sum::<f64>() / count
}

struct Split {
    gain: f64,
    feature: usize,
    bin: usize,
}

fn best_split(layout: &Layout, hist: &Histogram, total: &[f64], n: usize) -> Option<Split> {
    let d = layout.stride - 1;
    let parent = score(total, n as f64);
    let mut best: Option<Split> = None;
    let mut left = vec![0.0; d];
    let mut right = vec![0.0; d];
    for (slot, &f) in layout.binned.active.iter().enumerate() {
        let base = layout.offsets[slot];
        let bins = layout.binned.n_bins[f];
        left.iter_mut().for_each(|x| *x = 0.0);
        let mut count_left = 0.0;
        for b in 0..bins - 1 {
            let at = base + b * layout.stride;
            count_left += hist.data[at];
            for o in 0..d {
                left[o] += hist.data[at + 1 + o];
            }
            let count_right = n as f64 - count_left;
            if count_left < 0.5 || count_right < 0.5 {
                continue;
            }
            for o in 0..d {
                right[o] = total[o] - left[o];
            }
            let gain = score(&left, count_left) + score(&right, count_right) - parent;
            if gain > 0.0 && best.as_ref().is_none_or(|s| gain > s.gain) {
                best = Some(Split { gain, feature: f, bin: b });
            }
        }
    }
    best
}

/// Least-squares tree on `d`-dimensional targets (`targets[i*d..(i+1)*d]`).
/// Returns the tree and the leaf reached by every training sample.
pub fn fit_tree(
    binned: &BinnedMatrix,
    thresholds: &[Vec<f64>],
    targets: &[f64],
    outputs: usize,
    params: &TreeParams,
) -> (Tree, Vec<u32>) {
    let n = binned.n_rows;
    let stride = outputs + 1;
    let mut offsets = Vec::with_capacity(binned.active.len() + 1);
    let mut acc = 0;
    for &f in &binned.active {
        offsets.push(acc);
        acc += binned.n_bins[f] * stride;
    }
    offsets.push(acc);
    let layout = Layout { binned, offsets, stride };
    let mut tree = Tree {
        outputs,
        feature: Vec::new(),
        threshold: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        value: Vec::new(),
    };
    let mut leaf_of = vec![0u32; n];
    let root: Vec<u32> = (0..n as u32).collect();
    let hist = layout.build(&root, targets);
    tree.push();
    grow(&mut tree, &layout, thresholds, targets, params, 0, root, hist, 0, &mut leaf_of);
    (tree, leaf_of)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    tree: &mut Tree,
    layout: &Layout,
    thresholds: &[Vec<f64>],
    targets: &[f64],
    params: &TreeParams,
    node: usize,
    samples: Vec<u32>,
    hist: Histogram,
    depth: usize,
    leaf_of: &mut [u32],
) {
    let d = tree.outputs;
    let mut total = vec![0.0; d];
    for &i in &samples {
        for o in 0..d {
            total[o] += targets[i as usize * d + o];
        }
    }
    let split = if depth < params.max_depth && samples.len() >= params.min_samples_split.max(2) {
        best_split(layout, &hist, &total, samples.len())
    } else {
        None
    };
    let Some(split) = split else {
        let inv = 1.0 / samples.len() as f64;
        for o in 0..d {
            tree.value[node * d + o] = total[o] * inv;
        }
        for &i in &samples {
            leaf_of[i as usize] = node as u32;
        }
        return;
    };

    let col = &layout.binned.columns[split.feature];
    let (left_s, right_s): (Vec<u32>, Vec<u32>) = samples.iter().partition(|&&i| col[i as usize] as usize <= split.bin);
    // Build the smaller child's histogram directly and derive the other.
    let (small, large_is_left) = if left_s.len() <= right_s.len() {
        (&left_s, false)
    } else {
        (&right_s, true)
    };
    let small_hist = layout.build(small, targets);
    let mut large_hist = hist;
    for (l, s) in large_hist.data.iter_mut().zip(&small_hist.data) {
        *l -= s;
    }
    let (left_hist, right_hist) = if large_is_left {
        (large_hist, small_hist)
    } else {
        (small_hist, large_hist)
    };

    let l = tree.push();
    let r = tree.push();
    tree.feature[node] = split.feature as u32;
    tree.threshold[node] = thresholds[split.feature][split.bin];
    tree.left[node] = l as u32;
    tree.right[node] = r as u32;
    grow(tree, layout, thresholds, targets, params, l, left_s, left_hist, depth + 1, leaf_of);
    grow(tree, layout, thresholds, targets, params, r, right_s, right_hist, depth + 1, leaf_of);
}
