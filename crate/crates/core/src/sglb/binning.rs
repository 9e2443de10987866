use serde::{Deserialize, Serialize};

/// Per-feature split candidates. A value `x` falls in bin
/// `#{t in thresholds : t < x}`, so bin `<= b` is exactly `x <= thresholds[b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub thresholds: Vec<Vec<f64>>,
}

impl BinMapper {
    /// Quantile thresholds with at most `max_bins` bins per feature. A
    /// feature with fewer distinct values than that gets one threshold per
    /// distinct value except the largest; a constant feature gets none and
    /// can never be split on.
    pub fn fit(rows: &[Vec<f64>], max_bins: usize) -> Self {
        let n_features = rows.first().map_or(0, Vec::len);
        let max_bins = max_bins.clamp(2, 256);
        let thresholds = (0..n_features)
            .map(|f| {
                let mut col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
                col.sort_by(f64::total_cmp);
                let mut distinct = col.clone();
                distinct.dedup();
                if distinct.len() <= max_bins {
                    distinct.pop();
                    return distinct;
                }
                let n = col.len();
                let mut t: Vec<f64> = (1..max_bins).map(|q| col[(q * n / max_bins).min(n - 1)]).collect();
                t.dedup();
                if t.last() == distinct.last() {
                    t.pop();
                }
                t
            })
            .collect();
        BinMapper { thresholds }
    }

    pub fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        self.thresholds[feature].partition_point(|&t| t < x) as u8
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> BinnedMatrix {
        let n = rows.len();
        let mut columns = Vec::with_capacity(self.n_features());
        let mut active = Vec::new();
        for f in 0..self.n_features() {
            if self.thresholds[f].is_empty() {
                columns.push(Vec::new());
                continue;
            }
            active.push(f);
            columns.push(rows.iter().map(|r| self.bin(f, r[f])).collect());
        }
        let n_bins = self.thresholds.iter().map(|t| t.len() + 1).collect();
        BinnedMatrix {
            n_rows: n,
            columns,
            n_bins,
            active,
        }
    }
}

/// Column-major bin indices. Constant features have empty columns and are
/// left out of `active`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub columns: Vec<Vec<u8>>,
    pub n_bins: Vec<usize>,
    pub active: Vec<usize>,
}
