use serde::{Deserialize, Serialize};

use super::HomologyError;

/// Persistence diagram of one homology dimension on the integer scale grid
/// `0..=max_scale`. Finite pairs satisfy `b < d <= max_scale`; essential
/// classes never die.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim: u8,
    pub max_scale: u32,
    /// Sorted ascending.
    pub pairs: Vec<(u32, u32)>,
    /// Sorted ascending.
    pub essentials: Vec<u32>,
}

impl PersistenceDiagram {
    pub fn empty(dim: u8, max_scale: u32) -> Self {
        PersistenceDiagram {
            dim,
            max_scale,
            pairs: Vec::new(),
            essentials: Vec::new(),
        }
    }

    /// Builds a diagram, dropping zero-length pairs and sorting.
    pub fn from_parts(dim: u8, max_scale: u32, mut pairs: Vec<(u32, u32)>, mut essentials: Vec<u32>) -> Self {
        pairs.retain(|&(b, d)| b < d);
        pairs.sort_unstable();
        essentials.sort_unstable();
        PersistenceDiagram {
            dim,
            max_scale,
            pairs,
            essentials,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.essentials.is_empty()
    }

    /// Number of classes alive at scale `t`.
    pub fn betti_at(&self, t: u32) -> Result<usize, HomologyError> {
        if t > self.max_scale {
            return Err(HomologyError::OutOfGrid { t, max: self.max_scale });
        }
        Ok(self.betti_unchecked(t))
    }

    pub(crate) fn betti_unchecked(&self, t: u32) -> usize {
        let finite = self.pairs.iter().filter(|&&(b, d)| b <= t && t < d).count();
        let essential = self.essentials.iter().filter(|&&b| b <= t).count();
        finite + essential
    }

    /// All points with essential classes given death `max_scale + 1`.
    pub fn grid_points(&self) -> Vec<(u32, u32)> {
        let inf = self.max_scale + 1;
        let mut pts = self.pairs.clone();
        pts.extend(self.essentials.iter().map(|&b| (b, inf)));
        pts.sort_unstable();
        pts
    }
}
