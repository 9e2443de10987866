use super::distance::{DistanceMatrix, UNREACHABLE};

pub const NO_VERTEX: u32 = u32::MAX;

/// A vertex, edge or triangle with its entry scale. Vertex slots hold
/// positions in [`FilteredComplex::vertices`], ascending, padded with
/// [`NO_VERTEX`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Simplex {
    pub scale: u32,
    pub dim: u8,
    pub vertices: [u32; 3],
}

impl Simplex {
    fn key(&self) -> (u32, u8, [u32; 3]) {
        (self.scale, self.dim, self.vertices)
    }

    pub fn vertex_slice(&self) -> &[u32] {
        &self.vertices[..self.dim as usize + 1]
    }
}

/// Clique complex (2-skeleton) of one vertex subset, ordered by
/// `(scale, dimension, lexicographic)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredComplex {
    /// Atom ids of the row, ascending.
    pub vertices: Vec<usize>,
    pub simplices: Vec<Simplex>,
    /// Largest scale considered; longer edges never enter.
    pub max_scale: u32,
}

impl FilteredComplex {
    pub fn count_at(&self, dim: u8, scale: u32) -> usize {
        self.simplices.iter().filter(|s| s.dim == dim && s.scale <= scale).count()
    }

    /// Every face is present and enters no later than its coface, and the
    /// list is in filtration order.
    pub fn is_face_closed(&self) -> bool {
        use std::collections::HashMap;
        let index: HashMap<&[u32], usize> = self
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertex_slice(), i))
            .collect();
        let sorted = self.simplices.windows(2).all(|w| w[0].key() < w[1].key());
        sorted
            && self.simplices.iter().enumerate().all(|(i, s)| {
                let v = s.vertex_slice();
                if v.len() == 1 {
                    return s.scale == 0;
                }
                (0..v.len()).all(|skip| {
                    let face: Vec<u32> = v.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &x)| x).collect();
                    index.get(face.as_slice()).is_some_and(|&j| j < i && self.simplices[j].scale <= s.scale)
                })
            })
    }
}

/// Vietoris-Rips row: edge `{u, v}` enters at `dist(u, v)` (if finite and at
/// most `max_scale`), a triangle at the largest of its three edge scales.
pub fn build_vr_row(vertices: &[usize], dist: &DistanceMatrix, max_scale: u32) -> FilteredComplex {
    let mut verts = vertices.to_vec();
    verts.sort_unstable();
    verts.dedup();
    let k = verts.len();
    let scale = |i: usize, j: usize| -> u32 {
        let d = dist.get(verts[i], verts[j]);
        if d == UNREACHABLE || d > max_scale {
            UNREACHABLE
        } else {
            d
        }
    };
    let mut edge = vec![UNREACHABLE; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let s = scale(i, j);
            edge[i * k + j] = s;
            edge[j * k + i] = s;
        }
    }

    let mut simplices = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        simplices.push(Simplex {
            scale: 0,
            dim: 0,
            vertices: [i as u32, NO_VERTEX, NO_VERTEX],
        });
    }
    for i in 0..k {
        for j in i + 1..k {
            let s = edge[i * k + j];
            if s != UNREACHABLE {
                simplices.push(Simplex {
                    scale: s,
                    dim: 1,
                    vertices: [i as u32, j as u32, NO_VERTEX],
                });
            }
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let sij = edge[i * k + j];
            if sij == UNREACHABLE {
                continue;
            }
            for l in j + 1..k {
                let (sil, sjl) = (edge[i * k + l], edge[j * k + l]);
                if sil == UNREACHABLE || sjl == UNREACHABLE {
                    continue;
                }
                simplices.push(Simplex {
                    scale: sij.max(sil).max(sjl),
                    dim: 2,
                    vertices: [i as u32, j as u32, l as u32],
                });
            }
        }
    }
    simplices.sort_unstable_by_key(Simplex::key);
    FilteredComplex {
        vertices: verts,
        simplices,
        max_scale,
    }
}
