use std::collections::VecDeque;

use crate::molgraph::MolecularGraph;

use super::HomologyError;

/// Hop count between atoms in different components.
pub const UNREACHABLE: u32 = u32::MAX;

/// All-pairs hop distances, indexed by atom id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
    diameter: u32,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.data[u * self.n + v]
    }

    /// Largest finite entry.
    pub fn diameter(&self) -> u32 {
        self.diameter
    }

    fn from_bfs(n: usize, adj: &[Vec<usize>], allowed: Option<&[bool]>) -> Self {
        let mut data = vec![UNREACHABLE; n * n];
        let mut diameter = 0;
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            if allowed.is_some_and(|a| !a[s]) {
                continue;
            }
            let row = &mut data[s * n..(s + 1) * n];
            row[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for &w in &adj[u] {
                    if allowed.is_some_and(|a| !a[w]) {
                        continue;
                    }
                    if row[w] == UNREACHABLE {
                        row[w] = du + 1;
                        diameter = diameter.max(du + 1);
                        queue.push_back(w);
                    }
                }
            }
        }
        DistanceMatrix { n, data, diameter }
    }
}

/// Breadth-first hop distances over the whole molecular graph.
pub fn geodesic_distances(g: &MolecularGraph) -> Result<DistanceMatrix, HomologyError> {
    if g.atoms.is_empty() {
        return Err(HomologyError::EmptyGraph);
    }
    Ok(DistanceMatrix::from_bfs(g.atoms.len(), &g.adjacency(), None))
}

/// Hop distances inside the subgraph induced by `vertices`; pairs involving
/// other atoms are [`UNREACHABLE`].
pub fn induced_distances(g: &MolecularGraph, vertices: &[usize]) -> DistanceMatrix {
    let mut allowed = vec![false; g.atoms.len()];
    for &v in vertices {
        allowed[v] = true;
    }
    DistanceMatrix::from_bfs(g.atoms.len(), &g.adjacency(), Some(&allowed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    #[test]
    fn path_and_cycle() {
        let d = geodesic_distances(&parse_smiles("CCC").unwrap()).unwrap();
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.diameter(), 2);
        let d = geodesic_distances(&parse_smiles("C1CCCCC1").unwrap()).unwrap();
        assert_eq!(d.diameter(), 3);
        assert_eq!(d.get(0, 3), 3);
    }

    #[test]
    fn disconnected_is_unreachable() {
        let d = geodesic_distances(&parse_smiles("C.C").unwrap()).unwrap();
        assert_eq!(d.get(0, 1), UNREACHABLE);
        assert_eq!(d.diameter(), 0);
    }

    #[test]
    fn metric_axioms() {
        let d = geodesic_distances(&parse_smiles("CC(C)C1CCC(O)CC1").unwrap()).unwrap();
        let n = d.len();
        for u in 0..n {
            assert_eq!(d.get(u, u), 0);
            for v in 0..n {
                assert_eq!(d.get(u, v), d.get(v, u));
                for w in 0..n {
                    assert!(d.get(u, w) <= d.get(u, v) + d.get(v, w));
                }
            }
        }
    }

    #[test]
    fn induced_detours() {
        // Removing atom 1 from a 5-cycle forces the long way round.
        let g = parse_smiles("C1CCCC1").unwrap();
        assert_eq!(geodesic_distances(&g).unwrap().get(0, 2), 2);
        let d = induced_distances(&g, &[0, 2, 3, 4]);
        assert_eq!(d.get(0, 2), 3);
        assert_eq!(d.get(0, 1), UNREACHABLE);
    }

    #[test]
    fn empty_graph_errors() {
        let g = crate::molgraph::MolecularGraph {
            name: String::new(),
            atoms: vec![],
            bonds: vec![],
        };
        assert!(geodesic_distances(&g).is_err());
    }
}
