use super::MolecularGraph;

/// Marks every bond that lies on a cycle (i.e. is not a bridge) and every
/// atom incident to such a bond.
pub fn detect_rings(mut g: MolecularGraph) -> MolecularGraph {
    let bridges = find_bridges(&g);
    for (bond, is_bridge) in g.bonds.iter_mut().zip(&bridges) {
        bond.in_ring = !is_bridge;
    }
    for atom in &mut g.atoms {
        atom.ring_member = false;
    }
    for bond in &g.bonds {
        if bond.in_ring {
            g.atoms[bond.a].ring_member = true;
            g.atoms[bond.b].ring_member = true;
        }
    }
    g
}

/// Tarjan low-link bridge test, iterative so long chains cannot blow the stack.
fn find_bridges(g: &MolecularGraph) -> Vec<bool> {
    let n = g.atoms.len();
    let inc = g.incident_bonds();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut bridge = vec![false; g.bonds.len()];
    let mut timer = 0;

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (vertex, bond used to enter it, next incident index to scan)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent_bond, ref mut next)) = stack.last_mut() {
            if *next < inc[v].len() {
                let bi = inc[v][*next];
                *next += 1;
                if bi == parent_bond {
                    continue;
                }
                let w = g.bonds[bi].other(v);
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, bi, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    bridge
}

#[cfg(test)]
mod tests {
    use super::super::parse_smiles;
    use super::*;

    /// Brute force: a bond is a ring bond iff its endpoints stay connected
    /// once the bond itself is removed.
    fn ring_bonds_oracle(g: &MolecularGraph) -> Vec<bool> {
        (0..g.bonds.len())
            .map(|skip| {
                let mut seen = vec![false; g.atoms.len()];
                let mut stack = vec![g.bonds[skip].a];
                seen[g.bonds[skip].a] = true;
                while let Some(u) = stack.pop() {
                    for (i, b) in g.bonds.iter().enumerate() {
                        if i == skip || (b.a != u && b.b != u) {
                            continue;
                        }
                        let w = b.other(u);
                        if !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
                seen[g.bonds[skip].b]
            })
            .collect()
    }

    fn ring_atoms(s: &str) -> Vec<bool> {
        parse_smiles(s).unwrap().atoms.iter().map(|a| a.ring_member).collect()
    }

    #[test]
    fn cyclopropane_all_ring() {
        assert_eq!(ring_atoms("C1CC1"), vec![true; 3]);
    }

    #[test]
    fn propane_no_ring() {
        assert_eq!(ring_atoms("CCC"), vec![false; 3]);
    }

    #[test]
    fn bicyclopropyl_linker() {
        // C1CC1CC1CC1: atoms 0..2 ring, 3 chain, 4..6 ring ... indices by appearance.
        let g = parse_smiles("C1CC1CC1CC1").unwrap();
        let flags: Vec<bool> = g.atoms.iter().map(|a| a.ring_member).collect();
        let oracle = ring_bonds_oracle(&g);
        let bonds: Vec<bool> = g.bonds.iter().map(|b| b.in_ring).collect();
        assert_eq!(bonds, oracle);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 6);
        assert_eq!(flags.iter().filter(|&&f| !f).count(), 1);
    }

    #[test]
    fn two_chain_carbons_between_rings() {
        let g = parse_smiles("C1CC1CCC1CC1").unwrap();
        let non_ring: Vec<usize> = g.atoms.iter().filter(|a| !a.ring_member).map(|a| a.id).collect();
        assert_eq!(non_ring, vec![3, 4]);
        assert_eq!(g.atoms.iter().filter(|a| a.ring_member).count(), 6);
    }

    #[test]
    fn matches_oracle_on_assorted() {
        for s in [
            "c1ccc2ccccc2c1",
            "C1CC2CCC1C2",
            "CC(C)C1CCC(C)CC1O",
            "C1CC1.C1CC1",
            "c1ccccc1-c1ccccc1",
            "C12C3C4C1C5C2C3C45",
        ] {
            let g = parse_smiles(s).unwrap();
            let bonds: Vec<bool> = g.bonds.iter().map(|b| b.in_ring).collect();
            assert_eq!(bonds, ring_bonds_oracle(&g), "{s}");
        }
    }
}
