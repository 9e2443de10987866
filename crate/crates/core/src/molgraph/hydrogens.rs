use super::{rings::detect_rings, Atom, Bond, BondOrder, Element, MolecularGraph};

/// Turns implicit hydrogens into explicit atoms joined by single bonds.
///
/// New hydrogens are appended after the existing atoms, grouped by parent in
/// ascending parent id. Because implicit hydrogens already sort last in the
/// chirality convention, a stereocentre's neighbour order is preserved and
/// its tag needs no flip. Applying the function twice is a no-op.
pub fn expand_hydrogens(g: &MolecularGraph) -> MolecularGraph {
    let total: usize = g.atoms.iter().map(|a| a.implicit_hydrogens as usize).sum();
    if total == 0 {
        return g.clone();
    }
    let mut atoms = g.atoms.clone();
    let mut bonds = g.bonds.clone();
    atoms.reserve(total);
    bonds.reserve(total);
    for parent in 0..g.atoms.len() {
        let count = g.atoms[parent].implicit_hydrogens;
        atoms[parent].implicit_hydrogens = 0;
        for _ in 0..count {
            let id = atoms.len();
            atoms.push(Atom::new(id, Element::H));
            bonds.push(Bond::new(parent, id, BondOrder::Single));
        }
    }
    detect_rings(MolecularGraph {
        name: g.name.clone(),
        atoms,
        bonds,
    })
}
