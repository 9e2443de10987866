//! SMILES subset: organic-subset and bracket atoms (`@`/`@@`, hydrogen
//! count, charge), ring closures `0-9` and `%nn`, branches, bonds
//! `- = # :` and `.` for disconnected parts. `/` and `\` are read as single
//! bonds; the double-bond geometry they describe is not represented.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{detect_rings, permutation_is_odd, Atom, Bond, BondOrder, Chirality, Element, MolecularGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("SMILES error at offset {offset}: {message}")]
pub struct SmilesError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, SmilesError> {
    Err(SmilesError {
        offset,
        message: message.into(),
    })
}

/// Slot in an atom's SMILES neighbour order.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Atom(usize),
    ImplicitH,
    OpenRing,
}

struct PendingAtom {
    offset: usize,
    bracket: bool,
    h_count: u8,
    chiral: Option<Chirality>,
    order: Vec<Slot>,
}

struct RingOpen {
    atom: usize,
    bond: Option<BondOrder>,
    slot: usize,
    offset: usize,
}

#[derive(Default)]
struct Parser {
    atoms: Vec<Atom>,
    info: Vec<PendingAtom>,
    bonds: Vec<Bond>,
    /// Bonds whose aromatic order was inferred rather than written.
    inferred_aromatic: Vec<bool>,
    bond_index: HashMap<(usize, usize), usize>,
}

impl Parser {
    fn add_bond(&mut self, u: usize, v: usize, order: Option<BondOrder>, offset: usize) -> Result<(), SmilesError> {
        if u == v {
            return err(offset, "ring closure bonds an atom to itself");
        }
        let key = (u.min(v), u.max(v));
        if self.bond_index.contains_key(&key) {
            return err(offset, format!("duplicate bond between atoms {} and {}", key.0, key.1));
        }
        let inferred = order.is_none();
        let order = order.unwrap_or(if self.atoms[u].aromatic && self.atoms[v].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        });
        self.bond_index.insert(key, self.bonds.len());
        self.bonds.push(Bond::new(u, v, order));
        self.inferred_aromatic.push(inferred && order == BondOrder::Aromatic);
        Ok(())
    }
}

fn aromatic_element(c: u8) -> Option<Element> {
    match c {
        b'b' => Some(Element::B),
        b'c' => Some(Element::C),
        b'n' => Some(Element::N),
        b'o' => Some(Element::O),
        b'p' => Some(Element::P),
        b's' => Some(Element::S),
        _ => None,
    }
}

fn bond_symbol(c: u8) -> Option<BondOrder> {
    match c {
        b'-' | b'/' | b'\\' => Some(BondOrder::Single),
        b'=' => Some(BondOrder::Double),
        b'#' => Some(BondOrder::Triple),
        b':' => Some(BondOrder::Aromatic),
        _ => None,
    }
}

/// Parses a SMILES string. Implicit hydrogens are counted but not expanded.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    let s = text.as_bytes();
    let mut p = Parser::default();
    let mut prev: Option<usize> = None;
    let mut pending_bond: Option<(BondOrder, usize)> = None;
    let mut branches: Vec<(usize, Option<usize>)> = Vec::new();
    let mut rings: HashMap<u32, RingOpen> = HashMap::new();
    let mut i = 0;

    if s.is_empty() {
        return err(0, "empty SMILES");
    }

    while i < s.len() {
        let c = s[i];
        let start = i;
        match c {
            b'(' => {
                let Some(atom) = prev else {
                    return err(i, "branch opened before any atom");
                };
                if pending_bond.is_some() {
                    return err(i, "bond symbol before '('");
                }
                branches.push((i, Some(atom)));
                i += 1;
                continue;
            }
            b')' => {
                let Some((_, atom)) = branches.pop() else {
                    return err(i, "unbalanced ')'");
                };
                if pending_bond.is_some() {
                    return err(i, "bond symbol before ')'");
                }
                if s.get(i.wrapping_sub(1)) == Some(&b'(') {
                    return err(i, "empty branch");
                }
                prev = atom;
                i += 1;
                continue;
            }
            b'.' => {
                if pending_bond.is_some() {
                    return err(i, "bond symbol before '.'");
                }
                prev = None;
                i += 1;
                continue;
            }
            b'%' | b'0'..=b'9' => {
                let Some(atom) = prev else {
                    return err(i, "ring closure before any atom");
                };
                let digit = if c == b'%' {
                    if i + 2 >= s.len() {
                        return err(i, "'%' must be followed by two digits");
                    }
                    let (d1, d2) = (s[i + 1], s[i + 2]);
                    if !d1.is_ascii_digit() || !d2.is_ascii_digit() {
                        return err(i, "'%' must be followed by two digits");
                    }
                    i += 3;
                    ((d1 - b'0') * 10 + (d2 - b'0')) as u32
                } else {
                    i += 1;
                    (c - b'0') as u32
                };
                let bond = pending_bond.take();
                match rings.remove(&digit) {
                    None => {
                        let slot = p.info[atom].order.len();
                        p.info[atom].order.push(Slot::OpenRing);
                        rings.insert(
                            digit,
                            RingOpen {
                                atom,
                                bond: bond.map(|b| b.0),
                                slot,
                                offset: start,
                            },
                        );
                    }
                    Some(open) => {
                        let order = match (open.bond, bond.map(|b| b.0)) {
                            (Some(a), Some(b)) if a != b => {
                                return err(start, "ring closure bond symbols disagree");
                            }
                            (Some(a), _) => Some(a),
                            (None, b) => b,
                        };
                        p.add_bond(open.atom, atom, order, start)?;
                        p.info[open.atom].order[open.slot] = Slot::Atom(atom);
                        p.info[atom].order.push(Slot::Atom(open.atom));
                    }
                }
                continue;
            }
            _ => {}
        }
        if let Some(order) = bond_symbol(c) {
            if pending_bond.is_some() {
                return err(i, "two consecutive bond symbols");
            }
            if prev.is_none() {
                return err(i, "bond symbol without a preceding atom");
            }
            pending_bond = Some((order, i));
            i += 1;
            continue;
        }

        // Atom.
        let (atom, info, next) = if c == b'[' {
            parse_bracket(s, i)?
        } else {
            parse_organic(s, i)?
        };
        i = next;
        let id = p.atoms.len();
        let mut atom = atom;
        atom.id = id;
        p.atoms.push(atom);
        p.info.push(info);
        if let Some(from) = prev {
            let order = pending_bond.take().map(|b| b.0);
            p.add_bond(from, id, order, start)?;
            p.info[from].order.push(Slot::Atom(id));
            p.info[id].order.push(Slot::Atom(from));
        }
        if p.info[id].h_count > 0 {
            p.info[id].order.push(Slot::ImplicitH);
        }
        prev = Some(id);
    }

    if let Some((_, offset)) = pending_bond {
        return err(offset, "dangling bond symbol");
    }
    if let Some((offset, _)) = branches.pop() {
        return err(offset, "unbalanced '('");
    }
    if let Some(open) = rings.values().min_by_key(|r| r.offset) {
        return err(open.offset, "unmatched ring closure");
    }

    finish(p, text)
}

fn parse_organic(s: &[u8], i: usize) -> Result<(Atom, PendingAtom, usize), SmilesError> {
    let c = s[i];
    let two = |a: u8, b: u8| c == a && s.get(i + 1) == Some(&b);
    let (element, aromatic, len) = if two(b'C', b'l') {
        (Element::Cl, false, 2)
    } else if two(b'B', b'r') {
        (Element::Br, false, 2)
    } else {
        match c {
            b'B' => (Element::B, false, 1),
            b'C' => (Element::C, false, 1),
            b'N' => (Element::N, false, 1),
            b'O' => (Element::O, false, 1),
            b'P' => (Element::P, false, 1),
            b'S' => (Element::S, false, 1),
            b'F' => (Element::F, false, 1),
            b'I' => (Element::I, false, 1),
            _ => match aromatic_element(c) {
                Some(e) => (e, true, 1),
                None => {
                    return err(i, format!("unsupported or unexpected character '{}'", c as char));
                }
            },
        }
    };
    let mut atom = Atom::new(0, element);
    atom.aromatic = aromatic;
    let info = PendingAtom {
        offset: i,
        bracket: false,
        h_count: 0,
        chiral: None,
        order: Vec::new(),
    };
    Ok((atom, info, i + len))
}

fn parse_bracket(s: &[u8], open: usize) -> Result<(Atom, PendingAtom, usize), SmilesError> {
    let mut i = open + 1;
    if s.get(i).is_some_and(|c| c.is_ascii_digit()) {
        return err(i, "isotopes are not supported");
    }
    let symbol_start = i;
    let (element, aromatic) = {
        let c = *s.get(i).ok_or(SmilesError {
            offset: i,
            message: "unterminated bracket atom".into(),
        })?;
        let next = s.get(i + 1).copied();
        if c.is_ascii_uppercase() {
            // Two-letter symbols first.
            let two = next
                .filter(|n| n.is_ascii_lowercase())
                .map(|n| format!("{}{}", c as char, n as char));
            if let Some(e) = two.as_deref().and_then(|t| t.parse::<Element>().ok()) {
                i += 2;
                (e, false)
            } else if let Ok(e) = (c as char).to_string().parse::<Element>() {
                i += 1;
                (e, false)
            } else {
                return err(symbol_start, format!("unsupported element in '{}'", bracket_text(s, open)));
            }
        } else if let Some(e) = aromatic_element(c) {
            if next.is_some_and(|n| n.is_ascii_lowercase()) {
                return err(symbol_start, format!("unsupported element in '{}'", bracket_text(s, open)));
            }
            i += 1;
            (e, true)
        } else {
            return err(symbol_start, format!("unsupported element in '{}'", bracket_text(s, open)));
        }
    };

    let mut chiral = None;
    if s.get(i) == Some(&b'@') {
        if s.get(i + 1) == Some(&b'@') {
            chiral = Some(Chirality::Cw);
            i += 2;
        } else {
            chiral = Some(Chirality::Ccw);
            i += 1;
        }
        if s.get(i).is_some_and(|c| c.is_ascii_uppercase() && *c != b'H') {
            return err(i, "only tetrahedral @/@@ chirality is supported");
        }
    }

    let mut h_count = 0u8;
    if s.get(i) == Some(&b'H') {
        i += 1;
        h_count = 1;
        if let Some(d) = s.get(i).filter(|c| c.is_ascii_digit()) {
            h_count = d - b'0';
            i += 1;
        }
    }

    let mut charge: i32 = 0;
    if let Some(&sign) = s.get(i).filter(|c| **c == b'+' || **c == b'-') {
        let unit = if sign == b'+' { 1 } else { -1 };
        i += 1;
        if let Some(d) = s.get(i).filter(|c| c.is_ascii_digit()) {
            charge = unit * (d - b'0') as i32;
            i += 1;
        } else {
            charge = unit;
            while s.get(i) == Some(&sign) {
                charge += unit;
                i += 1;
            }
        }
    }

    match s.get(i) {
        Some(b']') => i += 1,
        Some(b':') => return err(i, "atom classes are not supported"),
        Some(c) => return err(i, format!("unexpected '{}' in bracket atom", *c as char)),
        None => return err(open, "unterminated bracket atom"),
    }

    let mut atom = Atom::new(0, element);
    atom.aromatic = aromatic;
    atom.formal_charge = charge.clamp(-8, 8) as i8;
    let info = PendingAtom {
        offset: open,
        bracket: true,
        h_count,
        chiral,
        order: Vec::new(),
    };
    Ok((atom, info, i))
}

fn bracket_text(s: &[u8], open: usize) -> String {
    let end = s[open..].iter().position(|&c| c == b']').map_or(s.len(), |p| open + p + 1);
    String::from_utf8_lossy(&s[open..end]).into_owned()
}

/// Assigns hydrogens, checks valences, normalises chirality and perceives rings.
fn finish(mut p: Parser, text: &str) -> Result<MolecularGraph, SmilesError> {
    let n = p.atoms.len();
    let mut used = vec![0u32; n];
    for b in &p.bonds {
        used[b.a] += b.order.valence_slots();
        used[b.b] += b.order.valence_slots();
    }

    for v in 0..n {
        let info = &p.info[v];
        let atom = &p.atoms[v];
        let allowed = atom.element.valences(atom.formal_charge);
        let max = allowed.iter().copied().max().unwrap_or(0) as u32;
        let h = if info.bracket {
            if used[v] + info.h_count as u32 > max {
                return err(info.offset, format!("valence of {} exceeded", atom.element));
            }
            info.h_count
        } else {
            if used[v] > max {
                return err(info.offset, format!("valence of {} exceeded", atom.element));
            }
            let pi = u32::from(
                atom.aromatic
                    && matches!(atom.element, Element::C | Element::N | Element::P | Element::B)
                    && used[v] < max,
            );
            let need = used[v] + pi;
            let target = allowed.iter().map(|&x| x as u32).find(|&x| x >= need).unwrap_or(need);
            (target - need) as u8
        };
        p.atoms[v].implicit_hydrogens = h;
    }

    for v in 0..n {
        let Some(tag) = p.info[v].chiral else {
            continue;
        };
        let seq: Vec<usize> = p.info[v]
            .order
            .iter()
            .map(|slot| match slot {
                Slot::Atom(w) => *w,
                Slot::ImplicitH => usize::MAX,
                Slot::OpenRing => unreachable!("ring closures are matched before finish"),
            })
            .collect();
        let degree = seq.len() - usize::from(p.atoms[v].implicit_hydrogens > 0) + p.atoms[v].implicit_hydrogens as usize;
        if degree != 4 || p.atoms[v].implicit_hydrogens > 1 {
            log::warn!(
                "{}: ignoring chirality on atom {} with {} neighbours",
                text,
                v,
                degree
            );
            continue;
        }
        p.atoms[v].chirality = tag.flip_if(permutation_is_odd(&seq));
    }

    let g = detect_rings(MolecularGraph {
        name: text.to_string(),
        atoms: p.atoms,
        bonds: p.bonds,
    });
    // Inferred aromatic bonds outside rings join two aromatic systems.
    let mut g = g;
    for (bond, inferred) in g.bonds.iter_mut().zip(&p.inferred_aromatic) {
        if *inferred && !bond.in_ring {
            bond.order = BondOrder::Single;
        }
    }
    Ok(g)
}

/// Writes a SMILES string that parses back to the same graph.
///
/// Atoms are emitted in depth-first order, always in bracket form with an
/// explicit hydrogen count, and every bond carries its symbol. For graphs
/// produced by [`parse_smiles`] the depth-first order equals the id order,
/// so the round trip reproduces ids exactly.
pub fn write_smiles(g: &MolecularGraph) -> String {
    let n = g.atoms.len();
    let adj = g.adjacency();

    // DFS tree with ascending neighbour order.
    let mut parent = vec![usize::MAX; n];
    let mut visited = vec![false; n];
    let mut preorder = Vec::with_capacity(n);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        roots.push(root);
        let mut stack = vec![(root, 0usize)];
        visited[root] = true;
        preorder.push(root);
        while let Some((u, idx)) = stack.last_mut() {
            let u = *u;
            if *idx < adj[u].len() {
                let w = adj[u][*idx];
                *idx += 1;
                if !visited[w] {
                    visited[w] = true;
                    parent[w] = u;
                    children[u].push(w);
                    preorder.push(w);
                    stack.push((w, 0));
                }
            } else {
                stack.pop();
            }
        }
    }
    let mut pos = vec![0usize; n];
    for (i, &v) in preorder.iter().enumerate() {
        pos[v] = i;
    }

    // Ring-closure events per atom in output order: (partner, opens_here).
    let mut closures: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for b in &g.bonds {
        if parent[b.a] == b.b || parent[b.b] == b.a {
            continue;
        }
        let (first, second) = if pos[b.a] < pos[b.b] { (b.a, b.b) } else { (b.b, b.a) };
        closures[first].push((second, true));
        closures[second].push((first, false));
    }
    for list in &mut closures {
        // Closings first (their digits were allocated earlier), then openings by partner position.
        list.sort_by_key(|&(w, opens)| (opens, pos[w]));
    }

    let mut w = Writer {
        g,
        parent: &parent,
        children: &children,
        closures: &closures,
        out: String::new(),
        digit_of: HashMap::new(),
        free_digits: (1..100).rev().collect(),
    };
    for (ci, &root) in roots.iter().enumerate() {
        if ci > 0 {
            w.out.push('.');
        }
        w.emit(root);
    }
    w.out
}

struct Writer<'a> {
    g: &'a MolecularGraph,
    parent: &'a [usize],
    children: &'a [Vec<usize>],
    closures: &'a [Vec<(usize, bool)>],
    out: String,
    digit_of: HashMap<(usize, usize), u32>,
    free_digits: Vec<u32>,
}

impl Writer<'_> {
    fn bond_symbol(&self, u: usize, v: usize) -> &'static str {
        let order = self
            .g
            .bonds
            .iter()
            .find(|b| b.a == u.min(v) && b.b == u.max(v))
            .map_or(BondOrder::Single, |b| b.order);
        match order {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }

    fn emit(&mut self, v: usize) {
        let atom = &self.g.atoms[v];
        // Neighbour order as it will be read back: parent, implicit H, ring closures, children.
        let mut written: Vec<usize> = Vec::with_capacity(4);
        if self.parent[v] != usize::MAX {
            written.push(self.parent[v]);
        }
        if atom.implicit_hydrogens > 0 {
            written.push(usize::MAX);
        }
        written.extend(self.closures[v].iter().map(|&(w, _)| w));
        written.extend(self.children[v].iter().copied());

        self.out.push('[');
        let sym = atom.element.symbol();
        if atom.aromatic {
            self.out.push_str(&sym.to_ascii_lowercase());
        } else {
            self.out.push_str(sym);
        }
        if atom.chirality != Chirality::None {
            let tag = atom.chirality.flip_if(permutation_is_odd(&written));
            self.out.push_str(if tag == Chirality::Cw { "@@" } else { "@" });
        }
        match atom.implicit_hydrogens {
            0 => {}
            1 => self.out.push('H'),
            h => {
                let _ = write!(self.out, "H{h}");
            }
        }
        match atom.formal_charge {
            0 => {}
            c if c > 0 => {
                let _ = write!(self.out, "+{c}");
            }
            c => {
                let _ = write!(self.out, "-{}", -c);
            }
        }
        self.out.push(']');

        for &(w, opens) in &self.closures[v] {
            let key = (v.min(w), v.max(w));
            let d = if opens {
                let sym = self.bond_symbol(v, w);
                self.out.push_str(sym);
                let d = self.free_digits.pop().expect("fewer than 100 open rings");
                self.digit_of.insert(key, d);
                d
            } else {
                let d = self.digit_of.remove(&key).expect("ring opened earlier");
                self.free_digits.push(d);
                self.free_digits.sort_unstable_by(|a, b| b.cmp(a));
                d
            };
            if d < 10 {
                let _ = write!(self.out, "{d}");
            } else {
                let _ = write!(self.out, "%{d:02}");
            }
        }

        let kids = &self.children[v];
        for (k, &c) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                self.out.push('(');
            }
            let sym = self.bond_symbol(v, c);
            self.out.push_str(sym);
            self.emit(c);
            if !last {
                self.out.push(')');
            }
        }
    }
}
