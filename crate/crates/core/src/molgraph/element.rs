use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Elements the toolkit understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::H,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    /// Standard atomic weight in Daltons, four significant figures.
    pub fn atomic_mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::B => 10.81,
            Element::C => 12.01,
            Element::N => 14.01,
            Element::O => 16.00,
            Element::F => 19.00,
            Element::P => 30.97,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.90,
            Element::I => 126.9,
        }
    }

    /// Allowed valences of the neutral atom, ascending.
    pub fn neutral_valences(self) -> &'static [u8] {
        match self {
            Element::H => &[1],
            Element::B => &[3],
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
        }
    }

    /// Allowed valences once a formal charge is applied.
    ///
    /// Carbon loses one bond per unit of charge either way, boron gains one
    /// per negative unit, and the group 15-17 elements shift with the sign
    /// of the charge (N+ behaves like C, O- like F).
    pub fn valences(self, formal_charge: i8) -> Vec<u8> {
        let c = formal_charge as i32;
        let shift = |v: u8, d: i32| -> Option<u8> {
            let r = v as i32 + d;
            (0..=8).contains(&r).then_some(r as u8)
        };
        let delta = match self {
            Element::H => -c.abs(),
            Element::C => -c.abs(),
            Element::B => -c,
            _ => c,
        };
        self.neutral_valences()
            .iter()
            .filter_map(|&v| shift(v, delta))
            .collect()
    }

    /// Symbols that may appear outside brackets in SMILES.
    pub fn is_organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::ALL
            .iter()
            .copied()
            .find(|e| e.symbol() == s)
            .ok_or_else(|| format!("unsupported element '{s}'"))
    }
}
