use std::fmt;

use serde::{Deserialize, Serialize};

/// Elements understood by the parser. `Dummy` is the `*` wildcard used for
/// fragment attachment sites and query patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    Dummy,
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

pub(crate) const HYDROGEN_WEIGHT: f64 = 1.008;

impl Element {
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Some(match symbol {
            "*" => Element::Dummy,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::Dummy => "*",
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

    /// Lowercase symbol used for aromatic atoms, if the element may be aromatic.
    pub fn aromatic_symbol(self) -> Option<&'static str> {
        match self {
            Element::B => Some("b"),
            Element::C => Some("c"),
            Element::N => Some("n"),
            Element::O => Some("o"),
            Element::P => Some("p"),
            Element::S => Some("s"),
            _ => None,
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::Dummy => 0,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// Standard atomic weight in g/mol.
    pub fn atomic_weight(self) -> f64 {
        match self {
            Element::Dummy => 0.0,
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    pub fn is_heavy(self) -> bool {
        self != Element::Dummy
    }

    /// Allowed total valences (bond orders plus hydrogens) for a charge state,
    /// in increasing order. Empty when the charge state is not supported.
    pub fn valences(self, charge: i8) -> &'static [u8] {
        use Element::*;
        match (self, charge) {
            (B, 0) => &[3],
            (B, -1) => &[4],
            (B, 1) => &[2],
            (C, 0) => &[4],
            (C, -1) | (C, 1) => &[3],
            (N, 0) => &[3],
            (N, 1) => &[4],
            (N, -1) => &[2],
            (O, 0) => &[2],
            (O, -1) => &[1],
            (O, 1) => &[3],
            (P, 0) => &[3, 5],
            (P, 1) => &[4],
            (P, -1) => &[2],
            (S, 0) => &[2, 4, 6],
            (S, 1) => &[3, 5],
            (S, -1) => &[1, 3, 5],
            (F | Cl | Br | I, 0) => &[1],
            (F | Cl | Br | I, -1) => &[0],
            (Cl | Br | I, 1) => &[2],
            _ => &[],
        }
    }

    /// Smallest allowed valence that is at least `used`.
    pub(crate) fn lowest_valence_at_least(self, charge: i8, used: u32) -> Option<u32> {
        self.valences(charge)
            .iter()
            .map(|&v| v as u32)
            .find(|&v| v >= used)
    }

    pub(crate) fn max_valence(self, charge: i8) -> Option<u32> {
        self.valences(charge).last().map(|&v| v as u32)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
