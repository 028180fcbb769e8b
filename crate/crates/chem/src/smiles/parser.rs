use std::collections::BTreeMap;

use crate::aromaticity;
use crate::element::Element;
use crate::error::ChemError;
use crate::kekule::{free_valence, perfect_matching};
use crate::molecule::{Atom, Bond, BondOrder, Molecule};

#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    /// `Some` for bracket atoms, where the hydrogen count is explicit.
    pub hydrogens: Option<u8>,
    pub map: u16,
}

#[derive(Debug, Clone)]
pub(crate) struct RawBond {
    pub a: usize,
    pub b: usize,
    /// `None` when no bond symbol was written.
    pub order: Option<BondOrder>,
    pub position: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RawGraph {
    pub atoms: Vec<RawAtom>,
    pub bonds: Vec<RawBond>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    wildcards: bool,
    graph: RawGraph,
}

/// Tokenizes and builds the raw graph without any chemistry checks.
pub(crate) fn parse_raw(text: &str, wildcards: bool) -> Result<RawGraph, ChemError> {
    if text.is_empty() {
        return Err(ChemError::syntax(0, "empty input"));
    }
    if let Some(pos) = text.bytes().position(|b| !b.is_ascii() || b.is_ascii_control() || b == b' ') {
        return Err(ChemError::syntax(pos, "unexpected character"));
    }
    let mut parser = Parser { text: text.as_bytes(), pos: 0, wildcards, graph: RawGraph::default() };
    parser.run()?;
    Ok(parser.graph)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ChemError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut pending: Option<(BondOrder, usize)> = None;
        let mut open_rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)> = BTreeMap::new();
        let mut branch_empty = false;

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(ChemError::syntax(start, "branch without a preceding atom"));
                    }
                    if pending.is_some() {
                        return Err(ChemError::syntax(start, "bond symbol before '('"));
                    }
                    branches.push((prev.expect("checked above"), start));
                    branch_empty = true;
                    self.pos += 1;
                }
                b')' => {
                    let Some((atom, _)) = branches.pop() else {
                        return Err(ChemError::syntax(start, "unbalanced ')'"));
                    };
                    if branch_empty {
                        return Err(ChemError::syntax(start, "empty branch"));
                    }
                    if pending.is_some() {
                        return Err(ChemError::syntax(start, "dangling bond symbol before ')'"));
                    }
                    prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if pending.is_some() {
                        return Err(ChemError::syntax(start, "consecutive bond symbols"));
                    }
                    let order = match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    };
                    pending = Some((order, start));
                    self.pos += 1;
                }
                b'/' | b'\\' => return Err(ChemError::unsupported(start, "directional (stereo) bond")),
                b'@' => return Err(ChemError::unsupported(start, "chirality")),
                b'$' => return Err(ChemError::unsupported(start, "quadruple bond")),
                b'.' => return Err(ChemError::MultiComponent),
                b'0'..=b'9' | b'%' => {
                    let number = self.ring_number()?;
                    let Some(atom) = prev else {
                        return Err(ChemError::syntax(start, "ring closure without a preceding atom"));
                    };
                    let symbol = pending.take().map(|(o, _)| o);
                    if let Some((other, other_symbol, _)) = open_rings.remove(&number) {
                        if other == atom {
                            return Err(ChemError::syntax(start, "ring closure to the same atom"));
                        }
                        if self.bond_exists(atom, other) {
                            return Err(ChemError::syntax(start, "ring closure duplicates an existing bond"));
                        }
                        let order = match (symbol, other_symbol) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(ChemError::syntax(start, "conflicting ring-closure bond symbols"))
                            }
                            (Some(a), _) | (None, Some(a)) => Some(a),
                            (None, None) => None,
                        };
                        self.graph.bonds.push(RawBond { a: other, b: atom, order, position: start });
                    } else {
                        open_rings.insert(number, (atom, symbol, start));
                    }
                }
                _ => {
                    let atom = self.atom()?;
                    let idx = self.graph.atoms.len();
                    self.graph.atoms.push(atom);
                    match prev {
                        Some(p) => {
                            let order = pending.take().map(|(o, _)| o);
                            self.graph.bonds.push(RawBond { a: p, b: idx, order, position: start });
                        }
                        None => {
                            if let Some((_, at)) = pending {
                                return Err(ChemError::syntax(at, "bond symbol without a preceding atom"));
                            }
                        }
                    }
                    prev = Some(idx);
                    branch_empty = false;
                }
            }
        }
        if let Some((_, at)) = branches.last() {
            return Err(ChemError::syntax(*at, "unclosed branch"));
        }
        if let Some((_, at)) = pending {
            return Err(ChemError::syntax(at, "dangling bond symbol"));
        }
        if let Some((_, (_, _, at))) = open_rings.iter().next() {
            return Err(ChemError::syntax(*at, "unclosed ring"));
        }
        if self.graph.atoms.is_empty() {
            return Err(ChemError::syntax(0, "no atoms"));
        }
        Ok(())
    }

    fn bond_exists(&self, a: usize, b: usize) -> bool {
        self.graph.bonds.iter().any(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
    }

    fn ring_number(&mut self) -> Result<u32, ChemError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.text.get(self.pos..self.pos + 2).unwrap_or(&[]);
            if digits.len() != 2 || !digits.iter().all(u8::is_ascii_digit) {
                return Err(ChemError::syntax(start, "'%' must be followed by two digits"));
            }
            self.pos += 2;
            Ok(((digits[0] - b'0') * 10 + (digits[1] - b'0')) as u32)
        } else {
            let d = self.peek().expect("caller saw a digit") - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ChemError> {
        let start = self.pos;
        let c = self.peek().expect("caller saw a character");
        if c == b'[' {
            return self.bracket_atom();
        }
        let two = self.text.get(self.pos..self.pos + 2);
        let (element, aromatic, len) = match c {
            b'C' if two == Some(b"Cl") => (Element::Cl, false, 2),
            b'B' if two == Some(b"Br") => (Element::Br, false, 2),
            b'B' => (Element::B, false, 1),
            b'C' => (Element::C, false, 1),
            b'N' => (Element::N, false, 1),
            b'O' => (Element::O, false, 1),
            b'P' => (Element::P, false, 1),
            b'S' => (Element::S, false, 1),
            b'F' => (Element::F, false, 1),
            b'I' => (Element::I, false, 1),
            b'b' => (Element::B, true, 1),
            b'c' => (Element::C, true, 1),
            b'n' => (Element::N, true, 1),
            b'o' => (Element::O, true, 1),
            b'p' => (Element::P, true, 1),
            b's' => (Element::S, true, 1),
            b'*' => (Element::Dummy, false, 1),
            _ => return Err(ChemError::syntax(start, format!("unexpected character '{}'", c as char))),
        };
        if element == Element::Dummy && !self.wildcards {
            return Err(ChemError::unsupported(start, "wildcard atom outside fragment context"));
        }
        self.pos += len;
        Ok(RawAtom { element, aromatic, charge: 0, hydrogens: None, map: 0 })
    }

    fn number(&mut self) -> Option<u32> {
        let begin = self.pos;
        let mut value: u32 = 0;
        while let Some(d) = self.peek().filter(u8::is_ascii_digit) {
            value = value.checked_mul(10)?.checked_add((d - b'0') as u32)?;
            self.pos += 1;
            if self.pos - begin > 5 {
                return None;
            }
        }
        (self.pos > begin).then_some(value)
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, ChemError> {
        let start = self.pos;
        self.pos += 1;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(ChemError::unsupported(start, "isotope"));
        }
        let (element, aromatic) = self.bracket_symbol(start)?;
        if self.peek() == Some(b'@') {
            return Err(ChemError::unsupported(self.pos, "chirality"));
        }
        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = match self.number() {
                Some(h) if h <= 8 => h as u8,
                Some(_) => return Err(ChemError::syntax(self.pos, "hydrogen count too large")),
                None if self.peek().is_some_and(|c| c.is_ascii_digit()) => {
                    return Err(ChemError::syntax(self.pos, "invalid hydrogen count"))
                }
                None => 1,
            };
        }
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                if n > 4 {
                    return Err(ChemError::syntax(self.pos, "charge magnitude too large"));
                }
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                    if charge.abs() > 4 {
                        return Err(ChemError::syntax(self.pos, "charge magnitude too large"));
                    }
                }
            }
        }
        let mut map = 0u16;
        if self.peek() == Some(b':') {
            self.pos += 1;
            match self.number() {
                Some(n) if n <= u16::MAX as u32 => map = n as u16,
                _ => return Err(ChemError::syntax(self.pos, "invalid atom class")),
            }
            if element != Element::Dummy {
                return Err(ChemError::unsupported(start, "atom class on a non-wildcard atom"));
            }
        }
        if self.peek() != Some(b']') {
            return Err(ChemError::syntax(self.pos, "expected ']'"));
        }
        self.pos += 1;
        if element == Element::Dummy {
            if !self.wildcards {
                return Err(ChemError::unsupported(start, "wildcard atom outside fragment context"));
            }
            if hydrogens != 0 || charge != 0 {
                return Err(ChemError::unsupported(start, "hydrogens or charge on a wildcard"));
            }
        }
        Ok(RawAtom {
            element,
            aromatic,
            charge: charge as i8,
            hydrogens: Some(hydrogens),
            map,
        })
    }

    fn bracket_symbol(&mut self, start: usize) -> Result<(Element, bool), ChemError> {
        let Some(c) = self.peek() else {
            return Err(ChemError::syntax(self.pos, "unterminated bracket atom"));
        };
        if c == b'*' {
            self.pos += 1;
            return Ok((Element::Dummy, false));
        }
        if c.is_ascii_uppercase() {
            let next = self.text.get(self.pos + 1).copied();
            if let Some(l) = next.filter(u8::is_ascii_lowercase) {
                let two = [c, l];
                let symbol = std::str::from_utf8(&two).expect("ascii");
                return match Element::from_symbol(symbol) {
                    Some(e) => {
                        self.pos += 2;
                        Ok((e, false))
                    }
                    None => Err(ChemError::unsupported(start, format!("element '{symbol}'"))),
                };
            }
            let symbol = (c as char).to_string();
            if c == b'H' {
                return Err(ChemError::unsupported(start, "explicit hydrogen atom"));
            }
            return match Element::from_symbol(&symbol) {
                Some(e) => {
                    self.pos += 1;
                    Ok((e, false))
                }
                None => Err(ChemError::unsupported(start, format!("element '{symbol}'"))),
            };
        }
        if c.is_ascii_lowercase() {
            let next = self.text.get(self.pos + 1).copied();
            if next.is_some_and(|n| n.is_ascii_lowercase()) {
                return Err(ChemError::unsupported(start, "aromatic element"));
            }
            let element = match c {
                b'b' => Element::B,
                b'c' => Element::C,
                b'n' => Element::N,
                b'o' => Element::O,
                b'p' => Element::P,
                b's' => Element::S,
                _ => return Err(ChemError::unsupported(start, format!("aromatic element '{}'", c as char))),
            };
            self.pos += 1;
            return Ok((element, true));
        }
        Err(ChemError::syntax(self.pos, "expected an element symbol"))
    }
}

/// Full chemistry pass: kekulize written aromaticity, fill implicit
/// hydrogens, check valence, then perceive rings and aromaticity.
pub(crate) fn sanitize(raw: &RawGraph) -> Result<Molecule, ChemError> {
    let n = raw.atoms.len();
    let orders: Vec<BondOrder> = raw
        .bonds
        .iter()
        .map(|b| match b.order {
            Some(o) => o,
            None if raw.atoms[b.a].aromatic && raw.atoms[b.b].aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        })
        .collect();

    let mut base = vec![0u32; n];
    let mut edges = Vec::new();
    for (idx, (bond, &order)) in raw.bonds.iter().zip(&orders).enumerate() {
        if order == BondOrder::Aromatic {
            if !raw.atoms[bond.a].aromatic || !raw.atoms[bond.b].aromatic {
                return Err(ChemError::syntax(bond.position, "aromatic bond between non-aromatic atoms"));
            }
            edges.push((bond.a, bond.b, idx));
        }
        base[bond.a] += order.base_valence();
        base[bond.b] += order.base_valence();
    }

    let mut candidates = vec![false; n];
    for (idx, atom) in raw.atoms.iter().enumerate() {
        if !atom.aromatic {
            continue;
        }
        let used = base[idx] + atom.hydrogens.unwrap_or(0) as u32;
        match free_valence(atom.element, atom.charge, used) {
            Some(free) => candidates[idx] = free >= 1,
            None => {
                return Err(ChemError::valence(idx, format!("aromatic {} exceeds its valence", atom.element)))
            }
        }
    }
    let mut kekule: Vec<u32> = orders.iter().map(|o| o.base_valence()).collect();
    if !edges.is_empty() {
        let chosen = perfect_matching(n, &candidates, &edges).ok_or_else(|| {
            let atom = edges[0].0;
            ChemError::valence(atom, "aromatic system cannot be kekulized")
        })?;
        for bond in chosen {
            kekule[bond] = 2;
        }
    }

    let mut used = vec![0u32; n];
    for (bond, &order) in raw.bonds.iter().zip(&kekule) {
        used[bond.a] += order;
        used[bond.b] += order;
    }
    let mut atoms = Vec::with_capacity(n);
    for (idx, raw_atom) in raw.atoms.iter().enumerate() {
        let hydrogens = if raw_atom.element == Element::Dummy {
            0
        } else {
            match raw_atom.hydrogens {
                Some(h) => {
                    let total = used[idx] + h as u32;
                    match raw_atom.element.max_valence(raw_atom.charge) {
                        Some(max) if total <= max => h,
                        Some(max) => {
                            return Err(ChemError::valence(
                                idx,
                                format!("{} uses valence {total}, allowed at most {max}", raw_atom.element),
                            ))
                        }
                        None => {
                            return Err(ChemError::valence(
                                idx,
                                format!("unsupported charge {} on {}", raw_atom.charge, raw_atom.element),
                            ))
                        }
                    }
                }
                None => match free_valence(raw_atom.element, 0, used[idx]) {
                    Some(free) => free as u8,
                    None => {
                        return Err(ChemError::valence(
                            idx,
                            format!("{} has {} bonds beyond any allowed valence", raw_atom.element, used[idx]),
                        ))
                    }
                },
            }
        };
        atoms.push(Atom {
            element: raw_atom.element,
            charge: raw_atom.charge,
            aromatic: false,
            hydrogens,
            map: raw_atom.map,
        });
    }
    let bonds = raw
        .bonds
        .iter()
        .zip(&kekule)
        .map(|(b, &o)| Bond::new(b.a, b.b, BondOrder::from_integer(o).expect("orders are 1..=3")))
        .collect();
    let kekule_mol = Molecule::from_graph(atoms, bonds)?;
    Ok(aromaticity::perceive(kekule_mol))
}

/// Graph as written, without valence semantics; used for query patterns.
pub(crate) fn lenient(raw: &RawGraph) -> Result<Molecule, ChemError> {
    let atoms = raw
        .atoms
        .iter()
        .map(|a| Atom {
            element: a.element,
            charge: a.charge,
            aromatic: a.aromatic,
            hydrogens: a.hydrogens.unwrap_or(0),
            map: a.map,
        })
        .collect();
    let bonds = raw
        .bonds
        .iter()
        .map(|b| {
            let order = match b.order {
                Some(o) => o,
                None if raw.atoms[b.a].aromatic && raw.atoms[b.b].aromatic => BondOrder::Aromatic,
                None => BondOrder::Single,
            };
            Bond::new(b.a, b.b, order)
        })
        .collect();
    Molecule::from_graph(atoms, bonds)
}
