use std::fmt::Write as _;

use crate::kekule::free_valence;
use crate::molecule::{BondOrder, Molecule};

/// Hydrogen count a parser infers for an atom written without brackets, or
/// `None` when the atom cannot be written in the organic subset.
fn inferred_hydrogens(mol: &Molecule, idx: usize) -> Option<u8> {
    let atom = mol.atom(idx);
    if atom.element.aromatic_symbol().is_none() && atom.aromatic {
        return None;
    }
    let used = mol.base_valence(idx);
    let free = free_valence(atom.element, 0, used)?;
    if atom.aromatic {
        Some(free.saturating_sub(1) as u8)
    } else {
        Some(free as u8)
    }
}

fn atom_text(mol: &Molecule, idx: usize, out: &mut String) {
    let atom = mol.atom(idx);
    if atom.is_dummy() {
        if atom.map > 0 {
            let _ = write!(out, "[*:{}]", atom.map);
        } else {
            out.push('*');
        }
        return;
    }
    let symbol = if atom.aromatic {
        atom.element.aromatic_symbol().unwrap_or(atom.element.symbol())
    } else {
        atom.element.symbol()
    };
    let bracket = atom.charge != 0 || inferred_hydrogens(mol, idx) != Some(atom.hydrogens);
    if !bracket {
        out.push_str(symbol);
        return;
    }
    out.push('[');
    out.push_str(symbol);
    match atom.hydrogens {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    out.push(']');
}

fn bond_text(mol: &Molecule, bond: usize) -> &'static str {
    let b = mol.bond(bond);
    match b.order {
        BondOrder::Aromatic => "",
        BondOrder::Single => {
            if mol.atom(b.a).aromatic && mol.atom(b.b).aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn ring_digit(digit: u32, out: &mut String) {
    if digit < 10 {
        let _ = write!(out, "{digit}");
    } else {
        let _ = write!(out, "%{digit:02}");
    }
}

struct Plan {
    children: Vec<Vec<(usize, usize)>>,
    ring_open: Vec<Vec<(usize, usize)>>,
    ring_close: Vec<Vec<(usize, usize)>>,
}

/// Writes SMILES following a total atom `rank`: depth-first from the lowest
/// ranked atom, branches in rank order. Returns the text and the atom visit
/// order.
pub(crate) fn write_ranked(mol: &Molecule, rank: &[usize]) -> (String, Vec<usize>) {
    let n = mol.num_atoms();
    let mut sorted_neighbors: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            let mut v = mol.neighbors(i).to_vec();
            v.sort_by_key(|&(nb, _)| rank[nb]);
            v
        })
        .collect();

    let start = (0..n).min_by_key(|&i| rank[i]).expect("molecule has atoms");
    let mut plan = Plan {
        children: vec![Vec::new(); n],
        ring_open: vec![Vec::new(); n],
        ring_close: vec![Vec::new(); n],
    };
    let mut visited = vec![false; n];
    let mut bond_done = vec![false; mol.num_bonds()];
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    visited[start] = true;
    while let Some(frame) = stack.last_mut() {
        let (u, cursor) = *frame;
        if cursor >= sorted_neighbors[u].len() {
            stack.pop();
            continue;
        }
        frame.1 += 1;
        let (v, bond) = sorted_neighbors[u][cursor];
        if bond_done[bond] {
            continue;
        }
        bond_done[bond] = true;
        if visited[v] {
            plan.ring_open[v].push((u, bond));
            plan.ring_close[u].push((v, bond));
        } else {
            visited[v] = true;
            plan.children[u].push((v, bond));
            stack.push((v, 0));
        }
    }
    for list in plan.ring_open.iter_mut() {
        list.sort_by_key(|&(p, _)| rank[p]);
    }
    sorted_neighbors.clear();

    let mut out = String::with_capacity(n * 2);
    let mut order = Vec::with_capacity(n);
    let mut digits_in_use: Vec<bool> = vec![false; 100];
    let mut bond_digit = vec![0u32; mol.num_bonds()];
    emit(mol, start, &plan, &mut out, &mut order, &mut digits_in_use, &mut bond_digit);
    (out, order)
}

fn emit(
    mol: &Molecule,
    u: usize,
    plan: &Plan,
    out: &mut String,
    order: &mut Vec<usize>,
    digits_in_use: &mut [bool],
    bond_digit: &mut [u32],
) {
    atom_text(mol, u, out);
    order.push(u);
    let mut released = Vec::new();
    for &(_, bond) in &plan.ring_close[u] {
        ring_digit(bond_digit[bond], out);
        released.push(bond_digit[bond]);
    }
    for &(_, bond) in &plan.ring_open[u] {
        let digit = (1..100u32).find(|&d| !digits_in_use[d as usize]).expect("fewer than 99 open rings");
        digits_in_use[digit as usize] = true;
        bond_digit[bond] = digit;
        out.push_str(bond_text(mol, bond));
        ring_digit(digit, out);
    }
    for d in released {
        digits_in_use[d as usize] = false;
    }
    let children = &plan.children[u];
    for (i, &(child, bond)) in children.iter().enumerate() {
        let last = i + 1 == children.len();
        if !last {
            out.push('(');
        }
        out.push_str(bond_text(mol, bond));
        emit(mol, child, plan, out, order, digits_in_use, bond_digit);
        if !last {
            out.push(')');
        }
    }
}
