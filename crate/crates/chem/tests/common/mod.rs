#![allow(dead_code)]

use fraglearn_chem::Molecule;
use rand::seq::SliceRandom;
use rand::Rng;

/// Mixed corpus: aliphatic, aromatic, heteroaromatic, fused, charged,
/// bracket atoms and high ring-closure numbers.
pub const CORPUS: &[&str] = &[
    "C",
    "CCO",
    "OCC",
    "C=CC(=O)OC",
    "C=CC(=O)OCC(CC)CCCC",
    "CC(C)(C)OC(=O)C=C",
    "C#N",
    "CC#CC",
    "c1ccccc1",
    "C1=CC=CC=C1",
    "Cc1ccccc1",
    "c1ccncc1",
    "c1cc[nH]c1",
    "c1ccoc1",
    "c1ccsc1",
    "c1ccc2ccccc2c1",
    "c1ccc2[nH]ccc2c1",
    "c1ccc2c(c1)ccc1ccccc12",
    "c1cnc[nH]1",
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
    "CC(=O)Oc1ccccc1C(=O)O",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "CC(=O)Nc1ccc(O)cc1",
    "C1CCCCC1",
    "C1CC2CCC1C2",
    "C12C3C4C1C5C2C3C45",
    "OCC1OC(O)C(O)C(O)C1O",
    "C[N+](C)(C)C",
    "CC(=O)[O-]",
    "[NH4+]",
    "CS(=O)(=O)N",
    "OP(=O)(O)O",
    "FC(F)(F)c1ccc(Cl)cc1Br",
    "ICCBr",
    "B(O)(O)c1ccccc1",
    "O=C1CCCCC1",
    "C1CC1C%10CC%10",
    "O=c1cc[nH]c(=O)[nH]1",
    "c1ccc(cc1)-c1ccccc1",
    "NCCN",
    "OCCOc1ccc(OCCO)cc1",
    "CC1(C)C2CCC1(C)C(C2)OC(=O)C=C",
];

pub fn permute(mol: &Molecule, rng: &mut impl Rng) -> Molecule {
    let mut order: Vec<usize> = (0..mol.num_atoms()).collect();
    order.shuffle(rng);
    mol.renumbered(&order)
}
