//! Regenerates `fixtures/helix40.pdb`.

use rdcdyn::structure::{ideal_helix, write_pdb};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/helix40.pdb");
    let mut text = String::from("REMARK   ideal poly-alanine alpha-helix, phi -57 psi -47\n");
    text.push_str(&write_pdb(&ideal_helix(40)));
    std::fs::write(path, text).expect("write fixture");
}
