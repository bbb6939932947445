//! Protein backbone structures: PDB reading/writing, internuclear vectors,
//! dihedral mutations and backbone superposition metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::VectorType;

pub type Point = Vector3<f64>;

/// Covalent C'(i)–N(i+1) distance window; anything outside marks a chain gap.
pub const PEPTIDE_BOND_RANGE: (f64, f64) = (1.2, 1.5);
pub const NH_BOND: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomKind {
    N,
    H,
    C,
    O,
    CA,
    HA,
}

impl AtomKind {
    pub const ALL: [AtomKind; 6] = [AtomKind::N, AtomKind::H, AtomKind::CA, AtomKind::HA, AtomKind::C, AtomKind::O];

    pub fn pdb_name(self) -> &'static str {
        match self {
            AtomKind::N => "N",
            AtomKind::H => "H",
            AtomKind::C => "C",
            AtomKind::O => "O",
            AtomKind::CA => "CA",
            AtomKind::HA => "HA",
        }
    }

    fn element(self) -> &'static str {
        match self {
            AtomKind::N => "N",
            AtomKind::H | AtomKind::HA => "H",
            AtomKind::C | AtomKind::CA => "C",
            AtomKind::O => "O",
        }
    }

    fn from_pdb_name(name: &str) -> Option<Self> {
        match name {
            "N" => Some(AtomKind::N),
            "H" | "HN" => Some(AtomKind::H),
            "C" => Some(AtomKind::C),
            "O" => Some(AtomKind::O),
            "CA" => Some(AtomKind::CA),
            "HA" | "HA2" | "1HA" => Some(AtomKind::HA),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residue {
    pub seq: i32,
    pub name: String,
    atoms: BTreeMap<AtomKind, Point>,
}

impl Residue {
    pub fn new(seq: i32, name: impl Into<String>) -> Self {
        Self {
            seq,
            name: name.into(),
            atoms: BTreeMap::new(),
        }
    }

    pub fn atom(&self, kind: AtomKind) -> Option<&Point> {
        self.atoms.get(&kind)
    }

    pub fn set_atom(&mut self, kind: AtomKind, p: Point) {
        self.atoms.insert(kind, p);
    }

    pub fn atoms(&self) -> impl Iterator<Item = (AtomKind, &Point)> {
        self.atoms.iter().map(|(k, p)| (*k, p))
    }

    fn atoms_mut(&mut self) -> impl Iterator<Item = (&AtomKind, &mut Point)> {
        self.atoms.iter_mut()
    }

    fn require(&self, kind: AtomKind, context: &'static str) -> Result<Point> {
        self.atom(kind).copied().ok_or(Error::MissingAtom {
            residue: self.seq,
            atom: kind.pdb_name(),
            context,
        })
    }
}

/// Inclusive residue range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainRange {
    pub start: i32,
    pub end: i32,
}

impl DomainRange {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start > end {
            return Err(Error::Validation(format!("domain start {start} exceeds end {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, seq: i32) -> bool {
        (self.start..=self.end).contains(&seq)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub residue: i32,
    pub vector_type: VectorType,
    pub vector: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneStructure {
    pub chain: char,
    residues: Vec<Residue>,
    /// Residue numbers `i` such that `i` and its successor are not covalently joined.
    gaps: Vec<i32>,
}

impl BackboneStructure {
    pub fn new(chain: char, residues: Vec<Residue>) -> Result<Self> {
        for w in residues.windows(2) {
            if w[1].seq <= w[0].seq {
                return Err(Error::Validation(format!(
                    "residue numbers must increase strictly ({} follows {})",
                    w[1].seq, w[0].seq
                )));
            }
        }
        let gaps = detect_gaps(&residues);
        Ok(Self { chain, residues, gaps })
    }

    pub fn residues(&self) -> &[Residue] {
        &self.residues
    }

    pub fn gaps(&self) -> &[i32] {
        &self.gaps
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn first_seq(&self) -> Option<i32> {
        self.residues.first().map(|r| r.seq)
    }

    pub fn last_seq(&self) -> Option<i32> {
        self.residues.last().map(|r| r.seq)
    }

    pub fn index_of(&self, seq: i32) -> Option<usize> {
        self.residues.binary_search_by_key(&seq, |r| r.seq).ok()
    }

    pub fn residue(&self, seq: i32) -> Option<&Residue> {
        self.index_of(seq).map(|i| &self.residues[i])
    }

    /// True when `seq` and `seq + 1` are both present and covalently joined.
    pub fn is_connected(&self, seq: i32) -> bool {
        self.residue(seq).is_some() && self.residue(seq + 1).is_some() && !self.gaps.contains(&seq)
    }

    pub fn full_range(&self) -> Option<DomainRange> {
        Some(DomainRange {
            start: self.first_seq()?,
            end: self.last_seq()?,
        })
    }

    pub fn check_range(&self, range: &DomainRange) -> Result<()> {
        for seq in [range.start, range.end] {
            if self.residue(seq).is_none() {
                return Err(Error::UnknownResidue(seq));
            }
        }
        Ok(())
    }

    /// Residues inside `range`, as a new structure.
    pub fn subset(&self, range: &DomainRange) -> BackboneStructure {
        let residues = self.residues.iter().filter(|r| range.contains(r.seq)).cloned().collect();
        BackboneStructure::new(self.chain, residues).expect("subset of an ordered structure stays ordered")
    }

    /// Applies `f` to every atom coordinate.
    pub fn map_coords(&self, f: impl Fn(&Point) -> Point) -> BackboneStructure {
        let mut out = self.clone();
        for res in &mut out.residues {
            for (_, p) in res.atoms_mut() {
                *p = f(p);
            }
        }
        out
    }

    pub fn translate(&self, shift: &Point) -> BackboneStructure {
        self.map_coords(|p| p + shift)
    }

    /// Rotates all atoms by `rot` about `origin`.
    pub fn rotate_about(&self, rot: &Matrix3<f64>, origin: &Point) -> BackboneStructure {
        self.map_coords(|p| origin + rot * (p - origin))
    }

    /// N, CA, C' coordinates of residues in `range`, in residue order.
    pub fn backbone_coords(&self, range: &DomainRange) -> Result<Vec<(i32, AtomKind, Point)>> {
        let mut out = Vec::new();
        for res in self.residues.iter().filter(|r| range.contains(r.seq)) {
            for kind in [AtomKind::N, AtomKind::CA, AtomKind::C] {
                out.push((res.seq, kind, res.require(kind, "backbone RMSD")?));
            }
        }
        Ok(out)
    }

    pub fn backbone_centroid(&self, range: &DomainRange) -> Result<Point> {
        let coords = self.backbone_coords(range)?;
        if coords.is_empty() {
            return Err(Error::Validation(format!("no backbone atoms in {}-{}", range.start, range.end)));
        }
        Ok(coords.iter().map(|c| c.2).sum::<Point>() / coords.len() as f64)
    }
}

fn detect_gaps(residues: &[Residue]) -> Vec<i32> {
    let mut gaps = Vec::new();
    for w in residues.windows(2) {
        let joined = w[1].seq == w[0].seq + 1
            && match (w[0].atom(AtomKind::C), w[1].atom(AtomKind::N)) {
                (Some(c), Some(n)) => {
                    let d = (n - c).norm();
                    d >= PEPTIDE_BOND_RANGE.0 && d <= PEPTIDE_BOND_RANGE.1
                }
                _ => false,
            };
        if !joined {
            gaps.push(w[0].seq);
        }
    }
    gaps
}

// ---------------------------------------------------------------------------
// PDB reading and writing

struct AtomLine {
    name: String,
    alt_loc: char,
    res_name: String,
    chain: char,
    seq: i32,
    insertion: char,
    pos: Point,
    occupancy: f64,
}

fn column(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        ""
    } else {
        line.get(start..end).unwrap_or("")
    }
}

fn parse_atom_line(line: &str, lineno: usize) -> Result<AtomLine> {
    let err = |message: String| Error::Parse { line: lineno, message };
    let coord = |start: usize, end: usize, axis: &str| -> Result<f64> {
        let field = column(line, start, end).trim();
        field
            .parse::<f64>()
            .map_err(|_| err(format!("malformed {axis} coordinate {field:?}")))
    };
    let seq_field = column(line, 22, 26).trim();
    let seq = seq_field
        .parse::<i32>()
        .map_err(|_| err(format!("malformed residue number {seq_field:?}")))?;
    let occupancy = column(line, 54, 60).trim().parse::<f64>().unwrap_or(1.0);
    Ok(AtomLine {
        name: column(line, 12, 16).trim().to_string(),
        alt_loc: column(line, 16, 17).chars().next().unwrap_or(' '),
        res_name: column(line, 17, 20).trim().to_string(),
        chain: column(line, 21, 22).chars().next().unwrap_or(' '),
        seq,
        insertion: column(line, 26, 27).chars().next().unwrap_or(' '),
        pos: Point::new(coord(30, 38, "x")?, coord(38, 46, "y")?, coord(46, 54, "z")?),
        occupancy,
    })
}

/// Parses backbone atoms of one chain from PDB-format text.
///
/// Only the first MODEL is read and HETATM records are ignored. `chain`
/// selects a chain identifier; `None` takes the first chain in the file.
/// Alternate locations keep the highest-occupancy position. Amide protons
/// missing from the file are rebuilt from the peptide-plane geometry
/// (not for proline or the first residue).
pub fn parse_pdb(text: &str, chain: Option<char>) -> Result<BackboneStructure> {
    let mut selected: Option<char> = chain;
    let mut residues: Vec<Residue> = Vec::new();
    let mut occupancy: BTreeMap<(i32, AtomKind), f64> = BTreeMap::new();
    let mut saw_atom = false;

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.starts_with("ENDMDL") {
            if saw_atom {
                break;
            }
            continue;
        }
        if !line.starts_with("ATOM  ") && !line.starts_with("ATOM") {
            continue;
        }
        if line.starts_with("ATOM") && line.len() > 4 && !line[4..].starts_with(' ') {
            continue;
        }
        let atom = parse_atom_line(line, lineno)?;
        saw_atom = true;
        let chain_id = *selected.get_or_insert(atom.chain);
        if atom.chain != chain_id {
            continue;
        }
        if atom.insertion != ' ' {
            log::warn!("skipping insertion-coded residue {}{}", atom.seq, atom.insertion);
            continue;
        }
        let Some(kind) = AtomKind::from_pdb_name(&atom.name) else {
            continue;
        };
        if residues.last().map(|r| r.seq) != Some(atom.seq) {
            if let Some(last) = residues.last() {
                if atom.seq < last.seq {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("residue {} appears after {}", atom.seq, last.seq),
                    });
                }
            }
            residues.push(Residue::new(atom.seq, atom.res_name.clone()));
        }
        let res = residues.last_mut().unwrap();
        let key = (atom.seq, kind);
        let keep = match occupancy.get(&key) {
            None => true,
            Some(&prev) => atom.alt_loc != ' ' && atom.occupancy > prev,
        };
        if keep {
            occupancy.insert(key, atom.occupancy);
            res.set_atom(kind, atom.pos);
        }
    }
    if !saw_atom {
        return Err(Error::NoAtoms);
    }
    if residues.is_empty() {
        return Err(Error::Validation(format!("no backbone atoms for chain {:?}", selected.unwrap_or(' '))));
    }
    let mut structure = BackboneStructure::new(selected.unwrap_or('A'), residues)?;
    rebuild_amide_protons(&mut structure);
    Ok(structure)
}

/// Places a missing amide H in the C'(i-1)–N(i)–CA(i) plane, `NH_BOND` from N,
/// bisecting the external angle.
fn rebuild_amide_protons(s: &mut BackboneStructure) {
    for idx in 1..s.residues.len() {
        let prev_seq = s.residues[idx - 1].seq;
        if s.gaps.contains(&prev_seq) {
            continue;
        }
        let res = &s.residues[idx];
        if res.atom(AtomKind::H).is_some() || res.name == "PRO" {
            continue;
        }
        let (Some(c_prev), Some(n), Some(ca)) = (
            s.residues[idx - 1].atom(AtomKind::C).copied(),
            res.atom(AtomKind::N).copied(),
            res.atom(AtomKind::CA).copied(),
        ) else {
            continue;
        };
        let h = amide_proton(&c_prev, &n, &ca);
        s.residues[idx].set_atom(AtomKind::H, h);
    }
}

pub fn amide_proton(c_prev: &Point, n: &Point, ca: &Point) -> Point {
    let bisector = ((c_prev - n).normalize() + (ca - n).normalize()).normalize();
    n - bisector * NH_BOND
}

fn write_atoms(out: &mut String, s: &BackboneStructure, serial: &mut usize, b_factor: f64) {
    for res in &s.residues {
        for kind in AtomKind::ALL {
            if let Some(p) = res.atom(kind) {
                let name = kind.pdb_name();
                // four-character names start in column 13, shorter ones in 14
                let padded = if name.len() >= 4 { name.to_string() } else { format!(" {name:<3}") };
                let _ = writeln!(
                    out,
                    "ATOM  {:>5} {:<4} {:>3} {}{:>4}    {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
                    *serial % 100_000,
                    padded,
                    res.name,
                    s.chain,
                    res.seq,
                    p.x,
                    p.y,
                    p.z,
                    1.0,
                    b_factor,
                    kind.element()
                );
                *serial += 1;
            }
        }
    }
}

/// Serializes a structure as ATOM records.
pub fn write_pdb(s: &BackboneStructure) -> String {
    let mut out = String::new();
    let mut serial = 1;
    write_atoms(&mut out, s, &mut serial, 0.0);
    out.push_str("TER\nEND\n");
    out
}

/// Multi-model PDB text; each model's occupancy weight goes in the B-factor column.
pub fn write_models(models: &[(&BackboneStructure, f64)]) -> String {
    let mut out = String::new();
    for (i, (s, weight)) in models.iter().enumerate() {
        let _ = writeln!(out, "MODEL     {:>4}", i + 1);
        let mut serial = 1;
        write_atoms(&mut out, s, &mut serial, *weight);
        out.push_str("TER\nENDMDL\n");
    }
    out.push_str("END\n");
    out
}

// ---------------------------------------------------------------------------
// Internuclear vectors

/// Unit internuclear vectors for each requested type inside `range`.
///
/// N-H and CA-HA are keyed by their own residue; C'-N and C'-H are keyed by
/// the residue contributing C' and need the next residue inside `range`
/// without an intervening gap. Missing atoms skip the record.
pub fn build_vectors(s: &BackboneStructure, types: &[VectorType], range: &DomainRange) -> Vec<VectorRecord> {
    let mut out = Vec::new();
    for res in s.residues.iter().filter(|r| range.contains(r.seq)) {
        let next = if range.contains(res.seq + 1) && s.is_connected(res.seq) {
            s.residue(res.seq + 1)
        } else {
            None
        };
        for &vt in types {
            let pair = match vt {
                VectorType::NH => (res.atom(AtomKind::N), res.atom(AtomKind::H)),
                VectorType::CaHa => (res.atom(AtomKind::CA), res.atom(AtomKind::HA)),
                VectorType::CN => (res.atom(AtomKind::C), next.and_then(|n| n.atom(AtomKind::N))),
                VectorType::CH => (res.atom(AtomKind::C), next.and_then(|n| n.atom(AtomKind::H))),
            };
            match pair {
                (Some(a), Some(b)) => out.push(VectorRecord {
                    residue: res.seq,
                    vector_type: vt,
                    vector: (b - a).normalize(),
                }),
                _ => log::debug!("residue {}: no {} vector", res.seq, vt),
            }
        }
    }
    out.sort_by_key(|r| (r.residue, r.vector_type));
    out
}

// ---------------------------------------------------------------------------
// Dihedral mutations

pub fn dihedral(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    let b0 = a - b;
    let b1 = (c - b).normalize();
    let b2 = d - c;
    let v = b0 - b1 * b0.dot(&b1);
    let w = b2 - b1 * b2.dot(&b1);
    let x = v.dot(&w);
    let y = b1.cross(&v).dot(&w);
    y.atan2(x).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dihedral {
    Phi,
    Psi,
}

/// A dihedral change applied to one residue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    pub residue: i32,
    pub angle: Dihedral,
    pub degrees: f64,
}

impl BackboneStructure {
    pub fn phi(&self, seq: i32) -> Result<f64> {
        let idx = self.index_of(seq).ok_or(Error::UnknownResidue(seq))?;
        if idx == 0 || !self.is_connected(self.residues[idx - 1].seq) {
            return Err(Error::MissingAtom {
                residue: seq,
                atom: "C",
                context: "phi of preceding residue",
            });
        }
        let prev = &self.residues[idx - 1];
        let res = &self.residues[idx];
        Ok(dihedral(
            &prev.require(AtomKind::C, "phi")?,
            &res.require(AtomKind::N, "phi")?,
            &res.require(AtomKind::CA, "phi")?,
            &res.require(AtomKind::C, "phi")?,
        ))
    }

    pub fn psi(&self, seq: i32) -> Result<f64> {
        let idx = self.index_of(seq).ok_or(Error::UnknownResidue(seq))?;
        if !self.is_connected(seq) {
            return Err(Error::MissingAtom {
                residue: seq + 1,
                atom: "N",
                context: "psi of following residue",
            });
        }
        let res = &self.residues[idx];
        let next = &self.residues[idx + 1];
        Ok(dihedral(
            &res.require(AtomKind::N, "psi")?,
            &res.require(AtomKind::CA, "psi")?,
            &res.require(AtomKind::C, "psi")?,
            &next.require(AtomKind::N, "psi")?,
        ))
    }

    /// Changes phi of `seq` by `degrees`, moving everything C-terminal of the N–CA bond.
    pub fn rotate_phi(&self, seq: i32, degrees: f64) -> Result<BackboneStructure> {
        self.phi(seq)?;
        let idx = self.index_of(seq).unwrap();
        let res = &self.residues[idx];
        let n = res.require(AtomKind::N, "phi")?;
        let ca = res.require(AtomKind::CA, "phi")?;
        Ok(self.rotate_fragment(idx, &[AtomKind::CA, AtomKind::HA, AtomKind::C, AtomKind::O], &n, &ca, degrees))
    }

    /// Changes psi of `seq` by `degrees`, moving everything C-terminal of the CA–C' bond.
    pub fn rotate_psi(&self, seq: i32, degrees: f64) -> Result<BackboneStructure> {
        self.psi(seq)?;
        let idx = self.index_of(seq).unwrap();
        let res = &self.residues[idx];
        let ca = res.require(AtomKind::CA, "psi")?;
        let c = res.require(AtomKind::C, "psi")?;
        Ok(self.rotate_fragment(idx, &[AtomKind::C, AtomKind::O], &ca, &c, degrees))
    }

    pub fn apply_mutation(&self, m: &Mutation) -> Result<BackboneStructure> {
        match m.angle {
            Dihedral::Phi => self.rotate_phi(m.residue, m.degrees),
            Dihedral::Psi => self.rotate_psi(m.residue, m.degrees),
        }
    }

    pub fn apply_mutations(&self, mutations: &[Mutation]) -> Result<BackboneStructure> {
        mutations.iter().try_fold(self.clone(), |s, m| s.apply_mutation(m))
    }

    /// Rotates the listed atoms of residue `idx` and every later residue about
    /// the axis `from → to`.
    fn rotate_fragment(&self, idx: usize, own: &[AtomKind], from: &Point, to: &Point, degrees: f64) -> BackboneStructure {
        let axis = Unit::new_normalize(to - from);
        let rot = Rotation3::from_axis_angle(&axis, degrees.to_radians());
        let apply = |p: &mut Point| *p = from + rot * (*p - from);
        let mut out = self.clone();
        for (kind, p) in out.residues[idx].atoms_mut() {
            if own.contains(kind) {
                apply(p);
            }
        }
        for res in &mut out.residues[idx + 1..] {
            for (_, p) in res.atoms_mut() {
                apply(p);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Ideal helix fixture

/// Standard peptide geometry (Å, degrees).
mod geometry {
    pub const N_CA: f64 = 1.458;
    pub const CA_C: f64 = 1.525;
    pub const C_N: f64 = 1.329;
    pub const C_O: f64 = 1.231;
    pub const CA_HA: f64 = 1.09;
    pub const ANGLE_N_CA_C: f64 = 111.2;
    pub const ANGLE_CA_C_N: f64 = 116.2;
    pub const ANGLE_C_N_CA: f64 = 121.7;
    pub const ANGLE_CA_C_O: f64 = 120.5;
    pub const ANGLE_CA_N_H: f64 = 119.0;
    pub const OMEGA: f64 = 180.0;
}

/// Places `d` so that |cd| = `bond`, angle b-c-d = `angle`, dihedral a-b-c-d = `torsion`.
fn place_atom(a: &Point, b: &Point, c: &Point, bond: f64, angle: f64, torsion: f64) -> Point {
    let (angle, torsion) = (angle.to_radians(), torsion.to_radians());
    let bc = (c - b).normalize();
    let n = (b - a).cross(&bc).normalize();
    let m = Matrix3::from_columns(&[bc, n.cross(&bc), n]);
    let d2 = Point::new(-bond * angle.cos(), bond * angle.sin() * torsion.cos(), bond * angle.sin() * torsion.sin());
    c + m * d2
}

fn alpha_proton(n: &Point, ca: &Point, c: &Point) -> Point {
    let b1 = (n - ca).normalize();
    let b2 = (c - ca).normalize();
    let bis = (b1 + b2).normalize();
    let perp = b1.cross(&b2).normalize();
    // half of the tetrahedral angle between the two remaining substituents
    let half = (109.47f64 / 2.0).to_radians();
    ca + (-bis * half.cos() + perp * half.sin()).normalize() * geometry::CA_HA
}

/// Poly-alanine backbone with uniform phi/psi (trans peptide bonds), numbered from 1.
pub fn ideal_backbone(n_residues: usize, phi: f64, psi: f64) -> BackboneStructure {
    use geometry::*;
    let t = ANGLE_N_CA_C.to_radians();
    let mut n = Vec::with_capacity(n_residues);
    let mut ca = Vec::with_capacity(n_residues);
    let mut c = Vec::with_capacity(n_residues);
    n.push(Point::zeros());
    ca.push(Point::new(N_CA, 0.0, 0.0));
    c.push(ca[0] + Point::new(-t.cos(), t.sin(), 0.0) * CA_C);
    for i in 1..n_residues {
        let n_i = place_atom(&n[i - 1], &ca[i - 1], &c[i - 1], C_N, ANGLE_CA_C_N, psi);
        let ca_i = place_atom(&ca[i - 1], &c[i - 1], &n_i, N_CA, ANGLE_C_N_CA, OMEGA);
        let c_i = place_atom(&c[i - 1], &n_i, &ca_i, CA_C, ANGLE_N_CA_C, phi);
        n.push(n_i);
        ca.push(ca_i);
        c.push(c_i);
    }
    let residues = (0..n_residues)
        .map(|i| {
            let mut res = Residue::new(i as i32 + 1, "ALA");
            res.set_atom(AtomKind::N, n[i]);
            res.set_atom(AtomKind::CA, ca[i]);
            res.set_atom(AtomKind::C, c[i]);
            res.set_atom(AtomKind::HA, alpha_proton(&n[i], &ca[i], &c[i]));
            res.set_atom(AtomKind::O, place_atom(&n[i], &ca[i], &c[i], C_O, ANGLE_CA_C_O, psi + 180.0));
            let h = if i == 0 {
                place_atom(&c[0], &ca[0], &n[0], NH_BOND, ANGLE_CA_N_H, phi + 180.0)
            } else {
                amide_proton(&c[i - 1], &n[i], &ca[i])
            };
            res.set_atom(AtomKind::H, h);
            res
        })
        .collect();
    BackboneStructure::new('A', residues).expect("generated residues are ordered")
}

/// Ideal right-handed α-helix (phi = −57°, psi = −47°).
pub fn ideal_helix(n_residues: usize) -> BackboneStructure {
    ideal_backbone(n_residues, -57.0, -47.0)
}

/// Bundled 40-residue ideal poly-alanine α-helix.
pub const HELIX40_PDB: &str = include_str!("../fixtures/helix40.pdb");

pub fn helix40() -> BackboneStructure {
    parse_pdb(HELIX40_PDB, Some('A')).expect("bundled fixture parses")
}

// ---------------------------------------------------------------------------
// Superposition

fn centroid(points: &[Point]) -> Point {
    points.iter().sum::<Point>() / points.len() as f64
}

fn raw_rmsd(a: &[Point], b: &[Point]) -> f64 {
    (a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum::<f64>() / a.len() as f64).sqrt()
}

/// Optimal proper rotation `r` and translation `t` such that `r·m + t ≈ target`.
pub fn kabsch(mobile: &[Point], target: &[Point]) -> (Matrix3<f64>, Point) {
    let cm = centroid(mobile);
    let ct = centroid(target);
    let mut h = Matrix3::zeros();
    for (m, t) in mobile.iter().zip(target) {
        h += (m - cm) * (t - ct).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (v_t.transpose() * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Point::new(1.0, 1.0, d));
    let r = v_t.transpose() * fix * u.transpose();
    (r, ct - r * cm)
}

fn paired_backbone(a: &BackboneStructure, b: &BackboneStructure, range: &DomainRange) -> Result<(Vec<Point>, Vec<Point>)> {
    let ca = a.backbone_coords(range)?;
    let cb = b.backbone_coords(range)?;
    if ca.len() != cb.len() {
        return Err(Error::Mismatch(format!("{} vs {} backbone atoms in range {}-{}", ca.len(), cb.len(), range.start, range.end)));
    }
    if ca.is_empty() {
        return Err(Error::Mismatch(format!("no backbone atoms in range {}-{}", range.start, range.end)));
    }
    for (x, y) in ca.iter().zip(&cb) {
        if (x.0, x.1) != (y.0, y.1) {
            return Err(Error::Mismatch(format!("atom sets differ at residue {} / {}", x.0, y.0)));
        }
    }
    Ok((ca.into_iter().map(|c| c.2).collect(), cb.into_iter().map(|c| c.2).collect()))
}

/// Backbone (N, CA, C') RMSD after optimal rotation and translation.
pub fn kabsch_rmsd(a: &BackboneStructure, b: &BackboneStructure, range: &DomainRange) -> Result<f64> {
    let (pa, pb) = paired_backbone(a, b, range)?;
    Ok(kabsch_rmsd_points(&pa, &pb))
}

pub fn kabsch_rmsd_points(a: &[Point], b: &[Point]) -> f64 {
    let (r, t) = kabsch(a, b);
    let moved: Vec<Point> = a.iter().map(|p| r * p + t).collect();
    raw_rmsd(&moved, b)
}

/// Backbone RMSD after optimal translation only (centroid alignment).
pub fn translation_only_rmsd(a: &BackboneStructure, b: &BackboneStructure, range: &DomainRange) -> Result<f64> {
    let (pa, pb) = paired_backbone(a, b, range)?;
    Ok(translation_only_rmsd_points(&pa, &pb))
}

pub fn translation_only_rmsd_points(a: &[Point], b: &[Point]) -> f64 {
    let shift = centroid(b) - centroid(a);
    let moved: Vec<Point> = a.iter().map(|p| p + shift).collect();
    raw_rmsd(&moved, b)
}
