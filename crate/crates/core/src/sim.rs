//! Synthetic RDC data: per-state RDCs, occupancy averaging and uniform noise.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{build_vectors, AtomKind, BackboneStructure, DomainRange};
use crate::tensor::{rdc_quadratic_form, tensor_from_principal, DmaxTable, PrincipalFrame, VectorType};

/// Tolerance on occupancy sums.
pub const OCCUPANCY_TOLERANCE: f64 = 1e-9;
/// Maximum static-domain coordinate deviation across states, Å.
pub const STATIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RdcKey {
    pub residue: i32,
    pub vector_type: VectorType,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub value: f64,
    pub error: Option<f64>,
}

/// Assigned RDCs (Hz) for one alignment medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdcSet {
    medium: String,
    observations: BTreeMap<RdcKey, Observation>,
}

impl RdcSet {
    pub fn new(medium: impl Into<String>) -> Result<Self> {
        let medium = medium.into();
        if medium.trim().is_empty() {
            return Err(Error::Validation("medium identifier must be non-empty".into()));
        }
        Ok(Self {
            medium,
            observations: BTreeMap::new(),
        })
    }

    pub fn medium(&self) -> &str {
        &self.medium
    }

    pub fn with_medium(mut self, medium: impl Into<String>) -> Result<Self> {
        let medium = medium.into();
        if medium.trim().is_empty() {
            return Err(Error::Validation("medium identifier must be non-empty".into()));
        }
        self.medium = medium;
        Ok(self)
    }

    /// Inserts an observation; duplicate keys are rejected.
    pub fn insert(&mut self, residue: i32, vector_type: VectorType, value: f64, error: Option<f64>) -> Result<()> {
        let key = RdcKey { residue, vector_type };
        if self.observations.contains_key(&key) {
            return Err(Error::Validation(format!("duplicate RDC for residue {residue} {vector_type}")));
        }
        self.observations.insert(key, Observation { value, error });
        Ok(())
    }

    pub fn get(&self, residue: i32, vector_type: VectorType) -> Option<&Observation> {
        self.observations.get(&RdcKey { residue, vector_type })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RdcKey, &Observation)> {
        self.observations.iter()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Observations whose residue falls in `range`.
    pub fn restrict(&self, range: &DomainRange) -> RdcSet {
        RdcSet {
            medium: self.medium.clone(),
            observations: self
                .observations
                .iter()
                .filter(|(k, _)| range.contains(k.residue))
                .map(|(k, v)| (*k, *v))
                .collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RdcRow {
    medium: String,
    residue: i32,
    vector_type: String,
    value_hz: f64,
    error_hz: Option<f64>,
}

/// Writes sets as CSV rows `medium,residue,vector_type,value_hz,error_hz`.
pub fn write_rdc_csv<W: Write>(writer: W, sets: &[&RdcSet]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for set in sets {
        for (k, obs) in set.iter() {
            w.serialize(RdcRow {
                medium: set.medium.clone(),
                residue: k.residue,
                vector_type: k.vector_type.label().to_string(),
                value_hz: obs.value,
                error_hz: obs.error,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads RDC CSV rows, one set per distinct medium in order of appearance.
pub fn read_rdc_csv<R: Read>(reader: R) -> Result<Vec<RdcSet>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut sets: Vec<RdcSet> = Vec::new();
    for row in r.deserialize() {
        let row: RdcRow = row?;
        let vt: VectorType = row.vector_type.parse()?;
        let idx = match sets.iter().position(|s| s.medium == row.medium) {
            Some(i) => i,
            None => {
                sets.push(RdcSet::new(row.medium.clone())?);
                sets.len() - 1
            }
        };
        sets[idx].insert(row.residue, vt, row.value_hz, row.error_hz)?;
    }
    Ok(sets)
}

/// REDCAT-style listing: `x1 y1 z1 x2 y2 z2 rdc dmax error` per vector.
pub fn write_redcat_listing(s: &BackboneStructure, set: &RdcSet, dmax: &DmaxTable) -> String {
    let mut out = String::new();
    for (k, obs) in set.iter() {
        let Some(res) = s.residue(k.residue) else { continue };
        let next = s.residue(k.residue + 1);
        let pair = match k.vector_type {
            VectorType::NH => (res.atom(AtomKind::N), res.atom(AtomKind::H)),
            VectorType::CaHa => (res.atom(AtomKind::CA), res.atom(AtomKind::HA)),
            VectorType::CN => (res.atom(AtomKind::C), next.and_then(|n| n.atom(AtomKind::N))),
            VectorType::CH => (res.atom(AtomKind::C), next.and_then(|n| n.atom(AtomKind::H))),
        };
        if let (Some(a), Some(b)) = pair {
            out.push_str(&format!(
                "{:.3} {:.3} {:.3} {:.3} {:.3} {:.3} {:.4} {:.1} {:.3}\n",
                a.x,
                a.y,
                a.z,
                b.x,
                b.y,
                b.z,
                obs.value,
                dmax.get(k.vector_type),
                obs.error.unwrap_or(0.0)
            ));
        }
    }
    out
}

/// RDCs of a single structure under one order tensor.
pub fn simulate_rdcs(
    s: &BackboneStructure,
    frame: &PrincipalFrame,
    types: &[VectorType],
    range: &DomainRange,
    dmax: &DmaxTable,
    medium: &str,
) -> Result<RdcSet> {
    let tensor = tensor_from_principal(frame)?;
    let mut set = RdcSet::new(medium)?;
    for rec in build_vectors(s, types, range) {
        let d = dmax.get(rec.vector_type) * rdc_quadratic_form(&tensor, &rec.vector);
        set.insert(rec.residue, rec.vector_type, d, None)?;
    }
    Ok(set)
}

/// Occupancy-weighted average `Σ ρ_i · D_i` over the keys common to all sets.
pub fn average_rdcs(sets: &[RdcSet], occupancies: &[f64]) -> Result<RdcSet> {
    if sets.is_empty() || sets.len() != occupancies.len() {
        return Err(Error::Validation(format!("{} sets but {} occupancies", sets.len(), occupancies.len())));
    }
    validate_occupancies(occupancies)?;
    let first = &sets[0];
    let mut out = RdcSet::new(first.medium.clone())?;
    let mut dropped = 0usize;
    for key in first.observations.keys() {
        let mut sum = 0.0;
        let mut present = true;
        for (set, rho) in sets.iter().zip(occupancies) {
            match set.observations.get(key) {
                Some(obs) => sum += rho * obs.value,
                None => {
                    present = false;
                    break;
                }
            }
        }
        if present {
            out.observations.insert(*key, Observation { value: sum, error: None });
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::info!("averaging used the key intersection; {dropped} keys dropped");
    }
    if out.is_empty() {
        return Err(Error::Validation("RDC sets share no keys".into()));
    }
    Ok(out)
}

pub fn validate_occupancies(occupancies: &[f64]) -> Result<()> {
    if occupancies.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Validation(format!("occupancies must lie in [0, 1]: {occupancies:?}")));
    }
    let total: f64 = occupancies.iter().sum();
    if (total - 1.0).abs() > OCCUPANCY_TOLERANCE {
        return Err(Error::Validation(format!("occupancies sum to {total}, not 1")));
    }
    Ok(())
}

/// Adds independent uniform noise in `[-half_width, half_width]` to every value
/// and records `half_width` as the error bound.
pub fn add_noise(set: &RdcSet, half_width: f64, seed: u64) -> Result<RdcSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise_with(set, half_width, &mut rng)
}

fn add_noise_with(set: &RdcSet, half_width: f64, rng: &mut ChaCha8Rng) -> Result<RdcSet> {
    if half_width.is_nan() || half_width < 0.0 {
        return Err(Error::Validation(format!("noise half-width must be non-negative, got {half_width}")));
    }
    if half_width == 0.0 {
        return Ok(set.clone());
    }
    let dist = Uniform::new_inclusive(-half_width, half_width).expect("finite bounds");
    let mut out = set.clone();
    for obs in out.observations.values_mut() {
        obs.value += dist.sample(rng);
        obs.error = Some(half_width);
    }
    Ok(out)
}

/// A rigid-domain dynamics model: discrete states with relative occupancies.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsModel {
    pub states: Vec<BackboneStructure>,
    pub occupancies: Vec<f64>,
    pub static_domain: DomainRange,
    pub dynamic_domain: DomainRange,
}

impl DynamicsModel {
    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() || self.states.len() != self.occupancies.len() {
            return Err(Error::Validation(format!(
                "{} states but {} occupancies",
                self.states.len(),
                self.occupancies.len()
            )));
        }
        validate_occupancies(&self.occupancies)?;
        let reference = &self.states[0];
        reference.check_range(&self.static_domain)?;
        reference.check_range(&self.dynamic_domain)?;
        let numbering: Vec<i32> = reference.residues().iter().map(|r| r.seq).collect();
        for (i, state) in self.states.iter().enumerate().skip(1) {
            let other: Vec<i32> = state.residues().iter().map(|r| r.seq).collect();
            if other != numbering {
                return Err(Error::Mismatch(format!("state {} has different residue numbering", i + 1)));
            }
            for (a, b) in reference.residues().iter().zip(state.residues()) {
                if !self.static_domain.contains(a.seq) {
                    continue;
                }
                for ((ka, pa), (kb, pb)) in a.atoms().zip(b.atoms()) {
                    if ka != kb || (pa - pb).norm() > STATIC_TOLERANCE {
                        return Err(Error::Mismatch(format!(
                            "static domain differs in state {} at residue {}",
                            i + 1,
                            a.seq
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Alignment of one medium. Homogeneous alignment applies one frame to
/// every state; `state_frames` (one per state) models heterogeneous alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub name: String,
    pub frame: PrincipalFrame,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_frames: Option<Vec<PrincipalFrame>>,
}

impl Medium {
    pub fn new(name: impl Into<String>, frame: PrincipalFrame) -> Self {
        Self {
            name: name.into(),
            frame,
            state_frames: None,
        }
    }

    fn frame_for_state(&self, state: usize) -> &PrincipalFrame {
        self.state_frames.as_ref().and_then(|f| f.get(state)).unwrap_or(&self.frame)
    }
}

/// Per medium: simulate each state over the whole chain, average with the
/// model occupancies, then add noise. Medium `j` draws noise from stream `j`
/// of a generator seeded with `seed`.
pub fn simulate_dynamics(
    model: &DynamicsModel,
    media: &[Medium],
    types: &[VectorType],
    noise_half_width: f64,
    seed: u64,
    dmax: &DmaxTable,
) -> Result<Vec<RdcSet>> {
    model.validate()?;
    if media.is_empty() {
        return Err(Error::Validation("at least one medium is required".into()));
    }
    for m in media {
        if let Some(frames) = &m.state_frames {
            if frames.len() != model.states.len() {
                return Err(Error::Validation(format!(
                    "medium {} has {} state frames for {} states",
                    m.name,
                    frames.len(),
                    model.states.len()
                )));
            }
        }
    }
    let range = model.states[0].full_range().expect("validated non-empty");
    media
        .par_iter()
        .enumerate()
        .map(|(j, medium)| {
            let per_state = model
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| simulate_rdcs(s, medium.frame_for_state(i), types, &range, dmax, &medium.name))
                .collect::<Result<Vec<_>>>()?;
            let averaged = average_rdcs(&per_state, &model.occupancies)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            add_noise_with(&averaged, noise_half_width, &mut rng)
        })
        .collect()
}
