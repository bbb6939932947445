//! Run configuration. TOML with nested sections; unknown keys are rejected
//! and every default is written back out in the resolved config.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rdcdyn::ensemble::ValidationThresholds;
use rdcdyn::profile::OnsetConfig;
use rdcdyn::scenario::{ARC_DYNAMIC, ARC_HINGE, ARC_STATIC};
use rdcdyn::sim::Medium;
use rdcdyn::solver::SolverConfig;
use rdcdyn::structure::{Dihedral, Mutation};
use rdcdyn::tensor::parse_tensor_file;
use rdcdyn::{DomainRange, PrincipalFrame, VectorType};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Half-width of the uniform noise added to simulated RDCs, Hz.
    #[serde(default = "default_noise")]
    pub noise_hz: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_types")]
    pub vector_types: Vec<VectorType>,
    #[serde(default = "default_true")]
    pub allow_network: bool,
    #[serde(default)]
    pub structure: StructureSource,
    #[serde(default)]
    pub domains: Domains,
    #[serde(default)]
    pub media: Vec<MediumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub validation: ValidationThresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_seed() -> u64 {
    1
}

fn default_noise() -> f64 {
    1.0
}

fn default_out() -> PathBuf {
    PathBuf::from("rdcdyn-out")
}

fn default_types() -> Vec<VectorType> {
    VectorType::ALL.to_vec()
}

fn default_true() -> bool {
    true
}

/// Exactly one of `builtin`, `path` or `accession`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accession: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<char>,
}

impl Default for StructureSource {
    fn default() -> Self {
        Self {
            builtin: Some("helix40".into()),
            path: None,
            accession: None,
            chain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domains {
    #[serde(rename = "static")]
    pub static_domain: [i32; 2],
    pub dynamic: [i32; 2],
}

impl Default for Domains {
    fn default() -> Self {
        Self {
            static_domain: [ARC_STATIC.0, ARC_STATIC.1],
            dynamic: [ARC_DYNAMIC.0, ARC_DYNAMIC.1],
        }
    }
}

impl Domains {
    pub fn static_range(&self) -> DomainRange {
        DomainRange {
            start: self.static_domain[0],
            end: self.static_domain[1],
        }
    }

    pub fn dynamic_range(&self) -> DomainRange {
        DomainRange {
            start: self.dynamic[0],
            end: self.dynamic[1],
        }
    }
}

/// A medium given either by principal order parameters plus z-y-z angles,
/// or by one line of a five-element tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub name: String,
    /// (s_xx, s_yy, s_zz)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<[f64; 3]>,
    /// (alpha, beta, gamma) in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl MediumConfig {
    pub fn to_medium(&self) -> Result<Medium, CliError> {
        let frame = match (&self.order, &self.tensor_file) {
            (Some(o), None) => {
                let e = self.euler.unwrap_or([0.0; 3]);
                PrincipalFrame::new(o[0], o[1], o[2], e[0], e[1], e[2])
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Lib(e.into()))?;
                let tensors = parse_tensor_file(&text).map_err(|e| CliError::Config(format!("media.{}.tensor_file: {e}", self.name)))?;
                let i = self.index.unwrap_or(0);
                tensors
                    .get(i)
                    .ok_or_else(|| CliError::Config(format!("media.{}.index: {} has {} tensors", self.name, path.display(), tensors.len())))?
                    .eigendecompose()
            }
            _ => {
                return Err(CliError::Config(format!(
                    "media.{}: give exactly one of order or tensor_file",
                    self.name
                )))
            }
        };
        frame
            .validate()
            .map_err(|e| CliError::Config(format!("media.{}: {e}", self.name)))?;
        Ok(Medium::new(self.name.clone(), frame))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub occupancies: Vec<f64>,
    pub states: Vec<StateConfig>,
}

/// A state as dihedral changes to the template, or a separate PDB file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutations: Vec<Mutation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdb: Option<PathBuf>,
}

/// Existing RDC files (and optionally their truth manifest) instead of simulation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rdc_files: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub states: usize,
    pub parsimonious: bool,
    pub max_states: usize,
    pub optimizer: SolverConfig,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            states: 2,
            parsimonious: false,
            max_states: 3,
            optimizer: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    /// Residues between the onset and the fragment that is classified.
    pub offset: i32,
    pub onset: OnsetConfig,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            offset: 2,
            onset: OnsetConfig::default(),
        }
    }
}

/// Matrix of 2-state arc cells: every angle x occupancy pair x state count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub angles: Vec<f64>,
    #[serde(default)]
    pub occupancies: Vec<[f64; 2]>,
    #[serde(default = "default_hinge")]
    pub hinge: i32,
    #[serde(default = "default_dihedral")]
    pub dihedral: Dihedral,
    #[serde(default = "default_state_counts")]
    pub state_counts: Vec<usize>,
}

fn default_hinge() -> i32 {
    ARC_HINGE
}

fn default_dihedral() -> Dihedral {
    Dihedral::Phi
}

fn default_state_counts() -> Vec<usize> {
    vec![2]
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`; relative paths inside it are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = std::path::absolute(path.parent().unwrap_or(Path::new(""))).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        if let Some(p) = self.structure.path.as_mut() {
            fix(p);
        }
        for m in &mut self.media {
            if let Some(p) = m.tensor_file.as_mut() {
                fix(p);
            }
        }
        if let Some(model) = self.model.as_mut() {
            for s in &mut model.states {
                if let Some(p) = s.pdb.as_mut() {
                    fix(p);
                }
            }
        }
        self.data.rdc_files.iter_mut().for_each(fix);
        if let Some(p) = self.data.truth_file.as_mut() {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// Checks everything that can be checked without reading other files.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if !self.noise_hz.is_finite() || self.noise_hz < 0.0 {
            return bad("noise_hz", format!("must be a finite non-negative number, got {}", self.noise_hz));
        }
        if self.vector_types.is_empty() {
            return bad("vector_types", "at least one vector type is required".into());
        }
        let s = &self.structure;
        let sources = [s.builtin.is_some(), s.path.is_some(), s.accession.is_some()];
        if sources.iter().filter(|&&x| x).count() != 1 {
            return bad("structure", "give exactly one of builtin, path or accession".into());
        }
        if let Some(b) = &s.builtin {
            if b != "helix40" {
                return bad("structure.builtin", format!("unknown builtin {b:?} (available: helix40)"));
            }
        }
        if let Some(a) = &s.accession {
            rdcdyn::fetch::validate_accession(a).map_err(|e| CliError::Config(format!("structure.accession: {e}")))?;
        }
        let st = DomainRange::new(self.domains.static_domain[0], self.domains.static_domain[1])
            .map_err(|e| CliError::Config(format!("domains.static: {e}")))?;
        let dy = DomainRange::new(self.domains.dynamic[0], self.domains.dynamic[1])
            .map_err(|e| CliError::Config(format!("domains.dynamic: {e}")))?;
        if st.start <= dy.end && dy.start <= st.end {
            return bad("domains", "static and dynamic domains overlap".into());
        }
        let mut names = HashSet::new();
        for (i, m) in self.media.iter().enumerate() {
            if m.name.trim().is_empty() {
                return bad(&format!("media[{i}].name"), "must not be empty".into());
            }
            if !names.insert(m.name.as_str()) {
                return bad(&format!("media[{i}].name"), format!("duplicate medium {:?}", m.name));
            }
            if m.order.is_some() == m.tensor_file.is_some() {
                return bad(&format!("media[{i}]"), "give exactly one of order or tensor_file".into());
            }
        }
        if let Some(model) = &self.model {
            if model.states.is_empty() || model.states.len() != model.occupancies.len() {
                return bad(
                    "model",
                    format!("{} states but {} occupancies", model.states.len(), model.occupancies.len()),
                );
            }
            rdcdyn::sim::validate_occupancies(&model.occupancies)
                .map_err(|e| CliError::Config(format!("model.occupancies: {e}")))?;
            for (i, state) in model.states.iter().enumerate() {
                if state.pdb.is_some() && !state.mutations.is_empty() {
                    return bad(&format!("model.states[{i}]"), "give mutations or pdb, not both".into());
                }
            }
        }
        if self.solver.states == 0 {
            return bad("solver.states", "must be at least 1".into());
        }
        if self.solver.parsimonious && self.solver.max_states < 2 {
            return bad("solver.max_states", "must be at least 2 for a parsimonious search".into());
        }
        self.solver
            .optimizer
            .validate()
            .map_err(|e| CliError::Config(format!("solver.optimizer: {e}")))?;
        if let Some(sweep) = &self.sweep {
            for (i, occ) in sweep.occupancies.iter().enumerate() {
                rdcdyn::sim::validate_occupancies(occ)
                    .map_err(|e| CliError::Config(format!("sweep.occupancies[{i}]: {e}")))?;
            }
            if sweep.state_counts.contains(&0) {
                return bad("sweep.state_counts", "state counts must be at least 1".into());
            }
        }
        Ok(())
    }

    pub fn media(&self) -> Result<Vec<Medium>, CliError> {
        self.media.iter().map(MediumConfig::to_medium).collect()
    }

    /// The arc mutation of one sweep cell.
    pub fn sweep_mutation(sweep: &SweepConfig, degrees: f64) -> Mutation {
        Mutation {
            residue: sweep.hinge,
            angle: sweep.dihedral,
            degrees,
        }
    }
}
