use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rdcdyn::ensemble::{assemble, validate, ValidationReport};
use rdcdyn::fetch::{fetch_structure, FetchConfig};
use rdcdyn::fit::TensorFit;
use rdcdyn::profile::{analyze, write_profile_csv, Direction, ProfileVerdict};
use rdcdyn::scenario::Scenario;
use rdcdyn::sim::{read_rdc_csv, write_rdc_csv, Medium, RdcSet};
use rdcdyn::solver::{degeneracy_check, parsimonious_solve, solve, AnchorSet, DegeneracyReport, DegeneracyThresholds, StateSolution};
use rdcdyn::structure::{helix40, parse_pdb};
use rdcdyn::tensor::tensor_from_principal;
use rdcdyn::{BackboneStructure, DmaxTable, Error, EulerAngles, SaupeTensor};

use crate::config::{RunConfig, StateConfig, SweepConfig};
use crate::CliError;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
pub const METADATA: &str = "metadata.json";
pub const TRUTH: &str = "truth.json";

/// Everything needed to validate a reconstruction later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub seed: u64,
    pub noise_hz: f64,
    pub occupancies: Vec<f64>,
    pub states: Vec<StateConfig>,
    /// Rotation carrying the template dynamic domain into each state.
    pub rotations: Vec<EulerAngles>,
    pub media: Vec<MediumTruth>,
    pub static_domain: [i32; 2],
    pub dynamic_domain: [i32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumTruth {
    pub medium: Medium,
    pub tensor: SaupeTensor,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    unix_time: u64,
}

#[derive(Debug, Serialize)]
struct MediumFits {
    medium: String,
    static_fit: TensorFit,
    dynamic_fit: TensorFit,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    solution: StateSolution,
    fits: Vec<MediumFits>,
    degeneracy: Option<DegeneracyReport>,
}

#[derive(Debug, Serialize)]
struct Verdicts {
    forward: ProfileVerdict,
    backward: ProfileVerdict,
}

/// Creates the output directory and writes the resolved config and metadata.
pub fn prepare(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(io)?;
    fs::write(cfg.out.join(RESOLVED_CONFIG), cfg.to_toml()?).map_err(io)?;
    let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = Metadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        unix_time,
    };
    write_json(&cfg.out.join(METADATA), &meta)
}

fn io(e: std::io::Error) -> CliError {
    CliError::Lib(Error::Io(e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Lib(e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(io)
}

pub fn load_template(cfg: &RunConfig) -> Result<BackboneStructure, CliError> {
    let s = &cfg.structure;
    let structure = if s.builtin.is_some() {
        helix40()
    } else if let Some(path) = &s.path {
        parse_pdb(&fs::read_to_string(path).map_err(io)?, s.chain)?
    } else {
        let id = s.accession.as_deref().expect("validated source");
        let fetch = FetchConfig {
            allow_network: cfg.allow_network,
            ..FetchConfig::default()
        };
        parse_pdb(&fetch_structure(id, &fetch)?, s.chain)?
    };
    structure.check_range(&cfg.domains.static_range())?;
    structure.check_range(&cfg.domains.dynamic_range())?;
    Ok(structure)
}

fn frame_id(cfg: &RunConfig) -> String {
    let s = &cfg.structure;
    let source = s
        .builtin
        .clone()
        .or_else(|| s.path.as_ref().map(|p| p.display().to_string()))
        .or_else(|| s.accession.clone())
        .unwrap_or_default();
    format!("template:{source}:{}", s.chain.map(String::from).unwrap_or_default())
}

fn build_states(template: &BackboneStructure, states: &[StateConfig], chain: Option<char>) -> Result<Vec<BackboneStructure>, CliError> {
    states
        .iter()
        .map(|s| match &s.pdb {
            Some(path) => Ok(parse_pdb(&fs::read_to_string(path).map_err(io)?, chain)?),
            None => Ok(template.apply_mutations(&s.mutations)?),
        })
        .collect()
}

fn scenario(cfg: &RunConfig, template: &BackboneStructure, states: &[StateConfig], occupancies: &[f64]) -> Result<Scenario, CliError> {
    let structures = build_states(template, states, cfg.structure.chain)?;
    Ok(Scenario::from_states(
        "config",
        template,
        structures,
        occupancies,
        cfg.domains.static_range(),
        cfg.domains.dynamic_range(),
    )?)
}

fn manifest(cfg: &RunConfig, sc: &Scenario, states: &[StateConfig], media: &[Medium]) -> Result<TruthManifest, CliError> {
    Ok(TruthManifest {
        seed: cfg.seed,
        noise_hz: cfg.noise_hz,
        occupancies: sc.model.occupancies.clone(),
        states: states.to_vec(),
        rotations: sc.truth.clone(),
        media: media
            .iter()
            .map(|m| Ok(MediumTruth { medium: m.clone(), tensor: tensor_from_principal(&m.frame)? }))
            .collect::<Result<_, Error>>()?,
        static_domain: cfg.domains.static_domain,
        dynamic_domain: cfg.domains.dynamic,
    })
}

fn simulated(cfg: &RunConfig, template: &BackboneStructure) -> Result<(Vec<RdcSet>, Scenario, TruthManifest), CliError> {
    let model = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::Config("model: required when no data.rdc_files are given".into()))?;
    if cfg.media.is_empty() {
        return Err(CliError::Config("media: at least one medium is required to simulate".into()));
    }
    let media = cfg.media()?;
    let sc = scenario(cfg, template, &model.states, &model.occupancies)?;
    let rdcs = rdcdyn::sim::simulate_dynamics(&sc.model, &media, &cfg.vector_types, cfg.noise_hz, cfg.seed, &DmaxTable::default())?;
    let truth = manifest(cfg, &sc, &model.states, &media)?;
    Ok((rdcs, sc, truth))
}

/// RDCs from files or simulation, plus the truth states when known.
fn acquire(cfg: &RunConfig, template: &BackboneStructure) -> Result<(Vec<RdcSet>, Option<Scenario>), CliError> {
    if cfg.data.rdc_files.is_empty() {
        let (rdcs, sc, _) = simulated(cfg, template)?;
        return Ok((rdcs, Some(sc)));
    }
    let mut rdcs = Vec::new();
    for path in &cfg.data.rdc_files {
        rdcs.extend(read_rdc_csv(File::open(path).map_err(io)?)?);
    }
    let truth = match &cfg.data.truth_file {
        Some(path) => {
            let m: TruthManifest = serde_json::from_str(&fs::read_to_string(path).map_err(io)?).map_err(|e| CliError::Lib(e.into()))?;
            Some(scenario(cfg, template, &m.states, &m.occupancies)?)
        }
        None => None,
    };
    Ok((rdcs, truth))
}

fn medium_file_name(medium: &str) -> String {
    let safe: String = medium
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("rdc_{safe}.csv")
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let template = load_template(cfg)?;
    let (rdcs, _, truth) = simulated(cfg, &template)?;
    prepare(cfg, "simulate")?;
    for set in &rdcs {
        let path = cfg.out.join(medium_file_name(set.medium()));
        write_rdc_csv(BufWriter::new(File::create(&path).map_err(io)?), &[set])?;
        log::info!("wrote {} RDCs to {}", set.len(), path.display());
    }
    write_json(&cfg.out.join(TRUTH), &truth)
}

pub fn cmd_profile(cfg: &RunConfig) -> Result<(), CliError> {
    let template = load_template(cfg)?;
    let (rdcs, _) = acquire(cfg, &template)?;
    prepare(cfg, "profile")?;
    let dmax = DmaxTable::default();
    let run = |d| analyze(&template, &rdcs, d, cfg.noise_hz, &dmax, &cfg.profile.onset, cfg.profile.offset);
    let (fp, fv) = run(Direction::Forward)?;
    let (bp, bv) = run(Direction::Backward)?;
    for (dir, v) in [("forward", &fv), ("backward", &bv)] {
        log::info!("{dir}: {:?}, onset {:?}, fragment {:?}", v.classification, v.onset, v.fragment_mode);
    }
    write_profile_csv(BufWriter::new(File::create(cfg.out.join("profile.csv")).map_err(io)?), &[&fp, &bp])?;
    write_json(&cfg.out.join("verdict.json"), &Verdicts { forward: fv, backward: bv })
}

fn run_solver(cfg: &RunConfig, set: &AnchorSet, n: usize, parsimonious: bool) -> Result<StateSolution, Error> {
    if parsimonious {
        let sol = parsimonious_solve(set, cfg.solver.max_states, cfg.noise_hz, &cfg.solver.optimizer)?;
        for a in &sol.diagnostics.attempts {
            log::info!("n = {}: minimum {:.3} Hz, occupancies {:?}{}", a.states, a.hz_minimum, a.occupancies, if a.note.is_empty() { String::new() } else { format!(" ({})", a.note) });
        }
        Ok(sol)
    } else {
        solve(set, n, &cfg.solver.optimizer)
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let template = load_template(cfg)?;
    let (rdcs, truth) = acquire(cfg, &template)?;
    let dmax = DmaxTable::default();
    let (st, dy) = (cfg.domains.static_range(), cfg.domains.dynamic_range());
    let (set, fits) = AnchorSet::from_rdcs(&template, &st, &dy, &rdcs, &cfg.vector_types, &dmax, frame_id(cfg))?;
    let solution = run_solver(cfg, &set, cfg.solver.states, cfg.solver.parsimonious)?;
    prepare(cfg, "solve")?;
    log::info!("{} states, minimum {:.3} Hz", solution.n, solution.hz_minimum);
    let degeneracy = degeneracy_check(&set.observed, &DegeneracyThresholds::default()).ok();
    if degeneracy.as_ref().is_some_and(|d| d.flagged) {
        log::warn!("observed tensors are symmetric with a shared axis; rotations about it are not determined");
    }
    let ensemble = assemble(&template, &st, &dy, &set.frame_id, &solution)?;
    fs::write(cfg.out.join("ensemble.pdb"), ensemble.to_pdb()).map_err(io)?;
    let report = SolveReport {
        fits: set
            .media
            .iter()
            .zip(fits)
            .map(|(m, (s, d))| MediumFits { medium: m.clone(), static_fit: s, dynamic_fit: d })
            .collect(),
        solution,
        degeneracy,
    };
    write_json(&cfg.out.join("solution.json"), &report)?;
    if let Some(sc) = truth {
        match validate(&ensemble, &sc.model.states, Some(&sc.model.occupancies), &cfg.validation) {
            Ok(v) => write_json(&cfg.out.join("validation.json"), &v)?,
            Err(e) => {
                log::warn!("validation skipped: {e}");
                write_json(&cfg.out.join("validation.json"), &serde_json::json!({ "error": e.to_string() }))?;
            }
        }
    }
    Ok(())
}

/// One sweep cell's summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub angle: f64,
    pub rho_truth: String,
    pub states: usize,
    pub status: String,
    pub hz_minimum: Option<f64>,
    pub rho_recovered: String,
    pub state_rmsd: String,
    pub max_occupancy_error: Option<f64>,
}

fn joined(values: impl IntoIterator<Item = f64>, digits: usize) -> String {
    values.into_iter().map(|v| format!("{v:.digits$}")).collect::<Vec<_>>().join("/")
}

fn sweep_cell(cfg: &RunConfig, template: &BackboneStructure, media: &[Medium], sweep: &SweepConfig, angle: f64, occ: [f64; 2], n: usize) -> SweepRow {
    let mut row = SweepRow {
        angle,
        rho_truth: joined(occ, 2),
        states: n,
        status: "ok".into(),
        hz_minimum: None,
        rho_recovered: String::new(),
        state_rmsd: String::new(),
        max_occupancy_error: None,
    };
    let result = (|| -> Result<(StateSolution, Option<ValidationReport>), Error> {
        let states = vec![StateConfig::default(), StateConfig { mutations: vec![RunConfig::sweep_mutation(sweep, angle)], pdb: None }];
        let sc = scenario(cfg, template, &states, &occ).map_err(|e| match e {
            CliError::Lib(e) => e,
            CliError::Config(m) => Error::Validation(m),
        })?;
        let dmax = DmaxTable::default();
        let rdcs = rdcdyn::sim::simulate_dynamics(&sc.model, media, &cfg.vector_types, cfg.noise_hz, cfg.seed, &dmax)?;
        let (set, _) = AnchorSet::from_rdcs(template, &sc.static_domain(), &sc.dynamic_domain(), &rdcs, &cfg.vector_types, &dmax, "sweep")?;
        let sol = solve(&set, n, &cfg.solver.optimizer)?;
        let ens = assemble(template, &sc.static_domain(), &sc.dynamic_domain(), &set.frame_id, &sol)?;
        let report = validate(&ens, &sc.model.states, Some(&sc.model.occupancies), &cfg.validation).ok();
        Ok((sol, report))
    })();
    match result {
        Ok((sol, report)) => {
            row.hz_minimum = Some(sol.hz_minimum);
            row.rho_recovered = joined(sol.occupancies(), 3);
            if let Some(r) = report {
                let mut by_target = r.states.clone();
                by_target.sort_by_key(|s| s.target);
                row.state_rmsd = joined(by_target.iter().map(|s| s.rmsd_upper_bound), 3);
                row.max_occupancy_error = by_target.iter().filter_map(|s| s.occupancy_error).reduce(f64::max);
            }
        }
        Err(Error::Infeasible { .. }) => row.status = "infeasible".into(),
        Err(Error::NoConvergence { .. }) => row.status = "no_convergence".into(),
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let sweep = cfg.sweep.clone().unwrap_or(SweepConfig {
        angles: Vec::new(),
        occupancies: Vec::new(),
        hinge: rdcdyn::scenario::ARC_HINGE,
        dihedral: rdcdyn::structure::Dihedral::Phi,
        state_counts: vec![2],
    });
    let template = load_template(cfg)?;
    let media = cfg.media()?;
    if media.is_empty() && !sweep.angles.is_empty() && !sweep.occupancies.is_empty() {
        return Err(CliError::Config("media: at least one medium is required to sweep".into()));
    }
    prepare(cfg, "sweep")?;
    let mut cells: Vec<(f64, [f64; 2], usize)> = Vec::new();
    for &a in &sweep.angles {
        for &o in &sweep.occupancies {
            for &n in &sweep.state_counts {
                cells.push((a, o, n));
            }
        }
    }
    let cell_dir = cfg.out.join("cells");
    fs::create_dir_all(&cell_dir).map_err(io)?;
    let cell_path = |i: usize| cell_dir.join(format!("cell_{i:04}.csv"));
    cells
        .par_iter()
        .enumerate()
        .try_for_each(|(i, &(angle, occ, n))| -> Result<(), CliError> {
            let row = sweep_cell(cfg, &template, &media, &sweep, angle, occ, n);
            log::info!("cell {i}: {angle} deg {} n={n} {}", row.rho_truth, row.status);
            let mut w = csv::Writer::from_writer(File::create(cell_path(i)).map_err(io)?);
            w.serialize(&row).map_err(|e| CliError::Lib(e.into()))?;
            w.flush().map_err(io)
        })?;
    merge_cells(&cfg.out.join("sweep.csv"), (0..cells.len()).map(cell_path))
}

fn merge_cells(out: &Path, cells: impl Iterator<Item = PathBuf>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(File::create(out).map_err(io)?);
    w.write_record(["angle", "rho_truth", "states", "status", "hz_minimum", "rho_recovered", "state_rmsd", "max_occupancy_error"])
        .map_err(|e| CliError::Lib(e.into()))?;
    for path in cells {
        let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Lib(e.into()))?;
        for rec in r.records() {
            w.write_record(&rec.map_err(|e| CliError::Lib(e.into()))?).map_err(|e| CliError::Lib(e.into()))?;
        }
    }
    w.flush().map_err(io)
}
