//! Reconstruction of conformational ensembles from solved states, and their
//! validation against known target structures.
//!
//! State `i` is the template dynamic domain rotated by `ξ(α_i, β_i, γ_i)`
//! about the backbone centroid of the static domain. Order tensors carry no
//! translational information, so the placement of each rotated domain is
//! arbitrary and validation compares domains after translation only.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::EulerAngles;
use crate::solver::StateSolution;
use crate::structure::{
    kabsch, kabsch_rmsd_points, translation_only_rmsd_points, write_models, BackboneStructure, DomainRange, Point, Residue,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub euler: EulerAngles,
    pub occupancy: f64,
    /// Rotated dynamic domain only.
    pub dynamic: BackboneStructure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub static_domain: DomainRange,
    pub dynamic_domain: DomainRange,
    /// Static-domain residues, shared by every state.
    pub static_structure: BackboneStructure,
    pub states: Vec<EnsembleState>,
    /// Rotation origin: static-domain backbone centroid.
    pub origin: Point,
    pub frame_id: String,
}

impl Ensemble {
    /// Full model of each state: static residues followed by the rotated dynamic domain.
    pub fn models(&self) -> Vec<BackboneStructure> {
        self.states
            .iter()
            .map(|s| {
                let mut residues: Vec<Residue> = self.static_structure.residues().to_vec();
                residues.extend(s.dynamic.residues().iter().cloned());
                residues.sort_by_key(|r| r.seq);
                BackboneStructure::new(self.static_structure.chain, residues).expect("domains are disjoint")
            })
            .collect()
    }

    /// Multi-model PDB text; each state's occupancy is written in the B-factor column.
    pub fn to_pdb(&self) -> String {
        let models = self.models();
        let pairs: Vec<(&BackboneStructure, f64)> = models.iter().zip(&self.states).map(|(m, s)| (m, s.occupancy)).collect();
        write_models(&pairs)
    }
}

/// Rotates the dynamic domain of `template` into each solved state.
///
/// `frame_id` names the frame in which `template` is expressed and must equal
/// the frame in which the solution's anchor tensors were fitted.
pub fn assemble(
    template: &BackboneStructure,
    static_domain: &DomainRange,
    dynamic_domain: &DomainRange,
    frame_id: &str,
    solution: &StateSolution,
) -> Result<Ensemble> {
    if solution.frame_id != frame_id {
        return Err(Error::Mismatch(format!(
            "solution was fitted in frame {:?} but the structure is in frame {:?}",
            solution.frame_id, frame_id
        )));
    }
    if static_domain.end >= dynamic_domain.start && dynamic_domain.end >= static_domain.start {
        return Err(Error::Validation("static and dynamic domains overlap".into()));
    }
    template.check_range(static_domain)?;
    template.check_range(dynamic_domain)?;
    let origin = template.backbone_centroid(static_domain)?;
    let dynamic = template.subset(dynamic_domain);
    let states = solution
        .states
        .iter()
        .map(|s| EnsembleState {
            euler: s.euler,
            occupancy: s.occupancy,
            dynamic: dynamic.rotate_about(&s.euler.matrix(), &origin),
        })
        .collect();
    Ok(Ensemble {
        static_domain: *static_domain,
        dynamic_domain: *dynamic_domain,
        static_structure: template.subset(static_domain),
        states,
        origin,
        frame_id: frame_id.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationThresholds {
    pub static_rmsd: f64,
    pub state_rmsd: f64,
    pub occupancy: f64,
}

impl Default for ValidationThresholds {
    fn default() -> Self {
        Self {
            static_rmsd: 0.5,
            state_rmsd: 2.0,
            occupancy: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateValidation {
    /// Index into the target states.
    pub target: usize,
    /// Index into the ensemble states.
    pub reconstructed: usize,
    /// Translation-only backbone rmsd in the static-domain frame, Å.
    /// An upper bound on the orientation error.
    pub rmsd_upper_bound: f64,
    /// Backbone rmsd after full superposition, Å.
    pub kabsch_rmsd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occupancy_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub static_rmsd: f64,
    pub states: Vec<StateValidation>,
    /// Ensemble states not matched to any target.
    pub unmatched: Vec<usize>,
    pub thresholds: ValidationThresholds,
    pub passed: bool,
}

impl ValidationReport {
    /// Validation for the target state with index `target`.
    pub fn for_target(&self, target: usize) -> Option<&StateValidation> {
        self.states.iter().find(|s| s.target == target)
    }
}

fn coords(s: &BackboneStructure, range: &DomainRange) -> Result<Vec<Point>> {
    let c = s.backbone_coords(range)?;
    let expected = s.residues().iter().filter(|r| range.contains(r.seq)).count() * 3;
    if c.len() != expected || c.is_empty() {
        return Err(Error::Mismatch(format!("incomplete backbone in {}-{}", range.start, range.end)));
    }
    Ok(c.into_iter().map(|x| x.2).collect())
}

fn paired(a: &BackboneStructure, b: &BackboneStructure, range: &DomainRange) -> Result<(Vec<Point>, Vec<Point>)> {
    let ka: Vec<(i32, _)> = a.backbone_coords(range)?.into_iter().map(|c| (c.0, c.1)).collect();
    let kb: Vec<(i32, _)> = b.backbone_coords(range)?.into_iter().map(|c| (c.0, c.1)).collect();
    if ka != kb {
        return Err(Error::Mismatch(format!("residues differ in range {}-{}", range.start, range.end)));
    }
    Ok((coords(a, range)?, coords(b, range)?))
}

/// Assignment of `targets` distinct states minimizing total cost; `cost[t][s]`.
fn best_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    fn search(cost: &[Vec<f64>], t: usize, used: &mut Vec<bool>, current: &mut Vec<usize>, best: &mut (f64, Vec<usize>), total: f64) {
        if total >= best.0 {
            return;
        }
        if t == cost.len() {
            *best = (total, current.clone());
            return;
        }
        for s in 0..used.len() {
            if !used[s] {
                used[s] = true;
                current.push(s);
                search(cost, t + 1, used, current, best, total + cost[t][s]);
                current.pop();
                used[s] = false;
            }
        }
    }
    let states = cost.first().map_or(0, Vec::len);
    let mut best = (f64::INFINITY, Vec::new());
    search(cost, 0, &mut vec![false; states], &mut Vec::new(), &mut best, 0.0);
    best.1
}

/// Validates an ensemble against target structures.
///
/// The target static domain is superimposed on the reconstructed one; the
/// same transform is applied to each target, whose dynamic domain is then
/// compared to the reconstructed states allowing translation only. Targets
/// are matched to reconstructed states by minimal total rmsd.
pub fn validate(
    ensemble: &Ensemble,
    targets: &[BackboneStructure],
    target_occupancies: Option<&[f64]>,
    thresholds: &ValidationThresholds,
) -> Result<ValidationReport> {
    if targets.is_empty() {
        return Err(Error::Validation("no target states".into()));
    }
    if targets.len() > ensemble.states.len() {
        return Err(Error::Mismatch(format!(
            "{} targets but only {} reconstructed states",
            targets.len(),
            ensemble.states.len()
        )));
    }
    if let Some(occ) = target_occupancies {
        if occ.len() != targets.len() {
            return Err(Error::Mismatch(format!("{} targets but {} occupancies", targets.len(), occ.len())));
        }
    }
    let reference = coords(&ensemble.static_structure, &ensemble.static_domain)?;
    let placed: Vec<(f64, Vec<Point>)> = targets
        .par_iter()
        .map(|t| {
            let (mine, theirs) = paired(&ensemble.static_structure, t, &ensemble.static_domain)?;
            let (r, shift) = kabsch(&theirs, &mine);
            let static_rmsd = kabsch_rmsd_points(&theirs, &reference);
            let moved: Matrix3<f64> = r;
            let dynamic = coords(t, &ensemble.dynamic_domain)?.iter().map(|p| moved * p + shift).collect();
            Ok((static_rmsd, dynamic))
        })
        .collect::<Result<_>>()?;
    let reconstructed: Vec<Vec<Point>> = ensemble
        .states
        .iter()
        .map(|s| {
            paired(&s.dynamic, &targets[0], &ensemble.dynamic_domain)?;
            coords(&s.dynamic, &ensemble.dynamic_domain)
        })
        .collect::<Result<_>>()?;
    let cost: Vec<Vec<f64>> = placed
        .iter()
        .map(|(_, target)| reconstructed.iter().map(|r| translation_only_rmsd_points(r, target)).collect())
        .collect();
    let assignment = best_assignment(&cost);
    let states: Vec<StateValidation> = assignment
        .iter()
        .enumerate()
        .map(|(t, &s)| StateValidation {
            target: t,
            reconstructed: s,
            rmsd_upper_bound: cost[t][s],
            kabsch_rmsd: kabsch_rmsd_points(&reconstructed[s], &placed[t].1),
            occupancy_error: target_occupancies.map(|o| (ensemble.states[s].occupancy - o[t]).abs()),
        })
        .collect();
    let unmatched = (0..ensemble.states.len()).filter(|s| !assignment.contains(s)).collect();
    let static_rmsd = placed.iter().map(|p| p.0).fold(0.0, f64::max);
    let passed = static_rmsd <= thresholds.static_rmsd
        && states.iter().all(|s| {
            s.rmsd_upper_bound <= thresholds.state_rmsd && s.occupancy_error.is_none_or(|e| e <= thresholds.occupancy)
        });
    Ok(ValidationReport {
        static_rmsd,
        states,
        unmatched,
        thresholds: *thresholds,
        passed,
    })
}
