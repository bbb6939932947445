//! Ready-made dynamics models and alignment media on the bundled helix.
//!
//! The helix is 40 residues long. Arc models rotate phi of [`ARC_HINGE`]
//! with static residues 1-26 and dynamic residues 30-40. Complex models
//! mutate residue [`COMPLEX_HINGE`] with static 1-13 and dynamic 17-40.
//! The dynamic domains are 11 and 24 residues long.
//! In every model state 1 is the unmodified template.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::EulerAngles;
use crate::fit::TensorFit;
use crate::sim::{simulate_dynamics, DynamicsModel, Medium, RdcSet};
use crate::solver::AnchorSet;
use crate::structure::{helix40, kabsch, BackboneStructure, Dihedral, DomainRange, Mutation, Point};
use crate::tensor::{DmaxTable, PrincipalFrame, VectorType};

pub const ARC_HINGE: i32 = 28;
pub const ARC_STATIC: (i32, i32) = (1, 26);
pub const ARC_DYNAMIC: (i32, i32) = (30, 40);
pub const COMPLEX_HINGE: i32 = 15;
pub const COMPLEX_STATIC: (i32, i32) = (1, 13);
pub const COMPLEX_DYNAMIC: (i32, i32) = (17, 40);

fn range(r: (i32, i32)) -> DomainRange {
    DomainRange { start: r.0, end: r.1 }
}

fn media(rows: &[(f64, f64, f64, f64, f64, f64)]) -> Vec<Medium> {
    rows.iter()
        .enumerate()
        .map(|(i, &(xx, yy, zz, a, b, g))| Medium::new(format!("S{}", i + 1), PrincipalFrame::new(xx, yy, zz, a, b, g)))
        .collect()
}

/// Media for the 2-state arc model.
pub fn arc_media() -> Vec<Medium> {
    media(&[(3e-4, 5e-4, -8e-4, 0.0, 0.0, 0.0), (-4e-4, -6e-4, 1e-3, 40.0, 50.0, -60.0)])
}

/// Media for the complex 2-state model.
pub fn complex_media() -> Vec<Medium> {
    media(&[(-3e-4, -5e-4, 8e-4, 0.0, 0.0, 0.0), (2e-4, 5e-4, -7e-4, -40.0, -50.0, 60.0)])
}

/// Three media for the complex 3-state model.
pub fn three_state_media() -> Vec<Medium> {
    media(&[
        (3e-4, 5e-4, -8e-4, 0.0, 0.0, 0.0),
        (2e-4, 5e-4, -7e-4, -40.0, -50.0, 60.0),
        (-7e-4, -1e-4, 8e-4, 20.0, -40.0, 20.0),
    ])
}

/// A simulated model with its ground truth.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub template: BackboneStructure,
    pub model: DynamicsModel,
    /// Rotation carrying the template dynamic domain into each state.
    pub truth: Vec<EulerAngles>,
}

impl Scenario {
    /// Builds states by applying each mutation list to `template`.
    pub fn from_mutations(
        name: impl Into<String>,
        template: &BackboneStructure,
        states: &[Vec<Mutation>],
        occupancies: &[f64],
        static_domain: DomainRange,
        dynamic_domain: DomainRange,
    ) -> Result<Self> {
        let structures = states
            .iter()
            .map(|m| template.apply_mutations(m))
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(name, template, structures, occupancies, static_domain, dynamic_domain)
    }

    pub fn from_states(
        name: impl Into<String>,
        template: &BackboneStructure,
        states: Vec<BackboneStructure>,
        occupancies: &[f64],
        static_domain: DomainRange,
        dynamic_domain: DomainRange,
    ) -> Result<Self> {
        let model = DynamicsModel {
            states,
            occupancies: occupancies.to_vec(),
            static_domain,
            dynamic_domain,
        };
        model.validate()?;
        let truth = model
            .states
            .iter()
            .map(|s| domain_rotation(template, s, &dynamic_domain))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.into(),
            template: template.clone(),
            model,
            truth,
        })
    }

    /// Two-state arc on the helix: state 2 has phi of the hinge changed by `degrees`.
    pub fn arc(degrees: f64, occupancies: [f64; 2]) -> Result<Self> {
        let hinge = |d| Mutation {
            residue: ARC_HINGE,
            angle: Dihedral::Phi,
            degrees: d,
        };
        Self::from_mutations(
            format!("arc{degrees}"),
            &helix40(),
            &[vec![], vec![hinge(degrees)]],
            &occupancies,
            range(ARC_STATIC),
            range(ARC_DYNAMIC),
        )
    }

    /// Two-state complex motion: phi then psi of the hinge changed by 30°.
    pub fn complex(occupancies: [f64; 2]) -> Result<Self> {
        Self::from_mutations(
            "complex",
            &helix40(),
            &[vec![], complex_mutations()],
            &occupancies,
            range(COMPLEX_STATIC),
            range(COMPLEX_DYNAMIC),
        )
    }

    /// The complex states plus a third with phi of the hinge changed by 60°.
    pub fn three_state(occupancies: [f64; 3]) -> Result<Self> {
        let third = vec![Mutation {
            residue: COMPLEX_HINGE,
            angle: Dihedral::Phi,
            degrees: 60.0,
        }];
        Self::from_mutations(
            "three-state",
            &helix40(),
            &[vec![], complex_mutations(), third],
            &occupancies,
            range(COMPLEX_STATIC),
            range(COMPLEX_DYNAMIC),
        )
    }

    pub fn static_domain(&self) -> DomainRange {
        self.model.static_domain
    }

    pub fn dynamic_domain(&self) -> DomainRange {
        self.model.dynamic_domain
    }

    pub fn simulate(&self, media: &[Medium], noise: f64, seed: u64, dmax: &DmaxTable) -> Result<Vec<RdcSet>> {
        simulate_dynamics(&self.model, media, &VectorType::ALL, noise, seed, dmax)
    }

    /// Anchor and observed tensors fitted on the template.
    pub fn anchor_set(&self, rdcs: &[RdcSet], dmax: &DmaxTable) -> Result<(AnchorSet, Vec<(TensorFit, TensorFit)>)> {
        AnchorSet::from_rdcs(
            &self.template,
            &self.model.static_domain,
            &self.model.dynamic_domain,
            rdcs,
            &VectorType::ALL,
            dmax,
            format!("{}-template", self.name),
        )
    }
}

fn complex_mutations() -> Vec<Mutation> {
    vec![
        Mutation {
            residue: COMPLEX_HINGE,
            angle: Dihedral::Phi,
            degrees: 30.0,
        },
        Mutation {
            residue: COMPLEX_HINGE,
            angle: Dihedral::Psi,
            degrees: 30.0,
        },
    ]
}

/// Rotation that superimposes the template's `domain` onto the same domain of `state`.
pub fn domain_rotation(template: &BackboneStructure, state: &BackboneStructure, domain: &DomainRange) -> Result<EulerAngles> {
    let a: Vec<Point> = template.backbone_coords(domain)?.into_iter().map(|c| c.2).collect();
    let b: Vec<Point> = state.backbone_coords(domain)?.into_iter().map(|c| c.2).collect();
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!("domain {}-{} differs between structures", domain.start, domain.end)));
    }
    let (r, _) = kabsch(&a, &b);
    Ok(EulerAngles::from_matrix(&r).canonical())
}

/// Settings for an uncorrelated-motion ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncorrelatedSpec {
    /// First residue whose dihedrals are perturbed.
    pub first: i32,
    pub conformers: usize,
    /// Half-width of the uniform phi/psi perturbation, degrees.
    pub spread: f64,
    pub seed: u64,
}

impl Default for UncorrelatedSpec {
    fn default() -> Self {
        Self {
            first: COMPLEX_HINGE,
            conformers: 40,
            spread: 20.0,
            seed: 7,
        }
    }
}

/// Equally weighted conformers in which every residue from `spec.first` to
/// the second-to-last residue gets independent random phi and psi changes.
pub fn uncorrelated(template: &BackboneStructure, spec: &UncorrelatedSpec) -> Result<DynamicsModel> {
    if spec.conformers == 0 || spec.spread.is_nan() || spec.spread < 0.0 {
        return Err(Error::Validation("uncorrelated model needs conformers and a non-negative spread".into()));
    }
    let full = template.full_range().ok_or(Error::NoAtoms)?;
    if spec.first <= full.start || spec.first >= full.end {
        return Err(Error::UnknownResidue(spec.first));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dist = Uniform::new_inclusive(-spec.spread, spec.spread).map_err(|e| Error::Validation(e.to_string()))?;
    let mut states = Vec::with_capacity(spec.conformers);
    for _ in 0..spec.conformers {
        let mut mutations = Vec::new();
        for residue in spec.first..full.end {
            mutations.push(Mutation {
                residue,
                angle: Dihedral::Phi,
                degrees: dist.sample(&mut rng),
            });
            mutations.push(Mutation {
                residue,
                angle: Dihedral::Psi,
                degrees: dist.sample(&mut rng),
            });
        }
        states.push(template.apply_mutations(&mutations)?);
    }
    let model = DynamicsModel {
        occupancies: vec![1.0 / spec.conformers as f64; spec.conformers],
        states,
        static_domain: DomainRange::new(full.start, spec.first - 2)?,
        dynamic_domain: DomainRange::new(spec.first, full.end)?,
    };
    model.validate()?;
    Ok(model)
}
