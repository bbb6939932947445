//! Recovery of discrete rigid-body states from order tensors.
//!
//! A dynamic domain that visits `n` orientations `R_i` with occupancies `ρ_i`
//! reports, in its own frame, the averaged tensor
//!
//! ```text
//! Ŝ_j = Σ_i ρ_i · R_iᵀ · S_j^a · R_i          Σ_i ρ_i = 1
//! ```
//!
//! where `S_j^a` is the anchor tensor of medium `j` (fitted to the static
//! domain) and `R_i = ξ(α_i, β_i, γ_i)` is the rotation that carries the
//! template dynamic domain into state `i`. The solver minimizes
//!
//! ```text
//! f = Σ_j ‖Ŝ_j − Σ_i ρ_i · R_iᵀ S_j^a R_i‖²
//! ```
//!
//! (sum of squared elements of the full 3×3 difference, not divided by the
//! number of media) over `3n` Euler angles and `n − 1` free occupancies.
//! A system is solvable only when `5m ≥ 4n − 1` for `m` media.

mod lm;

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{rot_y, rot_y_deriv, rot_z, rot_z_deriv, EulerAngles};
use crate::fit::{axis_angle, svd_fit, TensorFit};
use crate::sim::RdcSet;
use crate::structure::{build_vectors, BackboneStructure, DomainRange};
use crate::tensor::{DmaxTable, SaupeTensor, VectorType};

pub use lm::project_capped_simplex;

/// True when `media` alignment media carry enough equations for `states` states.
pub fn feasible(media: usize, states: usize) -> bool {
    5 * media + 1 >= 4 * states
}

/// Objective minimum expressed as an N-H RDC in Hz.
pub fn hz_scale(f: f64) -> f64 {
    hz_scale_with(f, DmaxTable::NH_HZ)
}

pub fn hz_scale_with(f: f64, nh_dmax: f64) -> f64 {
    f.max(0.0).sqrt() * nh_dmax.abs()
}

/// Anchor and observed tensors for each medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub media: Vec<String>,
    pub anchors: Vec<SaupeTensor>,
    pub observed: Vec<SaupeTensor>,
    /// Identifies the molecular frame in which both tensors were fitted.
    pub frame_id: String,
}

impl AnchorSet {
    pub fn new(media: Vec<String>, anchors: Vec<SaupeTensor>, observed: Vec<SaupeTensor>, frame_id: impl Into<String>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Validation("at least one medium is required".into()));
        }
        if anchors.len() != observed.len() || anchors.len() != media.len() {
            return Err(Error::Validation(format!(
                "{} media, {} anchors, {} observed tensors",
                media.len(),
                anchors.len(),
                observed.len()
            )));
        }
        Ok(Self {
            media,
            anchors,
            observed,
            frame_id: frame_id.into(),
        })
    }

    pub fn media_count(&self) -> usize {
        self.anchors.len()
    }

    /// Fits anchors to the static domain and observed tensors to the dynamic
    /// domain of `template` from each medium's RDCs.
    pub fn from_rdcs(
        template: &BackboneStructure,
        static_domain: &DomainRange,
        dynamic_domain: &DomainRange,
        rdcs: &[RdcSet],
        types: &[VectorType],
        dmax: &DmaxTable,
        frame_id: impl Into<String>,
    ) -> Result<(Self, Vec<(TensorFit, TensorFit)>)> {
        let static_vectors = build_vectors(template, types, static_domain);
        let dynamic_vectors = build_vectors(template, types, dynamic_domain);
        let mut fits = Vec::with_capacity(rdcs.len());
        for set in rdcs {
            let a = svd_fit(&static_vectors, &set.restrict(static_domain), dmax)?;
            let o = svd_fit(&dynamic_vectors, &set.restrict(dynamic_domain), dmax)?;
            fits.push((a, o));
        }
        let set = Self::new(
            rdcs.iter().map(|s| s.medium().to_string()).collect(),
            fits.iter().map(|f| f.0.tensor).collect(),
            fits.iter().map(|f| f.1.tensor).collect(),
            frame_id,
        )?;
        Ok((set, fits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub starts: usize,
    /// Relative change in the objective that ends an optimizer run.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// States with occupancy below this are reported as phantoms.
    pub phantom_floor: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            tolerance: 1e-12,
            max_iterations: 1000,
            phantom_floor: 0.05,
            seed: 0x5eed_2011,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Validation("solver needs at least one start".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_iterations == 0 {
            return Err(Error::Validation("solver tolerance and iteration limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    pub euler: EulerAngles,
    pub occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub starts_tried: usize,
    pub converged_starts: usize,
    /// Indices into `states` of states below the phantom floor.
    pub phantom_states: Vec<usize>,
    /// Only one medium was supplied, so orientational degeneracies remain.
    pub single_medium: bool,
    /// Set by the parsimonious search: whether the noise criterion was met.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfied: Option<bool>,
    /// Per state-count attempts made by the parsimonious search.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub states: usize,
    pub objective: f64,
    pub hz_minimum: f64,
    pub occupancies: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSolution {
    pub n: usize,
    /// Sorted by descending occupancy.
    pub states: Vec<StateParams>,
    pub objective: f64,
    pub hz_minimum: f64,
    pub frame_id: String,
    pub diagnostics: Diagnostics,
}

impl StateSolution {
    pub fn occupancies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.occupancy).collect()
    }

    pub fn eulers(&self) -> Vec<EulerAngles> {
        self.states.iter().map(|s| s.euler).collect()
    }
}

/// `Σ_i ρ_i · R_iᵀ S^a R_i` for every medium.
pub fn predicted_average(anchors: &[SaupeTensor], eulers: &[EulerAngles], occupancies: &[f64]) -> Vec<SaupeTensor> {
    anchors
        .iter()
        .map(|a| {
            eulers
                .iter()
                .zip(occupancies)
                .fold(SaupeTensor::ZERO, |acc, (e, rho)| acc.add(&a.seen_by_rotated(e).scale(*rho)))
        })
        .collect()
}

/// Squared Frobenius distance between observed and predicted tensors, summed over media.
pub fn objective(anchors: &AnchorSet, eulers: &[EulerAngles], occupancies: &[f64]) -> f64 {
    predicted_average(&anchors.anchors, eulers, occupancies)
        .iter()
        .zip(&anchors.observed)
        .map(|(p, o)| (o.matrix() - p.matrix()).norm_squared())
        .sum()
}

/// The optimization problem for a fixed state count, in radians with
/// residuals divided by `scale`.
struct StateProblem<'a> {
    anchors: Vec<Matrix3<f64>>,
    observed: Vec<Matrix3<f64>>,
    n: usize,
    scale: f64,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl StateProblem<'_> {
    fn new(set: &AnchorSet, n: usize) -> Self {
        let scale = set
            .anchors
            .iter()
            .chain(&set.observed)
            .map(|t| t.frobenius())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        Self {
            anchors: set.anchors.iter().map(|t| t.matrix() / scale).collect(),
            observed: set.observed.iter().map(|t| t.matrix() / scale).collect(),
            n,
            scale,
            _marker: std::marker::PhantomData,
        }
    }

    fn param_count(&self) -> usize {
        4 * self.n - 1
    }

    fn occupancies(&self, x: &DVector<f64>) -> Vec<f64> {
        let free = &x.as_slice()[3 * self.n..];
        let mut rho: Vec<f64> = free.to_vec();
        rho.push(1.0 - free.iter().sum::<f64>());
        rho
    }

    fn rotation(x: &DVector<f64>, i: usize) -> [Matrix3<f64>; 4] {
        let (a, b, g) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        let (za, yb, zg) = (rot_z(a), rot_y(b), rot_z(g));
        [
            za * yb * zg,
            rot_z_deriv(a) * yb * zg,
            za * rot_y_deriv(b) * zg,
            za * yb * rot_z_deriv(g),
        ]
    }

    fn eulers(&self, x: &DVector<f64>) -> Vec<EulerAngles> {
        (0..self.n)
            .map(|i| EulerAngles::new(x[3 * i].to_degrees(), x[3 * i + 1].to_degrees(), x[3 * i + 2].to_degrees()).canonical())
            .collect()
    }
}

fn push_matrix(out: &mut DVector<f64>, offset: usize, m: &Matrix3<f64>) {
    for (k, v) in m.iter().enumerate() {
        out[offset + k] = *v;
    }
}

impl lm::LeastSquares for StateProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let rho = self.occupancies(x);
        let rots: Vec<Matrix3<f64>> = (0..self.n).map(|i| Self::rotation(x, i)[0]).collect();
        let mut r = DVector::zeros(9 * self.anchors.len());
        for (j, (a, o)) in self.anchors.iter().zip(&self.observed).enumerate() {
            let mut pred = Matrix3::zeros();
            for (rot, w) in rots.iter().zip(&rho) {
                pred += (rot.transpose() * a * rot) * *w;
            }
            push_matrix(&mut r, 9 * j, &(o - pred));
        }
        r
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let rho = self.occupancies(x);
        let rots: Vec<[Matrix3<f64>; 4]> = (0..self.n).map(|i| Self::rotation(x, i)).collect();
        let m = self.anchors.len();
        let mut jac = DMatrix::zeros(9 * m, self.param_count());
        for (j, a) in self.anchors.iter().enumerate() {
            let seen: Vec<Matrix3<f64>> = rots.iter().map(|r| r[0].transpose() * a * r[0]).collect();
            for i in 0..self.n {
                let r0 = rots[i][0];
                for k in 0..3 {
                    let dr = rots[i][k + 1];
                    let d = (dr.transpose() * a * r0 + r0.transpose() * a * dr) * rho[i];
                    for (row, v) in d.iter().enumerate() {
                        jac[(9 * j + row, 3 * i + k)] = -v;
                    }
                }
            }
            let last = seen[self.n - 1];
            for i in 0..self.n - 1 {
                let d = seen[i] - last;
                for (row, v) in d.iter().enumerate() {
                    jac[(9 * j + row, 3 * self.n + i)] = -v;
                }
            }
        }
        jac
    }

    fn project(&self, x: &mut DVector<f64>) {
        let start = 3 * self.n;
        project_capped_simplex(&mut x.as_mut_slice()[start..]);
    }
}

fn random_start(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let wrap = Uniform::new(-std::f64::consts::PI, std::f64::consts::PI).unwrap();
    let tilt = Uniform::new_inclusive(0.0, std::f64::consts::PI).unwrap();
    let unit = Uniform::new(f64::MIN_POSITIVE, 1.0).unwrap();
    let mut x = DVector::zeros(4 * n - 1);
    for i in 0..n {
        x[3 * i] = wrap.sample(rng);
        x[3 * i + 1] = tilt.sample(rng);
        x[3 * i + 2] = wrap.sample(rng);
    }
    // uniform on the simplex via normalized exponentials
    let draws: Vec<f64> = (0..n).map(|_| -unit.sample(rng).ln()).collect();
    let total: f64 = draws.iter().sum();
    for i in 0..n - 1 {
        x[3 * n + i] = draws[i] / total;
    }
    x
}

/// Sorts states by descending occupancy, ties by lexicographic Euler angles.
fn canonicalize(mut states: Vec<StateParams>) -> Vec<StateParams> {
    states.sort_by(|a, b| {
        b.occupancy
            .total_cmp(&a.occupancy)
            .then(a.euler.alpha.total_cmp(&b.euler.alpha))
            .then(a.euler.beta.total_cmp(&b.euler.beta))
            .then(a.euler.gamma.total_cmp(&b.euler.gamma))
    });
    states
}

fn phantoms(states: &[StateParams], floor: f64) -> Vec<usize> {
    states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.occupancy < floor)
        .map(|(i, _)| i)
        .collect()
}

/// Multi-start minimization of the objective for `n` states.
pub fn solve(anchors: &AnchorSet, n: usize, config: &SolverConfig) -> Result<StateSolution> {
    config.validate()?;
    let m = anchors.media_count();
    if n == 0 || !feasible(m, n) {
        return Err(Error::Infeasible { media: m, states: n });
    }
    if m == 1 {
        log::warn!("single alignment medium: orientational degeneracies are not resolved");
    }
    let problem = StateProblem::new(anchors, n);
    let settings = lm::LmSettings {
        max_iterations: config.max_iterations,
        ftol: config.tolerance,
        xtol: 1e-14,
        cost_floor: 1e-32,
    };
    let outcomes: Vec<lm::LmOutcome> = (0..config.starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let x0 = random_start(n, &mut rng);
            lm::minimize(&problem, x0, &settings)
        })
        .collect();
    let converged = outcomes.iter().filter(|o| o.converged).count();
    let best = outcomes
        .iter()
        .filter(|o| o.converged)
        .min_by(|a, b| a.cost.total_cmp(&b.cost));
    let Some(best) = best else {
        let best_objective = outcomes.iter().map(|o| o.cost).fold(f64::INFINITY, f64::min) * problem.scale.powi(2);
        return Err(Error::NoConvergence {
            tried: config.starts,
            best_objective,
        });
    };
    log::debug!("{n} states: best of {converged} converged starts took {} iterations", best.iterations);
    let eulers = problem.eulers(&best.x);
    let rho = problem.occupancies(&best.x);
    let states = canonicalize(
        eulers
            .into_iter()
            .zip(&rho)
            .map(|(euler, &occupancy)| StateParams {
                euler,
                occupancy: occupancy.clamp(0.0, 1.0),
            })
            .collect(),
    );
    let f = objective(anchors, &states.iter().map(|s| s.euler).collect::<Vec<_>>(), &states.iter().map(|s| s.occupancy).collect::<Vec<_>>());
    Ok(StateSolution {
        n,
        diagnostics: Diagnostics {
            starts_tried: config.starts,
            converged_starts: converged,
            phantom_states: phantoms(&states, config.phantom_floor),
            single_medium: m == 1,
            satisfied: None,
            attempts: Vec::new(),
        },
        states,
        objective: f,
        hz_minimum: hz_scale(f),
        frame_id: anchors.frame_id.clone(),
    })
}

fn attempt(sol: &StateSolution, note: &str) -> Attempt {
    Attempt {
        states: sol.n,
        objective: sol.objective,
        hz_minimum: sol.hz_minimum,
        occupancies: sol.occupancies(),
        note: note.to_string(),
    }
}

/// Escalates the state count from 2 until the N-H-scaled minimum reaches the
/// noise level, then removes phantom states one at a time while the reduced
/// model still meets the noise level.
pub fn parsimonious_solve(anchors: &AnchorSet, max_states: usize, noise_hz: f64, config: &SolverConfig) -> Result<StateSolution> {
    if max_states < 2 {
        return Err(Error::Validation("parsimonious search needs max states >= 2".into()));
    }
    let m = anchors.media_count();
    let mut attempts = Vec::new();
    let mut best: Option<StateSolution> = None;
    let mut chosen: Option<StateSolution> = None;
    for n in 2..=max_states {
        if !feasible(m, n) {
            log::info!("stopping at {n} states: {m} media are insufficient");
            break;
        }
        let sol = solve(anchors, n, config)?;
        log::info!("{n} states: minimum {:.4} Hz", sol.hz_minimum);
        let ok = sol.hz_minimum <= noise_hz;
        attempts.push(attempt(&sol, if ok { "satisfied" } else { "above noise" }));
        if best.as_ref().is_none_or(|b| sol.hz_minimum < b.hz_minimum) {
            best = Some(sol.clone());
        }
        if ok {
            chosen = Some(sol);
            break;
        }
    }
    let Some(mut sol) = chosen else {
        let mut sol = best.ok_or(Error::Infeasible { media: m, states: 2 })?;
        sol.diagnostics.satisfied = Some(false);
        sol.diagnostics.attempts = attempts;
        return Ok(sol);
    };
    while !sol.diagnostics.phantom_states.is_empty() && sol.n > 1 {
        let reduced = solve(anchors, sol.n - 1, config)?;
        let ok = reduced.hz_minimum <= noise_hz;
        attempts.push(attempt(&reduced, if ok { "phantom removed" } else { "phantom removal rejected" }));
        if !ok {
            break;
        }
        sol = reduced;
    }
    sol.diagnostics.satisfied = Some(true);
    sol.diagnostics.attempts = attempts;
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyThresholds {
    pub asymmetry: f64,
    pub axis_degrees: f64,
}

impl Default for DegeneracyThresholds {
    fn default() -> Self {
        Self {
            asymmetry: 0.1,
            axis_degrees: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub asymmetry: Vec<f64>,
    /// Largest angle between any two media's s_zz axes, degrees.
    pub max_axis_angle: f64,
    pub flagged: bool,
}

/// Flags averaging that left every medium's observed tensor axially
/// symmetric about a common axis.
pub fn degeneracy_check(observed: &[SaupeTensor], thresholds: &DegeneracyThresholds) -> Result<DegeneracyReport> {
    if observed.len() < 2 {
        return Err(Error::Validation("degeneracy check needs at least two media".into()));
    }
    let asymmetry: Vec<f64> = observed.iter().map(|t| t.asymmetry()).collect();
    let axes: Vec<_> = observed.iter().map(|t| t.principal_axes()[2]).collect();
    let mut max_axis_angle: f64 = 0.0;
    for i in 0..axes.len() {
        for j in i + 1..axes.len() {
            max_axis_angle = max_axis_angle.max(axis_angle(&axes[i], &axes[j]));
        }
    }
    let flagged = asymmetry.iter().all(|e| *e < thresholds.asymmetry) && max_axis_angle <= thresholds.axis_degrees;
    Ok(DegeneracyReport {
        asymmetry,
        max_axis_angle,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{tensor_from_principal, PrincipalFrame};

    fn arc_anchors() -> Vec<SaupeTensor> {
        vec![
            tensor_from_principal(&PrincipalFrame::new(3e-4, 5e-4, -8e-4, 0.0, 0.0, 0.0)).unwrap(),
            tensor_from_principal(&PrincipalFrame::new(-4e-4, -6e-4, 1e-3, 40.0, 50.0, -60.0)).unwrap(),
        ]
    }

    fn exact_set(eulers: &[EulerAngles], rho: &[f64]) -> AnchorSet {
        let anchors = arc_anchors();
        let observed = predicted_average(&anchors, eulers, rho);
        AnchorSet::new(vec!["m1".into(), "m2".into()], anchors, observed, "test").unwrap()
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasible(2, 2));
        assert!(!feasible(2, 3));
        assert!(feasible(1, 1));
        assert!(feasible(3, 3));
        assert!(feasible(5, 6));
        assert!(!feasible(5, 7));
    }

    #[test]
    fn hz_scale_matches_reported_minima() {
        assert!((hz_scale(9.13e-11) - 0.233).abs() < 1e-3);
        assert!((hz_scale(2.37e-10) - 0.375).abs() < 1e-3);
        assert_eq!(hz_scale(0.0), 0.0);
    }

    #[test]
    fn predicted_average_degenerate_cases() {
        let anchors = arc_anchors();
        let one = predicted_average(&anchors, &[EulerAngles::IDENTITY], &[1.0]);
        assert_eq!(one, anchors);
        let two = predicted_average(&anchors, &[EulerAngles::IDENTITY, EulerAngles::IDENTITY], &[0.3, 0.7]);
        for (a, b) in two.iter().zip(&anchors) {
            assert!((a.matrix() - b.matrix()).norm() < 1e-18);
        }
    }

    #[test]
    fn objective_zero_at_truth() {
        let eulers = [EulerAngles::IDENTITY, EulerAngles::new(30.0, 60.0, -20.0)];
        let set = exact_set(&eulers, &[0.6, 0.4]);
        assert!(objective(&set, &eulers, &[0.6, 0.4]) < 1e-30);
        let set1 = exact_set(&[EulerAngles::IDENTITY], &[1.0]);
        assert_eq!(objective(&set1, &[EulerAngles::IDENTITY, EulerAngles::new(1.0, 2.0, 3.0)], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        use lm::LeastSquares;
        let set = exact_set(&[EulerAngles::IDENTITY, EulerAngles::new(30.0, 60.0, -20.0)], &[0.6, 0.4]);
        let problem = StateProblem::new(&set, 3);
        let x = DVector::from_vec(vec![0.3, 1.1, -0.4, 2.0, 0.7, 1.5, -1.0, 2.2, 0.1, 0.3, 0.25]);
        let jac = problem.jacobian(&x);
        let h = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (problem.residuals(&xp) - problem.residuals(&xm)) / (2.0 * h);
            assert!((fd - jac.column(k)).amax() < 1e-7, "column {k}");
        }
    }

    #[test]
    fn infeasible_is_typed_error() {
        let set = exact_set(&[EulerAngles::IDENTITY], &[1.0]);
        match solve(&set, 3, &SolverConfig::default()) {
            Err(Error::Infeasible { media: 2, states: 3 }) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn recovers_noiseless_two_state_problem() {
        let truth = [EulerAngles::IDENTITY, EulerAngles::new(30.0, 60.0, -20.0)];
        let set = exact_set(&truth, &[0.65, 0.35]);
        let sol = solve(&set, 2, &SolverConfig::default()).unwrap();
        assert!(sol.hz_minimum < 1e-4, "{}", sol.hz_minimum);
        assert!((sol.states[0].occupancy - 0.65).abs() < 1e-6);
        assert!(sol.states[0].euler.angular_distance(&truth[0]) < 0.5);
        assert!(sol.states[1].euler.angular_distance(&truth[1]) < 0.5);
        assert!(sol.diagnostics.phantom_states.is_empty());
    }

    #[test]
    fn solution_is_deterministic() {
        let set = exact_set(&[EulerAngles::IDENTITY, EulerAngles::new(10.0, 40.0, 5.0)], &[0.5, 0.5]);
        let cfg = SolverConfig { starts: 8, ..Default::default() };
        let a = serde_json::to_string(&solve(&set, 2, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&solve(&set, 2, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_medium_is_reported() {
        let anchors = vec![arc_anchors()[0]];
        let observed = predicted_average(&anchors, &[EulerAngles::new(20.0, 30.0, 40.0)], &[1.0]);
        let set = AnchorSet::new(vec!["m1".into()], anchors, observed, "t").unwrap();
        let sol = solve(&set, 1, &SolverConfig { starts: 4, ..Default::default() }).unwrap();
        assert!(sol.diagnostics.single_medium);
        assert!(sol.hz_minimum < 1e-6);
    }

    #[test]
    fn degeneracy_axis_criterion() {
        let a = SaupeTensor::diagonal(-2e-4, -2e-4);
        let rotated = a.rotate(&EulerAngles::new(0.0, 90.0, 0.0));
        let r = degeneracy_check(&[a, rotated], &DegeneracyThresholds::default()).unwrap();
        assert!(r.asymmetry.iter().all(|e| *e < 1e-9));
        assert!(!r.flagged);
        let same = degeneracy_check(&[a, a.scale(2.0)], &DegeneracyThresholds::default()).unwrap();
        assert!(same.flagged);
        assert!(degeneracy_check(&[a], &DegeneracyThresholds::default()).is_err());
    }
}
