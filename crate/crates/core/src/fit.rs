//! Order-tensor estimation from assigned RDCs by SVD, and fit quality.
//!
//! Each matched observation contributes the design row
//! `D_max · (x² − z², y² − z², 2xy, 2xz, 2yz)` for the unknowns
//! `(s_xx, s_yy, s_xy, s_xz, s_yz)`; `s_zz` is eliminated by tracelessness.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Observation, RdcKey, RdcSet};
use crate::structure::VectorRecord;
use crate::tensor::{rdc_quadratic_form, DmaxTable, PrincipalFrame, SaupeTensor, VectorType};

pub const MIN_OBSERVATIONS: usize = 5;
/// Condition numbers above this flag a degenerate vector geometry.
pub const CONDITION_WARNING: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Weighting {
    /// Raw Hz residuals, minimizing `rdc_rmsd_raw`. Right when every
    /// coupling carries the same error in Hz.
    #[default]
    Unweighted,
    /// Rows scaled onto the N-H scale, so the fit minimizes `rdc_rmsd`.
    NhScaled,
    /// Rows scaled by `1 / error` where an error bound is recorded.
    InverseError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorFit {
    pub tensor: SaupeTensor,
    /// RMS residual with every type mapped onto the N-H scale, Hz.
    pub rdc_rmsd: f64,
    /// RMS residual in the RDCs' own units, Hz.
    pub rdc_rmsd_raw: f64,
    pub condition_number: f64,
    pub observations: usize,
    pub degenerate: bool,
}

/// `(vector, observation)` pairs keyed by residue and vector type.
pub fn match_observations<'a>(vectors: &'a [VectorRecord], rdcs: &'a RdcSet) -> Vec<(RdcKey, Vector3<f64>, Observation)> {
    let lookup: HashMap<(i32, VectorType), &Vector3<f64>> =
        vectors.iter().map(|v| ((v.residue, v.vector_type), &v.vector)).collect();
    rdcs.iter()
        .filter_map(|(k, obs)| lookup.get(&(k.residue, k.vector_type)).map(|v| (*k, **v, *obs)))
        .collect()
}

fn design_row(v: &Vector3<f64>, d_max: f64) -> [f64; 5] {
    let (x, y, z) = (v.x, v.y, v.z);
    [
        d_max * (x * x - z * z),
        d_max * (y * y - z * z),
        d_max * 2.0 * x * y,
        d_max * 2.0 * x * z,
        d_max * 2.0 * y * z,
    ]
}

pub fn svd_fit(vectors: &[VectorRecord], rdcs: &RdcSet, dmax: &DmaxTable) -> Result<TensorFit> {
    svd_fit_with(vectors, rdcs, dmax, Weighting::Unweighted)
}

pub fn svd_fit_with(vectors: &[VectorRecord], rdcs: &RdcSet, dmax: &DmaxTable, weighting: Weighting) -> Result<TensorFit> {
    let matched = match_observations(vectors, rdcs);
    if matched.len() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData {
            needed: MIN_OBSERVATIONS,
            have: matched.len(),
        });
    }
    let n = matched.len();
    let mut a = DMatrix::<f64>::zeros(n, 5);
    let mut b = DVector::<f64>::zeros(n);
    for (i, (key, v, obs)) in matched.iter().enumerate() {
        let w = match (weighting, obs.error) {
            (Weighting::NhScaled, _) => dmax.nh_scale(key.vector_type),
            (Weighting::InverseError, Some(e)) if e > 0.0 => 1.0 / e,
            _ => 1.0,
        };
        let row = design_row(v, dmax.get(key.vector_type));
        for (j, value) in row.iter().enumerate() {
            a[(i, j)] = w * value;
        }
        b[i] = w * obs.value;
    }
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition_number = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    let eps = s_max * n as f64 * f64::EPSILON;
    let solution = svd.solve(&b, eps).map_err(|e| Error::Validation(e.to_string()))?;
    let tensor = SaupeTensor::new(solution[0], solution[1], solution[2], solution[3], solution[4]);
    let degenerate = condition_number > CONDITION_WARNING;
    if degenerate {
        log::warn!("degenerate vector geometry: condition number {condition_number:.3e} over {n} observations");
    }
    let (raw, scaled) = residual_moments(&tensor, &matched, dmax);
    Ok(TensorFit {
        tensor,
        rdc_rmsd: (scaled / n as f64).sqrt(),
        rdc_rmsd_raw: (raw / n as f64).sqrt(),
        condition_number,
        observations: n,
        degenerate,
    })
}

/// Sums of squared residuals: raw, and N-H scaled.
fn residual_moments(t: &SaupeTensor, matched: &[(RdcKey, Vector3<f64>, Observation)], dmax: &DmaxTable) -> (f64, f64) {
    matched.iter().fold((0.0, 0.0), |(raw, scaled), (key, v, obs)| {
        let r = obs.value - dmax.get(key.vector_type) * rdc_quadratic_form(t, v);
        let w = dmax.nh_scale(key.vector_type);
        (raw + r * r, scaled + (r * w).powi(2))
    })
}

/// Observed-minus-backcalculated residuals, Hz.
pub fn residuals(t: &SaupeTensor, vectors: &[VectorRecord], rdcs: &RdcSet, dmax: &DmaxTable) -> Vec<(RdcKey, f64)> {
    match_observations(vectors, rdcs)
        .into_iter()
        .map(|(key, v, obs)| (key, obs.value - dmax.get(key.vector_type) * rdc_quadratic_form(t, &v)))
        .collect()
}

/// RMS residual with each type normalized to the N-H scale
/// (`w = D_max(N-H) / D_max(type)`).
pub fn rdc_rmsd(t: &SaupeTensor, vectors: &[VectorRecord], rdcs: &RdcSet, dmax: &DmaxTable) -> Result<f64> {
    let matched = match_observations(vectors, rdcs);
    if matched.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let (_, scaled) = residual_moments(t, &matched, dmax);
    Ok((scaled / matched.len() as f64).sqrt())
}

/// RMS residual in Hz without per-type scaling.
pub fn rdc_rmsd_raw(t: &SaupeTensor, vectors: &[VectorRecord], rdcs: &RdcSet, dmax: &DmaxTable) -> Result<f64> {
    let matched = match_observations(vectors, rdcs);
    if matched.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let (raw, _) = residual_moments(t, &matched, dmax);
    Ok((raw / matched.len() as f64).sqrt())
}

/// JSON-friendly summary of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub domain: String,
    pub medium: String,
    pub elements: [f64; 5],
    pub principal: PrincipalFrame,
    pub gdo: f64,
    pub asymmetry: f64,
    pub rdc_rmsd_hz: f64,
    pub rdc_rmsd_raw_hz: f64,
    pub condition_number: f64,
    pub observations: usize,
    pub degenerate: bool,
}

impl FitReport {
    pub fn new(domain: &str, medium: &str, fit: &TensorFit) -> Self {
        Self {
            domain: domain.to_string(),
            medium: medium.to_string(),
            elements: fit.tensor.elements(),
            principal: fit.tensor.eigendecompose(),
            gdo: fit.tensor.gdo(),
            asymmetry: fit.tensor.asymmetry(),
            rdc_rmsd_hz: fit.rdc_rmsd,
            rdc_rmsd_raw_hz: fit.rdc_rmsd_raw,
            condition_number: fit.condition_number,
            observations: fit.observations,
            degenerate: fit.degenerate,
        }
    }
}

/// CSV rows: domain, medium, the five elements, principal values, GDO, η, rmsd, condition, count.
pub fn write_fit_csv<W: std::io::Write>(writer: W, reports: &[FitReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "domain", "medium", "s_xx", "s_yy", "s_xy", "s_xz", "s_yz", "p_xx", "p_yy", "p_zz", "alpha", "beta", "gamma",
        "gdo", "asymmetry", "rdc_rmsd_hz", "condition_number", "observations",
    ])?;
    for r in reports {
        let mut row = vec![r.domain.clone(), r.medium.clone()];
        row.extend(r.elements.iter().map(|e| format!("{e:e}")));
        row.extend(
            [r.principal.s_xx, r.principal.s_yy, r.principal.s_zz]
                .iter()
                .map(|e| format!("{e:e}")),
        );
        row.extend(
            [r.principal.euler.alpha, r.principal.euler.beta, r.principal.euler.gamma]
                .iter()
                .map(|e| format!("{e:.4}")),
        );
        row.push(format!("{:e}", r.gdo));
        row.push(format!("{:.6}", r.asymmetry));
        row.push(format!("{:.6}", r.rdc_rmsd_hz));
        row.push(format!("{:.4e}", r.condition_number));
        row.push(r.observations.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fits of one domain, one per medium in a shared media order.
#[derive(Debug, Clone)]
pub struct DomainFits {
    pub name: String,
    pub fits: Vec<TensorFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub name: String,
    pub gdo: Vec<f64>,
    pub mean_gdo: f64,
    pub asymmetry: Vec<f64>,
}

/// Angles in degrees between corresponding principal axes (x, y, z) of a
/// domain's tensor and the static domain's tensor in one medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDifference {
    pub domain: String,
    pub medium_index: usize,
    pub axis_angles: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainComparison {
    pub domains: Vec<DomainSummary>,
    /// Index into `domains` of the domain with the highest mean GDO.
    pub static_domain: usize,
    pub frame_differences: Vec<FrameDifference>,
}

impl DomainComparison {
    pub fn static_name(&self) -> &str {
        &self.domains[self.static_domain].name
    }
}

pub fn axis_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.normalize().dot(&b.normalize()).abs().clamp(0.0, 1.0).acos().to_degrees()
}

/// Compares domains by GDO; the highest mean GDO is designated static.
pub fn order_tensor_report(domains: &[DomainFits]) -> Result<DomainComparison> {
    if domains.len() < 2 {
        return Err(Error::Validation("domain comparison needs at least two domains".into()));
    }
    let media = domains[0].fits.len();
    if media == 0 || domains.iter().any(|d| d.fits.len() != media) {
        return Err(Error::Validation("every domain needs one fit per medium".into()));
    }
    let summaries: Vec<DomainSummary> = domains
        .iter()
        .map(|d| {
            let gdo: Vec<f64> = d.fits.iter().map(|f| f.tensor.gdo()).collect();
            DomainSummary {
                name: d.name.clone(),
                mean_gdo: gdo.iter().sum::<f64>() / media as f64,
                gdo,
                asymmetry: d.fits.iter().map(|f| f.tensor.asymmetry()).collect(),
            }
        })
        .collect();
    let static_domain = summaries
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean_gdo.total_cmp(&b.1.mean_gdo))
        .map(|(i, _)| i)
        .unwrap();
    let mut frame_differences = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        if i == static_domain {
            continue;
        }
        for j in 0..media {
            let reference = domains[static_domain].fits[j].tensor.principal_axes();
            let axes = d.fits[j].tensor.principal_axes();
            frame_differences.push(FrameDifference {
                domain: d.name.clone(),
                medium_index: j,
                axis_angles: std::array::from_fn(|k| axis_angle(&reference[k], &axes[k])),
            });
        }
    }
    Ok(DomainComparison {
        domains: summaries,
        static_domain,
        frame_differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{build_vectors, ideal_helix, DomainRange};
    use crate::tensor::tensor_from_principal;

    fn observations_from(vectors: &[VectorRecord], t: &SaupeTensor, dmax: &DmaxTable) -> RdcSet {
        let mut set = RdcSet::new("m").unwrap();
        for v in vectors {
            set.insert(v.residue, v.vector_type, dmax.get(v.vector_type) * rdc_quadratic_form(t, &v.vector), None)
                .unwrap();
        }
        set
    }

    fn generic_vectors() -> Vec<VectorRecord> {
        [(0.3, 0.5, 0.81), (-0.7, 0.2, 0.1), (0.1, -0.9, 0.4), (0.5, 0.5, -0.7), (-0.2, -0.3, -0.9)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| VectorRecord {
                residue: i as i32 + 1,
                vector_type: VectorType::NH,
                vector: Vector3::new(x, y, z).normalize(),
            })
            .collect()
    }

    #[test]
    fn exactly_determined_system_interpolates() {
        let dmax = DmaxTable::default();
        let vectors = generic_vectors();
        let truth = tensor_from_principal(&PrincipalFrame::new(-4e-4, -6e-4, 1e-3, 40.0, 50.0, -60.0)).unwrap();
        let fit = svd_fit(&vectors, &observations_from(&vectors, &truth, &dmax), &dmax).unwrap();
        assert_eq!(fit.observations, 5);
        assert!(fit.rdc_rmsd < 1e-9);
        assert!((fit.tensor.matrix() - truth.matrix()).norm() < 1e-12);
    }

    #[test]
    fn too_few_observations() {
        let dmax = DmaxTable::default();
        let vectors = &generic_vectors()[..4];
        let set = observations_from(vectors, &SaupeTensor::diagonal(1e-4, 2e-4), &dmax);
        assert!(matches!(svd_fit(vectors, &set, &dmax), Err(Error::InsufficientData { needed: 5, have: 4 })));
    }

    #[test]
    fn parallel_vectors_flag_degeneracy() {
        let dmax = DmaxTable::default();
        let vectors: Vec<VectorRecord> = (1..=10)
            .map(|i| VectorRecord {
                residue: i,
                vector_type: VectorType::NH,
                vector: Vector3::new(0.0, 0.6, 0.8),
            })
            .collect();
        let fit = svd_fit(&vectors, &observations_from(&vectors, &SaupeTensor::diagonal(1e-4, 2e-4), &dmax), &dmax).unwrap();
        assert!(fit.degenerate);
        assert!(fit.condition_number > CONDITION_WARNING);
    }

    #[test]
    fn helix_noiseless_recovery() {
        let dmax = DmaxTable::default();
        let h = ideal_helix(20);
        let vectors = build_vectors(&h, &VectorType::ALL, &DomainRange::new(1, 20).unwrap());
        let truth = tensor_from_principal(&PrincipalFrame::new(3e-4, 5e-4, -8e-4, 0.0, 0.0, 0.0)).unwrap();
        let fit = svd_fit(&vectors, &observations_from(&vectors, &truth, &dmax), &dmax).unwrap();
        assert!((fit.tensor.matrix() - truth.matrix()).norm() < 1e-8);
        assert!(!fit.degenerate, "condition {}", fit.condition_number);
    }

    #[test]
    fn rmsd_of_zero_tensor_is_rms_of_data() {
        let dmax = DmaxTable::default();
        let h = ideal_helix(12);
        let vectors = build_vectors(&h, &[VectorType::NH], &h.full_range().unwrap());
        let truth = SaupeTensor::diagonal(3e-4, 5e-4);
        let set = observations_from(&vectors, &truth, &dmax);
        let rms = (set.iter().map(|(_, o)| o.value * o.value).sum::<f64>() / set.len() as f64).sqrt();
        assert!((rdc_rmsd(&SaupeTensor::ZERO, &vectors, &set, &dmax).unwrap() - rms).abs() < 1e-9);
        assert!(rdc_rmsd(&truth, &vectors, &set, &dmax).unwrap() < 1e-9);
        assert!(rdc_rmsd(&truth, &[], &set, &dmax).is_err());
    }

    #[test]
    fn scaled_rmsd_normalizes_types() {
        let dmax = DmaxTable::default();
        let v = VectorRecord {
            residue: 1,
            vector_type: VectorType::CN,
            vector: Vector3::z(),
        };
        let mut set = RdcSet::new("m").unwrap();
        set.insert(1, VectorType::CN, 1.0, None).unwrap();
        let scaled = rdc_rmsd(&SaupeTensor::ZERO, &[v], &set, &dmax).unwrap();
        let raw = rdc_rmsd_raw(&SaupeTensor::ZERO, &[v], &set, &dmax).unwrap();
        assert_eq!(raw, 1.0);
        assert!((scaled - dmax.nh / dmax.cn.abs()).abs() < 1e-9);
    }

    #[test]
    fn observation_order_does_not_matter() {
        let dmax = DmaxTable::default();
        let h = ideal_helix(15);
        let mut vectors = build_vectors(&h, &VectorType::ALL, &h.full_range().unwrap());
        let truth = SaupeTensor::new(2e-4, -5e-4, 1e-4, -3e-4, 2e-4);
        let mut set = observations_from(&vectors, &truth, &dmax);
        // perturb deterministically so the fit is not exact
        let keys: Vec<RdcKey> = set.iter().map(|(k, _)| *k).collect();
        let mut perturbed = RdcSet::new("m").unwrap();
        for (i, k) in keys.iter().enumerate() {
            let o = set.get(k.residue, k.vector_type).unwrap();
            perturbed.insert(k.residue, k.vector_type, o.value + ((i * 7919) % 13) as f64 / 13.0 - 0.5, None).unwrap();
        }
        set = perturbed;
        let a = svd_fit(&vectors, &set, &dmax).unwrap();
        vectors.reverse();
        let b = svd_fit(&vectors, &set, &dmax).unwrap();
        assert!((a.tensor.matrix() - b.tensor.matrix()).norm() < 1e-15);
    }

    #[test]
    fn inverse_error_weighting_changes_fit() {
        let dmax = DmaxTable::default();
        let h = ideal_helix(10);
        let vectors = build_vectors(&h, &[VectorType::NH, VectorType::CaHa], &h.full_range().unwrap());
        let truth = SaupeTensor::new(2e-4, -5e-4, 1e-4, -3e-4, 2e-4);
        let mut set = RdcSet::new("m").unwrap();
        for (i, v) in vectors.iter().enumerate() {
            let d = dmax.get(v.vector_type) * rdc_quadratic_form(&truth, &v.vector);
            let (bump, err) = if i % 3 == 0 { (5.0, 10.0) } else { (0.0, 0.1) };
            set.insert(v.residue, v.vector_type, d + bump, Some(err)).unwrap();
        }
        let plain = svd_fit(&vectors, &set, &dmax).unwrap();
        let weighted = svd_fit_with(&vectors, &set, &dmax, Weighting::InverseError).unwrap();
        let err = |f: &TensorFit| (f.tensor.matrix() - truth.matrix()).norm();
        assert!(err(&weighted) < err(&plain));
    }

    #[test]
    fn nh_scaled_fit_minimizes_reported_rmsd() {
        let dmax = DmaxTable::default();
        let h = ideal_helix(10);
        let vectors = build_vectors(&h, &[VectorType::NH, VectorType::CN], &h.full_range().unwrap());
        let truth = SaupeTensor::new(2e-4, -5e-4, 1e-4, -3e-4, 2e-4);
        let mut set = RdcSet::new("m").unwrap();
        for (i, v) in vectors.iter().enumerate() {
            let d = dmax.get(v.vector_type) * rdc_quadratic_form(&truth, &v.vector);
            set.insert(v.residue, v.vector_type, d + if i % 2 == 0 { 0.7 } else { -0.4 }, None).unwrap();
        }
        let plain = svd_fit(&vectors, &set, &dmax).unwrap();
        let scaled = svd_fit_with(&vectors, &set, &dmax, Weighting::NhScaled).unwrap();
        assert!(scaled.rdc_rmsd <= plain.rdc_rmsd + 1e-12);
        assert!(plain.rdc_rmsd_raw <= scaled.rdc_rmsd_raw + 1e-12);
    }

    #[test]
    fn report_designates_higher_gdo_static() {
        let fit = |t: SaupeTensor| TensorFit {
            tensor: t,
            rdc_rmsd: 0.0,
            rdc_rmsd_raw: 0.0,
            condition_number: 1.0,
            observations: 10,
            degenerate: false,
        };
        let strong = DomainFits {
            name: "a".into(),
            fits: vec![fit(SaupeTensor::diagonal(3e-4, 5e-4)), fit(SaupeTensor::diagonal(-4e-4, -6e-4))],
        };
        let weak = DomainFits {
            name: "b".into(),
            fits: vec![fit(SaupeTensor::diagonal(1e-4, 2e-4)), fit(SaupeTensor::diagonal(-2e-4, -1e-4))],
        };
        let report = order_tensor_report(&[weak, strong]).unwrap();
        assert_eq!(report.static_name(), "a");
        assert_eq!(report.frame_differences.len(), 2);
        assert!(order_tensor_report(&[]).is_err());
    }
}
