//! Dynamic profiles: RDC-rmsd of growing fragments against a template.
//!
//! A forward profile fits one tensor per medium to residues `start..=k` for
//! increasing `k`; a backward profile grows from the C-terminus. Each point
//! reports the combined raw rmsd (Hz) over all media. Profiles are computed
//! against the supplied structure rather than a de-novo fold.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{match_observations, residuals, svd_fit};
use crate::sim::RdcSet;
use crate::structure::{build_vectors, BackboneStructure, DomainRange};
use crate::tensor::{DmaxTable, VectorType};

/// Matched RDCs per medium required before a prefix is fitted.
pub const MIN_PREFIX_RDCS: usize = 8;
/// Statement carried by every profile report.
pub const TEMPLATE_NOTE: &str = "profile computed against the supplied template structure, not a de-novo fold";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Last residue added to the fragment.
    pub residue: i32,
    pub rmsd_hz: f64,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicProfile {
    pub direction: Direction,
    pub points: Vec<ProfilePoint>,
    pub media: usize,
    pub noise_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Typical,
    Anomalous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FragmentMode {
    RigidBody,
    Uncorrelated,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVerdict {
    pub onset: Option<i32>,
    pub classification: Classification,
    pub fragment_mode: FragmentMode,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnsetConfig {
    /// Onset threshold floor as a multiple of the noise level.
    pub noise_multiple: f64,
    /// Multiple of the plateau spread added to the plateau estimate.
    pub spread_multiple: f64,
    /// Consecutive points that must stay above threshold.
    pub persistence: usize,
    /// Fraction of increasing steps that marks an uncorrelated fragment.
    pub increasing_fraction: f64,
    /// Shortest fragment that can be classified.
    pub min_fragment: usize,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            noise_multiple: 2.0,
            spread_multiple: 3.0,
            persistence: 3,
            increasing_fraction: 0.7,
            min_fragment: 10,
        }
    }
}

fn prefix(span: &DomainRange, direction: Direction, last: i32) -> DomainRange {
    match direction {
        Direction::Forward => DomainRange { start: span.start, end: last },
        Direction::Backward => DomainRange { start: last, end: span.end },
    }
}

/// Sum of squared raw residuals and count for one fragment over all media,
/// or `None` when a medium has too few matched RDCs.
fn fragment_fit(template: &BackboneStructure, rdcs: &[RdcSet], range: &DomainRange, dmax: &DmaxTable) -> Result<Option<(f64, usize)>> {
    let vectors = build_vectors(template, &VectorType::ALL, range);
    let mut sum = 0.0;
    let mut count = 0;
    for set in rdcs {
        let restricted = set.restrict(range);
        if match_observations(&vectors, &restricted).len() < MIN_PREFIX_RDCS {
            return Ok(None);
        }
        let fit = svd_fit(&vectors, &restricted, dmax)?;
        for (_, r) in residuals(&fit.tensor, &vectors, &restricted, dmax) {
            sum += r * r;
            count += 1;
        }
    }
    Ok(Some((sum, count)))
}

/// Profile over `span`, growing from `span.start` (forward) or `span.end` (backward).
pub fn compute_profile(
    template: &BackboneStructure,
    rdcs: &[RdcSet],
    direction: Direction,
    span: &DomainRange,
    noise_hz: f64,
    dmax: &DmaxTable,
) -> Result<DynamicProfile> {
    if rdcs.is_empty() {
        return Err(Error::Validation("a profile needs at least one medium".into()));
    }
    template.check_range(span)?;
    let mut ends: Vec<i32> = template
        .residues()
        .iter()
        .map(|r| r.seq)
        .filter(|s| span.contains(*s))
        .collect();
    if direction == Direction::Backward {
        ends.reverse();
    }
    let fits: Vec<Option<ProfilePoint>> = ends
        .par_iter()
        .map(|&last| {
            let range = prefix(span, direction, last);
            Ok(fragment_fit(template, rdcs, &range, dmax)?.map(|(sum, count)| ProfilePoint {
                residue: last,
                rmsd_hz: (sum / count as f64).sqrt(),
                observations: count,
            }))
        })
        .collect::<Result<_>>()?;
    // prefixes only grow, so the first fittable one starts the profile
    let points: Vec<ProfilePoint> = fits.into_iter().skip_while(Option::is_none).flatten().collect();
    if points.is_empty() {
        return Err(Error::InsufficientData {
            needed: MIN_PREFIX_RDCS,
            have: 0,
        });
    }
    Ok(DynamicProfile {
        direction,
        points,
        media: rdcs.len(),
        noise_hz,
    })
}

/// Profile grown from one end of the whole template.
pub fn compute_full_profile(
    template: &BackboneStructure,
    rdcs: &[RdcSet],
    direction: Direction,
    noise_hz: f64,
    dmax: &DmaxTable,
) -> Result<DynamicProfile> {
    let span = template.full_range().ok_or(Error::NoAtoms)?;
    compute_profile(template, rdcs, direction, &span, noise_hz, dmax)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median and scaled median absolute deviation.
fn robust_location(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    let m = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    (m, 1.482_6 * median(&mut dev))
}

/// Threshold in force at point `i`, estimated from the points before it.
pub fn onset_threshold(profile: &DynamicProfile, i: usize, config: &OnsetConfig) -> f64 {
    let floor = config.noise_multiple * profile.noise_hz;
    if i == 0 {
        return floor;
    }
    let earlier: Vec<f64> = profile.points[..i].iter().map(|p| p.rmsd_hz).collect();
    let (plateau, spread) = robust_location(&earlier);
    floor.max(plateau + config.spread_multiple * spread)
}

/// First residue where the profile rises above the onset threshold and stays
/// there for the configured number of points.
pub fn detect_onset(profile: &DynamicProfile, config: &OnsetConfig) -> Result<ProfileVerdict> {
    if profile.points.len() < 10 {
        return Err(Error::InsufficientData {
            needed: 10,
            have: profile.points.len(),
        });
    }
    let persistence = config.persistence.max(1);
    let pts = &profile.points;
    let onset = (1..=pts.len() - persistence).find_map(|i| {
        let threshold = onset_threshold(profile, i, config);
        pts[i..i + persistence]
            .iter()
            .all(|p| p.rmsd_hz > threshold)
            .then_some(pts[i].residue)
    });
    Ok(ProfileVerdict {
        onset,
        classification: if onset.is_some() {
            Classification::Anomalous
        } else {
            Classification::Typical
        },
        fragment_mode: FragmentMode::Unknown,
        note: TEMPLATE_NOTE.to_string(),
    })
}

/// Mode of a fragment judged from its own profile.
pub fn fragment_mode(profile: &DynamicProfile, config: &OnsetConfig) -> FragmentMode {
    let pts = &profile.points;
    if pts.len() < 2 {
        return FragmentMode::Unknown;
    }
    let limit = config.noise_multiple * profile.noise_hz;
    if pts.iter().all(|p| p.rmsd_hz <= limit) {
        return FragmentMode::RigidBody;
    }
    let steps = pts.len() - 1;
    let rising = pts.windows(2).filter(|w| w[1].rmsd_hz > w[0].rmsd_hz).count();
    let last = pts[steps].rmsd_hz;
    if last > limit && rising as f64 >= config.increasing_fraction * steps as f64 {
        FragmentMode::Uncorrelated
    } else {
        FragmentMode::Unknown
    }
}

/// Classifies the fragment `span`, profiled in `direction`.
pub fn classify_fragment(
    template: &BackboneStructure,
    rdcs: &[RdcSet],
    span: &DomainRange,
    direction: Direction,
    noise_hz: f64,
    dmax: &DmaxTable,
    config: &OnsetConfig,
) -> Result<FragmentMode> {
    if span.len() < config.min_fragment {
        return Ok(FragmentMode::Unknown);
    }
    let profile = compute_profile(template, rdcs, direction, span, noise_hz, dmax)?;
    Ok(fragment_mode(&profile, config))
}

/// Profile, onset and, past an onset, the mode of the remaining fragment.
/// The fragment starts `offset` residues beyond the onset.
pub fn analyze(
    template: &BackboneStructure,
    rdcs: &[RdcSet],
    direction: Direction,
    noise_hz: f64,
    dmax: &DmaxTable,
    config: &OnsetConfig,
    offset: i32,
) -> Result<(DynamicProfile, ProfileVerdict)> {
    let profile = compute_full_profile(template, rdcs, direction, noise_hz, dmax)?;
    let mut verdict = detect_onset(&profile, config)?;
    if let Some(onset) = verdict.onset {
        let full = template.full_range().ok_or(Error::NoAtoms)?;
        let span = match direction {
            Direction::Forward => DomainRange::new(onset + offset, full.end),
            Direction::Backward => DomainRange::new(full.start, onset - offset),
        };
        verdict.fragment_mode = match span {
            Ok(span) if template.check_range(&span).is_ok() => {
                classify_fragment(template, rdcs, &span, direction, noise_hz, dmax, config).unwrap_or(FragmentMode::Unknown)
            }
            _ => FragmentMode::Unknown,
        };
    }
    Ok((profile, verdict))
}

/// CSV with columns direction, residue, rmsd_hz.
pub fn write_profile_csv<W: std::io::Write>(writer: W, profiles: &[&DynamicProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["direction", "residue", "rmsd_hz"])?;
    for p in profiles {
        for pt in &p.points {
            w.write_record([p.direction.to_string(), pt.residue.to_string(), format!("{:.6}", pt.rmsd_hz)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{add_noise, simulate_rdcs};
    use crate::structure::helix40;
    use crate::tensor::PrincipalFrame;

    fn constructed(values: &[f64], noise: f64) -> DynamicProfile {
        DynamicProfile {
            direction: Direction::Forward,
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| ProfilePoint {
                    residue: i as i32 + 1,
                    rmsd_hz: v,
                    observations: 8,
                })
                .collect(),
            media: 1,
            noise_hz: noise,
        }
    }

    #[test]
    fn flat_profile_is_typical() {
        let v = detect_onset(&constructed(&[0.5; 30], 1.0), &OnsetConfig::default()).unwrap();
        assert_eq!(v.classification, Classification::Typical);
        assert!(v.onset.is_none());
        let high = detect_onset(&constructed(&[7.0; 30], 1.0), &OnsetConfig::default()).unwrap();
        assert!(high.onset.is_none());
    }

    #[test]
    fn step_profile_onset() {
        let values: Vec<f64> = (1..=80).map(|r| if r < 50 { 0.5 } else { 3.0 }).collect();
        let v = detect_onset(&constructed(&values, 1.0), &OnsetConfig::default()).unwrap();
        assert_eq!(v.onset, Some(50));
        assert_eq!(v.classification, Classification::Anomalous);
    }

    #[test]
    fn short_profiles_are_rejected() {
        assert!(detect_onset(&constructed(&[0.1; 9], 1.0), &OnsetConfig::default()).is_err());
    }

    #[test]
    fn blip_without_persistence_is_ignored() {
        let mut values = vec![0.5; 30];
        values[12] = 5.0;
        values[13] = 5.0;
        let v = detect_onset(&constructed(&values, 1.0), &OnsetConfig::default()).unwrap();
        assert!(v.onset.is_none());
    }

    #[test]
    fn noiseless_static_profile_is_zero() {
        let h = helix40();
        let dmax = DmaxTable::default();
        let frame = PrincipalFrame::new(3e-4, 5e-4, -8e-4, 0.0, 0.0, 0.0);
        let set = simulate_rdcs(&h, &frame, &VectorType::ALL, &h.full_range().unwrap(), &dmax, "S1").unwrap();
        for dir in [Direction::Forward, Direction::Backward] {
            let p = compute_full_profile(&h, std::slice::from_ref(&set), dir, 1.0, &dmax).unwrap();
            assert!(p.points.len() >= 35);
            assert!(p.points.iter().all(|pt| pt.rmsd_hz <= 1e-6));
        }
        let noisy = add_noise(&set, 1.0, 3).unwrap();
        let p = compute_full_profile(&h, &[noisy], Direction::Forward, 1.0, &dmax).unwrap();
        let last = p.points.last().unwrap().rmsd_hz;
        assert!(last > 0.3 && last < 1.0, "{last}");
    }

    #[test]
    fn fragment_mode_rules() {
        let cfg = OnsetConfig::default();
        assert_eq!(fragment_mode(&constructed(&[0.4; 12], 1.0), &cfg), FragmentMode::RigidBody);
        let rising: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
        assert_eq!(fragment_mode(&constructed(&rising, 1.0), &cfg), FragmentMode::Uncorrelated);
        let h = helix40();
        let span = DomainRange::new(30, 34).unwrap();
        let set = RdcSet::new("m").unwrap();
        assert_eq!(
            classify_fragment(&h, &[set], &span, Direction::Forward, 1.0, &DmaxTable::default(), &cfg).unwrap(),
            FragmentMode::Unknown
        );
    }

    #[test]
    fn profile_csv_layout() {
        let p = constructed(&[0.25, 0.5], 1.0);
        let mut out = Vec::new();
        write_profile_csv(&mut out, &[&p]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "direction,residue,rmsd_hz\nforward,1,0.250000\nforward,2,0.500000\n");
    }
}
