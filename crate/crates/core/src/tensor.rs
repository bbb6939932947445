//! Saupe order-tensor algebra.
//!
//! A [`SaupeTensor`] stores the five independent elements of a symmetric
//! traceless 3×3 order matrix; `s_zz` is always `-(s_xx + s_yy)`. RDCs are
//! computed as `D = D_max · vᵀ S v` for a unit internuclear vector `v`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::EulerAngles;

/// Absolute tolerance on the trace of principal order parameters.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Eigenvalue magnitudes closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Tolerance on `|v| = 1` for internuclear vectors.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Internuclear vector kinds with an assigned dipolar coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VectorType {
    #[serde(rename = "C'-N")]
    CN,
    #[serde(rename = "N-H")]
    NH,
    #[serde(rename = "C'-H")]
    CH,
    #[serde(rename = "CA-HA")]
    CaHa,
}

impl VectorType {
    pub const ALL: [VectorType; 4] = [VectorType::CN, VectorType::NH, VectorType::CH, VectorType::CaHa];

    pub fn label(self) -> &'static str {
        match self {
            VectorType::CN => "C'-N",
            VectorType::NH => "N-H",
            VectorType::CH => "C'-H",
            VectorType::CaHa => "CA-HA",
        }
    }
}

impl fmt::Display for VectorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VectorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C'-N" | "C-N" | "CN" => Ok(VectorType::CN),
            "N-H" | "NH" => Ok(VectorType::NH),
            "C'-H" | "C-H" | "CH" => Ok(VectorType::CH),
            "CA-HA" | "CAHA" => Ok(VectorType::CaHa),
            other => Err(Error::Validation(format!("unknown vector type {other:?}"))),
        }
    }
}

// gyromagnetic ratios, rad s^-1 T^-1
const GAMMA_H: f64 = 267.522_128e6;
const GAMMA_C: f64 = 67.282_84e6;
const GAMMA_N: f64 = -27.116e6;

/// Per-type dipolar scaling constants in Hz.
///
/// N-H is fixed at 24350 Hz; the other types follow from the ratio of
/// gyromagnetic products over cubed bond lengths relative to N-H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmaxTable {
    pub cn: f64,
    pub nh: f64,
    pub ch: f64,
    pub caha: f64,
}

impl DmaxTable {
    pub const NH_HZ: f64 = 24350.0;
    pub const R_NH: f64 = 1.02;
    pub const R_CN: f64 = 1.33;
    pub const R_CH: f64 = 2.04;
    pub const R_CAHA: f64 = 1.09;

    /// Builds the table from an N-H constant and bond lengths in Å.
    pub fn from_bond_lengths(nh_hz: f64, r_nh: f64, r_cn: f64, r_ch: f64, r_caha: f64) -> Self {
        let scale = |g1: f64, g2: f64, r: f64| nh_hz * (g1 * g2) / (GAMMA_N * GAMMA_H) * (r_nh / r).powi(3);
        Self {
            cn: scale(GAMMA_C, GAMMA_N, r_cn),
            nh: nh_hz,
            ch: scale(GAMMA_C, GAMMA_H, r_ch),
            caha: scale(GAMMA_C, GAMMA_H, r_caha),
        }
    }

    pub fn get(&self, vt: VectorType) -> f64 {
        match vt {
            VectorType::CN => self.cn,
            VectorType::NH => self.nh,
            VectorType::CH => self.ch,
            VectorType::CaHa => self.caha,
        }
    }

    /// Factor mapping an RDC of type `vt` onto the N-H scale.
    pub fn nh_scale(&self, vt: VectorType) -> f64 {
        (self.nh / self.get(vt)).abs()
    }
}

impl Default for DmaxTable {
    fn default() -> Self {
        Self::from_bond_lengths(Self::NH_HZ, Self::R_NH, Self::R_CN, Self::R_CH, Self::R_CAHA)
    }
}

/// Symmetric traceless order tensor stored as `(s_xx, s_yy, s_xy, s_xz, s_yz)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SaupeTensor {
    pub s_xx: f64,
    pub s_yy: f64,
    pub s_xy: f64,
    pub s_xz: f64,
    pub s_yz: f64,
}

/// Principal order parameters plus the z-y-z rotation of the principal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalFrame {
    pub s_xx: f64,
    pub s_yy: f64,
    pub s_zz: f64,
    pub euler: EulerAngles,
}

impl PrincipalFrame {
    pub fn new(s_xx: f64, s_yy: f64, s_zz: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            s_xx,
            s_yy,
            s_zz,
            euler: EulerAngles::new(alpha, beta, gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.s_xx, self.s_yy, self.s_zz];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite principal order parameter".into()));
        }
        let trace = values.iter().sum::<f64>();
        if trace.abs() > TRACE_TOLERANCE {
            return Err(Error::Validation(format!("principal order parameters are not traceless (sum = {trace:e})")));
        }
        Ok(())
    }
}

impl SaupeTensor {
    pub const ZERO: SaupeTensor = SaupeTensor {
        s_xx: 0.0,
        s_yy: 0.0,
        s_xy: 0.0,
        s_xz: 0.0,
        s_yz: 0.0,
    };

    pub fn new(s_xx: f64, s_yy: f64, s_xy: f64, s_xz: f64, s_yz: f64) -> Self {
        Self { s_xx, s_yy, s_xy, s_xz, s_yz }
    }

    pub fn from_elements(e: [f64; 5]) -> Self {
        Self::new(e[0], e[1], e[2], e[3], e[4])
    }

    pub fn elements(&self) -> [f64; 5] {
        [self.s_xx, self.s_yy, self.s_xy, self.s_xz, self.s_yz]
    }

    pub fn s_zz(&self) -> f64 {
        -(self.s_xx + self.s_yy)
    }

    pub fn diagonal(s_xx: f64, s_yy: f64) -> Self {
        Self::new(s_xx, s_yy, 0.0, 0.0, 0.0)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.s_xx, self.s_xy, self.s_xz, self.s_xy, self.s_yy, self.s_yz, self.s_xz, self.s_yz,
            self.s_zz(),
        )
    }

    /// Symmetric traceless projection of an arbitrary 3×3 matrix.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let third = m.trace() / 3.0;
        Self::new(
            m[(0, 0)] - third,
            m[(1, 1)] - third,
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        )
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_elements(self.elements().map(|e| e * factor))
    }

    pub fn add(&self, other: &SaupeTensor) -> Self {
        let (a, b) = (self.elements(), other.elements());
        Self::from_elements([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3], a[4] + b[4]])
    }

    /// Frobenius norm of the full 3×3 matrix.
    pub fn frobenius(&self) -> f64 {
        self.matrix().norm()
    }

    pub fn is_physical(&self) -> bool {
        let eig = SymmetricEigen::new(self.matrix());
        eig.eigenvalues.iter().all(|v| (-1.0..=1.0).contains(v))
    }

    /// General degree of order, `sqrt(2/3 · Σ s_ij²)`.
    pub fn gdo(&self) -> f64 {
        (2.0 / 3.0 * self.matrix().norm_squared()).sqrt()
    }

    /// Active rotation `ξ · S · ξᵀ`.
    pub fn rotate(&self, e: &EulerAngles) -> Self {
        let r = e.matrix();
        Self::from_matrix(&(r * self.matrix() * r.transpose()))
    }

    /// The tensor seen by a body after it is rotated by `e`, expressed in the
    /// body's own (unrotated) frame: `ξᵀ · S · ξ`.
    pub fn seen_by_rotated(&self, e: &EulerAngles) -> Self {
        let r = e.matrix();
        Self::from_matrix(&(r.transpose() * self.matrix() * r))
    }

    pub fn eigendecompose(&self) -> PrincipalFrame {
        eigendecompose(self)
    }

    /// Asymmetry parameter `η = (s_xx − s_yy) / s_zz` in the canonical frame.
    pub fn asymmetry(&self) -> f64 {
        let pf = self.eigendecompose();
        if pf.s_zz.abs() < f64::MIN_POSITIVE {
            return 0.0;
        }
        ((pf.s_xx - pf.s_yy) / pf.s_zz).abs().min(1.0)
    }

    /// Unit principal axes `[x, y, z]` of the canonical frame.
    pub fn principal_axes(&self) -> [Vector3<f64>; 3] {
        let r = self.eigendecompose().euler.matrix();
        [r.column(0).into(), r.column(1).into(), r.column(2).into()]
    }
}

/// Builds `S = ξ · diag(s_xx, s_yy, s_zz) · ξᵀ`.
pub fn tensor_from_principal(frame: &PrincipalFrame) -> Result<SaupeTensor> {
    frame.validate()?;
    let r = frame.euler.matrix();
    let d = Matrix3::from_diagonal(&Vector3::new(frame.s_xx, frame.s_yy, frame.s_zz));
    Ok(SaupeTensor::from_matrix(&(r * d * r.transpose())))
}

/// Canonical principal frame: `|s_zz| ≥ |s_yy| ≥ |s_xx|`, right-handed axes.
///
/// Ties in magnitude (within [`TIE_TOLERANCE`]) are ordered by signed value,
/// larger first toward z. When `s_xx` and `s_yy` are degenerate the in-plane
/// axes are fixed by `gamma = 0`; a fully degenerate (zero) tensor reports the
/// identity rotation.
pub fn eigendecompose(t: &SaupeTensor) -> PrincipalFrame {
    let eig = SymmetricEigen::new(t.matrix());
    let mut order = [0usize, 1, 2];
    // z first: larger magnitude, then larger signed value
    order.sort_by(|&a, &b| {
        let (va, vb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        if (va.abs() - vb.abs()).abs() <= TIE_TOLERANCE {
            vb.partial_cmp(&va).unwrap()
        } else {
            vb.abs().partial_cmp(&va.abs()).unwrap()
        }
    });
    let (iz, iy, ix) = (order[0], order[1], order[2]);
    let (s_zz, s_yy, s_xx) = (eig.eigenvalues[iz], eig.eigenvalues[iy], eig.eigenvalues[ix]);

    let fix_sign = |v: Vector3<f64>| {
        let imax = v.iamax();
        if v[imax] < 0.0 {
            -v
        } else {
            v
        }
    };
    let z_axis = fix_sign(eig.eigenvectors.column(iz).into_owned()).normalize();
    let mut x_axis = fix_sign(eig.eigenvectors.column(ix).into_owned());
    // re-orthogonalize against z in case of near-degenerate eigenvectors
    x_axis = (x_axis - z_axis * z_axis.dot(&x_axis)).normalize();
    let y_axis = z_axis.cross(&x_axis);
    let rotation = Matrix3::from_columns(&[x_axis, y_axis, z_axis]);

    let all_tied = (s_zz - s_xx).abs() <= TIE_TOLERANCE;
    let xy_tied = (s_xx - s_yy).abs() <= TIE_TOLERANCE;
    let euler = if all_tied {
        EulerAngles::IDENTITY
    } else if xy_tied {
        let e = EulerAngles::from_matrix(&rotation);
        EulerAngles::new(e.alpha, e.beta, 0.0).canonical()
    } else {
        EulerAngles::from_matrix(&rotation)
    };
    PrincipalFrame { s_xx, s_yy, s_zz, euler }
}

/// `D = D_max · vᵀ S v`.
pub fn compute_rdc(t: &SaupeTensor, v: &Vector3<f64>, d_max: f64) -> Result<f64> {
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Validation(format!("internuclear vector is not unit length (|v| = {norm})")));
    }
    Ok(d_max * rdc_quadratic_form(t, v))
}

/// `vᵀ S v` with no normalization check.
#[inline]
pub(crate) fn rdc_quadratic_form(t: &SaupeTensor, v: &Vector3<f64>) -> f64 {
    let (x, y, z) = (v.x, v.y, v.z);
    t.s_xx * (x * x - z * z) + t.s_yy * (y * y - z * z) + 2.0 * (t.s_xy * x * y + t.s_xz * x * z + t.s_yz * y * z)
}

/// One projected principal-axis direction for a sinusoidal (Sanson–Flamsteed) map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfPoint {
    pub label: String,
    pub longitude_deg: f64,
    pub latitude_deg: f64,
    pub x_sinusoidal: f64,
    pub y_sinusoidal: f64,
}

impl SfPoint {
    pub fn from_direction(label: impl Into<String>, v: &Vector3<f64>) -> Self {
        let v = v.normalize();
        let latitude = v.z.clamp(-1.0, 1.0).asin().to_degrees();
        let longitude = if v.x.abs() < 1e-15 && v.y.abs() < 1e-15 {
            0.0
        } else {
            crate::euler::wrap_degrees(v.y.atan2(v.x).to_degrees())
        };
        Self {
            label: label.into(),
            longitude_deg: longitude,
            latitude_deg: latitude,
            x_sinusoidal: longitude * latitude.to_radians().cos(),
            y_sinusoidal: latitude,
        }
    }
}

/// Sinusoidal-projection points for the three principal axes, both directions
/// of each axis: labels `Sxx+`, `Sxx-`, `Syy+`, … `Szz-`.
pub fn sf_projection(t: &SaupeTensor) -> [Vec<SfPoint>; 3] {
    let axes = t.principal_axes();
    let names = ["Sxx", "Syy", "Szz"];
    std::array::from_fn(|i| {
        vec![
            SfPoint::from_direction(format!("{}+", names[i]), &axes[i]),
            SfPoint::from_direction(format!("{}-", names[i]), &(-axes[i])),
        ]
    })
}

pub fn write_sf_csv<W: std::io::Write>(writer: W, points: &[SfPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

impl fmt::Display for SaupeTensor {
    /// Five-element line: `s_xx s_yy s_xy s_xz s_yz`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} {:e} {:e} {:e} {:e}", self.s_xx, self.s_yy, self.s_xy, self.s_xz, self.s_yz)
    }
}

impl FromStr for SaupeTensor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let line = s.split('#').next().unwrap_or("").trim();
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|e| Error::Validation(format!("bad tensor element {tok:?}: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != 5 {
            return Err(Error::Validation(format!("tensor line needs 5 elements, found {}", values.len())));
        }
        Ok(Self::from_elements([values[0], values[1], values[2], values[3], values[4]]))
    }
}

/// Reads one tensor per non-empty, non-comment line.
pub fn parse_tensor_file(text: &str) -> Result<Vec<SaupeTensor>> {
    text.lines()
        .filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(str::parse)
        .collect()
}
