//! Energy-dependent transfer matrices of the supported unit cells.
//!
//! Every cell is referenced with its left edge at the origin: a delta sits at
//! `x = 0`, a rectangular barrier occupies `[0, b]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tmcore::TransferMatrix;

/// Unit system `(ħ, m)`; the default is natural units `ħ = m = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl Units {
    /// `2m/ħ²`, the factor turning an energy into a squared wavenumber.
    pub fn energy_to_k2(&self) -> f64 {
        2.0 * self.mass / (self.hbar * self.hbar)
    }
}

/// A scattering energy, stored through its free-space wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoint {
    k: f64,
    units: Units,
}

impl EnergyPoint {
    pub fn new(k: f64, units: Units) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidEnergy(k));
        }
        Ok(EnergyPoint { k, units })
    }

    /// Energy point in natural units.
    pub fn natural(k: f64) -> Result<Self> {
        Self::new(k, Units::default())
    }

    pub fn from_energy(energy: f64, units: Units) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(Error::InvalidEnergy(energy));
        }
        Self::new((energy * units.energy_to_k2()).sqrt(), units)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn units(&self) -> Units {
        self.units
    }

    /// `E = ħ²k²/(2m)`.
    pub fn energy(&self) -> f64 {
        self.k * self.k / self.units.energy_to_k2()
    }

    /// Same units, different wavenumber.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(k, self.units)
    }
}

/// `V(x) = V0 δ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub strength: f64,
}

impl DeltaCell {
    /// `β = mV0/(ħ²k)`.
    pub fn beta(&self, at: &EnergyPoint) -> f64 {
        let u = at.units();
        u.mass * self.strength / (u.hbar * u.hbar * at.k())
    }
}

/// Constant height `V` over `[0, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangularCell {
    pub height: f64,
    pub width: f64,
}

impl RectangularCell {
    /// Complex inner wavenumber `k' = sqrt(2m(E − V))/ħ`; purely imaginary
    /// (`iκ`, `κ > 0`) below the barrier top.
    pub fn inner_wavenumber(&self, at: &EnergyPoint) -> Complex64 {
        Complex64::new(self.inner_k2(at), 0.0).sqrt()
    }

    fn inner_k2(&self, at: &EnergyPoint) -> f64 {
        at.k() * at.k() - self.height * at.units().energy_to_k2()
    }

    /// `(ε₊ sin k'b, ε₋ sin k'b, cos k'b)`, all real and continuous across `E = V`.
    pub fn epsilon_terms(&self, at: &EnergyPoint) -> (f64, f64, f64) {
        let k = at.k();
        let kp = self.inner_wavenumber(at);
        let (sinc, cos) = e_v_limit_guard(kp, self.width);
        // k'·sin(k'b) = k'² · sin(k'b)/k'
        let s = sinc.re;
        let kp2_s = self.inner_k2(at) * s;
        (0.5 * (k * s + kp2_s / k), 0.5 * (k * s - kp2_s / k), cos.re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub width: f64,
    pub height: f64,
}

/// Consecutive constant-height segments, left to right, starting at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCell {
    pub segments: Vec<Segment>,
}

impl PiecewiseCell {
    pub fn width(&self) -> f64 {
        self.segments.iter().map(|s| s.width).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitCell {
    Delta(DeltaCell),
    Rectangular(RectangularCell),
    Piecewise(PiecewiseCell),
}

impl UnitCell {
    pub fn delta(strength: f64) -> Self {
        UnitCell::Delta(DeltaCell { strength })
    }

    pub fn rectangular(height: f64, width: f64) -> Self {
        UnitCell::Rectangular(RectangularCell { height, width })
    }

    pub fn piecewise(segments: impl IntoIterator<Item = (f64, f64)>) -> Self {
        UnitCell::Piecewise(PiecewiseCell {
            segments: segments
                .into_iter()
                .map(|(width, height)| Segment { width, height })
                .collect(),
        })
    }

    /// Spatial extent `d_0` of the cell.
    pub fn width(&self) -> f64 {
        match self {
            UnitCell::Delta(_) => 0.0,
            UnitCell::Rectangular(r) => r.width,
            UnitCell::Piecewise(p) => p.width(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UnitCell::Delta(d) if !d.strength.is_finite() => {
                Err(Error::InvalidCell("delta strength must be finite".into()))
            }
            UnitCell::Rectangular(r) => check_segment(r.width, r.height),
            UnitCell::Piecewise(p) => {
                if p.segments.is_empty() {
                    return Err(Error::InvalidCell(
                        "piecewise cell needs at least one segment".into(),
                    ));
                }
                p.segments
                    .iter()
                    .try_for_each(|s| check_segment(s.width, s.height))
            }
            _ => Ok(()),
        }
    }

    pub fn matrix(&self, at: &EnergyPoint) -> Result<TransferMatrix> {
        match self {
            UnitCell::Delta(d) => delta_matrix(d, at),
            UnitCell::Rectangular(r) => rect_matrix(r, at),
            UnitCell::Piecewise(p) => piecewise_matrix(p, at),
        }
    }
}

fn check_segment(width: f64, height: f64) -> Result<()> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::InvalidCell(format!(
            "width must be positive, got {width}"
        )));
    }
    if !height.is_finite() {
        return Err(Error::InvalidCell("height must be finite".into()));
    }
    Ok(())
}

/// `[[1+iβ, iβ], [−iβ, 1−iβ]]` with `β = mV0/(ħ²k)`.
pub fn delta_matrix(cell: &DeltaCell, at: &EnergyPoint) -> Result<TransferMatrix> {
    let beta = cell.beta(at);
    Ok(TransferMatrix::from_hermitian(
        Complex64::new(0.0, -beta),
        Complex64::new(1.0, -beta),
    ))
}

/// Rectangular barrier on `[0, b]`:
///
/// ```text
/// m22 = (cos k'b + iε₊ sin k'b) e^{-ikb},   m21 = −iε₋ sin k'b e^{ikb},
/// ε± = (μ ± 1/μ)/2,  μ = k/k'
/// ```
///
/// The `e^{ikb}` on `m21` is the shift from a barrier centred on the origin
/// to one starting there. Below the barrier top `k'` is imaginary and the
/// same expressions yield the hyperbolic forms. The `E = V` point is handled
/// through [`e_v_limit_guard`].
pub fn rect_matrix(cell: &RectangularCell, at: &EnergyPoint) -> Result<TransferMatrix> {
    let (eps_plus_sin, eps_minus_sin, cos) = cell.epsilon_terms(at);
    let phase = Complex64::from_polar(1.0, at.k() * cell.width);
    Ok(TransferMatrix::from_hermitian(
        Complex64::new(0.0, -eps_minus_sin) * phase,
        Complex64::new(cos, eps_plus_sin) * phase.conj(),
    ))
}

/// Product of the segment matrices, each moved to its start position.
pub fn piecewise_matrix(cell: &PiecewiseCell, at: &EnergyPoint) -> Result<TransferMatrix> {
    let mut total = TransferMatrix::IDENTITY;
    let mut x = 0.0;
    for seg in &cell.segments {
        let rect = RectangularCell {
            height: seg.height,
            width: seg.width,
        };
        total = total * rect_matrix(&rect, at)?.translate(x, at.k());
        x += seg.width;
    }
    Ok(total)
}

/// `(sin(k'b)/k', cos(k'b))`, using the series `b(1 − (k'b)²/6 + (k'b)⁴/120)`
/// when `|k'b| < 1e-6` so the pair stays finite and smooth through `k' = 0`.
pub fn e_v_limit_guard(k_prime: Complex64, b: f64) -> (Complex64, Complex64) {
    let z = k_prime * b;
    if z.norm() < 1e-6 {
        let z2 = z * z;
        let sinc = (Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0) * b;
        let cos = Complex64::new(1.0, 0.0) - z2 / 2.0 + z2 * z2 / 24.0;
        (sinc, cos)
    } else {
        (z.sin() / k_prime, z.cos())
    }
}
