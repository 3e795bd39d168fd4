//! Resonances, resonance-band widths, band structure and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{FractalKind, FractalSpec};
use crate::oracle::FlatPotential;
use crate::spp::{Spp, SppSpec};
use crate::tmcore::{cheb_u, ScatteringResult};
use crate::unitcell::{EnergyPoint, UnitCell, Units};

/// Either kind of evaluable system.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Spp(Spp),
    Fractal(FractalSpec),
}

impl System {
    pub fn transmission(&self, at: &EnergyPoint) -> Result<ScatteringResult> {
        match self {
            System::Spp(s) => s.transmission(at),
            System::Fractal(f) => f.transmission(at),
        }
    }

    /// `ξ_1 … ξ_n`.
    pub fn xi(&self, at: &EnergyPoint) -> Result<Vec<f64>> {
        match self {
            System::Spp(s) => Ok(s.xi_sequence(at)?.iter().map(|t| t.xi).collect()),
            System::Fractal(f) => Ok(f.cantor_xi(at)?.xi),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            System::Spp(s) => s.order(),
            System::Fractal(f) => f.stage as usize,
        }
    }

    /// The explicit profile for the oracles.
    pub fn flat_potential(&self) -> Result<FlatPotential> {
        let spp = match self {
            System::Spp(s) => s.clone(),
            System::Fractal(f) => f.to_spp()?,
        };
        FlatPotential::from_cells(spp.cell(), &spp.flatten()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Free-space wavenumber.
    K,
    /// Removal fraction of a general Cantor potential, at fixed `k`.
    Gamma,
    /// `y` in `s_2 = d_1 + s_1 + y`, at fixed `k`.
    Y,
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepGrid {
    pub fn new(axis: Axis, start: f64, stop: f64, points: usize) -> Result<Self> {
        let grid = SweepGrid {
            axis,
            start,
            stop,
            points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn k(start: f64, stop: f64, points: usize) -> Result<Self> {
        Self::new(Axis::K, start, stop, points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need start < stop, got {} and {}",
                self.start, self.stop
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == self.points - 1 {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }

    fn require_k(&self) -> Result<()> {
        self.validate()?;
        if self.axis != Axis::K {
            return Err(Error::InvalidGrid("this analysis needs a k grid".into()));
        }
        if !(self.start > 0.0) {
            return Err(Error::InvalidEnergy(self.start));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub k: f64,
    pub transmission: f64,
    pub log10_t: f64,
    pub xi: Vec<f64>,
}

/// The system realised at one grid value, plus the wavenumber to use.
fn system_at(base: &System, axis: Axis, value: f64, fixed_k: Option<f64>) -> Result<(System, f64)> {
    let need_k =
        || fixed_k.ok_or_else(|| Error::InvalidGrid("gamma and y sweeps need a fixed k".into()));
    match axis {
        Axis::K => Ok((base.clone(), value)),
        Axis::Gamma => match base {
            System::Fractal(f) => {
                let g = FractalSpec {
                    kind: FractalKind::GeneralCantor {
                        removal_gamma: value,
                    },
                    ..*f
                };
                g.validate()?;
                Ok((System::Fractal(g), need_k()?))
            }
            System::Spp(_) => Err(Error::Unsupported(
                "a gamma sweep needs a fractal system".into(),
            )),
        },
        Axis::Y => match base {
            System::Spp(s) if s.order() >= 2 => {
                let mut spec: SppSpec = s.spec().clone();
                spec.tiers[1].period = s.spans()[1] + spec.tiers[0].period + value;
                Ok((System::Spp(spec.validate()?), need_k()?))
            }
            _ => Err(Error::Unsupported(
                "a y sweep needs a specification with at least two tiers".into(),
            )),
        },
    }
}

/// One row per grid value, in grid order. Evaluation is parallel.
pub fn sweep(
    system: &System,
    grid: &SweepGrid,
    units: Units,
    fixed_k: Option<f64>,
) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    grid.values()
        .par_iter()
        .map(|&v| {
            let (sys, k) = system_at(system, grid.axis, v, fixed_k)?;
            let at = EnergyPoint::new(k, units)?;
            let r = sys.transmission(&at)?;
            Ok(SweepRow {
                axis_value: v,
                k,
                transmission: r.transmission,
                log10_t: r.log10_t,
                xi: sys.xi(&at)?,
            })
        })
        .collect()
}

/// Bisection on a bracketing pair `f(a)·f(b) ≤ 0` down to `|b − a| ≤ tol`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// All roots of `f` on the grid, located by sign change and bisection.
fn grid_roots(f: impl Fn(f64) -> f64, ks: &[f64], tol: f64) -> Vec<f64> {
    let values: Vec<f64> = ks.iter().map(|&k| f(k)).collect();
    let mut roots = Vec::new();
    for i in 0..ks.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(ks[i]);
        } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
            roots.push(bisect(&f, ks[i], ks[i + 1], tol));
        }
    }
    if values[ks.len() - 1] == 0.0 {
        roots.push(ks[ks.len() - 1]);
    }
    roots
}

/// Zeros of `m12(k)` of a unit cell.
///
/// Each grid local minimum of `|m12|` is bracketed by its neighbours. Near a
/// zero `m12` moves along a nearly straight line through the origin, so its
/// projection onto that direction changes sign and can be bisected. A
/// candidate is kept only if `|m12|` is negligible there.
pub fn find_cell_resonances(cell: &UnitCell, grid: &SweepGrid, units: Units) -> Result<Vec<f64>> {
    grid.require_k()?;
    cell.validate()?;
    let m12 = |k: f64| -> Result<num_complex::Complex64> {
        Ok(cell.matrix(&EnergyPoint::new(k, units)?)?.m12)
    };
    let ks = grid.values();
    let mags: Vec<f64> = ks
        .iter()
        .map(|&k| m12(k).map(|m| m.norm()))
        .collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 1..ks.len() - 1 {
        if !(mags[i] <= mags[i - 1] && mags[i] <= mags[i + 1]) {
            continue;
        }
        let (a, b) = (ks[i - 1], ks[i + 1]);
        let dir = m12(b)? - m12(a)?;
        let f = |k: f64| m12(k).map(|m| (m * dir.conj()).re).unwrap_or(f64::NAN);
        if (f(a) < 0.0) == (f(b) < 0.0) {
            continue;
        }
        let k = bisect(f, a, b, 1e-13);
        let scale = cell.matrix(&EnergyPoint::new(k, units)?)?.m22.norm();
        if m12(k)?.norm() <= 1e-8 * scale.max(1.0) {
            roots.push(k);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(roots)
}

/// Zeros of `U_{N_1−1}(ξ_1(k))` over the grid, the comb resonances of tier 1.
/// They solve `ξ_1 = cos(mπ/N_1)`, `m = 1 … N_1−1`, and give `T = 1` for
/// every order.
pub fn find_comb_resonances(spp: &Spp, grid: &SweepGrid, units: Units) -> Result<Vec<f64>> {
    grid.require_k()?;
    let Some(tier) = spp.tiers().first() else {
        return Ok(Vec::new());
    };
    let ks = grid.values();
    let xi1: Vec<f64> = ks
        .iter()
        .map(|&k| Ok(spp.xi_sequence(&EnergyPoint::new(k, units)?)?[0].xi))
        .collect::<Result<_>>()?;
    let xi_at = |k: f64| {
        EnergyPoint::new(k, units)
            .and_then(|p| spp.xi_sequence(&p))
            .map(|s| s[0].xi)
            .unwrap_or(f64::NAN)
    };
    let mut roots = Vec::new();
    for node in crate::spp::chebyshev_nodes(tier.repeats) {
        for i in 0..ks.len() - 1 {
            let (a, b) = (xi1[i] - node, xi1[i + 1] - node);
            if a == 0.0 {
                roots.push(ks[i]);
            } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
                roots.push(bisect(|k| xi_at(k) - node, ks[i], ks[i + 1], 1e-13));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    Ok(roots)
}

/// `₂F₁(a, b; c; z)` for a non-positive integer `a`, as the finite sum
/// `Σ_{j=0}^{−a} (a)_j (b)_j / ((c)_j j!) z^j`.
pub fn hyp2f1_terminating(a: i64, b: f64, c: f64, z: f64) -> f64 {
    assert!(a <= 0, "series terminates only for a ≤ 0");
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..(-a) {
        let jf = j as f64;
        term *= (a as f64 + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * z;
        sum += term;
    }
    sum
}

/// `U'_n(ξ) = n(n+1)(n+2)/3 · ₂F₁(1−n, n+3; 5/2; (1−ξ)/2)`, zero for `n ≤ 0`.
pub fn cheb_u_derivative(n: i64, xi: f64) -> f64 {
    if n <= 0 {
        return 0.0;
    }
    let nf = n as f64;
    nf * (nf + 1.0) * (nf + 2.0) / 3.0 * hyp2f1_terminating(1 - n, nf + 3.0, 2.5, 0.5 * (1.0 - xi))
}

/// First-order description of the resonance band grown from a comb
/// resonance when a delta comb is repeated `N_2` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceBandEstimate {
    pub k_star: f64,
    /// Analytic width estimate.
    pub delta_k: f64,
    /// `F̃1 = U'_{N_1−2}(ξ_1*) cos k*y`.
    pub f1_tilde: f64,
    /// `F̃2 = U'_{N_1−1}(ξ_1*)`.
    pub f2_tilde: f64,
    /// `Z = −dξ_1/dk = −βs_1 cos ks_1 + sin(ks_1)(β + ks_1)/k`.
    pub z: f64,
    /// `ζ = atan β + k((2N_1−1)s_1 + y)`.
    pub zeta: f64,
    /// `ξ_2* = −U_{N_1−2}(ξ_1*) cos k*y`.
    pub xi2_star: f64,
    /// Slope `dξ_2/dk` at `k*` of the model `ξ_2`.
    pub slope: f64,
    /// Edges of the interval around `k*` where the exact `|ξ_2| ≤ 1`.
    pub numeric_lower: f64,
    pub numeric_upper: f64,
    pub numeric_width: f64,
}

/// `y` of an order-two spec, from `s_2 = d_1 + s_1 + y`.
pub fn y_offset(spp: &Spp) -> Option<f64> {
    let t = spp.tiers();
    (t.len() >= 2).then(|| t[1].period - spp.spans()[1] - t[0].period)
}

/// Model of `ξ_2` for a delta comb repeated with offset `y`:
/// `√(1+β²) U_{N_1−1}(ξ_1) cos ζ(k) − U_{N_1−2}(ξ_1) cos ky`.
/// It coincides with the exact `ξ_2` wherever `U_{N_1−1}(ξ_1) = 0`.
pub fn model_xi2(v0: f64, repeats: u32, s1: f64, y: f64, at: &EnergyPoint) -> f64 {
    let k = at.k();
    let u = at.units();
    let beta = u.mass * v0 / (u.hbar * u.hbar * k);
    let n1 = repeats as i64;
    let xi1 = (k * s1).cos() + beta * (k * s1).sin();
    let zeta = beta.atan() + k * ((2 * n1 - 1) as f64 * s1 + y);
    (1.0 + beta * beta).sqrt() * cheb_u(n1 - 1, xi1) * zeta.cos()
        - cheb_u(n1 - 2, xi1) * (k * y).cos()
}

/// Width of the resonance band around the comb resonance `k_star`.
///
/// Expanding the model `ξ_2` to first order about `k*` gives
///
/// ```text
/// ξ_2 ≈ ξ_2* + [(F̃1 − F̃2 √(1+β²) cos ζ) Z + y U_{N_1−2}(ξ_1*) sin k*y] (k − k*)
/// Δk = (2 + U_{N_1−2}(ξ_1*) cos k*y) / [(F̃1 − F̃2 √(1+β²) cos ζ) Z + y U_{N_1−2}(ξ_1*) sin k*y]
/// ```
///
/// The numeric width is measured on the exact `ξ_2` of `spp`.
pub fn band_width_estimate(spp: &Spp, k_star: f64, units: Units) -> Result<ResonanceBandEstimate> {
    let UnitCell::Delta(cell) = spp.cell() else {
        return Err(Error::Unsupported(
            "band width estimate needs a delta cell".into(),
        ));
    };
    if spp.order() != 2 {
        return Err(Error::Unsupported(
            "band width estimate needs exactly two tiers".into(),
        ));
    }
    let at = EnergyPoint::new(k_star, units)?;
    let tiers = spp.tiers();
    let (n1, s1) = (tiers[0].repeats as i64, tiers[0].period);
    let y = y_offset(spp).expect("two tiers");
    let k = k_star;
    let beta = cell.beta(&at);
    let xi1 = (k * s1).cos() + beta * (k * s1).sin();
    let u_n1 = cheb_u(n1 - 1, xi1);
    if u_n1.abs() > 1e-6 {
        return Err(Error::NotAResonance(u_n1.abs()));
    }
    let u_n2 = cheb_u(n1 - 2, xi1);
    let f1_tilde = cheb_u_derivative(n1 - 2, xi1) * (k * y).cos();
    let f2_tilde = cheb_u_derivative(n1 - 1, xi1);
    let z = -beta * s1 * (k * s1).cos() + (k * s1).sin() / k * (beta + k * s1);
    let zeta = beta.atan() + k * ((2 * n1 - 1) as f64 * s1 + y);
    let xi2_star = -u_n2 * (k * y).cos();
    let slope = (f1_tilde - f2_tilde * (1.0 + beta * beta).sqrt() * zeta.cos()) * z
        + y * u_n2 * (k * y).sin();
    let delta_k = ((2.0 + u_n2 * (k * y).cos()) / slope).abs();

    let xi2 = |k: f64| -> f64 {
        EnergyPoint::new(k, units)
            .and_then(|p| spp.xi_sequence(&p))
            .map(|s| s[1].xi.abs() - 1.0)
            .unwrap_or(f64::NAN)
    };
    let (numeric_lower, numeric_upper) = if xi2(k) <= 0.0 {
        let step = 1e-5 * k.max(1.0);
        let edge = |dir: f64| {
            let mut inner = k;
            let mut outer = k + dir * step;
            let limit = k.max(1.0);
            while xi2(outer) <= 0.0 && (outer - k).abs() < limit {
                inner = outer;
                outer += dir * step;
            }
            bisect(xi2, inner, outer, 1e-13)
        };
        (edge(-1.0), edge(1.0))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ResonanceBandEstimate {
        k_star,
        delta_k,
        f1_tilde,
        f2_tilde,
        z,
        zeta,
        xi2_star,
        slope,
        numeric_lower,
        numeric_upper,
        numeric_width: numeric_upper - numeric_lower,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierBands {
    /// One-based tier index.
    pub tier: usize,
    /// Intervals where `|ξ_i| > 1`.
    pub forbidden: Vec<(f64, f64)>,
    /// Intervals where `|ξ_i| ≤ 1`.
    pub allowed: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub tiers: Vec<TierBands>,
}

/// Per-tier split of the grid range into `|ξ_i| ≤ 1` and `|ξ_i| > 1`
/// intervals, with edges refined by bisection.
pub fn band_report(spp: &Spp, grid: &SweepGrid, units: Units) -> Result<BandReport> {
    grid.require_k()?;
    let ks = grid.values();
    let xis: Vec<Vec<f64>> = ks
        .par_iter()
        .map(|&k| {
            Ok(spp
                .xi_sequence(&EnergyPoint::new(k, units)?)?
                .iter()
                .map(|t| t.xi)
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut tiers = Vec::with_capacity(spp.order());
    for i in 0..spp.order() {
        let excess = |k: f64| {
            EnergyPoint::new(k, units)
                .and_then(|p| spp.xi_sequence(&p))
                .map(|s| s[i].xi.abs() - 1.0)
                .unwrap_or(f64::NAN)
        };
        let mut forbidden = Vec::new();
        let mut allowed = Vec::new();
        let mut start = ks[0];
        let mut outside = xis[0][i].abs() > 1.0;
        for j in 0..ks.len() - 1 {
            let next_outside = xis[j + 1][i].abs() > 1.0;
            if next_outside != outside {
                let edge = bisect(excess, ks[j], ks[j + 1], 1e-10);
                if outside {
                    &mut forbidden
                } else {
                    &mut allowed
                }
                .push((start, edge));
                start = edge;
                outside = next_outside;
            }
        }
        if outside {
            &mut forbidden
        } else {
            &mut allowed
        }
        .push((start, grid.stop));
        tiers.push(TierBands {
            tier: i + 1,
            forbidden,
            allowed,
        });
    }
    Ok(BandReport { tiers })
}

/// Roots of `ξ_2(k)`. For even `N_2` each is a transmission resonance.
pub fn xi2_zeros(spp: &Spp, grid: &SweepGrid, units: Units) -> Result<Vec<f64>> {
    grid.require_k()?;
    if spp.order() < 2 {
        return Err(Error::Unsupported("ξ_2 needs at least two tiers".into()));
    }
    let xi2 = |k: f64| {
        EnergyPoint::new(k, units)
            .and_then(|p| spp.xi_sequence(&p))
            .map(|s| s[1].xi)
            .unwrap_or(f64::NAN)
    };
    Ok(grid_roots(xi2, &grid.values(), 1e-13))
}

/// Transmission peaks above `threshold` in `[lo, hi]`, from a `points` grid.
/// Each strict local maximum is refined by golden-section search between its
/// neighbours before the threshold test, so narrow peaks are not lost to the
/// grid.
pub fn transmission_peaks(
    system: &System,
    lo: f64,
    hi: f64,
    points: usize,
    threshold: f64,
    units: Units,
) -> Result<Vec<f64>> {
    let grid = SweepGrid::k(lo, hi, points)?;
    let ks = grid.values();
    let t_at = |k: f64| -> f64 {
        EnergyPoint::new(k, units)
            .and_then(|p| system.transmission(&p))
            .map(|r| r.transmission)
            .unwrap_or(f64::NAN)
    };
    let ts: Vec<f64> = ks.par_iter().map(|&k| t_at(k)).collect();
    let mut peaks = Vec::new();
    for i in 1..ks.len() - 1 {
        if ts[i] > ts[i - 1] && ts[i] > ts[i + 1] {
            let (k, t) = golden_max(&t_at, ks[i - 1], ks[i + 1]);
            if t.max(ts[i]) > threshold {
                peaks.push(if t >= ts[i] { k } else { ks[i] });
            }
        }
    }
    Ok(peaks)
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-14 * b.abs().max(1.0) {
            break;
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Strict local maxima of `values` above `threshold`.
pub fn count_peaks(values: &[f64], threshold: f64) -> usize {
    values
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > threshold)
        .count()
}
