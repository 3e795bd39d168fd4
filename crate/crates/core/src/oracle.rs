//! Reference solvers that never touch the Chebyshev closed forms.
//!
//! [`oracle_delta`] multiplies one translated matrix per delta.
//! [`oracle_piecewise`] propagates `(ψ, ψ')` across constant slabs with the
//! real 2×2 propagators
//!
//! ```text
//! [[cos qw, sin(qw)/q], [−q sin qw, cos qw]],   q² = 2m(E − V)/ħ²
//! ```
//!
//! including zero-height slabs for the gaps, and only converts to plane-wave
//! amplitudes at the two outer edges.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::System;
use crate::error::{Error, Result};
use crate::tmcore::{ScatteringResult, TransferMatrix};
use crate::unitcell::{delta_matrix, DeltaCell, EnergyPoint, UnitCell, Units};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub start: f64,
    pub width: f64,
    pub height: f64,
}

/// An explicit potential profile.
#[derive(Debug, Clone, PartialEq)]
pub enum FlatPotential {
    /// `(position, strength)` pairs with strictly increasing positions.
    Deltas(Vec<(f64, f64)>),
    /// Non-overlapping slabs sorted by start.
    Slabs(Vec<Slab>),
}

impl FlatPotential {
    /// Places a copy of `cell` at every position. Coincident deltas are
    /// merged into one of summed strength.
    pub fn from_cells(cell: &UnitCell, positions: &[f64]) -> Result<Self> {
        let flat = match cell {
            UnitCell::Delta(d) => {
                let mut chain: Vec<(f64, f64)> = Vec::with_capacity(positions.len());
                for &x in positions {
                    match chain.last_mut() {
                        Some(last) if last.0 == x => last.1 += d.strength,
                        _ => chain.push((x, d.strength)),
                    }
                }
                FlatPotential::Deltas(chain)
            }
            UnitCell::Rectangular(r) => FlatPotential::Slabs(
                positions
                    .iter()
                    .map(|&start| Slab {
                        start,
                        width: r.width,
                        height: r.height,
                    })
                    .collect(),
            ),
            UnitCell::Piecewise(p) => {
                let mut slabs = Vec::with_capacity(positions.len() * p.segments.len());
                for &x in positions {
                    let mut start = x;
                    for seg in &p.segments {
                        slabs.push(Slab {
                            start,
                            width: seg.width,
                            height: seg.height,
                        });
                        start += seg.width;
                    }
                }
                FlatPotential::Slabs(slabs)
            }
        };
        flat.validate()?;
        Ok(flat)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FlatPotential::Deltas(chain) => {
                if chain.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidProfile(
                        "delta positions must be strictly increasing".into(),
                    ));
                }
            }
            FlatPotential::Slabs(slabs) => {
                if slabs.iter().any(|s| !(s.width > 0.0)) {
                    return Err(Error::InvalidProfile("slab widths must be positive".into()));
                }
                for w in slabs.windows(2) {
                    let end = w[0].start + w[0].width;
                    if w[1].start < end - 1e-9 * end.abs().max(1.0) {
                        return Err(Error::InvalidProfile(format!(
                            "slabs overlap: one ends at {end}, the next starts at {}",
                            w[1].start
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The mirror image `x → −x`.
    pub fn mirrored(&self) -> Self {
        match self {
            FlatPotential::Deltas(chain) => {
                FlatPotential::Deltas(chain.iter().rev().map(|&(x, v)| (-x, v)).collect())
            }
            FlatPotential::Slabs(slabs) => FlatPotential::Slabs(
                slabs
                    .iter()
                    .rev()
                    .map(|s| Slab {
                        start: -(s.start + s.width),
                        width: s.width,
                        height: s.height,
                    })
                    .collect(),
            ),
        }
    }

    pub fn solve(&self, at: &EnergyPoint) -> Result<ScatteringResult> {
        match self {
            FlatPotential::Deltas(chain) => oracle_delta(chain, at),
            FlatPotential::Slabs(slabs) => oracle_piecewise(slabs, at),
        }
    }
}

/// Ordered product of translated delta matrices.
pub fn oracle_delta(chain: &[(f64, f64)], at: &EnergyPoint) -> Result<ScatteringResult> {
    let (m, ln_scale) = scaled_delta_chain(chain, at)?;
    scaled_amplitudes(&m, ln_scale)
}

pub fn delta_chain_matrix(chain: &[(f64, f64)], at: &EnergyPoint) -> Result<TransferMatrix> {
    let (m, ln_scale) = scaled_delta_chain(chain, at)?;
    Ok(scale_matrix(&m, ln_scale.exp()))
}

/// Entries above this are divided out into a running log scale.
const RESCALE: f64 = 1e100;

fn scale_matrix(m: &TransferMatrix, f: f64) -> TransferMatrix {
    TransferMatrix::new(m.m11 * f, m.m12 * f, m.m21 * f, m.m22 * f)
}

/// The product as `e^{ln_scale} · M`.
fn scaled_delta_chain(chain: &[(f64, f64)], at: &EnergyPoint) -> Result<(TransferMatrix, f64)> {
    let k = at.k();
    let mut acc = TransferMatrix::IDENTITY;
    let mut ln_scale = 0.0;
    for &(x, strength) in chain {
        acc = acc * delta_matrix(&DeltaCell { strength }, at)?.translate(x, k);
        let big = acc
            .m11
            .norm()
            .max(acc.m12.norm())
            .max(acc.m21.norm())
            .max(acc.m22.norm());
        if big > RESCALE {
            acc = scale_matrix(&acc, 1.0 / big);
            ln_scale += big.ln();
        }
    }
    Ok((acc, ln_scale))
}

/// Scattering data of `e^{ln_scale} · M`, read from `m22` alone.
fn scaled_amplitudes(m: &TransferMatrix, ln_scale: f64) -> Result<ScatteringResult> {
    if ln_scale == 0.0 {
        return m.amplitudes();
    }
    let mag = m.m22.norm();
    if mag == 0.0 || !mag.is_finite() {
        return Err(Error::DegenerateMatrix);
    }
    let ln_abs_m22 = ln_scale + mag.ln();
    let transmission = (-2.0 * ln_abs_m22).exp();
    Ok(ScatteringResult {
        transmission,
        reflection: 1.0 - transmission,
        t: Complex64::from_polar((-ln_abs_m22).exp(), -m.m22.arg()),
        r_left: m.m21 / m.m22,
        r_right: m.m12 / m.m22,
        log10_t: -2.0 * ln_abs_m22 / std::f64::consts::LN_10,
    })
}

/// Real propagator of `(ψ, ψ')` across a slab of width `w` with `q² = q2`,
/// as `e^{ln_scale} · P`.
fn slab_propagator(q2: f64, w: f64) -> ([[f64; 2]; 2], f64) {
    let z2 = q2 * w * w;
    if z2 == 0.0 {
        return ([[1.0, w], [0.0, 1.0]], 0.0);
    }
    if z2.abs() < 1e-10 {
        let c = 1.0 - z2 / 2.0 + z2 * z2 / 24.0;
        let s_over_q = w * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
        return ([[c, s_over_q], [-q2 * s_over_q, c]], 0.0);
    }
    if q2 > 0.0 {
        let q = q2.sqrt();
        let (s, c) = (q * w).sin_cos();
        ([[c, s / q], [-q * s, c]], 0.0)
    } else {
        let kappa = (-q2).sqrt();
        let x = kappa * w;
        if x > 20.0 {
            // cosh x = e^x (1 + e^{−2x})/2, sinh x = e^x (1 − e^{−2x})/2
            let d = (-2.0 * x).exp();
            let (c, s) = (0.5 * (1.0 + d), 0.5 * (1.0 - d));
            return ([[c, s / kappa], [kappa * s, c]], x);
        }
        let (s, c) = (x.sinh(), x.cosh());
        ([[c, s / kappa], [kappa * s, c]], 0.0)
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Matrix of a slab profile from the `(ψ, ψ')` propagator:
/// `M = W(x_L)⁻¹ P⁻¹ W(x_R)`, where `P` carries `(ψ, ψ')` from the left edge
/// `x_L` to the right edge `x_R` and `W(x)` maps plane-wave amplitudes to
/// `(ψ, ψ')` at `x`.
pub fn slab_profile_matrix(slabs: &[Slab], at: &EnergyPoint) -> Result<TransferMatrix> {
    let (m, ln_scale) = scaled_slab_profile(slabs, at)?;
    Ok(scale_matrix(&m, ln_scale.exp()))
}

/// [`slab_profile_matrix`] as `e^{ln_scale} · M`. `P` is rescaled as it
/// grows; its adjugate scales the same way, so the factor carries over to `M`.
fn scaled_slab_profile(slabs: &[Slab], at: &EnergyPoint) -> Result<(TransferMatrix, f64)> {
    FlatPotential::Slabs(slabs.to_vec()).validate()?;
    let (Some(first), Some(last)) = (slabs.first(), slabs.last()) else {
        return Ok((TransferMatrix::IDENTITY, 0.0));
    };
    let k = at.k();
    let to_k2 = at.units().energy_to_k2();
    let x_left = first.start;
    let x_right = last.start + last.width;

    let mut p = [[1.0, 0.0], [0.0, 1.0]];
    let mut ln_scale = 0.0;
    let mut x = x_left;
    for slab in slabs {
        if slab.start > x {
            p = mat_mul(&slab_propagator(k * k, slab.start - x).0, &p);
        }
        let (step, ln_step) = slab_propagator(k * k - slab.height * to_k2, slab.width);
        p = mat_mul(&step, &p);
        ln_scale += ln_step;
        x = slab.start + slab.width;
        let big = p.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
        if big > RESCALE {
            p = p.map(|row| row.map(|v| v / big));
            ln_scale += big.ln();
        }
    }
    // P is unimodular, so P⁻¹ = [[d, −b], [−c, a]] up to the scale
    let p_inv = [[p[1][1], -p[0][1]], [-p[1][0], p[0][0]]];

    let e = |x: f64| Complex64::from_polar(1.0, (k * x).rem_euclid(std::f64::consts::TAU));
    let i = Complex64::new(0.0, 1.0);
    // W(x_R) columns: (e^{ikx}, ik e^{ikx}) and (e^{−ikx}, −ik e^{−ikx})
    let (er, el) = (e(x_right), e(x_left));
    let w_r = [[er, er.conj()], [i * k * er, -i * k * er.conj()]];
    // W(x_L)⁻¹ = 1/(−2ik) [[−ik e^{−ikx}, −e^{−ikx}], [−ik e^{ikx}, e^{ikx}]]
    let inv_det = 1.0 / (-2.0 * i * k);
    let w_l_inv = [
        [-i * k * el.conj() * inv_det, -el.conj() * inv_det],
        [-i * k * el * inv_det, el * inv_det],
    ];
    let mid = [
        [
            w_r[0][0] * p_inv[0][0] + w_r[1][0] * p_inv[0][1],
            w_r[0][1] * p_inv[0][0] + w_r[1][1] * p_inv[0][1],
        ],
        [
            w_r[0][0] * p_inv[1][0] + w_r[1][0] * p_inv[1][1],
            w_r[0][1] * p_inv[1][0] + w_r[1][1] * p_inv[1][1],
        ],
    ];
    let m = |r: usize, c: usize| w_l_inv[r][0] * mid[0][c] + w_l_inv[r][1] * mid[1][c];
    Ok((
        TransferMatrix::new(m(0, 0), m(0, 1), m(1, 0), m(1, 1)),
        ln_scale,
    ))
}

/// Transmission of a slab profile via [`slab_profile_matrix`].
pub fn oracle_piecewise(slabs: &[Slab], at: &EnergyPoint) -> Result<ScatteringResult> {
    let (m, ln_scale) = scaled_slab_profile(slabs, at)?;
    scaled_amplitudes(&m, ln_scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Bound on `|ΔT|` where both transmissions are at least `log_threshold`.
    pub abs_t: f64,
    /// Bound on `|Δlog10 T| / |log10 T|` below `log_threshold`.
    pub rel_log10_t: f64,
    pub log_threshold: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_t: 1e-9,
            rel_log10_t: 1e-6,
            log_threshold: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareReport {
    pub points: usize,
    pub max_abs_dt: f64,
    pub max_rel_dlog10t: f64,
    /// `k` with the largest error relative to its tolerance.
    pub worst_k: f64,
    /// Largest error divided by its tolerance; at most 1 when passing.
    pub worst_ratio: f64,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

/// Closed form against the matching oracle at every `k`.
pub fn compare(system: &System, ks: &[f64], units: Units, tol: Tolerance) -> Result<CompareReport> {
    compare_with(
        |at| system.transmission(at),
        &system.flat_potential()?,
        ks,
        units,
        tol,
    )
}

/// Any evaluator against the oracle for `flat`.
pub fn compare_with<F>(
    closed: F,
    flat: &FlatPotential,
    ks: &[f64],
    units: Units,
    tol: Tolerance,
) -> Result<CompareReport>
where
    F: Fn(&EnergyPoint) -> Result<ScatteringResult> + Sync,
{
    let rows = ks
        .par_iter()
        .map(|&k| {
            let at = EnergyPoint::new(k, units)?;
            Ok((k, closed(&at)?, flat.solve(&at)?))
        })
        .collect::<Result<Vec<(f64, ScatteringResult, ScatteringResult)>>>()?;

    let mut report = CompareReport {
        points: rows.len(),
        max_abs_dt: 0.0,
        max_rel_dlog10t: 0.0,
        worst_k: f64::NAN,
        worst_ratio: 0.0,
    };
    for (k, closed, oracle) in rows {
        let deep =
            closed.transmission < tol.log_threshold || oracle.transmission < tol.log_threshold;
        let ratio = if deep {
            let rel = (closed.log10_t - oracle.log10_t).abs() / oracle.log10_t.abs();
            report.max_rel_dlog10t = report.max_rel_dlog10t.max(rel);
            rel / tol.rel_log10_t
        } else {
            let dt = (closed.transmission - oracle.transmission).abs();
            report.max_abs_dt = report.max_abs_dt.max(dt);
            dt / tol.abs_t
        };
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        if report.worst_k.is_nan() || ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_k = k;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitcell::{rect_matrix, RectangularCell};

    fn at(k: f64) -> EnergyPoint {
        EnergyPoint::natural(k).unwrap()
    }

    #[test]
    fn one_slab_equals_rectangular_cell() {
        for &(v, b) in &[(10.0, 1.0), (-4.0, 0.6), (2.0, 2.0)] {
            for i in 1..100 {
                let p = at(0.1 * i as f64);
                let cell = rect_matrix(
                    &RectangularCell {
                        height: v,
                        width: b,
                    },
                    &p,
                )
                .unwrap();
                let slab = slab_profile_matrix(
                    &[Slab {
                        start: 0.0,
                        width: b,
                        height: v,
                    }],
                    &p,
                )
                .unwrap();
                let scale = cell.m22.norm();
                assert!((cell.m22 - slab.m22).norm() < 1e-13 * scale * scale.max(1.0));
                assert!((cell.m12 - slab.m12).norm() < 1e-13 * scale * scale.max(1.0));
                assert!((cell.m21 - slab.m21).norm() < 1e-13 * scale * scale.max(1.0));
            }
        }
    }

    #[test]
    fn one_delta_equals_delta_cell() {
        let p = at(1.3);
        let a = oracle_delta(&[(0.0, 2.5)], &p).unwrap();
        let b = delta_matrix(&DeltaCell { strength: 2.5 }, &p)
            .unwrap()
            .amplitudes()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_deltas_match_textbook() {
        // T for two equal deltas: 1/(1 + 4β²(cos ks + β sin ks)²)
        let (v0, s) = (3.0, 1.2);
        for i in 1..100 {
            let k = 0.1 * i as f64;
            let beta = v0 / k;
            let xi = (k * s).cos() + beta * (k * s).sin();
            let expect = 1.0 / (1.0 + 4.0 * beta * beta * xi * xi);
            let t = oracle_delta(&[(0.0, v0), (s, v0)], &at(k))
                .unwrap()
                .transmission;
            assert!((t - expect).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn splitting_a_slab_is_harmless() {
        let whole = [
            Slab {
                start: 0.5,
                width: 1.0,
                height: 6.0,
            },
            Slab {
                start: 2.0,
                width: 0.5,
                height: -2.0,
            },
        ];
        let split = [
            Slab {
                start: 0.5,
                width: 0.3,
                height: 6.0,
            },
            Slab {
                start: 0.8,
                width: 0.7,
                height: 6.0,
            },
            Slab {
                start: 2.0,
                width: 0.5,
                height: -2.0,
            },
        ];
        for i in 1..150 {
            let p = at(0.05 * i as f64);
            let a = oracle_piecewise(&whole, &p).unwrap().transmission;
            let b = oracle_piecewise(&split, &p).unwrap().transmission;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mirrored_profile_transmits_equally() {
        let flat = FlatPotential::Slabs(vec![
            Slab {
                start: 0.0,
                width: 0.4,
                height: 8.0,
            },
            Slab {
                start: 1.0,
                width: 1.1,
                height: 3.0,
            },
            Slab {
                start: 2.5,
                width: 0.2,
                height: -5.0,
            },
        ]);
        let mirror = flat.mirrored();
        mirror.validate().unwrap();
        for i in 1..100 {
            let p = at(0.08 * i as f64);
            let a = flat.solve(&p).unwrap().transmission;
            let b = mirror.solve(&p).unwrap().transmission;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn free_gap_slabs_are_exact() {
        let p = at(2.0);
        let m = slab_profile_matrix(
            &[Slab {
                start: 0.0,
                width: 3.0,
                height: 0.0,
            }],
            &p,
        )
        .unwrap();
        assert!((m.m22 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(m.m12.norm() < 1e-15);
    }

    #[test]
    fn overlapping_slabs_are_rejected() {
        let bad = FlatPotential::Slabs(vec![
            Slab {
                start: 0.0,
                width: 1.0,
                height: 1.0,
            },
            Slab {
                start: 0.5,
                width: 1.0,
                height: 1.0,
            },
        ]);
        assert!(bad.validate().is_err());
        let cells =
            FlatPotential::from_cells(&UnitCell::delta(1.0), &[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            cells,
            FlatPotential::Deltas(vec![(0.0, 1.0), (1.0, 2.0), (2.0, 1.0)])
        );
    }

    #[test]
    fn deep_tunnelling_stays_in_log_space() {
        // a thick barrier: T = 16E(V−E)/V² e^{−2κb} to leading order
        let p = at(1.0);
        let r = oracle_piecewise(
            &[Slab {
                start: 0.0,
                width: 200.0,
                height: 50.0,
            }],
            &p,
        )
        .unwrap();
        let kappa = (2.0 * 50.0 - 1.0_f64).sqrt();
        let e = 0.5;
        let expected = ((16.0 * e * (50.0 - e) / 2500.0_f64).ln() - 2.0 * kappa * 200.0)
            / std::f64::consts::LN_10;
        assert_eq!(r.transmission, 0.0);
        assert!((r.log10_t - expected).abs() < 1e-9 * expected.abs());

        let comb = crate::spp::SppSpec::new(
            UnitCell::delta(40.0),
            vec![crate::spp::TierSpec::new(400, 0.7)],
        )
        .validate()
        .unwrap();
        let chain: Vec<(f64, f64)> = (0..400).map(|i| (i as f64 * 0.7, 40.0)).collect();
        let deep = oracle_delta(&chain, &p).unwrap();
        let closed = comb.transmission(&p).unwrap();
        assert!(deep.log10_t < -300.0);
        assert!((deep.log10_t - closed.log10_t).abs() < 1e-9 * closed.log10_t.abs());
    }
}
