//! Super periodic potentials of arbitrary order.
//!
//! Tier `i` repeats the whole tier-`(i−1)` structure `N_i` times with period
//! `s_i`; tier 0 is the unit cell. Everything here is evaluated from the
//! Chebyshev closed forms, never by multiplying cell matrices.
//!
//! Products of Chebyshev factors grow geometrically with the order, so the
//! matrix elements are accumulated as `(ln scale, mantissa)` pairs and the
//! transmission is assembled in log space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::tmcore::{cheb_u, ln_abs_cheb_u, principal_arg, ScatteringResult, TransferMatrix};
use crate::unitcell::{EnergyPoint, UnitCell};

/// Relative slack allowed when comparing a period with the span it repeats.
const OVERLAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierSpec {
    /// Repetition count `N_i ≥ 1`.
    pub repeats: u32,
    /// Period `s_i > 0`.
    pub period: f64,
}

impl TierSpec {
    pub fn new(repeats: u32, period: f64) -> Self {
        TierSpec { repeats, period }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Reject any tier whose period is shorter than the span it repeats.
    #[default]
    Strict,
    /// Accept overlapping tiers and record a warning. The closed forms stay
    /// evaluable but no longer describe a physical potential.
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SppSpec {
    pub cell: UnitCell,
    pub tiers: Vec<TierSpec>,
    #[serde(default)]
    pub overlap_policy: OverlapPolicy,
}

impl SppSpec {
    pub fn new(cell: UnitCell, tiers: Vec<TierSpec>) -> Self {
        SppSpec {
            cell,
            tiers,
            overlap_policy: OverlapPolicy::Strict,
        }
    }

    pub fn permissive(mut self) -> Self {
        self.overlap_policy = OverlapPolicy::Permissive;
        self
    }

    /// Total span `d_n` of the spec as it stands.
    pub fn span(&self) -> f64 {
        self.tiers.iter().fold(self.cell.width(), |d, t| {
            d + (t.repeats.max(1) - 1) as f64 * t.period
        })
    }

    /// Appends a tier given the edge-to-edge gap `c` between consecutive
    /// copies instead of the period, i.e. `s = d_{i−1} + c`.
    pub fn push_gap_tier(&mut self, repeats: u32, gap: f64) {
        let period = self.span() + gap;
        self.tiers.push(TierSpec { repeats, period });
    }

    pub fn with_gap_tier(mut self, repeats: u32, gap: f64) -> Self {
        self.push_gap_tier(repeats, gap);
        self
    }

    /// Checks the spec and computes the spans `d_0 … d_n`.
    pub fn validate(&self) -> Result<Spp> {
        self.cell.validate()?;
        let mut spans = Vec::with_capacity(self.tiers.len() + 1);
        let mut warnings = Vec::new();
        let mut d = self.cell.width();
        spans.push(d);
        for (idx, tier) in self.tiers.iter().enumerate() {
            let i = idx + 1;
            if tier.repeats < 1 {
                return Err(Error::InvalidRepeatCount { tier: i });
            }
            if !(tier.period > 0.0) || !tier.period.is_finite() {
                return Err(Error::NonPositivePeriod {
                    tier: i,
                    period: tier.period,
                });
            }
            if tier.repeats > 1 && tier.period < d * (1.0 - OVERLAP_SLACK) {
                let violation = Error::OverlapViolation {
                    tier: i,
                    period: tier.period,
                    span: d,
                };
                match self.overlap_policy {
                    OverlapPolicy::Strict => return Err(violation),
                    OverlapPolicy::Permissive => warnings.push(violation.to_string()),
                }
            }
            d += (tier.repeats - 1) as f64 * tier.period;
            spans.push(d);
        }
        Ok(Spp {
            spec: self.clone(),
            spans,
            warnings,
        })
    }
}

/// A validated [`SppSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spp {
    spec: SppSpec,
    spans: Vec<f64>,
    warnings: Vec<String>,
}

/// Per-tier Bloch data at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierState {
    /// Bloch argument `ξ_i`.
    pub xi: f64,
    /// `γ_i = acos ξ_i`; real exactly when `|ξ_i| ≤ 1`.
    pub bloch_gamma: Complex64,
    /// `U_{N_i−1}(ξ_i)`, may overflow to ±∞.
    pub u_n1: f64,
    /// `U_{N_i−2}(ξ_i)`, may overflow to ±∞.
    pub u_n2: f64,
    /// `ln|U_{N_i−1}(ξ_i)|`, always finite unless `U` vanishes.
    pub ln_abs_u_n1: f64,
    pub sign_u_n1: f64,
    pub ln_abs_u_n2: f64,
    pub sign_u_n2: f64,
}

impl TierState {
    fn new(xi: f64, repeats: u32) -> Self {
        let n = repeats as i64;
        let (ln_abs_u_n1, sign_u_n1) = ln_abs_cheb_u(n - 1, xi);
        let (ln_abs_u_n2, sign_u_n2) = ln_abs_cheb_u(n - 2, xi);
        TierState {
            xi,
            bloch_gamma: Complex64::new(xi, 0.0).acos(),
            u_n1: cheb_u(n - 1, xi),
            u_n2: cheb_u(n - 2, xi),
            ln_abs_u_n1,
            sign_u_n1,
            ln_abs_u_n2,
            sign_u_n2,
        }
    }
}

/// Closed-form transfer matrix of an order-`n` potential at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SppMatrix {
    /// The four elements; they overflow to infinity for very opaque
    /// structures, in which case use the log fields.
    pub matrix: TransferMatrix,
    pub ln_abs_m22: f64,
    pub arg_m22: f64,
    pub ln_abs_m12: f64,
    pub arg_m12: f64,
    pub arg_m21: f64,
    pub tier_states: Vec<TierState>,
}

impl SppMatrix {
    pub fn scattering(&self) -> ScatteringResult {
        ScatteringResult::from_log_offdiag(
            self.ln_abs_m12,
            self.arg_m22,
            self.arg_m12,
            self.arg_m21,
        )
    }
}

/// Sum of terms `e^{ln_mag}·phase`, returned as `(ln scale, mantissa)`.
#[derive(Default)]
pub(crate) struct LogSum {
    terms: Vec<(f64, Complex64)>,
}

impl LogSum {
    pub(crate) fn push(&mut self, ln_mag: f64, phase: Complex64) {
        if ln_mag > f64::NEG_INFINITY {
            self.terms.push((ln_mag, phase));
        }
    }

    pub(crate) fn total(&self) -> (f64, Complex64) {
        let scale = self
            .terms
            .iter()
            .map(|t| t.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if scale == f64::NEG_INFINITY {
            return (0.0, Complex64::new(0.0, 0.0));
        }
        let mantissa = self.terms.iter().map(|&(l, p)| p * (l - scale).exp()).sum();
        (scale, mantissa)
    }

    pub(crate) fn value(&self) -> Complex64 {
        let (scale, mantissa) = self.total();
        if mantissa == Complex64::new(0.0, 0.0) {
            return mantissa;
        }
        mantissa * scale.exp()
    }
}

fn unit(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase.rem_euclid(TAU))
}

fn signed_unit(sign: f64, phase: f64) -> Complex64 {
    unit(phase) * sign
}

impl Spp {
    pub fn spec(&self) -> &SppSpec {
        &self.spec
    }

    pub fn cell(&self) -> &UnitCell {
        &self.spec.cell
    }

    pub fn tiers(&self) -> &[TierSpec] {
        &self.spec.tiers
    }

    pub fn order(&self) -> usize {
        self.spec.tiers.len()
    }

    /// Spans `d_0 … d_n`.
    pub fn spans(&self) -> &[f64] {
        &self.spans
    }

    pub fn total_span(&self) -> f64 {
        *self.spans.last().expect("spans always holds d_0")
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Bloch arguments `ξ_1 … ξ_n`.
    ///
    /// With `Φ_j = k Σ_{p<j}(N_p−1)s_p`,
    ///
    /// ```text
    /// ξ_j = |m22| cos(α − Φ_j + k s_j) Π_{p<j} U_{N_p−1}(ξ_p) − Σ_{r=1}^{j−1} H_r
    /// H_r = cos k(Σ_{p=r}^{j−1} N_p s_p − Σ_{p=r+1}^{j} s_p) · U_{N_r−2}(ξ_r) Π_{p=r+1}^{j−1} U_{N_p−1}(ξ_p)
    /// ```
    pub fn xi_sequence(&self, at: &EnergyPoint) -> Result<Vec<TierState>> {
        let cell = self.spec.cell.matrix(at)?;
        Ok(self.xi_sequence_with_cell(&cell, at.k()))
    }

    fn xi_sequence_with_cell(&self, cell: &TransferMatrix, k: f64) -> Vec<TierState> {
        let polar = cell.polar_m22();
        let ln_m22 = polar.magnitude.ln();
        let tiers = &self.spec.tiers;
        let mut states: Vec<TierState> = Vec::with_capacity(tiers.len());
        for j in 0..tiers.len() {
            let mut sum = LogSum::default();
            let phi: f64 = tiers[..j]
                .iter()
                .map(|t| (k * (t.repeats - 1) as f64 * t.period).rem_euclid(TAU))
                .sum();
            let (ln_prod, sign_prod) = states.iter().fold((0.0, 1.0), |(l, s), st| {
                (l + st.ln_abs_u_n1, s * st.sign_u_n1)
            });
            let first_phase = polar.alpha - phi + (k * tiers[j].period).rem_euclid(TAU);
            sum.push(
                ln_m22 + ln_prod,
                Complex64::new(sign_prod * first_phase.cos(), 0.0),
            );
            for r in 0..j {
                let ns: f64 = tiers[r..j]
                    .iter()
                    .map(|t| (k * t.repeats as f64 * t.period).rem_euclid(TAU))
                    .sum();
                let s: f64 = tiers[r + 1..=j]
                    .iter()
                    .map(|t| (k * t.period).rem_euclid(TAU))
                    .sum();
                let (ln_tail, sign_tail) = states[r + 1..j].iter().fold(
                    (states[r].ln_abs_u_n2, -states[r].sign_u_n2),
                    |(l, sg), st| (l + st.ln_abs_u_n1, sg * st.sign_u_n1),
                );
                sum.push(ln_tail, Complex64::new(sign_tail * (ns - s).cos(), 0.0));
            }
            let xi = sum.value().re;
            states.push(TierState::new(xi, tiers[j].repeats));
        }
        states
    }

    /// All four elements of the order-`n` transfer matrix.
    ///
    /// ```text
    /// (m22)_n = m22 e^{−iΦ} Π U_{N_p−1}(ξ_p) − Σ_{r=1}^{n} L_r,   Φ = k Σ (N_p−1) s_p
    /// L_r = U_{N_r−2}(ξ_r) Π_{p>r} U_{N_p−1}(ξ_p) e^{−ik(Σ_{p≥r} N_p s_p − Σ_{p>r} s_p)}
    /// (m12)_n = m12 e^{−iΦ} Π U_{N_p−1},   (m21)_n = m21 e^{iΦ} Π U_{N_p−1}
    /// ```
    ///
    /// and `(m11)_n = conj((m22)_n)`. With no tiers this is the cell matrix.
    pub fn closed_form_matrix(&self, at: &EnergyPoint) -> Result<SppMatrix> {
        let k = at.k();
        let cell = self.spec.cell.matrix(at)?;
        let states = self.xi_sequence_with_cell(&cell, k);
        let tiers = &self.spec.tiers;
        let n = tiers.len();

        let phi: f64 = tiers
            .iter()
            .map(|t| (k * (t.repeats - 1) as f64 * t.period).rem_euclid(TAU))
            .sum::<f64>()
            .rem_euclid(TAU);
        let (ln_prod, sign_prod) = states.iter().fold((0.0, 1.0), |(l, s), st| {
            (l + st.ln_abs_u_n1, s * st.sign_u_n1)
        });

        let polar = cell.polar_m22();
        let mut m22 = LogSum::default();
        m22.push(
            polar.magnitude.ln() + ln_prod,
            signed_unit(sign_prod, polar.alpha - phi),
        );
        for r in 0..n {
            let ns: f64 = tiers[r..]
                .iter()
                .map(|t| (k * t.repeats as f64 * t.period).rem_euclid(TAU))
                .sum();
            let s: f64 = tiers[r + 1..]
                .iter()
                .map(|t| (k * t.period).rem_euclid(TAU))
                .sum();
            let (ln_l, sign_l) = states[r + 1..].iter().fold(
                (states[r].ln_abs_u_n2, -states[r].sign_u_n2),
                |(l, sg), st| (l + st.ln_abs_u_n1, sg * st.sign_u_n1),
            );
            m22.push(ln_l, signed_unit(sign_l, -(ns - s)));
        }
        let (scale, mantissa) = m22.total();
        let m22_value = mantissa * scale.exp();
        let arg_m22 = principal_arg(mantissa);

        let ln_abs_m12 = cell.m12.norm().ln() + ln_prod;
        let m12_dir = signed_unit(sign_prod, -phi);
        let m12_value = if cell.m12.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            cell.m12 * m12_dir * ln_prod.exp()
        };
        let arg_m12 = principal_arg(cell.m12 * m12_dir);
        let arg_m21 = principal_arg(cell.m21 * m12_dir.conj());

        let matrix = TransferMatrix::from_hermitian(m12_value.conj(), m22_value);
        Ok(SppMatrix {
            matrix,
            ln_abs_m22: scale + mantissa.norm().ln(),
            arg_m22,
            ln_abs_m12,
            arg_m12,
            arg_m21,
            tier_states: states,
        })
    }

    /// `T = 1/(1 + X²)` with `X = |m12| Π |U_{N_i−1}(ξ_i)|`, in log space.
    pub fn transmission(&self, at: &EnergyPoint) -> Result<ScatteringResult> {
        Ok(self.closed_form_matrix(at)?.scattering())
    }

    /// Trigonometric form `T = 1/(1 + |m12|² Π sin²(N_iγ_i)/sin²γ_i)`.
    /// `γ_i` turns complex outside the bands, where the ratio is still real.
    pub fn transmission_trig(&self, at: &EnergyPoint) -> Result<f64> {
        let cell = self.spec.cell.matrix(at)?;
        let states = self.xi_sequence_with_cell(&cell, at.k());
        let mut x2 = cell.m12.norm_sqr();
        for (st, tier) in states.iter().zip(&self.spec.tiers) {
            let g = st.bloch_gamma;
            let ratio = (g * tier.repeats as f64).sin() / g.sin();
            x2 *= ratio.norm_sqr();
        }
        Ok(1.0 / (1.0 + x2))
    }

    /// Start positions of every cell copy, sorted. Coincident positions are
    /// kept with multiplicity: two zero-width cells at the same point act as
    /// one cell of double strength, which is what the closed forms describe.
    pub fn flatten(&self) -> Result<Vec<f64>> {
        let mut positions = vec![0.0];
        for tier in &self.spec.tiers {
            let mut next = Vec::with_capacity(positions.len() * tier.repeats as usize);
            for q in 0..tier.repeats {
                let shift = q as f64 * tier.period;
                next.extend(positions.iter().map(|p| p + shift));
            }
            positions = next;
        }
        positions.sort_by(f64::total_cmp);
        if self.spec.overlap_policy == OverlapPolicy::Strict {
            let d0 = self.spec.cell.width();
            for pair in positions.windows(2) {
                let gap = pair[1] - pair[0];
                if gap < d0 * (1.0 - 1e-9) {
                    return Err(Error::OverlapViolation {
                        tier: 0,
                        period: gap,
                        span: d0,
                    });
                }
            }
        }
        Ok(positions)
    }
}

/// `k` values where `ξ = cos(mπ/N)`, `m = 1 … N−1`, the zeros of `U_{N−1}`.
pub fn chebyshev_nodes(repeats: u32) -> Vec<f64> {
    (1..repeats)
        .map(|m| (m as f64 * PI / repeats as f64).cos())
        .collect()
}
