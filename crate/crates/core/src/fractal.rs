//! Cantor-family fractal potentials.
//!
//! A stage-`G` fractal of span `L` and height `V` is `2^G` identical
//! rectangular barriers. It is an order-`G` super periodic potential whose
//! tiers all repeat twice, so `U_1(ξ) = 2ξ` and the transmission reduces to
//!
//! ```text
//! T_G = 1 / (1 + 4^G ε₋² sin²(k' l_G) Π ξ_i²)
//! ```
//!
//! Three constructions are supported: removing the middle third (standard
//! Cantor), removing a middle fraction `γ` (general Cantor) and removing a
//! middle `1/4^g` of the original span at step `g` (Smith–Volterra–Cantor).

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, TAU};

use crate::error::{Error, Result};
use crate::spp::{LogSum, Spp, SppSpec, TierSpec};
use crate::tmcore::ScatteringResult;
use crate::unitcell::{EnergyPoint, RectangularCell, UnitCell};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FractalKind {
    StandardCantor,
    GeneralCantor { removal_gamma: f64 },
    SmithVolterraCantor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractalSpec {
    pub kind: FractalKind,
    /// Stage `G`.
    pub stage: u32,
    /// Total span `L`.
    pub span: f64,
    /// Barrier height `V`.
    pub height: f64,
}

/// Phase lengths of the Smith–Volterra–Cantor closed form, indexed from
/// zero (`eta1[j−1]`, `eta2[j−1][p−1]`, `eta3[j−1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SvcEta {
    pub eta1: Vec<f64>,
    pub eta2: Vec<Vec<f64>>,
    pub eta3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractalClosedForm {
    /// `τ = kL/3^{G+1}` (standard) or `τ_γ = kLρ^{G+1}` (general).
    pub tau: Option<f64>,
    pub svc_eta: Option<SvcEta>,
    /// `ξ_1 … ξ_G`.
    pub xi: Vec<f64>,
}

/// Cell width and tier periods in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactGeometry {
    pub cell_width: BigRational,
    pub periods: Vec<BigRational>,
}

impl ExactGeometry {
    pub fn total_span(&self) -> BigRational {
        self.periods
            .iter()
            .fold(self.cell_width.clone(), |d, s| d + s)
    }

    /// Start positions of all `2^G` barriers, sorted.
    pub fn positions(&self) -> Vec<BigRational> {
        let mut positions = vec![BigRational::zero()];
        for s in &self.periods {
            let shifted: Vec<BigRational> = positions.iter().map(|p| p + s).collect();
            positions.extend(shifted);
        }
        positions.sort();
        positions
    }

    pub fn periods_f64(&self) -> Vec<f64> {
        self.periods.iter().map(to_f64).collect()
    }
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidFractal(format!("{x} is not finite")))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl FractalSpec {
    pub fn new(kind: FractalKind, stage: u32, span: f64, height: f64) -> Self {
        FractalSpec {
            kind,
            stage,
            span,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0) || !self.span.is_finite() {
            return Err(Error::InvalidFractal(format!(
                "span must be positive, got {}",
                self.span
            )));
        }
        if !self.height.is_finite() {
            return Err(Error::InvalidFractal("height must be finite".into()));
        }
        if let FractalKind::GeneralCantor { removal_gamma } = self.kind {
            if !(removal_gamma > 0.0 && removal_gamma < 1.0) {
                return Err(Error::InvalidFractal(format!(
                    "removal fraction must lie in (0, 1), got {removal_gamma}"
                )));
            }
        }
        Ok(())
    }

    /// `(ρ, σ) = ((1−γ)/2, (1+γ)/2)` for the Cantor kinds.
    fn rho_sigma(&self) -> Option<(f64, f64)> {
        match self.kind {
            FractalKind::StandardCantor => Some((1.0 / 3.0, 2.0 / 3.0)),
            FractalKind::GeneralCantor { removal_gamma } => {
                Some(((1.0 - removal_gamma) / 2.0, (1.0 + removal_gamma) / 2.0))
            }
            FractalKind::SmithVolterraCantor => None,
        }
    }

    /// Width `l_g` of each segment after `g` removal steps.
    fn segment_width(&self, g: i32) -> f64 {
        let l = self.span;
        match self.kind {
            FractalKind::StandardCantor => l / 3f64.powi(g),
            FractalKind::GeneralCantor { .. } => l * self.rho_sigma().unwrap().0.powi(g),
            FractalKind::SmithVolterraCantor => l * (2f64.powi(g) + 1.0) / 2f64.powi(2 * g + 1),
        }
    }

    /// Barrier width `l_G`.
    pub fn cell_width(&self) -> f64 {
        self.segment_width(self.stage as i32)
    }

    /// Tier periods `s_1 … s_G`.
    pub fn periods(&self) -> Vec<f64> {
        let g = self.stage as i32;
        let l = self.span;
        (1..=g)
            .map(|i| match self.kind {
                FractalKind::StandardCantor => 2.0 * l * 3f64.powi(i - g - 1),
                FractalKind::GeneralCantor { .. } => {
                    let (rho, sigma) = self.rho_sigma().unwrap();
                    sigma * l * rho.powi(g - i)
                }
                FractalKind::SmithVolterraCantor => {
                    l * (2f64.powi(g - i + 1) + 3.0) / 2f64.powi(2 * (g - i) + 3)
                }
            })
            .collect()
    }

    /// Same geometry with `L` and `γ` taken as exact rationals.
    pub fn exact_geometry(&self) -> Result<ExactGeometry> {
        self.validate()?;
        let l = exact(self.span)?;
        let g = self.stage as i32;
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());
        let (rho, sigma) = match self.kind {
            FractalKind::StandardCantor => (
                BigRational::new(1.into(), 3.into()),
                BigRational::new(2.into(), 3.into()),
            ),
            FractalKind::GeneralCantor { removal_gamma } => {
                let gamma = exact(removal_gamma)?;
                ((&one - &gamma) / &two, (&one + &gamma) / &two)
            }
            FractalKind::SmithVolterraCantor => {
                let svc_width = |g: i32| {
                    let p = two.pow(g);
                    &l * (&p + &one) / (&p * &p * &two)
                };
                let periods = (1..=g)
                    .map(|i| svc_width(g - i) - svc_width(g + 1 - i))
                    .collect();
                return Ok(ExactGeometry {
                    cell_width: svc_width(g),
                    periods,
                });
            }
        };
        let cell_width = &l * rho.pow(g);
        let periods = (1..=g).map(|i| &sigma * &l * rho.pow(g - i)).collect();
        Ok(ExactGeometry {
            cell_width,
            periods,
        })
    }

    pub fn cell(&self) -> RectangularCell {
        RectangularCell {
            height: self.height,
            width: self.cell_width(),
        }
    }

    /// The equivalent order-`G` specification: a rectangular cell of width
    /// `l_G` and `G` tiers that each repeat twice.
    pub fn to_spp_spec(&self) -> Result<SppSpec> {
        self.validate()?;
        Ok(SppSpec::new(
            UnitCell::Rectangular(self.cell()),
            self.periods()
                .into_iter()
                .map(|s| TierSpec::new(2, s))
                .collect(),
        ))
    }

    pub fn to_spp(&self) -> Result<Spp> {
        self.to_spp_spec()?.validate()
    }

    /// The kind-specific closed form of `ξ_1 … ξ_G`:
    ///
    /// ```text
    /// ξ_j = 2^{j−1}|m22| cos(α + φ1_j) Π_{i<j} ξ_i
    ///       − Σ_{p=1}^{j−2} 2^{j−p−1} cos(φ2_{j,p}) Π_{i=p+1}^{j−1} ξ_i
    ///       − [j ≥ 2] cos(φ3_j)
    /// ```
    ///
    /// Standard Cantor: `φ1 = τ(3 + 3^j)`, `φ2 = τ(3^p − 3^j)`, `φ3 = 2τ3^{j−1}`.
    /// General Cantor: `φ1 = τ_γ(ρ^{−1} + γρ^{−(j+1)})`,
    /// `φ2 = τ_γγ(ρ^{−(p+1)} − ρ^{−(j+1)})`, `φ3 = τ_γγσρ^{−(j+1)}`.
    /// Smith–Volterra–Cantor: `φ = kη` with `η1 = l_G + L/4^{G+1−j}`,
    /// `η2 = L/4^{G+1−p} − L/4^{G+1−j}`, `η3 = 3L/4^{G+2−j}`.
    pub fn cantor_xi(&self, at: &EnergyPoint) -> Result<FractalClosedForm> {
        self.validate()?;
        let k = at.k();
        let g = self.stage as usize;
        let l = self.span;
        let phase = |x: f64| x.rem_euclid(TAU);

        let mut phi1 = Vec::with_capacity(g);
        let mut phi2: Vec<Vec<f64>> = Vec::with_capacity(g);
        let mut phi3 = Vec::with_capacity(g);
        let mut tau = None;
        let mut svc_eta = None;
        match self.kind {
            FractalKind::StandardCantor => {
                let t = k * l / 3f64.powi(g as i32 + 1);
                for j in 1..=g as i32 {
                    let three_j = 3f64.powi(j);
                    phi1.push(phase(t * (3.0 + three_j)));
                    phi2.push(
                        (1..j)
                            .map(|p| phase(t * (3f64.powi(p) - three_j)))
                            .collect(),
                    );
                    phi3.push(phase(2.0 * t * 3f64.powi(j - 1)));
                }
                tau = Some(t);
            }
            FractalKind::GeneralCantor {
                removal_gamma: gamma,
            } => {
                let (rho, sigma) = self.rho_sigma().unwrap();
                let t = k * l * rho.powi(g as i32 + 1);
                for j in 1..=g as i32 {
                    let inv_j1 = rho.powi(-(j + 1));
                    phi1.push(phase(t * (1.0 / rho + gamma * inv_j1)));
                    phi2.push(
                        (1..j)
                            .map(|p| phase(t * gamma * (rho.powi(-(p + 1)) - inv_j1)))
                            .collect(),
                    );
                    phi3.push(phase(t * gamma * sigma * inv_j1));
                }
                tau = Some(t);
            }
            FractalKind::SmithVolterraCantor => {
                let lg = self.cell_width();
                let quarter = |e: i32| l / 4f64.powi(e);
                let gi = g as i32;
                let eta = SvcEta {
                    eta1: (1..=gi).map(|j| lg + quarter(gi + 1 - j)).collect(),
                    eta2: (1..=gi)
                        .map(|j| {
                            (1..j)
                                .map(|p| quarter(gi + 1 - p) - quarter(gi + 1 - j))
                                .collect()
                        })
                        .collect(),
                    eta3: (1..=gi).map(|j| 3.0 * quarter(gi + 2 - j)).collect(),
                };
                for j in 0..g {
                    phi1.push(phase(k * eta.eta1[j]));
                    phi2.push(eta.eta2[j].iter().map(|&e| phase(k * e)).collect());
                    phi3.push(phase(k * eta.eta3[j]));
                }
                svc_eta = Some(eta);
            }
        }

        let m = UnitCell::Rectangular(self.cell()).matrix(at)?;
        let polar = m.polar_m22();
        let ln_m22 = polar.magnitude.ln();
        let mut xi: Vec<f64> = Vec::with_capacity(g);
        for j in 0..g {
            let mut sum = LogSum::default();
            let (ln_all, sign_all) = ln_product(&xi[..j]);
            sum.push(
                j as f64 * LN_2 + ln_m22 + ln_all,
                Complex64::new(sign_all * (polar.alpha + phi1[j]).cos(), 0.0),
            );
            // p runs over 1..=j−2 in one-based terms, i.e. 0..j−1 here
            for p in 0..j.saturating_sub(1) {
                let (ln_tail, sign_tail) = ln_product(&xi[p + 1..j]);
                sum.push(
                    (j - p - 1) as f64 * LN_2 + ln_tail,
                    Complex64::new(-sign_tail * phi2[j][p].cos(), 0.0),
                );
            }
            if j >= 1 {
                sum.push(0.0, Complex64::new(-phi3[j].cos(), 0.0));
            }
            xi.push(sum.value().re);
        }
        Ok(FractalClosedForm { tau, svc_eta, xi })
    }

    /// `T_G` from the specialised closed form, accumulated in log space.
    /// Amplitude phases come from the generic order-`G` closed form.
    pub fn transmission(&self, at: &EnergyPoint) -> Result<ScatteringResult> {
        let closed = self.cantor_xi(at)?;
        let (_, eps_minus_sin, _) = self.cell().epsilon_terms(at);
        let (ln_xi, _) = ln_product(&closed.xi);
        let ln_x = self.stage as f64 * LN_2 + eps_minus_sin.abs().ln() + ln_xi;
        let generic = self.to_spp()?.closed_form_matrix(at)?;
        Ok(ScatteringResult::from_log_offdiag(
            ln_x,
            generic.arg_m22,
            generic.arg_m12,
            generic.arg_m21,
        ))
    }
}

fn ln_product(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((0.0, 1.0), |(l, s), &x| {
        if x == 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else {
            (l + x.abs().ln(), s * x.signum())
        }
    })
}

/// `T_G` for `f`. See [`FractalSpec::transmission`].
pub fn fractal_transmission(f: &FractalSpec, at: &EnergyPoint) -> Result<ScatteringResult> {
    f.transmission(at)
}

/// Sup-norm over `ks` of `|log10(−log10 T_1) − log10(−log10 T_2)|` between
/// two Smith–Volterra–Cantor stages, skipping points where either
/// transmission is within `1e-12` of one.
pub fn svc_saturation(f1: &FractalSpec, f2: &FractalSpec, ks: &[f64]) -> Result<f64> {
    for f in [f1, f2] {
        if f.kind != FractalKind::SmithVolterraCantor {
            return Err(Error::KindMismatch(format!(
                "saturation needs Smith-Volterra-Cantor potentials, got {:?}",
                f.kind
            )));
        }
    }
    if f1.span != f2.span || f1.height != f2.height {
        return Err(Error::KindMismatch(
            "saturation compares stages of the same span and height".into(),
        ));
    }
    let opacity = |f: &FractalSpec, at: &EnergyPoint| -> Result<Option<f64>> {
        let r = f.transmission(at)?;
        if 1.0 - r.transmission <= 1e-12 {
            Ok(None)
        } else {
            Ok(Some((-r.log10_t).log10()))
        }
    };
    let mut worst = 0.0_f64;
    for &k in ks {
        let at = EnergyPoint::natural(k)?;
        if let (Some(a), Some(b)) = (opacity(f1, &at)?, opacity(f2, &at)?) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
