//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use serde::Deserialize;
use spp_core::oracle::Tolerance;
use spp_core::{
    Axis, FractalKind, FractalSpec, OverlapPolicy, SppSpec, SweepGrid, System, TierSpec, UnitCell,
    Units,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub overlap: OverlapPolicy,
    #[serde(default)]
    pub units: UnitsConfig,
    pub system: Option<SystemConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default)]
    pub resonances: ResonanceConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        UnitsConfig {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub cell: Option<CellConfig>,
    #[serde(default)]
    pub tiers: Vec<TierConfig>,
    pub fractal: Option<FractalConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CellConfig {
    Delta { strength: f64 },
    Rectangular { height: f64, width: f64 },
    Piecewise { segments: Vec<SegmentConfig> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub width: f64,
    pub height: f64,
}

/// Exactly one of `period` (`s_i`, start to start) or `gap` (`c_i`, end of
/// one copy to start of the next).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierConfig {
    pub repeats: u32,
    pub period: Option<f64>,
    pub gap: Option<f64>,
}

// Variant names are the TOML values.
#[allow(clippy::enum_variant_names)]
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractalKindName {
    StandardCantor,
    GeneralCantor,
    SmithVolterraCantor,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractalConfig {
    pub kind: FractalKindName,
    pub removal_gamma: Option<f64>,
    pub stage: u32,
    pub span: f64,
    pub height: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "k_axis")]
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Wavenumber held fixed on the `gamma` and `y` axes.
    pub k: Option<f64>,
}

fn k_axis() -> Axis {
    Axis::K
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub abs_t: Option<f64>,
    pub rel_log10_t: Option<f64>,
    pub log_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default = "yes")]
    pub cell: bool,
    #[serde(default = "yes")]
    pub comb: bool,
    #[serde(default)]
    pub band_width: bool,
    #[serde(default = "peak_threshold")]
    pub peak_threshold: f64,
    #[serde(default = "peak_points")]
    pub peak_points: usize,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        ResonanceConfig {
            cell: true,
            comb: true,
            band_width: false,
            peak_threshold: peak_threshold(),
            peak_points: peak_points(),
        }
    }
}

fn yes() -> bool {
    true
}

fn peak_threshold() -> f64 {
    0.999
}

fn peak_points() -> usize {
    20_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "seed")]
    pub seed: u64,
    #[serde(default = "specs")]
    pub specs: usize,
    #[serde(default = "points")]
    pub points: usize,
    #[serde(default = "k_min")]
    pub k_min: f64,
    #[serde(default = "k_max")]
    pub k_max: f64,
    #[serde(default = "fractal_stages")]
    pub fractal_stages: Vec<u32>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: seed(),
            specs: specs(),
            points: points(),
            k_min: k_min(),
            k_max: k_max(),
            fractal_stages: fractal_stages(),
        }
    }
}

fn seed() -> u64 {
    1
}

fn specs() -> usize {
    50
}

fn points() -> usize {
    200
}

fn k_min() -> f64 {
    0.1
}

fn k_max() -> f64 {
    15.0
}

fn fractal_stages() -> Vec<u32> {
    (1..=10).collect()
}

/// Parse failures exit 2, validation failures exit 3.
#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid(String),
}

impl From<spp_core::Error> for ConfigError {
    fn from(e: spp_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn units(&self) -> Result<Units, ConfigError> {
        let u = Units {
            hbar: self.units.hbar,
            mass: self.units.mass,
        };
        if !(u.hbar > 0.0 && u.mass > 0.0 && u.hbar.is_finite() && u.mass.is_finite()) {
            return Err(ConfigError::Invalid(
                "hbar and mass must be positive".into(),
            ));
        }
        Ok(u)
    }

    pub fn tolerance(&self) -> Tolerance {
        let d = Tolerance::default();
        Tolerance {
            abs_t: self.tolerance.abs_t.unwrap_or(d.abs_t),
            rel_log10_t: self.tolerance.rel_log10_t.unwrap_or(d.rel_log10_t),
            log_threshold: self.tolerance.log_threshold.unwrap_or(d.log_threshold),
        }
    }

    pub fn system(&self) -> Result<System, ConfigError> {
        let Some(sys) = &self.system else {
            return Err(ConfigError::Parse("missing [system] section".into()));
        };
        match (&sys.cell, &sys.fractal) {
            (Some(cell), None) => {
                let mut spec = SppSpec::new(cell.to_cell(), vec![]);
                spec.overlap_policy = self.overlap;
                for (i, tier) in sys.tiers.iter().enumerate() {
                    match (tier.period, tier.gap) {
                        (Some(s), None) => spec.tiers.push(TierSpec::new(tier.repeats, s)),
                        (None, Some(c)) => spec.push_gap_tier(tier.repeats, c),
                        _ => {
                            return Err(ConfigError::Parse(format!(
                                "tier {} needs exactly one of `period` or `gap`",
                                i + 1
                            )))
                        }
                    }
                }
                Ok(System::Spp(spec.validate()?))
            }
            (None, Some(f)) => {
                if !sys.tiers.is_empty() {
                    return Err(ConfigError::Parse(
                        "a fractal system takes no `tiers`".into(),
                    ));
                }
                let spec = f.to_spec()?;
                spec.validate()?;
                Ok(System::Fractal(spec))
            }
            _ => Err(ConfigError::Parse(
                "[system] needs exactly one of `cell` or `fractal`".into(),
            )),
        }
    }

    pub fn sweep(&self) -> Result<(SweepGrid, Option<f64>), ConfigError> {
        let Some(s) = &self.sweep else {
            return Err(ConfigError::Parse("missing [sweep] section".into()));
        };
        let grid = SweepGrid::new(s.axis, s.start, s.stop, s.points)?;
        if s.axis != Axis::K && s.k.is_none() {
            return Err(ConfigError::Invalid(
                "gamma and y sweeps need a fixed `k`".into(),
            ));
        }
        Ok((grid, s.k))
    }
}

impl CellConfig {
    fn to_cell(&self) -> UnitCell {
        match self {
            CellConfig::Delta { strength } => UnitCell::delta(*strength),
            CellConfig::Rectangular { height, width } => UnitCell::rectangular(*height, *width),
            CellConfig::Piecewise { segments } => {
                UnitCell::piecewise(segments.iter().map(|s| (s.width, s.height)))
            }
        }
    }
}

impl FractalConfig {
    fn to_spec(&self) -> Result<FractalSpec, ConfigError> {
        let kind = match (&self.kind, self.removal_gamma) {
            (FractalKindName::StandardCantor, None) => FractalKind::StandardCantor,
            (FractalKindName::SmithVolterraCantor, None) => FractalKind::SmithVolterraCantor,
            (FractalKindName::GeneralCantor, Some(removal_gamma)) => {
                FractalKind::GeneralCantor { removal_gamma }
            }
            (FractalKindName::GeneralCantor, None) => {
                return Err(ConfigError::Parse(
                    "general_cantor needs `removal_gamma`".into(),
                ))
            }
            _ => {
                return Err(ConfigError::Parse(
                    "`removal_gamma` applies only to general_cantor".into(),
                ))
            }
        };
        Ok(FractalSpec::new(kind, self.stage, self.span, self.height))
    }
}
