//! The four subcommands. Each returns a table and whether it succeeded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spp_core::analysis::{
    band_report, band_width_estimate, find_cell_resonances, find_comb_resonances, sweep,
    transmission_peaks,
};
use spp_core::oracle::{compare_with, CompareReport, Tolerance};
use spp_core::{
    Axis, EnergyPoint, FractalKind, FractalSpec, ScatteringResult, Spp, SppSpec, SweepGrid, System,
    UnitCell,
};

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{Table, Value};

fn as_spp(system: &System) -> Result<Spp, ConfigError> {
    match system {
        System::Spp(s) => Ok(s.clone()),
        System::Fractal(f) => Ok(f.to_spp()?),
    }
}

fn k_grid(config: &ExperimentConfig) -> Result<SweepGrid, ConfigError> {
    let (grid, _) = config.sweep()?;
    if grid.axis != Axis::K {
        return Err(ConfigError::Invalid("this command needs a k sweep".into()));
    }
    Ok(grid)
}

pub fn transmission(config: &ExperimentConfig) -> Result<Table, ConfigError> {
    let system = config.system()?;
    let (grid, fixed_k) = config.sweep()?;
    let rows = sweep(&system, &grid, config.units()?, fixed_k)?;
    let n_xi = rows.iter().map(|r| r.xi.len()).max().unwrap_or(0);
    let mut columns = Vec::new();
    match grid.axis {
        Axis::K => {}
        Axis::Gamma => columns.push("gamma".to_owned()),
        Axis::Y => columns.push("y".to_owned()),
    }
    columns.extend(["k", "T", "log10_T"].map(String::from));
    columns.extend((1..=n_xi).map(|i| format!("xi_{i}")));
    let mut table = Table::new(columns);
    for r in rows {
        let mut row: Vec<Value> = Vec::new();
        if grid.axis != Axis::K {
            row.push(r.axis_value.into());
        }
        row.extend([r.k.into(), r.transmission.into(), r.log10_t.into()]);
        row.extend((0..n_xi).map(|i| r.xi.get(i).copied().into()));
        table.push(row);
    }
    Ok(table)
}

pub fn resonances(config: &ExperimentConfig) -> Result<Table, ConfigError> {
    let system = config.system()?;
    let spp = as_spp(&system)?;
    let grid = k_grid(config)?;
    let units = config.units()?;
    let opts = &config.resonances;

    let mut found: Vec<(f64, &str)> = Vec::new();
    if opts.cell {
        let cell = match &system {
            System::Spp(s) => s.cell().clone(),
            System::Fractal(f) => UnitCell::Rectangular(f.cell()),
        };
        found.extend(
            find_cell_resonances(&cell, &grid, units)?
                .into_iter()
                .map(|k| (k, "cell")),
        );
    }
    if opts.comb {
        found.extend(
            find_comb_resonances(&spp, &grid, units)?
                .into_iter()
                .map(|k| (k, "comb")),
        );
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));

    let mut table = Table::new([
        "k_star",
        "type",
        "delta_k",
        "numeric_lower",
        "numeric_upper",
        "numeric_width",
        "f1_tilde",
        "f2_tilde",
        "z",
        "zeta",
        "peaks",
    ]);
    for (k, kind) in found {
        let mut row: Vec<Value> = vec![k.into(), kind.into()];
        if opts.band_width && kind == "comb" {
            let est = band_width_estimate(&spp, k, units)?;
            let peaks = if est.numeric_width.is_finite() {
                let p = transmission_peaks(
                    &system,
                    est.numeric_lower,
                    est.numeric_upper,
                    opts.peak_points,
                    opts.peak_threshold,
                    units,
                )?;
                Value::from(p.len())
            } else {
                Value::Missing
            };
            row.extend([
                est.delta_k.into(),
                est.numeric_lower.into(),
                est.numeric_upper.into(),
                est.numeric_width.into(),
                est.f1_tilde.into(),
                est.f2_tilde.into(),
                est.z.into(),
                est.zeta.into(),
                peaks,
            ]);
        } else {
            row.extend(std::iter::repeat_n(Value::Missing, 9));
        }
        table.push(row);
    }
    Ok(table)
}

pub fn bands(config: &ExperimentConfig) -> Result<Table, ConfigError> {
    let spp = as_spp(&config.system()?)?;
    let report = band_report(&spp, &k_grid(config)?, config.units()?)?;
    let mut table = Table::new(["tier", "kind", "lower", "upper"]);
    for tier in &report.tiers {
        let mut intervals: Vec<(f64, f64, &str)> = tier
            .forbidden
            .iter()
            .map(|&(a, b)| (a, b, "forbidden"))
            .chain(tier.allowed.iter().map(|&(a, b)| (a, b, "allowed")))
            .collect();
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (a, b, kind) in intervals {
            table.push(vec![tier.tier.into(), kind.into(), a.into(), b.into()]);
        }
    }
    if report.tiers.iter().all(|t| t.forbidden.is_empty()) {
        eprintln!("no forbidden intervals");
    }
    Ok(table)
}

/// Random specifications of the oracle-equivalence suite: delta or
/// rectangular cells, up to three tiers of up to five repeats, no overlap.
fn random_spp(rng: &mut ChaCha8Rng) -> Result<Spp, ConfigError> {
    let cell = if rng.gen_bool(0.5) {
        UnitCell::delta(rng.gen_range(-20.0..=20.0))
    } else {
        UnitCell::rectangular(rng.gen_range(-20.0..=20.0), rng.gen_range(0.2..=2.0))
    };
    let mut spec = SppSpec::new(cell, vec![]);
    for _ in 0..rng.gen_range(0..=3) {
        spec.push_gap_tier(rng.gen_range(1..=5), rng.gen_range(0.05..=2.0));
    }
    Ok(spec.validate()?)
}

/// Scales the closed-form transmission by `1 − rel`. Only used to check that
/// verification notices a wrong evaluator.
fn perturbed(mut r: ScatteringResult, rel: f64) -> ScatteringResult {
    r.transmission *= 1.0 - rel;
    r.reflection = 1.0 - r.transmission;
    r.log10_t += (1.0 - rel).log10();
    r
}

pub fn verify(
    config: &ExperimentConfig,
    perturb: Option<f64>,
) -> Result<(Table, bool), ConfigError> {
    let units = config.units()?;
    let tol: Tolerance = config.tolerance();
    let v = &config.verify;
    if !(v.k_min > 0.0 && v.k_min < v.k_max) || v.points < 2 {
        return Err(ConfigError::Invalid(
            "verify needs 0 < k_min < k_max and at least two points".into(),
        ));
    }
    let even = SweepGrid::k(v.k_min, v.k_max, v.points)?.values();

    let mut cases: Vec<(String, System, Vec<f64>)> = Vec::new();
    if config.system.is_some() {
        let system = config.system()?;
        let ks = match config.sweep.as_ref().map(|s| s.axis) {
            Some(Axis::K) => config.sweep()?.0.values(),
            _ => even.clone(),
        };
        cases.push(("system".into(), system, ks));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    for i in 0..v.specs {
        let spp = random_spp(&mut rng)?;
        let ks = (0..v.points)
            .map(|_| v.k_max - rng.gen_range(0.0..v.k_max - v.k_min))
            .collect();
        cases.push((format!("random_{i}"), System::Spp(spp), ks));
    }
    for (name, kind) in [
        ("standard_cantor", FractalKind::StandardCantor),
        ("smith_volterra_cantor", FractalKind::SmithVolterraCantor),
    ] {
        for &g in &v.fractal_stages {
            let f = FractalSpec::new(kind, g, 10.0, 10.0);
            cases.push((format!("{name}_g{g}"), System::Fractal(f), even.clone()));
        }
    }

    let mut table = Table::new([
        "case",
        "points",
        "max_abs_dt",
        "max_rel_dlog10t",
        "worst_k",
        "worst_ratio",
        "passed",
    ]);
    let mut all_passed = true;
    for (name, system, ks) in cases {
        let flat = system.flat_potential()?;
        let report: CompareReport = compare_with(
            |at: &EnergyPoint| {
                let r = system.transmission(at)?;
                Ok(match perturb {
                    Some(rel) => perturbed(r, rel),
                    None => r,
                })
            },
            &flat,
            &ks,
            units,
            tol,
        )?;
        all_passed &= report.passed();
        table.push(vec![
            name.as_str().into(),
            report.points.into(),
            report.max_abs_dt.into(),
            report.max_rel_dlog10t.into(),
            report.worst_k.into(),
            report.worst_ratio.into(),
            report.passed().into(),
        ]);
    }
    Ok((table, all_passed))
}
