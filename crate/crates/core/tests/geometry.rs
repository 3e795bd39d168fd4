use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use spp_core::{FractalKind, FractalSpec};

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Removes the middle `gap(step, length)` of every interval, `stage` times,
/// and returns the surviving intervals in order.
fn remove_middles(
    span: BigRational,
    stage: u32,
    gap: &dyn Fn(u32, &BigRational) -> BigRational,
) -> Vec<(BigRational, BigRational)> {
    let mut intervals = vec![(BigRational::zero(), span)];
    for step in 1..=stage {
        intervals = intervals
            .into_iter()
            .flat_map(|(a, b)| {
                let len = &b - &a;
                let keep = (&len - gap(step, &len)) / int(2);
                let left_end = &a + &keep;
                let right_start = &b - &keep;
                [(a, left_end), (right_start, b)]
            })
            .collect();
    }
    intervals
}

fn reference(spec: &FractalSpec, l: &BigRational) -> Vec<(BigRational, BigRational)> {
    match spec.kind {
        FractalKind::StandardCantor => {
            remove_middles(l.clone(), spec.stage, &|_, len| len / int(3))
        }
        FractalKind::GeneralCantor { removal_gamma } => {
            let gamma = BigRational::from_float(removal_gamma).unwrap();
            remove_middles(l.clone(), spec.stage, &move |_, len| len * &gamma)
        }
        FractalKind::SmithVolterraCantor => {
            let l = l.clone();
            remove_middles(l.clone(), spec.stage, &move |step, _| {
                &l / int(4).pow(step as i32)
            })
        }
    }
}

fn kinds() -> Vec<FractalKind> {
    vec![
        FractalKind::StandardCantor,
        FractalKind::GeneralCantor { removal_gamma: 0.5 },
        FractalKind::GeneralCantor {
            removal_gamma: 0.125,
        },
        FractalKind::GeneralCantor { removal_gamma: 0.8 },
        FractalKind::SmithVolterraCantor,
    ]
}

#[test]
fn exact_positions_match_middle_removal() {
    for kind in kinds() {
        for stage in 0..=10 {
            let spec = FractalSpec::new(kind, stage, 10.0, 10.0);
            let geometry = spec.exact_geometry().unwrap();
            let expected = reference(&spec, &int(10));
            assert_eq!(
                geometry.positions().len(),
                expected.len(),
                "{kind:?} G={stage}"
            );
            for (p, (a, b)) in geometry.positions().iter().zip(&expected) {
                assert_eq!(p, a, "{kind:?} G={stage}");
                assert_eq!(&(b - a), &geometry.cell_width, "{kind:?} G={stage}");
            }
            assert_eq!(geometry.total_span(), int(10));
        }
    }
}

#[test]
fn flattened_positions_match_middle_removal() {
    for kind in kinds() {
        for stage in 0..=10 {
            let spec = FractalSpec::new(kind, stage, 10.0, 10.0);
            let positions = spec.to_spp().unwrap().flatten().unwrap();
            let expected = reference(&spec, &int(10));
            assert_eq!(positions.len(), expected.len());
            for (p, (a, _)) in positions.iter().zip(&expected) {
                assert!(
                    (p - a.to_f64().unwrap()).abs() <= 1e-12 * 10.0,
                    "{kind:?} G={stage}"
                );
            }
            let width = spec.cell_width();
            let exact = &expected[0].1 - &expected[0].0;
            assert!((width - exact.to_f64().unwrap()).abs() <= 1e-14 * 10.0);
        }
    }
}

#[test]
fn surviving_measure() {
    // Standard Cantor keeps (2/3)^G of the span; SVC keeps more than half.
    for stage in 0..=10 {
        let std = FractalSpec::new(FractalKind::StandardCantor, stage, 1.0, 1.0);
        let g = std.exact_geometry().unwrap();
        let measure = &g.cell_width * int(2).pow(stage as i32);
        assert_eq!(
            measure,
            BigRational::new(2.into(), 3.into()).pow(stage as i32)
        );

        let svc = FractalSpec::new(FractalKind::SmithVolterraCantor, stage, 1.0, 1.0);
        let g = svc.exact_geometry().unwrap();
        let measure = &g.cell_width * int(2).pow(stage as i32);
        assert!(measure > BigRational::new(1.into(), 2.into()));
    }
}
