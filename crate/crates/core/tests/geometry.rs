mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use randens::geometry::{closed_forms, density_pdf, direct_moments, score, TENSOR_ORDERS};
use randens::quadrature::integrate_with_breaks;
use randens::{
    compare, field_derivs, fisher_direct, log_derivs, pd_check, structure_direct, Component, FamilyTag,
    FisherMatrix, FormulaMode, Interval, ParamPoint, QuadratureConfig, SourceSpec, StructureTensor,
};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn thetas(family: FamilyTag, n: usize, seed: u64) -> Vec<ParamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let loc = rng.random_range(-1.5..1.5);
            let scale = rng.random_range(0.2f64.ln()..2.0f64.ln()).exp();
            match family {
                FamilyTag::Heat => ParamPoint::new(family, loc, scale),
                FamilyTag::Laplace => ParamPoint::new(family, scale, loc),
            }
            .unwrap()
        })
        .collect()
}

#[test]
fn direct_moments_are_sane_over_the_corpus() {
    for family in FamilyTag::ALL {
        for source in common::corpus() {
            for th in thetas(family, 25, 17) {
                let m = direct_moments(&source, th, &cfg()).unwrap();
                assert!((m.normalization - 1.0).abs() < 1e-8, "{family} {source} {th:?}");
                assert!(m.mean_score[0].abs() < 1e-7 && m.mean_score[1].abs() < 1e-7, "{family} {source} {th:?}");
                assert!(m.symmetry_gap() < 1e-8, "{family} {source} {th:?}");
                let (pd, (l1, l2)) = pd_check(&m.metric);
                assert!(pd && l1 > 0.0 && l2 > 0.0, "{family} {source} {th:?}: {:?}", m.metric);
            }
        }
    }
}

#[test]
fn corrected_closed_forms_match_direct() {
    for family in FamilyTag::ALL {
        for source in common::corpus() {
            for th in thetas(family, 8, 23) {
                for r in compare(&source, th, &cfg(), FormulaMode::Corrected) {
                    assert!(r.failure.is_none());
                    assert!(
                        r.abs_residual < 1e-6f64.max(10.0 * r.direct_err),
                        "{family} {source} {th:?} {}: closed {} direct {}",
                        r.component,
                        r.closed,
                        r.direct
                    );
                }
            }
        }
    }
}

#[test]
fn printed_heat_metric_and_t122_match_direct() {
    for source in common::corpus() {
        for th in thetas(FamilyTag::Heat, 8, 29) {
            for r in compare(&source, th, &cfg(), FormulaMode::Printed) {
                if r.component.is_metric() || r.component == Component::T122 {
                    assert!(r.abs_residual < 1e-6f64.max(10.0 * r.direct_err), "{source} {th:?} {}", r.component);
                }
            }
        }
    }
}

#[test]
fn printed_heat_t222_gap_is_half_inverse_cube() {
    for t in [0.25, 0.5, 1.0, 2.0] {
        let th = ParamPoint::new(FamilyTag::Heat, 0.3, t).unwrap();
        let reps = compare(&SourceSpec::ImproperUniform, th, &cfg(), FormulaMode::Printed);
        let t222 = reps.iter().find(|r| r.component == Component::T222).unwrap();
        assert!((t222.abs_residual - 0.5 / (t * t * t)).abs() < 1e-6, "t={t}: {}", t222.abs_residual);
    }
}

#[test]
fn corrected_heat_t112_forms_agree_under_the_heat_equation() {
    // the two algebraic forms differ by (u_t - u_xx)/(u t)
    for source in common::corpus() {
        for th in thetas(FamilyTag::Heat, 5, 31) {
            let b = field_derivs(&source, th, &cfg()).unwrap();
            let l = log_derivs(&b).unwrap();
            let get = |i, j| l.get(randens::MultiIndex::of(i, j));
            let t = th.p2;
            let other = -0.5 * get(2, 1) - get(2, 0) / t - 0.25 / (t * t);
            let (_, tensor, _) = closed_forms(&source, th, &cfg(), FormulaMode::Corrected).unwrap();
            assert!((tensor.t112 - other).abs() < 1e-7 * (1.0 + other.abs()), "{source} {th:?}");
        }
    }
}

#[test]
fn cauchy_family_anchor() {
    for x in [0.5, 1.0, 2.0] {
        let th = ParamPoint::new(FamilyTag::Laplace, x, 0.0).unwrap();
        let (g, _) = fisher_direct(&SourceSpec::ImproperUniform, th, &cfg()).unwrap();
        let v = 0.5 / (x * x);
        assert!((g.g11 - v).abs() < 1e-7 && (g.g22 - v).abs() < 1e-7 && g.g12.abs() < 1e-7, "{x}: {g:?}");
    }
}

#[test]
fn gaussian_family_anchor() {
    for t in [0.25, 0.5, 1.0] {
        let th = ParamPoint::new(FamilyTag::Heat, -0.4, t).unwrap();
        let (g, _) = fisher_direct(&SourceSpec::ImproperUniform, th, &cfg()).unwrap();
        assert!((g.g11 - 0.5 / t).abs() < 1e-7 && (g.g22 - 0.5 / (t * t)).abs() < 1e-7 && g.g12.abs() < 1e-7);
    }
}

#[test]
fn metric_degenerates_with_the_source_width() {
    let th = ParamPoint::new(FamilyTag::Heat, 0.2, 0.5).unwrap();
    let g11: Vec<f64> = [1.0, 0.5, 0.1]
        .iter()
        .map(|&s| fisher_direct(&SourceSpec::gaussian(0.0, s), th, &cfg()).unwrap().0.g11)
        .collect();
    assert!(g11[0] > g11[1] && g11[1] > g11[2] && g11[2] > 0.0, "{g11:?}");
    let (g, _) = fisher_direct(&SourceSpec::PointMass { xi0: 0.0 }, th, &cfg()).unwrap();
    assert_eq!(g, FisherMatrix::ZERO);
}

#[test]
fn point_mass_is_degenerate_everywhere() {
    for family in FamilyTag::ALL {
        for th in thetas(family, 5, 3) {
            let src = SourceSpec::PointMass { xi0: 0.25 };
            assert_eq!(fisher_direct(&src, th, &cfg()).unwrap().0, FisherMatrix::ZERO);
            assert_eq!(structure_direct(&src, th, &cfg()).unwrap().0, StructureTensor::ZERO);
            assert!(!pd_check(&FisherMatrix::ZERO).0);
        }
    }
}

#[test]
fn randomized_density_integrates_to_one() {
    let source = SourceSpec::gaussian(0.0, 1.0);
    let th = ParamPoint::new(FamilyTag::Heat, 0.7, 0.3).unwrap();
    let bundle = field_derivs(&source, th, &cfg()).unwrap();
    let window = QuadratureConfig {
        window: Some(Interval::new(-20.0, 20.0)),
        ..cfg()
    };
    let mass = integrate_with_breaks(|xi| density_pdf(&source, th, xi, &bundle).unwrap(), Interval::REAL_LINE, &[0.7], &window)
        .unwrap()
        .value;
    assert!((mass - 1.0).abs() < 1e-10);
}

#[test]
fn gaussian_score_formula() {
    let th = ParamPoint::new(FamilyTag::Heat, 0.0, 0.5).unwrap();
    let flat = randens::LogDerivBundle::flat();
    for xi in [-2.0, 0.0, 0.5, 3.0] {
        let (s1, s2) = score(&SourceSpec::ImproperUniform, th, xi, &flat).unwrap();
        assert!((s1 - (xi - 0.0) / (2.0 * 0.5)).abs() < 1e-15);
        let z2 = xi * xi;
        assert!((s2 - (z2 / (4.0 * 0.25) - 1.0)).abs() < 1e-14);
    }
}

#[test]
fn every_index_order_is_listed_once() {
    let mut orders = TENSOR_ORDERS.to_vec();
    orders.sort();
    orders.dedup();
    assert_eq!(orders.len(), 8);
}
