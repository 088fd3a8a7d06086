mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use randens::kernels::fundamental_solution;
use randens::quadrature::{integrate_with_breaks, with_defaults};
use randens::{field_derivs, source_pdf, Interval, pde_residual, FamilyTag, MultiIndex, ParamPoint, QuadratureConfig, SourceSpec};

fn sample_thetas(family: FamilyTag, n: usize, seed: u64) -> Vec<ParamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let loc = rng.random_range(-2.0..2.0);
            let scale = rng.random_range(0.1f64.ln()..2.0f64.ln()).exp();
            match family {
                FamilyTag::Heat => ParamPoint::new(family, loc, scale),
                FamilyTag::Laplace => ParamPoint::new(family, scale, loc),
            }
            .unwrap()
        })
        .collect()
}

#[test]
fn pde_residual_is_small() {
    let cfg = QuadratureConfig::default();
    for family in FamilyTag::ALL {
        for source in common::corpus() {
            for th in sample_thetas(family, 50, 2024) {
                let b = field_derivs(&source, th, &cfg).unwrap();
                let r = pde_residual(&b, family);
                let bound = 1e-7 * (1.0 + b.get(MultiIndex::of(2, 0)).abs());
                assert!(r.abs() <= bound, "{family} {source} {th:?}: {r:e}");
            }
        }
    }
}

/// `u` as a plain scalar quadrature of `Φ f`, independent of the bundle code.
fn scalar_u(source: &SourceSpec, th: ParamPoint, cfg: &QuadratureConfig) -> f64 {
    let cfg = with_defaults(*cfg, th.family, source, th);
    let mut breaks = source.landmarks();
    breaks.push(th.location());
    integrate_with_breaks(
        |xi| {
            let phi = fundamental_solution(th.family, th.kernel_point(xi)).unwrap();
            phi * source_pdf(source, xi).unwrap()
        },
        source.exact_support().unwrap_or(Interval::REAL_LINE),
        &breaks,
        &cfg,
    )
    .unwrap()
    .value
}

#[test]
fn first_partials_match_finite_differences() {
    let tight = QuadratureConfig {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_subdivisions: 2000,
        ..QuadratureConfig::default()
    };
    for family in FamilyTag::ALL {
        for source in common::corpus() {
            for th in sample_thetas(family, 6, 99) {
                let b = field_derivs(&source, th, &QuadratureConfig::default()).unwrap();
                let u = |p1: f64, p2: f64| scalar_u(&source, ParamPoint::new(family, p1, p2).unwrap(), &tight);
                let d1 = common::richardson(|s| u(s, th.p2), th.p1, common::base_step(th.p1));
                let d2 = common::richardson(|s| u(th.p1, s), th.p2, common::base_step(th.p2).min(0.05 * th.p2));
                let e1 = b.get(MultiIndex::of(1, 0));
                let e2 = b.get(MultiIndex::of(0, 1));
                let norm = |e: f64| e.abs().max(1e-3 * b.u());
                assert!((d1 - e1).abs() <= 1e-6 * norm(e1), "{family} {source} {th:?}: {d1} vs {e1}");
                assert!((d2 - e2).abs() <= 1e-6 * norm(e2), "{family} {source} {th:?}: {d2} vs {e2}");
            }
        }
    }
}

#[test]
fn translation_equivariance() {
    let cfg = QuadratureConfig::default();
    for family in FamilyTag::ALL {
        for source in common::corpus().into_iter().chain([SourceSpec::PointMass { xi0: 0.4 }]) {
            for c in [-1.3, 0.7] {
                for th in sample_thetas(family, 4, 5) {
                    let moved = match family {
                        FamilyTag::Heat => ParamPoint::new(family, th.p1 + c, th.p2),
                        FamilyTag::Laplace => ParamPoint::new(family, th.p1, th.p2 + c),
                    }
                    .unwrap();
                    let a = field_derivs(&source, th, &cfg).unwrap();
                    let b = field_derivs(&source.shifted(c), moved, &cfg).unwrap();
                    for idx in MultiIndex::ALL {
                        let (x, y) = (a.get(idx), b.get(idx));
                        let tol = 2.0 * cfg.abs_tol.max(cfg.rel_tol * x.abs()) + a.err + b.err;
                        assert!((x - y).abs() <= tol, "{family} {source} {c} {idx:?}: {x} vs {y}");
                    }
                }
            }
        }
    }
}

#[test]
fn improper_uniform_is_constant_one() {
    for family in FamilyTag::ALL {
        for th in sample_thetas(family, 5, 1) {
            let b = field_derivs(&SourceSpec::ImproperUniform, th, &QuadratureConfig::default()).unwrap();
            assert_eq!(b.u(), 1.0);
            assert!(b.values[1..].iter().all(|v| *v == 0.0));
        }
    }
}
