//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and unbounded intervals.
//!
//! The adaptive driver is vector-valued: [`integrate_many`] integrates `N`
//! functions that share one subdivision, so every entry of a derivative
//! bundle or a moment table sees the same nodes. Scalar [`integrate`] is the
//! `N = 1` case.
//!
//! Unbounded domains are handled either by the tangent substitution
//! `ξ = center + scale·tan ϑ`, which turns a Cauchy-type factor into a
//! constant, or by truncation to a window chosen from the integrand's tails.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ParamPoint;
use crate::kernels::FamilyTag;
use crate::sources::{effective_support, Interval, SourceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Transform {
    None,
    Tangent { center: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Mass threshold used when truncating unbounded domains.
    pub tail_tol: f64,
    pub transform: Transform,
    /// Truncation window for unbounded domains when `transform` is `None`.
    pub window: Option<Interval>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 200,
            tail_tol: 1e-12,
            transform: Transform::None,
            window: None,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "abs_tol and rel_tol must be positive, got {} and {}",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-2) {
            return Err(Error::Config(format!(
                "tail_tol must lie in (0, 1e-2], got {}",
                self.tail_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be at least 1".into()));
        }
        if let Transform::Tangent { center, scale } = self.transform {
            if !center.is_finite() || !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::Config(format!(
                    "tangent transform needs finite center and positive scale, got {center}, {scale}"
                )));
            }
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub err_estimate: f64,
    pub subdivisions_used: usize,
}

/// Results of a vector-valued integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResults<const N: usize> {
    pub values: [f64; N],
    pub errors: [f64; N],
    pub subdivisions_used: usize,
}

impl<const N: usize> QuadResults<N> {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn get(&self, k: usize) -> QuadResult {
        QuadResult {
            value: self.values[k],
            err_estimate: self.errors[k],
            subdivisions_used: self.subdivisions_used,
        }
    }
}

pub fn integrate<F>(g: F, domain: Interval, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_with_breaks(g, domain, &[], cfg)
}

/// Like [`integrate`], splitting the domain at `breaks` first (jumps, peaks).
pub fn integrate_with_breaks<F>(
    g: F,
    domain: Interval,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_many(|x| [g(x)], domain, breaks, cfg).map(|r| r.get(0))
}

/// Integrate `N` functions over `domain` on a shared adaptive subdivision.
///
/// Bisection continues until every component meets
/// `err ≤ max(abs_tol, rel_tol·|value|)`.
pub fn integrate_many<const N: usize, F>(
    g: F,
    domain: Interval,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadResults<N>>
where
    F: Fn(f64) -> [f64; N],
{
    cfg.validate()?;
    if domain.lo.is_nan() || domain.hi.is_nan() || domain.lo > domain.hi {
        return Err(Error::domain(format!(
            "invalid integration domain [{}, {}]",
            domain.lo, domain.hi
        )));
    }
    if domain.lo == domain.hi {
        return Ok(QuadResults {
            values: [0.0; N],
            errors: [0.0; N],
            subdivisions_used: 0,
        });
    }

    match cfg.transform {
        Transform::Tangent { center, scale } => {
            let to_angle = |x: f64| ((x - center) / scale).atan();
            let mapped = Interval::new(to_angle(domain.lo), to_angle(domain.hi));
            let mapped_breaks: Vec<f64> = breaks.iter().map(|&b| to_angle(b)).collect();
            adaptive(
                |theta| {
                    let c = theta.cos();
                    let mut v = g(center + scale * theta.tan());
                    let jac = scale / (c * c);
                    for x in v.iter_mut() {
                        *x *= jac;
                        // endpoint of (-π/2, π/2): the integrand must decay there
                        if !x.is_finite() && c.abs() < 1e-12 {
                            *x = 0.0;
                        }
                    }
                    v
                },
                mapped,
                &mapped_breaks,
                cfg,
                |theta| center + scale * theta.clamp(-FRAC_PI_2, FRAC_PI_2).tan(),
            )
        }
        Transform::None => {
            let dom = if domain.is_bounded() {
                domain
            } else {
                let w = cfg.window.ok_or_else(|| {
                    Error::Config(
                        "unbounded domain needs a tangent transform or a truncation window".into(),
                    )
                })?;
                if !w.is_bounded() {
                    return Err(Error::Config("truncation window must be bounded".into()));
                }
                Interval::new(domain.lo.max(w.lo), domain.hi.min(w.hi))
            };
            if dom.lo >= dom.hi {
                return Ok(QuadResults {
                    values: [0.0; N],
                    errors: [0.0; N],
                    subdivisions_used: 0,
                });
            }
            adaptive(g, dom, breaks, cfg, |x| x)
        }
    }
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    values: [f64; N],
    errors: [f64; N],
}

fn adaptive<const N: usize, F, M>(
    g: F,
    dom: Interval,
    breaks: &[f64],
    cfg: &QuadratureConfig,
    to_original: M,
) -> Result<QuadResults<N>>
where
    F: Fn(f64) -> [f64; N],
    M: Fn(f64) -> f64,
{
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > dom.lo && *b < dom.hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(dom.lo);
    edges.extend(cuts);
    edges.push(dom.hi);

    let mut segments: Vec<Segment<N>> = edges
        .windows(2)
        .map(|e| {
            let (values, errors) = gk15(&g, e[0], e[1]);
            Segment { a: e[0], b: e[1], values, errors }
        })
        .collect();

    let mut bisections = 0usize;
    loop {
        let mut values = [0.0; N];
        let mut errors = [0.0; N];
        for s in &segments {
            for k in 0..N {
                values[k] += s.values[k];
                errors[k] += s.errors[k];
            }
        }
        if let Some(k) = (0..N).find(|&k| !values[k].is_finite() || !errors[k].is_finite()) {
            let (lo, hi) = segments
                .iter()
                .find(|s| !s.values[k].is_finite() || !s.errors[k].is_finite())
                .map_or((dom.lo, dom.hi), |s| (s.a, s.b));
            return Err(Error::NonConvergence {
                best: values[k],
                err: errors[k],
                worst_lo: to_original(lo),
                worst_hi: to_original(hi),
                subdivisions: bisections,
            });
        }
        let tols: [f64; N] = std::array::from_fn(|k| cfg.tolerance(values[k]));
        if (0..N).all(|k| errors[k] <= tols[k]) {
            return Ok(QuadResults {
                values,
                errors,
                subdivisions_used: bisections,
            });
        }

        let score = |s: &Segment<N>| -> f64 {
            (0..N).map(|k| s.errors[k] / tols[k]).fold(0.0, f64::max)
        };
        let (worst, _) = segments
            .iter()
            .enumerate()
            .map(|(i, s)| (i, score(s)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

        let seg = &segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        let exhausted = bisections >= cfg.max_subdivisions;
        let unsplittable = !(mid > seg.a && mid < seg.b);
        if exhausted || unsplittable {
            let k = (0..N)
                .max_by(|&i, &j| (errors[i] / tols[i]).total_cmp(&(errors[j] / tols[j])))
                .unwrap_or(0);
            return Err(Error::NonConvergence {
                best: values[k],
                err: errors[k],
                worst_lo: to_original(seg.a),
                worst_hi: to_original(seg.b),
                subdivisions: bisections,
            });
        }

        let (a, b) = (seg.a, seg.b);
        let (lv, le) = gk15(&g, a, mid);
        let (rv, re) = gk15(&g, mid, b);
        segments[worst] = Segment { a, b: mid, values: lv, errors: le };
        segments.push(Segment { a: mid, b, values: rv, errors: re });
        bisections += 1;
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 15-point Kronrod pass with the QUADPACK error heuristic, per component.
fn gk15<const N: usize, F>(g: &F, a: f64, b: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64) -> [f64; N],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = g(center);

    let mut fv1 = [[0.0; N]; 7];
    let mut fv2 = [[0.0; N]; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        fv1[j] = g(center - dx);
        fv2[j] = g(center + dx);
    }

    let mut values = [0.0; N];
    let mut errors = [0.0; N];
    for k in 0..N {
        let fc = f_center[k];
        let mut res_k = WGK[7] * fc;
        let mut res_g = WG[3] * fc;
        let mut res_abs = res_k.abs();
        for j in 0..7 {
            let (f1, f2) = (fv1[j][k], fv2[j][k]);
            res_k += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv1[j][k] - mean).abs() + (fv2[j][k] - mean).abs());
        }
        let ah = half.abs();
        values[k] = res_k * half;
        errors[k] = rescale_error((res_k - res_g) * half, res_abs * ah, res_asc * ah);
    }
    (values, errors)
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

/// Half-width multiplier `c` of the heat-kernel envelope: `exp(-c²/4) = tail_tol`.
pub fn heat_envelope_multiplier(tail_tol: f64) -> f64 {
    (4.0 * (1.0 / tail_tol).ln()).sqrt()
}

/// Quadrature settings matched to a family, source and parameter point.
///
/// Heat family: truncation to a window covering the kernel envelope
/// `x ± c√t` and the source's effective support widened by the same
/// envelope, `c = √(4 ln(1/tail_tol))`. Laplace family, or any Cauchy-type
/// source: tangent map centered at the location parameter with the family
/// scale (`x` for Laplace, `√(2t)` for heat).
pub fn default_config(family: FamilyTag, source: &SourceSpec, theta: ParamPoint) -> QuadratureConfig {
    let base = QuadratureConfig::default();
    with_defaults(base, family, source, theta)
}

/// [`default_config`] keeping the tolerances already set in `base`.
pub fn with_defaults(
    base: QuadratureConfig,
    family: FamilyTag,
    source: &SourceSpec,
    theta: ParamPoint,
) -> QuadratureConfig {
    let mut cfg = base;
    match family {
        FamilyTag::Laplace => {
            cfg.transform = Transform::Tangent {
                center: theta.p2,
                scale: theta.p1,
            };
            cfg.window = None;
        }
        FamilyTag::Heat => {
            let (x, t) = (theta.p1, theta.p2);
            if source.has_heavy_tail() {
                cfg.transform = Transform::Tangent {
                    center: x,
                    scale: (2.0 * t).sqrt(),
                };
                cfg.window = None;
            } else {
                let reach = heat_envelope_multiplier(cfg.tail_tol) * t.sqrt();
                let kernel = Interval::new(x - reach, x + reach);
                let support = effective_support(source, cfg.tail_tol);
                let window = if support.is_bounded() {
                    kernel.hull(&Interval::new(support.lo - reach, support.hi + reach))
                } else {
                    kernel
                };
                cfg.transform = Transform::None;
                cfg.window = Some(window);
            }
        }
    }
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial() {
        let r = integrate(|x| x * x, Interval::new(0.0, 1.0), &QuadratureConfig::default()).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.err_estimate <= 1e-10);
    }

    #[test]
    fn gaussian_on_real_line_with_window() {
        let cfg = QuadratureConfig {
            window: Some(Interval::new(-12.0, 12.0)),
            ..Default::default()
        };
        let r = integrate(|x| (-x * x).exp(), Interval::REAL_LINE, &cfg).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn lorentzian_with_tangent_map_is_exact() {
        let cfg = QuadratureConfig {
            transform: Transform::Tangent { center: 0.0, scale: 1.0 },
            ..Default::default()
        };
        let r = integrate(|x| 1.0 / (1.0 + x * x), Interval::REAL_LINE, &cfg).unwrap();
        assert!((r.value - PI).abs() < 1e-14);
        assert_eq!(r.subdivisions_used, 0);
    }

    #[test]
    fn unbounded_without_window_is_config_error() {
        let r = integrate(|x| (-x * x).exp(), Interval::REAL_LINE, &QuadratureConfig::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let cfg = QuadratureConfig {
            max_subdivisions: 3,
            ..Default::default()
        };
        let r = integrate(|x: f64| x.abs().sqrt().recip(), Interval::new(-1.0, 1.3), &cfg);
        match r {
            Err(Error::NonConvergence { best, subdivisions, worst_lo, worst_hi, .. }) => {
                assert!(best.is_finite());
                assert_eq!(subdivisions, 3);
                assert!(worst_lo <= 0.0 && worst_hi >= 0.0 || worst_hi - worst_lo < 1.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn breaks_handle_jumps() {
        let step = |x: f64| if (0.3..=0.7).contains(&x) { 1.0 } else { 0.0 };
        let r = integrate_with_breaks(step, Interval::new(0.0, 1.0), &[0.3, 0.7], &QuadratureConfig::default())
            .unwrap();
        assert!((r.value - 0.4).abs() < 1e-14);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = QuadratureConfig { tail_tol: 0.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = QuadratureConfig { abs_tol: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = QuadratureConfig { max_subdivisions: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_configs() {
        let th = ParamPoint::new(FamilyTag::Heat, 1.0, 0.25).unwrap();
        let cfg = default_config(FamilyTag::Heat, &SourceSpec::uniform(0.0, 2.0), th);
        let w = cfg.window.unwrap();
        assert!(w.contains(&Interval::new(0.0, 2.0)));
        let reach = (0.25f64 * 4.0 * 1e12f64.ln()).sqrt();
        assert!(w.contains(&Interval::new(1.0 - reach, 1.0 + reach)));

        let th = ParamPoint::new(FamilyTag::Laplace, 1.0, 0.0).unwrap();
        let cfg = default_config(FamilyTag::Laplace, &SourceSpec::ImproperUniform, th);
        assert_eq!(cfg.transform, Transform::Tangent { center: 0.0, scale: 1.0 });

        let th = ParamPoint::new(FamilyTag::Heat, 0.0, 0.5).unwrap();
        let cfg = default_config(FamilyTag::Heat, &SourceSpec::gaussian(0.0, 1.0), th);
        let w = cfg.window.unwrap();
        assert_eq!(w.lo, -w.hi);
        assert!(w.hi >= 6.467 + (2.0f64 * 1e12f64.ln()).sqrt());

        let cfg = default_config(FamilyTag::Heat, &SourceSpec::cauchy(0.0, 1.0), th);
        assert!(matches!(cfg.transform, Transform::Tangent { .. }));
    }
}
