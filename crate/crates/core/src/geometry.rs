//! Fisher metric and skewness tensor of the randomized density family.
//!
//! Two independent routes:
//!
//! * **closed**: expressions in the log-partials of `u`. [`FormulaMode::Printed`]
//!   evaluates the published expressions verbatim; [`FormulaMode::Corrected`]
//!   evaluates expressions re-derived by reducing every score moment to
//!   partials of `u` through the kernel identities.
//! * **direct**: quadrature of `E[s_i s_j]` and `-½ E[s_i s_j s_k]` under
//!   `p(ξ; θ)`, the ground truth the closed forms are measured against.
//!
//! The score splits as `s_i = ∂_i ln h(θ, ξ) - ∂_i ln v(θ)` with
//! `v = u / normalizer`; `v` is never stored, its log-gradient is formed from
//! the log-bundle and the normalizer's own log-gradient.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, field_derivs, log_derivs, LogDerivBundle, ParamPoint};
use crate::kernels::{self, FamilyTag, MultiIndex};
use crate::quadrature::{integrate_many, with_defaults, QuadratureConfig, Transform};
use crate::sources::SourceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl FisherMatrix {
    pub const ZERO: FisherMatrix = FisherMatrix { g11: 0.0, g12: 0.0, g22: 0.0 };

    pub fn new(g11: f64, g12: f64, g22: f64) -> Self {
        FisherMatrix { g11, g12, g22 }
    }

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (1, 1) => self.g11,
            (1, 2) | (2, 1) => self.g12,
            (2, 2) => self.g22,
            _ => panic!("metric index ({i}, {j}) out of range"),
        }
    }
}

/// Fully symmetric rank-3 tensor stored by its four independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StructureTensor {
    pub t111: f64,
    pub t112: f64,
    pub t122: f64,
    pub t222: f64,
}

impl StructureTensor {
    pub const ZERO: StructureTensor = StructureTensor { t111: 0.0, t112: 0.0, t122: 0.0, t222: 0.0 };

    /// Any index order; the count of 2s picks the component.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        for n in [i, j, k] {
            assert!(n == 1 || n == 2, "tensor index {n} out of range");
        }
        match [i, j, k].iter().filter(|&&n| n == 2).count() {
            0 => self.t111,
            1 => self.t112,
            2 => self.t122,
            _ => self.t222,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaMode {
    Printed,
    Corrected,
}

impl fmt::Display for FormulaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaMode::Printed => "printed",
            FormulaMode::Corrected => "corrected",
        })
    }
}

impl FromStr for FormulaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "printed" => Ok(FormulaMode::Printed),
            "corrected" => Ok(FormulaMode::Corrected),
            other => Err(Error::Parse(format!(
                "unknown mode {other:?} (expected printed or corrected)"
            ))),
        }
    }
}

/// The seven independent metric and tensor components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    G11,
    G12,
    G22,
    T111,
    T112,
    T122,
    T222,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Component::G11,
        Component::G12,
        Component::G22,
        Component::T111,
        Component::T112,
        Component::T122,
        Component::T222,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::G11 => "g11",
            Component::G12 => "g12",
            Component::G22 => "g22",
            Component::T111 => "t111",
            Component::T112 => "t112",
            Component::T122 => "t122",
            Component::T222 => "t222",
        }
    }

    pub fn is_metric(self) -> bool {
        matches!(self, Component::G11 | Component::G12 | Component::G22)
    }

    pub fn pick(self, g: &FisherMatrix, t: &StructureTensor) -> f64 {
        match self {
            Component::G11 => g.g11,
            Component::G12 => g.g12,
            Component::G22 => g.g22,
            Component::T111 => t.t111,
            Component::T112 => t.t112,
            Component::T122 => t.t122,
            Component::T222 => t.t222,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub theta: ParamPoint,
    pub component: Component,
    pub closed: f64,
    pub direct: f64,
    pub direct_err: f64,
    pub abs_residual: f64,
    /// `abs_residual / max(1, |direct|)`.
    pub rel_residual: f64,
    /// Set when either route failed at this point.
    pub failure: Option<String>,
}

/// `(∂_1 ln normalizer, ∂_2 ln normalizer)`.
fn log_normalizer_gradient(theta: &ParamPoint) -> (f64, f64) {
    match theta.family {
        FamilyTag::Heat => (0.0, -0.5 / theta.p2),
        FamilyTag::Laplace => (1.0 / theta.p1, 0.0),
    }
}

/// `∂_i ln v` at `θ`, the ξ-independent part of the score.
fn score_offset(theta: &ParamPoint, log: &LogDerivBundle) -> (f64, f64) {
    let (n1, n2) = log_normalizer_gradient(theta);
    (log.get(MultiIndex::of(1, 0)) - n1, log.get(MultiIndex::of(0, 1)) - n2)
}

/// The randomized density `p(ξ; θ) = Φ(θ, ξ) f(ξ) / u(θ)`.
pub fn density_pdf(
    source: &SourceSpec,
    theta: ParamPoint,
    xi: f64,
    bundle: &field::DerivBundle,
) -> Result<f64> {
    theta.check()?;
    if let SourceSpec::PointMass { .. } = source {
        return Err(Error::SentinelEvaluation("pointmass"));
    }
    let u = bundle.u();
    if !(u > 0.0) {
        return Err(Error::domain(format!("density needs u > 0, got {u}")));
    }
    let phi = kernels::fundamental_solution(theta.family, theta.kernel_point(xi))?;
    Ok(phi * source.weight(xi) / u)
}

/// Score vector `(∂_1 ln p, ∂_2 ln p)` at `ξ`.
///
/// For a point mass the family does not move with `θ` on its support, so the
/// score is zero.
pub fn score(
    source: &SourceSpec,
    theta: ParamPoint,
    xi: f64,
    log: &LogDerivBundle,
) -> Result<(f64, f64)> {
    theta.check()?;
    if let SourceSpec::PointMass { .. } = source {
        return Ok((0.0, 0.0));
    }
    let (a1, a2) = kernels::kernel_log_gradient(theta.family, theta.kernel_point(xi))?;
    let (b1, b2) = score_offset(&theta, log);
    Ok((a1 - b1, a2 - b2))
}

struct LogParts {
    l10: f64,
    l01: f64,
    l20: f64,
    l11: f64,
    l02: f64,
    l30: f64,
    l21: f64,
    l12: f64,
    l03: f64,
}

impl LogParts {
    fn of(log: &LogDerivBundle) -> Self {
        let l = |i, j| log.get(MultiIndex::of(i, j));
        LogParts {
            l10: l(1, 0),
            l01: l(0, 1),
            l20: l(2, 0),
            l11: l(1, 1),
            l02: l(0, 2),
            l30: l(3, 0),
            l21: l(2, 1),
            l12: l(1, 2),
            l03: l(0, 3),
        }
    }
}

/// Fisher matrix from the log-partials of `u`.
pub fn fisher_closed(log: &LogDerivBundle, theta: ParamPoint, mode: FormulaMode) -> Result<FisherMatrix> {
    theta.check()?;
    let l = LogParts::of(log);
    let g = match theta.family {
        FamilyTag::Heat => {
            // printed and re-derived forms coincide
            let t = theta.p2;
            FisherMatrix {
                g11: l.l20 + 0.5 / t,
                g12: l.l11 + l.l10 / t,
                g22: l.l02 + 2.0 / t * l.l01 + 0.5 / (t * t),
            }
        }
        FamilyTag::Laplace => {
            let x = theta.p1;
            match mode {
                FormulaMode::Printed => {
                    let diag = l.l20 - l.l10 / x + 2.0 / (x * x);
                    FisherMatrix {
                        g11: diag,
                        g12: 0.5 * l.l11,
                        g22: diag,
                    }
                }
                FormulaMode::Corrected => FisherMatrix {
                    g11: 0.5 * l.l20 - 0.5 * l.l10 * l.l10 + l.l10 / (2.0 * x) + 0.5 / (x * x),
                    g12: 0.5 * l.l11 - 0.5 * l.l01 * l.l10 + l.l01 / (2.0 * x),
                    g22: 0.5 * l.l02 - 0.5 * l.l01 * l.l01 - l.l10 / (2.0 * x) + 0.5 / (x * x),
                },
            }
        }
    };
    Ok(g)
}

/// Structure tensor from the log-partials of `u`.
pub fn structure_closed(
    log: &LogDerivBundle,
    theta: ParamPoint,
    mode: FormulaMode,
) -> Result<StructureTensor> {
    theta.check()?;
    let l = LogParts::of(log);
    let t = match (theta.family, mode) {
        (FamilyTag::Heat, FormulaMode::Printed) => {
            let t = theta.p2;
            let t2 = t * t;
            StructureTensor {
                t111: -0.5 * l.l30 - 0.75 / t * l.l10,
                t112: -0.5 * l.l21 - l.l20 / t - 0.25 / t * l.l01 - 0.25 / t2,
                t122: -0.5 * l.l12 - 2.0 / t * l.l11 - l.l10 / t2,
                t222: -0.5 * l.l03 - 3.0 / t * l.l02 - 3.0 / t2 * l.l01,
            }
        }
        (FamilyTag::Heat, FormulaMode::Corrected) => {
            let t = theta.p2;
            let t2 = t * t;
            StructureTensor {
                t111: -0.5 * l.l30,
                // equals -½ l21 - l20/t - 1/(4t²) once u_t = u_xx is used
                t112: -0.5 * l.l21 - (l.l01 - l.l10 * l.l10) / t - 0.25 / t2,
                t122: -0.5 * l.l12 - 2.0 / t * l.l11 - l.l10 / t2,
                t222: -0.5 * l.l03 - 3.0 / t * l.l02 - 3.0 / t2 * l.l01 - 0.5 / (t2 * t),
            }
        }
        (FamilyTag::Laplace, FormulaMode::Printed) => {
            let x = theta.p1;
            let x2 = x * x;
            StructureTensor {
                t111: -0.5 * l.l30 + 1.5 / x * l.l20 - 1.5 / x2 * l.l10 - 4.0 / (x2 * x),
                t112: -l.l21 / 6.0 + l.l11 / (6.0 * x),
                t122: -l.l12 / 6.0 + l.l11 / (6.0 * x) - l.l10 / (6.0 * x2) + 1.0 / (6.0 * x2 * x),
                t222: -0.5 * l.l03 + 0.75 / x * l.l11,
            }
        }
        (FamilyTag::Laplace, FormulaMode::Corrected) => {
            let x = theta.p1;
            let x2 = x * x;
            let (a, b) = (l.l10, l.l01);
            StructureTensor {
                t111: -l.l30 / 12.0 + 0.5 * a * l.l20 - a * a * a / 3.0
                    + (0.5 * a * a - 0.25 * l.l20) / x
                    + a / (4.0 * x2),
                t112: -l.l21 / 12.0 + a * l.l11 / 3.0 + b * l.l20 / 6.0 - b * a * a / 3.0
                    + (0.5 * a * b - 0.25 * l.l11) / x,
                t122: -l.l12 / 12.0 + b * l.l11 / 3.0 + a * l.l02 / 6.0 - a * b * b / 3.0
                    + 0.25 * (b * b - l.l02 - a * a) / x
                    + a / (4.0 * x2),
                t222: -l.l03 / 12.0 + 0.5 * b * l.l02 - b * b * b / 3.0
                    + (0.25 * l.l11 - 0.5 * a * b) / x
                    + b / (2.0 * x2),
            }
        }
    };
    Ok(t)
}

/// Everything the direct route integrates at one `θ`, in a single pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectMoments {
    /// `∫ p dξ`
    pub normalization: f64,
    /// `∫ s_i p dξ`
    pub mean_score: [f64; 2],
    pub metric: FisherMatrix,
    pub tensor: StructureTensor,
    /// `-½ ∫ s_i s_j s_k p` for index orders 111, 112, 121, 211, 122, 212, 221, 222.
    pub tensor_orders: [f64; 8],
    pub err: f64,
}

pub const TENSOR_ORDERS: [[usize; 3]; 8] = [
    [1, 1, 1],
    [1, 1, 2],
    [1, 2, 1],
    [2, 1, 1],
    [1, 2, 2],
    [2, 1, 2],
    [2, 2, 1],
    [2, 2, 2],
];

impl DirectMoments {
    fn degenerate() -> Self {
        DirectMoments {
            normalization: 1.0,
            mean_score: [0.0; 2],
            metric: FisherMatrix::ZERO,
            tensor: StructureTensor::ZERO,
            tensor_orders: [0.0; 8],
            err: 0.0,
        }
    }

    /// Largest pairwise gap between index orders of the same component.
    pub fn symmetry_gap(&self) -> f64 {
        let o = &self.tensor_orders;
        let spread = |xs: &[f64]| {
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        };
        spread(&o[1..4]).max(spread(&o[4..7]))
    }
}

/// Extra tail reduction for moment integrands, which carry up to a
/// sixth-degree polynomial in the offset on top of the density.
const MOMENT_TAIL_FACTOR: f64 = 1e-6;

/// Quadrature settings for the direct route. When the caller left both
/// transform and window unset, the heat window is sized for
/// `tail_tol · MOMENT_TAIL_FACTOR` so the score powers do not leak mass.
pub fn moment_config(cfg: &QuadratureConfig, source: &SourceSpec, theta: &ParamPoint) -> QuadratureConfig {
    if cfg.transform != Transform::None || cfg.window.is_some() {
        return *cfg;
    }
    let tighter = QuadratureConfig {
        tail_tol: cfg.tail_tol * MOMENT_TAIL_FACTOR,
        ..*cfg
    };
    QuadratureConfig {
        tail_tol: cfg.tail_tol,
        ..with_defaults(tighter, theta.family, source, *theta)
    }
}

/// Integrate `N` functions of the score vector against `p(ξ; θ)`.
fn score_expectations<const N: usize, G>(
    source: &SourceSpec,
    theta: ParamPoint,
    cfg: &QuadratureConfig,
    integrand: G,
) -> Result<([f64; N], f64)>
where
    G: Fn(f64, f64) -> [f64; N],
{
    let bundle = field_derivs(source, theta, cfg)?;
    let log = log_derivs(&bundle)?;
    let cfg = moment_config(cfg, source, &theta);
    let (b1, b2) = score_offset(&theta, &log);
    let u = bundle.u();
    let family = theta.family;
    let (scale, loc) = (theta.scale(), theta.location());
    let (domain, breaks) = field::integration_layout(source, &theta);
    let norm = kernels::normalizer(family, scale);

    let res = integrate_many(
        |xi| {
            let f = source.weight(xi);
            if f == 0.0 {
                return [0.0; N];
            }
            let w = loc - xi;
            let h = kernels::kernel_partials_unchecked(family, scale, w)[0];
            let p = norm * h * f / u;
            if p == 0.0 {
                return [0.0; N];
            }
            let (a1, a2) = kernels::kernel_log_gradient_unchecked(family, scale, w);
            let mut v = integrand(a1 - b1, a2 - b2);
            for x in v.iter_mut() {
                *x *= p;
            }
            v
        },
        domain,
        &breaks,
        &cfg,
    )?;
    Ok((res.values, res.max_error().max(bundle.err)))
}

/// Fisher matrix by quadrature of `E[s_i s_j]`.
pub fn fisher_direct(
    source: &SourceSpec,
    theta: ParamPoint,
    cfg: &QuadratureConfig,
) -> Result<(FisherMatrix, f64)> {
    source.validate()?;
    theta.check()?;
    if let SourceSpec::PointMass { .. } = source {
        return Ok((FisherMatrix::ZERO, 0.0));
    }
    let (v, err) = score_expectations(source, theta, cfg, |s1, s2| [s1 * s1, s1 * s2, s2 * s2])
        .map_err(|e| e.in_component("metric"))?;
    Ok((FisherMatrix::new(v[0], v[1], v[2]), err))
}

/// Structure tensor by quadrature of `-½ E[s_i s_j s_k]`.
///
/// The mixed components are integrated in every index order; the stored
/// value is the canonical order (112, 122).
pub fn structure_direct(
    source: &SourceSpec,
    theta: ParamPoint,
    cfg: &QuadratureConfig,
) -> Result<(StructureTensor, f64)> {
    let m = direct_moments(source, theta, cfg).map_err(|e| e.in_component("tensor"))?;
    Ok((m.tensor, m.err))
}

/// Normalization, mean score, metric and every tensor index order at once.
pub fn direct_moments(source: &SourceSpec, theta: ParamPoint, cfg: &QuadratureConfig) -> Result<DirectMoments> {
    source.validate()?;
    theta.check()?;
    if let SourceSpec::PointMass { .. } = source {
        return Ok(DirectMoments::degenerate());
    }
    let (v, err) = score_expectations(source, theta, cfg, |s1, s2| {
        let s = [s1, s2];
        let mut out = [0.0; 14];
        out[0] = 1.0;
        out[1] = s1;
        out[2] = s2;
        out[3] = s1 * s1;
        out[4] = s1 * s2;
        out[5] = s2 * s2;
        for (k, [i, j, l]) in TENSOR_ORDERS.iter().enumerate() {
            out[6 + k] = -0.5 * s[i - 1] * s[j - 1] * s[l - 1];
        }
        out
    })?;
    let orders: [f64; 8] = std::array::from_fn(|k| v[6 + k]);
    Ok(DirectMoments {
        normalization: v[0],
        mean_score: [v[1], v[2]],
        metric: FisherMatrix::new(v[3], v[4], v[5]),
        tensor: StructureTensor {
            t111: orders[0],
            t112: orders[1],
            t122: orders[4],
            t222: orders[7],
        },
        tensor_orders: orders,
        err,
    })
}

/// Closed-form metric and tensor at `θ`, from a freshly computed bundle.
pub fn closed_forms(
    source: &SourceSpec,
    theta: ParamPoint,
    cfg: &QuadratureConfig,
    mode: FormulaMode,
) -> Result<(FisherMatrix, StructureTensor, f64)> {
    let cfg = field::resolve_config(cfg, source, &theta);
    let bundle = field_derivs(source, theta, &cfg)?;
    let log = log_derivs(&bundle)?;
    Ok((
        fisher_closed(&log, theta, mode)?,
        structure_closed(&log, theta, mode)?,
        bundle.err,
    ))
}

/// Run both routes and report the residual for each of the seven components.
pub fn compare(
    source: &SourceSpec,
    theta: ParamPoint,
    cfg: &QuadratureConfig,
    mode: FormulaMode,
) -> Vec<ComparisonReport> {
    let closed = closed_forms(source, theta, cfg, mode);
    let direct = direct_moments(source, theta, cfg);
    reports_from(theta, closed.as_ref().map(|c| (c.0, c.1)), direct.as_ref())
}

pub(crate) fn reports_from(
    theta: ParamPoint,
    closed: std::result::Result<(FisherMatrix, StructureTensor), &Error>,
    direct: std::result::Result<&DirectMoments, &Error>,
) -> Vec<ComparisonReport> {
    Component::ALL
        .iter()
        .map(|&component| {
            let c = closed.as_ref().map(|(g, t)| component.pick(g, t));
            let d = direct.map(|m| (component.pick(&m.metric, &m.tensor), m.err));
            let failure = match (&c, &d) {
                (Err(e), _) => Some(format!("closed: {e}")),
                (_, Err(e)) => Some(format!("direct: {e}")),
                _ => None,
            };
            let closed = c.unwrap_or(f64::NAN);
            let (direct, direct_err) = d.unwrap_or((f64::NAN, f64::NAN));
            let abs_residual = (closed - direct).abs();
            ComparisonReport {
                theta,
                component,
                closed,
                direct,
                direct_err,
                abs_residual,
                rel_residual: abs_residual / direct.abs().max(1.0),
                failure,
            }
        })
        .collect()
}

/// Sylvester test plus both eigenvalues.
///
/// The first eigenvalue is the one whose eigenvector leans toward the first
/// coordinate axis (for a diagonal matrix, `(g11, g22)`); ties go to the
/// larger eigenvalue.
pub fn pd_check(g: &FisherMatrix) -> (bool, (f64, f64)) {
    let is_pd = g.g11 > 0.0 && g.det() > 0.0;
    let mean = 0.5 * (g.g11 + g.g22);
    let half_gap = 0.5 * (g.g11 - g.g22);
    let r = half_gap.hypot(g.g12);
    let sign = if half_gap < 0.0 { -1.0 } else { 1.0 };
    (is_pd, (mean + sign * r, mean - sign * r))
}
