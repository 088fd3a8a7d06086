//! Pointwise checks of the kernel identities and residual reports for
//! closed-vs-direct consistency over a parameter grid.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ParamPoint;
use crate::geometry::{self, Component, DirectMoments, FisherMatrix, FormulaMode, StructureTensor};
use crate::grid::GridSpec;
use crate::kernels::{self, FamilyTag, KernelPoint, MultiIndex, Partials};
use crate::quadrature::QuadratureConfig;
use crate::sources::SourceSpec;

pub const IDENTITY_TOLERANCE: f64 = 1e-11;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
pub const SCORE_MEAN_TOLERANCE: f64 = 1e-7;
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;
pub const COMPARISON_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityOrder {
    Second,
    Third,
}

impl IdentityOrder {
    pub fn slots(self) -> u8 {
        match self {
            IdentityOrder::Second => 3,
            IdentityOrder::Third => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdentityId {
    pub family: FamilyTag,
    pub order: IdentityOrder,
    /// 1-based.
    pub slot: u8,
    pub mode: FormulaMode,
}

impl IdentityId {
    pub fn new(family: FamilyTag, order: IdentityOrder, slot: u8, mode: FormulaMode) -> Result<Self> {
        if slot == 0 || slot > order.slots() {
            return Err(Error::Config(format!(
                "identity slot {slot} out of range 1..={}",
                order.slots()
            )));
        }
        Ok(IdentityId { family, order, slot, mode })
    }

    /// The seven identities of a family, second order first.
    pub fn all(family: FamilyTag, mode: FormulaMode) -> Vec<IdentityId> {
        [IdentityOrder::Second, IdentityOrder::Third]
            .into_iter()
            .flat_map(|order| (1..=order.slots()).map(move |slot| IdentityId { family, order, slot, mode }))
            .collect()
    }

    /// Short human form of the left-hand side.
    pub fn lhs_label(&self) -> &'static str {
        let p = self.family.param_names()[1];
        match (self.order, self.slot, p) {
            (IdentityOrder::Second, 1, "t") => "h_t h_t / h",
            (IdentityOrder::Second, 2, "t") => "h_x h_x / h",
            (IdentityOrder::Second, 3, "t") => "h_t h_x / h",
            (IdentityOrder::Third, 1, "t") => "h_x^3 / h^2",
            (IdentityOrder::Third, 2, "t") => "h_x^2 h_t / h^2",
            (IdentityOrder::Third, 3, "t") => "h_t^3 / h^2",
            (IdentityOrder::Third, 4, "t") => "h_t^2 h_x / h^2",
            (IdentityOrder::Second, 1, _) => "h_x h_x / h",
            (IdentityOrder::Second, 2, _) => "h_y h_y / h",
            (IdentityOrder::Second, 3, _) => "h_y h_x / h",
            (IdentityOrder::Third, 1, _) => "h_x^3 / h^2",
            (IdentityOrder::Third, 2, _) => "h_y^3 / h^2",
            (IdentityOrder::Third, 3, _) => "h_y^2 h_x / h^2",
            _ => "h_x^2 h_y / h^2",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = match self.order {
            IdentityOrder::Second => "second",
            IdentityOrder::Third => "third",
        };
        write!(f, "{}/{}/{}/{}", self.family, order, self.slot, self.mode)
    }
}

/// Left-hand side and the individual right-hand-side terms of an identity,
/// given the kernel partials `d` (layout of [`MultiIndex::slot`]) at a point
/// with the given scale parameter (`t` for heat, `x` for Laplace).
pub fn identity_sides(id: IdentityId, scale: f64, d: &Partials) -> (f64, Vec<f64>) {
    let p = |i, j| d[MultiIndex::of(i, j).slot()];
    let h = p(0, 0);
    let (d1, d2) = (p(1, 0), p(0, 1));
    let s = scale;
    match id.family {
        FamilyTag::Heat => {
            // the printed heat identities hold as stated
            let (hx, ht) = (d1, d2);
            match (id.order, id.slot) {
                (IdentityOrder::Second, 1) => (ht * ht / h, vec![p(0, 2), 2.0 / s * ht]),
                (IdentityOrder::Second, 2) => (hx * hx / h, vec![p(2, 0), h / (2.0 * s)]),
                (IdentityOrder::Second, 3) => (ht * hx / h, vec![p(1, 1), hx / s]),
                (IdentityOrder::Third, 1) => (hx.powi(3) / (h * h), vec![p(3, 0), 1.5 / s * hx]),
                (IdentityOrder::Third, 2) => (
                    hx * hx * ht / (h * h),
                    vec![p(2, 1), 2.0 / s * p(2, 0), 0.5 / s * ht, h / (2.0 * s * s)],
                ),
                (IdentityOrder::Third, 3) => (
                    ht.powi(3) / (h * h),
                    vec![p(0, 3), 6.0 / s * p(0, 2), 6.0 / (s * s) * ht],
                ),
                _ => (
                    ht * ht * hx / (h * h),
                    vec![p(1, 2), 4.0 / s * p(1, 1), 2.0 / (s * s) * hx],
                ),
            }
        }
        FamilyTag::Laplace => {
            let (hx, hy) = (d1, d2);
            let (hxx, hxy, hyy) = (p(2, 0), p(1, 1), p(0, 2));
            match (id.mode, id.order, id.slot) {
                (FormulaMode::Printed, IdentityOrder::Second, 1) => (hx * hx / h, vec![hxx, -hx / s]),
                (FormulaMode::Printed, IdentityOrder::Second, 2) => (hy * hy / h, vec![hyy, -hx / s]),
                (_, IdentityOrder::Second, 3) => (hy * hx / h, vec![0.5 * hxy]),
                (FormulaMode::Printed, IdentityOrder::Third, 1) => (
                    hx.powi(3) / (h * h),
                    vec![p(3, 0), -3.0 / s * hxx, 3.0 / (s * s) * hx],
                ),
                (FormulaMode::Printed, IdentityOrder::Third, 2) => {
                    (hy.powi(3) / (h * h), vec![p(0, 3), -1.5 / s * hxy])
                }
                (FormulaMode::Printed, IdentityOrder::Third, 3) => (
                    hy * hy * hx / (h * h),
                    vec![p(1, 2) / 3.0, -hxy / (3.0 * s), hx / (3.0 * s * s)],
                ),
                (FormulaMode::Printed, _, _) => (hx * hx * hy / (h * h), vec![p(2, 1) / 3.0, -hxy / (3.0 * s)]),
                (FormulaMode::Corrected, IdentityOrder::Second, 1) => {
                    (hx * hx / h, vec![0.5 * hxx, -hx / (2.0 * s)])
                }
                (FormulaMode::Corrected, IdentityOrder::Second, _) => {
                    (hy * hy / h, vec![0.5 * hyy, -hx / (2.0 * s)])
                }
                (FormulaMode::Corrected, IdentityOrder::Third, 1) => (
                    hx.powi(3) / (h * h),
                    vec![p(3, 0) / 6.0, -hxx / (2.0 * s), hx / (2.0 * s * s)],
                ),
                (FormulaMode::Corrected, IdentityOrder::Third, 2) => {
                    (hy.powi(3) / (h * h), vec![p(0, 3) / 6.0, -hxy / (2.0 * s)])
                }
                (FormulaMode::Corrected, IdentityOrder::Third, 3) => (
                    hy * hy * hx / (h * h),
                    vec![p(1, 2) / 6.0, hyy / (6.0 * s), hx / (2.0 * s * s)],
                ),
                (FormulaMode::Corrected, IdentityOrder::Third, _) => {
                    (hx * hx * hy / (h * h), vec![p(2, 1) / 6.0, -hxy / (6.0 * s)])
                }
            }
        }
    }
}

/// `LHS - RHS` of the identity at a kernel point.
pub fn identity_residual(id: IdentityId, pt: KernelPoint) -> Result<f64> {
    let d = kernels::kernel_partials(id.family, pt)?;
    let (lhs, rhs) = identity_sides(id, pt.scale, &d);
    Ok(lhs - rhs.iter().sum::<f64>())
}

/// `|LHS - RHS| / (|LHS| + Σ|RHS term| + 1e-300)`.
pub fn identity_relative_residual(id: IdentityId, pt: KernelPoint) -> Result<(f64, f64)> {
    let d = kernels::kernel_partials(id.family, pt)?;
    let (lhs, rhs) = identity_sides(id, pt.scale, &d);
    let abs = (lhs - rhs.iter().sum::<f64>()).abs();
    let norm = lhs.abs() + rhs.iter().map(|v| v.abs()).sum::<f64>() + 1e-300;
    Ok((abs, abs / norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    KnownDiscrepancy,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::KnownDiscrepancy => "known-discrepancy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub id: String,
    pub suite: String,
    pub n_points: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    /// `(scale, offset)` for identities, `(p1, p2)` for grid suites.
    pub argmax: Option<[f64; 2]>,
    pub tolerance: f64,
    pub status: Status,
    pub failed_points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<String>,
}

impl ResidualReport {
    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Running max of residuals plus bookkeeping for points that could not be
/// evaluated.
struct Accumulator {
    n: usize,
    max_abs: f64,
    max_rel: f64,
    argmax: Option<[f64; 2]>,
    max_key: f64,
    exceeded: bool,
    failures: Vec<String>,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            n: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            argmax: None,
            max_key: f64::NEG_INFINITY,
            exceeded: false,
            failures: Vec::new(),
        }
    }

    /// `key` decides argmax; `exceeded` is the per-point verdict.
    fn push(&mut self, at: [f64; 2], abs: f64, rel: f64, key: f64, exceeded: bool) {
        self.n += 1;
        if self.argmax.is_none() || key > self.max_key || (key.is_nan() && !self.max_key.is_nan()) {
            self.argmax = Some(at);
            self.max_key = key;
        }
        self.max_abs = nan_max(self.max_abs, abs);
        self.max_rel = nan_max(self.max_rel, rel);
        self.exceeded |= exceeded || !abs.is_finite();
    }

    fn fail(&mut self, at: [f64; 2], msg: String) {
        self.n += 1;
        self.failures.push(format!("({}, {}): {msg}", at[0], at[1]));
        if self.argmax.is_none() {
            self.argmax = Some(at);
        }
    }

    fn finish(self, id: String, suite: &str, tolerance: f64, expected_pass: bool) -> ResidualReport {
        let status = if self.failures.is_empty() && !self.exceeded {
            Status::Pass
        } else if expected_pass || !self.failures.is_empty() {
            Status::Fail
        } else {
            Status::KnownDiscrepancy
        };
        ResidualReport {
            id,
            suite: suite.to_string(),
            n_points: self.n,
            max_abs: self.max_abs,
            max_rel: self.max_rel,
            argmax: self.argmax,
            tolerance,
            status,
            failed_points: self.failures.len(),
            failures: self.failures,
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Kernel points drawn from the fixed sampling law: scale log-uniform on
/// `[0.1, 10]`, offset normal with deviation `3·scale`.
pub fn sample_kernel_points(n_points: usize, seed: u64) -> Vec<KernelPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (0.1f64.ln(), 10f64.ln());
    (0..n_points)
        .map(|_| {
            let scale = rng.random_range(lo..hi).exp();
            let offset = Normal::new(0.0, 3.0 * scale)
                .expect("positive deviation")
                .sample(&mut rng);
            KernelPoint { scale, offset }
        })
        .collect()
}

/// Whether an identity suite is expected to pass outright. Only the printed
/// Laplace identities are known to be wrong as stated.
pub fn identity_expected_pass(family: FamilyTag, mode: FormulaMode) -> bool {
    !(family == FamilyTag::Laplace && mode == FormulaMode::Printed)
}

/// Evaluate every identity of the family at `n_points` seeded kernel points.
pub fn run_identity_suite(family: FamilyTag, mode: FormulaMode, n_points: usize, seed: u64) -> Vec<ResidualReport> {
    let points = sample_kernel_points(n_points, seed);
    let expected = identity_expected_pass(family, mode);
    IdentityId::all(family, mode)
        .into_iter()
        .map(|id| {
            let mut acc = Accumulator::new();
            for pt in &points {
                let at = [pt.scale, pt.offset];
                match identity_relative_residual(id, *pt) {
                    Ok((abs, rel)) => acc.push(at, abs, rel, rel, !(rel < IDENTITY_TOLERANCE)),
                    Err(e) => acc.fail(at, e.to_string()),
                }
            }
            acc.finish(id.to_string(), "identity", IDENTITY_TOLERANCE, expected)
        })
        .collect()
}

type PointOutcome = (
    ParamPoint,
    std::result::Result<(FisherMatrix, StructureTensor), Error>,
    std::result::Result<DirectMoments, Error>,
);

/// Normalization, zero-mean score, tensor symmetry and closed-vs-direct
/// residuals for every grid point, in grid order.
pub fn run_consistency_suite(
    source: &SourceSpec,
    family: FamilyTag,
    grid: &GridSpec,
    cfg: &QuadratureConfig,
    mode: FormulaMode,
) -> Result<Vec<ResidualReport>> {
    source.validate()?;
    cfg.validate()?;
    let points = grid.points(family)?;
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .map(|&theta| {
            let closed = geometry::closed_forms(source, theta, cfg, mode).map(|(g, t, _)| (g, t));
            let direct = geometry::direct_moments(source, theta, cfg);
            (theta, closed, direct)
        })
        .collect();
    Ok(consistency_reports(&outcomes, mode))
}

fn consistency_reports(outcomes: &[PointOutcome], mode: FormulaMode) -> Vec<ResidualReport> {
    let mut norm = Accumulator::new();
    let mut mean = [Accumulator::new(), Accumulator::new()];
    let mut sym = Accumulator::new();
    let mut comps: Vec<Accumulator> = Component::ALL.iter().map(|_| Accumulator::new()).collect();

    for (theta, closed, direct) in outcomes {
        let at = [theta.p1, theta.p2];
        match direct {
            Ok(m) => {
                let r = (m.normalization - 1.0).abs();
                norm.push(at, r, r, r, !(r < NORMALIZATION_TOLERANCE));
                for (k, acc) in mean.iter_mut().enumerate() {
                    let r = m.mean_score[k].abs();
                    acc.push(at, r, r, r, !(r < SCORE_MEAN_TOLERANCE));
                }
                let r = m.symmetry_gap();
                sym.push(at, r, r, r, !(r < SYMMETRY_TOLERANCE));
            }
            Err(e) => {
                for acc in [&mut norm, &mut sym].into_iter().chain(mean.iter_mut()) {
                    acc.fail(at, e.to_string());
                }
            }
        }
        let reports = geometry::reports_from(*theta, closed.as_ref().map(|c| *c), direct.as_ref());
        for (acc, rep) in comps.iter_mut().zip(reports) {
            match rep.failure {
                Some(msg) => acc.fail(at, msg),
                None => {
                    let tol = COMPARISON_TOLERANCE.max(10.0 * rep.direct_err);
                    acc.push(
                        at,
                        rep.abs_residual,
                        rep.rel_residual,
                        rep.abs_residual,
                        !(rep.abs_residual < tol),
                    );
                }
            }
        }
    }

    let corrected = mode == FormulaMode::Corrected;
    let mut out = vec![
        norm.finish("normalization".into(), "consistency", NORMALIZATION_TOLERANCE, true),
    ];
    for (k, acc) in mean.into_iter().enumerate() {
        out.push(acc.finish(format!("score-mean/{}", k + 1), "consistency", SCORE_MEAN_TOLERANCE, true));
    }
    out.push(sym.finish("tensor-symmetry".into(), "consistency", SYMMETRY_TOLERANCE, true));
    for (c, acc) in Component::ALL.iter().zip(comps) {
        out.push(acc.finish(
            format!("closed-vs-direct/{c}/{mode}"),
            "consistency",
            COMPARISON_TOLERANCE,
            corrected,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(scale: f64, offset: f64) -> KernelPoint {
        KernelPoint::new(scale, offset).unwrap()
    }

    #[test]
    fn heat_examples() {
        let id = IdentityId::new(FamilyTag::Heat, IdentityOrder::Second, 2, FormulaMode::Printed).unwrap();
        let (_, rel) = identity_relative_residual(id, kp(0.5, 1.0)).unwrap();
        assert!(rel < 1e-12);
        let id = IdentityId::new(FamilyTag::Heat, IdentityOrder::Third, 3, FormulaMode::Printed).unwrap();
        let (_, rel) = identity_relative_residual(id, kp(0.7, 1.3)).unwrap();
        assert!(rel < 1e-12);
    }

    #[test]
    fn laplace_printed_example() {
        let id = IdentityId::new(FamilyTag::Laplace, IdentityOrder::Second, 1, FormulaMode::Printed).unwrap();
        let d = kernels::kernel_partials(FamilyTag::Laplace, kp(1.0, 1.0)).unwrap();
        let (lhs, rhs) = identity_sides(id, 1.0, &d);
        assert!((lhs - 0.5).abs() < 1e-15);
        assert!((rhs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((identity_residual(id, kp(1.0, 1.0)).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn slot_bounds() {
        assert!(IdentityId::new(FamilyTag::Heat, IdentityOrder::Second, 4, FormulaMode::Printed).is_err());
        assert!(IdentityId::new(FamilyTag::Heat, IdentityOrder::Third, 0, FormulaMode::Printed).is_err());
        assert_eq!(IdentityId::all(FamilyTag::Laplace, FormulaMode::Corrected).len(), 7);
    }

    #[test]
    fn suites() {
        for (family, mode) in [
            (FamilyTag::Heat, FormulaMode::Printed),
            (FamilyTag::Heat, FormulaMode::Corrected),
            (FamilyTag::Laplace, FormulaMode::Corrected),
        ] {
            for r in run_identity_suite(family, mode, 100, 42) {
                assert!(r.max_rel < 1e-11, "{} {}", r.id, r.max_rel);
                assert_eq!(r.status, Status::Pass);
            }
        }
        let r = run_identity_suite(FamilyTag::Laplace, FormulaMode::Printed, 100, 42);
        assert!(r.iter().any(|r| r.max_rel > 0.1));
        assert!(r.iter().all(|r| r.status != Status::Fail));
        assert_eq!(r[2].status, Status::Pass);
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_kernel_points(10, 7);
        assert_eq!(a, sample_kernel_points(10, 7));
        assert_ne!(a, sample_kernel_points(10, 8));
        assert!(a.iter().all(|p| (0.1..=10.0).contains(&p.scale)));
    }

    #[test]
    fn laplace_printed_consistency_pattern() {
        let grid: GridSpec = "p1=0.5:2:3,p2=-1:1:3".parse().unwrap();
        let reps = run_consistency_suite(
            &SourceSpec::ImproperUniform,
            FamilyTag::Laplace,
            &grid,
            &QuadratureConfig::default(),
            FormulaMode::Printed,
        )
        .unwrap();
        let g11 = reps.iter().find(|r| r.id.starts_with("closed-vs-direct/g11")).unwrap();
        // largest 1.5/x² on the grid sits at x = 0.5
        assert!((g11.max_abs - 6.0).abs() < 1e-6);
        assert_eq!(g11.status, Status::KnownDiscrepancy);
        assert_eq!(reps[0].status, Status::Pass);
    }
}
