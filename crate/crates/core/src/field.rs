//! The field `u(θ) = ∫ Φ(θ, ξ) f(ξ) dξ` and its parameter partials.
//!
//! Partials are taken under the integral sign with the closed-form kernel
//! partials, so every entry of a [`DerivBundle`] carries quadrature accuracy.
//! All ten entries come out of a single vector-valued quadrature pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, FamilyTag, KernelPoint, MultiIndex, Partials};
use crate::quadrature::{integrate_many, with_defaults, QuadratureConfig, Transform};
use crate::sources::{Interval, SourceSpec};

/// Smallest admissible `t` (heat) or `x` (Laplace).
pub const MIN_SCALE: f64 = 1e-8;

/// A point `θ = (p1, p2)`: `(x, t)` for heat, `(x, y)` for Laplace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub family: FamilyTag,
    pub p1: f64,
    pub p2: f64,
}

impl ParamPoint {
    pub fn new(family: FamilyTag, p1: f64, p2: f64) -> Result<Self> {
        let th = ParamPoint { family, p1, p2 };
        th.check()?;
        Ok(th)
    }

    pub fn check(&self) -> Result<()> {
        if !self.p1.is_finite() || !self.p2.is_finite() {
            return Err(Error::domain(format!(
                "parameters must be finite, got ({}, {})",
                self.p1, self.p2
            )));
        }
        let [n1, n2] = self.family.param_names();
        let (name, v) = match self.family {
            FamilyTag::Heat => (n2, self.p2),
            FamilyTag::Laplace => (n1, self.p1),
        };
        if !(v >= MIN_SCALE) {
            return Err(Error::domain(format!(
                "{} family requires {name} >= {MIN_SCALE:e}, got {v}",
                self.family
            )));
        }
        Ok(())
    }

    /// The kernel's scale parameter (`t` or `x`).
    pub fn scale(&self) -> f64 {
        match self.family {
            FamilyTag::Heat => self.p2,
            FamilyTag::Laplace => self.p1,
        }
    }

    /// The location parameter the kernel is centered on (`x` or `y`).
    pub fn location(&self) -> f64 {
        match self.family {
            FamilyTag::Heat => self.p1,
            FamilyTag::Laplace => self.p2,
        }
    }

    pub fn kernel_point(&self, xi: f64) -> KernelPoint {
        KernelPoint {
            scale: self.scale(),
            offset: self.location() - xi,
        }
    }
}

/// `∂^i_{p1} ∂^j_{p2} u` for all `i + j <= 3`, plus the worst quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivBundle {
    pub values: Partials,
    pub err: f64,
}

impl DerivBundle {
    pub fn get(&self, idx: MultiIndex) -> f64 {
        self.values[idx.slot()]
    }

    pub fn u(&self) -> f64 {
        self.values[0]
    }
}

/// Partials of `ln u` over the same index set; entry `(0,0)` is `ln u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDerivBundle {
    pub values: Partials,
}

impl LogDerivBundle {
    pub fn get(&self, idx: MultiIndex) -> f64 {
        self.values[idx.slot()]
    }

    /// The bundle of a constant field: every log-partial is zero.
    pub fn flat() -> Self {
        LogDerivBundle { values: [0.0; 10] }
    }
}

/// Where the integrand lives and where to break the domain for quadrature.
pub(crate) fn integration_layout(source: &SourceSpec, theta: &ParamPoint) -> (Interval, Vec<f64>) {
    let domain = source.exact_support().unwrap_or(Interval::REAL_LINE);
    let mut breaks = source.landmarks();
    breaks.push(theta.location());
    (domain, breaks)
}

/// Fill in per-point transform / window when the caller left both unset.
pub(crate) fn resolve_config(
    cfg: &QuadratureConfig,
    source: &SourceSpec,
    theta: &ParamPoint,
) -> QuadratureConfig {
    if cfg.transform == Transform::None && cfg.window.is_none() {
        with_defaults(*cfg, theta.family, source, *theta)
    } else {
        *cfg
    }
}

/// Evaluate `u` and all its partials at `θ` by differentiating under the integral.
pub fn field_derivs(source: &SourceSpec, theta: ParamPoint, cfg: &QuadratureConfig) -> Result<DerivBundle> {
    source.validate()?;
    theta.check()?;
    let family = theta.family;
    match *source {
        SourceSpec::ImproperUniform => {
            let mut values = [0.0; 10];
            values[0] = 1.0;
            Ok(DerivBundle { values, err: 0.0 })
        }
        SourceSpec::PointMass { xi0 } => {
            let values = kernels::fundamental_partials(family, theta.kernel_point(xi0))?;
            Ok(DerivBundle { values, err: 0.0 })
        }
        _ => {
            let cfg = resolve_config(cfg, source, &theta);
            let (domain, breaks) = integration_layout(source, &theta);
            let (scale, loc) = (theta.scale(), theta.location());
            let res = integrate_many(
                |xi| {
                    let f = source.weight(xi);
                    if f == 0.0 {
                        return [0.0; 10];
                    }
                    let mut d = kernels::fundamental_partials_unchecked(family, scale, loc - xi);
                    for v in d.iter_mut() {
                        *v *= f;
                    }
                    d
                },
                domain,
                &breaks,
                &cfg,
            )
            .map_err(|e| e.in_component("field"))?;
            Ok(DerivBundle {
                values: res.values,
                err: res.max_error(),
            })
        }
    }
}

/// Convert partials of `u` into partials of `ln u` (bivariate chain rule).
pub fn log_derivs(bundle: &DerivBundle) -> Result<LogDerivBundle> {
    let u = bundle.u();
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::domain(format!("ln u needs u > 0, got {u}")));
    }
    let r = |i, j| bundle.get(MultiIndex::of(i, j)) / u;
    let (r10, r01) = (r(1, 0), r(0, 1));
    let (r20, r11, r02) = (r(2, 0), r(1, 1), r(0, 2));
    let (r30, r21, r12, r03) = (r(3, 0), r(2, 1), r(1, 2), r(0, 3));

    let mut values = [0.0; 10];
    let mut set = |i, j, v| values[MultiIndex::of(i, j).slot()] = v;
    set(0, 0, u.ln());
    set(1, 0, r10);
    set(0, 1, r01);
    set(2, 0, r20 - r10 * r10);
    set(1, 1, r11 - r10 * r01);
    set(0, 2, r02 - r01 * r01);
    set(3, 0, r30 - 3.0 * r20 * r10 + 2.0 * r10.powi(3));
    set(2, 1, r21 - r20 * r01 - 2.0 * r11 * r10 + 2.0 * r10 * r10 * r01);
    set(1, 2, r12 - r02 * r10 - 2.0 * r11 * r01 + 2.0 * r01 * r01 * r10);
    set(0, 3, r03 - 3.0 * r02 * r01 + 2.0 * r01.powi(3));
    Ok(LogDerivBundle { values })
}

/// `u_t - u_xx` (heat) or `u_xx + u_yy` (Laplace).
pub fn pde_residual(bundle: &DerivBundle, family: FamilyTag) -> f64 {
    let d20 = bundle.get(MultiIndex::of(2, 0));
    match family {
        FamilyTag::Heat => bundle.get(MultiIndex::of(0, 1)) - d20,
        FamilyTag::Laplace => d20 + bundle.get(MultiIndex::of(0, 2)),
    }
}
