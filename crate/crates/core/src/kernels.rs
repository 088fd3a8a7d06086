//! Heat and Poisson kernels with closed-form parameter partials.
//!
//! The primitive is the unnormalized kernel `h`:
//!
//! | family  | h                       | scale | offset    | normalizer      |
//! |---------|-------------------------|-------|-----------|-----------------|
//! | heat    | `exp(-w^2 / 4t)`        | `t`   | `w = x-ξ` | `1 / (2√(πt))`  |
//! | laplace | `1 / (x^2 + w^2)`       | `x`   | `w = y-ξ` | `x / π`         |
//!
//! The fundamental solution is `Φ = normalizer · h`. Partials are indexed by
//! [`MultiIndex`] `(i, j)`, where `i` counts derivatives in the first family
//! parameter (`x` for both families) and `j` in the second (`t` for heat,
//! `y` for Laplace). Every partial up to total order 3 is hard-coded.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which boundary-value problem generates the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    /// Cauchy problem for `u_t = u_xx`; parameters `(x, t)`.
    Heat,
    /// Dirichlet problem for `u_xx + u_yy = 0` on `x > 0`; parameters `(x, y)`.
    Laplace,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 2] = [FamilyTag::Heat, FamilyTag::Laplace];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Heat => "heat",
            FamilyTag::Laplace => "laplace",
        }
    }

    /// Names of the two parameters, in index order.
    pub fn param_names(self) -> [&'static str; 2] {
        match self {
            FamilyTag::Heat => ["x", "t"],
            FamilyTag::Laplace => ["x", "y"],
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heat" => Ok(FamilyTag::Heat),
            "laplace" => Ok(FamilyTag::Laplace),
            other => Err(Error::Parse(format!(
                "unknown family {other:?} (expected heat or laplace)"
            ))),
        }
    }
}

/// Derivative orders `(i, j)` with `i + j <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    i: u8,
    j: u8,
}

impl MultiIndex {
    pub const MAX_ORDER: u8 = 3;

    /// All ten indices in canonical order: by total order, then descending `i`.
    pub const ALL: [MultiIndex; 10] = [
        MultiIndex { i: 0, j: 0 },
        MultiIndex { i: 1, j: 0 },
        MultiIndex { i: 0, j: 1 },
        MultiIndex { i: 2, j: 0 },
        MultiIndex { i: 1, j: 1 },
        MultiIndex { i: 0, j: 2 },
        MultiIndex { i: 3, j: 0 },
        MultiIndex { i: 2, j: 1 },
        MultiIndex { i: 1, j: 2 },
        MultiIndex { i: 0, j: 3 },
    ];

    pub fn new(i: u8, j: u8) -> Result<Self> {
        if i + j > Self::MAX_ORDER {
            return Err(Error::domain(format!(
                "multi-index ({i}, {j}) exceeds total order {}",
                Self::MAX_ORDER
            )));
        }
        Ok(MultiIndex { i, j })
    }

    /// Panics on an invalid index; for compile-time known orders.
    pub const fn of(i: u8, j: u8) -> Self {
        assert!(i + j <= Self::MAX_ORDER);
        MultiIndex { i, j }
    }

    pub fn i(self) -> u8 {
        self.i
    }

    pub fn j(self) -> u8 {
        self.j
    }

    pub fn order(self) -> u8 {
        self.i + self.j
    }

    /// Position of this index in [`MultiIndex::ALL`].
    pub fn slot(self) -> usize {
        let n = self.order() as usize;
        n * (n + 1) / 2 + self.j as usize
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Where a kernel is evaluated: `scale` is `t` (heat) or `x` (Laplace),
/// `offset` is `x - ξ` (heat) or `y - ξ` (Laplace).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub scale: f64,
    pub offset: f64,
}

impl KernelPoint {
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        let pt = KernelPoint { scale, offset };
        pt.check()?;
        Ok(pt)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::domain(format!(
                "kernel scale must be positive and finite, got {}",
                self.scale
            )));
        }
        if !self.offset.is_finite() {
            return Err(Error::domain(format!(
                "kernel offset must be finite, got {}",
                self.offset
            )));
        }
        Ok(())
    }
}

/// All ten partials of one kernel, in [`MultiIndex::ALL`] order.
pub type Partials = [f64; 10];

/// `∂^i_x ∂^j_t h` for `h = exp(-w^2/4t)`.
pub fn heat_kernel_partial(pt: KernelPoint, idx: MultiIndex) -> Result<f64> {
    pt.check()?;
    Ok(heat_partials_unchecked(pt.scale, pt.offset)[idx.slot()])
}

/// `∂^i_x ∂^j_y h` for `h = 1/(x^2 + w^2)`.
pub fn poisson_kernel_partial(pt: KernelPoint, idx: MultiIndex) -> Result<f64> {
    pt.check()?;
    Ok(poisson_partials_unchecked(pt.scale, pt.offset)[idx.slot()])
}

pub fn kernel_partial(family: FamilyTag, pt: KernelPoint, idx: MultiIndex) -> Result<f64> {
    match family {
        FamilyTag::Heat => heat_kernel_partial(pt, idx),
        FamilyTag::Laplace => poisson_kernel_partial(pt, idx),
    }
}

/// Every partial of `h` at once.
pub fn kernel_partials(family: FamilyTag, pt: KernelPoint) -> Result<Partials> {
    pt.check()?;
    Ok(kernel_partials_unchecked(family, pt.scale, pt.offset))
}

pub(crate) fn kernel_partials_unchecked(family: FamilyTag, scale: f64, offset: f64) -> Partials {
    match family {
        FamilyTag::Heat => heat_partials_unchecked(scale, offset),
        FamilyTag::Laplace => poisson_partials_unchecked(scale, offset),
    }
}

fn heat_partials_unchecked(t: f64, w: f64) -> Partials {
    let h = (-w * w / (4.0 * t)).exp();
    let w2 = w * w;
    let w4 = w2 * w2;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    [
        h,
        -w / (2.0 * t) * h,
        w2 / (4.0 * t2) * h,
        (w2 - 2.0 * t) / (4.0 * t2) * h,
        w * (4.0 * t - w2) / (8.0 * t3) * h,
        w2 * (w2 - 8.0 * t) / (16.0 * t4) * h,
        w * (6.0 * t - w2) / (8.0 * t3) * h,
        (w4 - 10.0 * t * w2 + 8.0 * t2) / (16.0 * t4) * h,
        -w * (w4 - 16.0 * t * w2 + 32.0 * t2) / (32.0 * t4 * t) * h,
        w2 * (w4 - 24.0 * t * w2 + 96.0 * t2) / (64.0 * t3 * t3) * h,
    ]
}

fn poisson_partials_unchecked(x: f64, w: f64) -> Partials {
    let q = 1.0 / (x * x + w * w);
    let q2 = q * q;
    let q3 = q2 * q;
    let q4 = q2 * q2;
    let x2 = x * x;
    let w2 = w * w;
    [
        q,
        -2.0 * x * q2,
        -2.0 * w * q2,
        2.0 * (3.0 * x2 - w2) * q3,
        8.0 * w * x * q3,
        2.0 * (3.0 * w2 - x2) * q3,
        24.0 * x * (w2 - x2) * q4,
        8.0 * w * (w2 - 5.0 * x2) * q4,
        8.0 * x * (x2 - 5.0 * w2) * q4,
        24.0 * w * (x2 - w2) * q4,
    ]
}

/// Per-family factor turning `h` into the fundamental solution `Φ`.
pub fn normalizer(family: FamilyTag, scale: f64) -> f64 {
    match family {
        FamilyTag::Heat => 1.0 / (2.0 * (PI * scale).sqrt()),
        FamilyTag::Laplace => scale / PI,
    }
}

/// Normalized kernel `Φ`.
pub fn fundamental_solution(family: FamilyTag, pt: KernelPoint) -> Result<f64> {
    pt.check()?;
    let h = kernel_partials_unchecked(family, pt.scale, pt.offset)[0];
    Ok(normalizer(family, pt.scale) * h)
}

/// Every partial of `Φ`, via the product rule on `normalizer · h`.
pub fn fundamental_partials(family: FamilyTag, pt: KernelPoint) -> Result<Partials> {
    pt.check()?;
    Ok(fundamental_partials_unchecked(family, pt.scale, pt.offset))
}

pub(crate) fn fundamental_partials_unchecked(family: FamilyTag, scale: f64, offset: f64) -> Partials {
    let h = kernel_partials_unchecked(family, scale, offset);
    let n = normalizer(family, scale);
    let mut out = [0.0; 10];
    match family {
        FamilyTag::Heat => {
            // d^k/dt^k of t^(-1/2), relative to t^(-1/2).
            let t = scale;
            let dn = [1.0, -0.5 / t, 0.75 / (t * t), -1.875 / (t * t * t)];
            for idx in MultiIndex::ALL {
                let (i, j) = (idx.i, idx.j);
                let mut acc = 0.0;
                for k in 0..=j {
                    acc += binomial(j, k) * dn[k as usize] * h[MultiIndex::of(i, j - k).slot()];
                }
                out[idx.slot()] = n * acc;
            }
        }
        FamilyTag::Laplace => {
            // normalizer is linear in x: only one extra term survives.
            for idx in MultiIndex::ALL {
                let (i, j) = (idx.i, idx.j);
                let mut v = n * h[idx.slot()];
                if i > 0 {
                    v += i as f64 / PI * h[MultiIndex::of(i - 1, j).slot()];
                }
                out[idx.slot()] = v;
            }
        }
    }
    out
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * f64::from(n - m) / f64::from(m + 1))
}

/// First-order log-partials `(∂_1 ln h, ∂_2 ln h)`, evaluated without
/// dividing by `h` so they stay finite where `h` underflows.
pub fn kernel_log_gradient(family: FamilyTag, pt: KernelPoint) -> Result<(f64, f64)> {
    pt.check()?;
    Ok(kernel_log_gradient_unchecked(family, pt.scale, pt.offset))
}

pub(crate) fn kernel_log_gradient_unchecked(family: FamilyTag, scale: f64, w: f64) -> (f64, f64) {
    match family {
        FamilyTag::Heat => {
            let t = scale;
            (-w / (2.0 * t), w * w / (4.0 * t * t))
        }
        FamilyTag::Laplace => {
            let x = scale;
            let q = 1.0 / (x * x + w * w);
            (-2.0 * x * q, -2.0 * w * q)
        }
    }
}
