#![allow(dead_code)]

use randens::kernels::Partials;
use randens::{FamilyTag, MultiIndex};

/// Central difference with two Richardson levels around `c`, step `eps`.
pub fn richardson<F: Fn(f64) -> f64>(f: F, c: f64, eps: f64) -> f64 {
    let d = |h: f64| (f(c + h) - f(c - h)) / (2.0 * h);
    let r1 = |h: f64| (4.0 * d(0.5 * h) - d(h)) / 3.0;
    (16.0 * r1(0.5 * eps) - r1(eps)) / 15.0
}

/// Base step for a first derivative at coordinate `c`.
pub fn base_step(c: f64) -> f64 {
    f64::EPSILON.cbrt() * c.abs().max(1.0)
}

/// Mixed partial `∂1^i ∂2^j f` at `(a, b)` by nested Richardson differences.
/// Each nesting level widens the step so round-off stays bounded.
pub fn mixed_partial<F>(f: &F, a: f64, b: f64, i: u8, j: u8, lengths: (f64, f64)) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let n = i + j;
    if n == 0 {
        return f(a, b);
    }
    // widen with the total order; two Richardson levels keep truncation at O(step^6)
    let widen = f64::EPSILON.powf(1.0 / (2.0 * f64::from(n) + 4.0)) / f64::EPSILON.cbrt();
    if i > 0 {
        let step = (base_step(a) * widen).min(lengths.0 * 2e-2);
        richardson(|s| mixed_partial(f, s, b, i - 1, j, lengths), a, step)
    } else {
        let step = (base_step(b) * widen).min(lengths.1 * 2e-2);
        richardson(|s| mixed_partial(f, a, s, i, j - 1, lengths), b, step)
    }
}

/// Characteristic lengths of the kernel in its two parameters.
pub fn kernel_lengths(family: FamilyTag, scale: f64, offset: f64) -> (f64, f64) {
    match family {
        FamilyTag::Heat => (scale.sqrt(), scale),
        FamilyTag::Laplace => {
            let r = scale.hypot(offset);
            (r, r)
        }
    }
}

/// Finite-difference estimate of every partial of `h` in the crate's slot layout.
pub fn fd_kernel_partials(family: FamilyTag, scale: f64, offset: f64) -> Partials {
    let h = |p1: f64, p2: f64| {
        // (p1, p2) are the family parameters with ξ = 0
        let (s, w) = match family {
            FamilyTag::Heat => (p2, p1),
            FamilyTag::Laplace => (p1, p2),
        };
        randens::kernels::kernel_partial(family, randens::KernelPoint { scale: s, offset: w }, MultiIndex::of(0, 0))
            .unwrap()
    };
    let (a, b) = match family {
        FamilyTag::Heat => (offset, scale),
        FamilyTag::Laplace => (scale, offset),
    };
    let lengths = kernel_lengths(family, scale, offset);
    let mut out = [0.0; 10];
    for idx in MultiIndex::ALL {
        out[idx.slot()] = mixed_partial(&h, a, b, idx.i(), idx.j(), lengths);
    }
    out
}

/// Natural size of a partial: the kernel value divided by the lengths.
pub fn partial_scale(family: FamilyTag, scale: f64, offset: f64, idx: MultiIndex, h: f64) -> f64 {
    let (l1, l2) = kernel_lengths(family, scale, offset);
    h.abs() / (l1.powi(idx.i() as i32) * l2.powi(idx.j() as i32))
}

/// The proper sources every invariant is checked against.
pub fn corpus() -> Vec<randens::SourceSpec> {
    [
        "gaussian:mu=0,sigma=1",
        "gaussian:mu=1.5,sigma=0.3",
        "cauchy:mu=0,gamma=1",
        "cauchy:mu=-1,gamma=0.5",
        "uniform:a=0,b=2",
        "uniform:a=-1,b=1",
        "mix:0.3*gaussian:mu=-1,sigma=0.5|0.7*uniform:a=0,b=1",
        "mix:0.5*cauchy:gamma=1|0.5*gaussian:mu=2,sigma=1",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}
