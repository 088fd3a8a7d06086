//! Initial / boundary densities `f` fed into the heat and Poisson integrals.
//!
//! Two variants are structural sentinels and never evaluated pointwise:
//! [`SourceSpec::PointMass`] collapses every integral to one kernel
//! evaluation, and [`SourceSpec::ImproperUniform`] stands for `f ≡ 1`, for
//! which the field is identically one and the randomized density is the bare
//! kernel family.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceSpec {
    Gaussian { mu: f64, sigma: f64 },
    Cauchy { mu: f64, gamma: f64 },
    Uniform { a: f64, b: f64 },
    Mixture { components: Vec<(f64, SourceSpec)> },
    PointMass { xi0: f64 },
    ImproperUniform,
}

/// Closed interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl SourceSpec {
    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        SourceSpec::Gaussian { mu, sigma }
    }

    pub fn cauchy(mu: f64, gamma: f64) -> Self {
        SourceSpec::Cauchy { mu, gamma }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        SourceSpec::Uniform { a, b }
    }

    pub fn mixture(components: Vec<(f64, SourceSpec)>) -> Self {
        SourceSpec::Mixture { components }
    }

    /// Proper sources are genuine probability densities.
    pub fn is_proper(&self) -> bool {
        !matches!(self, SourceSpec::PointMass { .. } | SourceSpec::ImproperUniform)
    }

    /// Whether any component has Cauchy-like (polynomial) tails.
    pub fn has_heavy_tail(&self) -> bool {
        match self {
            SourceSpec::Cauchy { .. } => true,
            SourceSpec::Mixture { components } => components.iter().any(|(_, c)| c.has_heavy_tail()),
            _ => false,
        }
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        self.validate_inner(false)
    }

    fn validate_inner(&self, nested: bool) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSource(format!("{name} must be finite, got {v}")))
            }
        };
        match *self {
            SourceSpec::Gaussian { mu, sigma } => {
                finite("mu", mu)?;
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidSource(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
            }
            SourceSpec::Cauchy { mu, gamma } => {
                finite("mu", mu)?;
                if !(gamma > 0.0) || !gamma.is_finite() {
                    return Err(Error::InvalidSource(format!(
                        "gamma must be positive, got {gamma}"
                    )));
                }
            }
            SourceSpec::Uniform { a, b } => {
                finite("a", a)?;
                finite("b", b)?;
                if !(a < b) {
                    return Err(Error::InvalidSource(format!(
                        "uniform requires a < b, got a={a}, b={b}"
                    )));
                }
            }
            SourceSpec::PointMass { xi0 } => {
                finite("xi0", xi0)?;
                if nested {
                    return Err(Error::InvalidSource(
                        "mixture components must be proper (pointmass not allowed)".into(),
                    ));
                }
            }
            SourceSpec::ImproperUniform => {
                if nested {
                    return Err(Error::InvalidSource(
                        "mixture components must be proper (improper-uniform not allowed)".into(),
                    ));
                }
            }
            SourceSpec::Mixture { ref components } => {
                if components.is_empty() {
                    return Err(Error::InvalidSource("mixture needs at least one component".into()));
                }
                let mut total = 0.0;
                for (w, c) in components {
                    if !(*w > 0.0) || !w.is_finite() {
                        return Err(Error::InvalidSource(format!(
                            "weights must be positive, got {w}"
                        )));
                    }
                    if matches!(c, SourceSpec::Mixture { .. }) {
                        return Err(Error::InvalidSource(
                            "mixture components cannot themselves be mixtures".into(),
                        ));
                    }
                    c.validate_inner(true)?;
                    total += w;
                }
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidSource(format!(
                        "weights must sum to 1, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Translate the density by `c`: the result is `f(ξ - c)`.
    pub fn shifted(&self, c: f64) -> SourceSpec {
        match self {
            SourceSpec::Gaussian { mu, sigma } => SourceSpec::Gaussian { mu: mu + c, sigma: *sigma },
            SourceSpec::Cauchy { mu, gamma } => SourceSpec::Cauchy { mu: mu + c, gamma: *gamma },
            SourceSpec::Uniform { a, b } => SourceSpec::Uniform { a: a + c, b: b + c },
            SourceSpec::Mixture { components } => SourceSpec::Mixture {
                components: components.iter().map(|(w, s)| (*w, s.shifted(c))).collect(),
            },
            SourceSpec::PointMass { xi0 } => SourceSpec::PointMass { xi0: xi0 + c },
            SourceSpec::ImproperUniform => SourceSpec::ImproperUniform,
        }
    }

    /// The closed set outside which `f` vanishes identically, when it is bounded.
    pub fn exact_support(&self) -> Option<Interval> {
        match self {
            SourceSpec::Uniform { a, b } => Some(Interval::new(*a, *b)),
            SourceSpec::PointMass { xi0 } => Some(Interval::new(*xi0, *xi0)),
            SourceSpec::Mixture { components } => components
                .iter()
                .map(|(_, c)| c.exact_support())
                .reduce(|a, b| Some(a?.hull(&b?)))
                .flatten(),
            _ => None,
        }
    }

    /// Points where the density peaks or jumps; used as quadrature breakpoints.
    pub fn landmarks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.push_landmarks(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn push_landmarks(&self, out: &mut Vec<f64>) {
        match self {
            SourceSpec::Gaussian { mu, .. } | SourceSpec::Cauchy { mu, .. } => out.push(*mu),
            SourceSpec::Uniform { a, b } => out.extend([*a, *b]),
            SourceSpec::Mixture { components } => {
                for (_, c) in components {
                    c.push_landmarks(out);
                }
            }
            SourceSpec::PointMass { xi0 } => out.push(*xi0),
            SourceSpec::ImproperUniform => {}
        }
    }

    /// `f(ξ)` with the improper uniform sentinel read as `f ≡ 1`.
    pub(crate) fn weight(&self, xi: f64) -> f64 {
        match *self {
            SourceSpec::ImproperUniform => 1.0,
            SourceSpec::PointMass { .. } => 0.0,
            SourceSpec::Gaussian { mu, sigma } => {
                let z = (xi - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            SourceSpec::Cauchy { mu, gamma } => {
                let z = (xi - mu) / gamma;
                1.0 / (PI * gamma * (1.0 + z * z))
            }
            SourceSpec::Uniform { a, b } => {
                if (a..=b).contains(&xi) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            SourceSpec::Mixture { ref components } => {
                components.iter().map(|(w, c)| w * c.weight(xi)).sum()
            }
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            SourceSpec::Gaussian { .. } => "gaussian",
            SourceSpec::Cauchy { .. } => "cauchy",
            SourceSpec::Uniform { .. } => "uniform",
            SourceSpec::Mixture { .. } => "mix",
            SourceSpec::PointMass { .. } => "pointmass",
            SourceSpec::ImproperUniform => "improper-uniform",
        }
    }
}

/// Pointwise density `f(ξ)`; rejects the two sentinels.
pub fn source_pdf(spec: &SourceSpec, xi: f64) -> Result<f64> {
    match spec {
        SourceSpec::PointMass { .. } => Err(Error::SentinelEvaluation("pointmass")),
        SourceSpec::ImproperUniform => Err(Error::SentinelEvaluation("improper-uniform")),
        _ => Ok(spec.weight(xi)),
    }
}

pub fn validate(spec: &SourceSpec) -> Result<()> {
    spec.validate()
}

/// An interval carrying all but `tail_tol` of the source mass.
pub fn effective_support(spec: &SourceSpec, tail_tol: f64) -> Interval {
    let tol = tail_tol.clamp(f64::MIN_POSITIVE, 1e-2);
    match *spec {
        SourceSpec::Gaussian { mu, sigma } => {
            // P(|Z| > z) = erfc(z / √2)
            let z = SQRT_2 * erfc_inv(tol);
            Interval::new(mu - sigma * z, mu + sigma * z)
        }
        SourceSpec::Cauchy { mu, gamma } => {
            // P(|C| > c) = 1 - (2/π) atan(c)  =>  c = cot(π tol / 2)
            let c = 1.0 / (0.5 * PI * tol).tan();
            Interval::new(mu - gamma * c, mu + gamma * c)
        }
        SourceSpec::Uniform { a, b } => Interval::new(a, b),
        SourceSpec::PointMass { xi0 } => Interval::new(xi0, xi0),
        SourceSpec::ImproperUniform => Interval::REAL_LINE,
        SourceSpec::Mixture { ref components } => components
            .iter()
            .map(|(_, c)| effective_support(c, tol))
            .reduce(|a, b| a.hull(&b))
            .unwrap_or(Interval::REAL_LINE),
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Gaussian { mu, sigma } => write!(f, "gaussian:mu={mu},sigma={sigma}"),
            SourceSpec::Cauchy { mu, gamma } => write!(f, "cauchy:mu={mu},gamma={gamma}"),
            SourceSpec::Uniform { a, b } => write!(f, "uniform:a={a},b={b}"),
            SourceSpec::PointMass { xi0 } => write!(f, "pointmass:xi0={xi0}"),
            SourceSpec::ImproperUniform => f.write_str("improper-uniform"),
            SourceSpec::Mixture { components } => {
                f.write_str("mix:")?;
                for (k, (w, c)) in components.iter().enumerate() {
                    if k > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{w}*{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SourceSpec {
    type Err = Error;

    /// Parse a descriptor such as `gaussian:mu=0,sigma=1` or
    /// `mix:0.5*uniform:a=0,b=1|0.5*cauchy:mu=0,gamma=1`, then validate it.
    fn from_str(s: &str) -> Result<Self> {
        let spec = parse_descriptor(s.trim(), true)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_descriptor(s: &str, allow_mix: bool) -> Result<SourceSpec> {
    let (kind, args) = match s.split_once(':') {
        Some((k, a)) => (k.trim(), a.trim()),
        None => (s, ""),
    };
    let kind = kind.to_ascii_lowercase();
    if kind == "mix" {
        if !allow_mix {
            return Err(Error::Parse("nested mixtures are not supported".into()));
        }
        let mut components = Vec::new();
        for part in args.split('|') {
            let (w, desc) = part.split_once('*').ok_or_else(|| {
                Error::Parse(format!("mixture component {part:?} must look like <weight>*<descriptor>"))
            })?;
            let w = parse_number("weight", w)?;
            components.push((w, parse_descriptor(desc.trim(), false)?));
        }
        return Ok(SourceSpec::Mixture { components });
    }

    let mut keys: Vec<(String, f64)> = Vec::new();
    if !args.is_empty() {
        for kv in args.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))?;
            let k = k.trim().to_ascii_lowercase();
            let v = parse_number(&k, v)?;
            keys.push((k, v));
        }
    }
    let mut take = |name: &str, default: Option<f64>| -> Result<f64> {
        match keys.iter().position(|(k, _)| k == name) {
            Some(p) => Ok(keys.remove(p).1),
            None => default.ok_or_else(|| Error::Parse(format!("{kind} source requires {name}=<value>"))),
        }
    };
    let spec = match kind.as_str() {
        "gaussian" | "normal" => {
            let mu = take("mu", Some(0.0))?;
            SourceSpec::Gaussian { mu, sigma: take("sigma", None)? }
        }
        "cauchy" => {
            let mu = take("mu", Some(0.0))?;
            SourceSpec::Cauchy { mu, gamma: take("gamma", None)? }
        }
        "uniform" => {
            let a = take("a", None)?;
            SourceSpec::Uniform { a, b: take("b", None)? }
        }
        "pointmass" => SourceSpec::PointMass { xi0: take("xi0", None)? },
        "improper-uniform" => SourceSpec::ImproperUniform,
        other => {
            return Err(Error::Parse(format!(
                "unknown source kind {other:?} (expected gaussian, cauchy, uniform, pointmass, improper-uniform or mix)"
            )))
        }
    };
    if let Some((k, _)) = keys.first() {
        return Err(Error::Parse(format!("unexpected key {k:?} for {} source", spec.kind_name())));
    }
    Ok(spec)
}

fn parse_number(name: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{name}: cannot parse {:?} as a number", v.trim())))
}
