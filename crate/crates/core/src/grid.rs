//! Rectangular parameter grids, `p1=lo:hi:count,p2=lo:hi:count`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ParamPoint;
use crate::kernels::FamilyTag;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Parse("axis count must be at least 1".into()));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parse(format!("axis bounds must be finite, got {lo}:{hi}")));
        }
        if count > 1 && !(lo < hi) {
            return Err(Error::Parse(format!("axis needs lo < hi, got {lo}:{hi}")));
        }
        Ok(Axis { lo, hi, count })
    }

    pub fn point(&self, k: usize) -> f64 {
        if self.count == 1 {
            return self.lo;
        }
        if k + 1 == self.count {
            return self.hi;
        }
        self.lo + k as f64 * (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.point(k)).collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, count] = parts[..] else {
            return Err(Error::Parse(format!("axis {s:?} is not lo:hi:count")));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {v:?} in axis {s:?}")))
        };
        let count = count
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad count {count:?} in axis {s:?}")))?;
        Axis::new(num(lo)?, num(hi)?, count)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub p1: Axis,
    pub p2: Axis,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.p1.count * self.p2.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points with `p1` as the outer loop.
    pub fn points(&self, family: FamilyTag) -> Result<Vec<ParamPoint>> {
        let mut out = Vec::with_capacity(self.len());
        for a in self.p1.points() {
            for b in self.p2.points() {
                out.push(ParamPoint::new(family, a, b)?);
            }
        }
        Ok(out)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p1 = None;
        let mut p2 = None;
        for part in s.split(',') {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("grid entry {part:?} is not key=lo:hi:count")))?;
            let slot = match key.trim() {
                "p1" => &mut p1,
                "p2" => &mut p2,
                other => return Err(Error::Parse(format!("unknown grid axis {other:?}"))),
            };
            if slot.is_some() {
                return Err(Error::Parse(format!("grid axis {} given twice", key.trim())));
            }
            *slot = Some(val.parse::<Axis>()?);
        }
        match (p1, p2) {
            (Some(p1), Some(p2)) => Ok(GridSpec { p1, p2 }),
            _ => Err(Error::Parse(format!("grid {s:?} needs both p1 and p2"))),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p1={},p2={}", self.p1, self.p2)
    }
}
