use serde::{Deserialize, Serialize};

use crate::par::compensated_sum;
use crate::{Error, Result};

/// Finite union of pairwise disjoint open intervals, sorted left to right.
///
/// Touching intervals are rejected; merge them before construction so that
/// every stored endpoint is a genuine boundary point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalsRaw", into = "IntervalsRaw")]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct IntervalsRaw {
    intervals: Vec<[f64; 2]>,
}

impl TryFrom<IntervalsRaw> for IntervalSet {
    type Error = Error;

    fn try_from(raw: IntervalsRaw) -> Result<Self> {
        IntervalSet::new(raw.intervals.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<IntervalSet> for IntervalsRaw {
    fn from(s: IntervalSet) -> Self {
        IntervalsRaw { intervals: s.intervals.into_iter().map(|(a, b)| [a, b]).collect() }
    }
}

/// Which end of an interval a boundary point is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl IntervalSet {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidGeometry("interval set must be nonempty".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidGeometry(format!("non-finite interval ({a}, {b})")));
            }
            if a >= b {
                return Err(Error::InvalidGeometry(format!("empty interval ({a}, {b})")));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in intervals.windows(2) {
            if w[0].1 >= w[1].0 {
                return Err(Error::InvalidGeometry(format!(
                    "intervals ({}, {}) and ({}, {}) overlap or touch",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(IntervalSet { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn volume(&self) -> f64 {
        compensated_sum(self.intervals.iter().map(|&(a, b)| b - a))
    }

    pub fn diameter(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].1 - self.intervals[0].0
    }

    /// All endpoints in increasing order with their outward normals (±1).
    pub fn endpoints(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().flat_map(|&(a, b)| [(a, -1.0), (b, 1.0)]).collect()
    }

    /// Locate `x` among the endpoints (exact comparison).
    pub fn endpoint_index(&self, x: f64) -> Option<(usize, Side)> {
        self.intervals.iter().enumerate().find_map(|(i, &(a, b))| {
            if x == a {
                Some((i, Side::Left))
            } else if x == b {
                Some((i, Side::Right))
            } else {
                None
            }
        })
    }

    /// Whether `x` lies in the open set.
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidGeometry(format!("scale factor {lambda} must be positive")));
        }
        IntervalSet::new(self.intervals.iter().map(|&(a, b)| (lambda * a, lambda * b)).collect())
    }

    pub fn translated(&self, shift: f64) -> Self {
        IntervalSet { intervals: self.intervals.iter().map(|&(a, b)| (a + shift, b + shift)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_validates() {
        let s = IntervalSet::new(vec![(3.0, 4.0), (0.0, 1.0)]).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 1.0), (3.0, 4.0)]);
        assert!(IntervalSet::new(vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(IntervalSet::new(vec![(0.0, 1.5), (1.0, 2.0)]).is_err());
        assert!(IntervalSet::new(vec![(1.0, 1.0)]).is_err());
        assert!(IntervalSet::new(vec![]).is_err());
    }

    #[test]
    fn endpoints_and_normals() {
        let s = IntervalSet::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(s.endpoints(), vec![(0.0, -1.0), (1.0, 1.0)]);
        assert_eq!(s.endpoint_index(1.0), Some((0, Side::Right)));
        assert_eq!(s.endpoint_index(0.5), None);
        assert!(s.contains(0.5) && !s.contains(1.0));
    }
}
