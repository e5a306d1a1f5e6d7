//! Points, L_p metrics, shells, and deterministic tie-breaking shared by all
//! algorithm modules.
//!
//! Coordinates are plain `f64`; no exact arithmetic is attempted. The
//! algorithms are combinatorial given a strict order on distances, and the
//! instance generators keep distance gaps large enough (>= 1e-9) that the
//! order is robust. Where ties could still matter, [`TieBreaker`] imposes a
//! strict total order by comparing `(distance, smallest-index)` pairs.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// A point in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// An L_p distance on a fixed dimension. `p` is a real `>= 1` or
/// `f64::INFINITY` for the max metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpMetric {
    p: f64,
    dim: usize,
}

impl LpMetric {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "L_p exponent must be >= 1 (or infinity), got {p}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(LpMetric { p, dim })
    }

    pub fn l1(dim: usize) -> Self {
        LpMetric { p: 1.0, dim }
    }

    pub fn l2(dim: usize) -> Self {
        LpMetric { p: 2.0, dim }
    }

    pub fn linf(dim: usize) -> Self {
        LpMetric {
            p: f64::INFINITY,
            dim,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// L_p distance between two points; errors on a dimension mismatch.
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.dist(a.coords(), b.coords()))
    }

    pub(crate) fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        Ok(())
    }

    /// Unchecked fast path used by the index internals.
    pub(crate) fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        if self.p == 2.0 {
            let mut s = 0.0;
            for (x, y) in a.iter().zip(b) {
                let d = x - y;
                s += d * d;
            }
            s.sqrt()
        } else if self.p == 1.0 {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        } else if self.p.is_infinite() {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        } else {
            let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(self.p)).sum();
            s.powf(1.0 / self.p)
        }
    }

    /// L_p norm of a coordinate vector.
    pub(crate) fn norm(&self, v: &[f64]) -> f64 {
        if self.p == 2.0 {
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        } else if self.p == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else if self.p.is_infinite() {
            v.iter().map(|x| x.abs()).fold(0.0, f64::max)
        } else {
            v.iter()
                .map(|x| x.abs().powf(self.p))
                .sum::<f64>()
                .powf(1.0 / self.p)
        }
    }

    /// Distance from `q` to the axis-aligned box `[lo, hi]`; a lower bound on
    /// the distance from `q` to any point inside the box, for every L_p.
    pub(crate) fn box_dist(&self, q: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), lo.len());
        let mut gap = [0.0f64; 8];
        let mut heap;
        let gaps: &mut [f64] = if q.len() <= 8 {
            &mut gap[..q.len()]
        } else {
            heap = vec![0.0; q.len()];
            &mut heap
        };
        for i in 0..q.len() {
            gaps[i] = if q[i] < lo[i] {
                lo[i] - q[i]
            } else if q[i] > hi[i] {
                q[i] - hi[i]
            } else {
                0.0
            };
        }
        self.norm(gaps)
    }
}

/// A closed shell (annulus) around a center: contains `x` iff
/// `inner <= d(center, x) <= outer`.
#[derive(Clone, Debug)]
pub struct Shell {
    pub center: Point,
    pub inner: f64,
    pub outer: f64,
}

impl Shell {
    pub fn new(center: Point, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0) || !(outer >= inner) {
            return Err(Error::InvalidParameter(format!(
                "shell radii must satisfy 0 < inner <= outer, got {inner}, {outer}"
            )));
        }
        Ok(Shell {
            center,
            inner,
            outer,
        })
    }

    pub fn contains(&self, x: &Point, metric: &LpMetric) -> Result<bool> {
        let d = metric.distance(&self.center, x)?;
        Ok(self.inner <= d && d <= self.outer)
    }
}

/// Deterministic tie-breaking: candidates are compared by distance first and
/// by smallest index (or smallest normalized index pair) second, yielding a
/// strict total order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreaker {
    #[default]
    ByIndex,
}

impl TieBreaker {
    /// Order on `(distance, id)` candidates.
    pub fn cmp_single(self, a: (f64, usize), b: (f64, usize)) -> Ordering {
        a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
    }

    /// Normalize an unordered index pair to `(min, max)`.
    pub fn norm_pair(pair: (usize, usize)) -> (usize, usize) {
        if pair.0 <= pair.1 {
            pair
        } else {
            (pair.1, pair.0)
        }
    }

    /// Order on `(distance, unordered index pair)` candidates.
    pub fn cmp_pair(self, a: (f64, (usize, usize)), b: (f64, (usize, usize))) -> Ordering {
        let pa = Self::norm_pair(a.1);
        let pb = Self::norm_pair(b.1);
        a.0.total_cmp(&b.0).then_with(|| pa.cmp(&pb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_l2_345() {
        let m = LpMetric::l2(2);
        let d = m
            .distance(&Point(vec![0.0, 0.0]), &Point(vec![3.0, 4.0]))
            .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn distance_l1_sum() {
        let m = LpMetric::l1(2);
        let d = m
            .distance(&Point(vec![1.0, 2.0]), &Point(vec![4.0, 6.0]))
            .unwrap();
        assert_eq!(d, 7.0);
    }

    #[test]
    fn distance_linf_max() {
        let m = LpMetric::linf(2);
        let d = m
            .distance(&Point(vec![0.0, 0.0]), &Point(vec![2.0, 5.0]))
            .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn distance_dim_mismatch() {
        let m = LpMetric::l2(2);
        assert!(m
            .distance(&Point(vec![0.0, 0.0]), &Point(vec![1.0]))
            .is_err());
    }

    #[test]
    fn metric_rejects_bad_p() {
        assert!(LpMetric::new(0.5, 2).is_err());
        assert!(LpMetric::new(f64::NAN, 2).is_err());
        assert!(LpMetric::new(3.0, 2).is_ok());
        assert!(LpMetric::new(f64::INFINITY, 2).is_ok());
    }

    #[test]
    fn shell_closed_boundaries() {
        let m = LpMetric::l2(2);
        let s = Shell::new(Point(vec![0.0, 0.0]), 1.0, 2.0).unwrap();
        assert!(s.contains(&Point(vec![1.5, 0.0]), &m).unwrap());
        assert!(!s.contains(&Point(vec![0.99, 0.0]), &m).unwrap());
        assert!(s.contains(&Point(vec![1.0, 0.0]), &m).unwrap());
        assert!(s.contains(&Point(vec![2.0, 0.0]), &m).unwrap());
        assert!(!s.contains(&Point(vec![2.0001, 0.0]), &m).unwrap());
    }

    fn arb_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0..100.0f64, dim)
    }

    proptest! {
        // Triangle inequality within a few ulps of accumulated rounding.
        #[test]
        fn triangle_inequality(a in arb_point(3), b in arb_point(3), c in arb_point(3),
                               p in prop_oneof![Just(1.0), Just(2.0), Just(3.0), Just(f64::INFINITY)]) {
            let m = LpMetric::new(p, 3).unwrap();
            let ab = m.dist(&a, &b);
            let bc = m.dist(&b, &c);
            let ac = m.dist(&a, &c);
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn distance_symmetric_nonnegative(a in arb_point(3), b in arb_point(3),
                                          p in prop_oneof![Just(1.0), Just(2.0), Just(2.5), Just(f64::INFINITY)]) {
            let m = LpMetric::new(p, 3).unwrap();
            let d1 = m.dist(&a, &b);
            let d2 = m.dist(&b, &a);
            prop_assert_eq!(d1.to_bits(), d2.to_bits());
            prop_assert!(d1 >= 0.0);
            let da = m.dist(&a, &a);
            prop_assert_eq!(da, 0.0);
        }

        // TieBreaker comparison is antisymmetric and transitive.
        #[test]
        fn tiebreak_total_order(mut cands in prop::collection::vec((0.0..10.0f64, 0usize..50, 0usize..50), 3..20)) {
            let tb = TieBreaker::ByIndex;
            for &(d1, a1, b1) in &cands {
                for &(d2, a2, b2) in &cands {
                    let x = tb.cmp_pair((d1, (a1, b1)), (d2, (a2, b2)));
                    let y = tb.cmp_pair((d2, (a2, b2)), (d1, (a1, b1)));
                    prop_assert_eq!(x, y.reverse());
                }
            }
            // Sorting under the comparator never panics and is stable in the
            // sense that equal keys compare Equal.
            cands.sort_by(|x, y| tb.cmp_pair((x.0, (x.1, x.2)), (y.0, (y.1, y.2))));
            for w in cands.windows(2) {
                let c = tb.cmp_pair((w[0].0, (w[0].1, w[0].2)), (w[1].0, (w[1].1, w[1].2)));
                prop_assert_ne!(c, Ordering::Greater);
            }
        }
    }
}
