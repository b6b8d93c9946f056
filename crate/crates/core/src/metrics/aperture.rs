//! Continuous sub-aperture partitions and their virtual apertures.
//!
//! TX and RX position pools are modeled as unions of convex regions. The virtual aperture
//! of a partition is the union of the Minkowski sums of every (TX region, RX region) pair,
//! and its area is evaluated exactly by slab decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dimensionality;
use crate::scalar::Scalar;

use super::{aperture_loss_factor, ApertureLoss};

/// Convex polygon in the `(y, z)` aperture plane, vertices counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion<T: Scalar> {
    vertices: Vec<(T, T)>,
}

fn cross<T: Scalar>(o: (T, T), a: (T, T), b: (T, T)) -> T {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain; drops collinear points.
fn convex_hull<T: Scalar>(mut pts: Vec<(T, T)>) -> Vec<(T, T)> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(T, T)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= T::zero() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(T, T)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= T::zero() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

impl<T: Scalar> ConvexRegion<T> {
    /// Convex hull of the given points; needs three non-collinear points.
    pub fn from_points(points: Vec<(T, T)>) -> Result<Self> {
        let vertices = convex_hull(points);
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument("region needs three non-collinear vertices".into()));
        }
        Ok(Self { vertices })
    }

    pub fn rectangle(y0: T, z0: T, y1: T, z1: T) -> Result<Self> {
        Self::from_points(vec![(y0, z0), (y1, z0), (y1, z1), (y0, z1)])
    }

    pub fn vertices(&self) -> &[(T, T)] {
        &self.vertices
    }

    pub fn area(&self) -> T {
        let n = self.vertices.len();
        let twice = (0..n).fold(T::zero(), |acc, i| {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            acc + a.0 * b.1 - b.0 * a.1
        });
        twice.abs() * T::lit(0.5)
    }

    pub fn minkowski_sum(&self, other: &Self) -> Self {
        let sums = self
            .vertices
            .iter()
            .flat_map(|&a| other.vertices.iter().map(move |&b| (a.0 + b.0, a.1 + b.1)))
            .collect();
        Self { vertices: convex_hull(sums) }
    }

    /// `(min, max)` of the projection onto direction `(dy, dz)` (not normalized).
    pub fn projection(&self, dy: T, dz: T) -> (T, T) {
        self.vertices.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &(y, z)| {
            let p = y * dy + z * dz;
            (lo.min(p), hi.max(p))
        })
    }

    fn y_range(&self) -> (T, T) {
        self.projection(T::one(), T::zero())
    }

    /// Vertical chord `[lo, hi]` at abscissa `y`, if the line crosses the interior.
    fn chord(&self, y: T) -> Option<(T, T)> {
        let (y_lo, y_hi) = self.y_range();
        if !(y > y_lo && y < y_hi) {
            return None;
        }
        let n = self.vertices.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if (a.0 <= y && y <= b.0) || (b.0 <= y && y <= a.0) {
                if a.0 == b.0 {
                    continue;
                }
                let t = (y - a.0) / (b.0 - a.0);
                let z = a.1 + t * (b.1 - a.1);
                lo = lo.min(z);
                hi = hi.max(z);
            }
        }
        (lo < hi).then_some((lo, hi))
    }

    fn edges(&self) -> impl Iterator<Item = ((T, T), (T, T))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

fn segment_intersection_y<T: Scalar>(p: ((T, T), (T, T)), q: ((T, T), (T, T))) -> Option<T> {
    let r = (p.1 .0 - p.0 .0, p.1 .1 - p.0 .1);
    let s = (q.1 .0 - q.0 .0, q.1 .1 - q.0 .1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == T::zero() {
        return None;
    }
    let qp = (q.0 .0 - p.0 .0, q.0 .1 - p.0 .1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / den;
    let u = (qp.0 * r.1 - qp.1 * r.0) / den;
    let unit = T::zero()..=T::one();
    (unit.contains(&t) && unit.contains(&u)).then(|| p.0 .0 + t * r.0)
}

/// Exact area of a union of convex regions.
///
/// Between consecutive breakpoints (vertex abscissae and pairwise edge crossings) every
/// chord endpoint is linear in `y` and chords never swap order, so the covered length is
/// linear and the midpoint rule integrates each slab exactly.
pub fn union_area<T: Scalar>(regions: &[ConvexRegion<T>]) -> T {
    let mut breaks: Vec<T> = regions.iter().flat_map(|r| r.vertices.iter().map(|v| v.0)).collect();
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            for ea in a.edges() {
                for eb in b.edges() {
                    if let Some(y) = segment_intersection_y(ea, eb) {
                        breaks.push(y);
                    }
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    breaks.dedup();

    let half = T::lit(0.5);
    breaks.windows(2).fold(T::zero(), |acc, w| {
        let width = w[1] - w[0];
        if width <= T::zero() {
            return acc;
        }
        let mid = (w[0] + w[1]) * half;
        let mut chords: Vec<(T, T)> = regions.iter().filter_map(|r| r.chord(mid)).collect();
        chords.sort_by(|a, b| a.partial_cmp(b).expect("finite chords"));
        let mut covered = T::zero();
        let mut current: Option<(T, T)> = None;
        for (lo, hi) in chords {
            current = match current {
                Some((cl, ch)) if lo <= ch => Some((cl, ch.max(hi))),
                Some((cl, ch)) => {
                    covered += ch - cl;
                    Some((lo, hi))
                }
                None => Some((lo, hi)),
            };
        }
        if let Some((cl, ch)) = current {
            covered += ch - cl;
        }
        acc + width * covered
    })
}

/// TX and RX position pools of a planar aperture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<T: Scalar> {
    pub tx: Vec<ConvexRegion<T>>,
    pub rx: Vec<ConvexRegion<T>>,
}

impl<T: Scalar> Partition<T> {
    pub fn new(tx: Vec<ConvexRegion<T>>, rx: Vec<ConvexRegion<T>>) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return Err(Error::InvalidArgument("partition needs TX and RX regions".into()));
        }
        Ok(Self { tx, rx })
    }

    /// TX and RX both use the whole `side x side` aperture.
    pub fn shared(side: T) -> Result<Self> {
        let all = ConvexRegion::rectangle(T::zero(), T::zero(), side, side)?;
        Self::new(vec![all.clone()], vec![all])
    }

    /// TX in the lower half, RX in the upper half (split by a horizontal line).
    pub fn vertical(side: T) -> Result<Self> {
        let mid = side * T::lit(0.5);
        Self::new(
            vec![ConvexRegion::rectangle(T::zero(), T::zero(), side, mid)?],
            vec![ConvexRegion::rectangle(T::zero(), mid, side, side)?],
        )
    }

    /// TX below the main diagonal, RX above it.
    pub fn diagonal(side: T) -> Result<Self> {
        let z = T::zero();
        Self::new(
            vec![ConvexRegion::from_points(vec![(z, z), (side, z), (z, side)])?],
            vec![ConvexRegion::from_points(vec![(side, z), (side, side), (z, side)])?],
        )
    }

    /// TX in the lower-left and upper-right quadrants, RX in the other two.
    pub fn four_corners(side: T) -> Result<Self> {
        let (z, h) = (T::zero(), side * T::lit(0.5));
        Self::new(
            vec![ConvexRegion::rectangle(z, z, h, h)?, ConvexRegion::rectangle(h, h, side, side)?],
            vec![ConvexRegion::rectangle(h, z, side, h)?, ConvexRegion::rectangle(z, h, h, side)?],
        )
    }

    pub fn virtual_regions(&self) -> Vec<ConvexRegion<T>> {
        self.tx.iter().flat_map(|t| self.rx.iter().map(move |r| t.minkowski_sum(r))).collect()
    }

    pub fn physical_area(&self) -> T {
        let all: Vec<_> = self.tx.iter().chain(&self.rx).cloned().collect();
        union_area(&all)
    }

    pub fn virtual_area(&self) -> T {
        union_area(&self.virtual_regions())
    }

    /// Virtual aperture length along direction `(dy, dz)` (normalized internally).
    pub fn virtual_length(&self, dy: T, dz: T) -> T {
        let norm = (dy * dy + dz * dz).sqrt();
        let (lo, hi) = self
            .virtual_regions()
            .iter()
            .map(|r| r.projection(dy / norm, dz / norm))
            .fold((T::infinity(), T::neg_infinity()), |(l, h), (a, b)| (l.min(a), h.max(b)));
        hi - lo
    }

    pub fn aperture_loss(&self) -> Result<ApertureLoss<T>> {
        aperture_loss_factor(self.virtual_area(), self.physical_area(), Dimensionality::Planar)
    }

    /// Half-power beamwidth spreading along two directions relative to a reference partition
    /// (normally the shared aperture). Beamwidths are estimated from virtual aperture lengths.
    pub fn bw_spreading(&self, reference: &Self, directions: [(T, T); 2]) -> (T, T) {
        let f = |(dy, dz): (T, T)| reference.virtual_length(dy, dz) / self.virtual_length(dy, dz);
        (f(directions[0]), f(directions[1]))
    }
}
