//! Mixed box×torus domains `K × 𝕋^d` and the tensor grids used to estimate
//! suprema over them.
//!
//! Coordinates follow the convention used throughout: the leading `n − d`
//! axes range over a compact box, the trailing `d` axes are 1-periodic.

use crate::error::{CoreError, Result};
use crate::linalg::MAX_DIM;
use crate::num::Real;

/// Domain specification: ambient dimension, periodic-axis count, box bounds
/// for the leading axes, and per-axis grid resolutions.
#[derive(Clone, Debug)]
pub struct DomainSpec<T> {
    n: usize,
    d: usize,
    box_lo: Vec<T>,
    box_hi: Vec<T>,
    res: Vec<usize>,
}

impl<T: Real> DomainSpec<T> {
    /// Fully periodic domain 𝕋ⁿ.
    pub fn torus(n: usize, res: &[usize]) -> Result<Self> {
        Self::new(n, n, &[], &[], res)
    }

    /// Mixed domain: `boxes` gives `(lo, hi)` for each of the leading
    /// `n − d` axes.
    pub fn mixed(n: usize, d: usize, boxes: &[(T, T)], res: &[usize]) -> Result<Self> {
        let lo: Vec<T> = boxes.iter().map(|b| b.0).collect();
        let hi: Vec<T> = boxes.iter().map(|b| b.1).collect();
        Self::new(n, d, &lo, &hi, res)
    }

    fn new(n: usize, d: usize, box_lo: &[T], box_hi: &[T], res: &[usize]) -> Result<Self> {
        if !(3..=MAX_DIM).contains(&n) {
            return Err(CoreError::UnsupportedDimension { n, max: MAX_DIM });
        }
        if d > n {
            return Err(CoreError::InvalidInput(format!("d = {d} exceeds n = {n}")));
        }
        if box_lo.len() != n - d || box_hi.len() != n - d {
            return Err(CoreError::InvalidInput(format!(
                "expected {} box bounds, got {}",
                n - d,
                box_lo.len()
            )));
        }
        if res.len() != n {
            return Err(CoreError::InvalidInput(format!(
                "expected {n} resolutions, got {}",
                res.len()
            )));
        }
        if res.iter().any(|&r| r < 2) {
            return Err(CoreError::InvalidInput("grid resolution below 2".into()));
        }
        for a in 0..n - d {
            if box_hi[a] <= box_lo[a] {
                return Err(CoreError::InvalidGeometry(format!(
                    "box axis {a} has hi <= lo"
                )));
            }
        }
        Ok(Self { n, d, box_lo: box_lo.to_vec(), box_hi: box_hi.to_vec(), res: res.to_vec() })
    }

    /// Same domain with different grid resolutions.
    pub fn with_res(&self, res: &[usize]) -> Result<Self> {
        Self::new(self.n, self.d, &self.box_lo, &self.box_hi, res)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of trailing periodic axes.
    #[inline]
    pub fn periodic_count(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn is_periodic_axis(&self, axis: usize) -> bool {
        axis >= self.n - self.d
    }

    pub fn periodic_mask(&self) -> Vec<bool> {
        (0..self.n).map(|a| self.is_periodic_axis(a)).collect()
    }

    #[inline]
    pub fn res(&self) -> &[usize] {
        &self.res
    }

    /// Coordinate range of an axis: `[0,1)` for periodic axes, the box for
    /// the leading axes.
    pub fn axis_bounds(&self, axis: usize) -> (T, T) {
        if self.is_periodic_axis(axis) {
            (T::zero(), T::one())
        } else {
            (self.box_lo[axis], self.box_hi[axis])
        }
    }

    /// Grid coordinates along one axis: periodic axes sample `j/res`
    /// (endpoint excluded, it aliases 0); box axes sample the closed
    /// interval inclusively.
    pub fn axis_coords(&self, axis: usize) -> Vec<T> {
        let r = self.res[axis];
        if self.is_periodic_axis(axis) {
            (0..r).map(|j| T::of_usize(j) / T::of_usize(r)).collect()
        } else {
            let (lo, hi) = self.axis_bounds(axis);
            let step = (hi - lo) / T::of_usize(r - 1);
            (0..r).map(|j| lo + step * T::of_usize(j)).collect()
        }
    }

    /// All tensor-grid points, row-major over axes.
    pub fn grid_points(&self) -> Vec<Vec<T>> {
        let coords: Vec<Vec<T>> = (0..self.n).map(|a| self.axis_coords(a)).collect();
        let total: usize = coords.iter().map(|c| c.len()).product();
        let mut pts = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.n];
        for _ in 0..total {
            pts.push((0..self.n).map(|a| coords[a][idx[a]]).collect());
            for a in (0..self.n).rev() {
                idx[a] += 1;
                if idx[a] < coords[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        pts
    }

    /// Reduce periodic coordinates to the fundamental cell `[0,1)`.
    pub fn reduce(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|a| {
                if self.is_periodic_axis(a) {
                    let f = x[a] - x[a].floor();
                    if f == T::one() {
                        T::zero()
                    } else {
                        f
                    }
                } else {
                    x[a]
                }
            })
            .collect()
    }

    /// Distance from `x` to the nearest non-periodic boundary; infinite on a
    /// fully periodic domain.
    pub fn boundary_distance(&self, x: &[T]) -> T {
        let mut dist = T::infinity();
        for a in 0..self.n - self.d {
            dist = dist.min((x[a] - self.box_lo[a]).abs());
            dist = dist.min((self.box_hi[a] - x[a]).abs());
        }
        dist
    }
}

/// Axis-aligned box region, used for plateaus and verification sets.
/// On periodic axes coordinates are compared after reduction to `[0,1)`.
#[derive(Clone, Debug)]
pub struct BoxRegion<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> BoxRegion<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(CoreError::InvalidInput("region bound length mismatch".into()));
        }
        for a in 0..lo.len() {
            if hi[a] < lo[a] {
                return Err(CoreError::InvalidGeometry(format!("region axis {a} has hi < lo")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, domain: &DomainSpec<T>, x: &[T]) -> bool {
        let xr = domain.reduce(x);
        (0..xr.len()).all(|a| xr[a] >= self.lo[a] && xr[a] <= self.hi[a])
    }

    /// Grow by `margin` on every axis.
    pub fn inflate(&self, margin: T) -> Self {
        Self {
            lo: self.lo.iter().map(|&v| v - margin).collect(),
            hi: self.hi.iter().map(|&v| v + margin).collect(),
        }
    }
}
