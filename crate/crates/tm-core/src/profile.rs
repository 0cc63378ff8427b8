//! Radial profiles as sampled grids.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Where a radial profile lives: the whole plane, or the unit disk with a
/// zero boundary value at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Plane,
    Disk,
}

/// A non-increasing radial function sampled on a strictly increasing grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r_grid: Vec<f64>,
    pub u: Vec<f64>,
    pub domain: Domain,
}

impl RadialProfile {
    pub fn new(r_grid: Vec<f64>, u: Vec<f64>, domain: Domain) -> Result<Self> {
        if r_grid.len() != u.len() || r_grid.len() < 3 {
            return Err(CoreError::Domain(
                "profile needs matching r/u grids with at least 3 points".into(),
            ));
        }
        if r_grid.windows(2).any(|w| !(w[1] > w[0])) || !(r_grid[0] > 0.0) {
            return Err(CoreError::Domain("r grid must be positive and strictly increasing".into()));
        }
        if u.windows(2).any(|w| w[1] > w[0] + 1e-12 * w[0].abs().max(1.0)) {
            return Err(CoreError::Domain("u must be non-increasing".into()));
        }
        if u.iter().any(|&v| v < 0.0) {
            return Err(CoreError::Domain("u must be non-negative".into()));
        }
        if domain == Domain::Disk {
            let last = *r_grid.last().unwrap();
            if last > 1.0 + 1e-12 {
                return Err(CoreError::Domain("disk profiles live on (0, 1]".into()));
            }
            if u.last().copied().unwrap_or(0.0).abs() > 1e-12 {
                return Err(CoreError::Domain("disk profiles vanish at r = 1".into()));
            }
        }
        Ok(RadialProfile { r_grid, u, domain })
    }

    pub fn len(&self) -> usize {
        self.r_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_grid.is_empty()
    }

    /// Rescale radii by `1/lambda` (the plane dilation `u(r) -> u(lambda r)`),
    /// which divides the mass by `lambda^2` and leaves kinetic energy alone.
    pub fn dilate(&self, lambda: f64) -> RadialProfile {
        RadialProfile {
            r_grid: self.r_grid.iter().map(|r| r / lambda).collect(),
            u: self.u.clone(),
            domain: self.domain,
        }
    }

    /// Linear interpolation of `u` at radius `r`, clamped to the grid range.
    pub fn interp_u(&self, r: f64) -> f64 {
        let n = self.r_grid.len();
        if r <= self.r_grid[0] {
            return self.u[0];
        }
        if r >= self.r_grid[n - 1] {
            return self.u[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.r_grid[mid] <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (r - self.r_grid[lo]) / (self.r_grid[hi] - self.r_grid[lo]);
        self.u[lo] + w * (self.u[hi] - self.u[lo])
    }
}
