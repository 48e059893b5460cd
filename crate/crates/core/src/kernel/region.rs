use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used by membership tests on lattice points.
const MEMBERSHIP_SLACK: f64 = 1e-9;

/// Closed interval on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Upper,
    Lower,
}

/// Domain-of-dependence trapezoid `{0 <= t <= T, |x| <= kappa - t}`
/// (mirrored to `t <= 0` for the lower orientation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub kappa: f64,
    pub t_max: f64,
    #[serde(default)]
    pub orientation: Orientation,
}

impl Trapezoid {
    pub fn new(kappa: f64, t_max: f64) -> Result<Self> {
        Self::with_orientation(kappa, t_max, Orientation::Upper)
    }

    pub fn with_orientation(kappa: f64, t_max: f64, orientation: Orientation) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        if !(t_max >= 0.0 && t_max <= kappa) {
            return Err(Error::Domain(format!(
                "need 0 <= T <= kappa, got T = {t_max}, kappa = {kappa}"
            )));
        }
        Ok(Self {
            kappa,
            t_max,
            orientation,
        })
    }

    pub fn lower(&self) -> Self {
        Self {
            orientation: Orientation::Lower,
            ..*self
        }
    }

    /// Same base, smaller height.
    pub fn truncated(&self, t_max: f64) -> Result<Self> {
        Self::with_orientation(self.kappa, t_max.min(self.t_max), self.orientation)
    }

    pub fn contains(&self, x: f64, t: f64, slack: f64) -> bool {
        let s = match self.orientation {
            Orientation::Upper => t,
            Orientation::Lower => -t,
        };
        s >= -slack && s <= self.t_max + slack && x.abs() <= self.kappa - s + slack
    }

    pub fn area(&self) -> f64 {
        self.t_max * (2.0 * self.kappa - self.t_max)
    }
}

/// Axis-aligned closed rectangle in the (x, t) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Cell {
    pub fn new(x_lo: f64, x_hi: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi && t_lo < t_hi) {
            return Err(Error::Domain("degenerate cell".into()));
        }
        Ok(Self {
            x_lo,
            x_hi,
            t_lo,
            t_hi,
        })
    }

    pub fn inset(&self, d: f64) -> Option<Self> {
        Cell::new(self.x_lo + d, self.x_hi - d, self.t_lo + d, self.t_hi - d).ok()
    }

    pub fn contains(&self, x: f64, t: f64, slack: f64) -> bool {
        x >= self.x_lo - slack
            && x <= self.x_hi + slack
            && t >= self.t_lo - slack
            && t <= self.t_hi + slack
    }

    /// The cell translated by `dx` in space.
    pub fn shifted(&self, dx: f64) -> Self {
        Self {
            x_lo: self.x_lo + dx,
            x_hi: self.x_hi + dx,
            ..*self
        }
    }

    pub fn side(&self) -> f64 {
        (self.x_hi - self.x_lo).min(self.t_hi - self.t_lo)
    }

    /// Smallest horizontal distance `||x| - |t||` from the cell to the light cone.
    pub fn cone_distance(&self) -> f64 {
        // |x| - |t| is piecewise linear on the cell; its range is attained on the
        // corners and, for |x|, at x = 0 when the cell straddles it.
        let mut xs = vec![self.x_lo.abs(), self.x_hi.abs()];
        if self.x_lo < 0.0 && self.x_hi > 0.0 {
            xs.push(0.0);
        }
        let mut ts = vec![self.t_lo.abs(), self.t_hi.abs()];
        if self.t_lo < 0.0 && self.t_hi > 0.0 {
            ts.push(0.0);
        }
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min)
            - ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ts.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            lo.abs().min(hi.abs())
        }
    }
}

/// Planar region on which space-time norms are taken. Both variants are convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region2 {
    Trapezoid(Trapezoid),
    Cell(Cell),
}

impl Region2 {
    pub fn contains(&self, x: f64, t: f64, h: f64) -> bool {
        let slack = MEMBERSHIP_SLACK * h;
        match self {
            Region2::Trapezoid(k) => k.contains(x, t, slack),
            Region2::Cell(c) => c.contains(x, t, slack),
        }
    }

    /// `(x_lo, x_hi, t_lo, t_hi)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self {
            Region2::Trapezoid(k) => match k.orientation {
                Orientation::Upper => (-k.kappa, k.kappa, 0.0, k.t_max),
                Orientation::Lower => (-k.kappa, k.kappa, -k.t_max, 0.0),
            },
            Region2::Cell(c) => (c.x_lo, c.x_hi, c.t_lo, c.t_hi),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Region2::Trapezoid(k) => format!("K[kappa={},T={}]", k.kappa, k.t_max),
            Region2::Cell(c) => format!("cell[{},{}]x[{},{}]", c.x_lo, c.x_hi, c.t_lo, c.t_hi),
        }
    }
}

impl From<Trapezoid> for Region2 {
    fn from(k: Trapezoid) -> Self {
        Region2::Trapezoid(k)
    }
}

impl From<Cell> for Region2 {
    fn from(c: Cell) -> Self {
        Region2::Cell(c)
    }
}

pub(crate) fn interval_slack(h: f64) -> f64 {
    MEMBERSHIP_SLACK * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_membership() {
        let k = Trapezoid::new(1.0, 0.5).unwrap();
        assert!(k.contains(0.5, 0.5, 0.0));
        assert!(!k.contains(0.6, 0.5, 0.0));
        assert!(!k.contains(0.0, -0.1, 0.0));
        let l = k.lower();
        assert!(l.contains(0.5, -0.5, 0.0));
        assert!(!l.contains(0.0, 0.1, 0.0));
        assert!(Trapezoid::new(1.0, 1.5).is_err());
        assert!((k.area() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cone_distance_of_cells() {
        let c = Cell::new(0.0, 0.1, 0.5, 0.6).unwrap();
        assert!((c.cone_distance() - 0.4).abs() < 1e-12);
        let on = Cell::new(0.4, 0.6, 0.4, 0.6).unwrap();
        assert_eq!(on.cone_distance(), 0.0);
        let out = Cell::new(-1.0, -0.9, 0.1, 0.2).unwrap();
        assert!((out.cone_distance() - 0.7).abs() < 1e-12);
    }
}
