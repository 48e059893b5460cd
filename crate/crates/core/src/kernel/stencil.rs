use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order with a tabulated central stencil.
pub const MAX_STENCIL_ORDER: usize = 4;

/// Derivative multi-index `(d/dx)^dx (d/dt)^dt`. Line grids use `dt = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    pub dx: usize,
    pub dt: usize,
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { dx: 0, dt: 0 };

    pub fn new(dx: usize, dt: usize) -> Self {
        Self { dx, dt }
    }

    pub fn x(dx: usize) -> Self {
        Self { dx, dt: 0 }
    }

    pub fn order(&self) -> usize {
        self.dx + self.dt
    }

    /// All indices with total order `<= max_order`, sorted by order then `dt`.
    pub fn up_to(max_order: usize, with_time: bool) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for k in 0..=max_order {
            if with_time {
                for dt in 0..=k {
                    out.push(MultiIndex::new(k - dt, dt));
                }
            } else {
                out.push(MultiIndex::x(k));
            }
        }
        out
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.dx, self.dt)
    }
}

/// Second-order central difference weights `(offset, weight)` for `d^k/dx^k`
/// with unit spacing.
pub fn central_weights(order: usize) -> Result<&'static [(i64, f64)]> {
    const W0: [(i64, f64); 1] = [(0, 1.0)];
    const W1: [(i64, f64); 2] = [(-1, -0.5), (1, 0.5)];
    const W2: [(i64, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
    const W3: [(i64, f64); 4] = [(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)];
    const W4: [(i64, f64); 5] = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
    match order {
        0 => Ok(&W0),
        1 => Ok(&W1),
        2 => Ok(&W2),
        3 => Ok(&W3),
        4 => Ok(&W4),
        _ => Err(Error::Domain(format!(
            "derivative order {order} exceeds the supported maximum {MAX_STENCIL_ORDER}"
        ))),
    }
}

/// Half-width of the stencil for `order`.
pub fn half_width(order: usize) -> usize {
    order.div_ceil(2)
}
