use serde::{Deserialize, Serialize};

/// Smooth compactly supported test function `exp(1 - 1/(1 - r^2))`, peak 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// Bump on the line centred at `center`.
    Bump1 { center: f64, radius: f64 },
    /// Radial bump in the (x, t) plane.
    Bump2 { x: f64, t: f64, radius: f64 },
}

fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

impl TestFunction {
    pub fn eval1(&self, x: f64) -> Option<f64> {
        match *self {
            TestFunction::Bump1 { center, radius } => {
                let r = (x - center) / radius;
                Some(bump(r * r))
            }
            TestFunction::Bump2 { .. } => None,
        }
    }

    pub fn eval2(&self, x: f64, t: f64) -> Option<f64> {
        match *self {
            TestFunction::Bump2 {
                x: cx,
                t: ct,
                radius,
            } => {
                let (dx, dt) = ((x - cx) / radius, (t - ct) / radius);
                Some(bump(dx * dx + dt * dt))
            }
            TestFunction::Bump1 { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Bump1 { center, radius } => format!("bump1(c={center},r={radius})"),
            TestFunction::Bump2 { x, t, radius } => format!("bump2(x={x},t={t},r={radius})"),
        }
    }
}
