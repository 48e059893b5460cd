use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Catalog of right-hand sides `f(u)` for `u_tt - u_xx = f(u) + h`.
/// Every entry satisfies `f(0) = 0` and is globally Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Nonlinearity {
    Zero,
    /// `k u`
    Linear {
        k: f64,
    },
    /// `A sin u`
    Sine {
        amplitude: f64,
    },
    /// `L u^2 / (1 + u^2)`; bounded with limit `L` at infinity.
    Squash {
        limit: f64,
    },
    /// `L u / (1 + u^2)`; bounded, odd, vanishing at infinity.
    OddSquash {
        scale: f64,
    },
}

/// Bounds attached to a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityMeta {
    pub lipschitz_bound: f64,
    /// `None` when unbounded.
    pub sup_bound: Option<f64>,
    /// Common limit at `±∞`, if any.
    pub limit_at_infinity: Option<f64>,
    pub vanishes_at_zero: bool,
}

/// `max_u 2u / (1 + u^2)^2 = 3 sqrt(3) / 8`
const SQUASH_LIP: f64 = 0.649_519_052_838_329;

impl Nonlinearity {
    pub fn eval<T: Real>(&self, u: T) -> T {
        match *self {
            Nonlinearity::Zero => T::zero(),
            Nonlinearity::Linear { k } => T::lit(k) * u,
            Nonlinearity::Sine { amplitude } => T::lit(amplitude) * u.sin(),
            Nonlinearity::Squash { limit } => {
                let u2 = u * u;
                T::lit(limit) * u2 / (T::one() + u2)
            }
            Nonlinearity::OddSquash { scale } => T::lit(scale) * u / (T::one() + u * u),
        }
    }

    pub fn meta(&self) -> NonlinearityMeta {
        let (lipschitz_bound, sup_bound, limit_at_infinity) = match *self {
            Nonlinearity::Zero => (0.0, Some(0.0), Some(0.0)),
            Nonlinearity::Linear { k } => {
                if k == 0.0 {
                    (0.0, Some(0.0), Some(0.0))
                } else {
                    (k.abs(), None, None)
                }
            }
            Nonlinearity::Sine { amplitude } => {
                let a = amplitude.abs();
                (a, Some(a), (a == 0.0).then_some(0.0))
            }
            Nonlinearity::Squash { limit } => {
                (SQUASH_LIP * limit.abs(), Some(limit.abs()), Some(limit))
            }
            Nonlinearity::OddSquash { scale } => (scale.abs(), Some(0.5 * scale.abs()), Some(0.0)),
        };
        NonlinearityMeta {
            lipschitz_bound,
            sup_bound,
            limit_at_infinity,
            vanishes_at_zero: true,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.meta().lipschitz_bound
    }

    pub fn is_bounded(&self) -> bool {
        self.meta().sup_bound.is_some()
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::Zero | Nonlinearity::Linear { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::Linear { k } => format!("linear({k})"),
            Nonlinearity::Sine { amplitude } => format!("sine({amplitude})"),
            Nonlinearity::Squash { limit } => format!("squash({limit})"),
            Nonlinearity::OddSquash { scale } => format!("odd_squash({scale})"),
        }
    }

    /// Rejects non-finite parameters.
    pub fn validate(&self) -> Result<()> {
        let p = match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { k } => k,
            Nonlinearity::Sine { amplitude } => amplitude,
            Nonlinearity::Squash { limit } => limit,
            Nonlinearity::OddSquash { scale } => scale,
        };
        if !p.is_finite() {
            return Err(Error::Config(format!(
                "nonlinearity {} has a non-finite parameter",
                self.label()
            )));
        }
        Ok(())
    }

    /// Checks the metadata against the formula on a deterministic sample set.
    pub fn check_meta(&self) -> Result<()> {
        let meta = self.meta();
        let fail = |what: &str| {
            Err(Error::Config(format!(
                "{}: metadata inconsistent ({what})",
                self.label()
            )))
        };
        if self.eval(0.0f64) != 0.0 {
            return fail("f(0) != 0");
        }
        let samples: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.025).collect();
        let slack = 1.0 + 1e-9;
        for w in samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (self.eval(a) - self.eval(b)).abs()
                > meta.lipschitz_bound * (a - b).abs() * slack + 1e-15
            {
                return fail("Lipschitz bound");
            }
        }
        if let Some(s) = meta.sup_bound {
            if samples
                .iter()
                .any(|&u| self.eval(u).abs() > s * slack + 1e-15)
            {
                return fail("sup bound");
            }
        }
        if let Some(l) = meta.limit_at_infinity {
            for u in [1e8, -1e8] {
                if (self.eval(u) - l).abs() > 1e-6 * (1.0 + l.abs()) {
                    return fail("limit at infinity");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<Nonlinearity> {
        vec![
            Nonlinearity::Zero,
            Nonlinearity::Linear { k: -1.0 },
            Nonlinearity::Linear { k: 2.5 },
            Nonlinearity::Sine { amplitude: 1.0 },
            Nonlinearity::Squash { limit: 1.0 },
            Nonlinearity::Squash { limit: -3.0 },
            Nonlinearity::OddSquash { scale: 1.0 },
        ]
    }

    #[test]
    fn metadata_consistent_with_formulas() {
        for f in catalog() {
            f.check_meta().unwrap();
            assert_eq!(f.eval(0.0f64), 0.0);
        }
    }

    #[test]
    fn squash_lipschitz_is_sharp() {
        let u = 1.0 / 3f64.sqrt();
        let d = 2.0 * u / (1.0 + u * u).powi(2);
        assert!((d - SQUASH_LIP).abs() < 1e-14);
    }

    #[test]
    fn serde_roundtrip() {
        let f: Nonlinearity = serde_json::from_str(r#"{"kind":"odd_squash","scale":1.0}"#).unwrap();
        assert_eq!(f, Nonlinearity::OddSquash { scale: 1.0 });
        assert!(serde_json::from_str::<Nonlinearity>(r#"{"kind":"cubic"}"#).is_err());
    }

    #[test]
    fn single_precision_eval() {
        let f = Nonlinearity::Sine { amplitude: 1.0 };
        assert!((f.eval(0.5f32) - 0.5f32.sin()).abs() < 1e-7);
    }
}
