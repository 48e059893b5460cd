use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum ladder length; fewer points do not support a meaningful regression.
pub const MIN_LADDER_LEN: usize = 4;

/// Finite strictly decreasing sequence of regularization parameters in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonLadder {
    values: Vec<f64>,
}

impl EpsilonLadder {
    /// Geometric ladder `eps0 * ratio^k`, `k = 0..count`.
    pub fn geometric(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 <= 1.0) {
            return Err(Error::Config(format!(
                "eps0 must lie in (0, 1], got {eps0}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config(format!(
                "ladder ratio must lie in (0, 1), got {ratio}"
            )));
        }
        if count < MIN_LADDER_LEN {
            return Err(Error::Config(format!(
                "ladder needs at least {MIN_LADDER_LEN} values, got {count}"
            )));
        }
        let values = (0..count).map(|k| eps0 * ratio.powi(k as i32)).collect();
        Self::from_values(values)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_LADDER_LEN {
            return Err(Error::Config(format!(
                "ladder needs at least {MIN_LADDER_LEN} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config("ladder values must lie in (0, 1]".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "ladder values must be strictly decreasing".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest (coarsest) parameter.
    pub fn eps_max(&self) -> f64 {
        self.values[0]
    }

    pub fn eps_min(&self) -> f64 {
        *self.values.last().expect("ladder is non-empty")
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

impl TryFrom<Vec<f64>> for EpsilonLadder {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::from_values(values)
    }
}

impl From<EpsilonLadder> for Vec<f64> {
    fn from(l: EpsilonLadder) -> Self {
        l.values
    }
}

/// Spacing used for the member at `eps`: the largest `h <= eps / points_per_eps`
/// that divides `half_width`, so that `x = 0` and `x = ±half_width` are nodes.
/// Returns `(h, n)` with `h * n == half_width`.
pub fn spacing_for(eps: f64, half_width: f64, points_per_eps: usize) -> (f64, usize) {
    let target = eps / points_per_eps as f64;
    let n = (half_width / target - 1e-9).ceil().max(1.0) as usize;
    (half_width / n as f64, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_values() {
        let l = EpsilonLadder::geometric(0.5, 0.5, 4).unwrap();
        assert_eq!(l.values(), &[0.5, 0.25, 0.125, 0.0625]);
        let l = EpsilonLadder::geometric(0.25, 0.7, 6).unwrap();
        assert_eq!(l.len(), 6);
        assert!((l.eps_min() - 0.25 * 0.7f64.powi(5)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            EpsilonLadder::geometric(1.0, 0.5, 1),
            Err(Error::Config(_))
        ));
        assert!(EpsilonLadder::geometric(1.5, 0.5, 4).is_err());
        assert!(EpsilonLadder::geometric(0.5, 1.0, 4).is_err());
        assert!(EpsilonLadder::from_values(vec![0.5, 0.5, 0.2, 0.1]).is_err());
    }

    #[test]
    fn spacing_divides_half_width() {
        let (h, n) = spacing_for(0.25, 2.0, 8);
        assert_eq!(n, 64);
        assert_eq!(h, 2.0 / 64.0);
        let (h, n) = spacing_for(0.1, std::f64::consts::PI, 8);
        assert!(h <= 0.1 / 8.0);
        assert!((h * n as f64 - std::f64::consts::PI).abs() < 1e-14);
    }
}
