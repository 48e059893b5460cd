//! Moment-constrained mollifiers and the imbedding of distributions.
//!
//! The mollifier is `φ(x) = p(x) e^{-x²} χ(x)` with `p` even of degree `2m`
//! chosen so that `∫ x^{2j} φ = δ_{j0}` for `j ≤ m`; by symmetry all moments
//! of order `1..=2m+1` vanish. The cutoff `χ` is a C² quintic smoothstep that
//! equals one on `[-R+2, R-2]` and vanishes outside `[-R, R]`, so it changes
//! moments by less than `e^{-(R-2)^2}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::family::{Provenance, RepresentativeFamily};
use crate::kernel::grid::{GridFunction1D, Sampled};
use crate::kernel::ladder::{spacing_for, EpsilonLadder};
use crate::scalar::CompensatedSum;

pub const DEFAULT_CUTOFF_RADIUS: f64 = 10.0;
pub const DEFAULT_MOMENT_ORDER: usize = 2;
pub const DEFAULT_SAMPLES_PER_UNIT: usize = 64;
/// Moment defects above this abort construction.
pub const MOMENT_TOLERANCE: f64 = 1e-10;
/// Condition estimates above this abort construction.
pub const MAX_CONDITION: f64 = 1e12;
/// Coarsest admissible sampling of a scaled mollifier, nodes per ε.
pub const MIN_POINTS_PER_EPS: f64 = 2.0;

/// Sampled moment-constrained mollifier with its analytic description.
#[derive(Debug, Clone)]
pub struct Mollifier {
    moment_order: usize,
    cutoff_radius: f64,
    coeffs: Vec<f64>,
    /// `P_k` with `(p e^{-x²})^{(k)} = P_k e^{-x²}`, ascending coefficients.
    deriv_polys: Vec<Vec<f64>>,
    profile: GridFunction1D<f64>,
    moment_defects: Vec<f64>,
    condition: f64,
    sup_abs: f64,
    l1_abs: f64,
    l2_squared: f64,
}

/// Highest derivative order with a precomputed polynomial factor.
const MAX_ANALYTIC_DERIVATIVE: usize = 8;

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

/// `P' - 2x P`
fn next_gauss_poly(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, d) in poly_deriv(p).into_iter().enumerate() {
        out[k] += d;
    }
    for (k, &a) in p.iter().enumerate() {
        out[k + 1] -= 2.0 * a;
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `s(u) = 10u³ - 15u⁴ + 6u⁵`, C² transition from 0 to 1 on `[0, 1]`.
const SMOOTHSTEP: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];

/// `J_k(y) = ∫_{-∞}^y x^k e^{-x²} dx` for `k = 0..=kmax`.
fn gauss_moments_below(y: f64, kmax: usize) -> Vec<f64> {
    let e = (-y * y).exp();
    let mut j = vec![0.0; kmax + 1];
    j[0] = 0.5 * std::f64::consts::PI.sqrt() * libm::erfc(-y);
    if kmax >= 1 {
        j[1] = -0.5 * e;
    }
    for k in 2..=kmax {
        j[k] = 0.5 * (k - 1) as f64 * j[k - 2] - 0.5 * y.powi(k as i32 - 1) * e;
    }
    j
}

impl Mollifier {
    pub fn build(moment_order: usize, samples_per_unit: usize) -> Result<Self> {
        Self::build_with_radius(moment_order, samples_per_unit, DEFAULT_CUTOFF_RADIUS)
    }

    pub fn build_with_radius(
        moment_order: usize,
        samples_per_unit: usize,
        cutoff_radius: f64,
    ) -> Result<Self> {
        if !(cutoff_radius >= 4.0) || !cutoff_radius.is_finite() {
            return Err(Error::Config(format!(
                "cutoff radius must be at least 4, got {cutoff_radius}"
            )));
        }
        if samples_per_unit < 8 {
            return Err(Error::Config(format!(
                "need at least 8 samples per unit, got {samples_per_unit}"
            )));
        }
        let m = moment_order;
        let a = DMatrix::from_fn(m + 1, m + 1, |j, k| libm::tgamma((j + k) as f64 + 0.5));
        let sv = a.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        let construction = |reason: &str| Error::Construction {
            reason: reason.into(),
            condition,
        };
        if !(condition <= MAX_CONDITION) {
            return Err(construction("moment system is ill-conditioned"));
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[0] = 1.0;
        let c = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| construction("moment system is singular"))?;
        let mut coeffs = vec![0.0; 2 * m + 1];
        for k in 0..=m {
            coeffs[2 * k] = c[k];
        }
        let mut deriv_polys = vec![coeffs.clone()];
        for k in 0..MAX_ANALYTIC_DERIVATIVE {
            let next = next_gauss_poly(&deriv_polys[k]);
            deriv_polys.push(next);
        }
        let mut me = Self {
            moment_order,
            cutoff_radius,
            coeffs,
            deriv_polys,
            profile: GridFunction1D::symmetric(1.0, 1, |_| 0.0)?,
            moment_defects: Vec::new(),
            condition,
            sup_abs: 0.0,
            l1_abs: 0.0,
            l2_squared: 0.0,
        };
        let n = (cutoff_radius * samples_per_unit as f64).round() as usize;
        let dz = cutoff_radius / n as f64;
        me.profile = GridFunction1D::symmetric(dz, n, |x| me.eval(x))?;

        let moment = |j: i32| {
            let mut acc = CompensatedSum::new();
            for (i, &v) in me.profile.values().iter().enumerate() {
                acc.add(v * me.profile.x(i).powi(j));
            }
            acc.value() * dz
        };
        me.moment_defects = (0..=2 * m as i32 + 1)
            .map(|j| moment(j) - if j == 0 { 1.0 } else { 0.0 })
            .collect();
        if me.moment_defects[0].abs() > 1e-12 {
            return Err(construction("profile does not integrate to one"));
        }
        if me.moment_defects[1..]
            .iter()
            .any(|d| d.abs() > MOMENT_TOLERANCE)
        {
            return Err(construction("moment defects exceed tolerance"));
        }
        me.l2_squared = me.profile.values().iter().map(|v| v * v).sum::<f64>() * dz;

        // |φ| has kinks at sign changes; integrate it on a finer lattice.
        let fine = 16 * n;
        let dzf = cutoff_radius / fine as f64;
        let mut l1 = CompensatedSum::new();
        let mut sup = 0.0f64;
        for i in 0..=2 * fine {
            let v = me.eval(-cutoff_radius + i as f64 * dzf).abs();
            sup = sup.max(v);
            l1.add(v);
        }
        me.sup_abs = sup;
        me.l1_abs = l1.value() * dzf;
        Ok(me)
    }

    pub fn moment_order(&self) -> usize {
        self.moment_order
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    /// Coefficients of `p` in ascending powers of `x`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn profile(&self) -> &GridFunction1D<f64> {
        &self.profile
    }

    /// `∫ x^j φ - δ_{j0}` for `j = 0..=2m+1`, by quadrature of the profile.
    pub fn moment_defects(&self) -> &[f64] {
        &self.moment_defects
    }

    /// Spectral condition number of the moment system.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    pub fn l1_abs(&self) -> f64 {
        self.l1_abs
    }

    /// `∫ φ²`
    pub fn l2_squared(&self) -> f64 {
        self.l2_squared
    }

    /// Highest vanishing moment order, `2m + 1`.
    pub fn vanishing_moments(&self) -> usize {
        2 * self.moment_order + 1
    }

    fn cutoff_derivative(&self, x: f64, j: usize) -> f64 {
        let r = self.cutoff_radius;
        let ax = x.abs();
        if ax >= r {
            return 0.0;
        }
        if ax <= r - 2.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let u = (ax - (r - 2.0)) / 2.0;
        let mut s = SMOOTHSTEP.to_vec();
        for _ in 0..j {
            s = poly_deriv(&s);
        }
        let chain = (x.signum() * 0.5).powi(j as i32);
        let base = if j == 0 { 1.0 } else { 0.0 };
        base - poly_eval(&s, u) * chain
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() >= self.cutoff_radius {
            return 0.0;
        }
        poly_eval(&self.coeffs, x) * (-x * x).exp() * self.cutoff_derivative(x, 0)
    }

    /// `φ^{(k)}(x)` by the Leibniz rule over the Gaussian part and the cutoff.
    pub fn derivative(&self, x: f64, k: usize) -> Result<f64> {
        if k > MAX_ANALYTIC_DERIVATIVE {
            return Err(Error::Domain(format!(
                "mollifier derivatives are available up to order {MAX_ANALYTIC_DERIVATIVE}, got {k}"
            )));
        }
        if x.abs() >= self.cutoff_radius {
            return Ok(0.0);
        }
        let g = (-x * x).exp();
        let mut acc = 0.0;
        for j in 0..=k {
            let chi = self.cutoff_derivative(x, j);
            if chi != 0.0 {
                acc += binomial(k, j) * poly_eval(&self.deriv_polys[k - j], x) * g * chi;
            }
        }
        Ok(acc)
    }

    /// `Φ(y) = ∫_{-∞}^y φ`. The cutoff is ignored inside `(-R, R)`; its effect
    /// there is below `e^{-(R-2)^2}`.
    pub fn cumulative(&self, y: f64) -> f64 {
        if y <= -self.cutoff_radius {
            return 0.0;
        }
        if y >= self.cutoff_radius {
            return 1.0;
        }
        if y > 0.0 {
            return 1.0 - self.cumulative(-y);
        }
        let j = gauss_moments_below(y, 2 * self.moment_order);
        self.coeffs.iter().zip(&j).map(|(c, v)| c * v).sum()
    }

    /// `Φ₁(y) = ∫_{-∞}^y x φ(x) dx`; even in `y`, zero outside `(-R, R)`.
    pub fn first_moment_cumulative(&self, y: f64) -> f64 {
        if y.abs() >= self.cutoff_radius {
            return 0.0;
        }
        let y = -y.abs();
        let j = gauss_moments_below(y, 2 * self.moment_order + 1);
        self.coeffs.iter().zip(&j[1..]).map(|(c, v)| c * v).sum()
    }

    /// Samples of `ε⁻¹ φ((x - x0)/ε)` on the grid `x_i = (i + i0) h`.
    pub fn scaled(
        &self,
        eps: f64,
        x0: f64,
        h: f64,
        i0: i64,
        len: usize,
    ) -> Result<GridFunction1D<f64>> {
        self.scaled_derivative(eps, x0, 0, h, i0, len)
    }

    /// Samples of `ε^{-1-k} φ^{(k)}((x - x0)/ε)`.
    pub fn scaled_derivative(
        &self,
        eps: f64,
        x0: f64,
        k: usize,
        h: f64,
        i0: i64,
        len: usize,
    ) -> Result<GridFunction1D<f64>> {
        check_eps(eps)?;
        check_resolution(eps, h)?;
        let s = eps.powi(-1 - k as i32);
        let r = self.cutoff_radius * eps;
        let mut values = vec![0.0; len];
        for (i, v) in values.iter_mut().enumerate() {
            let x = (i as i64 + i0) as f64 * h;
            if (x - x0).abs() < r {
                *v = s * self.derivative((x - x0) / eps, k)?;
            }
        }
        GridFunction1D::new(h, i0, values)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn check_resolution(eps: f64, h: f64) -> Result<()> {
    if eps / h < MIN_POINTS_PER_EPS {
        return Err(Error::Resolution(format!(
            "spacing {h} resolves eps = {eps} with fewer than {MIN_POINTS_PER_EPS} nodes per eps"
        )));
    }
    Ok(())
}

/// Smooth functions available as data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothFn {
    /// `amplitude · sin(frequency · x + phase)`
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · exp(-((x - center)/width)²)`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SmoothFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SmoothFn::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * x + phase).sin(),
            SmoothFn::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                amplitude * (-z * z).exp()
            }
        }
    }

    pub fn sin() -> Self {
        SmoothFn::Sine {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
        }
    }
}

/// Distributions and locally integrable functions that can be imbedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Delta {
        #[serde(default)]
        x0: f64,
    },
    DeltaDerivative {
        #[serde(default)]
        x0: f64,
        order: usize,
    },
    Heaviside {
        #[serde(default)]
        x0: f64,
    },
    /// Piecewise-linear interpolant of `(x, y)` pairs, zero outside the table.
    Table {
        points: Vec<[f64; 2]>,
    },
    /// Tent of the given height supported on `[center - half_width, center + half_width]`.
    Hat {
        center: f64,
        half_width: f64,
        height: f64,
    },
    Smooth {
        function: SmoothFn,
    },
    /// `Σ c_k d_k`
    Combination {
        terms: Vec<(f64, DistributionSpec)>,
    },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::DeltaDerivative { order, .. } if *order > MAX_ANALYTIC_DERIVATIVE => {
                Err(Error::Config(format!(
                    "delta derivative order {order} exceeds {MAX_ANALYTIC_DERIVATIVE}"
                )))
            }
            DistributionSpec::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::Config("table needs at least two points".into()));
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::Config(
                        "table abscissae must be strictly increasing".into(),
                    ));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Config("table values must be finite".into()));
                }
                Ok(())
            }
            DistributionSpec::Hat { half_width, .. } if !(*half_width > 0.0) => {
                Err(Error::Config("hat half-width must be positive".into()))
            }
            DistributionSpec::Smooth {
                function: SmoothFn::Gaussian { width, .. },
            } if !(*width > 0.0) => Err(Error::Config("gaussian width must be positive".into())),
            DistributionSpec::Combination { terms } => {
                terms.iter().try_for_each(|(_, d)| d.validate())
            }
            _ => Ok(()),
        }
    }

    /// Point-supported (a finite sum of deltas and their derivatives).
    pub fn is_singular(&self) -> bool {
        match self {
            DistributionSpec::Delta { .. } | DistributionSpec::DeltaDerivative { .. } => true,
            DistributionSpec::Combination { terms } => terms.iter().all(|(_, d)| d.is_singular()),
            _ => false,
        }
    }

    /// Splits into `(regular, singular)` parts.
    pub fn split(&self) -> (Vec<(f64, DistributionSpec)>, Vec<(f64, DistributionSpec)>) {
        let mut regular = Vec::new();
        let mut singular = Vec::new();
        self.split_into(1.0, &mut regular, &mut singular);
        (regular, singular)
    }

    fn split_into(&self, c: f64, regular: &mut Vec<(f64, Self)>, singular: &mut Vec<(f64, Self)>) {
        match self {
            DistributionSpec::Combination { terms } => {
                for (ck, d) in terms {
                    d.split_into(c * ck, regular, singular);
                }
            }
            d if d.is_singular() => singular.push((c, d.clone())),
            d => regular.push((c, d.clone())),
        }
    }

    /// Points carrying singular support or jumps.
    pub fn support_points(&self) -> Vec<f64> {
        match self {
            DistributionSpec::Delta { x0 }
            | DistributionSpec::DeltaDerivative { x0, .. }
            | DistributionSpec::Heaviside { x0 } => vec![*x0],
            DistributionSpec::Table { points } => vec![points[0][0], points[points.len() - 1][0]],
            DistributionSpec::Hat {
                center, half_width, ..
            } => vec![center - half_width, center + half_width],
            DistributionSpec::Smooth { .. } => Vec::new(),
            DistributionSpec::Combination { terms } => {
                terms.iter().flat_map(|(_, d)| d.support_points()).collect()
            }
        }
    }

    /// Delta masses `(x0, mass)` of the order-zero point parts.
    pub fn point_masses(&self) -> Vec<(f64, f64)> {
        let (_, singular) = self.split();
        singular
            .into_iter()
            .filter_map(|(c, d)| match d {
                DistributionSpec::Delta { x0 } => Some((x0, c)),
                _ => None,
            })
            .collect()
    }

    /// Pointwise value of a function entry (`None` for singular ones);
    /// Heaviside takes `½` at its jump.
    pub fn eval_function(&self, x: f64) -> Option<f64> {
        match self {
            DistributionSpec::Delta { .. } | DistributionSpec::DeltaDerivative { .. } => None,
            DistributionSpec::Heaviside { x0 } => Some(if x > *x0 {
                1.0
            } else if x < *x0 {
                0.0
            } else {
                0.5
            }),
            DistributionSpec::Table { points } => Some(table_eval(points, x)),
            DistributionSpec::Hat {
                center,
                half_width,
                height,
            } => Some(height * (1.0 - (x - center).abs() / half_width).max(0.0)),
            DistributionSpec::Smooth { function } => Some(function.eval(x)),
            DistributionSpec::Combination { terms } => terms
                .iter()
                .map(|(c, d)| d.eval_function(x).map(|v| c * v))
                .sum(),
        }
    }

    /// `(d ∗ φ_ε)` sampled on `x_i = (i + i0) h`.
    pub fn convolve(
        &self,
        moll: &Mollifier,
        eps: f64,
        h: f64,
        i0: i64,
        len: usize,
    ) -> Result<GridFunction1D<f64>> {
        check_eps(eps)?;
        check_resolution(eps, h)?;
        let x = |i: usize| (i as i64 + i0) as f64 * h;
        match self {
            DistributionSpec::Delta { x0 } => moll.scaled(eps, *x0, h, i0, len),
            DistributionSpec::DeltaDerivative { x0, order } => {
                moll.scaled_derivative(eps, *x0, *order, h, i0, len)
            }
            DistributionSpec::Heaviside { x0 } => {
                GridFunction1D::from_fn(h, i0, len, |xi| moll.cumulative((xi - x0) / eps))
            }
            DistributionSpec::Table { .. } | DistributionSpec::Hat { .. } => {
                let pieces = self.linear_pieces();
                let mut values = vec![0.0; len];
                for (i, v) in values.iter_mut().enumerate() {
                    let xi = x(i);
                    *v = pieces.iter().map(|p| p.convolved(moll, eps, xi)).sum();
                }
                GridFunction1D::new(h, i0, values)
            }
            DistributionSpec::Smooth { function } => {
                convolve_smooth(function, moll, eps, h, i0, len)
            }
            DistributionSpec::Combination { terms } => {
                let mut values = vec![0.0; len];
                for (c, d) in terms {
                    let g = d.convolve(moll, eps, h, i0, len)?;
                    values
                        .iter_mut()
                        .zip(g.values())
                        .for_each(|(a, b)| *a += c * b);
                }
                GridFunction1D::new(h, i0, values)
            }
        }
    }

    /// Decomposition of a piecewise-linear entry into jumps and ramps.
    fn linear_pieces(&self) -> Vec<LinearPiece> {
        let points: Vec<[f64; 2]> = match self {
            DistributionSpec::Table { points } => points.clone(),
            DistributionSpec::Hat {
                center,
                half_width,
                height,
            } => {
                vec![
                    [center - half_width, 0.0],
                    [*center, *height],
                    [center + half_width, 0.0],
                ]
            }
            _ => return Vec::new(),
        };
        let n = points.len();
        let slope =
            |k: usize| (points[k + 1][1] - points[k][1]) / (points[k + 1][0] - points[k][0]);
        let mut out = Vec::new();
        out.push(LinearPiece::Jump {
            at: points[0][0],
            size: points[0][1],
        });
        out.push(LinearPiece::Ramp {
            at: points[0][0],
            slope: slope(0),
        });
        for k in 1..n - 1 {
            out.push(LinearPiece::Ramp {
                at: points[k][0],
                slope: slope(k) - slope(k - 1),
            });
        }
        out.push(LinearPiece::Ramp {
            at: points[n - 1][0],
            slope: -slope(n - 2),
        });
        out.push(LinearPiece::Jump {
            at: points[n - 1][0],
            size: -points[n - 1][1],
        });
        out.retain(|p| match p {
            LinearPiece::Jump { size, .. } => *size != 0.0,
            LinearPiece::Ramp { slope, .. } => *slope != 0.0,
        });
        out
    }
}

fn table_eval(points: &[[f64; 2]], x: f64) -> f64 {
    let n = points.len();
    if x < points[0][0] || x > points[n - 1][0] {
        return 0.0;
    }
    let k = points.partition_point(|p| p[0] <= x).clamp(1, n - 1);
    let ([x0, y0], [x1, y1]) = (points[k - 1], points[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

enum LinearPiece {
    /// `size · H(x - at)`
    Jump { at: f64, size: f64 },
    /// `slope · (x - at)₊`
    Ramp { at: f64, slope: f64 },
}

impl LinearPiece {
    fn convolved(&self, moll: &Mollifier, eps: f64, x: f64) -> f64 {
        match *self {
            LinearPiece::Jump { at, size } => size * moll.cumulative((x - at) / eps),
            LinearPiece::Ramp { at, slope } => {
                let y = (x - at) / eps;
                slope * ((x - at) * moll.cumulative(y) - eps * moll.first_moment_cumulative(y))
            }
        }
    }
}

/// Discrete convolution with the scaled profile sampled on the data lattice;
/// trapezoid sums of Gaussian-type integrands converge spectrally.
fn convolve_smooth(
    f: &SmoothFn,
    moll: &Mollifier,
    eps: f64,
    h: f64,
    i0: i64,
    len: usize,
) -> Result<GridFunction1D<f64>> {
    let half = (moll.cutoff_radius() * eps / h).ceil() as i64;
    let weights: Vec<f64> = (-half..=half)
        .map(|j| h / eps * moll.eval(j as f64 * h / eps))
        .collect();
    let ext: Vec<f64> = (i0 - half..i0 + len as i64 + half)
        .map(|k| f.eval(k as f64 * h))
        .collect();
    let values = (0..len)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            // x_i - z_j lands on lattice index i + half - j in `ext`.
            for (j, &w) in weights.iter().enumerate() {
                acc.add(w * ext[i + 2 * half as usize - j]);
            }
            acc.value()
        })
        .collect();
    GridFunction1D::new(h, i0, values)
}

/// Data expression: imbedded distributions combined in the algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataExpr {
    Zero,
    Imbed {
        dist: DistributionSpec,
    },
    /// Pointwise product of the imbedded factors, e.g. `ι(δ)²`.
    Product {
        factors: Vec<DataExpr>,
    },
    Sum {
        terms: Vec<DataExpr>,
    },
    Scaled {
        factor: f64,
        expr: Box<DataExpr>,
    },
}

impl Default for DataExpr {
    fn default() -> Self {
        DataExpr::Zero
    }
}

impl From<DistributionSpec> for DataExpr {
    fn from(dist: DistributionSpec) -> Self {
        DataExpr::Imbed { dist }
    }
}

impl DataExpr {
    pub fn delta(x0: f64) -> Self {
        DistributionSpec::Delta { x0 }.into()
    }

    pub fn delta_squared(x0: f64) -> Self {
        DataExpr::Product {
            factors: vec![Self::delta(x0), Self::delta(x0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DataExpr::Zero => Ok(()),
            DataExpr::Imbed { dist } => dist.validate(),
            DataExpr::Product { factors } | DataExpr::Sum { terms: factors } => {
                if factors.is_empty() {
                    return Err(Error::Config(
                        "empty product or sum in data expression".into(),
                    ));
                }
                factors.iter().try_for_each(Self::validate)
            }
            DataExpr::Scaled { factor, expr } => {
                if !factor.is_finite() {
                    return Err(Error::Config("non-finite factor in data expression".into()));
                }
                expr.validate()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DataExpr::Zero => true,
            DataExpr::Imbed { .. } => false,
            DataExpr::Product { factors } => factors.iter().any(Self::is_zero),
            DataExpr::Sum { terms } => terms.iter().all(Self::is_zero),
            DataExpr::Scaled { factor, expr } => *factor == 0.0 || expr.is_zero(),
        }
    }

    /// Member at `eps` on `x_i = (i + i0) h`.
    pub fn member(
        &self,
        moll: &Mollifier,
        eps: f64,
        h: f64,
        i0: i64,
        len: usize,
    ) -> Result<GridFunction1D<f64>> {
        match self {
            DataExpr::Zero => GridFunction1D::new(h, i0, vec![0.0; len]),
            DataExpr::Imbed { dist } => dist.convolve(moll, eps, h, i0, len),
            DataExpr::Product { factors } => {
                let mut acc = factors[0].member(moll, eps, h, i0, len)?;
                for f in &factors[1..] {
                    acc = acc.zip_with(&f.member(moll, eps, h, i0, len)?, |a, b| a * b)?;
                }
                Ok(acc)
            }
            DataExpr::Sum { terms } => {
                let mut acc = terms[0].member(moll, eps, h, i0, len)?;
                for t in &terms[1..] {
                    acc = acc.zip_with(&t.member(moll, eps, h, i0, len)?, |a, b| a + b)?;
                }
                Ok(acc)
            }
            DataExpr::Scaled { factor, expr } => {
                Ok(expr.member(moll, eps, h, i0, len)?.map(|v| factor * v))
            }
        }
    }

    /// Splits into `(regular, singular)` expressions. Products with a singular
    /// factor count as singular.
    pub fn split(&self) -> (DataExpr, DataExpr) {
        match self {
            DataExpr::Zero => (DataExpr::Zero, DataExpr::Zero),
            DataExpr::Imbed { dist } => {
                let (r, s) = dist.split();
                let wrap = |t: Vec<(f64, DistributionSpec)>| {
                    if t.is_empty() {
                        DataExpr::Zero
                    } else {
                        DistributionSpec::Combination { terms: t }.into()
                    }
                };
                (wrap(r), wrap(s))
            }
            DataExpr::Product { .. } => {
                if self.has_singular() {
                    (DataExpr::Zero, self.clone())
                } else {
                    (self.clone(), DataExpr::Zero)
                }
            }
            DataExpr::Sum { terms } => {
                let (r, s): (Vec<_>, Vec<_>) = terms.iter().map(Self::split).unzip();
                (Self::sum_of(r), Self::sum_of(s))
            }
            DataExpr::Scaled { factor, expr } => {
                let (r, s) = expr.split();
                (Self::scaled(*factor, r), Self::scaled(*factor, s))
            }
        }
    }

    fn sum_of(terms: Vec<DataExpr>) -> DataExpr {
        let terms: Vec<_> = terms.into_iter().filter(|t| !t.is_zero()).collect();
        if terms.is_empty() {
            DataExpr::Zero
        } else {
            DataExpr::Sum { terms }
        }
    }

    fn scaled(factor: f64, e: DataExpr) -> DataExpr {
        if e.is_zero() {
            DataExpr::Zero
        } else {
            DataExpr::Scaled {
                factor,
                expr: Box::new(e),
            }
        }
    }

    fn has_singular(&self) -> bool {
        match self {
            DataExpr::Zero => false,
            DataExpr::Imbed { dist } => !dist.split().1.is_empty(),
            DataExpr::Product { factors } | DataExpr::Sum { terms: factors } => {
                factors.iter().any(Self::has_singular)
            }
            DataExpr::Scaled { expr, .. } => expr.has_singular(),
        }
    }

    /// Order-zero point masses of a linear expression; `None` if the expression
    /// contains products.
    pub fn point_masses(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            DataExpr::Zero => Some(Vec::new()),
            DataExpr::Imbed { dist } => Some(dist.point_masses()),
            DataExpr::Product { .. } => None,
            DataExpr::Sum { terms } => {
                let mut out = Vec::new();
                for t in terms {
                    out.extend(t.point_masses()?);
                }
                Some(out)
            }
            DataExpr::Scaled { factor, expr } => Some(
                expr.point_masses()?
                    .into_iter()
                    .map(|(x, m)| (x, factor * m))
                    .collect(),
            ),
        }
    }

    /// Pointwise value of the unmollified function; `None` if any part is singular.
    pub fn eval_function(&self, x: f64) -> Option<f64> {
        match self {
            DataExpr::Zero => Some(0.0),
            DataExpr::Imbed { dist } => dist.eval_function(x),
            DataExpr::Product { factors } => factors.iter().map(|f| f.eval_function(x)).product(),
            DataExpr::Sum { terms } => terms.iter().map(|f| f.eval_function(x)).sum(),
            DataExpr::Scaled { factor, expr } => expr.eval_function(x).map(|v| factor * v),
        }
    }

    /// Unmollified samples on `x_i = (i + i0) h`.
    pub fn sample_function(&self, h: f64, i0: i64, len: usize) -> Result<GridFunction1D<f64>> {
        let values = (0..len)
            .map(|i| self.eval_function((i as i64 + i0) as f64 * h))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                Error::Domain("data with singular parts cannot be sampled pointwise".into())
            })?;
        GridFunction1D::new(h, i0, values)
    }

    /// Points carrying singular support or jumps.
    pub fn support_points(&self) -> Vec<f64> {
        match self {
            DataExpr::Zero => Vec::new(),
            DataExpr::Imbed { dist } => dist.support_points(),
            DataExpr::Product { factors } | DataExpr::Sum { terms: factors } => {
                factors.iter().flat_map(Self::support_points).collect()
            }
            DataExpr::Scaled { expr, .. } => expr.support_points(),
        }
    }
}

/// Geometry of imbedded data: the symmetric interval `[-half_width, half_width]`
/// sampled with spacing tied to ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGeometry {
    pub half_width: f64,
    pub points_per_eps: usize,
}

impl LineGeometry {
    /// `(h, n)` of the member at `eps`; the grid has `2n + 1` nodes.
    pub fn spacing(&self, eps: f64) -> (f64, usize) {
        spacing_for(eps, self.half_width, self.points_per_eps)
    }
}

/// Imbeds `expr` as a family on `ladder`, one grid per ε.
pub fn imbed(
    expr: &DataExpr,
    ladder: &EpsilonLadder,
    moll: &Mollifier,
    geometry: LineGeometry,
) -> Result<RepresentativeFamily<GridFunction1D<f64>>> {
    expr.validate()?;
    if let Some(x) = expr
        .support_points()
        .into_iter()
        .find(|x| x.abs() > geometry.half_width)
    {
        return Err(Error::Domain(format!(
            "data support point {x} lies outside [-{0}, {0}]",
            geometry.half_width
        )));
    }
    if (geometry.points_per_eps as f64) < MIN_POINTS_PER_EPS {
        return Err(Error::Resolution(format!(
            "points_per_eps = {} cannot resolve the mollifier",
            geometry.points_per_eps
        )));
    }
    RepresentativeFamily::try_build(ladder, Provenance::Imbedded, |_, eps| {
        let (h, n) = geometry.spacing(eps);
        expr.member(moll, eps, h, -(n as i64), 2 * n + 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moll(m: usize) -> Mollifier {
        Mollifier::build(m, DEFAULT_SAMPLES_PER_UNIT).unwrap()
    }

    #[test]
    fn coefficients_for_order_two() {
        let p = moll(2);
        let expected = [1.057_855_47, 0.0, -1.410_473_96, 0.0, 0.282_094_79];
        for (c, e) in p.coefficients().iter().zip(expected) {
            assert!((c - e).abs() < 1e-8, "{c} vs {e}");
        }
        assert!((p.condition() - 67.8).abs() < 0.5);
    }

    #[test]
    fn moments_vanish() {
        for m in 0..=3 {
            let p = moll(m);
            assert!(p.moment_defects()[0].abs() < 1e-12);
            for d in &p.moment_defects()[1..] {
                assert!(d.abs() < MOMENT_TOLERANCE);
            }
        }
    }

    #[test]
    fn ill_conditioned_system_is_rejected() {
        assert!(matches!(
            Mollifier::build(12, 64),
            Err(Error::Construction { .. })
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = moll(2);
        let d = 1e-5;
        for &x in &[-2.3, -0.4, 0.0, 0.7, 1.9, 8.5, 9.3] {
            for k in 1..=3 {
                let fd = (p.derivative(x + d, k - 1).unwrap()
                    - p.derivative(x - d, k - 1).unwrap())
                    / (2.0 * d);
                assert!(
                    (fd - p.derivative(x, k).unwrap()).abs() < 1e-6,
                    "x = {x}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn cumulative_is_antiderivative() {
        let p = moll(2);
        let d = 1e-5;
        for &y in &[-3.0, -1.1, -0.2, 0.3, 1.4, 2.7] {
            let fd = (p.cumulative(y + d) - p.cumulative(y - d)) / (2.0 * d);
            assert!((fd - p.eval(y)).abs() < 1e-8);
            let fd1 =
                (p.first_moment_cumulative(y + d) - p.first_moment_cumulative(y - d)) / (2.0 * d);
            assert!((fd1 - y * p.eval(y)).abs() < 1e-8);
        }
        assert_eq!(p.cumulative(-10.0), 0.0);
        assert!((p.cumulative(0.0) - 0.5).abs() < 1e-15);
        assert!((p.cumulative(9.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hat_imbedding_matches_discrete_convolution() {
        let p = moll(2);
        let hat = DistributionSpec::Hat {
            center: 0.1,
            half_width: 0.5,
            height: 2.0,
        };
        let (eps, h) = (0.125, 0.125 / 64.0);
        let g = hat.convolve(&p, eps, h, -640, 1281).unwrap();
        let w = (p.cutoff_radius() * eps / h).ceil() as i64;
        for i in (0..g.len()).step_by(37) {
            let x = g.x(i);
            let direct: f64 = (-w..=w)
                .map(|j| {
                    let z = j as f64 * h;
                    h / eps * p.eval(z / eps) * hat.eval_function(x - z).unwrap()
                })
                .sum();
            assert!(
                (direct - g.at(i)).abs() < 1e-5,
                "x = {x}: {direct} vs {}",
                g.at(i)
            );
        }
    }

    #[test]
    fn split_separates_point_parts() {
        let d = DistributionSpec::Combination {
            terms: vec![
                (2.0, DistributionSpec::Heaviside { x0: 0.0 }),
                (3.0, DistributionSpec::Delta { x0: 0.5 }),
                (1.0, DistributionSpec::DeltaDerivative { x0: 0.0, order: 1 }),
            ],
        };
        let (r, s) = d.split();
        assert_eq!(r.len(), 1);
        assert_eq!(s.len(), 2);
        assert_eq!(d.point_masses(), vec![(0.5, 3.0)]);
        let e = DataExpr::Sum {
            terms: vec![
                DataExpr::delta_squared(0.0),
                DistributionSpec::Heaviside { x0: 0.0 }.into(),
            ],
        };
        let (r, s) = e.split();
        assert!(r.eval_function(1.0).is_some());
        assert!(s.eval_function(1.0).is_none());
        assert_eq!(e.point_masses(), None);
    }

    #[test]
    fn support_outside_geometry_is_rejected() {
        let p = moll(1);
        let l = EpsilonLadder::geometric(0.25, 0.5, 4).unwrap();
        let g = LineGeometry {
            half_width: 1.0,
            points_per_eps: 8,
        };
        assert!(matches!(
            imbed(&DataExpr::delta(1.5), &l, &p, g),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coarse_grid_is_resolution_error() {
        let p = moll(1);
        assert!(matches!(
            p.scaled(0.01, 0.0, 0.1, -10, 21),
            Err(Error::Resolution(_))
        ));
    }
}
