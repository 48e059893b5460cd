//! Characteristic-grid solvers for `u_tt - u_xx = f(u) + h` on trapezoids.
//!
//! On a lattice with `Δx = Δt = h` the d'Alembert representation is evaluated
//! directly for the data part; the source part `½∬_{Δ(x,t)} g` obeys the exact
//! diamond identity `I(x,t+h) = I(x-h,t) + I(x+h,t) - I(x,t-h) + ½∬_◇ g`,
//! and the diamond integral is taken by the midpoint rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::family::{Provenance, RepresentativeFamily};
use crate::kernel::grid::{GridFunction1D, GridFunction2D, Sampled};
use crate::kernel::nonlinearity::Nonlinearity;
use crate::kernel::region::{Orientation, Trapezoid};
use crate::scalar::Real;

/// Fixed-point iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSettings {
    /// Relative sup-change that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed slab height; automatic when absent.
    pub slab_height: Option<f64>,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            slab_height: None,
        }
    }
}

impl PicardSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "Picard tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if let Some(s) = self.slab_height {
            if !(s > 0.0) {
                return Err(Error::Config(format!(
                    "slab height must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Sup-distances between successive iterates on one time slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabLog {
    pub t_start: f64,
    pub t_end: f64,
    /// `Lip_f · (t_end - t_start)²`
    pub contraction_bound: f64,
    pub distances: Vec<f64>,
}

impl SlabLog {
    /// Ratios of consecutive distances, skipping exact zeros.
    pub fn ratios(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PicardLog {
    pub slabs: Vec<SlabLog>,
}

impl PicardLog {
    pub fn sweeps(&self) -> usize {
        self.slabs.iter().map(|s| s.distances.len()).sum()
    }
}

/// One semilinear problem at fixed ε.
#[derive(Debug, Clone, Copy)]
pub struct WaveProblem<'a, T> {
    pub a: &'a GridFunction1D<T>,
    pub b: &'a GridFunction1D<T>,
    pub h: Option<&'a GridFunction2D<T>>,
    pub f: Nonlinearity,
    pub region: Trapezoid,
}

/// Zero grid function on the lattice the solvers return for data `a` and `region`.
pub fn solution_lattice<T: Real>(
    a: &GridFunction1D<T>,
    region: &Trapezoid,
) -> Result<GridFunction2D<T>> {
    let levels = level_count(a.h(), region)?;
    let j0 = match region.orientation {
        Orientation::Upper => 0,
        Orientation::Lower => -(levels as i64),
    };
    GridFunction2D::zeros(a.h(), a.origin_index(), j0, a.len(), levels + 1)
}

fn level_count(h: f64, region: &Trapezoid) -> Result<usize> {
    Ok((region.t_max / h - 1e-9).ceil().max(0.0) as usize)
}

fn check_data<T: Real>(
    a: &GridFunction1D<T>,
    b: &GridFunction1D<T>,
    region: &Trapezoid,
) -> Result<usize> {
    if !a.same_grid(b) {
        return Err(Error::Geometry(
            "initial position and velocity use different lattices".into(),
        ));
    }
    let slack = 1e-9 * a.h();
    if a.x_lo() > -region.kappa + slack || a.x_hi() < region.kappa - slack {
        return Err(Error::Domain(format!(
            "data cover [{}, {}] but the trapezoid base is [-{2}, {2}]",
            a.x_lo(),
            a.x_hi(),
            region.kappa
        )));
    }
    let levels = level_count(a.h(), region)?;
    if 2 * levels + 1 > a.len() {
        return Err(Error::Domain(
            "time horizon exceeds the data's domain of dependence".into(),
        ));
    }
    Ok(levels)
}

/// Mirror `t -> -t` for the lower half-plane: `(a, b, h)` becomes `(a, -b, h(·,-t))`.
struct Oriented<T> {
    b: Option<GridFunction1D<T>>,
    h: Option<GridFunction2D<T>>,
}

impl<T: Real> Oriented<T> {
    fn new(region: &Trapezoid, b: &GridFunction1D<T>, h: Option<&GridFunction2D<T>>) -> Self {
        match region.orientation {
            Orientation::Upper => Self { b: None, h: None },
            Orientation::Lower => Self {
                b: Some(b.map(|v| -v)),
                h: h.map(|g| g.mirrored_in_time()),
            },
        }
    }
}

fn check_source<T: Real>(h: &GridFunction2D<T>, lattice: &GridFunction2D<T>) -> Result<()> {
    if !h.same_grid(lattice) {
        return Err(Error::Geometry(
            "source term must live on the solution lattice of the data".into(),
        ));
    }
    Ok(())
}

/// Characteristic-grid state for the upper half-plane.
struct Characteristic<'a, T> {
    a: &'a GridFunction1D<T>,
    n: usize,
    levels: usize,
    h: f64,
}

impl<'a, T: Real> Characteristic<'a, T> {
    fn lattice(&self) -> GridFunction2D<T> {
        GridFunction2D::zeros(self.h, self.a.origin_index(), 0, self.n, self.levels + 1)
            .expect("valid shape")
    }

    /// Nodes `[j, n-1-j]` at level `j` lie in the data's domain of dependence.
    fn span(&self, j: usize) -> std::ops::RangeInclusive<usize> {
        j..=self.n - 1 - j
    }

    fn homogeneous(&self, b: &GridFunction1D<T>) -> GridFunction2D<T> {
        let big_b = b.antiderivative();
        let half = T::lit(0.5);
        let mut u = self.lattice();
        let av = self.a.values();
        for j in 0..=self.levels {
            let span = self.span(j);
            let row = u.row_mut(j);
            for i in span {
                row[i] = half * (av[i - j] + av[i + j]) + half * (big_b[i + j] - big_b[i - j]);
            }
        }
        u
    }

    /// Recomputes `I` on levels `j_start+1 ..= j_end` from `g`; levels up to
    /// `j_start` are kept.
    fn accumulate(
        &self,
        big_i: &mut GridFunction2D<T>,
        g: &GridFunction2D<T>,
        j_start: usize,
        j_end: usize,
    ) {
        let h2 = T::lit(self.h * self.h);
        for j in j_start + 1..=j_end {
            if j == 1 {
                // Backward triangle of (x, h), g linear in t.
                let (c0, c1) = (T::lit(1.0 / 3.0), T::lit(1.0 / 6.0));
                for i in self.span(1) {
                    let v = h2 * (c0 * g.at(i, 0) + c1 * g.at(i, 1));
                    big_i.set(i, 1, v);
                }
                continue;
            }
            for i in self.span(j) {
                let v = big_i.at(i - 1, j - 1) + big_i.at(i + 1, j - 1) - big_i.at(i, j - 2)
                    + h2 * g.at(i, j - 1);
                big_i.set(i, j, v);
            }
        }
    }
}

/// Linear solution `½(a(x-t)+a(x+t)) + ½∫b + ½∬h` on the characteristic lattice.
pub fn dalembert_linear<T: Real>(
    a: &GridFunction1D<T>,
    b: &GridFunction1D<T>,
    h: Option<&GridFunction2D<T>>,
    region: &Trapezoid,
) -> Result<GridFunction2D<T>> {
    let levels = check_data(a, b, region)?;
    if let Some(src) = h {
        check_source(src, &solution_lattice(a, region)?)?;
    }
    let flipped = Oriented::new(region, b, h);
    let b = flipped.b.as_ref().unwrap_or(b);
    let h = flipped.h.as_ref().or(h);
    let c = Characteristic {
        a,
        n: a.len(),
        levels,
        h: a.h(),
    };
    let mut u = c.homogeneous(b);
    if let Some(src) = h {
        let mut big_i = c.lattice();
        c.accumulate(&mut big_i, src, 0, levels);
        add_assign(&mut u, &big_i);
    }
    Ok(orient_back(u, region))
}

fn orient_back<T: Real>(u: GridFunction2D<T>, region: &Trapezoid) -> GridFunction2D<T> {
    match region.orientation {
        Orientation::Upper => u,
        Orientation::Lower => u.mirrored_in_time(),
    }
}

fn add_assign<T: Real>(u: &mut GridFunction2D<T>, v: &GridFunction2D<T>) {
    u.values_mut()
        .iter_mut()
        .zip(v.values())
        .for_each(|(a, &b)| *a += b);
}

/// Source of the fixed-point map, `g = fixed + nonlinear(i, j, u)`.
struct Source<'s, T, F> {
    fixed: Option<&'s GridFunction2D<T>>,
    nonlinear: F,
    lipschitz: f64,
}

fn picard_core<T: Real, F>(
    a: &GridFunction1D<T>,
    b: &GridFunction1D<T>,
    region: &Trapezoid,
    source: Source<'_, T, F>,
    settings: &PicardSettings,
) -> Result<(GridFunction2D<T>, PicardLog)>
where
    F: Fn(usize, usize, T) -> T + Sync,
{
    settings.validate()?;
    let levels = check_data(a, b, region)?;
    if let Some(src) = source.fixed {
        check_source(src, &solution_lattice(a, region)?)?;
    }
    let flipped = Oriented::new(region, b, source.fixed);
    let b = flipped.b.as_ref().unwrap_or(b);
    let fixed = flipped.h.as_ref().or(source.fixed);
    let c = Characteristic {
        a,
        n: a.len(),
        levels,
        h: a.h(),
    };

    let hom = c.homogeneous(b);
    let mut big_i = c.lattice();
    if let Some(src) = fixed {
        c.accumulate(&mut big_i, src, 0, levels);
    }
    let mut u = hom.clone();
    add_assign(&mut u, &big_i);

    let mut g = match fixed {
        Some(src) => src.clone(),
        None => c.lattice(),
    };
    let slabs = slab_bounds(levels, region.t_max, source.lipschitz, settings);
    // Rounding floor for single precision.
    let tol = settings.tol.max(64.0 * T::epsilon().as_f64());
    let mut log = PicardLog::default();
    let h = a.h();
    for (s, &(js, je)) in slabs.iter().enumerate() {
        let height = (je - js) as f64 * h;
        let mut slab = SlabLog {
            t_start: js as f64 * h,
            t_end: je as f64 * h,
            contraction_bound: source.lipschitz * height * height,
            distances: Vec::new(),
        };
        let mut converged = false;
        for _ in 0..settings.max_iter {
            let g_from = if js == 0 { 0 } else { js };
            for j in g_from..=je {
                let span = c.span(j);
                let (urow, grow) = (u.row(j), g.row_mut(j));
                let fixed_row = fixed.map(|f| f.row(j));
                for i in span {
                    let base = fixed_row.map_or(T::zero(), |r| r[i]);
                    grow[i] = base + (source.nonlinear)(i, j, urow[i]);
                }
            }
            c.accumulate(&mut big_i, &g, js, je);
            let mut dist = T::zero();
            let mut size = T::zero();
            for j in js + 1..=je {
                for i in c.span(j) {
                    let new = hom.at(i, j) + big_i.at(i, j);
                    dist = dist.max((new - u.at(i, j)).abs());
                    size = size.max(new.abs());
                    u.set(i, j, new);
                }
            }
            let (dist, size) = (dist.as_f64(), size.as_f64());
            slab.distances.push(dist);
            if dist <= tol * size || dist == 0.0 {
                converged = true;
                break;
            }
        }
        log.slabs.push(slab);
        if !converged {
            let last = log.slabs[s].distances.last().copied().unwrap_or(f64::NAN);
            return Err(Error::NonConvergence {
                slab: s,
                iterations: settings.max_iter,
                residual: last,
            });
        }
    }
    Ok((orient_back(u, region), log))
}

/// Level ranges `(j_start, j_end)` of the time slabs.
fn slab_bounds(
    levels: usize,
    t_max: f64,
    lipschitz: f64,
    settings: &PicardSettings,
) -> Vec<(usize, usize)> {
    if levels == 0 {
        return vec![(0, 0)];
    }
    let count = match settings.slab_height {
        Some(height) => (t_max / height - 1e-9).ceil().max(1.0) as usize,
        None if lipschitz * t_max * t_max >= 0.5 => {
            (t_max * (2.0 * lipschitz).sqrt()).ceil() as usize
        }
        None => 1,
    }
    .clamp(1, levels);
    let mut bounds = Vec::with_capacity(count);
    let mut js = 0;
    for k in 1..=count {
        let je = if k == count {
            levels
        } else {
            ((k * levels) as f64 / count as f64).floor() as usize
        };
        let je = je.max(js + 1).min(levels);
        bounds.push((js, je));
        js = je;
        if js == levels {
            break;
        }
    }
    bounds
}

/// Fixed point of `u ↦ L(a, b, f(u) + h)`, marching over slabs with
/// `Lip_f · T'² ≤ ½` when needed.
pub fn picard_semilinear<T: Real>(
    p: &WaveProblem<'_, T>,
    settings: &PicardSettings,
) -> Result<(GridFunction2D<T>, PicardLog)> {
    p.f.validate()?;
    let f = p.f;
    let source = Source {
        fixed: p.h,
        nonlinear: move |_, _, u: T| f.eval(u),
        lipschitz: f.lipschitz(),
    };
    picard_core(p.a, p.b, &p.region, source, settings)
}

/// Member-wise `picard_semilinear`; errors carry the ladder index.
pub fn solve_family(
    a: &RepresentativeFamily<GridFunction1D<f64>>,
    b: &RepresentativeFamily<GridFunction1D<f64>>,
    h: Option<&RepresentativeFamily<GridFunction2D<f64>>>,
    f: Nonlinearity,
    region: &Trapezoid,
    settings: &PicardSettings,
) -> Result<(RepresentativeFamily<GridFunction2D<f64>>, Vec<PicardLog>)> {
    if a.ladder() != b.ladder() || h.is_some_and(|h| h.ladder() != a.ladder()) {
        return Err(Error::Geometry(
            "data families use different ladders".into(),
        ));
    }
    let results = a
        .ladder()
        .values()
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| {
            let p = WaveProblem {
                a: a.member(k),
                b: b.member(k),
                h: h.map(|h| h.member(k)),
                f,
                region: *region,
            };
            picard_semilinear(&p, settings).map_err(|e| Error::member(k, eps, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, logs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        RepresentativeFamily::new(a.ladder().clone(), members, Provenance::Solved)?,
        logs,
    ))
}

/// Forward light cone `height · 1{|x - apex| ≤ |t|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub apex: f64,
    pub height: f64,
}

/// Piecewise-constant interior function built from cones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Plateau {
    pub cones: Vec<Cone>,
}

impl Plateau {
    pub fn single(apex: f64, height: f64) -> Self {
        Self {
            cones: vec![Cone { apex, height }],
        }
    }

    /// Plateau `½ Σ m_k 1{|x - x_k| < t}` of the linear solution with velocity
    /// `Σ m_k δ(x - x_k)`.
    pub fn from_point_masses(masses: &[(f64, f64)]) -> Self {
        Self {
            cones: masses
                .iter()
                .map(|&(apex, m)| Cone {
                    apex,
                    height: 0.5 * m,
                })
                .collect(),
        }
    }

    /// `(closed, open)`: sums over cones containing `(x, t)` in the closed and
    /// in the open sense; they differ only on cone boundaries.
    pub fn values(&self, x: f64, t: f64, h: f64) -> (f64, f64) {
        let tol = 1e-9 * h;
        let mut closed = 0.0;
        let mut open = 0.0;
        for c in &self.cones {
            let d = (x - c.apex).abs() - t.abs();
            if d <= tol {
                closed += c.height;
                if d < -tol {
                    open += c.height;
                }
            }
        }
        (closed, open)
    }

    /// Value with half weight on boundaries.
    pub fn eval(&self, x: f64, t: f64, h: f64) -> f64 {
        let (c, o) = self.values(x, t, h);
        0.5 * (c + o)
    }
}

/// Interior term driving the reference solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InteriorSource {
    /// Source `f(P + w)` with the plateau `P`; needs bounded `f`.
    Plateau { plateau: Plateau },
    /// Linear source `L · 1_Σ` for the solid cone `Σ` at `apex`.
    Limit { value: f64, apex: f64 },
}

/// Reference solution `w` with data `(r0, r1)` and the given interior source.
pub fn solve_reference_w(
    r0: &GridFunction1D<f64>,
    r1: &GridFunction1D<f64>,
    interior: &InteriorSource,
    f: Nonlinearity,
    region: &Trapezoid,
    settings: &PicardSettings,
) -> Result<(GridFunction2D<f64>, PicardLog)> {
    let h = r0.h();
    let x = |i: usize| (i as i64 + r0.origin_index()) as f64 * h;
    // The core solves on the upper half-plane; cones are symmetric in t.
    let t = |j: usize| j as f64 * h;
    match interior {
        InteriorSource::Plateau { plateau } => {
            if !f.is_bounded() {
                return Err(Error::Hypothesis(format!(
                    "reference solution with plateau source needs bounded f, got {}",
                    f.label()
                )));
            }
            f.validate()?;
            let nonlinear = move |i: usize, j: usize, w: f64| {
                let (c, o) = plateau.values(x(i), t(j), h);
                if c == o {
                    f.eval(c + w)
                } else {
                    0.5 * (f.eval(c + w) + f.eval(o + w))
                }
            };
            picard_core(
                r0,
                r1,
                region,
                Source {
                    fixed: None,
                    nonlinear,
                    lipschitz: f.lipschitz(),
                },
                settings,
            )
        }
        InteriorSource::Limit { value, apex } => {
            let cone = Plateau::single(*apex, *value);
            let mut src = solution_lattice(r0, region)?;
            for j in 0..src.nt() {
                let tj = src.t(j);
                for i in 0..src.nx() {
                    src.set(i, j, cone.eval(src.x(i), tj, h));
                }
            }
            let nonlinear = |_: usize, _: usize, _: f64| 0.0;
            picard_core(
                r0,
                r1,
                region,
                Source {
                    fixed: Some(&src),
                    nonlinear,
                    lipschitz: 0.0,
                },
                settings,
            )
        }
    }
}

/// Residual of the integral equation `u = L(a, b, f(u) + h)` at every node,
/// recomputed from scratch.
pub fn integral_equation_residual(
    p: &WaveProblem<'_, f64>,
    u: &GridFunction2D<f64>,
) -> Result<f64> {
    let mut g = u.map(|v| p.f.eval(v));
    if let Some(h) = p.h {
        g = g.zip_with(h, |a, b| a + b)?;
    }
    let lin = dalembert_linear(p.a, p.b, Some(&g), &p.region)?;
    Ok(lin
        .values()
        .iter()
        .zip(u.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(h: f64, kappa: f64, f: impl Fn(f64) -> f64) -> GridFunction1D<f64> {
        let n = (kappa / h).round() as usize;
        GridFunction1D::symmetric(h, n, f).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let z = line(0.05, 1.0, |_| 0.0);
        let r = Trapezoid::new(1.0, 0.5).unwrap();
        let u = dalembert_linear(&z, &z, None, &r).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_source_gives_half_t_squared() {
        let h = 0.05;
        let z = line(h, 1.0, |_| 0.0);
        let r = Trapezoid::new(1.0, 1.0).unwrap();
        let src = solution_lattice(&z, &r).unwrap().map(|_| 2.0);
        let u = dalembert_linear(&z, &z, Some(&src), &r).unwrap();
        for j in 0..u.nt() {
            for i in j..u.nx() - j {
                assert!((u.at(i, j) - u.t(j).powi(2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slab_bounds_cover_levels() {
        let s = PicardSettings::default();
        assert_eq!(slab_bounds(10, 1.0, 0.1, &s), vec![(0, 10)]);
        let b = slab_bounds(100, 1.5, 1.0, &s);
        assert_eq!(b.len(), 3);
        assert_eq!(b.first().unwrap().0, 0);
        assert_eq!(b.last().unwrap().1, 100);
        assert!(b.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn plateau_half_weight_on_boundary() {
        let p = Plateau::single(0.0, 0.5);
        assert_eq!(p.eval(0.0, 1.0, 0.1), 0.5);
        assert_eq!(p.eval(1.0, 1.0, 0.1), 0.25);
        assert_eq!(p.eval(1.2, 1.0, 0.1), 0.0);
    }

    #[test]
    fn lower_orientation_mirrors() {
        let h = 0.02;
        let a = line(h, 1.0, |x| (3.0 * x).sin());
        let b = line(h, 1.0, |x| x.cos());
        let up = Trapezoid::new(1.0, 0.6).unwrap();
        let u = dalembert_linear(&a, &b, None, &up).unwrap();
        let nb = b.map(|v| -v);
        let v = dalembert_linear(&a, &nb, None, &up.lower()).unwrap();
        assert_eq!(v.mirrored_in_time(), u);
    }
}
