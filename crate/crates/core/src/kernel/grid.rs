use crate::error::{Error, Result};
use crate::kernel::region::{interval_slack, Interval, Region2};
use crate::kernel::stencil::{central_weights, half_width, MultiIndex};
use crate::kernel::testfn::TestFunction;
use crate::scalar::{CompensatedSum, Real};

/// Common surface of line and space-time grid functions, used by families
/// and the asymptotic estimators.
pub trait Sampled: Clone + Send + Sync {
    type Scalar: Real;
    type Region: Copy + Send + Sync + std::fmt::Debug;

    /// Whether the grid carries a time axis (mixed multi-indices apply).
    const HAS_TIME: bool;

    fn spacing(&self) -> f64;
    fn values(&self) -> &[Self::Scalar];
    fn values_mut(&mut self) -> &mut [Self::Scalar];

    /// Identical lattice (spacing, origin, shape).
    fn same_grid(&self, other: &Self) -> bool;

    /// Physical extent `[lo, hi]` per axis.
    fn extent(&self) -> Vec<(f64, f64)>;

    /// `max |d^alpha f|` over nodes in `region` whose stencil stays inside it.
    fn derivative_sup(&self, alpha: MultiIndex, region: &Self::Region) -> Result<Self::Scalar>;

    fn l1_on(&self, region: &Self::Region) -> Result<Self::Scalar>;

    /// `sum h^d f psi` over the grid.
    fn pairing(&self, psi: &TestFunction) -> Result<Self::Scalar>;

    /// Cell averages of the piecewise-linear interpolant of `self` over the
    /// cells centred on the nodes of `target`.
    fn average_onto(&self, target: &Self) -> Self;

    fn region_label(region: &Self::Region) -> String;

    fn sup_on(&self, region: &Self::Region) -> Result<Self::Scalar> {
        self.derivative_sup(MultiIndex::ZERO, region)
    }

    fn map(&self, f: impl Fn(Self::Scalar) -> Self::Scalar + Sync) -> Self {
        let mut out = self.clone();
        out.values_mut().iter_mut().for_each(|v| *v = f(*v));
        out
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Self::Scalar, Self::Scalar) -> Self::Scalar,
    ) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::Geometry(
                "grid functions live on different lattices".into(),
            ));
        }
        let mut out = self.clone();
        out.values_mut()
            .iter_mut()
            .zip(other.values())
            .for_each(|(a, &b)| *a = f(*a, b));
        Ok(out)
    }
}

/// Samples on the lattice `x_i = (i + i0) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D<T> {
    h: f64,
    i0: i64,
    values: Vec<T>,
}

impl<T: Real> GridFunction1D<T> {
    pub fn new(h: f64, i0: i64, values: Vec<T>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("spacing must be positive, got {h}")));
        }
        if values.is_empty() {
            return Err(Error::Domain(
                "grid function needs at least one sample".into(),
            ));
        }
        Ok(Self { h, i0, values })
    }

    pub fn from_fn(h: f64, i0: i64, len: usize, f: impl Fn(f64) -> T) -> Result<Self> {
        let values = (0..len).map(|i| f((i as i64 + i0) as f64 * h)).collect();
        Self::new(h, i0, values)
    }

    /// Grid on `[-n h, n h]` (`2n + 1` nodes).
    pub fn symmetric(h: f64, n: usize, f: impl Fn(f64) -> T) -> Result<Self> {
        Self::from_fn(h, -(n as i64), 2 * n + 1, f)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            h: self.h,
            i0: self.i0,
            values: vec![T::zero(); self.values.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin_index(&self) -> i64 {
        self.i0
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as i64 + self.i0) as f64 * self.h
    }

    pub fn at(&self, i: usize) -> T {
        self.values[i]
    }

    pub fn x_lo(&self) -> f64 {
        self.x(0)
    }

    pub fn x_hi(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    /// Index of the node at `x`, if `x` is (up to rounding) a lattice point of the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.h).round() as i64 - self.i0;
        if k < 0 || k as usize >= self.values.len() {
            return None;
        }
        ((self.x(k as usize) - x).abs() <= 1e-9 * self.h).then_some(k as usize)
    }

    /// Trapezoid-rule antiderivative `B_i = int_{x_0}^{x_i} f`, compensated.
    pub fn antiderivative(&self) -> Vec<T> {
        let half_h = T::lit(0.5 * self.h);
        let mut acc = CompensatedSum::new();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(T::zero());
        for w in self.values.windows(2) {
            acc.add(half_h * (w[0] + w[1]));
            out.push(acc.value());
        }
        out
    }

    /// Trapezoid rule over the whole grid.
    pub fn integral(&self) -> T {
        *self.antiderivative().last().expect("non-empty")
    }

    /// Central finite difference of order `k`; the result loses `half_width(k)`
    /// nodes on each side.
    pub fn fd_derivative(&self, alpha: MultiIndex) -> Result<Self> {
        if alpha.dt != 0 {
            return Err(Error::Domain("line grid has no time axis".into()));
        }
        let k = alpha.dx;
        let w = central_weights(k)?;
        let hw = half_width(k);
        if self.values.len() < 2 * k + 1 || self.values.len() <= 2 * hw {
            return Err(Error::Domain(format!(
                "grid with {} nodes too coarse for derivative order {k}",
                self.values.len()
            )));
        }
        let scale = T::lit(self.h.powi(k as i32)).recip();
        let values = (hw..self.values.len() - hw)
            .map(|i| {
                w.iter()
                    .map(|&(o, c)| T::lit(c) * self.values[(i as i64 + o) as usize])
                    .sum::<T>()
                    * scale
            })
            .collect();
        Self::new(self.h, self.i0 + hw as i64, values)
    }

    fn node_range(&self, region: &Interval) -> Option<(usize, usize)> {
        let s = interval_slack(self.h);
        let lo = ((region.lo - s) / self.h).ceil() as i64 - self.i0;
        let hi = ((region.hi + s) / self.h).floor() as i64 - self.i0;
        let lo = lo.max(0);
        let hi = hi.min(self.values.len() as i64 - 1);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    fn check_inside(&self, region: &Interval) -> Result<()> {
        let s = interval_slack(self.h);
        if region.lo < self.x_lo() - s || region.hi > self.x_hi() + s {
            return Err(Error::Domain(format!(
                "interval [{}, {}] exceeds grid extent [{}, {}]",
                region.lo,
                region.hi,
                self.x_lo(),
                self.x_hi()
            )));
        }
        Ok(())
    }
}

impl<T: Real> Sampled for GridFunction1D<T> {
    type Scalar = T;
    type Region = Interval;
    const HAS_TIME: bool = false;

    fn spacing(&self) -> f64 {
        self.h
    }

    fn values(&self) -> &[T] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.h == other.h && self.i0 == other.i0 && self.values.len() == other.values.len()
    }

    fn extent(&self) -> Vec<(f64, f64)> {
        vec![(self.x_lo(), self.x_hi())]
    }

    fn derivative_sup(&self, alpha: MultiIndex, region: &Interval) -> Result<T> {
        self.check_inside(region)?;
        if alpha.dt != 0 {
            return Err(Error::Domain("line grid has no time axis".into()));
        }
        let w = central_weights(alpha.dx)?;
        let hw = half_width(alpha.dx);
        let Some((lo, hi)) = self.node_range(region) else {
            return Ok(T::zero());
        };
        if hi < lo + 2 * hw {
            return Err(Error::Domain(format!(
                "interval holds too few nodes for derivative order {}",
                alpha.dx
            )));
        }
        let scale = T::lit(self.h.powi(alpha.dx as i32)).recip();
        let mut best = T::zero();
        for i in lo + hw..=hi - hw {
            let d = w
                .iter()
                .map(|&(o, c)| T::lit(c) * self.values[(i as i64 + o) as usize])
                .sum::<T>()
                * scale;
            best = best.max(d.abs());
        }
        Ok(best)
    }

    fn l1_on(&self, region: &Interval) -> Result<T> {
        self.check_inside(region)?;
        let Some((lo, hi)) = self.node_range(region) else {
            return Ok(T::zero());
        };
        Ok(trapezoid_abs(&self.values[lo..=hi], self.h))
    }

    fn pairing(&self, psi: &TestFunction) -> Result<T> {
        let mut acc = CompensatedSum::new();
        for (i, &v) in self.values.iter().enumerate() {
            let p = psi.eval1(self.x(i)).ok_or_else(|| {
                Error::Domain("two-dimensional test function on a line grid".into())
            })?;
            if p != 0.0 {
                acc.add(v * T::lit(p));
            }
        }
        Ok(acc.value() * T::lit(self.h))
    }

    fn average_onto(&self, target: &Self) -> Self {
        let xs: Vec<f64> = (0..target.len()).map(|i| target.x(i)).collect();
        let values = average_line(&self.values, self.x_lo(), self.h, &xs, target.h);
        Self {
            h: target.h,
            i0: target.i0,
            values,
        }
    }

    fn region_label(region: &Interval) -> String {
        format!("[{},{}]", region.lo, region.hi)
    }
}

/// Space-time samples on `x_i = (i + i0) h`, `t_j = (j + j0) h`, stored by time level.
/// The lattice is characteristic-aligned: the same spacing in `x` and `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D<T> {
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    nt: usize,
    values: Vec<T>,
}

impl<T: Real> GridFunction2D<T> {
    pub fn new(h: f64, i0: i64, j0: i64, nx: usize, nt: usize, values: Vec<T>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("spacing must be positive, got {h}")));
        }
        if nx == 0 || nt == 0 || values.len() != nx * nt {
            return Err(Error::Domain(format!(
                "value count {} does not match extents {nx} x {nt}",
                values.len()
            )));
        }
        Ok(Self {
            h,
            i0,
            j0,
            nx,
            nt,
            values,
        })
    }

    pub fn zeros(h: f64, i0: i64, j0: i64, nx: usize, nt: usize) -> Result<Self> {
        Self::new(h, i0, j0, nx, nt, vec![T::zero(); nx * nt])
    }

    pub fn from_fn(
        h: f64,
        i0: i64,
        j0: i64,
        nx: usize,
        nt: usize,
        f: impl Fn(f64, f64) -> T,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * nt);
        for j in 0..nt {
            let t = (j as i64 + j0) as f64 * h;
            for i in 0..nx {
                values.push(f((i as i64 + i0) as f64 * h, t));
            }
        }
        Self::new(h, i0, j0, nx, nt, values)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            h: self.h,
            i0: self.i0,
            j0: self.j0,
            nx: self.nx,
            nt: self.nt,
            values: vec![T::zero(); self.values.len()],
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn origin_index(&self) -> (i64, i64) {
        (self.i0, self.j0)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as i64 + self.i0) as f64 * self.h
    }

    pub fn t(&self, j: usize) -> f64 {
        (j as i64 + self.j0) as f64 * self.h
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[j * self.nx + i] = v;
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Reflection `t -> -t`.
    pub fn mirrored_in_time(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in (0..self.nt).rev() {
            values.extend_from_slice(self.row(j));
        }
        Self {
            h: self.h,
            i0: self.i0,
            j0: -(self.j0 + self.nt as i64 - 1),
            nx: self.nx,
            nt: self.nt,
            values,
        }
    }

    /// Central finite difference `d^alpha`; loses `half_width` nodes per side on
    /// each differentiated axis.
    pub fn fd_derivative(&self, alpha: MultiIndex) -> Result<Self> {
        let (wx, wt) = (central_weights(alpha.dx)?, central_weights(alpha.dt)?);
        let (hx, ht) = (half_width(alpha.dx), half_width(alpha.dt));
        if self.nx < 2 * alpha.dx + 1 || self.nt < 2 * alpha.dt + 1 {
            return Err(Error::Domain(format!(
                "grid {}x{} too coarse for derivative {alpha}",
                self.nx, self.nt
            )));
        }
        let (nx, nt) = (self.nx - 2 * hx, self.nt - 2 * ht);
        let scale = T::lit(self.h.powi(alpha.order() as i32)).recip();
        let mut values = Vec::with_capacity(nx * nt);
        for j in ht..self.nt - ht {
            for i in hx..self.nx - hx {
                values.push(self.stencil_at(wx, wt, i, j) * scale);
            }
        }
        Self::new(
            self.h,
            self.i0 + hx as i64,
            self.j0 + ht as i64,
            nx,
            nt,
            values,
        )
    }

    #[inline]
    fn stencil_at(&self, wx: &[(i64, f64)], wt: &[(i64, f64)], i: usize, j: usize) -> T {
        let mut acc = T::zero();
        for &(ot, ct) in wt {
            let row = (j as i64 + ot) as usize * self.nx;
            for &(ox, cx) in wx {
                acc += T::lit(ct * cx) * self.values[row + (i as i64 + ox) as usize];
            }
        }
        acc
    }

    fn check_inside(&self, region: &Region2) -> Result<()> {
        let (xl, xh, tl, th) = region.bounding_box();
        let s = interval_slack(self.h);
        if xl < self.x(0) - s
            || xh > self.x(self.nx - 1) + s
            || tl < self.t(0) - s
            || th > self.t(self.nt - 1) + s
        {
            return Err(Error::Domain(format!(
                "region {} exceeds grid extent [{}, {}] x [{}, {}]",
                region.label(),
                self.x(0),
                self.x(self.nx - 1),
                self.t(0),
                self.t(self.nt - 1)
            )));
        }
        Ok(())
    }

    /// Per time level, the contiguous node range inside the (convex) region.
    fn region_rows(&self, region: &Region2) -> Vec<(usize, usize, usize)> {
        let (xl, xh, tl, th) = region.bounding_box();
        let s = interval_slack(self.h);
        let j_lo = (((tl - s) / self.h).ceil() as i64 - self.j0).max(0);
        let j_hi = (((th + s) / self.h).floor() as i64 - self.j0).min(self.nt as i64 - 1);
        let i_lo = (((xl - s) / self.h).ceil() as i64 - self.i0).max(0);
        let i_hi = (((xh + s) / self.h).floor() as i64 - self.i0).min(self.nx as i64 - 1);
        let mut rows = Vec::new();
        if j_lo > j_hi || i_lo > i_hi {
            return rows;
        }
        for j in j_lo as usize..=j_hi as usize {
            let t = self.t(j);
            let mut first = None;
            let mut last = None;
            for i in i_lo as usize..=i_hi as usize {
                if region.contains(self.x(i), t, self.h) {
                    if first.is_none() {
                        first = Some(i);
                    }
                    last = Some(i);
                } else if first.is_some() {
                    break;
                }
            }
            if let (Some(a), Some(b)) = (first, last) {
                rows.push((j, a, b));
            }
        }
        rows
    }

    /// Bilinear interpolant at `(x, t)`; `None` outside the lattice.
    pub fn interpolate(&self, x: f64, t: f64) -> Option<T> {
        let s = (x / self.h) - self.i0 as f64;
        let r = (t / self.h) - self.j0 as f64;
        let tol = 1e-9;
        if s < -tol || r < -tol || s > (self.nx - 1) as f64 + tol || r > (self.nt - 1) as f64 + tol
        {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(self.nx.saturating_sub(2));
        let j = (r.floor().max(0.0) as usize).min(self.nt.saturating_sub(2));
        let (fx, ft) = (
            (s - i as f64).clamp(0.0, 1.0),
            (r - j as f64).clamp(0.0, 1.0),
        );
        let at = |i: usize, j: usize| self.at(i.min(self.nx - 1), j.min(self.nt - 1));
        let (fx, ft) = (T::lit(fx), T::lit(ft));
        let one = T::one();
        let lower = at(i, j) * (one - fx) + at(i + 1, j) * fx;
        let upper = at(i, j + 1) * (one - fx) + at(i + 1, j + 1) * fx;
        Some(lower * (one - ft) + upper * ft)
    }

    /// Restriction to the nodes inside `region`; everything else set to zero.
    pub fn masked(&self, region: &Region2) -> Self {
        let mut out = self.zeros_like();
        for (j, a, b) in self.region_rows(region) {
            out.row_mut(j)[a..=b].copy_from_slice(&self.row(j)[a..=b]);
        }
        out
    }
}

impl<T: Real> Sampled for GridFunction2D<T> {
    type Scalar = T;
    type Region = Region2;
    const HAS_TIME: bool = true;

    fn spacing(&self) -> f64 {
        self.h
    }

    fn values(&self) -> &[T] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.h == other.h
            && self.i0 == other.i0
            && self.j0 == other.j0
            && self.nx == other.nx
            && self.nt == other.nt
    }

    fn extent(&self) -> Vec<(f64, f64)> {
        vec![
            (self.x(0), self.x(self.nx - 1)),
            (self.t(0), self.t(self.nt - 1)),
        ]
    }

    fn derivative_sup(&self, alpha: MultiIndex, region: &Region2) -> Result<T> {
        self.check_inside(region)?;
        let (wx, wt) = (central_weights(alpha.dx)?, central_weights(alpha.dt)?);
        let (hx, ht) = (half_width(alpha.dx) as i64, half_width(alpha.dt) as i64);
        let scale = T::lit(self.h.powi(alpha.order() as i32)).recip();
        let rows = self.region_rows(region);
        let mut best = T::zero();
        for &(j, a, b) in &rows {
            let (jl, jh) = (j as i64 - ht, j as i64 + ht);
            if jl < 0 || jh >= self.nt as i64 {
                continue;
            }
            for i in a..=b {
                let (il, ih) = (i as i64 - hx, i as i64 + hx);
                if il < 0 || ih >= self.nx as i64 {
                    continue;
                }
                let corners_inside =
                    [(il, jl), (il, jh), (ih, jl), (ih, jh)]
                        .iter()
                        .all(|&(ci, cj)| {
                            region.contains(self.x(ci as usize), self.t(cj as usize), self.h)
                        });
                if !corners_inside {
                    continue;
                }
                best = best.max((self.stencil_at(wx, wt, i, j) * scale).abs());
            }
        }
        Ok(best)
    }

    fn l1_on(&self, region: &Region2) -> Result<T> {
        self.check_inside(region)?;
        let rows = self.region_rows(region);
        let line: Vec<T> = rows
            .iter()
            .map(|&(j, a, b)| trapezoid_abs(&self.row(j)[a..=b], self.h))
            .collect();
        // Trapezoid rule across time levels.
        let n = line.len();
        if n < 2 {
            return Ok(T::zero());
        }
        let mut acc = CompensatedSum::new();
        for (k, &v) in line.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc.add(T::lit(w) * v);
        }
        Ok(acc.value() * T::lit(self.h))
    }

    fn pairing(&self, psi: &TestFunction) -> Result<T> {
        let mut acc = CompensatedSum::new();
        for j in 0..self.nt {
            let t = self.t(j);
            for i in 0..self.nx {
                let p = psi.eval2(self.x(i), t).ok_or_else(|| {
                    Error::Domain("line test function on a space-time grid".into())
                })?;
                if p != 0.0 {
                    acc.add(self.at(i, j) * T::lit(p));
                }
            }
        }
        Ok(acc.value() * T::lit(self.h * self.h))
    }

    fn average_onto(&self, target: &Self) -> Self {
        let xs: Vec<f64> = (0..target.nx).map(|i| target.x(i)).collect();
        let ts: Vec<f64> = (0..target.nt).map(|j| target.t(j)).collect();
        // Average along x on every source level, then along t per target column.
        let mut partial = Vec::with_capacity(self.nt * target.nx);
        for j in 0..self.nt {
            partial.extend(average_line(self.row(j), self.x(0), self.h, &xs, target.h));
        }
        let mut values = vec![T::zero(); target.nx * target.nt];
        let mut column = vec![T::zero(); self.nt];
        for i in 0..target.nx {
            for j in 0..self.nt {
                column[j] = partial[j * target.nx + i];
            }
            let avg = average_line(&column, self.t(0), self.h, &ts, target.h);
            for (j, v) in avg.into_iter().enumerate() {
                values[j * target.nx + i] = v;
            }
        }
        Self {
            h: target.h,
            i0: target.i0,
            j0: target.j0,
            nx: target.nx,
            nt: target.nt,
            values,
        }
    }

    fn region_label(region: &Region2) -> String {
        region.label()
    }
}

fn trapezoid_abs<T: Real>(v: &[T], h: f64) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let mut acc = CompensatedSum::new();
    for &x in v {
        acc.add(x.abs());
    }
    let ends = (v[0].abs() + v[v.len() - 1].abs()) * T::lit(0.5);
    (acc.value() - ends) * T::lit(h)
}

/// Averages of the piecewise-linear interpolant of `values` (nodes `x0 + k h`)
/// over `[c - w/2, c + w/2]` for each centre `c`, clipped to the sampled range.
fn average_line<T: Real>(values: &[T], x0: f64, h: f64, centres: &[f64], w: f64) -> Vec<T> {
    let n = values.len();
    if n == 1 {
        return vec![values[0]; centres.len()];
    }
    let mut prefix = Vec::with_capacity(n);
    let mut acc = CompensatedSum::new();
    prefix.push(T::zero());
    for k in 1..n {
        acc.add(T::lit(0.5 * h) * (values[k - 1] + values[k]));
        prefix.push(acc.value());
    }
    let x_end = x0 + (n - 1) as f64 * h;
    let primitive = |x: f64| -> T {
        let x = x.clamp(x0, x_end);
        let s = (x - x0) / h;
        let k = (s.floor() as usize).min(n - 2);
        let d = x - (x0 + k as f64 * h);
        let slope = (values[k + 1] - values[k]) / T::lit(h);
        prefix[k] + T::lit(d) * (values[k] + T::lit(0.5 * d) * slope)
    };
    centres
        .iter()
        .map(|&c| {
            let (a, b) = ((c - 0.5 * w).max(x0), (c + 0.5 * w).min(x_end));
            if b <= a {
                let k = (((c - x0) / h).round().max(0.0) as usize).min(n - 1);
                values[k]
            } else {
                (primitive(b) - primitive(a)) / T::lit(b - a)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::region::{Cell, Trapezoid};

    fn trap(kappa: f64, t: f64) -> Region2 {
        Trapezoid::new(kappa, t).unwrap().into()
    }

    fn rect(h: f64, kappa: f64, t_max: f64, f: impl Fn(f64, f64) -> f64) -> GridFunction2D<f64> {
        let n = (kappa / h).round() as usize;
        let nt = (t_max / h).round() as usize + 1;
        GridFunction2D::from_fn(h, -(n as i64), 0, 2 * n + 1, nt, f).unwrap()
    }

    #[test]
    fn sup_norm_examples() {
        let c = rect(0.05, 1.0, 0.5, |_, _| 3.0);
        assert_eq!(c.sup_on(&trap(1.0, 0.5)).unwrap(), 3.0);
        let z = rect(0.05, 1.0, 0.5, |_, _| 0.0);
        assert_eq!(z.sup_on(&trap(1.0, 0.5)).unwrap(), 0.0);
        let x = rect(0.05, 1.0, 0.5, |x, _| x);
        assert!((x.sup_on(&trap(1.0, 0.0)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_outside_grid_is_domain_error() {
        let g = rect(0.1, 1.0, 0.5, |_, _| 1.0);
        assert!(matches!(g.sup_on(&trap(2.0, 0.5)), Err(Error::Domain(_))));
        assert!(matches!(g.l1_on(&trap(1.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn l1_norm_of_constant_is_trapezoid_area() {
        for &h in &[0.1, 0.05, 0.01] {
            let g = rect(h, 1.0, 1.0, |_, _| 1.0);
            let a = g.l1_on(&trap(1.0, 1.0)).unwrap();
            assert!((a - 1.0).abs() <= 2.0 * h, "h = {h}: {a}");
        }
        let z = rect(0.1, 1.0, 1.0, |_, _| 0.0);
        assert_eq!(z.l1_on(&trap(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn fd_derivative_examples() {
        let h = 0.01;
        let c = GridFunction1D::<f64>::symmetric(h, 100, |_| 2.5).unwrap();
        for k in 1..=3 {
            assert!(c
                .fd_derivative(MultiIndex::x(k))
                .unwrap()
                .values()
                .iter()
                .all(|v| v.abs() < 1e-9));
        }
        let q = GridFunction1D::<f64>::symmetric(h, 100, |x| x * x).unwrap();
        let d2 = q.fd_derivative(MultiIndex::x(2)).unwrap();
        assert!(d2.values().iter().all(|v| (v - 2.0).abs() < 1e-8));
        // Taylor remainder: |D f - f'| <= h^2/6 sup|f'''|, here sup|cos| = 1.
        let s = GridFunction1D::<f64>::symmetric(h, 100, f64::sin).unwrap();
        let d1 = s.fd_derivative(MultiIndex::x(1)).unwrap();
        for i in 0..d1.len() {
            assert!((d1.at(i) - d1.x(i).cos()).abs() <= h * h / 6.0 + 1e-13);
        }
        assert!(GridFunction1D::<f64>::symmetric(h, 1, f64::sin)
            .unwrap()
            .fd_derivative(MultiIndex::x(3))
            .is_err());
    }

    #[test]
    fn fd_derivative_2d_mixed() {
        let g = rect(0.01, 1.0, 0.5, |x, t| x * x * t);
        let d = g.fd_derivative(MultiIndex::new(2, 1)).unwrap();
        assert!(d.values().iter().all(|v| (v - 2.0).abs() < 1e-6));
        assert_eq!(d.nx(), g.nx() - 2);
        assert_eq!(d.nt(), g.nt() - 2);
    }

    #[test]
    fn derivative_sup_keeps_stencil_inside_region() {
        // Jump outside the cell must not leak into the derivative.
        let g = rect(0.01, 1.0, 1.0, |x, _| if x > 0.5 { 1.0 } else { 0.0 });
        let cell = Region2::Cell(Cell::new(-0.5, 0.5, 0.2, 0.4).unwrap());
        assert_eq!(g.derivative_sup(MultiIndex::new(1, 0), &cell).unwrap(), 0.0);
    }

    #[test]
    fn mirror_reflects_time() {
        let g = rect(0.1, 1.0, 0.5, |x, t| x + 10.0 * t);
        let m = g.mirrored_in_time();
        assert!((m.t(0) + 0.5).abs() < 1e-12);
        assert!((m.at(3, 0) - g.at(3, g.nt() - 1)).abs() == 0.0);
        assert_eq!(m.mirrored_in_time(), g);
    }

    #[test]
    fn averaging_preserves_linear_functions() {
        let fine = GridFunction1D::<f64>::symmetric(0.01, 200, |x| 3.0 * x + 1.0).unwrap();
        let coarse = GridFunction1D::<f64>::symmetric(0.1, 19, |_| 0.0).unwrap();
        let avg = fine.average_onto(&coarse);
        for i in 0..avg.len() {
            assert!((avg.at(i) - (3.0 * avg.x(i) + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_is_trapezoid() {
        let g = GridFunction1D::<f64>::symmetric(0.001, 1000, |x| x * x).unwrap();
        assert!((g.integral() - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn pairing_with_bump() {
        let g = GridFunction1D::<f64>::symmetric(0.001, 2000, |_| 1.0).unwrap();
        let psi = TestFunction::Bump1 {
            center: 0.0,
            radius: 1.0,
        };
        // int exp(1 - 1/(1-x^2)) dx over (-1, 1)
        assert!((g.pairing(&psi).unwrap() - 1.206_900_322_437_874).abs() < 1e-8);
    }
}
