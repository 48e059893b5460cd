//! Asymptotic verdicts on ε-families: order fits, negligibility, G∞ cell
//! classification, weak limits and L¹ convergence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::family::RepresentativeFamily;
use crate::kernel::grid::{GridFunction2D, Sampled};
use crate::kernel::ladder::MIN_LADDER_LEN;
use crate::kernel::region::{Cell, Region2, Trapezoid};
use crate::kernel::stencil::MultiIndex;
use crate::kernel::testfn::TestFunction;
use crate::scalar::Real;

/// Norms at or below this are treated as zero.
pub const ABSOLUTE_FLOOR: f64 = 1e-13;
/// Slack on fitted orders for G∞ boundedness.
pub const ORDER_TOLERANCE: f64 = 0.3;
/// Slack on fitted decay orders for negligibility.
pub const NEGLIGIBLE_SLACK: f64 = 0.2;
pub const DEFAULT_Q_MAX: f64 = 5.0;
pub const DEFAULT_MAX_ORDER: usize = 3;

/// Least-squares line `log N = order · log(1/ε) + intercept`; `order = p` means
/// growth like `ε^{-p}`, negative values mean decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub order: f64,
    pub intercept: f64,
    pub r2: f64,
    pub eps: Vec<f64>,
    pub norms: Vec<f64>,
}

impl AsymptoticFit {
    /// Decay order `q` with `N = O(ε^q)`.
    pub fn decay(&self) -> f64 {
        -self.order
    }

    /// Slopes between consecutive ladder points.
    pub fn local_orders(&self) -> Vec<f64> {
        local_orders(&self.eps, &self.norms)
    }
}

/// Result of fitting norms that may vanish identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitOutcome {
    IdenticallyZero,
    Fit(AsymptoticFit),
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&AsymptoticFit> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::IdenticallyZero => None,
        }
    }
}

fn local_orders(eps: &[f64], norms: &[f64]) -> Vec<f64> {
    eps.windows(2)
        .zip(norms.windows(2))
        .map(|(e, n)| (n[1] / n[0]).ln() / (e[0] / e[1]).ln())
        .collect()
}

fn least_squares(eps: &[f64], norms: &[f64]) -> AsymptoticFit {
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - order * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - order * x).powi(2))
        .sum();
    let scale = ys.iter().map(|y| y.abs()).fold(1.0, f64::max);
    let r2 = if ss_tot <= 1e-24 * scale * scale {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    AsymptoticFit {
        order,
        intercept,
        r2,
        eps: eps.to_vec(),
        norms: norms.to_vec(),
    }
}

/// Fits the order of `norms` over `eps`. All-zero input short-circuits; fewer
/// than four positive norms is an error.
pub fn fit_order(eps: &[f64], norms: &[f64]) -> Result<FitOutcome> {
    if eps.len() != norms.len() {
        return Err(Error::Geometry(format!(
            "{} eps values for {} norms",
            eps.len(),
            norms.len()
        )));
    }
    if norms.iter().any(|n| !(*n >= 0.0)) {
        return Err(Error::Domain(
            "norms must be non-negative and finite".into(),
        ));
    }
    if norms.iter().all(|&n| n == 0.0) {
        return Ok(FitOutcome::IdenticallyZero);
    }
    let (e, n): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(norms)
        .filter(|(_, &n)| n > 0.0)
        .map(|(e, n)| (*e, *n))
        .unzip();
    if e.len() < MIN_LADDER_LEN {
        return Err(Error::InsufficientData { positive: e.len() });
    }
    Ok(FitOutcome::Fit(least_squares(&e, &n)))
}

/// Growth or decay of one derivative's norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderOutcome {
    /// Below the absolute floor at the finest ladder value: faster than any power.
    Vanishing,
    Fit(AsymptoticFit),
}

/// Norm table and fit for one multi-index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub alpha: MultiIndex,
    pub norms: Vec<f64>,
    pub outcome: OrderOutcome,
}

impl OrderRow {
    /// Vanishing when the finest norm is below the floor, otherwise a fit of
    /// the norms clamped at the floor.
    pub fn from_norms(alpha: MultiIndex, eps: &[f64], norms: Vec<f64>) -> Self {
        let last = *norms.last().expect("non-empty ladder");
        let outcome = if last <= ABSOLUTE_FLOOR {
            OrderOutcome::Vanishing
        } else {
            let clamped: Vec<f64> = norms.iter().map(|n| n.max(ABSOLUTE_FLOOR)).collect();
            OrderOutcome::Fit(least_squares(eps, &clamped))
        };
        Self {
            alpha,
            norms,
            outcome,
        }
    }

    pub fn order(&self) -> Option<f64> {
        match &self.outcome {
            OrderOutcome::Vanishing => None,
            OrderOutcome::Fit(f) => Some(f.order),
        }
    }

    pub fn r2(&self) -> Option<f64> {
        match &self.outcome {
            OrderOutcome::Vanishing => None,
            OrderOutcome::Fit(f) => Some(f.r2),
        }
    }

    /// Below floor everywhere, or decaying at least like `ε^{q_max - 0.2}`.
    pub fn is_negligible(&self, q_max: f64) -> bool {
        match &self.outcome {
            OrderOutcome::Vanishing => true,
            OrderOutcome::Fit(f) => {
                self.norms.iter().all(|&n| n <= ABSOLUTE_FLOOR)
                    || f.decay() >= q_max - NEGLIGIBLE_SLACK
            }
        }
    }

    /// Local orders increasing at every step by a total of more than one:
    /// faster than any fixed power over the ladder.
    pub fn is_super_polynomial(&self) -> bool {
        let OrderOutcome::Fit(f) = &self.outcome else {
            return false;
        };
        let s = f.local_orders();
        s.len() >= 3
            && s.windows(2).all(|w| w[1] > w[0])
            && s[s.len() - 1] - s[0] > 1.0
            && s[s.len() - 1] > 0.0
    }
}

fn norm_rows<G: Sampled>(
    u: &RepresentativeFamily<G>,
    region: &G::Region,
    max_order: usize,
) -> Result<Vec<OrderRow>> {
    let eps = u.ladder().values();
    MultiIndex::up_to(max_order, G::HAS_TIME)
        .into_par_iter()
        .map(|alpha| {
            let norms = u
                .members()
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    m.derivative_sup(alpha, region)
                        .map(|v| v.as_f64())
                        .map_err(|e| Error::member(k, eps[k], e))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OrderRow::from_norms(alpha, eps, norms))
        })
        .collect()
}

/// Per-multi-index sup norms of finite-difference derivatives and their orders.
pub fn classify_moderate<G: Sampled>(
    u: &RepresentativeFamily<G>,
    region: &G::Region,
    max_order: usize,
) -> Result<Vec<OrderRow>> {
    norm_rows(u, region, max_order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegligibleVerdict {
    pub negligible: bool,
    pub q_max: f64,
    pub rows: Vec<OrderRow>,
}

/// Negligibility up to the tested order `q_max`.
pub fn classify_negligible<G: Sampled>(
    u: &RepresentativeFamily<G>,
    region: &G::Region,
    max_order: usize,
    q_max: f64,
) -> Result<NegligibleVerdict> {
    if !(q_max >= 3.0) {
        return Err(Error::Config(format!(
            "q_max must be at least 3, got {q_max}"
        )));
    }
    let rows = norm_rows(u, region, max_order)?;
    let negligible = rows.iter().all(|r| r.is_negligible(q_max));
    Ok(NegligibleVerdict {
        negligible,
        q_max,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellVerdict {
    Ginf { order: f64 },
    Negligible,
    ModerateNotGinf,
    NonModerate,
}

impl CellVerdict {
    pub fn label(&self) -> String {
        match self {
            CellVerdict::Ginf { order } => format!("ginf({order:.2})"),
            CellVerdict::Negligible => "negligible".into(),
            CellVerdict::ModerateNotGinf => "moderate_not_ginf".into(),
            CellVerdict::NonModerate => "non_moderate".into(),
        }
    }

    /// Flagged as singular: not G∞ and not negligible.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            CellVerdict::ModerateNotGinf | CellVerdict::NonModerate
        )
    }
}

/// Verdict from a row table.
pub fn cell_verdict(rows: &[OrderRow], q_max: f64) -> CellVerdict {
    if rows.iter().all(|r| r.is_negligible(q_max)) {
        return CellVerdict::Negligible;
    }
    if rows.iter().any(OrderRow::is_super_polynomial) {
        return CellVerdict::NonModerate;
    }
    let p_ref = rows
        .iter()
        .find(|r| r.alpha == MultiIndex::ZERO)
        .filter(|r| !r.is_negligible(q_max))
        .and_then(OrderRow::order)
        .unwrap_or(0.0)
        .max(0.0);
    let bounded = rows
        .iter()
        .filter(|r| !r.is_negligible(q_max))
        .all(|r| r.order().is_none_or(|p| p <= p_ref + ORDER_TOLERANCE));
    if bounded {
        CellVerdict::Ginf { order: p_ref }
    } else {
        CellVerdict::ModerateNotGinf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: Cell,
    /// Interior actually sampled: the cell shrunk by the coarsest spacing.
    pub interior: Cell,
    pub cone_distance: f64,
    pub rows: Vec<OrderRow>,
    pub verdict: CellVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub cell_side: f64,
    pub max_order: usize,
    pub q_max: f64,
    pub order_tolerance: f64,
    pub cells: Vec<CellReport>,
}

impl RegularityReport {
    pub fn singular_cells(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter(|c| c.verdict.is_singular())
    }
}

/// Square cells of side `cell_side` lying inside the trapezoid, ordered by
/// time then space.
pub fn cellize(region: &Trapezoid, cell_side: f64) -> Result<Vec<Cell>> {
    if !(cell_side > 0.0) {
        return Err(Error::Cellization(format!(
            "cell side must be positive, got {cell_side}"
        )));
    }
    let nt = (region.t_max / cell_side + 1e-9).floor() as usize;
    let nx = (2.0 * region.kappa / cell_side + 1e-9).floor() as usize;
    let mut cells = Vec::new();
    for j in 0..nt {
        let (t_lo, t_hi) = (j as f64 * cell_side, (j + 1) as f64 * cell_side);
        for i in 0..nx {
            let x_lo = -region.kappa + i as f64 * cell_side;
            let x_hi = x_lo + cell_side;
            let slack = 1e-9 * cell_side;
            if x_lo.abs().max(x_hi.abs()) <= region.kappa - t_hi + slack {
                cells.push(Cell::new(x_lo, x_hi, t_lo, t_hi)?);
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Cellization(
            "no cell fits inside the trapezoid".into(),
        ));
    }
    let cells = match region.orientation {
        crate::kernel::region::Orientation::Upper => cells,
        crate::kernel::region::Orientation::Lower => cells
            .into_iter()
            .map(|c| Cell::new(c.x_lo, c.x_hi, -c.t_hi, -c.t_lo))
            .collect::<Result<_>>()?,
    };
    Ok(cells)
}

/// Per-cell G∞ classification over the trapezoid.
pub fn ginf_report<T: Real>(
    u: &RepresentativeFamily<GridFunction2D<T>>,
    region: &Trapezoid,
    cell_side: f64,
    max_order: usize,
    q_max: f64,
) -> Result<RegularityReport> {
    let h_max = u.members().iter().map(|m| m.h()).fold(0.0, f64::max);
    // Interior shrunk by h must keep a full order-`max_order` stencil.
    let needed = (2 * max_order.div_ceil(2) + 2) as f64 * h_max;
    if cell_side < h_max || cell_side < needed {
        return Err(Error::Cellization(format!(
            "cell side {cell_side} too small for spacing {h_max} and derivative order {max_order}"
        )));
    }
    let cells = cellize(region, cell_side)?;
    let reports = cells
        .into_par_iter()
        .map(|cell| {
            let interior = cell
                .inset(h_max)
                .ok_or_else(|| Error::Cellization("cell vanishes after inset".into()))?;
            let rows = norm_rows(u, &Region2::Cell(interior), max_order)?;
            let verdict = cell_verdict(&rows, q_max);
            Ok(CellReport {
                cone_distance: cell.cone_distance(),
                cell,
                interior,
                rows,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularityReport {
        cell_side,
        max_order,
        q_max,
        order_tolerance: ORDER_TOLERANCE,
        cells: reports,
    })
}

/// Relative tolerance of the Cauchy tail criterion for weak limits.
pub const WEAK_REL_TOL: f64 = 1e-3;
pub const WEAK_ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationEntry {
    pub test: TestFunction,
    pub pairings: Vec<f64>,
    pub converged: bool,
    /// Finest pairing when converged.
    pub limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationVerdict {
    pub eps: Vec<f64>,
    pub entries: Vec<AssociationEntry>,
}

impl AssociationVerdict {
    pub fn converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }
}

/// Cauchy tail criterion on the last three values.
pub fn cauchy_tail(values: &[f64]) -> bool {
    if values.len() < 3 {
        return false;
    }
    let tail = &values[values.len() - 3..];
    let last = tail[2];
    let spread = tail.iter().fold(0.0f64, |m, v| m.max((v - last).abs()));
    spread <= WEAK_ABS_TOL || spread <= WEAK_REL_TOL * last.abs()
}

/// Pairings `⟨u_ε, ψ⟩` per test function and their weak limits.
pub fn weak_limit<G: Sampled>(
    u: &RepresentativeFamily<G>,
    tests: &[TestFunction],
) -> Result<AssociationVerdict> {
    let entries = tests
        .iter()
        .map(|psi| {
            let pairings = u
                .members()
                .par_iter()
                .map(|m| m.pairing(psi).map(|v| v.as_f64()))
                .collect::<Result<Vec<_>>>()?;
            let converged = cauchy_tail(&pairings);
            let limit = converged.then(|| *pairings.last().expect("non-empty"));
            Ok(AssociationEntry {
                test: *psi,
                pairings,
                converged,
                limit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AssociationVerdict {
        eps: u.ladder().values().to_vec(),
        entries,
    })
}

/// Absolute floor on consecutive L¹ distances.
pub const L1_FLOOR: f64 = 1e-10;
/// Minimal decay order of consecutive distances for L¹ convergence.
pub const L1_MIN_DECAY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct L1gReport<G> {
    pub converged: bool,
    /// `(ε_k, ε_{k+1}, ‖u_k - u_{k+1}‖)` with `u_k` averaged onto the finer grid.
    pub cauchy: Vec<(f64, f64, f64)>,
    pub fit: Option<AsymptoticFit>,
    /// Finest member.
    pub limit: G,
}

/// L¹ Cauchy table over consecutive ladder members. Each coarser member is
/// cell-averaged onto the finer member's lattice before taking the distance.
pub fn l1g_limit<G: Sampled>(
    u: &RepresentativeFamily<G>,
    region: &G::Region,
) -> Result<L1gReport<G>> {
    let eps = u.ladder().values();
    let m = u.members();
    let cauchy = (0..m.len() - 1)
        .into_par_iter()
        .map(|k| {
            let coarse = m[k].average_onto(&m[k + 1]);
            let diff = coarse.zip_with(&m[k + 1], |a, b| a - b)?;
            Ok((eps[k], eps[k + 1], diff.l1_on(region)?.as_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let dist: Vec<f64> = cauchy.iter().map(|c| c.2).collect();
    let last = *dist.last().expect("ladder has at least four members");
    let pair_eps: Vec<f64> = cauchy.iter().map(|c| c.0).collect();
    let fit = match fit_order(&pair_eps, &dist) {
        Ok(FitOutcome::Fit(f)) => Some(f),
        _ => None,
    };
    let converged = last <= L1_FLOOR
        || fit
            .as_ref()
            .is_some_and(|f| f.decay() >= L1_MIN_DECAY && last < dist[0]);
    Ok(L1gReport {
        converged,
        cauchy,
        fit,
        limit: m[m.len() - 1].clone(),
    })
}
