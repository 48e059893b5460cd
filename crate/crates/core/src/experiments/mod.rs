//! Reproducible experiments returning pass/fail evidence.

mod scenarios;
mod spec;

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use spec::{
    GinfSetup, LadderSpec, MollifierSpec, Params, PerturbTarget, Perturbation, RegionSpec,
    ScenarioId, ScenarioSpec, SourceSpec, Tolerances,
};

use crate::asymptotics::{cauchy_tail, fit_order, AsymptoticFit, FitOutcome};
use crate::error::Result;
use crate::kernel::family::{GeneralizedScalar, RepresentativeFamily};
use crate::kernel::grid::{GridFunction1D, Sampled};

/// One thresholded comparison inside a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(with = "lenient_f64")]
    pub value: f64,
    #[serde(with = "lenient_f64")]
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// `value ≤ threshold`
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    /// `value ≥ threshold`
    pub fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        let v = if passed { 1.0 } else { 0.0 };
        Self {
            name: name.into(),
            passed,
            value: v,
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

/// Non-finite values as the strings `inf`, `-inf`, `NaN`, which JSON lacks.
mod lenient_f64 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(D::Error::custom),
        }
    }
}

/// One CSV row of evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub scenario: String,
    /// Empty for ladder-wide summary rows.
    pub epsilon: Option<f64>,
    pub region_or_cell: String,
    pub alpha: String,
    pub norm_kind: String,
    pub norm_value: f64,
    /// Growth order `p` of `ε^{-p}`; negative values mean decay.
    pub fit_slope: Option<f64>,
    pub fit_r2: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: ScenarioId,
    pub label: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub rows: Vec<EvidenceRow>,
    pub metadata: BTreeMap<String, String>,
    /// Wall-clock seconds; excluded from deterministic outputs.
    pub runtime_s: f64,
    pub spec: ScenarioSpec,
}

impl ScenarioResult {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Validates and runs one scenario.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut ev = scenarios::Evidence::new(spec);
    match spec.id {
        ScenarioId::SmoothConsistency => scenarios::smooth_consistency(spec, &mut ev)?,
        ScenarioId::ContinuousAssociation => scenarios::continuous_association(spec, &mut ev)?,
        ScenarioId::DeltaWave => scenarios::delta_wave(spec, &mut ev)?,
        ScenarioId::DeltaSquared => scenarios::delta_squared(spec, &mut ev)?,
        ScenarioId::ConeRegularity => scenarios::cone_regularity(spec, &mut ev)?,
        ScenarioId::RegularitySplitA => scenarios::regularity_split(spec, SplitCase::A, &mut ev)?,
        ScenarioId::RegularitySplitB => scenarios::regularity_split(spec, SplitCase::B, &mut ev)?,
        ScenarioId::NegligiblePerturbation => scenarios::negligible_perturbation(spec, &mut ev)?,
        ScenarioId::SuperpositionStability => scenarios::superposition_stability(spec, &mut ev)?,
        ScenarioId::MClassification => scenarios::m_classification(spec, &mut ev)?,
    }
    Ok(ev.finish(start.elapsed().as_secs_f64()))
}

/// Which half of the singular-part dichotomy a regularity split covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCase {
    /// Bounded `f`, finite `M`.
    A,
    /// `f` with a limit at infinity, diverging `M`.
    B,
}

/// Relative floor below which `M_ε` counts as zero.
pub const M_RELATIVE_FLOOR: f64 = 1e-12;
/// Minimal growth order for a divergence verdict.
pub const M_MIN_DIVERGENCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MClass {
    FiniteLimit { value: f64 },
    Diverging { order: f64 },
    Oscillating,
}

impl MClass {
    pub fn label(&self) -> String {
        match self {
            MClass::FiniteLimit { value } => format!("finite_limit({value:.6})"),
            MClass::Diverging { order } => format!("diverging({order:.4})"),
            MClass::Oscillating => "oscillating".into(),
        }
    }
}

/// The generalized constant `M_ε = ½∫s_{1ε}` and its classification.
#[derive(Debug, Clone, PartialEq)]
pub struct MConstant {
    pub value: GeneralizedScalar,
    pub class: MClass,
    /// Growth fit of `|M_ε|`, when all values are non-zero.
    pub fit: Option<AsymptoticFit>,
    /// Decay order of `|M_ε|` for a zero limit; infinite when every value
    /// lies below the relative floor.
    pub zero_decay: Option<f64>,
}

/// Trapezoid quadrature of `½ s1` per member, then classification: below the
/// relative floor everywhere, Cauchy tail, monotone growth, or oscillation.
pub fn compute_m(s1: &RepresentativeFamily<GridFunction1D<f64>>) -> Result<MConstant> {
    let eps = s1.ladder().values();
    let vals: Vec<f64> = s1.members().iter().map(|m| 0.5 * m.integral()).collect();
    let scale: Vec<f64> = s1
        .members()
        .iter()
        .map(|m| 0.5 * m.map(f64::abs).integral())
        .collect();
    let value = GeneralizedScalar::new(
        s1.ladder().clone(),
        vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    )?;
    let moduli: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let fit = match fit_order(eps, &moduli) {
        Ok(FitOutcome::Fit(f)) => Some(f),
        _ => None,
    };
    let negligible = vals
        .iter()
        .zip(&scale)
        .all(|(v, s)| v.abs() <= M_RELATIVE_FLOOR * s);
    let (class, zero_decay) = if negligible {
        (MClass::FiniteLimit { value: 0.0 }, Some(f64::INFINITY))
    } else if cauchy_tail(&vals) {
        let last = *vals.last().expect("non-empty ladder");
        let tail_zero =
            last.abs() <= M_RELATIVE_FLOOR * scale.last().copied().unwrap_or(0.0) || last == 0.0;
        (
            MClass::FiniteLimit { value: last },
            tail_zero.then(|| fit.as_ref().map_or(f64::INFINITY, |f| f.decay())),
        )
    } else if let Some(f) = fit
        .as_ref()
        .filter(|f| f.decay() >= M_MIN_DIVERGENCE && moduli.windows(2).all(|w| w[1] < w[0]))
    {
        (MClass::FiniteLimit { value: 0.0 }, Some(f.decay()))
    } else {
        let increasing = moduli.windows(2).all(|w| w[1] > w[0]);
        match &fit {
            Some(f) if increasing && f.order >= M_MIN_DIVERGENCE => {
                (MClass::Diverging { order: f.order }, None)
            }
            _ => (MClass::Oscillating, None),
        }
    };
    Ok(MConstant {
        value,
        class,
        fit,
        zero_decay,
    })
}
