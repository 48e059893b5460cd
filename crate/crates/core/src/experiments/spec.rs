use serde::{Deserialize, Serialize};

use crate::asymptotics::{DEFAULT_MAX_ORDER, DEFAULT_Q_MAX};
use crate::error::{Error, Result};
use crate::kernel::ladder::EpsilonLadder;
use crate::kernel::nonlinearity::Nonlinearity;
use crate::kernel::region::Trapezoid;
use crate::kernel::testfn::TestFunction;
use crate::mollify::{
    DataExpr, DistributionSpec, SmoothFn, DEFAULT_CUTOFF_RADIUS, DEFAULT_MOMENT_ORDER,
    DEFAULT_SAMPLES_PER_UNIT,
};
use crate::wave::PicardSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    SmoothConsistency,
    ContinuousAssociation,
    DeltaWave,
    DeltaSquared,
    ConeRegularity,
    RegularitySplitA,
    RegularitySplitB,
    NegligiblePerturbation,
    SuperpositionStability,
    MClassification,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 10] = [
        ScenarioId::SmoothConsistency,
        ScenarioId::ContinuousAssociation,
        ScenarioId::DeltaWave,
        ScenarioId::DeltaSquared,
        ScenarioId::ConeRegularity,
        ScenarioId::RegularitySplitA,
        ScenarioId::RegularitySplitB,
        ScenarioId::NegligiblePerturbation,
        ScenarioId::SuperpositionStability,
        ScenarioId::MClassification,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::SmoothConsistency => "smooth_consistency",
            ScenarioId::ContinuousAssociation => "continuous_association",
            ScenarioId::DeltaWave => "delta_wave",
            ScenarioId::DeltaSquared => "delta_squared",
            ScenarioId::ConeRegularity => "cone_regularity",
            ScenarioId::RegularitySplitA => "regularity_split_a",
            ScenarioId::RegularitySplitB => "regularity_split_b",
            ScenarioId::NegligiblePerturbation => "negligible_perturbation",
            ScenarioId::SuperpositionStability => "superposition_stability",
            ScenarioId::MClassification => "m_classification",
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Geometric ladder `eps0 · ratio^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl LadderSpec {
    pub fn build(&self) -> Result<EpsilonLadder> {
        EpsilonLadder::geometric(self.eps0, self.ratio, self.count)
    }
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self {
            eps0: 0.25,
            ratio: 0.5,
            count: 6,
        }
    }
}

/// Upper trapezoid `{0 ≤ t ≤ t_max, |x| ≤ kappa - t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub kappa: f64,
    pub t_max: f64,
}

impl RegionSpec {
    pub fn build(&self) -> Result<Trapezoid> {
        Trapezoid::new(self.kappa, self.t_max)
    }
}

impl Default for RegionSpec {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            t_max: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MollifierSpec {
    pub moment_order: usize,
    pub samples_per_unit: usize,
    pub cutoff_radius: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self {
            moment_order: DEFAULT_MOMENT_ORDER,
            samples_per_unit: DEFAULT_SAMPLES_PER_UNIT,
            cutoff_radius: DEFAULT_CUTOFF_RADIUS,
        }
    }
}

/// Smooth space-time source `h(x, t)`, sampled directly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `x(x) · t(t)`
    Separable {
        x: SmoothFn,
        t: SmoothFn,
    },
}

impl SourceSpec {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant { value } => *value,
            SourceSpec::Separable { x: fx, t: ft } => fx.eval(x) * ft.eval(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceSpec::Zero)
            || matches!(self, SourceSpec::Constant { value } if *value == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbTarget {
    #[default]
    A,
    B,
}

/// `amplitude · ε^order · sin(x)` added to one datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Perturbation {
    pub order: f64,
    pub amplitude: f64,
    pub target: PerturbTarget,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            order: 5.0,
            amplitude: 1.0,
            target: PerturbTarget::A,
        }
    }
}

/// Separate ladder and region for a G∞ cell report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GinfSetup {
    pub ladder: LadderSpec,
    pub region: RegionSpec,
}

impl Default for GinfSetup {
    fn default() -> Self {
        Self {
            ladder: LadderSpec {
                eps0: 1.0 / 64.0,
                ratio: std::f64::consts::FRAC_1_SQRT_2,
                count: 6,
            },
            region: RegionSpec {
                kappa: 1.0,
                t_max: 0.75,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub max_order: usize,
    pub q_max: f64,
    pub cell_side: f64,
    pub perturbation: Perturbation,
    pub tests: Vec<TestFunction>,
    /// Spacing divisor of the unregularized reference relative to the finest member.
    pub reference_refinement: usize,
    pub ginf: Option<GinfSetup>,
    /// Data whose generalized constant is classified.
    pub m_cases: Vec<DataExpr>,
    /// Recorded for reproducibility; no scenario draws random numbers.
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
            q_max: DEFAULT_Q_MAX,
            cell_side: 0.125,
            perturbation: Perturbation::default(),
            tests: Vec::new(),
            reference_refinement: 2,
            ginf: None,
            m_cases: Vec::new(),
            seed: 0,
        }
    }
}

/// Pass thresholds; echoed in every result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Plateau values off the smoothing band.
    pub plateau_abs: f64,
    /// Interior constant against its closed form.
    pub constant_rel: f64,
    /// Growth order of generalized constants.
    pub order_abs: f64,
    /// Divergence order of `M_ε`.
    pub m_order_abs: f64,
    pub r2_min: f64,
    /// Slack on fitted decay orders.
    pub slope_slack: f64,
    /// Required ratio between the first and last L¹ defect.
    pub defect_reduction: f64,
    /// Allowed growth between consecutive defects on the ladder tail.
    pub monotone_slack: f64,
    pub lipschitz_slack: f64,
    /// Final sup-distance to the unregularized reference.
    pub association_final: f64,
    /// `C` in the `C h²` bound against analytic solutions.
    pub analytic_c: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            plateau_abs: 1e-10,
            constant_rel: 1e-10,
            order_abs: 0.1,
            m_order_abs: 0.05,
            r2_min: 0.999,
            slope_slack: 0.2,
            defect_reduction: 4.0,
            monotone_slack: 1.5,
            lipschitz_slack: 1.05,
            association_final: 1e-2,
            analytic_c: 1.0,
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub label: String,
    pub a: DataExpr,
    pub b: DataExpr,
    pub h: SourceSpec,
    pub f: Nonlinearity,
    pub region: RegionSpec,
    pub ladder: LadderSpec,
    pub mollifier: MollifierSpec,
    pub points_per_eps: usize,
    pub picard: PicardSettings,
    pub params: Params,
    pub tolerances: Tolerances,
}

fn delta() -> DataExpr {
    DataExpr::delta(0.0)
}

fn heaviside() -> DataExpr {
    DistributionSpec::Heaviside { x0: 0.0 }.into()
}

fn sine() -> DataExpr {
    DistributionSpec::Smooth {
        function: SmoothFn::sin(),
    }
    .into()
}

impl ScenarioSpec {
    /// Defaults for `id`: region `κ = 2, T = 1.5`, ladder `2⁻²·2⁻ᵏ` with six
    /// values and eight nodes per ε unless the scenario needs otherwise.
    pub fn default_for(id: ScenarioId) -> Self {
        let mut s = Self {
            id,
            label: id.as_str().into(),
            a: DataExpr::Zero,
            b: DataExpr::Zero,
            h: SourceSpec::Zero,
            f: Nonlinearity::Zero,
            region: RegionSpec::default(),
            ladder: LadderSpec::default(),
            mollifier: MollifierSpec::default(),
            points_per_eps: 8,
            picard: PicardSettings::default(),
            params: Params::default(),
            tolerances: Tolerances::default(),
        };
        match id {
            ScenarioId::SmoothConsistency => {
                s.a = sine();
                s.ladder = LadderSpec {
                    eps0: 1.0,
                    ratio: 0.7,
                    count: 6,
                };
            }
            ScenarioId::ContinuousAssociation => {
                s.a = DistributionSpec::Hat {
                    center: 0.0,
                    half_width: 0.5,
                    height: 1.0,
                }
                .into();
                s.f = Nonlinearity::Sine { amplitude: 1.0 };
            }
            ScenarioId::DeltaWave => {
                s.b = delta();
                s.f = Nonlinearity::OddSquash { scale: 1.0 };
            }
            ScenarioId::DeltaSquared => {
                s.b = DataExpr::delta_squared(0.0);
                s.region = RegionSpec {
                    kappa: 1.5,
                    t_max: 1.5,
                };
                s.ladder = LadderSpec {
                    eps0: 1.0 / 16.0,
                    ratio: std::f64::consts::FRAC_1_SQRT_2,
                    count: 6,
                };
                s.params.tests = vec![TestFunction::Bump2 {
                    x: 0.0,
                    t: 1.0,
                    radius: 0.15,
                }];
            }
            ScenarioId::ConeRegularity => {
                s.b = DistributionSpec::DeltaDerivative { x0: 0.0, order: 1 }.into();
                let g = GinfSetup::default();
                s.region = g.region;
                s.ladder = g.ladder;
            }
            ScenarioId::RegularitySplitA => {
                s.a = heaviside();
                s.b = delta();
                s.f = Nonlinearity::Squash { limit: 1.0 };
                s.params.ginf = Some(GinfSetup::default());
                s.tolerances.defect_reduction = 3.0;
            }
            ScenarioId::RegularitySplitB => {
                s.b = DataExpr::delta_squared(0.0);
                s.f = Nonlinearity::Squash { limit: 1.0 };
                s.params.ginf = Some(GinfSetup::default());
                s.tolerances.defect_reduction = 3.0;
            }
            ScenarioId::NegligiblePerturbation => {
                s.a = sine();
                s.f = Nonlinearity::Sine { amplitude: 1.0 };
                s.picard.tol = 1e-14;
            }
            ScenarioId::SuperpositionStability => {
                s.a = heaviside();
                s.f = Nonlinearity::Sine { amplitude: 1.0 };
            }
            ScenarioId::MClassification => {
                s.params.m_cases = vec![
                    delta(),
                    DistributionSpec::DeltaDerivative { x0: 0.0, order: 1 }.into(),
                    DataExpr::delta_squared(0.0),
                ];
            }
        }
        s
    }

    /// The ten default scenarios.
    pub fn default_suite() -> Vec<Self> {
        ScenarioId::ALL
            .iter()
            .map(|&id| Self::default_for(id))
            .collect()
    }

    /// Hypotheses on `f` and the data that each scenario assumes.
    pub fn check_hypotheses(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Hypothesis(format!("{}: {msg}", self.id)));
        match self.id {
            ScenarioId::DeltaWave | ScenarioId::RegularitySplitA if !self.f.is_bounded() => fail(
                format!("needs a bounded nonlinearity, got {}", self.f.label()),
            ),
            ScenarioId::RegularitySplitB
                if !self.f.is_bounded() || self.f.meta().limit_at_infinity.is_none() =>
            {
                fail(format!(
                    "needs a bounded nonlinearity with a limit at infinity, got {}",
                    self.f.label()
                ))
            }
            ScenarioId::DeltaSquared if !self.a.is_zero() || self.f != Nonlinearity::Zero => {
                fail("needs zero initial position and f = 0".into())
            }
            ScenarioId::ConeRegularity if !self.f.is_linear() => {
                fail(format!("needs a linear equation, got {}", self.f.label()))
            }
            ScenarioId::SmoothConsistency | ScenarioId::ContinuousAssociation
                if !self.a.split().1.is_zero() || !self.b.split().1.is_zero() =>
            {
                fail("needs data without singular parts".into())
            }
            ScenarioId::SuperpositionStability if !self.a.split().1.is_zero() => {
                fail("needs initial position without singular parts".into())
            }
            ScenarioId::DeltaWave
            | ScenarioId::DeltaSquared
            | ScenarioId::RegularitySplitA
            | ScenarioId::RegularitySplitB
                if !self.h.is_zero() =>
            {
                fail("takes no source term h".into())
            }
            _ => Ok(()),
        }
    }

    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()?;
        self.f.validate()?;
        self.f.check_meta()?;
        self.region.build()?;
        self.ladder.build()?;
        self.picard.validate()?;
        if self.points_per_eps < 2 {
            return Err(Error::Config(format!(
                "points_per_eps must be at least 2, got {}",
                self.points_per_eps
            )));
        }
        if self.mollifier.samples_per_unit < 8 {
            return Err(Error::Config(
                "mollifier samples_per_unit must be at least 8".into(),
            ));
        }
        if !(self.params.cell_side > 0.0) {
            return Err(Error::Config("cell_side must be positive".into()));
        }
        if self.params.reference_refinement == 0 {
            return Err(Error::Config(
                "reference_refinement must be at least 1".into(),
            ));
        }
        if let Some(g) = &self.params.ginf {
            g.ladder.build()?;
            g.region.build()?;
        }
        for c in &self.params.m_cases {
            c.validate()?;
        }
        self.check_hypotheses()?;
        let t = &self.tolerances;
        let positive = [
            ("plateau_abs", t.plateau_abs),
            ("constant_rel", t.constant_rel),
            ("order_abs", t.order_abs),
            ("m_order_abs", t.m_order_abs),
            ("r2_min", t.r2_min),
            ("slope_slack", t.slope_slack),
            ("defect_reduction", t.defect_reduction),
            ("monotone_slack", t.monotone_slack),
            ("lipschitz_slack", t.lipschitz_slack),
            ("association_final", t.association_final),
            ("analytic_c", t.analytic_c),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!(
                "tolerance {name} must be positive, got {v}"
            )));
        }
        Ok(())
    }
}
