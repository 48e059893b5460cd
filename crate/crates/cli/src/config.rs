//! Run configuration: a JSON document of scenario overrides merged over the
//! built-in defaults.

use std::path::{Path, PathBuf};

use colombeau_wave::experiments::{ScenarioId, ScenarioSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys that select an enum variant; an object carrying one replaces the
/// default instead of being merged into it.
const TAG_KEYS: [&str; 3] = ["kind", "op", "mode"];

pub const DEFAULT_OUTPUT_DIR: &str = "results";
pub const OUT_DIR_ENV: &str = "CWAVE_OUT_DIR";

/// The file as written by the user.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// One object per scenario; `id` is required, every other field overrides
    /// that scenario's defaults.
    pub scenarios: Vec<Value>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for scenario jobs and member solves.
    #[serde(default = "one")]
    pub parallelism: usize,
    /// Copied into every scenario's `params.seed` unless it sets its own.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Applied to every scenario before its own overrides.
    #[serde(default)]
    pub ladder: Option<Value>,
    #[serde(default)]
    pub mollifier: Option<Value>,
    #[serde(default)]
    pub picard: Option<Value>,
    #[serde(default)]
    pub points_per_eps: Option<Value>,
}

fn one() -> usize {
    1
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenarios: Vec<ScenarioSpec>,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        raw.resolve()
    }

    /// Every default scenario with default settings.
    pub fn default_suite() -> Self {
        Self {
            scenarios: ScenarioSpec::default_suite(),
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            parallelism: 1,
            seed: None,
        }
    }

    /// Output directory, honoring the environment override.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output_dir.clone(),
        }
    }
}

impl RawConfig {
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        if self.parallelism == 0 {
            return Err(CliError::Config("parallelism: must be at least 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(CliError::Config("scenarios: at least one scenario is required".into()));
        }
        let global: Vec<(&str, &Value)> = [
            ("ladder", &self.ladder),
            ("mollifier", &self.mollifier),
            ("picard", &self.picard),
            ("points_per_eps", &self.points_per_eps),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect();
        let scenarios = self
            .scenarios
            .iter()
            .enumerate()
            .map(|(i, v)| resolve_scenario(i, v, &global, self.seed))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunConfig {
            scenarios,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            parallelism: self.parallelism,
            seed: self.seed,
        })
    }
}

fn resolve_scenario(
    index: usize,
    user: &Value,
    global: &[(&str, &Value)],
    seed: Option<u64>,
) -> Result<ScenarioSpec, CliError> {
    let at = format!("scenarios[{index}]");
    let obj = user
        .as_object()
        .ok_or_else(|| CliError::Config(format!("{at}: expected an object")))?;
    let id_value = obj.get("id").ok_or_else(|| CliError::Config(format!("{at}.id: missing field")))?;
    let id: ScenarioId = serde_json::from_value(id_value.clone())
        .map_err(|e| CliError::Config(format!("{at}.id: {e}")))?;
    let mut merged = serde_json::to_value(ScenarioSpec::default_for(id)).expect("defaults serialize");
    for (key, value) in global {
        check_keys(&format!("{key}"), &merged[*key], value)?;
        merge(&mut merged[*key], value);
    }
    if let Some(s) = seed {
        merged["params"]["seed"] = Value::from(s);
    }
    check_keys(&at, &merged, user)?;
    merge(&mut merged, user);
    let spec: ScenarioSpec =
        serde_json::from_value(merged).map_err(|e| CliError::Config(format!("{at} ({id}): {e}")))?;
    spec.validate().map_err(|e| CliError::Validation { at: format!("{at} ({id})"), source: e })?;
    Ok(spec)
}

/// Reports keys absent from the defaults with their full path.
fn check_keys(path: &str, default: &Value, user: &Value) -> Result<(), CliError> {
    let (Value::Object(d), Value::Object(u)) = (default, user) else {
        return Ok(());
    };
    if replaces(u) {
        return Ok(());
    }
    for (k, v) in u {
        let p = format!("{path}.{k}");
        match d.get(k) {
            None => {
                let known: Vec<&str> = d.keys().map(String::as_str).collect();
                return Err(CliError::Config(format!("{p}: unknown field, expected one of {}", known.join(", "))));
            }
            Some(dv) => check_keys(&p, dv, v)?,
        }
    }
    Ok(())
}

fn replaces(u: &Map<String, Value>) -> bool {
    TAG_KEYS.iter().any(|k| u.contains_key(*k))
}

/// Recursive object merge; arrays, scalars and tagged objects replace.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !replaces(o) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(r#"{"scenarios":[{"id":"smooth_consistency"}]}"#).unwrap();
        assert_eq!(c.scenarios[0], ScenarioSpec::default_for(ScenarioId::SmoothConsistency));
        assert_eq!(c.parallelism, 1);
    }

    #[test]
    fn overrides_merge_and_tagged_objects_replace() {
        let c = RunConfig::parse(
            r#"{"scenarios":[{"id":"smooth_consistency","f":{"kind":"linear","k":-1.0},
                "ladder":{"count":5},"tolerances":{"analytic_c":2.0}}],
                "mollifier":{"moment_order":1}}"#,
        )
        .unwrap();
        let s = &c.scenarios[0];
        assert_eq!(s.f, colombeau_wave::Nonlinearity::Linear { k: -1.0 });
        assert_eq!(s.ladder.count, 5);
        assert_eq!(s.ladder.eps0, 1.0);
        assert_eq!(s.tolerances.analytic_c, 2.0);
        assert_eq!(s.mollifier.moment_order, 1);
    }

    #[test]
    fn unknown_field_reports_path() {
        let e = RunConfig::parse(r#"{"scenarios":[{"id":"delta_wave"},{"id":"delta_wave","params":{"bogus":1}}]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("scenarios[1].params.bogus"), "{e}");
    }

    #[test]
    fn hypothesis_violation_is_rejected() {
        let e = RunConfig::parse(r#"{"scenarios":[{"id":"delta_wave","f":{"kind":"linear","k":1.0}}]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("hypothesis"), "{e}");
    }

    #[test]
    fn unknown_scenario_id() {
        let e = RunConfig::parse(r#"{"scenarios":[{"id":"nope"}]}"#).unwrap_err();
        assert!(e.to_string().contains("scenarios[0].id"), "{e}");
    }
}
