//! Summary table from an existing bundle; nothing is recomputed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::bundle::{Manifest, RUNTIMES};
use crate::error::CliError;

/// Verifies digests, then renders one row per scenario.
pub fn summarize(dir: &Path) -> Result<String, CliError> {
    let m = Manifest::load(dir)?;
    m.verify(dir)?;
    let runtimes: BTreeMap<String, f64> = std::fs::read_to_string(dir.join(RUNTIMES))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(out, "{:<26} {:<7} {:>7} {:>10}  key orders", "scenario", "verdict", "checks", "runtime_s");
    for s in &m.scenarios {
        let passed = s.checks.iter().filter(|c| c.passed).count();
        let stem = s.csv.as_deref().and_then(|c| c.strip_suffix(".csv")).unwrap_or(&s.id);
        let rt = runtimes.get(stem).map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into());
        let orders = if let Some(e) = &s.error {
            e.clone()
        } else {
            s.key_orders
                .iter()
                .map(|k| format!("{}={:.3}", k.norm_kind, k.order))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(
            out,
            "{:<26} {:<7} {:>7} {:>10}  {}",
            s.label,
            s.status,
            format!("{passed}/{}", s.checks.len()),
            rt,
            orders
        );
    }
    let _ = writeln!(out, "exit code {}", m.exit_code);
    Ok(out)
}
