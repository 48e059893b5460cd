use colombeau_wave::experiments::{run_scenario, ScenarioId, ScenarioSpec};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    for id in ScenarioId::ALL {
        if !which.is_empty() && !which.iter().any(|w| w == id.as_str()) {
            continue;
        }
        let spec = ScenarioSpec::default_for(id);
        match run_scenario(&spec) {
            Ok(r) => {
                println!("{} passed={} runtime={:.2}s", id, r.passed, r.runtime_s);
                for c in &r.checks {
                    println!(
                        "  {} {} value={:e} thr={:e} {}",
                        if c.passed { "ok " } else { "BAD" },
                        c.name,
                        c.value,
                        c.threshold,
                        c.detail
                    );
                }
                for (k, v) in &r.metadata {
                    println!("  meta {k} = {v}");
                }
            }
            Err(e) => println!("{} ERROR {e}", id),
        }
    }
}
