//! Jitter vs interference utilization, scheduled against best effort, via
//! the same code path as `tasdip sweep-utilization`.

use tasdip::cli::{cmd_sweep_utilization, ExperimentSpec};
use tasdip::scenarios;

fn main() {
    let dir = std::env::temp_dir().join("tasdip-jitter-sweep");
    let scenario_path = dir.join("scenario.json");
    std::fs::create_dir_all(&dir).expect("temp dir");
    std::fs::write(
        &scenario_path,
        scenarios::paper_scale_scenario(8, 20_260_809).to_json(),
    )
    .expect("write scenario");

    let mut spec = ExperimentSpec::new(&scenario_path, &dir);
    spec.levels = vec![0.2, 0.59, 0.9];
    spec.horizon = Some(30);
    let csv = cmd_sweep_utilization(&spec).expect("sweep runs");
    print!("{csv}");
    println!("wrote {}", dir.join("jitter.csv").display());
}
