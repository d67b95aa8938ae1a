//! Acceptance ratio vs offered load under the full, no-shaping and no-route
//! policies, via the same code path as `tasdip sweep-load`. Uses one loaded
//! source host to stay quick; the full four-level experiment runs through
//! the binary.

use tasdip::cli::{cmd_sweep_load, ExperimentSpec};
use tasdip::scenarios;

fn main() {
    let dir = std::env::temp_dir().join("tasdip-load-sweep");
    let scenario_path = dir.join("scenario.json");
    std::fs::create_dir_all(&dir).expect("temp dir");
    std::fs::write(
        &scenario_path,
        scenarios::load_sweep_scenario(0, 1, 9).to_json(),
    )
    .expect("write scenario");

    let mut spec = ExperimentSpec::new(&scenario_path, &dir);
    spec.levels = vec![240.0, 480.0, 720.0, 960.0];
    let csv = cmd_sweep_load(&spec).expect("sweep runs");
    print!("{csv}");
    println!("wrote {}", dir.join("acceptance.csv").display());
}
