//! Solve a scenario end to end: load (or generate) a scenario file, run the
//! solver, validate the result and print the admission summary.
//!
//! ```bash
//! cargo run --example schedule_scenario              # built-in scenario
//! cargo run --example schedule_scenario -- my.json   # your scenario file
//! ```

use tasdip::model::scenario::load_scenario;
use tasdip::scenarios;
use tasdip::solver::{solve, Policy, SolverConfig, SolverMode};
use tasdip::validator;

fn main() {
    let scenario = match std::env::args().nth(1) {
        Some(path) => load_scenario(std::path::Path::new(&path)).expect("scenario loads"),
        None => scenarios::paper_scale_scenario(12, 2)
            .build()
            .expect("builds"),
    };
    println!(
        "{} nodes, {} links, {} applications",
        scenario.graph.node_count(),
        scenario.graph.link_count(),
        scenario.traffic.apps.len()
    );

    for mode in [SolverMode::Greedy, SolverMode::Genetic] {
        let config = SolverConfig {
            mode,
            ..scenario.solver.clone()
        };
        let outcome =
            solve(&scenario.graph, &scenario.traffic, &config, Policy::Full).expect("solves");
        let report = validator::validate(&scenario.graph, &scenario.traffic, &outcome.schedule);
        println!(
            "{mode:?}: accepted {} of {} ({} violations)",
            outcome.accepted,
            scenario.traffic.apps.len(),
            report.violations.len()
        );
        for app in scenario.traffic.apps.keys() {
            let mark = if outcome.schedule.is_accepted(app) {
                "accepted"
            } else {
                "rejected"
            };
            println!("  {app}: {mark}");
        }
    }
}
