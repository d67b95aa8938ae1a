//! Scheduled vs best-effort delivery under 59% interference: the scheduled
//! application keeps one constant delay while best-effort delays spread out.

use tasdip::scenarios;
use tasdip::solver::{solve, Policy, SolverConfig};
use tasdip::{device, sim};

fn main() {
    let file = scenarios::paper_scale_scenario(10, 20_260_809);
    let scenario = file.build().expect("builds");
    let outcome = solve(
        &scenario.graph,
        &scenario.traffic,
        &SolverConfig::default(),
        Policy::Full,
    )
    .expect("solves");
    let measured = outcome
        .schedule
        .accepted()
        .next()
        .cloned()
        .expect("an accepted application");
    let programs =
        device::compile(&scenario.graph, &scenario.traffic, &outcome.schedule).expect("compiles");
    let profile = scenarios::access_interference(&file, &measured.0, 0.59, 12, 78);

    let horizon = 100;
    let gated = sim::run(
        &scenario.graph,
        &programs,
        &scenario.traffic,
        &profile,
        horizon,
    )
    .expect("gated run");
    let be = sim::run_best_effort(&scenario.graph, &scenario.traffic, &profile, horizon)
        .expect("best-effort run");

    let sd = gated.delays(&measured);
    let bd = be.delays(&measured);
    println!("application {measured} over {horizon} hypercycles at 59% utilization:");
    println!(
        "  scheduled:   {} messages, delay {} ns, jitter {} ns",
        sd.len(),
        sd[0],
        gated.measure_jitter(&measured).unwrap()
    );
    println!(
        "  best effort: {} messages, delays {}..{} ns, jitter {} ns",
        bd.len(),
        bd.iter().min().unwrap(),
        bd.iter().max().unwrap(),
        be.measure_jitter(&measured).unwrap()
    );
}
