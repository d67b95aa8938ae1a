//! Print a ready-made scenario JSON to stdout, for feeding the CLI:
//!
//! ```bash
//! cargo run --example make_scenario > scenario.json
//! cargo run --bin tasdip -- schedule --scenario scenario.json --out out/
//! ```
//!
//! Optional args: number of applications (default 10) and seed (default 1).

use tasdip::scenarios;

fn main() {
    let mut args = std::env::args().skip(1);
    let n_apps = args
        .next()
        .map(|s| s.parse().expect("application count"))
        .unwrap_or(10);
    let seed = args.next().map(|s| s.parse().expect("seed")).unwrap_or(1);
    println!("{}", scenarios::paper_scale_scenario(n_apps, seed).to_json());
}
