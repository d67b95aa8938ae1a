//! End-to-end deterministic transmission across 802.1Qbv (TAS) access
//! networks interconnected by a Deterministic IP core.
//!
//! The crate models the hierarchical network, maps packets between TAS cycle
//! times and DIP cycles, searches for admission-maximizing schedules,
//! compiles them into per-device programs (gate control lists, cycle mapping
//! tables, PIFO ranks), and verifies zero-jitter delivery with a
//! deterministic discrete-event simulator.
//!
//! ## Module map
//!
//! - [`model`]: network graph, timing configuration, traffic and scenario
//!   files
//! - [`cyclemap`]: TAS to DIP cycle/offset mappings and the packet end-to-end
//!   delay
//! - [`schedule`] / [`validator`]: decision variables and feasibility
//!   checks
//! - [`solver`]: exhaustive, greedy and genetic admission maximization
//! - [`device`]: compilation into per-device programs
//! - [`sim`]: the discrete-event simulator and interference model
//! - [`cli`]: the experiment harness behind the `tasdip` binary
//! - [`scenarios`]: ready-made topologies and instance generators
//!
//! ## Runnable examples
//!
//! ```bash
//! cargo run --example end_to_end           # one packet walked hop by hop
//! cargo run --example cycle_mappings       # the mapping functions by hand
//! cargo run --example schedule_scenario    # solve + validate a scenario
//! cargo run --example best_effort_vs_scheduled
//! cargo run --example jitter_sweep        # utilization sweep (small)
//! cargo run --example load_sweep          # acceptance-ratio sweep (small)
//! cargo run --example make_scenario       # print a scenario JSON
//! ```

pub mod cli;
pub mod cyclemap;
pub mod device;
pub mod error;
pub mod model;
pub mod scenarios;
pub mod schedule;
pub mod sim;
pub mod solver;
pub mod validator;

pub use cyclemap::{packet_e2e_delay, packet_timing, CycleShift, ExtraDelay};
pub use model::scenario::{load_scenario, Scenario, ScenarioFile};
pub use model::time::{Ns, TimeConfig};
pub use model::traffic::{Application, Message, Packet, PacketKey, TrafficModel};
pub use model::{build_graph, Link, NetworkGraph, Node, NodeId, NodeKind};
pub use schedule::{Route, Schedule};
pub use sim::{run, run_best_effort};
pub use solver::{solve, Policy, SolverConfig, SolverMode};
pub use validator::{validate, ViolationReport};
