//! Experiment harness: scenario ingestion, the schedule / simulate
//! pipelines, and the utilization and load sweeps with CSV reports.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use thiserror::Error;

use crate::device;
use crate::error::{CompileError, ModelError, SimError, SolveError};
use crate::model::scenario::{Scenario, ScenarioFile};
use crate::model::traffic::AppId;
use crate::schedule::Schedule;
use crate::scenarios;
use crate::sim;
use crate::solver::{self, Policy, SolveOutcome, SolverConfig, SolverMode};
use crate::validator;

#[derive(Debug, Error)]
pub enum CmdError {
    /// Malformed or infeasible input; exit code 1.
    #[error("{0}")]
    Input(String),
    /// Internal invariant breach; exit code 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Input(_) => 1,
            CmdError::Internal(_) => 2,
        }
    }
}

impl From<ModelError> for CmdError {
    fn from(e: ModelError) -> Self {
        CmdError::Input(e.to_string())
    }
}
impl From<SolveError> for CmdError {
    fn from(e: SolveError) -> Self {
        CmdError::Input(e.to_string())
    }
}
impl From<CompileError> for CmdError {
    fn from(e: CompileError) -> Self {
        CmdError::Internal(e.to_string())
    }
}
impl From<SimError> for CmdError {
    fn from(e: SimError) -> Self {
        CmdError::Internal(e.to_string())
    }
}

/// One experiment invocation.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: PathBuf,
    pub out: PathBuf,
    /// Overrides the scenario seed (message offsets, solver and
    /// interference streams).
    pub seed: Option<u64>,
    /// Sweep levels: utilization fractions or offered load in Mbps.
    pub levels: Vec<f64>,
    pub policy: Policy,
    pub horizon: Option<u32>,
    pub solver: Option<SolverMode>,
    /// Pre-computed schedule to validate or simulate.
    pub schedule: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(scenario: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            scenario: scenario.into(),
            out: out.into(),
            seed: None,
            levels: Vec::new(),
            policy: Policy::Full,
            horizon: None,
            solver: None,
            schedule: None,
        }
    }
}

fn load_file(spec: &ExperimentSpec) -> Result<ScenarioFile, CmdError> {
    let text = fs::read_to_string(&spec.scenario)
        .map_err(|e| CmdError::Input(format!("{}: {e}", spec.scenario.display())))?;
    let mut file = ScenarioFile::from_json(&text)?;
    if let Some(seed) = spec.seed {
        file.seed = seed;
        if let Some(interference) = &mut file.interference {
            interference.seed = seed ^ 0x1;
        }
        if let Some(solver) = &mut file.solver {
            solver.ga.seed = seed ^ 0x2;
        }
    }
    Ok(file)
}

fn build(spec: &ExperimentSpec, file: &ScenarioFile) -> Result<(Scenario, SolverConfig), CmdError> {
    let scenario = file.build()?;
    let mut config = scenario.solver.clone();
    if let Some(mode) = spec.solver {
        config.mode = mode;
    }
    Ok((scenario, config))
}

fn check_levels(levels: &[f64], what: &str) -> Result<(), CmdError> {
    if levels.is_empty() {
        return Err(CmdError::Input(format!("{what} needs --levels")));
    }
    if !levels.windows(2).all(|w| w[0] <= w[1]) {
        return Err(CmdError::Input(format!(
            "{what} levels must be ascending: {levels:?}"
        )));
    }
    Ok(())
}

fn out_path(spec: &ExperimentSpec, name: &str) -> Result<PathBuf, CmdError> {
    fs::create_dir_all(&spec.out)
        .map_err(|e| CmdError::Input(format!("{}: {e}", spec.out.display())))?;
    Ok(spec.out.join(name))
}

fn write(spec: &ExperimentSpec, name: &str, contents: &str) -> Result<(), CmdError> {
    let path = out_path(spec, name)?;
    fs::write(&path, contents).map_err(|e| CmdError::Internal(format!("{}: {e}", path.display())))
}

fn solve(scenario: &Scenario, config: &SolverConfig, policy: Policy) -> Result<SolveOutcome, CmdError> {
    Ok(solver::solve(
        &scenario.graph,
        &scenario.traffic,
        config,
        policy,
    )?)
}

/// Solves the scenario, writes `schedule.json` and `validation.json`, and
/// returns the one-line summary.
pub fn cmd_schedule(spec: &ExperimentSpec) -> Result<String, CmdError> {
    let file = load_file(spec)?;
    let (scenario, config) = build(spec, &file)?;
    let outcome = solve(&scenario, &config, spec.policy)?;
    let report = validator::validate(&scenario.graph, &scenario.traffic, &outcome.schedule);
    if !report.is_feasible() {
        return Err(CmdError::Internal(format!(
            "solver emitted an infeasible schedule: {} violations",
            report.violations.len()
        )));
    }
    write(spec, "schedule.json", &outcome.schedule.to_json())?;
    write(
        spec,
        "validation.json",
        &serde_json::to_string_pretty(&report).unwrap(),
    )?;
    Ok(format!(
        "accepted {} of {}",
        outcome.accepted,
        scenario.traffic.apps.len()
    ))
}

/// Validates a schedule file against the scenario; writes `validation.json`
/// and returns whether it is feasible.
pub fn cmd_validate(spec: &ExperimentSpec) -> Result<bool, CmdError> {
    let file = load_file(spec)?;
    let (scenario, _) = build(spec, &file)?;
    let path = spec
        .schedule
        .as_ref()
        .ok_or_else(|| CmdError::Input("validate needs --schedule".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))?;
    let schedule = Schedule::from_json(&scenario.graph, &text)?;
    let report = validator::validate(&scenario.graph, &scenario.traffic, &schedule);
    write(
        spec,
        "validation.json",
        &serde_json::to_string_pretty(&report).unwrap(),
    )?;
    Ok(report.is_feasible())
}

/// Schedules (or loads a schedule), compiles device programs and simulates;
/// writes `devices.json`, `trace.csv` and `summary.csv`.
pub fn cmd_simulate(spec: &ExperimentSpec) -> Result<String, CmdError> {
    let file = load_file(spec)?;
    let (scenario, config) = build(spec, &file)?;
    let schedule = match &spec.schedule {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))?;
            Schedule::from_json(&scenario.graph, &text)?
        }
        None => {
            let outcome = solve(&scenario, &config, spec.policy)?;
            outcome.schedule
        }
    };
    let report = validator::validate(&scenario.graph, &scenario.traffic, &schedule);
    if !report.is_feasible() {
        return Err(CmdError::Input(format!(
            "schedule is infeasible: {} violations",
            report.violations.len()
        )));
    }
    let programs = device::compile(&scenario.graph, &scenario.traffic, &schedule)?;
    write(spec, "devices.json", &device::programs_to_json(&programs))?;
    let horizon = spec.horizon.unwrap_or(scenario.horizon);
    let trace = sim::run(
        &scenario.graph,
        &programs,
        &scenario.traffic,
        &scenario.interference,
        horizon,
    )?;
    write(spec, "trace.csv", &trace.hops_csv(None))?;
    write(spec, "summary.csv", &trace.summary_csv())?;
    Ok(format!(
        "simulated {} hypercycles: {} scheduled packets delivered, {} messages completed",
        horizon,
        trace.scheduled_delivered,
        trace.messages.len()
    ))
}

/// Runs scheduled and best-effort simulations at each interference
/// utilization level; writes `jitter.csv` with one row per level.
pub fn cmd_sweep_utilization(spec: &ExperimentSpec) -> Result<String, CmdError> {
    let file = load_file(spec)?;
    let (scenario, config) = build(spec, &file)?;
    check_levels(&spec.levels, "sweep-utilization")?;
    let outcome = solve(&scenario, &config, spec.policy)?;
    let Some(measured) = outcome.schedule.accepted().next().cloned() else {
        return Err(CmdError::Input("no accepted application to measure".into()));
    };
    let programs = device::compile(&scenario.graph, &scenario.traffic, &outcome.schedule)?;
    let horizon = spec.horizon.unwrap_or(100);
    let mut csv = String::from("utilization,scheduled_jitter_ns,best_effort_jitter_ns\n");
    for &u in &spec.levels {
        let profile = if u > 0.0 {
            scenarios::access_interference(&file, &measured.0, u, 12, file.seed ^ 0x1F)
        } else {
            Default::default()
        };
        let gated = sim::run(
            &scenario.graph,
            &programs,
            &scenario.traffic,
            &profile,
            horizon,
        )?;
        let be = sim::run_best_effort(&scenario.graph, &scenario.traffic, &profile, horizon)?;
        let sj = gated.measure_jitter(&measured)?;
        let bj = be.measure_jitter(&measured)?;
        writeln!(csv, "{u},{sj},{bj}").unwrap();
    }
    write(spec, "jitter.csv", &csv)?;
    Ok(csv)
}

/// Generates per-level deterministic load on the scenario topology and
/// solves it under the full, no-shaping and no-route policies; writes
/// `acceptance.csv` with one row per level.
pub fn cmd_sweep_load(spec: &ExperimentSpec) -> Result<String, CmdError> {
    let file = load_file(spec)?;
    if spec.levels.is_empty() {
        return Err(CmdError::Input("sweep-load needs --levels".into()));
    }
    let mut csv = String::from("load,full_ratio,no_shaping_ratio,no_route_ratio\n");
    for &level in &spec.levels {
        let mut level_file = file.clone();
        level_file.applications =
            scenarios::apps_for_load(&file, level as u64, file.seed ^ 0x10AD);
        let (scenario, config) = build(spec, &level_file)?;
        let total = scenario.traffic.apps.len();
        let mut ratios = Vec::new();
        for policy in [Policy::Full, Policy::NoShaping, Policy::NoRoute] {
            let outcome = solve(&scenario, &config, policy)?;
            // Zero offered load is vacuously all-accepted.
            ratios.push(if total == 0 {
                1.0
            } else {
                outcome.accepted as f64 / total as f64
            });
        }
        writeln!(csv, "{level},{},{},{}", ratios[0], ratios[1], ratios[2]).unwrap();
    }
    write(spec, "acceptance.csv", &csv)?;
    Ok(csv)
}

/// Identifier of the application measured by the utilization sweep: the
/// first accepted one in id order.
pub fn measured_app(schedule: &Schedule) -> Option<AppId> {
    schedule.accepted().next().cloned()
}
