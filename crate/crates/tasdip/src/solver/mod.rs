//! Admission-maximizing schedule search: exhaustive, greedy first-fit and
//! genetic modes over discretized offset / cycle-shift / extra-delay domains.

mod exhaustive;
mod genetic;
pub mod routes;

pub use routes::enumerate_routes;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cyclemap::{self, CycleShift, ExtraDelay, PacketVars};
use crate::error::SolveError;
use crate::model::time::{floor_mod, Ns};
use crate::model::traffic::{fragment, AppId, Packet, PacketKey, TrafficModel};
use crate::model::{NetworkGraph, NodeId};
use crate::schedule::{Route, Schedule};
use crate::validator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Exhaustive,
    Greedy,
    Genetic,
}

impl std::str::FromStr for SolverMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(SolverMode::Exhaustive),
            "greedy" => Ok(SolverMode::Greedy),
            "genetic" => Ok(SolverMode::Genetic),
            other => Err(format!(
                "unknown solver `{other}` (expected exhaustive|greedy|genetic)"
            )),
        }
    }
}

/// Shaping policy of a solver run. `NoShaping` forwards messages immediately
/// with zero cycle shifts and extra delays; `NoRoute` restricts every
/// application to its shortest route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Full,
    NoShaping,
    NoRoute,
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Policy::Full),
            "no-shaping" => Ok(Policy::NoShaping),
            "no-route" => Ok(Policy::NoRoute),
            other => Err(format!(
                "unknown policy `{other}` (expected full|no-shaping|no-route)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 32,
            generations: 60,
            mutation_rate: 0.15,
            crossover_rate: 0.8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Offset / extra-delay slot width; must divide `t_dip`. Defaults to
    /// `t_dip` itself.
    pub offset_granularity_ns: Option<Ns>,
    pub k_routes: usize,
    pub ga: GaParams,
    pub time_budget_secs: Option<f64>,
    /// Exhaustive mode refuses instances whose estimated assignment count
    /// exceeds this.
    pub exhaustive_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolverMode::Greedy,
            offset_granularity_ns: None,
            k_routes: 3,
            ga: GaParams::default(),
            time_budget_secs: None,
            exhaustive_limit: 20_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    pub accepted: usize,
    /// Set when the time budget ran out and the best schedule found so far
    /// was returned.
    pub budget_exhausted: bool,
}

/// Solves the admission-maximization problem in the configured mode. The
/// returned schedule always passes `validator::validate` cleanly.
pub fn solve(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    config: &SolverConfig,
    policy: Policy,
) -> Result<SolveOutcome, SolveError> {
    let ctx = Ctx::new(graph, traffic, config, policy)?;
    let outcome = match config.mode {
        SolverMode::Greedy => greedy(&ctx),
        SolverMode::Exhaustive => exhaustive::solve(&ctx)?,
        SolverMode::Genetic => genetic::solve(&ctx),
    };
    debug_assert!(validator::validate(graph, traffic, &outcome.schedule).is_feasible());
    Ok(outcome)
}

/// Greedy first-fit (also usable directly as the baseline heuristic).
pub fn solve_greedy(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    config: &SolverConfig,
    policy: Policy,
) -> Result<SolveOutcome, SolveError> {
    let ctx = Ctx::new(graph, traffic, config, policy)?;
    Ok(greedy(&ctx))
}

/// Provably optimal accepted count over the discretized search space; errors
/// when the space is too large.
pub fn solve_exhaustive(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    config: &SolverConfig,
    policy: Policy,
) -> Result<SolveOutcome, SolveError> {
    let ctx = Ctx::new(graph, traffic, config, policy)?;
    exhaustive::solve(&ctx)
}

/// Seeded genetic search over the same encoding.
pub fn solve_genetic(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    config: &SolverConfig,
    policy: Policy,
) -> Result<SolveOutcome, SolveError> {
    let ctx = Ctx::new(graph, traffic, config, policy)?;
    Ok(genetic::solve(&ctx))
}

// ---------------------------------------------------------------------------
// shared machinery
// ---------------------------------------------------------------------------

pub(crate) struct AppPlan {
    pub id: AppId,
    pub routes: Vec<Route>,
    pub packets: Vec<Packet>,
}

pub(crate) struct Ctx<'a> {
    pub graph: &'a NetworkGraph,
    pub traffic: &'a TrafficModel,
    pub config: &'a SolverConfig,
    pub policy: Policy,
    pub granularity: Ns,
    /// Applications in placement order: deadline ascending, message length
    /// descending, id ascending.
    pub plans: Vec<AppPlan>,
    started: Instant,
}

impl<'a> Ctx<'a> {
    fn new(
        graph: &'a NetworkGraph,
        traffic: &'a TrafficModel,
        config: &'a SolverConfig,
        policy: Policy,
    ) -> Result<Self, SolveError> {
        let granularity = config.offset_granularity_ns.unwrap_or(graph.time.t_dip);
        if granularity <= 0 || graph.time.t_dip % granularity != 0 {
            return Err(SolveError::InvalidConfig(format!(
                "offset granularity {granularity} ns must divide t_dip {} ns",
                graph.time.t_dip
            )));
        }
        if config.k_routes == 0 {
            return Err(SolveError::InvalidConfig("k_routes must be >= 1".into()));
        }
        if config.ga.population == 0 {
            return Err(SolveError::InvalidConfig("population must be >= 1".into()));
        }
        for rate in [config.ga.mutation_rate, config.ga.crossover_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SolveError::InvalidConfig(format!(
                    "rate {rate} outside [0, 1]"
                )));
            }
        }
        let k = match policy {
            Policy::NoRoute => 1,
            _ => config.k_routes,
        };
        let mut plans: Vec<AppPlan> = traffic
            .apps
            .values()
            .map(|app| AppPlan {
                id: app.id.clone(),
                routes: enumerate_routes(graph, app, k),
                packets: fragment(app, &graph.time),
            })
            .collect();
        plans.sort_by(|a, b| {
            let aa = &traffic.apps[&a.id];
            let bb = &traffic.apps[&b.id];
            (aa.e2e, std::cmp::Reverse(aa.msg_len), &aa.id).cmp(&(
                bb.e2e,
                std::cmp::Reverse(bb.msg_len),
                &bb.id,
            ))
        });
        Ok(Ctx {
            graph,
            traffic,
            config,
            policy,
            granularity,
            plans,
            started: Instant::now(),
        })
    }

    pub fn budget_exhausted(&self) -> bool {
        self.config
            .time_budget_secs
            .is_some_and(|b| self.started.elapsed().as_secs_f64() > b)
    }

    /// Empty schedule that rejects every application.
    pub fn reject_all(&self) -> Schedule {
        let mut s = Schedule::default();
        for id in self.traffic.apps.keys() {
            s.admission.insert(id.clone(), false);
        }
        s
    }

    /// Variable domains of one packet on one route.
    pub fn domains(&self, plan: &AppPlan, route: &Route, packet: &Packet) -> PacketDomain {
        let time = &self.graph.time;
        let g = self.granularity;
        let tx0 = route.link(self.graph, 0).tx_time(packet.len);
        if self.policy == Policy::NoShaping {
            // Immediate forwarding: packets of a message leave back-to-back
            // from the message arrival instant.
            let app = &self.traffic.apps[&plan.id];
            let msg = self.traffic.message(&plan.id, packet.key.msg);
            let mut forced = msg.arrival_offset;
            for j in 1..packet.key.pkt {
                forced += route.link(self.graph, 0).tx_time(app.packet_len(j));
            }
            return PacketDomain {
                offsets: vec![forced],
                shifts: vec![0],
                extras: vec![0],
            };
        }
        let offsets = (0..=(time.t_ct - tx0) / g).map(|s| s * g).collect();
        let (shifts, extras) = match route.dip_span() {
            Some((k, _)) => (
                (0..=route.link(self.graph, k + 1).q as i64 - 2).collect(),
                (0..time.t_ct / g).map(|s| s * g).collect(),
            ),
            None => (vec![0], vec![0]),
        };
        PacketDomain {
            offsets,
            shifts,
            extras,
        }
    }
}

pub(crate) struct PacketDomain {
    pub offsets: Vec<Ns>,
    pub shifts: Vec<i64>,
    pub extras: Vec<Ns>,
}

/// One feasible packet placement, with everything needed to commit it to or
/// remove it from the incremental state.
#[derive(Debug, Clone)]
pub(crate) struct Placement {
    pub key: PacketKey,
    pub src_offset: Ns,
    pub shift: i64,
    pub extra: Ns,
    windows: Vec<((NodeId, NodeId), Ns, Ns)>,
    loads: Vec<((NodeId, NodeId), i64, u64)>,
}

/// Incremental feasibility state: occupied TAS windows per link and byte
/// loads per DIP link cycle.
pub(crate) struct PlacementState {
    t_ct: Ns,
    windows: BTreeMap<(NodeId, NodeId), BTreeMap<Ns, Ns>>,
    loads: BTreeMap<((NodeId, NodeId), i64), u64>,
}

impl PlacementState {
    pub fn new(graph: &NetworkGraph) -> Self {
        PlacementState {
            t_ct: graph.time.t_ct,
            windows: BTreeMap::new(),
            loads: BTreeMap::new(),
        }
    }

    fn window_free(&self, link: &(NodeId, NodeId), off: Ns, tx: Ns) -> bool {
        let Some(map) = self.windows.get(link) else {
            return true;
        };
        if map.is_empty() {
            return true;
        }
        let (p_off, p_tx) = map
            .range(..=off)
            .next_back()
            .or_else(|| map.iter().next_back())
            .map(|(&o, &t)| (o, t))
            .unwrap();
        let (s_off, _) = map
            .range(off + 1..)
            .next()
            .or_else(|| map.iter().next())
            .map(|(&o, &t)| (o, t))
            .unwrap();
        if p_off == off {
            return false;
        }
        floor_mod(off - p_off, self.t_ct) >= p_tx && floor_mod(s_off - off, self.t_ct) >= tx
    }

    /// Attempts to place one packet with the given raw variable values.
    /// Returns the placement without mutating the state.
    pub fn try_packet(
        &self,
        ctx: &Ctx,
        plan: &AppPlan,
        route: &Route,
        packet: &Packet,
        src_offset: Ns,
        shift: i64,
        extra: Ns,
    ) -> Option<Placement> {
        let time = &ctx.graph.time;
        let app = &ctx.traffic.apps[&plan.id];
        let shift_q = route
            .dip_span()
            .map(|(k, _)| route.link(ctx.graph, k + 1).q)
            .unwrap_or(2);
        let vars = PacketVars {
            msg_offset: ctx.traffic.message(&plan.id, packet.key.msg).arrival_offset,
            src_offset,
            shift: CycleShift::new(shift, shift_q).ok()?,
            extra: ExtraDelay::new(extra, time).ok()?,
        };
        let timing = cyclemap::packet_timing(ctx.graph, route, packet.len, &vars).ok()?;
        if timing.delay > app.e2e {
            return None;
        }
        let mut windows = Vec::new();
        for (a, offset) in timing.tas_offsets.iter().enumerate() {
            if let Some(off) = offset {
                let link = route.link(ctx.graph, a);
                let key = (link.src.clone(), link.dst.clone());
                let tx = link.tx_time(packet.len);
                if !self.window_free(&key, *off, tx) {
                    return None;
                }
                windows.push((key, *off, tx));
            }
        }
        let mut loads = Vec::new();
        if let Some((k, m)) = route.dip_span() {
            for (idx, a) in (k + 1..=m).enumerate() {
                let link = route.link(ctx.graph, a);
                let key = (link.src.clone(), link.dst.clone());
                let cycle = timing.cycles.0[idx];
                let cap = link.cycle_capacity_bytes(time);
                let used = self.loads.get(&(key.clone(), cycle)).copied().unwrap_or(0);
                if used + packet.len as u64 > cap {
                    return None;
                }
                loads.push((key, cycle, packet.len as u64));
            }
        }
        // Windows of this packet never collide with each other: a simple
        // route visits each link once.
        Some(Placement {
            key: packet.key.clone(),
            src_offset,
            shift,
            extra,
            windows,
            loads,
        })
    }

    pub fn commit(&mut self, p: &Placement) {
        for (link, off, tx) in &p.windows {
            self.windows
                .entry(link.clone())
                .or_default()
                .insert(*off, *tx);
        }
        for (link, cycle, bytes) in &p.loads {
            *self.loads.entry((link.clone(), *cycle)).or_default() += bytes;
        }
    }

    pub fn remove(&mut self, p: &Placement) {
        for (link, off, _) in &p.windows {
            self.windows.get_mut(link).unwrap().remove(off);
        }
        for (link, cycle, bytes) in &p.loads {
            let used = self.loads.get_mut(&(link.clone(), *cycle)).unwrap();
            *used -= bytes;
        }
    }
}

/// Writes an accepted application's placements into the schedule.
pub(crate) fn accept_app(
    schedule: &mut Schedule,
    plan: &AppPlan,
    route: &Route,
    placements: &[Placement],
) {
    schedule.admission.insert(plan.id.clone(), true);
    schedule.routes.insert(plan.id.clone(), route.clone());
    for p in placements {
        schedule.src_offsets.insert(p.key.clone(), p.src_offset);
        schedule.cycle_shifts.insert(p.key.clone(), p.shift);
        schedule.extra_delays.insert(p.key.clone(), p.extra);
    }
}

/// Places one lead assignment (message 1's packet `j`) mirrored across all
/// message instances: message `i` gets the offset shifted by `(i-1)` periods
/// and the same shift and extra delay. This keeps every message's delay
/// identical whenever the DIP cycle divides the period, which is what makes
/// scheduled traffic jitter-free. Returns the committed group or rolls back.
pub(crate) fn try_mirrored(
    ctx: &Ctx,
    state: &mut PlacementState,
    plan: &AppPlan,
    route: &Route,
    lead_j: usize,
    off: Ns,
    shift: i64,
    extra: Ns,
) -> Option<Vec<Placement>> {
    let app = &ctx.traffic.apps[&plan.id];
    let n_p = app.packets_per_msg() as usize;
    let n_m = app.messages_per_ct(&ctx.graph.time) as usize;
    let t_ct = ctx.graph.time.t_ct;
    let mut group = Vec::with_capacity(n_m);
    for i in 0..n_m {
        let packet = &plan.packets[i * n_p + lead_j];
        let off_i = floor_mod(off + i as Ns * app.period, t_ct);
        match state.try_packet(ctx, plan, route, packet, off_i, shift, extra) {
            Some(p) => {
                state.commit(&p);
                group.push(p);
            }
            None => {
                for p in &group {
                    state.remove(p);
                }
                return None;
            }
        }
    }
    Some(group)
}

/// First-fit placement of one application on one route: for each lead
/// packet, the first feasible (offset, shift, extra) in domain order whose
/// mirrored group fits, starting the offset scan at the message arrival.
/// Delay is linear in both the cycle shift and the extra delay, so scans
/// stop as soon as the deadline becomes the blocker.
pub(crate) fn first_fit_app(
    ctx: &Ctx,
    state: &mut PlacementState,
    plan: &AppPlan,
    route: &Route,
) -> Option<Vec<Placement>> {
    let app = &ctx.traffic.apps[&plan.id];
    let n_p = app.packets_per_msg() as usize;
    let first_link = route.link(ctx.graph, 0);
    let first_key = (first_link.src.clone(), first_link.dst.clone());
    let mut placed: Vec<Placement> = Vec::new();
    for j in 0..n_p {
        let lead = &plan.packets[j];
        let dom = ctx.domains(plan, route, lead);
        let tx0 = first_link.tx_time(lead.len);
        let msg_offset = ctx.traffic.message(&plan.id, 1).arrival_offset;
        // Rotate the offset scan so the first candidates add the least wait.
        let start = dom
            .offsets
            .iter()
            .position(|&o| o >= msg_offset)
            .unwrap_or(0);
        let mut found = None;
        'search: for i in 0..dom.offsets.len() {
            let off = dom.offsets[(start + i) % dom.offsets.len()];
            if !state.window_free(&first_key, off, tx0) {
                continue;
            }
            for &shift in &dom.shifts {
                let Some(base) = base_delay(ctx, plan, route, lead, off, shift) else {
                    continue;
                };
                if base > app.e2e {
                    // Larger shifts only increase the delay further.
                    break;
                }
                for &extra in &dom.extras {
                    if base + extra > app.e2e {
                        break;
                    }
                    if let Some(group) =
                        try_mirrored(ctx, state, plan, route, j, off, shift, extra)
                    {
                        found = Some(group);
                        break 'search;
                    }
                }
            }
        }
        match found {
            Some(group) => placed.extend(group),
            None => {
                for p in &placed {
                    state.remove(p);
                }
                return None;
            }
        }
    }
    Some(placed)
}

/// Delay of a candidate assignment at extra = 0, ignoring conflicts and
/// capacity; delay at extra `e` is exactly this plus `e`.
fn base_delay(
    ctx: &Ctx,
    plan: &AppPlan,
    route: &Route,
    packet: &Packet,
    src_offset: Ns,
    shift: i64,
) -> Option<Ns> {
    let shift_q = route
        .dip_span()
        .map(|(k, _)| route.link(ctx.graph, k + 1).q)
        .unwrap_or(2);
    let vars = PacketVars {
        msg_offset: ctx.traffic.message(&plan.id, packet.key.msg).arrival_offset,
        src_offset,
        shift: CycleShift::new(shift, shift_q).ok()?,
        extra: ExtraDelay::new(0, &ctx.graph.time).ok()?,
    };
    cyclemap::packet_timing(ctx.graph, route, packet.len, &vars)
        .ok()
        .map(|t| t.delay)
}

fn greedy(ctx: &Ctx) -> SolveOutcome {
    let mut schedule = ctx.reject_all();
    let mut state = PlacementState::new(ctx.graph);
    let mut budget_exhausted = false;
    for plan in &ctx.plans {
        if ctx.budget_exhausted() {
            budget_exhausted = true;
            break;
        }
        for route in &plan.routes {
            if let Some(placements) = first_fit_app(ctx, &mut state, plan, route) {
                accept_app(&mut schedule, plan, route, &placements);
                break;
            }
        }
    }
    let accepted = schedule.accepted_count();
    SolveOutcome {
        schedule,
        accepted,
        budget_exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::time::TimeConfig;
    use crate::model::traffic::Application;
    use crate::model::{build_graph, Link, Node, NodeKind};

    pub(super) fn small_graph() -> NetworkGraph {
        let time = TimeConfig::new(50_000, 10_000).unwrap();
        let kinds = [
            NodeKind::SourceHost,
            NodeKind::TasEdgeSwitch,
            NodeKind::DipEdgeRouter,
            NodeKind::DipEdgeRouter,
            NodeKind::TasEdgeSwitch,
            NodeKind::DestHost,
        ];
        let nodes: Vec<Node> = kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| Node {
                id: NodeId::new(format!("v{i}")),
                kind,
                epoch: 0,
            })
            .collect();
        let links = (0..5)
            .map(|i| Link {
                src: NodeId::new(format!("v{i}")),
                dst: NodeId::new(format!("v{}", i + 1)),
                bw: if i == 0 || i == 4 {
                    1_000_000_000
                } else {
                    10_000_000_000
                },
                d: 1_500,
                q: 4,
            })
            .collect();
        build_graph(nodes, links, time).unwrap()
    }

    fn one_app(e2e: Ns) -> TrafficModel {
        let g = small_graph();
        TrafficModel::build(
            vec![Application {
                id: "a0".into(),
                src: "v0".into(),
                dest: "v5".into(),
                e2e,
                msg_len: 1500,
                period: 50_000,
                mtu: 1500,
            }],
            &g.time,
            3,
        )
        .unwrap()
    }

    #[test]
    fn single_app_is_accepted() {
        let g = small_graph();
        let t = one_app(200_000);
        let out = solve(&g, &t, &SolverConfig::default(), Policy::Full).unwrap();
        assert_eq!(out.accepted, 1);
        assert!(validator::validate(&g, &t, &out.schedule).is_feasible());
    }

    #[test]
    fn greedy_output_always_validates() {
        let g = small_graph();
        for seed in 0..10u64 {
            let apps: Vec<Application> = (0..4)
                .map(|i| Application {
                    id: format!("a{i}").as_str().into(),
                    src: "v0".into(),
                    dest: "v5".into(),
                    e2e: 120_000 + 10_000 * (seed as Ns % 5),
                    msg_len: if i % 2 == 0 { 1500 } else { 3000 },
                    period: if i % 3 == 0 { 25_000 } else { 50_000 },
                    mtu: 1500,
                })
                .collect();
            let t = TrafficModel::build(apps, &g.time, seed).unwrap();
            let out = solve_greedy(&g, &t, &SolverConfig::default(), Policy::Full).unwrap();
            let report = validator::validate(&g, &t, &out.schedule);
            assert!(report.is_feasible(), "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn impossible_deadline_rejects() {
        let g = small_graph();
        let t = one_app(10);
        let out = solve(&g, &t, &SolverConfig::default(), Policy::Full).unwrap();
        assert_eq!(out.accepted, 0);
        assert!(!out.schedule.admission[&"a0".into()]);
    }

    #[test]
    fn deterministic_schedule_bytes() {
        let g = small_graph();
        let t = one_app(200_000);
        let cfg = SolverConfig {
            mode: SolverMode::Genetic,
            ..SolverConfig::default()
        };
        let a = solve(&g, &t, &cfg, Policy::Full).unwrap();
        let b = solve(&g, &t, &cfg, Policy::Full).unwrap();
        assert_eq!(a.schedule.to_json(), b.schedule.to_json());
    }

    #[test]
    fn bad_granularity_is_rejected() {
        let g = small_graph();
        let t = one_app(200_000);
        let cfg = SolverConfig {
            offset_granularity_ns: Some(7),
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve(&g, &t, &cfg, Policy::Full),
            Err(SolveError::InvalidConfig(_))
        ));
    }
}
