//! Schedule feasibility checks: TAS link conflicts, DIP cycle capacity,
//! application deadlines and decision-variable domains.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cyclemap::{self, CycleShift, ExtraDelay, PacketTiming, PacketVars};
use crate::model::time::Ns;
use crate::model::traffic::{fragment, AppId, PacketKey, TrafficModel};
use crate::model::{NetworkGraph, NodeId};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    Conflict,
    Capacity,
    Deadline,
    Domain,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// Two packets overlap in time on a TAS-side link.
    Conflict {
        link: (NodeId, NodeId),
        first: PacketKey,
        second: PacketKey,
        overlap_ns: Ns,
    },
    /// A DIP cycle carries more bytes than it can transmit.
    Capacity {
        link: (NodeId, NodeId),
        cycle: i64,
        used_bytes: u64,
        capacity_bytes: u64,
    },
    /// An application's worst packet delay exceeds its deadline.
    Deadline {
        app: AppId,
        delay_ns: Ns,
        e2e_ns: Ns,
        miss_ns: Ns,
    },
    /// A decision variable is missing or outside its domain.
    Domain { subject: String, reason: String },
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::Conflict { .. } => ViolationKind::Conflict,
            Violation::Capacity { .. } => ViolationKind::Capacity,
            Violation::Deadline { .. } => ViolationKind::Deadline,
            Violation::Domain { .. } => ViolationKind::Domain,
        }
    }
}

/// Result of validating a schedule; empty iff the schedule is feasible.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind() == kind).count()
    }

    /// Number of violations attributable to each accepted application.
    pub fn per_app_counts(&self, analysis: &Analysis) -> BTreeMap<AppId, usize> {
        let mut counts: BTreeMap<AppId, usize> = BTreeMap::new();
        let mut bump = |app: &AppId| *counts.entry(app.clone()).or_default() += 1;
        for v in &self.violations {
            match v {
                Violation::Conflict { first, second, .. } => {
                    bump(&first.app);
                    if second.app != first.app {
                        bump(&second.app);
                    }
                }
                Violation::Capacity { link, cycle, .. } => {
                    for (key, pa) in &analysis.packets {
                        if pa.dip_loads.iter().any(|(l, c, _)| l == link && c == cycle) {
                            bump(&key.app);
                        }
                    }
                }
                Violation::Deadline { app, .. } => bump(app),
                Violation::Domain { subject, .. } => {
                    // The subject is either a packet key or a bare app id.
                    match PacketKey::parse(subject) {
                        Some(key) => bump(&key.app),
                        None => bump(&AppId::new(subject.clone())),
                    }
                }
            }
        }
        counts
    }
}

/// Per-packet analysis of an accepted application.
#[derive(Debug, Clone)]
pub struct PacketAnalysis {
    pub len: u32,
    pub timing: PacketTiming,
    /// Bound cycle shift and extra delay values.
    pub shift: i64,
    pub extra: Ns,
    /// Transmit windows `(link, offset, tx)` on TAS-side links.
    pub tas_windows: Vec<((NodeId, NodeId), Ns, Ns)>,
    /// `(link, cycle label, bytes)` occupancy on DIP-sourced links.
    pub dip_loads: Vec<((NodeId, NodeId), i64, u64)>,
}

/// Timing analysis of every packet of every accepted application.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub packets: BTreeMap<PacketKey, PacketAnalysis>,
}

/// Computes per-packet timings for all accepted applications. Packets whose
/// variables are unbound or out of domain produce `Domain` violations and are
/// left out of the analysis.
pub fn analyze(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> (Analysis, Vec<Violation>) {
    let mut analysis = Analysis::default();
    let mut domain = Vec::new();
    for app_id in schedule.accepted() {
        let Some(app) = traffic.apps.get(app_id) else {
            domain.push(Violation::Domain {
                subject: app_id.to_string(),
                reason: "accepted application is not part of the traffic model".into(),
            });
            continue;
        };
        let Some(route) = schedule.routes.get(app_id) else {
            domain.push(Violation::Domain {
                subject: app_id.to_string(),
                reason: "accepted application has no route".into(),
            });
            continue;
        };
        if route.nodes()[0] != app.src || route.nodes()[route.hops()] != app.dest {
            domain.push(Violation::Domain {
                subject: app_id.to_string(),
                reason: "route endpoints do not match the application".into(),
            });
            continue;
        }
        for packet in fragment(app, &graph.time) {
            let key = packet.key.clone();
            let Some(&src_offset) = schedule.src_offsets.get(&key) else {
                domain.push(Violation::Domain {
                    subject: key.to_string(),
                    reason: "source offset is unbound".into(),
                });
                continue;
            };
            let needs_dip = route.dip_span().is_some();
            let shift_raw = schedule.cycle_shifts.get(&key).copied();
            let extra_raw = schedule.extra_delays.get(&key).copied();
            if needs_dip && (shift_raw.is_none() || extra_raw.is_none()) {
                domain.push(Violation::Domain {
                    subject: key.to_string(),
                    reason: "cycle shift or extra delay is unbound".into(),
                });
                continue;
            }
            let shift_q = route
                .dip_span()
                .map(|(k, _)| route.link(graph, k + 1).q)
                .unwrap_or(2);
            let shift = match CycleShift::new(shift_raw.unwrap_or(0), shift_q) {
                Ok(s) => s,
                Err(e) => {
                    domain.push(Violation::Domain {
                        subject: key.to_string(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let extra = match ExtraDelay::new(extra_raw.unwrap_or(0), &graph.time) {
                Ok(e) => e,
                Err(e) => {
                    domain.push(Violation::Domain {
                        subject: key.to_string(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let vars = PacketVars {
                msg_offset: traffic.message(app_id, key.msg).arrival_offset,
                src_offset,
                shift,
                extra,
            };
            let timing = match cyclemap::packet_timing(graph, route, packet.len, &vars) {
                Ok(t) => t,
                Err(e) => {
                    domain.push(Violation::Domain {
                        subject: key.to_string(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let mut tas_windows = Vec::new();
            for (a, offset) in timing.tas_offsets.iter().enumerate() {
                if let Some(off) = offset {
                    let link = route.link(graph, a);
                    tas_windows.push((
                        (link.src.clone(), link.dst.clone()),
                        *off,
                        link.tx_time(packet.len),
                    ));
                }
            }
            let mut dip_loads = Vec::new();
            if let Some((k, m)) = route.dip_span() {
                for (idx, a) in (k + 1..=m).enumerate() {
                    let link = route.link(graph, a);
                    dip_loads.push((
                        (link.src.clone(), link.dst.clone()),
                        timing.cycles.0[idx],
                        packet.len as u64,
                    ));
                }
            }
            analysis.packets.insert(
                key,
                PacketAnalysis {
                    len: packet.len,
                    timing,
                    shift: shift.value(),
                    extra: extra.value(),
                    tas_windows,
                    dip_loads,
                },
            );
        }
    }
    (analysis, domain)
}

fn conflicts_of(analysis: &Analysis, graph: &NetworkGraph) -> Vec<Violation> {
    let t_ct = graph.time.t_ct;
    // Gather windows per TAS-side link.
    let mut per_link: BTreeMap<(NodeId, NodeId), Vec<(Ns, Ns, PacketKey)>> = BTreeMap::new();
    for (key, pa) in &analysis.packets {
        for (link, off, tx) in &pa.tas_windows {
            per_link
                .entry(link.clone())
                .or_default()
                .push((*off, *tx, key.clone()));
        }
    }
    let mut out = Vec::new();
    for (link, mut windows) in per_link {
        if windows.len() < 2 {
            continue;
        }
        // Sort on the [0, t_ct) circle and check consecutive gaps, including
        // the wrap pair; this finds a violation iff some pair overlaps.
        windows.sort();
        for i in 0..windows.len() {
            let (s1, tx1, k1) = &windows[i];
            let (s2, _tx2, k2) = &windows[(i + 1) % windows.len()];
            let gap = if i + 1 < windows.len() {
                s2 - (s1 + tx1)
            } else {
                s2 + t_ct - (s1 + tx1)
            };
            if gap < 0 {
                out.push(Violation::Conflict {
                    link: link.clone(),
                    first: k1.clone(),
                    second: k2.clone(),
                    overlap_ns: -gap,
                });
            }
        }
    }
    out
}

fn capacity_of(analysis: &Analysis, graph: &NetworkGraph) -> Vec<Violation> {
    let mut used: BTreeMap<((NodeId, NodeId), i64), u64> = BTreeMap::new();
    for pa in analysis.packets.values() {
        for (link, cycle, bytes) in &pa.dip_loads {
            *used.entry((link.clone(), *cycle)).or_default() += bytes;
        }
    }
    let mut out = Vec::new();
    for ((link, cycle), used_bytes) in used {
        let l = graph.link(&link.0, &link.1).expect("analyzed link exists");
        let capacity_bytes = l.cycle_capacity_bytes(&graph.time);
        if used_bytes > capacity_bytes {
            out.push(Violation::Capacity {
                link,
                cycle,
                used_bytes,
                capacity_bytes,
            });
        }
    }
    out
}

fn deadlines_of(analysis: &Analysis, traffic: &TrafficModel) -> Vec<Violation> {
    let mut worst: BTreeMap<AppId, Ns> = BTreeMap::new();
    for (key, pa) in &analysis.packets {
        let w = worst.entry(key.app.clone()).or_insert(pa.timing.delay);
        *w = (*w).max(pa.timing.delay);
    }
    let mut out = Vec::new();
    for (app, delay) in worst {
        let e2e = traffic.apps[&app].e2e;
        if delay > e2e {
            out.push(Violation::Deadline {
                app,
                delay_ns: delay,
                e2e_ns: e2e,
                miss_ns: delay - e2e,
            });
        }
    }
    out
}

/// TAS conflict constraint over all links with TAS-side sources.
pub fn check_conflicts(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> Vec<Violation> {
    let (analysis, _) = analyze(graph, traffic, schedule);
    conflicts_of(&analysis, graph)
}

/// DIP cycle capacity constraint over all DIP-sourced links.
pub fn check_capacity(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> Vec<Violation> {
    let (analysis, _) = analyze(graph, traffic, schedule);
    capacity_of(&analysis, graph)
}

/// Deadline constraint: the worst packet delay of each accepted application
/// must not exceed its end-to-end bound.
pub fn check_deadlines(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> Vec<Violation> {
    let (analysis, _) = analyze(graph, traffic, schedule);
    deadlines_of(&analysis, traffic)
}

/// Full feasibility check: domain, conflict, capacity and deadline.
pub fn validate(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> ViolationReport {
    let (analysis, mut violations) = analyze(graph, traffic, schedule);
    violations.extend(conflicts_of(&analysis, graph));
    violations.extend(capacity_of(&analysis, graph));
    violations.extend(deadlines_of(&analysis, traffic));
    ViolationReport { violations }
}

/// `validate` plus the analysis it was computed from.
pub fn validate_with_analysis(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> (ViolationReport, Analysis) {
    let (analysis, mut violations) = analyze(graph, traffic, schedule);
    violations.extend(conflicts_of(&analysis, graph));
    violations.extend(capacity_of(&analysis, graph));
    violations.extend(deadlines_of(&analysis, traffic));
    (ViolationReport { violations }, analysis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::time::TimeConfig;
    use crate::model::traffic::Application;
    use crate::model::{build_graph, Link, Node, NodeKind};
    use crate::schedule::Route;

    fn graph() -> NetworkGraph {
        let time = TimeConfig::new(2_000_000, 10_000).unwrap();
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
        // Host links at 1 Gbps; boundary and core links at 10 Gbps so an MTU
        // packet fits inside one DIP cycle.
        let links = (0..5)
            .map(|i| Link {
                src: NodeId::new(format!("v{i}")),
                dst: NodeId::new(format!("v{}", i + 1)),
                bw: if i == 0 || i == 4 {
                    1_000_000_000
                } else {
                    10_000_000_000
                },
                d: if i == 2 { 150_000 } else { 1_500 },
                q: 8,
            })
            .collect();
        build_graph(nodes, links, time).unwrap()
    }

    fn two_app_traffic(graph: &NetworkGraph) -> TrafficModel {
        let mk = |id: &str| Application {
            id: id.into(),
            src: "v0".into(),
            dest: "v5".into(),
            e2e: 1_500_000,
            msg_len: 1500,
            period: 2_000_000,
            mtu: 1500,
        };
        TrafficModel::build(vec![mk("a0"), mk("a1")], &graph.time, 0).unwrap()
    }

    fn key(app: &str) -> PacketKey {
        PacketKey {
            app: app.into(),
            msg: 1,
            pkt: 1,
        }
    }

    fn schedule_with_offsets(graph: &NetworkGraph, off0: Ns, off1: Ns) -> Schedule {
        let route = Route::new(
            graph,
            ["v0", "v1", "v2", "v3", "v4", "v5"]
                .iter()
                .map(|&s| NodeId::new(s))
                .collect(),
        )
        .unwrap();
        let mut s = Schedule::default();
        // Distinct extra delays keep the egress-edge ranks from colliding,
        // so only the source-link offsets decide these tests.
        for (id, off, extra) in [("a0", off0, 0), ("a1", off1, 5_000)] {
            s.admission.insert(id.into(), true);
            s.routes.insert(id.into(), route.clone());
            s.src_offsets.insert(key(id), off);
            s.cycle_shifts.insert(key(id), 0);
            s.extra_delays.insert(key(id), extra);
        }
        s
    }

    #[test]
    fn empty_schedule_is_feasible() {
        let g = graph();
        let t = two_app_traffic(&g);
        let report = validate(&g, &t, &Schedule::default());
        assert!(report.is_feasible());
    }

    #[test]
    fn boundary_touch_is_not_a_conflict() {
        // Arrival offsets are seeded; pick offsets relative to them below.
        let g = graph();
        let t = two_app_traffic(&g);
        // tx on the first link is 12,000 ns; offsets 0 and 12,000 touch.
        let s = schedule_with_offsets(&g, 0, 12_000);
        assert!(check_conflicts(&g, &t, &s).is_empty());
        // 11,999 overlaps by 1 ns.
        let s = schedule_with_offsets(&g, 0, 11_999);
        let conflicts = check_conflicts(&g, &t, &s);
        assert_eq!(conflicts.len(), 1);
        match &conflicts[0] {
            Violation::Conflict { overlap_ns, .. } => assert_eq!(*overlap_ns, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_packet_never_conflicts() {
        let g = graph();
        let t = two_app_traffic(&g);
        let mut s = schedule_with_offsets(&g, 0, 12_000);
        s.evict(&"a1".into());
        assert!(check_conflicts(&g, &t, &s).is_empty());
    }

    #[test]
    fn equal_offsets_conflict() {
        let g = graph();
        let t = two_app_traffic(&g);
        let s = schedule_with_offsets(&g, 40_000, 40_000);
        assert!(!check_conflicts(&g, &t, &s).is_empty());
    }

    #[test]
    fn capacity_boundary_from_core_parameters() {
        // 10 Gbps and 10 us: 12,500 bytes per cycle. Eight 1500-byte packets
        // fit; nine do not.
        let g = graph();
        let core = g.link(&"v2".into(), &"v3".into()).unwrap();
        assert_eq!(core.cycle_capacity_bytes(&g.time), 12_500);

        let mk = |i: usize| Application {
            id: format!("a{i}").as_str().into(),
            src: "v0".into(),
            dest: "v5".into(),
            e2e: 1_900_000,
            msg_len: 1500,
            period: 2_000_000,
            mtu: 1500,
        };
        let route_nodes: Vec<NodeId> = ["v0", "v1", "v2", "v3", "v4", "v5"]
            .iter()
            .map(|&s| NodeId::new(s))
            .collect();
        for count in [8usize, 9] {
            let apps: Vec<Application> = (0..count).map(mk).collect();
            let t = TrafficModel::build(apps, &g.time, 0).unwrap();
            let mut s = Schedule::default();
            for i in 0..count {
                let id: AppId = format!("a{i}").as_str().into();
                s.admission.insert(id.clone(), true);
                s.routes
                    .insert(id.clone(), Route::new(&g, route_nodes.clone()).unwrap());
                let k = PacketKey {
                    app: id,
                    msg: 1,
                    pkt: 1,
                };
                // Identical offsets land every packet in the same DIP cycle.
                // The TAS conflicts this creates are not this check's concern.
                s.src_offsets.insert(k.clone(), 0);
                s.cycle_shifts.insert(k.clone(), 0);
                s.extra_delays.insert(k, 0);
            }
            let caps = check_capacity(&g, &t, &s);
            if count == 8 {
                assert!(caps.is_empty(), "8 packets fit: {caps:?}");
            } else {
                assert!(!caps.is_empty(), "9 packets overflow");
            }
        }
    }

    #[test]
    fn deadline_boundary_is_inclusive() {
        let g = graph();
        let mut apps = vec![Application {
            id: "a0".into(),
            src: "v0".into(),
            dest: "v5".into(),
            e2e: 1,
            msg_len: 1500,
            period: 2_000_000,
            mtu: 1500,
        }];
        // First compute the analytic delay with a generous deadline.
        apps[0].e2e = 1_900_000;
        let t = TrafficModel::build(apps.clone(), &g.time, 0).unwrap();
        let s = schedule_with_offsets(&g, 0, 12_000);
        let (_, analysis) = validate_with_analysis(&g, &t, &s);
        let delay = analysis.packets[&key("a0")].timing.delay;

        // Deadline exactly at the delay: feasible (inclusive bound).
        apps[0].e2e = delay;
        let t = TrafficModel::build(apps.clone(), &g.time, 0).unwrap();
        assert!(check_deadlines(&g, &t, &s).is_empty());

        // One nanosecond tighter: violation.
        apps[0].e2e = delay - 1;
        let t = TrafficModel::build(apps, &g.time, 0).unwrap();
        let misses = check_deadlines(&g, &t, &s);
        assert_eq!(misses.len(), 1);
        match &misses[0] {
            Violation::Deadline { app, miss_ns, .. } => {
                assert_eq!(app, &AppId::new("a0"));
                assert_eq!(*miss_ns, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multi_packet_message_uses_latest_packet() {
        let g = graph();
        let apps = vec![Application {
            id: "a0".into(),
            src: "v0".into(),
            dest: "v5".into(),
            e2e: 1_900_000,
            msg_len: 3000,
            period: 2_000_000,
            mtu: 1500,
        }];
        let t = TrafficModel::build(apps, &g.time, 0).unwrap();
        let route = Route::new(
            &g,
            ["v0", "v1", "v2", "v3", "v4", "v5"]
                .iter()
                .map(|&s| NodeId::new(s))
                .collect(),
        )
        .unwrap();
        let mut s = Schedule::default();
        s.admission.insert("a0".into(), true);
        s.routes.insert("a0".into(), route);
        for pkt in 1..=2 {
            let k = PacketKey {
                app: "a0".into(),
                msg: 1,
                pkt,
            };
            s.src_offsets.insert(k.clone(), (pkt as Ns - 1) * 12_000);
            s.cycle_shifts.insert(k.clone(), 0);
            s.extra_delays.insert(k, 0);
        }
        let (_, analysis) = validate_with_analysis(&g, &t, &s);
        let d1 = analysis.packets[&PacketKey { app: "a0".into(), msg: 1, pkt: 1 }]
            .timing
            .delay;
        let d2 = analysis.packets[&PacketKey { app: "a0".into(), msg: 1, pkt: 2 }]
            .timing
            .delay;
        assert!(d2 > d1, "second packet departs later and lands later");
    }

    #[test]
    fn unbound_variables_are_domain_violations() {
        let g = graph();
        let t = two_app_traffic(&g);
        let mut s = schedule_with_offsets(&g, 0, 12_000);
        s.src_offsets.remove(&key("a1"));
        let report = validate(&g, &t, &s);
        assert_eq!(report.count(ViolationKind::Domain), 1);
    }

    #[test]
    fn one_violation_of_each_kind() {
        let g = graph();
        let mk = |id: &str, e2e: Ns| Application {
            id: id.into(),
            src: "v0".into(),
            dest: "v5".into(),
            e2e,
            msg_len: 1500,
            period: 2_000_000,
            mtu: 1500,
        };
        let t = TrafficModel::build(
            vec![mk("a0", 1_900_000), mk("a1", 1_900_000), mk("a2", 1)],
            &g.time,
            0,
        )
        .unwrap();
        let route = Route::new(
            &g,
            ["v0", "v1", "v2", "v3", "v4", "v5"]
                .iter()
                .map(|&s| NodeId::new(s))
                .collect(),
        )
        .unwrap();
        let mut s = Schedule::default();
        for (id, off) in [("a0", 0), ("a1", 0), ("a2", 100_000)] {
            s.admission.insert(id.into(), true);
            s.routes.insert(id.into(), route.clone());
            s.src_offsets.insert(key(id), off);
            s.cycle_shifts.insert(key(id), 0);
            s.extra_delays.insert(key(id), if id == "a2" { -1 } else { 0 });
        }
        let report = validate(&g, &t, &s);
        assert!(report.count(ViolationKind::Conflict) >= 1);
        assert!(report.count(ViolationKind::Domain) >= 1);
        // a2 is excluded by its domain problem, so the deadline check needs
        // another offender: a0 and a1 share offset 0 (conflict) and a2's
        // deadline of 1 ns would have been missed had it analyzed; build a
        // separate deadline case instead.
        let mut s2 = schedule_with_offsets(&g, 0, 12_000);
        s2.extra_delays.insert(key("a0"), 0);
        let t2 = TrafficModel::build(vec![mk("a0", 1), mk("a1", 1_900_000)], &g.time, 0).unwrap();
        let r2 = validate(&g, &t2, &s2);
        assert!(r2.count(ViolationKind::Deadline) >= 1);
    }

    #[test]
    fn validator_is_pure() {
        let g = graph();
        let t = two_app_traffic(&g);
        let s = schedule_with_offsets(&g, 0, 11_999);
        let a = format!("{:?}", validate(&g, &t, &s));
        let b = format!("{:?}", validate(&g, &t, &s));
        assert_eq!(a, b);
    }
}
