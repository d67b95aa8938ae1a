//! Compilation of a feasible schedule into per-device programs: gate control
//! lists for TAS-side nodes, cycle mapping tables and per-packet queue
//! shifts for DIP routers, and PIFO insertion ranks for egress TAS edges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cyclemap::vartheta_dip_to_dip;
use crate::error::CompileError;
use crate::model::time::{floor_mod, Ns};
use crate::model::traffic::{PacketKey, TrafficModel};
use crate::model::{NetworkGraph, NodeId};
use crate::schedule::Schedule;
use crate::validator::{analyze, Analysis};

/// One gate control entry: at `offset_ns` the gates take the given state.
/// `gate_states` is an 8-character string over {o, c}; the leftmost
/// character is Q1 and the rightmost Q8, so "ccccccco" opens queue 8.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gce {
    pub offset_ns: Ns,
    pub gate_states: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateControlList {
    pub node: NodeId,
    pub port: (NodeId, NodeId),
    /// GCL period; always the cycle time.
    pub cycle_ns: Ns,
    pub entries: Vec<Gce>,
}

/// Static cycle mapping for packets arriving from another DIP router.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DipMapEntry {
    pub ingress_cycle: i64,
    pub egress_cycle: i64,
    pub queue: u32,
}

/// Per-packet queue selection for packets arriving from a TAS edge switch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DipShiftEntry {
    pub packet: PacketKey,
    pub shift: i64,
    pub egress_cycle: i64,
    pub queue: u32,
}

/// Cycle mapping table of one (ingress link, egress link) pair at a DIP
/// router. Queues open in a circular fashion from queue 0 to queue q-1, so
/// a packet steered to cycle `y` uses queue `y mod q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DipCycleTable {
    pub node: NodeId,
    pub ingress: (NodeId, NodeId),
    pub egress: (NodeId, NodeId),
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<DipMapEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<DipShiftEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PifoEntry {
    pub packet: PacketKey,
    /// Departure offset within the cycle time; doubles as the insertion rank.
    pub rank_ns: Ns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PifoProgram {
    pub node: NodeId,
    pub port: (NodeId, NodeId),
    pub entries: Vec<PifoEntry>,
}

/// Everything one device needs to execute its share of the schedule.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DeviceProgram {
    pub node: NodeId,
    pub gcl: Vec<GateControlList>,
    pub dip_table: Vec<DipCycleTable>,
    pub pifo: Vec<PifoProgram>,
    /// Runtime provisioning derived from the same analysis: per-port
    /// scheduled departures, deterministic busy windows, and per-packet
    /// forwarding. Not part of the wire format.
    #[serde(skip)]
    pub plan: DevicePlan,
}

/// Per-port departure plans plus the priority-filter and forwarding
/// configuration the device needs at runtime.
#[derive(Debug, Clone, Default)]
pub struct DevicePlan {
    pub departures: BTreeMap<(NodeId, NodeId), Vec<PlannedDeparture>>,
    /// Busy spans of deterministic traffic per egress port, in the node's
    /// own cycle frame within `[0, t_hc)`, sorted and non-overlapping.
    /// Best-effort transmission must finish before the next span starts.
    pub det_windows: BTreeMap<(NodeId, NodeId), Vec<(Ns, Ns)>>,
    /// Next hop per scheduled packet.
    pub forward: BTreeMap<PacketKey, NodeId>,
}

#[derive(Debug, Clone)]
pub struct PlannedDeparture {
    pub offset: Ns,
    pub packet: PacketKey,
    pub queue: u32,
    pub tx: Ns,
}

fn gate_string(open: Option<u32>, det_queues: u32) -> String {
    // Queues Q8 downward are deterministic; the rest serve best effort and
    // stay open whenever no deterministic gate is open.
    let det_lo = 9 - det_queues.min(8);
    (1..=8u32)
        .map(|q| match open {
            Some(o) => {
                if q == o {
                    'o'
                } else {
                    'c'
                }
            }
            None => {
                if q >= det_lo {
                    'c'
                } else {
                    'o'
                }
            }
        })
        .collect()
}

/// Compiles the gate control lists of one TAS-side node (source host, TAS
/// switch or TAS edge switch), one list per egress port with scheduled
/// departures: a GCE opening the packet's queue at its offset and a closing
/// entry after each transmission window.
pub fn compile_gcl(
    analysis: &Analysis,
    graph: &NetworkGraph,
    node: &NodeId,
) -> Result<Vec<GateControlList>, CompileError> {
    let plans = port_plans(analysis, graph, node)?;
    let mut out = Vec::new();
    for (port, deps) in plans {
        let q = graph.link(&port.0, &port.1).unwrap().q;
        let mut entries = Vec::new();
        for (i, dep) in deps.iter().enumerate() {
            entries.push(Gce {
                offset_ns: dep.offset,
                gate_states: gate_string(Some(dep.queue), q),
            });
            let end = floor_mod(dep.offset + dep.tx, graph.time.t_ct);
            if deps[(i + 1) % deps.len()].offset != end {
                entries.push(Gce {
                    offset_ns: end,
                    gate_states: gate_string(None, q),
                });
            }
        }
        entries.sort_by_key(|e| e.offset_ns);
        out.push(GateControlList {
            node: node.clone(),
            port,
            cycle_ns: graph.time.t_ct,
            entries,
        });
    }
    Ok(out)
}

/// Sorted per-port departures of one node with round-robin queue assignment
/// from Q8 downward, as in the source-host shaping example.
fn port_plans(
    analysis: &Analysis,
    graph: &NetworkGraph,
    node: &NodeId,
) -> Result<BTreeMap<(NodeId, NodeId), Vec<PlannedDeparture>>, CompileError> {
    let mut per_port: BTreeMap<(NodeId, NodeId), Vec<(Ns, PacketKey, Ns)>> = BTreeMap::new();
    for (key, pa) in &analysis.packets {
        for (link, off, tx) in &pa.tas_windows {
            if &link.0 == node {
                per_port
                    .entry(link.clone())
                    .or_default()
                    .push((*off, key.clone(), *tx));
            }
        }
    }
    let mut out = BTreeMap::new();
    for (port, mut deps) in per_port {
        deps.sort();
        for w in deps.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CompileError::Node {
                    node: node.0.clone(),
                    reason: format!(
                        "packets {} and {} share departure offset {} on port to {}",
                        w[0].1, w[1].1, w[0].0, port.1
                    ),
                });
            }
        }
        let q = graph.link(&port.0, &port.1).unwrap().q;
        let planned = deps
            .into_iter()
            .enumerate()
            .map(|(i, (offset, packet, tx))| PlannedDeparture {
                offset,
                packet,
                queue: 8 - (i as u32 % q),
                tx,
            })
            .collect();
        out.insert(port, planned);
    }
    Ok(out)
}

/// Compiles the cycle mapping tables of one DIP router: full static tables
/// for DIP-to-DIP ingress links and per-packet shift entries for packets
/// entering from a TAS edge.
pub fn compile_dip_table(
    analysis: &Analysis,
    graph: &NetworkGraph,
    node: &NodeId,
) -> Result<Vec<DipCycleTable>, CompileError> {
    let time = &graph.time;
    let mut tables: BTreeMap<((NodeId, NodeId), (NodeId, NodeId)), DipCycleTable> =
        BTreeMap::new();
    for (key, pa) in &analysis.packets {
        // Locate this node on the packet's DIP segment via its loads.
        for (idx, (egress, cycle, _)) in pa.dip_loads.iter().enumerate() {
            if &egress.0 != node {
                continue;
            }
            let ingress = if idx == 0 {
                // First DIP node: upstream is the ingress TAS edge.
                pa.tas_windows
                    .iter()
                    .rfind(|(l, _, _)| l.1 == egress.0)
                    .map(|(l, _, _)| l.clone())
            } else {
                Some(pa.dip_loads[idx - 1].0.clone())
            }
            .expect("route structure provides an upstream link");
            let table = tables
                .entry((ingress.clone(), egress.clone()))
                .or_insert_with(|| DipCycleTable {
                    node: node.clone(),
                    ingress: ingress.clone(),
                    egress: egress.clone(),
                    entries: Vec::new(),
                    shifts: Vec::new(),
                });
            let q = graph.link(&egress.0, &egress.1).unwrap().q;
            if idx == 0 {
                table.shifts.push(DipShiftEntry {
                    packet: key.clone(),
                    shift: pa.shift,
                    egress_cycle: *cycle,
                    queue: (*cycle % q as i64) as u32,
                });
            } else if table.entries.is_empty() {
                let link = graph.link(&ingress.0, &ingress.1).unwrap();
                let delta = graph.epoch_offset(link).0;
                for x in 0..time.n_dip {
                    let y = vartheta_dip_to_dip(x, link.d, delta, time)?;
                    table.entries.push(DipMapEntry {
                        ingress_cycle: x,
                        egress_cycle: y,
                        queue: (y % q as i64) as u32,
                    });
                }
            }
        }
    }
    Ok(tables.into_values().collect())
}

/// Compiles the PIFO insertion program of one egress TAS edge switch: one
/// entry per packet with its departure offset as the rank.
pub fn compile_pifo(
    analysis: &Analysis,
    _graph: &NetworkGraph,
    node: &NodeId,
) -> Result<Vec<PifoProgram>, CompileError> {
    let mut per_port: BTreeMap<(NodeId, NodeId), Vec<PifoEntry>> = BTreeMap::new();
    for (key, pa) in &analysis.packets {
        let Some(rank) = pa.timing.egress_rank else {
            continue;
        };
        // The egress edge hop is the TAS window right after the DIP segment.
        let Some((egress_link, _, _)) = pa
            .tas_windows
            .iter()
            .find(|(l, off, _)| l.0 == *node && *off == rank)
        else {
            continue;
        };
        if pa.dip_loads.last().map(|(l, _, _)| &l.1) != Some(node) {
            continue;
        }
        per_port
            .entry(egress_link.clone())
            .or_default()
            .push(PifoEntry {
                packet: key.clone(),
                rank_ns: rank,
            });
    }
    let mut out = Vec::new();
    for (port, mut entries) in per_port {
        entries.sort_by(|a, b| (a.rank_ns, &a.packet).cmp(&(b.rank_ns, &b.packet)));
        for w in entries.windows(2) {
            if w[0].rank_ns == w[1].rank_ns {
                return Err(CompileError::Node {
                    node: node.0.clone(),
                    reason: format!(
                        "duplicate PIFO rank {} for {} and {}",
                        w[0].rank_ns, w[0].packet, w[1].packet
                    ),
                });
            }
        }
        out.push(PifoProgram {
            node: node.clone(),
            port,
            entries,
        });
    }
    Ok(out)
}

/// Compiles programs for every node touched by the schedule.
pub fn compile(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    schedule: &Schedule,
) -> Result<BTreeMap<NodeId, DeviceProgram>, CompileError> {
    let (analysis, domain) = analyze(graph, traffic, schedule);
    if let Some(v) = domain.first() {
        return Err(CompileError::Node {
            node: String::new(),
            reason: format!("schedule is not compilable: {v:?}"),
        });
    }
    let mut out: BTreeMap<NodeId, DeviceProgram> = BTreeMap::new();
    for node in graph.nodes() {
        let mut prog = DeviceProgram {
            node: node.id.clone(),
            ..DeviceProgram::default()
        };
        if node.kind.is_tas_side() {
            prog.gcl = compile_gcl(&analysis, graph, &node.id)?;
            prog.plan.departures = port_plans(&analysis, graph, &node.id)?;
            prog.pifo = compile_pifo(&analysis, graph, &node.id)?;
            for (port, deps) in &prog.plan.departures {
                let mut spans = Vec::new();
                for d in deps {
                    let end = d.offset + d.tx;
                    if end <= graph.time.t_hc {
                        spans.push((d.offset, end));
                    } else {
                        spans.push((d.offset, graph.time.t_hc));
                        spans.push((0, end - graph.time.t_hc));
                    }
                }
                prog.plan
                    .det_windows
                    .insert(port.clone(), merge_spans(spans));
            }
        }
        if node.kind.is_dip() {
            prog.dip_table = compile_dip_table(&analysis, graph, &node.id)?;
        }
        if !prog.gcl.is_empty() || !prog.dip_table.is_empty() || !prog.pifo.is_empty() {
            out.insert(node.id.clone(), prog);
        }
    }
    // DIP busy windows: back-to-back transmission from each loaded cycle's
    // start; the capacity constraint keeps every span inside its cycle.
    let mut dip_busy: BTreeMap<(NodeId, NodeId), BTreeMap<i64, Ns>> = BTreeMap::new();
    for pa in analysis.packets.values() {
        for (link, cycle, _) in &pa.dip_loads {
            let l = graph.link(&link.0, &link.1).unwrap();
            *dip_busy
                .entry(link.clone())
                .or_default()
                .entry(*cycle)
                .or_default() += l.tx_time(pa.len);
        }
    }
    for (link, cycles) in dip_busy {
        let spans = cycles
            .into_iter()
            .map(|(c, busy)| (c * graph.time.t_dip, c * graph.time.t_dip + busy))
            .collect();
        out.get_mut(&link.0)
            .expect("DIP node with load has a program")
            .plan
            .det_windows
            .insert(link, merge_spans(spans));
    }
    // Per-packet forwarding entries along each accepted route.
    for (app, route) in &schedule.routes {
        if !schedule.is_accepted(app) {
            continue;
        }
        let nodes = route.nodes();
        for key in analysis.packets.keys().filter(|k| &k.app == app) {
            for a in 0..route.hops() {
                out.get_mut(&nodes[a])
                    .expect("every transmitting hop has a program")
                    .plan
                    .forward
                    .insert(key.clone(), nodes[a + 1].clone());
            }
        }
    }
    Ok(out)
}

fn merge_spans(mut spans: Vec<(Ns, Ns)>) -> Vec<(Ns, Ns)> {
    spans.sort();
    let mut out: Vec<(Ns, Ns)> = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Serializes programs as one JSON document, an array of per-node objects.
pub fn programs_to_json(programs: &BTreeMap<NodeId, DeviceProgram>) -> String {
    let list: Vec<&DeviceProgram> = programs.values().collect();
    serde_json::to_string_pretty(&list).expect("program serialization")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::time::TimeConfig;
    use crate::model::traffic::{Application, TrafficModel};
    use crate::model::{build_graph, Link, Node, NodeKind};
    use crate::schedule::Route;

    fn graph() -> NetworkGraph {
        let time = TimeConfig::new(2_000_000, 10_000).unwrap();
        let kinds = [
            NodeKind::SourceHost,
            NodeKind::TasEdgeSwitch,
            NodeKind::DipEdgeRouter,
            NodeKind::DipRouter,
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
        let links = (0..6)
            .map(|i| Link {
                src: NodeId::new(format!("v{i}")),
                dst: NodeId::new(format!("v{}", i + 1)),
                bw: if i == 0 || i == 5 {
                    1_000_000_000
                } else {
                    10_000_000_000
                },
                d: if (1..=4).contains(&i) { 150_000 } else { 1_500 },
                q: if i == 0 { 8 } else { 4 },
            })
            .collect();
        build_graph(nodes, links, time).unwrap()
    }

    fn schedule_two_apps(g: &NetworkGraph) -> (TrafficModel, Schedule) {
        let mk = |id: &str| Application {
            id: id.into(),
            src: "v0".into(),
            dest: "v6".into(),
            e2e: 1_900_000,
            msg_len: 3000,
            period: 2_000_000,
            mtu: 1500,
        };
        let traffic = TrafficModel::build(vec![mk("a0"), mk("a1")], &g.time, 9).unwrap();
        let route = Route::new(
            g,
            (0..7).map(|i| NodeId::new(format!("v{i}"))).collect(),
        )
        .unwrap();
        let mut s = Schedule::default();
        for (ai, id) in ["a0", "a1"].iter().enumerate() {
            s.admission.insert((*id).into(), true);
            s.routes.insert((*id).into(), route.clone());
            for pkt in 1..=2u32 {
                let key = PacketKey {
                    app: (*id).into(),
                    msg: 1,
                    pkt,
                };
                // Four spaced departures in app-then-packet order.
                let slot = (ai as Ns) * 2 + (pkt as Ns - 1);
                s.src_offsets.insert(key.clone(), 100_000 + slot * 20_000);
                s.cycle_shifts.insert(key.clone(), 1);
                s.extra_delays.insert(key, 5_000);
            }
        }
        (traffic, s)
    }

    #[test]
    fn source_host_gce_strings_rotate_from_q8() {
        let g = graph();
        let (traffic, schedule) = schedule_two_apps(&g);
        let (analysis, domain) = analyze(&g, &traffic, &schedule);
        assert!(domain.is_empty(), "{domain:?}");
        let gcls = compile_gcl(&analysis, &g, &"v0".into()).unwrap();
        assert_eq!(gcls.len(), 1);
        let opens: Vec<&str> = gcls[0]
            .entries
            .iter()
            .filter(|e| e.gate_states.matches('o').count() == 1)
            .map(|e| e.gate_states.as_str())
            .collect();
        // Departure order gets Q8, Q7, Q6, Q5.
        assert_eq!(
            opens,
            vec!["ccccccco", "ccccccoc", "cccccocc", "ccccoccc"]
        );
    }

    #[test]
    fn gcl_has_closing_entries_and_sorted_offsets() {
        let g = graph();
        let (traffic, schedule) = schedule_two_apps(&g);
        let (analysis, _) = analyze(&g, &traffic, &schedule);
        let gcls = compile_gcl(&analysis, &g, &"v0".into()).unwrap();
        let entries = &gcls[0].entries;
        // Four departures, each followed by a distinct closing entry.
        assert_eq!(entries.len(), 8);
        for w in entries.windows(2) {
            assert!(w[0].offset_ns < w[1].offset_ns);
        }
        // Closing entries leave best-effort queues open (q = 8 on the host
        // port leaves none).
        assert!(entries[1].gate_states.chars().all(|c| c == 'c'));
    }

    #[test]
    fn empty_schedule_compiles_to_no_programs() {
        let g = graph();
        let (traffic, _) = schedule_two_apps(&g);
        let programs = compile(&g, &traffic, &Schedule::default()).unwrap();
        assert!(programs.is_empty());
    }

    #[test]
    fn core_table_is_identity_plus_one_for_zero_delay() {
        // d = 0 and delta = 0 between two core hops.
        let time = TimeConfig::new(50_000, 10_000).unwrap();
        let kinds = [
            NodeKind::SourceHost,
            NodeKind::TasEdgeSwitch,
            NodeKind::DipEdgeRouter,
            NodeKind::DipRouter,
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
        let links = (0..6)
            .map(|i| Link {
                src: NodeId::new(format!("v{i}")),
                dst: NodeId::new(format!("v{}", i + 1)),
                bw: 10_000_000_000,
                d: 0,
                q: 5,
            })
            .collect();
        let g = build_graph(nodes, links, time).unwrap();
        let traffic = TrafficModel::build(
            vec![Application {
                id: "a0".into(),
                src: "v0".into(),
                dest: "v6".into(),
                e2e: 1_000_000,
                msg_len: 1500,
                period: 50_000,
                mtu: 1500,
            }],
            &g.time,
            1,
        )
        .unwrap();
        let route = Route::new(
            &g,
            (0..7).map(|i| NodeId::new(format!("v{i}"))).collect(),
        )
        .unwrap();
        let mut s = Schedule::default();
        s.admission.insert("a0".into(), true);
        s.routes.insert("a0".into(), route);
        let key = PacketKey {
            app: "a0".into(),
            msg: 1,
            pkt: 1,
        };
        s.src_offsets.insert(key.clone(), 0);
        s.cycle_shifts.insert(key.clone(), 1);
        s.extra_delays.insert(key, 0);

        let (analysis, _) = analyze(&g, &traffic, &s);
        let tables = compile_dip_table(&analysis, &g, &"v3".into()).unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].entries.len(), 5);
        for e in &tables[0].entries {
            assert_eq!(e.egress_cycle, (e.ingress_cycle + 1) % 5);
            assert_eq!(e.queue as i64, e.egress_cycle % 5);
        }
        // The edge router's table carries the per-packet shift instead.
        let edge = compile_dip_table(&analysis, &g, &"v2".into()).unwrap();
        assert_eq!(edge.len(), 1);
        assert_eq!(edge[0].shifts.len(), 1);
        assert_eq!(edge[0].shifts[0].shift, 1);
        assert!(edge[0].entries.is_empty());
    }

    #[test]
    fn pifo_ranks_match_egress_offsets() {
        let g = graph();
        let (traffic, schedule) = schedule_two_apps(&g);
        let (analysis, _) = analyze(&g, &traffic, &schedule);
        let pifos = compile_pifo(&analysis, &g, &"v5".into()).unwrap();
        assert_eq!(pifos.len(), 1);
        assert_eq!(pifos[0].entries.len(), 4);
        for e in &pifos[0].entries {
            assert_eq!(
                Some(e.rank_ns),
                analysis.packets[&e.packet].timing.egress_rank
            );
        }
        // Ranks are unique per port.
        for w in pifos[0].entries.windows(2) {
            assert_ne!(w[0].rank_ns, w[1].rank_ns);
        }
    }
}
