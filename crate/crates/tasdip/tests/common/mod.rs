//! Test oracles, independent of the implementation paths they check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use tasdip::model::scenario::Scenario;
use tasdip::model::time::{floor_mod, tx_time, Ns};
use tasdip::model::traffic::{fragment, AppId, PacketKey};
use tasdip::model::{NetworkGraph, NodeId};
use tasdip::schedule::{Route, Schedule};
use tasdip::sim::trace::SimTrace;
use tasdip::solver::enumerate_routes;
use tasdip::validator;

/// First instant `>= t` on the grid `epoch + k * step`.
fn next_boundary(t: Ns, epoch: Ns, step: Ns) -> Ns {
    epoch + (t - epoch + step - 1).div_euclid(step) * step
}

/// Walks one packet through its route in absolute time and returns its
/// end-to-end delay. Built directly from the transmission semantics —
/// immediate store-and-forward in TAS segments, "first cycle boundary at or
/// after availability" in the DIP segment, the worst-case cycle-end hand-off
/// between routers, and the bound-plus-extra-delay hold at the egress edge —
/// without any of the modular offset arithmetic of the implementation.
pub fn single_packet_delay(
    graph: &NetworkGraph,
    route: &[NodeId],
    len: u32,
    msg_offset: Ns,
    src_offset: Ns,
    shift: i64,
    extra: Ns,
) -> Ns {
    let time = graph.time;
    let kind = |id: &NodeId| graph.node(id).unwrap().kind;
    let epoch = |id: &NodeId| graph.node(id).unwrap().epoch;
    let arrival0 = epoch(&route[0]) + msg_offset;
    // The source gate opens at the first instant with the packet's offset.
    let mut t = arrival0 + floor_mod(src_offset - msg_offset, time.t_ct);
    for i in 0..route.len() - 1 {
        let link = graph.link(&route[i], &route[i + 1]).unwrap();
        if kind(&route[i]).is_dip() {
            // `t` is the instant the packet is available here: the actual
            // arrival when coming from TAS, the worst-case bound otherwise.
            let mut b = next_boundary(t, epoch(&route[i]), time.t_dip);
            if !kind(&route[i - 1]).is_dip() {
                b += shift * time.t_dip;
            }
            // Downstream sees it no later than its cycle end plus the wire.
            t = b + time.t_dip + link.d;
        } else {
            if i > 0 && kind(&route[i - 1]).is_dip() {
                // Egress edge holds until the bound plus the extra delay.
                t += extra;
            }
            t = t + tx_time(len, link.bw) + link.d;
        }
    }
    t - arrival0
}

/// Independent exhaustive admission maximization over the same discretized
/// domains as the solver: depth-first over applications in id order, every
/// (route, offset, shift, extra) combination per packet, feasibility decided
/// solely by the public validator.
pub fn brute_force_max_accepted(scenario: &Scenario, k_routes: usize, granularity: Ns) -> usize {
    let graph = &scenario.graph;
    let traffic = &scenario.traffic;
    let time = &graph.time;

    struct Candidate {
        route: Route,
        per_packet: Vec<(PacketKey, Ns, i64, Ns)>,
    }

    let mut per_app: Vec<(AppId, Vec<Candidate>)> = Vec::new();
    for app in traffic.apps.values() {
        let packets = fragment(app, time);
        let mut candidates = Vec::new();
        for route in enumerate_routes(graph, app, k_routes) {
            let tx0 = route.link(graph, 0).tx_time(packets[0].len);
            let offsets: Vec<Ns> = (0..=(time.t_ct - tx0) / granularity)
                .map(|s| s * granularity)
                .collect();
            let (k, _) = route.dip_span().unwrap();
            let q = route.link(graph, k + 1).q as i64;
            let shifts: Vec<i64> = (0..=q - 2).collect();
            let extras: Vec<Ns> = (0..time.t_ct / granularity)
                .map(|s| s * granularity)
                .collect();
            // Cartesian product over the packets of the application.
            let mut partial: Vec<Vec<(PacketKey, Ns, i64, Ns)>> = vec![Vec::new()];
            for p in &packets {
                let mut next = Vec::new();
                for prefix in &partial {
                    for &o in &offsets {
                        for &r in &shifts {
                            for &e in &extras {
                                let mut v = prefix.clone();
                                v.push((p.key.clone(), o, r, e));
                                next.push(v);
                            }
                        }
                    }
                }
                partial = next;
            }
            for per_packet in partial {
                candidates.push(Candidate {
                    route: route.clone(),
                    per_packet,
                });
            }
        }
        per_app.push((app.id.clone(), candidates));
    }

    fn apply(schedule: &mut Schedule, id: &AppId, c: &Candidate) {
        schedule.admission.insert(id.clone(), true);
        schedule.routes.insert(id.clone(), c.route.clone());
        for (key, o, r, e) in &c.per_packet {
            schedule.src_offsets.insert(key.clone(), *o);
            schedule.cycle_shifts.insert(key.clone(), *r);
            schedule.extra_delays.insert(key.clone(), *e);
        }
    }

    fn rec(
        i: usize,
        per_app: &[(AppId, Vec<Candidate>)],
        scenario: &Scenario,
        schedule: &mut Schedule,
        accepted: usize,
        best: &mut usize,
    ) {
        if i == per_app.len() {
            *best = (*best).max(accepted);
            return;
        }
        if accepted + (per_app.len() - i) <= *best {
            return;
        }
        let (id, candidates) = &per_app[i];
        for c in candidates {
            apply(schedule, id, c);
            if validator::validate(&scenario.graph, &scenario.traffic, schedule).is_feasible() {
                rec(i + 1, per_app, scenario, schedule, accepted + 1, best);
            }
            schedule.evict(id);
        }
        rec(i + 1, per_app, scenario, schedule, accepted, best);
    }

    let mut schedule = Schedule::default();
    let mut best = 0;
    rec(0, &per_app, scenario, &mut schedule, 0, &mut best);
    best
}

/// Per-packet destination arrivals of a trace, keyed by
/// (app, message instance, packet index).
pub fn dest_arrivals(trace: &SimTrace, dest_of: &BTreeMap<AppId, NodeId>) -> BTreeMap<(AppId, u64, u32), Ns> {
    let mut out = BTreeMap::new();
    for h in &trace.hops {
        if dest_of.get(&h.app) == Some(&h.node) {
            let prev = out.insert((h.app.clone(), h.msg, h.pkt), h.arrival_ns);
            assert!(prev.is_none(), "packet delivered twice: {h:?}");
        }
    }
    out
}

/// Asserts that every scheduled packet's simulated end-to-end delay equals
/// the analytic prediction exactly, over `horizon` hypercycles. Returns the
/// number of packet instances checked.
pub fn assert_exactness(scenario: &Scenario, schedule: &Schedule, horizon: u32) -> usize {
    let graph = &scenario.graph;
    let traffic = &scenario.traffic;
    let (report, analysis) = validator::validate_with_analysis(graph, traffic, schedule);
    assert!(report.is_feasible(), "schedule must be feasible: {report:?}");
    let programs = tasdip::device::compile(graph, traffic, schedule).expect("compiles");
    let trace = tasdip::sim::run(graph, &programs, traffic, &Default::default(), horizon)
        .expect("simulation succeeds");

    let dest_of: BTreeMap<AppId, NodeId> = traffic
        .apps
        .values()
        .map(|a| (a.id.clone(), a.dest.clone()))
        .collect();
    let arrivals = dest_arrivals(&trace, &dest_of);

    let mut checked = 0;
    for (key, pa) in &analysis.packets {
        let app = &traffic.apps[&key.app];
        let n_m = app.messages_per_ct(&graph.time) as u64;
        let src_epoch = graph.node(&app.src).unwrap().epoch;
        let msg = traffic.message(&key.app, key.msg);
        for h in 0..horizon as u64 {
            let instance = h * n_m + key.msg as u64;
            let msg_arrival = src_epoch + h as i64 * graph.time.t_ct + msg.arrival_offset;
            let arrival = arrivals
                .get(&(key.app.clone(), instance, key.pkt))
                .unwrap_or_else(|| panic!("packet {key} instance {instance} not delivered"));
            assert_eq!(
                arrival - msg_arrival,
                pa.timing.delay,
                "packet {key} instance {instance}: simulated vs analytic"
            );
            checked += 1;
        }
    }
    let expected = analysis.packets.len() as u64 * horizon as u64;
    assert_eq!(trace.scheduled_emitted, expected);
    assert_eq!(trace.scheduled_delivered, expected);
    checked
}
