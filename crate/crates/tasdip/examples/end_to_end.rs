//! One message walked hop by hop across both domains: host -> TAS edge ->
//! DIP edge -> DIP edge -> TAS edge -> host, with five DIP cycles per
//! hypercycle. Prints the per-hop trace next to the analytic prediction.

use tasdip::model::time::TimeConfig;
use tasdip::model::traffic::{Application, PacketKey, TrafficModel};
use tasdip::model::{build_graph, Link, Node, NodeId, NodeKind};
use tasdip::schedule::{Route, Schedule};
use tasdip::{device, sim, validator};

fn main() {
    let time = TimeConfig::new(50_000, 10_000).expect("valid time config");
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
    let links: Vec<Link> = (0..5)
        .map(|i| Link {
            src: NodeId::new(format!("v{i}")),
            dst: NodeId::new(format!("v{}", i + 1)),
            bw: if i == 0 || i == 4 {
                1_000_000_000
            } else {
                10_000_000_000
            },
            d: if i == 2 { 25_000 } else { 1_500 },
            q: 8,
        })
        .collect();
    let graph = build_graph(nodes, links, time).expect("valid graph");

    let traffic = TrafficModel::build(
        vec![Application {
            id: "tau".into(),
            src: "v0".into(),
            dest: "v5".into(),
            e2e: 200_000,
            msg_len: 3000,
            period: 50_000,
            mtu: 1500,
        }],
        &time,
        4,
    )
    .expect("valid traffic");

    let route = Route::new(
        &graph,
        (0..6).map(|i| NodeId::new(format!("v{i}"))).collect(),
    )
    .expect("valid route");
    let mut schedule = Schedule::default();
    schedule.admission.insert("tau".into(), true);
    schedule.routes.insert("tau".into(), route);
    for (pkt, off, extra) in [(1u32, 25_000i64, 2_000i64), (2, 37_000, 4_500)] {
        let key = PacketKey {
            app: "tau".into(),
            msg: 1,
            pkt,
        };
        schedule.src_offsets.insert(key.clone(), off);
        schedule.cycle_shifts.insert(key.clone(), 1);
        schedule.extra_delays.insert(key, extra);
    }

    let (report, analysis) = validator::validate_with_analysis(&graph, &traffic, &schedule);
    assert!(report.is_feasible(), "{report:?}");

    println!("message arrives at offset {} ns", traffic.message(&"tau".into(), 1).arrival_offset);
    for (key, pa) in &analysis.packets {
        println!(
            "packet {key}: DIP cycles {:?}, egress rank {:?}, analytic delay {} ns",
            pa.timing.cycles.0, pa.timing.egress_rank, pa.timing.delay
        );
    }

    let programs = device::compile(&graph, &traffic, &schedule).expect("compiles");
    let trace = sim::run(&graph, &programs, &traffic, &Default::default(), 1).expect("runs");
    println!("\nper-hop trace (hypercycle 0):");
    for h in &trace.hops {
        println!(
            "  pkt {} at {:>3}: arrived {:>7} ns, departed {:>7} ns",
            h.pkt, h.node.as_str(), h.arrival_ns, h.departure_ns
        );
    }
    for m in &trace.messages {
        println!(
            "\nmessage {}: completed at {} ns, end-to-end delay {} ns",
            m.msg, m.completion_ns, m.e2e_delay_ns
        );
    }
}
