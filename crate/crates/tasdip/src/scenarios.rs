//! Ready-made scenario builders: a 15-router core in the style of the
//! Atlanta reference topology with ten access networks, plus small and
//! randomized instances for testing and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::scenario::{
    ApplicationSection, LinkSection, NodeSection, ScenarioFile, TimeSection,
};
use crate::model::time::Ns;
use crate::model::NodeKind;
use crate::sim::interference::{InterferenceFlow, InterferenceProfile};

pub const CORE_BW: u64 = 10_000_000_000;
pub const CORE_DELAY: Ns = 150_000;
pub const ACCESS_BW: u64 = 1_000_000_000;
pub const ACCESS_DELAY: Ns = 1_500;

/// 22 undirected core adjacencies over 15 routers.
const CORE_EDGES: [(usize, usize); 22] = [
    (1, 2),
    (1, 3),
    (1, 8),
    (2, 4),
    (2, 7),
    (3, 4),
    (3, 5),
    (4, 6),
    (5, 6),
    (5, 9),
    (6, 7),
    (6, 13),
    (7, 8),
    (8, 10),
    (9, 10),
    (9, 12),
    (10, 11),
    (11, 12),
    (11, 13),
    (12, 14),
    (13, 15),
    (14, 15),
];

fn node(id: String, kind: NodeKind, epoch_ns: Ns) -> NodeSection {
    NodeSection {
        id,
        kind,
        epoch_ns,
    }
}

fn both_ways(links: &mut Vec<LinkSection>, a: &str, b: &str, bw: u64, d: Ns, q: u32) {
    for (src, dst) in [(a, b), (b, a)] {
        links.push(LinkSection {
            src: src.into(),
            dst: dst.into(),
            bw_bps: bw,
            delay_ns: d,
            queues: q,
        });
    }
}

/// The experiment topology: 15 DIP (edge) routers, 10 access networks of one
/// TAS edge switch and one host each (five source-side, five
/// destination-side), 10 us DIP cycles and a 2 ms cycle time. Random epochs
/// per core router and per access network come from `seed`.
pub fn paper_scale_topology(seed: u64) -> (Vec<NodeSection>, Vec<LinkSection>) {
    let t_hc: Ns = 2_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA71A57A);
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for r in 1..=15 {
        let kind = if r <= 10 {
            NodeKind::DipEdgeRouter
        } else {
            NodeKind::DipRouter
        };
        nodes.push(node(format!("r{r:02}"), kind, rng.gen_range(0..t_hc)));
    }
    for (a, b) in CORE_EDGES {
        both_ways(
            &mut links,
            &format!("r{a:02}"),
            &format!("r{b:02}"),
            CORE_BW,
            CORE_DELAY,
            8,
        );
    }
    for i in 1..=10 {
        let epoch = rng.gen_range(0..t_hc);
        let host_kind = if i <= 5 {
            NodeKind::SourceHost
        } else {
            NodeKind::DestHost
        };
        nodes.push(node(format!("s{i:02}"), NodeKind::TasEdgeSwitch, epoch));
        nodes.push(node(format!("h{i:02}"), host_kind, epoch));
        // Host links run at access speed; switch-router boundary links run
        // at core speed so an MTU packet fits inside one DIP cycle.
        both_ways(
            &mut links,
            &format!("h{i:02}"),
            &format!("s{i:02}"),
            ACCESS_BW,
            ACCESS_DELAY,
            8,
        );
        both_ways(
            &mut links,
            &format!("s{i:02}"),
            &format!("r{i:02}"),
            CORE_BW,
            ACCESS_DELAY,
            8,
        );
    }
    (nodes, links)
}

/// Experiment scenario with `n_apps` applications between random source and
/// destination access networks; message sizes one or two MTU, periods 1 or
/// 2 ms.
pub fn paper_scale_scenario(n_apps: usize, seed: u64) -> ScenarioFile {
    let (nodes, links) = paper_scale_topology(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5CE11A);
    let applications = (0..n_apps)
        .map(|i| {
            let src = rng.gen_range(1..=5);
            let dest = rng.gen_range(6..=10);
            ApplicationSection {
                id: format!("a{i:02}"),
                src: format!("h{src:02}"),
                dest: format!("h{dest:02}"),
                e2e_ns: 1_800_000,
                msg_len_bytes: 1500 * rng.gen_range(1..=2),
                period_ns: 1_000_000 * rng.gen_range(1..=2),
            }
        })
        .collect();
    ScenarioFile {
        time: TimeSection {
            t_ct_ns: 2_000_000,
            t_dip_ns: 10_000,
        },
        nodes,
        links,
        applications,
        seed,
        mtu_bytes: None,
        solver: None,
        interference: None,
        horizon_hypercycles: None,
    }
}

/// Applications offering roughly `level_mbps` of deterministic load on each
/// source host's access link of an existing topology.
pub fn apps_for_load(file: &ScenarioFile, level_mbps: u64, seed: u64) -> Vec<ApplicationSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<&str> = file
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::SourceHost)
        .map(|n| n.id.as_str())
        .collect();
    let dests: Vec<&str> = file
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::DestHost)
        .map(|n| n.id.as_str())
        .collect();
    let mut applications = Vec::new();
    for src in &sources {
        let mut offered = 0u64;
        while offered < level_mbps * 1_000_000 {
            let i = applications.len();
            let msg = 1500 * rng.gen_range(1..=2u32);
            let period = 1_000_000 * rng.gen_range(1..=2i64);
            offered += 8 * msg as u64 * (1_000_000_000 / period as u64);
            applications.push(ApplicationSection {
                id: format!("a{i:03}"),
                src: (*src).into(),
                dest: dests[rng.gen_range(0..dests.len())].into(),
                e2e_ns: 2_000_000,
                msg_len_bytes: msg,
                period_ns: period,
            });
        }
    }
    applications
}

/// Experiment topology restricted to `n_src_hosts` loaded source hosts, with
/// per-host offered load `level_mbps`.
pub fn load_sweep_scenario(level_mbps: u64, n_src_hosts: usize, seed: u64) -> ScenarioFile {
    let mut file = paper_scale_scenario(0, seed);
    for (i, node) in file.nodes.iter_mut().enumerate() {
        // Demote the unused source hosts so the generator skips them.
        let _ = i;
        if node.kind == NodeKind::SourceHost {
            let idx: usize = node.id[1..].parse().unwrap();
            if idx > n_src_hosts.min(5) {
                node.kind = NodeKind::DestHost;
            }
        }
    }
    file.applications = apps_for_load(&file, level_mbps, seed ^ 0x10AD);
    file
}

/// Interference at `utilization` of the access bandwidth on both access
/// links of the given application: its source host uplink and the
/// destination-side switch downlink. Spread over `n_flows` CBR flows per
/// link with seeded phases.
pub fn access_interference(
    file: &ScenarioFile,
    app_id: &str,
    utilization: f64,
    n_flows: usize,
    seed: u64,
) -> InterferenceProfile {
    let app = file
        .applications
        .iter()
        .find(|a| a.id == app_id)
        .expect("application exists");
    let up_src = app.src.clone();
    let up_dst = file
        .links
        .iter()
        .find(|l| l.src == app.src)
        .expect("source host has an uplink")
        .dst
        .clone();
    let down_dst = app.dest.clone();
    let down_src = file
        .links
        .iter()
        .find(|l| l.dst == app.dest)
        .expect("destination host has a downlink")
        .src
        .clone();
    let rate = (utilization * ACCESS_BW as f64 / n_flows as f64) as u64;
    let mut flows = Vec::new();
    for (src, dst) in [(up_src, up_dst), (down_src, down_dst)] {
        for _ in 0..n_flows {
            flows.push(InterferenceFlow {
                src: src.as_str().into(),
                dst: dst.as_str().into(),
                rate_bps: rate,
                packet_len_bytes: 1500,
                start_phase_ns: None,
            });
        }
    }
    InterferenceProfile { flows, seed }
}

/// Six-node linear chain (host, TAS edge, two DIP edges, TAS edge, host)
/// with four DIP cycles per hypercycle and 1 Gbps links throughout, so one
/// MTU packet fills a DIP cycle. Used for exhaustive-search oracles.
pub fn small_chain_scenario(n_apps: usize, seed: u64) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [
        NodeKind::SourceHost,
        NodeKind::TasEdgeSwitch,
        NodeKind::DipEdgeRouter,
        NodeKind::DipEdgeRouter,
        NodeKind::TasEdgeSwitch,
        NodeKind::DestHost,
    ];
    let nodes = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| node(format!("v{i}"), kind, 0))
        .collect();
    let mut links = Vec::new();
    for i in 0..5 {
        let q = if (2..=3).contains(&i) { 3 } else { 8 };
        both_ways(
            &mut links,
            &format!("v{i}"),
            &format!("v{}", i + 1),
            ACCESS_BW,
            500,
            q,
        );
    }
    let applications = (0..n_apps)
        .map(|i| ApplicationSection {
            id: format!("a{i}"),
            src: "v0".into(),
            dest: "v5".into(),
            e2e_ns: rng.gen_range(80_000..150_000),
            msg_len_bytes: rng.gen_range(300..=1500),
            period_ns: 50_000,
        })
        .collect();
    ScenarioFile {
        time: TimeSection {
            t_ct_ns: 50_000,
            t_dip_ns: 12_500,
        },
        nodes,
        links,
        applications,
        seed,
        mtu_bytes: None,
        solver: None,
        interference: None,
        horizon_hypercycles: None,
    }
}

/// Randomized mid-size instance: a core ring with chords, 2..=10 access
/// networks, up to 20 applications, random epochs everywhere.
pub fn random_instance(seed: u64) -> ScenarioFile {
    let t_hc: Ns = 2_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_core = rng.gen_range(2..=15usize);
    let n_access = rng.gen_range(2..=10usize);
    let n_apps = rng.gen_range(1..=20usize);

    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for r in 0..n_core {
        let kind = if r < n_access.min(n_core) {
            NodeKind::DipEdgeRouter
        } else {
            NodeKind::DipRouter
        };
        nodes.push(node(format!("r{r:02}"), kind, rng.gen_range(0..t_hc)));
    }
    // Ring; a two-router "ring" is a single pair.
    let ring_edges = if n_core == 2 { 1 } else { n_core };
    for r in 0..ring_edges {
        let next = (r + 1) % n_core;
        both_ways(
            &mut links,
            &format!("r{r:02}"),
            &format!("r{next:02}"),
            CORE_BW,
            rng.gen_range(50_000..200_000),
            8,
        );
    }
    // A few chords for route diversity.
    for _ in 0..n_core / 3 {
        let a = rng.gen_range(0..n_core);
        let b = rng.gen_range(0..n_core);
        if a != b
            && (a + 1) % n_core != b
            && (b + 1) % n_core != a
            && !links
                .iter()
                .any(|l| l.src == format!("r{a:02}") && l.dst == format!("r{b:02}"))
        {
            both_ways(
                &mut links,
                &format!("r{a:02}"),
                &format!("r{b:02}"),
                CORE_BW,
                rng.gen_range(50_000..200_000),
                8,
            );
        }
    }
    let n_src = (n_access / 2).max(1);
    for i in 0..n_access {
        let attach = i % n_access.min(n_core);
        let epoch = rng.gen_range(0..t_hc);
        let host_kind = if i < n_src {
            NodeKind::SourceHost
        } else {
            NodeKind::DestHost
        };
        nodes.push(node(format!("s{i:02}"), NodeKind::TasEdgeSwitch, epoch));
        nodes.push(node(format!("h{i:02}"), host_kind, epoch));
        both_ways(
            &mut links,
            &format!("h{i:02}"),
            &format!("s{i:02}"),
            ACCESS_BW,
            ACCESS_DELAY,
            8,
        );
        both_ways(
            &mut links,
            &format!("s{i:02}"),
            &format!("r{attach:02}"),
            CORE_BW,
            ACCESS_DELAY,
            8,
        );
    }
    let applications = (0..n_apps)
        .map(|i| ApplicationSection {
            id: format!("a{i:02}"),
            src: format!("h{:02}", rng.gen_range(0..n_src)),
            dest: format!("h{:02}", rng.gen_range(n_src..n_access)),
            e2e_ns: rng.gen_range(1_200_000..2_000_000),
            msg_len_bytes: 1500 * rng.gen_range(1..=2),
            period_ns: 1_000_000 * rng.gen_range(1..=2),
        })
        .collect();
    ScenarioFile {
        time: TimeSection {
            t_ct_ns: 2_000_000,
            t_dip_ns: 10_000,
        },
        nodes,
        links,
        applications,
        seed,
        mtu_bytes: None,
        solver: None,
        interference: None,
        horizon_hypercycles: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_has_35_nodes() {
        let file = paper_scale_scenario(10, 1);
        let scenario = file.build().unwrap();
        assert_eq!(scenario.graph.node_count(), 35);
        assert_eq!(scenario.graph.link_count(), 22 * 2 + 10 * 4);
    }

    #[test]
    fn random_instances_build_for_many_seeds() {
        for seed in 0..30 {
            let s = random_instance(seed).build().unwrap();
            assert!(s.graph.node_count() <= 35);
            assert!(!s.traffic.apps.is_empty());
        }
    }

    #[test]
    fn small_chain_builds() {
        let s = small_chain_scenario(4, 3).build().unwrap();
        assert_eq!(s.graph.node_count(), 6);
        assert_eq!(s.graph.time.n_dip, 4);
    }

    #[test]
    fn load_sweep_offers_requested_rate() {
        let f = load_sweep_scenario(240, 2, 7);
        for src in ["h01", "h02"] {
            let offered: u64 = f
                .applications
                .iter()
                .filter(|a| a.src == src)
                .map(|a| 8 * a.msg_len_bytes as u64 * (1_000_000_000 / a.period_ns as u64))
                .sum();
            assert!(offered >= 240_000_000, "{src}: {offered}");
            assert!(offered < 300_000_000);
        }
    }
}
