//! Candidate route enumeration: loop-free shortest paths ordered by hop
//! count, then total link delay, then lexicographic node ids, filtered to
//! the source/TAS/DIP/TAS/destination segment structure.

use std::collections::BTreeSet;

use crate::model::time::Ns;
use crate::model::traffic::Application;
use crate::model::{NetworkGraph, NodeId};
use crate::schedule::Route;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Cost {
    hops: u32,
    delay: Ns,
}

impl Cost {
    fn zero() -> Self {
        Cost { hops: 0, delay: 0 }
    }
    fn step(&self, delay: Ns) -> Self {
        Cost {
            hops: self.hops + 1,
            delay: self.delay + delay,
        }
    }
}

/// Cheapest simple path from `src` to `dst` avoiding the given nodes and
/// edges; ties broken by the lexicographically smallest node sequence.
fn shortest_path(
    graph: &NetworkGraph,
    src: &NodeId,
    dst: &NodeId,
    blocked_nodes: &BTreeSet<NodeId>,
    blocked_edges: &BTreeSet<(NodeId, NodeId)>,
) -> Option<(Cost, Vec<NodeId>)> {
    if blocked_nodes.contains(src) {
        return None;
    }
    // Best-first over (cost, path); the path in the key doubles as the
    // deterministic tie-break. Entries pop in ascending (cost, path) order,
    // so the first pop of a node carries its minimal cost and, among equal
    // costs, the lexicographically smallest prefix — which is also the
    // prefix of the lexicographically smallest full path through it.
    let mut frontier: BTreeSet<(Cost, Vec<NodeId>)> = BTreeSet::new();
    let mut settled: BTreeSet<NodeId> = BTreeSet::new();
    frontier.insert((Cost::zero(), vec![src.clone()]));
    while let Some(entry) = frontier.iter().next().cloned() {
        frontier.remove(&entry);
        let (cost, path) = entry;
        let here = path.last().unwrap().clone();
        if here == *dst {
            return Some((cost, path));
        }
        if !settled.insert(here.clone()) {
            continue;
        }
        for next in graph.successors(&here) {
            if blocked_nodes.contains(next)
                || blocked_edges.contains(&(here.clone(), next.clone()))
                || settled.contains(next)
                || path.contains(next)
            {
                continue;
            }
            let link = graph.link(&here, next).unwrap();
            let mut p = path.clone();
            p.push(next.clone());
            frontier.insert((cost.step(link.d), p));
        }
    }
    None
}

/// Yen's algorithm: up to `k` loop-free paths in (hops, delay, lexicographic)
/// order.
fn k_shortest_paths(
    graph: &NetworkGraph,
    src: &NodeId,
    dst: &NodeId,
    k: usize,
) -> Vec<Vec<NodeId>> {
    let Some(first) = shortest_path(graph, src, dst, &BTreeSet::new(), &BTreeSet::new()) else {
        return Vec::new();
    };
    let mut paths = vec![first];
    let mut candidates: BTreeSet<(Cost, Vec<NodeId>)> = BTreeSet::new();
    while paths.len() < k {
        let (_, prev) = paths.last().unwrap().clone();
        for spur_idx in 0..prev.len() - 1 {
            let spur = prev[spur_idx].clone();
            let root = &prev[..=spur_idx];
            let mut blocked_edges = BTreeSet::new();
            for (_, p) in &paths {
                if p.len() > spur_idx + 1 && p[..=spur_idx] == *root {
                    blocked_edges.insert((p[spur_idx].clone(), p[spur_idx + 1].clone()));
                }
            }
            let blocked_nodes: BTreeSet<NodeId> = root[..spur_idx].iter().cloned().collect();
            let Some((spur_cost, spur_path)) =
                shortest_path(graph, &spur, dst, &blocked_nodes, &blocked_edges)
            else {
                continue;
            };
            let mut total = root[..spur_idx].to_vec();
            total.extend(spur_path);
            let mut cost = Cost::zero();
            for w in total.windows(2) {
                cost = cost.step(graph.link(&w[0], &w[1]).unwrap().d);
            }
            debug_assert_eq!(cost.hops as usize, total.len() - 1);
            let _ = spur_cost;
            if !paths.iter().any(|(_, p)| *p == total) {
                candidates.insert((cost, total));
            }
        }
        let Some(best) = candidates.iter().next().cloned() else {
            break;
        };
        candidates.remove(&best);
        paths.push(best);
    }
    paths.into_iter().map(|(_, p)| p).collect()
}

/// Cheapest node path regardless of segment structure; used for best-effort
/// forwarding.
pub(crate) fn shortest_node_path(
    graph: &NetworkGraph,
    src: &NodeId,
    dst: &NodeId,
) -> Option<Vec<NodeId>> {
    shortest_path(graph, src, dst, &BTreeSet::new(), &BTreeSet::new()).map(|(_, p)| p)
}

/// Up to `k` candidate routes for an application, each conforming to the
/// cross-domain segment structure. An empty result marks the application as
/// unschedulable.
pub fn enumerate_routes(graph: &NetworkGraph, app: &Application, k: usize) -> Vec<Route> {
    // Generate extra raw paths since some may fail the structure filter.
    let raw_limit = 8 * k + 8;
    let mut out = Vec::new();
    for path in k_shortest_paths(graph, &app.src, &app.dest, raw_limit) {
        if let Ok(route) = Route::new(graph, path) {
            if route.dip_span().is_some() {
                out.push(route);
                if out.len() == k {
                    break;
                }
            }
        }
    }
    out
}
