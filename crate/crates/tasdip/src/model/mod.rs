//! Network model: nodes, links, timing configuration and traffic.

pub mod scenario;
pub mod time;
pub mod traffic;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use time::{floor_mod, Ns, TimeConfig};

/// Opaque node identifier.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new<S: Into<String>>(s: S) -> Self {
        NodeId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// The six node roles of the hierarchical network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    SourceHost,
    DestHost,
    TasSwitch,
    TasEdgeSwitch,
    DipRouter,
    DipEdgeRouter,
}

impl NodeKind {
    pub fn is_dip(self) -> bool {
        matches!(self, NodeKind::DipRouter | NodeKind::DipEdgeRouter)
    }
    /// Nodes whose egress links fall under the TAS conflict constraint.
    pub fn is_tas_side(self) -> bool {
        matches!(
            self,
            NodeKind::SourceHost | NodeKind::TasSwitch | NodeKind::TasEdgeSwitch
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Start of this node's cycle time / hypercycle relative to the global
    /// reference, in `[0, t_hc)`.
    pub epoch: Ns,
}

/// Directed link with its deterministic-transmission parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Bandwidth in bits per second.
    pub bw: u64,
    /// Propagation plus processing delay in nanoseconds.
    pub d: Ns,
    /// Number of egress queues used for deterministic transmission at `src`.
    pub q: u32,
}

impl Link {
    /// Transmission time of `len` bytes on this link.
    pub fn tx_time(&self, len: u32) -> Ns {
        time::tx_time(len, self.bw)
    }

    /// Bytes one DIP cycle can carry on this link (floor of `t_dip * bw`).
    pub fn cycle_capacity_bytes(&self, time: &TimeConfig) -> u64 {
        let bits = time.t_dip as u128 * self.bw as u128 / 1_000_000_000u128;
        (bits / 8) as u64
    }
}

/// Offset between the cycle frames of a link's endpoints, normalized into
/// `[0, t_hc)`. Covers the cycle-time/hypercycle offsets in either crossing
/// direction as well as the hypercycle offset between two DIP routers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochOffset(pub Ns);

/// Immutable directed network graph with precomputed epoch offsets.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    pub time: TimeConfig,
    nodes: BTreeMap<NodeId, Node>,
    links: BTreeMap<(NodeId, NodeId), Link>,
    offsets: BTreeMap<(NodeId, NodeId), Ns>,
    succ: BTreeMap<NodeId, Vec<NodeId>>,
}

/// Builds a queryable graph, validating ids, endpoints, epochs and queue
/// counts, and precomputing the per-link epoch offsets.
pub fn build_graph(
    nodes: Vec<Node>,
    links: Vec<Link>,
    time: TimeConfig,
) -> Result<NetworkGraph, ModelError> {
    let mut node_map = BTreeMap::new();
    for n in nodes {
        if n.epoch < 0 || n.epoch >= time.t_hc {
            return Err(ModelError::EpochOutOfRange {
                id: n.id.0.clone(),
                epoch: n.epoch,
                t_hc: time.t_hc,
            });
        }
        if node_map.insert(n.id.clone(), n.clone()).is_some() {
            return Err(ModelError::DuplicateNode(n.id.0));
        }
    }
    let mut link_map = BTreeMap::new();
    let mut offsets = BTreeMap::new();
    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for l in links {
        for end in [&l.src, &l.dst] {
            if !node_map.contains_key(end) {
                return Err(ModelError::DanglingEndpoint {
                    src: l.src.0.clone(),
                    dst: l.dst.0.clone(),
                    missing: end.0.clone(),
                });
            }
        }
        if l.bw == 0 {
            return Err(ModelError::InvalidLink {
                src: l.src.0.clone(),
                dst: l.dst.0.clone(),
                reason: "bandwidth must be positive".into(),
            });
        }
        if l.d < 0 {
            return Err(ModelError::InvalidLink {
                src: l.src.0.clone(),
                dst: l.dst.0.clone(),
                reason: "delay must be non-negative".into(),
            });
        }
        if node_map[&l.src].kind.is_dip() && l.q < 2 {
            return Err(ModelError::InvalidLink {
                src: l.src.0.clone(),
                dst: l.dst.0.clone(),
                reason: format!("DIP-sourced link needs q >= 2, got {}", l.q),
            });
        }
        if l.q == 0 {
            return Err(ModelError::InvalidLink {
                src: l.src.0.clone(),
                dst: l.dst.0.clone(),
                reason: "queue count must be positive".into(),
            });
        }
        let key = (l.src.clone(), l.dst.clone());
        let delta = floor_mod(node_map[&l.src].epoch - node_map[&l.dst].epoch, time.t_hc);
        if link_map.insert(key.clone(), l.clone()).is_some() {
            return Err(ModelError::DuplicateLink(l.src.0, l.dst.0));
        }
        offsets.insert(key, delta);
        succ.entry(l.src.clone()).or_default().push(l.dst.clone());
    }
    for next in succ.values_mut() {
        next.sort();
    }
    Ok(NetworkGraph {
        time,
        nodes: node_map,
        links: link_map,
        offsets,
        succ,
    })
}

impl NetworkGraph {
    pub fn node(&self, id: &NodeId) -> Result<&Node, ModelError> {
        self.nodes
            .get(id)
            .ok_or_else(|| ModelError::UnknownNode(id.0.clone()))
    }

    pub fn link(&self, src: &NodeId, dst: &NodeId) -> Result<&Link, ModelError> {
        self.links
            .get(&(src.clone(), dst.clone()))
            .ok_or_else(|| ModelError::UnknownLink(src.0.clone(), dst.0.clone()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Successors of `id` in ascending id order.
    pub fn successors(&self, id: &NodeId) -> &[NodeId] {
        self.succ.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Epoch difference `epoch(src) - epoch(dst)` normalized into `[0, t_hc)`.
    pub fn epoch_offset(&self, link: &Link) -> EpochOffset {
        EpochOffset(self.offsets[&(link.src.clone(), link.dst.clone())])
    }
}
