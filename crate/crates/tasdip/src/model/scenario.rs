//! Scenario files: one JSON document describing topology, traffic and the
//! optional solver / interference sections. Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use super::time::{Ns, TimeConfig};
use super::traffic::{AppId, Application, TrafficModel, DEFAULT_MTU};
use super::{build_graph, Link, NetworkGraph, Node, NodeId, NodeKind};
use crate::error::ModelError;
use crate::sim::interference::InterferenceProfile;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_ct_ns: Ns,
    pub t_dip_ns: Ns,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSection {
    pub id: String,
    pub kind: NodeKind,
    pub epoch_ns: Ns,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub src: String,
    pub dst: String,
    pub bw_bps: u64,
    pub delay_ns: Ns,
    pub queues: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplicationSection {
    pub id: String,
    pub src: String,
    pub dest: String,
    pub e2e_ns: Ns,
    pub msg_len_bytes: u32,
    pub period_ns: Ns,
}

/// On-disk scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub time: TimeSection,
    pub nodes: Vec<NodeSection>,
    pub links: Vec<LinkSection>,
    pub applications: Vec<ApplicationSection>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtu_bytes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference: Option<InterferenceProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_hypercycles: Option<u32>,
}

/// Fully validated in-memory scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: NetworkGraph,
    pub traffic: TrafficModel,
    pub seed: u64,
    pub solver: SolverConfig,
    pub interference: InterferenceProfile,
    pub horizon: u32,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Scenario(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization")
    }

    pub fn build(&self) -> Result<Scenario, ModelError> {
        let time = TimeConfig::new(self.time.t_ct_ns, self.time.t_dip_ns)?;
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: NodeId::new(&n.id),
                kind: n.kind,
                epoch: n.epoch_ns,
            })
            .collect();
        let links = self
            .links
            .iter()
            .map(|l| Link {
                src: NodeId::new(&l.src),
                dst: NodeId::new(&l.dst),
                bw: l.bw_bps,
                d: l.delay_ns,
                q: l.queues,
            })
            .collect();
        let graph = build_graph(nodes, links, time)?;
        let mtu = self.mtu_bytes.unwrap_or(DEFAULT_MTU);
        let apps: Vec<Application> = self
            .applications
            .iter()
            .map(|a| Application {
                id: AppId::new(&a.id),
                src: NodeId::new(&a.src),
                dest: NodeId::new(&a.dest),
                e2e: a.e2e_ns,
                msg_len: a.msg_len_bytes,
                period: a.period_ns,
                mtu,
            })
            .collect();
        for a in &apps {
            let src = graph.node(&a.src)?;
            let dest = graph.node(&a.dest)?;
            if src.kind != NodeKind::SourceHost {
                return Err(ModelError::InvalidApplication {
                    id: a.id.0.clone(),
                    reason: format!("src `{}` is not a source host", a.src),
                });
            }
            if dest.kind != NodeKind::DestHost {
                return Err(ModelError::InvalidApplication {
                    id: a.id.0.clone(),
                    reason: format!("dest `{}` is not a destination host", a.dest),
                });
            }
        }
        let traffic = TrafficModel::build(apps, &graph.time, self.seed)?;
        Ok(Scenario {
            graph,
            traffic,
            seed: self.seed,
            solver: self.solver.clone().unwrap_or_default(),
            interference: self.interference.clone().unwrap_or_default(),
            horizon: self.horizon_hypercycles.unwrap_or(1),
        })
    }
}

pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Scenario(format!("{}: {e}", path.display())))?;
    ScenarioFile::from_json(&text)?.build()
}
