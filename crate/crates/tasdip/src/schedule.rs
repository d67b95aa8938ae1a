//! Schedule decision variables and application routes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MappingError, ModelError};
use crate::model::time::Ns;
use crate::model::traffic::{AppId, PacketKey};
use crate::model::{Link, NetworkGraph, NodeId, NodeKind};

/// Route assigned to an application: an ordered node list whose kinds follow
/// the source / TAS / TAS-edge / DIP / TAS-edge / TAS / destination segment
/// structure. `dip_span = (k, m)` marks the ingress TAS edge switch index and
/// the last DIP node index; routes that never enter the DIP domain carry no
/// span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    nodes: Vec<NodeId>,
    dip_span: Option<(usize, usize)>,
}

impl Route {
    pub fn new(graph: &NetworkGraph, nodes: Vec<NodeId>) -> Result<Self, MappingError> {
        let bad = |msg: String| Err(MappingError::MalformedRoute(msg));
        if nodes.len() < 2 {
            return bad("route needs at least two nodes".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.clone()) {
                return bad(format!("node `{n}` repeats"));
            }
        }
        for w in nodes.windows(2) {
            if graph.link(&w[0], &w[1]).is_err() {
                return bad(format!("no link `{}` -> `{}`", w[0], w[1]));
            }
        }
        let kind = |i: usize| -> Result<NodeKind, MappingError> {
            graph
                .node(&nodes[i])
                .map(|n| n.kind)
                .map_err(|e| MappingError::MalformedRoute(e.to_string()))
        };
        if kind(0)? != NodeKind::SourceHost {
            return bad(format!("`{}` is not a source host", nodes[0]));
        }
        let n = nodes.len() - 1;
        if kind(n)? != NodeKind::DestHost {
            return bad(format!("`{}` is not a destination host", nodes[n]));
        }
        // Scan the interior: a TAS-only route, or TAS* edge DIP+ edge TAS*.
        let mut i = 1;
        while i < n && kind(i)? == NodeKind::TasSwitch {
            i += 1;
        }
        if i == n {
            return Ok(Route {
                nodes,
                dip_span: None,
            });
        }
        if kind(i)? != NodeKind::TasEdgeSwitch {
            return bad(format!("`{}` interrupts the TAS segment", nodes[i]));
        }
        let k = i;
        i += 1;
        if i >= n || kind(i)? != NodeKind::DipEdgeRouter {
            return bad("ingress TAS edge must feed a DIP edge router".into());
        }
        while i < n && kind(i)?.is_dip() {
            i += 1;
        }
        let m = i - 1;
        if kind(m)? != NodeKind::DipEdgeRouter {
            return bad(format!("last DIP node `{}` is not an edge router", nodes[m]));
        }
        if i >= n || kind(i)? != NodeKind::TasEdgeSwitch {
            return bad("DIP segment must exit through a TAS edge switch".into());
        }
        i += 1;
        while i < n && kind(i)? == NodeKind::TasSwitch {
            i += 1;
        }
        if i != n {
            return bad(format!("unexpected `{}` after the egress TAS segment", nodes[i]));
        }
        Ok(Route {
            nodes,
            dip_span: Some((k, m)),
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// `(k, m)`: ingress TAS edge index and last DIP node index.
    pub fn dip_span(&self) -> Option<(usize, usize)> {
        self.dip_span
    }

    /// Number of links.
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Link `l_a = (v_a, v_{a+1})`.
    pub fn link<'g>(&self, graph: &'g NetworkGraph, a: usize) -> &'g Link {
        graph
            .link(&self.nodes[a], &self.nodes[a + 1])
            .expect("route links were validated at construction")
    }
}

/// The five decision-variable families of the application-level schedule:
/// admission, routes, source offsets, cycle shifts and extra delays.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub admission: BTreeMap<AppId, bool>,
    pub routes: BTreeMap<AppId, Route>,
    pub src_offsets: BTreeMap<PacketKey, Ns>,
    pub cycle_shifts: BTreeMap<PacketKey, i64>,
    pub extra_delays: BTreeMap<PacketKey, Ns>,
}

impl Schedule {
    pub fn is_accepted(&self, app: &AppId) -> bool {
        self.admission.get(app).copied().unwrap_or(false)
    }

    pub fn accepted(&self) -> impl Iterator<Item = &AppId> {
        self.admission.iter().filter(|(_, &v)| v).map(|(k, _)| k)
    }

    pub fn accepted_count(&self) -> usize {
        self.admission.values().filter(|&&v| v).count()
    }

    /// Removes an application's acceptance and all its variable bindings.
    pub fn evict(&mut self, app: &AppId) {
        self.admission.insert(app.clone(), false);
        self.routes.remove(app);
        self.src_offsets.retain(|k, _| &k.app != app);
        self.cycle_shifts.retain(|k, _| &k.app != app);
        self.extra_delays.retain(|k, _| &k.app != app);
    }

    pub fn to_file(&self) -> ScheduleFile {
        ScheduleFile {
            admission: self
                .admission
                .iter()
                .map(|(k, &v)| (k.0.clone(), u8::from(v)))
                .collect(),
            routes: self
                .routes
                .iter()
                .map(|(k, r)| (k.0.clone(), r.nodes.iter().map(|n| n.0.clone()).collect()))
                .collect(),
            src_offsets_ns: key_map(&self.src_offsets),
            cycle_shifts: key_map(&self.cycle_shifts),
            extra_delays_ns: key_map(&self.extra_delays),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("schedule serialization")
    }

    pub fn from_json(graph: &NetworkGraph, text: &str) -> Result<Self, ModelError> {
        let file: ScheduleFile =
            serde_json::from_str(text).map_err(|e| ModelError::Scenario(e.to_string()))?;
        file.build(graph)
    }
}

fn key_map(m: &BTreeMap<PacketKey, i64>) -> BTreeMap<String, i64> {
    m.iter().map(|(k, &v)| (k.to_string(), v)).collect()
}

/// On-disk schedule document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub admission: BTreeMap<String, u8>,
    pub routes: BTreeMap<String, Vec<String>>,
    pub src_offsets_ns: BTreeMap<String, i64>,
    pub cycle_shifts: BTreeMap<String, i64>,
    pub extra_delays_ns: BTreeMap<String, i64>,
}

impl ScheduleFile {
    pub fn build(&self, graph: &NetworkGraph) -> Result<Schedule, ModelError> {
        let mut s = Schedule::default();
        for (id, &x) in &self.admission {
            s.admission.insert(AppId::new(id), x != 0);
        }
        for (id, nodes) in &self.routes {
            let route = Route::new(graph, nodes.iter().map(NodeId::new).collect())
                .map_err(|e| ModelError::Scenario(format!("route for `{id}`: {e}")))?;
            s.routes.insert(AppId::new(id), route);
        }
        let parse = |m: &BTreeMap<String, i64>| -> Result<BTreeMap<PacketKey, i64>, ModelError> {
            m.iter()
                .map(|(k, &v)| {
                    PacketKey::parse(k)
                        .map(|pk| (pk, v))
                        .ok_or_else(|| ModelError::Scenario(format!("bad packet key `{k}`")))
                })
                .collect()
        };
        s.src_offsets = parse(&self.src_offsets_ns)?;
        s.cycle_shifts = parse(&self.cycle_shifts)?;
        s.extra_delays = parse(&self.extra_delays_ns)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::time::TimeConfig;
    use crate::model::{build_graph, Link, Node};

    fn linear_graph() -> NetworkGraph {
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
                bw: 1_000_000_000,
                d: 1_500,
                q: 8,
            })
            .collect();
        build_graph(nodes, links, time).unwrap()
    }

    fn ids(names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|&s| s.into()).collect()
    }

    #[test]
    fn route_segment_indices() {
        let g = linear_graph();
        let r = Route::new(&g, ids(&["v0", "v1", "v2", "v3", "v4", "v5"])).unwrap();
        assert_eq!(r.dip_span(), Some((1, 3)));
    }

    #[test]
    fn route_rejects_wrong_endpoints() {
        let g = linear_graph();
        assert!(Route::new(&g, ids(&["v1", "v2", "v3", "v4", "v5"])).is_err());
        assert!(Route::new(&g, ids(&["v0", "v1", "v2", "v3", "v4"])).is_err());
    }

    #[test]
    fn route_rejects_missing_link() {
        let g = linear_graph();
        assert!(Route::new(&g, ids(&["v0", "v2", "v3", "v4", "v5"])).is_err());
    }

    #[test]
    fn schedule_json_roundtrip_is_stable() {
        let g = linear_graph();
        let mut s = Schedule::default();
        s.admission.insert("a0".into(), true);
        s.routes.insert(
            "a0".into(),
            Route::new(&g, ids(&["v0", "v1", "v2", "v3", "v4", "v5"])).unwrap(),
        );
        let key = PacketKey {
            app: "a0".into(),
            msg: 1,
            pkt: 1,
        };
        s.src_offsets.insert(key.clone(), 12_000);
        s.cycle_shifts.insert(key.clone(), 1);
        s.extra_delays.insert(key, 0);
        let json = s.to_json();
        let back = Schedule::from_json(&g, &json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), json);
    }
}
