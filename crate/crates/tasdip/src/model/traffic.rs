//! Applications, their periodic messages and the packets they fragment into.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::time::{floor_mod, Ns, TimeConfig};
use super::NodeId;
use crate::error::ModelError;

pub const DEFAULT_MTU: u32 = 1500;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppId(pub String);

impl AppId {
    pub fn new<S: Into<String>>(s: S) -> Self {
        AppId(s.into())
    }
}

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AppId {
    fn from(s: &str) -> Self {
        AppId(s.to_string())
    }
}

/// Periodic unicast application.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Application {
    pub id: AppId,
    pub src: NodeId,
    pub dest: NodeId,
    /// Maximum acceptable end-to-end delay.
    pub e2e: Ns,
    /// Message size in bytes.
    pub msg_len: u32,
    /// Message period; the cycle time must be a multiple of it.
    pub period: Ns,
    /// Fragmentation threshold in bytes.
    pub mtu: u32,
}

impl Application {
    pub fn validate(&self, time: &TimeConfig) -> Result<(), ModelError> {
        let fail = |reason: String| ModelError::InvalidApplication {
            id: self.id.0.clone(),
            reason,
        };
        if self.msg_len == 0 {
            return Err(fail("message length must be positive".into()));
        }
        if self.e2e <= 0 {
            return Err(fail("deadline must be positive".into()));
        }
        if self.mtu == 0 {
            return Err(fail("mtu must be positive".into()));
        }
        if self.period <= 0 || time.t_ct % self.period != 0 {
            return Err(fail(format!(
                "cycle time {} ns is not a multiple of period {} ns",
                time.t_ct, self.period
            )));
        }
        Ok(())
    }

    /// Messages per cycle time.
    pub fn messages_per_ct(&self, time: &TimeConfig) -> u32 {
        (time.t_ct / self.period) as u32
    }

    /// Packets per message.
    pub fn packets_per_msg(&self) -> u32 {
        (self.msg_len + self.mtu - 1) / self.mtu
    }

    /// Length of packet `j` (1-based) of a message.
    pub fn packet_len(&self, j: u32) -> u32 {
        let n = self.packets_per_msg();
        debug_assert!(j >= 1 && j <= n);
        if j < n || self.msg_len % self.mtu == 0 {
            self.mtu
        } else {
            self.msg_len % self.mtu
        }
    }
}

/// One message instance within a cycle time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub app: AppId,
    /// 1-based index within the cycle time.
    pub index: u32,
    /// Offset of the message arrival from the start of the cycle time.
    pub arrival_offset: Ns,
}

/// Identity of a packet within the repeating schedule: application, message
/// index within the cycle time, packet index within the message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketKey {
    pub app: AppId,
    pub msg: u32,
    pub pkt: u32,
}

impl fmt::Display for PacketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.app, self.msg, self.pkt)
    }
}

impl PacketKey {
    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.rsplitn(3, '/');
        let pkt = parts.next()?.parse().ok()?;
        let msg = parts.next()?.parse().ok()?;
        let app = AppId::new(parts.next()?);
        Some(PacketKey { app, msg, pkt })
    }
}

impl Serialize for PacketKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PacketKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PacketKey::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("bad packet key `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub key: PacketKey,
    pub len: u32,
}

/// Expands an application into all packets of one cycle time:
/// `messages_per_ct x packets_per_msg` entries, every packet MTU-sized
/// except possibly the last of each message.
pub fn fragment(app: &Application, time: &TimeConfig) -> Vec<Packet> {
    let n_m = app.messages_per_ct(time);
    let n_p = app.packets_per_msg();
    let mut out = Vec::with_capacity((n_m * n_p) as usize);
    for i in 1..=n_m {
        for j in 1..=n_p {
            out.push(Packet {
                key: PacketKey {
                    app: app.id.clone(),
                    msg: i,
                    pkt: j,
                },
                len: app.packet_len(j),
            });
        }
    }
    out
}

/// Traffic model for one scenario: applications plus their message arrival
/// offsets, drawn from the scenario seed.
#[derive(Debug, Clone)]
pub struct TrafficModel {
    pub apps: BTreeMap<AppId, Application>,
    pub messages: BTreeMap<AppId, Vec<Message>>,
}

impl TrafficModel {
    /// Builds the model, drawing each application's first-message arrival
    /// offset uniformly from `[0, period)`; message `i` then arrives at
    /// `offset_1 + (i-1) * period` modulo the cycle time.
    pub fn build(
        apps: Vec<Application>,
        time: &TimeConfig,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for a in apps {
            a.validate(time)?;
            if map.insert(a.id.clone(), a.clone()).is_some() {
                return Err(ModelError::InvalidApplication {
                    id: a.id.0,
                    reason: "duplicate application id".into(),
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut messages = BTreeMap::new();
        for (id, app) in &map {
            let first = if app.period > 1 {
                rng.gen_range(0..app.period)
            } else {
                0
            };
            let msgs = (1..=app.messages_per_ct(time))
                .map(|i| Message {
                    app: id.clone(),
                    index: i,
                    arrival_offset: floor_mod(first + (i as Ns - 1) * app.period, time.t_ct),
                })
                .collect();
            messages.insert(id.clone(), msgs);
        }
        Ok(TrafficModel { apps: map, messages })
    }

    pub fn app(&self, id: &AppId) -> &Application {
        &self.apps[id]
    }

    pub fn message(&self, id: &AppId, index: u32) -> &Message {
        &self.messages[id][(index - 1) as usize]
    }

    /// All packets of all applications, in deterministic order.
    pub fn all_packets(&self, time: &TimeConfig) -> Vec<Packet> {
        self.apps.values().flat_map(|a| fragment(a, time)).collect()
    }
}
