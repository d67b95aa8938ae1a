//! Best-effort interference traffic: constant-bit-rate single-link flows
//! with seeded random start phases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::time::{tx_time, Ns};
use crate::model::NodeId;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_bps: u64,
    pub packet_len_bytes: u32,
    /// Emission phase of the first packet; drawn from the profile seed when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_phase_ns: Option<Ns>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferenceProfile {
    pub flows: Vec<InterferenceFlow>,
    pub seed: u64,
}

/// A flow with its emission cadence resolved.
#[derive(Debug, Clone)]
pub struct ResolvedFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub len: u32,
    /// Inter-packet gap realizing the configured rate.
    pub gap: Ns,
    pub phase: Ns,
}

impl InterferenceProfile {
    pub fn is_empty(&self) -> bool {
        self.flows.iter().all(|f| f.rate_bps == 0)
    }

    pub fn resolve(&self) -> Vec<ResolvedFlow> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.flows
            .iter()
            .filter(|f| f.rate_bps > 0 && f.packet_len_bytes > 0)
            .map(|f| {
                let gap = tx_time(f.packet_len_bytes, f.rate_bps);
                let phase = match f.start_phase_ns {
                    Some(p) => p,
                    None => rng.gen_range(0..gap.max(1)),
                };
                ResolvedFlow {
                    src: f.src.clone(),
                    dst: f.dst.clone(),
                    len: f.packet_len_bytes,
                    gap,
                    phase,
                }
            })
            .collect()
    }
}
