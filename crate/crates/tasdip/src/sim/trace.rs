//! Simulation traces: per-packet hop records and per-message completions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::SimError;
use crate::model::time::Ns;
use crate::model::traffic::AppId;
use crate::model::NodeId;

/// One packet visiting one node. `arrival_ns` is the instant reception
/// completed (the message arrival at the source host); `departure_ns` is the
/// instant transmission began (equal to the arrival at the destination).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopRecord {
    pub app: AppId,
    /// Message instance counted across the whole run, starting at 1.
    pub msg: u64,
    pub pkt: u32,
    pub node: NodeId,
    pub arrival_ns: Ns,
    pub departure_ns: Ns,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub app: AppId,
    pub msg: u64,
    pub arrival_ns: Ns,
    pub completion_ns: Ns,
    pub e2e_delay_ns: Ns,
}

#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    /// Hop records in simulation order.
    pub hops: Vec<HopRecord>,
    /// Completed messages in completion order.
    pub messages: Vec<MessageRecord>,
    /// Best-effort packets dropped on queue overflow.
    pub drops: u64,
    /// Scheduled packets emitted by source hosts.
    pub scheduled_emitted: u64,
    /// Scheduled packets that reached their destination.
    pub scheduled_delivered: u64,
}

impl SimTrace {
    pub fn delays(&self, app: &AppId) -> Vec<Ns> {
        self.messages
            .iter()
            .filter(|m| &m.app == app)
            .map(|m| m.e2e_delay_ns)
            .collect()
    }

    /// Max minus min end-to-end delay over the application's completed
    /// messages.
    pub fn measure_jitter(&self, app: &AppId) -> Result<Ns, SimError> {
        let delays = self.delays(app);
        if delays.len() < 2 {
            return Err(SimError::JitterUndefined(app.to_string()));
        }
        Ok(delays.iter().max().unwrap() - delays.iter().min().unwrap())
    }

    /// Hop rows as CSV, optionally restricted to the given applications.
    pub fn hops_csv(&self, only: Option<&[AppId]>) -> String {
        let mut out = String::from("app_id,msg_index,pkt_index,node,arrival_ns,departure_ns\n");
        for h in &self.hops {
            if only.is_some_and(|apps| !apps.contains(&h.app)) {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{},{},{}",
                h.app, h.msg, h.pkt, h.node, h.arrival_ns, h.departure_ns
            )
            .unwrap();
        }
        out
    }

    /// Per-application delay summary as CSV.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("app_id,n_messages,min_delay_ns,max_delay_ns,jitter_ns\n");
        let mut per_app: BTreeMap<&AppId, Vec<Ns>> = BTreeMap::new();
        for m in &self.messages {
            per_app.entry(&m.app).or_default().push(m.e2e_delay_ns);
        }
        for (app, delays) in per_app {
            let min = delays.iter().min().unwrap();
            let max = delays.iter().max().unwrap();
            writeln!(out, "{},{},{},{},{}", app, delays.len(), min, max, max - min).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(app: &str, i: u64, delay: Ns) -> MessageRecord {
        MessageRecord {
            app: app.into(),
            msg: i,
            arrival_ns: 0,
            completion_ns: delay,
            e2e_delay_ns: delay,
        }
    }

    #[test]
    fn jitter_is_max_minus_min() {
        let trace = SimTrace {
            messages: vec![msg("a0", 1, 662_000), msg("a0", 2, 1_151_000)],
            ..SimTrace::default()
        };
        assert_eq!(trace.measure_jitter(&"a0".into()).unwrap(), 489_000);
    }

    #[test]
    fn equal_delays_have_zero_jitter() {
        let trace = SimTrace {
            messages: (1..=5).map(|i| msg("a0", i, 953_000)).collect(),
            ..SimTrace::default()
        };
        assert_eq!(trace.measure_jitter(&"a0".into()).unwrap(), 0);
    }

    #[test]
    fn jitter_needs_two_messages() {
        let trace = SimTrace {
            messages: vec![msg("a0", 1, 1)],
            ..SimTrace::default()
        };
        assert!(matches!(
            trace.measure_jitter(&"a0".into()),
            Err(SimError::JitterUndefined(_))
        ));
    }
}
