//! Deterministic discrete-event simulator. Executes compiled device
//! programs: gated source emission, immediate store-and-forward inside TAS
//! segments, cyclic queues in DIP routers, PIFO-held departures at egress
//! TAS edges, and strict priority of deterministic traffic over best effort.
//!
//! Best-effort transmission is length-aware: a packet may start only if it
//! finishes before the next deterministic busy window on that port, so
//! interference can never move a scheduled packet's timestamps.

pub mod interference;
pub mod trace;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::rc::Rc;

use crate::device::DeviceProgram;
use crate::error::SimError;
use crate::model::time::{floor_mod, tx_time, Ns};
use crate::model::traffic::{AppId, PacketKey, TrafficModel};
use crate::model::{NetworkGraph, NodeId, NodeKind};
use crate::solver::routes::shortest_node_path;
use interference::{InterferenceProfile, ResolvedFlow};
use trace::{HopRecord, MessageRecord, SimTrace};

/// Best-effort queue capacity per port, drop-tail.
pub const BE_QUEUE_CAP: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Scheduled,
    AppBestEffort,
    Interference,
}

#[derive(Debug, Clone)]
struct SimPacket {
    class: Class,
    key: Option<PacketKey>,
    /// Absolute message instance across the run, 1-based.
    instance: u64,
    pkt: u32,
    len: u32,
    msg_arrival: Ns,
    path: Rc<Vec<usize>>,
    /// Index into `path` of the node currently holding the packet.
    hop: usize,
    /// Reception completion at the current node.
    arrived_at: Ns,
    /// Start of the DIP cycle in which the upstream router transmitted.
    sender_cycle_start: Ns,
}

#[derive(Debug)]
enum Body {
    SourceEmit {
        port: usize,
        key: PacketKey,
        instance: u64,
        msg_arrival: Ns,
    },
    PifoRelease {
        port: usize,
        packet: Box<SimPacket>,
    },
    CycleBoundary {
        port: usize,
        cycle: i64,
    },
    Arrival {
        packet: Box<SimPacket>,
    },
    TxComplete {
        port: usize,
    },
    BeRetry {
        port: usize,
    },
    FlowEmit {
        flow: usize,
        count: u64,
    },
    AppEmit {
        app: AppId,
        msg: u32,
        instance: u64,
    },
}

// Same-instant ordering: gate events first, then cycle boundaries, then
// arrivals, then transmit completions.
fn rank(body: &Body) -> u8 {
    match body {
        Body::SourceEmit { .. } | Body::PifoRelease { .. } | Body::BeRetry { .. } => 0,
        Body::CycleBoundary { .. } => 1,
        Body::Arrival { .. } | Body::FlowEmit { .. } | Body::AppEmit { .. } => 2,
        Body::TxComplete { .. } => 3,
    }
}

struct Event {
    t: Ns,
    rank: u8,
    seq: u64,
    body: Body,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.t, self.rank, self.seq) == (other.t, other.rank, other.seq)
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the earliest event.
        (other.t, other.rank, other.seq).cmp(&(self.t, self.rank, self.seq))
    }
}

struct Port {
    src: usize,
    src_id: NodeId,
    bw: u64,
    delay: Ns,
    busy_until: Ns,
    /// Deterministic busy spans in the source node's local frame.
    windows: Vec<(Ns, Ns)>,
    be_queue: VecDeque<SimPacket>,
    be_retry_pending: bool,
    dip_pending: BTreeMap<i64, VecDeque<SimPacket>>,
    dip_open: i64,
}

struct NodeInfo {
    id: NodeId,
    kind: NodeKind,
    epoch: Ns,
}

struct Engine<'a> {
    graph: &'a NetworkGraph,
    traffic: &'a TrafficModel,
    nodes: Vec<NodeInfo>,
    index: BTreeMap<NodeId, usize>,
    ports: Vec<Port>,
    port_of: BTreeMap<(usize, usize), usize>,
    heap: BinaryHeap<Event>,
    seq: u64,
    gated: bool,
    flows: Vec<ResolvedFlow>,
    shifts: BTreeMap<PacketKey, i64>,
    ranks: BTreeMap<PacketKey, Ns>,
    paths: BTreeMap<AppId, Rc<Vec<usize>>>,
    /// (app, instance) -> (message arrival, packets still in flight).
    open_msgs: BTreeMap<(AppId, u64), (Ns, u32)>,
    trace: SimTrace,
}

impl<'a> Engine<'a> {
    fn new(graph: &'a NetworkGraph, traffic: &'a TrafficModel, gated: bool) -> Self {
        let nodes: Vec<NodeInfo> = graph
            .nodes()
            .map(|n| NodeInfo {
                id: n.id.clone(),
                kind: n.kind,
                epoch: n.epoch,
            })
            .collect();
        let index: BTreeMap<NodeId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let mut ports = Vec::new();
        let mut port_of = BTreeMap::new();
        for link in graph.links() {
            let src = index[&link.src];
            let dst = index[&link.dst];
            port_of.insert((src, dst), ports.len());
            ports.push(Port {
                src,
                src_id: link.src.clone(),
                bw: link.bw,
                delay: link.d,
                busy_until: 0,
                windows: Vec::new(),
                be_queue: VecDeque::new(),
                be_retry_pending: false,
                dip_pending: BTreeMap::new(),
                dip_open: i64::MIN,
            });
        }
        Engine {
            graph,
            traffic,
            nodes,
            index,
            ports,
            port_of,
            heap: BinaryHeap::new(),
            seq: 0,
            gated,
            flows: Vec::new(),
            shifts: BTreeMap::new(),
            ranks: BTreeMap::new(),
            paths: BTreeMap::new(),
            open_msgs: BTreeMap::new(),
            trace: SimTrace::default(),
        }
    }

    fn push(&mut self, t: Ns, body: Body) {
        let rank = rank(&body);
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Event { t, rank, seq, body });
    }

    fn port_idle(&self, port: usize, t: Ns) -> bool {
        self.ports[port].busy_until <= t
    }

    /// First instant `>= t` on the grid `epoch + k * step`.
    fn ceil_to_grid(t: Ns, epoch: Ns, step: Ns) -> Ns {
        epoch + (t - epoch + step - 1).div_euclid(step) * step
    }

    fn load_programs(&mut self, programs: &BTreeMap<NodeId, DeviceProgram>) {
        for (node_id, prog) in programs {
            let n = self.index[node_id];
            for (port_key, spans) in &prog.plan.det_windows {
                let p = self.port_of[&(n, self.index[&port_key.1])];
                self.ports[p].windows = spans.clone();
            }
            for table in &prog.dip_table {
                for s in &table.shifts {
                    self.shifts.insert(s.packet.clone(), s.shift);
                }
            }
            for pifo in &prog.pifo {
                for e in &pifo.entries {
                    self.ranks.insert(e.packet.clone(), e.rank_ns);
                }
            }
        }
        // Reconstruct per-application paths by walking the forwarding
        // entries from the source host.
        for (node_id, prog) in programs {
            if self.nodes[self.index[node_id]].kind != NodeKind::SourceHost {
                continue;
            }
            for key in prog.plan.forward.keys() {
                if self.paths.contains_key(&key.app) {
                    continue;
                }
                let mut path = vec![self.index[node_id]];
                let mut here = node_id.clone();
                while let Some(next) = programs
                    .get(&here)
                    .and_then(|p| p.plan.forward.get(key))
                    .cloned()
                {
                    path.push(self.index[&next]);
                    here = next;
                }
                self.paths.insert(key.app.clone(), Rc::new(path));
            }
        }
    }

    fn schedule_gated_emissions(
        &mut self,
        programs: &BTreeMap<NodeId, DeviceProgram>,
        horizon: u32,
    ) {
        let traffic = self.traffic;
        let t_ct = self.graph.time.t_ct;
        let mut emissions = Vec::new();
        for (node_id, prog) in programs {
            let n = self.index[node_id];
            if self.nodes[n].kind != NodeKind::SourceHost {
                continue;
            }
            let epoch = self.nodes[n].epoch;
            for (port_key, deps) in &prog.plan.departures {
                let port = self.port_of[&(n, self.index[&port_key.1])];
                for dep in deps {
                    let app = &traffic.apps[&dep.packet.app];
                    let n_m = app.messages_per_ct(&self.graph.time) as u64;
                    let msg = traffic.message(&dep.packet.app, dep.packet.msg);
                    for h in 0..horizon as u64 {
                        let msg_arrival = epoch + h as Ns * t_ct + msg.arrival_offset;
                        let depart =
                            msg_arrival + floor_mod(dep.offset - msg.arrival_offset, t_ct);
                        emissions.push((
                            depart,
                            port,
                            dep.packet.clone(),
                            h * n_m + dep.packet.msg as u64,
                            msg_arrival,
                        ));
                    }
                }
            }
        }
        for (depart, port, key, instance, msg_arrival) in emissions {
            self.push(
                depart,
                Body::SourceEmit {
                    port,
                    key,
                    instance,
                    msg_arrival,
                },
            );
        }
    }

    fn schedule_app_emissions(&mut self, horizon: u32) {
        // Ungated mode: every application emits at its message arrivals over
        // its shortest path.
        let traffic = self.traffic;
        let t_ct = self.graph.time.t_ct;
        let mut emissions = Vec::new();
        for (id, app) in &traffic.apps {
            let Some(path) = shortest_node_path(self.graph, &app.src, &app.dest) else {
                continue;
            };
            let path: Vec<usize> = path.iter().map(|n| self.index[n]).collect();
            self.paths.insert(id.clone(), Rc::new(path));
            let epoch = self.nodes[self.index[&app.src]].epoch;
            let n_m = app.messages_per_ct(&self.graph.time) as u64;
            for h in 0..horizon as u64 {
                for i in 1..=n_m as u32 {
                    let msg = traffic.message(id, i);
                    emissions.push((
                        epoch + h as Ns * t_ct + msg.arrival_offset,
                        id.clone(),
                        i,
                        h * n_m + i as u64,
                    ));
                }
            }
        }
        for (at, app, msg, instance) in emissions {
            self.push(at, Body::AppEmit { app, msg, instance });
        }
    }

    fn schedule_interference(&mut self, profile: &InterferenceProfile, horizon_end: Ns) {
        self.flows = profile.resolve();
        for fi in 0..self.flows.len() {
            let phase = self.flows[fi].phase;
            if phase < horizon_end {
                self.push(phase, Body::FlowEmit { flow: fi, count: 0 });
            }
        }
    }

    // ---- event handlers ----

    fn transmit(&mut self, port_idx: usize, mut packet: SimPacket, t: Ns) {
        let tx = tx_time(packet.len, self.ports[port_idx].bw);
        let delay = self.ports[port_idx].delay;
        debug_assert!(self.ports[port_idx].busy_until <= t);
        self.ports[port_idx].busy_until = t + tx;
        if packet.class != Class::Interference {
            self.trace.hops.push(HopRecord {
                app: packet.key.as_ref().unwrap().app.clone(),
                msg: packet.instance,
                pkt: packet.pkt,
                node: self.ports[port_idx].src_id.clone(),
                arrival_ns: packet.arrived_at,
                departure_ns: t,
            });
        }
        packet.hop += 1;
        self.push(t + tx, Body::TxComplete { port: port_idx });
        self.push(
            t + tx + delay,
            Body::Arrival {
                packet: Box::new(packet),
            },
        );
    }

    fn handle_arrival(&mut self, mut packet: SimPacket, t: Ns) -> Result<(), SimError> {
        packet.arrived_at = t;
        let here = packet.path[packet.hop];
        if packet.hop + 1 == packet.path.len() {
            self.complete(packet, t);
            return Ok(());
        }
        let next = packet.path[packet.hop + 1];
        let port_idx = self.port_of[&(here, next)];
        match packet.class {
            Class::Scheduled => {
                let kind = self.nodes[here].kind;
                let prev_kind = self.nodes[packet.path[packet.hop - 1]].kind;
                match kind {
                    NodeKind::TasSwitch => self.forward_now(port_idx, packet, t),
                    NodeKind::TasEdgeSwitch if prev_kind.is_dip() => {
                        self.pifo_hold(port_idx, packet, t)
                    }
                    NodeKind::TasEdgeSwitch => self.forward_now(port_idx, packet, t),
                    NodeKind::DipRouter | NodeKind::DipEdgeRouter => {
                        self.dip_enqueue(port_idx, packet, t)
                    }
                    other => Err(SimError::MissedGate {
                        packet: packet.key.as_ref().unwrap().to_string(),
                        node: format!("{} ({other:?} cannot forward)", self.nodes[here].id),
                        at: t,
                    }),
                }
            }
            Class::AppBestEffort | Class::Interference => {
                self.be_enqueue(port_idx, packet, t);
                Ok(())
            }
        }
    }

    /// Sink bookkeeping: interference is absorbed, application packets are
    /// recorded and message completions detected.
    fn complete(&mut self, packet: SimPacket, t: Ns) {
        if packet.class == Class::Interference {
            return;
        }
        let here = packet.path[packet.hop];
        let app = packet.key.as_ref().unwrap().app.clone();
        self.trace.hops.push(HopRecord {
            app: app.clone(),
            msg: packet.instance,
            pkt: packet.pkt,
            node: self.nodes[here].id.clone(),
            arrival_ns: t,
            departure_ns: t,
        });
        if packet.class == Class::Scheduled {
            self.trace.scheduled_delivered += 1;
        }
        let expected = self.traffic.apps[&app].packets_per_msg();
        let slot = self
            .open_msgs
            .entry((app.clone(), packet.instance))
            .or_insert((packet.msg_arrival, expected));
        slot.1 -= 1;
        let (arrival, finished) = (slot.0, slot.1 == 0);
        if finished {
            self.open_msgs.remove(&(app.clone(), packet.instance));
            self.trace.messages.push(MessageRecord {
                app,
                msg: packet.instance,
                arrival_ns: arrival,
                completion_ns: t,
                e2e_delay_ns: t - arrival,
            });
        }
    }

    /// Immediate store-and-forward; a feasible schedule guarantees the port
    /// is free at this instant.
    fn forward_now(&mut self, port_idx: usize, packet: SimPacket, t: Ns) -> Result<(), SimError> {
        if !self.port_idle(port_idx, t) {
            return Err(SimError::MissedGate {
                packet: packet.key.map(|k| k.to_string()).unwrap_or_default(),
                node: self.ports[port_idx].src_id.to_string(),
                at: t,
            });
        }
        self.transmit(port_idx, packet, t);
        Ok(())
    }

    /// Egress TAS edge: hold the packet until the first instant at or after
    /// its arrival bound whose local offset equals the compiled PIFO rank.
    fn pifo_hold(&mut self, port_idx: usize, packet: SimPacket, t: Ns) -> Result<(), SimError> {
        let time = self.graph.time;
        let here = packet.path[packet.hop];
        let prev = packet.path[packet.hop - 1];
        let in_port = self.port_of[&(prev, here)];
        let bound = packet.sender_cycle_start + time.t_dip + self.ports[in_port].delay;
        let key = packet.key.as_ref().unwrap();
        let Some(&rank) = self.ranks.get(key) else {
            return Err(SimError::MissedGate {
                packet: key.to_string(),
                node: self.nodes[here].id.to_string(),
                at: t,
            });
        };
        let bound_local = floor_mod(bound - self.nodes[here].epoch, time.t_ct);
        let release = bound + floor_mod(rank - bound_local, time.t_ct);
        if release < t {
            return Err(SimError::MissedGate {
                packet: key.to_string(),
                node: self.nodes[here].id.to_string(),
                at: t,
            });
        }
        self.push(
            release,
            Body::PifoRelease {
                port: port_idx,
                packet: Box::new(packet),
            },
        );
        Ok(())
    }

    /// DIP router: map the packet to its retransmission cycle and enqueue.
    fn dip_enqueue(&mut self, port_idx: usize, packet: SimPacket, t: Ns) -> Result<(), SimError> {
        let time = self.graph.time;
        let here = packet.path[packet.hop];
        let epoch = self.nodes[here].epoch;
        let prev = packet.path[packet.hop - 1];
        let target_start = if self.nodes[prev].kind.is_dip() {
            // Worst-case arrival bound from the upstream transmission cycle.
            let in_port = self.port_of[&(prev, here)];
            let bound = packet.sender_cycle_start + time.t_dip + self.ports[in_port].delay;
            Self::ceil_to_grid(bound, epoch, time.t_dip)
        } else {
            // TAS ingress: first boundary at or after the arrival, plus the
            // packet's cycle shift.
            let key = packet.key.as_ref().unwrap();
            let shift = self.shifts.get(key).copied().unwrap_or(0);
            Self::ceil_to_grid(t, epoch, time.t_dip) + shift * time.t_dip
        };
        let cycle = (target_start - epoch).div_euclid(time.t_dip);
        self.ports[port_idx]
            .dip_pending
            .entry(cycle)
            .or_default()
            .push_back(packet);
        self.push(
            target_start,
            Body::CycleBoundary {
                port: port_idx,
                cycle,
            },
        );
        Ok(())
    }

    fn open_cycle(&mut self, port_idx: usize, cycle: i64, t: Ns) -> Result<(), SimError> {
        let port = &mut self.ports[port_idx];
        if cycle > port.dip_open {
            // A packet left behind in an earlier cycle means the schedule
            // overfilled it.
            if let Some((&c, q)) = port.dip_pending.iter().next() {
                if c < cycle && !q.is_empty() {
                    return Err(SimError::DeterministicOverflow {
                        node: port.src_id.to_string(),
                        at: t,
                    });
                }
            }
            port.dip_open = cycle;
        }
        self.poll_dip(port_idx, t)
    }

    fn poll_dip(&mut self, port_idx: usize, t: Ns) -> Result<(), SimError> {
        let time = self.graph.time;
        loop {
            if !self.port_idle(port_idx, t) {
                return Ok(());
            }
            let epoch = self.nodes[self.ports[port_idx].src].epoch;
            let port = &mut self.ports[port_idx];
            let open = port.dip_open;
            let Some(queue) = port.dip_pending.get_mut(&open) else {
                return Ok(());
            };
            let Some(mut packet) = queue.pop_front() else {
                port.dip_pending.remove(&open);
                return Ok(());
            };
            if queue.is_empty() {
                port.dip_pending.remove(&open);
            }
            let cycle_start = epoch + open * time.t_dip;
            let tx = tx_time(packet.len, port.bw);
            if t + tx > cycle_start + time.t_dip {
                return Err(SimError::DeterministicOverflow {
                    node: port.src_id.to_string(),
                    at: t,
                });
            }
            packet.sender_cycle_start = cycle_start;
            self.transmit(port_idx, packet, t);
        }
    }

    fn be_enqueue(&mut self, port_idx: usize, packet: SimPacket, t: Ns) {
        if self.ports[port_idx].be_queue.len() >= BE_QUEUE_CAP {
            self.trace.drops += 1;
            return;
        }
        self.ports[port_idx].be_queue.push_back(packet);
        self.poll_be(port_idx, t);
    }

    fn poll_be(&mut self, port_idx: usize, t: Ns) {
        let t_hc = self.graph.time.t_hc;
        loop {
            if !self.port_idle(port_idx, t) || self.ports[port_idx].be_queue.is_empty() {
                return;
            }
            if self.gated {
                let epoch = self.nodes[self.ports[port_idx].src].epoch;
                let head_len = self.ports[port_idx].be_queue.front().unwrap().len;
                let tx = tx_time(head_len, self.ports[port_idx].bw);
                let t_local = floor_mod(t - epoch, t_hc);
                if let Err(retry_in) = be_gate(&self.ports[port_idx].windows, t_local, tx, t_hc) {
                    if !self.ports[port_idx].be_retry_pending {
                        self.ports[port_idx].be_retry_pending = true;
                        self.push(t + retry_in, Body::BeRetry { port: port_idx });
                    }
                    return;
                }
            }
            let packet = self.ports[port_idx].be_queue.pop_front().unwrap();
            self.transmit(port_idx, packet, t);
        }
    }

    fn run_loop(&mut self, horizon_end: Ns) -> Result<(), SimError> {
        while let Some(ev) = self.heap.pop() {
            let t = ev.t;
            match ev.body {
                Body::SourceEmit {
                    port,
                    key,
                    instance,
                    msg_arrival,
                } => {
                    if !self.port_idle(port, t) {
                        return Err(SimError::MissedGate {
                            packet: key.to_string(),
                            node: self.ports[port].src_id.to_string(),
                            at: t,
                        });
                    }
                    let len = self.traffic.apps[&key.app].packet_len(key.pkt);
                    let packet = SimPacket {
                        class: Class::Scheduled,
                        pkt: key.pkt,
                        len,
                        instance,
                        msg_arrival,
                        path: Rc::clone(&self.paths[&key.app]),
                        hop: 0,
                        arrived_at: msg_arrival,
                        sender_cycle_start: 0,
                        key: Some(key),
                    };
                    self.trace.scheduled_emitted += 1;
                    self.transmit(port, packet, t);
                }
                Body::PifoRelease { port, packet } => self.forward_now(port, *packet, t)?,
                Body::CycleBoundary { port, cycle } => self.open_cycle(port, cycle, t)?,
                Body::Arrival { packet } => self.handle_arrival(*packet, t)?,
                Body::TxComplete { port } => {
                    if self.nodes[self.ports[port].src].kind.is_dip() {
                        self.poll_dip(port, t)?;
                    }
                    self.poll_be(port, t);
                }
                Body::BeRetry { port } => {
                    self.ports[port].be_retry_pending = false;
                    self.poll_be(port, t);
                }
                Body::FlowEmit { flow, count } => {
                    let (src_id, dst_id, len, gap, phase) = {
                        let f = &self.flows[flow];
                        (f.src.clone(), f.dst.clone(), f.len, f.gap, f.phase)
                    };
                    let src = self.index[&src_id];
                    let dst = self.index[&dst_id];
                    let port = self.port_of[&(src, dst)];
                    let packet = SimPacket {
                        class: Class::Interference,
                        key: None,
                        instance: count + 1,
                        pkt: 1,
                        len,
                        msg_arrival: t,
                        path: Rc::new(vec![src, dst]),
                        hop: 0,
                        arrived_at: t,
                        sender_cycle_start: 0,
                    };
                    self.be_enqueue(port, packet, t);
                    let next = phase + (count as Ns + 1) * gap;
                    if next < horizon_end {
                        self.push(
                            next,
                            Body::FlowEmit {
                                flow,
                                count: count + 1,
                            },
                        );
                    }
                }
                Body::AppEmit { app, msg, instance } => {
                    let (n_p, lens): (u32, Vec<u32>) = {
                        let a = &self.traffic.apps[&app];
                        let n_p = a.packets_per_msg();
                        (n_p, (1..=n_p).map(|j| a.packet_len(j)).collect())
                    };
                    let path = Rc::clone(&self.paths[&app]);
                    let first_port = self.port_of[&(path[0], path[1])];
                    for j in 1..=n_p {
                        let packet = SimPacket {
                            class: Class::AppBestEffort,
                            key: Some(PacketKey {
                                app: app.clone(),
                                msg,
                                pkt: j,
                            }),
                            instance,
                            pkt: j,
                            len: lens[(j - 1) as usize],
                            msg_arrival: t,
                            path: Rc::clone(&path),
                            hop: 0,
                            arrived_at: t,
                            sender_cycle_start: 0,
                        };
                        self.be_enqueue(first_port, packet, t);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Length-aware best-effort gate: allowed when the transmission fits before
/// the next deterministic window; otherwise returns how long to wait before
/// retrying (until the blocking window ends).
fn be_gate(windows: &[(Ns, Ns)], t_local: Ns, tx: Ns, t_hc: Ns) -> Result<(), Ns> {
    if windows.is_empty() {
        return Ok(());
    }
    let idx = windows.partition_point(|w| w.0 <= t_local);
    if idx > 0 {
        let (start, end) = windows[idx - 1];
        if start <= t_local && t_local < end {
            return Err(end - t_local);
        }
    }
    let (next_start, next_end) = if idx < windows.len() {
        windows[idx]
    } else {
        (windows[0].0 + t_hc, windows[0].1 + t_hc)
    };
    if t_local + tx <= next_start {
        Ok(())
    } else {
        Err(next_end - t_local)
    }
}

/// Executes compiled device programs for `horizon` hypercycles of scheduled
/// traffic plus the interference profile, then drains in-flight packets.
pub fn run(
    graph: &NetworkGraph,
    programs: &BTreeMap<NodeId, DeviceProgram>,
    traffic: &TrafficModel,
    profile: &InterferenceProfile,
    horizon: u32,
) -> Result<SimTrace, SimError> {
    let horizon = horizon.max(1);
    let mut engine = Engine::new(graph, traffic, true);
    engine.load_programs(programs);
    engine.schedule_gated_emissions(programs, horizon);
    let horizon_end = horizon as Ns * graph.time.t_hc;
    engine.schedule_interference(profile, horizon_end);
    engine.run_loop(horizon_end)?;
    Ok(engine.trace)
}

/// Same traffic without gating: FIFO output queues everywhere, no shaping,
/// no cycle mapping.
pub fn run_best_effort(
    graph: &NetworkGraph,
    traffic: &TrafficModel,
    profile: &InterferenceProfile,
    horizon: u32,
) -> Result<SimTrace, SimError> {
    let horizon = horizon.max(1);
    let mut engine = Engine::new(graph, traffic, false);
    engine.schedule_app_emissions(horizon);
    let horizon_end = horizon as Ns * graph.time.t_hc;
    engine.schedule_interference(profile, horizon_end);
    engine.run_loop(horizon_end)?;
    Ok(engine.trace)
}
