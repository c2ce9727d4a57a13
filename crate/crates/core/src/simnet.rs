//! Deterministic discrete-event harness: radio broadcast with per-cell
//! range, reliable in-order backhaul unicast, cancelable timers, and a
//! replayable trace.
//!
//! Determinism contract: a (scenario, seed) pair fully determines the
//! trace. The queue orders events by (tick, sequence number), so equal-time
//! events are processed in scheduling order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use crate::cech::{CellId, LocalView};
use crate::geometry::{Disk, Point2};

pub type Tick = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown destination cell {0}")]
    UnknownDest(CellId),
    #[error("timer delay must be positive")]
    ZeroDelay,
    #[error("no quiescence within {max_ticks} ticks; {pending} events pending")]
    NoQuiescence { max_ticks: Tick, pending: usize },
}

/// Protocol payloads exchanged between cells.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Ping { disk: Disk },
    Confirm { disk: Disk },
    SimplexShare { view: LocalView },
    BoundaryDetect { path: Vec<CellId> },
    Pause,
    Continue,
    RadiusUpdate { radius: f64 },
    TurnOff,
}

impl Message {
    pub fn kind_label(&self) -> &'static str {
        match self {
            Message::Ping { .. } => "PING",
            Message::Confirm { .. } => "CONFIRM",
            Message::SimplexShare { .. } => "SHARE",
            Message::BoundaryDetect { .. } => "BDETECT",
            Message::Pause => "PAUSE",
            Message::Continue => "CONTINUE",
            Message::RadiusUpdate { .. } => "RUPDATE",
            Message::TurnOff => "TURNOFF",
        }
    }

    /// Canonical single-token encoding used in trace lines.
    pub fn payload_text(&self) -> String {
        match self {
            Message::Ping { disk } | Message::Confirm { disk } => {
                format!("x={},y={},r={}", disk.center.x, disk.center.y, disk.radius)
            }
            Message::SimplexShare { view } => {
                let total: usize = (0..=view.complex.top_dim().unwrap_or(0))
                    .map(|k| view.complex.count(k))
                    .sum();
                format!("s={},d={:08x}", total, view_digest(view))
            }
            Message::BoundaryDetect { path } => {
                let ids: Vec<String> = path.iter().map(|c| c.0.to_string()).collect();
                format!("path={}", ids.join(","))
            }
            Message::Pause | Message::Continue | Message::TurnOff => "-".to_string(),
            Message::RadiusUpdate { radius } => format!("r={radius}"),
        }
    }
}

/// FNV-1a over the canonical simplex listing; enough to spot divergence
/// in golden traces without dumping whole views.
fn view_digest(view: &LocalView) -> u32 {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in crate::cech::complex_to_text(&view.complex).bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    (h >> 32) as u32 ^ h as u32
}

/// An entry of the replayable simulation trace.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    /// A message delivery, recorded at its delivery tick.
    Deliver {
        at: Tick,
        kind: &'static str,
        from: CellId,
        to: CellId,
        payload: String,
    },
    /// A timer expiry delivered to a cell.
    Timer { at: Tick, cell: CellId },
    /// A state transition reported by an agent.
    Note {
        at: Tick,
        cell: CellId,
        label: &'static str,
        detail: String,
    },
}

impl TraceEvent {
    pub fn to_line(&self) -> String {
        match self {
            TraceEvent::Deliver {
                at,
                kind,
                from,
                to,
                payload,
            } => format!("{at} {kind} {from} {to} {payload}"),
            TraceEvent::Timer { at, cell } => format!("{at} TIMER {cell} - -"),
            TraceEvent::Note {
                at,
                cell,
                label,
                detail,
            } => format!("{at} {label} {cell} - {detail}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace(pub Vec<TraceEvent>);

impl Trace {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.0 {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    /// Delivery counts per message kind label.
    pub fn message_counts(&self) -> std::collections::BTreeMap<&'static str, u64> {
        let mut counts = std::collections::BTreeMap::new();
        for e in &self.0 {
            if let TraceEvent::Deliver { kind, .. } = e {
                *counts.entry(*kind).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn notes(&self) -> impl Iterator<Item = (&Tick, &CellId, &&'static str, &String)> + '_ {
        self.0.iter().filter_map(|e| match e {
            TraceEvent::Note {
                at,
                cell,
                label,
                detail,
            } => Some((at, cell, label, detail)),
            _ => None,
        })
    }
}

/// Handle for a scheduled timer; canceling is idempotent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimerHandle(u64);

#[derive(Debug, Clone, PartialEq)]
enum EventPayload {
    Deliver { from: CellId, msg: Message },
    Timer { handle: TimerHandle },
}

#[derive(Debug, Clone, PartialEq)]
struct QueuedEvent {
    at: Tick,
    seq: u64,
    target: CellId,
    payload: EventPayload,
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Latencies in logical ticks; any positive values satisfy the protocol's
/// "within a period" assumptions.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub radio_latency: Tick,
    pub backhaul_latency: Tick,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            radio_latency: 1,
            backhaul_latency: 1,
        }
    }
}

struct RadioEntry {
    pos: Point2,
    radius: f64,
}

/// Shared simulation state handed to agents while they handle an event.
pub struct SimCtx {
    cfg: SimConfig,
    now: Tick,
    seq: u64,
    next_timer: u64,
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    canceled: HashSet<TimerHandle>,
    radios: Vec<RadioEntry>,
    trace: Trace,
}

impl SimCtx {
    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn config(&self) -> SimConfig {
        self.cfg
    }

    fn push(&mut self, at: Tick, target: CellId, payload: EventPayload) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(QueuedEvent {
            at,
            seq,
            target,
            payload,
        }));
    }

    /// Schedules delivery of `msg` to every other cell within radio range
    /// (twice the sender's radius) and returns the recipient set. A sender
    /// with no range left delivers to nobody.
    pub fn broadcast_radio(&mut self, from: CellId, msg: Message) -> Vec<CellId> {
        let sender = &self.radios[from.0 as usize];
        if sender.radius <= 0.0 {
            return Vec::new();
        }
        let range = 2.0 * sender.radius;
        let origin = sender.pos;
        let mut recipients = Vec::new();
        for (i, entry) in self.radios.iter().enumerate() {
            let id = CellId(i as u32);
            if id != from && origin.distance(&entry.pos) <= range {
                recipients.push(id);
            }
        }
        let at = self.now + self.cfg.radio_latency;
        for to in &recipients {
            self.push(
                at,
                *to,
                EventPayload::Deliver {
                    from,
                    msg: msg.clone(),
                },
            );
        }
        recipients
    }

    /// Reliable in-order unicast over the backhaul.
    pub fn send_backhaul(&mut self, from: CellId, to: CellId, msg: Message) -> Result<(), SimError> {
        if (to.0 as usize) >= self.radios.len() {
            return Err(SimError::UnknownDest(to));
        }
        let at = self.now + self.cfg.backhaul_latency;
        self.push(at, to, EventPayload::Deliver { from, msg });
        Ok(())
    }

    pub fn schedule_timer(&mut self, target: CellId, delay: Tick) -> Result<TimerHandle, SimError> {
        if delay == 0 {
            return Err(SimError::ZeroDelay);
        }
        let handle = TimerHandle(self.next_timer);
        self.next_timer += 1;
        self.push(self.now + delay, target, EventPayload::Timer { handle });
        Ok(handle)
    }

    pub fn cancel_timer(&mut self, handle: TimerHandle) {
        self.canceled.insert(handle);
    }

    /// Records a state transition in the trace.
    pub fn note(&mut self, cell: CellId, label: &'static str, detail: String) {
        self.trace.0.push(TraceEvent::Note {
            at: self.now,
            cell,
            label,
            detail,
        });
    }
}

/// A per-cell protocol state machine driven by the event loop.
pub trait Agent {
    fn on_start(&mut self, ctx: &mut SimCtx);
    fn on_message(&mut self, ctx: &mut SimCtx, from: CellId, msg: Message);
    fn on_timer(&mut self, ctx: &mut SimCtx, handle: TimerHandle);
}

/// Single-threaded deterministic simulator over a fixed set of agents.
/// Whole simulator instances are independent; one may run many of them in
/// parallel, one per scenario and seed.
pub struct Simulator<A: Agent> {
    agents: Vec<A>,
    ctx: SimCtx,
    started: bool,
}

impl<A: Agent> Simulator<A> {
    pub fn new(cfg: SimConfig) -> Self {
        Self {
            agents: Vec::new(),
            ctx: SimCtx {
                cfg,
                now: 0,
                seq: 0,
                next_timer: 0,
                queue: BinaryHeap::new(),
                canceled: HashSet::new(),
                radios: Vec::new(),
                trace: Trace::default(),
            },
            started: false,
        }
    }

    /// Registers an agent; agents must be added in cell-id order, starting
    /// from zero, so the id doubles as the registry index.
    pub fn add_agent(&mut self, agent: A, pos: Point2, radius: f64) {
        self.agents.push(agent);
        self.ctx.radios.push(RadioEntry { pos, radius });
    }

    pub fn agents(&self) -> &[A] {
        &self.agents
    }

    pub fn trace(&self) -> &Trace {
        &self.ctx.trace
    }

    /// Processes events until the queue drains or `max_ticks` is exceeded.
    /// On timeout the trace collected so far remains accessible.
    pub fn run_until_quiescent(&mut self, max_ticks: Tick) -> Result<(), SimError> {
        if !self.started {
            self.started = true;
            for i in 0..self.agents.len() {
                self.agents[i].on_start(&mut self.ctx);
            }
        }
        while let Some(Reverse(event)) = self.ctx.queue.pop() {
            if event.at > max_ticks {
                let pending = self.ctx.queue.len() + 1;
                return Err(SimError::NoQuiescence { max_ticks, pending });
            }
            self.ctx.now = event.at;
            let idx = event.target.0 as usize;
            match event.payload {
                EventPayload::Deliver { from, msg } => {
                    self.ctx.trace.0.push(TraceEvent::Deliver {
                        at: event.at,
                        kind: msg.kind_label(),
                        from,
                        to: event.target,
                        payload: msg.payload_text(),
                    });
                    self.agents[idx].on_message(&mut self.ctx, from, msg);
                }
                EventPayload::Timer { handle } => {
                    if self.ctx.canceled.remove(&handle) {
                        continue;
                    }
                    self.ctx.trace.0.push(TraceEvent::Timer {
                        at: event.at,
                        cell: event.target,
                    });
                    self.agents[idx].on_timer(&mut self.ctx, handle);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal ping/confirm pair for trace-shape checks.
    struct EchoAgent {
        id: CellId,
        disk: Disk,
        start_ping: bool,
        heard: Vec<CellId>,
    }

    impl EchoAgent {
        fn new(id: u32, x: f64, y: f64, r: f64, start_ping: bool) -> Self {
            Self {
                id: CellId(id),
                disk: Disk::new(Point2::new(x, y), r),
                start_ping,
                heard: Vec::new(),
            }
        }
    }

    impl Agent for EchoAgent {
        fn on_start(&mut self, ctx: &mut SimCtx) {
            if self.start_ping {
                ctx.broadcast_radio(self.id, Message::Ping { disk: self.disk });
            }
        }

        fn on_message(&mut self, ctx: &mut SimCtx, from: CellId, msg: Message) {
            match msg {
                Message::Ping { .. } => {
                    self.heard.push(from);
                    ctx.send_backhaul(self.id, from, Message::Confirm { disk: self.disk })
                        .unwrap();
                }
                Message::Confirm { .. } => self.heard.push(from),
                _ => {}
            }
        }

        fn on_timer(&mut self, _ctx: &mut SimCtx, _handle: TimerHandle) {}
    }

    fn two_cell_sim() -> Simulator<EchoAgent> {
        let mut sim = Simulator::new(SimConfig::default());
        let a = EchoAgent::new(0, 0.0, 0.0, 1.0, true);
        let b = EchoAgent::new(1, 1.5, 0.0, 1.0, false);
        sim.add_agent(a, Point2::new(0.0, 0.0), 1.0);
        sim.add_agent(b, Point2::new(1.5, 0.0), 1.0);
        sim
    }

    #[test]
    fn ping_confirm_trace_shape() {
        let mut sim = two_cell_sim();
        sim.run_until_quiescent(100).unwrap();
        let kinds: Vec<&str> = sim
            .trace()
            .0
            .iter()
            .map(|e| match e {
                TraceEvent::Deliver { kind, .. } => *kind,
                _ => "OTHER",
            })
            .collect();
        assert_eq!(kinds, ["PING", "CONFIRM"]);
    }

    #[test]
    fn no_agents_is_immediately_quiescent() {
        let mut sim: Simulator<EchoAgent> = Simulator::new(SimConfig::default());
        sim.run_until_quiescent(10).unwrap();
        assert!(sim.trace().0.is_empty());
    }

    #[test]
    fn identical_runs_produce_identical_traces() {
        let mut a = two_cell_sim();
        a.run_until_quiescent(100).unwrap();
        let mut b = two_cell_sim();
        b.run_until_quiescent(100).unwrap();
        assert_eq!(a.trace().to_text(), b.trace().to_text());
    }

    #[test]
    fn radio_range_uses_sender_radius_only() {
        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(EchoAgent::new(0, 0.0, 0.0, 1.0, true), Point2::new(0.0, 0.0), 1.0);
        sim.add_agent(EchoAgent::new(1, 1.5, 0.0, 1.0, false), Point2::new(1.5, 0.0), 1.0);
        sim.add_agent(EchoAgent::new(2, 2.5, 0.0, 1.0, false), Point2::new(2.5, 0.0), 1.0);
        sim.run_until_quiescent(100).unwrap();
        // 1.5 < 2 < 2.5: only the first receives the ping
        assert_eq!(sim.agents()[1].heard, vec![CellId(0)]);
        assert!(sim.agents()[2].heard.is_empty());
    }

    #[test]
    fn example_cell3_radio_reach() {
        // radius 0.45 gives range 0.9: the cell 0.8 away hears the ping,
        // the cell ~1.25 away does not
        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(EchoAgent::new(0, 1.4, 0.15, 0.45, true), Point2::new(1.4, 0.15), 0.45);
        sim.add_agent(EchoAgent::new(1, 2.2, 0.15, 0.5, false), Point2::new(2.2, 0.15), 0.5);
        sim.add_agent(
            EchoAgent::new(2, 2.15, 1.15, 0.65, false),
            Point2::new(2.15, 1.15),
            0.65,
        );
        sim.run_until_quiescent(100).unwrap();
        assert_eq!(sim.agents()[1].heard, vec![CellId(0)]);
        assert!(sim.agents()[2].heard.is_empty());
    }

    #[test]
    fn turned_off_sender_reaches_nobody() {
        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(EchoAgent::new(0, 0.0, 0.0, 0.0, true), Point2::new(0.0, 0.0), 0.0);
        sim.add_agent(EchoAgent::new(1, 0.1, 0.0, 1.0, false), Point2::new(0.1, 0.0), 1.0);
        sim.run_until_quiescent(100).unwrap();
        assert!(sim.agents()[1].heard.is_empty());
    }

    #[test]
    fn backhaul_is_fifo_per_pair_and_self_send_works() {
        struct Burst {
            id: CellId,
            got: Vec<f64>,
        }
        impl Agent for Burst {
            fn on_start(&mut self, ctx: &mut SimCtx) {
                if self.id == CellId(0) {
                    for i in 0..4 {
                        ctx.send_backhaul(
                            self.id,
                            CellId(1),
                            Message::RadiusUpdate { radius: i as f64 },
                        )
                        .unwrap();
                    }
                    ctx.send_backhaul(self.id, CellId(0), Message::Pause).unwrap();
                }
            }
            fn on_message(&mut self, _ctx: &mut SimCtx, _from: CellId, msg: Message) {
                if let Message::RadiusUpdate { radius } = msg {
                    self.got.push(radius);
                }
            }
            fn on_timer(&mut self, _ctx: &mut SimCtx, _handle: TimerHandle) {}
        }
        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(Burst { id: CellId(0), got: vec![] }, Point2::new(0.0, 0.0), 1.0);
        sim.add_agent(Burst { id: CellId(1), got: vec![] }, Point2::new(1.0, 0.0), 1.0);
        sim.run_until_quiescent(10).unwrap();
        assert_eq!(sim.agents()[1].got, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn unknown_destination_is_an_error() {
        let mut sim = two_cell_sim();
        sim.run_until_quiescent(100).unwrap();
        let err = sim.ctx.send_backhaul(CellId(0), CellId(9), Message::Pause);
        assert_eq!(err, Err(SimError::UnknownDest(CellId(9))));
    }

    #[test]
    fn timers_fire_in_schedule_order_and_cancel_works() {
        struct TimerAgent {
            id: CellId,
            fired: Vec<TimerHandle>,
            cancel_second: bool,
            handles: Vec<TimerHandle>,
        }
        impl Agent for TimerAgent {
            fn on_start(&mut self, ctx: &mut SimCtx) {
                let a = ctx.schedule_timer(self.id, 5).unwrap();
                let b = ctx.schedule_timer(self.id, 5).unwrap();
                self.handles = vec![a, b];
                if self.cancel_second {
                    ctx.cancel_timer(b);
                }
                assert_eq!(ctx.schedule_timer(self.id, 0), Err(SimError::ZeroDelay));
            }
            fn on_message(&mut self, _ctx: &mut SimCtx, _from: CellId, _msg: Message) {}
            fn on_timer(&mut self, _ctx: &mut SimCtx, handle: TimerHandle) {
                self.fired.push(handle);
            }
        }
        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(
            TimerAgent { id: CellId(0), fired: vec![], cancel_second: false, handles: vec![] },
            Point2::new(0.0, 0.0),
            1.0,
        );
        sim.run_until_quiescent(100).unwrap();
        assert_eq!(sim.agents()[0].fired, sim.agents()[0].handles);

        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(
            TimerAgent { id: CellId(0), fired: vec![], cancel_second: true, handles: vec![] },
            Point2::new(0.0, 0.0),
            1.0,
        );
        sim.run_until_quiescent(100).unwrap();
        let fired = &sim.agents()[0].fired;
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0], sim.agents()[0].handles[0]);
    }

    #[test]
    fn no_quiescence_reports_pending_events() {
        struct Rearm {
            id: CellId,
        }
        impl Agent for Rearm {
            fn on_start(&mut self, ctx: &mut SimCtx) {
                ctx.schedule_timer(self.id, 1).unwrap();
            }
            fn on_message(&mut self, _ctx: &mut SimCtx, _from: CellId, _msg: Message) {}
            fn on_timer(&mut self, ctx: &mut SimCtx, _handle: TimerHandle) {
                ctx.schedule_timer(self.id, 1).unwrap();
            }
        }
        let mut sim = Simulator::new(SimConfig::default());
        sim.add_agent(Rearm { id: CellId(0) }, Point2::new(0.0, 0.0), 1.0);
        let err = sim.run_until_quiescent(20);
        assert!(matches!(err, Err(SimError::NoQuiescence { .. })));
        assert!(!sim.trace().0.is_empty());
    }
}
