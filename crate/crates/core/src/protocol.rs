//! The per-cell protocol state machine: neighbor discovery over radio
//! with backhaul confirmation, right-hand-rule simplex exchange, cover
//! edge and boundary cycle detection, and the downhill radius reduction
//! with pause/continue mutual exclusion.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cech::{
    build_cech_centralized, local_simplices, right_hand_precedes, Cell, CellId, LocalView,
};
use crate::geometry::{disks_overlap, side_of_edge, Disk, Side, Tolerance};
use crate::homology::betti;
use crate::simnet::{Agent, Message, SimCtx, Tick, TimerHandle};

/// Which part of the pipeline a simulation run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Discovery and simplex exchange only.
    Build,
    /// Build, then cover-edge detection and boundary cycle propagation.
    Holes,
    /// Build, then cover-edge marking and downhill radius reduction.
    Optimize,
}

#[derive(Debug, Clone, Copy)]
pub struct ProtocolParams {
    pub mode: RunMode,
    pub t_ack: Tick,
    pub t_hole: Tick,
    pub t_max: Tick,
    pub dim_max: usize,
    pub tol: Tolerance,
    /// Delay between starting a reduction and committing it. Must exceed
    /// twice the backhaul latency so that the pause of any conflicting
    /// neighbor is seen before the commit point.
    pub commit_delay: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Discovery,
    SimplexExchange,
    HoleDetection,
    Optimizing,
    Done,
}

/// Terminal classification of a cell after an optimization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionStatus {
    /// Not an optimization run.
    NotApplicable,
    /// Exempted by scenario flag.
    Fenced,
    /// On a cover edge; never attempts a reduction.
    Boundary,
    /// Turned off after reaching the floor radius.
    Off,
    /// An ordinary reduction failed verification; stopped for good.
    Irreducible,
    /// A turn-off failed verification; parked at the floor radius.
    AtFloor,
    /// Still eligible for further reductions.
    Active,
}

/// An in-flight reduction between its pause round and its commit point.
#[derive(Debug, Clone)]
struct Attempt {
    paused: Vec<CellId>,
    lost: bool,
}

pub struct CellAgent {
    cell: Cell,
    r_initial: f64,
    delta_r: f64,
    r_min: f64,
    fenced: bool,
    params: ProtocolParams,
    rng: ChaCha8Rng,
    phase: Phase,
    neighbors: BTreeMap<CellId, Disk>,
    view: LocalView,
    awaiting_shares: BTreeSet<CellId>,
    cover_partners: BTreeSet<CellId>,
    boundary: bool,
    cycles: Vec<Vec<CellId>>,
    hole_deadline: Tick,
    buffered_detects: Vec<(CellId, Vec<CellId>)>,
    paused_by: BTreeSet<CellId>,
    pending_attempt: bool,
    attempt: Option<Attempt>,
    irreducible: bool,
    off: bool,
    awaiting_change: bool,
    discovery_timer: Option<TimerHandle>,
    attempt_timer: Option<TimerHandle>,
    commit_timer: Option<TimerHandle>,
}

impl CellAgent {
    /// `delta_r` and `r_min` default to 1/20 and 1/4 of the initial radius.
    pub fn new(
        cell: Cell,
        fenced: bool,
        delta_r: Option<f64>,
        r_min: Option<f64>,
        params: ProtocolParams,
        rng: ChaCha8Rng,
    ) -> Self {
        let r = cell.disk.radius;
        Self {
            cell,
            r_initial: r,
            delta_r: delta_r.unwrap_or(r / 20.0),
            r_min: r_min.unwrap_or(r / 4.0),
            fenced,
            params,
            rng,
            phase: Phase::Discovery,
            neighbors: BTreeMap::new(),
            view: LocalView::single(&cell),
            awaiting_shares: BTreeSet::new(),
            cover_partners: BTreeSet::new(),
            boundary: false,
            cycles: Vec::new(),
            hole_deadline: 0,
            buffered_detects: Vec::new(),
            paused_by: BTreeSet::new(),
            pending_attempt: false,
            attempt: None,
            irreducible: false,
            off: false,
            awaiting_change: false,
            discovery_timer: None,
            attempt_timer: None,
            commit_timer: None,
        }
    }

    pub fn id(&self) -> CellId {
        self.cell.id
    }

    pub fn radius(&self) -> f64 {
        self.cell.disk.radius
    }

    pub fn initial_radius(&self) -> f64 {
        self.r_initial
    }

    pub fn is_off(&self) -> bool {
        self.off
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn view(&self) -> &LocalView {
        &self.view
    }

    pub fn cycles(&self) -> &[Vec<CellId>] {
        &self.cycles
    }

    pub fn cover_partners(&self) -> &BTreeSet<CellId> {
        &self.cover_partners
    }

    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    pub fn status(&self) -> ReductionStatus {
        if self.params.mode != RunMode::Optimize {
            ReductionStatus::NotApplicable
        } else if self.fenced {
            ReductionStatus::Fenced
        } else if self.boundary {
            ReductionStatus::Boundary
        } else if self.off {
            ReductionStatus::Off
        } else if self.irreducible {
            ReductionStatus::Irreducible
        } else if self.awaiting_change {
            ReductionStatus::AtFloor
        } else {
            ReductionStatus::Active
        }
    }

    fn current_cell(&self) -> Cell {
        self.cell
    }

    fn right_neighbors(&self) -> Vec<Cell> {
        self.neighbors
            .iter()
            .map(|(id, disk)| Cell { id: *id, disk: *disk })
            .filter(|n| right_hand_precedes(&self.cell, n))
            .collect()
    }

    fn left_neighbor_ids(&self) -> BTreeSet<CellId> {
        self.neighbors
            .iter()
            .map(|(id, disk)| Cell { id: *id, disk: *disk })
            .filter(|n| !right_hand_precedes(&self.cell, n))
            .map(|n| n.id)
            .collect()
    }

    fn discovery_timeout(&mut self, ctx: &mut SimCtx) {
        self.phase = Phase::SimplexExchange;
        ctx.note(self.cell.id, "PHASE", "discovery->exchange".to_string());
        let rights = self.right_neighbors();
        self.view = local_simplices(&self.current_cell(), &rights, self.params.dim_max, self.params.tol);
        for (id, disk) in &self.neighbors {
            self.view.disks.insert(*id, *disk);
        }
        let fragment = LocalView {
            owner: self.cell.id,
            complex: self.view.complex.clone(),
            disks: self.view.disks.clone(),
        };
        for n in &rights {
            ctx.send_backhaul(
                self.cell.id,
                n.id,
                Message::SimplexShare {
                    view: fragment.clone(),
                },
            )
            .expect("registered neighbor");
        }
        self.awaiting_shares = self.left_neighbor_ids();
        if self.awaiting_shares.is_empty() {
            self.exchange_complete(ctx);
        }
    }

    fn exchange_complete(&mut self, ctx: &mut SimCtx) {
        match self.params.mode {
            RunMode::Build => {
                self.phase = Phase::Done;
                ctx.note(self.cell.id, "PHASE", "exchange->done".to_string());
            }
            RunMode::Holes => {
                self.phase = Phase::HoleDetection;
                ctx.note(self.cell.id, "PHASE", "exchange->holes".to_string());
                self.cover_partners = detect_cover_edges(self.cell.id, &self.view, self.params.tol);
                self.boundary = !self.cover_partners.is_empty();
                self.hole_deadline = ctx.now() + self.params.t_hole;
                let partners: Vec<CellId> = self.cover_partners.iter().copied().collect();
                for p in &partners {
                    ctx.send_backhaul(
                        self.cell.id,
                        *p,
                        Message::BoundaryDetect {
                            path: vec![self.cell.id],
                        },
                    )
                    .expect("registered neighbor");
                }
                let buffered = std::mem::take(&mut self.buffered_detects);
                for (from, path) in buffered {
                    self.handle_detect(ctx, from, path);
                }
            }
            RunMode::Optimize => {
                self.cover_partners = detect_cover_edges(self.cell.id, &self.view, self.params.tol);
                self.boundary = !self.cover_partners.is_empty();
                if self.fenced || self.boundary {
                    self.phase = Phase::Done;
                    let why = if self.fenced { "fenced" } else { "boundary" };
                    ctx.note(self.cell.id, "PHASE", format!("exchange->done:{why}"));
                } else {
                    self.phase = Phase::Optimizing;
                    ctx.note(self.cell.id, "PHASE", "exchange->optimizing".to_string());
                    self.arm_timer(ctx);
                }
            }
        }
    }

    fn handle_detect(&mut self, ctx: &mut SimCtx, from: CellId, mut path: Vec<CellId>) {
        if ctx.now() > self.hole_deadline {
            ctx.note(self.cell.id, "WARN", "late boundary message dropped".to_string());
            return;
        }
        let mut seen = BTreeSet::new();
        if !path.iter().all(|v| seen.insert(*v)) {
            ctx.note(self.cell.id, "WARN", "malformed boundary path dropped".to_string());
            return;
        }
        if let Some(pos) = path.iter().position(|v| *v == self.cell.id) {
            let cycle: Vec<CellId> = path[pos..].to_vec();
            if cycle.len() < 3 {
                ctx.note(self.cell.id, "WARN", "degenerate boundary cycle dropped".to_string());
                return;
            }
            let ids: Vec<String> = cycle.iter().map(|c| c.0.to_string()).collect();
            ctx.note(self.cell.id, "CYCLE", format!("path={}", ids.join(",")));
            self.cycles.push(cycle);
        } else {
            path.push(self.cell.id);
            let partners: Vec<CellId> = self
                .cover_partners
                .iter()
                .copied()
                .filter(|p| *p != from)
                .collect();
            for p in partners {
                ctx.send_backhaul(self.cell.id, p, Message::BoundaryDetect { path: path.clone() })
                    .expect("registered neighbor");
            }
        }
    }

    fn arm_timer(&mut self, ctx: &mut SimCtx) {
        let delay = self.rng.random_range(1..=self.params.t_max);
        self.attempt_timer = Some(ctx.schedule_timer(self.cell.id, delay).expect("positive delay"));
    }

    fn can_attempt(&self) -> bool {
        self.phase == Phase::Optimizing && !self.irreducible && !self.off
    }

    fn start_attempt(&mut self, ctx: &mut SimCtx) {
        let paused: Vec<CellId> = self.neighbors.keys().copied().collect();
        for p in &paused {
            ctx.send_backhaul(self.cell.id, *p, Message::Pause)
                .expect("registered neighbor");
        }
        self.attempt = Some(Attempt { paused, lost: false });
        self.commit_timer = Some(
            ctx.schedule_timer(self.cell.id, self.params.commit_delay)
                .expect("positive delay"),
        );
    }

    fn finish_attempt(&mut self, ctx: &mut SimCtx) {
        let attempt = self.attempt.take().expect("attempt in flight");
        if attempt.lost {
            ctx.note(self.cell.id, "CANCEL", "lost arbitration".to_string());
            for p in &attempt.paused {
                ctx.send_backhaul(self.cell.id, *p, Message::Continue)
                    .expect("registered neighbor");
            }
            self.arm_timer(ctx);
            return;
        }
        let r_old = self.cell.disk.radius;
        let shrunk = r_old - self.delta_r;
        let turn_off = shrunk < self.r_min;
        let r_target = if turn_off { 0.0 } else { shrunk };
        if self.quick_verify(r_target) {
            self.cell.disk.radius = r_target;
            if turn_off {
                ctx.note(self.cell.id, "COMMIT", "off".to_string());
                for p in &attempt.paused {
                    ctx.send_backhaul(self.cell.id, *p, Message::TurnOff)
                        .expect("registered neighbor");
                }
                for p in &attempt.paused {
                    ctx.send_backhaul(self.cell.id, *p, Message::Continue)
                        .expect("registered neighbor");
                }
                self.off = true;
                self.phase = Phase::Done;
                ctx.note(self.cell.id, "PHASE", "optimizing->done:off".to_string());
            } else {
                ctx.note(self.cell.id, "COMMIT", format!("r={r_target}"));
                for p in &attempt.paused {
                    ctx.send_backhaul(
                        self.cell.id,
                        *p,
                        Message::RadiusUpdate { radius: r_target },
                    )
                    .expect("registered neighbor");
                }
                for p in &attempt.paused {
                    ctx.send_backhaul(self.cell.id, *p, Message::Continue)
                        .expect("registered neighbor");
                }
                // shrinking can only end overlaps, never create them
                let me = self.cell;
                let tol = self.params.tol;
                self.neighbors.retain(|_, disk| disks_overlap(&me.disk, disk, tol));
                self.arm_timer(ctx);
            }
        } else {
            for p in &attempt.paused {
                ctx.send_backhaul(self.cell.id, *p, Message::Continue)
                    .expect("registered neighbor");
            }
            if turn_off {
                ctx.note(self.cell.id, "REVERT", format!("off-denied r={r_old}"));
                // retry once the neighborhood changes; re-arming without a
                // change would re-run the identical failing verification
                self.awaiting_change = true;
            } else {
                ctx.note(self.cell.id, "REVERT", format!("r={r_old} irreducible"));
                self.irreducible = true;
                self.phase = Phase::Done;
                ctx.note(self.cell.id, "PHASE", "optimizing->done:irreducible".to_string());
            }
        }
    }

    /// Local verification of one radius change: the Betti numbers of the
    /// complex on this cell and its neighbors must be unchanged. A target
    /// radius of zero removes the cell from the local complex.
    fn quick_verify(&self, r_target: f64) -> bool {
        let mut before: Vec<Cell> = vec![self.current_cell()];
        let mut after: Vec<Cell> = Vec::new();
        if r_target > 0.0 {
            after.push(Cell {
                id: self.cell.id,
                disk: Disk::new(self.cell.disk.center, r_target),
            });
        }
        for (id, disk) in &self.neighbors {
            before.push(Cell { id: *id, disk: *disk });
            after.push(Cell { id: *id, disk: *disk });
        }
        let betti01 = |cells: &[Cell]| {
            let x = build_cech_centralized(cells, self.params.dim_max, self.params.tol);
            (
                betti(&x, 0).expect("closed by construction"),
                betti(&x, 1).expect("closed by construction"),
            )
        };
        betti01(&before) == betti01(&after)
    }

    fn neighbor_changed(&mut self, ctx: &mut SimCtx) {
        if self.awaiting_change && self.can_attempt() {
            self.awaiting_change = false;
            self.arm_timer(ctx);
        }
    }

    fn maybe_resume(&mut self, ctx: &mut SimCtx) {
        if self.paused_by.is_empty() && self.pending_attempt && self.attempt.is_none() {
            self.pending_attempt = false;
            if self.can_attempt() {
                self.start_attempt(ctx);
            }
        }
    }
}

impl Agent for CellAgent {
    fn on_start(&mut self, ctx: &mut SimCtx) {
        ctx.broadcast_radio(self.cell.id, Message::Ping { disk: self.cell.disk });
        self.discovery_timer = Some(
            ctx.schedule_timer(self.cell.id, self.params.t_ack)
                .expect("positive t_ack"),
        );
    }

    fn on_message(&mut self, ctx: &mut SimCtx, from: CellId, msg: Message) {
        match msg {
            Message::Ping { disk } => {
                if self.phase == Phase::Discovery
                    && disks_overlap(&self.cell.disk, &disk, self.params.tol)
                {
                    self.neighbors.insert(from, disk);
                    ctx.send_backhaul(self.cell.id, from, Message::Confirm { disk: self.cell.disk })
                        .expect("sender exists");
                }
            }
            Message::Confirm { disk } => {
                if self.phase == Phase::Discovery {
                    self.neighbors.insert(from, disk);
                }
            }
            Message::SimplexShare { view } => {
                self.view.absorb(&view);
                self.awaiting_shares.remove(&from);
                if self.phase == Phase::SimplexExchange && self.awaiting_shares.is_empty() {
                    self.exchange_complete(ctx);
                }
            }
            Message::BoundaryDetect { path } => match self.phase {
                Phase::Discovery | Phase::SimplexExchange => {
                    self.buffered_detects.push((from, path));
                }
                Phase::HoleDetection => self.handle_detect(ctx, from, path),
                _ => {}
            },
            Message::Pause => {
                self.paused_by.insert(from);
                if let Some(attempt) = &mut self.attempt {
                    if from < self.cell.id {
                        attempt.lost = true;
                    }
                }
            }
            Message::Continue => {
                self.paused_by.remove(&from);
                self.maybe_resume(ctx);
            }
            Message::RadiusUpdate { radius } => {
                if let Some(disk) = self.neighbors.get_mut(&from) {
                    disk.radius = radius;
                    let still = disks_overlap(&self.cell.disk, disk, self.params.tol);
                    if !still {
                        self.neighbors.remove(&from);
                    }
                }
                self.neighbor_changed(ctx);
            }
            Message::TurnOff => {
                self.neighbors.remove(&from);
                self.neighbor_changed(ctx);
            }
        }
    }

    fn on_timer(&mut self, ctx: &mut SimCtx, handle: TimerHandle) {
        if Some(handle) == self.discovery_timer {
            self.discovery_timer = None;
            self.discovery_timeout(ctx);
        } else if Some(handle) == self.attempt_timer {
            self.attempt_timer = None;
            if !self.can_attempt() || self.attempt.is_some() {
                return;
            }
            if self.paused_by.is_empty() {
                self.start_attempt(ctx);
            } else {
                self.pending_attempt = true;
            }
        } else if Some(handle) == self.commit_timer {
            self.commit_timer = None;
            self.finish_attempt(ctx);
        }
    }
}

/// Cover-edge detection on a completed view: an edge at `owner` is a cover
/// edge when the third vertices of its triangles never fall on both sides
/// of the edge's supporting line. Returns the partner cell of each cover
/// edge at `owner`.
pub fn detect_cover_edges(owner: CellId, view: &LocalView, tol: Tolerance) -> BTreeSet<CellId> {
    let mut partners = BTreeSet::new();
    let own_pos = view.disks[&owner].center;
    for edge in view.complex.simplices(1) {
        if !edge.contains(owner.0) {
            continue;
        }
        let partner = CellId(
            *edge
                .vertices()
                .iter()
                .find(|v| **v != owner.0)
                .expect("edge has two vertices"),
        );
        let partner_pos = view.disks[&partner].center;
        let mut saw_left = false;
        let mut saw_right = false;
        for tri in view.complex.simplices(2) {
            if !(tri.contains(owner.0) && tri.contains(partner.0)) {
                continue;
            }
            let third = CellId(
                *tri.vertices()
                    .iter()
                    .find(|v| **v != owner.0 && **v != partner.0)
                    .expect("triangle has a third vertex"),
            );
            let third_pos = view.disks[&third].center;
            match side_of_edge(&third_pos, &own_pos, &partner_pos, tol)
                .expect("distinct cell centers")
            {
                Side::Left => saw_left = true,
                Side::Right => saw_right = true,
                Side::Colinear => {}
            }
        }
        if !(saw_left && saw_right) {
            partners.insert(partner);
        }
    }
    partners
}

/// Canonical form of a closed vertex cycle: rotated so the smallest id is
/// first, oriented toward the lexicographically smaller continuation.
pub fn canonical_cycle(path: &[CellId]) -> Vec<CellId> {
    assert!(path.len() >= 3, "cycle needs at least three vertices");
    let min_pos = path
        .iter()
        .enumerate()
        .min_by_key(|(_, v)| **v)
        .map(|(i, _)| i)
        .expect("non-empty path");
    let n = path.len();
    let forward: Vec<CellId> = (0..n).map(|i| path[(min_pos + i) % n]).collect();
    let backward: Vec<CellId> = (0..n).map(|i| path[(min_pos + n - i) % n]).collect();
    if forward[1..] <= backward[1..] {
        forward
    } else {
        backward
    }
}
