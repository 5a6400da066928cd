//! The discrete simulator.
//!
//! Piggyback mode fires the environment's procedures in an endless loop and
//! moves fragments only on genuine messages: a fragment may ride message `i`
//! of an instance only if it arrived at the sender before `i` fired. Induced
//! mode sends attacker-created messages along one selected path without
//! waiting for procedures. Transient channels deliver at procedure
//! granularity: a chunk embedded into a carrier must be pending when the
//! owning procedure starts and reaches the far end when it completes.
//!
//! Under path flooding each node prefers moving a fragment that has not been
//! transmitted anywhere yet, then fills remaining opportunities with
//! redundant copies for neighbors that still lack them, never echoing a
//! fragment back to the node it arrived from. Round robin and weighted
//! round robin instead pin each fragment to one origin-selected path.
//!
//! Everything is keyed on ordered maps and a single seeded generator, so two
//! runs with the same config produce identical results including traces.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::fivegpp::{
    self, cipher_transform, CipherKind, FivegppError, Fragment, GppHeader, KeystreamCipher,
    MIN_USABLE_CAPACITY,
};
use crate::model::{Attack, AttackType, Direction, Environment, Mode, NodeId, RoutingOption};
use crate::netgraph::{self, FeasibilityReport, PuppeteerGraph};
use crate::routing::{ReceiveContext, ReceiveOutcome, RoutingError, RoutingState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Protocol(#[from] FivegppError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("no key stored for target {0:#x}")]
    TargetUnknown(u64),
}

/// Full description of one deterministic run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub env: Environment,
    pub attack: Attack,
    pub mode: Mode,
    pub routing: RoutingOption,
    /// Per-path weights for weighted round robin; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub capacity_override: Option<u32>,
    pub max_procedures: u32,
    pub seed: u64,
    pub key_id: u8,
    pub attack_id: u8,
    pub ttl: u8,
    /// Whether a backward payload may ride messages of the same procedure
    /// instance in which the attack executed.
    pub backward_same_procedure: bool,
}

impl SimConfig {
    pub fn new(env: Environment, attack: Attack) -> Self {
        SimConfig {
            env,
            attack,
            mode: Mode::Pb3c,
            routing: RoutingOption::PathFlooding,
            weights: None,
            capacity_override: None,
            max_procedures: 1000,
            seed: 0,
            key_id: 1,
            attack_id: 1,
            ttl: 8,
            backward_same_procedure: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IncompleteReason {
    Infeasible,
    Timeout { max_procedures: u32 },
}

/// The recorded side effect of a completed execution. Attack effects (key
/// lookup, localization, warning broadcast) are simulated records, not real
/// operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectRecord {
    pub attack_type: AttackType,
    pub node: NodeId,
    pub procedure_instance: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceOutcome {
    Forwarded,
    Consumed,
    DroppedDuplicate,
    DroppedTtl,
}

/// One covert transmission: a fragment riding one message (or transient
/// carrier), with the receiver's verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub procedure_instance: u32,
    pub procedure: String,
    pub message_index: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub direction: Direction,
    pub fragment_index: u32,
    pub payload_bits: u32,
    pub outcome: TraceOutcome,
    pub transient: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub completed: bool,
    pub reason: Option<IncompleteReason>,
    /// Procedure instances elapsed up to and including completion.
    pub procedures_used: u32,
    /// Genuine messages (or induced messages / carrier rides) that carried
    /// covert payload.
    pub messages_carrying_payload: u32,
    pub attack_executed_at: Option<u32>,
    pub effect: Option<EffectRecord>,
    pub feasibility: FeasibilityReport,
    pub forward_path_trace: Vec<TraceEntry>,
    pub backward_path_trace: Vec<TraceEntry>,
}

impl SimResult {
    fn incomplete(
        reason: IncompleteReason,
        procedures_used: u32,
        feasibility: FeasibilityReport,
    ) -> Self {
        SimResult {
            completed: false,
            reason: Some(reason),
            procedures_used,
            messages_carrying_payload: 0,
            attack_executed_at: None,
            effect: None,
            feasibility,
            forward_path_trace: Vec::new(),
            backward_path_trace: Vec::new(),
        }
    }
}

/// Time within a run: (procedure instance, message index). Origin payloads
/// use instance 0 so they are available from the first message onward;
/// `usize::MAX` as message index means "available from the next instance".
type Arrival = (u32, usize);

/// Flattened firing plan: per procedure, its name and (source, target,
/// capacity) triples in message order.
type Schedule = Vec<(String, Vec<(NodeId, NodeId, u32)>)>;

#[derive(Clone, Debug)]
struct PendingFragment {
    frag: Fragment,
    direction: Direction,
    arrival: Arrival,
    from: Option<NodeId>,
    sent_to: BTreeSet<NodeId>,
    /// Origin-assigned route under round robin / weighted round robin.
    path: Option<Vec<NodeId>>,
}

/// Payload moving over transient carriers, delivered one chunk per owning
/// procedure instance and channel.
#[derive(Clone, Debug)]
struct TransientStream {
    remaining: Bits,
    delivered_bits: usize,
    created_instance: u32,
    next_chunk_index: u32,
}

fn derive_header(config: &SimConfig) -> Result<GppHeader, EngineError> {
    let execution_point = fivegpp::execution_point_code(config.attack.execution).ok_or(
        FivegppError::FieldOutOfRange {
            field: "execution_point",
            value: 0,
        },
    )?;
    let exit_point = match config.attack.exit {
        Some(node) => fivegpp::exit_point_code(node).ok_or(FivegppError::FieldOutOfRange {
            field: "exit_point",
            value: 0,
        })?,
        // Unused when nothing travels back; lowest code by convention.
        None => 1,
    };
    let header = GppHeader {
        key_id: config.key_id,
        routing_option: config.routing,
        ttl: config.ttl,
        split: false,
        execution_point,
        attack_id: config.attack_id,
        attack_type: config.attack.attack_type.code(),
        exit_point,
    };
    header.validate()?;
    Ok(header)
}

struct Pb3cSim<'a> {
    config: &'a SimConfig,
    env: Environment,
    direct: PuppeteerGraph,
    header: GppHeader,
    routing: RoutingState,
    rng: ChaCha8Rng,
    payloads: BTreeMap<Direction, Bits>,
    pending: BTreeMap<NodeId, Vec<PendingFragment>>,
    store: BTreeMap<Direction, BTreeMap<u32, Bits>>,
    piggyback_totals: BTreeMap<Direction, u32>,
    transient: BTreeMap<Direction, TransientStream>,
    complete: BTreeMap<Direction, bool>,
    executed: Option<u32>,
    effect: Option<EffectRecord>,
    finished: bool,
    messages: u32,
    traces: Vec<TraceEntry>,
}

impl<'a> Pb3cSim<'a> {
    fn origin(&self, direction: Direction) -> NodeId {
        match direction {
            Direction::Forward => self.config.attack.entry,
            Direction::Backward => self.config.attack.execution,
        }
    }

    fn terminal(&self, direction: Direction) -> NodeId {
        match direction {
            Direction::Forward => self.config.attack.execution,
            Direction::Backward => self.config.attack.exit.expect("backward requires an exit"),
        }
    }

    /// Transient channels bridging this direction end to end.
    fn bridge_indices(&self, direction: Direction) -> Vec<usize> {
        let origin = self.origin(direction);
        let terminal = self.terminal(direction);
        self.env
            .transient_channels
            .iter()
            .enumerate()
            .filter(|(_, ch)| {
                ch.direction == direction
                    && ch.first == origin
                    && ch.last == terminal
                    && self.env.compromised.contains(&ch.first)
                    && self.env.compromised.contains(&ch.last)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Makes a direction's payload available at its origin: fragments for
    /// the piggyback network when a direct route exists, a chunk stream for
    /// end-to-end transient bridges when they exist.
    fn enqueue_transfer(
        &mut self,
        direction: Direction,
        arrival: Arrival,
    ) -> Result<(), EngineError> {
        let origin = self.origin(direction);
        let terminal = self.terminal(direction);
        let payload = self
            .payloads
            .get(&direction)
            .expect("payload prepared")
            .clone();

        if payload.is_empty() {
            self.complete.insert(direction, true);
            return Ok(());
        }

        let has_bridge = !self.bridge_indices(direction).is_empty();
        let piggyback_route = !self.direct.edges.is_empty()
            && netgraph::feasible_between(&self.direct, origin, terminal);

        if piggyback_route {
            let capacity = self
                .direct
                .min_direct_capacity()
                .expect("direct edges exist");
            let frags = fivegpp::fragment_payload(&payload, capacity, &self.header)?;
            self.piggyback_totals.insert(direction, frags.len() as u32);
            let candidates = match self.config.routing {
                RoutingOption::PathFlooding => Vec::new(),
                _ => {
                    let max_hops = (self.config.ttl as usize)
                        .min(self.direct.nodes.len().saturating_sub(1))
                        .max(1);
                    netgraph::enumerate_paths(&self.direct, origin, terminal, max_hops)
                }
            };
            for frag in frags {
                let path = match self.config.routing {
                    RoutingOption::PathFlooding => None,
                    _ => {
                        let selected = self.routing.select_paths(
                            origin,
                            self.config.attack_id,
                            &candidates,
                            &mut self.rng,
                        )?;
                        Some(selected[0].clone())
                    }
                };
                self.routing.mark_seen(
                    origin,
                    self.config.attack_id,
                    direction,
                    frag.fragment_index,
                );
                self.pending
                    .entry(origin)
                    .or_default()
                    .push(PendingFragment {
                        frag,
                        direction,
                        arrival,
                        from: None,
                        sent_to: BTreeSet::new(),
                        path,
                    });
            }
        }

        if has_bridge {
            self.transient.insert(
                direction,
                TransientStream {
                    remaining: payload,
                    delivered_bits: 0,
                    created_instance: arrival.0,
                    next_chunk_index: 0,
                },
            );
        }

        // When neither route exists, feasibility held only through a mixed
        // direct-plus-transient path this transport model does not serve;
        // the run then times out honestly instead of faking delivery.
        Ok(())
    }

    fn direction_payload_len(&self, direction: Direction) -> usize {
        self.payloads.get(&direction).map(Bits::len).unwrap_or(0)
    }

    /// Called whenever a direction finished delivering. `instance` is the
    /// current procedure instance; `backward_arrival` states from when the
    /// backward payload (if any) becomes available.
    fn direction_complete(
        &mut self,
        direction: Direction,
        instance: u32,
        backward_arrival: Arrival,
    ) -> Result<(), EngineError> {
        self.complete.insert(direction, true);
        match direction {
            Direction::Forward => self.execute(instance, backward_arrival),
            Direction::Backward => {
                self.finished = true;
                Ok(())
            }
        }
    }

    fn execute(&mut self, instance: u32, backward_arrival: Arrival) -> Result<(), EngineError> {
        if self.executed.is_some() {
            return Ok(());
        }
        self.executed = Some(instance);
        self.effect = Some(EffectRecord {
            attack_type: self.config.attack.attack_type,
            node: self.config.attack.execution,
            procedure_instance: instance,
        });
        if self.config.attack.backward_bits == 0
            || self.config.attack.exit == Some(self.config.attack.execution)
        {
            // Nothing travels back, or the result surfaces right where it
            // was produced.
            self.complete.insert(Direction::Backward, true);
            self.finished = true;
            return Ok(());
        }
        self.enqueue_transfer(Direction::Backward, backward_arrival)
    }

    fn instance_begin(&mut self, instance: u32) -> Result<(), EngineError> {
        if *self.complete.get(&Direction::Forward).unwrap_or(&false) && self.executed.is_none() {
            // Degenerate transfers (entry equals execution, or an empty
            // forward payload) execute as soon as the first instance starts.
            self.execute(instance, (instance.saturating_sub(1), usize::MAX))?;
        }
        Ok(())
    }

    fn record(&mut self, entry: TraceEntry) {
        self.traces.push(entry);
    }

    /// Embeds pending fragments into one genuine message firing from `src`
    /// to `dst`, then lets the receiver act on each.
    fn process_message(
        &mut self,
        instance: u32,
        proc_name: &str,
        msg_index: usize,
        src: NodeId,
        dst: NodeId,
        capacity: u32,
    ) -> Result<(), EngineError> {
        if !self.env.compromised.contains(&src) || !self.env.compromised.contains(&dst) {
            return Ok(());
        }
        if capacity < MIN_USABLE_CAPACITY {
            return Ok(());
        }

        let mut budget = capacity;
        let mut chosen: Vec<usize> = Vec::new();
        let flood = self.config.routing == RoutingOption::PathFlooding;
        // Pass 0 moves fragments that never left this node, oldest first;
        // under flooding, pass 1 spends leftover space on redundant copies,
        // newest first, so stale copies cannot starve live traffic on a
        // bottleneck edge.
        let passes: &[bool] = if flood { &[true, false] } else { &[true] };
        if let Some(pending) = self.pending.get(&src) {
            for &fresh_only in passes {
                let order: Vec<usize> = if fresh_only {
                    (0..pending.len()).collect()
                } else {
                    (0..pending.len()).rev().collect()
                };
                for i in order {
                    let pf = &pending[i];
                    if chosen.contains(&i) {
                        continue;
                    }
                    if pf.arrival >= (instance, msg_index) {
                        continue;
                    }
                    if pf.from == Some(dst) || pf.sent_to.contains(&dst) {
                        continue;
                    }
                    if flood {
                        if fresh_only != pf.sent_to.is_empty() {
                            continue;
                        }
                    } else {
                        // Path routing: one transmission per node, along the
                        // assigned route only.
                        if !pf.sent_to.is_empty() {
                            continue;
                        }
                        let path = pf.path.as_ref().expect("path assigned under rr/eerr");
                        let next = path
                            .iter()
                            .position(|&n| n == src)
                            .and_then(|pos| path.get(pos + 1));
                        if next != Some(&dst) {
                            continue;
                        }
                    }
                    if pf.frag.wire_len() > budget {
                        continue;
                    }
                    budget -= pf.frag.wire_len();
                    chosen.push(i);
                }
            }
        }

        if chosen.is_empty() {
            return Ok(());
        }
        self.messages += 1;

        for i in chosen {
            let (frag, direction, path) = {
                let pf = &mut self.pending.get_mut(&src).unwrap()[i];
                pf.sent_to.insert(dst);
                (pf.frag.clone(), pf.direction, pf.path.clone())
            };
            let terminal = self.terminal(direction);
            let ctx = ReceiveContext {
                direction,
                terminal,
                node_has_key: true,
            };
            let outcome = self.routing.on_receive(dst, &frag, &ctx);
            let trace_outcome = match outcome {
                ReceiveOutcome::Consume => TraceOutcome::Consumed,
                ReceiveOutcome::Forward { .. } => TraceOutcome::Forwarded,
                ReceiveOutcome::Drop(crate::routing::DropReason::Duplicate) => {
                    TraceOutcome::DroppedDuplicate
                }
                ReceiveOutcome::Drop(crate::routing::DropReason::TtlExpired) => {
                    TraceOutcome::DroppedTtl
                }
            };
            self.record(TraceEntry {
                procedure_instance: instance,
                procedure: proc_name.to_string(),
                message_index: msg_index,
                src,
                dst,
                direction,
                fragment_index: frag.fragment_index,
                payload_bits: frag.payload_bits.len() as u32,
                outcome: trace_outcome,
                transient: false,
            });
            match outcome {
                ReceiveOutcome::Consume => {
                    let slot = self.store.entry(direction).or_default();
                    slot.insert(frag.fragment_index, frag.payload_bits.clone());
                    let total = *self.piggyback_totals.get(&direction).unwrap_or(&u32::MAX);
                    if slot.len() as u32 == total {
                        let backward_arrival = if self.config.backward_same_procedure {
                            (instance, msg_index)
                        } else {
                            (instance, usize::MAX)
                        };
                        self.direction_complete(direction, instance, backward_arrival)?;
                        if self.finished {
                            return Ok(());
                        }
                    }
                }
                ReceiveOutcome::Forward { ttl } => {
                    let mut forwarded = frag;
                    forwarded.header.ttl = ttl;
                    self.pending.entry(dst).or_default().push(PendingFragment {
                        frag: forwarded,
                        direction,
                        arrival: (instance, msg_index),
                        from: Some(src),
                        sent_to: BTreeSet::new(),
                        path,
                    });
                }
                ReceiveOutcome::Drop(_) => {}
            }
        }
        Ok(())
    }

    /// Delivers one chunk per transient channel of this procedure instance.
    /// The embedded payload must have been pending when the instance started
    /// and becomes available at the far end as the instance completes.
    fn process_transients(&mut self, instance: u32, proc_name: &str) -> Result<(), EngineError> {
        for ci in 0..self.env.transient_channels.len() {
            let ch = self.env.transient_channels[ci].clone();
            if ch.procedure != proc_name {
                continue;
            }
            let direction = ch.direction;
            if !self.bridge_indices(direction).contains(&ci) {
                continue;
            }
            let Some(stream) = self.transient.get_mut(&direction) else {
                continue;
            };
            if stream.created_instance >= instance || stream.remaining.is_empty() {
                continue;
            }
            let take = (ch.capacity as usize).min(stream.remaining.len());
            let mut chunks = stream.remaining.chunks(take);
            let chunk = chunks.remove(0);
            stream.remaining = chunks
                .into_iter()
                .fold(Bits::new(), |acc, c| acc.concat(&c));
            stream.delivered_bits += chunk.len();
            let chunk_index = stream.next_chunk_index;
            stream.next_chunk_index += 1;
            let done = stream.delivered_bits == self.direction_payload_len(direction);
            self.messages += 1;
            self.record(TraceEntry {
                procedure_instance: instance,
                procedure: proc_name.to_string(),
                message_index: ch.anchor_message_index,
                src: ch.first,
                dst: ch.last,
                direction,
                fragment_index: chunk_index,
                payload_bits: chunk.len() as u32,
                outcome: TraceOutcome::Consumed,
                transient: true,
            });
            if done {
                self.direction_complete(direction, instance, (instance, usize::MAX))?;
                if self.finished {
                    return Ok(());
                }
            }
        }
        Ok(())
    }
}

/// Runs one simulation to completion, timeout or infeasibility.
pub fn run(config: &SimConfig) -> Result<SimResult, EngineError> {
    if config.max_procedures == 0 {
        return Err(EngineError::InvalidConfig(
            "max_procedures must be at least 1".to_string(),
        ));
    }
    if !(1..=8).contains(&config.ttl) {
        return Err(EngineError::InvalidConfig(format!(
            "ttl {} outside 1..=8",
            config.ttl
        )));
    }
    if let Some(bits) = config.capacity_override {
        if bits < MIN_USABLE_CAPACITY {
            return Err(EngineError::Protocol(FivegppError::CapacityTooSmall(bits)));
        }
    }

    let env = {
        let controlled = config.env.with_attack_endpoints(&config.attack);
        match config.capacity_override {
            Some(bits) => controlled.with_capacity_override(bits),
            None => controlled,
        }
    };
    let threshold = netgraph::default_threshold(config.mode);
    let graph = netgraph::build_puppeteer_graph(&env, config.mode, threshold);
    let feasibility = netgraph::feasible(&config.attack, &graph);
    if !feasibility.feasible {
        return Ok(SimResult::incomplete(
            IncompleteReason::Infeasible,
            0,
            feasibility,
        ));
    }

    match config.mode {
        Mode::Pb3c => run_pb3c(config, env, graph, feasibility),
        Mode::Im3c => run_im3c(config, env, graph, feasibility),
    }
}

fn run_pb3c(
    config: &SimConfig,
    env: Environment,
    graph: PuppeteerGraph,
    feasibility: FeasibilityReport,
) -> Result<SimResult, EngineError> {
    let header = derive_header(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut payloads = BTreeMap::new();
    payloads.insert(
        Direction::Forward,
        Bits::random(config.attack.forward_bits as usize, &mut rng),
    );
    payloads.insert(
        Direction::Backward,
        Bits::random(config.attack.backward_bits as usize, &mut rng),
    );

    let mut sim = Pb3cSim {
        config,
        env,
        direct: graph.direct_only(),
        header,
        routing: RoutingState::new(config.routing, config.weights.clone())?,
        rng,
        payloads,
        pending: BTreeMap::new(),
        store: BTreeMap::new(),
        piggyback_totals: BTreeMap::new(),
        transient: BTreeMap::new(),
        complete: BTreeMap::new(),
        executed: None,
        effect: None,
        finished: false,
        messages: 0,
        traces: Vec::new(),
    };

    if config.attack.entry == config.attack.execution {
        // The payload is already where it executes.
        sim.complete.insert(Direction::Forward, true);
    } else {
        sim.enqueue_transfer(Direction::Forward, (0, 0))?;
    }

    let schedule: Schedule = sim
        .env
        .procedures
        .iter()
        .map(|p| {
            (
                p.name.clone(),
                p.messages
                    .iter()
                    .map(|m| (m.source, m.target, m.available_space))
                    .collect(),
            )
        })
        .collect();

    let mut fired: u32 = 0;
    let mut timed_out = false;
    'outer: loop {
        for (proc_name, messages) in &schedule {
            if fired == config.max_procedures {
                timed_out = true;
                break 'outer;
            }
            fired += 1;
            sim.instance_begin(fired)?;
            if !sim.finished {
                for (i, (src, dst, cap)) in messages.iter().enumerate() {
                    sim.process_message(fired, proc_name, i, *src, *dst, *cap)?;
                    if sim.finished {
                        break;
                    }
                }
            }
            if !sim.finished {
                sim.process_transients(fired, proc_name)?;
            }
            if sim.finished {
                break 'outer;
            }
        }
    }

    let (forward_path_trace, backward_path_trace) = sim
        .traces
        .into_iter()
        .partition(|t| t.direction == Direction::Forward);
    Ok(SimResult {
        completed: !timed_out,
        reason: timed_out.then_some(IncompleteReason::Timeout {
            max_procedures: config.max_procedures,
        }),
        procedures_used: fired,
        messages_carrying_payload: sim.messages,
        attack_executed_at: sim.executed,
        effect: sim.effect,
        feasibility,
        forward_path_trace,
        backward_path_trace,
    })
}

/// Induced-message mode: one minimum-hop path per direction (lexicographic
/// tie break), attacker-created messages along it, no waiting on procedures.
fn run_im3c(
    config: &SimConfig,
    _env: Environment,
    graph: PuppeteerGraph,
    feasibility: FeasibilityReport,
) -> Result<SimResult, EngineError> {
    let header = derive_header(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let fwd_payload = Bits::random(config.attack.forward_bits as usize, &mut rng);
    let bwd_payload = Bits::random(config.attack.backward_bits as usize, &mut rng);

    let direct = graph.direct_only();
    let mut traces = Vec::new();
    let mut messages = 0u32;

    let mut induce = |payload: &Bits,
                      direction: Direction,
                      from: NodeId,
                      to: NodeId|
     -> Result<bool, EngineError> {
        if payload.is_empty() || from == to {
            return Ok(true);
        }
        let max_hops = (config.ttl as usize)
            .min(direct.nodes.len().saturating_sub(1))
            .max(1);
        let paths = netgraph::enumerate_paths(&direct, from, to, max_hops);
        let Some(min_len) = paths.iter().map(Vec::len).min() else {
            return Ok(false);
        };
        let path = paths.iter().find(|p| p.len() == min_len).unwrap().clone();
        // The attacker picks the roomiest message type on each leg; the
        // whole path supports the smallest of those.
        let capacity = path
            .windows(2)
            .map(|w| direct.max_capacity(w[0], w[1]).expect("edge on path"))
            .min()
            .expect("non-trivial path");
        let frags = fivegpp::fragment_payload(payload, capacity, &header)?;
        for frag in &frags {
            for (hop, w) in path.windows(2).enumerate() {
                messages += 1;
                let is_last = hop == path.len() - 2;
                traces.push(TraceEntry {
                    procedure_instance: 1,
                    procedure: "induced".to_string(),
                    message_index: hop,
                    src: w[0],
                    dst: w[1],
                    direction,
                    fragment_index: frag.fragment_index,
                    payload_bits: frag.payload_bits.len() as u32,
                    outcome: if is_last {
                        TraceOutcome::Consumed
                    } else {
                        TraceOutcome::Forwarded
                    },
                    transient: false,
                });
            }
        }
        Ok(true)
    };

    let fwd_ok = induce(
        &fwd_payload,
        Direction::Forward,
        config.attack.entry,
        config.attack.execution,
    )?;
    let bwd_ok = if let Some(exit) = config.attack.exit {
        fwd_ok
            && induce(
                &bwd_payload,
                Direction::Backward,
                config.attack.execution,
                exit,
            )?
    } else {
        fwd_ok
    };
    if !fwd_ok || !bwd_ok {
        return Ok(SimResult::incomplete(
            IncompleteReason::Infeasible,
            0,
            feasibility,
        ));
    }

    let (forward_path_trace, backward_path_trace) = traces
        .into_iter()
        .partition(|t: &TraceEntry| t.direction == Direction::Forward);
    Ok(SimResult {
        completed: true,
        reason: None,
        procedures_used: 1,
        messages_carrying_payload: messages,
        attack_executed_at: Some(1),
        effect: Some(EffectRecord {
            attack_type: config.attack.attack_type,
            node: config.attack.execution,
            procedure_instance: 1,
        }),
        feasibility,
        forward_path_trace,
        backward_path_trace,
    })
}

/// One row of a capacity sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub bits: u32,
    pub outcome: Result<SimResult, EngineError>,
}

/// Reruns the config once per capacity value. Rows keep input order; with
/// `jobs > 1` runs execute on that many threads (runs share only immutable
/// inputs).
pub fn sweep_capacity(config: &SimConfig, bits_range: &[u32], jobs: usize) -> Vec<SweepRow> {
    let run_one = |bits: u32| -> SweepRow {
        let cfg = SimConfig {
            capacity_override: Some(bits),
            ..config.clone()
        };
        SweepRow {
            bits,
            outcome: run(&cfg),
        }
    };
    if jobs <= 1 || bits_range.len() <= 1 {
        return bits_range.iter().copied().map(run_one).collect();
    }
    let mut rows: Vec<Option<SweepRow>> = vec![None; bits_range.len()];
    let chunk = bits_range.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (ci, bits_chunk) in bits_range.chunks(chunk).enumerate() {
            let run_one = &run_one;
            handles.push((
                ci,
                scope.spawn(move || bits_chunk.iter().copied().map(run_one).collect::<Vec<_>>()),
            ));
        }
        for (ci, handle) in handles {
            for (j, row) in handle.join().expect("sweep worker").into_iter().enumerate() {
                rows[ci * chunk + j] = Some(row);
            }
        }
    });
    rows.into_iter()
        .map(|r| r.expect("all rows computed"))
        .collect()
}

/// Renders sweep rows as CSV with the fixed header
/// `bits,procedures,messages,completed`. Failed runs report zero counts.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("bits,procedures,messages,completed\n");
    for row in rows {
        match &row.outcome {
            Ok(res) => out.push_str(&format!(
                "{},{},{},{}\n",
                row.bits, res.procedures_used, res.messages_carrying_payload, res.completed
            )),
            Err(_) => out.push_str(&format!("{},0,0,false\n", row.bits)),
        }
    }
    out
}

/// Simulated long-term key store of the subscriber database.
#[derive(Clone, Debug, Default)]
pub struct KeyStore {
    keys: BTreeMap<u64, [u8; 16]>,
}

impl KeyStore {
    pub fn new() -> Self {
        KeyStore::default()
    }

    pub fn insert(&mut self, supi: u64, key: [u8; 16]) {
        self.keys.insert(supi, key);
    }

    pub fn get(&self, supi: u64) -> Option<&[u8; 16]> {
        self.keys.get(&supi)
    }
}

/// Outcome of the scripted key extraction over the AKA transient carriers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AkaAttackOutcome {
    /// One 64-bit ciphertext per target, embedded into the SUCI MAC tag of
    /// one registration each.
    pub forward_carriers: Vec<Bits>,
    /// 256-bit RAND+AUTN carriers, each holding up to two encrypted keys.
    pub backward_carriers: Vec<Bits>,
    /// Attacker-side decryption at the exit.
    pub recovered: Vec<(u64, [u8; 16])>,
}

/// Capacity of the backward transient carrier (RAND plus AUTN).
pub const AKA_BACKWARD_CARRIER_BITS: usize = 256;
/// Capacity of the forward transient carrier (the SUCI MAC tag).
pub const AKA_FORWARD_CARRIER_BITS: usize = 64;

/// The scripted key-extraction variant that bypasses the covert header
/// entirely: the target identifier travels encrypted in the MAC tag, the
/// database looks up the 128-bit long-term key, encrypts it and emits it in
/// the RAND+AUTN carrier, and the attacker decrypts at the exit.
pub fn transient_aka_attack(
    targets: &[u64],
    attack_key: &[u8],
    store: &KeyStore,
    cipher: &dyn KeystreamCipher,
) -> Result<AkaAttackOutcome, EngineError> {
    let mut forward_carriers = Vec::new();
    let mut extracted = Bits::new();
    let mut recovered_plain = Vec::new();

    for (i, &supi) in targets.iter().enumerate() {
        let supi_bits = Bits::from_u64(supi, AKA_FORWARD_CARRIER_BITS);
        let ciphertext = cipher_transform(cipher, &supi_bits, attack_key, b"suci-mac");
        forward_carriers.push(ciphertext.clone());

        // Database side: decrypt the MAC tag, look the target up, encrypt
        // the key for the trip back.
        let received = cipher_transform(cipher, &ciphertext, attack_key, b"suci-mac");
        let target = received.to_u64();
        let key = store
            .get(target)
            .ok_or(EngineError::TargetUnknown(target))?;
        let key_bits = Bits::from_bytes(key, 128);
        let salt = (i as u32).to_be_bytes();
        extracted.extend(&cipher_transform(cipher, &key_bits, attack_key, &salt));
        recovered_plain.push(target);
    }

    let backward_carriers = if extracted.is_empty() {
        Vec::new()
    } else {
        extracted.chunks(AKA_BACKWARD_CARRIER_BITS)
    };

    // Exit side: decrypt each 128-bit slice in arrival order.
    let mut recovered = Vec::new();
    let flat: Bits = backward_carriers
        .iter()
        .fold(Bits::new(), |acc, c| acc.concat(c));
    for (i, slice) in flat.chunks(128).into_iter().enumerate() {
        let salt = (i as u32).to_be_bytes();
        let plain = cipher_transform(cipher, &slice, attack_key, &salt);
        let mut key = [0u8; 16];
        for (bi, bit) in plain.iter().enumerate() {
            if bit {
                key[bi / 8] |= 1 << (7 - bi % 8);
            }
        }
        recovered.push((recovered_plain[i], key));
    }

    Ok(AkaAttackOutcome {
        forward_carriers,
        backward_carriers,
        recovered,
    })
}

/// Convenience: the default cipher used by scripted attacks.
pub fn default_cipher() -> CipherKind {
    CipherKind::KeyedPrg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::fivegpp::{IdentityCipher, KeyedPrg};

    fn a1_config() -> SimConfig {
        let mut env = catalog::registration_environment();
        env.compromised = [NodeId::Amf, NodeId::Ausf, NodeId::Udm, NodeId::Smf]
            .into_iter()
            .collect();
        let a1 = catalog::attack_catalog()
            .into_iter()
            .find(|e| e.name == "A1")
            .unwrap()
            .attack;
        SimConfig::new(env, a1)
    }

    #[test]
    fn a1_completes_in_four_registration_procedures() {
        let result = run(&a1_config()).unwrap();
        assert!(result.completed);
        assert_eq!(result.procedures_used, 4);
        assert_eq!(result.attack_executed_at, Some(1));
        assert_eq!(result.effect.as_ref().unwrap().node, NodeId::Udm);
    }

    #[test]
    fn identical_configs_produce_identical_results() {
        let config = a1_config();
        let first = run(&config).unwrap();
        let second = run(&config).unwrap();
        assert_eq!(first, second);

        let mut eerr = a1_config();
        eerr.routing = RoutingOption::WeightedRoundRobin;
        eerr.seed = 99;
        assert_eq!(run(&eerr).unwrap(), run(&eerr).unwrap());
    }

    #[test]
    fn degenerate_attack_completes_without_any_messages() {
        let mut env = catalog::registration_environment();
        env.compromised.insert(NodeId::Gnb);
        let attack = Attack {
            entry: NodeId::Gnb,
            execution: NodeId::Gnb,
            exit: None,
            forward_bits: 32,
            backward_bits: 0,
            attack_type: AttackType::PwsAbuse,
        };
        let result = run(&SimConfig::new(env, attack)).unwrap();
        assert!(result.completed);
        assert_eq!(result.procedures_used, 1);
        assert_eq!(result.messages_carrying_payload, 0);
        assert_eq!(result.attack_executed_at, Some(1));
    }

    #[test]
    fn infeasible_attacks_return_immediately() {
        let mut env = catalog::registration_environment();
        env.compromised = [NodeId::Gnb].into_iter().collect();
        let a2 = catalog::attack_catalog()
            .into_iter()
            .find(|e| e.name == "A2")
            .unwrap()
            .attack;
        let result = run(&SimConfig::new(env, a2)).unwrap();
        assert!(!result.completed);
        assert_eq!(result.reason, Some(IncompleteReason::Infeasible));
        assert_eq!(result.procedures_used, 0);
    }

    #[test]
    fn capacity_below_the_header_minimum_is_an_error() {
        let mut config = a1_config();
        config.capacity_override = Some(20);
        assert!(matches!(
            run(&config),
            Err(EngineError::Protocol(FivegppError::CapacityTooSmall(20)))
        ));
    }

    #[test]
    fn timeout_reports_incomplete() {
        let mut config = a1_config();
        config.max_procedures = 2;
        let result = run(&config).unwrap();
        assert!(!result.completed);
        assert_eq!(
            result.reason,
            Some(IncompleteReason::Timeout { max_procedures: 2 })
        );
        assert_eq!(result.procedures_used, 2);
    }

    #[test]
    fn conservation_of_consumed_payload_bits() {
        let config = a1_config();
        let result = run(&config).unwrap();
        let consumed = |trace: &[TraceEntry]| -> u32 {
            trace
                .iter()
                .filter(|t| t.outcome == TraceOutcome::Consumed)
                .map(|t| t.payload_bits)
                .sum()
        };
        assert_eq!(
            consumed(&result.forward_path_trace),
            config.attack.forward_bits
        );
        assert_eq!(
            consumed(&result.backward_path_trace),
            config.attack.backward_bits
        );
    }

    #[test]
    fn no_fragment_departs_before_it_arrived() {
        let result = run(&a1_config()).unwrap();
        // Reconstruct arrival times per (node, direction, fragment) and check
        // every departure strictly follows the arrival within one instance.
        let mut arrivals: BTreeMap<(NodeId, Direction, u32), (u32, usize)> = BTreeMap::new();
        for t in result
            .forward_path_trace
            .iter()
            .chain(&result.backward_path_trace)
        {
            if t.outcome == TraceOutcome::Forwarded {
                arrivals
                    .entry((t.dst, t.direction, t.fragment_index))
                    .or_insert((t.procedure_instance, t.message_index));
            }
        }
        for t in result
            .forward_path_trace
            .iter()
            .chain(&result.backward_path_trace)
        {
            if let Some(&(ai, am)) = arrivals.get(&(t.src, t.direction, t.fragment_index)) {
                assert!(
                    (ai, am) < (t.procedure_instance, t.message_index),
                    "fragment {} departed {} at p{} m{} but arrived p{ai} m{am}",
                    t.fragment_index,
                    t.src,
                    t.procedure_instance,
                    t.message_index
                );
            }
        }
    }

    #[test]
    fn flooding_traffic_is_bounded_by_nodes_fragments_and_ttl() {
        let config = a1_config();
        let result = run(&config).unwrap();
        let fragments = 3 + 5; // forward + backward at 64-bit capacity
        let nodes = 5;
        let bound = nodes as u32 * fragments * config.ttl as u32;
        let transmissions =
            (result.forward_path_trace.len() + result.backward_path_trace.len()) as u32;
        assert!(
            transmissions <= bound,
            "{transmissions} transmissions exceed bound {bound}"
        );
    }

    #[test]
    fn transient_case_study_completes_in_two_procedures() {
        let env = catalog::aka_transient_environment();
        let aka = catalog::aka_attack_entry();
        let result = run(&SimConfig::new(env, aka.attack)).unwrap();
        assert!(result.completed);
        assert_eq!(result.procedures_used, 2);
        assert_eq!(result.attack_executed_at, Some(1));
        assert!(result.forward_path_trace.iter().all(|t| t.transient));
        assert_eq!(result.backward_path_trace.len(), 1);
        assert_eq!(result.backward_path_trace[0].payload_bits, 192);
    }

    #[test]
    fn induced_mode_uses_one_procedure_and_counts_messages() {
        let env = catalog::registration_environment();
        let a1 = catalog::attack_catalog()
            .into_iter()
            .find(|e| e.name == "A1")
            .unwrap()
            .attack;
        let mut config = SimConfig::new(env, a1);
        config.mode = Mode::Im3c;
        let result = run(&config).unwrap();
        assert!(result.completed);
        assert_eq!(result.procedures_used, 1);
        // 3 forward fragments and 5 backward fragments, two hops each.
        assert_eq!(result.messages_carrying_payload, 3 * 2 + 5 * 2);
        assert!(result
            .forward_path_trace
            .iter()
            .all(|t| t.procedure == "induced"));
    }

    #[test]
    fn round_robin_and_weighted_runs_complete() {
        for option in [RoutingOption::RoundRobin, RoutingOption::WeightedRoundRobin] {
            let mut config = a1_config();
            config.routing = option;
            config.seed = 5;
            let result = run(&config).unwrap();
            assert!(result.completed, "{option} did not complete");
            // Single-path discipline: no duplicates anywhere.
            assert!(result
                .forward_path_trace
                .iter()
                .all(|t| t.outcome != TraceOutcome::DroppedDuplicate));
        }
    }

    #[test]
    fn sweep_rows_keep_input_order_and_are_monotone() {
        let config = a1_config();
        let bits = [21u32, 32, 48, 64, 96, 128];
        let rows = sweep_capacity(&config, &bits, 1);
        assert_eq!(rows.iter().map(|r| r.bits).collect::<Vec<_>>(), bits);
        let counts: Vec<u32> = rows
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().procedures_used)
            .collect();
        assert!(
            counts.windows(2).all(|w| w[0] >= w[1]),
            "not monotone: {counts:?}"
        );
        // Parallel execution returns the same table.
        assert_eq!(sweep_capacity(&config, &bits, 3), rows);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("bits,procedures,messages,completed\n"));
        assert_eq!(csv.lines().count(), bits.len() + 1);

        // A capacity below the header minimum is recorded per row, not fatal.
        let bad = sweep_capacity(&config, &[20], 1);
        assert!(bad[0].outcome.is_err());
        assert_eq!(sweep_csv(&bad), "bits,procedures,messages,completed\n20,0,0,false\n");
    }

    fn test_store() -> KeyStore {
        let mut store = KeyStore::new();
        store.insert(0x1111_2222_3333_4444, *b"first-secret-key");
        store.insert(0x5555_6666_7777_8888, *b"second-key-bytes");
        store.insert(0x9999_aaaa_bbbb_cccc, *b"third-key-filler");
        store
    }

    #[test]
    fn scripted_key_extraction_round_trips() {
        let store = test_store();
        let outcome =
            transient_aka_attack(&[0x1111_2222_3333_4444], b"attack-key", &store, &KeyedPrg)
                .unwrap();
        assert_eq!(outcome.backward_carriers.len(), 1);
        assert_eq!(outcome.recovered.len(), 1);
        let (supi, key) = outcome.recovered[0];
        assert_eq!(supi, 0x1111_2222_3333_4444);
        assert_eq!(&key, store.get(supi).unwrap());
        // The ciphertext on the wire differs from the plain identifier.
        assert_ne!(outcome.forward_carriers[0].to_u64(), supi);
    }

    #[test]
    fn two_targets_share_one_backward_carrier() {
        let store = test_store();
        let targets = [0x1111_2222_3333_4444, 0x5555_6666_7777_8888];
        let outcome = transient_aka_attack(&targets, b"attack-key", &store, &KeyedPrg).unwrap();
        assert_eq!(outcome.backward_carriers.len(), 1);
        assert_eq!(outcome.backward_carriers[0].len(), 256);
        for (i, (supi, key)) in outcome.recovered.iter().enumerate() {
            assert_eq!(*supi, targets[i]);
            assert_eq!(key, store.get(*supi).unwrap());
        }
    }

    #[test]
    fn three_targets_need_two_backward_carriers() {
        let store = test_store();
        let targets = [
            0x1111_2222_3333_4444,
            0x5555_6666_7777_8888,
            0x9999_aaaa_bbbb_cccc,
        ];
        let outcome =
            transient_aka_attack(&targets, b"attack-key", &store, &IdentityCipher).unwrap();
        assert_eq!(outcome.backward_carriers.len(), 2);
        assert_eq!(outcome.recovered.len(), 3);
    }

    #[test]
    fn unknown_targets_are_reported() {
        let store = test_store();
        assert_eq!(
            transient_aka_attack(&[0xdead_beef], b"attack-key", &store, &IdentityCipher),
            Err(EngineError::TargetUnknown(0xdead_beef))
        );
    }
}
