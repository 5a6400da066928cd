//! Connectivity graphs over an environment and attack feasibility checks.
//!
//! Two views matter: the full graph over every procedure message (the
//! reachable universe of entry, execution and exit candidates) and the
//! reduced graph an attacker can actually use, where a direct edge survives
//! only between two compromised nodes with enough embedding space and a
//! transient edge survives only when its first and last nodes are under
//! attacker control. Feasibility is plain reachability on the reduced graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::fivegpp::MIN_USABLE_CAPACITY;
use crate::model::{capacity_of, Attack, Environment, Mode, NodeId};

/// How an edge came to be: a genuine procedure message between two
/// compromised nodes, or a parameter forwarded unmodified through
/// uncompromised middlemen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    Direct,
    Transient,
}

/// A directed edge tagged with its originating message or carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub procedure: String,
    pub message_index: usize,
    pub capacity: u32,
    pub kind: EdgeKind,
    pub label: String,
}

/// A directed multigraph: one edge per usable message plus one per usable
/// transient channel. Edge order follows procedure order, so identical
/// inputs always produce identical graphs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PuppeteerGraph {
    pub nodes: BTreeSet<NodeId>,
    pub edges: Vec<GraphEdge>,
}

impl PuppeteerGraph {
    pub fn out_neighbors(&self, node: NodeId) -> BTreeSet<NodeId> {
        self.edges
            .iter()
            .filter(|e| e.src == node)
            .map(|e| e.dst)
            .collect()
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.edges.iter().any(|e| e.src == src && e.dst == dst)
    }

    /// Unordered node pairs connected by at least one edge in either direction.
    pub fn connected_pairs(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.edges
            .iter()
            .map(|e| {
                if e.src < e.dst {
                    (e.src, e.dst)
                } else {
                    (e.dst, e.src)
                }
            })
            .collect()
    }

    /// The graph restricted to direct (piggyback) edges.
    pub fn direct_only(&self) -> PuppeteerGraph {
        let edges: Vec<GraphEdge> = self
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Direct)
            .cloned()
            .collect();
        let mut nodes = BTreeSet::new();
        for e in &edges {
            nodes.insert(e.src);
            nodes.insert(e.dst);
        }
        PuppeteerGraph { nodes, edges }
    }

    /// Largest capacity available on any edge from `src` to `dst`.
    pub fn max_capacity(&self, src: NodeId, dst: NodeId) -> Option<u32> {
        self.edges
            .iter()
            .filter(|e| e.src == src && e.dst == dst)
            .map(|e| e.capacity)
            .max()
    }

    /// Smallest capacity over all direct edges, if any exist.
    pub fn min_direct_capacity(&self) -> Option<u32> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Direct)
            .map(|e| e.capacity)
            .min()
    }
}

/// Minimum embedding space for an edge to count: in piggyback mode a message
/// must fit the header plus one payload bit; in induced-message mode any
/// writable bit counts.
pub fn default_threshold(mode: Mode) -> u32 {
    match mode {
        Mode::Pb3c => MIN_USABLE_CAPACITY,
        Mode::Im3c => 1,
    }
}

fn push_message_edges(
    env: &Environment,
    keep: impl Fn(NodeId, NodeId, u32) -> bool,
    edges: &mut Vec<GraphEdge>,
) {
    for proc in &env.procedures {
        for (idx, msg) in proc.messages.iter().enumerate() {
            let cap = capacity_of(msg, None);
            if keep(msg.source, msg.target, cap) {
                edges.push(GraphEdge {
                    src: msg.source,
                    dst: msg.target,
                    procedure: proc.name.clone(),
                    message_index: idx,
                    capacity: cap,
                    kind: EdgeKind::Direct,
                    label: msg.label.clone(),
                });
            }
        }
    }
}

fn push_transient_edges(
    env: &Environment,
    keep: impl Fn(NodeId, NodeId, u32) -> bool,
    edges: &mut Vec<GraphEdge>,
) {
    for ch in &env.transient_channels {
        if keep(ch.first, ch.last, ch.capacity) {
            edges.push(GraphEdge {
                src: ch.first,
                dst: ch.last,
                procedure: ch.procedure.clone(),
                message_index: ch.anchor_message_index,
                capacity: ch.capacity,
                kind: EdgeKind::Transient,
                label: ch.carrier.clone(),
            });
        }
    }
}

/// The universe view: every message and transient channel becomes an edge,
/// compromise ignored.
pub fn build_full_graph(env: &Environment) -> PuppeteerGraph {
    let mut edges = Vec::new();
    push_message_edges(env, |_, _, _| true, &mut edges);
    push_transient_edges(env, |_, _, _| true, &mut edges);
    let mut nodes = BTreeSet::new();
    for e in &edges {
        nodes.insert(e.src);
        nodes.insert(e.dst);
    }
    PuppeteerGraph { nodes, edges }
}

/// The attacker view: direct edges between compromised endpoints with at
/// least `threshold` bits of space, transient edges whose first and last
/// nodes are compromised (intermediate nodes never inspect the carrier).
pub fn build_puppeteer_graph(env: &Environment, _mode: Mode, threshold: u32) -> PuppeteerGraph {
    let compromised = &env.compromised;
    let mut edges = Vec::new();
    push_message_edges(
        env,
        |src, dst, cap| {
            compromised.contains(&src) && compromised.contains(&dst) && cap >= threshold
        },
        &mut edges,
    );
    push_transient_edges(
        env,
        |first, last, cap| {
            compromised.contains(&first) && compromised.contains(&last) && cap >= threshold
        },
        &mut edges,
    );
    let mut nodes: BTreeSet<NodeId> = compromised.clone();
    for e in &edges {
        nodes.insert(e.src);
        nodes.insert(e.dst);
    }
    PuppeteerGraph { nodes, edges }
}

/// Outcome of the reachability check for one attack, with one witness path
/// per required direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub entry: NodeId,
    pub execution: NodeId,
    pub exit: Option<NodeId>,
    pub forward_reachable: bool,
    pub backward_reachable: bool,
    pub feasible: bool,
    pub forward_witness: Option<Vec<NodeId>>,
    pub backward_witness: Option<Vec<NodeId>>,
}

/// Shortest path by breadth-first search, neighbors visited in node order so
/// the witness is deterministic.
fn bfs_path(g: &PuppeteerGraph, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
    if !g.nodes.contains(&from) || !g.nodes.contains(&to) {
        return None;
    }
    if from == to {
        return Some(vec![from]);
    }
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        for next in g.out_neighbors(node) {
            if next != from && !parent.contains_key(&next) {
                parent.insert(next, node);
                if next == to {
                    let mut path = vec![to];
                    let mut cur = to;
                    while let Some(&p) = parent.get(&cur) {
                        path.push(p);
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(next);
            }
        }
    }
    None
}

/// True when `to` is reachable from `from` over the graph's edges.
pub fn feasible_between(g: &PuppeteerGraph, from: NodeId, to: NodeId) -> bool {
    bfs_path(g, from, to).is_some()
}

/// Checks whether the attack's forward path (entry to execution) and, when
/// an exit exists, backward path (execution to exit) are available.
pub fn feasible(attack: &Attack, g: &PuppeteerGraph) -> FeasibilityReport {
    let forward_witness = bfs_path(g, attack.entry, attack.execution);
    let backward_witness = attack
        .exit
        .and_then(|exit| bfs_path(g, attack.execution, exit));
    let forward_reachable = forward_witness.is_some();
    let backward_reachable = match attack.exit {
        None => true,
        Some(_) => backward_witness.is_some(),
    };
    FeasibilityReport {
        entry: attack.entry,
        execution: attack.execution,
        exit: attack.exit,
        forward_reachable,
        backward_reachable,
        feasible: forward_reachable && backward_reachable,
        forward_witness,
        backward_witness,
    }
}

/// All simple paths from `from` to `to` with at most `max_len` hops, in
/// lexicographic node-sequence order.
pub fn enumerate_paths(
    g: &PuppeteerGraph,
    from: NodeId,
    to: NodeId,
    max_len: usize,
) -> Vec<Vec<NodeId>> {
    assert!(max_len >= 1, "max_len must be at least one hop");
    if !g.nodes.contains(&from) || !g.nodes.contains(&to) {
        return Vec::new();
    }
    if from == to {
        return vec![vec![from]];
    }
    let mut paths = Vec::new();
    let mut current = vec![from];
    let mut visited: BTreeSet<NodeId> = [from].into_iter().collect();
    fn dfs(
        g: &PuppeteerGraph,
        to: NodeId,
        max_len: usize,
        current: &mut Vec<NodeId>,
        visited: &mut BTreeSet<NodeId>,
        paths: &mut Vec<Vec<NodeId>>,
    ) {
        let node = *current.last().unwrap();
        if current.len() > max_len {
            return;
        }
        for next in g.out_neighbors(node) {
            if next == to {
                let mut path = current.clone();
                path.push(to);
                paths.push(path);
            } else if !visited.contains(&next) {
                visited.insert(next);
                current.push(next);
                dfs(g, to, max_len, current, visited, paths);
                current.pop();
                visited.remove(&next);
            }
        }
    }
    dfs(g, to, max_len, &mut current, &mut visited, &mut paths);
    paths.sort();
    paths
}

fn witness_pairs(path: &Option<Vec<NodeId>>) -> BTreeSet<(NodeId, NodeId)> {
    let mut pairs = BTreeSet::new();
    if let Some(p) = path {
        for w in p.windows(2) {
            let (a, b) = (w[0], w[1]);
            pairs.insert(if a < b { (a, b) } else { (b, a) });
        }
    }
    pairs
}

fn witness_edges(path: &Option<Vec<NodeId>>) -> BTreeSet<(NodeId, NodeId)> {
    path.as_ref()
        .map(|p| p.windows(2).map(|w| (w[0], w[1])).collect())
        .unwrap_or_default()
}

/// Renders the graph as Graphviz DOT text. With a feasibility report the
/// witness paths are overlaid: forward edges red, backward edges blue, node
/// pairs on both paths purple with arrows both ways; entry and exit nodes
/// are filled orange and the execution node gets a double border. Output is
/// byte-stable for identical inputs.
pub fn export_dot(g: &PuppeteerGraph, attack_paths: Option<&FeasibilityReport>) -> String {
    let mut out = String::from("digraph covert {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=ellipse, style=filled, fillcolor=white];\n");

    let (fwd_pairs, bwd_pairs, fwd_edges, bwd_edges) = match attack_paths {
        Some(r) => (
            witness_pairs(&r.forward_witness),
            witness_pairs(&r.backward_witness),
            witness_edges(&r.forward_witness),
            witness_edges(&r.backward_witness),
        ),
        None => Default::default(),
    };
    let purple: BTreeSet<(NodeId, NodeId)> = fwd_pairs.intersection(&bwd_pairs).copied().collect();

    for node in &g.nodes {
        let mut attrs = Vec::new();
        if let Some(r) = attack_paths {
            if r.entry == *node || r.exit == Some(*node) {
                attrs.push("fillcolor=orange".to_string());
            }
            if r.execution == *node {
                attrs.push("peripheries=2".to_string());
            }
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  \"{node}\";");
        } else {
            let _ = writeln!(out, "  \"{node}\" [{}];", attrs.join(", "));
        }
    }

    // One rendered edge per directed node pair and kind; parallel messages
    // are aggregated into the label.
    let mut grouped: BTreeMap<(NodeId, NodeId, EdgeKind), (usize, u32, String)> = BTreeMap::new();
    for e in &g.edges {
        let slot =
            grouped
                .entry((e.src, e.dst, e.kind))
                .or_insert((0, e.capacity, e.label.clone()));
        slot.0 += 1;
        slot.1 = slot.1.min(e.capacity);
    }

    for ((src, dst, kind), (count, cap, label)) in &grouped {
        let pair = if src < dst {
            (*src, *dst)
        } else {
            (*dst, *src)
        };
        if purple.contains(&pair) {
            continue; // rendered once below with both arrowheads
        }
        let color = if fwd_edges.contains(&(*src, *dst)) {
            "red"
        } else if bwd_edges.contains(&(*src, *dst)) {
            "blue"
        } else {
            "gray50"
        };
        let mut attrs = vec![format!("color={color}")];
        if color != "gray50" {
            attrs.push("penwidth=2".to_string());
        }
        match kind {
            EdgeKind::Direct => attrs.push(format!("label=\"{count} msg / {cap} bit\"")),
            EdgeKind::Transient => {
                attrs.push("style=dashed".to_string());
                attrs.push(format!("label=\"{label} / {cap} bit\""));
            }
        }
        let _ = writeln!(out, "  \"{src}\" -> \"{dst}\" [{}];", attrs.join(", "));
    }

    for (a, b) in &purple {
        let _ = writeln!(
            out,
            "  \"{a}\" -> \"{b}\" [dir=both, color=purple, penwidth=2];"
        );
    }

    out.push_str("}\n");
    out
}
