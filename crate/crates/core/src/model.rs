//! Core domain model: network functions, procedures, environments, attacks.
//!
//! An environment is an ordered list of signaling procedures plus the set of
//! compromised network functions. Each procedure message carries a number of
//! bits of embedding space. Attacks name an entry point, an execution point,
//! an optional exit point and the payload sizes for both directions.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identity of a core-network function (or the UE / base station).
///
/// The set of valid values is closed; scenario loading rejects unknown names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NodeId {
    Ue,
    Gnb,
    Amf,
    Smf,
    Upf,
    Ausf,
    Udm,
    Pcf,
    Sepp,
    Nef,
}

impl NodeId {
    pub const ALL: [NodeId; 10] = [
        NodeId::Ue,
        NodeId::Gnb,
        NodeId::Amf,
        NodeId::Smf,
        NodeId::Upf,
        NodeId::Ausf,
        NodeId::Udm,
        NodeId::Pcf,
        NodeId::Sepp,
        NodeId::Nef,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeId::Ue => "UE",
            NodeId::Gnb => "GNB",
            NodeId::Amf => "AMF",
            NodeId::Smf => "SMF",
            NodeId::Upf => "UPF",
            NodeId::Ausf => "AUSF",
            NodeId::Udm => "UDM",
            NodeId::Pcf => "PCF",
            NodeId::Sepp => "SEPP",
            NodeId::Nef => "NEF",
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for NodeId {
    type Err = UnknownNode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        NodeId::ALL
            .iter()
            .find(|n| n.as_str() == upper)
            .copied()
            .ok_or_else(|| UnknownNode(s.to_string()))
    }
}

impl TryFrom<String> for NodeId {
    type Error = UnknownNode;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<NodeId> for String {
    fn from(n: NodeId) -> String {
        n.as_str().to_string()
    }
}

// Node ordering is lexicographic by name so that every traversal that sorts
// nodes has one spelled-out, human-checkable order.
impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_str().cmp(other.as_str())
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown node name: {0}")]
pub struct UnknownNode(pub String);

/// Embedding mode: induce dedicated standardized messages, or piggyback on
/// messages of genuine procedures only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Im3c,
    Pb3c,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Mode::Im3c => "im3c",
            Mode::Pb3c => "pb3c",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "im3c" => Ok(Mode::Im3c),
            "pb3c" => Ok(Mode::Pb3c),
            other => Err(format!("unknown mode: {other} (expected im3c or pb3c)")),
        }
    }
}

/// How a transfer spreads over the available paths. Carried in the covert
/// header (two bits); code 4 is reserved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoutingOption {
    /// Send every fragment on every available path.
    #[default]
    #[serde(rename = "pf")]
    PathFlooding,
    /// Use the available paths in turn, one per fragment.
    #[serde(rename = "rr")]
    RoundRobin,
    /// Pick one path per fragment, sampled by configured weights.
    #[serde(rename = "eerr")]
    WeightedRoundRobin,
}

impl RoutingOption {
    /// Code point carried in the covert header (1-based).
    pub fn code(&self) -> u8 {
        match self {
            RoutingOption::PathFlooding => 1,
            RoutingOption::RoundRobin => 2,
            RoutingOption::WeightedRoundRobin => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<RoutingOption> {
        match code {
            1 => Some(RoutingOption::PathFlooding),
            2 => Some(RoutingOption::RoundRobin),
            3 => Some(RoutingOption::WeightedRoundRobin),
            _ => None,
        }
    }
}

impl fmt::Display for RoutingOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            RoutingOption::PathFlooding => "pf",
            RoutingOption::RoundRobin => "rr",
            RoutingOption::WeightedRoundRobin => "eerr",
        })
    }
}

impl FromStr for RoutingOption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(RoutingOption::PathFlooding),
            "rr" => Ok(RoutingOption::RoundRobin),
            "eerr" => Ok(RoutingOption::WeightedRoundRobin),
            other => Err(format!(
                "unknown routing option: {other} (expected pf, rr or eerr)"
            )),
        }
    }
}

/// Direction of covert information flow relative to an attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Parameter counts of a service-based-interface message, kept as metadata
/// only. A parameter may be anything from one bit to a nested container, so
/// the counts indicate capacity rather than define it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbiParameterCounts {
    pub request_required: u8,
    pub request_optional: u8,
    pub response_required: u8,
    pub response_optional: u8,
}

/// One message of a procedure: sender, receiver and usable embedding space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcedureMessage {
    pub source: NodeId,
    pub target: NodeId,
    /// Bits of covert payload (headers included) this message can carry.
    pub available_space: u32,
    pub label: String,
    /// Attached when the label matches a known SBI message.
    pub sbi: Option<SbiParameterCounts>,
}

impl ProcedureMessage {
    pub fn new(source: NodeId, target: NodeId, available_space: u32, label: &str) -> Self {
        ProcedureMessage {
            source,
            target,
            available_space,
            label: label.to_string(),
            sbi: None,
        }
    }
}

/// Effective capacity of a message: the sweep override wins when present.
pub fn capacity_of(msg: &ProcedureMessage, override_bits: Option<u32>) -> u32 {
    override_bits.unwrap_or(msg.available_space)
}

/// A named, totally ordered list of messages. The simulator always delivers
/// them in list order within one procedure instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub messages: Vec<ProcedureMessage>,
}

/// A parameter forwarded unmodified by intermediate (possibly uncompromised)
/// nodes within one procedure, usable as a covert bridge between its first
/// and last node. Usability requires only that first and last are
/// compromised or attacker-controlled; the via nodes never inspect it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransientChannel {
    pub first: NodeId,
    pub last: NodeId,
    pub via: Vec<NodeId>,
    pub capacity: u32,
    pub direction: Direction,
    /// Which genuine parameter carries the bits, e.g. "SUCI MAC tag".
    pub carrier: String,
    /// Name of the owning procedure.
    pub procedure: String,
    /// Index of the message on which the carrier leaves `first`.
    pub anchor_message_index: usize,
}

/// The simulated core network: procedures in firing order plus the set of
/// compromised functions. Immutable after load; a run never mutates it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Environment {
    pub procedures: Vec<Procedure>,
    pub compromised: BTreeSet<NodeId>,
    pub transient_channels: Vec<TransientChannel>,
}

impl Environment {
    /// All nodes appearing in procedures or transient channels.
    pub fn known_nodes(&self) -> BTreeSet<NodeId> {
        let mut nodes = BTreeSet::new();
        for p in &self.procedures {
            for m in &p.messages {
                nodes.insert(m.source);
                nodes.insert(m.target);
            }
        }
        for t in &self.transient_channels {
            nodes.insert(t.first);
            nodes.insert(t.last);
            nodes.extend(t.via.iter().copied());
        }
        nodes
    }

    /// A copy with every message capacity replaced by `bits`.
    pub fn with_capacity_override(&self, bits: u32) -> Environment {
        let mut env = self.clone();
        for p in &mut env.procedures {
            for m in &mut p.messages {
                m.available_space = bits;
            }
        }
        env
    }

    /// A copy whose compromised set additionally contains the attacker-held
    /// endpoints of `attack` (entry and exit equipment is attacker gear even
    /// when it is not an operator component).
    pub fn with_attack_endpoints(&self, attack: &Attack) -> Environment {
        let mut env = self.clone();
        env.compromised.insert(attack.entry);
        if let Some(exit) = attack.exit {
            env.compromised.insert(exit);
        }
        env
    }
}

/// Kind of effect an attack triggers at its execution point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackType {
    UdmKeyExtraction,
    UeLocalization,
    PwsAbuse,
}

impl AttackType {
    /// Code point carried in the covert header (two bits, 1-based).
    pub fn code(&self) -> u8 {
        match self {
            AttackType::UdmKeyExtraction => 1,
            AttackType::PwsAbuse => 2,
            AttackType::UeLocalization => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<AttackType> {
        match code {
            1 => Some(AttackType::UdmKeyExtraction),
            2 => Some(AttackType::PwsAbuse),
            3 => Some(AttackType::UeLocalization),
            _ => None,
        }
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            AttackType::UdmKeyExtraction => "key-extraction",
            AttackType::UeLocalization => "ue-localization",
            AttackType::PwsAbuse => "pws-abuse",
        })
    }
}

/// An attack: where parameters enter, where they take effect, where results
/// leave, and how many bits travel in each direction. `exit` is absent
/// exactly when nothing travels back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attack {
    pub entry: NodeId,
    pub execution: NodeId,
    pub exit: Option<NodeId>,
    pub forward_bits: u32,
    pub backward_bits: u32,
    pub attack_type: AttackType,
}

/// A single broken invariant. Violations are data, not failures: validation
/// reports all of them instead of stopping at the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// Checks every structural invariant of an environment. Empty result means
/// the environment is well formed.
pub fn validate_environment(env: &Environment) -> Vec<Violation> {
    let mut violations = Vec::new();
    let known = env.known_nodes();

    for (pi, proc) in env.procedures.iter().enumerate() {
        for (mi, msg) in proc.messages.iter().enumerate() {
            if msg.source == msg.target {
                violations.push(Violation {
                    entity: format!("procedure '{}' message {}", proc.name, mi),
                    message: format!("source equals target ({})", msg.source),
                });
            }
        }
        if proc.messages.is_empty() {
            violations.push(Violation {
                entity: format!("procedure '{}' (index {pi})", proc.name),
                message: "contains no messages".to_string(),
            });
        }
    }

    for node in &env.compromised {
        if !known.contains(node) {
            violations.push(Violation {
                entity: format!("compromised node {node}"),
                message: "absent from all procedures and transient channels".to_string(),
            });
        }
    }

    for (ti, ch) in env.transient_channels.iter().enumerate() {
        let entity = format!("transient channel {ti} ({})", ch.carrier);
        if ch.capacity == 0 {
            violations.push(Violation {
                entity: entity.clone(),
                message: "capacity must be positive".to_string(),
            });
        }
        if ch.first == ch.last {
            violations.push(Violation {
                entity: entity.clone(),
                message: format!("first equals last ({})", ch.first),
            });
        }
        match env.procedures.iter().find(|p| p.name == ch.procedure) {
            None => violations.push(Violation {
                entity,
                message: format!("owning procedure '{}' not found", ch.procedure),
            }),
            Some(p) => {
                if ch.anchor_message_index >= p.messages.len() {
                    violations.push(Violation {
                        entity,
                        message: format!(
                            "anchor message index {} out of range (procedure has {} messages)",
                            ch.anchor_message_index,
                            p.messages.len()
                        ),
                    });
                }
            }
        }
    }

    violations
}

/// Checks the invariants of an attack against an environment.
pub fn validate_attack(attack: &Attack, env: &Environment) -> Vec<Violation> {
    let mut violations = Vec::new();
    let known = env.known_nodes();
    let entity = format!("attack at {}", attack.execution);
    match (attack.exit, attack.backward_bits) {
        (None, 0) | (Some(_), 1..) => {}
        (None, _) => violations.push(Violation {
            entity: entity.clone(),
            message: "backward bits set but no exit point".to_string(),
        }),
        (Some(_), 0) => violations.push(Violation {
            entity: entity.clone(),
            message: "exit point set but zero backward bits".to_string(),
        }),
    }
    for (role, node) in [
        ("entry", Some(attack.entry)),
        ("execution", Some(attack.execution)),
        ("exit", attack.exit),
    ] {
        if let Some(n) = node {
            if !known.contains(&n) {
                violations.push(Violation {
                    entity: entity.clone(),
                    message: format!("{role} node {n} unknown to the environment"),
                });
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(src: NodeId, dst: NodeId) -> ProcedureMessage {
        ProcedureMessage::new(src, dst, 64, "test")
    }

    #[test]
    fn node_order_is_lexicographic_by_name() {
        let mut nodes = vec![NodeId::Ue, NodeId::Amf, NodeId::Ausf, NodeId::Gnb];
        nodes.sort();
        assert_eq!(
            nodes,
            vec![NodeId::Amf, NodeId::Ausf, NodeId::Gnb, NodeId::Ue]
        );
    }

    #[test]
    fn unknown_node_names_are_rejected() {
        assert!("MME".parse::<NodeId>().is_err());
        assert_eq!("gNB".parse::<NodeId>().unwrap(), NodeId::Gnb);
    }

    #[test]
    fn capacity_override_wins() {
        let m = msg(NodeId::Ue, NodeId::Amf);
        assert_eq!(capacity_of(&m, None), 64);
        assert_eq!(capacity_of(&m, Some(21)), 21);
        let zero = ProcedureMessage::new(NodeId::Ue, NodeId::Amf, 0, "empty");
        assert_eq!(capacity_of(&zero, None), 0);
    }

    #[test]
    fn self_message_is_a_violation() {
        let env = Environment {
            procedures: vec![Procedure {
                name: "p".to_string(),
                messages: vec![msg(NodeId::Ue, NodeId::Ue)],
            }],
            ..Environment::default()
        };
        let violations = validate_environment(&env);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("source equals target"));
    }

    #[test]
    fn compromised_node_must_appear_somewhere() {
        let env = Environment {
            procedures: vec![Procedure {
                name: "p".to_string(),
                messages: vec![msg(NodeId::Ue, NodeId::Gnb)],
            }],
            compromised: [NodeId::Amf].into_iter().collect(),
            ..Environment::default()
        };
        let violations = validate_environment(&env);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].entity.contains("AMF"));
    }

    #[test]
    fn attack_exit_matches_backward_bits() {
        let env = Environment {
            procedures: vec![Procedure {
                name: "p".to_string(),
                messages: vec![msg(NodeId::Ue, NodeId::Gnb)],
            }],
            ..Environment::default()
        };
        let bad = Attack {
            entry: NodeId::Ue,
            execution: NodeId::Gnb,
            exit: None,
            forward_bits: 32,
            backward_bits: 8,
            attack_type: AttackType::PwsAbuse,
        };
        assert_eq!(validate_attack(&bad, &env).len(), 1);
        let good = Attack {
            backward_bits: 0,
            ..bad
        };
        assert!(validate_attack(&good, &env).is_empty());
    }
}
