//! Scenario files: a JSON document describing nodes, procedures, the
//! compromised set, transient channels, attacks and an optional routing
//! choice. The loader rejects unknown keys and unknown node names; a message
//! without an explicit `bits` value gets the 64-bit default.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::model::{
    validate_attack, validate_environment, Attack, AttackType, Direction, Environment, NodeId,
    Procedure, ProcedureMessage, RoutingOption, TransientChannel, Violation,
};

/// Prefix selecting a built-in scenario instead of a file path.
pub const BUILTIN_PREFIX: &str = "builtin:";

/// Names accepted after `builtin:`.
pub const BUILTIN_NAMES: [&str; 3] = ["registration", "performance", "aka-transient"];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(
        "unknown builtin scenario '{0}' (available: registration, performance, aka-transient)"
    )]
    UnknownBuiltin(String),
    #[error("invalid scenario:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn default_bits() -> u32 {
    catalog::DEFAULT_MESSAGE_CAPACITY
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageSpec {
    src: NodeId,
    dst: NodeId,
    #[serde(default = "default_bits")]
    bits: u32,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcedureSpec {
    name: String,
    messages: Vec<MessageSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransientSpec {
    first: NodeId,
    last: NodeId,
    via: Vec<NodeId>,
    capacity: u32,
    direction: Direction,
    carrier: String,
    procedure: String,
    anchor_message_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackSpec {
    name: String,
    entry: NodeId,
    execution: NodeId,
    #[serde(default)]
    exit: Option<NodeId>,
    forward_bits: u32,
    #[serde(default)]
    backward_bits: u32,
    attack_type: AttackType,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RoutingSpec {
    pub option: RoutingOption,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    nodes: Vec<NodeId>,
    compromised: Vec<NodeId>,
    procedures: Vec<ProcedureSpec>,
    #[serde(default)]
    transient_channels: Vec<TransientSpec>,
    #[serde(default)]
    attacks: Vec<AttackSpec>,
    #[serde(default)]
    routing: Option<RoutingSpec>,
}

/// An attack with its scenario-local name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedAttack {
    pub name: String,
    pub attack: Attack,
}

/// A fully validated scenario: an environment plus named attacks and an
/// optional routing preference.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub env: Environment,
    pub attacks: Vec<NamedAttack>,
    pub routing: Option<RoutingSpec>,
}

impl Scenario {
    pub fn attack(&self, name: &str) -> Option<&NamedAttack> {
        self.attacks.iter().find(|a| a.name == name)
    }

    pub fn attack_names(&self) -> Vec<&str> {
        self.attacks.iter().map(|a| a.name.as_str()).collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} procedure(s), {} compromised node(s), {} attack(s)",
            self.env.procedures.len(),
            self.env.compromised.len(),
            self.attacks.len()
        )
    }
}

fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let declared: BTreeSet<NodeId> = file.nodes.iter().copied().collect();
    let mut violations = Vec::new();

    let mut check_declared = |entity: String, node: NodeId| {
        if !declared.contains(&node) {
            violations.push(Violation {
                entity,
                message: format!("node {node} not listed under 'nodes'"),
            });
        }
    };
    for p in &file.procedures {
        for (i, m) in p.messages.iter().enumerate() {
            check_declared(format!("procedure '{}' message {i}", p.name), m.src);
            check_declared(format!("procedure '{}' message {i}", p.name), m.dst);
        }
    }
    for c in &file.compromised {
        check_declared("compromised list".to_string(), *c);
    }
    for t in &file.transient_channels {
        check_declared(format!("transient channel ({})", t.carrier), t.first);
        check_declared(format!("transient channel ({})", t.carrier), t.last);
    }

    let mut env = Environment {
        procedures: file
            .procedures
            .into_iter()
            .map(|p| Procedure {
                name: p.name,
                messages: p
                    .messages
                    .into_iter()
                    .map(|m| ProcedureMessage::new(m.src, m.dst, m.bits, &m.label))
                    .collect(),
            })
            .collect(),
        compromised: file.compromised.into_iter().collect(),
        transient_channels: file
            .transient_channels
            .into_iter()
            .map(|t| TransientChannel {
                first: t.first,
                last: t.last,
                via: t.via,
                capacity: t.capacity,
                direction: t.direction,
                carrier: t.carrier,
                procedure: t.procedure,
                anchor_message_index: t.anchor_message_index,
            })
            .collect(),
    };
    catalog::attach_sbi_metadata(&mut env);
    violations.extend(validate_environment(&env));

    let mut seen_names = BTreeSet::new();
    let attacks: Vec<NamedAttack> = file
        .attacks
        .into_iter()
        .map(|a| {
            if !seen_names.insert(a.name.clone()) {
                violations.push(Violation {
                    entity: format!("attack '{}'", a.name),
                    message: "duplicate attack name".to_string(),
                });
            }
            NamedAttack {
                name: a.name,
                attack: Attack {
                    entry: a.entry,
                    execution: a.execution,
                    exit: a.exit,
                    forward_bits: a.forward_bits,
                    backward_bits: a.backward_bits,
                    attack_type: a.attack_type,
                },
            }
        })
        .collect();
    for named in &attacks {
        for v in validate_attack(&named.attack, &env) {
            violations.push(Violation {
                entity: format!("attack '{}': {}", named.name, v.entity),
                message: v.message,
            });
        }
    }

    if !violations.is_empty() {
        return Err(ScenarioError::Invalid(violations));
    }
    Ok(Scenario {
        env,
        attacks: attacks.to_vec(),
        routing: file.routing,
    })
}

fn to_file(scenario: &Scenario) -> ScenarioFile {
    let mut nodes: BTreeSet<NodeId> = scenario.env.known_nodes();
    for a in &scenario.attacks {
        nodes.insert(a.attack.entry);
        nodes.insert(a.attack.execution);
        nodes.extend(a.attack.exit);
    }
    ScenarioFile {
        nodes: nodes.into_iter().collect(),
        compromised: scenario.env.compromised.iter().copied().collect(),
        procedures: scenario
            .env
            .procedures
            .iter()
            .map(|p| ProcedureSpec {
                name: p.name.clone(),
                messages: p
                    .messages
                    .iter()
                    .map(|m| MessageSpec {
                        src: m.source,
                        dst: m.target,
                        bits: m.available_space,
                        label: m.label.clone(),
                    })
                    .collect(),
            })
            .collect(),
        transient_channels: scenario
            .env
            .transient_channels
            .iter()
            .map(|t| TransientSpec {
                first: t.first,
                last: t.last,
                via: t.via.clone(),
                capacity: t.capacity,
                direction: t.direction,
                carrier: t.carrier.clone(),
                procedure: t.procedure.clone(),
                anchor_message_index: t.anchor_message_index,
            })
            .collect(),
        attacks: scenario
            .attacks
            .iter()
            .map(|a| AttackSpec {
                name: a.name.clone(),
                entry: a.attack.entry,
                execution: a.attack.execution,
                exit: a.attack.exit,
                forward_bits: a.attack.forward_bits,
                backward_bits: a.attack.backward_bits,
                attack_type: a.attack.attack_type,
            })
            .collect(),
        routing: scenario.routing.clone(),
    }
}

/// Parses and validates a scenario from JSON text.
pub fn from_json_str(json: &str) -> Result<Scenario, ScenarioError> {
    from_file(serde_json::from_str(json)?)
}

/// Serializes a scenario to pretty JSON, ending with a newline.
pub fn to_json_string(scenario: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&to_file(scenario)).expect("scenario serializes");
    out.push('\n');
    out
}

fn catalog_attacks() -> Vec<NamedAttack> {
    let mut attacks: Vec<NamedAttack> = catalog::attack_catalog()
        .into_iter()
        .map(|e| NamedAttack {
            name: e.name,
            attack: e.attack,
        })
        .collect();
    let aka = catalog::aka_attack_entry();
    attacks.push(NamedAttack {
        name: aka.name,
        attack: aka.attack,
    });
    attacks
}

/// Returns a built-in scenario by name.
pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let env = match name {
        "registration" => catalog::registration_environment(),
        "performance" => catalog::performance_environment(),
        "aka-transient" => catalog::aka_transient_environment(),
        other => return Err(ScenarioError::UnknownBuiltin(other.to_string())),
    };
    Ok(Scenario {
        env,
        attacks: catalog_attacks(),
        routing: None,
    })
}

/// Resolves `builtin:<name>` or a file path to a loaded scenario.
pub fn load(spec: &str) -> Result<Scenario, ScenarioError> {
    match spec.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtin(name),
        None => from_json_str(&std::fs::read_to_string(Path::new(spec))?),
    }
}
