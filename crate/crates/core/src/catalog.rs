//! Built-in scenario data: the canonical registration procedure, the attack
//! parameter sets, example headers and the AKA transient channels.
//!
//! Real deployments implement registration with slight variations, so the
//! message ordering here is fixed and versioned: simulation counts regress
//! against one catalog version instead of drifting with every edit. Scenario
//! files can override everything.

use std::collections::BTreeSet;

use crate::fivegpp::GppHeader;
use crate::model::{
    Attack, AttackType, Direction, Environment, NodeId, Procedure, ProcedureMessage, RoutingOption,
    SbiParameterCounts, TransientChannel,
};

/// Version tag of the built-in data. Pinned by regression tests.
pub const CATALOG_VERSION: &str = "v1";

/// Default embedding space per registration message, in bits.
pub const DEFAULT_MESSAGE_CAPACITY: u32 = 64;

/// Parameter counts for the SBI messages of the registration procedure,
/// attached to messages as metadata; absent response parameters are
/// recorded as zero.
const SBI_PARAMETER_COUNTS: [(&str, SbiParameterCounts); 6] = [
    (
        "Nudm_UECM_Registration",
        SbiParameterCounts {
            request_required: 7,
            request_optional: 2,
            response_required: 1,
            response_optional: 0,
        },
    ),
    (
        "Nudm_SDM_Get",
        SbiParameterCounts {
            request_required: 3,
            request_optional: 1,
            response_required: 1,
            response_optional: 0,
        },
    ),
    (
        "Nudm_SDM_Subscribe",
        SbiParameterCounts {
            request_required: 2,
            request_optional: 1,
            response_required: 0,
            response_optional: 0,
        },
    ),
    (
        "Npcf_AMPolicyControl_Create",
        SbiParameterCounts {
            request_required: 11,
            request_optional: 0,
            response_required: 2,
            response_optional: 5,
        },
    ),
    (
        "Nsmf_PDUSession_Create",
        SbiParameterCounts {
            request_required: 12,
            request_optional: 6,
            response_required: 10,
            response_optional: 6,
        },
    ),
    (
        "Nudm_SDM_Info",
        SbiParameterCounts {
            request_required: 3,
            request_optional: 1,
            response_required: 1,
            response_optional: 0,
        },
    ),
];

/// Attaches SBI parameter metadata to every message whose label names a
/// known SBI message. Applied to built-ins and loaded scenarios alike so
/// environments compare equal after a save/load round trip.
pub fn attach_sbi_metadata(env: &mut Environment) {
    for proc in &mut env.procedures {
        for msg in &mut proc.messages {
            msg.sbi = SBI_PARAMETER_COUNTS
                .iter()
                .find(|(name, _)| msg.label.starts_with(name))
                .map(|(_, counts)| *counts);
        }
    }
}

/// The canonical registration procedure: initial request and forwarding,
/// identity exchange, the AKA and SMC sub-procedures, then the status
/// updates towards UDM, PCF, SMF (with the N4 user-plane configuration) and
/// the closing accept/complete exchange.
pub fn registration_procedure() -> Procedure {
    use NodeId::*;
    let cap = DEFAULT_MESSAGE_CAPACITY;
    let m = |src, dst, label| ProcedureMessage::new(src, dst, cap, label);
    Procedure {
        name: "registration".to_string(),
        messages: vec![
            m(Ue, Gnb, "Registration Request"),
            m(Gnb, Amf, "Initial UE Message (Registration Request)"),
            m(Amf, Ue, "Identity Request"),
            m(Ue, Amf, "Identity Response"),
            m(Amf, Ausf, "Nausf_UEAuthentication_Authenticate Request"),
            m(Ausf, Udm, "Nudm_UEAuthentication_Get Request"),
            m(Udm, Ausf, "Nudm_UEAuthentication_Get Response"),
            m(Ausf, Amf, "Nausf_UEAuthentication_Authenticate Response"),
            m(Amf, Ue, "Authentication Request"),
            m(Ue, Amf, "Authentication Response"),
            m(Amf, Ue, "Security Mode Command"),
            m(Ue, Amf, "Security Mode Complete"),
            m(Amf, Udm, "Nudm_UECM_Registration"),
            m(Udm, Amf, "Nudm_UECM_Registration Response"),
            m(Amf, Pcf, "Npcf_AMPolicyControl_Create"),
            m(Pcf, Amf, "Npcf_AMPolicyControl_Create Response"),
            m(Amf, Smf, "Nsmf_PDUSession_Create"),
            m(Smf, Amf, "Nsmf_PDUSession_Create Response"),
            m(Smf, Upf, "PFCP Session Establishment Request"),
            m(Upf, Smf, "PFCP Session Establishment Response"),
            m(Amf, Udm, "Nudm_SDM_Get"),
            m(Amf, Udm, "Nudm_SDM_Subscribe"),
            m(Amf, Ue, "Registration Accept"),
            m(Amf, Pcf, "Npcf_AMPolicyControl_Update"),
            m(Ue, Amf, "Registration Complete"),
            m(Amf, Udm, "Nudm_SDM_Info"),
        ],
    }
}

/// An attack plus the fixed covert-header fields that describe it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackCatalogEntry {
    pub name: String,
    pub attack: Attack,
    /// Fixed header fields for this attack; key, routing, TTL and split are
    /// scenario choices and carry defaults here.
    pub header_template: GppHeader,
    pub notes: String,
}

fn template(execution_point: u8, attack_type: u8, exit_point: u8) -> GppHeader {
    GppHeader {
        key_id: 1,
        routing_option: RoutingOption::PathFlooding,
        ttl: 8,
        split: false,
        execution_point,
        attack_id: 1,
        attack_type,
        exit_point,
    }
}

fn entry(
    name: &str,
    attack: Attack,
    header_template: GppHeader,
    notes: &str,
) -> AttackCatalogEntry {
    AttackCatalogEntry {
        name: name.to_string(),
        attack,
        header_template,
        notes: notes.to_string(),
    }
}

/// The example attacks: long-term-key extraction at the UDM (with subscriber
/// or IP exit addressing), UE localization via the AMF, and public-warning
/// abuse at the base station.
pub fn attack_catalog() -> Vec<AttackCatalogEntry> {
    use NodeId::*;
    vec![
        entry(
            "A1",
            Attack {
                entry: Ue,
                execution: Udm,
                exit: Some(Ue),
                forward_bits: 128,
                backward_bits: 192,
                attack_type: AttackType::UdmKeyExtraction,
            },
            template(1, 1, 1),
            "Key extraction: 64-bit target SUPI plus 64-bit exit SUPI forward; \
             128-bit key plus exit SUPI backward.",
        ),
        entry(
            "A1-IPv4",
            Attack {
                entry: Ue,
                execution: Udm,
                exit: Some(Upf),
                forward_bits: 96,
                backward_bits: 160,
                attack_type: AttackType::UdmKeyExtraction,
            },
            template(1, 1, 2),
            "Key extraction with an IPv4 exit address: 64 + 32 bits forward, \
             128 + 32 bits backward.",
        ),
        entry(
            "A1-IPv6",
            Attack {
                entry: Ue,
                execution: Udm,
                exit: Some(Upf),
                forward_bits: 192,
                backward_bits: 256,
                attack_type: AttackType::UdmKeyExtraction,
            },
            template(1, 1, 2),
            "Key extraction with an IPv6 exit address: 64 + 128 bits forward, \
             128 + 128 bits backward.",
        ),
        entry(
            "A2",
            Attack {
                entry: Upf,
                execution: Amf,
                exit: Some(Ue),
                forward_bits: 96,
                backward_bits: 112,
                attack_type: AttackType::UeLocalization,
            },
            template(2, 3, 1),
            "UE localization: the AMF abuses the genuine localization \
             procedure on behalf of the attacker; the location service is \
             modeled as an opaque execution effect.",
        ),
        entry(
            "A3",
            Attack {
                entry: Ue,
                execution: Gnb,
                exit: None,
                forward_bits: 32,
                backward_bits: 0,
                attack_type: AttackType::PwsAbuse,
            },
            // No result travels back; the exit field is unused and left at
            // its lowest code.
            template(3, 2, 1),
            "Public-warning abuse: a 22-32 bit cell identifier forward, \
             nothing backward.",
        ),
    ]
}

/// The key-extraction variant that rides the AKA transient channels: the
/// encrypted 64-bit target identifier travels in the SUCI MAC tag, the
/// result (key plus target identifier) in the RAND and AUTN parameters.
pub fn aka_attack_entry() -> AttackCatalogEntry {
    entry(
        "A1-AKA",
        Attack {
            entry: NodeId::Ue,
            execution: NodeId::Udm,
            exit: Some(NodeId::Ue),
            forward_bits: 64,
            backward_bits: 192,
            attack_type: AttackType::UdmKeyExtraction,
        },
        template(1, 1, 1),
        "Key extraction over transient carriers; only the UDM needs to be \
         compromised.",
    )
}

/// The transient channels of the AKA sub-procedure: the SUCI MAC tag is
/// forwarded unmodified from the UE to the UDM, and RAND plus AUTN travel
/// unmodified from the UDM back to the UE. Intermediate nodes need not be
/// compromised.
pub fn aka_transient_channels() -> Vec<TransientChannel> {
    use NodeId::*;
    vec![
        TransientChannel {
            first: Ue,
            last: Udm,
            via: vec![Gnb, Amf, Ausf],
            capacity: 64,
            direction: Direction::Forward,
            carrier: "SUCI MAC tag".to_string(),
            procedure: "registration".to_string(),
            anchor_message_index: 0,
        },
        TransientChannel {
            first: Udm,
            last: Ue,
            via: vec![Ausf, Amf, Gnb],
            capacity: 256,
            direction: Direction::Backward,
            carrier: "RAND+AUTN".to_string(),
            procedure: "registration".to_string(),
            anchor_message_index: 6,
        },
    ]
}

fn environment(compromised: &[NodeId], transient: Vec<TransientChannel>) -> Environment {
    let mut env = Environment {
        procedures: vec![registration_procedure()],
        compromised: compromised.iter().copied().collect::<BTreeSet<_>>(),
        transient_channels: transient,
    };
    attach_sbi_metadata(&mut env);
    env
}

/// The feasibility-demo environment: UE attacker equipment plus compromised
/// AMF, AUSF, UDM and SMF.
pub fn registration_environment() -> Environment {
    use NodeId::*;
    environment(&[Ue, Amf, Ausf, Udm, Smf], Vec::new())
}

/// The performance-sweep environment: compromised gNB, AMF, AUSF, UDM and
/// SMF; entry and exit equipment comes from each attack.
pub fn performance_environment() -> Environment {
    use NodeId::*;
    environment(&[Gnb, Amf, Ausf, Udm, Smf], Vec::new())
}

/// The transient-messaging case study: only the UDM is compromised and the
/// AKA transient channels bridge the uncompromised middle.
pub fn aka_transient_environment() -> Environment {
    environment(&[NodeId::Udm], aka_transient_channels())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_environment;

    #[test]
    fn registration_covers_exactly_the_expected_nodes() {
        use NodeId::*;
        let env = registration_environment();
        let expected: BTreeSet<NodeId> = [Ue, Gnb, Amf, Smf, Pcf, Upf, Ausf, Udm]
            .into_iter()
            .collect();
        assert_eq!(env.known_nodes(), expected);
    }

    #[test]
    fn sbi_metadata_is_attached_from_the_parameter_table() {
        let env = registration_environment();
        let msg = env.procedures[0]
            .messages
            .iter()
            .find(|m| m.label == "Nsmf_PDUSession_Create")
            .unwrap();
        let counts = msg.sbi.unwrap();
        assert_eq!(counts.request_required, 12);
        assert_eq!(counts.request_optional, 6);
        assert_eq!(counts.response_required, 10);
        assert_eq!(counts.response_optional, 6);
        let reg = env.procedures[0]
            .messages
            .iter()
            .find(|m| m.label == "Nudm_UECM_Registration")
            .unwrap();
        assert_eq!(reg.sbi.unwrap().request_required, 7);
    }

    #[test]
    fn aka_runs_before_the_udm_status_update() {
        let proc = registration_procedure();
        let auth = proc
            .messages
            .iter()
            .position(|m| m.label.contains("UEAuthentication"))
            .unwrap();
        let uecm = proc
            .messages
            .iter()
            .position(|m| m.label == "Nudm_UECM_Registration")
            .unwrap();
        assert!(auth < uecm);
    }

    #[test]
    fn every_interface_class_is_present() {
        use NodeId::*;
        let proc = registration_procedure();
        let has_pair = |a: NodeId, b: NodeId| {
            proc.messages
                .iter()
                .any(|m| (m.source == a && m.target == b) || (m.source == b && m.target == a))
        };
        assert!(has_pair(Ue, Amf), "N1 messages missing");
        assert!(has_pair(Ue, Gnb), "Uu messages missing");
        assert!(has_pair(Gnb, Amf), "N2 messages missing");
        assert!(
            has_pair(Amf, Udm) && has_pair(Amf, Ausf) && has_pair(Amf, Pcf) && has_pair(Amf, Smf),
            "SBI messages missing"
        );
        assert!(has_pair(Smf, Upf), "N4 messages missing");
    }

    #[test]
    fn builtin_environments_validate_cleanly() {
        for env in [
            registration_environment(),
            performance_environment(),
            aka_transient_environment(),
        ] {
            assert_eq!(validate_environment(&env), Vec::new());
        }
    }

    #[test]
    fn attack_parameters_match_the_catalog_table() {
        let attacks = attack_catalog();
        let a1 = &attacks.iter().find(|e| e.name == "A1").unwrap().attack;
        assert_eq!((a1.forward_bits, a1.backward_bits), (128, 192));
        assert_eq!(
            (a1.entry, a1.execution, a1.exit),
            (NodeId::Ue, NodeId::Udm, Some(NodeId::Ue))
        );

        let a2 = &attacks.iter().find(|e| e.name == "A2").unwrap().attack;
        assert_eq!(
            (a2.entry, a2.execution, a2.exit),
            (NodeId::Upf, NodeId::Amf, Some(NodeId::Ue))
        );
        assert_eq!((a2.forward_bits, a2.backward_bits), (96, 112));

        let a3 = &attacks.iter().find(|e| e.name == "A3").unwrap().attack;
        assert_eq!(a3.exit, None);
        assert_eq!(a3.backward_bits, 0);

        // IPv4 exit: 64-bit subscriber id plus a 32-bit address.
        let v4 = &attacks.iter().find(|e| e.name == "A1-IPv4").unwrap().attack;
        assert_eq!(v4.forward_bits, 64 + 32);
    }

    #[test]
    fn a1_header_template_names_udm_execution_and_ue_exit() {
        let attacks = attack_catalog();
        let t = attacks
            .iter()
            .find(|e| e.name == "A1")
            .unwrap()
            .header_template;
        assert_eq!((t.execution_point, t.attack_type, t.exit_point), (1, 1, 1));
    }

    #[test]
    fn transient_channels_have_the_documented_capacities() {
        let channels = aka_transient_channels();
        let fwd = channels
            .iter()
            .find(|c| c.direction == Direction::Forward)
            .unwrap();
        assert_eq!(fwd.capacity, 64);
        assert_eq!((fwd.first, fwd.last), (NodeId::Ue, NodeId::Udm));
        let bwd = channels
            .iter()
            .find(|c| c.direction == Direction::Backward)
            .unwrap();
        assert_eq!(bwd.capacity, 256);
        // Room for two extracted 128-bit keys at once.
        assert_eq!(bwd.capacity / 128, 2);
    }
}
