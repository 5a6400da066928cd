//! The 20-bit covert protocol header, keyring, cipher and fragmentation.
//!
//! The header packs eight fields into exactly 20 bits. Bit 1 is the most
//! significant bit on the wire:
//!
//! | Bits  | Field            | Values              | Security  |
//! |-------|------------------|---------------------|-----------|
//! | 1-4   | Key ID           | 1..16               | clear     |
//! | 5-6   | Routing option   | pf 1, rr 2, eerr 3  | clear     |
//! | 7-9   | TTL              | 1..8 hops           | clear     |
//! | 10    | Split indication | not split 1, split 2| encrypted |
//! | 11-13 | Execution point  | node code 1..8      | encrypted |
//! | 14-16 | Attack ID        | 1..8                | encrypted |
//! | 17-18 | Attack type      | code 1..4           | encrypted |
//! | 19-20 | Exit point       | node code 1..4      | encrypted |
//!
//! Every field is listed 1-based; the on-wire encoding is the listed value
//! minus one so each field exactly fills its bit width. Bits 1-9 travel in
//! the clear so any node can route and expire a message; bits 10-20 are
//! transformed by a self-inverse keystream cipher selected by the key ID, so
//! only nodes holding that key learn where a message executes and exits.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::bits::Bits;
use crate::model::{NodeId, RoutingOption};

/// Width of the covert header in bits.
pub const HEADER_BITS: u32 = 20;
/// Smallest message capacity that can carry anything: the header plus one
/// payload bit.
pub const MIN_USABLE_CAPACITY: u32 = HEADER_BITS + 1;

const WORD_MASK: u32 = (1 << HEADER_BITS) - 1;
/// Bits 1-9 (key ID, routing option, TTL).
const CLEAR_MASK: u32 = 0b1111_1111_1000_0000_0000;
/// Bits 10-20 (split, execution point, attack ID, attack type, exit point).
const ENCRYPTED_MASK: u32 = 0b0000_0000_0111_1111_1111;
const ENCRYPTED_BITS: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FivegppError {
    #[error("keyring holds no key with id {0}")]
    MissingKey(u8),
    #[error("field {field} out of range: {value}")]
    FieldOutOfRange { field: &'static str, value: u32 },
    #[error("per-message capacity {0} is below the minimum of {MIN_USABLE_CAPACITY} bits")]
    CapacityTooSmall(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReassembleError {
    #[error("transfer incomplete: {missing} fragment(s) missing")]
    Incomplete { missing: u32 },
    #[error("fragments disagree on the total fragment count")]
    ConflictingTotals,
}

/// Execution-point code table (three bits). The first two codes follow the
/// header definition; the rest cover the remaining registration-procedure
/// nodes. SEPP and NEF have no execution code: they only appear as exits.
pub fn execution_point_code(node: NodeId) -> Option<u8> {
    match node {
        NodeId::Udm => Some(1),
        NodeId::Amf => Some(2),
        NodeId::Gnb => Some(3),
        NodeId::Smf => Some(4),
        NodeId::Ausf => Some(5),
        NodeId::Pcf => Some(6),
        NodeId::Upf => Some(7),
        NodeId::Ue => Some(8),
        NodeId::Sepp | NodeId::Nef => None,
    }
}

pub fn execution_point_node(code: u8) -> Option<NodeId> {
    match code {
        1 => Some(NodeId::Udm),
        2 => Some(NodeId::Amf),
        3 => Some(NodeId::Gnb),
        4 => Some(NodeId::Smf),
        5 => Some(NodeId::Ausf),
        6 => Some(NodeId::Pcf),
        7 => Some(NodeId::Upf),
        8 => Some(NodeId::Ue),
        _ => None,
    }
}

/// Exit-point code table (two bits): UE 1, UPF 2, SEPP 3, NEF 4.
pub fn exit_point_code(node: NodeId) -> Option<u8> {
    match node {
        NodeId::Ue => Some(1),
        NodeId::Upf => Some(2),
        NodeId::Sepp => Some(3),
        NodeId::Nef => Some(4),
        _ => None,
    }
}

pub fn exit_point_node(code: u8) -> Option<NodeId> {
    match code {
        1 => Some(NodeId::Ue),
        2 => Some(NodeId::Upf),
        3 => Some(NodeId::Sepp),
        4 => Some(NodeId::Nef),
        _ => None,
    }
}

/// The decoded covert header. All fields hold the 1-based listed values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GppHeader {
    pub key_id: u8,
    pub routing_option: RoutingOption,
    pub ttl: u8,
    pub split: bool,
    pub execution_point: u8,
    pub attack_id: u8,
    pub attack_type: u8,
    pub exit_point: u8,
}

impl GppHeader {
    pub fn validate(&self) -> Result<(), FivegppError> {
        let checks: [(&'static str, u32, u32, u32); 5] = [
            ("key_id", self.key_id as u32, 1, 16),
            ("ttl", self.ttl as u32, 1, 8),
            ("execution_point", self.execution_point as u32, 1, 8),
            ("attack_id", self.attack_id as u32, 1, 8),
            ("attack_type", self.attack_type as u32, 1, 4),
        ];
        for (field, value, lo, hi) in checks {
            if value < lo || value > hi {
                return Err(FivegppError::FieldOutOfRange { field, value });
            }
        }
        if self.exit_point < 1 || self.exit_point > 4 {
            return Err(FivegppError::FieldOutOfRange {
                field: "exit_point",
                value: self.exit_point as u32,
            });
        }
        Ok(())
    }
}

/// Clear portion of a header, readable without any key. Enough to forward
/// and expire a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClearFields {
    pub key_id: u8,
    pub routing_option: RoutingOption,
    pub ttl: u8,
}

/// Result of decoding a header word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodedHeader {
    /// The receiving node held the key; all fields recovered.
    Full(GppHeader),
    /// The key was absent; only the clear fields are available.
    Undecryptable(ClearFields),
}

/// Symmetric key material deployed on a node, indexed by the 4-bit key ID.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Keyring {
    entries: BTreeMap<u8, Vec<u8>>,
}

impl Keyring {
    pub fn new() -> Self {
        Keyring::default()
    }

    pub fn single(key_id: u8, key: &[u8]) -> Self {
        let mut kr = Keyring::new();
        kr.insert(key_id, key).expect("valid key id");
        kr
    }

    pub fn insert(&mut self, key_id: u8, key: &[u8]) -> Result<(), FivegppError> {
        if !(1..=16).contains(&key_id) {
            return Err(FivegppError::FieldOutOfRange {
                field: "key_id",
                value: key_id as u32,
            });
        }
        self.entries.insert(key_id, key.to_vec());
        Ok(())
    }

    pub fn get(&self, key_id: u8) -> Option<&[u8]> {
        self.entries.get(&key_id).map(Vec::as_slice)
    }

    pub fn contains(&self, key_id: u8) -> bool {
        self.entries.contains_key(&key_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A pluggable self-inverse cipher: the transform XORs the input with a
/// keystream derived from key and salt, so applying it twice with the same
/// parameters restores the input.
pub trait KeystreamCipher {
    fn keystream(&self, key: &[u8], salt: &[u8], nbits: usize) -> Bits;

    fn transform(&self, bits: &Bits, key: &[u8], salt: &[u8]) -> Bits {
        bits.xor(&self.keystream(key, salt, bits.len()))
    }
}

/// Applies the cipher's self-inverse transform.
pub fn cipher_transform(
    cipher: &dyn KeystreamCipher,
    bits: &Bits,
    key: &[u8],
    salt: &[u8],
) -> Bits {
    cipher.transform(bits, key, salt)
}

/// Test and inspection strategy: the keystream is all zeros, so the
/// transform is the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IdentityCipher;

impl KeystreamCipher for IdentityCipher {
    fn keystream(&self, _key: &[u8], _salt: &[u8], nbits: usize) -> Bits {
        Bits::zeros(nbits)
    }
}

/// Default strategy: a keyed pseudorandom generator in counter mode over
/// SHA-256 blocks of `key || salt || counter`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KeyedPrg;

impl KeystreamCipher for KeyedPrg {
    fn keystream(&self, key: &[u8], salt: &[u8], nbits: usize) -> Bits {
        let mut stream = Vec::with_capacity(nbits.div_ceil(8) + 32);
        let mut counter: u32 = 0;
        while stream.len() * 8 < nbits {
            let mut hasher = Sha256::new();
            hasher.update(key);
            hasher.update(salt);
            hasher.update(counter.to_be_bytes());
            stream.extend_from_slice(&hasher.finalize());
            counter += 1;
        }
        Bits::from_bytes(&stream, nbits)
    }
}

/// Cipher selection, suitable for configs and CLI flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CipherKind {
    Identity,
    KeyedPrg,
}

impl CipherKind {
    pub fn cipher(&self) -> &'static dyn KeystreamCipher {
        match self {
            CipherKind::Identity => &IdentityCipher,
            CipherKind::KeyedPrg => &KeyedPrg,
        }
    }
}

impl std::str::FromStr for CipherKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(CipherKind::Identity),
            "keystream" | "prg" => Ok(CipherKind::KeyedPrg),
            other => Err(format!(
                "unknown cipher: {other} (expected identity or keystream)"
            )),
        }
    }
}

impl fmt::Display for CipherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CipherKind::Identity => "identity",
            CipherKind::KeyedPrg => "keystream",
        })
    }
}

fn pack_clear(h: &GppHeader) -> u32 {
    ((h.key_id as u32 - 1) << 16)
        | ((h.routing_option.code() as u32 - 1) << 14)
        | ((h.ttl as u32 - 1) << 11)
}

fn pack_encrypted(h: &GppHeader) -> u32 {
    (u32::from(h.split) << 10)
        | ((h.execution_point as u32 - 1) << 7)
        | ((h.attack_id as u32 - 1) << 4)
        | ((h.attack_type as u32 - 1) << 2)
        | (h.exit_point as u32 - 1)
}

/// Salt for the encrypted header region: the clear header bits followed by
/// the fragment index, so identical headers differ across fragments.
fn header_salt(clear: u32, fragment_index: u32) -> [u8; 6] {
    let clear9 = ((clear & CLEAR_MASK) >> 11) as u16;
    let mut salt = [0u8; 6];
    salt[..2].copy_from_slice(&clear9.to_be_bytes());
    salt[2..].copy_from_slice(&fragment_index.to_be_bytes());
    salt
}

/// Salt for payload encryption: the fragment index.
pub fn payload_salt(fragment_index: u32) -> [u8; 4] {
    fragment_index.to_be_bytes()
}

fn encrypt_region(word: u32, key: &[u8], salt: &[u8], cipher: &dyn KeystreamCipher) -> u32 {
    let region = Bits::from_u64((word & ENCRYPTED_MASK) as u64, ENCRYPTED_BITS);
    let transformed = cipher.transform(&region, key, salt);
    (word & CLEAR_MASK) | (transformed.to_u64() as u32)
}

/// Packs a header into its 20-bit wire word, enciphering bits 10-20 with the
/// key the header names. Uses fragment index 0; fragmented transfers salt
/// each fragment's header with its own index via [`encode_header_salted`].
pub fn encode_header(
    h: &GppHeader,
    keyring: &Keyring,
    cipher: &dyn KeystreamCipher,
) -> Result<u32, FivegppError> {
    encode_header_salted(h, keyring, cipher, 0)
}

pub fn encode_header_salted(
    h: &GppHeader,
    keyring: &Keyring,
    cipher: &dyn KeystreamCipher,
    fragment_index: u32,
) -> Result<u32, FivegppError> {
    h.validate()?;
    let key = keyring
        .get(h.key_id)
        .ok_or(FivegppError::MissingKey(h.key_id))?;
    let clear = pack_clear(h);
    let word = clear | pack_encrypted(h);
    Ok(encrypt_region(
        word,
        key,
        &header_salt(clear, fragment_index),
        cipher,
    ))
}

/// Unpacks a 20-bit wire word. The clear region always decodes; the
/// encrypted region is recovered only when the keyring holds the named key,
/// otherwise the clear fields alone are returned so the node can still
/// forward the message.
pub fn decode_header(
    word: u32,
    keyring: &Keyring,
    cipher: &dyn KeystreamCipher,
) -> Result<DecodedHeader, FivegppError> {
    decode_header_salted(word, keyring, cipher, 0)
}

pub fn decode_header_salted(
    word: u32,
    keyring: &Keyring,
    cipher: &dyn KeystreamCipher,
    fragment_index: u32,
) -> Result<DecodedHeader, FivegppError> {
    if word > WORD_MASK {
        return Err(FivegppError::FieldOutOfRange {
            field: "word",
            value: word,
        });
    }
    let key_id = ((word >> 16) & 0xF) as u8 + 1;
    let routing_wire = ((word >> 14) & 0x3) as u8;
    let routing_option =
        RoutingOption::from_code(routing_wire + 1).ok_or(FivegppError::FieldOutOfRange {
            field: "routing_option",
            value: routing_wire as u32 + 1,
        })?;
    let ttl = ((word >> 11) & 0x7) as u8 + 1;

    let Some(key) = keyring.get(key_id) else {
        return Ok(DecodedHeader::Undecryptable(ClearFields {
            key_id,
            routing_option,
            ttl,
        }));
    };

    let clear = word & CLEAR_MASK;
    let deciphered = encrypt_region(word, key, &header_salt(clear, fragment_index), cipher);
    let header = GppHeader {
        key_id,
        routing_option,
        ttl,
        split: (deciphered >> 10) & 1 == 1,
        execution_point: ((deciphered >> 7) & 0x7) as u8 + 1,
        attack_id: ((deciphered >> 4) & 0x7) as u8 + 1,
        attack_type: ((deciphered >> 2) & 0x3) as u8 + 1,
        exit_point: (deciphered & 0x3) as u8 + 1,
    };
    Ok(DecodedHeader::Full(header))
}

/// One piece of a fragmented transfer. Every fragment carries the full
/// 20-bit header, which is why the minimum usable message capacity is 21
/// bits. The index and total ride as transfer metadata: the header's single
/// split bit has no room for sequence numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub header: GppHeader,
    pub payload_bits: Bits,
    pub fragment_index: u32,
    pub total_fragments: u32,
}

impl Fragment {
    /// Bits this fragment occupies inside a carrier message.
    pub fn wire_len(&self) -> u32 {
        HEADER_BITS + self.payload_bits.len() as u32
    }
}

/// Splits a payload into fragments of at most `per_message_capacity` bits
/// each, header included. An empty payload yields no fragments.
pub fn fragment_payload(
    payload: &Bits,
    per_message_capacity: u32,
    header: &GppHeader,
) -> Result<Vec<Fragment>, FivegppError> {
    if per_message_capacity < MIN_USABLE_CAPACITY {
        return Err(FivegppError::CapacityTooSmall(per_message_capacity));
    }
    if payload.is_empty() {
        return Ok(Vec::new());
    }
    let chunk = (per_message_capacity - HEADER_BITS) as usize;
    let chunks = payload.chunks(chunk);
    let total = chunks.len() as u32;
    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(i, payload_bits)| Fragment {
            header: GppHeader {
                split: total > 1,
                ..*header
            },
            payload_bits,
            fragment_index: i as u32,
            total_fragments: total,
        })
        .collect())
}

/// Concatenates fragment payloads in index order once all pieces of a
/// transfer are present. Arrival order does not matter.
pub fn reassemble(fragments: &[Fragment]) -> Result<Bits, ReassembleError> {
    let Some(first) = fragments.first() else {
        return Ok(Bits::new());
    };
    let total = first.total_fragments;
    let mut by_index: BTreeMap<u32, &Bits> = BTreeMap::new();
    for frag in fragments {
        if frag.total_fragments != total || frag.fragment_index >= total {
            return Err(ReassembleError::ConflictingTotals);
        }
        by_index
            .entry(frag.fragment_index)
            .or_insert(&frag.payload_bits);
    }
    let missing = total - by_index.len() as u32;
    if missing > 0 {
        return Err(ReassembleError::Incomplete { missing });
    }
    let mut out = Bits::new();
    for payload in by_index.values() {
        out.extend(payload);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use super::*;

    fn full_keyring() -> Keyring {
        let mut kr = Keyring::new();
        for id in 1..=16 {
            kr.insert(id, &[id, 0xA5, id]).unwrap();
        }
        kr
    }

    fn sample_header() -> GppHeader {
        GppHeader {
            key_id: 1,
            routing_option: RoutingOption::PathFlooding,
            ttl: 1,
            split: false,
            execution_point: 1,
            attack_id: 1,
            attack_type: 1,
            exit_point: 1,
        }
    }

    #[test]
    fn all_minimum_fields_encode_to_zero_under_identity() {
        let word = encode_header(&sample_header(), &full_keyring(), &IdentityCipher).unwrap();
        assert_eq!(word, 0);
    }

    #[test]
    fn hand_packed_word_matches() {
        // key 2, rr, ttl 3, split, exec 2, attack 5, type 2, exit 4:
        // 0001 01 010 1 001 100 01 11 = 0x154C7 with the value-minus-one rule.
        let h = GppHeader {
            key_id: 2,
            routing_option: RoutingOption::RoundRobin,
            ttl: 3,
            split: true,
            execution_point: 2,
            attack_id: 5,
            attack_type: 2,
            exit_point: 4,
        };
        let word = encode_header(&h, &full_keyring(), &IdentityCipher).unwrap();
        assert_eq!(word, 0x154C7);
    }

    #[test]
    fn round_trip_with_keyed_prg() {
        let kr = full_keyring();
        let h = GppHeader {
            key_id: 7,
            routing_option: RoutingOption::WeightedRoundRobin,
            ttl: 8,
            split: true,
            execution_point: 3,
            attack_id: 8,
            attack_type: 4,
            exit_point: 2,
        };
        let word = encode_header_salted(&h, &kr, &KeyedPrg, 5).unwrap();
        let decoded = decode_header_salted(word, &kr, &KeyedPrg, 5).unwrap();
        assert_eq!(decoded, DecodedHeader::Full(h));
    }

    #[test]
    fn decode_without_key_yields_clear_fields_only() {
        let kr = full_keyring();
        let h = GppHeader {
            key_id: 3,
            routing_option: RoutingOption::RoundRobin,
            ttl: 5,
            ..sample_header()
        };
        let word = encode_header(&h, &kr, &KeyedPrg).unwrap();
        let poor = Keyring::single(9, b"other");
        match decode_header(word, &poor, &KeyedPrg).unwrap() {
            DecodedHeader::Undecryptable(clear) => {
                assert_eq!(clear.key_id, 3);
                assert_eq!(clear.routing_option, RoutingOption::RoundRobin);
                assert_eq!(clear.ttl, 5);
            }
            other => panic!("expected undecryptable, got {other:?}"),
        }
    }

    #[test]
    fn reserved_routing_code_is_rejected() {
        // Wire routing value 3 (bits 5-6 set) encodes the reserved code 4.
        let word = 0b0000_1100_0000_0000_0000_u32;
        assert!(matches!(
            decode_header(word, &full_keyring(), &IdentityCipher),
            Err(FivegppError::FieldOutOfRange {
                field: "routing_option",
                ..
            })
        ));
    }

    #[test]
    fn missing_key_fails_encode() {
        let kr = Keyring::single(2, b"k");
        assert_eq!(
            encode_header(&sample_header(), &kr, &IdentityCipher),
            Err(FivegppError::MissingKey(1))
        );
    }

    #[test]
    fn flipping_encrypted_bits_never_changes_clear_fields() {
        let kr = full_keyring();
        let h = GppHeader {
            key_id: 4,
            routing_option: RoutingOption::PathFlooding,
            ttl: 6,
            split: true,
            execution_point: 5,
            attack_id: 2,
            attack_type: 3,
            exit_point: 2,
        };
        let word = encode_header(&h, &kr, &IdentityCipher).unwrap();
        for bit in 0..=10 {
            let flipped = word ^ (1 << bit);
            match decode_header(flipped, &kr, &IdentityCipher).unwrap() {
                DecodedHeader::Full(d) => {
                    assert_eq!(d.key_id, h.key_id);
                    assert_eq!(d.routing_option, h.routing_option);
                    assert_eq!(d.ttl, h.ttl);
                }
                other => panic!("unexpected decode: {other:?}"),
            }
        }
    }

    #[test]
    fn fragment_sizes_match_capacity_arithmetic() {
        let mut rng = StdRng::seed_from_u64(7);
        let payload = Bits::random(128, &mut rng);
        let frags = fragment_payload(&payload, 64, &sample_header()).unwrap();
        let sizes: Vec<usize> = frags.iter().map(|f| f.payload_bits.len()).collect();
        assert_eq!(sizes, vec![44, 44, 40]);
        assert!(frags.iter().all(|f| f.header.split));
        assert!(frags.iter().all(|f| f.wire_len() <= 64));
        assert_eq!(reassemble(&frags).unwrap(), payload);
    }

    #[test]
    fn one_bit_payload_fits_the_minimum_capacity() {
        let payload = Bits::from_u64(1, 1);
        let frags = fragment_payload(&payload, MIN_USABLE_CAPACITY, &sample_header()).unwrap();
        assert_eq!(frags.len(), 1);
        assert!(!frags[0].header.split);
        assert_eq!(
            fragment_payload(&payload, 20, &sample_header()),
            Err(FivegppError::CapacityTooSmall(20))
        );
    }

    #[test]
    fn empty_payload_yields_no_fragments() {
        assert_eq!(
            fragment_payload(&Bits::new(), 64, &sample_header()),
            Ok(Vec::new())
        );
    }

    #[test]
    fn reassemble_reports_missing_and_conflicting_fragments() {
        let mut rng = StdRng::seed_from_u64(8);
        let payload = Bits::random(128, &mut rng);
        let frags = fragment_payload(&payload, 64, &sample_header()).unwrap();

        let two = vec![frags[0].clone(), frags[2].clone()];
        assert_eq!(
            reassemble(&two),
            Err(ReassembleError::Incomplete { missing: 1 })
        );

        let mut conflicting = frags.clone();
        conflicting[1].total_fragments = 4;
        assert_eq!(
            reassemble(&conflicting),
            Err(ReassembleError::ConflictingTotals)
        );

        let mut shuffled = frags;
        shuffled.reverse();
        assert_eq!(reassemble(&shuffled).unwrap(), payload);
    }

    #[test]
    fn distinct_keys_produce_distinct_transforms() {
        let mut rng = StdRng::seed_from_u64(9);
        let input = Bits::random(64, &mut rng);
        for i in 0..100u32 {
            let k1 = i.to_be_bytes();
            let k2 = (i + 1000).to_be_bytes();
            let out1 = cipher_transform(&KeyedPrg, &input, &k1, b"salt");
            let out2 = cipher_transform(&KeyedPrg, &input, &k2, b"salt");
            assert_ne!(out1, out2, "keys {i} and {} collided", i + 1000);
        }
    }

    proptest! {
        #[test]
        fn cipher_transform_is_an_involution(
            payload in prop::collection::vec(any::<bool>(), 1..256),
            key in prop::collection::vec(any::<u8>(), 1..32),
            salt in prop::collection::vec(any::<u8>(), 0..16),
        ) {
            let bits: Bits = payload.into_iter().collect();
            let once = cipher_transform(&KeyedPrg, &bits, &key, &salt);
            let twice = cipher_transform(&KeyedPrg, &once, &key, &salt);
            prop_assert_eq!(twice, bits);
        }

        #[test]
        fn fragmentation_preserves_payload(
            len in 1usize..400,
            capacity in MIN_USABLE_CAPACITY..200u32,
            seed in any::<u64>(),
        ) {
            let mut rng = StdRng::seed_from_u64(seed);
            let payload = Bits::random(len, &mut rng);
            let frags = fragment_payload(&payload, capacity, &sample_header()).unwrap();
            let expected = (len as u32).div_ceil(capacity - HEADER_BITS);
            prop_assert_eq!(frags.len() as u32, expected);
            prop_assert!(frags.iter().all(|f| f.wire_len() <= capacity));
            prop_assert!(frags.iter().all(|f| f.header.split == (expected > 1)));
            prop_assert_eq!(reassemble(&frags).unwrap(), payload);
        }
    }
}
