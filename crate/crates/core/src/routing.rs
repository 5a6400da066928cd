//! Path selection and per-node receive handling.
//!
//! Three disciplines: path flooding sends every fragment on every available
//! path, round robin uses the paths in turn, and weighted round robin draws
//! one path per fragment from configured weights. On the receive side every
//! node decrements the TTL before forwarding and suppresses duplicates it
//! has already stored, keyed by attack, direction and fragment index. TTL
//! alone bounds loop length; duplicate suppression keeps flooding from
//! multiplying traffic combinatorially and never changes feasibility.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore};

use crate::fivegpp::Fragment;
use crate::model::{Direction, NodeId, RoutingOption};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RoutingError {
    #[error("no candidate path available")]
    NoPath,
    #[error("bad weights: {0}")]
    BadWeights(String),
}

/// Why a node refused a fragment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    TtlExpired,
    Duplicate,
}

/// What a node does with an arriving fragment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReceiveOutcome {
    /// The node is the direction's terminal and holds the key: keep it.
    Consume,
    /// Store and forward with the decremented TTL.
    Forward {
        ttl: u8,
    },
    Drop(DropReason),
}

/// Per-arrival context the routing layer cannot read off the fragment
/// itself: the travel direction, that direction's terminal node, and whether
/// the receiving node holds the key named in the header.
#[derive(Clone, Copy, Debug)]
pub struct ReceiveContext {
    pub direction: Direction,
    pub terminal: NodeId,
    pub node_has_key: bool,
}

/// Mutable routing state of one simulation run: the round-robin cursors per
/// origin and attack, the path weights, and each node's duplicate store.
#[derive(Clone, Debug, Default)]
pub struct RoutingState {
    pub option: RoutingOption,
    weights: Option<Vec<f64>>,
    rr_cursors: BTreeMap<(NodeId, u8), usize>,
    seen: BTreeMap<NodeId, BTreeSet<(u8, Direction, u32)>>,
}

impl RoutingState {
    /// Weights apply to weighted round robin only; they must be non-negative
    /// and sum to one (within 1e-9). Without weights the draw is uniform.
    pub fn new(option: RoutingOption, weights: Option<Vec<f64>>) -> Result<Self, RoutingError> {
        if let Some(w) = &weights {
            if w.is_empty() {
                return Err(RoutingError::BadWeights("empty weight list".to_string()));
            }
            if w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                return Err(RoutingError::BadWeights(
                    "weights must be finite and non-negative".to_string(),
                ));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(RoutingError::BadWeights(format!(
                    "weights sum to {sum}, expected 1"
                )));
            }
        }
        Ok(RoutingState {
            option,
            weights,
            rr_cursors: BTreeMap::new(),
            seen: BTreeMap::new(),
        })
    }

    /// Picks the path(s) a fragment departs on from `node`: all of them under
    /// flooding, the cursor's path under round robin (cursor advances and
    /// wraps), or one weighted draw from the seeded source.
    pub fn select_paths(
        &mut self,
        node: NodeId,
        attack_id: u8,
        candidates: &[Vec<NodeId>],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Vec<NodeId>>, RoutingError> {
        if candidates.is_empty() {
            return Err(RoutingError::NoPath);
        }
        match self.option {
            RoutingOption::PathFlooding => Ok(candidates.to_vec()),
            RoutingOption::RoundRobin => {
                let cursor = self.rr_cursors.entry((node, attack_id)).or_insert(0);
                let path = candidates[*cursor % candidates.len()].clone();
                *cursor = (*cursor + 1) % candidates.len();
                Ok(vec![path])
            }
            RoutingOption::WeightedRoundRobin => {
                let uniform = vec![1.0 / candidates.len() as f64; candidates.len()];
                let weights = match &self.weights {
                    Some(w) => {
                        if w.len() != candidates.len() {
                            return Err(RoutingError::BadWeights(format!(
                                "{} weights for {} candidate paths",
                                w.len(),
                                candidates.len()
                            )));
                        }
                        w
                    }
                    None => &uniform,
                };
                let draw: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = candidates.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if draw < acc {
                        chosen = i;
                        break;
                    }
                }
                Ok(vec![candidates[chosen].clone()])
            }
        }
    }

    /// Handles one fragment arriving at `node`. Outcomes are values, never
    /// errors: duplicates and expired fragments are normal flooding debris.
    pub fn on_receive(
        &mut self,
        node: NodeId,
        frag: &Fragment,
        ctx: &ReceiveContext,
    ) -> ReceiveOutcome {
        let key = (frag.header.attack_id, ctx.direction, frag.fragment_index);
        let seen = self.seen.entry(node).or_default();
        if !seen.insert(key) {
            return ReceiveOutcome::Drop(DropReason::Duplicate);
        }
        if node == ctx.terminal && ctx.node_has_key {
            return ReceiveOutcome::Consume;
        }
        let ttl = frag.header.ttl - 1;
        if ttl == 0 {
            return ReceiveOutcome::Drop(DropReason::TtlExpired);
        }
        ReceiveOutcome::Forward { ttl }
    }

    /// Marks a fragment as seen at its origin so flooded copies bouncing
    /// back are dropped as duplicates.
    pub fn mark_seen(
        &mut self,
        node: NodeId,
        attack_id: u8,
        direction: Direction,
        fragment_index: u32,
    ) {
        self.seen
            .entry(node)
            .or_default()
            .insert((attack_id, direction, fragment_index));
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fivegpp::GppHeader;
    use crate::Bits;

    fn paths(n: usize) -> Vec<Vec<NodeId>> {
        use NodeId::*;
        let vias = [Amf, Ausf, Smf, Gnb];
        (0..n).map(|i| vec![Ue, vias[i], Udm]).collect()
    }

    fn frag(ttl: u8, index: u32) -> Fragment {
        Fragment {
            header: GppHeader {
                key_id: 1,
                routing_option: RoutingOption::PathFlooding,
                ttl,
                split: false,
                execution_point: 1,
                attack_id: 1,
                attack_type: 1,
                exit_point: 1,
            },
            payload_bits: Bits::from_u64(0b1010, 4),
            fragment_index: index,
            total_fragments: 4,
        }
    }

    fn ctx(terminal: NodeId, has_key: bool) -> ReceiveContext {
        ReceiveContext {
            direction: Direction::Forward,
            terminal,
            node_has_key: has_key,
        }
    }

    #[test]
    fn flooding_selects_every_path() {
        let mut state = RoutingState::new(RoutingOption::PathFlooding, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let candidates = paths(3);
        let selected = state
            .select_paths(NodeId::Ue, 1, &candidates, &mut rng)
            .unwrap();
        assert_eq!(selected, candidates);
    }

    #[test]
    fn round_robin_cycles_through_paths() {
        let mut state = RoutingState::new(RoutingOption::RoundRobin, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let candidates = paths(2);
        let picks: Vec<_> = (0..4)
            .map(|_| {
                state
                    .select_paths(NodeId::Ue, 1, &candidates, &mut rng)
                    .unwrap()[0]
                    .clone()
            })
            .collect();
        assert_eq!(
            picks,
            vec![
                candidates[0].clone(),
                candidates[1].clone(),
                candidates[0].clone(),
                candidates[1].clone()
            ]
        );
    }

    #[test]
    fn round_robin_distributes_exactly_evenly() {
        let mut state = RoutingState::new(RoutingOption::RoundRobin, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let candidates = paths(3);
        let mut counts = [0usize; 3];
        for _ in 0..3 * 7 {
            let p = &state
                .select_paths(NodeId::Ue, 1, &candidates, &mut rng)
                .unwrap()[0];
            let idx = candidates.iter().position(|c| c == p).unwrap();
            counts[idx] += 1;
        }
        assert_eq!(counts, [7, 7, 7]);
    }

    #[test]
    fn separate_cursors_per_origin_and_attack() {
        let mut state = RoutingState::new(RoutingOption::RoundRobin, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let candidates = paths(2);
        let first = state
            .select_paths(NodeId::Ue, 1, &candidates, &mut rng)
            .unwrap();
        let other_attack = state
            .select_paths(NodeId::Ue, 2, &candidates, &mut rng)
            .unwrap();
        assert_eq!(first, other_attack, "each attack starts at its own cursor");
    }

    #[test]
    fn degenerate_weights_always_pick_the_first_path() {
        let mut state =
            RoutingState::new(RoutingOption::WeightedRoundRobin, Some(vec![1.0, 0.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let candidates = paths(2);
        for _ in 0..50 {
            let p = state
                .select_paths(NodeId::Ue, 1, &candidates, &mut rng)
                .unwrap();
            assert_eq!(p[0], candidates[0]);
        }
    }

    #[test]
    fn weighted_frequencies_track_the_weights() {
        let weights = vec![0.6, 0.3, 0.1];
        let mut state =
            RoutingState::new(RoutingOption::WeightedRoundRobin, Some(weights.clone())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let candidates = paths(3);
        let mut counts = [0usize; 3];
        let draws = 10_000;
        for _ in 0..draws {
            let p = &state
                .select_paths(NodeId::Ue, 1, &candidates, &mut rng)
                .unwrap()[0];
            counts[candidates.iter().position(|c| c == p).unwrap()] += 1;
        }
        for (i, w) in weights.iter().enumerate() {
            let freq = counts[i] as f64 / draws as f64;
            assert!(
                (freq - w).abs() <= 0.02,
                "path {i}: frequency {freq} vs weight {w}"
            );
        }
    }

    #[test]
    fn empty_candidates_are_an_error() {
        let mut state = RoutingState::new(RoutingOption::PathFlooding, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            state.select_paths(NodeId::Ue, 1, &[], &mut rng),
            Err(RoutingError::NoPath)
        );
    }

    #[test]
    fn invalid_weights_are_rejected() {
        assert!(
            RoutingState::new(RoutingOption::WeightedRoundRobin, Some(vec![0.5, 0.6])).is_err()
        );
        assert!(
            RoutingState::new(RoutingOption::WeightedRoundRobin, Some(vec![-0.5, 1.5])).is_err()
        );
        assert!(RoutingState::new(RoutingOption::WeightedRoundRobin, Some(vec![0.7, 0.3])).is_ok());
    }

    #[test]
    fn ttl_one_expires_at_a_forwarding_node() {
        let mut state = RoutingState::default();
        let outcome = state.on_receive(NodeId::Amf, &frag(1, 0), &ctx(NodeId::Udm, true));
        assert_eq!(outcome, ReceiveOutcome::Drop(DropReason::TtlExpired));
    }

    #[test]
    fn second_arrival_is_a_duplicate() {
        let mut state = RoutingState::default();
        let f = frag(8, 2);
        let c = ctx(NodeId::Udm, true);
        assert_eq!(
            state.on_receive(NodeId::Amf, &f, &c),
            ReceiveOutcome::Forward { ttl: 7 }
        );
        assert_eq!(
            state.on_receive(NodeId::Amf, &f, &c),
            ReceiveOutcome::Drop(DropReason::Duplicate)
        );
        // A different node still accepts it.
        assert_eq!(
            state.on_receive(NodeId::Ausf, &f, &c),
            ReceiveOutcome::Forward { ttl: 7 }
        );
    }

    #[test]
    fn terminals_consume_when_they_hold_the_key() {
        let mut state = RoutingState::default();
        let f = frag(1, 0);
        assert_eq!(
            state.on_receive(NodeId::Udm, &f, &ctx(NodeId::Udm, true)),
            ReceiveOutcome::Consume
        );
        // Even at TTL 1: consumption is not forwarding.
        let mut state = RoutingState::default();
        assert_eq!(
            state.on_receive(NodeId::Udm, &frag(1, 1), &ctx(NodeId::Udm, true)),
            ReceiveOutcome::Consume
        );
        // Without the key the terminal is just another hop.
        let mut state = RoutingState::default();
        assert_eq!(
            state.on_receive(NodeId::Udm, &frag(8, 0), &ctx(NodeId::Udm, false)),
            ReceiveOutcome::Forward { ttl: 7 }
        );
    }

    #[test]
    fn flooding_a_cycle_stays_bounded_by_dedup() {
        // Without duplicate suppression a 3-node cycle re-delivers a flooded
        // fragment every lap: after k laps, 2^k copies are conceptually in
        // flight. With the seen-store every node accepts the fragment once.
        let naive_copies_after = |laps: u32| 2u64.pow(laps);
        assert!(naive_copies_after(10) > 1000);

        use NodeId::*;
        let mut state = RoutingState::default();
        let f = frag(8, 0);
        let c = ctx(NodeId::Pcf, true); // terminal not on the cycle
        let mut accepted = 0;
        for _ in 0..10 {
            for node in [Ue, Amf, Ausf] {
                if state.on_receive(node, &f, &c) == (ReceiveOutcome::Forward { ttl: 7 }) {
                    accepted += 1;
                }
            }
        }
        assert_eq!(
            accepted, 3,
            "each cycle node stores the fragment exactly once"
        );
    }
}
