//! The Bayesian game played inside one chatroom.
//!
//! The chatroom root only waits; every receiver picks a reaction. A receiver's
//! utility depends on her own type (credence) and on her peers' types, never
//! on their actions, so best responses decouple: an equilibrium in constant
//! strategies exists iff every receiver has a reaction that is optimal for all
//! of her types at once.

use serde::Serialize;
use thiserror::Error;

use crate::belief::{Credence, EvidenceRelation};
use crate::network::AgentId;
use crate::receiver::{self, ActionSet, PeerDistanceProfile, ReceiverAction};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChatroomError {
    #[error("type set is empty")]
    EmptyTypeSet,
    #[error("type {value} lies outside ({lo}, {hi})")]
    TypeOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("type interval [{lo}, {hi}] is reversed")]
    ReversedInterval { lo: f64, hi: f64 },
    #[error("belief atom has {got} coordinates but {expected} peers")]
    ProfileDimension { expected: usize, got: usize },
    #[error("belief weight {0} is not positive")]
    NonPositiveWeight(f64),
    #[error("belief weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("belief has no atoms")]
    EmptyBelief,
    #[error("peer {0} listed twice in a belief")]
    DuplicatePeer(AgentId),
    #[error("chatroom has no receivers")]
    NoReceivers,
    #[error("agent {0} appears twice in the chatroom")]
    DuplicateMember(AgentId),
    #[error("belief of {agent} ranges over {got:?}, expected peers {expected:?}")]
    BeliefPeers {
        agent: AgentId,
        expected: Vec<AgentId>,
        got: Vec<AgentId>,
    },
    #[error("belief of {agent} puts weight on type {value} of {peer}, which is not in that agent's type set")]
    BeliefOutsideTypeSet { agent: AgentId, peer: AgentId, value: f64 },
    #[error("sensitivity {0} is not a finite non-negative number")]
    BadSensitivity(f64),
}

/// The types (credences in the message) an agent may have.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeSet {
    Finite(Vec<f64>),
    Interval { lo: f64, hi: f64 },
}

impl TypeSet {
    pub fn singleton(theta: Credence) -> Self {
        TypeSet::Finite(vec![theta.value()])
    }

    pub fn finite(values: Vec<f64>, mu: &EvidenceRelation) -> Result<Self, ChatroomError> {
        let set = TypeSet::Finite(values);
        set.validate(mu)?;
        Ok(set)
    }

    pub fn interval(lo: f64, hi: f64, mu: &EvidenceRelation) -> Result<Self, ChatroomError> {
        let set = TypeSet::Interval { lo, hi };
        set.validate(mu)?;
        Ok(set)
    }

    pub fn validate(&self, mu: &EvidenceRelation) -> Result<(), ChatroomError> {
        let check = |value: f64| {
            if mu.admits(value) {
                Ok(())
            } else {
                Err(ChatroomError::TypeOutOfRange {
                    value,
                    lo: mu.mu_given_not_c(),
                    hi: mu.mu_given_c(),
                })
            }
        };
        match self {
            TypeSet::Finite(values) if values.is_empty() => Err(ChatroomError::EmptyTypeSet),
            TypeSet::Finite(values) => values.iter().try_for_each(|v| check(*v)),
            TypeSet::Interval { lo, hi } => {
                check(*lo)?;
                check(*hi)?;
                if lo > hi {
                    return Err(ChatroomError::ReversedInterval { lo: *lo, hi: *hi });
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        let eps = tolerance();
        match self {
            TypeSet::Finite(values) => values.iter().any(|v| (v - value).abs() <= eps),
            TypeSet::Interval { lo, hi } => *lo - eps <= value && value <= *hi + eps,
        }
    }

    pub fn centroid(&self) -> f64 {
        match self {
            TypeSet::Finite(values) => values.iter().sum::<f64>() / values.len() as f64,
            TypeSet::Interval { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn singleton_value(&self) -> Option<f64> {
        match self {
            TypeSet::Finite(values) if values.len() == 1 => Some(values[0]),
            TypeSet::Interval { lo, hi } if lo == hi => Some(*lo),
            _ => None,
        }
    }

    /// Smallest and largest member.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            TypeSet::Finite(values) => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v))),
            TypeSet::Interval { lo, hi } => (*lo, *hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefAtom {
    pub profile: Vec<f64>,
    pub weight: f64,
}

impl BeliefAtom {
    /// Average credence of the peers in this profile.
    pub fn mean(&self) -> f64 {
        self.profile.iter().sum::<f64>() / self.profile.len() as f64
    }
}

/// A finite distribution over the types of a fixed, ordered list of peers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderBelief {
    peers: Vec<AgentId>,
    atoms: Vec<BeliefAtom>,
}

impl SecondOrderBelief {
    pub fn new(peers: Vec<AgentId>, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self, ChatroomError> {
        for (k, p) in peers.iter().enumerate() {
            if peers[..k].contains(p) {
                return Err(ChatroomError::DuplicatePeer(*p));
            }
        }
        if atoms.is_empty() {
            return Err(ChatroomError::EmptyBelief);
        }
        let mut total = 0.0;
        for (profile, weight) in &atoms {
            if profile.len() != peers.len() {
                return Err(ChatroomError::ProfileDimension {
                    expected: peers.len(),
                    got: profile.len(),
                });
            }
            if !(weight.is_finite() && *weight > 0.0) {
                return Err(ChatroomError::NonPositiveWeight(*weight));
            }
            total += weight;
        }
        if (total - 1.0).abs() > tolerance().max(1e-12 * atoms.len() as f64) {
            return Err(ChatroomError::WeightSum(total));
        }
        Ok(SecondOrderBelief {
            peers,
            atoms: atoms
                .into_iter()
                .map(|(profile, weight)| BeliefAtom { profile, weight })
                .collect(),
        })
    }

    /// Point belief that each peer has exactly the given type.
    pub fn dirac(peers: Vec<AgentId>, values: Vec<f64>) -> Self {
        assert_eq!(peers.len(), values.len(), "one value per peer");
        SecondOrderBelief {
            peers,
            atoms: vec![BeliefAtom {
                profile: values,
                weight: 1.0,
            }],
        }
    }

    pub fn peers(&self) -> &[AgentId] {
        &self.peers
    }

    pub fn atoms(&self) -> &[BeliefAtom] {
        &self.atoms
    }

    /// Whether this belief ranges over exactly `peers`, in any order.
    pub fn covers(&self, peers: &[AgentId]) -> bool {
        self.peers.len() == peers.len() && peers.iter().all(|p| self.peers.contains(p))
    }

    /// Same belief with coordinates reordered to follow `order`.
    pub fn reordered(&self, order: &[AgentId]) -> Option<Self> {
        if !self.covers(order) {
            return None;
        }
        let index: Vec<usize> = order
            .iter()
            .map(|p| self.peers.iter().position(|q| q == p).unwrap())
            .collect();
        Some(SecondOrderBelief {
            peers: order.to_vec(),
            atoms: self
                .atoms
                .iter()
                .map(|a| BeliefAtom {
                    profile: index.iter().map(|&k| a.profile[k]).collect(),
                    weight: a.weight,
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatroomReceiver {
    pub id: AgentId,
    pub types: TypeSet,
    pub lambda: f64,
    pub belief: SecondOrderBelief,
}

/// One chatroom: a root who forwarded the message and the receivers reacting
/// to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatroomGame {
    evidence: EvidenceRelation,
    root: AgentId,
    root_types: TypeSet,
    receivers: Vec<ChatroomReceiver>,
}

impl ChatroomGame {
    pub fn new(
        evidence: EvidenceRelation,
        root: AgentId,
        root_types: TypeSet,
        receivers: Vec<ChatroomReceiver>,
    ) -> Result<Self, ChatroomError> {
        if receivers.is_empty() {
            return Err(ChatroomError::NoReceivers);
        }
        root_types.validate(&evidence)?;
        let members: Vec<AgentId> = std::iter::once(root).chain(receivers.iter().map(|r| r.id)).collect();
        for (k, m) in members.iter().enumerate() {
            if members[..k].contains(m) {
                return Err(ChatroomError::DuplicateMember(*m));
            }
        }
        let types_of = |id: AgentId| {
            if id == root {
                &root_types
            } else {
                &receivers.iter().find(|r| r.id == id).unwrap().types
            }
        };
        for r in &receivers {
            r.types.validate(&evidence)?;
            if !(r.lambda.is_finite() && r.lambda >= 0.0) {
                return Err(ChatroomError::BadSensitivity(r.lambda));
            }
            let expected: Vec<AgentId> = members.iter().copied().filter(|m| *m != r.id).collect();
            if !r.belief.covers(&expected) {
                return Err(ChatroomError::BeliefPeers {
                    agent: r.id,
                    expected,
                    got: r.belief.peers().to_vec(),
                });
            }
            for atom in r.belief.atoms() {
                for (peer, value) in r.belief.peers().iter().zip(&atom.profile) {
                    if !types_of(*peer).contains(*value) {
                        return Err(ChatroomError::BeliefOutsideTypeSet {
                            agent: r.id,
                            peer: *peer,
                            value: *value,
                        });
                    }
                }
            }
        }
        Ok(ChatroomGame {
            evidence,
            root,
            root_types,
            receivers,
        })
    }

    pub fn root(&self) -> AgentId {
        self.root
    }

    pub fn receivers(&self) -> &[ChatroomReceiver] {
        &self.receivers
    }

    pub fn evidence(&self) -> &EvidenceRelation {
        &self.evidence
    }

    pub fn root_types(&self) -> &TypeSet {
        &self.root_types
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplicity {
    Unique,
    Multiple,
    None,
}

/// Outcome of solving a chatroom.
///
/// `eligible` lists, per receiver, the reactions optimal for every one of her
/// types. When all of them are non-empty, `actions` holds the selected
/// equilibrium; otherwise it is empty and `multiplicity` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatroomEquilibrium {
    pub root: AgentId,
    pub eligible: Vec<(AgentId, ActionSet)>,
    pub actions: Vec<(AgentId, ReceiverAction)>,
    pub multiplicity: Multiplicity,
}

impl ChatroomEquilibrium {
    pub fn exists(&self) -> bool {
        self.multiplicity != Multiplicity::None
    }

    pub fn action_of(&self, id: AgentId) -> Option<ReceiverAction> {
        self.actions.iter().find(|(a, _)| *a == id).map(|(_, x)| *x)
    }

    /// Receivers with no reaction that is optimal for all of their types.
    pub fn blocking_receivers(&self) -> Vec<AgentId> {
        self.eligible
            .iter()
            .filter(|(_, s)| s.is_empty())
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn disapprovals(&self) -> usize {
        self.actions
            .iter()
            .filter(|(_, a)| *a == ReceiverAction::Disapprove)
            .count()
    }
}

/// Reactions optimal for every type in `types`.
///
/// Utility is piecewise linear in the type, so for an interval of types this
/// reduces to containment in the closed support interval.
pub fn eligible_actions(types: &TypeSet, d: &PeerDistanceProfile, lambda: f64) -> ActionSet {
    match types {
        TypeSet::Finite(values) => values
            .iter()
            .fold(ActionSet::FULL, |acc, &t| acc.intersect(receiver::best_actions(t, d, lambda))),
        TypeSet::Interval { lo, hi } => range_eligible(*lo, *hi, d, lambda),
    }
}

fn range_eligible(lo: f64, hi: f64, d: &PeerDistanceProfile, lambda: f64) -> ActionSet {
    ReceiverAction::ALL
        .into_iter()
        .filter(|&a| receiver::support_interval(a, d, lambda).contains_range(lo, hi))
        .collect()
}

/// Picks the eligible reaction closest to `centroid`, lower value on ties.
pub fn select_action(eligible: ActionSet, centroid: f64) -> Option<ReceiverAction> {
    eligible.iter().min_by(|a, b| {
        let da = (a.value() - centroid).abs();
        let db = (b.value() - centroid).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(b))
    })
}

fn assemble(root: AgentId, per_receiver: Vec<(AgentId, ActionSet, f64)>) -> ChatroomEquilibrium {
    let eligible: Vec<(AgentId, ActionSet)> = per_receiver.iter().map(|(id, s, _)| (*id, *s)).collect();
    if eligible.iter().any(|(_, s)| s.is_empty()) {
        return ChatroomEquilibrium {
            root,
            eligible,
            actions: Vec::new(),
            multiplicity: Multiplicity::None,
        };
    }
    let actions = per_receiver
        .iter()
        .map(|(id, s, c)| (*id, select_action(*s, *c).unwrap()))
        .collect();
    let multiplicity = if eligible.iter().all(|(_, s)| s.len() == 1) {
        Multiplicity::Unique
    } else {
        Multiplicity::Multiple
    };
    ChatroomEquilibrium {
        root,
        eligible,
        actions,
        multiplicity,
    }
}

pub fn solve_chatroom(game: &ChatroomGame) -> ChatroomEquilibrium {
    let per_receiver = game
        .receivers
        .iter()
        .map(|r| {
            let d = receiver::peer_distance(&r.belief).expect("validated belief has atoms");
            (r.id, eligible_actions(&r.types, &d, r.lambda), r.types.centroid())
        })
        .collect();
    assemble(game.root, per_receiver)
}

/// Solves the game with every type set widened to all admissible credences.
///
/// The supports are closed, so containing the open credence range is the same
/// as containing its closure.
pub fn equilibrium_exists_for_all_types(game: &ChatroomGame) -> (bool, ChatroomEquilibrium) {
    let (lo, hi) = (game.evidence.mu_given_not_c(), game.evidence.mu_given_c());
    let per_receiver = game
        .receivers
        .iter()
        .map(|r| {
            let d = receiver::peer_distance(&r.belief).expect("validated belief has atoms");
            (r.id, range_eligible(lo, hi, &d, r.lambda), 0.5 * (lo + hi))
        })
        .collect();
    let eq = assemble(game.root, per_receiver);
    (eq.exists(), eq)
}

/// Why a proposed constant profile fails to be an equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileViolation {
    pub receiver: AgentId,
    pub action: ReceiverAction,
    /// A type of the receiver for which `action` is not optimal.
    pub witness_type: f64,
    pub best_at_witness: ActionSet,
}

/// Checks a proposed constant profile against the equilibrium conditions and
/// lists every receiver for whom it fails, with a type witnessing the failure.
pub fn certify_profile(game: &ChatroomGame, profile: &[(AgentId, ReceiverAction)]) -> Vec<ProfileViolation> {
    let mut out = Vec::new();
    for r in &game.receivers {
        let Some(&(_, action)) = profile.iter().find(|(id, _)| *id == r.id) else {
            continue;
        };
        let d = receiver::peer_distance(&r.belief).expect("validated belief has atoms");
        let witness = match &r.types {
            TypeSet::Finite(values) => values
                .iter()
                .copied()
                .find(|&t| !receiver::best_actions(t, &d, r.lambda).contains(action)),
            TypeSet::Interval { lo, hi } => {
                let s = receiver::support_interval(action, &d, r.lambda);
                match s.bounds {
                    None => Some(*lo),
                    Some((a, _)) if *lo < a => Some(*lo),
                    Some((_, b)) if *hi > b => Some(*hi),
                    _ => None,
                }
            }
        };
        if let Some(t) = witness {
            out.push(ProfileViolation {
                receiver: r.id,
                action,
                witness_type: t,
                best_at_witness: receiver::best_actions(t, &d, r.lambda),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::validate_evidence;
    use crate::oracle;
    use crate::receiver::ReceiverAction::*;
    use proptest::prelude::*;

    fn id(n: u32) -> AgentId {
        AgentId(n)
    }

    /// Root 0 with two receivers 1 and 2, everyone believing the others hold 0.8.
    fn pressured_room(lambda: f64, types: [TypeSet; 2]) -> Result<ChatroomGame, ChatroomError> {
        let mu = validate_evidence(0.99, 0.01).unwrap();
        let [t1, t2] = types;
        ChatroomGame::new(
            mu,
            id(0),
            TypeSet::finite(vec![0.8], &mu).unwrap(),
            vec![
                ChatroomReceiver {
                    id: id(1),
                    types: t1,
                    lambda,
                    belief: SecondOrderBelief::dirac(vec![id(0), id(2)], vec![0.8, 0.8]),
                },
                ChatroomReceiver {
                    id: id(2),
                    types: t2,
                    lambda,
                    belief: SecondOrderBelief::dirac(vec![id(0), id(1)], vec![0.8, 0.8]),
                },
            ],
        )
    }

    #[test]
    fn no_silent_equilibrium_under_pressure() {
        let mu = validate_evidence(0.99, 0.01).unwrap();
        let game = pressured_room(
            3.0,
            [
                TypeSet::interval(0.3, 0.8, &mu).unwrap(),
                TypeSet::finite(vec![0.8], &mu).unwrap(),
            ],
        )
        .unwrap();
        let violations = certify_profile(&game, &[(id(1), Silence), (id(2), Silence)]);
        assert_eq!(violations.len(), 2);
        assert!(violations.iter().all(|v| v.witness_type > 0.6));
        assert!(violations.iter().all(|v| v.best_at_witness == ActionSet::singleton(Approve)));

        // Keeping every type at or below 0.6 would make silence optimal, but then
        // no peer can hold 0.8 and the beliefs are not supported.
        let low = pressured_room(
            3.0,
            [
                TypeSet::interval(0.2, 0.6, &mu).unwrap(),
                TypeSet::interval(0.2, 0.6, &mu).unwrap(),
            ],
        );
        assert!(matches!(low, Err(ChatroomError::BeliefOutsideTypeSet { .. })));
    }

    #[test]
    fn high_sensitivity_all_approve() {
        let mu = validate_evidence(0.99, 0.01).unwrap();
        for types in [
            [TypeSet::finite(vec![0.8], &mu).unwrap(), TypeSet::finite(vec![0.8], &mu).unwrap()],
            [
                TypeSet::finite(vec![0.05, 0.8], &mu).unwrap(),
                TypeSet::interval(0.02, 0.98, &mu).unwrap(),
            ],
        ] {
            let eq = solve_chatroom(&pressured_room(6.0, types).unwrap());
            assert_eq!(eq.multiplicity, Multiplicity::Unique);
            assert_eq!(eq.actions, vec![(id(1), Approve), (id(2), Approve)]);
        }
        let (exists, eq) = equilibrium_exists_for_all_types(
            &pressured_room(6.0, [TypeSet::finite(vec![0.8], &mu).unwrap(), TypeSet::finite(vec![0.8], &mu).unwrap()])
                .unwrap(),
        );
        assert!(exists);
        assert_eq!(eq.actions, vec![(id(1), Approve), (id(2), Approve)]);
    }

    #[test]
    fn single_receiver_without_peer_pressure() {
        let mu = validate_evidence(0.9, 0.05).unwrap();
        let game = ChatroomGame::new(
            mu,
            id(0),
            TypeSet::finite(vec![0.7], &mu).unwrap(),
            vec![ChatroomReceiver {
                id: id(1),
                types: TypeSet::finite(vec![0.1], &mu).unwrap(),
                lambda: 0.0,
                belief: SecondOrderBelief::dirac(vec![id(0)], vec![0.7]),
            }],
        )
        .unwrap();
        let eq = solve_chatroom(&game);
        assert_eq!(eq.actions, vec![(id(1), Disapprove)]);
        let (exists, _) = equilibrium_exists_for_all_types(&game);
        assert!(!exists);
    }

    #[test]
    fn lambda_above_threshold_gives_full_range_equilibrium() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        let belief = SecondOrderBelief::dirac(vec![id(0), id(2)], vec![0.2, 0.15]);
        let d = receiver::peer_distance(&belief).unwrap();
        let star = receiver::lambda_star(&d).unwrap();
        let game = ChatroomGame::new(
            mu,
            id(0),
            TypeSet::finite(vec![0.2], &mu).unwrap(),
            vec![
                ChatroomReceiver {
                    id: id(1),
                    types: TypeSet::finite(vec![0.15], &mu).unwrap(),
                    lambda: star + 1.0,
                    belief,
                },
                ChatroomReceiver {
                    id: id(2),
                    types: TypeSet::finite(vec![0.15], &mu).unwrap(),
                    lambda: star + 1.0,
                    belief: SecondOrderBelief::dirac(vec![id(0), id(1)], vec![0.2, 0.15]),
                },
            ],
        )
        .unwrap();
        let (exists, eq) = equilibrium_exists_for_all_types(&game);
        assert!(exists);
        assert!(eq.actions.iter().all(|(_, a)| *a == Disapprove));
    }

    #[test]
    fn tie_rule_prefers_centroid_then_lower() {
        let both = [Silence, Approve].into_iter().collect();
        assert_eq!(select_action(both, 0.1), Some(Silence));
        assert_eq!(select_action(both, 0.9), Some(Approve));
        assert_eq!(select_action(both, 0.75), Some(Silence));
        assert_eq!(select_action(ActionSet::EMPTY, 0.5), None);
    }

    #[test]
    fn invalid_games_rejected() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        let recv = |belief| ChatroomReceiver {
            id: id(1),
            types: TypeSet::finite(vec![0.3], &mu).unwrap(),
            lambda: 1.0,
            belief,
        };
        let root = || TypeSet::finite(vec![0.5], &mu).unwrap();
        assert!(matches!(
            ChatroomGame::new(mu, id(0), root(), vec![]),
            Err(ChatroomError::NoReceivers)
        ));
        assert!(matches!(
            ChatroomGame::new(mu, id(0), root(), vec![recv(SecondOrderBelief::dirac(vec![id(5)], vec![0.5]))]),
            Err(ChatroomError::BeliefPeers { .. })
        ));
        assert!(matches!(
            ChatroomGame::new(mu, id(1), root(), vec![recv(SecondOrderBelief::dirac(vec![id(1)], vec![0.5]))]),
            Err(ChatroomError::DuplicateMember(_))
        ));
        assert!(matches!(
            SecondOrderBelief::new(vec![id(0)], vec![(vec![0.5], 0.6), (vec![0.4], 0.6)]),
            Err(ChatroomError::WeightSum(_))
        ));
        assert!(matches!(TypeSet::finite(vec![0.95], &mu), Err(ChatroomError::TypeOutOfRange { .. })));
        assert!(matches!(TypeSet::interval(0.6, 0.4, &mu), Err(ChatroomError::ReversedInterval { .. })));
    }

    fn random_game() -> impl Strategy<Value = ChatroomGame> {
        let types = prop::collection::vec(0.1001f64..0.8999, 1..=3);
        (
            types.clone(),
            prop::collection::vec((types, 0.0f64..6.0), 1..=3),
            any::<u64>(),
        )
            .prop_map(|(root_types, recv, seed)| {
                let mu = validate_evidence(0.9, 0.1).unwrap();
                let mut all_types = vec![root_types];
                all_types.extend(recv.iter().map(|(t, _)| t.clone()));
                let ids: Vec<AgentId> = (0..all_types.len() as u32).map(AgentId).collect();
                let mut s = seed;
                let mut next = move || {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (s >> 33) as usize
                };
                let receivers = recv
                    .iter()
                    .enumerate()
                    .map(|(k, (t, lambda))| {
                        let me = k + 1;
                        let peers: Vec<AgentId> = ids.iter().copied().filter(|p| p.0 as usize != me).collect();
                        let n_atoms = 1 + next() % 2;
                        let atoms = (0..n_atoms)
                            .map(|_| {
                                let profile = peers
                                    .iter()
                                    .map(|p| {
                                        let ts = &all_types[p.0 as usize];
                                        ts[next() % ts.len()]
                                    })
                                    .collect();
                                (profile, 1.0 / n_atoms as f64)
                            })
                            .collect();
                        ChatroomReceiver {
                            id: ids[me],
                            types: TypeSet::Finite(t.clone()),
                            lambda: *lambda,
                            belief: SecondOrderBelief::new(peers, atoms).unwrap(),
                        }
                    })
                    .collect();
                ChatroomGame::new(mu, ids[0], TypeSet::Finite(all_types[0].clone()), receivers).unwrap()
            })
    }

    proptest! {
        #[test]
        fn solver_matches_brute_force(game in random_game()) {
            let eq = solve_chatroom(&game);
            let brute = oracle::oracle_solve_chatroom(&game).unwrap();
            let product: usize = eq.eligible.iter().map(|(_, s)| s.len()).product();
            prop_assert_eq!(brute.len(), product);
            if eq.exists() {
                prop_assert!(brute.contains(&eq.actions));
                prop_assert_eq!(eq.multiplicity == Multiplicity::Unique, brute.len() == 1);
            }
        }

        #[test]
        fn relabelling_receivers_permutes_output(game in random_game()) {
            let eq = solve_chatroom(&game);
            let mut reversed = game.receivers.clone();
            reversed.reverse();
            let flipped = ChatroomGame::new(game.evidence, game.root, game.root_types.clone(), reversed).unwrap();
            let eq2 = solve_chatroom(&flipped);
            for r in &game.receivers {
                prop_assert_eq!(eq.action_of(r.id), eq2.action_of(r.id));
            }
            prop_assert_eq!(eq.multiplicity, eq2.multiplicity);
        }
    }
}
