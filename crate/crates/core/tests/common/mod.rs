//! Fixtures and random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chatcascade::chatroom::ChatroomReceiver;
use chatcascade::network::{BeliefFallback, SocialGraph};
use chatcascade::{
    AgentId, AgentProfile, ChatroomGame, EvidenceRelation, OrderedTree, PeerDistanceProfile, Population, SecondOrderBelief,
    TypeSet,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ids(v: &[u32]) -> Vec<AgentId> {
    v.iter().map(|&x| AgentId(x)).collect()
}

pub fn edges(v: &[(u32, u32)]) -> Vec<(AgentId, AgentId)> {
    v.iter().map(|&(a, b)| (AgentId(a), AgentId(b))).collect()
}

pub fn ten_agent_tree() -> OrderedTree {
    OrderedTree::from_edges(
        AgentId(1),
        &edges(&[(1, 2), (1, 3), (1, 4), (2, 5), (2, 6), (3, 7), (3, 8), (4, 9), (4, 10)]),
    )
    .unwrap()
}

pub const CANONICAL_THETA: [(u32, f64); 10] = [
    (1, 0.5),
    (2, 0.26),
    (3, 0.26),
    (4, 0.74),
    (5, 0.14),
    (6, 0.14),
    (7, 0.14),
    (8, 0.14),
    (9, 0.30),
    (10, 0.30),
];

pub fn singleton_population(mu: EvidenceRelation, types: &[(u32, f64)], lambda: f64, ell: u32) -> Population {
    Population {
        evidence: mu,
        agents: types
            .iter()
            .map(|&(id, t)| {
                (
                    AgentId(id),
                    AgentProfile {
                        types: TypeSet::Finite(vec![t]),
                        lambda,
                        ell,
                        beliefs: vec![],
                    },
                )
            })
            .collect(),
        fallback: BeliefFallback::DiracTruth,
    }
}

pub fn canonical_population() -> Population {
    singleton_population(EvidenceRelation::new(0.9, 0.1).unwrap(), &CANONICAL_THETA, 1.0, 1)
}

pub fn random_dirac_or_mixture(rng: &mut ChaCha8Rng) -> PeerDistanceProfile {
    if rng.gen_bool(0.5) {
        return PeerDistanceProfile::dirac(rng.gen_range(0.0..=1.0));
    }
    let n = rng.gen_range(1..=4);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = raw
        .iter()
        .map(|w| (vec![rng.gen_range(0.0..=1.0)], w / total))
        .collect();
    let belief = SecondOrderBelief::new(ids(&[1]), atoms).unwrap();
    chatcascade::receiver::peer_distance(&belief).unwrap()
}

/// A random tree on agents `0..n`, each agent's predecessor drawn uniformly
/// from the agents before her.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> OrderedTree {
    let e: Vec<(AgentId, AgentId)> = (1..n)
        .map(|k| (AgentId(rng.gen_range(0..k) as u32), AgentId(k as u32)))
        .collect();
    OrderedTree::from_edges(AgentId(0), &e).unwrap()
}

pub fn random_evidence(rng: &mut ChaCha8Rng) -> EvidenceRelation {
    EvidenceRelation::new(rng.gen_range(0.7..0.95), rng.gen_range(0.05..0.3)).unwrap()
}

/// Random singleton-type population on agents `0..n` with dirac-truth beliefs.
pub fn random_population(rng: &mut ChaCha8Rng, n: usize, mu: EvidenceRelation, theta_lo: f64) -> Population {
    let lo = (mu.mu_given_not_c() + 0.01).max(theta_lo);
    let hi = mu.mu_given_c() - 0.01;
    let agents: BTreeMap<AgentId, AgentProfile> = (0..n as u32)
        .map(|k| {
            (
                AgentId(k),
                AgentProfile {
                    types: TypeSet::Finite(vec![rng.gen_range(lo..hi)]),
                    lambda: rng.gen_range(0.0..4.0),
                    ell: rng.gen_range(1..=2),
                    beliefs: vec![],
                },
            )
        })
        .collect();
    Population {
        evidence: mu,
        agents,
        fallback: BeliefFallback::DiracTruth,
    }
}

/// A chatroom with up to three receivers, each with up to three types, and
/// beliefs mixing up to three type profiles of the peers.
pub fn random_chatroom(rng: &mut ChaCha8Rng) -> ChatroomGame {
    let mu = EvidenceRelation::new(0.9, 0.1).unwrap();
    let n_recv = rng.gen_range(1..=3);
    let types: Vec<Vec<f64>> = (0..=n_recv)
        .map(|_| (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0.11..0.89)).collect())
        .collect();
    let members: Vec<AgentId> = (0..=n_recv as u32).map(AgentId).collect();
    let receivers = (1..=n_recv)
        .map(|me| {
            let peers: Vec<AgentId> = members.iter().copied().filter(|p| p.0 as usize != me).collect();
            let n_atoms = rng.gen_range(1..=3);
            let raw: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let atoms = raw
                .iter()
                .map(|w| {
                    let profile = peers
                        .iter()
                        .map(|p| {
                            let ts = &types[p.0 as usize];
                            ts[rng.gen_range(0..ts.len())]
                        })
                        .collect();
                    (profile, w / total)
                })
                .collect();
            ChatroomReceiver {
                id: members[me],
                types: TypeSet::Finite(types[me].clone()),
                lambda: rng.gen_range(0.0..5.0),
                belief: SecondOrderBelief::new(peers, atoms).unwrap(),
            }
        })
        .collect();
    ChatroomGame::new(mu, members[0], TypeSet::Finite(types[0].clone()), receivers).unwrap()
}

/// A random graph made of cliques glued at single agents, on agents `0..n`.
pub fn random_block_graph(rng: &mut ChaCha8Rng, n: usize) -> SocialGraph {
    let mut e = Vec::new();
    let mut placed = 1u32;
    while (placed as usize) < n {
        let anchor = rng.gen_range(0..placed);
        let size = rng.gen_range(1..=(n as u32 - placed).min(3));
        let block: Vec<u32> = std::iter::once(anchor).chain(placed..placed + size).collect();
        for (k, &a) in block.iter().enumerate() {
            for &b in &block[k + 1..] {
                e.push((AgentId(a), AgentId(b)));
            }
        }
        placed += size;
    }
    SocialGraph::new((0..n as u32).map(AgentId), &e)
}
