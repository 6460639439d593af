//! Slow, direct checks against the definitions.
//!
//! Nothing here reuses the closed forms of the other modules: utilities and
//! gains are evaluated from scratch, and equilibria are found by enumerating
//! every profile and testing each condition. Instances are capped in size.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::chatroom::{ChatroomGame, SecondOrderBelief, TypeSet};
use crate::network::{AgentId, CascadeError, GlobalProfile, OrderedTree, Population};
use crate::receiver::{ActionSet, PeerDistanceProfile, ReceiverAction};
use crate::sender::SenderAction;

pub const MAX_CHATROOM_RECEIVERS: usize = 3;
pub const MAX_CHATROOM_TYPES: usize = 3;
pub const MAX_GLOBAL_AGENTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub step: f64,
    pub tolerance: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: 1e-3,
            tolerance: 1e-9,
        }
    }
}

impl GridSpec {
    /// Grid points `0, step, 2 step, ...` up to and including 1.
    pub fn points(&self) -> Vec<f64> {
        let n = (1.0 / self.step).round() as usize;
        (0..=n).map(|k| (k as f64 * self.step).min(1.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {what} = {got}, limit {limit}")]
    InstanceTooLarge { what: &'static str, got: usize, limit: usize },
    #[error("interval types cannot be enumerated")]
    IntervalTypes,
    #[error("agent {0} must have exactly one type")]
    NotSingleton(AgentId),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

const ACTIONS: [f64; 3] = [0.0, 0.5, 1.0];

fn table_utilities(theta: f64, d: &PeerDistanceProfile, lambda: f64) -> [f64; 3] {
    let [d0, d5, d1] = d.as_array();
    [
        -(theta + lambda * d0),
        -((theta - 0.5).abs() + lambda * d5),
        -((1.0 - theta) + lambda * d1),
    ]
}

fn argmax_within(u: [f64; 3], eps: f64) -> ActionSet {
    let best = u[0].max(u[1]).max(u[2]);
    ReceiverAction::ALL
        .iter()
        .zip(u)
        .filter(|(_, v)| *v >= best - eps)
        .map(|(a, _)| *a)
        .collect()
}

/// Best reactions by evaluating all three utilities.
pub fn oracle_best_actions(theta: f64, d: &PeerDistanceProfile, lambda: f64) -> ActionSet {
    argmax_within(table_utilities(theta, d, lambda), GridSpec::default().tolerance)
}

/// Credences on the grid at which `a` is a best reaction.
pub fn oracle_support_set(a: ReceiverAction, d: &PeerDistanceProfile, lambda: f64, grid: &GridSpec) -> Vec<f64> {
    grid.points()
        .into_iter()
        .filter(|&t| argmax_within(table_utilities(t, d, lambda), grid.tolerance).contains(a))
        .collect()
}

/// Expected distance between `a` and the peers' mean credence, summed atom by atom.
fn naive_distance(belief: &SecondOrderBelief, a: f64) -> f64 {
    belief
        .atoms()
        .iter()
        .map(|atom| {
            let mean = atom.profile.iter().sum::<f64>() / atom.profile.len() as f64;
            atom.weight * (a - mean).abs()
        })
        .sum()
}

fn naive_is_best(theta: f64, belief: &SecondOrderBelief, lambda: f64, action: f64, eps: f64) -> bool {
    let u = |a: f64| -((a - theta).abs() + lambda * naive_distance(belief, a));
    let best = ACTIONS.iter().map(|&a| u(a)).fold(f64::NEG_INFINITY, f64::max);
    u(action) >= best - eps
}

fn finite_types(t: &TypeSet) -> Result<&[f64], OracleError> {
    match t {
        TypeSet::Finite(v) => Ok(v),
        TypeSet::Interval { .. } => Err(OracleError::IntervalTypes),
    }
}

/// Every constant profile of reactions that is a best response for every type
/// of every receiver, in the receivers' order.
pub fn oracle_solve_chatroom(game: &ChatroomGame) -> Result<Vec<Vec<(AgentId, ReceiverAction)>>, OracleError> {
    let receivers = game.receivers();
    if receivers.len() > MAX_CHATROOM_RECEIVERS {
        return Err(OracleError::InstanceTooLarge {
            what: "receivers",
            got: receivers.len(),
            limit: MAX_CHATROOM_RECEIVERS,
        });
    }
    for r in receivers {
        let n = finite_types(&r.types)?.len();
        if n > MAX_CHATROOM_TYPES {
            return Err(OracleError::InstanceTooLarge {
                what: "types",
                got: n,
                limit: MAX_CHATROOM_TYPES,
            });
        }
    }
    let eps = GridSpec::default().tolerance;
    let n = receivers.len();
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let profile: Vec<(AgentId, ReceiverAction)> = receivers
            .iter()
            .enumerate()
            .map(|(k, r)| (r.id, ReceiverAction::ALL[code / 3usize.pow(k as u32) % 3]))
            .collect();
        let ok = receivers.iter().zip(&profile).all(|(r, &(_, a))| {
            finite_types(&r.types)
                .unwrap()
                .iter()
                .all(|&t| naive_is_best(t, &r.belief, r.lambda, a.value(), eps))
        });
        if ok {
            out.push(profile);
        }
    }
    Ok(out)
}

fn naive_gain(own: f64, belief: &SecondOrderBelief, pop: &Population) -> f64 {
    let a = pop.evidence.mu_given_c();
    let b = pop.evidence.mu_given_not_c();
    let prior = |t: f64| (t - b) / (a - b);
    let posterior = |t: f64| {
        let p = prior(t);
        a * p / (a * p + b * (1.0 - p))
    };
    let tau = prior(own);
    belief
        .atoms()
        .iter()
        .map(|atom| {
            atom.weight
                * atom
                    .profile
                    .iter()
                    .map(|&t| (prior(t) - tau).abs() - (posterior(t) - tau).abs())
                    .sum::<f64>()
        })
        .sum()
}

/// All global equilibria of a small tree with singleton types.
///
/// Every assignment of a reaction to each non-root agent and a forwarding
/// decision to each non-terminal agent is tested against the definition:
/// the root forwards iff her expected gain is positive; in each chatroom the
/// message enters, every receiver's reaction is a best response; a reached
/// non-terminal receiver forwards iff her gate is open and her expected gain
/// is positive. Actions of unreached agents are then erased and duplicates
/// merged.
pub fn oracle_global(tree: &OrderedTree, pop: &Population) -> Result<BTreeSet<GlobalProfile>, OracleError> {
    let agents = tree.agents();
    let n = agents.len();
    if n > MAX_GLOBAL_AGENTS {
        return Err(OracleError::InstanceTooLarge {
            what: "agents",
            got: n,
            limit: MAX_GLOBAL_AGENTS,
        });
    }
    let mut theta = Vec::with_capacity(n);
    for &a in agents {
        let t = finite_types(&pop.profile(a)?.types)?;
        if t.len() != 1 {
            return Err(OracleError::NotSingleton(a));
        }
        theta.push(t[0]);
    }
    let eps = GridSpec::default().tolerance;
    let index = |id: AgentId| agents.iter().position(|&a| a == id).unwrap();
    // Agents come in breadth-first order, so a parent always precedes her children.
    let parent: Vec<Option<usize>> = agents.iter().map(|&a| tree.parent(a).map(index)).collect();
    let receivers: Vec<usize> = (1..n).collect();
    let senders: Vec<usize> = (0..n).filter(|&k| !tree.is_terminal(agents[k])).collect();
    let sender_slot: Vec<Option<usize>> = (0..n).map(|k| senders.iter().position(|&s| s == k)).collect();

    // Beliefs, gains and best responses do not depend on the profile.
    let mut best = vec![[false; 3]; n];
    for &r in &receivers {
        let room = tree.receiving_chatroom(agents[r]).unwrap();
        let belief = pop.belief_for(agents[r], &room.peers_of(agents[r]))?;
        let lambda = pop.profile(agents[r])?.lambda;
        for (k, &a) in ACTIONS.iter().enumerate() {
            best[r][k] = naive_is_best(theta[r], &belief, lambda, a, eps);
        }
    }
    let mut positive = vec![false; n];
    let mut ell = vec![0i64; n];
    for &s in &senders {
        let belief = pop.belief_for(agents[s], tree.children(agents[s]))?;
        positive[s] = naive_gain(theta[s], &belief, pop) > eps;
        ell[s] = pop.profile(agents[s])?.ell as i64;
    }

    let mut found = BTreeSet::new();
    let total = 3usize.pow(receivers.len() as u32) << senders.len();
    let mut reaction = vec![0usize; n];
    let mut reached = vec![false; n];
    for code in 0..total {
        let send_bits = code & ((1 << senders.len()) - 1);
        let sends = |k: usize| sender_slot[k].is_some_and(|j| send_bits >> j & 1 == 1);
        let mut rest = code >> senders.len();
        for &r in &receivers {
            reaction[r] = rest % 3;
            rest /= 3;
        }
        for k in 0..n {
            reached[k] = match parent[k] {
                None => true,
                Some(p) => reached[p] && sends(p),
            };
        }

        let receivers_ok = receivers.iter().all(|&r| !reached[r] || best[r][reaction[r]]);
        let senders_ok = receivers_ok
            && senders.iter().all(|&s| {
                if !reached[s] {
                    return true;
                }
                let should = match parent[s] {
                    None => positive[s],
                    Some(p) => {
                        let zeros = (0..n).filter(|&c| parent[c] == Some(p) && reaction[c] == 0).count() as i64;
                        (ell[s] - zeros).max(0) > 0 && positive[s]
                    }
                };
                sends(s) == should
            });
        if senders_ok {
            found.insert(GlobalProfile {
                reactions: receivers
                    .iter()
                    .map(|&r| (agents[r], reached[r].then_some(ReceiverAction::ALL[reaction[r]])))
                    .collect(),
                sends: senders
                    .iter()
                    .map(|&s| {
                        let act = if sends(s) { SenderAction::Send } else { SenderAction::NoSend };
                        (agents[s], reached[s].then_some(act))
                    })
                    .collect(),
            });
        }
    }
    Ok(found)
}

/// Agents reached under a profile returned by [`oracle_global`].
pub fn oracle_reach(profile: &GlobalProfile, root: AgentId) -> BTreeSet<AgentId> {
    profile
        .reactions
        .iter()
        .filter(|(_, a)| a.is_some())
        .map(|(id, _)| *id)
        .chain(std::iter::once(root))
        .collect()
}
