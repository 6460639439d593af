//! Trees of chatrooms, undirected chatroom graphs, and the cascade solver.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::EvidenceRelation;
use crate::chatroom::{self, ChatroomError, ChatroomEquilibrium, ChatroomGame, ChatroomReceiver, Multiplicity, SecondOrderBelief, TypeSet};
use crate::receiver::ReceiverAction;
use crate::sender::{self, SendEvaluation, SendGate, SenderAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl From<u32> for AgentId {
    fn from(v: u32) -> Self {
        AgentId(v)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("agent {0} is its own successor")]
    SelfLoop(AgentId),
    #[error("agent {0} has more than one predecessor")]
    MultipleParents(AgentId),
    #[error("the root {0} has a predecessor")]
    RootHasParent(AgentId),
    #[error("agent {0} cannot be reached from the root")]
    Unreachable(AgentId),
}

/// Why an undirected graph cannot be turned into a tree of chatrooms.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphViolation {
    #[error("graph has no agents")]
    Empty,
    #[error("agent {agent} is listed as its own neighbour")]
    SelfLoop { agent: AgentId },
    #[error("edge mentions unknown agent {agent}")]
    UnknownAgent { agent: AgentId },
    #[error("agents {from} and {to} are not connected")]
    Disconnected { from: AgentId, to: AgentId },
    #[error("neighbours {j} and {k} of {center} are linked through another path but are not adjacent")]
    OpenNeighbourhood { center: AgentId, j: AgentId, k: AgentId },
    #[error("{outsider} is adjacent to both {j} and {k}, neighbours of {center}, without being adjacent to {center}")]
    SharedOutsider {
        center: AgentId,
        j: AgentId,
        k: AgentId,
        outsider: AgentId,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("no profile for agent {0}")]
    MissingProfile(AgentId),
    #[error("agent {agent} has no belief over {peers:?}")]
    MissingBelief { agent: AgentId, peers: Vec<AgentId> },
    #[error("agent {peer} has several possible types, so a point belief about her is not defined")]
    NotSingleton { peer: AgentId },
    #[error("agent {agent}: {source}")]
    Profile { agent: AgentId, source: ChatroomError },
    #[error("chatroom of {chatroom}: {source}")]
    Chatroom { chatroom: AgentId, source: ChatroomError },
    #[error("chatroom of {chatroom} has no equilibrium; no reaction is optimal for every type of {receivers:?}")]
    NoEquilibrium { chatroom: AgentId, receivers: Vec<AgentId> },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("invalid graph: {0}")]
    InvalidGraph(#[from] GraphViolation),
}

/// A rooted tree in which every non-terminal agent heads one chatroom made of
/// herself and her immediate successors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedTree {
    root: AgentId,
    parent: BTreeMap<AgentId, AgentId>,
    children: BTreeMap<AgentId, Vec<AgentId>>,
    order: Vec<AgentId>,
}

impl OrderedTree {
    /// Builds a tree from `(predecessor, successor)` edges. Successors keep the
    /// order in which their edges are listed.
    pub fn from_edges(root: AgentId, edges: &[(AgentId, AgentId)]) -> Result<Self, TreeError> {
        let mut parent = BTreeMap::new();
        let mut children: BTreeMap<AgentId, Vec<AgentId>> = BTreeMap::new();
        let mut agents = BTreeSet::from([root]);
        for &(p, c) in edges {
            if p == c {
                return Err(TreeError::SelfLoop(p));
            }
            if c == root {
                return Err(TreeError::RootHasParent(root));
            }
            if parent.insert(c, p).is_some() {
                return Err(TreeError::MultipleParents(c));
            }
            children.entry(p).or_default().push(c);
            agents.insert(p);
            agents.insert(c);
        }
        let mut order = Vec::with_capacity(agents.len());
        let mut queue = VecDeque::from([root]);
        while let Some(a) = queue.pop_front() {
            order.push(a);
            queue.extend(children.get(&a).into_iter().flatten().copied());
        }
        if order.len() != agents.len() {
            let seen: BTreeSet<_> = order.iter().copied().collect();
            let missing = agents.into_iter().find(|a| !seen.contains(a)).unwrap();
            return Err(TreeError::Unreachable(missing));
        }
        Ok(OrderedTree {
            root,
            parent,
            children,
            order,
        })
    }

    pub fn root(&self) -> AgentId {
        self.root
    }

    pub fn parent(&self, id: AgentId) -> Option<AgentId> {
        self.parent.get(&id).copied()
    }

    pub fn children(&self, id: AgentId) -> &[AgentId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_terminal(&self, id: AgentId) -> bool {
        self.children(id).is_empty()
    }

    /// Agents in breadth-first order from the root.
    pub fn agents(&self) -> &[AgentId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, id: AgentId) -> bool {
        id == self.root || self.parent.contains_key(&id)
    }

    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        self.order
            .iter()
            .flat_map(|&p| self.children(p).iter().map(move |&c| (p, c)))
            .collect()
    }

    /// The chatroom where `id` receives the message, if she is not the root.
    pub fn receiving_chatroom(&self, id: AgentId) -> Option<Chatroom> {
        self.parent(id).map(|p| Chatroom {
            root: p,
            receivers: self.children(p).to_vec(),
        })
    }
}

/// Members of one chatroom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chatroom {
    pub root: AgentId,
    pub receivers: Vec<AgentId>,
}

impl Chatroom {
    /// Everyone in the chatroom except `me`, root first.
    pub fn peers_of(&self, me: AgentId) -> Vec<AgentId> {
        std::iter::once(self.root)
            .chain(self.receivers.iter().copied())
            .filter(|&a| a != me)
            .collect()
    }
}

/// One chatroom per non-terminal agent, in breadth-first order.
pub fn chatrooms_of(tree: &OrderedTree) -> Vec<Chatroom> {
    tree.agents()
        .iter()
        .filter(|&&a| !tree.is_terminal(a))
        .map(|&a| Chatroom {
            root: a,
            receivers: tree.children(a).to_vec(),
        })
        .collect()
}

/// Where an agent's beliefs come from when none is listed for the peers she
/// actually faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefFallback {
    /// Every belief must be listed explicitly.
    #[default]
    Explicit,
    /// Point belief at the peers' actual (singleton) types.
    DiracTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentProfile {
    pub types: TypeSet,
    pub lambda: f64,
    pub ell: u32,
    /// Explicit beliefs, each over a specific set of peers.
    pub beliefs: Vec<SecondOrderBelief>,
}

/// The evidence relation plus every agent's profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    pub evidence: EvidenceRelation,
    pub agents: BTreeMap<AgentId, AgentProfile>,
    pub fallback: BeliefFallback,
}

impl Population {
    pub fn profile(&self, id: AgentId) -> Result<&AgentProfile, CascadeError> {
        self.agents.get(&id).ok_or(CascadeError::MissingProfile(id))
    }

    /// The belief `agent` holds about `peers`, with coordinates in that order.
    ///
    /// An explicit belief over exactly these peers wins; otherwise the fallback
    /// rule applies.
    pub fn belief_for(&self, agent: AgentId, peers: &[AgentId]) -> Result<SecondOrderBelief, CascadeError> {
        let profile = self.profile(agent)?;
        if let Some(b) = profile.beliefs.iter().find_map(|b| b.reordered(peers)) {
            return Ok(b);
        }
        match self.fallback {
            BeliefFallback::DiracTruth => {
                let values = peers
                    .iter()
                    .map(|&p| {
                        self.profile(p)?
                            .types
                            .singleton_value()
                            .ok_or(CascadeError::NotSingleton { peer: p })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SecondOrderBelief::dirac(peers.to_vec(), values))
            }
            BeliefFallback::Explicit => Err(CascadeError::MissingBelief {
                agent,
                peers: peers.to_vec(),
            }),
        }
    }

    /// Copy with every listed agent's sensitivity replaced.
    pub fn with_lambda(&self, agents: &[AgentId], lambda: f64) -> Population {
        let mut out = self.clone();
        for (id, p) in out.agents.iter_mut() {
            if agents.contains(id) {
                p.lambda = lambda;
            }
        }
        out
    }

    fn validate_types(&self) -> Result<(), CascadeError> {
        for (&agent, p) in &self.agents {
            p.types
                .validate(&self.evidence)
                .map_err(|source| CascadeError::Profile { agent, source })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum EquilibriumStatus {
    Unique,
    /// Some chatrooms admitted more than one reaction for a receiver; the
    /// listed chatroom roots had their selection made by the tie rule.
    Multiple { chatrooms: Vec<AgentId> },
}

/// The realised cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeResult {
    pub root: AgentId,
    /// Reaction of every non-root agent; `None` when the message never
    /// reached her.
    pub reactions: BTreeMap<AgentId, Option<ReceiverAction>>,
    /// Forwarding decision of every non-terminal agent; `None` when unreached.
    pub sends: BTreeMap<AgentId, Option<SendEvaluation>>,
    /// Solved chatrooms, in the order the message entered them.
    pub chatrooms: Vec<ChatroomEquilibrium>,
    pub reach: BTreeSet<AgentId>,
    pub status: EquilibriumStatus,
}

impl CascadeResult {
    pub fn reaction(&self, id: AgentId) -> Option<ReceiverAction> {
        self.reactions.get(&id).copied().flatten()
    }

    pub fn send_action(&self, id: AgentId) -> Option<SenderAction> {
        self.sends.get(&id).copied().flatten().map(|e| e.action)
    }

    pub fn reach_count(&self) -> usize {
        self.reach.len()
    }

    pub fn senders(&self) -> Vec<AgentId> {
        self.sends
            .iter()
            .filter(|(_, e)| e.is_some_and(|e| e.action == SenderAction::Send))
            .map(|(id, _)| *id)
            .collect()
    }

    /// Reached non-terminal agents who did not forward the message.
    pub fn truncation_points(&self) -> Vec<AgentId> {
        self.sends
            .iter()
            .filter(|(_, e)| e.is_some_and(|e| e.action == SenderAction::NoSend))
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn is_unique(&self) -> bool {
        self.status == EquilibriumStatus::Unique
    }

    pub fn profile(&self) -> GlobalProfile {
        GlobalProfile {
            reactions: self.reactions.clone(),
            sends: self
                .sends
                .iter()
                .map(|(id, e)| (*id, e.map(|e| e.action)))
                .collect(),
        }
    }
}

/// Actions only, without diagnostics: the object the equilibrium conditions
/// are stated on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GlobalProfile {
    pub reactions: BTreeMap<AgentId, Option<ReceiverAction>>,
    pub sends: BTreeMap<AgentId, Option<SenderAction>>,
}

fn chatroom_game(tree: &OrderedTree, pop: &Population, sender: AgentId) -> Result<ChatroomGame, CascadeError> {
    let room = Chatroom {
        root: sender,
        receivers: tree.children(sender).to_vec(),
    };
    let receivers = room
        .receivers
        .iter()
        .map(|&r| {
            let p = pop.profile(r)?;
            Ok(ChatroomReceiver {
                id: r,
                types: p.types.clone(),
                lambda: p.lambda,
                belief: pop.belief_for(r, &room.peers_of(r))?,
            })
        })
        .collect::<Result<Vec<_>, CascadeError>>()?;
    ChatroomGame::new(pop.evidence, sender, pop.profile(sender)?.types.clone(), receivers)
        .map_err(|source| CascadeError::Chatroom { chatroom: sender, source })
}

fn send_evaluation(tree: &OrderedTree, pop: &Population, agent: AgentId, gate: SendGate) -> Result<SendEvaluation, CascadeError> {
    let receivers = tree.children(agent);
    let belief = pop.belief_for(agent, receivers)?;
    for atom in belief.atoms() {
        for (&peer, &value) in receivers.iter().zip(&atom.profile) {
            if !pop.profile(peer)?.types.contains(value) {
                return Err(CascadeError::Profile {
                    agent,
                    source: ChatroomError::BeliefOutsideTypeSet { agent, peer, value },
                });
            }
        }
    }
    Ok(sender::evaluate_send(&pop.profile(agent)?.types, &belief, &pop.evidence, gate))
}

/// Solves the whole cascade top-down.
///
/// The root forwards iff her expected gain is positive for every type.
/// Every chatroom the message enters is solved on its own; each of its
/// non-terminal receivers then forwards iff fewer than `ell` members of that
/// chatroom disapproved and her expected gain is positive for every type.
pub fn solve_global(tree: &OrderedTree, pop: &Population) -> Result<CascadeResult, CascadeError> {
    for &a in tree.agents() {
        pop.profile(a)?;
    }
    pop.validate_types()?;

    let root = tree.root();
    let mut reactions: BTreeMap<AgentId, Option<ReceiverAction>> =
        tree.agents().iter().filter(|&&a| a != root).map(|&a| (a, None)).collect();
    let mut sends: BTreeMap<AgentId, Option<SendEvaluation>> = tree
        .agents()
        .iter()
        .filter(|&&a| !tree.is_terminal(a))
        .map(|&a| (a, None))
        .collect();
    let mut chatrooms = Vec::new();
    let mut multiple = Vec::new();
    let mut reach = BTreeSet::from([root]);
    let mut queue = VecDeque::new();

    if !tree.is_terminal(root) {
        let eval = send_evaluation(tree, pop, root, SendGate::Root)?;
        sends.insert(root, Some(eval));
        if eval.action == SenderAction::Send {
            queue.push_back(root);
        }
    }

    while let Some(s) = queue.pop_front() {
        let game = chatroom_game(tree, pop, s)?;
        let eq = chatroom::solve_chatroom(&game);
        if !eq.exists() {
            return Err(CascadeError::NoEquilibrium {
                chatroom: s,
                receivers: eq.blocking_receivers(),
            });
        }
        if eq.multiplicity == Multiplicity::Multiple {
            multiple.push(s);
        }
        let disapprovals = eq.disapprovals() as u32;
        for &(r, a) in &eq.actions {
            reactions.insert(r, Some(a));
            reach.insert(r);
        }
        for &r in tree.children(s) {
            if tree.is_terminal(r) {
                continue;
            }
            let gate = SendGate::Threshold {
                ell: pop.profile(r)?.ell,
                disapprovals,
            };
            let eval = send_evaluation(tree, pop, r, gate)?;
            sends.insert(r, Some(eval));
            if eval.action == SenderAction::Send {
                queue.push_back(r);
            }
        }
        chatrooms.push(eq);
    }

    let status = if multiple.is_empty() {
        EquilibriumStatus::Unique
    } else {
        EquilibriumStatus::Multiple { chatrooms: multiple }
    };
    Ok(CascadeResult {
        root,
        reactions,
        sends,
        chatrooms,
        reach,
        status,
    })
}

/// A connected, undirected graph of agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: BTreeMap<AgentId, BTreeSet<AgentId>>,
    self_loops: Vec<AgentId>,
    unknown: Vec<AgentId>,
}

impl SocialGraph {
    pub fn new(agents: impl IntoIterator<Item = AgentId>, edges: &[(AgentId, AgentId)]) -> Self {
        let mut adjacency: BTreeMap<AgentId, BTreeSet<AgentId>> = agents.into_iter().map(|a| (a, BTreeSet::new())).collect();
        let mut self_loops = Vec::new();
        let mut unknown = Vec::new();
        for &(a, b) in edges {
            for x in [a, b] {
                if !adjacency.contains_key(&x) {
                    unknown.push(x);
                }
            }
            if a == b {
                self_loops.push(a);
                continue;
            }
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
        SocialGraph {
            adjacency,
            self_loops,
            unknown,
        }
    }

    /// Graph in which every chatroom of `tree` is a clique.
    pub fn from_tree_closure(tree: &OrderedTree) -> Self {
        let mut edges = Vec::new();
        for room in chatrooms_of(tree) {
            let members: Vec<AgentId> = std::iter::once(room.root).chain(room.receivers).collect();
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k + 1..] {
                    edges.push((a, b));
                }
            }
        }
        SocialGraph::new(tree.agents().iter().copied(), &edges)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbours(&self, a: AgentId) -> &BTreeSet<AgentId> {
        static EMPTY: BTreeSet<AgentId> = BTreeSet::new();
        self.adjacency.get(&a).unwrap_or(&EMPTY)
    }

    pub fn adjacent(&self, a: AgentId, b: AgentId) -> bool {
        self.neighbours(a).contains(&b)
    }

    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    /// Component label of every agent once `removed` is deleted.
    fn components_without(&self, removed: Option<AgentId>) -> BTreeMap<AgentId, usize> {
        let mut label = BTreeMap::new();
        let mut next = 0;
        for start in self.agents() {
            if Some(start) == removed || label.contains_key(&start) {
                continue;
            }
            let mut stack = vec![start];
            label.insert(start, next);
            while let Some(a) = stack.pop() {
                for &b in self.neighbours(a) {
                    if Some(b) != removed && !label.contains_key(&b) {
                        label.insert(b, next);
                        stack.push(b);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Checks that `graph` can be rooted consistently at any agent.
///
/// Besides connectivity and irreflexivity, two local conditions are required
/// of every agent `i` and every pair of neighbours `j`, `k` of `i`:
///
/// * no agent outside `i`'s neighbourhood is adjacent to both `j` and `k`;
/// * if `j` and `k` stay connected once `i` is removed, they are adjacent.
///
/// Together these say every biconnected block is a clique, i.e. the graph is a
/// tree of chatrooms glued at single agents.
pub fn validate_graph(graph: &SocialGraph) -> Result<(), GraphViolation> {
    if graph.is_empty() {
        return Err(GraphViolation::Empty);
    }
    if let Some(&agent) = graph.unknown.first() {
        return Err(GraphViolation::UnknownAgent { agent });
    }
    if let Some(&agent) = graph.self_loops.first() {
        return Err(GraphViolation::SelfLoop { agent });
    }
    let whole = graph.components_without(None);
    let first = graph.agents().next().unwrap();
    if let Some(to) = graph.agents().find(|a| whole[a] != whole[&first]) {
        return Err(GraphViolation::Disconnected { from: first, to });
    }
    for center in graph.agents() {
        let ns: Vec<AgentId> = graph.neighbours(center).iter().copied().collect();
        for (x, &j) in ns.iter().enumerate() {
            for &k in &ns[x + 1..] {
                for &outsider in graph.neighbours(j) {
                    if outsider != center && !graph.adjacent(outsider, center) && graph.adjacent(outsider, k) {
                        return Err(GraphViolation::SharedOutsider { center, j, k, outsider });
                    }
                }
            }
        }
    }
    for center in graph.agents() {
        let ns: Vec<AgentId> = graph.neighbours(center).iter().copied().collect();
        if ns.len() < 2 {
            continue;
        }
        let label = graph.components_without(Some(center));
        for (x, &j) in ns.iter().enumerate() {
            for &k in &ns[x + 1..] {
                if label[&j] == label[&k] && !graph.adjacent(j, k) {
                    return Err(GraphViolation::OpenNeighbourhood { center, j, k });
                }
            }
        }
    }
    Ok(())
}

/// Roots a valid graph at `root` by peeling layers: the root's neighbours are
/// her successors, and the successors of any other agent are her neighbours
/// that are neither her predecessor nor adjacent to him.
pub fn root_tree(graph: &SocialGraph, root: AgentId) -> Result<OrderedTree, CascadeError> {
    validate_graph(graph)?;
    root_validated(graph, root)
}

/// [`root_tree`] for a graph already known to pass [`validate_graph`].
pub(crate) fn root_validated(graph: &SocialGraph, root: AgentId) -> Result<OrderedTree, CascadeError> {
    if !graph.adjacency.contains_key(&root) {
        return Err(GraphViolation::UnknownAgent { agent: root }.into());
    }
    let mut edges = Vec::new();
    let mut queue = VecDeque::new();
    for &c in graph.neighbours(root) {
        edges.push((root, c));
        queue.push_back((c, root));
    }
    while let Some((a, p)) = queue.pop_front() {
        let skip = graph.neighbours(p);
        for &c in graph.neighbours(a) {
            if c != p && !skip.contains(&c) {
                edges.push((a, c));
                queue.push_back((c, a));
            }
        }
    }
    let tree = OrderedTree::from_edges(root, &edges)?;
    if tree.len() != graph.len() {
        let missing = graph.agents().find(|a| !tree.contains(*a)).unwrap();
        return Err(TreeError::Unreachable(missing).into());
    }
    Ok(tree)
}
