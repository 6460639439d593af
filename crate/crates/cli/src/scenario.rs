//! Scenario files: the TOML schema, its checks, and the model it builds.
//!
//! Parsing is two-stage. [`parse`] only turns text into a [`ScenarioFile`]
//! (syntax and field types, with line context from the TOML reader).
//! [`ScenarioFile::assemble`] then checks everything that needs more than one
//! field at once and either builds a [`Scenario`] or returns diagnostics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chatcascade::belief::{self, BeliefError};
use chatcascade::network::{self, BeliefFallback, Chatroom, TreeError};
use chatcascade::{
    AgentId, AgentProfile, CascadeError, EvidenceRelation, OrderedTree, Population, SecondOrderBelief, SocialGraph,
    TypeSet,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub evidence: EvidenceTable,
    pub topology: TopologyTable,
    #[serde(default, skip_serializing_if = "DefaultsTable::is_empty")]
    pub defaults: DefaultsTable,
    #[serde(default)]
    pub agents: Vec<AgentEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceTable {
    /// P(M | C)
    pub given_c: f64,
    /// P(M | not C)
    pub given_not_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    /// Directed edges `[predecessor, successor]`.
    Tree,
    /// Undirected edges; chatrooms are recovered from the cliques.
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyTable {
    pub kind: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u32>,
    #[serde(default)]
    pub edges: Vec<[u32; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefMode {
    /// Point belief at the peers' actual singleton types unless listed.
    #[default]
    DiracTruth,
    /// Every belief an agent needs must be listed.
    Explicit,
}

impl From<BeliefMode> for BeliefFallback {
    fn from(m: BeliefMode) -> Self {
        match m {
            BeliefMode::DiracTruth => BeliefFallback::DiracTruth,
            BeliefMode::Explicit => BeliefFallback::Explicit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefaultsTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<BeliefMode>,
}

impl DefaultsTable {
    fn is_empty(&self) -> bool {
        self.lambda.is_none() && self.ell.is_none() && self.beliefs.is_none()
    }
}

/// One agent. Exactly one of `credence`, `types`, `interval` and `prior`
/// gives her type set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    /// Singleton type entered through the agent's prior worldview.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beliefs: Vec<BeliefEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefEntry {
    pub peers: Vec<u32>,
    pub atoms: Vec<AtomEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    #[serde(default = "unit_weight")]
    pub weight: f64,
    /// One credence per peer, in the order of `peers`.
    pub credences: Vec<f64>,
}

fn unit_weight() -> f64 {
    1.0
}

/// What kind of problem a diagnostic reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    /// Missing, conflicting or malformed fields.
    Schema,
    /// Evidence relation not ordered.
    Ordering,
    /// A probability or credence outside its admissible range.
    Range,
    /// An id that names no agent, or names one twice.
    Reference,
    /// A tree that is not a tree.
    Topology,
    /// A graph that cannot be turned into chatrooms.
    Graph,
    /// Beliefs that do not fit the chatrooms or the type sets.
    Belief,
    /// Engine and brute-force solver disagree.
    Oracle,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Schema => "schema",
            DiagnosticKind::Ordering => "ordering",
            DiagnosticKind::Range => "range",
            DiagnosticKind::Reference => "reference",
            DiagnosticKind::Topology => "topology",
            DiagnosticKind::Graph => "graph",
            DiagnosticKind::Belief => "belief",
            DiagnosticKind::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Where in the file, e.g. `agents[2].beliefs[0]`.
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, field: impl Into<String>, message: impl fmt::Display) -> Self {
        Diagnostic {
            kind,
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error at {}: {}", self.kind, self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n{}", render_diagnostics(.0))]
    Schema(Vec<Diagnostic>),
    #[error("{0}")]
    Usage(String),
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

pub fn parse(text: &str) -> Result<ScenarioFile, InputError> {
    toml::from_str(text).map_err(|e| InputError::Parse(e.to_string().trim_end().to_string()))
}

pub fn read(path: &Path) -> Result<ScenarioFile, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Tree(OrderedTree),
    Graph { graph: SocialGraph, root: Option<AgentId> },
}

/// A checked scenario, ready to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub population: Population,
    pub topology: Topology,
}

impl Scenario {
    /// The tree to solve: the given tree, or the graph rooted at its root.
    pub fn rooted_tree(&self) -> Result<OrderedTree, InputError> {
        match &self.topology {
            Topology::Tree(t) => Ok(t.clone()),
            Topology::Graph { graph, root: Some(r) } => {
                network::root_tree(graph, *r).map_err(|e| schema(DiagnosticKind::Graph, "topology", e))
            }
            Topology::Graph { root: None, .. } => Err(schema(
                DiagnosticKind::Schema,
                "topology.root",
                "a root is required to solve a graph scenario",
            )),
        }
    }

    /// Canonical file: every agent spelled out in id order, defaults folded
    /// in, tree edges in breadth-first order and graph edges sorted.
    pub fn to_file(&self) -> ScenarioFile {
        let (kind, root, edges) = match &self.topology {
            Topology::Tree(t) => (TopologyKind::Tree, Some(t.root().0), t.edges()),
            Topology::Graph { graph, root } => (TopologyKind::Graph, root.map(|r| r.0), graph.edges()),
        };
        let mode = match self.population.fallback {
            BeliefFallback::DiracTruth => BeliefMode::DiracTruth,
            BeliefFallback::Explicit => BeliefMode::Explicit,
        };
        let agents = self
            .population
            .agents
            .iter()
            .map(|(id, p)| {
                let (credence, types, interval) = match &p.types {
                    TypeSet::Finite(v) if v.len() == 1 => (Some(v[0]), None, None),
                    TypeSet::Finite(v) => (None, Some(v.clone()), None),
                    TypeSet::Interval { lo, hi } => (None, None, Some([*lo, *hi])),
                };
                AgentEntry {
                    id: id.0,
                    credence,
                    types,
                    interval,
                    prior: None,
                    lambda: Some(p.lambda),
                    ell: Some(p.ell),
                    beliefs: p
                        .beliefs
                        .iter()
                        .map(|b| BeliefEntry {
                            peers: b.peers().iter().map(|a| a.0).collect(),
                            atoms: b
                                .atoms()
                                .iter()
                                .map(|a| AtomEntry {
                                    weight: a.weight,
                                    credences: a.profile.clone(),
                                })
                                .collect(),
                        })
                        .collect(),
                }
            })
            .collect();
        ScenarioFile {
            evidence: EvidenceTable {
                given_c: self.population.evidence.mu_given_c(),
                given_not_c: self.population.evidence.mu_given_not_c(),
            },
            topology: TopologyTable {
                kind,
                root,
                edges: edges.into_iter().map(|(a, b)| [a.0, b.0]).collect(),
            },
            defaults: DefaultsTable {
                lambda: None,
                ell: None,
                beliefs: Some(mode),
            },
            agents,
        }
    }
}

pub fn to_toml(file: &ScenarioFile) -> String {
    toml::to_string(file).expect("scenario files always serialise")
}

fn schema(kind: DiagnosticKind, field: impl Into<String>, message: impl fmt::Display) -> InputError {
    InputError::Schema(vec![Diagnostic::new(kind, field, message)])
}

fn belief_diag(e: &BeliefError) -> DiagnosticKind {
    match e {
        BeliefError::OrderingViolation { .. } => DiagnosticKind::Ordering,
        _ => DiagnosticKind::Range,
    }
}

impl ScenarioFile {
    /// Every problem found in the file. Empty iff [`ScenarioFile::build`]
    /// succeeds.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.assemble().1
    }

    pub fn build(&self) -> Result<Scenario, InputError> {
        match self.assemble() {
            (Some(s), d) if d.is_empty() => Ok(s),
            (_, d) => Err(InputError::Schema(d)),
        }
    }

    /// Checks the file and builds the model when nothing blocks it.
    pub fn assemble(&self) -> (Option<Scenario>, Vec<Diagnostic>) {
        let mut diags = Vec::new();

        let evidence = match belief::validate_evidence(self.evidence.given_c, self.evidence.given_not_c) {
            Ok(mu) => Some(mu),
            Err(e) => {
                note(&mut diags, belief_diag(&e), "evidence".into(), e.to_string());
                None
            }
        };

        if let Some(l) = self.defaults.lambda {
            if !(l.is_finite() && l >= 0.0) {
                note(&mut diags, DiagnosticKind::Range, "defaults.lambda".into(), format!("sensitivity {l} is not a finite non-negative number"));
            }
        }

        let mut seen = BTreeSet::new();
        for (k, a) in self.agents.iter().enumerate() {
            if !seen.insert(a.id) {
                note(&mut diags, DiagnosticKind::Reference, format!("agents[{k}].id"), format!("agent {} is declared twice", a.id));
            }
        }
        let known = |id: u32| seen.contains(&id);

        // Type sets first: beliefs are checked against them.
        let mut types: BTreeMap<AgentId, TypeSet> = BTreeMap::new();
        let mut profiles: BTreeMap<AgentId, AgentProfile> = BTreeMap::new();
        for (k, a) in self.agents.iter().enumerate() {
            let at = |f: &str| format!("agents[{k}].{f}");
            let given = [a.credence.is_some(), a.types.is_some(), a.interval.is_some(), a.prior.is_some()];
            let set = match given.iter().filter(|g| **g).count() {
                0 => {
                    note(&mut diags, DiagnosticKind::Schema, format!("agents[{k}]"), format!("agent {} needs one of credence, types, interval or prior", a.id));
                    None
                }
                1 => evidence.and_then(|mu| match type_set(a, &mu) {
                    Ok(s) => Some(s),
                    Err((field, msg)) => {
                        note(&mut diags, DiagnosticKind::Range, at(field), msg);
                        None
                    }
                }),
                _ => {
                    note(&mut diags, DiagnosticKind::Schema, format!("agents[{k}]"), format!("agent {} gives more than one of credence, types, interval and prior", a.id));
                    None
                }
            };
            let lambda = match a.lambda.or(self.defaults.lambda) {
                None => {
                    note(&mut diags, DiagnosticKind::Schema, at("lambda"), "missing, and no defaults.lambda".into());
                    None
                }
                Some(l) if !(l.is_finite() && l >= 0.0) => {
                    if a.lambda.is_some() {
                        note(&mut diags, DiagnosticKind::Range, at("lambda"), format!("sensitivity {l} is not a finite non-negative number"));
                    }
                    None
                }
                Some(l) => Some(l),
            };
            let ell = a.ell.or(self.defaults.ell);
            if ell.is_none() {
                note(&mut diags, DiagnosticKind::Schema, at("ell"), "missing, and no defaults.ell".into());
            }
            if let Some(s) = &set {
                types.insert(AgentId(a.id), s.clone());
            }
            if let (Some(types), Some(lambda), Some(ell)) = (set, lambda, ell) {
                profiles.insert(
                    AgentId(a.id),
                    AgentProfile {
                        types,
                        lambda,
                        ell,
                        beliefs: Vec::new(),
                    },
                );
            }
        }

        for (k, a) in self.agents.iter().enumerate() {
            for (b, entry) in a.beliefs.iter().enumerate() {
                let field = format!("agents[{k}].beliefs[{b}]");
                let mut ok = true;
                for &p in &entry.peers {
                    if !known(p) {
                        note(&mut diags, DiagnosticKind::Reference, format!("{field}.peers"), format!("unknown agent {p}"));
                        ok = false;
                    } else if p == a.id {
                        note(&mut diags, DiagnosticKind::Belief, format!("{field}.peers"), format!("agent {p} cannot hold a belief about herself"));
                        ok = false;
                    }
                }
                let peers: Vec<AgentId> = entry.peers.iter().map(|&p| AgentId(p)).collect();
                let atoms = entry.atoms.iter().map(|x| (x.credences.clone(), x.weight)).collect();
                let belief = match SecondOrderBelief::new(peers.clone(), atoms) {
                    Ok(b) => b,
                    Err(e) => {
                        note(&mut diags, DiagnosticKind::Belief, field, e.to_string());
                        continue;
                    }
                };
                for (n, atom) in entry.atoms.iter().enumerate() {
                    for (peer, value) in peers.iter().zip(&atom.credences) {
                        if types.get(peer).is_some_and(|t| !t.contains(*value)) {
                            note(&mut diags, 
                                DiagnosticKind::Belief,
                                format!("{field}.atoms[{n}]"),
                                format!("credence {value} for agent {peer} is outside that agent's type set"),
                            );
                            ok = false;
                        }
                    }
                }
                if ok {
                    if let Some(p) = profiles.get_mut(&AgentId(a.id)) {
                        p.beliefs.push(belief);
                    }
                }
            }
        }

        let mut edges = Vec::with_capacity(self.topology.edges.len());
        for (k, &[a, b]) in self.topology.edges.iter().enumerate() {
            for x in [a, b] {
                if !known(x) {
                    note(&mut diags, DiagnosticKind::Reference, format!("topology.edges[{k}]"), format!("unknown agent {x}"));
                }
            }
            edges.push((AgentId(a), AgentId(b)));
        }
        let root = self.topology.root.map(AgentId);
        if let Some(r) = self.topology.root {
            if !known(r) {
                note(&mut diags, DiagnosticKind::Reference, "topology.root".into(), format!("unknown agent {r}"));
            }
        }

        let topology = match self.topology.kind {
            TopologyKind::Tree => match root {
                None => {
                    note(&mut diags, DiagnosticKind::Schema, "topology.root".into(), "a tree needs a root".into());
                    None
                }
                Some(r) => match OrderedTree::from_edges(r, &edges) {
                    Ok(t) => {
                        for a in &self.agents {
                            if !t.contains(AgentId(a.id)) {
                                note(&mut diags, DiagnosticKind::Topology, "topology.edges".into(), TreeError::Unreachable(AgentId(a.id)).to_string());
                            }
                        }
                        Some(Topology::Tree(t))
                    }
                    Err(e) => {
                        note(&mut diags, DiagnosticKind::Topology, "topology.edges".into(), e.to_string());
                        None
                    }
                },
            },
            TopologyKind::Graph => {
                let graph = SocialGraph::new(self.agents.iter().map(|a| AgentId(a.id)), &edges);
                match network::validate_graph(&graph) {
                    Ok(()) => Some(Topology::Graph { graph, root }),
                    Err(v) => {
                        note(&mut diags, DiagnosticKind::Graph, "topology.edges".into(), v.to_string());
                        None
                    }
                }
            }
        };

        // Belief dimensions against the chatrooms each agent can sit in.
        if let Some(t) = &topology {
            for (k, a) in self.agents.iter().enumerate() {
                let me = AgentId(a.id);
                let rooms = candidate_peer_sets(t, me);
                for (b, entry) in a.beliefs.iter().enumerate() {
                    let peers: BTreeSet<AgentId> = entry.peers.iter().map(|&p| AgentId(p)).collect();
                    let fits = match &rooms {
                        PeerSets::Exact(sets) => sets.contains(&peers),
                        PeerSets::Within(nbhd) => peers.is_subset(nbhd),
                    };
                    if !fits {
                        note(&mut diags, 
                            DiagnosticKind::Belief,
                            format!("agents[{k}].beliefs[{b}].peers"),
                            format!("peers {:?} match no chatroom of agent {}", entry.peers, a.id),
                        );
                    }
                }
            }
        }

        let population = evidence.map(|evidence| Population {
            evidence,
            agents: profiles,
            fallback: self.defaults.beliefs.unwrap_or_default().into(),
        });

        // Beliefs the solver will ask for, under every rooting the file allows.
        if let (Some(pop), Some(t), true) = (&population, &topology, diags.is_empty()) {
            let trees: Vec<OrderedTree> = match t {
                Topology::Tree(tree) => vec![tree.clone()],
                Topology::Graph { graph, root: Some(r) } => network::root_tree(graph, *r).into_iter().collect(),
                Topology::Graph { graph, root: None } => {
                    graph.agents().filter_map(|r| network::root_tree(graph, r).ok()).collect()
                }
            };
            let mut missing = BTreeSet::new();
            for tree in &trees {
                for room in network::chatrooms_of(tree) {
                    let asks = std::iter::once((room.root, room.receivers.clone()))
                        .chain(room.receivers.iter().map(|&r| (r, room.peers_of(r))));
                    for (agent, peers) in asks {
                        if let Err(e) = pop.belief_for(agent, &peers) {
                            let index = self.agents.iter().position(|a| a.id == agent.0).unwrap_or(0);
                            missing.insert((index, agent, peers, e.to_string()));
                        }
                    }
                }
            }
            for (index, _, _, message) in missing {
                note(&mut diags, DiagnosticKind::Belief, format!("agents[{index}].beliefs"), message);
            }
        }

        let scenario = match (population, topology) {
            (Some(population), Some(topology)) if diags.is_empty() => Some(Scenario { population, topology }),
            _ => None,
        };
        (scenario, diags)
    }
}

fn note(diags: &mut Vec<Diagnostic>, kind: DiagnosticKind, field: String, message: String) {
    diags.push(Diagnostic { kind, field, message });
}

fn type_set(a: &AgentEntry, mu: &EvidenceRelation) -> Result<TypeSet, (&'static str, String)> {
    if let Some(c) = a.credence {
        mu.credence(c).map(TypeSet::singleton).map_err(|e| ("credence", e.to_string()))
    } else if let Some(v) = &a.types {
        TypeSet::finite(v.clone(), mu).map_err(|e| ("types", e.to_string()))
    } else if let Some([lo, hi]) = a.interval {
        TypeSet::interval(lo, hi, mu).map_err(|e| ("interval", e.to_string()))
    } else {
        let p = a.prior.unwrap_or(f64::NAN);
        belief::credence_from_prior(p, mu)
            .map(TypeSet::singleton)
            .map_err(|e| ("prior", e.to_string()))
    }
}

enum PeerSets {
    /// A tree fixes the chatrooms: the one an agent receives in, the one
    /// she sends into.
    Exact(Vec<BTreeSet<AgentId>>),
    /// In a graph the rooting decides; any subset of the neighbourhood can
    /// come up.
    Within(BTreeSet<AgentId>),
}

fn candidate_peer_sets(t: &Topology, me: AgentId) -> PeerSets {
    match t {
        Topology::Tree(tree) => {
            let mut sets = Vec::new();
            if let Some(room) = tree.receiving_chatroom(me) {
                sets.push(peer_set(&room, me));
            }
            if !tree.is_terminal(me) {
                sets.push(tree.children(me).iter().copied().collect());
            }
            PeerSets::Exact(sets)
        }
        Topology::Graph { graph, .. } => PeerSets::Within(graph.neighbours(me).clone()),
    }
}

fn peer_set(room: &Chatroom, me: AgentId) -> BTreeSet<AgentId> {
    room.peers_of(me).into_iter().collect()
}

/// Builds the model or fails with every diagnostic; used where a clean file
/// is a precondition.
pub fn load(path: &Path) -> Result<Scenario, InputError> {
    read(path)?.build()
}

impl From<CascadeError> for InputError {
    fn from(e: CascadeError) -> Self {
        let kind = match e {
            CascadeError::InvalidGraph(_) => DiagnosticKind::Graph,
            CascadeError::Tree(_) => DiagnosticKind::Topology,
            CascadeError::MissingProfile(_) => DiagnosticKind::Reference,
            _ => DiagnosticKind::Belief,
        };
        schema(kind, "scenario", e)
    }
}
