//! The subcommands. Each reads one scenario file and returns a report; the
//! binary decides where it goes and which exit code to use.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chatcascade::network::{self, BeliefFallback, EquilibriumStatus};
use chatcascade::oracle::{self, MAX_CHATROOM_RECEIVERS, MAX_GLOBAL_AGENTS};
use chatcascade::sweep::{self, RootRow};
use chatcascade::{
    AgentId, AgentProfile, CascadeError, CascadeResult, EvidenceRelation, Execution, OrderedTree, Population,
    TypeSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{Cell, Report, Section};
use crate::scenario::{self, Diagnostic, DiagnosticKind, InputError, Topology};

#[derive(Debug, Clone, Copy, Default)]
pub struct Settings {
    pub exec: Execution,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Report(Report),
    /// Already rendered text, e.g. a canonical scenario.
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: Body,
    /// Some solve found a chatroom without an equilibrium.
    pub no_equilibrium: bool,
    /// Diagnostics were reported (validate only).
    pub unclean: bool,
}

impl Output {
    fn report(report: Report) -> Self {
        Output {
            body: Body::Report(report),
            no_equilibrium: false,
            unclean: false,
        }
    }
}

fn ids(list: impl IntoIterator<Item = AgentId>) -> String {
    list.into_iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

fn types_text(t: &TypeSet) -> String {
    match t {
        TypeSet::Finite(v) if v.len() == 1 => v[0].to_string(),
        TypeSet::Finite(v) => format!("{{{}}}", v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")),
        TypeSet::Interval { lo, hi } => format!("[{lo}, {hi}]"),
    }
}

fn status_text(outcome: &Result<CascadeResult, CascadeError>) -> String {
    match outcome {
        Ok(r) => match &r.status {
            EquilibriumStatus::Unique => "unique".into(),
            EquilibriumStatus::Multiple { chatrooms } => format!("multiple({})", ids(chatrooms.iter().copied())),
        },
        Err(CascadeError::NoEquilibrium { chatroom, .. }) => format!("no-equilibrium({chatroom})"),
        Err(e) => format!("error({e})"),
    }
}

/// `root:{receiver=action,...}` for every chatroom the message entered.
fn chatroom_profile(r: &CascadeResult) -> String {
    r.chatrooms
        .iter()
        .map(|eq| {
            let acts: Vec<String> = eq.actions.iter().map(|(id, a)| format!("{id}={a}")).collect();
            format!("{}:{{{}}}", eq.root, acts.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Errors other than a missing equilibrium mean the input was unusable.
fn split(outcome: &Result<CascadeResult, CascadeError>) -> Result<bool, InputError> {
    match outcome {
        Ok(_) => Ok(false),
        Err(CascadeError::NoEquilibrium { .. }) => Ok(true),
        Err(e) => Err(e.clone().into()),
    }
}

pub fn solve(path: &Path) -> Result<Output, InputError> {
    let sc = scenario::load(path)?;
    let tree = sc.rooted_tree()?;
    let outcome = network::solve_global(&tree, &sc.population);
    let no_equilibrium = split(&outcome)?;

    let mut agents = Section::new(
        "agents",
        &["agent", "parent", "role", "types", "lambda", "ell", "eligible", "reaction", "send", "gate", "worst_gain"],
    );
    let eligible: BTreeMap<AgentId, String> = outcome
        .as_ref()
        .map(|r| {
            r.chatrooms
                .iter()
                .flat_map(|eq| eq.eligible.iter().map(|(id, s)| (*id, s.to_string())))
                .collect()
        })
        .unwrap_or_default();
    for &a in tree.agents() {
        let p = &sc.population.agents[&a];
        let role = if a == tree.root() {
            "root"
        } else if tree.is_terminal(a) {
            "terminal"
        } else {
            "relay"
        };
        let (reaction, send) = match &outcome {
            Ok(r) => (
                r.reaction(a).map(|x| x.to_string()),
                r.sends.get(&a).copied().flatten(),
            ),
            Err(_) => (None, None),
        };
        agents.push(vec![
            a.0.into(),
            tree.parent(a).map(|p| p.0).into(),
            role.into(),
            types_text(&p.types).into(),
            p.lambda.into(),
            p.ell.into(),
            eligible.get(&a).cloned().into(),
            reaction.into(),
            send.map(|e| e.action.to_string()).into(),
            send.map(|e| if e.gate_open { "open" } else { "closed" }).into(),
            send.map(|e| e.worst_expected_gain).into(),
        ]);
    }

    let mut summary = Section::new("summary", &["root", "reach", "reached", "senders", "truncated", "status", "blocking"]);
    match &outcome {
        Ok(r) => summary.push(vec![
            r.root.0.into(),
            r.reach_count().into(),
            ids(r.reach.iter().copied()).into(),
            ids(r.senders()).into(),
            ids(r.truncation_points()).into(),
            status_text(&outcome).into(),
            Cell::Empty,
        ]),
        Err(CascadeError::NoEquilibrium { receivers, .. }) => summary.push(vec![
            tree.root().0.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            status_text(&outcome).into(),
            ids(receivers.iter().copied()).into(),
        ]),
        Err(_) => unreachable!("split() turned other errors into input errors"),
    }

    Ok(Output {
        body: Body::Report(Report {
            sections: vec![agents, summary],
        }),
        no_equilibrium,
        unclean: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

/// Solves once per sensitivity, giving that value to every selected agent
/// (all agents when `agents` is empty).
pub fn sweep_lambda(path: &Path, agents: &[u32], range: &LambdaRange, settings: &Settings) -> Result<Output, InputError> {
    let sc = scenario::load(path)?;
    let tree = sc.rooted_tree()?;
    let selected: Vec<AgentId> = if agents.is_empty() {
        sc.population.agents.keys().copied().collect()
    } else {
        agents.iter().map(|&a| AgentId(a)).collect()
    };
    for a in &selected {
        if !sc.population.agents.contains_key(a) {
            return Err(InputError::Usage(format!("--agents: unknown agent {a}")));
        }
    }
    let grid = sweep::lambda_grid(range.from, range.to, range.step).ok_or_else(|| {
        InputError::Usage(format!(
            "lambda range {}..{} with step {} is empty or malformed",
            range.from, range.to, range.step
        ))
    })?;

    let rows = sweep::lambda_sweep(&tree, &sc.population, &selected, &grid, settings.exec);
    let mut section = Section::new("sweep-lambda", &["lambda", "status", "reach", "senders", "truncated", "reactions"]);
    let mut no_equilibrium = false;
    for row in &rows {
        no_equilibrium |= split(&row.outcome)?;
        let ok = row.outcome.as_ref().ok();
        section.push(vec![
            row.lambda.into(),
            status_text(&row.outcome).into(),
            ok.map(CascadeResult::reach_count).into(),
            ok.map(|r| ids(r.senders())).into(),
            ok.map(|r| ids(r.truncation_points())).into(),
            ok.map(chatroom_profile).into(),
        ]);
    }
    Ok(Output {
        no_equilibrium,
        ..Output::report(Report { sections: vec![section] })
    })
}

/// Roots the graph at every agent and ranks the roots by reach.
pub fn sweep_root(path: &Path, settings: &Settings) -> Result<Output, InputError> {
    let sc = scenario::load(path)?;
    let graph = match &sc.topology {
        Topology::Graph { graph, .. } => graph,
        Topology::Tree(_) => {
            return Err(InputError::Usage(
                "sweep-root needs a graph topology (topology.kind = \"graph\")".into(),
            ))
        }
    };
    let rows = sweep::reach_by_root(graph, &sc.population, settings.exec)?;
    let best = sweep::best_roots(&rows);
    let mut section = Section::new("sweep-root", &["root", "status", "reach", "senders", "truncated", "best"]);
    let mut no_equilibrium = false;
    for RootRow { root, outcome } in &rows {
        no_equilibrium |= split(outcome)?;
        let ok = outcome.as_ref().ok();
        section.push(vec![
            root.0.into(),
            status_text(outcome).into(),
            ok.map(CascadeResult::reach_count).into(),
            ok.map(|r| ids(r.senders())).into(),
            ok.map(|r| ids(r.truncation_points())).into(),
            best.contains(root).into(),
        ]);
    }
    let mut summary = Section::new("best-roots", &["roots", "reach"]);
    let top = rows.iter().filter_map(RootRow::reach).max();
    summary.push(vec![ids(best.iter().copied()).into(), top.into()]);
    Ok(Output {
        no_equilibrium,
        ..Output::report(Report {
            sections: vec![section, summary],
        })
    })
}

/// Every problem in the file. With a seed, also compares the engine against
/// the brute-force solver on `draws` random small cascades sharing the
/// scenario's evidence relation.
pub fn validate(path: &Path, draws: usize, settings: &Settings) -> Result<Output, InputError> {
    let file = match scenario::read(path) {
        Ok(f) => Some(f),
        Err(InputError::Parse(msg)) => {
            let d = Diagnostic::new(DiagnosticKind::Schema, "file", one_line(&msg));
            return Ok(diagnostics_report(vec![d], None));
        }
        Err(e) => return Err(e),
    };
    let (sc, mut diags) = file.as_ref().map(|f| f.assemble()).unwrap_or_default();

    let harness = match (settings.seed, &sc) {
        (Some(seed), Some(sc)) => {
            let h = oracle_harness(&sc.population.evidence, seed, draws);
            diags.extend(h.disagreements.iter().cloned());
            Some(h)
        }
        _ => None,
    };
    Ok(diagnostics_report(diags, harness))
}

/// First and last lines of a TOML error: the position and the complaint,
/// without the source excerpt in between.
fn one_line(msg: &str) -> String {
    let lines: Vec<&str> = msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    match (lines.first(), lines.last()) {
        (Some(a), Some(b)) if lines.len() > 1 => format!("{a}: {b}"),
        (Some(a), _) => a.to_string(),
        _ => String::new(),
    }
}

fn diagnostics_report(diags: Vec<Diagnostic>, harness: Option<HarnessSummary>) -> Output {
    let mut section = Section::new("diagnostics", &["kind", "field", "message"]);
    for d in &diags {
        section.push(vec![d.kind.to_string().into(), d.field.clone().into(), d.message.clone().into()]);
    }
    let mut summary = Section::new("summary", &["clean", "diagnostics"]);
    summary.push(vec![diags.is_empty().into(), diags.len().into()]);
    let mut sections = vec![section, summary];
    if let Some(h) = harness {
        let mut s = Section::new("oracle-check", &["seed", "draws", "agreements", "disagreements"]);
        s.push(vec![
            Cell::Text(h.seed.to_string()),
            h.draws.into(),
            h.agreements.into(),
            h.disagreements.len().into(),
        ]);
        sections.push(s);
    }
    Output {
        unclean: !diags.is_empty(),
        ..Output::report(Report { sections })
    }
}

/// The scenario rewritten in canonical form.
pub fn normalize(path: &Path) -> Result<Output, InputError> {
    let sc = scenario::load(path)?;
    Ok(Output {
        body: Body::Text(scenario::to_toml(&sc.to_file())),
        no_equilibrium: false,
        unclean: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessSummary {
    pub seed: u64,
    pub draws: usize,
    pub agreements: usize,
    pub disagreements: Vec<Diagnostic>,
}

/// Random trees of at most [`MAX_GLOBAL_AGENTS`] agents with singleton
/// types, solved by the engine and by exhaustive enumeration.
pub fn oracle_harness(mu: &EvidenceRelation, seed: u64, draws: usize) -> HarnessSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agreements = 0;
    let mut disagreements = Vec::new();
    for draw in 0..draws {
        let (tree, pop) = random_instance(&mut rng, mu);
        let engine = network::solve_global(&tree, &pop);
        let brute = oracle::oracle_global(&tree, &pop);
        let verdict = match (&engine, &brute) {
            (Ok(e), Ok(b)) if b.contains(&e.profile()) && e.is_unique() == (b.len() == 1) => Ok(()),
            (Ok(e), Ok(b)) => Err(format!("engine {:?} ({}), oracle has {} profiles", e.profile(), status_text(&engine), b.len())),
            (Err(e), _) => Err(format!("engine failed: {e}")),
            (_, Err(e)) => Err(format!("oracle failed: {e}")),
        };
        match verdict {
            Ok(()) => agreements += 1,
            Err(msg) => disagreements.push(Diagnostic::new(
                DiagnosticKind::Oracle,
                format!("draw {draw}, edges {:?}", tree.edges().iter().map(|(a, b)| (a.0, b.0)).collect::<Vec<_>>()),
                msg,
            )),
        }
    }
    HarnessSummary {
        seed,
        draws,
        agreements,
        disagreements,
    }
}

fn random_instance(rng: &mut ChaCha8Rng, mu: &EvidenceRelation) -> (OrderedTree, Population) {
    let n = rng.gen_range(2..=MAX_GLOBAL_AGENTS) as u32;
    let mut kids = vec![0usize; n as usize];
    let mut edges = Vec::new();
    for c in 1..n {
        let open: Vec<u32> = (0..c).filter(|&p| kids[p as usize] < MAX_CHATROOM_RECEIVERS).collect();
        let p = open[rng.gen_range(0..open.len())];
        kids[p as usize] += 1;
        edges.push((AgentId(p), AgentId(c)));
    }
    let tree = OrderedTree::from_edges(AgentId(0), &edges).expect("parents precede children");
    let (lo, hi) = (mu.mu_given_not_c(), mu.mu_given_c());
    let pad = (hi - lo) * 1e-6;
    let agents: BTreeMap<AgentId, AgentProfile> = (0..n)
        .map(|a| {
            let theta = rng.gen_range(lo + pad..hi - pad);
            (
                AgentId(a),
                AgentProfile {
                    types: TypeSet::Finite(vec![theta]),
                    lambda: rng.gen_range(0.0..4.0),
                    ell: rng.gen_range(1..=2),
                    beliefs: Vec::new(),
                },
            )
        })
        .collect();
    let pop = Population {
        evidence: *mu,
        agents,
        fallback: BeliefFallback::DiracTruth,
    };
    (tree, pop)
}

/// Agents named in a comma list, deduplicated, in the order given.
pub fn dedup_agents(list: &[u32]) -> Vec<u32> {
    let mut seen = BTreeSet::new();
    list.iter().copied().filter(|a| seen.insert(*a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harness_is_reproducible_and_clean() {
        let mu = EvidenceRelation::new(0.9, 0.1).unwrap();
        let a = oracle_harness(&mu, 7, 200);
        let b = oracle_harness(&mu, 7, 200);
        assert_eq!(a, b);
        assert_eq!(a.agreements, 200, "{:?}", a.disagreements);
    }

    #[test]
    fn text_helpers() {
        assert_eq!(types_text(&TypeSet::Finite(vec![0.5])), "0.5");
        assert_eq!(types_text(&TypeSet::Finite(vec![0.2, 0.3])), "{0.2, 0.3}");
        assert_eq!(types_text(&TypeSet::Interval { lo: 0.2, hi: 0.4 }), "[0.2, 0.4]");
        assert_eq!(dedup_agents(&[3, 1, 3, 2]), vec![3, 1, 2]);
    }
}
