//! The receiver's reaction problem.
//!
//! A receiver picks one of three public reactions, valued 0 (disapprove),
//! 0.5 (stay silent) and 1 (approve). Her disutility is the distance between
//! the reaction and her own credence plus `lambda` times the expected distance
//! between the reaction and her peers' average credence. Because both terms
//! are piecewise linear in her credence, the set of credences supporting a
//! reaction is a closed interval that can be written down exactly.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::chatroom::SecondOrderBelief;
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReceiverError {
    #[error("belief has no atoms")]
    EmptySupport,
    #[error("no peers given")]
    EmptyPeers,
    #[error("reaction {target} is not the unique closest reaction to the peers' opinion")]
    Infeasible { target: ReceiverAction },
    #[error("support interval endpoints out of order: {0}")]
    OrderingViolation(String),
    #[error("invalid peer distance profile {0:?}")]
    InvalidProfile([f64; 3]),
}

/// A public reaction to the message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverAction {
    Disapprove,
    Silence,
    Approve,
}

impl ReceiverAction {
    pub const ALL: [ReceiverAction; 3] = [
        ReceiverAction::Disapprove,
        ReceiverAction::Silence,
        ReceiverAction::Approve,
    ];

    pub fn value(self) -> f64 {
        match self {
            ReceiverAction::Disapprove => 0.0,
            ReceiverAction::Silence => 0.5,
            ReceiverAction::Approve => 1.0,
        }
    }

    pub fn from_value(value: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.value() == value)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ReceiverAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceiverAction::Disapprove => "0",
            ReceiverAction::Silence => "0.5",
            ReceiverAction::Approve => "1",
        })
    }
}

impl Serialize for ReceiverAction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

/// A subset of the three reactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const FULL: ActionSet = ActionSet(0b111);

    pub fn singleton(a: ReceiverAction) -> Self {
        ActionSet(1 << a.index())
    }

    pub fn insert(&mut self, a: ReceiverAction) {
        self.0 |= 1 << a.index();
    }

    pub fn contains(self, a: ReceiverAction) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn intersect(self, other: ActionSet) -> ActionSet {
        ActionSet(self.0 & other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ReceiverAction> {
        ReceiverAction::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl FromIterator<ReceiverAction> for ActionSet {
    fn from_iter<I: IntoIterator<Item = ReceiverAction>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, a) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for ActionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Expected distance between each reaction and the peers' average credence.
///
/// For a point belief at peer average `b` this is `(b, |0.5 - b|, 1 - b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeerDistanceProfile {
    d: [f64; 3],
}

impl PeerDistanceProfile {
    pub fn new(d0: f64, d05: f64, d1: f64) -> Result<Self, ReceiverError> {
        let d = [d0, d05, d1];
        let eps = tolerance();
        if d.iter().any(|x| !x.is_finite() || *x < 0.0) || d0 + d1 < 1.0 - eps {
            return Err(ReceiverError::InvalidProfile(d));
        }
        Ok(PeerDistanceProfile { d })
    }

    /// Profile of a point belief that the peers' average credence is `b`.
    pub fn dirac(b: f64) -> Self {
        PeerDistanceProfile {
            d: ReceiverAction::ALL.map(|a| (a.value() - b).abs()),
        }
    }

    pub fn get(&self, a: ReceiverAction) -> f64 {
        self.d[a.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.d
    }

    /// The reaction with strictly the smallest expected distance, if any.
    pub fn strict_minimizer(&self) -> Option<ReceiverAction> {
        let eps = tolerance();
        ReceiverAction::ALL.into_iter().find(|&t| {
            ReceiverAction::ALL
                .into_iter()
                .filter(|&a| a != t)
                .all(|a| self.get(a) > self.get(t) + eps)
        })
    }
}

/// The closed set of credences in `[0, 1]` for which `action` is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportInterval {
    pub action: ReceiverAction,
    pub bounds: Option<(f64, f64)>,
}

impl SupportInterval {
    pub fn is_empty(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn lo(&self) -> Option<f64> {
        self.bounds.map(|b| b.0)
    }

    pub fn hi(&self) -> Option<f64> {
        self.bounds.map(|b| b.1)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.bounds.is_some_and(|(lo, hi)| lo <= theta && theta <= hi)
    }

    pub fn contains_range(&self, lo: f64, hi: f64) -> bool {
        self.bounds.is_some_and(|(a, b)| a <= lo && hi <= b)
    }
}

pub fn utility(a: ReceiverAction, theta: f64, d: &PeerDistanceProfile, lambda: f64) -> f64 {
    -((a.value() - theta).abs() + lambda * d.get(a))
}

pub fn peer_distance(p: &SecondOrderBelief) -> Result<PeerDistanceProfile, ReceiverError> {
    if p.atoms().is_empty() {
        return Err(ReceiverError::EmptySupport);
    }
    let mut d = [0.0; 3];
    for atom in p.atoms() {
        let mean = atom.mean();
        for a in ReceiverAction::ALL {
            d[a.index()] += atom.weight * (a.value() - mean).abs();
        }
    }
    Ok(PeerDistanceProfile { d })
}

/// All reactions whose utility is within tolerance of the maximum.
pub fn best_actions(theta: f64, d: &PeerDistanceProfile, lambda: f64) -> ActionSet {
    let u = ReceiverAction::ALL.map(|a| utility(a, theta, d, lambda));
    let best = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = tolerance();
    ReceiverAction::ALL
        .into_iter()
        .filter(|a| u[a.index()] >= best - eps)
        .collect()
}

/// Credences in `[0, 1]` for which `a` is a best reaction, in closed form.
///
/// `a` beats `other` iff `|a - t| - |other - t| <= lambda * (d_other - d_a)`.
/// The left-hand side is monotone in `t` with slope 0 or +-2, so every
/// pairwise condition is a half-line and the support is their intersection.
pub fn support_interval(a: ReceiverAction, d: &PeerDistanceProfile, lambda: f64) -> SupportInterval {
    let eps = tolerance();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for other in ReceiverAction::ALL.into_iter().filter(|&o| o != a) {
        let slack = lambda * (d.get(other) - d.get(a)) + eps;
        let gap = (other.value() - a.value()).abs();
        if slack >= gap {
            continue;
        }
        if slack < -gap {
            return SupportInterval { action: a, bounds: None };
        }
        let cut = if other > a {
            (slack + a.value() + other.value()) / 2.0
        } else {
            (a.value() + other.value() - slack) / 2.0
        };
        if other > a {
            hi = hi.min(cut);
        } else {
            lo = lo.max(cut);
        }
    }
    SupportInterval {
        action: a,
        bounds: (lo <= hi).then_some((lo, hi)),
    }
}

pub fn support_intervals(d: &PeerDistanceProfile, lambda: f64) -> [SupportInterval; 3] {
    ReceiverAction::ALL.map(|a| support_interval(a, d, lambda))
}

/// Endpoints of the three supports, in the order they are expected to appear
/// along `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointChain {
    pub endpoints: Vec<(&'static str, f64)>,
}

/// Checks `lo(0) <= lo(0.5) <= hi(0) <= lo(1) <= hi(0.5) <= hi(1)`, skipping
/// the endpoints of empty supports.
pub fn interval_ordering_check(d: &PeerDistanceProfile, lambda: f64) -> Result<EndpointChain, ReceiverError> {
    let [s0, s05, s1] = support_intervals(d, lambda);
    let chain = [
        ("lo(0)", s0.lo()),
        ("lo(0.5)", s05.lo()),
        ("hi(0)", s0.hi()),
        ("lo(1)", s1.lo()),
        ("hi(0.5)", s05.hi()),
        ("hi(1)", s1.hi()),
    ];
    let endpoints: Vec<_> = chain.into_iter().filter_map(|(n, v)| v.map(|v| (n, v))).collect();
    // Supports are inflated by the tie tolerance, so neighbouring endpoints
    // can cross by a few multiples of it.
    let slack = 4.0 * tolerance();
    for w in endpoints.windows(2) {
        if w[0].1 > w[1].1 + slack {
            return Err(ReceiverError::OrderingViolation(format!(
                "{} = {} > {} = {} (d = {:?}, lambda = {lambda})",
                w[0].0,
                w[0].1,
                w[1].0,
                w[1].1,
                d.as_array()
            )));
        }
    }
    Ok(EndpointChain { endpoints })
}

/// Smallest sensitivity at which `target` becomes a best reaction for a
/// receiver with credence `theta`.
///
/// Requires `target` to be the unique minimiser of `d`; otherwise no finite
/// threshold is guaranteed and [`ReceiverError::Infeasible`] is returned.
pub fn min_lambda_for_action(theta: f64, d: &PeerDistanceProfile, target: ReceiverAction) -> Result<f64, ReceiverError> {
    if d.strict_minimizer() != Some(target) {
        return Err(ReceiverError::Infeasible { target });
    }
    let own = (target.value() - theta).abs();
    Ok(ReceiverAction::ALL
        .into_iter()
        .filter(|&a| a != target)
        .map(|a| (own - (a.value() - theta).abs()) / (d.get(a) - d.get(target)))
        .fold(0.0, f64::max))
}

/// Sensitivity above which the reaction closest to the peers' opinion is the
/// unique best reaction for every credence in `[0, 1]`.
///
/// The threshold for a given credence is a maximum of ratios whose numerators
/// `|t - x| - |a - x|` peak at `|t - a|` when `x = a`, so the supremum over
/// credences is `max_a |t - a| / (d_a - d_t)`.
pub fn lambda_star(d: &PeerDistanceProfile) -> Result<f64, ReceiverError> {
    let target = d.strict_minimizer().ok_or(ReceiverError::Infeasible {
        target: ReceiverAction::Silence,
    })?;
    Ok(ReceiverAction::ALL
        .into_iter()
        .filter(|&a| a != target)
        .map(|a| (target.value() - a.value()).abs() / (d.get(a) - d.get(target)))
        .fold(0.0, f64::max))
}

/// Utility that measures peer pressure as the average distance to each peer's
/// credence rather than the distance to their average credence.
pub fn alt_utility(a: ReceiverAction, theta: f64, peer_thetas: &[f64], lambda: f64) -> Result<f64, ReceiverError> {
    if peer_thetas.is_empty() {
        return Err(ReceiverError::EmptyPeers);
    }
    let n = peer_thetas.len() as f64;
    let spread: f64 = peer_thetas.iter().map(|t| (a.value() - t).abs()).sum();
    Ok(-((a.value() - theta).abs() + lambda / n * spread))
}

pub fn alt_best_actions(theta: f64, peer_thetas: &[f64], lambda: f64) -> Result<ActionSet, ReceiverError> {
    let u = ReceiverAction::ALL
        .into_iter()
        .map(|a| alt_utility(a, theta, peer_thetas, lambda))
        .collect::<Result<Vec<_>, _>>()?;
    let best = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = tolerance();
    Ok(ReceiverAction::ALL
        .into_iter()
        .filter(|a| u[a.index()] >= best - eps)
        .collect())
}
