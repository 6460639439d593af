//! Credences in the message and the worldviews they induce.
//!
//! The hypothesis `C` and the message `M` are linked by a fixed evidence
//! relation: every agent agrees on `P(M | C)` and `P(M | not C)`. Under that
//! agreement an agent's whole belief is pinned down by a single number, her
//! credence in `M`, which must lie strictly between the two conditionals. The
//! prior `P(C)` and the posterior `P(C | M)` follow in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("P(M|C) = {given_c} must exceed P(M|not C) = {given_not_c}")]
    OrderingViolation { given_c: f64, given_not_c: f64 },
    #[error("{what} = {value} is not strictly inside (0, 1)")]
    RangeViolation { what: &'static str, value: f64 },
    #[error("credence {value} is not strictly inside ({lo}, {hi})")]
    DomainError { value: f64, lo: f64, hi: f64 },
}

/// The pair `(P(M | C), P(M | not C))` shared by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRelation {
    mu_given_c: f64,
    mu_given_not_c: f64,
}

impl EvidenceRelation {
    pub fn new(mu_given_c: f64, mu_given_not_c: f64) -> Result<Self, BeliefError> {
        validate_evidence(mu_given_c, mu_given_not_c)
    }

    pub fn mu_given_c(&self) -> f64 {
        self.mu_given_c
    }

    pub fn mu_given_not_c(&self) -> f64 {
        self.mu_given_not_c
    }

    /// Whether `value` is an admissible credence: strictly inside the open
    /// interval and at least the tolerance away from both ends.
    pub fn admits(&self, value: f64) -> bool {
        let eps = tolerance();
        value.is_finite() && value > self.mu_given_not_c + eps && value < self.mu_given_c - eps
    }

    pub fn credence(&self, value: f64) -> Result<Credence, BeliefError> {
        Credence::new(value, self)
    }

    pub fn prior(&self, theta: f64) -> f64 {
        (theta - self.mu_given_not_c) / (self.mu_given_c - self.mu_given_not_c)
    }

    pub fn posterior(&self, theta: f64) -> f64 {
        self.mu_given_c / theta * self.prior(theta)
    }

    pub fn worldview(&self, theta: Credence) -> Result<Worldview, BeliefError> {
        Ok(Worldview {
            prior: worldview_prior(theta, self)?,
            posterior: worldview_posterior(theta, self)?,
        })
    }

    fn check(&self, theta: Credence) -> Result<f64, BeliefError> {
        if self.admits(theta.0) {
            Ok(theta.0)
        } else {
            Err(BeliefError::DomainError {
                value: theta.0,
                lo: self.mu_given_not_c,
                hi: self.mu_given_c,
            })
        }
    }
}

/// An agent's credence in the message.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Credence(f64);

impl Credence {
    pub fn new(value: f64, mu: &EvidenceRelation) -> Result<Self, BeliefError> {
        if mu.admits(value) {
            Ok(Credence(value))
        } else {
            Err(BeliefError::DomainError {
                value,
                lo: mu.mu_given_not_c,
                hi: mu.mu_given_c,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Prior and posterior credence in the hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Worldview {
    pub prior: f64,
    pub posterior: f64,
}

pub fn validate_evidence(mu_given_c: f64, mu_given_not_c: f64) -> Result<EvidenceRelation, BeliefError> {
    let eps = tolerance();
    for (what, value) in [("P(M|C)", mu_given_c), ("P(M|not C)", mu_given_not_c)] {
        if !(value.is_finite() && value > eps && value < 1.0 - eps) {
            return Err(BeliefError::RangeViolation { what, value });
        }
    }
    if mu_given_c <= mu_given_not_c + eps {
        return Err(BeliefError::OrderingViolation {
            given_c: mu_given_c,
            given_not_c: mu_given_not_c,
        });
    }
    Ok(EvidenceRelation {
        mu_given_c,
        mu_given_not_c,
    })
}

pub fn worldview_prior(theta: Credence, mu: &EvidenceRelation) -> Result<f64, BeliefError> {
    mu.check(theta).map(|t| mu.prior(t))
}

pub fn worldview_posterior(theta: Credence, mu: &EvidenceRelation) -> Result<f64, BeliefError> {
    mu.check(theta).map(|t| mu.posterior(t))
}

/// Inverse of [`worldview_prior`]: the credence that induces `prior`.
pub fn credence_from_prior(prior: f64, mu: &EvidenceRelation) -> Result<Credence, BeliefError> {
    if !(prior.is_finite() && prior > 0.0 && prior < 1.0) {
        return Err(BeliefError::RangeViolation {
            what: "prior",
            value: prior,
        });
    }
    let theta = mu.mu_given_not_c + prior * (mu.mu_given_c - mu.mu_given_not_c);
    Credence::new(theta, mu)
}
