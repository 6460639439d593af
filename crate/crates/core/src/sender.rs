//! The forwarding decision.
//!
//! A sender never revises her own worldview. She forwards the message when
//! doing so pulls her receivers' worldviews, in aggregate, closer to hers, and
//! only while fewer than `ell` members of the chatroom she received it in
//! openly disapproved.

use serde::Serialize;

use crate::belief::{BeliefError, Credence, EvidenceRelation};
use crate::chatroom::{SecondOrderBelief, TypeSet};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SenderAction {
    Send,
    NoSend,
}

impl std::fmt::Display for SenderAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SenderAction::Send => "S",
            SenderAction::NoSend => "NS",
        })
    }
}

/// Everything a sender's payoff depends on once her type is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderContext {
    pub own_prior: f64,
    pub receiver_credences: Vec<Credence>,
    pub mu: EvidenceRelation,
    pub ell: u32,
    /// Disapprovals in the chatroom where the sender received the message,
    /// her own reaction included. Zero for the root.
    pub disapproval_count: u32,
}

pub fn similarity_status_quo(ctx: &SenderContext) -> f64 {
    ctx.receiver_credences
        .iter()
        .map(|t| (ctx.mu.prior(t.value()) - ctx.own_prior).abs())
        .sum()
}

/// How much closer, in total, the receivers' worldviews get to the sender's
/// once they update on the message.
pub fn send_gain(ctx: &SenderContext) -> f64 {
    let after: f64 = ctx
        .receiver_credences
        .iter()
        .map(|t| (ctx.mu.posterior(t.value()) - ctx.own_prior).abs())
        .sum();
    similarity_status_quo(ctx) - after
}

pub fn gate_factor(ell: u32, disapprovals: u32) -> u32 {
    ell.saturating_sub(disapprovals)
}

pub fn send_payoff(ctx: &SenderContext) -> f64 {
    gate_factor(ctx.ell, ctx.disapproval_count) as f64 * send_gain(ctx)
}

/// Contribution of one receiver with credence `theta` to [`send_gain`].
pub fn nu_value(theta: Credence, own_prior: f64, mu: &EvidenceRelation) -> Result<f64, BeliefError> {
    let prior = crate::belief::worldview_prior(theta, mu)?;
    let posterior = crate::belief::worldview_posterior(theta, mu)?;
    Ok((own_prior - prior).abs() - (own_prior - posterior).abs())
}

fn nu_raw(theta: f64, own_prior: f64, mu: &EvidenceRelation) -> f64 {
    (own_prior - mu.prior(theta)).abs() - (own_prior - mu.posterior(theta)).abs()
}

/// Credences where the per-receiver contribution changes monotonicity: it
/// rises up to the first, falls between the two, and rises after the second.
pub fn nu_breakpoints(own_prior: f64, mu: &EvidenceRelation) -> (f64, f64) {
    let (a, b) = (mu.mu_given_c(), mu.mu_given_not_c());
    let geo = (a * b).sqrt();
    // Where the posterior reaches the sender's prior, then where the prior does.
    let posterior_hit = a * b / (a - own_prior * (a - b));
    let prior_hit = b + own_prior * (a - b);
    (geo.min(posterior_hit), geo.max(prior_hit))
}

/// Whether the sender is the cascade root or a forwarding receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SendGate {
    Root,
    Threshold { ell: u32, disapprovals: u32 },
}

impl SendGate {
    pub fn is_open(self) -> bool {
        match self {
            SendGate::Root => true,
            SendGate::Threshold { ell, disapprovals } => gate_factor(ell, disapprovals) > 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SendEvaluation {
    pub action: SenderAction,
    pub gate_open: bool,
    /// Smallest expected gain over the sender's types.
    pub worst_expected_gain: f64,
}

/// Expected [`send_gain`] under `belief` for a sender whose prior is `own_prior`.
pub fn expected_gain(own_prior: f64, belief: &SecondOrderBelief, mu: &EvidenceRelation) -> f64 {
    belief
        .atoms()
        .iter()
        .map(|atom| atom.weight * atom.profile.iter().map(|&t| nu_raw(t, own_prior, mu)).sum::<f64>())
        .sum()
}

/// Smallest expected gain over every type in `types`.
///
/// Expected gain is piecewise linear in the sender's prior with kinks at the
/// receivers' priors and posteriors, so over an interval of types the minimum
/// sits at an endpoint or a kink.
pub fn worst_expected_gain(types: &TypeSet, belief: &SecondOrderBelief, mu: &EvidenceRelation) -> f64 {
    let gain = |tau: f64| expected_gain(tau, belief, mu);
    match types {
        TypeSet::Finite(values) => values.iter().map(|&t| gain(mu.prior(t))).fold(f64::INFINITY, f64::min),
        TypeSet::Interval { lo, hi } => {
            let (tau_lo, tau_hi) = (mu.prior(*lo), mu.prior(*hi));
            let kinks = belief
                .atoms()
                .iter()
                .flat_map(|a| a.profile.iter())
                .flat_map(|&t| [mu.prior(t), mu.posterior(t)])
                .filter(|&k| tau_lo < k && k < tau_hi);
            [tau_lo, tau_hi]
                .into_iter()
                .chain(kinks)
                .map(gain)
                .fold(f64::INFINITY, f64::min)
        }
    }
}

pub fn evaluate_send(types: &TypeSet, belief: &SecondOrderBelief, mu: &EvidenceRelation, gate: SendGate) -> SendEvaluation {
    let worst = worst_expected_gain(types, belief, mu);
    let gate_open = gate.is_open();
    // A zero payoff means no send.
    let action = if gate_open && worst > tolerance() {
        SenderAction::Send
    } else {
        SenderAction::NoSend
    };
    SendEvaluation {
        action,
        gate_open,
        worst_expected_gain: worst,
    }
}

pub fn decide_send(types: &TypeSet, belief: &SecondOrderBelief, mu: &EvidenceRelation, gate: SendGate) -> SenderAction {
    evaluate_send(types, belief, mu, gate).action
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{credence_from_prior, validate_evidence};
    use crate::network::AgentId;
    use proptest::prelude::*;

    fn two_receiver_send(replicas: usize, ell: u32, disapprovals: u32) -> SenderContext {
        let mu = validate_evidence(0.02, 0.01).unwrap();
        let mut receiver_credences = vec![credence_from_prior(0.9, &mu).unwrap(); replicas];
        receiver_credences.push(credence_from_prior(0.2, &mu).unwrap());
        SenderContext {
            own_prior: 0.7,
            receiver_credences,
            mu,
            ell,
            disapproval_count: disapprovals,
        }
    }

    #[test]
    fn two_receiver_send_values() {
        let ctx = two_receiver_send(1, 1, 0);
        assert!((similarity_status_quo(&ctx) - 0.7).abs() < 1e-12);
        assert!((send_gain(&ctx) - (0.7 - 35.0 / 57.0)).abs() < 1e-12);
        assert!((send_payoff(&ctx) - (0.7 - 35.0 / 57.0)).abs() < 1e-12);

        let replicated = two_receiver_send(3, 1, 0);
        assert!((similarity_status_quo(&replicated) - 1.1).abs() < 1e-12);
        assert!(send_gain(&replicated) < 0.0);
    }

    #[test]
    fn payoff_gate() {
        let g = send_gain(&two_receiver_send(1, 1, 0));
        assert_eq!(send_payoff(&two_receiver_send(1, 1, 1)), 0.0);
        assert_eq!(send_payoff(&two_receiver_send(1, 2, 5)), 0.0);
        assert!((send_payoff(&two_receiver_send(1, 2, 0)) - 2.0 * g).abs() < 1e-12);
    }

    #[test]
    fn receivers_sharing_prior_give_zero_status_quo() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        let ctx = SenderContext {
            own_prior: 0.4,
            receiver_credences: vec![credence_from_prior(0.4, &mu).unwrap(); 3],
            mu,
            ell: 1,
            disapproval_count: 0,
        };
        assert!(similarity_status_quo(&ctx).abs() < 1e-12);
    }

    #[test]
    fn posterior_landing_on_own_prior() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        // Receiver with credence 0.5 has prior 0.5 and posterior 0.9.
        let ctx = SenderContext {
            own_prior: 0.9,
            receiver_credences: vec![mu.credence(0.5).unwrap()],
            mu,
            ell: 1,
            disapproval_count: 0,
        };
        assert!((send_gain(&ctx) - 0.4).abs() < 1e-12);
    }

    fn dirac(values: &[f64]) -> SecondOrderBelief {
        SecondOrderBelief::dirac((0..values.len() as u32).map(AgentId).collect(), values.to_vec())
    }

    #[test]
    fn decide_send_examples() {
        let mu = validate_evidence(0.02, 0.01).unwrap();
        let own = TypeSet::Finite(vec![credence_from_prior(0.7, &mu).unwrap().value()]);
        let receivers = [0.019, 0.012];
        let open = SendGate::Threshold { ell: 1, disapprovals: 0 };
        assert_eq!(decide_send(&own, &dirac(&receivers), &mu, open), SenderAction::Send);
        assert_eq!(decide_send(&own, &dirac(&receivers), &mu, SendGate::Root), SenderAction::Send);
        let closed = SendGate::Threshold { ell: 1, disapprovals: 1 };
        assert_eq!(decide_send(&own, &dirac(&receivers), &mu, closed), SenderAction::NoSend);
        let replicated = [0.019, 0.019, 0.019, 0.012];
        assert_eq!(decide_send(&own, &dirac(&replicated), &mu, open), SenderAction::NoSend);
    }

    #[test]
    fn zero_expected_gain_means_no_send() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        // A receiver sharing the sender's credence: prior term 0, posterior term
        // positive. Pair it with one whose gain cancels it exactly.
        let own = 0.6;
        let tau = mu.prior(own);
        let loss = -nu_raw(own, tau, &mu);
        // Find a credence whose contribution equals `loss` by bisection on the
        // rising branch below the first breakpoint.
        let (lo_break, _) = nu_breakpoints(tau, &mu);
        let (mut lo, mut hi) = (0.1 + 1e-12, lo_break);
        assert!(nu_raw(hi, tau, &mu) > loss);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if nu_raw(mid, tau, &mu) < loss {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let belief = dirac(&[own, hi]);
        let gain = expected_gain(tau, &belief, &mu);
        assert!(gain.abs() < 1e-12, "{gain}");
        assert_eq!(
            decide_send(&TypeSet::Finite(vec![own]), &belief, &mu, SendGate::Root),
            SenderAction::NoSend
        );
    }

    #[test]
    fn interval_types_need_every_type_to_gain() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        let belief = dirac(&[0.14, 0.14]);
        // Around credence 0.26 forwarding pays; at 0.14 the sender gains nothing.
        assert!(worst_expected_gain(&TypeSet::Finite(vec![0.26]), &belief, &mu) > 0.0);
        assert!(worst_expected_gain(&TypeSet::Interval { lo: 0.14, hi: 0.26 }, &belief, &mu) < 0.0);
        // The interval minimum is no larger than any sampled interior point.
        let worst = worst_expected_gain(&TypeSet::Interval { lo: 0.2, hi: 0.6 }, &belief, &mu);
        for k in 0..=400 {
            let t = 0.2 + 0.4 * k as f64 / 400.0;
            assert!(worst <= expected_gain(mu.prior(t), &belief, &mu) + 1e-12);
        }
    }

    #[test]
    fn nu_examples() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        assert!((nu_value(mu.credence(0.5).unwrap(), 0.5, &mu).unwrap() + 0.4).abs() < 1e-12);
        assert!(nu_value(mu.credence(0.1 + 1e-8).unwrap(), 0.3, &mu).unwrap().abs() < 1e-6);
        let narrow = validate_evidence(0.02, 0.01).unwrap();
        let v = nu_value(narrow.credence(0.012).unwrap(), 0.9, &narrow).unwrap();
        assert!((v - (0.7 - 17.0 / 30.0)).abs() < 1e-12);
    }

    #[test]
    fn breakpoint_examples() {
        let mu = validate_evidence(0.9, 0.1).unwrap();
        let (lo, hi) = nu_breakpoints(0.5, &mu);
        assert!((lo - 0.18).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        let (lo, hi) = nu_breakpoints(1e-12, &mu);
        assert!((lo - 0.1).abs() < 1e-9 && (hi - 0.3).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn gain_is_sum_of_contributions(own in 0.01f64..0.99, ts in prop::collection::vec(0.1001f64..0.8999, 1..6)) {
            let mu = validate_evidence(0.9, 0.1).unwrap();
            let ctx = SenderContext {
                own_prior: own,
                receiver_credences: ts.iter().map(|&t| mu.credence(t).unwrap()).collect(),
                mu,
                ell: 1,
                disapproval_count: 0,
            };
            let sum: f64 = ctx.receiver_credences.iter().map(|&t| nu_value(t, own, &mu).unwrap()).sum();
            prop_assert!((send_gain(&ctx) - sum).abs() < 1e-12);
        }

        #[test]
        fn breakpoints_ordered(own in 0.001f64..0.999, a in 0.02f64..0.99, frac in 0.01f64..0.99) {
            let mu = validate_evidence(a, a * frac).unwrap();
            let (lo, hi) = nu_breakpoints(own, &mu);
            let geo = (mu.mu_given_c() * mu.mu_given_not_c()).sqrt();
            prop_assert!(mu.mu_given_not_c() < lo && lo <= geo && geo <= hi && hi < mu.mu_given_c());
        }

        #[test]
        fn payoff_increases_with_ell(ell in 1u32..10, own in 0.01f64..0.99, ts in prop::collection::vec(0.1001f64..0.8999, 1..4)) {
            let mu = validate_evidence(0.9, 0.1).unwrap();
            let mk = |ell| SenderContext {
                own_prior: own,
                receiver_credences: ts.iter().map(|&t| mu.credence(t).unwrap()).collect(),
                mu,
                ell,
                disapproval_count: 0,
            };
            let g = send_gain(&mk(ell));
            if g > 0.0 {
                prop_assert!(send_payoff(&mk(ell + 1)) > send_payoff(&mk(ell)));
            }
        }
    }
}
