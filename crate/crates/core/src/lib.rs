//! Equilibrium engine for a message travelling through a tree of chatrooms.
//!
//! Every non-terminal agent of an ordered tree owns a chatroom made of herself
//! and her immediate successors. When she forwards the message, each receiver
//! publicly reacts with one of three actions (disapprove, stay silent, approve),
//! trading off her own credence in the message against the average credence of
//! her peers. A receiver who is herself non-terminal then decides whether to
//! forward it, based on how much the message would pull her successors'
//! worldviews towards her own and on how many people in her chatroom openly
//! disapproved.
//!
//! The crate is organised bottom-up:
//!
//! * [`belief`]: credences in the message and the induced prior/posterior
//!   worldviews.
//! * [`receiver`]: the receiver's utility, best responses and the interval
//!   structure of the credences supporting each action.
//! * [`chatroom`]: the per-chatroom Bayesian game and its constant-strategy
//!   equilibria.
//! * [`sender`]: forwarding payoffs and the forwarding decision.
//! * [`network`]: ordered trees, undirected chatroom graphs, and the global
//!   equilibrium of a whole cascade.
//! * [`oracle`]: naive brute-force verifiers used by the test-suites.
//! * [`sweep`]: batch evaluation across sensitivities and roots, parallel when
//!   the `parallel` feature is on.

pub mod belief;
pub mod chatroom;
pub mod exec;
pub mod network;
pub mod oracle;
pub mod receiver;
pub mod sender;
pub mod sweep;
mod tolerance;

pub use belief::{Credence, EvidenceRelation, Worldview};
pub use chatroom::{ChatroomEquilibrium, ChatroomGame, Multiplicity, SecondOrderBelief, TypeSet};
pub use exec::Execution;
pub use network::{
    AgentId, AgentProfile, CascadeError, CascadeResult, OrderedTree, Population, SocialGraph,
};
pub use receiver::{ActionSet, PeerDistanceProfile, ReceiverAction, SupportInterval};
pub use sender::{SenderAction, SenderContext};
pub use tolerance::{set_tolerance, tolerance, DEFAULT_TOLERANCE};
