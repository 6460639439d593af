//! Library half of the `chatcascade` binary: scenario files, subcommands and
//! report rendering. Kept separate from `main` so the tests can drive it.

pub mod commands;
pub mod report;
pub mod scenario;
