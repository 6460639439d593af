//! Parameter sweeps over sensitivities and over choices of root.


use crate::exec::Execution;
use crate::network::{self, AgentId, CascadeError, CascadeResult, OrderedTree, Population, SocialGraph};

/// `lo, lo + step, ...` up to `hi`, with `hi` itself included when the step
/// lands on it within rounding.
pub fn lambda_grid(lo: f64, hi: f64, step: f64) -> Option<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || lo < 0.0 || hi < lo || step <= 0.0 {
        return None;
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Some((0..=n).map(|k| lo + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    pub outcome: Result<CascadeResult, CascadeError>,
}

/// Solves the cascade once per value, giving every agent in `agents` that
/// sensitivity. Rows follow the order of `lambdas`.
pub fn lambda_sweep(tree: &OrderedTree, pop: &Population, agents: &[AgentId], lambdas: &[f64], exec: Execution) -> Vec<LambdaRow> {
    exec.map(lambdas, |&lambda| LambdaRow {
        lambda,
        outcome: network::solve_global(tree, &pop.with_lambda(agents, lambda)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootRow {
    pub root: AgentId,
    pub outcome: Result<CascadeResult, CascadeError>,
}

impl RootRow {
    pub fn reach(&self) -> Option<usize> {
        self.outcome.as_ref().ok().map(CascadeResult::reach_count)
    }
}

/// Roots the graph at every agent in turn and solves each cascade. Failures
/// are kept per row; an invalid graph fails the whole sweep.
pub fn reach_by_root(graph: &SocialGraph, pop: &Population, exec: Execution) -> Result<Vec<RootRow>, CascadeError> {
    network::validate_graph(graph)?;
    let roots: Vec<AgentId> = graph.agents().collect();
    Ok(exec.map(&roots, |&root| RootRow {
        root,
        outcome: network::root_validated(graph, root).and_then(|t| network::solve_global(&t, pop)),
    }))
}

/// Roots whose reach is largest, in id order.
pub fn best_roots(rows: &[RootRow]) -> Vec<AgentId> {
    let best = rows.iter().filter_map(RootRow::reach).max();
    rows.iter()
        .filter(|r| best.is_some() && r.reach() == best)
        .map(|r| r.root)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_end() {
        assert_eq!(lambda_grid(1.0, 2.0, 0.5).unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(lambda_grid(0.0, 0.3, 0.1).unwrap().len(), 4);
        assert_eq!(lambda_grid(1.0, 1.0, 1.0).unwrap(), vec![1.0]);
        assert!(lambda_grid(2.0, 1.0, 0.5).is_none());
        assert!(lambda_grid(0.0, 1.0, 0.0).is_none());
        assert!(lambda_grid(-1.0, 1.0, 0.5).is_none());
    }
}
