//! Branch and bound over binary variables with an LP-relaxation core.
//!
//! The day-ahead commitment problems here carry at most a few dozen binaries
//! (one on/off per converter-hour), so plain depth-first branch and bound
//! with best-bound pruning on top of the dense simplex is exact and fast.

use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpSolution};

/// Values closer to an integer than this count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-7;
/// Nodes whose bound is not better than the incumbent by this much are cut;
/// proven optimality is therefore within this absolute slack.
const PRUNE_TOL: f64 = 1e-9;
const MAX_NODES: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("no integral solution exists: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Lp(LpError),
    #[error("branch-and-bound node limit of {0} exceeded")]
    NodeLimit(usize),
}

/// A linear program plus a set of variables restricted to {0, 1}.
#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

/// Solve to proven optimality. Returns the incumbent with every binary
/// within [`INTEGRALITY_TOL`] of 0 or 1.
pub fn solve_milp(problem: &MilpProblem) -> Result<LpSolution, MilpError> {
    solve_milp_with_budget(problem, MAX_NODES, true, 0.0)
}

/// [`solve_milp`] with a proof slack: subtrees that cannot beat the incumbent
/// by more than `gap_allowance` are cut, so the result is optimal to within
/// that allowance. The scheduler uses it to stop branch-and-bound from
/// grinding away the negligible idle-floor dust of committed converters.
pub fn solve_milp_near(
    problem: &MilpProblem,
    gap_allowance: f64,
) -> Result<LpSolution, MilpError> {
    solve_milp_with_budget(problem, MAX_NODES, true, gap_allowance)
}

/// Like [`solve_milp_near`] but stops after `max_nodes` nodes and returns the
/// best incumbent found so far instead of failing. The result is then
/// feasible but possibly sub-optimal; callers that only need a witness (e.g.
/// energy-range probing) use this.
pub fn solve_milp_incumbent(
    problem: &MilpProblem,
    max_nodes: usize,
    gap_allowance: f64,
) -> Result<LpSolution, MilpError> {
    solve_milp_with_budget(problem, max_nodes, false, gap_allowance)
}

fn solve_milp_with_budget(
    problem: &MilpProblem,
    max_nodes: usize,
    require_proof: bool,
    gap_allowance: f64,
) -> Result<LpSolution, MilpError> {
    let root = match problem.lp.solve() {
        Ok(sol) => sol,
        Err(LpError::Infeasible(r)) => {
            return Err(MilpError::Infeasible(format!("LP relaxation infeasible ({r:.3e})")))
        }
        Err(e) => return Err(MilpError::Lp(e)),
    };

    // Rounding heuristic: committing everything usually stays feasible
    // (binaries only relax constraints here) and hands branch-and-bound an
    // incumbent before the dive starts.
    let mut incumbent: Option<LpSolution> = None;
    if !problem.binaries.is_empty() {
        let mut rounded = problem.lp.clone();
        for &b in &problem.binaries {
            rounded.set_bounds(b, 1.0, 1.0);
        }
        if let Ok(sol) = rounded.solve() {
            incumbent = Some(sol);
        }
    }

    // stack of (bound overrides, relaxation value hint)
    let mut stack: Vec<(Vec<(usize, f64, f64)>, f64)> = vec![(Vec::new(), root.objective)];
    let mut nodes = 0usize;

    let cutoff = PRUNE_TOL + gap_allowance.max(0.0);
    while let Some((fixes, hint)) = stack.pop() {
        if let Some(best) = &incumbent {
            if hint >= best.objective - cutoff {
                continue;
            }
        }
        nodes += 1;
        if nodes > max_nodes {
            if require_proof || incumbent.is_none() {
                return Err(MilpError::NodeLimit(max_nodes));
            }
            break;
        }
        if std::env::var_os("PTX_MILP_DEBUG").is_some() && nodes % 200 == 0 {
            eprintln!(
                "bb: {nodes} nodes, stack {}, incumbent {:?}",
                stack.len(),
                incumbent.as_ref().map(|s| s.objective)
            );
        }

        let mut lp = problem.lp.clone();
        for &(var, lo, hi) in &fixes {
            lp.set_bounds(var, lo, hi);
        }
        let sol = match lp.solve() {
            Ok(sol) => sol,
            Err(LpError::Infeasible(_)) => continue,
            Err(e) => return Err(MilpError::Lp(e)),
        };
        if let Some(best) = &incumbent {
            if sol.objective >= best.objective - cutoff {
                continue;
            }
        }

        // branch on the first fractional binary in declaration order; for
        // commitment problems that is chronological, which prunes far better
        // than most-fractional here
        let mut branch: Option<(usize, f64)> = None;
        for &b in &problem.binaries {
            let frac = (sol.x[b] - sol.x[b].round()).abs();
            if frac > INTEGRALITY_TOL {
                branch = Some((b, frac));
                break;
            }
        }
        match branch {
            None => {
                // integral: new incumbent
                if incumbent.as_ref().map_or(true, |b| sol.objective < b.objective - PRUNE_TOL) {
                    incumbent = Some(sol);
                }
            }
            Some((var, _)) => {
                // dive towards the rounded value first (pushed last = popped first)
                let val = sol.x[var];
                let mut down = fixes.clone();
                down.push((var, 0.0, 0.0));
                let mut up = fixes;
                up.push((var, 1.0, 1.0));
                if val >= 0.5 {
                    stack.push((down, sol.objective));
                    stack.push((up, sol.objective));
                } else {
                    stack.push((up, sol.objective));
                    stack.push((down, sol.objective));
                }
            }
        }
    }

    incumbent.ok_or_else(|| MilpError::Infeasible("no integral leaf found".to_string()))
}
