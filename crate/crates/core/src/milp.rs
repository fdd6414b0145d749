//! Branch and bound over [`LinearProgram`]s with 0-1 variables.
//!
//! Two entry points: [`solve_milp`] optimizes and supports lazy cuts via an
//! incumbent callback, and [`enumerate_solutions`] collects every distinct
//! binary projection of the feasible set, optionally thresholded on the
//! objective. Branching is deterministic (most-fractional, ties by lowest
//! index) so runs are reproducible.

use std::collections::HashSet;

use crate::lp::{LinearProgram, LpStatus, Objective, Row};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Integrality tolerance.
pub const INT_TOL: f64 = 1e-7;

pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;

/// A linear program with a designated set of 0-1 variables.
#[derive(Clone, Debug)]
pub struct MilpModel<S> {
    pub lp: LinearProgram<S>,
    pub binaries: Vec<usize>,
    /// Keep only solutions whose objective reaches this value (used by the
    /// region-counting model to force active units strictly positive).
    pub objective_threshold: Option<S>,
}

impl<S: Scalar> MilpModel<S> {
    pub fn new(lp: LinearProgram<S>, binaries: Vec<usize>) -> Self {
        MilpModel {
            lp,
            binaries,
            objective_threshold: None,
        }
    }

    fn validate(&self) -> Result<()> {
        for &b in &self.binaries {
            if b >= self.lp.num_vars() {
                return Err(Error::Invalid(format!("binary index {b} out of range")));
            }
            let (lo, hi) = self.lp.bounds(b);
            if lo < -S::from_f64_lossy(INT_TOL) || hi > S::one() + S::from_f64_lossy(INT_TOL) {
                return Err(Error::Invalid(format!(
                    "binary variable {b} not bounded in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MilpSolution<S> {
    pub status: LpStatus,
    pub primal: Vec<S>,
    pub objective: S,
    pub nodes: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub node_limit: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

/// Result of exhaustive projection enumeration.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub solutions: Vec<Vec<bool>>,
    /// True when the solution or node budget stopped the search early; the
    /// collected set is then a valid partial enumeration.
    pub truncated: bool,
    pub nodes: u64,
}

struct OptSearch<'a, 'b, S> {
    lp: LinearProgram<S>,
    binaries: &'a [usize],
    maximize: bool,
    nodes: u64,
    node_limit: u64,
    best: Option<(S, Vec<S>)>,
    callback: Option<&'b mut dyn FnMut(&[S]) -> Vec<Row<S>>>,
}

impl<'a, 'b, S: Scalar> OptSearch<'a, 'b, S> {
    /// Signed objective: larger is better regardless of the LP sense.
    fn score(&self, obj: S) -> S {
        if self.maximize {
            obj
        } else {
            -obj
        }
    }

    fn node(&mut self) -> Result<Option<LpStatus>> {
        let itol = S::from_f64_lossy(INT_TOL);
        loop {
            self.nodes += 1;
            if self.nodes > self.node_limit {
                return Err(Error::NodeLimit(self.node_limit));
            }
            let sol = self.lp.solve()?;
            match sol.status {
                LpStatus::Infeasible => return Ok(None),
                LpStatus::Unbounded => {
                    // Binaries live in boxes, so unboundedness is in the
                    // continuous part and survives any further fixing.
                    return Ok(Some(LpStatus::Unbounded));
                }
                LpStatus::Optimal => {}
            }
            if let Some((best, _)) = &self.best {
                if self.score(sol.objective) <= *best + itol {
                    return Ok(None);
                }
            }
            // most-fractional binary, ties by lowest index
            let mut branch: Option<(usize, S)> = None;
            for &b in self.binaries {
                let v = sol.primal[b];
                let frac = (v - v.round()).abs();
                if frac > itol {
                    let better = match branch {
                        None => true,
                        Some((_, bf)) => frac > bf + itol,
                    };
                    if better {
                        branch = Some((b, frac));
                    }
                }
            }
            match branch {
                None => {
                    // integer-feasible incumbent
                    if let Some(cb) = self.callback.as_mut() {
                        let cuts = cb(&sol.primal);
                        if !cuts.is_empty() {
                            let tol = S::from_f64_lossy(crate::lp::FEAS_TOL);
                            let mut violated = false;
                            for cut in cuts {
                                let lhs: S = cut
                                    .coeffs
                                    .iter()
                                    .zip(&sol.primal)
                                    .map(|(c, v)| *c * *v)
                                    .sum();
                                let sat = match cut.sense {
                                    crate::lp::Sense::Le => lhs <= cut.rhs + tol,
                                    crate::lp::Sense::Ge => lhs >= cut.rhs - tol,
                                    crate::lp::Sense::Eq => (lhs - cut.rhs).abs() <= tol,
                                };
                                violated |= !sat;
                                self.lp.add_row(cut)?;
                            }
                            if violated {
                                // incumbent discarded; re-solve this node
                                // under the new cuts
                                continue;
                            }
                        }
                    }
                    let score = self.score(sol.objective);
                    let improves = match &self.best {
                        None => true,
                        Some((b, _)) => score > *b,
                    };
                    if improves {
                        self.best = Some((score, sol.primal));
                    }
                    return Ok(None);
                }
                Some((b, _)) => {
                    let saved = self.lp.bounds(b);
                    for v in [S::zero(), S::one()] {
                        self.lp.set_bounds(b, v, v);
                        if let Some(status) = self.node()? {
                            self.lp.set_bounds(b, saved.0, saved.1);
                            return Ok(Some(status));
                        }
                    }
                    self.lp.set_bounds(b, saved.0, saved.1);
                    return Ok(None);
                }
            }
        }
    }
}

/// Solves the model to optimality. The callback, when given, is invoked on
/// every integer-feasible incumbent and may return cut rows; the cuts are
/// appended to the model for the remainder of the search and the incumbent
/// is discarded if it violates any of them.
pub fn solve_milp<S: Scalar>(
    model: &MilpModel<S>,
    mut callback: Option<&mut dyn FnMut(&[S]) -> Vec<Row<S>>>,
    config: &SearchConfig,
) -> Result<MilpSolution<S>> {
    model.validate()?;
    let maximize = model.lp.sense() == Objective::Maximize;
    let mut search = OptSearch {
        lp: model.lp.clone(),
        binaries: &model.binaries,
        maximize,
        nodes: 0,
        node_limit: config.node_limit,
        best: None,
        callback: callback.take(),
    };
    let status = search.node()?;
    let nodes = search.nodes;
    if let Some(LpStatus::Unbounded) = status {
        return Ok(MilpSolution {
            status: LpStatus::Unbounded,
            primal: Vec::new(),
            objective: if maximize {
                S::infinity()
            } else {
                -S::infinity()
            },
            nodes,
        });
    }
    match search.best {
        Some((score, primal)) => Ok(MilpSolution {
            status: LpStatus::Optimal,
            objective: if maximize { score } else { -score },
            primal,
            nodes,
        }),
        None => Ok(MilpSolution {
            status: LpStatus::Infeasible,
            primal: Vec::new(),
            objective: S::nan(),
            nodes,
        }),
    }
}

/// Enumerates all distinct projections onto `projection` of feasible
/// solutions, keeping those whose objective reaches the model threshold.
/// Exact when `truncated` is false.
pub fn enumerate_solutions<S: Scalar>(
    model: &MilpModel<S>,
    projection: &[usize],
    limit: usize,
    config: &SearchConfig,
) -> Result<Enumeration> {
    model.validate()?;
    if limit == 0 {
        return Err(Error::Invalid("enumeration limit must be at least 1".into()));
    }
    if model.objective_threshold.is_some() && model.lp.sense() != Objective::Maximize {
        return Err(Error::Invalid(
            "objective threshold requires a maximization objective".into(),
        ));
    }
    let mut lp = model.lp.clone();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut out = Vec::new();
    let mut nodes = 0u64;
    let mut truncated = false;
    let itol = S::from_f64_lossy(INT_TOL);

    // DFS fixing the binaries in index order; LP relaxation prunes
    // infeasible and below-threshold subtrees.
    fn dfs<S: Scalar>(
        lp: &mut LinearProgram<S>,
        binaries: &[usize],
        depth: usize,
        projection: &[usize],
        threshold: Option<S>,
        itol: S,
        limit: usize,
        node_limit: u64,
        nodes: &mut u64,
        seen: &mut HashSet<Vec<bool>>,
        out: &mut Vec<Vec<bool>>,
        truncated: &mut bool,
    ) -> Result<()> {
        if out.len() >= limit {
            *truncated = true;
            return Ok(());
        }
        *nodes += 1;
        if *nodes > node_limit {
            *truncated = true;
            return Ok(());
        }
        let sol = lp.solve()?;
        let (feasible, obj_ok, primal) = match sol.status {
            LpStatus::Infeasible => (false, false, Vec::new()),
            LpStatus::Unbounded => (true, true, Vec::new()),
            LpStatus::Optimal => {
                let ok = match threshold {
                    Some(t) => sol.objective >= t - itol,
                    None => true,
                };
                (true, ok, sol.primal)
            }
        };
        if !feasible || !obj_ok {
            return Ok(());
        }
        if depth == binaries.len() {
            let bits: Vec<bool> = projection
                .iter()
                .map(|&v| {
                    let (lo, _) = lp.bounds(v);
                    lo > S::from_f64_lossy(0.5)
                })
                .collect();
            // projections over fixed binaries; non-binary projection vars
            // would need the primal, which enumeration does not support
            let _ = primal;
            if seen.insert(bits.clone()) {
                out.push(bits);
            }
            return Ok(());
        }
        let b = binaries[depth];
        let saved = lp.bounds(b);
        for v in [S::zero(), S::one()] {
            lp.set_bounds(b, v, v);
            dfs(
                lp, binaries, depth + 1, projection, threshold, itol, limit, node_limit, nodes,
                seen, out, truncated,
            )?;
            if *truncated && out.len() >= limit {
                break;
            }
        }
        lp.set_bounds(b, saved.0, saved.1);
        Ok(())
    }

    dfs(
        &mut lp,
        &model.binaries,
        0,
        projection,
        model.objective_threshold,
        itol,
        limit,
        config.node_limit,
        &mut nodes,
        &mut seen,
        &mut out,
        &mut truncated,
    )?;
    Ok(Enumeration {
        solutions: out,
        truncated,
        nodes,
    })
}
