//! Exact region counting: enumeration of the counting MILP's binary
//! projections, and an independent brute-force counter used to validate
//! the formulation on small networks.

use std::time::{Duration, Instant};

use num_bigint::BigUint;

use crate::formulation::{
    build_counting_milp, partial_region_lp, Stability, UnitBounds,
};
use crate::lp::LpStatus;
use crate::milp::{enumerate_solutions, SearchConfig};
use crate::model::{ActivationPattern, NetworkModel};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Brute force enumerates up to `2^cap` candidate patterns.
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Clone, Debug)]
pub struct CountResult {
    pub count: BigUint,
    /// True when a solution or node budget stopped the search early; the
    /// count is then a valid lower bound.
    pub truncated: bool,
    pub patterns: Option<Vec<ActivationPattern>>,
    pub nodes: u64,
    pub elapsed: Duration,
}

/// Fills the stable bits around an unstable-unit assignment to produce a
/// complete activation pattern over the counting layers.
pub fn expand_pattern<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    unstable_units: &[(usize, usize)],
    bits: &[bool],
) -> ActivationPattern {
    let mut layers: Vec<Vec<bool>> = net
        .counting_layers()
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            (0..layer.width())
                .map(|i| bounds.layers[l][i].stability == Stability::StablyActive)
                .collect()
        })
        .collect();
    for (&(l, i), &b) in unstable_units.iter().zip(bits) {
        layers[l][i] = b;
    }
    ActivationPattern { layers }
}

/// Counts regions exactly by enumerating the binary projections of the
/// counting MILP. A `solution_limit` or node budget turns the result into
/// a truncated partial count.
pub fn count_exact<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    eps: S,
    with_valid_inequalities: bool,
    emit_patterns: bool,
    solution_limit: usize,
    search: &SearchConfig,
) -> Result<CountResult> {
    let start = Instant::now();
    let cm = build_counting_milp(net, bounds, eps, with_valid_inequalities)?;
    let e = enumerate_solutions(&cm.model, &cm.model.binaries, solution_limit, search)?;
    let patterns = emit_patterns.then(|| {
        e.solutions
            .iter()
            .map(|bits| expand_pattern(net, bounds, &cm.binary_units, bits))
            .collect()
    });
    Ok(CountResult {
        count: BigUint::from(e.solutions.len()),
        truncated: e.truncated,
        patterns,
        nodes: e.nodes,
        elapsed: start.elapsed(),
    })
}

/// Independent counter: depth-first search over unstable units in
/// layer-major order, pruning with the feasibility LP of the assigned
/// prefix. Layer-major order makes the prefix LP valid: every constraint
/// of an assigned unit only references units in earlier layers, which are
/// all assigned.
pub fn count_bruteforce<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    eps: S,
    emit_patterns: bool,
) -> Result<CountResult> {
    let start = Instant::now();
    let unstable = bounds.unstable_units();
    if unstable.len() > BRUTE_FORCE_CAP {
        return Err(Error::BruteForceTooLarge(unstable.len(), BRUTE_FORCE_CAP));
    }
    let depth = net.num_counting_layers();
    // stable bits are fixed up front; unstable slots start unassigned
    let mut assigned: Vec<Vec<Option<bool>>> = (0..depth)
        .map(|l| {
            bounds.layers[l]
                .iter()
                .map(|u| match u.stability {
                    Stability::StablyActive => Some(true),
                    Stability::StablyInactive => Some(false),
                    Stability::Unstable => None,
                })
                .collect()
        })
        .collect();

    let mut count = BigUint::from(0u32);
    let mut patterns = emit_patterns.then(Vec::new);
    let mut nodes = 0u64;
    let mut bits = Vec::with_capacity(unstable.len());
    dfs(
        net,
        bounds,
        eps,
        &unstable,
        &mut assigned,
        &mut bits,
        &mut count,
        &mut patterns,
        &mut nodes,
    )?;
    Ok(CountResult {
        count,
        truncated: false,
        patterns,
        nodes,
        elapsed: start.elapsed(),
    })
}

#[allow(clippy::too_many_arguments)]
fn dfs<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    eps: S,
    unstable: &[(usize, usize)],
    assigned: &mut Vec<Vec<Option<bool>>>,
    bits: &mut Vec<bool>,
    count: &mut BigUint,
    patterns: &mut Option<Vec<ActivationPattern>>,
    nodes: &mut u64,
) -> Result<()> {
    let pos = bits.len();
    if pos == unstable.len() {
        let lp = partial_region_lp(net, bounds, assigned, eps, false)?;
        *nodes += 1;
        if lp.solve()?.status == LpStatus::Optimal {
            *count += 1u32;
            if let Some(ps) = patterns {
                ps.push(expand_pattern(net, bounds, unstable, bits));
            }
        }
        return Ok(());
    }
    let (l, i) = unstable[pos];
    for b in [false, true] {
        assigned[l][i] = Some(b);
        bits.push(b);
        let lp = partial_region_lp(net, bounds, &assigned[..=l], eps, false)?;
        *nodes += 1;
        if lp.solve()?.status == LpStatus::Optimal {
            dfs(net, bounds, eps, unstable, assigned, bits, count, patterns, nodes)?;
        }
        bits.pop();
        assigned[l][i] = None;
    }
    Ok(())
}
