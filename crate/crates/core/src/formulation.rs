//! Translation of a rectifier network into the region-counting MILP:
//! tightened big-M constants, stability and leaning classification, the
//! big-M unit encoding with the objective linking rows, optional valid
//! inequalities between consecutive layers, per-region feasibility LPs,
//! and the convex outer approximation of a single ReLU.

use serde::{Deserialize, Serialize};

use crate::lp::{LinearProgram, LpStatus, Objective, Sense};
use crate::milp::{self, MilpModel, SearchConfig};
use crate::model::{ActivationPattern, NetworkModel};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Default positivity margin for active units. Strict inequalities are not
/// LP-representable, so `g >= eps` stands in for `g > 0`; it sits well
/// above the solver feasibility tolerance so that eps decisions dominate.
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    StablyActive,
    StablyInactive,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Leaning {
    ActiveLeaning,
    InactiveLeaning,
    NotApplicable,
}

/// Big-M constants and classification for one unit: `pre_act_max` bounds
/// the pre-activation from above, `neg_pre_act_max` bounds its negation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UnitBound<S> {
    pub pre_act_max: S,
    pub neg_pre_act_max: S,
    pub stability: Stability,
    pub leaning: Leaning,
}

impl<S: Scalar> UnitBound<S> {
    pub fn classify(pre_act_max: S, neg_pre_act_max: S, bias: S) -> Self {
        let stability = if pre_act_max <= S::zero() {
            Stability::StablyInactive
        } else if neg_pre_act_max < S::zero() {
            Stability::StablyActive
        } else {
            Stability::Unstable
        };
        let leaning = if stability == Stability::Unstable {
            if bias > S::zero() {
                Leaning::ActiveLeaning
            } else {
                Leaning::InactiveLeaning
            }
        } else {
            Leaning::NotApplicable
        };
        UnitBound {
            pre_act_max,
            neg_pre_act_max,
            stability,
            leaning,
        }
    }

    fn check(&self, layer: usize, unit: usize) -> Result<()> {
        if self.pre_act_max < -self.neg_pre_act_max {
            return Err(Error::InvalidUnitBounds { layer, unit });
        }
        Ok(())
    }
}

/// Per-unit bounds over the counting layers of a network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitBounds<S> {
    pub layers: Vec<Vec<UnitBound<S>>>,
}

impl<S: Scalar> UnitBounds<S> {
    pub fn validate(&self) -> Result<()> {
        for (l, layer) in self.layers.iter().enumerate() {
            for (i, ub) in layer.iter().enumerate() {
                ub.check(l + 1, i + 1)?;
            }
        }
        Ok(())
    }

    pub fn num_unstable(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .filter(|u| u.stability == Stability::Unstable)
            .count()
    }

    /// Unstable unit coordinates in layer-major order.
    pub fn unstable_units(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (i, u) in layer.iter().enumerate() {
                if u.stability == Stability::Unstable {
                    out.push((l, i));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TightenMethod {
    Interval,
    Lp,
    Milp,
}

/// Computes valid big-M constants for every counting-layer unit, layer by
/// layer, substituting stable units before deeper layers are processed.
///
/// `Interval` propagates elementwise maxima; `Milp` solves the exact
/// prefix optimization per unit; `Lp` is the same sequence with the
/// binaries relaxed. All three overestimate the true maxima, with
/// `interval >= lp >= milp` elementwise.
pub fn tighten_bounds<S: Scalar>(
    net: &NetworkModel<S>,
    method: TightenMethod,
    config: &SearchConfig,
) -> Result<UnitBounds<S>> {
    net.validate()?;
    match method {
        TightenMethod::Interval => tighten_interval(net),
        TightenMethod::Lp => tighten_opt(net, false, config),
        TightenMethod::Milp => tighten_opt(net, true, config),
    }
}

fn tighten_interval<S: Scalar>(net: &NetworkModel<S>) -> Result<UnitBounds<S>> {
    let mut lo: Vec<S> = net.domain.lower.clone();
    let mut hi: Vec<S> = net.domain.upper.clone();
    let mut layers = Vec::new();
    for layer in net.counting_layers() {
        let mut out = Vec::with_capacity(layer.width());
        let mut next_lo = Vec::with_capacity(layer.width());
        let mut next_hi = Vec::with_capacity(layer.width());
        for (row, &b) in layer.weights.iter().zip(&layer.bias) {
            let mut g_lo = b;
            let mut g_hi = b;
            for (&w, (&l, &h)) in row.iter().zip(lo.iter().zip(&hi)) {
                if w >= S::zero() {
                    g_lo = g_lo + w * l;
                    g_hi = g_hi + w * h;
                } else {
                    g_lo = g_lo + w * h;
                    g_hi = g_hi + w * l;
                }
            }
            out.push(UnitBound::classify(g_hi, -g_lo, b));
            next_lo.push(g_lo.max(S::zero()));
            next_hi.push(g_hi.max(S::zero()));
        }
        lo = next_lo;
        hi = next_hi;
        layers.push(out);
    }
    Ok(UnitBounds { layers })
}

fn tighten_opt<S: Scalar>(
    net: &NetworkModel<S>,
    integral: bool,
    config: &SearchConfig,
) -> Result<UnitBounds<S>> {
    let mut bounds = UnitBounds { layers: Vec::new() };
    for (l, layer) in net.counting_layers().iter().enumerate() {
        // prefix model over layers < l with the bounds settled so far
        let built = build_network_lp(net, &bounds, l, None)?;
        let mut out = Vec::with_capacity(layer.width());
        for (row, &b) in layer.weights.iter().zip(&layer.bias) {
            let mut hi = b;
            let mut lo = b;
            for dir_max in [true, false] {
                let mut lp = built.lp.clone();
                let mut obj = vec![S::zero(); lp.num_vars()];
                let prev: &[Option<usize>] = if l == 0 {
                    &built.vars.x_as_h
                } else {
                    &built.vars.h[l - 1]
                };
                for (&w, slot) in row.iter().zip(prev) {
                    if let Some(v) = *slot {
                        obj[v] = if dir_max { w } else { -w };
                    }
                }
                lp.set_objective(obj, Objective::Maximize);
                let val = if integral && !built.binaries.is_empty() {
                    let model = MilpModel::new(lp, built.binaries.clone());
                    let sol = milp::solve_milp(&model, None, config)?;
                    if sol.status != LpStatus::Optimal {
                        return Err(Error::Invalid("prefix model has no solution".into()));
                    }
                    sol.objective
                } else {
                    let sol = lp.solve()?;
                    if sol.status != LpStatus::Optimal {
                        return Err(Error::Invalid("prefix model has no solution".into()));
                    }
                    sol.objective
                };
                if dir_max {
                    hi = val + b;
                } else {
                    lo = -val + b;
                }
            }
            out.push(UnitBound::classify(hi, -lo, b));
        }
        bounds.layers.push(out);
    }
    Ok(bounds)
}

/// Column indices of the network LP, per counting layer.
#[derive(Clone, Debug, Default)]
pub struct NetworkVars {
    pub x: Vec<usize>,
    /// `x` wrapped as `Some` slots so layer 0 and deeper layers share code.
    x_as_h: Vec<Option<usize>>,
    /// Output column of each unit; `None` for stably inactive units.
    pub h: Vec<Vec<Option<usize>>>,
    /// Complementary-output column; only unstable units have one.
    pub h_bar: Vec<Vec<Option<usize>>>,
    /// Activity indicator column; only unstable units have one.
    pub z: Vec<Vec<Option<usize>>>,
    pub objective_var: Option<usize>,
}

pub struct BuiltLp<S> {
    pub lp: LinearProgram<S>,
    pub vars: NetworkVars,
    pub binaries: Vec<usize>,
    /// Layer-major unit coordinates of `binaries`.
    pub binary_units: Vec<(usize, usize)>,
}

/// The counting MILP: maximize the margin variable over the big-M network
/// encoding; its feasible z-projections with positive margin are exactly
/// the activation patterns with nonempty regions.
pub struct CountingMilp<S> {
    pub model: MilpModel<S>,
    pub vars: NetworkVars,
    pub binary_units: Vec<(usize, usize)>,
    pub eps: S,
}

/// Builds the big-M LP over counting layers `0..depth` (no objective).
/// Stably inactive units are dropped and stably active units reduce to
/// their affine row.
fn build_network_lp<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    depth: usize,
    eps_margin: Option<S>,
) -> Result<BuiltLp<S>> {
    let mut lp = LinearProgram::new(Objective::Maximize);
    let mut vars = NetworkVars::default();
    let mut binaries = Vec::new();
    let mut binary_units = Vec::new();
    let inf = S::infinity();

    for d in 0..net.input_dim {
        let v = lp.add_var(net.domain.lower[d], net.domain.upper[d], S::zero());
        vars.x.push(v);
        vars.x_as_h.push(Some(v));
    }
    let mut rows: Vec<(Vec<(usize, S)>, Sense, S)> = Vec::new();
    for l in 0..depth {
        let layer = &net.layers[l];
        let ub_layer = &bounds.layers[l];
        let mut h_slots = Vec::with_capacity(layer.width());
        let mut hb_slots = Vec::with_capacity(layer.width());
        let mut z_slots = Vec::with_capacity(layer.width());
        for (i, (wrow, &b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let ub = &ub_layer[i];
            ub.check(l + 1, i + 1)?;
            let h_hi = ub.pre_act_max.max(S::zero());
            let prev = if l == 0 { &vars.x_as_h } else { &vars.h[l - 1] };
            let affine = |h_var: usize| {
                let mut terms = vec![(h_var, S::one())];
                for (&w, slot) in wrow.iter().zip(prev) {
                    if let Some(p) = *slot {
                        if w != S::zero() {
                            terms.push((p, -w));
                        }
                    }
                }
                terms
            };
            match ub.stability {
                Stability::StablyInactive => {
                    h_slots.push(None);
                    hb_slots.push(None);
                    z_slots.push(None);
                }
                Stability::StablyActive => {
                    let h = lp.add_var(-ub.neg_pre_act_max, h_hi, S::zero());
                    rows.push((affine(h), Sense::Eq, b));
                    h_slots.push(Some(h));
                    hb_slots.push(None);
                    z_slots.push(None);
                }
                Stability::Unstable => {
                    let hb_hi = ub.neg_pre_act_max.max(S::zero());
                    let h = lp.add_var(S::zero(), h_hi, S::zero());
                    let hb = lp.add_var(S::zero(), hb_hi, S::zero());
                    let z = lp.add_var(S::zero(), S::one(), S::zero());
                    // h - h_bar = g = W h_prev + b
                    let mut terms = affine(h);
                    terms.push((hb, -S::one()));
                    rows.push((terms, Sense::Eq, b));
                    // h <= H z
                    rows.push((vec![(h, S::one()), (z, -ub.pre_act_max)], Sense::Le, S::zero()));
                    // h_bar <= Hbar (1 - z)
                    rows.push((
                        vec![(hb, S::one()), (z, ub.neg_pre_act_max)],
                        Sense::Le,
                        ub.neg_pre_act_max,
                    ));
                    binaries.push(z);
                    binary_units.push((l, i));
                    h_slots.push(Some(h));
                    hb_slots.push(Some(hb));
                    z_slots.push(Some(z));
                }
            }
        }
        vars.h.push(h_slots);
        vars.h_bar.push(hb_slots);
        vars.z.push(z_slots);
    }

    // Margin variable and its linking rows: f <= h + (1 - z) M for
    // unstable units, f <= h for stably active ones. M is the unit's H,
    // floored at eps so the cap alone can never push the margin below
    // the positivity threshold of a region the unit is inactive in.
    if let Some(eps) = eps_margin {
        let f = lp.add_var(-inf, inf, S::one());
        vars.objective_var = Some(f);
        for l in 0..depth {
            for (i, ub) in bounds.layers[l].iter().enumerate() {
                match ub.stability {
                    Stability::StablyInactive => {}
                    Stability::StablyActive => {
                        let h = vars.h[l][i].unwrap();
                        rows.push((vec![(f, S::one()), (h, -S::one())], Sense::Le, S::zero()));
                    }
                    Stability::Unstable => {
                        let h = vars.h[l][i].unwrap();
                        let z = vars.z[l][i].unwrap();
                        let m = ub.pre_act_max.max(eps);
                        rows.push((
                            vec![(f, S::one()), (h, -S::one()), (z, m)],
                            Sense::Le,
                            m,
                        ));
                    }
                }
            }
        }
    }

    for (terms, sense, rhs) in rows {
        lp.add_sparse_row(&terms, sense, rhs)?;
    }
    Ok(BuiltLp {
        lp,
        vars,
        binaries,
        binary_units,
    })
}

/// Builds the counting MILP over all counting layers. With
/// `with_valid_inequalities`, the consecutive-layer activity implications
/// are added for every leaning unstable unit in layers 2 onward.
pub fn build_counting_milp<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    eps: S,
    with_valid_inequalities: bool,
) -> Result<CountingMilp<S>> {
    if eps <= S::zero() {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    bounds.validate()?;
    let depth = net.num_counting_layers();
    let mut built = build_network_lp(net, bounds, depth, Some(eps))?;

    if with_valid_inequalities {
        for l in 1..depth {
            let layer = &net.layers[l];
            for (i, ub) in bounds.layers[l].iter().enumerate() {
                if ub.stability != Stability::Unstable {
                    continue;
                }
                let zi = built.vars.z[l][i].unwrap();
                match ub.leaning {
                    Leaning::InactiveLeaning => {
                        // active only with a positive contribution from below
                        let mut terms = vec![(zi, S::one())];
                        let mut vacuous = false;
                        for (j, &w) in layer.weights[i].iter().enumerate() {
                            if w <= S::zero() {
                                continue;
                            }
                            match bounds.layers[l - 1][j].stability {
                                Stability::StablyActive => vacuous = true,
                                Stability::StablyInactive => {}
                                Stability::Unstable => {
                                    terms.push((built.vars.z[l - 1][j].unwrap(), -S::one()));
                                }
                            }
                        }
                        if !vacuous {
                            built.lp.add_sparse_row(&terms, Sense::Le, S::zero())?;
                        }
                    }
                    Leaning::ActiveLeaning => {
                        // inactive only with a negative contribution from below
                        let mut terms = vec![(zi, -S::one())];
                        let mut vacuous = false;
                        for (j, &w) in layer.weights[i].iter().enumerate() {
                            if w >= S::zero() {
                                continue;
                            }
                            match bounds.layers[l - 1][j].stability {
                                Stability::StablyActive => vacuous = true,
                                Stability::StablyInactive => {}
                                Stability::Unstable => {
                                    terms.push((built.vars.z[l - 1][j].unwrap(), -S::one()));
                                }
                            }
                        }
                        if !vacuous {
                            built.lp.add_sparse_row(&terms, Sense::Le, -S::one())?;
                        }
                    }
                    Leaning::NotApplicable => {}
                }
            }
        }
    }

    let mut model = MilpModel::new(built.lp, built.binaries);
    model.objective_threshold = Some(eps);
    Ok(CountingMilp {
        model,
        vars: built.vars,
        binary_units: built.binary_units,
        eps,
    })
}

/// Feasibility LP of a fully or partially assigned activation pattern:
/// active units need `g >= eps`, inactive units `g <= 0` (or `g <= -eps`
/// with `full_dim`). Units may be left unassigned only in a trailing
/// layer-major suffix; they contribute no constraints.
pub fn partial_region_lp<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    assigned: &[Vec<Option<bool>>],
    eps: S,
    full_dim: bool,
) -> Result<LinearProgram<S>> {
    let mut lp = LinearProgram::new(Objective::Minimize);
    let mut h_cols: Vec<Vec<Option<usize>>> = Vec::new();
    let mut x_cols = Vec::new();
    for d in 0..net.input_dim {
        x_cols.push(Some(lp.add_var(net.domain.lower[d], net.domain.upper[d], S::zero())));
    }
    let mut rows: Vec<(Vec<(usize, S)>, Sense, S)> = Vec::new();
    for (l, layer) in net.counting_layers().iter().enumerate() {
        if l >= assigned.len() {
            break;
        }
        let mut slots = Vec::with_capacity(layer.width());
        for (i, (wrow, &b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let state = assigned[l].get(i).copied().flatten();
            let prev: &[Option<usize>] = if l == 0 { &x_cols } else { &h_cols[l - 1] };
            match state {
                Some(true) => {
                    let hi = bounds.layers[l][i].pre_act_max.max(eps);
                    let h = lp.add_var(eps, hi, S::zero());
                    let mut terms = vec![(h, S::one())];
                    for (&w, slot) in wrow.iter().zip(prev) {
                        if let Some(p) = *slot {
                            if w != S::zero() {
                                terms.push((p, -w));
                            }
                        }
                    }
                    rows.push((terms, Sense::Eq, b));
                    slots.push(Some(h));
                }
                Some(false) => {
                    let mut terms = Vec::new();
                    for (&w, slot) in wrow.iter().zip(prev) {
                        if let Some(p) = *slot {
                            if w != S::zero() {
                                terms.push((p, w));
                            }
                        }
                    }
                    let rhs = if full_dim { -b - eps } else { -b };
                    if terms.is_empty() {
                        if b > if full_dim { -eps } else { S::zero() } {
                            // constant pre-activation violates inactivity
                            rows.push((vec![(x_cols[0].unwrap(), S::zero())], Sense::Ge, S::one()));
                        }
                    } else {
                        rows.push((terms, Sense::Le, rhs));
                    }
                    slots.push(None);
                }
                None => slots.push(None),
            }
        }
        h_cols.push(slots);
    }
    for (terms, sense, rhs) in rows {
        lp.add_sparse_row(&terms, sense, rhs)?;
    }
    Ok(lp)
}

/// Feasibility LP of a complete activation pattern.
pub fn region_lp<S: Scalar>(
    net: &NetworkModel<S>,
    bounds: &UnitBounds<S>,
    pattern: &ActivationPattern,
    eps: S,
    full_dim: bool,
) -> Result<LinearProgram<S>> {
    let depth = net.num_counting_layers();
    if pattern.layers.len() != depth
        || pattern
            .layers
            .iter()
            .zip(net.counting_layers())
            .any(|(bits, layer)| bits.len() != layer.width())
    {
        return Err(Error::Invalid("pattern dimensions do not match network".into()));
    }
    let assigned: Vec<Vec<Option<bool>>> = pattern
        .layers
        .iter()
        .map(|bits| bits.iter().map(|&b| Some(b)).collect())
        .collect();
    partial_region_lp(net, bounds, &assigned, eps, full_dim)
}

/// The three inequalities over `(g, h)` whose feasible set is the triangle
/// hull of `(-Hbar, 0)`, `(0, 0)`, `(H, H)`.
#[derive(Clone, Copy, Debug)]
pub struct OuterPolygon<S> {
    pub pre_act_max: S,
    pub neg_pre_act_max: S,
}

pub fn convex_outer_polygon<S: Scalar>(
    pre_act_max: S,
    neg_pre_act_max: S,
) -> Result<OuterPolygon<S>> {
    if pre_act_max < S::zero() || neg_pre_act_max < S::zero() {
        return Err(Error::NegativeBigM);
    }
    Ok(OuterPolygon {
        pre_act_max,
        neg_pre_act_max,
    })
}

impl<S: Scalar> OuterPolygon<S> {
    /// Rows as `(g_coeff, h_coeff, sense, rhs)`.
    pub fn rows(&self) -> [(S, S, Sense, S); 3] {
        let h_max = self.pre_act_max;
        let nb = self.neg_pre_act_max;
        [
            (S::zero(), -S::one(), Sense::Le, S::zero()), // h >= 0
            (S::one(), -S::one(), Sense::Le, S::zero()),  // h >= g
            (-h_max, h_max + nb, Sense::Le, h_max * nb),  // upper diagonal
        ]
    }

    pub fn contains(&self, g: S, h: S, tol: S) -> bool {
        self.rows().iter().all(|&(cg, ch, sense, rhs)| {
            let lhs = cg * g + ch * h;
            match sense {
                Sense::Le => lhs <= rhs + tol,
                Sense::Ge => lhs >= rhs - tol,
                Sense::Eq => (lhs - rhs).abs() <= tol,
            }
        })
    }
}

/// Membership in the projection onto `(g, h)` of the LP relaxation of the
/// single-unit big-M encoding, solved in closed form: there must be a
/// `z` in `[0, 1]` with `h <= H z` and `h - g <= Hbar (1 - z)`.
pub fn relaxation_contains<S: Scalar>(
    pre_act_max: S,
    neg_pre_act_max: S,
    g: S,
    h: S,
    tol: S,
) -> bool {
    let h_bar = h - g;
    if h < -tol || h_bar < -tol {
        return false;
    }
    let z_lo = if pre_act_max > S::zero() {
        (h / pre_act_max).max(S::zero())
    } else if h > tol {
        return false;
    } else {
        S::zero()
    };
    let z_hi = if neg_pre_act_max > S::zero() {
        (S::one() - h_bar / neg_pre_act_max).min(S::one())
    } else if h_bar > tol {
        return false;
    } else {
        S::one()
    };
    z_lo <= z_hi + tol
}
