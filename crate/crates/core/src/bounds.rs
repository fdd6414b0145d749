//! Analytical upper bounds on the number of linear regions: the empirical
//! bound driven by per-layer activity and instability profiles of the
//! trained weights, the configuration bound that only sees layer widths,
//! and the two classical width-based products.

use std::collections::HashMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::formulation::{Leaning, Stability, UnitBounds};
use crate::model::{maps, MapsValue, NetworkModel};
use crate::scalar::Scalar;
use crate::Result;

/// Below this previous-layer width the coverage maxima are computed by
/// exhaustive subset search; above it, greedy values are reported for
/// diagnostics and the trivial caps enter the bound instead.
pub const DEFAULT_EXACT_K_CAP: usize = 20;

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut num = BigUint::from(1u32);
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

fn binomial_prefix_sum(n: usize, d: usize) -> BigUint {
    (0..=d.min(n)).map(|j| binomial(n, j)).sum()
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<Ser: Serializer>(v: &BigUint, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// One tabulated coverage value. `value` is what the bound uses; when the
/// exact maximum was out of reach it is the trivial cap and `greedy_value`
/// carries the (1-1/e)-approximate maximum for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub value: usize,
    pub exact: bool,
    pub greedy_value: Option<usize>,
}

/// Per-layer activity statistics: which units are stably active, which
/// lean each way, and the tabulated maxima of active (`activity`) and
/// flippable (`instability`) units as functions of the number of active
/// units in the previous layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerActivityProfile {
    pub n_plus: usize,
    pub u_plus: Vec<usize>,
    pub u_minus: Vec<usize>,
    /// Instability maxima, indexed by k = 0..=n_{l-1}.
    pub instability: Vec<CoverageEntry>,
    /// Activity maxima, indexed by k = 0..=n_{l-1}.
    pub activity: Vec<CoverageEntry>,
}

impl LayerActivityProfile {
    pub fn num_unstable(&self) -> usize {
        self.u_plus.len() + self.u_minus.len()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpperBoundReport {
    #[serde(with = "biguint_string")]
    pub empirical: BigUint,
    #[serde(with = "biguint_string")]
    pub configuration: BigUint,
    #[serde(with = "biguint_string")]
    pub montufar: BigUint,
    #[serde(with = "biguint_string")]
    pub raghu: BigUint,
    pub eta_empirical: MapsValue,
    pub eta_configuration: MapsValue,
    pub eta_montufar: MapsValue,
    pub eta_raghu: MapsValue,
    pub profiles: Vec<LayerActivityProfile>,
}

// Small fixed-width bitsets over the units of one layer.
type Bits = Vec<u64>;

fn bits_new(n: usize) -> Bits {
    vec![0; n.div_ceil(64)]
}

fn bits_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bits_or(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x | y).collect()
}

fn bits_count(b: &Bits) -> usize {
    b.iter().map(|w| w.count_ones() as usize).sum()
}

/// Maximum coverage by at most k sets, for every k at once, by exhaustive
/// depth-first search over the set family. Returns `best[k]`.
fn exact_coverage_table(sets: &[Bits], width: usize) -> Vec<usize> {
    let mut best = vec![0usize; sets.len() + 1];
    let empty = bits_new(width);
    fn dfs(sets: &[Bits], pos: usize, chosen: usize, union: &Bits, best: &mut [usize]) {
        let c = bits_count(union);
        if c > best[chosen] {
            best[chosen] = c;
        }
        if pos == sets.len() {
            return;
        }
        // adding a set never helps if it is contained in the union
        let merged = bits_or(union, &sets[pos]);
        if bits_count(&merged) > c {
            dfs(sets, pos + 1, chosen + 1, &merged, best);
        }
        dfs(sets, pos + 1, chosen, union, best);
    }
    dfs(sets, 0, 0, &empty, &mut best);
    // a budget of k allows any smaller choice too
    for k in 1..best.len() {
        best[k] = best[k].max(best[k - 1]);
    }
    best
}

/// Greedy maximum coverage; nested by construction, so one pass yields the
/// whole table.
fn greedy_coverage_table(sets: &[Bits], width: usize) -> Vec<usize> {
    let mut covered = bits_new(width);
    let mut used = vec![false; sets.len()];
    let mut table = vec![0usize; sets.len() + 1];
    for k in 1..=sets.len() {
        let mut best_gain = 0;
        let mut best_idx = None;
        for (i, s) in sets.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = bits_count(&bits_or(&covered, s)) - bits_count(&covered);
            if gain > best_gain {
                best_gain = gain;
                best_idx = Some(i);
            }
        }
        if let Some(i) = best_idx {
            used[i] = true;
            covered = bits_or(&covered, &sets[i]);
        }
        table[k] = bits_count(&covered);
    }
    table
}

/// Builds the per-layer profiles from weight signs, leanings, and
/// stability. Layer 1 sees the raw inputs, which are not rectified, so its
/// tables saturate at any positive k.
pub fn build_profiles<S: Scalar>(
    net: &NetworkModel<S>,
    ub: &UnitBounds<S>,
    exact_k_cap: usize,
) -> Vec<LayerActivityProfile> {
    let mut profiles = Vec::new();
    let mut prev_width = net.input_dim;
    for (l, layer) in net.counting_layers().iter().enumerate() {
        let n_l = layer.width();
        let mut n_plus = 0;
        let mut u_plus = Vec::new();
        let mut u_minus = Vec::new();
        for (i, b) in ub.layers[l].iter().enumerate() {
            match b.stability {
                Stability::StablyActive => n_plus += 1,
                Stability::StablyInactive => {}
                Stability::Unstable => match b.leaning {
                    Leaning::ActiveLeaning => u_plus.push(i),
                    _ => u_minus.push(i),
                },
            }
        }
        let num_unstable = u_plus.len() + u_minus.len();
        let base_activity = n_plus + u_plus.len();

        let (instability, activity) = if l == 0 {
            let sat_i = |k: usize| if k == 0 { 0 } else { num_unstable };
            let sat_a = |k: usize| {
                if k == 0 {
                    base_activity
                } else {
                    n_plus + num_unstable
                }
            };
            let mk = |f: &dyn Fn(usize) -> usize| {
                (0..=prev_width)
                    .map(|k| CoverageEntry {
                        value: f(k),
                        exact: true,
                        greedy_value: None,
                    })
                    .collect::<Vec<_>>()
            };
            (mk(&sat_i), mk(&sat_a))
        } else {
            // reverse maps over units of the previous layer: which units of
            // this layer can flip (instability) or newly activate
            // (activity) when input j is active
            let mut flip_sets = Vec::with_capacity(prev_width);
            let mut act_sets = Vec::with_capacity(prev_width);
            for j in 0..prev_width {
                let mut flip = bits_new(n_l);
                let mut act = bits_new(n_l);
                for &i in &u_plus {
                    if layer.weights[i][j] < S::zero() {
                        bits_set(&mut flip, i);
                    }
                }
                for &i in &u_minus {
                    if layer.weights[i][j] > S::zero() {
                        bits_set(&mut flip, i);
                        bits_set(&mut act, i);
                    }
                }
                flip_sets.push(flip);
                act_sets.push(act);
            }
            if prev_width <= exact_k_cap {
                let fi = exact_coverage_table(&flip_sets, n_l);
                let fa = exact_coverage_table(&act_sets, n_l);
                let inst = fi
                    .iter()
                    .map(|&v| CoverageEntry {
                        value: v,
                        exact: true,
                        greedy_value: None,
                    })
                    .collect();
                let act = fa
                    .iter()
                    .map(|&v| CoverageEntry {
                        value: base_activity + v,
                        exact: true,
                        greedy_value: None,
                    })
                    .collect();
                (inst, act)
            } else {
                let gi = greedy_coverage_table(&flip_sets, n_l);
                let ga = greedy_coverage_table(&act_sets, n_l);
                let inst = gi
                    .iter()
                    .enumerate()
                    .map(|(k, &g)| CoverageEntry {
                        value: if k == 0 { 0 } else { num_unstable },
                        exact: false,
                        greedy_value: Some(g),
                    })
                    .collect();
                let act = ga
                    .iter()
                    .enumerate()
                    .map(|(k, &g)| CoverageEntry {
                        value: if k == 0 {
                            base_activity
                        } else {
                            n_plus + num_unstable
                        },
                        exact: false,
                        greedy_value: Some(base_activity + g),
                    })
                    .collect();
                (inst, act)
            }
        };
        profiles.push(LayerActivityProfile {
            n_plus,
            u_plus,
            u_minus,
            instability,
            activity,
        });
        prev_width = n_l;
    }
    profiles
}

/// The empirical upper bound: a region of the input region tree at layer l
/// with k active inputs and d remaining directions branches over which of
/// the at most I_l(k) flippable units actually flip.
pub fn empirical_upper_bound(profiles: &[LayerActivityProfile], n0: usize) -> BigUint {
    fn rec(
        profiles: &[LayerActivityProfile],
        l: usize,
        k: usize,
        d: usize,
        memo: &mut HashMap<(usize, usize, usize), BigUint>,
    ) -> BigUint {
        if let Some(v) = memo.get(&(l, k, d)) {
            return v.clone();
        }
        let p = &profiles[l];
        let inst = p.instability[k.min(p.instability.len() - 1)].value;
        let act = p.activity[k.min(p.activity.len() - 1)].value;
        let mut total = BigUint::from(0u32);
        for j in 0..=inst.min(d) {
            let ways = binomial(inst, j);
            if l + 1 == profiles.len() {
                total += ways;
            } else {
                let k_next = act.saturating_sub(j);
                total += ways * rec(profiles, l + 1, k_next, k_next.min(d), memo);
            }
        }
        memo.insert((l, k, d), total.clone());
        total
    }
    if profiles.is_empty() {
        return BigUint::from(1u32);
    }
    rec(profiles, 0, n0, n0, &mut HashMap::new())
}

/// Width-only bound over activation configurations with the dimension caps
/// threaded through the layers.
pub fn configuration_upper_bound(widths: &[usize], n0: usize) -> BigUint {
    fn rec(
        widths: &[usize],
        l: usize,
        d: usize,
        memo: &mut HashMap<(usize, usize), BigUint>,
    ) -> BigUint {
        if l == widths.len() {
            return BigUint::from(1u32);
        }
        if let Some(v) = memo.get(&(l, d)) {
            return v.clone();
        }
        let n = widths[l];
        let mut total = BigUint::from(0u32);
        for j in 0..=d.min(n) {
            total += binomial(n, j) * rec(widths, l + 1, d.min(n - j), memo);
        }
        memo.insert((l, d), total.clone());
        total
    }
    rec(widths, 0, n0, &mut HashMap::new())
}

pub fn montufar_bound(widths: &[usize], n0: usize) -> BigUint {
    let mut d = n0;
    let mut total = BigUint::from(1u32);
    for &n in widths {
        d = d.min(n);
        total *= binomial_prefix_sum(n, d);
    }
    total
}

pub fn raghu_bound(widths: &[usize], n0: usize) -> BigUint {
    let mut prev = n0;
    let mut total = BigUint::from(1u32);
    for &n in widths {
        total *= binomial_prefix_sum(n, prev);
        prev = n;
    }
    total
}

/// Computes all four bounds for a network with settled unit bounds.
pub fn upper_bounds<S: Scalar>(
    net: &NetworkModel<S>,
    ub: &UnitBounds<S>,
    exact_k_cap: usize,
) -> Result<UpperBoundReport> {
    let widths: Vec<usize> = net.counting_layers().iter().map(|l| l.width()).collect();
    let n0 = net.input_dim;
    let profiles = build_profiles(net, ub, exact_k_cap);
    let empirical = empirical_upper_bound(&profiles, n0);
    let configuration = configuration_upper_bound(&widths, n0);
    let montufar = montufar_bound(&widths, n0);
    let raghu = raghu_bound(&widths, n0);
    Ok(UpperBoundReport {
        eta_empirical: maps(&empirical)?,
        eta_configuration: maps(&configuration)?,
        eta_montufar: maps(&montufar)?,
        eta_raghu: maps(&raghu)?,
        empirical,
        configuration,
        montufar,
        raghu,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{tighten_bounds, TightenMethod};
    use crate::milp::SearchConfig;
    use crate::model::generate_random_network;
    use num_traits::ToPrimitive;

    fn u(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), u(10));
        assert_eq!(binomial(0, 0), u(1));
        assert_eq!(binomial(3, 4), u(0));
        assert_eq!(binomial(784, 2), u(306_936));
    }

    #[test]
    fn configuration_examples() {
        assert_eq!(configuration_upper_bound(&[1, 21, 10], 784), u(243));
        assert_eq!(configuration_upper_bound(&[8], 8), u(256));
        assert_eq!(configuration_upper_bound(&[2], 1), u(3));
    }

    #[test]
    fn montufar_and_raghu_examples() {
        assert_eq!(montufar_bound(&[3], 2), u(7));
        assert_eq!(montufar_bound(&[3, 3], 1), u(16));
        assert_eq!(raghu_bound(&[3, 3], 1), u(32));
        // large input dimension deactivates the caps
        assert_eq!(montufar_bound(&[5, 4], 100), raghu_bound(&[5, 4], 100));
    }

    #[test]
    fn exact_coverage_on_reverse_map_example() {
        // I(.,1)={a}, I(.,2)={a,b}, I(.,3)={c}
        let mut s1 = bits_new(3);
        bits_set(&mut s1, 0);
        let mut s2 = bits_new(3);
        bits_set(&mut s2, 0);
        bits_set(&mut s2, 1);
        let mut s3 = bits_new(3);
        bits_set(&mut s3, 2);
        let table = exact_coverage_table(&[s1, s2, s3], 3);
        assert_eq!(table, vec![0, 2, 3, 3]);
    }

    #[test]
    fn greedy_within_factor_of_exact() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let width = rng.gen_range(4..12);
            let nsets = rng.gen_range(2..8);
            let sets: Vec<Bits> = (0..nsets)
                .map(|_| {
                    let mut b = bits_new(width);
                    for i in 0..width {
                        if rng.gen_bool(0.3) {
                            bits_set(&mut b, i);
                        }
                    }
                    b
                })
                .collect();
            let exact = exact_coverage_table(&sets, width);
            let greedy = greedy_coverage_table(&sets, width);
            for k in 0..=nsets {
                assert!(greedy[k] <= exact[k]);
                let floor = (1.0 - (-1.0f64).exp()) * exact[k] as f64;
                assert!(greedy[k] as f64 >= floor - 1e-9, "k={k}");
            }
        }
    }

    #[test]
    fn profile_tables_are_monotone_and_capped() {
        for seed in 0..6 {
            let net = generate_random_network::<f64>(&[6, 5, 4], 3, seed, 1.5).unwrap();
            let ub = tighten_bounds(&net, TightenMethod::Lp, &SearchConfig::default()).unwrap();
            let profiles = build_profiles(&net, &ub, DEFAULT_EXACT_K_CAP);
            for (p, layer) in profiles.iter().zip(net.counting_layers()) {
                for w in p.instability.windows(2) {
                    assert!(w[0].value <= w[1].value);
                }
                for w in p.activity.windows(2) {
                    assert!(w[0].value <= w[1].value);
                }
                for e in &p.instability {
                    assert!(e.value <= p.num_unstable());
                }
                for e in &p.activity {
                    assert!(e.value <= layer.width());
                }
            }
        }
    }

    #[test]
    fn saturated_profiles_reduce_to_configuration() {
        let widths = [4usize, 3, 5];
        let n0 = 3;
        let profiles: Vec<LayerActivityProfile> = {
            let mut prev = n0;
            widths
                .iter()
                .map(|&n| {
                    let p = LayerActivityProfile {
                        n_plus: 0,
                        u_plus: vec![],
                        u_minus: (0..n).collect(),
                        instability: (0..=prev)
                            .map(|_| CoverageEntry {
                                value: n,
                                exact: true,
                                greedy_value: None,
                            })
                            .collect(),
                        activity: (0..=prev)
                            .map(|_| CoverageEntry {
                                value: n,
                                exact: true,
                                greedy_value: None,
                            })
                            .collect(),
                    };
                    prev = n;
                    p
                })
                .collect()
        };
        assert_eq!(
            empirical_upper_bound(&profiles, n0),
            configuration_upper_bound(&widths, n0)
        );
    }

    #[test]
    fn fully_stable_layer_contributes_factor_one() {
        let prev = 3;
        let stable = LayerActivityProfile {
            n_plus: 4,
            u_plus: vec![],
            u_minus: vec![],
            instability: (0..=prev)
                .map(|_| CoverageEntry {
                    value: 0,
                    exact: true,
                    greedy_value: None,
                })
                .collect(),
            activity: (0..=prev)
                .map(|_| CoverageEntry {
                    value: 4,
                    exact: true,
                    greedy_value: None,
                })
                .collect(),
        };
        assert_eq!(empirical_upper_bound(&[stable], prev), u(1));
    }

    #[test]
    fn bound_chain_on_random_networks() {
        use crate::counting::count_exact;
        let cfg = SearchConfig::default();
        for seed in 0..8 {
            let net = generate_random_network::<f64>(&[4, 3], 2, seed + 60, 1.5).unwrap();
            let ub = tighten_bounds(&net, TightenMethod::Milp, &cfg).unwrap();
            let exact = count_exact(&net, &ub, 1e-6, false, false, usize::MAX, &cfg).unwrap();
            let r = upper_bounds(&net, &ub, DEFAULT_EXACT_K_CAP).unwrap();
            assert!(exact.count <= r.empirical, "seed {seed}");
            assert!(r.empirical <= r.configuration, "seed {seed}");
            assert!(r.configuration <= r.montufar, "seed {seed}");
            assert!(r.montufar <= r.raghu, "seed {seed}");
        }
    }

    #[test]
    fn report_eta_matches_counts() {
        let net = generate_random_network::<f64>(&[5, 4], 3, 2, 1.5).unwrap();
        let ub = tighten_bounds(&net, TightenMethod::Interval, &SearchConfig::default()).unwrap();
        let r = upper_bounds(&net, &ub, DEFAULT_EXACT_K_CAP).unwrap();
        let cfg_u64 = r.configuration.to_u64().unwrap();
        assert!((r.eta_configuration.eta - (cfg_u64 as f64).log2()).abs() < 1e-9);
        let js = serde_json::to_string(&r).unwrap();
        let back: UpperBoundReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back.configuration, r.configuration);
    }
}
