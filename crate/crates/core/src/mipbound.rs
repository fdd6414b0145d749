//! Probabilistic lower bounds on the number of binary-projected MILP
//! solutions. Random parity (XOR) constraints act as pairwise-independent
//! hashes that halve the solution set in expectation; counting how many a
//! model survives yields a lower bound with an MBound-style confidence.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lp::{LpStatus, Row, Sense};
use crate::milp::{solve_milp, MilpModel, SearchConfig};
use crate::model::MapsValue;
use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// A parity constraint over a set of binary variables: their sum must have
/// the stated parity.
#[derive(Clone, Debug)]
pub struct ParityConstraint {
    pub vars: Vec<usize>,
    pub parity: Parity,
}

impl ParityConstraint {
    pub fn satisfied_by<S: Scalar>(&self, x: &[S]) -> bool {
        let ones = self
            .vars
            .iter()
            .filter(|&&v| x[v] > S::from_f64_lossy(0.5))
            .count();
        match self.parity {
            Parity::Odd => ones % 2 == 1,
            Parity::Even => ones % 2 == 0,
        }
    }
}

/// Draws a uniform size-`k` subset of `candidates` and a uniform parity.
pub fn sample_parity<R: Rng>(
    k: usize,
    candidates: &[usize],
    rng: &mut R,
) -> Result<ParityConstraint> {
    if k < 2 || k > candidates.len() {
        return Err(Error::ParityTooLarge {
            k,
            available: candidates.len(),
        });
    }
    let mut vars: Vec<usize> = rand::seq::index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    vars.sort_unstable();
    let parity = if rng.gen_bool(0.5) {
        Parity::Odd
    } else {
        Parity::Even
    };
    Ok(ParityConstraint { vars, parity })
}

/// Encodes the parity constraint as canonical hypercube cuts: one row per
/// wrong-parity subset U', each separating exactly the 0-1 vertices that
/// agree with U' on the constraint variables. For k=2 odd the two rows
/// collapse to the single equality `w_i + w_j = 1`.
pub fn parity_cuts<S: Scalar>(c: &ParityConstraint, num_vars: usize) -> Vec<Row<S>> {
    let k = c.vars.len();
    if k == 2 && c.parity == Parity::Odd {
        let mut coeffs = vec![S::zero(); num_vars];
        coeffs[c.vars[0]] = S::one();
        coeffs[c.vars[1]] = S::one();
        return vec![Row {
            coeffs,
            sense: Sense::Eq,
            rhs: S::one(),
        }];
    }
    let wrong_parity = match c.parity {
        Parity::Odd => 0,  // cut off the even-sum assignments
        Parity::Even => 1, // cut off the odd-sum assignments
    };
    let mut rows = Vec::with_capacity(1 << (k - 1));
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize % 2 != wrong_parity {
            continue;
        }
        let mut coeffs = vec![S::zero(); num_vars];
        let mut ones = 0;
        for (bit, &v) in c.vars.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                coeffs[v] = S::one();
                ones += 1;
            } else {
                coeffs[v] = -S::one();
            }
        }
        rows.push(Row {
            coeffs,
            sense: Sense::Le,
            rhs: S::from_f64_lossy(ones as f64 - 1.0),
        });
    }
    rows
}

/// MBound confidence that the model's true solution count exceeds the
/// level certified by `f_j` out of `i` feasible runs. `None` when the
/// feasibility frequency is at most 1/2 and no bound follows.
pub fn lb_probability(f_j: u64, i: u64, alpha: f64) -> Result<Option<f64>> {
    if f_j > i {
        return Err(Error::Invalid(format!("f_j = {f_j} exceeds i = {i}")));
    }
    if i == 0 {
        return Ok(None);
    }
    let delta = f_j as f64 / i as f64 - 0.5;
    if delta <= 0.0 {
        return Ok(None);
    }
    let beta = 2f64.powf(alpha) * (0.5 + delta) - 1.0;
    let base = beta.exp() / (1.0 + beta).powf(1.0 + beta);
    Ok(Some(1.0 - base.powf(i as f64 / 2f64.powf(alpha))))
}

/// Smallest iteration count whose all-feasible confidence reaches
/// `target_prob`.
pub fn required_iterations(target_prob: f64) -> u64 {
    let base: f64 = (1.0f64.exp() / 4.0).ln() / 2.0; // ln(e/4)/2 < 0
    let needed = (1.0 - target_prob).ln() / base;
    let mut i = needed.floor().max(0.0) as u64;
    while 1.0 - (1.0f64.exp() / 4.0).powf(i as f64 / 2.0) < target_prob {
        i += 1;
    }
    i
}

#[derive(Clone, Debug)]
pub struct ProbLowerBound {
    pub k: usize,
    /// Outer iterations completed (may fall short of the request under a
    /// time limit).
    pub iterations: u64,
    /// `f[j]`: iterations in which the model stayed feasible after `j`
    /// parity constraints; non-increasing, `f[0] = iterations` whenever
    /// the unconstrained model is feasible.
    pub f: Vec<u64>,
    /// Confidence per level `j`, from `lb_probability(f[j+1], i, 1)`.
    pub p: Vec<Option<f64>>,
    pub best_j: usize,
    pub probability: f64,
    pub bound: BigUint,
    pub maps_lb: MapsValue,
    pub solver_calls: u64,
}

/// Algorithm: each outer iteration restricts a fresh copy of the model by
/// random parity constraints, added as lazy cuts from the incumbent
/// callback, until it turns infeasible. One solver call per iteration.
/// RNG stream `iteration` of `seed` drives that iteration's draws, so
/// results are reproducible and independent of scheduling.
pub fn run_mipbound<S: Scalar>(
    model: &MilpModel<S>,
    k: usize,
    iterations: u64,
    confidence: f64,
    seed: u64,
    time_limit: Option<Duration>,
    search: &SearchConfig,
) -> Result<ProbLowerBound> {
    let candidates = model.binaries.clone();
    if k < 2 || k > candidates.len() {
        return Err(Error::ParityTooLarge {
            k,
            available: candidates.len(),
        });
    }
    if iterations == 0 {
        return Err(Error::Invalid("iterations must be at least 1".into()));
    }
    let start = Instant::now();
    let mut work = MilpModel::new(model.lp.clone(), candidates.clone());
    work.objective_threshold = model.objective_threshold;
    let base_rows = work.lp.num_rows();
    let num_vars = work.lp.num_vars();

    let mut f: Vec<u64> = Vec::new();
    let mut completed = 0u64;
    let mut solver_calls = 0u64;
    for iter in 0..iterations {
        work.lp.truncate_rows(base_rows);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(iter);
        let mut r = 0u64;
        let mut sample_err = None;
        {
            let mut callback = |x: &[S]| -> Vec<Row<S>> {
                let mut rows = Vec::new();
                loop {
                    let c = match sample_parity(k, &candidates, &mut rng) {
                        Ok(c) => c,
                        Err(e) => {
                            sample_err = Some(e);
                            return rows;
                        }
                    };
                    r += 1;
                    let removes = !c.satisfied_by(x);
                    rows.extend(parity_cuts(&c, num_vars));
                    if removes {
                        return rows;
                    }
                }
            };
            let sol = solve_milp(&work, Some(&mut callback), search)?;
            solver_calls += 1;
            debug_assert_eq!(sol.status, LpStatus::Infeasible);
        }
        if let Some(e) = sample_err {
            return Err(e);
        }
        if r as usize > f.len() {
            f.resize(r as usize, 0);
        }
        for fj in f.iter_mut().take(r as usize) {
            *fj += 1;
        }
        completed += 1;
        if let Some(limit) = time_limit {
            if start.elapsed() >= limit {
                break;
            }
        }
    }

    let mut p = Vec::new();
    let mut best_j = 0usize;
    let mut probability = 1.0;
    for j in 0.. {
        let fj1 = f.get(j + 1).copied().unwrap_or(0);
        match lb_probability(fj1, completed, 1.0)? {
            None => break,
            Some(pj) => {
                p.push(Some(pj));
                if pj >= confidence {
                    best_j = j;
                    probability = pj;
                }
            }
        }
    }
    let bound = BigUint::from(1u32) << best_j;
    let maps_lb = crate::model::maps(&bound)?;
    Ok(ProbLowerBound {
        k,
        iterations: completed,
        f,
        p,
        best_j,
        probability,
        bound,
        maps_lb,
        solver_calls,
    })
}
