//! End-to-end analysis pipeline: tighten bounds, count exactly when the
//! network is small, otherwise approximate from below with parity
//! hashing, and attach the analytical upper bounds.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bounds::{upper_bounds, UpperBoundReport, DEFAULT_EXACT_K_CAP};
use crate::counting::count_exact;
use crate::formulation::{
    build_counting_milp, tighten_bounds, Stability, TightenMethod, UnitBounds, DEFAULT_EPS,
};
use crate::milp::SearchConfig;
use crate::mipbound::{required_iterations, run_mipbound};
use crate::model::NetworkModel;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Networks whose configuration bound stays below 2^12 regions are
/// "small": exact counting is cheaper there than hashing.
pub const SMALL_ETA_THRESHOLD: f64 = 12.0;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub method: TightenMethod,
    pub ks: Vec<usize>,
    /// Defaults to `required_iterations(confidence)` when `None`.
    pub iterations: Option<u64>,
    pub confidence: f64,
    pub seed: u64,
    pub eps: f64,
    pub exact_k_cap: usize,
    pub phase_time_limit: Option<f64>,
    /// Force or forbid the exact count regardless of the size heuristic.
    pub exact: Option<bool>,
    pub valid_inequalities: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            method: TightenMethod::Milp,
            ks: vec![2],
            iterations: None,
            confidence: 0.95,
            seed: 0,
            eps: DEFAULT_EPS,
            exact_k_cap: DEFAULT_EXACT_K_CAP,
            phase_time_limit: None,
            exact: None,
            valid_inequalities: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub stably_active: usize,
    pub stably_inactive: usize,
    pub unstable: usize,
}

impl StabilitySummary {
    pub fn from_bounds<S: Scalar>(ub: &UnitBounds<S>) -> Self {
        let mut s = StabilitySummary::default();
        for u in ub.layers.iter().flatten() {
            match u.stability {
                Stability::StablyActive => s.stably_active += 1,
                Stability::StablyInactive => s.stably_inactive += 1,
                Stability::Unstable => s.unstable += 1,
            }
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactCountReport {
    pub count: String,
    pub eta: f64,
    pub truncated: bool,
    pub nodes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxReport {
    pub k: usize,
    pub iterations: u64,
    pub f: Vec<u64>,
    pub p: Vec<Option<f64>>,
    pub best_j: usize,
    pub probability: f64,
    pub eta_lb: f64,
    /// APP-k: midpoint of the hashing lower bound and the empirical upper
    /// bound, both on the log2 scale.
    pub app_k: f64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub t_tighten_s: f64,
    pub t_count_s: Option<f64>,
    pub t_approx_s: Option<f64>,
    pub t_bounds_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub widths: Vec<usize>,
    pub n0: usize,
    pub count_output_layer: bool,
    pub tighten_method: TightenMethod,
    pub stability: StabilitySummary,
    pub exact: Option<ExactCountReport>,
    pub approx: Vec<ApproxReport>,
    /// k values requested but not runnable (fewer than k unstable units).
    pub skipped_k: Vec<usize>,
    pub bounds: UpperBoundReport,
    pub timings: PhaseTimings,
}

/// Loads unit bounds from a cache file when present, otherwise computes
/// and stores them. The cache is keyed implicitly: a dimension mismatch
/// against the network invalidates it.
pub fn cached_tighten<S: Scalar>(
    net: &NetworkModel<S>,
    method: TightenMethod,
    cache: Option<&std::path::Path>,
    search: &SearchConfig,
) -> Result<UnitBounds<S>>
where
    S: serde::Serialize + serde::de::DeserializeOwned,
{
    if let Some(path) = cache {
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let ub: UnitBounds<S> =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let widths: Vec<usize> = ub.layers.iter().map(|l| l.len()).collect();
            let expect: Vec<usize> =
                net.counting_layers().iter().map(|l| l.width()).collect();
            if widths == expect {
                ub.validate()?;
                return Ok(ub);
            }
        }
    }
    let ub = tighten_bounds(net, method, search)?;
    if let Some(path) = cache {
        let text = serde_json::to_string(&ub).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(ub)
}

pub fn analyze<S: Scalar>(
    net: &NetworkModel<S>,
    opts: &AnalyzeOptions,
    bounds_cache: Option<&std::path::Path>,
) -> Result<AnalysisReport>
where
    S: serde::Serialize + serde::de::DeserializeOwned,
{
    net.validate()?;
    let search = SearchConfig::default();
    let eps = S::from_f64_lossy(opts.eps);

    let t0 = Instant::now();
    let ub = cached_tighten(net, opts.method, bounds_cache, &search)?;
    let t_tighten_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let bounds = upper_bounds(net, &ub, opts.exact_k_cap)?;
    let t_bounds_s = t0.elapsed().as_secs_f64();

    let small = bounds.eta_configuration.eta < SMALL_ETA_THRESHOLD;
    let want_exact = opts.exact.unwrap_or(small);

    let mut exact = None;
    let mut t_count_s = None;
    if want_exact {
        let t0 = Instant::now();
        let r = count_exact(
            net,
            &ub,
            eps,
            opts.valid_inequalities,
            false,
            usize::MAX,
            &search,
        )?;
        t_count_s = Some(t0.elapsed().as_secs_f64());
        exact = Some(ExactCountReport {
            eta: crate::model::maps(&r.count)?.eta,
            count: r.count.to_string(),
            truncated: r.truncated,
            nodes: r.nodes,
        });
    }

    let mut approx = Vec::new();
    let mut skipped_k = Vec::new();
    let mut t_approx_s = None;
    if !want_exact && !opts.ks.is_empty() {
        let t0 = Instant::now();
        let cm = build_counting_milp(net, &ub, eps, opts.valid_inequalities)?;
        let iterations = opts
            .iterations
            .unwrap_or_else(|| required_iterations(opts.confidence));
        let time_limit = opts.phase_time_limit.map(Duration::from_secs_f64);
        for &k in &opts.ks {
            if k < 2 || k > cm.model.binaries.len() {
                skipped_k.push(k);
                continue;
            }
            let lb = run_mipbound(
                &cm.model,
                k,
                iterations,
                opts.confidence,
                opts.seed,
                time_limit,
                &search,
            )?;
            approx.push(ApproxReport {
                k,
                iterations: lb.iterations,
                f: lb.f,
                p: lb.p,
                best_j: lb.best_j,
                probability: lb.probability,
                eta_lb: lb.maps_lb.eta,
                app_k: (lb.maps_lb.eta + bounds.eta_empirical.eta) / 2.0,
            });
        }
        t_approx_s = Some(t0.elapsed().as_secs_f64());
    }

    Ok(AnalysisReport {
        schema: REPORT_SCHEMA,
        widths: net.widths(),
        n0: net.input_dim,
        count_output_layer: net.count_output_layer,
        tighten_method: opts.method,
        stability: StabilitySummary::from_bounds(&ub),
        exact,
        approx,
        skipped_k,
        bounds,
        timings: PhaseTimings {
            t_tighten_s,
            t_count_s,
            t_approx_s,
            t_bounds_s,
        },
    })
}

/// One batch CSV row; columns are fixed so result files join cleanly.
pub const CSV_HEADER: &str = "widths,n0,eta_lb_k2,eta_lb_k3,eta_lb_k4,eta_lb_k5,eta_exact,eta_emp_ub,eta_conf_ub,t_tighten_s,t_count_s,t_approx_s";

pub fn csv_row(report: &AnalysisReport) -> String {
    let widths = report
        .widths
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join("x");
    let lb = |k: usize| {
        report
            .approx
            .iter()
            .find(|a| a.k == k)
            .map(|a| format!("{:.6}", a.eta_lb))
            .unwrap_or_default()
    };
    let opt = |v: Option<f64>| v.map(|t| format!("{t:.3}")).unwrap_or_default();
    format!(
        "{widths},{n0},{k2},{k3},{k4},{k5},{exact},{emp:.6},{conf:.6},{tt:.3},{tc},{ta}",
        n0 = report.n0,
        k2 = lb(2),
        k3 = lb(3),
        k4 = lb(4),
        k5 = lb(5),
        exact = report
            .exact
            .as_ref()
            .map(|e| format!("{:.6}", e.eta))
            .unwrap_or_default(),
        emp = report.bounds.eta_empirical.eta,
        conf = report.bounds.eta_configuration.eta,
        tt = report.timings.t_tighten_s,
        tc = opt(report.timings.t_count_s),
        ta = opt(report.timings.t_approx_s),
    )
}
