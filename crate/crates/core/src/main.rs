use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use regionbound::analyze::{
    analyze, cached_tighten, csv_row, AnalyzeOptions, StabilitySummary, CSV_HEADER, REPORT_SCHEMA,
};
use regionbound::bounds::{upper_bounds, DEFAULT_EXACT_K_CAP};
use regionbound::counting::count_exact;
use regionbound::formulation::{build_counting_milp, TightenMethod, DEFAULT_EPS};
use regionbound::milp::SearchConfig;
use regionbound::mipbound::{required_iterations, run_mipbound};
use regionbound::model::{generate_random_network, load_network, maps, save_network};
use regionbound::NetworkModel64;

#[derive(Parser)]
#[command(name = "regionbound", version, about = "Bounds and approximations for the number of linear regions of trained ReLU networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Interval,
    Lp,
    Milp,
}

impl From<Method> for TightenMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Interval => TightenMethod::Interval,
            Method::Lp => TightenMethod::Lp,
            Method::Milp => TightenMethod::Milp,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random network file
    Gen {
        /// Layer widths, comma-separated (output layer last)
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        seed: u64,
        /// Weights and biases are uniform in [-scale, scale]
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(short, long)]
        output: PathBuf,
        /// Exclude the last layer from region counting
        #[arg(long)]
        skip_output_layer: bool,
    },
    /// Compute per-unit bounds and stability classes
    Tighten {
        network: PathBuf,
        #[arg(long, value_enum, default_value = "milp")]
        method: Method,
        #[arg(long)]
        bounds_cache: Option<PathBuf>,
    },
    /// Count linear regions exactly
    Count {
        network: PathBuf,
        #[arg(long, value_enum, default_value = "milp")]
        method: Method,
        #[arg(long)]
        bounds_cache: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Drop the consecutive-layer valid inequalities
        #[arg(long)]
        no_valid_inequalities: bool,
        /// Write one activation pattern per region, `;`-separated bit
        /// strings, one per line
        #[arg(long)]
        emit_patterns: Option<PathBuf>,
        /// Stop after this many regions (result flagged truncated)
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Probabilistic lower bound via random parity constraints
    Approx {
        network: PathBuf,
        #[arg(long, value_enum, default_value = "milp")]
        method: Method,
        #[arg(long)]
        bounds_cache: Option<PathBuf>,
        /// Parity sizes, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "2")]
        k: Vec<usize>,
        /// Defaults to required_iterations(confidence)
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall-clock budget per k, in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Analytical upper bounds and activity profiles
    Bounds {
        network: PathBuf,
        #[arg(long, value_enum, default_value = "milp")]
        method: Method,
        #[arg(long)]
        bounds_cache: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXACT_K_CAP)]
        exact_k_cap: usize,
    },
    /// Full pipeline: tighten, count or approximate, and bound
    Analyze {
        /// Network file, or a directory of network files with --batch
        network: PathBuf,
        #[arg(long, value_enum, default_value = "milp")]
        method: Method,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        k: Vec<usize>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        /// Mandatory with --batch
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        bounds_cache: Option<PathBuf>,
        /// Per-phase wall-clock budget in seconds
        #[arg(long)]
        phase_time_limit: Option<f64>,
        /// Write a CSV over all networks in the directory to this path
        #[arg(long)]
        batch: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn load(path: &Path) -> Result<NetworkModel64> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_network(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn emit(value: serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let search = SearchConfig::default();
    match cli.cmd {
        Cmd::Gen {
            widths,
            n0,
            seed,
            scale,
            output,
            skip_output_layer,
        } => {
            let mut net = generate_random_network::<f64>(&widths, n0, seed, scale)?;
            net.count_output_layer = !skip_output_layer;
            std::fs::write(&output, save_network(&net))
                .with_context(|| format!("writing {}", output.display()))?;
            emit(json!({
                "schema": REPORT_SCHEMA,
                "written": output.display().to_string(),
                "widths": widths,
                "n0": n0,
                "seed": seed,
            }))
        }
        Cmd::Tighten {
            network,
            method,
            bounds_cache,
        } => {
            let net = load(&network)?;
            let t0 = Instant::now();
            let ub = cached_tighten(&net, method.into(), bounds_cache.as_deref(), &search)?;
            emit(json!({
                "schema": REPORT_SCHEMA,
                "method": format!("{:?}", TightenMethod::from(method)).to_lowercase(),
                "stability": StabilitySummary::from_bounds(&ub),
                "bounds": ub,
                "t_tighten_s": t0.elapsed().as_secs_f64(),
            }))
        }
        Cmd::Count {
            network,
            method,
            bounds_cache,
            eps,
            no_valid_inequalities,
            emit_patterns,
            limit,
        } => {
            let net = load(&network)?;
            let t0 = Instant::now();
            let ub = cached_tighten(&net, method.into(), bounds_cache.as_deref(), &search)?;
            let t_tighten_s = t0.elapsed().as_secs_f64();
            let r = count_exact(
                &net,
                &ub,
                eps,
                !no_valid_inequalities,
                emit_patterns.is_some(),
                limit.unwrap_or(usize::MAX),
                &search,
            )?;
            if let Some(path) = emit_patterns {
                let lines: Vec<String> = r
                    .patterns
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|p| p.to_bitstring())
                    .collect();
                std::fs::write(&path, lines.join("\n") + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(json!({
                "schema": REPORT_SCHEMA,
                "count": r.count.to_string(),
                "eta": maps(&r.count)?.eta,
                "truncated": r.truncated,
                "nodes": r.nodes,
                "stability": StabilitySummary::from_bounds(&ub),
                "t_tighten_s": t_tighten_s,
                "t_count_s": r.elapsed.as_secs_f64(),
            }))
        }
        Cmd::Approx {
            network,
            method,
            bounds_cache,
            k,
            iterations,
            confidence,
            seed,
            time_limit,
            eps,
        } => {
            let net = load(&network)?;
            let t0 = Instant::now();
            let ub = cached_tighten(&net, method.into(), bounds_cache.as_deref(), &search)?;
            let t_tighten_s = t0.elapsed().as_secs_f64();
            let cm = build_counting_milp(&net, &ub, eps, true)?;
            let iterations = iterations.unwrap_or_else(|| required_iterations(confidence));
            let mut blocks = Vec::new();
            let t0 = Instant::now();
            for &k in &k {
                let lb = run_mipbound(
                    &cm.model,
                    k,
                    iterations,
                    confidence,
                    seed,
                    time_limit.map(Duration::from_secs_f64),
                    &search,
                )?;
                blocks.push(json!({
                    "k": k,
                    "iterations": lb.iterations,
                    "f": lb.f,
                    "p": lb.p,
                    "best_j": lb.best_j,
                    "probability": lb.probability,
                    "bound": lb.bound.to_string(),
                    "eta_lb": lb.maps_lb.eta,
                }))
            }
            emit(json!({
                "schema": REPORT_SCHEMA,
                "confidence": confidence,
                "seed": seed,
                "approx": blocks,
                "t_tighten_s": t_tighten_s,
                "t_approx_s": t0.elapsed().as_secs_f64(),
            }))
        }
        Cmd::Bounds {
            network,
            method,
            bounds_cache,
            exact_k_cap,
        } => {
            let net = load(&network)?;
            let ub = cached_tighten(&net, method.into(), bounds_cache.as_deref(), &search)?;
            let report = upper_bounds(&net, &ub, exact_k_cap)?;
            let mut value = serde_json::to_value(&report)?;
            value["schema"] = json!(REPORT_SCHEMA);
            emit(value)
        }
        Cmd::Analyze {
            network,
            method,
            k,
            iterations,
            confidence,
            seed,
            eps,
            bounds_cache,
            phase_time_limit,
            batch,
            workers,
        } => {
            let opts = AnalyzeOptions {
                method: method.into(),
                ks: k,
                iterations,
                confidence,
                seed: seed.unwrap_or(0),
                eps,
                exact_k_cap: DEFAULT_EXACT_K_CAP,
                phase_time_limit,
                exact: None,
                valid_inequalities: true,
            };
            match batch {
                None => {
                    let net = load(&network)?;
                    let report = analyze(&net, &opts, bounds_cache.as_deref())?;
                    emit(serde_json::to_value(&report)?)
                }
                Some(csv_path) => {
                    if seed.is_none() {
                        bail!("--seed is mandatory in batch mode");
                    }
                    run_batch(&network, &opts, &csv_path, workers.max(1))
                }
            }
        }
    }
}

fn run_batch(dir: &Path, opts: &AnalyzeOptions, csv_path: &Path, workers: usize) -> Result<()> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .json networks in {}", dir.display());
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut rows: Vec<Option<String>> = vec![None; files.len()];
    let slots: Vec<std::sync::Mutex<&mut Option<String>>> =
        rows.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for _ in 0..workers.min(files.len()) {
            handles.push(scope.spawn(|| -> Result<()> {
                loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= files.len() {
                        return Ok(());
                    }
                    let net = load(&files[i])?;
                    let report = analyze(&net, opts, None)?;
                    **slots[i].lock().unwrap() = Some(csv_row(&report));
                }
            }));
        }
        for h in handles {
            h.join().expect("batch worker panicked")?;
        }
        Ok(())
    })?;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows.into_iter().flatten() {
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(csv_path, &out).with_context(|| format!("writing {}", csv_path.display()))?;
    println!(
        "{}",
        json!({"schema": REPORT_SCHEMA, "csv": csv_path.display().to_string(), "networks": files.len()})
    );
    Ok(())
}
