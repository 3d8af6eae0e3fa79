//! Subcommand implementations. Every command resolves its configuration
//! (file + flag overrides), validates inputs (exit code 2 on failure), runs
//! the computation (exit code 1 on failure), and emits a JSON report that
//! echoes the resolved configuration.

use crate::config::{emit, Config, GraphSpec, KappaSpec, LambdaSpec, SignalSpec, SCHEMA_VERSION};
use anyhow::{anyhow, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use tvtree::compatibility::{
    kappa_exact, kappa_lower_branched, kappa_lower_general, kappa_lower_path,
    kappa_lower_weighted, KAPPA_EXACT_MAX_N,
};
use tvtree::estimator::{lambda_rule, pattern, Design, PATTERN_TOL};
use tvtree::graph::{classify_branch_case, decompose, ActiveSet, BranchingDescriptor, TreeGraph};
use tvtree::irrep::{irrep_report, SignPattern};
use tvtree::oracle::{
    bound_path, bound_branched, bound_general, bound_master, zeta, OracleBound,
};
use tvtree::projection::weight_vectors;
use tvtree::sim::{
    jump_set, recovery_mc, validate_bound_mc, wilson_interval,
};

/// A failed command, tagged with the exit code its phase maps to:
/// configuration/usage problems exit 2, runtime problems exit 1.
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Config(e) => format!("configuration error: {e:#}"),
            Failure::Runtime(e) => format!("error: {e:#}"),
        }
    }
}

trait Phase<T> {
    fn config_phase(self) -> std::result::Result<T, Failure>;
    fn runtime_phase(self) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Phase<T> for std::result::Result<T, E> {
    fn config_phase(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn runtime_phase(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

type CmdResult = std::result::Result<(), Failure>;

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a Config,
    result: R,
}

fn emit_report<R: Serialize>(cfg: &Config, command: &str, result: R) -> CmdResult {
    emit_report_to(cfg, command, result, cfg.out.as_deref())
}

fn emit_report_to<R: Serialize>(
    cfg: &Config,
    command: &str,
    result: R,
    dest: Option<&std::path::Path>,
) -> CmdResult {
    let report = Report { schema_version: SCHEMA_VERSION, command, config: cfg, result };
    let mut text = serde_json::to_string_pretty(&report).runtime_phase()?;
    text.push('\n');
    emit(dest, &text).runtime_phase()
}

fn active_set(cfg: &Config, g: &TreeGraph) -> Result<ActiveSet> {
    let verts = cfg
        .s
        .as_ref()
        .ok_or_else(|| anyhow!("no active set given (config \"s\" or --s)"))?;
    Ok(ActiveSet::new(g.n(), verts.iter().copied())?)
}

/// Resolves the penalty level; `s_for_rule` supplies the sparsity the rule
/// needs (explicit active set, else the signal's jump count).
fn resolve_lambda(cfg: &Config, n: usize, s_for_rule: Option<usize>) -> Result<f64> {
    let spec = cfg
        .lambda
        .as_ref()
        .ok_or_else(|| anyhow!("no lambda given (config \"lambda\" or --lambda)"))?;
    if spec.is_rule()? {
        let s = s_for_rule
            .ok_or_else(|| anyhow!("lambda \"rule\" needs an active set or a signal"))?;
        let sigma = Config::require(cfg.sigma, "sigma")?;
        let delta = Config::require(cfg.delta, "delta")?;
        let gamma = Config::require(cfg.gamma, "gamma")?;
        Ok(lambda_rule(n, s, delta, gamma, sigma)?)
    } else {
        match spec {
            LambdaSpec::Value(v) => Ok(*v),
            LambdaSpec::Named(_) => unreachable!("is_rule filtered named specs"),
        }
    }
}

// ---------------------------------------------------------------- fit ----

#[derive(Serialize)]
struct FitReport {
    n: usize,
    lambda: f64,
    converged: bool,
    iterations: usize,
    kkt_residual: f64,
    f_hat: Vec<f64>,
    beta_hat: Vec<f64>,
    pattern: Vec<i8>,
}

pub fn cmd_fit(cfg: &Config) -> CmdResult {
    let g = cfg.require_graph().config_phase()?;
    let n = g.n();
    let y = cfg
        .y
        .clone()
        .ok_or_else(|| anyhow!("no observations given (config \"y\" or --y)"))
        .config_phase()?;
    if y.len() != n {
        return Err(Failure::Config(anyhow!(
            "y has {} entries but the graph has {n} vertices",
            y.len()
        )));
    }
    let s_for_rule = cfg
        .s
        .as_ref()
        .map(|s| s.len())
        .or_else(|| cfg.signal.as_ref().and_then(|sp| jump_count(sp)));
    let lambda = resolve_lambda(cfg, n, s_for_rule).config_phase()?;
    let design = Design::new(&g);
    let res = design.fit(&y, lambda, None).runtime_phase()?;
    let report = FitReport {
        n,
        lambda: res.lambda,
        converged: res.converged,
        iterations: res.iterations,
        kkt_residual: res.kkt_residual,
        pattern: pattern(&res, PATTERN_TOL),
        f_hat: res.f_hat,
        beta_hat: res.beta_hat,
    };
    emit_report(cfg, "fit", report)
}

fn jump_count(spec: &SignalSpec) -> Option<usize> {
    match spec {
        SignalSpec::Levels { jumps, .. }
        | SignalSpec::Alternating { jumps, .. }
        | SignalSpec::Staircase { jumps, .. } => Some(jumps.len()),
        _ => None,
    }
}

// -------------------------------------------------------------- kappa ----

#[derive(Serialize)]
struct SimpleBound {
    k: f64,
    bound: f64,
}

#[derive(Serialize)]
struct KappaReport {
    n: usize,
    s: Vec<usize>,
    exact: Option<f64>,
    exact_weighted: Option<f64>,
    bound: Option<f64>,
    tight: Option<bool>,
    lower_bounds: KappaBounds,
    decomposition: DecompositionReport,
}

#[derive(Serialize)]
struct KappaBounds {
    path: Option<SimpleBound>,
    branched: Option<SimpleBound>,
    general: Option<GeneralBoundReport>,
    weighted: Option<WeightedBoundReport>,
}

#[derive(Serialize)]
struct GeneralBoundReport {
    k: f64,
    bound: f64,
    delta_harmonic_mean: f64,
    harmonic_bound: f64,
}

#[derive(Serialize)]
struct WeightedBoundReport {
    gamma: f64,
    k: f64,
    bound: f64,
    bound_quadratic: f64,
    dstar_w_norm: f64,
}

#[derive(Serialize)]
struct DecompositionReport {
    segments: usize,
    cut_edges: Vec<usize>,
    valid_for_bounds: bool,
    s_within_quarter: bool,
    notes: Vec<String>,
}

pub fn cmd_kappa(cfg: &Config) -> CmdResult {
    let g = cfg.require_graph().config_phase()?;
    let n = g.n();
    let s = active_set(cfg, &g).config_phase()?;
    let dec = decompose(&g, &s, None).runtime_phase()?;

    let exact = if n <= KAPPA_EXACT_MAX_N {
        Some(kappa_exact(&g, &s, None).runtime_phase()?)
    } else {
        None
    };
    let path = kappa_lower_path(&dec).ok().map(|(k, bound)| SimpleBound { k, bound });
    let branched =
        kappa_lower_branched(&dec).ok().map(|(k, bound)| SimpleBound { k, bound });
    let general = kappa_lower_general(&dec).ok().map(|gl| GeneralBoundReport {
        k: gl.k,
        bound: gl.bound,
        delta_harmonic_mean: gl.delta_harmonic_mean,
        harmonic_bound: gl.harmonic_bound,
    });
    let (exact_weighted, weighted) = match cfg.gamma {
        Some(gamma) => {
            let wv = weight_vectors(&g, &s, gamma).config_phase()?;
            let wb = kappa_lower_weighted(&g, &dec, &wv, &dec.cut_edges).ok().map(|w| {
                WeightedBoundReport {
                    gamma,
                    k: w.k,
                    bound: w.bound,
                    bound_quadratic: w.bound_quadratic,
                    dstar_w_norm: w.dstar_w_norm,
                }
            });
            let ew = if n <= KAPPA_EXACT_MAX_N {
                Some(kappa_exact(&g, &s, Some(&wv)).runtime_phase()?)
            } else {
                None
            };
            (ew, wb)
        }
        None => (None, None),
    };

    let bound = path
        .as_ref()
        .map(|b| b.bound)
        .or_else(|| branched.as_ref().map(|b| b.bound))
        .or_else(|| general.as_ref().map(|b| b.bound));
    let tight = match (exact, bound) {
        (Some(e), Some(b)) => Some((e - b).abs() <= 1e-8),
        _ => None,
    };

    let report = KappaReport {
        n,
        s: s.vertices().to_vec(),
        exact,
        exact_weighted,
        bound,
        tight,
        lower_bounds: KappaBounds { path, branched, general, weighted },
        decomposition: DecompositionReport {
            segments: dec.g(),
            cut_edges: dec.cut_edges.clone(),
            valid_for_bounds: dec.valid_for_bounds,
            s_within_quarter: dec.s_within_quarter,
            notes: dec.notes.clone(),
        },
    };
    emit_report(cfg, "kappa", report)
}

// ------------------------------------------------------- oracle-bound ----

#[derive(Serialize)]
struct BranchReport {
    b: Vec<usize>,
    b_star: usize,
    case: String,
    zeta: f64,
}

#[derive(Serialize)]
struct BoundReport {
    display: String,
    n: usize,
    s: Vec<usize>,
    lambda: f64,
    kappa_w_sq: Option<f64>,
    approximation_term: f64,
    noise_term: f64,
    compat_term: f64,
    total: f64,
    branch: Option<BranchReport>,
}

pub fn cmd_oracle_bound(cfg: &Config) -> CmdResult {
    let g = cfg.require_graph().config_phase()?;
    let n = g.n();
    let f0 = cfg.require_signal(n).config_phase()?;
    let s = match &cfg.s {
        Some(_) => active_set(cfg, &g).config_phase()?,
        None => jump_set(&g, &f0).config_phase()?,
    };
    let sigma = Config::require(cfg.sigma, "sigma").config_phase()?;
    let delta = Config::require(cfg.delta, "delta").config_phase()?;
    let gamma = Config::require(cfg.gamma, "gamma").config_phase()?;
    let display = cfg.display.clone().unwrap_or_else(|| "master".into());
    let lambda = lambda_rule(n, s.s(), delta, gamma, sigma).config_phase()?;

    let mut kappa_w_sq = None;
    let mut branch = None;
    let bound: OracleBound = match display.as_str() {
        "master" => {
            let k_sq = match cfg.kappa.as_ref().unwrap_or(&KappaSpec::Named("weighted".into()))
            {
                KappaSpec::Named(name) if name == "weighted" => {
                    let wv = weight_vectors(&g, &s, gamma).config_phase()?;
                    let dec = decompose(&g, &s, None).runtime_phase()?;
                    kappa_lower_weighted(&g, &dec, &wv, &dec.cut_edges)
                        .runtime_phase()?
                        .bound
                }
                KappaSpec::Named(name) if name == "exact" => {
                    let wv = weight_vectors(&g, &s, gamma).config_phase()?;
                    kappa_exact(&g, &s, Some(&wv)).runtime_phase()?
                }
                KappaSpec::Named(name) => {
                    return Err(Failure::Config(anyhow!(
                        "unknown kappa spec {name:?}; use \"exact\", \"weighted\", or a value"
                    )))
                }
                KappaSpec::Value { value } => *value,
            };
            kappa_w_sq = Some(k_sq);
            bound_master(&f0, &f0, &g, &s, delta, gamma, sigma, k_sq).runtime_phase()?
        }
        "path" => bound_path(&f0, &f0, &g, &s, delta, gamma, sigma).runtime_phase()?,
        "branched" => {
            let b = bound_branched(&f0, &f0, &g, &s, delta, gamma, sigma).runtime_phase()?;
            if let [r] = g.ramifications()[..] {
                let bd = BranchingDescriptor::from_graph(&g, &s, r).runtime_phase()?;
                let case = classify_branch_case(&bd).runtime_phase()?;
                branch = Some(BranchReport {
                    b: bd.b.clone(),
                    b_star: bd.b_star,
                    case: case.to_string(),
                    zeta: zeta(case, bd.b_star),
                });
            }
            b
        }
        "general" => bound_general(&f0, &f0, &g, &s, delta, gamma, sigma).runtime_phase()?,
        other => {
            return Err(Failure::Config(anyhow!(
                "unknown display {other:?}; use master | path | branched | general"
            )))
        }
    };

    let report = BoundReport {
        display,
        n,
        s: s.vertices().to_vec(),
        lambda,
        kappa_w_sq,
        approximation_term: bound.approximation_term,
        noise_term: bound.noise_term,
        compat_term: bound.compat_term,
        total: bound.total,
        branch,
    };
    emit_report(cfg, "oracle-bound", report)
}

// -------------------------------------------------------------- irrep ----

#[derive(Serialize)]
struct IrrepJson {
    lhs: f64,
    satisfied: bool,
    analytic_verdict: Option<bool>,
    violated_rules: Vec<String>,
    n: usize,
    s: Vec<usize>,
    signs: Vec<i8>,
}

pub fn cmd_irrep(cfg: &Config) -> CmdResult {
    let g = cfg.require_graph().config_phase()?;
    let s = active_set(cfg, &g).config_phase()?;
    let signs = cfg
        .signs
        .clone()
        .ok_or_else(|| anyhow!("no jump signs given (config \"signs\" or --signs)"))
        .config_phase()?;
    let z = SignPattern::new(&s, &signs).config_phase()?;
    let rep = irrep_report(&g, &s, &z).runtime_phase()?;
    let report = IrrepJson {
        lhs: rep.lhs,
        satisfied: rep.satisfied,
        analytic_verdict: rep.analytic_verdict,
        violated_rules: rep.violated_rules,
        n: g.n(),
        s: s.vertices().to_vec(),
        signs,
    };
    emit_report(cfg, "irrep", report)
}

// ----------------------------------------------------------- simulate ----

/// Formats a float with 17 significant digits, locale-independent.
fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct SimulateBoundSummary {
    experiment: String,
    replicates: usize,
    lambda: f64,
    kappa_w_sq_lower: f64,
    bound_rhs: f64,
    holds: usize,
    bound_hold_rate: f64,
    hold_rate_wilson_low: f64,
    hold_rate_wilson_high: f64,
    pattern_recoveries: usize,
    pattern_recovery_rate: f64,
    csv_path: Option<String>,
}

#[derive(Serialize)]
struct SimulateRecoverySummary {
    experiment: String,
    replicates: usize,
    grid_points: usize,
    grid_decades: f64,
    successes: usize,
    frequency: f64,
    wilson_low: f64,
    wilson_high: f64,
    csv_path: Option<String>,
}

const WILSON_Z95: f64 = 1.959963984540054;

pub fn cmd_simulate(cfg: &Config) -> CmdResult {
    let g = cfg.require_graph().config_phase()?;
    let n = g.n();
    let f0 = cfg.require_signal(n).config_phase()?;
    let sigma = Config::require(cfg.sigma, "sigma").config_phase()?;
    let replicates = Config::require(cfg.replicates, "replicates").config_phase()?;
    let seed = Config::require(cfg.seed, "seed").config_phase()?;
    let experiment = cfg.experiment.clone().unwrap_or_else(|| "bound".into());
    let csv_path = cfg.csv_out.clone();

    match experiment.as_str() {
        "bound" => {
            let delta = Config::require(cfg.delta, "delta").config_phase()?;
            let gamma = Config::require(cfg.gamma, "gamma").config_phase()?;
            let v = validate_bound_mc(&g, &f0, sigma, delta, gamma, replicates, seed)
                .runtime_phase()?;
            let mut csv = String::from("seed,mse,bound_rhs,bound_holds,pattern_recovered\n");
            let mut recoveries = 0usize;
            for row in &v.rows {
                recoveries += usize::from(row.pattern_recovered);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    row.replicate,
                    csv_float(row.mse),
                    csv_float(v.bound.total),
                    row.bound_holds,
                    row.pattern_recovered
                );
            }
            emit(csv_path.as_deref(), &csv).runtime_phase()?;
            let (wl, wh) = wilson_interval(v.holds, v.replicates, WILSON_Z95);
            let summary = SimulateBoundSummary {
                experiment,
                replicates: v.replicates,
                lambda: v.lambda,
                kappa_w_sq_lower: v.kappa_w_sq_lower,
                bound_rhs: v.bound.total,
                holds: v.holds,
                bound_hold_rate: v.hold_rate,
                hold_rate_wilson_low: wl,
                hold_rate_wilson_high: wh,
                pattern_recoveries: recoveries,
                pattern_recovery_rate: recoveries as f64 / v.replicates as f64,
                csv_path: csv_path.map(|p| p.display().to_string()),
            };
            emit_report_to(cfg, "simulate", summary, cfg.summary_out.as_deref())
        }
        "recovery" => {
            let grid_points = cfg.grid_points.unwrap_or(20);
            let grid_decades = cfg.grid_decades.unwrap_or(3.0);
            let out = recovery_mc(&g, &f0, sigma, replicates, seed, grid_points, grid_decades)
                .runtime_phase()?;
            let mut csv = String::from("seed,recovered\n");
            for (rep, &ok) in out.per_replicate.iter().enumerate() {
                let _ = writeln!(csv, "{rep},{ok}");
            }
            emit(csv_path.as_deref(), &csv).runtime_phase()?;
            let summary = SimulateRecoverySummary {
                experiment,
                replicates: out.replicates,
                grid_points,
                grid_decades,
                successes: out.successes,
                frequency: out.frequency,
                wilson_low: out.wilson_low,
                wilson_high: out.wilson_high,
                csv_path: csv_path.map(|p| p.display().to_string()),
            };
            emit_report_to(cfg, "simulate", summary, cfg.summary_out.as_deref())
        }
        other => Err(Failure::Config(anyhow!(
            "unknown experiment {other:?}; use bound | recovery"
        ))),
    }
}

// ------------------------------------------------------ gen-graph/signal ----

#[derive(Serialize)]
struct GraphFile<'a> {
    schema_version: u32,
    kind: &'static str,
    n: usize,
    parents: BTreeMap<String, usize>,
    config: &'a Config,
}

pub fn cmd_gen_graph(cfg: &Config) -> CmdResult {
    let spec = cfg
        .graph
        .as_ref()
        .ok_or_else(|| anyhow!("no graph given (--graph-kind or config \"graph\")"))
        .config_phase()?;
    if matches!(spec, GraphSpec::File { .. }) {
        return Err(Failure::Config(anyhow!("gen-graph needs a constructive graph spec")));
    }
    let g = spec.build().config_phase()?;
    let mut parents = BTreeMap::new();
    for v in 2..=g.n() {
        parents.insert(v.to_string(), g.parent(v).unwrap());
    }
    let file = GraphFile {
        schema_version: SCHEMA_VERSION,
        kind: "tree",
        n: g.n(),
        parents,
        config: cfg,
    };
    let mut text = serde_json::to_string_pretty(&file).runtime_phase()?;
    text.push('\n');
    emit(cfg.out.as_deref(), &text).runtime_phase()
}

#[derive(Serialize)]
struct SignalFile<'a> {
    schema_version: u32,
    kind: &'static str,
    f0: Vec<f64>,
    config: &'a Config,
}

pub fn cmd_gen_signal(cfg: &Config) -> CmdResult {
    let g = cfg.require_graph().config_phase()?;
    let f0 = cfg.require_signal(g.n()).config_phase()?;
    let file =
        SignalFile { schema_version: SCHEMA_VERSION, kind: "values", f0, config: cfg };
    let mut text = serde_json::to_string_pretty(&file).runtime_phase()?;
    text.push('\n');
    emit(cfg.out.as_deref(), &text).runtime_phase()
}
