//! Configuration model shared by every subcommand: a JSON config file plus
//! command-line overrides (flags win). The resolved configuration is echoed
//! verbatim in each command's output metadata.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use tvtree::graph::TreeGraph;

pub const SCHEMA_VERSION: u32 = 1;

/// Graph description: a named family, an explicit parent map, or a file
/// holding one of these JSON objects.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    /// Canonical path 1 − 2 − … − n.
    Path { n: usize },
    /// Path of n1 vertices with a second arm of n2 vertices attached at b.
    Branched { n1: usize, n2: usize, b: usize },
    /// Inbound path of `inbound` vertices whose last vertex carries one arm
    /// per entry of `arms`.
    Star { inbound: usize, arms: Vec<usize> },
    /// Explicit tree: parent—child map over vertices 2..=n (keys are the
    /// children as decimal strings, per JSON object syntax).
    Tree { n: usize, parents: BTreeMap<String, usize> },
    /// Load one of the above from a JSON file.
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self) -> Result<TreeGraph> {
        match self {
            GraphSpec::Path { n } => Ok(TreeGraph::path(*n)?),
            GraphSpec::Branched { n1, n2, b } => Ok(TreeGraph::branched(*n1, *n2, *b)?),
            GraphSpec::Star { inbound, arms } => Ok(TreeGraph::star_of_paths(*inbound, arms)?),
            GraphSpec::Tree { n, parents } => {
                let mut map = BTreeMap::new();
                for (k, &p) in parents {
                    let v: usize = k
                        .parse()
                        .with_context(|| format!("graph parent key {k:?} is not an integer"))?;
                    map.insert(v, p);
                }
                if map.len() + 1 != *n {
                    bail!("graph says n={n} but lists {} parent entries", map.len());
                }
                Ok(TreeGraph::build_tree(&map)?)
            }
            GraphSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading graph file {}", path.display()))?;
                let spec: GraphSpec = serde_json::from_str(&text)
                    .with_context(|| format!("parsing graph file {}", path.display()))?;
                if matches!(spec, GraphSpec::File { .. }) {
                    bail!("graph file {} points to another file", path.display());
                }
                spec.build()
            }
        }
    }
}

/// Signal description: jump positions with explicit or generated levels,
/// explicit values, or a file holding one of these JSON objects.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalSpec {
    /// Piecewise constant along vertex order: `levels` has one more entry
    /// than `jumps`.
    Levels { jumps: Vec<usize>, levels: Vec<f64> },
    /// Levels alternate 0, a, 0, a, …
    Alternating { jumps: Vec<usize>, amplitude: f64 },
    /// Levels climb 0, step, 2·step, …
    Staircase { jumps: Vec<usize>, step: f64 },
    /// Explicit vertex values.
    Values { f0: Vec<f64> },
    /// Load one of the above from a JSON file.
    File { path: PathBuf },
}

impl SignalSpec {
    pub fn build(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            SignalSpec::Levels { jumps, levels } => {
                Ok(tvtree::sim::piecewise_constant(n, jumps, levels)?)
            }
            SignalSpec::Alternating { jumps, amplitude } => {
                Ok(tvtree::sim::alternating_signal(n, jumps, *amplitude)?)
            }
            SignalSpec::Staircase { jumps, step } => {
                Ok(tvtree::sim::staircase_signal(n, jumps, *step)?)
            }
            SignalSpec::Values { f0 } => {
                if f0.len() != n {
                    bail!("signal has {} values but the graph has {n} vertices", f0.len());
                }
                Ok(f0.clone())
            }
            SignalSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading signal file {}", path.display()))?;
                let spec: SignalSpec = serde_json::from_str(&text)
                    .with_context(|| format!("parsing signal file {}", path.display()))?;
                if matches!(spec, SignalSpec::File { .. }) {
                    bail!("signal file {} points to another file", path.display());
                }
                spec.build(n)
            }
        }
    }
}

/// Penalty level: an explicit value or the penalty rule
/// λ = γσ√(2·log(4(n−s−1)/δ)/n).
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    Named(String),
}

impl LambdaSpec {
    pub fn is_rule(&self) -> Result<bool> {
        match self {
            LambdaSpec::Value(v) => {
                if !v.is_finite() || *v < 0.0 {
                    bail!("lambda must be finite and nonnegative, got {v}");
                }
                Ok(false)
            }
            LambdaSpec::Named(s) if s == "rule" => Ok(true),
            LambdaSpec::Named(s) => bail!("unknown lambda spec {s:?}; use a number or \"rule\""),
        }
    }
}

/// Compatibility constant source for the general oracle bound: the exact
/// enumeration (n ≤ 14), the weighted closed-form lower bound, or an
/// explicit value.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum KappaSpec {
    Named(String),
    Value { value: f64 },
}

/// One configuration structure for all subcommands; each command validates
/// the subset of fields it needs.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<i8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_decades: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_out: Option<PathBuf>,
}

/// Command-line overrides mirroring the config fields; any flag given here
/// replaces the corresponding file value.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON config file; flags below override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Graph family: path | branched | star | tree-file.
    #[arg(long, value_name = "KIND")]
    pub graph_kind: Option<String>,
    /// Vertex count for --graph-kind path.
    #[arg(long)]
    pub n: Option<usize>,
    /// Main path length for --graph-kind branched.
    #[arg(long)]
    pub n1: Option<usize>,
    /// Arm length for --graph-kind branched.
    #[arg(long)]
    pub n2: Option<usize>,
    /// Attachment vertex for --graph-kind branched.
    #[arg(long)]
    pub b: Option<usize>,
    /// Inbound path length for --graph-kind star.
    #[arg(long)]
    pub inbound: Option<usize>,
    /// Comma-separated arm lengths for --graph-kind star.
    #[arg(long, value_name = "L1,L2,...")]
    pub arms: Option<String>,
    /// Graph JSON file (used by --graph-kind tree-file, or alone).
    #[arg(long, value_name = "FILE")]
    pub graph_file: Option<PathBuf>,
    /// Signal family: levels | alternating | staircase | values | file.
    #[arg(long, value_name = "KIND")]
    pub signal_kind: Option<String>,
    /// Comma-separated jump vertices for the signal.
    #[arg(long, value_name = "V1,V2,...")]
    pub jumps: Option<String>,
    /// Comma-separated level values (one more than jumps).
    #[arg(long, value_name = "L0,L1,...")]
    pub levels: Option<String>,
    /// Amplitude for --signal-kind alternating.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Step size for --signal-kind staircase.
    #[arg(long)]
    pub step: Option<f64>,
    /// Signal JSON file.
    #[arg(long, value_name = "FILE")]
    pub signal_file: Option<PathBuf>,
    /// Comma-separated observation vector.
    #[arg(long, value_name = "Y1,Y2,...")]
    pub y: Option<String>,
    /// Comma-separated active-set vertices.
    #[arg(long, value_name = "V1,V2,...")]
    pub s: Option<String>,
    /// Comma-separated jump signs (+1/-1, or +/-).
    #[arg(long, value_name = "S1,S2,...")]
    pub signs: Option<String>,
    /// Penalty level: a number, or "rule" for the penalty rule.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Failure probability budget δ ∈ (0,1).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Penalty inflation factor γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Monte Carlo replicate count.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Master seed for the deterministic replicate streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bound display: master | path | branched | general.
    #[arg(long)]
    pub display: Option<String>,
    /// Compatibility source for the master display: exact | weighted |
    /// a number.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Simulation experiment: bound | recovery.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Number of penalty grid points for --experiment recovery.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Number of decades the penalty grid descends from λ_max.
    #[arg(long)]
    pub grid_decades: Option<f64>,
    /// Report output file (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Replicate-table CSV output file (simulate).
    #[arg(long, value_name = "FILE")]
    pub csv_out: Option<PathBuf>,
    /// Summary JSON output file (simulate; default: standard output).
    #[arg(long, value_name = "FILE")]
    pub summary_out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| anyhow!("bad {what} entry {t:?}: {e}")))
        .collect()
}

fn parse_signs(text: &str) -> Result<Vec<i8>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "+" | "+1" | "1" => Ok(1),
            "-" | "-1" => Ok(-1),
            other => Err(anyhow!("bad sign entry {other:?}: use +1 or -1")),
        })
        .collect()
}

impl Overrides {
    fn graph_spec(&self) -> Result<Option<GraphSpec>> {
        if let Some(kind) = &self.graph_kind {
            let spec = match kind.as_str() {
                "path" => GraphSpec::Path {
                    n: self.n.ok_or_else(|| anyhow!("--graph-kind path needs --n"))?,
                },
                "branched" => GraphSpec::Branched {
                    n1: self.n1.ok_or_else(|| anyhow!("--graph-kind branched needs --n1"))?,
                    n2: self.n2.ok_or_else(|| anyhow!("--graph-kind branched needs --n2"))?,
                    b: self.b.ok_or_else(|| anyhow!("--graph-kind branched needs --b"))?,
                },
                "star" => GraphSpec::Star {
                    inbound: self
                        .inbound
                        .ok_or_else(|| anyhow!("--graph-kind star needs --inbound"))?,
                    arms: parse_list(
                        self.arms
                            .as_deref()
                            .ok_or_else(|| anyhow!("--graph-kind star needs --arms"))?,
                        "arm",
                    )?,
                },
                "tree-file" => GraphSpec::File {
                    path: self
                        .graph_file
                        .clone()
                        .ok_or_else(|| anyhow!("--graph-kind tree-file needs --graph-file"))?,
                },
                other => bail!("unknown graph kind {other:?}"),
            };
            return Ok(Some(spec));
        }
        if let Some(path) = &self.graph_file {
            return Ok(Some(GraphSpec::File { path: path.clone() }));
        }
        Ok(None)
    }

    fn signal_spec(&self) -> Result<Option<SignalSpec>> {
        let jumps = || -> Result<Vec<usize>> {
            parse_list(
                self.jumps.as_deref().ok_or_else(|| anyhow!("signal needs --jumps"))?,
                "jump",
            )
        };
        if let Some(kind) = &self.signal_kind {
            let spec = match kind.as_str() {
                "levels" => SignalSpec::Levels {
                    jumps: jumps()?,
                    levels: parse_list(
                        self.levels
                            .as_deref()
                            .ok_or_else(|| anyhow!("--signal-kind levels needs --levels"))?,
                        "level",
                    )?,
                },
                "alternating" => SignalSpec::Alternating {
                    jumps: jumps()?,
                    amplitude: self
                        .amplitude
                        .ok_or_else(|| anyhow!("--signal-kind alternating needs --amplitude"))?,
                },
                "staircase" => SignalSpec::Staircase {
                    jumps: jumps()?,
                    step: self
                        .step
                        .ok_or_else(|| anyhow!("--signal-kind staircase needs --step"))?,
                },
                "file" => SignalSpec::File {
                    path: self
                        .signal_file
                        .clone()
                        .ok_or_else(|| anyhow!("--signal-kind file needs --signal-file"))?,
                },
                other => bail!("unknown signal kind {other:?}"),
            };
            return Ok(Some(spec));
        }
        if let Some(path) = &self.signal_file {
            return Ok(Some(SignalSpec::File { path: path.clone() }));
        }
        Ok(None)
    }

    /// Loads the config file (if any) and applies these overrides.
    pub fn resolve(&self) -> Result<Config> {
        let mut cfg: Config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => Config::default(),
        };
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                bail!("config schema_version {v} is not supported (expected {SCHEMA_VERSION})");
            }
        }
        if let Some(spec) = self.graph_spec()? {
            cfg.graph = Some(spec);
        }
        if let Some(spec) = self.signal_spec()? {
            cfg.signal = Some(spec);
        }
        if let Some(text) = &self.y {
            cfg.y = Some(parse_list(text, "observation")?);
        }
        if let Some(text) = &self.s {
            cfg.s = Some(parse_list(text, "active-set vertex")?);
        }
        if let Some(text) = &self.signs {
            cfg.signs = Some(parse_signs(text)?);
        }
        if let Some(text) = &self.lambda {
            cfg.lambda = Some(if text == "rule" {
                LambdaSpec::Named("rule".into())
            } else {
                LambdaSpec::Value(
                    text.parse::<f64>()
                        .map_err(|e| anyhow!("bad --lambda {text:?}: {e}"))?,
                )
            });
        }
        if let Some(text) = &self.kappa {
            cfg.kappa = Some(match text.as_str() {
                "exact" | "weighted" => KappaSpec::Named(text.clone()),
                other => KappaSpec::Value {
                    value: other
                        .parse::<f64>()
                        .map_err(|e| anyhow!("bad --kappa {other:?}: {e}"))?,
                },
            });
        }
        macro_rules! copy {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = Some(v.clone()); })*
            };
        }
        copy!(
            sigma, delta, gamma, replicates, seed, display, experiment, grid_points,
            grid_decades, out, csv_out, summary_out
        );
        cfg.schema_version = Some(SCHEMA_VERSION);
        Ok(cfg)
    }
}

impl Config {
    pub fn require_graph(&self) -> Result<TreeGraph> {
        self.graph
            .as_ref()
            .ok_or_else(|| anyhow!("no graph given (config \"graph\" or --graph-kind/--graph-file)"))?
            .build()
    }

    pub fn require_signal(&self, n: usize) -> Result<Vec<f64>> {
        self.signal
            .as_ref()
            .ok_or_else(|| anyhow!("no signal given (config \"signal\" or --signal-kind)"))?
            .build(n)
    }

    pub fn require<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
        v.ok_or_else(|| anyhow!("missing required parameter {name:?}"))
    }
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
