//! TOML experiment configuration. Unknown keys are rejected.

use std::fmt;

use serde::Deserialize;

use qwalk_core::experiment::Experiment;
use qwalk_core::kernel::{from_rows, C64};
use qwalk_core::noise::{IdleKind, IdleScope, NoiseConfig};
use qwalk_core::walk::{coin_matrix, CoinClass, CoinSpec, WalkGraph};

use crate::matrix_file::parse_complex;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub steps: usize,
    /// Include `t = 0` in the time average.
    #[serde(default)]
    pub include_t0: bool,
    pub graph: GraphConfig,
    #[serde(default)]
    pub coin: CoinConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Cycle,
    Dihedral,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    /// `N`: cycle length, or number of rotations of the dihedral group.
    pub vertices: usize,
    /// Cycle only; defaults to 0.
    pub liveliness: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoinKind {
    #[default]
    Grover,
    X,
    Y,
    Z,
    W,
    Custom,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CoinConfig {
    #[serde(default)]
    pub class: CoinKind,
    #[serde(default)]
    pub theta: f64,
    /// Custom coin rows, each three complex strings.
    pub matrix: Option<Vec<Vec<String>>>,
}

/// A vertex as an index, or `[s, r]` for a dihedral vertex.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum VertexSpec {
    Index(usize),
    Pair([usize; 2]),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_coin_state")]
    pub coin: Vec<String>,
    #[serde(default = "default_vertex")]
    pub vertex: VertexSpec,
}

fn default_coin_state() -> Vec<String> {
    vec!["1".into(), "0".into(), "0".into()]
}

fn default_vertex() -> VertexSpec {
    VertexSpec::Index(0)
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { coin: default_coin_state(), vertex: default_vertex() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    #[default]
    None,
    Gate,
    Idle,
    Both,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum IdleName {
    #[default]
    Amplitude,
    Phase,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScopeName {
    #[default]
    All,
    Untouched,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub mode: NoiseMode,
    #[serde(default)]
    pub idle: IdleName,
    /// When set, `p1`, `r1` and `r2` are drawn below `10^-epsilon` from the seed
    /// and the explicit values are ignored.
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub r1: f64,
    #[serde(default)]
    pub r2: f64,
    #[serde(default = "one")]
    pub t_idle: f64,
    #[serde(default)]
    pub idle_scope: ScopeName,
}

fn one() -> f64 {
    1.0
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            mode: NoiseMode::None,
            idle: IdleName::Amplitude,
            epsilon: None,
            p1: 0.0,
            r1: 0.0,
            r2: 0.0,
            t_idle: 1.0,
            idle_scope: ScopeName::All,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File name of the walk CSV inside the output directory.
    #[serde(default = "default_csv")]
    pub csv: String,
}

fn default_csv() -> String {
    "walk.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { csv: default_csv() }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub noise: Option<NoiseMode>,
    pub epsilon: Option<f64>,
}

/// Every problem found in a configuration, not just the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.noise {
            self.noise.mode = m;
        }
        if let Some(e) = o.epsilon {
            self.noise.epsilon = Some(e);
        }
    }

    fn graph(&self, errs: &mut Vec<String>) -> Option<WalkGraph> {
        let g = &self.graph;
        let built = match g.kind {
            GraphKind::Cycle => WalkGraph::cycle(g.vertices, g.liveliness.unwrap_or(0)),
            GraphKind::Dihedral => {
                if g.liveliness.is_some() {
                    errs.push("graph.liveliness applies to cycle graphs only".into());
                }
                WalkGraph::dihedral(g.vertices)
            }
        };
        built.map_err(|e| errs.push(format!("graph: {e}"))).ok()
    }

    fn coin(&self, errs: &mut Vec<String>) -> Option<CoinSpec> {
        let c = &self.coin;
        let spec = match c.class {
            CoinKind::Grover => CoinSpec::grover(),
            CoinKind::X => CoinSpec::class(CoinClass::X, c.theta),
            CoinKind::Y => CoinSpec::class(CoinClass::Y, c.theta),
            CoinKind::Z => CoinSpec::class(CoinClass::Z, c.theta),
            CoinKind::W => CoinSpec::class(CoinClass::W, c.theta),
            CoinKind::Custom => {
                let Some(rows) = &c.matrix else {
                    errs.push("coin.matrix is required for a custom coin".into());
                    return None;
                };
                if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                    errs.push("coin.matrix must have 3 rows of 3 entries".into());
                    return None;
                }
                let parsed: Result<Vec<Vec<C64>>, _> =
                    rows.iter().map(|r| r.iter().map(|s| parse_complex(s)).collect()).collect();
                match parsed {
                    Ok(p) => CoinSpec::custom(from_rows(&p)),
                    Err(e) => {
                        errs.push(format!("coin.matrix: {e}"));
                        return None;
                    }
                }
            }
        };
        if c.class != CoinKind::Custom && c.matrix.is_some() {
            errs.push("coin.matrix is only allowed with class = \"custom\"".into());
        }
        coin_matrix(&spec).map_err(|e| errs.push(format!("coin: {e}"))).ok()?;
        Some(spec)
    }

    fn coin_state(&self, errs: &mut Vec<String>) -> Option<[C64; 3]> {
        let s = &self.initial.coin;
        if s.len() != 3 {
            errs.push(format!("initial.coin needs 3 amplitudes, found {}", s.len()));
            return None;
        }
        let mut out = [C64::new(0.0, 0.0); 3];
        for (i, a) in s.iter().enumerate() {
            match parse_complex(a) {
                Ok(z) => out[i] = z,
                Err(e) => {
                    errs.push(format!("initial.coin[{i}]: {e}"));
                    return None;
                }
            }
        }
        if out.iter().all(|z| z.norm() == 0.0) {
            errs.push("initial.coin is the zero vector".into());
            return None;
        }
        Some(out)
    }

    fn vertex(&self, g: Option<&WalkGraph>, errs: &mut Vec<String>) -> Option<usize> {
        let g = g?;
        let v = match (self.initial.vertex, g) {
            (VertexSpec::Index(v), _) => v,
            (VertexSpec::Pair([s, r]), WalkGraph::Dihedral { rotations }) => {
                if s > 1 || r >= *rotations {
                    errs.push(format!("initial.vertex [{s}, {r}] needs s in 0..2 and r in 0..{rotations}"));
                    return None;
                }
                s * rotations + r
            }
            (VertexSpec::Pair(_), _) => {
                errs.push("initial.vertex as [s, r] applies to dihedral graphs only".into());
                return None;
            }
        };
        if v >= g.vertex_count() {
            errs.push(format!("initial.vertex {v} outside 0..{}", g.vertex_count()));
            return None;
        }
        Some(v)
    }

    pub fn noise_config(&self) -> Result<NoiseConfig, ConfigErrors> {
        let n = &self.noise;
        let mut errs = Vec::new();
        let gate = matches!(n.mode, NoiseMode::Gate | NoiseMode::Both);
        let idle = matches!(n.mode, NoiseMode::Idle | NoiseMode::Both);
        let idle_kind = match (idle, n.idle) {
            (false, _) => IdleKind::None,
            (true, IdleName::Amplitude) => IdleKind::Amplitude,
            (true, IdleName::Phase) => IdleKind::Phase,
        };
        let mut cfg = match n.epsilon {
            Some(e) if !(e.is_finite() && e >= 0.0) => {
                errs.push(format!("noise.epsilon = {e} must be a nonnegative number"));
                NoiseConfig::noiseless()
            }
            Some(e) if n.mode != NoiseMode::None => NoiseConfig::from_epsilon(e, self.seed, gate, idle_kind),
            _ => NoiseConfig {
                gate_noise: gate,
                p1: if gate { n.p1 } else { 0.0 },
                idle_kind,
                r1: if idle { n.r1 } else { 0.0 },
                r2: if idle { n.r2 } else { 0.0 },
                seed: self.seed,
                ..NoiseConfig::noiseless()
            },
        };
        cfg.t_idle = n.t_idle;
        cfg.idle_scope = match n.idle_scope {
            ScopeName::All => IdleScope::All,
            ScopeName::Untouched => IdleScope::Untouched,
        };
        if let Err(e) = cfg.validate() {
            errs.push(format!("noise: {e}"));
        }
        if gate && !idle && (n.r1 != 0.0 || n.r2 != 0.0) && n.epsilon.is_none() {
            errs.push("noise.r1 / noise.r2 set but mode has no idle noise".into());
        }
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(errs))
        }
    }

    /// Builds the experiment, validating every field before any simulation.
    pub fn to_experiment(&self) -> Result<Experiment, ConfigErrors> {
        let mut errs = Vec::new();
        if self.steps == 0 {
            errs.push("steps must be positive".into());
        }
        if self.output.csv.is_empty() || self.output.csv.contains(['/', '\\']) {
            errs.push(format!("output.csv {:?} must be a plain file name", self.output.csv));
        }
        let graph = self.graph(&mut errs);
        let coin = self.coin(&mut errs);
        let coin_state = self.coin_state(&mut errs);
        let vertex = self.vertex(graph.as_ref(), &mut errs);
        let noise = self.noise_config().map_err(|e| errs.extend(e.0)).ok();
        match (graph, coin, coin_state, vertex, noise) {
            (Some(graph), Some(coin), Some(coin_state), Some(vertex), Some(noise)) if errs.is_empty() => {
                let e = Experiment { graph, coin, coin_state, vertex, steps: self.steps, noise, include_t0: self.include_t0 };
                e.validate().map_err(|x| ConfigErrors(vec![x.to_string()]))?;
                Ok(e)
            }
            _ => Err(ConfigErrors(errs)),
        }
    }
}
