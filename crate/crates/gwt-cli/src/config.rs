//! Declarative experiment description, loaded from a TOML file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub eta_grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<GridConfig>,
    pub scheme: SchemeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    pub epsilon: f64,
    pub t_final: f64,
    /// Seed for randomized self-checks; simulation paths are deterministic.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum InitialConfig {
    Gaussian {
        q0: Vec<f64>,
        p0: Vec<f64>,
        /// Row-major real and imaginary parts of the symmetric matrix C.
        c_re: Vec<f64>,
        c_im: Vec<f64>,
        /// Real phase gamma0 (the real part of delta).
        #[serde(default)]
        gamma0: f64,
        /// Absorb the L2-normalizing prefactor into Im delta.
        #[serde(default = "default_true")]
        normalize: bool,
        /// Explicit Im delta; overrides `normalize` when set.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im_delta: Option<f64>,
    },
    General {
        /// Named built-in: currently `quartic_chirp`
        /// (f = a, g(y) = i (y^2 + y^4) + cos y - 1).
        builtin: String,
        q0: Vec<f64>,
        p0: Vec<f64>,
        #[serde(default)]
        delta_re: f64,
        #[serde(default)]
        delta_im: f64,
        /// Envelope amplitude; when omitted it is chosen so the initial wave
        /// function has unit L2 norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Per-axis [a, b) bounds.
    pub bounds: Vec<[f64; 2]>,
    /// Per-axis point counts.
    pub n: Vec<usize>,
}

impl GridConfig {
    pub fn build(&self) -> Result<gwt_core::grid::UniformGrid> {
        let bounds: Vec<(f64, f64)> = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        gwt_core::grid::make_grid(&bounds, &self.n).context("invalid grid section")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    #[serde(default)]
    pub composition: CompositionKind,
    pub dt: f64,
    #[serde(default)]
    pub quadrature: QuadratureKind,
    #[serde(default)]
    pub characteristic: CharKind,
    #[serde(default)]
    pub strang_order: StrangOrderKind,
    /// Packet ODE step is dt / divisor.
    #[serde(default = "default_packet_divisor")]
    pub packet_dt_divisor: f64,
    /// Abort tolerance on |B^T B - alpha_I|_F during packet integration.
    #[serde(default = "default_tol_b")]
    pub packet_tol_b: f64,
    /// Keep the Taylor 1/2 on the quadratic term of the A expansion.
    #[serde(default = "default_true")]
    pub aq_half: bool,
}

fn default_packet_divisor() -> f64 {
    40.0
}

fn default_tol_b() -> f64 {
    // the residual is itself O(packet_dt^4); coarse packet steps need more
    // slack than the 1e-10 the diagnostics aim for at dt = 1e-3
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    SlTs2,
    #[default]
    SlTs3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CompositionKind {
    Lie,
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    Midpoint,
    #[default]
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CharKind {
    #[default]
    Heun,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StrangOrderKind {
    #[default]
    KineticOuter,
    PotentialOuter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Time steps for converge-time.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dts: Vec<f64>,
    /// Per-axis point counts for converge-space (applied to every axis).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_ns: Vec<usize>,
    /// Optional eps sweep; defaults to the experiment epsilon alone.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    /// Point count (per axis) of the self-reference run in converge-space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_eta_n: Option<usize>,
    /// Reference flavor for converge-time: direct SL-TS benchmark or a fine
    /// self-run of the transformed solver.
    #[serde(default)]
    pub reference_kind: ReferenceKind,
    /// Time step of the fine self-reference run (gwt reference kind).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    #[default]
    Slts,
    Gwt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub write_w_snapshot: bool,
    #[serde(default = "default_true")]
    pub write_psi_snapshot: bool,
    #[serde(default = "default_true")]
    pub write_diagnostics: bool,
    #[serde(default)]
    pub write_observables: bool,
    #[serde(default)]
    pub write_trajectory: bool,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            write_w_snapshot: true,
            write_psi_snapshot: true,
            write_diagnostics: true,
            write_observables: false,
            write_trajectory: false,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if !(e.epsilon > 0.0 && e.epsilon <= 1.0) {
            bail!("experiment.epsilon must lie in (0, 1], got {}", e.epsilon);
        }
        if e.t_final < 0.0 {
            bail!("experiment.t_final must be nonnegative, got {}", e.t_final);
        }
        if self.scheme.dt <= 0.0 {
            bail!("scheme.dt must be positive, got {}", self.scheme.dt);
        }
        if self.scheme.packet_dt_divisor <= 0.0 {
            bail!(
                "scheme.packet_dt_divisor must be positive, got {}",
                self.scheme.packet_dt_divisor
            );
        }
        if self.eta_grid.bounds.len() != self.eta_grid.n.len() {
            bail!("eta_grid.bounds and eta_grid.n must have matching lengths");
        }
        self.eta_grid.build().context("eta_grid")?;
        if let Some(xg) = &self.x_grid {
            xg.build().context("x_grid")?;
            if xg.bounds.len() != self.eta_grid.bounds.len() {
                bail!("x_grid dimension differs from eta_grid dimension");
            }
        }
        let dim = self.eta_grid.bounds.len();
        match &self.initial {
            InitialConfig::Gaussian {
                q0, p0, c_re, c_im, ..
            } => {
                if q0.len() != dim || p0.len() != dim {
                    bail!("initial.q0/p0 must have {dim} components");
                }
                if c_re.len() != dim * dim || c_im.len() != dim * dim {
                    bail!("initial.c_re/c_im must be {dim}x{dim} row-major");
                }
            }
            InitialConfig::General {
                builtin, q0, p0, ..
            } => {
                if q0.len() != dim || p0.len() != dim {
                    bail!("initial.q0/p0 must have {dim} components");
                }
                if builtin != "quartic_chirp" {
                    bail!("unknown general initial-data builtin '{builtin}'");
                }
                if dim != 1 {
                    bail!("builtin '{builtin}' is one-dimensional");
                }
            }
        }
        if let Some(r) = &self.reference {
            if r.dt <= 0.0 {
                bail!("reference.dt must be positive, got {}", r.dt);
            }
        }
        if let Some(s) = &self.sweep {
            if s.dts.iter().any(|&d| d <= 0.0) {
                bail!("sweep.dts entries must be positive");
            }
            if let Some(&bad) = s.epsilons.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
                bail!("sweep.epsilons entries must lie in (0, 1], got {bad}");
            }
        }
        // model name resolves (with the configured parameters)
        gwt_core::potentials::by_name(&self.model.name, &self.model.params)
            .map_err(|err| anyhow::anyhow!("model section: {err}"))?;
        Ok(())
    }
}
