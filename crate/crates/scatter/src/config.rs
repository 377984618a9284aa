//! Run configuration: one TOML file with `[potential]`, `[grid]`,
//! `[tolerances]`, `[tasks]` and `[output]` sections.
//!
//! ```toml
//! [potential]
//! kind = "square_well"
//! depth = 4.0
//! width = 1.0
//!
//! [tasks]
//! run = ["levinson"]
//! ```
//!
//! Every field except `potential.kind` and its parameters has a default.

use std::fmt;
use std::path::{Path, PathBuf};

use halfline::waveop::WaveGrid;
use halfline::Potential;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ScatterError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// `v = −depth` on `[0, width]`.
    SquareWell { depth: f64, width: f64 },
    /// `v = c(1+x)^{−ρ}`.
    Power { c: f64, rho: f64 },
    /// `v = c·e^{−μx}`.
    Exponential { c: f64, mu: f64 },
}

impl PotentialSpec {
    pub fn build(&self) -> halfline::Result<Potential> {
        match *self {
            PotentialSpec::Zero => Ok(Potential::zero()),
            PotentialSpec::SquareWell { depth, width } => Potential::square_well(depth, width),
            PotentialSpec::Power { c, rho } => Potential::power(c, rho),
            PotentialSpec::Exponential { c, mu } => Potential::exponential(c, mu),
        }
    }

    /// Decay exponent for power potentials.
    pub fn rho(&self) -> Option<f64> {
        match *self {
            PotentialSpec::Power { rho, .. } => Some(rho),
            _ => None,
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "zero"),
            PotentialSpec::SquareWell { depth, width } => write!(f, "square_well(depth={depth}, width={width})"),
            PotentialSpec::Power { c, rho } => write!(f, "power(c={c}, rho={rho})"),
            PotentialSpec::Exponential { c, mu } => write!(f, "exponential(c={c}, mu={mu})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_max: f64,
    pub h: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Initial samples of the phase grid before adaptive refinement.
    pub phase_points: usize,
    /// `ln k` window of the `Γ₁` edge.
    pub beta_range: [f64; 2],
    pub alpha_range: [f64; 2],
    pub alpha_points: usize,
    /// `log₂` of the Mellin log-grid size.
    pub mellin_log2: u32,
    /// Upper end of the bound-state search on `iℝ₊`.
    pub kappa_max: f64,
    /// Length scale that sets the bound-state bracketing step.
    pub kappa_x_ref: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_max: 40.0,
            h: 0.02,
            k_min: 0.01,
            k_max: 39.0,
            phase_points: 400,
            beta_range: [-9.0, 7.0],
            alpha_range: [-8.0, 8.0],
            alpha_points: 1601,
            mellin_log2: 19,
            kappa_max: 10.0,
            kappa_x_ref: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `||s| − 1|` and `|s − e^{−2iη}|`.
    pub unitarity: f64,
    /// `|w(iκ_j)|` at the located bound states.
    pub bound_state_root: f64,
    /// `|η(∞) − η(0) − π(N + δ)|`.
    pub levinson_classical: f64,
    /// `|Σ wn − N|`.
    pub winding: f64,
    /// `|wn(Γ₂) + ½|` for a zero-energy resonance.
    pub resonance_edge: f64,
    /// Operator checks pass below `disc_factor · ε_disc`.
    pub disc_factor: f64,
    /// Overrides `disc_factor · ε_disc` for `‖W₋*W₋ − I‖` and `‖W₋W₋* − I + P‖`.
    pub isometry: Option<f64>,
    /// Relative change of `‖K‖_HS` under grid refinement.
    pub refinement: f64,
    /// Relative residual of the kernel identities.
    pub identity: f64,
    /// Pointwise residual of the `F₂` decomposition, added to its tail bound.
    pub decomposition: f64,
    /// `U`-factorization residual at `n = 1`.
    pub factorization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitarity: 1e-10,
            bound_state_root: 1e-8,
            levinson_classical: 5e-3 * std::f64::consts::PI,
            winding: 5e-3,
            resonance_edge: 1e-4,
            disc_factor: 3.0,
            isometry: None,
            refinement: 0.1,
            identity: 1e-6,
            decomposition: 1e-6,
            factorization: 1e-8,
        }
    }
}

impl Tolerances {
    fn fields(&self) -> [(&'static str, Option<f64>); 11] {
        [
            ("unitarity", Some(self.unitarity)),
            ("bound_state_root", Some(self.bound_state_root)),
            ("levinson_classical", Some(self.levinson_classical)),
            ("winding", Some(self.winding)),
            ("resonance_edge", Some(self.resonance_edge)),
            ("disc_factor", Some(self.disc_factor)),
            ("isometry", self.isometry),
            ("refinement", Some(self.refinement)),
            ("identity", Some(self.identity)),
            ("decomposition", Some(self.decomposition)),
            ("factorization", Some(self.factorization)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Phase,
    Spectrum,
    Levinson,
    Waveop,
    Kernels,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Phase, Task::Spectrum, Task::Levinson, Task::Waveop, Task::Kernels];

    pub fn name(self) -> &'static str {
        match self {
            Task::Phase => "phase",
            Task::Spectrum => "spectrum",
            Task::Levinson => "levinson",
            Task::Waveop => "waveop",
            Task::Kernels => "kernels",
        }
    }

    /// Tasks whose results this one consumes.
    pub fn prerequisites(self) -> &'static [Task] {
        match self {
            Task::Phase | Task::Spectrum => &[],
            Task::Levinson | Task::Waveop => &[Task::Spectrum],
            Task::Kernels => &[Task::Waveop],
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// Task names, or `"all"`.
    pub run: Vec<String>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig { run: vec!["all".to_string()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Compress CSV artifacts to `.csv.gz`.
    pub gzip: bool,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("scatter-out"), gzip: false, format: Format::Json }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub tasks: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ScatterError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn new(potential: PotentialSpec) -> Self {
        RunConfig {
            potential,
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            tasks: TaskConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Field-level checks; nothing is computed when this fails.
    pub fn validate(&self) -> Result<()> {
        self.potential.build().map_err(|e| ScatterError::config("potential", e.to_string()))?;

        let g = &self.grid;
        WaveGrid::new(g.x_max, g.h, g.k_max).map_err(|e| {
            let field = match e {
                halfline::Error::GridResolution { .. } => "grid.k_max",
                _ => "grid.x_max",
            };
            ScatterError::config(field, e.to_string())
        })?;
        if !(g.k_min > 0.0 && g.k_min < g.k_max) {
            return Err(ScatterError::config("grid.k_min", "must lie in (0, k_max)"));
        }
        if g.phase_points < 16 {
            return Err(ScatterError::config("grid.phase_points", "need at least 16"));
        }
        if !(g.beta_range[0] < g.beta_range[1]) || !g.beta_range.iter().all(|b| b.is_finite()) {
            return Err(ScatterError::config("grid.beta_range", "need finite lo < hi"));
        }
        if !(g.alpha_range[0] < g.alpha_range[1]) || !g.alpha_range.iter().all(|b| b.is_finite()) {
            return Err(ScatterError::config("grid.alpha_range", "need finite lo < hi"));
        }
        if g.alpha_points < 2 {
            return Err(ScatterError::config("grid.alpha_points", "need at least 2"));
        }
        if !(10..=24).contains(&g.mellin_log2) {
            return Err(ScatterError::config("grid.mellin_log2", "must lie in 10..=24"));
        }
        if !(g.kappa_max > 0.0 && g.kappa_max.is_finite()) {
            return Err(ScatterError::config("grid.kappa_max", "must be positive"));
        }
        if !(g.kappa_x_ref > 0.0 && g.kappa_x_ref.is_finite()) {
            return Err(ScatterError::config("grid.kappa_x_ref", "must be positive"));
        }

        for (name, value) in self.tolerances.fields() {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ScatterError::config(&format!("tolerances.{name}"), "must be positive"));
                }
            }
        }

        if self.tasks.run.is_empty() {
            return Err(ScatterError::config("tasks.run", "task list is empty"));
        }
        for t in &self.tasks.run {
            if t != "all" && Task::parse(t).is_none() {
                return Err(ScatterError::config("tasks.run", format!("unknown task `{t}`")));
            }
        }
        Ok(())
    }

    /// Requested tasks, without prerequisites.
    pub fn requested(&self) -> Vec<Task> {
        if self.tasks.run.iter().any(|t| t == "all") {
            return Task::ALL.to_vec();
        }
        let mut out: Vec<Task> = self.tasks.run.iter().filter_map(|t| Task::parse(t)).collect();
        out.sort();
        out.dedup();
        out
    }

    /// SHA-256 of the canonical JSON form, so formatting and key order in
    /// the TOML file do not matter. The output directory is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        let canonical = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn wave_grid(&self) -> halfline::Result<WaveGrid> {
        WaveGrid::new(self.grid.x_max, self.grid.h, self.grid.k_max)
    }
}
