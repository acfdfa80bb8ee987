//! JSON run configuration.

use std::path::{Path, PathBuf};

use hsie::mesh::{self, Mesh2D, MicroCavity, StraightWaveguide};
use hsie::segmentation::Strategy;
use hsie::waveguide::Parity;
use hsie::C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Task {
    Solve1d,
    Scatter,
    Resonance,
    DtnTest,
    Convergence,
}

/// Problem swept by the `convergence` task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Scatter,
    Resonance,
}

/// A complex number, written as a plain number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx(pub C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Real(x) => Cx(C64::new(x, 0.0)),
            Raw::Pair([re, im]) => Cx(C64::new(re, im)),
        })
    }
}

/// One value or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Self::One(n) => vec![*n],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyConfig {
    #[default]
    Strips,
    Bisector,
    ReferencePoint([f64; 2]),
}

impl StrategyConfig {
    pub fn strategy(&self) -> Strategy {
        match self {
            Self::Strips => Strategy::StripsAndTriangles,
            Self::Bisector => Strategy::TrapezoidsNormalBisector,
            Self::ReferencePoint(p) => Strategy::TrapezoidsReferencePoint(*p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroCavityConfig {
    pub max_h: f64,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub cavity: Option<f64>,
    #[serde(default)]
    pub gap: Option<f64>,
    #[serde(default)]
    pub core: Option<f64>,
    #[serde(default)]
    pub n_core: Option<f64>,
    #[serde(default)]
    pub n_clad: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideMeshConfig {
    pub max_h: f64,
    #[serde(default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub n_core: Option<f64>,
    #[serde(default)]
    pub n_clad: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    File(PathBuf),
    Microcavity(MicroCavityConfig),
    StraightWaveguide(WaveguideMeshConfig),
}

impl MeshSource {
    pub fn load(&self) -> hsie::Result<Mesh2D> {
        match self {
            Self::File(p) => mesh::load_mesh(p),
            Self::Microcavity(c) => {
                let d = MicroCavity::default();
                let g = MicroCavity {
                    width: c.width.unwrap_or(d.width),
                    height: c.height.unwrap_or(d.height),
                    cavity: c.cavity.unwrap_or(d.cavity),
                    gap: c.gap.unwrap_or(d.gap),
                    core: c.core.unwrap_or(d.core),
                    n_core: c.n_core.unwrap_or(d.n_core),
                    n_clad: c.n_clad.unwrap_or(d.n_clad),
                };
                mesh::microcavity(&g, c.max_h)
            }
            Self::StraightWaveguide(c) => {
                let d = StraightWaveguide::default();
                let g = StraightWaveguide {
                    length: c.length.unwrap_or(d.length),
                    height: c.height.unwrap_or(d.height),
                    half_width: c.half_width.unwrap_or(d.half_width),
                    n_core: c.n_core.unwrap_or(d.n_core),
                    n_clad: c.n_clad.unwrap_or(d.n_clad),
                };
                mesh::straight_waveguide(&g, c.max_h)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityConfig {
    Even,
    Odd,
}

impl From<ParityConfig> for Parity {
    fn from(p: ParityConfig) -> Self {
        match p {
            ParityConfig::Even => Parity::Even,
            ParityConfig::Odd => Parity::Odd,
        }
    }
}

fn even() -> ParityConfig {
    ParityConfig::Even
}

fn left() -> Vec<u32> {
    vec![mesh::tags::LEFT]
}

fn default_corner_tol() -> f64 {
    1e-6
}

fn default_half_width() -> f64 {
    0.0365
}

fn default_n_core() -> f64 {
    3.4
}

fn default_n_clad() -> f64 {
    1.45
}

/// Slab waveguide mode injected through the edges with the given tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncomingConfig {
    #[serde(default = "even")]
    pub parity: ParityConfig,
    #[serde(default)]
    pub branch: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_n_core")]
    pub n_core: f64,
    #[serde(default = "default_n_clad")]
    pub n_clad: f64,
    #[serde(default)]
    pub center_y: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "left")]
    pub edge_tags: Vec<u32>,
    /// Incoming values up to this fraction of the maximum may sit on DOFs
    /// shared with segments that get no incoming data.
    #[serde(default = "default_corner_tol")]
    pub corner_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The injected mode itself; exact when nothing scatters.
    Incoming,
    /// The solution at the largest N of the sweep.
    Finest,
}

fn default_one() -> f64 {
    1.0
}

fn default_cells() -> usize {
    20
}

/// Error measure of the 1D sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric1D {
    /// Relative error of `u(a)`.
    U0,
    /// Relative Hardy norm (coefficient l2, tail included) of the error in
    /// the transformed exterior function.
    #[default]
    Hardy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneDConfig {
    #[serde(default = "default_one")]
    pub a: f64,
    #[serde(default = "one_cx")]
    pub g: Cx,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default)]
    pub metric: Metric1D,
}

fn one_cx() -> Cx {
    Cx(C64::new(1.0, 0.0))
}

fn default_mu_max() -> f64 {
    60.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtnConfig {
    #[serde(default = "default_one")]
    pub edge_length: f64,
    /// Transverse eigenvalues above this are not compared.
    #[serde(default = "default_mu_max")]
    pub mu_max: f64,
}

fn default_count() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            count: default_count(),
            tol: default_tol(),
        }
    }
}

fn default_order() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub mesh: Option<MeshSource>,
    #[serde(default)]
    pub strategy: StrategyConfig,
    /// Boundary tags that receive exterior elements; all when absent.
    #[serde(default)]
    pub exterior_tags: Option<Vec<u32>>,
    #[serde(default = "default_order")]
    pub fe_order: usize,
    #[serde(default)]
    pub refinements: usize,
    #[serde(default)]
    pub kappa: Option<Cx>,
    /// Target value of kappa (not kappa^2) for the eigensolver.
    #[serde(default)]
    pub shift: Option<Cx>,
    pub kappa0: Cx,
    pub hardy_modes: OneOrMany,
    #[serde(default)]
    pub incoming: Option<IncomingConfig>,
    #[serde(default)]
    pub reference: Option<Reference>,
    #[serde(default)]
    pub one_d: Option<OneDConfig>,
    #[serde(default)]
    pub dtn: Option<DtnConfig>,
    #[serde(default)]
    pub eigen: EigenConfig,
    /// Length unit in meters; enables the kappa to omega conversion.
    #[serde(default)]
    pub length_unit_m: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(MeshSource::File(p)) = &mut cfg.mesh {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(o) = &mut cfg.output_dir {
            if o.is_relative() {
                *o = base.join(&*o);
            }
        }
        Ok(cfg)
    }

    /// Fills defaults that depend on the task and checks required fields.
    pub fn resolve(mut self, task: Option<Task>) -> Result<Self, ConfigError> {
        let task = match (task, self.task) {
            (Some(a), Some(b)) if a != b => {
                return invalid(format!("task {a:?} on the command line but {b:?} in the config"))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return invalid("no task given"),
        };
        self.task = Some(task);
        let ns = self.hardy_modes.to_vec();
        if ns.is_empty() {
            return invalid("hardy_modes is empty");
        }
        if ns.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("hardy_modes must be strictly increasing");
        }
        self.hardy_modes = OneOrMany::Many(ns.clone());
        if self.kappa0.0.re.is_nan() || self.kappa0.0.re <= 0.0 {
            return invalid("kappa0 must have positive real part");
        }
        if self.fe_order == 0 {
            return invalid("fe_order must be at least 1");
        }
        let problem = match task {
            Task::Convergence => {
                let Some(p) = self.problem else {
                    return invalid("convergence needs `problem` (scatter or resonance)");
                };
                if ns.len() < 2 {
                    return invalid("convergence needs at least two hardy_modes values");
                }
                Some(p)
            }
            _ if self.problem.is_some() => return invalid("`problem` is only used by the convergence task"),
            Task::Scatter => Some(Problem::Scatter),
            Task::Resonance => Some(Problem::Resonance),
            _ => None,
        };
        match task {
            Task::Solve1d => {
                self.require_kappa()?;
                self.one_d.get_or_insert(OneDConfig {
                    a: 1.0,
                    g: one_cx(),
                    cells: default_cells(),
                    metric: Metric1D::default(),
                });
            }
            Task::DtnTest => {
                self.require_kappa()?;
                self.dtn.get_or_insert(DtnConfig {
                    edge_length: 1.0,
                    mu_max: default_mu_max(),
                });
            }
            _ => {}
        }
        match problem {
            Some(Problem::Scatter) => {
                self.require_kappa()?;
                self.require_mesh()?;
                if self.incoming.is_none() {
                    return invalid("scattering needs `incoming`");
                }
                self.reference.get_or_insert(Reference::Finest);
            }
            Some(Problem::Resonance) => {
                self.require_mesh()?;
                if self.shift.is_none() {
                    return invalid("resonance needs `shift`");
                }
                if self.eigen.count == 0 {
                    return invalid("eigen.count must be positive");
                }
                if self.reference == Some(Reference::Incoming) {
                    return invalid("resonance errors are always measured against the finest N");
                }
                self.reference = Some(Reference::Finest);
            }
            None => {}
        }
        if let Some(u) = self.length_unit_m {
            if u.is_nan() || u <= 0.0 {
                return invalid("length_unit_m must be positive");
            }
        }
        Ok(self)
    }

    fn require_kappa(&self) -> Result<(), ConfigError> {
        if self.kappa.is_none() {
            return invalid("this task needs `kappa`");
        }
        Ok(())
    }

    fn require_mesh(&self) -> Result<(), ConfigError> {
        if self.mesh.is_none() {
            return invalid("this task needs `mesh`");
        }
        Ok(())
    }

    pub fn task(&self) -> Task {
        self.task.expect("resolved config")
    }

    pub fn problem(&self) -> Option<Problem> {
        match self.task() {
            Task::Convergence => self.problem,
            Task::Scatter => Some(Problem::Scatter),
            Task::Resonance => Some(Problem::Resonance),
            _ => None,
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        self.hardy_modes.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> RunConfig {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn complex_forms() {
        let c = parse(r#"{"kappa0": [5, 3], "kappa": 2, "hardy_modes": 4}"#);
        assert_eq!(c.kappa0.0, C64::new(5.0, 3.0));
        assert_eq!(c.kappa.unwrap().0, C64::new(2.0, 0.0));
        assert_eq!(c.hardy_modes.to_vec(), vec![4]);
    }

    #[test]
    fn sweep_must_increase() {
        let c = parse(r#"{"kappa0": 2, "kappa": 2, "hardy_modes": [2, 2]}"#);
        assert!(matches!(c.resolve(Some(Task::Solve1d)), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn task_specific_fields() {
        let c = parse(r#"{"kappa0": 2, "hardy_modes": [2]}"#);
        assert!(c.clone().resolve(Some(Task::Solve1d)).is_err());
        assert!(c.clone().resolve(Some(Task::Resonance)).is_err());
        assert!(c.resolve(None).is_err());
        let c = parse(r#"{"task": "convergence", "kappa0": 2, "kappa": 1, "hardy_modes": [2, 3]}"#);
        assert!(c.resolve(None).is_err());
        let c = parse(r#"{"task": "scatter", "kappa0": 2, "kappa": 1, "hardy_modes": [2, 3]}"#);
        assert!(c.clone().resolve(Some(Task::Resonance)).is_err());
        assert!(c.resolve(None).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"kappa0": 2, "hardy_modes": 1, "bogus": 0}"#).is_err());
    }

    #[test]
    fn mesh_and_strategy_forms() {
        let c = parse(
            r#"{"kappa0": 2, "hardy_modes": 1, "mesh": {"microcavity": {"max_h": 0.5}},
                "strategy": {"reference_point": [0.1, 0.2]}}"#,
        );
        assert!(matches!(c.mesh, Some(MeshSource::Microcavity(_))));
        assert_eq!(c.strategy.strategy(), Strategy::TrapezoidsReferencePoint([0.1, 0.2]));
        let c = parse(r#"{"kappa0": 2, "hardy_modes": 1, "strategy": "bisector"}"#);
        assert_eq!(c.strategy, StrategyConfig::Bisector);
    }

    #[test]
    fn resolved_round_trips() {
        let c = parse(
            r#"{"task": "resonance", "kappa0": [5, 3], "hardy_modes": [2, 4], "shift": [4, -0.05],
                "mesh": {"file": "m.mesh"}, "length_unit_m": 1e-6}"#,
        )
        .resolve(None)
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
